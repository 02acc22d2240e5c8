//! A passive eavesdropper on one path.
//!
//! The generator matrix is public, so the rows seen on a tapped path give
//! `c` linear equations in the `k` unknown symbols of each data column. When
//! `c < k` every column lies in an affine subspace of dimension `k - c`, with
//! `2^(q (k - c))` points. Known plaintext symbols filter those points; the
//! work factor is what the secrecy bound protects.

use crate::analysis;
use crate::error::AttackError;
use crate::galois::{Field, Symbol};
use crate::rs_code::{self, CodeParams, GeneratorMatrix, Rows};
use crate::transport::{CptConfig, StripeFile};

/// Default cap on brute-force work, in bits.
pub const DEFAULT_BUDGET_BITS: u64 = 24;

/// Work, in bits, to enumerate the packets missing from an intercept.
pub fn search_space_bits(k: usize, intercepted: usize, q: u8) -> u64 {
    k.saturating_sub(intercepted) as u64 * q as u64
}

/// Coded rows captured on a single path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Intercept {
    pub params: CodeParams,
    /// 1-based coded row indices, parallel to `rows`.
    pub row_indices: Vec<usize>,
    pub rows: Rows,
}

impl Intercept {
    pub fn new(
        params: CodeParams,
        row_indices: Vec<usize>,
        rows: Rows,
    ) -> Result<Self, AttackError> {
        params.validate()?;
        if row_indices.len() != rows.len() {
            return Err(AttackError::BadIntercept(format!(
                "{} indices for {} rows",
                row_indices.len(),
                rows.len()
            )));
        }
        if rows.is_empty() {
            return Err(AttackError::BadIntercept("no rows captured".into()));
        }
        let mut seen = vec![false; params.n + 1];
        for &i in &row_indices {
            if i == 0 || i > params.n {
                return Err(AttackError::BadIntercept(format!(
                    "row {i} outside 1..={}",
                    params.n
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(AttackError::BadIntercept(format!("row {i} captured twice")));
            }
        }
        let len = rows[0].len();
        if len == 0 || rows.iter().any(|r| r.len() != len) {
            return Err(AttackError::BadIntercept(
                "rows must share one nonzero length".into(),
            ));
        }
        Ok(Self {
            params,
            row_indices,
            rows,
        })
    }

    /// Everything one stripe file carries.
    pub fn from_stripe(stripe: &StripeFile) -> Result<Self, AttackError> {
        let params = CodeParams::new(stripe.n as usize, stripe.k as usize, stripe.q)?;
        Self::new(
            params,
            stripe.row_indices.iter().map(|&r| r as usize).collect(),
            stripe.rows.clone(),
        )
    }

    pub fn count(&self) -> usize {
        self.rows.len()
    }

    pub fn packet_len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn search_space_bits(&self) -> u64 {
        search_space_bits(self.params.k, self.count(), self.params.field.q)
    }
}

/// A data symbol the attacker knows or guesses: `X[row][col] = value`,
/// 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KnownSymbol {
    pub row: usize,
    pub col: usize,
    pub value: Symbol,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FormatPredicate {
    pub known: Vec<KnownSymbol>,
}

impl FormatPredicate {
    pub fn new(known: Vec<KnownSymbol>) -> Self {
        Self { known }
    }

    /// Sorted, distinct columns the predicate constrains.
    pub fn columns(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = self.known.iter().map(|c| c.col).collect();
        cols.sort_unstable();
        cols.dedup();
        cols
    }

    fn accepts(&self, col: usize, candidate: &[Symbol]) -> bool {
        self.known
            .iter()
            .filter(|c| c.col == col)
            .all(|c| candidate[c.row - 1] == c.value)
    }

    fn validate(&self, k: usize, len: usize, field: &Field) -> Result<(), AttackError> {
        if self.known.is_empty() {
            return Err(AttackError::BadPredicate("no known symbols".into()));
        }
        for c in &self.known {
            if c.row == 0 || c.row > k || c.col == 0 || c.col > len || !field.contains(c.value) {
                return Err(AttackError::BadPredicate(format!(
                    "({}, {}) = {} outside a {k} x {len} data matrix over GF(2^{})",
                    c.row,
                    c.col,
                    c.value,
                    field.q()
                )));
            }
        }
        Ok(())
    }
}

/// Solutions of the intercepted system for one data column: a particular
/// solution plus a basis of the null space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coset {
    pub particular: Vec<Symbol>,
    pub basis: Vec<Vec<Symbol>>,
}

impl Coset {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    /// Calls `visit` on every point `particular + sum t_j basis_j`.
    pub fn for_each(&self, field: &Field, mut visit: impl FnMut(&[Symbol])) {
        let order = field.order();
        let dim = self.basis.len();
        let mut coeffs = vec![0usize; dim];
        let mut point = vec![0; self.particular.len()];
        loop {
            point.copy_from_slice(&self.particular);
            for (&t, b) in coeffs.iter().zip(&self.basis) {
                field.mul_add_slice(t as Symbol, b, &mut point);
            }
            visit(&point);

            let mut j = 0;
            loop {
                if j == dim {
                    return;
                }
                coeffs[j] += 1;
                if coeffs[j] < order {
                    break;
                }
                coeffs[j] = 0;
                j += 1;
            }
        }
    }
}

/// Reduced row echelon form of `[a | b]`; returns the pivot columns of `a`.
fn rref(field: &Field, a: &mut Rows, b: &mut Rows) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, p);
        b.swap(r, p);
        let inv = field.inv(a[r][c]).expect("nonzero pivot");
        field.scale_slice(inv, &mut a[r]);
        field.scale_slice(inv, &mut b[r]);
        let (pa, pb) = (a[r].clone(), b[r].clone());
        for i in (0..rows).filter(|&i| i != r) {
            let f = a[i][c];
            if f != 0 {
                field.mul_add_slice(f, &pa, &mut a[i]);
                field.mul_add_slice(f, &pb, &mut b[i]);
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// The solution coset for every data column at once, in column order.
pub fn column_cosets(
    intercept: &Intercept,
    generator: &GeneratorMatrix,
) -> Result<Vec<Coset>, AttackError> {
    let field = generator.field();
    let k = intercept.params.k;
    let len = intercept.packet_len();
    let mut a = generator.submatrix(&intercept.row_indices);
    let mut b = intercept.rows.clone();
    let pivots = rref(field, &mut a, &mut b);
    // Rows past the rank must reduce to 0 = 0, otherwise the intercept is
    // inconsistent with the public generator.
    if b[pivots.len()..].iter().flatten().any(|&s| s != 0) {
        return Err(AttackError::BadIntercept(
            "rows are inconsistent with the generator".into(),
        ));
    }
    let free: Vec<usize> = (0..k).filter(|c| !pivots.contains(c)).collect();
    let basis: Vec<Vec<Symbol>> = free
        .iter()
        .map(|&f| {
            let mut v = vec![0; k];
            v[f] = 1;
            // Characteristic 2: -a = a.
            for (i, &p) in pivots.iter().enumerate() {
                v[p] = a[i][f];
            }
            v
        })
        .collect();
    Ok((0..len)
        .map(|col| {
            let mut particular = vec![0; k];
            for (i, &p) in pivots.iter().enumerate() {
                particular[p] = b[i][col];
            }
            Coset {
                particular,
                basis: basis.clone(),
            }
        })
        .collect())
}

/// Every candidate for data column `col` (1-based) consistent with the
/// intercept, unfiltered.
pub fn enumerate_column(
    intercept: &Intercept,
    col: usize,
) -> Result<Vec<Vec<Symbol>>, AttackError> {
    let g = GeneratorMatrix::build(intercept.params)?;
    if col == 0 || col > intercept.packet_len() {
        return Err(AttackError::BadPredicate(format!(
            "column {col} out of range"
        )));
    }
    let coset = column_cosets(intercept, &g)?.swap_remove(col - 1);
    let mut out = Vec::new();
    coset.for_each(g.field(), |x| out.push(x.to_vec()));
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnCandidates {
    /// 1-based data column.
    pub col: usize,
    /// Surviving values of `X[.][col]`, each of length `k`.
    pub candidates: Vec<Vec<Symbol>>,
    /// Points enumerated for this column.
    pub tried: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BruteForce {
    /// The search exceeds the budget; nothing was enumerated.
    Infeasible { bits_needed: u64 },
    Candidates {
        bits: u64,
        columns: Vec<ColumnCandidates>,
    },
}

/// Enumerates the unknown part of every column the predicate touches and
/// keeps the values that match it.
pub fn brute_force(
    intercept: &Intercept,
    predicate: &FormatPredicate,
    budget_bits: u64,
) -> Result<BruteForce, AttackError> {
    let g = GeneratorMatrix::build(intercept.params)?;
    let field = g.field();
    let k = intercept.params.k;
    predicate.validate(k, intercept.packet_len(), field)?;

    let bits = intercept.search_space_bits();
    if bits > budget_bits {
        return Ok(BruteForce::Infeasible { bits_needed: bits });
    }

    let cosets = if intercept.count() >= k {
        // Fully determined: the plain decoder gives the single solution.
        let received: Vec<(usize, &[Symbol])> = intercept
            .row_indices
            .iter()
            .copied()
            .zip(intercept.rows.iter().map(Vec::as_slice))
            .collect();
        let x = rs_code::decode(&g, &received)?;
        (0..intercept.packet_len())
            .map(|c| Coset {
                particular: x.rows().iter().map(|row| row[c]).collect(),
                basis: Vec::new(),
            })
            .collect()
    } else {
        column_cosets(intercept, &g)?
    };

    let mut columns = Vec::new();
    for col in predicate.columns() {
        let coset = &cosets[col - 1];
        let mut candidates = Vec::new();
        let mut tried = 0u64;
        coset.for_each(field, |x| {
            tried += 1;
            if predicate.accepts(col, x) {
                candidates.push(x.to_vec());
            }
        });
        if candidates.is_empty() {
            return Err(AttackError::PredicateUnsatisfiable);
        }
        columns.push(ColumnCandidates {
            col,
            candidates,
            tried,
        });
    }
    Ok(BruteForce::Candidates { bits, columns })
}

/// Secrecy of a configuration against a tap on its largest stripe.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SecrecyMargin {
    /// `(k - m') q`, or `None` when one stripe already holds `k` packets.
    pub bits: Option<u64>,
    /// The brute force needs at least `security_bits`.
    pub meets_strong: bool,
    /// A single path carries at most `k` packets.
    pub meets_basic: bool,
}

pub fn secrecy_margin(config: &CptConfig, security_bits: u32) -> SecrecyMargin {
    let bits = analysis::secrecy_bits(config.k(), config.m_prime_max(), config.q()).ok();
    SecrecyMargin {
        bits,
        meets_strong: bits.is_some_and(|b| b >= security_bits as u64),
        meets_basic: bits.is_some(),
    }
}
