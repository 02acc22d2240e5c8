//! Non-systematic Reed-Solomon erasure code with a Vandermonde generator.
//!
//! Row `i` of the `n x k` generator is `[1, a_i, a_i^2, ..., a_i^(k-1)]` with
//! evaluation points `a_i = g^(i-1)`. Every coded packet is a combination of
//! all `k` data packets, and any `k` rows of the generator form an invertible
//! matrix, so any `k` coded packets recover the data.
//!
//! Row indices in the public API are 1-based, matching the stripe files.

use crate::error::CodeError;
use crate::galois::{Field, FieldSpec, Symbol};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    pub field: FieldSpec,
}

impl CodeParams {
    /// Parameters over the default field for `q`.
    pub fn new(n: usize, k: usize, q: u8) -> Result<Self, CodeError> {
        let params = Self {
            n,
            k,
            field: FieldSpec::standard(q)?,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), CodeError> {
        let max_n = self.field.order() - 1;
        if self.k == 0 {
            return Err(CodeError::ParamsInvalid("k must be at least 1".into()));
        }
        if self.k >= self.n {
            return Err(CodeError::ParamsInvalid(format!(
                "need k < n, got k={} n={}",
                self.k, self.n
            )));
        }
        if self.n > max_n {
            return Err(CodeError::ParamsInvalid(format!(
                "n={} exceeds 2^{} - 1 = {max_n} distinct nonzero points",
                self.n, self.field.q
            )));
        }
        Ok(())
    }

    /// Redundant packets, `n - k`.
    pub fn r(&self) -> usize {
        self.n - self.k
    }
}

/// Dense row-major matrix of field symbols.
pub type Rows = Vec<Vec<Symbol>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorMatrix {
    field: Field,
    params: CodeParams,
    points: Vec<Symbol>,
    rows: Rows,
}

impl GeneratorMatrix {
    pub fn build(params: CodeParams) -> Result<Self, CodeError> {
        params.validate()?;
        let field = Field::new(params.field)?;
        let points: Vec<Symbol> = (0..params.n).map(|i| field.exp(i)).collect();
        let rows = points
            .iter()
            .map(|&a| (0..params.k).map(|t| field.pow(a, t as u64)).collect())
            .collect();
        Ok(Self {
            field,
            params,
            points,
            rows,
        })
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn params(&self) -> &CodeParams {
        &self.params
    }

    /// Evaluation points `a_1..a_n`.
    pub fn points(&self) -> &[Symbol] {
        &self.points
    }

    pub fn rows(&self) -> &Rows {
        &self.rows
    }

    /// Row `index` (1-based).
    pub fn row(&self, index: usize) -> &[Symbol] {
        &self.rows[index - 1]
    }

    /// The square submatrix made of the given 1-based rows.
    pub fn submatrix(&self, indices: &[usize]) -> Rows {
        indices.iter().map(|&i| self.row(i).to_vec()).collect()
    }
}

/// `k` data packets of `L` symbols each.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PacketSet {
    rows: Rows,
}

impl PacketSet {
    pub fn new(rows: Rows) -> Result<Self, CodeError> {
        check_rectangular(&rows)?;
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &Rows {
        &self.rows
    }

    pub fn into_rows(self) -> Rows {
        self.rows
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    /// Packet length `L` in symbols.
    pub fn len(&self) -> usize {
        self.rows[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `n` coded packets of `L` symbols each; row `i` is coded packet `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedSet {
    rows: Rows,
}

impl CodedSet {
    pub fn rows(&self) -> &Rows {
        &self.rows
    }

    pub fn into_rows(self) -> Rows {
        self.rows
    }

    /// Coded packet `index` (1-based).
    pub fn row(&self, index: usize) -> &[Symbol] {
        &self.rows[index - 1]
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// `(index, row)` pairs for every coded packet.
    pub fn indexed(&self) -> Vec<(usize, &[Symbol])> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| (i + 1, r.as_slice()))
            .collect()
    }
}

fn check_rectangular(rows: &Rows) -> Result<(), CodeError> {
    let Some(first) = rows.first() else {
        return Err(CodeError::ShapeMismatch("no rows".into()));
    };
    if first.is_empty() {
        return Err(CodeError::ShapeMismatch(
            "packet length must be >= 1".into(),
        ));
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != first.len()) {
        return Err(CodeError::ShapeMismatch(format!(
            "row {} has length {}, expected {}",
            bad + 1,
            rows[bad].len(),
            first.len()
        )));
    }
    Ok(())
}

/// `Y = G x X`.
pub fn encode(g: &GeneratorMatrix, x: &PacketSet) -> Result<CodedSet, CodeError> {
    let k = g.params.k;
    if x.k() != k {
        return Err(CodeError::ShapeMismatch(format!(
            "generator has {k} columns but {} data packets were given",
            x.k()
        )));
    }
    let field = &g.field;
    for (i, row) in x.rows.iter().enumerate() {
        if let Some(&s) = row.iter().find(|&&s| !field.contains(s)) {
            return Err(CodeError::ShapeMismatch(format!(
                "data packet {} holds symbol {s} outside GF(2^{})",
                i + 1,
                field.q()
            )));
        }
    }
    let len = x.len();
    let rows = g
        .rows
        .iter()
        .map(|grow| {
            let mut out = vec![0; len];
            for (&c, xrow) in grow.iter().zip(&x.rows) {
                field.mul_add_slice(c, xrow, &mut out);
            }
            out
        })
        .collect();
    Ok(CodedSet { rows })
}

/// Solves `A * X = B` in place by Gauss-Jordan elimination, leaving `X` in
/// `b`. `a` must be square with as many rows as `b`.
pub fn solve_in_place(field: &Field, a: &mut Rows, b: &mut Rows) -> Result<(), CodeError> {
    let size = a.len();
    debug_assert_eq!(b.len(), size);
    for col in 0..size {
        let pivot = (col..size)
            .find(|&r| a[r][col] != 0)
            .ok_or(CodeError::SingularSubmatrix)?;
        a.swap(col, pivot);
        b.swap(col, pivot);

        let inv = field.inv(a[col][col])?;
        field.scale_slice(inv, &mut a[col][col..]);
        field.scale_slice(inv, &mut b[col]);

        let (a_head, a_rest) = a.split_at_mut(col);
        let (a_pivot, a_tail) = a_rest.split_first_mut().expect("pivot row");
        let (b_head, b_rest) = b.split_at_mut(col);
        let (b_pivot, b_tail) = b_rest.split_first_mut().expect("pivot row");
        for (arow, brow) in a_head
            .iter_mut()
            .chain(a_tail.iter_mut())
            .zip(b_head.iter_mut().chain(b_tail.iter_mut()))
        {
            let factor = arow[col];
            if factor != 0 {
                field.mul_add_slice(factor, &a_pivot[col..], &mut arow[col..]);
                field.mul_add_slice(factor, b_pivot, brow);
            }
        }
    }
    Ok(())
}

/// Inverse of a square matrix, or `SingularSubmatrix`.
pub fn invert(field: &Field, matrix: &Rows) -> Result<Rows, CodeError> {
    let size = matrix.len();
    let mut a = matrix.clone();
    let mut b: Rows = (0..size)
        .map(|i| {
            let mut row = vec![0; size];
            row[i] = 1;
            row
        })
        .collect();
    solve_in_place(field, &mut a, &mut b)?;
    Ok(b)
}

/// Recovers the data packets from any `k` or more coded packets.
///
/// `received` holds `(row_index, coded_row)` pairs with distinct 1-based
/// indices. The `k` lowest indices are used; extra rows are ignored.
pub fn decode(
    g: &GeneratorMatrix,
    received: &[(usize, &[Symbol])],
) -> Result<PacketSet, CodeError> {
    let CodeParams { n, k, .. } = g.params;
    let mut seen = vec![false; n + 1];
    for &(idx, _) in received {
        if idx == 0 || idx > n {
            return Err(CodeError::RowOutOfRange { index: idx, n });
        }
        if std::mem::replace(&mut seen[idx], true) {
            return Err(CodeError::DuplicateRow(idx));
        }
    }
    if received.len() < k {
        return Err(CodeError::InsufficientPackets {
            received: received.len(),
            needed: k,
        });
    }

    let mut chosen: Vec<&(usize, &[Symbol])> = received.iter().collect();
    chosen.sort_by_key(|(idx, _)| *idx);
    chosen.truncate(k);

    let len = chosen[0].1.len();
    if len == 0 || chosen.iter().any(|(_, r)| r.len() != len) {
        return Err(CodeError::ShapeMismatch(
            "received rows must share one nonzero length".into(),
        ));
    }

    let mut a: Rows = chosen.iter().map(|(idx, _)| g.row(*idx).to_vec()).collect();
    let mut b: Rows = chosen.iter().map(|(_, r)| r.to_vec()).collect();
    solve_in_place(&g.field, &mut a, &mut b)?;
    PacketSet::new(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_packets(rng: &mut ChaCha8Rng, k: usize, len: usize, q: u8) -> PacketSet {
        let rows = (0..k)
            .map(|_| {
                (0..len)
                    .map(|_| rng.gen_range(0..(1u16 << q)) as u8)
                    .collect()
            })
            .collect();
        PacketSet::new(rows).unwrap()
    }

    #[test]
    fn generator_gf4_example() {
        let g = GeneratorMatrix::build(CodeParams::new(3, 2, 2).unwrap()).unwrap();
        assert_eq!(g.points(), &[1, 2, 3]);
        assert_eq!(g.rows(), &vec![vec![1, 1], vec![1, 2], vec![1, 3]]);
    }

    #[test]
    fn full_length_gf256_points_are_distinct() {
        let g = GeneratorMatrix::build(CodeParams::new(255, 204, 8).unwrap()).unwrap();
        let mut pts = g.points().to_vec();
        assert!(pts.iter().all(|&p| p != 0));
        pts.sort_unstable();
        pts.dedup();
        assert_eq!(pts.len(), 255);
    }

    #[test]
    fn too_many_points_is_rejected() {
        assert!(matches!(
            CodeParams::new(4, 2, 2),
            Err(CodeError::ParamsInvalid(_))
        ));
        assert!(CodeParams::new(3, 3, 2).is_err());
        assert!(CodeParams::new(3, 0, 2).is_err());
    }

    #[test]
    fn encode_zero_and_identity() {
        let g = GeneratorMatrix::build(CodeParams::new(3, 2, 2).unwrap()).unwrap();
        let zero = PacketSet::new(vec![vec![0; 5]; 2]).unwrap();
        assert!(encode(&g, &zero)
            .unwrap()
            .rows()
            .iter()
            .flatten()
            .all(|&s| s == 0));

        let ident = PacketSet::new(vec![vec![1, 0], vec![0, 1]]).unwrap();
        assert_eq!(encode(&g, &ident).unwrap().rows(), g.rows());
    }

    #[test]
    fn k1_is_repetition() {
        let g = GeneratorMatrix::build(CodeParams::new(5, 1, 8).unwrap()).unwrap();
        let x = PacketSet::new(vec![vec![7, 9, 200]]).unwrap();
        let y = encode(&g, &x).unwrap();
        assert!(y.rows().iter().all(|r| r == &x.rows()[0]));
    }

    #[test]
    fn encode_shape_mismatch() {
        let g = GeneratorMatrix::build(CodeParams::new(6, 3, 4).unwrap()).unwrap();
        let x = PacketSet::new(vec![vec![1, 2]; 2]).unwrap();
        assert!(matches!(encode(&g, &x), Err(CodeError::ShapeMismatch(_))));
        let x = PacketSet::new(vec![vec![1, 99]; 3]).unwrap();
        assert!(matches!(encode(&g, &x), Err(CodeError::ShapeMismatch(_))));
        assert!(PacketSet::new(vec![vec![1, 2], vec![3]]).is_err());
        assert!(PacketSet::new(vec![vec![]]).is_err());
    }

    #[test]
    fn decode_all_rows_and_insufficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = GeneratorMatrix::build(CodeParams::new(12, 6, 8).unwrap()).unwrap();
        let x = random_packets(&mut rng, 6, 10, 8);
        let y = encode(&g, &x).unwrap();
        assert_eq!(decode(&g, &y.indexed()).unwrap(), x);

        let few: Vec<_> = y.indexed().into_iter().take(5).collect();
        assert_eq!(
            decode(&g, &few),
            Err(CodeError::InsufficientPackets {
                received: 5,
                needed: 6
            })
        );
    }

    #[test]
    fn decode_rejects_bad_indices() {
        let g = GeneratorMatrix::build(CodeParams::new(4, 2, 4).unwrap()).unwrap();
        let row = [1u8, 2];
        assert!(matches!(
            decode(&g, &[(0, &row[..]), (1, &row[..])]),
            Err(CodeError::RowOutOfRange { .. })
        ));
        assert!(matches!(
            decode(&g, &[(5, &row[..]), (1, &row[..])]),
            Err(CodeError::RowOutOfRange { .. })
        ));
        assert_eq!(
            decode(&g, &[(2, &row[..]), (2, &row[..])]),
            Err(CodeError::DuplicateRow(2))
        );
    }

    #[test]
    fn singular_matrix_is_reported() {
        let f = Field::standard(4).unwrap();
        let m = vec![vec![1, 2], vec![1, 2]];
        assert_eq!(invert(&f, &m), Err(CodeError::SingularSubmatrix));
    }

    #[test]
    fn inverse_times_matrix_is_identity() {
        let g = GeneratorMatrix::build(CodeParams::new(15, 5, 4).unwrap()).unwrap();
        let f = g.field();
        let sub = g.submatrix(&[2, 5, 7, 11, 15]);
        let inv = invert(f, &sub).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let dot = (0..5).fold(0, |acc, t| f.add(acc, f.mul(inv[i][t], sub[t][j])));
                assert_eq!(dot, (i == j) as u8);
            }
        }
    }

    #[test]
    fn mds_exhaustive_small() {
        for q in [4u8, 8] {
            for n in 2..=10 {
                for k in 1..n {
                    let g = GeneratorMatrix::build(CodeParams::new(n, k, q).unwrap()).unwrap();
                    for mask in 0u32..(1 << n) {
                        if mask.count_ones() as usize != k {
                            continue;
                        }
                        let idx: Vec<usize> = (0..n)
                            .filter(|b| mask >> b & 1 == 1)
                            .map(|b| b + 1)
                            .collect();
                        invert(g.field(), &g.submatrix(&idx))
                            .unwrap_or_else(|_| panic!("singular: q={q} n={n} k={k} {idx:?}"));
                    }
                }
            }
        }
    }

    #[test]
    fn code_is_not_systematic() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (n, k, q) in [(12, 6, 8), (15, 4, 4), (96, 48, 8)] {
            let g = GeneratorMatrix::build(CodeParams::new(n, k, q).unwrap()).unwrap();
            let top = g.submatrix(&(1..=k).collect::<Vec<_>>());
            let ident: Rows = (0..k)
                .map(|i| (0..k).map(|j| (i == j) as u8).collect())
                .collect();
            assert_ne!(top, ident);
            let x = random_packets(&mut rng, k, 16, q);
            let y = encode(&g, &x).unwrap();
            assert_ne!(&y.rows()[..k], &x.rows()[..]);
        }
    }

    #[test]
    fn decode_independent_of_row_choice() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = GeneratorMatrix::build(CodeParams::new(20, 7, 8).unwrap()).unwrap();
        let x = random_packets(&mut rng, 7, 9, 8);
        let y = encode(&g, &x).unwrap();
        for _ in 0..50 {
            let mut idx: Vec<usize> = (1..=20).collect();
            for i in (1..idx.len()).rev() {
                idx.swap(i, rng.gen_range(0..=i));
            }
            let pick: Vec<_> = idx[..7].iter().map(|&i| (i, y.row(i))).collect();
            assert_eq!(decode(&g, &pick).unwrap(), x);
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::Rng;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn round_trip_under_erasures(
                q in prop::sample::select(vec![4u8, 8]),
                n_seed in 2usize..=255,
                k_frac in 0.01f64..0.99,
                len in 1usize..8,
                seed in any::<u64>(),
            ) {
                let n = 2 + n_seed % ((1usize << q) - 2);
                let k = ((n as f64 * k_frac) as usize).clamp(1, n - 1);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let g = GeneratorMatrix::build(CodeParams::new(n, k, q).unwrap()).unwrap();
                let x = random_packets(&mut rng, k, len, q);
                let y = encode(&g, &x).unwrap();
                let erased = rng.gen_range(0..=n - k);
                let mut idx: Vec<usize> = (1..=n).collect();
                for i in (1..idx.len()).rev() {
                    idx.swap(i, rng.gen_range(0..=i));
                }
                let kept: Vec<_> = idx[erased..].iter().map(|&i| (i, y.row(i))).collect();
                prop_assert_eq!(decode(&g, &kept).unwrap(), x);
            }
        }
    }
}
