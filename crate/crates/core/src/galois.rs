//! Arithmetic in GF(2^q), 2 <= q <= 8, using log/antilog tables.
//!
//! Symbols are plain `u8` values below `2^q`. A [`Field`] owns the tables
//! and is immutable once built, so it can be cloned or shared freely.

use std::fmt;

use crate::error::FieldError;

/// One field symbol. Always `< 2^q` for the field it belongs to.
pub type Symbol = u8;

/// Smallest and largest supported bit widths.
pub const MIN_Q: u8 = 2;
pub const MAX_Q: u8 = 8;

/// Parameters of a binary extension field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    pub q: u8,
    /// Reduction polynomial as a bitmask over GF(2), bit `q` set.
    pub reduction_poly: u16,
    /// Primitive element used to build the antilog table.
    pub generator: Symbol,
}

impl FieldSpec {
    /// The default primitive polynomial for `q`, with generator 2.
    pub fn standard(q: u8) -> Result<Self, FieldError> {
        let reduction_poly = match q {
            2 => 0x7,
            3 => 0xB,
            4 => 0x13,
            5 => 0x25,
            6 => 0x43,
            7 => 0x89,
            8 => 0x11D,
            _ => return Err(FieldError::UnsupportedWidth(q)),
        };
        Ok(Self {
            q,
            reduction_poly,
            generator: 2,
        })
    }

    /// Number of elements, `2^q`.
    pub fn order(&self) -> usize {
        1 << self.q
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "GF(2^{}) poly=0x{:X} g={}",
            self.q, self.reduction_poly, self.generator
        )
    }
}

/// Carry-less multiply of two field elements followed by reduction modulo
/// `poly`. Slow, table-free; used to build the antilog table.
pub fn clmul_reduce(a: u16, b: u16, q: u8, poly: u16) -> u16 {
    let mut acc: u32 = 0;
    for bit in 0..16 {
        if (b >> bit) & 1 == 1 {
            acc ^= (a as u32) << bit;
        }
    }
    let poly = poly as u32;
    for bit in (q as u32..32).rev() {
        if (acc >> bit) & 1 == 1 {
            acc ^= poly << (bit - q as u32);
        }
    }
    acc as u16
}

/// Log/antilog tables for one field.
#[derive(Clone, PartialEq, Eq)]
pub struct Field {
    spec: FieldSpec,
    /// `exp[i] = g^i`, doubled in length so `exp[log a + log b]` needs no
    /// modular reduction.
    exp: Vec<Symbol>,
    /// `log[a]` for `a != 0`; `log[0]` is unused.
    log: Vec<u16>,
    /// `products[c * order + s] = c * s`, for the slice kernels.
    products: Vec<Symbol>,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Field").field("spec", &self.spec).finish()
    }
}

impl Field {
    /// Builds the tables, checking that the polynomial has degree `q` and
    /// that the generator has full multiplicative order.
    pub fn new(spec: FieldSpec) -> Result<Self, FieldError> {
        if !(MIN_Q..=MAX_Q).contains(&spec.q) {
            return Err(FieldError::UnsupportedWidth(spec.q));
        }
        let q = spec.q;
        // Degree exactly q; a zero constant term means x divides the
        // polynomial, so it cannot be irreducible.
        if spec.reduction_poly >> q != 1 || spec.reduction_poly & 1 == 0 {
            return Err(FieldError::BadPolynomial {
                q,
                poly: spec.reduction_poly,
            });
        }
        let order = spec.order();
        let group = order - 1;
        if spec.generator as usize >= order || spec.generator == 0 {
            return Err(FieldError::NotPrimitive {
                generator: spec.generator,
                order: 0,
            });
        }

        let mut exp = vec![0; 2 * group];
        let mut log = vec![0u16; order];
        let mut seen = vec![false; order];
        let mut x: u16 = 1;
        for i in 0..group {
            if x == 0 || seen[x as usize] {
                return Err(FieldError::NotPrimitive {
                    generator: spec.generator,
                    order: i,
                });
            }
            seen[x as usize] = true;
            exp[i] = x as Symbol;
            log[x as usize] = i as u16;
            x = clmul_reduce(x, spec.generator as u16, q, spec.reduction_poly);
        }
        // The sequence must close exactly after 2^q - 1 steps.
        if x != 1 {
            return Err(FieldError::NotPrimitive {
                generator: spec.generator,
                order: group,
            });
        }
        let (lo, hi) = exp.split_at_mut(group);
        hi.copy_from_slice(lo);

        let mut products = vec![0; order * order];
        for c in 1..order {
            for s in 1..order {
                products[c * order + s] = exp[log[c] as usize + log[s] as usize];
            }
        }

        Ok(Self {
            spec,
            exp,
            log,
            products,
        })
    }

    /// The field with the default polynomial for `q`.
    pub fn standard(q: u8) -> Result<Self, FieldError> {
        Self::new(FieldSpec::standard(q)?)
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }

    pub fn q(&self) -> u8 {
        self.spec.q
    }

    /// `2^q`.
    pub fn order(&self) -> usize {
        self.spec.order()
    }

    /// `2^q - 1`, the size of the multiplicative group.
    pub fn group_order(&self) -> usize {
        self.order() - 1
    }

    pub fn generator(&self) -> Symbol {
        self.spec.generator
    }

    pub fn contains(&self, a: Symbol) -> bool {
        (a as usize) < self.order()
    }

    /// Checked conversion of a raw value into a field symbol.
    pub fn element(&self, value: u32) -> Result<Symbol, FieldError> {
        if (value as usize) < self.order() {
            Ok(value as Symbol)
        } else {
            Err(FieldError::OutOfRange {
                value,
                q: self.spec.q,
            })
        }
    }

    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[self.log[a as usize] as usize + self.log[b as usize] as usize]
    }

    pub fn inv(&self, a: Symbol) -> Result<Symbol, FieldError> {
        if a == 0 {
            return Err(FieldError::DivideByZero);
        }
        let group = self.group_order();
        Ok(self.exp[(group - self.log[a as usize] as usize) % group])
    }

    pub fn div(&self, a: Symbol, b: Symbol) -> Result<Symbol, FieldError> {
        Ok(self.mul(a, self.inv(b)?))
    }

    /// `a^e`, with `a^0 = 1` (including `0^0`).
    pub fn pow(&self, a: Symbol, e: u64) -> Symbol {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let group = self.group_order() as u64;
        let l = (self.log[a as usize] as u64 * (e % group)) % group;
        self.exp[l as usize]
    }

    /// `g^i` for the field generator.
    pub fn exp(&self, i: usize) -> Symbol {
        self.exp[i % self.group_order()]
    }

    /// Discrete log base `g`; `None` for zero.
    pub fn log(&self, a: Symbol) -> Option<usize> {
        (a != 0).then(|| self.log[a as usize] as usize)
    }

    /// `dst[j] ^= c * src[j]` for every `j`.
    pub fn mul_add_slice(&self, c: Symbol, src: &[Symbol], dst: &mut [Symbol]) {
        debug_assert_eq!(src.len(), dst.len());
        match c {
            0 => {}
            1 => dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s),
            _ => {
                let table = self.product_row(c);
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d ^= table[s as usize];
                }
            }
        }
    }

    fn product_row(&self, c: Symbol) -> &[Symbol] {
        let order = self.order();
        &self.products[c as usize * order..(c as usize + 1) * order]
    }

    /// `row[j] = c * row[j]` for every `j`.
    pub fn scale_slice(&self, c: Symbol, row: &mut [Symbol]) {
        match c {
            0 => row.fill(0),
            1 => {}
            _ => {
                let table = self.product_row(c);
                for s in row.iter_mut() {
                    *s = table[*s as usize];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_fields() -> Vec<Field> {
        (MIN_Q..=MAX_Q)
            .map(|q| Field::standard(q).unwrap())
            .collect()
    }

    #[test]
    fn gf256_tables_cover_every_nonzero_element() {
        let f = Field::standard(8).unwrap();
        let mut seen = [false; 256];
        for i in 0..255 {
            let a = f.exp(i);
            assert!(!seen[a as usize], "repeat at {i}");
            seen[a as usize] = true;
            assert_eq!(f.log(a), Some(i));
        }
        assert!(!seen[0]);
        assert_eq!(seen.iter().filter(|s| **s).count(), 255);
    }

    #[test]
    fn gf4_exhaustive() {
        let f = Field::new(FieldSpec {
            q: 2,
            reduction_poly: 0x7,
            generator: 2,
        })
        .unwrap();
        // x^2 = x + 1, so 2*2 = 3, 2*3 = 1, 3*3 = 2.
        let table = [[0, 0, 0, 0], [0, 1, 2, 3], [0, 2, 3, 1], [0, 3, 1, 2]];
        for a in 0..4u8 {
            for b in 0..4u8 {
                assert_eq!(f.mul(a, b), table[a as usize][b as usize]);
            }
        }
        assert_eq!(f.exp(0), 1);
        assert_eq!(f.exp(1), 2);
        assert_eq!(f.exp(2), 3);
    }

    #[test]
    fn degenerate_polynomial_is_rejected() {
        let err = Field::new(FieldSpec {
            q: 8,
            reduction_poly: 0x100,
            generator: 2,
        });
        assert!(matches!(err, Err(FieldError::BadPolynomial { .. })));
        let err = Field::new(FieldSpec {
            q: 8,
            reduction_poly: 0x1D,
            generator: 2,
        });
        assert!(matches!(err, Err(FieldError::BadPolynomial { .. })));
        let err = Field::new(FieldSpec {
            q: 4,
            reduction_poly: 0x11D,
            generator: 2,
        });
        assert!(matches!(err, Err(FieldError::BadPolynomial { .. })));
    }

    #[test]
    fn non_primitive_generator_is_rejected() {
        // x^4 + x^3 + x^2 + x + 1 is irreducible but x has order 5.
        let err = Field::new(FieldSpec {
            q: 4,
            reduction_poly: 0x1F,
            generator: 2,
        });
        assert!(matches!(
            err,
            Err(FieldError::NotPrimitive { order: 5, .. })
        ));
    }

    #[test]
    fn add_examples() {
        let f = Field::standard(8).unwrap();
        assert_eq!(f.add(0x53, 0xCA), 0x99);
        assert_eq!(f.add(0x37, 0x37), 0);
        assert_eq!(f.add(0x37, 0), 0x37);
    }

    #[test]
    fn mul_inv_pow_examples() {
        let f = Field::standard(8).unwrap();
        assert_eq!(f.mul(0x02, 0x80), 0x1D);
        assert_eq!(f.inv(1).unwrap(), 1);
        assert_eq!(f.inv(0), Err(FieldError::DivideByZero));
        assert_eq!(f.pow(f.generator(), 255), 1);
        assert_eq!(f.pow(0x53, 0), 1);
        assert_eq!(f.pow(0, 0), 1);
        assert_eq!(f.pow(0, 3), 0);
    }

    #[test]
    fn inverse_is_exhaustive() {
        for f in all_fields() {
            for a in 1..f.order() as u16 {
                let a = a as Symbol;
                assert_eq!(f.mul(a, f.inv(a).unwrap()), 1, "q={} a={a}", f.q());
            }
        }
    }

    #[test]
    fn tables_agree_with_clmul_oracle() {
        for f in all_fields() {
            let spec = *f.spec();
            for a in 0..f.order() as u16 {
                for b in 0..f.order() as u16 {
                    let want = clmul_reduce(a, b, spec.q, spec.reduction_poly);
                    assert_eq!(f.mul(a as u8, b as u8) as u16, want, "q={} {a}*{b}", spec.q);
                }
            }
        }
    }

    #[test]
    fn distributive_exhaustive_small_fields() {
        for q in 2..=4 {
            let f = Field::standard(q).unwrap();
            let o = f.order() as u8;
            for a in 0..o {
                for b in 0..o {
                    for c in 0..o {
                        assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    }
                }
            }
        }
    }

    #[test]
    fn distributive_random_triples() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xC0DE);
        for f in all_fields() {
            let o = f.order() as u16;
            for _ in 0..100_000 {
                let a = rng.gen_range(0..o) as u8;
                let b = rng.gen_range(0..o) as u8;
                let c = rng.gen_range(0..o) as u8;
                assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            }
        }
    }

    #[test]
    fn slice_kernels_match_scalar() {
        for (q, len) in [(8u8, 256usize), (8, 10), (5, 100), (5, 7)] {
            let f = Field::standard(q).unwrap();
            let src: Vec<u8> = (0..len).map(|i| (i % f.order()) as u8).collect();
            for c in [0u8, 1, 2, 0x13, (f.order() - 1) as u8] {
                let mut dst: Vec<u8> = src.iter().rev().copied().collect();
                let want: Vec<u8> = dst
                    .iter()
                    .zip(&src)
                    .map(|(d, s)| d ^ f.mul(c, *s))
                    .collect();
                f.mul_add_slice(c, &src, &mut dst);
                assert_eq!(dst, want);

                let mut row = src.clone();
                f.scale_slice(c, &mut row);
                let want: Vec<u8> = src.iter().map(|s| f.mul(c, *s)).collect();
                assert_eq!(row, want);
            }
        }
    }

    #[test]
    fn element_range_check() {
        let f = Field::standard(5).unwrap();
        assert_eq!(f.element(31), Ok(31));
        assert!(f.element(32).is_err());
    }
}
