use std::sync::Arc;

use serde::Serialize;

use crate::bits::BitStream;
use crate::error::{invalid, Error, Result};

/// An `m x n` Toeplitz matrix over GF(2) defined by `m + n - 1` seed bits,
/// with `T[i][j] = seed[(n - 1) + i - j]`.
///
/// The first column is `seed[n-1 ..= n+m-2]`; the first row is the seed
/// prefix `seed[0 ..= n-1]` read backwards.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ToeplitzSpec {
    m: usize,
    n: usize,
    seed: BitStream,
}

pub fn build_toeplitz(seed: BitStream, m: usize, n: usize) -> Result<ToeplitzSpec> {
    if m == 0 {
        return Err(invalid("m", "output length must be >= 1"));
    }
    if n == 0 {
        return Err(invalid("n", "input length must be >= 1"));
    }
    let expected = m + n - 1;
    if seed.len() != expected {
        return Err(Error::SeedLength {
            expected,
            got: seed.len(),
        });
    }
    Ok(ToeplitzSpec { m, n, seed })
}

impl ToeplitzSpec {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> &BitStream {
        &self.seed
    }

    pub fn shared(self) -> Arc<ToeplitzSpec> {
        Arc::new(self)
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> bool {
        self.seed.get(self.n - 1 + i - j)
    }

    pub fn to_dense(&self) -> Vec<Vec<bool>> {
        (0..self.m)
            .map(|i| (0..self.n).map(|j| self.entry(i, j)).collect())
            .collect()
    }

    /// Seed in reverse order; row `i` of the matrix is the contiguous window
    /// `[m - 1 - i, m - 1 - i + n)` of this sequence.
    pub(crate) fn reversed_seed(&self) -> BitStream {
        let len = self.seed.len();
        BitStream::from_bools((0..len).map(|t| self.seed.get(len - 1 - t)))
    }
}

/// Bit-by-bit `T x` over GF(2). Reference implementation for the chunked kernel.
pub fn multiply_naive(spec: &ToeplitzSpec, x: &BitStream) -> Result<BitStream> {
    if x.len() != spec.n {
        return Err(Error::LengthMismatch {
            expected: spec.n,
            got: x.len(),
        });
    }
    Ok(multiply_naive_at(spec, x, 0))
}

pub(crate) fn multiply_naive_at(spec: &ToeplitzSpec, x: &BitStream, offset: usize) -> BitStream {
    let mut y = BitStream::with_capacity(spec.m);
    for i in 0..spec.m {
        let mut acc = false;
        for j in 0..spec.n {
            acc ^= spec.entry(i, j) & x.get(offset + j);
        }
        y.push(acc);
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> BitStream {
        BitStream::from_ascii(s).unwrap()
    }

    #[test]
    fn two_by_two_convention() {
        let t = build_toeplitz(bits("101"), 2, 2).unwrap();
        assert_eq!(t.to_dense(), vec![vec![false, true], vec![true, false]]);
        let y = multiply_naive(&t, &bits("10")).unwrap();
        assert_eq!(y.to_ascii(), "01");
    }

    #[test]
    fn scalar_and_zero_seeds() {
        let t = build_toeplitz(bits("1"), 1, 1).unwrap();
        assert_eq!(t.to_dense(), vec![vec![true]]);
        let z = build_toeplitz(BitStream::zeros(9), 4, 6).unwrap();
        assert!(z.to_dense().iter().flatten().all(|&b| !b));
    }

    #[test]
    fn first_column_and_row_follow_seed() {
        let seed = bits("0011010111");
        let t = build_toeplitz(seed.clone(), 4, 7).unwrap();
        for i in 0..4 {
            assert_eq!(t.entry(i, 0), seed.get(6 + i));
        }
        for j in 0..7 {
            assert_eq!(t.entry(0, j), seed.get(6 - j));
        }
        let rev = t.reversed_seed();
        for i in 0..4 {
            for j in 0..7 {
                assert_eq!(t.entry(i, j), rev.get(3 - i + j));
            }
        }
    }

    #[test]
    fn wrong_seed_length_names_expected() {
        let err = build_toeplitz(bits("1010"), 2, 2).unwrap_err();
        assert!(matches!(err, Error::SeedLength { expected: 3, got: 4 }));
        assert!(err.to_string().contains("expected 3"));
        assert!(build_toeplitz(BitStream::new(), 0, 1).is_err());
    }

    #[test]
    fn length_mismatch_on_multiply() {
        let t = build_toeplitz(bits("101"), 2, 2).unwrap();
        assert!(matches!(
            multiply_naive(&t, &bits("1")),
            Err(Error::LengthMismatch { expected: 2, got: 1 })
        ));
    }
}
