//! Word-packed Toeplitz multiplication.
//!
//! The matrix is cut into column stripes one machine word wide. For each
//! stripe the `m` row fragments are stored contiguously, so a block is
//! hashed by sweeping the stripes (submatrix multiply) and XOR-ing each
//! `row & x` fragment into a per-row accumulator register. A final parity
//! over each accumulator gives the output bit.

use std::ops::{BitAnd, BitXor, BitXorAssign};

use serde::{Deserialize, Serialize};

use super::toeplitz::ToeplitzSpec;
use crate::bits::BitStream;
use crate::error::{Error, Result};

pub trait Word:
    Copy + Default + Eq + BitAnd<Output = Self> + BitXor<Output = Self> + BitXorAssign + Send + Sync
{
    const BITS: usize;
    /// `BITS` bits of `bits` starting at `offset`, MSB-first.
    fn read(bits: &BitStream, offset: usize) -> Self;
    /// Mask with the top `keep` bits set.
    fn top_mask(keep: usize) -> Self;
    fn parity(self) -> bool;
}

impl Word for u32 {
    const BITS: usize = 32;
    #[inline]
    fn read(bits: &BitStream, offset: usize) -> Self {
        (bits.read_word(offset) >> 32) as u32
    }
    fn top_mask(keep: usize) -> Self {
        if keep >= 32 {
            u32::MAX
        } else {
            !(u32::MAX >> keep)
        }
    }
    #[inline]
    fn parity(self) -> bool {
        self.count_ones() & 1 == 1
    }
}

impl Word for u64 {
    const BITS: usize = 64;
    #[inline]
    fn read(bits: &BitStream, offset: usize) -> Self {
        bits.read_word(offset)
    }
    fn top_mask(keep: usize) -> Self {
        if keep >= 64 {
            u64::MAX
        } else {
            !(u64::MAX >> keep)
        }
    }
    #[inline]
    fn parity(self) -> bool {
        self.count_ones() & 1 == 1
    }
}

impl Word for u128 {
    const BITS: usize = 128;
    #[inline]
    fn read(bits: &BitStream, offset: usize) -> Self {
        (u128::from(bits.read_word(offset)) << 64) | u128::from(bits.read_word(offset + 64))
    }
    fn top_mask(keep: usize) -> Self {
        if keep >= 128 {
            u128::MAX
        } else {
            !(u128::MAX >> keep)
        }
    }
    #[inline]
    fn parity(self) -> bool {
        self.count_ones() & 1 == 1
    }
}

/// Precomputed column stripes of one Toeplitz matrix.
#[derive(Debug, Clone)]
pub struct ToeplitzKernel<W: Word = u64> {
    m: usize,
    n: usize,
    chunks: usize,
    /// `stripes[c * m + i]` = row `i`, columns `[c*W, (c+1)*W)`.
    stripes: Vec<W>,
    last_mask: W,
}

impl<W: Word> ToeplitzKernel<W> {
    /// Builds the stripes from the seed (first pipeline stage).
    pub fn new(spec: &ToeplitzSpec) -> Self {
        let (m, n) = (spec.m(), spec.n());
        let chunks = n.div_ceil(W::BITS);
        let tail = n - (chunks - 1) * W::BITS;
        let last_mask = W::top_mask(tail);
        let rev = spec.reversed_seed();
        let mut stripes = Vec::with_capacity(chunks * m);
        for c in 0..chunks {
            for i in 0..m {
                let mut w = W::read(&rev, m - 1 - i + c * W::BITS);
                if c == chunks - 1 {
                    w = w & last_mask;
                }
                stripes.push(w);
            }
        }
        Self {
            m,
            n,
            chunks,
            stripes,
            last_mask,
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Hashes the `n` bits of `x` starting at `offset`, appending `m` bits to `out`.
    /// `acc` is scratch space and is resized as needed.
    pub fn multiply_into(&self, x: &BitStream, offset: usize, acc: &mut Vec<W>, out: &mut BitStream) {
        debug_assert!(offset + self.n <= x.len());
        acc.clear();
        acc.resize(self.m, W::default());
        for c in 0..self.chunks {
            let mut xc = W::read(x, offset + c * W::BITS);
            if c == self.chunks - 1 {
                xc = xc & self.last_mask;
            }
            let stripe = &self.stripes[c * self.m..(c + 1) * self.m];
            for (a, &t) in acc.iter_mut().zip(stripe) {
                *a ^= t & xc;
            }
        }
        for rows in acc.chunks(64) {
            let mut word = 0u64;
            for (k, &a) in rows.iter().enumerate() {
                word |= u64::from(a.parity()) << (63 - k);
            }
            out.push_bits(word >> (64 - rows.len()), rows.len() as u32);
        }
    }

    pub fn multiply(&self, x: &BitStream) -> Result<BitStream> {
        if x.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let mut out = BitStream::with_capacity(self.m);
        self.multiply_into(x, 0, &mut Vec::new(), &mut out);
        Ok(out)
    }
}

/// Word width of the column stripes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ChunkWidth {
    #[serde(rename = "32")]
    W32,
    #[default]
    #[serde(rename = "64")]
    W64,
    #[serde(rename = "128")]
    W128,
}

impl ChunkWidth {
    pub fn bits(&self) -> usize {
        match self {
            ChunkWidth::W32 => 32,
            ChunkWidth::W64 => 64,
            ChunkWidth::W128 => 128,
        }
    }
}

/// A kernel of runtime-selected width.
#[derive(Debug, Clone)]
pub enum Kernel {
    W32(ToeplitzKernel<u32>),
    W64(ToeplitzKernel<u64>),
    W128(ToeplitzKernel<u128>),
}

#[derive(Debug, Default)]
pub struct Scratch {
    a32: Vec<u32>,
    a64: Vec<u64>,
    a128: Vec<u128>,
}

impl Kernel {
    pub fn new(spec: &ToeplitzSpec, width: ChunkWidth) -> Self {
        match width {
            ChunkWidth::W32 => Kernel::W32(ToeplitzKernel::new(spec)),
            ChunkWidth::W64 => Kernel::W64(ToeplitzKernel::new(spec)),
            ChunkWidth::W128 => Kernel::W128(ToeplitzKernel::new(spec)),
        }
    }

    pub fn m(&self) -> usize {
        match self {
            Kernel::W32(k) => k.m(),
            Kernel::W64(k) => k.m(),
            Kernel::W128(k) => k.m(),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Kernel::W32(k) => k.n(),
            Kernel::W64(k) => k.n(),
            Kernel::W128(k) => k.n(),
        }
    }

    pub fn multiply_into(&self, x: &BitStream, offset: usize, scratch: &mut Scratch, out: &mut BitStream) {
        match self {
            Kernel::W32(k) => k.multiply_into(x, offset, &mut scratch.a32, out),
            Kernel::W64(k) => k.multiply_into(x, offset, &mut scratch.a64, out),
            Kernel::W128(k) => k.multiply_into(x, offset, &mut scratch.a128, out),
        }
    }
}

/// `T x` over GF(2) using the word-chunked kernel.
pub fn multiply(spec: &ToeplitzSpec, x: &BitStream) -> Result<BitStream> {
    ToeplitzKernel::<u64>::new(spec).multiply(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extractor::toeplitz::{build_toeplitz, multiply_naive};

    #[test]
    fn tiny_example() {
        let t = build_toeplitz(BitStream::from_ascii("101").unwrap(), 2, 2).unwrap();
        let y = multiply(&t, &BitStream::from_ascii("10").unwrap()).unwrap();
        assert_eq!(y.to_ascii(), "01");
        let z = multiply(&t, &BitStream::zeros(2)).unwrap();
        assert_eq!(z.to_ascii(), "00");
    }

    #[test]
    fn all_widths_agree_on_reference_size() {
        let seed = BitStream::from_bools((0..581 + 768 - 1).map(|i| (i * 7 + i / 3) % 5 < 2));
        let t = build_toeplitz(seed, 581, 768).unwrap();
        let x = BitStream::from_bools((0..768).map(|i| (i * 13) % 7 < 3));
        let reference = multiply_naive(&t, &x).unwrap();
        for width in [ChunkWidth::W32, ChunkWidth::W64, ChunkWidth::W128] {
            let k = Kernel::new(&t, width);
            let mut out = BitStream::new();
            k.multiply_into(&x, 0, &mut Scratch::default(), &mut out);
            assert_eq!(out, reference, "{width:?}");
        }
    }

    #[test]
    fn offset_input_ignores_following_bits() {
        let seed = BitStream::from_bools((0..40).map(|i| i % 3 == 0));
        let t = build_toeplitz(seed, 11, 30).unwrap();
        let mut x = BitStream::from_bools((0..30).map(|i| i % 2 == 0));
        let expected = multiply_naive(&t, &x).unwrap();
        let mut padded = BitStream::from_ascii("111").unwrap();
        padded.extend_from(&x);
        x = padded;
        x.extend_from(&BitStream::from_ascii("1111111111").unwrap());
        let mut out = BitStream::new();
        ToeplitzKernel::<u64>::new(&t).multiply_into(&x, 3, &mut Vec::new(), &mut out);
        assert_eq!(out, expected);
    }
}
