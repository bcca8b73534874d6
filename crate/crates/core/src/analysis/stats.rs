use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::bits::BitStream;
use crate::error::{Error, Result};
use crate::source::RawSampleBlock;

/// Smallest sample count accepted by [`empirical_min_entropy`].
pub const MIN_ENTROPY_SAMPLES: usize = 100_000;

/// `-log2` of the most frequent code's relative frequency.
pub fn empirical_min_entropy(block: &RawSampleBlock) -> Result<f64> {
    if block.codes.is_empty() {
        return Err(Error::Degenerate("no samples".into()));
    }
    if block.codes.len() < MIN_ENTROPY_SAMPLES {
        return Err(Error::InsufficientData {
            required: MIN_ENTROPY_SAMPLES,
            got: block.codes.len(),
        });
    }
    let hist = Histogram::of_codes(&block.codes, block.n_bits);
    let max = *hist.counts.iter().max().expect("non-empty");
    Ok(-(max as f64 / block.codes.len() as f64).log2())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn of_codes(codes: &[u32], n_bits: u32) -> Self {
        let mut counts = vec![0u64; 1 << n_bits];
        for &c in codes {
            counts[c as usize] += 1;
        }
        Self { counts }
    }

    /// Byte-value histogram of a bit stream (whole bytes only).
    pub fn of_bytes(bits: &BitStream) -> Self {
        let mut counts = vec![0u64; 256];
        let bytes = bits.to_bytes();
        for &b in &bytes[..bits.len() / 8] {
            counts[b as usize] += 1;
        }
        Self { counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Pearson chi-square against the uniform distribution and its p-value.
    pub fn chi_square_uniform(&self) -> (f64, f64) {
        let k = self.counts.len() as f64;
        let expected = self.total() as f64 / k;
        let stat: f64 = self
            .counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        let p = if stat <= 0.0 {
            1.0
        } else {
            gamma_ur((k - 1.0) / 2.0, stat / 2.0)
        };
        (stat, p)
    }

    /// Coarser histogram with `bins` equal groups of adjacent codes, for plotting.
    pub fn rebin(&self, bins: usize) -> Vec<u64> {
        let per = self.counts.len().div_ceil(bins);
        self.counts.chunks(per).map(|c| c.iter().sum()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ByteUniformity {
    pub bytes: u64,
    pub chi_square: f64,
    pub p_value: f64,
    pub passed: bool,
}

/// Byte histogram of extracted output with its chi-square uniformity test.
pub fn code_histogram(bits: &BitStream, alpha: f64) -> Result<(Histogram, ByteUniformity)> {
    if bits.len() < 8 {
        return Err(Error::InsufficientData {
            required: 8,
            got: bits.len(),
        });
    }
    let h = Histogram::of_bytes(bits);
    let (chi_square, p_value) = h.chi_square_uniform();
    let u = ByteUniformity {
        bytes: h.total(),
        chi_square,
        p_value,
        passed: p_value >= alpha,
    };
    Ok((h, u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(codes: Vec<u32>, n_bits: u32) -> RawSampleBlock {
        RawSampleBlock {
            codes,
            n_bits,
            off_scale_count: 0,
            channel_id: 0,
            prng_seed: 0,
            f_s_out_hz: 0,
        }
    }

    #[test]
    fn point_mass_and_flat() {
        assert_eq!(empirical_min_entropy(&block(vec![7; 100_000], 8)).unwrap(), 0.0);
        let cycle: Vec<u32> = (0..2 * 65536).map(|i| i % 65536).collect();
        assert_eq!(empirical_min_entropy(&block(cycle, 16)).unwrap(), 16.0);
        assert!(empirical_min_entropy(&block(vec![], 8)).is_err());
        assert!(matches!(
            empirical_min_entropy(&block(vec![1; 10], 8)),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn constant_bytes_fail_uniformity() {
        let bits = BitStream::from_bytes(&[0xAB; 4096], 4096 * 8).unwrap();
        let (_, u) = code_histogram(&bits, 0.01).unwrap();
        assert!(u.p_value < 1e-12);
        assert!(!u.passed);
    }

    #[test]
    fn flat_bytes_pass() {
        let bytes: Vec<u8> = (0..256 * 40).map(|i| (i % 256) as u8).collect();
        let bits = BitStream::from_bytes(&bytes, bytes.len() * 8).unwrap();
        let (h, u) = code_histogram(&bits, 0.01).unwrap();
        assert_eq!(h.counts, vec![40; 256]);
        assert_eq!(u.p_value, 1.0);
    }
}
