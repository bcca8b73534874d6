//! Where Toeplitz seeds come from.

use std::path::PathBuf;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::toeplitz::{build_toeplitz, ToeplitzSpec};
use crate::bits::BitStream;
use crate::error::{Error, Result};
use crate::source::prng::{PrngKind, StreamRng};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeedSource {
    /// Flat binary file, MSB-first; the first `m + n - 1` bits are used.
    File { path: PathBuf },
    /// Keystream of a named generator.
    Prng { prng: PrngKind, seed: u64 },
}

/// What was actually used, for run manifests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub source: SeedSource,
    pub bits: usize,
    /// Seed bits as MSB-first hex (zero-padded to a whole byte).
    pub hex: String,
}

pub fn prng_seed_bits(prng: PrngKind, seed: u64, len: usize) -> BitStream {
    let mut rng = StreamRng::new(prng, seed, 0);
    let mut bits = BitStream::with_capacity(len);
    while bits.len() + 64 <= len {
        bits.push_bits(rng.next_u64(), 64);
    }
    let rem = (len - bits.len()) as u32;
    if rem > 0 {
        bits.push_bits(rng.next_u64() >> (64 - rem), rem);
    }
    bits
}

pub fn seeded_spec_from_config(
    source: &SeedSource,
    m: usize,
    n: usize,
) -> Result<(ToeplitzSpec, SeedRecord)> {
    let len = m + n - 1;
    let bits = match source {
        SeedSource::File { path } => {
            let bytes = std::fs::read(path)?;
            if bytes.len() * 8 < len {
                return Err(Error::SeedLength {
                    expected: len,
                    got: bytes.len() * 8,
                });
            }
            BitStream::from_bytes(&bytes, len)?
        }
        SeedSource::Prng { prng, seed } => prng_seed_bits(*prng, *seed, len),
    };
    let hex = bits.to_bytes().iter().map(|b| format!("{b:02x}")).collect();
    let record = SeedRecord {
        source: source.clone(),
        bits: len,
        hex,
    };
    Ok((build_toeplitz(bits, m, n)?, record))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_seed_passthrough() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seed.bin");
        std::fs::write(&path, [0b1011_0000]).unwrap();
        let (spec, rec) = seeded_spec_from_config(&SeedSource::File { path: path.clone() }, 2, 3).unwrap();
        assert_eq!(spec.seed().to_ascii(), "1011");
        assert_eq!(rec.bits, 4);
        assert_eq!(rec.hex, "b0");

        let err = seeded_spec_from_config(&SeedSource::File { path }, 8, 8).unwrap_err();
        assert!(matches!(err, Error::SeedLength { expected: 15, got: 8 }));
    }

    #[test]
    fn prng_seed_is_deterministic() {
        let src = SeedSource::Prng {
            prng: PrngKind::Chacha20,
            seed: 42,
        };
        let (a, ra) = seeded_spec_from_config(&src, 581, 768).unwrap();
        let (b, rb) = seeded_spec_from_config(&src, 581, 768).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert_eq!(a.seed().len(), 1348);
        let other = SeedSource::Prng {
            prng: PrngKind::Chacha20,
            seed: 43,
        };
        assert_ne!(seeded_spec_from_config(&other, 581, 768).unwrap().0, a);
    }
}
