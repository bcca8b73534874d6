//! Bit files and the cumulative interleave.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::config::OutputFormat;
use crate::bits::BitStream;
use crate::error::{Error, Result};
use crate::source::{rawfile, RawSampleBlock};

pub fn write_bits(path: &Path, bits: &BitStream, format: OutputFormat) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    match format {
        OutputFormat::Bin => w.write_all(&bits.to_bytes())?,
        OutputFormat::Ascii => w.write_all(bits.to_ascii().as_bytes())?,
    }
    w.flush()?;
    Ok(())
}

/// Reads a bit file; `.txt` files are ASCII, anything else packed binary.
/// Binary files carry whole bytes, so padding bits of a partial last byte
/// come back as zeros.
pub fn read_bits(path: &Path) -> Result<BitStream> {
    let bytes = std::fs::read(path)?;
    if is_ascii_path(path) {
        let text = std::str::from_utf8(&bytes).map_err(|e| Error::Format {
            offset: e.valid_up_to() as u64,
            reason: "ASCII bit file is not valid UTF-8".into(),
        })?;
        BitStream::from_ascii(text)
    } else {
        BitStream::from_bytes(&bytes, bytes.len() * 8)
    }
}

fn is_ascii_path(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("txt"))
}

pub fn write_raw_file(path: &Path, block: &RawSampleBlock) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    rawfile::write_raw(&mut w, block)?;
    w.flush()?;
    Ok(())
}

pub fn read_raw_file(path: &Path) -> Result<RawSampleBlock> {
    rawfile::parse_raw(&std::fs::read(path)?)
}

/// True when the file starts with the raw-sample magic.
pub fn is_raw_file(path: &Path) -> Result<bool> {
    use std::io::Read;
    let mut head = [0u8; 4];
    let mut f = File::open(path)?;
    let n = f.read(&mut head)?;
    Ok(n == 4 && head == rawfile::MAGIC)
}

/// Round-robin by block: block 0 of every stream in order, then block 1, and
/// so on. A stream that runs out of blocks is skipped from then on.
pub fn interleave(streams: &[&BitStream], block_bits: &[usize]) -> BitStream {
    assert_eq!(streams.len(), block_bits.len());
    let total = streams.iter().map(|s| s.len()).sum();
    let mut out = BitStream::with_capacity(total);
    let blocks: Vec<usize> = streams
        .iter()
        .zip(block_bits)
        .map(|(s, &m)| s.len() / m)
        .collect();
    let rounds = blocks.iter().copied().max().unwrap_or(0);
    for b in 0..rounds {
        for (i, s) in streams.iter().enumerate() {
            if b < blocks[i] {
                out.extend_from(&s.slice(b * block_bits[i], block_bits[i]));
            }
        }
    }
    out
}

/// Inverse of [`interleave`] given each stream's block size and block count.
pub fn deinterleave(
    cumulative: &BitStream,
    block_bits: &[usize],
    blocks: &[usize],
) -> Result<Vec<BitStream>> {
    let expected: usize = block_bits.iter().zip(blocks).map(|(m, b)| m * b).sum();
    if cumulative.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            got: cumulative.len(),
        });
    }
    let mut out: Vec<BitStream> = blocks
        .iter()
        .zip(block_bits)
        .map(|(b, m)| BitStream::with_capacity(b * m))
        .collect();
    let rounds = blocks.iter().copied().max().unwrap_or(0);
    let mut pos = 0;
    for b in 0..rounds {
        for i in 0..blocks.len() {
            if b < blocks[i] {
                out[i].extend_from(&cumulative.slice(pos, block_bits[i]));
                pos += block_bits[i];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn interleave_small() {
        let a = BitStream::from_ascii("111111").unwrap();
        let b = BitStream::from_ascii("0000").unwrap();
        let c = interleave(&[&a, &b], &[3, 2]);
        assert_eq!(c.to_ascii(), "1110011100");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let bits = BitStream::from_ascii("1011001110001").unwrap();
        let p = dir.path().join("x.txt");
        write_bits(&p, &bits, OutputFormat::Ascii).unwrap();
        assert_eq!(read_bits(&p).unwrap(), bits);
        let p = dir.path().join("x.bin");
        write_bits(&p, &bits, OutputFormat::Bin).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 2);
        assert_eq!(read_bits(&p).unwrap().slice(0, 13), bits);
    }

    proptest! {
        #[test]
        fn deinterleave_recovers_streams(
            sizes in proptest::collection::vec((1usize..9, 0usize..6), 1..4),
            fill in any::<u64>(),
        ) {
            let streams: Vec<BitStream> = sizes
                .iter()
                .enumerate()
                .map(|(i, &(m, b))| {
                    BitStream::from_bools((0..m * b).map(|k| (fill.rotate_left((k + 7 * i) as u32) & 1) == 1))
                })
                .collect();
            let refs: Vec<&BitStream> = streams.iter().collect();
            let m: Vec<usize> = sizes.iter().map(|s| s.0).collect();
            let b: Vec<usize> = sizes.iter().map(|s| s.1).collect();
            let cum = interleave(&refs, &m);
            prop_assert_eq!(deinterleave(&cum, &m, &b).unwrap(), streams);
        }
    }
}
