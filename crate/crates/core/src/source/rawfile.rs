//! Raw ADC sample files.
//!
//! A 48-byte little-endian header followed by the codes:
//!
//! ```text
//! offset size field
//!      0    4 magic "SQRW"
//!      4    2 version (1)
//!      6    1 n_bits
//!      7    1 code width in bytes (2 when n_bits <= 16, else 4)
//!      8    8 f_s_out, Hz
//!     16    4 channel id
//!     20    4 reserved (0)
//!     24    8 sample count
//!     32    8 prng seed
//!     40    8 off-scale count
//!     48    - codes, little-endian unsigned, `code width` bytes each
//! ```

use std::io::{Read, Write};

use super::sim::RawSampleBlock;
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"SQRW";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 48;

fn code_width(n_bits: u32) -> u8 {
    if n_bits <= 16 {
        2
    } else {
        4
    }
}

pub fn write_raw<W: Write>(mut w: W, block: &RawSampleBlock) -> Result<()> {
    let width = code_width(block.n_bits);
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.push(block.n_bits as u8);
    header.push(width);
    header.extend_from_slice(&block.f_s_out_hz.to_le_bytes());
    header.extend_from_slice(&block.channel_id.to_le_bytes());
    header.extend_from_slice(&0u32.to_le_bytes());
    header.extend_from_slice(&(block.codes.len() as u64).to_le_bytes());
    header.extend_from_slice(&block.prng_seed.to_le_bytes());
    header.extend_from_slice(&block.off_scale_count.to_le_bytes());
    debug_assert_eq!(header.len(), HEADER_LEN);
    w.write_all(&header)?;

    let mut body = Vec::with_capacity(block.codes.len() * width as usize);
    for &c in &block.codes {
        if width == 2 {
            body.extend_from_slice(&(c as u16).to_le_bytes());
        } else {
            body.extend_from_slice(&c.to_le_bytes());
        }
    }
    w.write_all(&body)?;
    Ok(())
}

fn bad(offset: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        reason: reason.into(),
    }
}

pub fn read_raw<R: Read>(mut r: R) -> Result<RawSampleBlock> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    parse_raw(&buf)
}

pub fn parse_raw(buf: &[u8]) -> Result<RawSampleBlock> {
    if buf.len() < HEADER_LEN {
        return Err(bad(buf.len(), format!("header needs {HEADER_LEN} bytes")));
    }
    if buf[0..4] != MAGIC {
        return Err(bad(0, "bad magic, expected \"SQRW\""));
    }
    let u16_at = |o: usize| u16::from_le_bytes(buf[o..o + 2].try_into().unwrap());
    let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().unwrap());

    let version = u16_at(4);
    if version != VERSION {
        return Err(bad(4, format!("unsupported version {version}")));
    }
    let n_bits = u32::from(buf[6]);
    if !(2..=24).contains(&n_bits) {
        return Err(bad(6, format!("n_bits {n_bits} outside 2..=24")));
    }
    let width = buf[7];
    if width != code_width(n_bits) {
        return Err(bad(
            7,
            format!("code width {width} inconsistent with n_bits {n_bits}"),
        ));
    }
    let count = u64_at(24) as usize;
    let expected = HEADER_LEN + count * width as usize;
    if buf.len() != expected {
        return Err(bad(
            buf.len().min(expected),
            format!(
                "declared {count} codes need {expected} bytes, file has {}",
                buf.len()
            ),
        ));
    }
    let max = (1u32 << n_bits) - 1;
    let mut codes = Vec::with_capacity(count);
    for (i, chunk) in buf[HEADER_LEN..].chunks_exact(width as usize).enumerate() {
        let c = if width == 2 {
            u32::from(u16::from_le_bytes([chunk[0], chunk[1]]))
        } else {
            u32::from_le_bytes(chunk.try_into().unwrap())
        };
        if c > max {
            return Err(bad(
                HEADER_LEN + i * width as usize,
                format!("code {c} exceeds {max}"),
            ));
        }
        codes.push(c);
    }
    Ok(RawSampleBlock {
        codes,
        n_bits,
        off_scale_count: u64_at(40),
        channel_id: u32_at(16),
        prng_seed: u64_at(32),
        f_s_out_hz: u64_at(8),
    })
}
