//! Exact-length bit sequences.
//!
//! Bits are stored MSB-first in 64-bit words: bit `i` lives in word `i / 64`
//! at position `63 - i % 64`. Unused trailing positions of the last word are
//! always zero. On disk the same order is kept byte by byte, so the byte
//! serialization is the big-endian image of the words truncated to
//! `ceil(len / 8)` bytes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitStream {
    words: Vec<u64>,
    len: usize,
}

impl std::fmt::Debug for BitStream {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let preview: String = self.iter().take(64).map(|b| if b { '1' } else { '0' }).collect();
        f.debug_struct("BitStream")
            .field("len", &self.len)
            .field("head", &preview)
            .finish()
    }
}

impl BitStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(bits: usize) -> Self {
        Self {
            words: Vec::with_capacity(bits.div_ceil(64)),
            len: 0,
        }
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut s = Self::new();
        for b in bits {
            s.push(b);
        }
        s
    }

    /// Parses an ASCII string of '0'/'1'. Whitespace is skipped.
    pub fn from_ascii(text: &str) -> Result<Self> {
        let mut s = Self::with_capacity(text.len());
        for (offset, c) in text.char_indices() {
            match c {
                '0' => s.push(false),
                '1' => s.push(true),
                c if c.is_whitespace() => {}
                other => {
                    return Err(Error::Format {
                        offset: offset as u64,
                        reason: format!("expected '0' or '1', found {other:?}"),
                    })
                }
            }
        }
        Ok(s)
    }

    /// Takes the first `len` bits of `bytes` (MSB-first within each byte).
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if len > bytes.len() * 8 {
            return Err(Error::InsufficientData {
                required: len,
                got: bytes.len() * 8,
            });
        }
        let mut words = Vec::with_capacity(len.div_ceil(64));
        for chunk in bytes[..len.div_ceil(8)].chunks(8) {
            let mut buf = [0u8; 8];
            buf[..chunk.len()].copy_from_slice(chunk);
            words.push(u64::from_be_bytes(buf));
        }
        let mut s = Self { words, len };
        s.clear_tail();
        Ok(s)
    }

    /// Packs ADC codes, `n_bits` per code, MSB-first, in time order.
    pub fn from_codes<I: IntoIterator<Item = u32>>(codes: I, n_bits: u32) -> Self {
        let iter = codes.into_iter();
        let mut s = Self::with_capacity(iter.size_hint().0 * n_bits as usize);
        for code in iter {
            s.push_bits(u64::from(code), n_bits);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        (self.words[i / 64] >> (63 - i % 64)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        let mask = 1u64 << (63 - i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn push(&mut self, bit: bool) {
        self.push_bits(u64::from(bit), 1);
    }

    /// Appends the low `count` bits of `value`, most significant first.
    #[inline]
    pub fn push_bits(&mut self, value: u64, count: u32) {
        debug_assert!(count <= 64);
        if count == 0 {
            return;
        }
        let value = if count == 64 {
            value
        } else {
            value & ((1u64 << count) - 1)
        };
        let used = (self.len % 64) as u32;
        if used == 0 {
            self.words.push(value << (64 - count));
        } else {
            let free = 64 - used;
            let last = self.words.last_mut().expect("partial word exists");
            if count <= free {
                *last |= value << (free - count);
            } else {
                *last |= value >> (count - free);
                self.words.push(value << (64 - (count - free)));
            }
        }
        self.len += count as usize;
    }

    pub fn extend_from(&mut self, other: &BitStream) {
        if self.len.is_multiple_of(64) {
            self.words.extend_from_slice(&other.words);
            self.len += other.len;
            return;
        }
        let full = other.len / 64;
        for &w in &other.words[..full] {
            self.push_bits(w, 64);
        }
        let rem = (other.len % 64) as u32;
        if rem > 0 {
            self.push_bits(other.words[full] >> (64 - rem), rem);
        }
    }

    /// 64 bits starting at `offset`, MSB-first; positions past the end read as zero.
    #[inline]
    pub fn read_word(&self, offset: usize) -> u64 {
        let w = offset / 64;
        let shift = (offset % 64) as u32;
        let hi = self.words.get(w).copied().unwrap_or(0);
        if shift == 0 {
            hi
        } else {
            let lo = self.words.get(w + 1).copied().unwrap_or(0);
            (hi << shift) | (lo >> (64 - shift))
        }
    }

    pub fn slice(&self, start: usize, len: usize) -> BitStream {
        assert!(start + len <= self.len, "slice out of range");
        let mut out = BitStream::with_capacity(len);
        let mut pos = 0;
        while pos + 64 <= len {
            out.words.push(self.read_word(start + pos));
            pos += 64;
        }
        out.len = pos;
        let rem = (len - pos) as u32;
        if rem > 0 {
            out.push_bits(self.read_word(start + pos) >> (64 - rem), rem);
        }
        out
    }

    pub fn truncate(&mut self, len: usize) {
        if len < self.len {
            self.len = len;
            self.words.truncate(len.div_ceil(64));
            self.clear_tail();
        }
    }

    /// Removes the first `n` bits.
    pub fn drain_front(&mut self, n: usize) {
        let n = n.min(self.len);
        if n == 0 {
            return;
        }
        if n.is_multiple_of(64) {
            self.words.drain(..n / 64);
            self.len -= n;
        } else {
            *self = self.slice(n, self.len - n);
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of ones in bit positions `[start, end)`.
    pub fn count_ones_range(&self, start: usize, end: usize) -> usize {
        assert!(start <= end && end <= self.len);
        let mut total = 0usize;
        let mut pos = start;
        while pos + 64 <= end {
            total += self.read_word(pos).count_ones() as usize;
            pos += 64;
        }
        let rem = end - pos;
        if rem > 0 {
            total += (self.read_word(pos) >> (64 - rem)).count_ones() as usize;
        }
        total
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    pub fn xor(&self, other: &BitStream) -> Result<BitStream> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                got: other.len,
            });
        }
        Ok(BitStream {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a ^ b).collect(),
            len: self.len,
        })
    }

    pub fn and(&self, other: &BitStream) -> Result<BitStream> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                expected: self.len,
                got: other.len,
            });
        }
        Ok(BitStream {
            words: self.words.iter().zip(&other.words).map(|(a, b)| a & b).collect(),
            len: self.len,
        })
    }

    pub fn complement(&self) -> BitStream {
        let mut out = BitStream {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        out.clear_tail();
        out
    }

    /// MSB-first bytes; the final byte is zero-padded when `len % 8 != 0`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.words.len() * 8);
        for w in &self.words {
            out.extend_from_slice(&w.to_be_bytes());
        }
        out.truncate(self.len.div_ceil(8));
        out
    }

    pub fn to_ascii(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    fn clear_tail(&mut self) {
        let rem = self.len % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= !0u64 << (64 - rem);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn codes_pack_msb_first() {
        let s = BitStream::from_codes([0b1010u32, 0b0011], 4);
        assert_eq!(s.to_ascii(), "10100011");
        assert_eq!(s.to_bytes(), vec![0b1010_0011]);
    }

    #[test]
    fn partial_byte_is_zero_padded() {
        let s = BitStream::from_ascii("111").unwrap();
        assert_eq!(s.to_bytes(), vec![0b1110_0000]);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn ascii_rejects_garbage() {
        let err = BitStream::from_ascii("01x").unwrap_err();
        assert!(matches!(err, Error::Format { offset: 2, .. }));
    }

    #[test]
    fn complement_keeps_tail_clear() {
        let s = BitStream::from_ascii("101").unwrap().complement();
        assert_eq!(s.to_ascii(), "010");
        assert_eq!(s.count_ones(), 1);
    }

    fn arb_bits() -> impl Strategy<Value = Vec<bool>> {
        proptest::collection::vec(any::<bool>(), 0..300)
    }

    proptest! {
        #[test]
        fn bytes_round_trip(bits in arb_bits()) {
            let s = BitStream::from_bools(bits.iter().copied());
            let back = BitStream::from_bytes(&s.to_bytes(), s.len()).unwrap();
            prop_assert_eq!(&back, &s);
            prop_assert_eq!(BitStream::from_ascii(&s.to_ascii()).unwrap(), s);
        }

        #[test]
        fn slice_and_extend_agree_with_bools(a in arb_bits(), b in arb_bits(), cut in 0usize..300) {
            let mut s = BitStream::from_bools(a.iter().copied());
            s.extend_from(&BitStream::from_bools(b.iter().copied()));
            let all: Vec<bool> = a.iter().chain(&b).copied().collect();
            prop_assert_eq!(s.iter().collect::<Vec<_>>(), all.clone());
            let cut = cut.min(all.len());
            let tail = s.slice(cut, all.len() - cut);
            prop_assert_eq!(tail.iter().collect::<Vec<_>>(), all[cut..].to_vec());
            prop_assert_eq!(s.count_ones_range(cut, all.len()), all[cut..].iter().filter(|&&x| x).count());
            let mut d = s.clone();
            d.drain_front(cut);
            prop_assert_eq!(d, tail);
        }
    }
}
