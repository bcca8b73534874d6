//! Bit images in portable bitmap form (1 = black).

use serde::{Deserialize, Serialize};

use crate::bits::BitStream;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PbmFormat {
    /// ASCII
    P1,
    /// packed binary
    #[default]
    P4,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitmapImage {
    pub width: usize,
    pub height: usize,
    /// Row-major pixels.
    pub bits: BitStream,
}

/// The first `width * height` bits, row-major.
pub fn bitmap(bits: &BitStream, width: usize, height: usize) -> Result<BitmapImage> {
    if width == 0 || height == 0 {
        return Err(invalid("bitmap", "width and height must be >= 1"));
    }
    let need = width * height;
    if bits.len() < need {
        return Err(Error::InsufficientData {
            required: need,
            got: bits.len(),
        });
    }
    Ok(BitmapImage {
        width,
        height,
        bits: bits.slice(0, need),
    })
}

pub fn xor_bitmap(a: &BitmapImage, b: &BitmapImage) -> Result<BitmapImage> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(invalid(
            "bitmap",
            format!("{}x{} vs {}x{}", a.width, a.height, b.width, b.height),
        ));
    }
    Ok(BitmapImage {
        width: a.width,
        height: a.height,
        bits: a.bits.xor(&b.bits)?,
    })
}

impl BitmapImage {
    pub fn pixel(&self, x: usize, y: usize) -> bool {
        self.bits.get(y * self.width + x)
    }

    pub fn to_pbm(&self, format: PbmFormat) -> Vec<u8> {
        match format {
            PbmFormat::P1 => {
                let mut s = format!("P1\n{} {}\n", self.width, self.height);
                for y in 0..self.height {
                    let row: Vec<&str> = (0..self.width)
                        .map(|x| if self.pixel(x, y) { "1" } else { "0" })
                        .collect();
                    s.push_str(&row.join(" "));
                    s.push('\n');
                }
                s.into_bytes()
            }
            PbmFormat::P4 => {
                let mut out = format!("P4\n{} {}\n", self.width, self.height).into_bytes();
                for y in 0..self.height {
                    // each row is padded to a whole byte
                    let row = self.bits.slice(y * self.width, self.width);
                    out.extend_from_slice(&row.to_bytes());
                }
                out
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(pattern: &str, w: usize, h: usize) -> BitmapImage {
        bitmap(&BitStream::from_ascii(pattern).unwrap(), w, h).unwrap()
    }

    #[test]
    fn xor_identities() {
        let a = img("101100111", 3, 3);
        let zero = img("000000000", 3, 3);
        assert_eq!(xor_bitmap(&a, &a).unwrap().bits.count_ones(), 0);
        assert_eq!(xor_bitmap(&a, &zero).unwrap(), a);
        let wide = img("101100111000", 4, 3);
        assert!(xor_bitmap(&a, &wide).is_err());
    }

    #[test]
    fn pbm_encodings() {
        let a = img("1011", 2, 2);
        assert_eq!(a.to_pbm(PbmFormat::P1), b"P1\n2 2\n1 0\n1 1\n".to_vec());
        let mut p4 = b"P4\n2 2\n".to_vec();
        p4.extend_from_slice(&[0b1000_0000, 0b1100_0000]);
        assert_eq!(a.to_pbm(PbmFormat::P4), p4);
    }

    #[test]
    fn too_few_bits() {
        assert!(bitmap(&BitStream::zeros(10), 4, 4).is_err());
    }
}
