use crate::error::{Error, Result};

/// Packed bit array, LSB-first within each byte; trailing padding bits of
/// the last byte are kept at zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitArray {
    len: usize,
    bytes: Vec<u8>,
}

impl BitArray {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            bytes: vec![0; byte_len(len)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut a = Self {
            len,
            bytes: vec![0xff; byte_len(len)],
        };
        a.clear_padding();
        a
    }

    /// Wrap packed bytes holding `len` bits; padding bits are cleared.
    pub fn from_bytes(bytes: Vec<u8>, len: usize) -> Result<Self> {
        if bytes.len() != byte_len(len) {
            return Err(Error::LengthMismatch {
                expected: byte_len(len) * 8,
                actual: bytes.len() * 8,
            });
        }
        let mut a = Self { len, bytes };
        a.clear_padding();
        Ok(a)
    }

    fn clear_padding(&mut self) {
        let rem = self.len % 8;
        if rem != 0 {
            if let Some(last) = self.bytes.last_mut() {
                *last &= (1u8 << rem) - 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        self.bytes[i / 8] >> (i % 8) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range {}", self.len);
        if value {
            self.bytes[i / 8] |= 1 << (i % 8);
        } else {
            self.bytes[i / 8] &= !(1 << (i % 8));
        }
    }

    pub fn flip(&mut self, i: usize) {
        let v = self.get(i);
        self.set(i, !v);
    }

    pub fn count_ones(&self) -> u64 {
        self.bytes.iter().map(|b| u64::from(b.count_ones())).sum()
    }

    /// Indices `i` where `(self[i] ^ other[i]) & mask[i]` is set.
    pub fn masked_diff(&self, other: &BitArray, mask: &BitArray) -> Result<Vec<usize>> {
        for a in [other, mask] {
            if a.len != self.len {
                return Err(Error::LengthMismatch {
                    expected: self.len,
                    actual: a.len,
                });
            }
        }
        let mut out = Vec::new();
        for (k, ((&x, &y), &m)) in self
            .bytes
            .iter()
            .zip(&other.bytes)
            .zip(&mask.bytes)
            .enumerate()
        {
            let mut d = (x ^ y) & m;
            while d != 0 {
                let tz = d.trailing_zeros() as usize;
                out.push(k * 8 + tz);
                d &= d - 1;
            }
        }
        Ok(out)
    }
}

pub(crate) fn byte_len(bits: usize) -> usize {
    bits.div_ceil(8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn padding_is_cleared() {
        let a = BitArray::ones(10);
        assert_eq!(a.as_bytes(), &[0xff, 0x03]);
        assert_eq!(a.count_ones(), 10);
        let b = BitArray::from_bytes(vec![0, 0xff], 12).unwrap();
        assert_eq!(b.count_ones(), 4);
    }

    #[test]
    fn masked_diff_finds_flips() {
        let golden = BitArray::zeros(20);
        let mut rb = golden.clone();
        rb.flip(3);
        rb.flip(17);
        let mut mask = BitArray::ones(20);
        assert_eq!(golden.masked_diff(&rb, &mask).unwrap(), vec![3, 17]);
        mask.set(17, false);
        assert_eq!(golden.masked_diff(&rb, &mask).unwrap(), vec![3]);
        assert!(golden.masked_diff(&BitArray::zeros(21), &mask).is_err());
    }
}
