//! Packed bit vectors used for channel-state sequences and sensor masks.
//!
//! Bits are stored LSB-first inside 64-bit words: bit `i` lives in word
//! `i / 64` at position `i % 64`. Unused tail bits of the last word are kept
//! at zero so whole-word comparison and OR-coverage checks stay cheap.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct BitVec {
    len: usize,
    words: Vec<u64>,
}

impl BitVec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.words[i / 64] |= 1 << (i % 64);
            }
        }
        v
    }

    /// Parse an ASCII string of '0'/'1' characters.
    pub fn from_str01(s: &str) -> Result<Self> {
        let mut v = Self::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.words[i / 64] |= 1 << (i % 64),
                other => {
                    return Err(Error::Argument(format!(
                        "invalid character {other:?} in bit string (expected '0' or '1')"
                    )))
                }
            }
        }
        Ok(v)
    }

    /// Render as an ASCII string of '0'/'1' characters, index 0 first.
    pub fn to_string01(&self) -> String {
        (0..self.len)
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        if value {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn push(&mut self, value: bool) {
        if self.len % 64 == 0 {
            self.words.push(0);
        }
        if value {
            self.words[self.len / 64] |= 1 << (self.len % 64);
        }
        self.len += 1;
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn or_assign(&mut self, other: &BitVec) {
        assert_eq!(self.len, other.len, "length mismatch in or_assign");
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
    }

    /// Whole-word all-ones test; no popcount needed.
    pub fn is_all_ones(&self) -> bool {
        if self.len == 0 {
            return false;
        }
        let full = self.len / 64;
        if self.words[..full].iter().any(|&w| w != u64::MAX) {
            return false;
        }
        let tail = self.len % 64;
        tail == 0 || self.words[full] == (1u64 << tail) - 1
    }

    /// True when `self | other` covers every position.
    pub fn or_covers_all(&self, other: &BitVec) -> bool {
        debug_assert_eq!(self.len, other.len);
        if self.len == 0 {
            return false;
        }
        let full = self.len / 64;
        for i in 0..full {
            if self.words[i] | other.words[i] != u64::MAX {
                return false;
            }
        }
        let tail = self.len % 64;
        tail == 0 || (self.words[full] | other.words[full]) == (1u64 << tail) - 1
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Pack into bytes, LSB-first within each byte; tail padded with zeros.
    pub fn to_packed_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.len.div_ceil(8)];
        for i in 0..self.len {
            if self.get(i) {
                out[i / 8] |= 1 << (i % 8);
            }
        }
        out
    }

    pub fn from_packed_bytes(bytes: &[u8], len: usize) -> Result<Self> {
        if bytes.len() < len.div_ceil(8) {
            return Err(Error::MalformedCode(format!(
                "packed payload too short: {} bytes for {} bits",
                bytes.len(),
                len
            )));
        }
        let mut v = Self::zeros(len);
        for i in 0..len {
            if (bytes[i / 8] >> (i % 8)) & 1 == 1 {
                v.words[i / 64] |= 1 << (i % 64);
            }
        }
        Ok(v)
    }
}

/// Uniform random bits.
pub fn random_bits(len: usize, rng: &mut impl rand::Rng) -> BitVec {
    let mut v = BitVec::zeros(len);
    for w in v.words.iter_mut() {
        *w = rng.random();
    }
    let tail = len % 64;
    if tail != 0 {
        let last = v.words.len() - 1;
        v.words[last] &= (1u64 << tail) - 1;
    }
    v
}

/// Append-only cursor writing bit fields into a [`BitVec`].
#[derive(Default)]
pub struct BitWriter {
    bits: BitVec,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push_bit(&mut self, b: bool) {
        self.bits.push(b);
    }

    /// Append `width` bits of `value`, most significant bit first.
    pub fn push_field(&mut self, value: u64, width: usize) {
        debug_assert!(width == 64 || value < (1u64 << width));
        for k in (0..width).rev() {
            self.bits.push((value >> k) & 1 == 1);
        }
    }

    pub fn finish(self) -> BitVec {
        self.bits
    }
}

/// Forward-only cursor reading bit fields out of a [`BitVec`].
pub struct BitReader<'a> {
    bits: &'a BitVec,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a BitVec) -> Self {
        Self { bits, pos: 0 }
    }

    pub fn read_bit(&mut self) -> Option<bool> {
        if self.pos >= self.bits.len() {
            return None;
        }
        let b = self.bits.get(self.pos);
        self.pos += 1;
        Some(b)
    }

    /// Read a `width`-bit field, most significant bit first.
    pub fn read_field(&mut self, width: usize) -> Option<u64> {
        if self.pos + width > self.bits.len() {
            return None;
        }
        let mut v = 0u64;
        for _ in 0..width {
            v = (v << 1) | self.bits.get(self.pos) as u64;
            self.pos += 1;
        }
        Some(v)
    }

    pub fn position(&self) -> usize {
        self.pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn push_get_roundtrip() {
        let mut v = BitVec::new();
        let pattern = [true, false, false, true, true, false, true];
        for &b in &pattern {
            v.push(b);
        }
        assert_eq!(v.len(), 7);
        for (i, &b) in pattern.iter().enumerate() {
            assert_eq!(v.get(i), b);
        }
        assert_eq!(v.to_string01(), "1001101");
    }

    #[test]
    fn all_ones_detection() {
        let mut v = BitVec::zeros(65);
        assert!(!v.is_all_ones());
        for i in 0..65 {
            v.set(i, true);
        }
        assert!(v.is_all_ones());
        v.set(64, false);
        assert!(!v.is_all_ones());
        assert!(!BitVec::new().is_all_ones());
    }

    #[test]
    fn or_covers() {
        let a = BitVec::from_str01("1100").unwrap();
        let b = BitVec::from_str01("0011").unwrap();
        let c = BitVec::from_str01("1010").unwrap();
        assert!(a.or_covers_all(&b));
        assert!(!a.or_covers_all(&c));
    }

    #[test]
    fn packed_bytes_roundtrip() {
        let v = BitVec::from_str01("1001100110001").unwrap();
        let bytes = v.to_packed_bytes();
        assert_eq!(bytes, vec![0x99, 0x11]);
        let back = BitVec::from_packed_bytes(&bytes, 13).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn field_writer_reader() {
        let mut w = BitWriter::new();
        w.push_bit(true);
        w.push_field(3, 4);
        w.push_field(127, 7);
        let bits = w.finish();
        assert_eq!(bits.len(), 12);
        let mut r = BitReader::new(&bits);
        assert_eq!(r.read_bit(), Some(true));
        assert_eq!(r.read_field(4), Some(3));
        assert_eq!(r.read_field(7), Some(127));
        assert_eq!(r.read_field(1), None);
    }
}
