//! Dense fixed-length bit vectors.
//!
//! Queries, outcome strings, bundle memberships, and pools are all subsets of
//! a small universe, so they share one packed representation. The hot kernels
//! (set-containment probes, word-wise intersection, range popcounts) operate
//! directly on the `u64` words.

use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const WORD_BITS: usize = 64;

/// Subset of `{0, .., len-1}` packed LSB-first into 64-bit words.
///
/// Bits at positions `>= len` are kept zero so that equality, hashing, and
/// word-level scans need no masking.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bitset {
    len: usize,
    words: Vec<u64>,
}

impl Bitset {
    pub fn new(len: usize) -> Self {
        Bitset {
            len,
            words: vec![0; len.div_ceil(WORD_BITS)],
        }
    }

    pub fn from_indices(len: usize, indices: &[u32]) -> Self {
        let mut s = Bitset::new(len);
        for &i in indices {
            s.set(i as usize);
        }
        s
    }

    /// Independently includes each position with probability `p`.
    pub fn bernoulli<R: Rng + ?Sized>(len: usize, p: f64, rng: &mut R) -> Self {
        let mut s = Bitset::new(len);
        for i in 0..len {
            if rng.gen::<f64>() < p {
                s.set(i);
            }
        }
        s
    }

    /// Independently includes each listed position with probability `p`.
    /// Positions not listed stay excluded.
    pub fn bernoulli_subset<R: Rng + ?Sized>(
        len: usize,
        members: &[u32],
        p: f64,
        rng: &mut R,
    ) -> Self {
        let mut s = Bitset::new(len);
        for &i in members {
            if rng.gen::<f64>() < p {
                s.set(i as usize);
            }
        }
        s
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        debug_assert!(i < self.len, "bit {i} out of range for length {}", self.len);
        self.words[i / WORD_BITS] |= 1u64 << (i % WORD_BITS);
    }

    #[inline]
    pub fn unset(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / WORD_BITS] &= !(1u64 << (i % WORD_BITS));
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    #[inline]
    pub fn any(&self) -> bool {
        self.words.iter().any(|&w| w != 0)
    }

    /// Popcount over the half-open bit range `start..end`.
    pub fn count_range(&self, start: usize, end: usize) -> usize {
        assert!(start <= end && end <= self.len);
        if start == end {
            return 0;
        }
        let (wa, wb) = (start / WORD_BITS, (end - 1) / WORD_BITS);
        let lo_mask = !0u64 << (start % WORD_BITS);
        let hi_mask = !0u64 >> (WORD_BITS - 1 - (end - 1) % WORD_BITS);
        if wa == wb {
            return (self.words[wa] & lo_mask & hi_mask).count_ones() as usize;
        }
        let mut total = (self.words[wa] & lo_mask).count_ones() as usize;
        for w in &self.words[wa + 1..wb] {
            total += w.count_ones() as usize;
        }
        total + (self.words[wb] & hi_mask).count_ones() as usize
    }

    /// Copies the bit range `start..end` into a fresh set indexed from zero.
    pub fn extract_range(&self, start: usize, end: usize) -> Bitset {
        assert!(start <= end && end <= self.len);
        let mut out = Bitset::new(end - start);
        for (j, i) in (start..end).enumerate() {
            if self.get(i) {
                out.set(j);
            }
        }
        out
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words
            .iter()
            .enumerate()
            .flat_map(move |(wi, &word)| BitIter { word, base: wi * WORD_BITS })
    }

    /// True when every listed position is set. The probe order is the caller's
    /// order, so callers can put the most selective position first.
    #[inline]
    pub fn contains_all(&self, positions: &[u32]) -> bool {
        positions.iter().all(|&i| self.get(i as usize))
    }

    pub fn is_subset_of(&self, other: &Bitset) -> bool {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    pub fn intersects(&self, other: &Bitset) -> bool {
        assert_eq!(self.len, other.len);
        self.words.iter().zip(&other.words).any(|(a, b)| a & b != 0)
    }

    /// `self & other`, overwriting `self`.
    pub fn intersect_with(&mut self, other: &Bitset) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= b;
        }
    }

    /// `self & !other`, overwriting `self`.
    pub fn subtract_with(&mut self, other: &Bitset) {
        assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
    }

    /// `|self & other|` without materializing the intersection.
    pub fn intersection_count(&self, other: &Bitset) -> usize {
        assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Set difference `self \ other` as a new set.
    pub fn minus(&self, other: &Bitset) -> Bitset {
        assert_eq!(self.len, other.len);
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & !b)
            .collect();
        Bitset { len: self.len, words }
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    /// Packed little-endian bytes, `ceil(len/8)` of them.
    pub fn to_bytes(&self) -> Vec<u8> {
        let nbytes = self.len.div_ceil(8);
        let mut out = Vec::with_capacity(nbytes);
        'outer: for w in &self.words {
            for b in w.to_le_bytes() {
                if out.len() == nbytes {
                    break 'outer;
                }
                out.push(b);
            }
        }
        out
    }

    pub fn from_bytes(len: usize, bytes: &[u8]) -> crate::Result<Self> {
        if bytes.len() != len.div_ceil(8) {
            return Err(crate::Error::Dimension(format!(
                "expected {} packed bytes for {} bits, got {}",
                len.div_ceil(8),
                len,
                bytes.len()
            )));
        }
        let mut s = Bitset::new(len);
        for (i, &b) in bytes.iter().enumerate() {
            s.words[i / 8] |= (b as u64) << (8 * (i % 8));
        }
        // Equality and word scans assume the padding stays zero, so reject
        // input that sets bits beyond the declared length.
        let raw = s.count_ones();
        s.truncate_padding();
        if s.count_ones() != raw {
            return Err(crate::Error::Dimension(
                "padding bits beyond the declared length were set".into(),
            ));
        }
        Ok(s)
    }

    fn truncate_padding(&mut self) {
        let rem = self.len % WORD_BITS;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= !0u64 >> (WORD_BITS - rem);
            }
        }
    }
}

struct BitIter {
    word: u64,
    base: usize,
}

impl Iterator for BitIter {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.word == 0 {
            return None;
        }
        let tz = self.word.trailing_zeros() as usize;
        self.word &= self.word - 1;
        Some(self.base + tz)
    }
}

/// Serialized as `{ "len": n, "ones": [..] }`; sparse and human-readable,
/// which suits layout sidecars. Bulk query data goes through the packed
/// binary transcript format instead.
impl Serialize for Bitset {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            len: usize,
            ones: &'a [u32],
        }
        let ones: Vec<u32> = self.iter_ones().map(|i| i as u32).collect();
        Repr { len: self.len, ones: &ones }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Bitset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            len: usize,
            ones: Vec<u32>,
        }
        let repr = Repr::deserialize(deserializer)?;
        let mut s = Bitset::new(repr.len);
        for i in repr.ones {
            if i as usize >= repr.len {
                return Err(D::Error::custom(format!(
                    "bit index {i} out of range for length {}",
                    repr.len
                )));
            }
            s.set(i as usize);
        }
        Ok(s)
    }
}
