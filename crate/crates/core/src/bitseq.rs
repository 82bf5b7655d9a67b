//! Finite 0/1 words over integer intervals.
//!
//! A [`BitWindow`] is the finite stand-in for a point of `{0,1}^Z`: it stores
//! the symbols on `[start, start + len)` with absolute indexing, so the shift
//! only moves `start`. A [`Block`] is a word of at most 63 symbols packed into
//! one machine word; symbol `i` is bit `i` of the code (little-endian), and
//! the textual literal lists symbols from offset 0 leftwards.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Longest block that fits in a code word.
pub const MAX_BLOCK_LEN: usize = 63;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block {
    len: u8,
    code: u64,
}

impl Block {
    pub fn new(len: usize, code: u64) -> Result<Self> {
        if len == 0 || len > MAX_BLOCK_LEN {
            return Err(Error::BlockLength(len));
        }
        if code >> len != 0 {
            return Err(Error::BlockCode { code, len });
        }
        Ok(Block {
            len: len as u8,
            code,
        })
    }

    pub(crate) fn new_unchecked(len: usize, code: u64) -> Self {
        debug_assert!((1..=MAX_BLOCK_LEN).contains(&len) && code >> len == 0);
        Block {
            len: len as u8,
            code,
        }
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Block::new(len, 0)
    }

    pub fn ones(len: usize) -> Result<Self> {
        Block::new(len, mask(len.min(MAX_BLOCK_LEN)))
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn code(&self) -> u64 {
        self.code
    }

    pub fn bit(&self, i: usize) -> bool {
        i < self.len() && (self.code >> i) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.code.count_ones()
    }

    /// Offsets carrying a 1.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.bit(i)).collect()
    }

    /// Sort key that orders blocks like their literals (offset 0 most significant).
    pub fn lex_key(&self) -> u64 {
        self.code.reverse_bits() >> (64 - self.len())
    }

    /// `true` iff `other <= self` coordinatewise.
    pub fn dominates(&self, other: &Block) -> Result<bool> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(other.code & !self.code == 0)
    }

    /// Cyclic rotation: symbol at offset `i` moves to offset `i - r (mod len)`.
    pub fn rotate(&self, r: usize) -> Block {
        let n = self.len();
        let r = r % n;
        if r == 0 {
            return *self;
        }
        let code = ((self.code >> r) | (self.code << (n - r))) & mask(n);
        Block::new_unchecked(n, code)
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Block({self})")
    }
}

impl FromStr for Block {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s.len() > MAX_BLOCK_LEN {
            return Err(Error::Literal(s.to_string()));
        }
        let mut code = 0u64;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => code |= 1 << i,
                _ => return Err(Error::Literal(s.to_string())),
            }
        }
        Block::new(s.len(), code)
    }
}

pub(crate) fn mask(k: usize) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// A finite 0/1 word on the absolute interval `[start, start + len)`.
///
/// Bits past `len` in the last storage word are always zero.
#[derive(Clone, PartialEq, Eq)]
pub struct BitWindow {
    start: i64,
    len: usize,
    words: Arc<Vec<u64>>,
}

impl BitWindow {
    pub fn zeros(start: i64, len: usize) -> Self {
        BitWindow {
            start,
            len,
            words: Arc::new(vec![0; len.div_ceil(64)]),
        }
    }

    pub fn ones(start: i64, len: usize) -> Self {
        let mut words = vec![u64::MAX; len.div_ceil(64)];
        trim_tail(&mut words, len);
        BitWindow {
            start,
            len,
            words: Arc::new(words),
        }
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(start: i64, bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0usize;
        for b in bits {
            if len.is_multiple_of(64) {
                words.push(0);
            }
            if b {
                *words.last_mut().unwrap() |= 1 << (len % 64);
            }
            len += 1;
        }
        BitWindow {
            start,
            len,
            words: Arc::new(words),
        }
    }

    /// Build from packed little-endian words; stray bits past `len` are cleared.
    pub fn from_words(start: i64, len: usize, mut words: Vec<u64>) -> Result<Self> {
        if words.len() != len.div_ceil(64) {
            return Err(Error::Parameter(format!(
                "{} words cannot hold exactly {len} bits",
                words.len()
            )));
        }
        trim_tail(&mut words, len);
        Ok(BitWindow {
            start,
            len,
            words: Arc::new(words),
        })
    }

    pub fn from_fn(start: i64, len: usize, mut f: impl FnMut(i64) -> bool) -> Self {
        BitWindow::from_bits(start, (0..len as i64).map(|i| f(start + i)))
    }

    /// The window of `x_C` (the two-sided repetition of `period`) on `[start, start+len)`.
    pub fn periodic(period: &Block, start: i64, len: usize) -> Self {
        let p = period.len() as i64;
        BitWindow::from_fn(start, len, |pos| period.bit(pos.rem_euclid(p) as usize))
    }

    /// Independent Bernoulli(`p`) symbols, reproducible from `seed`.
    pub fn bernoulli(start: i64, len: usize, p: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!("probability {p} outside [0,1]")));
        }
        if p == 0.0 {
            return Ok(BitWindow::zeros(start, len));
        }
        if p == 1.0 {
            return Ok(BitWindow::ones(start, len));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if p == 0.5 {
            let words = (0..len.div_ceil(64)).map(|_| rng.gen::<u64>()).collect();
            return BitWindow::from_words(start, len, words);
        }
        Ok(BitWindow::from_bits(
            start,
            (0..len).map(|_| rng.gen_bool(p)),
        ))
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// One past the last position.
    pub fn end(&self) -> i64 {
        self.start + self.len as i64
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

    /// Symbol at absolute position `pos`, if inside the window.
    pub fn get(&self, pos: i64) -> Option<bool> {
        let i = self.index(pos)?;
        Some(self.bit_at(i))
    }

    #[inline]
    pub(crate) fn bit_at(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    fn index(&self, pos: i64) -> Option<usize> {
        if pos < self.start || pos >= self.end() {
            None
        } else {
            Some((pos - self.start) as usize)
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.bit_at(i))
    }

    /// Absolute positions carrying a 1.
    pub fn ones_positions(&self) -> impl Iterator<Item = i64> + '_ {
        self.words.iter().enumerate().flat_map(move |(wi, &w)| {
            let base = self.start + 64 * wi as i64;
            BitIter(w).map(move |b| base + b as i64)
        })
    }

    fn check_aligned(&self, other: &BitWindow) -> Result<()> {
        if self.start != other.start || self.len != other.len {
            return Err(Error::Misaligned {
                a_start: self.start,
                a_len: self.len,
                b_start: other.start,
                b_len: other.len,
            });
        }
        Ok(())
    }

    /// The coordinatewise product `M(x, y)`.
    pub fn multiply(&self, other: &BitWindow) -> Result<BitWindow> {
        self.check_aligned(other)?;
        let words = self
            .words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| a & b)
            .collect();
        Ok(BitWindow {
            start: self.start,
            len: self.len,
            words: Arc::new(words),
        })
    }

    /// `true` iff `other <= self` at every position.
    pub fn dominates(&self, other: &BitWindow) -> Result<bool> {
        self.check_aligned(other)?;
        Ok(self
            .words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| b & !a == 0))
    }

    /// `S^j`: the symbol formerly at position `p` now sits at `p - j`.
    pub fn shift(&self, j: i64) -> BitWindow {
        BitWindow {
            start: self.start - j,
            len: self.len,
            words: Arc::clone(&self.words),
        }
    }

    /// Re-anchor the window so it starts at `start`.
    pub fn with_start(&self, start: i64) -> BitWindow {
        self.shift(self.start - start)
    }

    fn check_range(&self, pos: i64, k: usize) -> Result<usize> {
        if pos < self.start || pos + k as i64 > self.end() {
            return Err(Error::OutOfRange {
                pos,
                len: k,
                start: self.start,
                end: self.end(),
            });
        }
        Ok((pos - self.start) as usize)
    }

    /// The block `x(pos) … x(pos + k - 1)`.
    pub fn read_block(&self, pos: i64, k: usize) -> Result<Block> {
        if k == 0 || k > MAX_BLOCK_LEN {
            return Err(Error::BlockLength(k));
        }
        let i = self.check_range(pos, k)?;
        Ok(Block::new_unchecked(k, self.code_at(i, k)))
    }

    /// Unchecked extraction of `k <= 63` bits starting at relative index `i`.
    #[inline]
    pub(crate) fn code_at(&self, i: usize, k: usize) -> u64 {
        let (w, off) = (i / 64, i % 64);
        let mut v = self.words[w] >> off;
        if off + k > 64 {
            v |= self.words[w + 1] << (64 - off);
        }
        v & mask(k)
    }

    pub fn write_block(&mut self, pos: i64, block: &Block) -> Result<()> {
        let k = block.len();
        let i = self.check_range(pos, k)?;
        let words = Arc::make_mut(&mut self.words);
        let (w, off) = (i / 64, i % 64);
        let m = mask(k);
        words[w] = (words[w] & !(m << off)) | (block.code() << off);
        if off + k > 64 {
            let spill = 64 - off;
            words[w + 1] = (words[w + 1] & !(m >> spill)) | (block.code() >> spill);
        }
        Ok(())
    }

    /// The sub-window on `[from, to)`.
    pub fn slice(&self, from: i64, to: i64) -> Result<BitWindow> {
        if to < from {
            return Err(Error::Parameter(format!("empty slice [{from}, {to})")));
        }
        let len = (to - from) as usize;
        let i = self.check_range(from, len)?;
        let mut words = vec![0u64; len.div_ceil(64)];
        let mut done = 0;
        while done < len {
            let k = (len - done).min(63);
            let chunk = self.code_at(i + done, k);
            let (w, off) = (done / 64, done % 64);
            words[w] |= chunk << off;
            if off + k > 64 {
                words[w + 1] |= chunk >> (64 - off);
            }
            done += k;
        }
        Ok(BitWindow {
            start: from,
            len,
            words: Arc::new(words),
        })
    }

    /// Text form, leftmost symbol first.
    pub fn to_literal(&self) -> String {
        self.iter().map(|b| if b { '1' } else { '0' }).collect()
    }

    /// Parse a `0`/`1` literal anchored at `start`.
    pub fn parse_literal(start: i64, s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(c) = s.chars().find(|c| *c != '0' && *c != '1') {
            return Err(Error::Literal(format!("unexpected symbol {c:?}")));
        }
        Ok(BitWindow::from_bits(start, s.chars().map(|c| c == '1')))
    }

    /// Bit-string file: header `# start=<i> length=<N>`, then the symbols, newline-terminated.
    pub fn to_bitstring_file(&self) -> String {
        format!(
            "# start={} length={}\n{}\n",
            self.start,
            self.len,
            self.to_literal()
        )
    }

    pub fn parse_bitstring_file(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::BitFile("empty file".into()))?;
        let rest = header
            .strip_prefix('#')
            .ok_or_else(|| Error::BitFile(format!("missing header: {header:?}")))?;
        let (mut start, mut length) = (None, None);
        for field in rest.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::BitFile(format!("malformed field {field:?}")))?;
            let bad = |_| Error::BitFile(format!("malformed value in {field:?}"));
            match key {
                "start" => start = Some(value.parse::<i64>().map_err(bad)?),
                "length" => length = Some(value.parse::<usize>().map_err(bad)?),
                _ => return Err(Error::BitFile(format!("unknown field {key:?}"))),
            }
        }
        let (start, length) = match (start, length) {
            (Some(s), Some(l)) => (s, l),
            _ => return Err(Error::BitFile("header needs start= and length=".into())),
        };
        let body: String = lines.collect::<Vec<_>>().concat();
        let window =
            BitWindow::parse_literal(start, &body).map_err(|e| Error::BitFile(e.to_string()))?;
        if window.len() != length {
            return Err(Error::BitFile(format!(
                "header says length={length}, body has {} symbols",
                window.len()
            )));
        }
        Ok(window)
    }
}

impl fmt::Debug for BitWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len <= 128 {
            write!(
                f,
                "BitWindow[{}..{})({})",
                self.start,
                self.end(),
                self.to_literal()
            )
        } else {
            write!(
                f,
                "BitWindow[{}..{})({} ones)",
                self.start,
                self.end(),
                self.count_ones()
            )
        }
    }
}

fn trim_tail(words: &mut [u64], len: usize) {
    if !len.is_multiple_of(64) {
        if let Some(last) = words.last_mut() {
            *last &= mask(len % 64);
        }
    }
}

/// Set-bit indices of a word, ascending.
struct BitIter(u64);

impl Iterator for BitIter {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        if self.0 == 0 {
            return None;
        }
        let t = self.0.trailing_zeros();
        self.0 &= self.0 - 1;
        Some(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(s: &str) -> Block {
        s.parse().unwrap()
    }

    #[test]
    fn domination_examples() {
        assert!(b("111").dominates(&b("101")).unwrap());
        assert!(b("101").dominates(&b("101")).unwrap());
        assert!(!b("101").dominates(&b("010")).unwrap());
        assert!(matches!(
            b("10").dominates(&b("101")),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn literal_is_little_endian() {
        let x = b("100");
        assert_eq!(x.code(), 1);
        assert_eq!(b("001").code(), 4);
        assert_eq!(x.to_string(), "100");
        assert!("1021".parse::<Block>().is_err());
        assert!("".parse::<Block>().is_err());
        assert!(Block::new(3, 8).is_err());
        assert!(Block::new(64, 0).is_err());
    }

    #[test]
    fn lex_key_orders_literals() {
        let mut v = [b("101"), b("110"), b("011"), b("001")];
        v.sort_by_key(Block::lex_key);
        let lits: Vec<String> = v.iter().map(|x| x.to_string()).collect();
        assert_eq!(lits, ["001", "011", "101", "110"]);
    }

    #[test]
    fn multiply_examples() {
        let x = BitWindow::parse_literal(0, "1101").unwrap();
        let y = BitWindow::parse_literal(0, "1011").unwrap();
        assert_eq!(x.multiply(&y).unwrap().to_literal(), "1001");
        assert_eq!(x.multiply(&BitWindow::ones(0, 4)).unwrap(), x);
        assert_eq!(
            x.multiply(&BitWindow::zeros(0, 4)).unwrap(),
            BitWindow::zeros(0, 4)
        );
        assert!(x.multiply(&y.shift(1)).is_err());
        assert!(x.multiply(&BitWindow::ones(0, 5)).is_err());
    }

    #[test]
    fn shift_reindexes() {
        let x = BitWindow::parse_literal(0, "0100").unwrap();
        assert_eq!(x.shift(0), x);
        assert_eq!(x.shift(2).shift(3), x.shift(5));
        let s = x.shift(1);
        assert_eq!(s.get(0), Some(true));
        assert_eq!(s.get(-1), Some(false));
        assert_eq!(s.get(3), None);
    }

    #[test]
    fn read_block_example_and_range() {
        let x = BitWindow::parse_literal(0, "010001").unwrap();
        assert_eq!(x.read_block(1, 3).unwrap(), b("100"));
        assert!(x.read_block(4, 3).is_err());
        assert!(x.read_block(-1, 2).is_err());
        assert!(x.read_block(0, 0).is_err());
    }

    #[test]
    fn blocks_across_word_boundaries() {
        let x = BitWindow::from_fn(-7, 300, |p| (p * p + 3 * p) % 7 < 3);
        for pos in [-7, 50, 56, 57, 100, 230] {
            for k in [1, 5, 33, 63] {
                if pos + k as i64 > x.end() {
                    continue;
                }
                let blk = x.read_block(pos, k).unwrap();
                for i in 0..k {
                    assert_eq!(blk.bit(i), x.get(pos + i as i64).unwrap());
                }
            }
        }
    }

    #[test]
    fn write_then_read_roundtrip() {
        let mut x = BitWindow::zeros(10, 200);
        let blk = b("1100101110001011");
        x.write_block(60, &blk).unwrap();
        assert_eq!(x.read_block(60, blk.len()).unwrap(), blk);
        assert_eq!(x.count_ones(), blk.count_ones() as u64);
        let orig = BitWindow::from_fn(0, 130, |p| p % 3 == 0);
        let mut copy = orig.clone();
        let r = orig.read_block(61, 40).unwrap();
        copy.write_block(61, &r).unwrap();
        assert_eq!(copy, orig);
    }

    #[test]
    fn slice_matches_bits() {
        let x = BitWindow::from_fn(-3, 500, |p| p % 5 == 1 || p % 7 == 0);
        let s = x.slice(60, 333).unwrap();
        assert_eq!(s.start(), 60);
        assert_eq!(s.len(), 273);
        for p in 60..333 {
            assert_eq!(s.get(p), x.get(p));
        }
        assert!(x.slice(400, 600).is_err());
    }

    #[test]
    fn bitstring_file_roundtrip() {
        let x = BitWindow::from_fn(-5, 77, |p| p % 4 == 0);
        let text = x.to_bitstring_file();
        assert!(text.starts_with("# start=-5 length=77\n"));
        assert!(text.ends_with('\n'));
        assert_eq!(BitWindow::parse_bitstring_file(&text).unwrap(), x);
        assert!(BitWindow::parse_bitstring_file("# start=0 length=3\n0101\n").is_err());
        assert!(BitWindow::parse_bitstring_file("0101\n").is_err());
    }

    #[test]
    fn periodic_and_rotation() {
        let c = b("101001000");
        let x = BitWindow::periodic(&c, -9, 27);
        assert_eq!(x.read_block(0, 9).unwrap(), c);
        assert_eq!(x.read_block(-9, 9).unwrap(), c);
        assert_eq!(x.read_block(2, 9).unwrap(), c.rotate(2));
    }

    #[test]
    fn bernoulli_is_seeded() {
        let a = BitWindow::bernoulli(0, 1000, 0.3, 9).unwrap();
        let b = BitWindow::bernoulli(0, 1000, 0.3, 9).unwrap();
        assert_eq!(a, b);
        let f = BitWindow::bernoulli(0, 100_000, 0.5, 1)
            .unwrap()
            .count_ones() as f64
            / 1e5;
        assert!((f - 0.5).abs() < 0.01);
        assert!(BitWindow::bernoulli(0, 3, 1.5, 0).is_err());
    }

    #[test]
    fn ones_positions_are_absolute() {
        let x = BitWindow::parse_literal(-2, "1001").unwrap();
        assert_eq!(x.ones_positions().collect::<Vec<_>>(), vec![-2, 1]);
    }
}
