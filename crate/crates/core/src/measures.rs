//! Empirical block measures, total variation, and the good-block sets used by
//! the midpoint construction.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitseq::{BitWindow, Block, MAX_BLOCK_LEN};
use crate::error::{Error, Result};
use crate::language;

/// Tolerance on `Σ weights = 1`.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Largest `k` for which occurrence counting uses a dense table.
const DENSE_COUNT_MAX_K: usize = 16;

fn check_len(k: usize) -> Result<()> {
    if k == 0 || k > MAX_BLOCK_LEN {
        return Err(Error::BlockLength(k));
    }
    Ok(())
}

/// Exact occurrence counts of `k`-blocks; merging two scans is exact.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BlockCounts {
    k: usize,
    counts: HashMap<u64, u64>,
    total: u64,
}

impl BlockCounts {
    pub fn new(k: usize) -> Result<Self> {
        check_len(k)?;
        Ok(BlockCounts {
            k,
            counts: HashMap::new(),
            total: 0,
        })
    }

    /// Sliding, non-circular scan of `x`.
    pub fn scan(x: &BitWindow, k: usize) -> Result<Self> {
        check_len(k)?;
        if x.len() < k {
            return Err(Error::WindowTooShort { len: x.len(), k });
        }
        let positions = x.len() - k + 1;
        let counts = if k <= DENSE_COUNT_MAX_K {
            let mut dense = vec![0u64; 1 << k];
            for i in 0..positions {
                dense[x.code_at(i, k) as usize] += 1;
            }
            dense
                .into_iter()
                .enumerate()
                .filter(|(_, c)| *c > 0)
                .map(|(code, c)| (code as u64, c))
                .collect()
        } else {
            let mut sparse = HashMap::new();
            for i in 0..positions {
                *sparse.entry(x.code_at(i, k)).or_insert(0) += 1;
            }
            sparse
        };
        Ok(BlockCounts {
            k,
            counts,
            total: positions as u64,
        })
    }

    pub fn add(&mut self, block: &Block, n: u64) -> Result<()> {
        if block.len() != self.k {
            return Err(Error::LengthMismatch {
                left: self.k,
                right: block.len(),
            });
        }
        *self.counts.entry(block.code()).or_insert(0) += n;
        self.total += n;
        Ok(())
    }

    pub fn merge(&mut self, other: &BlockCounts) -> Result<()> {
        if other.k != self.k {
            return Err(Error::LengthMismatch {
                left: self.k,
                right: other.k,
            });
        }
        for (&code, &c) in &other.counts {
            *self.counts.entry(code).or_insert(0) += c;
        }
        self.total += other.total;
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, block: &Block) -> u64 {
        if block.len() != self.k {
            return 0;
        }
        self.counts.get(&block.code()).copied().unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Block, u64)> + '_ {
        let k = self.k;
        self.counts
            .iter()
            .map(move |(&code, &c)| (Block::new_unchecked(k, code), c))
    }

    pub fn to_measure(&self) -> Result<BlockMeasure> {
        if self.total == 0 {
            return Err(Error::Parameter("no samples to normalize".into()));
        }
        let t = self.total as f64;
        Ok(BlockMeasure {
            k: self.k,
            weights: self
                .counts
                .iter()
                .map(|(&code, &c)| (code, c as f64 / t))
                .collect(),
            sample_count: self.total,
        })
    }
}

/// A probability vector on `{0,1}^k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BlockMeasureRepr", into = "BlockMeasureRepr")]
pub struct BlockMeasure {
    k: usize,
    weights: BTreeMap<u64, f64>,
    sample_count: u64,
}

impl BlockMeasure {
    /// Build from explicit weights; zero weights are dropped.
    pub fn from_weights<I>(k: usize, weights: I, sample_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = (Block, f64)>,
    {
        check_len(k)?;
        let mut map = BTreeMap::new();
        for (b, w) in weights {
            if b.len() != k {
                return Err(Error::LengthMismatch {
                    left: k,
                    right: b.len(),
                });
            }
            if w.is_nan() || w < 0.0 || !w.is_finite() {
                return Err(Error::Parameter(format!("weight {w} for {b} is not >= 0")));
            }
            if w > 0.0 {
                *map.entry(b.code()).or_insert(0.0) += w;
            }
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::Parameter(format!("weights sum to {total}, not 1")));
        }
        Ok(BlockMeasure {
            k,
            weights: map,
            sample_count,
        })
    }

    /// The point mass at `block`.
    pub fn dirac(block: Block) -> Self {
        BlockMeasure {
            k: block.len(),
            weights: BTreeMap::from([(block.code(), 1.0)]),
            sample_count: 0,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sample_count(&self) -> u64 {
        self.sample_count
    }

    pub fn weight(&self, block: &Block) -> f64 {
        if block.len() != self.k {
            return 0.0;
        }
        self.weights.get(&block.code()).copied().unwrap_or(0.0)
    }

    /// `(block, weight)` in ascending code order.
    pub fn iter(&self) -> impl Iterator<Item = (Block, f64)> + '_ {
        let k = self.k;
        self.weights
            .iter()
            .map(move |(&code, &w)| (Block::new_unchecked(k, code), w))
    }

    pub fn support_size(&self) -> usize {
        self.weights.len()
    }

    /// Shannon entropy in bits.
    pub fn entropy_bits(&self) -> f64 {
        self.weights
            .values()
            .filter(|w| **w > 0.0)
            .map(|w| -w * w.log2())
            .sum()
    }

    /// Frequency of blocks whose symbol at `offset` is 1.
    pub fn marginal_one(&self, offset: usize) -> f64 {
        self.iter()
            .filter(|(b, _)| b.bit(offset))
            .map(|(_, w)| w)
            .sum()
    }
}

/// Sliding-window frequencies of the `k`-factors of `x`.
pub fn empirical(x: &BitWindow, k: usize) -> Result<BlockMeasure> {
    BlockCounts::scan(x, k)?.to_measure()
}

/// `½ Σ_u |p(u) - q(u)|`.
pub fn tv_distance(p: &BlockMeasure, q: &BlockMeasure) -> Result<f64> {
    if p.k != q.k {
        return Err(Error::LengthMismatch {
            left: p.k,
            right: q.k,
        });
    }
    let mut sum = 0.0;
    for (code, &a) in &p.weights {
        sum += (a - q.weights.get(code).copied().unwrap_or(0.0)).abs();
    }
    for (code, &b) in &q.weights {
        if !p.weights.contains_key(code) {
            sum += b;
        }
    }
    Ok((0.5 * sum).min(1.0))
}

/// `t·p + (1 - t)·q`.
pub fn mix(p: &BlockMeasure, q: &BlockMeasure, t: f64) -> Result<BlockMeasure> {
    if p.k != q.k {
        return Err(Error::LengthMismatch {
            left: p.k,
            right: q.k,
        });
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Parameter(format!("mixing weight {t} outside [0,1]")));
    }
    let mut weights: BTreeMap<u64, f64> = BTreeMap::new();
    for (&c, &w) in &p.weights {
        *weights.entry(c).or_insert(0.0) += t * w;
    }
    for (&c, &w) in &q.weights {
        *weights.entry(c).or_insert(0.0) += (1.0 - t) * w;
    }
    weights.retain(|_, w| *w > 0.0);
    Ok(BlockMeasure {
        k: p.k,
        weights,
        sample_count: 0,
    })
}

#[derive(Serialize, Deserialize)]
struct BlockMeasureRepr {
    k: usize,
    weights: BTreeMap<String, f64>,
    samples: u64,
}

impl From<BlockMeasure> for BlockMeasureRepr {
    fn from(m: BlockMeasure) -> Self {
        BlockMeasureRepr {
            k: m.k,
            weights: m.iter().map(|(b, w)| (b.to_string(), w)).collect(),
            samples: m.sample_count,
        }
    }
}

impl TryFrom<BlockMeasureRepr> for BlockMeasure {
    type Error = Error;

    fn try_from(r: BlockMeasureRepr) -> Result<Self> {
        let weights = r
            .weights
            .iter()
            .map(|(lit, &w)| Ok((lit.parse::<Block>()?, w)))
            .collect::<Result<Vec<_>>>()?;
        BlockMeasure::from_weights(r.k, weights, r.samples)
    }
}

/// A set of blocks of one length, kept sorted by code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockSet {
    n: usize,
    members: Vec<u64>,
}

impl BlockSet {
    pub fn empty(n: usize) -> Result<Self> {
        check_len(n)?;
        Ok(BlockSet {
            n,
            members: Vec::new(),
        })
    }

    pub fn new<I: IntoIterator<Item = Block>>(n: usize, blocks: I) -> Result<Self> {
        check_len(n)?;
        let mut members = Vec::new();
        for b in blocks {
            if b.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: b.len(),
                });
            }
            members.push(b.code());
        }
        members.sort_unstable();
        members.dedup();
        Ok(BlockSet { n, members })
    }

    pub(crate) fn from_sorted_codes(n: usize, members: Vec<u64>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        BlockSet { n, members }
    }

    /// The distinct `n`-factors occurring in `x`.
    pub fn language_of(x: &BitWindow, n: usize) -> Result<Self> {
        Ok(BlockSet {
            n,
            members: language::factors(x, n)?,
        })
    }

    /// One literal per line; blank lines and `#` comments are skipped.
    pub fn parse_lines(text: &str) -> Result<Self> {
        let blocks = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::parse::<Block>)
            .collect::<Result<Vec<_>>>()?;
        let n = blocks
            .first()
            .map(Block::len)
            .ok_or_else(|| Error::Parse("block list is empty".into()))?;
        BlockSet::new(n, blocks)
    }

    pub fn block_len(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, b: &Block) -> bool {
        b.len() == self.n && self.contains_code(b.code())
    }

    pub(crate) fn contains_code(&self, code: u64) -> bool {
        self.members.binary_search(&code).is_ok()
    }

    /// Members in ascending code order.
    pub fn iter(&self) -> impl Iterator<Item = Block> + '_ {
        let n = self.n;
        self.members
            .iter()
            .map(move |&c| Block::new_unchecked(n, c))
    }

    pub fn is_subset(&self, other: &BlockSet) -> bool {
        self.n == other.n && self.members.iter().all(|&c| other.contains_code(c))
    }

    /// `true` iff some member `w` satisfies `w <= u`.
    pub fn dominated_by(&self, u: u64) -> bool {
        // w <= u coordinatewise implies code(w) <= code(u)
        let end = self.members.partition_point(|&w| w <= u);
        self.members[..end].iter().any(|&w| w & !u == 0)
    }

    /// Fraction of `n`-block occurrences in `x` that land in the set.
    pub fn mass_in(&self, x: &BitWindow) -> Result<f64> {
        if x.len() < self.n {
            return Err(Error::WindowTooShort {
                len: x.len(),
                k: self.n,
            });
        }
        let positions = x.len() - self.n + 1;
        let hits = (0..positions)
            .filter(|&i| self.contains_code(x.code_at(i, self.n)))
            .count();
        Ok(hits as f64 / positions as f64)
    }

    pub fn to_lines(&self) -> String {
        self.iter().map(|b| format!("{b}\n")).collect()
    }
}

/// Result of [`select_good_blocks`].
#[derive(Clone, Debug)]
pub struct GoodBlocks {
    pub set: BlockSet,
    /// Fraction of `n0`-block occurrences of the scanned window in `set`.
    pub mass: f64,
}

/// TV distance between the internal `k0`-distribution of an `n0`-block and `target`.
fn internal_tv(code: u64, n0: usize, k0: usize, target: &BlockMeasure) -> f64 {
    let m = n0 - k0 + 1;
    let mut local: Vec<(u64, u32)> = Vec::with_capacity(m);
    let km = crate::bitseq::mask(k0);
    for i in 0..m {
        let c = (code >> i) & km;
        match local.iter_mut().find(|(x, _)| *x == c) {
            Some(e) => e.1 += 1,
            None => local.push((c, 1)),
        }
    }
    let mut sum = 0.0;
    let mut covered = 0.0;
    for (c, cnt) in local {
        let t = target.weights.get(&c).copied().unwrap_or(0.0);
        covered += t;
        sum += (cnt as f64 / m as f64 - t).abs();
    }
    0.5 * (sum + (1.0 - covered).max(0.0))
}

/// All `n0`-blocks of `x` whose internal `k0`-distribution is within `eps`
/// (TV) of `target`, with their occurrence mass in `x`.
pub fn select_good_blocks(
    x: &BitWindow,
    n0: usize,
    k0: usize,
    target: &BlockMeasure,
    eps: f64,
) -> Result<GoodBlocks> {
    check_len(n0)?;
    if k0 > n0 {
        return Err(Error::Parameter(format!("k0 = {k0} exceeds n0 = {n0}")));
    }
    if target.k != k0 {
        return Err(Error::LengthMismatch {
            left: k0,
            right: target.k,
        });
    }
    let counts = BlockCounts::scan(x, n0)?;
    let mut accepted: Vec<(u64, u64)> = counts
        .counts
        .par_iter()
        .filter(|(&code, _)| internal_tv(code, n0, k0, target) <= eps)
        .map(|(&code, &c)| (code, c))
        .collect();
    accepted.sort_unstable();
    let hits: u64 = accepted.iter().map(|(_, c)| c).sum();
    Ok(GoodBlocks {
        set: BlockSet::from_sorted_codes(n0, accepted.into_iter().map(|(c, _)| c).collect()),
        mass: hits as f64 / counts.total as f64,
    })
}

/// `{u ∈ L : u dominates some w1 ∈ F1 and some w2 ∈ F2}`.
pub fn select_g(l: &BlockSet, f1: &BlockSet, f2: &BlockSet) -> Result<BlockSet> {
    for f in [f1, f2] {
        if f.n != l.n {
            return Err(Error::LengthMismatch {
                left: l.n,
                right: f.n,
            });
        }
    }
    let members: Vec<u64> = l
        .members
        .par_iter()
        .copied()
        .filter(|&u| f1.dominated_by(u) && f2.dominated_by(u))
        .collect();
    Ok(BlockSet::from_sorted_codes(l.n, members))
}

/// The member of `f` dominated by `u` whose literal is lexicographically smallest.
pub fn selector_r(u: &Block, f: &BlockSet) -> Result<Block> {
    if u.len() != f.n {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: f.n,
        });
    }
    let uc = u.code();
    let end = f.members.partition_point(|&w| w <= uc);
    f.members[..end]
        .iter()
        .filter(|&&w| w & !uc == 0)
        .map(|&w| Block::new_unchecked(f.n, w))
        .min_by_key(Block::lex_key)
        .ok_or_else(|| Error::NoDominatedMember(u.to_string()))
}

/// Outcome of [`mass_lower_bound_check`].
#[derive(Clone, Debug, Serialize)]
pub struct MassReport {
    pub n: usize,
    /// Distinct blocks of the scanned language dominating a member of `A`.
    pub dominating_blocks: usize,
    pub language_blocks: usize,
    pub mass: f64,
    pub delta: f64,
    pub pass: bool,
}

/// Empirical `ν`-mass of `C_n = {u ∈ L_n(x_nu) : u >= w for some w ∈ A}`,
/// checked against `1 - delta`.
pub fn mass_lower_bound_check(x_nu: &BitWindow, a: &BlockSet, delta: f64) -> Result<MassReport> {
    let n = a.n;
    let lang = BlockSet::language_of(x_nu, n)?;
    let c_n: Vec<u64> = lang
        .members
        .iter()
        .copied()
        .filter(|&u| a.dominated_by(u))
        .collect();
    let c_n = BlockSet::from_sorted_codes(n, c_n);
    let mass = c_n.mass_in(x_nu)?;
    Ok(MassReport {
        n,
        dominating_blocks: c_n.len(),
        language_blocks: lang.len(),
        mass,
        delta,
        pass: mass > 1.0 - delta,
    })
}
