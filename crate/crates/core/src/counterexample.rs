//! Finite unions of periodic orbits and their hereditary closures.
//!
//! For `A = 101001000` and `B = 101000100` every ergodic measure of the
//! closure lives on one of the two pieces, and each piece kills the
//! full-support cylinder of the other. The midpoint `½(ν_A + ν_B)` keeps both
//! cylinders at `1/18`, so it stays away from every ergodic measure.

use serde::Serialize;

use crate::bitseq::{BitWindow, Block};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::language;
use crate::measures::{empirical, BlockSet};

pub const ORBIT_A: &str = "101001000";
pub const ORBIT_B: &str = "101000100";
pub const ORBIT_A_PRIME: &str = "111001000";

/// The orbit of `x_C`, the two-sided repetition of `C`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PeriodicSystem {
    period: Block,
}

impl PeriodicSystem {
    pub fn new(period: Block) -> Self {
        PeriodicSystem { period }
    }

    pub fn parse(literal: &str) -> Result<Self> {
        Ok(PeriodicSystem::new(literal.parse()?))
    }

    pub fn period(&self) -> &Block {
        &self.period
    }

    pub fn period_len(&self) -> usize {
        self.period.len()
    }

    /// Residues mod the period that carry a 1.
    pub fn ones(&self) -> Vec<usize> {
        self.period.support()
    }

    pub fn window(&self, start: i64, len: usize) -> BitWindow {
        BitWindow::periodic(&self.period, start, len)
    }

    /// The length-`n` factor of `x_C` starting at `phase`.
    pub fn factor(&self, phase: usize, n: usize) -> Result<Block> {
        let p = self.period_len();
        let mut code = 0u64;
        for i in 0..n {
            if self.period.bit((phase + i) % p) {
                code |= 1 << i;
            }
        }
        Block::new(n, code)
    }

    /// Frequency of the cylinder "1 at every offset of `pattern`" under `ν_C`.
    pub fn pattern_frequency(&self, pattern: &[usize]) -> f64 {
        let p = self.period_len();
        let hits = (0..p)
            .filter(|&j| pattern.iter().all(|&o| self.period.bit((j + o) % p)))
            .count();
        hits as f64 / p as f64
    }
}

fn factor_codes(systems: &[PeriodicSystem], n: usize) -> Result<Vec<u64>> {
    let mut codes = Vec::new();
    for s in systems {
        for phase in 0..s.period_len() {
            codes.push(s.factor(phase, n)?.code());
        }
    }
    codes.sort_unstable();
    codes.dedup();
    Ok(codes)
}

/// `L_n` of the hereditary closure of the union of the periodic orbits.
pub fn hereditary_language(systems: &[PeriodicSystem], n: usize) -> Result<BlockSet> {
    let codes = factor_codes(systems, n)?;
    let members = language::closure(&codes, n)?;
    Ok(BlockSet::from_sorted_codes(n, members))
}

pub fn hereditary_language_size(systems: &[PeriodicSystem], n: usize) -> Result<u128> {
    language::closure_size(&factor_codes(systems, n)?, n)
}

/// `log₂ |L_n| / n`.
pub fn entropy_estimate(systems: &[PeriodicSystem], n: usize) -> Result<f64> {
    Ok((hereditary_language_size(systems, n)? as f64).log2() / n as f64)
}

/// Where one support pattern sits inside the other periodic support.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Embedding {
    /// `"a-in-b"` or `"b-in-a"`.
    pub direction: String,
    pub phase: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeparationReport {
    pub a: String,
    pub b: String,
    pub separated: bool,
    /// Support of `A` relative to its first 1.
    pub witness_a: Vec<usize>,
    pub witness_b: Vec<usize>,
    /// Frequency of each witness cylinder under `ν_A` and `ν_B`.
    pub witness_a_under_a: f64,
    pub witness_a_under_b: f64,
    pub witness_b_under_a: f64,
    pub witness_b_under_b: f64,
    /// Frequencies of the two witness cylinders under `½(ν_A + ν_B)`.
    pub midpoint: (f64, f64),
    pub embedding: Option<Embedding>,
}

fn relative(support: &[usize]) -> Vec<usize> {
    let base = support.first().copied().unwrap_or(0);
    support.iter().map(|s| s - base).collect()
}

/// First shift `j` with `pattern + j ⊆ support (mod p)`.
fn embeds(pattern: &[usize], support: &[usize], p: usize) -> Option<usize> {
    (0..p).find(|&j| pattern.iter().all(|&o| support.contains(&((o + j) % p))))
}

/// Check that neither full-support pattern of `a`, `b` fits in the other's orbit.
pub fn cylinder_separation(a: &Block, b: &Block) -> Result<SeparationReport> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let p = a.len();
    let (sa, sb) = (a.support(), b.support());
    let (wa, wb) = (relative(&sa), relative(&sb));
    let embedding = match (embeds(&wa, &sb, p), embeds(&wb, &sa, p)) {
        (Some(phase), _) => Some(Embedding {
            direction: "a-in-b".into(),
            phase,
        }),
        (None, Some(phase)) => Some(Embedding {
            direction: "b-in-a".into(),
            phase,
        }),
        (None, None) => None,
    };
    let (pa, pb) = (PeriodicSystem::new(*a), PeriodicSystem::new(*b));
    let (aa, ab) = (pa.pattern_frequency(&wa), pb.pattern_frequency(&wa));
    let (ba, bb) = (pa.pattern_frequency(&wb), pb.pattern_frequency(&wb));
    Ok(SeparationReport {
        a: a.to_string(),
        b: b.to_string(),
        separated: embedding.is_none(),
        witness_a: wa,
        witness_b: wb,
        witness_a_under_a: aa,
        witness_a_under_b: ab,
        witness_b_under_a: ba,
        witness_b_under_b: bb,
        midpoint: ((aa + ab) / 2.0, (ba + bb) / 2.0),
        embedding,
    })
}

/// Fraction of positions `j` in the window with `x(j + o) = 1` for every `o`.
pub fn pattern_frequency(x: &BitWindow, pattern: &[usize]) -> Result<f64> {
    let span = pattern.iter().copied().max().unwrap_or(0) + 1;
    if x.len() < span {
        return Err(Error::WindowTooShort {
            len: x.len(),
            k: span,
        });
    }
    let positions = x.len() - span + 1;
    let hits = (0..positions)
        .filter(|&j| pattern.iter().all(|&o| x.bit_at(j + o)))
        .count();
    Ok(hits as f64 / positions as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DemoRow {
    pub side: Side,
    pub p: f64,
    pub freq_a: f64,
    pub freq_b: f64,
    /// ℓ∞ distance of `(freq_a, freq_b)` to the midpoint pair.
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DemoReport {
    pub midpoint: (f64, f64),
    pub rows: Vec<DemoRow>,
    pub min_distance: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl DemoReport {
    /// CSV with header `side,p,freqA,freqB`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("side,p,freqA,freqB\n");
        for r in &self.rows {
            let side = match r.side {
                Side::A => "A",
                Side::B => "B",
            };
            out.push_str(&format!("{side},{},{},{}\n", r.p, r.freq_a, r.freq_b));
        }
        out
    }
}

/// Tolerance subtracted from the `½·midpoint` pass threshold.
pub const DEMO_TOLERANCE: f64 = 1e-3;

/// Sample `M(x_C, Bernoulli(p))` on both sides and measure both witness cylinders.
pub fn midpoint_unreachable_demo(
    a: &Block,
    b: &Block,
    ps: &[f64],
    window: usize,
    seed: u64,
) -> Result<DemoReport> {
    let sep = cylinder_separation(a, b)?;
    if !sep.separated {
        return Err(Error::Parameter(format!(
            "{a} and {b} are not separated: {:?}",
            sep.embedding
        )));
    }
    let mut rows = Vec::new();
    for (side, block) in [(Side::A, a), (Side::B, b)] {
        let system = PeriodicSystem::new(*block);
        for (i, &p) in ps.iter().enumerate() {
            let tag = (side as u64) << 32 | i as u64;
            let phase = (derive_seed(seed, tag) % block.len() as u64) as i64;
            let x = system.window(phase, window).with_start(0);
            let coin = BitWindow::bernoulli(0, window, p, derive_seed(seed, tag + 1 + (1 << 40)))?;
            let mu = x.multiply(&coin)?;
            let freq_a = pattern_frequency(&mu, &sep.witness_a)?;
            let freq_b = pattern_frequency(&mu, &sep.witness_b)?;
            let distance = (freq_a - sep.midpoint.0)
                .abs()
                .max((freq_b - sep.midpoint.1).abs());
            rows.push(DemoRow {
                side,
                p,
                freq_a,
                freq_b,
                distance,
            });
        }
    }
    let min_distance = rows
        .iter()
        .map(|r| r.distance)
        .fold(f64::INFINITY, f64::min);
    let threshold = 0.5 * sep.midpoint.0.min(sep.midpoint.1) - DEMO_TOLERANCE;
    Ok(DemoReport {
        midpoint: sep.midpoint,
        pass: min_distance >= threshold,
        rows,
        min_distance,
        threshold,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MmeReport {
    pub period: String,
    pub window: usize,
    pub seed: u64,
    pub one_frequency: f64,
    /// `(k, H_k / k)` with `H_k` the Shannon entropy (bits) of the empirical `k`-blocks.
    pub block_entropies: Vec<(usize, f64)>,
    #[serde(skip)]
    pub sample: BitWindow,
}

/// `M(x_{A′}, fair coin)` on `[0, n)` and its block statistics for `k <= max_k`.
pub fn mme_candidate(a_prime: &Block, n: usize, seed: u64, max_k: usize) -> Result<MmeReport> {
    let x = PeriodicSystem::new(*a_prime).window(0, n);
    let coin = BitWindow::bernoulli(0, n, 0.5, seed)?;
    let sample = x.multiply(&coin)?;
    let block_entropies = (1..=max_k)
        .map(|k| Ok((k, empirical(&sample, k)?.entropy_bits() / k as f64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(MmeReport {
        period: a_prime.to_string(),
        window: n,
        seed,
        one_frequency: sample.count_ones() as f64 / n as f64,
        block_entropies,
        sample,
    })
}
