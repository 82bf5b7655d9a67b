//! B-free sets: the indicator `η = 1_{F_B}`, densities and admissibility.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitseq::BitWindow;
use crate::error::{Error, Result};
use crate::language;

/// Positions handled per sieve segment; a multiple of 64.
const SEGMENT_BITS: u64 = 1 << 18;

/// Largest truncation accepted by the inclusion–exclusion routines.
const MAX_INCLUSION_EXCLUSION: usize = 24;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    Explicit,
    SquaresOfPrimes { limit: u64 },
    PrimitiveAbundant { limit: u64 },
}

/// A finite, sorted, duplicate-free set of moduli.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BSet {
    moduli: Vec<u64>,
    provenance: Provenance,
}

impl BSet {
    pub fn explicit<I: IntoIterator<Item = u64>>(moduli: I) -> Result<Self> {
        let mut moduli: Vec<u64> = moduli.into_iter().collect();
        if moduli.contains(&0) {
            return Err(Error::Parameter("moduli must be >= 1".into()));
        }
        moduli.sort_unstable();
        moduli.dedup();
        Ok(BSet {
            moduli,
            provenance: Provenance::Explicit,
        })
    }

    /// `{p² : p prime, p <= limit}`.
    pub fn squares_of_primes(limit: u64) -> Self {
        BSet {
            moduli: primes_up_to(limit).into_iter().map(|p| p * p).collect(),
            provenance: Provenance::SquaresOfPrimes { limit },
        }
    }

    /// Parse `"2,3,25"`, `"squares-of-primes"` or `"primitive-abundant"`;
    /// the generated families need `limit`.
    pub fn parse(spec: &str, limit: Option<u64>) -> Result<Self> {
        let spec = spec.trim();
        let need_limit =
            || limit.ok_or_else(|| Error::Parse(format!("--bset {spec} requires --limit")));
        match spec {
            "squares-of-primes" => Ok(BSet::squares_of_primes(need_limit()?)),
            "primitive-abundant" => Ok(generate_primitive_abundant(need_limit()?)),
            "" | "empty" => BSet::explicit([]),
            list => {
                let moduli = list
                    .split(',')
                    .map(|t| {
                        t.trim()
                            .parse::<u64>()
                            .map_err(|_| Error::Parse(format!("bad modulus {t:?} in {list:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                BSet::explicit(moduli)
            }
        }
    }

    pub fn moduli(&self) -> &[u64] {
        &self.moduli
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn is_empty(&self) -> bool {
        self.moduli.is_empty()
    }

    pub fn len(&self) -> usize {
        self.moduli.len()
    }

    /// Drop moduli that are multiples of a smaller modulus; `F_B` is unchanged.
    pub fn primitive_part(&self) -> BSet {
        let mut kept: Vec<u64> = Vec::new();
        for &b in &self.moduli {
            if !kept.iter().any(|&a| b % a == 0) {
                kept.push(b);
            }
        }
        BSet {
            moduli: kept,
            provenance: self.provenance.clone(),
        }
    }

    /// The moduli `>= k`.
    pub fn tail(&self, k: u64) -> BSet {
        BSet {
            moduli: self.moduli.iter().copied().filter(|&b| b >= k).collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// lcm of the moduli, if it does not exceed `cap`.
    pub fn lcm_up_to(&self, cap: u64) -> Option<u64> {
        let mut l = 1u64;
        for &b in &self.moduli {
            l = l.checked_mul(b / l.gcd(&b))?;
            if l > cap {
                return None;
            }
        }
        Some(l)
    }

    /// `η` on `[0, n)`: bit 1 at `m` iff no modulus divides `m`.
    pub fn sieve_window(&self, n: u64) -> BitWindow {
        let moduli = self.primitive_part().moduli;
        let segments = n.div_ceil(SEGMENT_BITS);
        let words: Vec<u64> = (0..segments)
            .into_par_iter()
            .flat_map_iter(|s| {
                let lo = s * SEGMENT_BITS;
                sieve_segment(&moduli, lo, (lo + SEGMENT_BITS).min(n))
            })
            .collect();
        BitWindow::from_words(0, n as usize, words).expect("segment sizes are word-aligned")
    }

    /// Number of B-free integers in `[0, n)` without materializing the window.
    pub fn count_free(&self, n: u64) -> u64 {
        let moduli = self.primitive_part().moduli;
        (0..n.div_ceil(SEGMENT_BITS))
            .into_par_iter()
            .map(|s| {
                let lo = s * SEGMENT_BITS;
                sieve_segment(&moduli, lo, (lo + SEGMENT_BITS).min(n))
                    .iter()
                    .map(|w| w.count_ones() as u64)
                    .sum::<u64>()
            })
            .sum()
    }

    /// Cesàro density of `F_B` over `[0, n)`.
    pub fn upper_density(&self, n: u64) -> Result<DensityEstimate> {
        if n == 0 {
            return Err(Error::Parameter("window length must be >= 1".into()));
        }
        let count = self.count_free(n);
        Ok(DensityEstimate {
            value: count as f64 / n as f64,
            window: Some(n),
            count: Some(count),
            method: DensityMethod::SieveCount,
        })
    }

    /// Density over `[0, n)` of integers divisible by some modulus `>= k`.
    pub fn tail_density(&self, k: u64, n: u64) -> Result<DensityEstimate> {
        if n == 0 {
            return Err(Error::Parameter("window length must be >= 1".into()));
        }
        let tail = self.tail(k);
        let count = if tail.is_empty() {
            0
        } else {
            n - tail.count_free(n)
        };
        Ok(DensityEstimate {
            value: count as f64 / n as f64,
            window: Some(n),
            count: Some(count),
            method: DensityMethod::SieveCount,
        })
    }

    /// Exact B-free count on `[0, n)` by inclusion–exclusion over lcms.
    pub fn inclusion_exclusion_count(&self, n: u64) -> Result<u64> {
        let moduli = self.primitive_part().moduli;
        check_ie_size(moduli.len())?;
        let mut total: i128 = 0;
        for_each_lcm(&moduli, &mut |l, odd| {
            // multiples of l in [0, n): ceil(n / l)
            let c = match l {
                Some(l) => n.div_ceil(l) as i128,
                None => n.min(1) as i128,
            };
            total += if odd { -c } else { c };
        });
        Ok(total as u64)
    }

    /// The exact density `Σ_S (-1)^|S| / lcm(S)`.
    pub fn inclusion_exclusion_density(&self) -> Result<DensityEstimate> {
        let moduli = self.primitive_part().moduli;
        check_ie_size(moduli.len())?;
        let mut sum = BigRational::zero();
        let mut lcms: Vec<(BigInt, bool)> = vec![(BigInt::from(1), false)];
        for &b in &moduli {
            let b = BigInt::from(b);
            let extra: Vec<_> = lcms.iter().map(|(l, odd)| (l.lcm(&b), !odd)).collect();
            lcms.extend(extra);
        }
        for (l, odd) in lcms {
            let term = BigRational::new(BigInt::from(1), l);
            sum = if odd { sum - term } else { sum + term };
        }
        Ok(DensityEstimate {
            value: sum.to_f64().unwrap_or(f64::NAN),
            window: None,
            count: None,
            method: DensityMethod::InclusionExclusion,
        })
    }

    /// A pairwise coprime subset of the given size, if one exists.
    ///
    /// Tries the greedy ascending pick first, then a backtracking search.
    pub fn coprime_subset(&self, size: usize) -> Option<Vec<u64>> {
        let mut picked = Vec::new();
        for &b in &self.moduli {
            if picked.len() == size {
                break;
            }
            if picked.iter().all(|&a: &u64| a.gcd(&b) == 1) {
                picked.push(b);
            }
        }
        if picked.len() == size {
            return Some(picked);
        }
        let mut stack = Vec::with_capacity(size);
        if backtrack_coprime(&self.moduli, 0, size, &mut stack) {
            Some(stack)
        } else {
            None
        }
    }

    pub fn has_coprime_subset(&self, size: usize) -> bool {
        self.coprime_subset(size).is_some()
    }

    /// Necessary condition for `X_B`: the 1-positions of `z` miss some
    /// residue class mod every modulus.
    pub fn admissible(&self, z: &BitWindow) -> bool {
        let ones: Vec<i64> = z.ones_positions().collect();
        self.moduli.iter().all(|&b| {
            if (ones.len() as u64) < b {
                return true;
            }
            let b = b as i64;
            let mut seen = HashSet::new();
            for &p in &ones {
                seen.insert(p.rem_euclid(b));
                if seen.len() as i64 == b {
                    return false;
                }
            }
            true
        })
    }

    /// `log₂ |L_n(X̃_η)| / n`, the language read from `η` on `[0, window)`.
    ///
    /// When the moduli have an lcm `L` with `L + n <= window`, the window
    /// contains every factor of the periodic `η` and the count is exact.
    pub fn hereditary_entropy_estimate(&self, n: usize, window: u64) -> Result<EntropyEstimate> {
        let len = match self.lcm_up_to(window) {
            Some(l) if l + n as u64 <= window => l + n as u64,
            _ => window,
        };
        let eta = self.sieve_window(len);
        let factors = language::factors(&eta, n)?;
        let size = language::closure_size(&factors, n)?;
        Ok(EntropyEstimate {
            n,
            language_size: size,
            value: (size as f64).log2() / n as f64,
        })
    }
}

impl fmt::Display for BSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list: Vec<String> = self.moduli.iter().map(u64::to_string).collect();
        write!(f, "{{{}}}", list.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityMethod {
    SieveCount,
    InclusionExclusion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub value: f64,
    pub window: Option<u64>,
    pub count: Option<u64>,
    pub method: DensityMethod,
}

/// `log₂ |L_n| / n` together with the raw count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyEstimate {
    pub n: usize,
    pub language_size: u128,
    pub value: f64,
}

/// All primitive abundant numbers `<= limit`: `σ(n) > 2n` and no proper
/// divisor is abundant.
pub fn generate_primitive_abundant(limit: u64) -> BSet {
    let l = limit as usize;
    let mut sigma = vec![0u64; l + 1];
    for d in 1..=l {
        for m in (d..=l).step_by(d) {
            sigma[m] += d as u64;
        }
    }
    let mut has_abundant_divisor = vec![false; l + 1];
    let mut out = Vec::new();
    for n in 1..=l {
        if sigma[n] > 2 * n as u64 {
            if !has_abundant_divisor[n] {
                out.push(n as u64);
            }
            for m in (2 * n..=l).step_by(n) {
                has_abundant_divisor[m] = true;
            }
        }
    }
    BSet {
        moduli: out,
        provenance: Provenance::PrimitiveAbundant { limit },
    }
}

pub fn primes_up_to(limit: u64) -> Vec<u64> {
    let l = limit as usize;
    if l < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; l + 1];
    let mut out = Vec::new();
    for i in 2..=l {
        if !composite[i] {
            out.push(i as u64);
            for m in (i.saturating_mul(i)..=l).step_by(i) {
                composite[m] = true;
            }
        }
    }
    out
}

fn sieve_segment(moduli: &[u64], lo: u64, hi: u64) -> Vec<u64> {
    let len = (hi - lo) as usize;
    let mut words = vec![u64::MAX; len.div_ceil(64)];
    if !len.is_multiple_of(64) {
        *words.last_mut().unwrap() = (1u64 << (len % 64)) - 1;
    }
    for &b in moduli {
        let mut m = lo.div_ceil(b) * b;
        while m < hi {
            let i = (m - lo) as usize;
            words[i / 64] &= !(1 << (i % 64));
            m += b;
        }
    }
    words
}

fn check_ie_size(len: usize) -> Result<()> {
    if len > MAX_INCLUSION_EXCLUSION {
        return Err(Error::TooLarge(format!(
            "inclusion-exclusion over {len} moduli (max {MAX_INCLUSION_EXCLUSION})"
        )));
    }
    Ok(())
}

/// Visit `(lcm(S), |S| odd)` for every subset `S`; `None` marks an lcm past `u64`.
fn for_each_lcm(moduli: &[u64], f: &mut impl FnMut(Option<u64>, bool)) {
    fn go(moduli: &[u64], l: Option<u64>, odd: bool, f: &mut impl FnMut(Option<u64>, bool)) {
        match moduli.split_first() {
            None => f(l, odd),
            Some((&b, rest)) => {
                go(rest, l, odd, f);
                let next = l.and_then(|l| l.checked_mul(b / l.gcd(&b)));
                go(rest, next, !odd, f);
            }
        }
    }
    go(moduli, Some(1), false, f);
}

fn backtrack_coprime(moduli: &[u64], from: usize, size: usize, stack: &mut Vec<u64>) -> bool {
    if stack.len() == size {
        return true;
    }
    if moduli.len() - from < size - stack.len() {
        return false;
    }
    for i in from..moduli.len() {
        let b = moduli[i];
        if stack.iter().all(|&a| a.gcd(&b) == 1) {
            stack.push(b);
            if backtrack_coprime(moduli, i + 1, size, stack) {
                return true;
            }
            stack.pop();
        }
    }
    false
}
