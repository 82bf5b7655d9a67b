//! The ladder Markov chains that drive the block schedule.
//!
//! The single chain walks `1 → 2 → … → n0`, then either restarts at `1` or
//! takes the extension state `n0+1` first, each with probability ½. The
//! doubled chain runs two copies of that ladder (plain and barred) and picks
//! the ladder of every restart uniformly. Transition matrices and stationary
//! vectors are exact rationals.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A ladder position `1..=n0+1`, on the plain or the barred copy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChainState {
    pub pos: usize,
    pub barred: bool,
}

impl fmt::Display for ChainState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.barred {
            write!(f, "~{}", self.pos)
        } else {
            write!(f, "{}", self.pos)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MarkovChain {
    n0: usize,
    states: Vec<ChainState>,
    transitions: Vec<Vec<BigRational>>,
    stationary: Vec<BigRational>,
}

fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// States `1..=n0+1` of one ladder.
fn ladder(n0: usize, barred: bool) -> impl Iterator<Item = ChainState> {
    (1..=n0 + 1).map(move |pos| ChainState { pos, barred })
}

/// The chain on `{1, …, n0+1}`.
pub fn build_single_chain(n0: usize) -> Result<MarkovChain> {
    if n0 < 2 {
        return Err(Error::ChainSize(n0));
    }
    let m = n0 + 1;
    let mut p = vec![vec![BigRational::zero(); m]; m];
    for i in 0..n0 - 1 {
        p[i][i + 1] = BigRational::one();
    }
    p[n0 - 1][n0] = ratio(1, 2);
    p[n0 - 1][0] = ratio(1, 2);
    p[n0][0] = BigRational::one();
    // 1/(n0 + ½) = 2/(2n0 + 1)
    let d = 2 * n0 as i64 + 1;
    let mut stationary = vec![ratio(2, d); n0];
    stationary.push(ratio(1, d));
    Ok(MarkovChain {
        n0,
        states: ladder(n0, false).collect(),
        transitions: p,
        stationary,
    })
}

/// The chain on `{1, …, n0+1} ⊔ {~1, …, ~(n0+1)}`.
pub fn build_doubled_chain(n0: usize) -> Result<MarkovChain> {
    if n0 < 2 {
        return Err(Error::ChainSize(n0));
    }
    let m = n0 + 1;
    let mut p = vec![vec![BigRational::zero(); 2 * m]; 2 * m];
    for base in [0, m] {
        for i in 0..n0 - 1 {
            p[base + i][base + i + 1] = BigRational::one();
        }
        p[base + n0 - 1][base + n0] = ratio(1, 2);
        p[base + n0 - 1][0] = ratio(1, 4);
        p[base + n0 - 1][m] = ratio(1, 4);
        p[base + n0][0] = ratio(1, 2);
        p[base + n0][m] = ratio(1, 2);
    }
    let d = 2 * n0 as i64 + 1;
    let mut half = vec![ratio(1, d); n0];
    half.push(ratio(1, 2 * d));
    let stationary = half.iter().chain(half.iter()).cloned().collect();
    Ok(MarkovChain {
        n0,
        states: ladder(n0, false).chain(ladder(n0, true)).collect(),
        transitions: p,
        stationary,
    })
}

impl MarkovChain {
    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn states(&self) -> &[ChainState] {
        &self.states
    }

    pub fn transitions(&self) -> &[Vec<BigRational>] {
        &self.transitions
    }

    pub fn stationary(&self) -> &[BigRational] {
        &self.stationary
    }

    pub fn is_doubled(&self) -> bool {
        self.states.iter().any(|s| s.barred)
    }

    /// Every row is nonnegative and sums to exactly 1.
    pub fn is_row_stochastic(&self) -> bool {
        self.transitions.iter().all(|row| {
            row.iter().all(|x| !x.is_negative())
                && row.iter().fold(BigRational::zero(), |a, x| a + x) == BigRational::one()
        })
    }

    /// `p` is a probability vector with `p·P = p`, exactly.
    pub fn is_stationary(&self) -> bool {
        let m = self.states.len();
        if self.stationary.iter().any(|x| x.is_negative()) {
            return false;
        }
        let total = self
            .stationary
            .iter()
            .fold(BigRational::zero(), |a, x| a + x);
        if total != BigRational::one() {
            return false;
        }
        (0..m).all(|j| {
            let pj = (0..m).fold(BigRational::zero(), |acc, i| {
                acc + &self.stationary[i] * &self.transitions[i][j]
            });
            pj == self.stationary[j]
        })
    }

    fn sparse_rows(&self) -> Vec<Vec<(usize, BigRational)>> {
        self.transitions
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .map(|(j, x)| (j, x.clone()))
                    .collect()
            })
            .collect()
    }

    /// `P^power` in exact arithmetic.
    pub fn matrix_power(&self, power: usize) -> Result<Vec<Vec<BigRational>>> {
        if power == 0 {
            return Err(Error::Parameter("power must be >= 1".into()));
        }
        let m = self.states.len();
        let rows = self.sparse_rows();
        let mut acc = self.transitions.clone();
        for _ in 1..power {
            let mut next = vec![vec![BigRational::zero(); m]; m];
            for (i, acc_row) in acc.iter().enumerate() {
                for (l, a) in acc_row.iter().enumerate() {
                    if a.is_zero() {
                        continue;
                    }
                    for (j, p) in &rows[l] {
                        next[i][*j] += a * p;
                    }
                }
            }
            acc = next;
        }
        Ok(acc)
    }

    /// Smallest `k` with `P^k` strictly positive, or `None` when no power up to
    /// the Wielandt bound `(m-1)² + 1` is positive (the chain is not primitive).
    /// Only the zero pattern of `P` matters, so this works on booleans.
    pub fn primitivity_exponent(&self) -> Option<usize> {
        let m = self.states.len();
        let support: Vec<Vec<usize>> = self
            .transitions
            .iter()
            .map(|row| (0..m).filter(|&j| !row[j].is_zero()).collect())
            .collect();
        let mut reach: Vec<Vec<bool>> = (0..m)
            .map(|i| (0..m).map(|j| support[i].contains(&j)).collect())
            .collect();
        let bound = (m - 1) * (m - 1) + 1;
        for k in 1..=bound {
            if reach.iter().flatten().all(|&b| b) {
                return Some(k);
            }
            reach = reach
                .iter()
                .map(|row| {
                    let mut next = vec![false; m];
                    for l in (0..m).filter(|&l| row[l]) {
                        for &j in &support[l] {
                            next[j] = true;
                        }
                    }
                    next
                })
                .collect();
        }
        None
    }

    /// Float transition rows as cumulative sums, for sampling.
    fn cumulative_rows(&self) -> Vec<Vec<f64>> {
        self.transitions
            .iter()
            .map(|row| {
                let mut c = 0.0;
                row.iter()
                    .map(|x| {
                        c += x.to_f64().unwrap_or(0.0);
                        c
                    })
                    .collect()
            })
            .collect()
    }

    fn cumulative_stationary(&self) -> Vec<f64> {
        let mut c = 0.0;
        self.stationary
            .iter()
            .map(|x| {
                c += x.to_f64().unwrap_or(0.0);
                c
            })
            .collect()
    }

    /// A state path of `steps` states started from the stationary vector.
    pub fn sample_path(&self, steps: usize, seed: u64) -> Vec<usize> {
        let mut walker = Walker::new(self, seed);
        (0..steps).map(|_| walker.step()).collect()
    }

    /// Text rendering of the matrix and stationary vector.
    pub fn render(&self) -> String {
        let labels: Vec<String> = self.states.iter().map(ToString::to_string).collect();
        let width = self
            .transitions
            .iter()
            .flatten()
            .chain(self.stationary.iter())
            .map(|x| x.to_string().len())
            .chain(labels.iter().map(String::len))
            .max()
            .unwrap_or(1);
        let mut out = String::new();
        out.push_str(&format!("{:>width$} |", ""));
        for l in &labels {
            out.push_str(&format!(" {l:>width$}"));
        }
        out.push('\n');
        for (l, row) in labels.iter().zip(&self.transitions) {
            out.push_str(&format!("{l:>width$} |"));
            for x in row {
                out.push_str(&format!(" {:>width$}", x.to_string()));
            }
            out.push('\n');
        }
        out.push_str(&format!("{:>width$} |", "p"));
        for x in &self.stationary {
            out.push_str(&format!(" {:>width$}", x.to_string()));
        }
        out.push('\n');
        out
    }
}

/// Running sampler over a chain; owns its RNG.
struct Walker {
    rows: Vec<Vec<f64>>,
    state: Option<usize>,
    init: Vec<f64>,
    rng: ChaCha8Rng,
}

fn draw(cdf: &[f64], u: f64) -> usize {
    cdf.iter()
        .position(|&c| u < c)
        .unwrap_or_else(|| cdf.iter().rposition(|&c| c > 0.0).unwrap_or(0))
}

impl Walker {
    fn new(chain: &MarkovChain, seed: u64) -> Self {
        Walker {
            rows: chain.cumulative_rows(),
            state: None,
            init: chain.cumulative_stationary(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn step(&mut self) -> usize {
        let u: f64 = self.rng.gen();
        let next = match self.state {
            None => draw(&self.init, u),
            Some(s) => draw(&self.rows[s], u),
        };
        self.state = Some(next);
        next
    }
}

/// One slot of a schedule: `len ∈ {n0, n0+1}` positions, plain or barred.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub len: usize,
    pub barred: bool,
}

/// A tiling of `[origin, origin + Σ len)` by consecutive slots.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub n0: usize,
    /// Absolute position where the first slot starts.
    pub origin: i64,
    pub slots: Vec<Slot>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleStats {
    pub slots: usize,
    pub long_slots: usize,
    pub barred_slots: usize,
    pub long_fraction: f64,
    pub barred_fraction: f64,
}

impl Schedule {
    pub fn end(&self) -> i64 {
        self.origin + self.slots.iter().map(|s| s.len as i64).sum::<i64>()
    }

    /// The same tiling translated by `offset`.
    pub fn shifted(&self, offset: i64) -> Schedule {
        Schedule {
            origin: self.origin + offset,
            ..self.clone()
        }
    }

    /// `(start, slot)` pairs in order.
    pub fn positioned(&self) -> impl Iterator<Item = (i64, Slot)> + '_ {
        self.slots.iter().scan(self.origin, |pos, s| {
            let start = *pos;
            *pos += s.len as i64;
            Some((start, *s))
        })
    }

    pub fn stats(&self) -> ScheduleStats {
        let slots = self.slots.len();
        let long_slots = self.slots.iter().filter(|s| s.len == self.n0 + 1).count();
        let barred_slots = self.slots.iter().filter(|s| s.barred).count();
        let frac = |x: usize| {
            if slots == 0 {
                0.0
            } else {
                x as f64 / slots as f64
            }
        };
        ScheduleStats {
            slots,
            long_slots,
            barred_slots,
            long_fraction: frac(long_slots),
            barred_fraction: frac(barred_slots),
        }
    }

    /// CSV with header `slot_index,start,length,barred`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("slot_index,start,length,barred\n");
        for (i, (start, s)) in self.positioned().enumerate() {
            out.push_str(&format!("{i},{start},{},{}\n", s.len, s.barred));
        }
        out
    }
}

/// Run the chain from its stationary vector and cut the path at every visit
/// to a ladder bottom (`1` or `~1`). The schedule starts at `0` minus the
/// ladder offset of the initial state and covers at least `[0, total_length)`.
pub fn sample_schedule(chain: &MarkovChain, total_length: usize, seed: u64) -> Schedule {
    let mut walker = Walker::new(chain, seed);
    let first = chain.states[walker.step()];
    let origin = -(first.pos as i64 - 1);
    let mut slots = Vec::new();
    let mut slot_start = origin;
    let mut current = first;
    let mut barred = first.barred;
    loop {
        let next = chain.states[walker.step()];
        if next.pos == 1 {
            let len = current.pos;
            slots.push(Slot { len, barred });
            slot_start += len as i64;
            if slot_start >= total_length as i64 {
                break;
            }
            barred = next.barred;
        }
        current = next;
    }
    Schedule {
        n0: chain.n0,
        origin,
        slots,
    }
}

/// `Λ`: identify `i` with `~i`.
pub fn erase_bars(s: &Schedule) -> Schedule {
    Schedule {
        n0: s.n0,
        origin: s.origin,
        slots: s
            .slots
            .iter()
            .map(|slot| Slot {
                len: slot.len,
                barred: false,
            })
            .collect(),
    }
}

/// Strict positivity of every entry of `P^power`.
pub fn check_aperiodic(chain: &MarkovChain, power: usize) -> Result<bool> {
    Ok(chain
        .matrix_power(power)?
        .iter()
        .flatten()
        .all(|x| x.is_positive()))
}
