//! Ergodic approximants of the midpoint of two ergodic measures.
//!
//! Given a window `eta_nu` generic for the base measure and windows `x1`, `x2`
//! generic for two ergodic measures of the hereditary closure, the pipeline
//! builds `eta_bar <= eta_nu` whose `k0`-block statistics match
//! `½(ν₁ + ν₂)`:
//!
//! 1. `F_i`: the `n0`-blocks of `x_i` whose internal `k0`-statistics are
//!    `eps`-close to those of `x_i`.
//! 2. `G`: the `n0`-blocks of the base language dominating a member of both
//!    `F_1` and `F_2`.
//! 3. A path of the doubled ladder chain cuts the window into slots of length
//!    `n0` or `n0 + 1`, each plain or barred.
//! 4. A slot whose leading `n0`-block `u` lies in `G` is a star slot and
//!    receives `R_1(u)` (plain) or `R_2(u)` (barred), followed by a `0` when
//!    the slot has length `n0 + 1`; every other slot becomes zeros.
//!
//! Slots cut by the window edges are zeroed and left out of every statistic.

use std::collections::HashMap;

use serde::Serialize;

use crate::bitseq::{BitWindow, Block, MAX_BLOCK_LEN};
use crate::error::{Error, Result};
use crate::markov::{build_doubled_chain, sample_schedule, Schedule, ScheduleStats};
use crate::measures::{
    empirical, mix, select_g, select_good_blocks, selector_r, tv_distance, BlockMeasure, BlockSet,
};

/// Upper bound for the automatic `n0` search.
pub const DEFAULT_N0_CAP: usize = MAX_BLOCK_LEN;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum N0Choice {
    Auto { cap: usize },
    Fixed(usize),
}

#[derive(Clone, Debug)]
pub struct MidpointRequest {
    pub eta_nu: BitWindow,
    pub x1: BitWindow,
    pub x2: BitWindow,
    pub k0: usize,
    pub eps0: f64,
    pub eps: f64,
    pub n0: N0Choice,
    pub seed: u64,
    /// Replaces the `n0`-language read from `eta_nu`.
    pub language: Option<BlockSet>,
}

impl MidpointRequest {
    /// Defaults: `eps = eps0 / 2`, automatic `n0` up to [`DEFAULT_N0_CAP`].
    pub fn new(
        eta_nu: BitWindow,
        x1: BitWindow,
        x2: BitWindow,
        k0: usize,
        eps0: f64,
        seed: u64,
    ) -> Self {
        MidpointRequest {
            eta_nu,
            x1,
            x2,
            k0,
            eps0,
            eps: eps0 / 2.0,
            n0: N0Choice::Auto {
                cap: DEFAULT_N0_CAP,
            },
            seed,
            language: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k0 == 0 || self.k0 > MAX_BLOCK_LEN {
            return Err(Error::BlockLength(self.k0));
        }
        if !(self.eps > 0.0 && self.eps < self.eps0) {
            return Err(Error::Parameter(format!(
                "need 0 < eps < eps0, got eps = {}, eps0 = {}",
                self.eps, self.eps0
            )));
        }
        let n0 = match self.n0 {
            N0Choice::Fixed(n) => n,
            N0Choice::Auto { cap } => cap,
        };
        if n0 < self.k0.max(2) || n0 > MAX_BLOCK_LEN {
            return Err(Error::Parameter(format!(
                "n0 bound {n0} must lie in [max(k0, 2), {MAX_BLOCK_LEN}]"
            )));
        }
        if let Some(l) = &self.language {
            if let N0Choice::Fixed(n) = self.n0 {
                if l.block_len() != n {
                    return Err(Error::LengthMismatch {
                        left: n,
                        right: l.block_len(),
                    });
                }
            }
        }
        if self.eta_nu.len() < 2 * (n0 + 1) {
            return Err(Error::WindowTooShort {
                len: self.eta_nu.len(),
                k: 2 * (n0 + 1),
            });
        }
        Ok(())
    }
}

/// Coding rule applied to one slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SlotRule {
    /// Length `n0`, block in `G`.
    Star,
    /// Length `n0 + 1`, leading `n0`-block in `G`; the last symbol becomes 0.
    StarZero,
    /// Anything else.
    Zero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct AnnotatedSlot {
    pub start: i64,
    pub len: usize,
    pub barred: bool,
    pub rule: SlotRule,
    /// Cut by a window edge; always coded as zeros and excluded from statistics.
    pub boundary: bool,
}

impl AnnotatedSlot {
    pub fn end(&self) -> i64 {
        self.start + self.len as i64
    }

    pub fn is_star(&self) -> bool {
        matches!(self.rule, SlotRule::Star | SlotRule::StarZero)
    }
}

/// `η′` in schedule form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AnnotatedSchedule {
    pub n0: usize,
    pub slots: Vec<AnnotatedSlot>,
}

impl AnnotatedSchedule {
    pub fn interior(&self) -> impl Iterator<Item = &AnnotatedSlot> {
        self.slots.iter().filter(|s| !s.boundary)
    }

    /// `[start of first interior slot, end of last interior slot)`.
    pub fn interior_span(&self) -> Option<(i64, i64)> {
        let first = self.interior().next()?;
        let last = self.interior().last()?;
        Some((first.start, last.end()))
    }
}

fn check_schedule(eta_nu: &BitWindow, s: &Schedule, n0: usize) -> Result<()> {
    if s.n0 != n0 {
        return Err(Error::ScheduleMismatch(format!(
            "schedule n0 = {}, block set length {n0}",
            s.n0
        )));
    }
    if s.origin > eta_nu.start() || s.end() < eta_nu.end() {
        return Err(Error::ScheduleMismatch(format!(
            "schedule [{}, {}) does not cover window [{}, {})",
            s.origin,
            s.end(),
            eta_nu.start(),
            eta_nu.end()
        )));
    }
    if let Some(bad) = s.slots.iter().find(|x| x.len != n0 && x.len != n0 + 1) {
        return Err(Error::ScheduleMismatch(format!(
            "slot of length {} in an n0 = {n0} schedule",
            bad.len
        )));
    }
    Ok(())
}

/// Apply rules (a)–(c) to every slot that meets the window.
pub fn code_eta_prime(eta_nu: &BitWindow, s: &Schedule, g: &BlockSet) -> Result<AnnotatedSchedule> {
    let n0 = g.block_len();
    check_schedule(eta_nu, s, n0)?;
    let mut slots = Vec::with_capacity(s.slots.len());
    for (start, slot) in s.positioned() {
        let end = start + slot.len as i64;
        if end <= eta_nu.start() || start >= eta_nu.end() {
            continue;
        }
        let boundary = start < eta_nu.start() || end > eta_nu.end();
        let rule = if boundary {
            SlotRule::Zero
        } else {
            let u = eta_nu.read_block(start, n0)?;
            match (g.contains(&u), slot.len == n0) {
                (true, true) => SlotRule::Star,
                (true, false) => SlotRule::StarZero,
                (false, _) => SlotRule::Zero,
            }
        };
        slots.push(AnnotatedSlot {
            start,
            len: slot.len,
            barred: slot.barred,
            rule,
            boundary,
        });
    }
    Ok(AnnotatedSchedule { n0, slots })
}

/// Replace star blocks by `R_1(u)` on plain slots and `R_2(u)` on barred ones.
pub fn substitute(
    annotated: &AnnotatedSchedule,
    eta_nu: &BitWindow,
    f1: &BlockSet,
    f2: &BlockSet,
) -> Result<BitWindow> {
    let n0 = annotated.n0;
    for f in [f1, f2] {
        if f.block_len() != n0 {
            return Err(Error::LengthMismatch {
                left: n0,
                right: f.block_len(),
            });
        }
    }
    let mut out = BitWindow::zeros(eta_nu.start(), eta_nu.len());
    let mut memo: HashMap<(Block, bool), Block> = HashMap::new();
    for slot in annotated
        .slots
        .iter()
        .filter(|s| s.is_star() && !s.boundary)
    {
        let u = eta_nu.read_block(slot.start, n0)?;
        let w = match memo.get(&(u, slot.barred)) {
            Some(w) => *w,
            None => {
                let w = selector_r(&u, if slot.barred { f2 } else { f1 })?;
                memo.insert((u, slot.barred), w);
                w
            }
        };
        out.write_block(slot.start, &w)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoverageReport {
    pub slots: usize,
    pub slots_in_g: usize,
    pub fraction: f64,
    pub eps: f64,
    pub pass: bool,
}

/// Fraction of interior slots whose leading `n0`-block lies in `G`.
pub fn check_coverage(
    eta_nu: &BitWindow,
    s: &Schedule,
    g: &BlockSet,
    eps: f64,
) -> Result<CoverageReport> {
    let annotated = code_eta_prime(eta_nu, s, g)?;
    Ok(coverage_from_annotated(&annotated, eps))
}

fn coverage_from_annotated(annotated: &AnnotatedSchedule, eps: f64) -> CoverageReport {
    let slots = annotated.interior().count();
    let slots_in_g = annotated.interior().filter(|s| s.is_star()).count();
    let fraction = if slots == 0 {
        0.0
    } else {
        slots_in_g as f64 / slots as f64
    };
    CoverageReport {
        slots,
        slots_in_g,
        fraction,
        eps,
        pass: fraction >= 1.0 - eps,
    }
}

/// Masses observed for one `n0` candidate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct N0Trial {
    pub n0: usize,
    pub f1_mass: f64,
    pub f2_mass: f64,
    pub g_mass: f64,
    pub meets_f_threshold: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MidpointChecks {
    /// `eta_bar <= eta_nu` at every position.
    pub heredity: bool,
    pub tv_within_eps0: bool,
    pub coverage: bool,
    /// First/second-half `k0` statistics within `2·eps0`.
    pub stationarity: bool,
}

impl MidpointChecks {
    pub fn all(&self) -> bool {
        self.heredity && self.tv_within_eps0 && self.coverage && self.stationarity
    }

    pub fn failures(&self) -> Vec<&'static str> {
        [
            (self.heredity, "heredity"),
            (self.tv_within_eps0, "tv_within_eps0"),
            (self.coverage, "coverage"),
            (self.stationarity, "stationarity"),
        ]
        .into_iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, name)| name)
        .collect()
    }
}

/// Intermediate objects of a run, kept for inspection.
#[derive(Clone, Debug)]
pub struct Construction {
    pub f1: BlockSet,
    pub f2: BlockSet,
    pub g: BlockSet,
    pub schedule: Schedule,
    pub annotated: AnnotatedSchedule,
}

#[derive(Clone, Debug, Serialize)]
pub struct MidpointResult {
    #[serde(skip)]
    pub eta_bar: BitWindow,
    #[serde(skip)]
    pub construction: Construction,
    pub n0: usize,
    pub n0_choice: N0Choice,
    pub n0_search: Vec<N0Trial>,
    pub k0: usize,
    pub eps0: f64,
    pub eps: f64,
    pub seed: u64,
    pub f1_mass: f64,
    pub f2_mass: f64,
    pub f1_size: usize,
    pub f2_size: usize,
    pub language_size: usize,
    pub g_size: usize,
    /// Occurrence mass of `G` among the `n0`-blocks of `eta_nu`.
    pub g_mass: f64,
    pub target1: BlockMeasure,
    pub target2: BlockMeasure,
    pub midpoint: BlockMeasure,
    pub achieved: BlockMeasure,
    pub achieved_tv: f64,
    /// Fraction of interior slots coded by the all-zero rule.
    pub exceptional_density: f64,
    pub coverage: CoverageReport,
    pub schedule: ScheduleStats,
    pub star_slots: usize,
    /// Fraction of interior star slots that are barred (sent to `F_2`).
    pub star_barred_fraction: f64,
    pub stationarity_tv: f64,
    pub checks: MidpointChecks,
    pub warnings: Vec<String>,
}

struct Candidate {
    n0: usize,
    f1: BlockSet,
    f2: BlockSet,
    f1_mass: f64,
    f2_mass: f64,
    language: BlockSet,
    g: BlockSet,
    g_mass: f64,
}

fn evaluate(
    req: &MidpointRequest,
    n0: usize,
    t1: &BlockMeasure,
    t2: &BlockMeasure,
) -> Result<Candidate> {
    let f1 = select_good_blocks(&req.x1, n0, req.k0, t1, req.eps)?;
    let f2 = select_good_blocks(&req.x2, n0, req.k0, t2, req.eps)?;
    let language = match &req.language {
        Some(l) => l.clone(),
        None => BlockSet::language_of(&req.eta_nu, n0)?,
    };
    let g = select_g(&language, &f1.set, &f2.set)?;
    let g_mass = g.mass_in(&req.eta_nu)?;
    Ok(Candidate {
        n0,
        f1: f1.set,
        f2: f2.set,
        f1_mass: f1.mass,
        f2_mass: f2.mass,
        language,
        g,
        g_mass,
    })
}

/// Doubling from `max(k0, 2)`, then the cap itself.
fn auto_candidates(k0: usize, cap: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut n = k0.max(2);
    while n < cap {
        out.push(n);
        n *= 2;
    }
    out.push(cap);
    out
}

fn choose_n0(
    req: &MidpointRequest,
    t1: &BlockMeasure,
    t2: &BlockMeasure,
    trials: &mut Vec<N0Trial>,
    warnings: &mut Vec<String>,
) -> Result<Candidate> {
    let threshold = 1.0 - req.eps / 2.0;
    let candidates = match (req.n0, &req.language) {
        (N0Choice::Fixed(n), _) => vec![n],
        (N0Choice::Auto { .. }, Some(l)) => vec![l.block_len()],
        (N0Choice::Auto { cap }, None) => auto_candidates(req.k0, cap),
    };
    let fixed = candidates.len() == 1;
    let mut fallback: Option<Candidate> = None;
    for n0 in candidates {
        let c = evaluate(req, n0, t1, t2)?;
        let meets = c.f1_mass > threshold && c.f2_mass > threshold;
        trials.push(N0Trial {
            n0,
            f1_mass: c.f1_mass,
            f2_mass: c.f2_mass,
            g_mass: c.g_mass,
            meets_f_threshold: meets,
        });
        if meets {
            return Ok(c);
        }
        if fixed {
            warnings.push(format!(
                "F-masses {:.4}, {:.4} at n0 = {n0} do not exceed 1 - eps/2 = {threshold:.4}",
                c.f1_mass, c.f2_mass
            ));
            return Ok(c);
        }
        if !c.g.is_empty() && c.g_mass >= 1.0 - req.eps {
            fallback = Some(c);
        }
    }
    match fallback {
        Some(c) => {
            warnings.push(format!(
                "no n0 <= cap has both F-masses above {threshold:.4}; using n0 = {} \
                 (largest candidate whose G carries mass {:.4} >= 1 - eps)",
                c.n0, c.g_mass
            ));
            Ok(c)
        }
        None => Err(Error::InsufficientGenericity(format!(
            "no n0 in the search has F-masses above {threshold:.4} or a G of mass >= {:.4}",
            1.0 - req.eps
        ))),
    }
}

/// Run the whole construction.
pub fn approximate_midpoint(req: &MidpointRequest) -> Result<MidpointResult> {
    req.validate()?;
    let k0 = req.k0;
    let target1 = empirical(&req.x1, k0)?;
    let target2 = empirical(&req.x2, k0)?;
    let mut warnings = Vec::new();
    let mut n0_search = Vec::new();
    let chosen = choose_n0(req, &target1, &target2, &mut n0_search, &mut warnings)?;
    let n0 = chosen.n0;
    if chosen.g_mass < 1.0 - req.eps {
        warnings.push(format!(
            "G carries mass {:.4} < 1 - eps = {:.4} in eta_nu",
            chosen.g_mass,
            1.0 - req.eps
        ));
    }

    let chain = build_doubled_chain(n0)?;
    let schedule = sample_schedule(&chain, req.eta_nu.len(), req.seed).shifted(req.eta_nu.start());
    let annotated = code_eta_prime(&req.eta_nu, &schedule, &chosen.g)?;
    let eta_bar = substitute(&annotated, &req.eta_nu, &chosen.f1, &chosen.f2)?;

    let (lo, hi) = annotated
        .interior_span()
        .ok_or_else(|| Error::Parameter("window holds no complete slot".into()))?;
    let interior = eta_bar.slice(lo, hi)?;
    let achieved = empirical(&interior, k0)?;
    let midpoint = mix(&target1, &target2, 0.5)?;
    let achieved_tv = tv_distance(&achieved, &midpoint)?;
    let mid = lo + (hi - lo) / 2;
    let stationarity_tv = tv_distance(
        &empirical(&eta_bar.slice(lo, mid)?, k0)?,
        &empirical(&eta_bar.slice(mid, hi)?, k0)?,
    )?;

    let coverage = coverage_from_annotated(&annotated, req.eps);
    let stars: Vec<_> = annotated.interior().filter(|s| s.is_star()).collect();
    let star_slots = stars.len();
    let star_barred_fraction = if star_slots == 0 {
        0.0
    } else {
        stars.iter().filter(|s| s.barred).count() as f64 / star_slots as f64
    };

    let checks = MidpointChecks {
        heredity: req.eta_nu.dominates(&eta_bar)?,
        tv_within_eps0: achieved_tv <= req.eps0,
        coverage: coverage.pass,
        stationarity: stationarity_tv <= 2.0 * req.eps0,
    };
    let threshold = 1.0 - req.eps / 2.0;
    if coverage.pass
        && chosen.f1_mass > threshold
        && chosen.f2_mass > threshold
        && !checks.tv_within_eps0
    {
        warnings.push(format!(
            "construction failure: coverage and F-mass conditions hold but achieved TV {achieved_tv:.4} > eps0"
        ));
    }

    Ok(MidpointResult {
        n0,
        n0_choice: req.n0,
        n0_search,
        k0,
        eps0: req.eps0,
        eps: req.eps,
        seed: req.seed,
        f1_mass: chosen.f1_mass,
        f2_mass: chosen.f2_mass,
        f1_size: chosen.f1.len(),
        f2_size: chosen.f2.len(),
        language_size: chosen.language.len(),
        g_size: chosen.g.len(),
        g_mass: chosen.g_mass,
        target1,
        target2,
        midpoint,
        achieved,
        achieved_tv,
        exceptional_density: 1.0 - coverage.fraction,
        schedule: schedule.stats(),
        coverage,
        star_slots,
        star_barred_fraction,
        stationarity_tv,
        checks,
        warnings,
        eta_bar,
        construction: Construction {
            f1: chosen.f1,
            f2: chosen.f2,
            g: chosen.g,
            schedule,
            annotated,
        },
    })
}
