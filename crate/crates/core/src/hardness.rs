//! Hard instances `c = (a, b, b, b, 0)` and the approximation audits built around them.
//!
//! `a` is a random vector with entries in `{D, ..., 2D}` and each `b` block is an
//! additive basis for `{0, ..., 2D}`. A critical `c~` for such a `c` must be close to
//! a multiple of `c`; [`necessary_condition`] measures that distance exactly and
//! [`diophantine_audit`] asks whether `a` admits any short approximant at all.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{covering_basis, default_delta, half_fill_preconditions, PreconditionReport};
use crate::error::{Error, Result};
use crate::instance::{make_instance, Instance, ProfitVector, WeightVector};
use crate::num::{floor, int_rat, rat, serde_str, Rational};

/// `2^floor(m/8)`.
pub fn default_d(m: usize) -> BigInt {
    BigInt::one() << (m / 8)
}

/// How each of the three basis blocks covering `{0, ..., 2D}` is built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    /// `1, 2, 4, ...` up to the first power whose prefix sum reaches `2D`.
    /// For `D = 2^(m/8)` this is `(2^0, ..., 2^(m/8+1))`.
    #[default]
    Powers,
    /// Powers of two plus a remainder, summing to exactly `2D`.
    Tight,
}

pub fn basis_values(d: &BigInt, kind: BasisKind) -> Vec<BigInt> {
    let target = d * 2u32;
    match kind {
        BasisKind::Powers => {
            let mut out = Vec::new();
            let mut sum = BigInt::zero();
            let mut p = BigInt::one();
            while sum < target {
                sum += &p;
                out.push(p.clone());
                p <<= 1;
            }
            out
        }
        BasisKind::Tight => covering_basis(&target),
    }
}

/// Uniform integers in `{D, ..., 2D}`.
///
/// Generator: `ChaCha8Rng::seed_from_u64(seed)` (rand_chacha 0.3). With `r = D + 1`
/// and `w = ceil(bits(r) / 64)`, each attempt reads `w` words from `next_u64`,
/// little-endian, into `x < 2^(64w)`; it is accepted when
/// `x < floor(2^(64w) / r) * r` and yields `D + (x mod r)`.
pub fn sample_hard_vector(m: usize, d: &BigInt, seed: u64) -> Vec<BigInt> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r: BigInt = d + 1u32;
    let words = r.bits().div_ceil(64).max(1) as usize;
    let span = BigInt::one() << (64 * words);
    let limit = (&span / &r) * &r;
    (0..m)
        .map(|_| loop {
            let mut x = BigInt::zero();
            for k in 0..words {
                x += BigInt::from(rng.next_u64()) << (64 * k);
            }
            if x < limit {
                break d + x.mod_floor(&r);
            }
        })
        .collect()
}

/// `c = (a, b, b, b, 0, ..., 0)` with three registered basis blocks and a parity slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardInstance {
    pub m: usize,
    #[serde(with = "serde_str::int")]
    pub d: BigInt,
    pub seed: Option<u64>,
    #[serde(with = "serde_str::int_vec")]
    pub a: Vec<BigInt>,
    pub basis_kind: BasisKind,
    pub bases: [Vec<usize>; 3],
    /// First padding index; holds 1 iff the unpadded total was odd.
    pub parity_slot: usize,
    pub parity_set: bool,
    #[serde(with = "serde_str::int_vec")]
    pub c: Vec<BigInt>,
}

impl HardInstance {
    pub fn n(&self) -> usize {
        self.c.len()
    }

    pub fn weights(&self) -> WeightVector {
        WeightVector::new(self.c.clone()).expect("hard instance weights are positive somewhere")
    }

    pub fn instance(&self, eps: Rational) -> Result<Instance> {
        make_instance(self.weights(), eps)
    }

    pub fn preconditions(&self, delta: &Rational) -> PreconditionReport {
        half_fill_preconditions(&self.weights(), &self.bases, delta)
    }

    /// Rebuilds from `(a, D, basis_kind)` and compares every field.
    pub fn validate(&self) -> Result<()> {
        let mut fresh = assemble_hard_instance(&self.a, &self.d, self.basis_kind)?;
        fresh.seed = self.seed;
        if fresh != *self {
            return Err(Error::InvalidArgument("hard instance fields are inconsistent with (a, d, basis_kind)".into()));
        }
        Ok(())
    }
}

pub fn assemble_hard_instance(a: &[BigInt], d: &BigInt, kind: BasisKind) -> Result<HardInstance> {
    let m = a.len();
    if m < 8 {
        return Err(Error::DimensionOverflow(m));
    }
    if !d.is_positive() {
        return Err(Error::InvalidArgument("D must be positive".into()));
    }
    let two_d = d * 2u32;
    if let Some(i) = a.iter().position(|x| x < d || *x > two_d) {
        return Err(Error::InvalidArgument(format!("a[{i}] = {} is outside [D, 2D]", a[i])));
    }
    let b = basis_values(d, kind);
    let l = b.len();
    let n = (2 * m).max(m + 3 * l + 1);
    let mut c: Vec<BigInt> = a.to_vec();
    let mut bases: [Vec<usize>; 3] = Default::default();
    for block in bases.iter_mut() {
        for v in &b {
            block.push(c.len());
            c.push(v.clone());
        }
    }
    let parity_slot = c.len();
    c.resize(n, BigInt::zero());
    let parity_set = c.iter().sum::<BigInt>().is_odd();
    if parity_set {
        c[parity_slot] = BigInt::one();
    }
    Ok(HardInstance { m, d: d.clone(), seed: None, a: a.to_vec(), basis_kind: kind, bases, parity_slot, parity_set, c })
}

pub fn generate_hard_instance(m: usize, d: Option<BigInt>, seed: u64, kind: BasisKind) -> Result<HardInstance> {
    if m < 8 {
        return Err(Error::DimensionOverflow(m));
    }
    let d = d.unwrap_or_else(|| default_d(m));
    let a = sample_hard_vector(m, &d, seed);
    let mut inst = assemble_hard_instance(&a, &d, kind)?;
    inst.seed = Some(seed);
    Ok(inst)
}

/// Minimizes `sum |lambda * approx_i - target_i|` over `lambda >= 0`.
///
/// Returns `(lambda, value)`; the minimizer is the smallest weighted median of the
/// breakpoints `target_i / approx_i` (weights `approx_i`). `None` if `approx = 0`.
/// A returned `lambda = 0` is an infimum over `lambda > 0`.
pub fn best_scale(target: &[BigInt], approx: &[BigInt]) -> Option<(Rational, Rational)> {
    let mut pts: Vec<(Rational, &BigInt)> = target
        .iter()
        .zip(approx)
        .filter(|(_, q)| q.is_positive())
        .map(|(t, q)| (Rational::new(t.clone(), q.clone()), q))
        .collect();
    if pts.is_empty() {
        return None;
    }
    pts.sort_by(|x, y| x.0.cmp(&y.0));
    let total: BigInt = pts.iter().map(|p| p.1).sum();
    let mut cum = BigInt::zero();
    let lambda = pts
        .iter()
        .find(|p| {
            cum += p.1;
            &cum * 2u32 >= total
        })
        .map(|p| p.0.clone())
        .unwrap();
    let value = scaled_residual(target, approx, &lambda, 0..target.len());
    Some((lambda, value))
}

/// `sum_{i in range} |lambda * approx_i - target_i|`.
pub fn scaled_residual(
    target: &[BigInt],
    approx: &[BigInt],
    lambda: &Rational,
    range: std::ops::Range<usize>,
) -> Rational {
    range.map(|i| (lambda * int_rat(&approx[i]) - int_rat(&target[i])).abs()).sum()
}

/// Optimal `approx` with `||approx||_1 <= budget` for a fixed `lambda > 0`.
///
/// The objective is separable and convex per coordinate; every unit step below
/// `target_i / lambda` gains exactly `lambda`, the next one gains
/// `2 target_i - lambda (2 f_i + 1)`, all later ones lose.
pub fn optimal_allocation(target: &[BigInt], lambda: &Rational, budget: &BigInt) -> (Vec<BigInt>, Rational) {
    let full: Vec<BigInt> = target.iter().map(|t| floor(&(int_rat(t) / lambda))).collect();
    let total: BigInt = full.iter().sum();
    let mut approx;
    if total >= *budget {
        let mut left = budget.clone();
        approx = full
            .iter()
            .map(|f| {
                let take = f.min(&left).clone();
                left -= &take;
                take
            })
            .collect();
    } else {
        approx = full.clone();
        let mut left = budget - &total;
        let mut gains: Vec<(Rational, usize)> = (0..target.len())
            .map(|i| {
                let two_f1 = int_rat(&(&full[i] * 2u32 + 1u32));
                (int_rat(&(&target[i] * 2u32)) - lambda * two_f1, i)
            })
            .filter(|g| g.0.is_positive())
            .collect();
        gains.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
        for (_, i) in gains {
            if !left.is_positive() {
                break;
            }
            approx[i] += 1u32;
            left -= 1u32;
        }
    }
    let res = scaled_residual(target, &approx, lambda, 0..target.len());
    (approx, res)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditMode {
    #[default]
    Certified,
    Exhaustive,
    Heuristic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditVerdict {
    CounterexampleFound,
    CertifiedNone,
    NoneFoundHeuristic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub mode: AuditMode,
    /// `K` in the residual bound `K * eps * m * D`.
    #[serde(with = "serde_str::rat")]
    pub residual: Rational,
    /// Per-index window constant; `None` means `4 * residual`.
    #[serde(with = "serde_str::opt_rat")]
    pub window: Option<Rational>,
    /// Per-index approximant cap `floor(approx_cap / (alpha * eps))`.
    #[serde(with = "serde_str::rat")]
    pub approx_cap: Rational,
    /// Certification needs fewer than `good_fraction * m` good indices at every lambda.
    #[serde(with = "serde_str::rat")]
    pub good_fraction: Rational,
    pub grid_budget: u128,
    pub exhaustive_budget: u128,
    pub trials: u64,
    pub seed: u64,
    /// Grid points tried as witness scales when certification fails.
    pub witness_candidates: usize,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            mode: AuditMode::Certified,
            residual: rat(128, 1),
            window: None,
            approx_cap: rat(2, 1),
            good_fraction: rat(1, 4),
            grid_budget: 50_000_000,
            exhaustive_budget: 10_000_000,
            trials: 4096,
            seed: 0,
            witness_candidates: 256,
        }
    }
}

impl AuditConfig {
    pub fn window_const(&self) -> Rational {
        self.window.clone().unwrap_or_else(|| &self.residual * rat(4, 1))
    }

    /// The relaxation is implied by the original event only for these constant ranges.
    pub fn relaxation_sound(&self) -> bool {
        self.window_const() >= &self.residual * rat(4, 1) && self.approx_cap >= rat(2, 1) && self.good_fraction <= rat(1, 4)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditWitness {
    #[serde(with = "serde_str::rat")]
    pub lambda: Rational,
    #[serde(with = "serde_str::int_vec")]
    pub atilde: Vec<BigInt>,
    #[serde(with = "serde_str::rat")]
    pub residual: Rational,
}

impl AuditWitness {
    /// Both defining inequalities, re-evaluated from scratch.
    pub fn verify(&self, a: &[BigInt], budget: &BigInt, residual_bound: &Rational) -> bool {
        self.atilde.len() == a.len()
            && self.atilde.iter().all(|x| !x.is_negative())
            && self.atilde.iter().sum::<BigInt>() <= *budget
            && !self.lambda.is_negative()
            && scaled_residual(a, &self.atilde, &self.lambda, 0..a.len()) <= *residual_bound
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiophantineAuditReport {
    pub mode: AuditMode,
    pub m: usize,
    #[serde(with = "serde_str::int")]
    pub d: BigInt,
    #[serde(with = "serde_str::rat")]
    pub eps: Rational,
    #[serde(with = "serde_str::rat")]
    pub alpha: Rational,
    /// `floor(m / (alpha * eps))`.
    #[serde(with = "serde_str::int")]
    pub budget: BigInt,
    #[serde(with = "serde_str::rat")]
    pub residual_bound: Rational,
    /// Per-index window `window_const * eps * D`.
    #[serde(with = "serde_str::rat")]
    pub window: Rational,
    #[serde(with = "serde_str::int")]
    pub approx_cap: BigInt,
    pub verdict: AuditVerdict,
    pub witness: Option<AuditWitness>,
    pub lambda_grid_size: u64,
    /// Largest good-index count over the grid (certified mode).
    pub max_good_count: Option<usize>,
    /// Indices good through `a~_i = 0` alone, for every lambda.
    pub always_good: usize,
    /// `a~ = 0` already meets the residual bound.
    pub zero_approximant_ok: bool,
    /// `eps` outside `[1/D, 1/4]`.
    pub out_of_range: bool,
    pub relaxation_sound: bool,
    pub vectors_checked: Option<u64>,
    pub trials: Option<u64>,
}

pub fn diophantine_audit(
    a: &[BigInt],
    d: &BigInt,
    eps: &Rational,
    alpha: &Rational,
    cfg: &AuditConfig,
) -> Result<DiophantineAuditReport> {
    let m = a.len();
    if m == 0 || !eps.is_positive() || !alpha.is_positive() || !d.is_positive() {
        return Err(Error::InvalidArgument("audit needs m >= 1 and positive eps, alpha, D".into()));
    }
    let ae = alpha * eps;
    let budget = floor(&(int_rat(&BigInt::from(m)) / &ae));
    let approx_cap = floor(&(&cfg.approx_cap / &ae));
    let residual_bound = &cfg.residual * eps * int_rat(&BigInt::from(m)) * int_rat(d);
    let window = cfg.window_const() * eps * int_rat(d);
    let norm_a: BigInt = a.iter().sum();
    let always_good = a.iter().filter(|x| int_rat(x) <= window).count();
    let out_of_range = *eps < Rational::new(BigInt::one(), d.clone()) || *eps > rat(1, 4);
    let mut report = DiophantineAuditReport {
        mode: cfg.mode,
        m,
        d: d.clone(),
        eps: eps.clone(),
        alpha: alpha.clone(),
        budget: budget.clone(),
        residual_bound: residual_bound.clone(),
        window: window.clone(),
        approx_cap: approx_cap.clone(),
        verdict: AuditVerdict::NoneFoundHeuristic,
        witness: None,
        lambda_grid_size: 0,
        max_good_count: None,
        always_good,
        zero_approximant_ok: int_rat(&norm_a) <= residual_bound,
        out_of_range,
        relaxation_sound: cfg.relaxation_sound(),
        vectors_checked: None,
        trials: None,
    };
    match cfg.mode {
        AuditMode::Certified => certified_audit(a, cfg, &mut report)?,
        AuditMode::Exhaustive => exhaustive_audit(a, cfg, &mut report)?,
        AuditMode::Heuristic => heuristic_audit(a, cfg, &mut report),
    }
    if let Some(w) = &report.witness {
        debug_assert!(w.verify(a, &report.budget, &report.residual_bound));
    }
    Ok(report)
}

fn zero_witness(a: &[BigInt]) -> AuditWitness {
    AuditWitness { lambda: rat(1, 1), atilde: vec![BigInt::zero(); a.len()], residual: int_rat(&a.iter().sum()) }
}

/// Indices `i` with some `t ∈ {0, ..., cap}` such that `|lambda t - a_i| <= window`.
fn good_count(a: &[BigInt], lambda: &Rational, window: &Rational, cap: &BigInt) -> usize {
    a.iter()
        .filter(|ai| {
            let ai = int_rat(ai);
            if ai <= *window {
                return true;
            }
            if !cap.is_positive() {
                return false;
            }
            let lo = floor(&(&ai / lambda));
            [lo.clone(), lo + 1u32].into_iter().any(|t| {
                let t = t.clamp(BigInt::one(), cap.clone());
                (lambda * int_rat(&t) - &ai).abs() <= *window
            })
        })
        .count()
}

fn certified_audit(a: &[BigInt], cfg: &AuditConfig, rep: &mut DiophantineAuditReport) -> Result<()> {
    let m = a.len();
    let cap = rep.approx_cap.clone();
    let hard: Vec<&BigInt> = a.iter().filter(|x| int_rat(x) > rep.window).collect();
    let raw = 3u128 * hard.len() as u128 * cap.to_u128().unwrap_or(u128::MAX / 4);
    if raw > cfg.grid_budget {
        return Err(Error::GridTooLarge { size: raw, budget: cfg.grid_budget });
    }
    let cap_u = cap.to_u64().unwrap_or(0);
    let mut grid: Vec<Rational> = hard
        .par_iter()
        .flat_map_iter(|ai| {
            let ai = int_rat(ai);
            let w = rep.window.clone();
            (1..=cap_u).flat_map(move |t| {
                let t = int_rat(&BigInt::from(t));
                [(&ai - &w) / &t, &ai / &t, (&ai + &w) / &t]
            })
        })
        .collect();
    grid.par_sort_unstable();
    grid.dedup();
    rep.lambda_grid_size = grid.len() as u64;
    let counts: Vec<usize> = grid.par_iter().map(|l| good_count(a, l, &rep.window, &cap)).collect();
    let max_good = counts.iter().copied().max().unwrap_or(rep.always_good).max(rep.always_good);
    rep.max_good_count = Some(max_good);
    let threshold = &cfg.good_fraction * int_rat(&BigInt::from(m));
    if int_rat(&BigInt::from(max_good)) < threshold {
        rep.verdict = AuditVerdict::CertifiedNone;
        return Ok(());
    }
    // no certificate: look for an explicit approximant at the most promising scales
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&x, &y| counts[y].cmp(&counts[x]).then(x.cmp(&y)));
    order.truncate(cfg.witness_candidates);
    let mut scales: Vec<Rational> = order.into_iter().map(|i| grid[i].clone()).filter(|l| l.is_positive()).collect();
    scales.push(rat(1, 1));
    rep.witness = search_witness(a, &scales, &rep.budget, &rep.residual_bound);
    rep.verdict = if rep.witness.is_some() { AuditVerdict::CounterexampleFound } else { AuditVerdict::NoneFoundHeuristic };
    Ok(())
}

/// First scale (in the given order) whose optimal allocation meets the bound.
fn search_witness(a: &[BigInt], scales: &[Rational], budget: &BigInt, bound: &Rational) -> Option<AuditWitness> {
    if int_rat(&a.iter().sum()) <= *bound {
        return Some(zero_witness(a));
    }
    scales
        .par_iter()
        .map(|l| {
            let (atilde, residual) = optimal_allocation(a, l, budget);
            (residual <= *bound).then(|| AuditWitness { lambda: l.clone(), atilde, residual })
        })
        .find_first(|w| w.is_some())
        .flatten()
}

/// Number of `x ∈ N^m` with `||x||_1 <= b`, i.e. `C(b + m, m)`.
fn count_vectors(m: usize, b: u128) -> Option<u128> {
    let mut acc: u128 = 1;
    for k in 1..=m as u128 {
        acc = acc.checked_mul(b + k)? / k;
    }
    Some(acc)
}

/// Next vector of the same `||.||_1` in lexicographic order.
pub(crate) fn next_lex(v: &mut [u64]) -> bool {
    let n = v.len();
    if n < 2 {
        return false;
    }
    // rightmost position (before the last) whose successor block is nonempty
    let tail: u64 = v[n - 1];
    let mut i = n - 1;
    let mut suffix = tail;
    loop {
        if i == 0 {
            return false;
        }
        i -= 1;
        if suffix > 0 {
            v[i] += 1;
            let rest = suffix - 1;
            for x in v[i + 1..].iter_mut() {
                *x = 0;
            }
            v[n - 1] = rest;
            return true;
        }
        suffix += v[i];
    }
}

fn exhaustive_audit(a: &[BigInt], cfg: &AuditConfig, rep: &mut DiophantineAuditReport) -> Result<()> {
    // feasibility is governed by the vector count alone; m <= 4 is the usual regime
    let m = a.len();
    let b = rep.budget.to_u128().unwrap_or(u128::MAX);
    let total = count_vectors(m, b).unwrap_or(u128::MAX);
    if total > cfg.exhaustive_budget {
        return Err(Error::GridTooLarge { size: total, budget: cfg.exhaustive_budget });
    }
    rep.vectors_checked = Some(total as u64);
    if rep.zero_approximant_ok {
        rep.witness = Some(zero_witness(a));
        rep.verdict = AuditVerdict::CounterexampleFound;
        return Ok(());
    }
    let b = b as u64;
    for norm in 1..=b {
        let mut v = vec![0u64; m];
        v[m - 1] = norm;
        loop {
            let approx: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
            let (lambda, residual) = best_scale(a, &approx).expect("nonzero approximant");
            if residual <= rep.residual_bound {
                rep.witness = Some(AuditWitness { lambda, atilde: approx, residual });
                rep.verdict = AuditVerdict::CounterexampleFound;
                return Ok(());
            }
            if !next_lex(&mut v) {
                break;
            }
        }
    }
    rep.verdict = AuditVerdict::CertifiedNone;
    Ok(())
}

fn heuristic_audit(a: &[BigInt], cfg: &AuditConfig, rep: &mut DiophantineAuditReport) {
    rep.trials = Some(cfg.trials);
    let tmax = rep.budget.clone().max(BigInt::one()).to_u64().unwrap_or(u64::MAX);
    let scales: Vec<Rational> = (0..cfg.trials)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(j);
            let i = (rng.next_u64() % a.len() as u64) as usize;
            let t = 1 + rng.next_u64() % tmax;
            Rational::new(a[i].clone(), BigInt::from(t))
        })
        .collect();
    rep.witness = search_witness(a, &scales, &rep.budget, &rep.residual_bound);
    rep.verdict = if rep.witness.is_some() { AuditVerdict::CounterexampleFound } else { AuditVerdict::NoneFoundHeuristic };
}

/// Constants of the distance test for critical vectors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NcConstants {
    /// Threshold is `nc_const * eps * ||c||_1`.
    #[serde(with = "serde_str::rat")]
    pub nc_const: Rational,
    #[serde(with = "serde_str::rat")]
    pub delta: Rational,
}

impl Default for NcConstants {
    fn default() -> Self {
        Self { nc_const: rat(32, 1), delta: default_delta() }
    }
}

impl NcConstants {
    /// A critical `c~` obeys `||c~ - c/lambda||_1 <= 16 eps ||c~||_1`, so
    /// `||lambda c~ - c||_1 <= 16 eps ||c||_1 / (1 - 16 eps)`; the threshold must dominate that.
    pub fn eps_admissible(&self, eps: &Rational) -> bool {
        let sixteen = rat(16, 1);
        let room = rat(1, 1) - &sixteen * eps;
        room.is_positive() && sixteen <= &self.nc_const * room
    }

    pub fn threshold(&self, c: &WeightVector, eps: &Rational) -> Rational {
        &self.nc_const * eps * int_rat(&c.l1())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NecessaryCondition {
    /// Minimizer of `||lambda c~ - c||_1`; `0` denotes an infimum approached from above.
    #[serde(with = "serde_str::rat")]
    pub lambda_opt: Rational,
    #[serde(with = "serde_str::rat")]
    pub residual: Rational,
    #[serde(with = "serde_str::rat")]
    pub threshold: Rational,
    pub satisfied: bool,
    pub eps_admissible: bool,
    pub preconditions: PreconditionReport,
    /// `!satisfied` together with all hypotheses: `c~` is certainly not critical.
    pub certifies_noncritical: bool,
}

pub fn necessary_condition(
    inst: &Instance,
    ctilde: &ProfitVector,
    bases: &[Vec<usize>; 3],
    consts: &NcConstants,
) -> Result<NecessaryCondition> {
    let c = inst.c();
    if ctilde.len() != c.len() {
        return Err(Error::LengthMismatch { expected: c.len(), got: ctilde.len() });
    }
    if let Some(i) = ctilde.entries().iter().position(|x| x.is_negative()) {
        return Err(Error::NegativeProfit(i));
    }
    let (lambda_opt, residual) = best_scale(c.entries(), ctilde.entries()).ok_or(Error::ZeroVector)?;
    let threshold = consts.threshold(c, inst.eps());
    let satisfied = residual <= threshold;
    let preconditions = half_fill_preconditions(c, bases, &consts.delta);
    let eps_admissible = consts.eps_admissible(inst.eps());
    Ok(NecessaryCondition {
        certifies_noncritical: !satisfied && preconditions.holds && eps_admissible,
        lambda_opt,
        residual,
        threshold,
        satisfied,
        eps_admissible,
        preconditions,
    })
}

/// Smallest `||c~||_1` of a nonzero `c~ >= 0` with `min_lambda ||lambda c~ - c||_1 <= threshold`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormBound {
    pub min_norm: u64,
    #[serde(with = "serde_str::rat")]
    pub lambda: Rational,
    pub candidates_scanned: u64,
}

/// Scale candidate `p / q` ordered by value.
#[derive(Clone, Copy, PartialEq, Eq)]
struct Scale {
    p: i128,
    q: i128,
}

impl Ord for Scale {
    fn cmp(&self, o: &Self) -> Ordering {
        (self.p * o.q).cmp(&(o.p * self.q))
    }
}

impl PartialOrd for Scale {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn ceil_div(a: i128, b: i128) -> i128 {
    a.div_euclid(b) + i128::from(a.rem_euclid(b) != 0)
}

/// Fewest units of `c~` reaching the threshold at the fixed scale `p/q`, if any.
/// All quantities are multiplied by `q`; the threshold is `tn/td`.
fn units_needed(cs: &[i128], s: i128, p: i128, q: i128, tn: i128, td: i128) -> Option<i128> {
    let fits = |rq: i128| rq * td <= tn * q;
    let full: Vec<i128> = cs.iter().map(|&c| c * q / p).collect();
    let f: i128 = full.iter().sum();
    let mut rq = s * q - f * p;
    if fits(rq) {
        return Some(ceil_div(q * (s * td - tn), p * td));
    }
    let mut gains: Vec<i128> =
        cs.iter().zip(&full).map(|(&c, &fi)| 2 * c * q - p * (2 * fi + 1)).filter(|&g| g > 0).collect();
    gains.sort_unstable_by_key(|&g| Reverse(g));
    for (e, g) in gains.into_iter().enumerate() {
        rq -= g;
        if fits(rq) {
            return Some(f + e as i128 + 1);
        }
    }
    None
}

/// Exact minimum via a scan over scales `c_j / t` in decreasing order.
///
/// The optimum sits at some breakpoint `c_j / c~_j`, and `||c||_1 - lambda N` lower-bounds
/// the residual, so the scan stops once `(||c||_1 - threshold) / lambda` reaches the best norm.
pub fn min_norm_within(c: &[BigInt], threshold: &Rational, max_candidates: u64) -> Result<NormBound> {
    if threshold.is_negative() {
        return Err(Error::InvalidArgument("negative threshold".into()));
    }
    let cs: Vec<i128> = c
        .iter()
        .filter(|x| x.is_positive())
        .map(|x| x.to_i64().map(i128::from).ok_or(Error::Overflow))
        .collect::<Result<_>>()?;
    if cs.is_empty() {
        return Err(Error::AllZeroWeights);
    }
    let s: i128 = cs.iter().sum();
    let tn = threshold.numer().to_i64().ok_or(Error::Overflow)? as i128;
    let td = threshold.denom().to_i64().ok_or(Error::Overflow)? as i128;
    let cmax = *cs.iter().max().unwrap();
    if s * td <= tn {
        return Ok(NormBound { min_norm: 1, lambda: int_rat(&BigInt::from(cmax)), candidates_scanned: 0 });
    }
    // every product below stays under s * td * q * 4 with q <= max_candidates
    let bits = |x: i128| 128 - x.leading_zeros();
    if bits(s) + bits(td) + bits(tn.max(1)) + bits(max_candidates as i128) + 4 > 126 {
        return Err(Error::Overflow);
    }
    let mut vals = cs.clone();
    vals.sort_unstable();
    vals.dedup();
    let mut heap: BinaryHeap<Scale> = vals.iter().map(|&p| Scale { p, q: 1 }).collect();
    let mut best: Option<(i128, Scale)> = None;
    let mut last: Option<Scale> = None;
    let mut scanned = 0u64;
    while let Some(sc) = heap.pop() {
        if sc.q < i128::from(u32::MAX) {
            heap.push(Scale { p: sc.p, q: sc.q + 1 });
        }
        if last == Some(sc) || last.is_some_and(|l| l.cmp(&sc) == Ordering::Equal) {
            continue;
        }
        last = Some(sc);
        let lb = ceil_div(sc.q * (s * td - tn), sc.p * td).max(1);
        if best.is_some_and(|(b, _)| lb >= b) {
            break;
        }
        scanned += 1;
        if scanned > max_candidates {
            return Err(Error::BudgetExceeded(format!("more than {max_candidates} scale candidates")));
        }
        if let Some(nu) = units_needed(&cs, s, sc.p, sc.q, tn, td) {
            let nu = nu.max(1);
            if best.is_none_or(|(b, _)| nu < b) {
                best = Some((nu, sc));
            }
        }
    }
    let (n, sc) = best.ok_or_else(|| Error::BudgetExceeded("scale candidates exhausted".into()))?;
    Ok(NormBound {
        min_norm: n as u64,
        lambda: Rational::new(BigInt::from(sc.p), BigInt::from(sc.q)),
        candidates_scanned: scanned,
    })
}
