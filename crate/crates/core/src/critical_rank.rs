//! Shortest critical vectors and rank lower bounds.
//!
//! [`l_min`] finds the shortest critical vector by enumeration, [`critical_upper`]
//! gives the explicit `floor(delta c)` construction, [`verify_gamma`] certifies
//! `L_c(eps) >= gamma / eps` on an interval by stitching pointwise bounds, and
//! [`rank_lower_bound`] turns `gamma` into `(gamma/2) ln(delta0/delta1)`.

use std::collections::{BinaryHeap, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{half_fill_preconditions, PreconditionReport};
use crate::error::{Error, Result};
use crate::hardness::{min_norm_within, next_lex, NcConstants};
use crate::instance::{is_critical, is_critical_with, make_instance, Instance, ProfitVector, WeightVector};
use crate::knapsack::KnapsackBudget;
use crate::num::{decimal_floor, floor, gcd_all, int_rat, rat, serde_str, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LMinResult {
    /// `None` when nothing critical exists up to the budget, certifying `L > budget`.
    pub value: Option<u64>,
    pub witness: Option<ProfitVector>,
    pub search_budget: u64,
    pub budget_exceeded: bool,
    pub vectors_tested: u64,
}

impl LMinResult {
    /// Certified lower bound on `L_c(eps)`.
    pub fn lower_bound(&self) -> u64 {
        self.value.unwrap_or(self.search_budget + 1)
    }
}

/// Default cap on the number of vectors `l_min` may test.
pub const LMIN_MAX_VECTORS: u64 = 200_000_000;

const CHUNK: usize = 4096;

pub fn l_min(inst: &Instance, budget: u64) -> Result<LMinResult> {
    l_min_with(inst, budget, LMIN_MAX_VECTORS)
}

/// Increasing `||.||_1`, lexicographic within a level, entry-gcd 1 only.
pub fn l_min_with(inst: &Instance, budget: u64, max_vectors: u64) -> Result<LMinResult> {
    let n = inst.n();
    let kb = KnapsackBudget::default();
    let mut tested = 0u64;
    for norm in 1..=budget {
        let mut v = vec![0u64; n];
        v[n - 1] = norm;
        let mut more = true;
        while more {
            let mut chunk = Vec::with_capacity(CHUNK);
            while more && chunk.len() < CHUNK {
                let big: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
                if gcd_all(&big).is_one() {
                    chunk.push(big);
                }
                more = next_lex(&mut v);
            }
            tested += chunk.len() as u64;
            if tested > max_vectors {
                return Err(Error::BudgetExceeded(format!("more than {max_vectors} candidate vectors")));
            }
            let hit = chunk
                .into_par_iter()
                .map(|x| {
                    let p = ProfitVector::new(x);
                    is_critical_with(inst, &p, &kb).map(|r| r.is_critical.then_some(p))
                })
                .find_first(|r| !matches!(r, Ok(None)));
            match hit {
                Some(Ok(Some(p))) => {
                    return Ok(LMinResult {
                        value: Some(norm),
                        witness: Some(p),
                        search_budget: budget,
                        budget_exceeded: false,
                        vectors_tested: tested,
                    })
                }
                Some(Err(e)) => return Err(e),
                _ => {}
            }
        }
    }
    Ok(LMinResult { value: None, witness: None, search_budget: budget, budget_exceeded: true, vectors_tested: tested })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpperBound {
    pub ctilde: ProfitVector,
    /// `n / (||c||_1 eps)`.
    #[serde(with = "serde_str::rat")]
    pub scale: Rational,
    #[serde(with = "serde_str::int")]
    pub norm: BigInt,
    /// `n / eps`.
    #[serde(with = "serde_str::rat")]
    pub bound: Rational,
    /// Exact criticality check; `None` when the instance is too large for the oracle.
    pub verified: Option<bool>,
}

/// `c~ = floor(delta c)` with `delta = n / (||c||_1 eps)`; critical with `||c~||_1 <= n / eps`.
pub fn critical_upper(inst: &Instance) -> Result<UpperBound> {
    let eps = inst.eps();
    if !eps.is_positive() {
        return Err(Error::EpsOutOfRange(eps.clone()));
    }
    let n = int_rat(&BigInt::from(inst.n()));
    let scale = &n / (int_rat(&inst.c().l1()) * eps);
    let ctilde = ProfitVector::new(inst.c().entries().iter().map(|ci| floor(&(&scale * int_rat(ci)))).collect());
    let verified = match is_critical(inst, &ctilde) {
        Ok(r) => Some(r.is_critical),
        Err(Error::ResourceBudgetExceeded { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(UpperBound { norm: ctilde.l1(), ctilde, scale, bound: n / eps, verified })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaMethod {
    ExactLmin,
    NecessaryCondition,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaOptions {
    pub lmin_budget: u64,
    pub nc: NcConstants,
    pub max_candidates: u64,
}

impl Default for GammaOptions {
    fn default() -> Self {
        Self { lmin_budget: 16, nc: NcConstants::default(), max_candidates: 50_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaPoint {
    #[serde(with = "serde_str::rat")]
    pub eps: Rational,
    /// Certified `L_c(eps) >= l_bound`.
    pub l_bound: u64,
    /// Scale attaining the bound (distance method only).
    #[serde(with = "serde_str::opt_rat")]
    pub lambda: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankBound {
    #[serde(with = "serde_str::rat")]
    pub gamma: Rational,
    #[serde(with = "serde_str::rat")]
    pub delta0: Rational,
    #[serde(with = "serde_str::rat")]
    pub delta1: Rational,
    #[serde(with = "serde_str::rat")]
    pub lower: Rational,
    #[serde(with = "serde_str::rat")]
    pub upper: Rational,
    /// `lower` truncated to 12 decimals.
    pub bound: String,
    #[serde(with = "serde_str::int")]
    pub floor_bound: BigInt,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GammaCertificate {
    pub method: GammaMethod,
    #[serde(with = "serde_str::int_vec")]
    pub c: Vec<BigInt>,
    pub bases: Option<[Vec<usize>; 3]>,
    #[serde(with = "serde_str::rat")]
    pub delta0: Rational,
    #[serde(with = "serde_str::rat")]
    pub delta1: Rational,
    pub points: Vec<GammaPoint>,
    /// `l_bound(eps_j) * eps_(j+1)` per cell, or `delta0 * l_bound` for a single point.
    #[serde(with = "serde_str::rat_vec")]
    pub cells: Vec<Rational>,
    #[serde(with = "serde_str::rat")]
    pub gamma: Rational,
    pub options: GammaOptions,
    pub preconditions: Option<PreconditionReport>,
    pub eps_admissible: bool,
    /// Every hypothesis behind the pointwise bounds holds.
    pub sound: bool,
    pub rank_bound: Option<RankBound>,
}

impl GammaCertificate {
    pub fn grid(&self) -> Vec<Rational> {
        self.points.iter().map(|p| p.eps.clone()).collect()
    }
}

fn check_grid(grid: &[Rational]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::UncertifiableGrid("empty grid".into()));
    }
    if grid.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::UncertifiableGrid("grid must be strictly decreasing".into()));
    }
    if !grid.last().unwrap().is_positive() || grid[0] >= rat(1, 2) {
        return Err(Error::UncertifiableGrid("grid points must lie in (0, 1/2)".into()));
    }
    Ok(())
}

fn point_bound(
    c: &WeightVector,
    eps: &Rational,
    method: GammaMethod,
    opts: &GammaOptions,
) -> Result<GammaPoint> {
    match method {
        GammaMethod::ExactLmin => {
            let r = l_min(&make_instance(c.clone(), eps.clone())?, opts.lmin_budget)?;
            Ok(GammaPoint { eps: eps.clone(), l_bound: r.lower_bound(), lambda: None })
        }
        GammaMethod::NecessaryCondition => {
            let t = opts.nc.threshold(c, eps);
            let nb = min_norm_within(c.entries(), &t, opts.max_candidates)?;
            Ok(GammaPoint { eps: eps.clone(), l_bound: nb.min_norm, lambda: Some(nb.lambda) })
        }
    }
}

fn stitch(points: &[GammaPoint]) -> Vec<Rational> {
    if points.len() == 1 {
        return vec![&points[0].eps * int_rat(&BigInt::from(points[0].l_bound))];
    }
    points.windows(2).map(|w| int_rat(&BigInt::from(w[0].l_bound)) * &w[1].eps).collect()
}

fn assemble(
    c: &WeightVector,
    bases: Option<&[Vec<usize>; 3]>,
    method: GammaMethod,
    opts: &GammaOptions,
    points: Vec<GammaPoint>,
) -> Result<GammaCertificate> {
    let cells = stitch(&points);
    let gamma = cells.iter().min().cloned().unwrap();
    if !gamma.is_positive() {
        return Err(Error::UncertifiableGrid(format!("gamma = {gamma}")));
    }
    let preconditions = bases.map(|b| half_fill_preconditions(c, b, &opts.nc.delta));
    let eps_admissible = points.iter().all(|p| opts.nc.eps_admissible(&p.eps));
    let sound = match method {
        GammaMethod::ExactLmin => true,
        GammaMethod::NecessaryCondition => eps_admissible && preconditions.as_ref().is_some_and(|p| p.holds),
    };
    let delta0 = points[0].eps.clone();
    let delta1 = points.last().unwrap().eps.clone();
    let rank_bound = if sound && delta0 > delta1 { rank_lower_bound(&gamma, &delta0, &delta1).ok() } else { None };
    Ok(GammaCertificate {
        method,
        c: c.entries().to_vec(),
        bases: bases.cloned(),
        delta0,
        delta1,
        points,
        cells,
        gamma,
        options: opts.clone(),
        preconditions,
        eps_admissible,
        sound,
        rank_bound,
    })
}

/// Certifies `L_c(eps) >= gamma / eps` on `[grid.last, grid[0]]`.
///
/// `L_c` is non-increasing in `eps`, so a bound at the upper end of each cell
/// covers the whole cell.
pub fn verify_gamma(
    c: &WeightVector,
    bases: Option<&[Vec<usize>; 3]>,
    grid: &[Rational],
    method: GammaMethod,
    opts: &GammaOptions,
) -> Result<GammaCertificate> {
    check_grid(grid)?;
    let points = grid.iter().map(|e| point_bound(c, e, method, opts)).collect::<Result<Vec<_>>>()?;
    assemble(c, bases, method, opts, points)
}

/// `delta0, delta0 / ratio, ...` down to and including `delta1`.
pub fn geometric_grid(delta0: &Rational, delta1: &Rational, ratio: &Rational) -> Result<Vec<Rational>> {
    if !(delta1.is_positive() && delta0 >= delta1) || *ratio <= rat(1, 1) {
        return Err(Error::InvalidInterval);
    }
    let mut grid = vec![delta0.clone()];
    loop {
        let next = grid.last().unwrap() / ratio;
        if next <= *delta1 {
            break;
        }
        grid.push(next);
    }
    if grid.last().unwrap() != delta1 {
        grid.push(delta1.clone());
    }
    Ok(grid)
}

/// Geometric grid, refined by cell midpoints until `gamma >= target` or the grid
/// would exceed `max_points`. Point bounds are cached across refinements.
#[allow(clippy::too_many_arguments)]
pub fn auto_gamma(
    c: &WeightVector,
    bases: Option<&[Vec<usize>; 3]>,
    delta0: &Rational,
    delta1: &Rational,
    ratio: &Rational,
    method: GammaMethod,
    opts: &GammaOptions,
    target: &Rational,
    max_points: usize,
) -> Result<GammaCertificate> {
    let mut grid = geometric_grid(delta0, delta1, ratio)?;
    let mut cache: HashMap<Rational, GammaPoint> = HashMap::new();
    loop {
        let missing: Vec<Rational> = grid.iter().filter(|e| !cache.contains_key(*e)).cloned().collect();
        let fresh = missing.par_iter().map(|e| point_bound(c, e, method, opts)).collect::<Result<Vec<_>>>()?;
        for p in fresh {
            cache.insert(p.eps.clone(), p);
        }
        let points: Vec<GammaPoint> = grid.iter().map(|e| cache[e].clone()).collect();
        let cert = assemble(c, bases, method, opts, points)?;
        if cert.gamma >= *target || 2 * grid.len() - 1 > max_points || grid.len() < 2 {
            return Ok(cert);
        }
        let mut finer = Vec::with_capacity(2 * grid.len());
        for w in grid.windows(2) {
            finer.push(w[0].clone());
            finer.push((&w[0] + &w[1]) / rat(2, 1));
        }
        finer.push(grid.last().unwrap().clone());
        grid = finer;
    }
}

/// `2 atanh(y) = ln((1+y)/(1-y))` for `0 <= y < 1`, as an enclosing interval.
fn two_atanh(y: &Rational, terms: u32) -> (Rational, Rational) {
    let y2 = y * y;
    let mut pow = y.clone();
    let mut sum = Rational::zero();
    for j in 0..terms {
        sum += &pow / int_rat(&BigInt::from(2 * j + 1));
        pow *= &y2;
    }
    // remaining terms are at most pow/(2J+1) * (1 + y^2 + y^4 + ...)
    let tail = &pow / (int_rat(&BigInt::from(2 * terms + 1)) * (rat(1, 1) - &y2));
    (&sum * rat(2, 1), (sum + tail) * rat(2, 1))
}

const LN_TERMS: u32 = 48;

/// Interval `[lo, hi]` containing `ln x` for `x >= 1`.
pub fn ln_bounds(x: &Rational) -> (Rational, Rational) {
    assert!(*x >= rat(1, 1), "ln_bounds needs x >= 1");
    let mut k = x.numer().bits() as i64 - x.denom().bits() as i64;
    let pow2 = |k: i64| -> Rational {
        if k >= 0 {
            int_rat(&(BigInt::one() << k as u64))
        } else {
            Rational::new(BigInt::one(), BigInt::one() << (-k) as u64)
        }
    };
    while pow2(k) > *x {
        k -= 1;
    }
    while pow2(k + 1) <= *x {
        k += 1;
    }
    let r = x / pow2(k);
    let y = (&r - rat(1, 1)) / (&r + rat(1, 1));
    let (rlo, rhi) = two_atanh(&y, LN_TERMS);
    let (l2lo, l2hi) = two_atanh(&rat(1, 3), LN_TERMS);
    let kk = int_rat(&BigInt::from(k));
    (&kk * l2lo + rlo, &kk * l2hi + rhi)
}

/// `(gamma / 2) ln(delta0 / delta1)` with the lower end used for the integer bound.
pub fn rank_lower_bound(gamma: &Rational, delta0: &Rational, delta1: &Rational) -> Result<RankBound> {
    if *gamma < rat(2, 1) {
        return Err(Error::GammaTooSmall(gamma.clone()));
    }
    if !(delta1.is_positive() && delta0 > delta1) {
        return Err(Error::InvalidInterval);
    }
    let (lo, hi) = ln_bounds(&(delta0 / delta1));
    let half = gamma / rat(2, 1);
    let lower = &half * lo;
    let upper = half * hi;
    Ok(RankBound {
        gamma: gamma.clone(),
        delta0: delta0.clone(),
        delta1: delta1.clone(),
        bound: decimal_floor(&lower, 12),
        floor_bound: floor(&lower),
        lower,
        upper,
    })
}

/// Minimum of `||lambda x - c||_1` over `x >= 0` integral with `||x||_1 <= budget`,
/// by a priority queue over marginal gains.
fn min_residual_heap(c: &[BigInt], lambda: &Rational, budget: u64) -> Rational {
    let cr: Vec<Rational> = c.iter().map(int_rat).collect();
    let mut x = vec![BigInt::zero(); c.len()];
    let gain = |i: usize, xi: &BigInt| -> Rational {
        let now = (lambda * int_rat(xi) - &cr[i]).abs();
        let next = (lambda * int_rat(&(xi + 1u32)) - &cr[i]).abs();
        now - next
    };
    let mut heap: BinaryHeap<(Rational, std::cmp::Reverse<usize>)> =
        (0..c.len()).map(|i| (gain(i, &x[i]), std::cmp::Reverse(i))).collect();
    let mut left = BigInt::from(budget);
    let mut residual: Rational = cr.iter().sum();
    while left.is_positive() {
        let Some((g, std::cmp::Reverse(i))) = heap.pop() else { break };
        if !g.is_positive() {
            break;
        }
        // a step with gain lambda is followed by equal steps while below c_i / lambda
        let steps = if g == *lambda {
            let room = floor(&(&cr[i] / lambda)) - &x[i];
            room.min(left.clone()).max(BigInt::one())
        } else {
            BigInt::one()
        };
        residual -= &g * int_rat(&steps);
        x[i] += &steps;
        left -= &steps;
        heap.push((gain(i, &x[i]), std::cmp::Reverse(i)));
    }
    residual
}

/// Independent check that no `c~` with `||c~||_1 < l_bound` is within the threshold.
pub fn check_distance_bound(c: &[BigInt], threshold: &Rational, l_bound: u64, max_candidates: u64) -> Result<bool> {
    if l_bound <= 1 {
        return Ok(true);
    }
    let n1 = l_bound - 1;
    let s: Rational = c.iter().map(int_rat).sum();
    if s <= *threshold {
        return Ok(false);
    }
    // scales below (s - T) / n1 cannot reach the threshold with n1 units
    let lam_min = (&s - threshold) / int_rat(&BigInt::from(n1));
    let mut checked = 0u64;
    for cj in c.iter().filter(|x| x.is_positive()) {
        let cj = int_rat(cj);
        for t in 1..=n1 {
            let lambda = &cj / int_rat(&BigInt::from(t));
            if lambda < lam_min {
                break;
            }
            checked += 1;
            if checked > max_candidates {
                return Err(Error::BudgetExceeded(format!("more than {max_candidates} scales to re-check")));
            }
            if min_residual_heap(c, &lambda, n1) <= *threshold {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Re-derives every number in a certificate. Returns the violated properties.
pub fn verify_gamma_certificate(cert: &GammaCertificate) -> Vec<String> {
    let mut bad = Vec::new();
    let c = match WeightVector::new(cert.c.clone()) {
        Ok(c) => c,
        Err(e) => return vec![format!("invalid c: {e}")],
    };
    let grid = cert.grid();
    if let Err(e) = check_grid(&grid) {
        return vec![e.to_string()];
    }
    if cert.delta0 != grid[0] || cert.delta1 != *grid.last().unwrap() {
        bad.push("delta0/delta1 do not match the grid ends".into());
    }
    for p in &cert.points {
        let ok = match cert.method {
            GammaMethod::ExactLmin => make_instance(c.clone(), p.eps.clone())
                .and_then(|inst| l_min(&inst, p.l_bound.saturating_sub(1)))
                .map(|r| r.budget_exceeded),
            GammaMethod::NecessaryCondition => {
                let t = cert.options.nc.threshold(&c, &p.eps);
                check_distance_bound(&cert.c, &t, p.l_bound, cert.options.max_candidates)
            }
        };
        match ok {
            Ok(true) => {}
            Ok(false) => bad.push(format!("bound {} at eps = {} is not certified", p.l_bound, p.eps)),
            Err(e) => bad.push(format!("re-check at eps = {} failed: {e}", p.eps)),
        }
    }
    let cells = stitch(&cert.points);
    if cells != cert.cells {
        bad.push("cell values do not match the stitching rule".into());
    }
    if cells.iter().min() != Some(&cert.gamma) {
        bad.push("gamma is not the minimum cell value".into());
    }
    let pre = cert.bases.as_ref().map(|b| half_fill_preconditions(&c, b, &cert.options.nc.delta));
    if pre != cert.preconditions {
        bad.push("precondition report mismatch".into());
    }
    let adm = cert.points.iter().all(|p| cert.options.nc.eps_admissible(&p.eps));
    if adm != cert.eps_admissible {
        bad.push("eps admissibility mismatch".into());
    }
    let sound = match cert.method {
        GammaMethod::ExactLmin => true,
        GammaMethod::NecessaryCondition => adm && pre.as_ref().is_some_and(|p| p.holds),
    };
    if sound != cert.sound {
        bad.push("soundness flag mismatch".into());
    }
    if !sound {
        bad.push("hypotheses of the distance test do not hold; bounds carry no guarantee".into());
    }
    if let Some(rb) = &cert.rank_bound {
        match rank_lower_bound(&cert.gamma, &cert.delta0, &cert.delta1) {
            Ok(fresh) if fresh == *rb => {}
            Ok(_) => bad.push("rank bound mismatch".into()),
            Err(e) => bad.push(format!("rank bound invalid: {e}")),
        }
    }
    bad
}
