//! Additive bases and the greedy half-filling knapsack solution.
//!
//! Given a cost vector `c` with even `||c||_1` and a profit vector `c~`,
//! [`greedy_certificate`] builds a 0/1 point `J` with `c(J) = ||c||_1 / 2`
//! exactly: take items by decreasing profit/cost ratio (skipping one
//! reserved basis block), then close the remaining gap with a subset of that
//! basis. The certificate carries everything needed to re-check the value
//! bound `c~(J) >= ||c~||_1 / 2 + ||w||_1 / 16` with `w = c~ - c / lambda`.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{ProfitVector, WeightVector};
use crate::num::{int_rat, rat, serde_str, Rational};

/// Default `delta` for the precondition and claim checks.
pub fn default_delta() -> Rational {
    rat(1, 100)
}

/// Length of the contiguous run `{0, ..., R}` of subset sums.
///
/// Sorted ascending, each value must not exceed one plus the sum of the
/// smaller values; the first value that does blocks `R + 1` forever.
pub fn contiguous_reach(values: &[BigInt]) -> BigInt {
    let mut sorted: Vec<&BigInt> = values.iter().collect();
    sorted.sort();
    let mut reach = BigInt::zero();
    for v in sorted {
        if *v > &reach + 1u32 {
            break;
        }
        reach += v;
    }
    reach
}

/// Every `k ∈ {0, ..., interval_max}` is a subset sum of `values`.
pub fn is_additive_basis(values: &[BigInt], interval_max: &BigInt) -> bool {
    if interval_max.is_negative() {
        return true;
    }
    values.iter().all(|v| !v.is_negative()) && contiguous_reach(values) >= *interval_max
}

/// `(2^0, 2^1, ..., 2^(floor(m/8)+1))`, covering `{0, ..., 2 * 2^(m/8)}`.
pub fn powers_basis(m: usize) -> Vec<BigInt> {
    (0..=(m / 8 + 1)).map(|e| BigInt::from(1u32) << e).collect()
}

/// Powers of two plus one remainder term whose total is exactly `target`:
/// `(1, 2, ..., 2^(t-1), target - (2^t - 1))`. Covers `{0, ..., target}`.
pub fn covering_basis(target: &BigInt) -> Vec<BigInt> {
    let mut out = Vec::new();
    let mut sum = BigInt::zero();
    let mut p = BigInt::from(1u32);
    while &sum + &p <= *target {
        sum += &p;
        out.push(p.clone());
        p <<= 1;
    }
    let rest = target - &sum;
    if rest.is_positive() {
        out.push(rest);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdditiveBasis {
    pub indices: Vec<usize>,
    pub values: Vec<BigInt>,
    pub covered_interval_max: BigInt,
}

impl AdditiveBasis {
    pub fn from_indices(c: &[BigInt], indices: &[usize]) -> Result<Self> {
        if indices.iter().any(|&i| i >= c.len()) {
            return Err(Error::InvalidBases);
        }
        let values: Vec<BigInt> = indices.iter().map(|&i| c[i].clone()).collect();
        let covered_interval_max = contiguous_reach(&values);
        Ok(Self { indices: indices.to_vec(), values, covered_interval_max })
    }

    pub fn from_values(values: Vec<BigInt>) -> Self {
        let indices = (0..values.len()).collect();
        let covered_interval_max = contiguous_reach(&values);
        Self { indices, values, covered_interval_max }
    }

    pub fn total(&self) -> BigInt {
        self.values.iter().sum()
    }
}

/// Largest target for which `basis_fill` falls back to a subset-sum table.
const FILL_DP_LIMIT: u64 = 1 << 26;

/// Subset of `basis.indices` whose values sum to `target`.
pub fn basis_fill(basis: &AdditiveBasis, target: &BigInt) -> Result<Vec<usize>> {
    if target.is_negative() {
        return Err(Error::NoExactFill { target: target.clone() });
    }
    if *target <= basis.covered_interval_max {
        return Ok(fill_contiguous(basis, target));
    }
    fill_dp(basis, target)
}

fn fill_contiguous(basis: &AdditiveBasis, target: &BigInt) -> Vec<usize> {
    let mut order: Vec<usize> = (0..basis.values.len()).collect();
    order.sort_by(|&a, &b| basis.values[a].cmp(&basis.values[b]).then(a.cmp(&b)));
    // prefix[t] = sum of the t smallest values, valid while the run is contiguous
    let mut prefix = vec![BigInt::zero()];
    for &o in &order {
        let s = prefix.last().unwrap();
        if basis.values[o] > s + 1u32 {
            break;
        }
        prefix.push(s + &basis.values[o]);
    }
    let mut rest = target.clone();
    let mut out = Vec::new();
    for t in (0..prefix.len() - 1).rev() {
        if rest > prefix[t] {
            rest -= &basis.values[order[t]];
            out.push(basis.indices[order[t]]);
        }
    }
    debug_assert!(rest.is_zero());
    out.sort_unstable();
    out
}

fn fill_dp(basis: &AdditiveBasis, target: &BigInt) -> Result<Vec<usize>> {
    let none = || Error::NoExactFill { target: target.clone() };
    let t = target.to_u64().filter(|&t| t <= FILL_DP_LIMIT).ok_or_else(none)? as usize;
    let k = basis.values.len();
    // reach[i][s]: s is a subset sum of the first i values
    let mut reach = vec![vec![false; t + 1]; k + 1];
    reach[0][0] = true;
    for i in 0..k {
        let v = basis.values[i].to_usize().unwrap_or(usize::MAX);
        let (lo, hi) = reach.split_at_mut(i + 1);
        let (prev, next) = (&lo[i], &mut hi[0]);
        for s in 0..=t {
            next[s] = prev[s] || (v <= s && prev[s - v]);
        }
    }
    if !reach[k][t] {
        return Err(none());
    }
    let mut s = t;
    let mut out = Vec::new();
    for i in (0..k).rev() {
        if !reach[i][s] {
            let v = basis.values[i].to_usize().unwrap();
            s -= v;
            out.push(basis.indices[i]);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Checks the hypotheses under which the greedy value bound is guaranteed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreconditionReport {
    #[serde(with = "serde_str::rat")]
    pub delta: Rational,
    pub bases_disjoint: bool,
    pub bases_cover_linf: [bool; 3],
    pub linf_small: bool,
    pub basis_sums_small: [bool; 3],
    pub holds: bool,
}

pub fn half_fill_preconditions(c: &WeightVector, bases: &[Vec<usize>; 3], delta: &Rational) -> PreconditionReport {
    let entries = c.entries();
    let l1 = int_rat(&c.l1());
    let linf = c.linf();
    let bound = delta * &l1;
    let mut seen = vec![false; entries.len()];
    let mut disjoint = true;
    for b in bases {
        for &i in b {
            if i >= entries.len() || seen[i] {
                disjoint = false;
            } else {
                seen[i] = true;
            }
        }
    }
    let valid_idx = |b: &Vec<usize>| b.iter().all(|&i| i < entries.len());
    let cover = |b: &Vec<usize>| {
        valid_idx(b) && is_additive_basis(&b.iter().map(|&i| entries[i].clone()).collect::<Vec<_>>(), &linf)
    };
    let small_sum = |b: &Vec<usize>| {
        valid_idx(b) && int_rat(&b.iter().map(|&i| &entries[i]).sum::<BigInt>()) <= bound
    };
    let bases_cover_linf = [cover(&bases[0]), cover(&bases[1]), cover(&bases[2])];
    let basis_sums_small = [small_sum(&bases[0]), small_sum(&bases[1]), small_sum(&bases[2])];
    let linf_small = int_rat(&linf) <= bound;
    let holds = disjoint
        && linf_small
        && bases_cover_linf.iter().all(|&x| x)
        && basis_sums_small.iter().all(|&x| x);
    PreconditionReport {
        delta: delta.clone(),
        bases_disjoint: disjoint,
        bases_cover_linf,
        linf_small,
        basis_sums_small,
        holds,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GreedyCertificate {
    /// Positive-cost indices by decreasing `c~_i / c_i`, ties by index.
    pub sorted_order: Vec<usize>,
    /// Profit threshold `1/lambda`.
    #[serde(with = "serde_str::rat")]
    pub threshold: Rational,
    /// `None` when the threshold is zero (no positive ratio exists).
    #[serde(with = "serde_str::opt_rat")]
    pub lambda: Option<Rational>,
    pub q: usize,
    pub k: usize,
    #[serde(rename = "basis")]
    pub chosen_basis: usize,
    #[serde(rename = "J")]
    pub j: Vec<usize>,
    #[serde(rename = "w", with = "serde_str::rat_vec")]
    pub relative_profits: Vec<Rational>,
    #[serde(with = "serde_str::rat")]
    pub w_l1: Rational,
    #[serde(rename = "bound", with = "serde_str::rat")]
    pub bound_value: Rational,
    #[serde(rename = "achieved", with = "serde_str::int")]
    pub achieved_value: BigInt,
}

/// `a/b` vs `c/d` for nonnegative numerators and positive denominators.
fn cmp_ratio(an: &BigInt, ad: &BigInt, bn: &BigInt, bd: &BigInt) -> Ordering {
    (an * bd).cmp(&(bn * ad))
}

fn ratio(ctilde: &[BigInt], c: &[BigInt], i: usize) -> Rational {
    Rational::new(ctilde[i].clone(), c[i].clone())
}

pub fn greedy_certificate(
    c: &WeightVector,
    ctilde: &ProfitVector,
    bases: &[Vec<usize>; 3],
) -> Result<GreedyCertificate> {
    let cw = c.entries();
    let ct = ctilde.entries();
    let n = cw.len();
    if ct.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: ct.len() });
    }
    if let Some(i) = ct.iter().position(|x| x.is_negative()) {
        return Err(Error::NegativeProfit(i));
    }
    if ctilde.is_zero() {
        return Err(Error::ZeroVector);
    }
    let mut seen = vec![false; n];
    for &i in bases.iter().flatten() {
        if i >= n || seen[i] {
            return Err(Error::InvalidBases);
        }
        seen[i] = true;
    }
    let total = c.l1();
    if total.is_odd() {
        return Err(Error::OddTotalWeight(total));
    }
    let half = &total / 2;

    let mut order: Vec<usize> = (0..n).filter(|&i| cw[i].is_positive()).collect();
    order.sort_by(|&a, &b| cmp_ratio(&ct[b], &cw[b], &ct[a], &cw[a]).then(a.cmp(&b)));

    // q: longest prefix (in sorted order) that fits into half the knapsack
    let mut q = 0;
    let mut acc = BigInt::zero();
    while q < order.len() && &acc + &cw[order[q]] <= half {
        acc += &cw[order[q]];
        q += 1;
    }
    let threshold = if q == 0 {
        ratio(ct, cw, order[0]) * rat(2, 1)
    } else if q == order.len() {
        ratio(ct, cw, order[q - 1]) / rat(2, 1)
    } else {
        let hi = ratio(ct, cw, order[q - 1]);
        let lo = ratio(ct, cw, order[q]);
        if hi > lo {
            (hi + lo) / rat(2, 1)
        } else {
            // boundary group straddles the half-way mark; its members get w = 0
            hi
        }
    };
    let lambda = if threshold.is_zero() { None } else { Some(threshold.recip()) };
    let w: Vec<Rational> = (0..n).map(|i| int_rat(&ct[i]) - int_rat(&cw[i]) * &threshold).collect();
    let w_l1: Rational = w.iter().map(|x| x.abs()).sum();

    let masses: Vec<Rational> = bases.iter().map(|b| b.iter().map(|&i| w[i].abs()).sum()).collect();
    let chosen = (0..3).min_by(|&a, &b| masses[a].cmp(&masses[b]).then(a.cmp(&b))).unwrap();
    let mut in_basis = vec![false; n];
    for &i in &bases[chosen] {
        in_basis[i] = true;
    }

    // k: longest prefix whose non-basis part still fits
    let mut k = 0;
    let mut filled = BigInt::zero();
    let mut take = Vec::new();
    while k < order.len() {
        let i = order[k];
        if !in_basis[i] {
            if &filled + &cw[i] > half {
                break;
            }
            filled += &cw[i];
            take.push(i);
        }
        k += 1;
    }
    let gap = &half - &filled;
    let basis = AdditiveBasis::from_indices(cw, &bases[chosen])?;
    let fill = basis_fill(&basis, &gap).map_err(|_| Error::GapNotFillable { gap: gap.clone(), basis: chosen })?;

    let mut j = take;
    j.extend(fill);
    j.extend((0..n).filter(|&i| cw[i].is_zero() && ct[i].is_positive()));
    j.sort_unstable();
    j.dedup();

    let achieved_value: BigInt = j.iter().map(|&i| &ct[i]).sum();
    let bound_value = int_rat(&ctilde.l1()) / rat(2, 1) + &w_l1 / rat(16, 1);
    Ok(GreedyCertificate {
        sorted_order: order,
        threshold,
        lambda,
        q,
        k,
        chosen_basis: chosen,
        j,
        relative_profits: w,
        w_l1,
        bound_value,
        achieved_value,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClaimReport {
    #[serde(with = "serde_str::rat")]
    pub delta: Rational,
    #[serde(with = "serde_str::rat")]
    pub central_window_mass: Rational,
    #[serde(with = "serde_str::rat")]
    pub window_bound: Rational,
    pub window_holds: bool,
    #[serde(with = "serde_str::rat")]
    pub separation_lhs: Rational,
    #[serde(with = "serde_str::rat")]
    pub separation_bound: Rational,
    pub separation_holds: bool,
    #[serde(with = "serde_str::rat")]
    pub basis_mass: Rational,
    pub basis_mass_holds: bool,
    pub value_bound_holds: bool,
    pub half_fill_exact: bool,
    pub preconditions: PreconditionReport,
    pub preconditions_hold: bool,
}

impl ClaimReport {
    /// All inequalities hold (they are guaranteed only when `preconditions_hold`).
    pub fn all_hold(&self) -> bool {
        self.window_holds && self.separation_holds && self.basis_mass_holds && self.value_bound_holds && self.half_fill_exact
    }
}

pub fn check_claims(
    cert: &GreedyCertificate,
    c: &WeightVector,
    bases: &[Vec<usize>; 3],
    delta: &Rational,
) -> ClaimReport {
    let cw = c.entries();
    let l1 = int_rat(&c.l1());
    let w = &cert.relative_profits;
    let lo = (rat(1, 2) - delta) * &l1;
    let hi = (rat(1, 2) + delta) * &l1;
    let mut prefix = BigInt::zero();
    let mut central = Rational::zero();
    for &i in &cert.sorted_order {
        prefix += &cw[i];
        let p = int_rat(&prefix);
        if p >= lo && p <= hi {
            central += w[i].abs();
        }
    }
    let mut in_j = vec![false; cw.len()];
    for &i in &cert.j {
        in_j[i] = true;
    }
    let separation_lhs: Rational =
        (0..cw.len()).map(|i| if in_j[i] { w[i].clone() } else { -w[i].clone() }).sum();
    let basis_mass: Rational = bases[cert.chosen_basis].iter().map(|&i| w[i].abs()).sum();
    let window_bound = rat(9, 1) * delta * &cert.w_l1;
    let separation_bound = &cert.w_l1 / rat(8, 1);
    let c_j: BigInt = cert.j.iter().map(|&i| &cw[i]).sum();
    let preconditions = half_fill_preconditions(c, bases, delta);
    ClaimReport {
        delta: delta.clone(),
        window_holds: central <= window_bound,
        central_window_mass: central,
        window_bound,
        separation_holds: separation_lhs >= separation_bound,
        separation_lhs,
        separation_bound,
        basis_mass_holds: rat(3, 1) * &basis_mass <= cert.w_l1,
        basis_mass,
        value_bound_holds: int_rat(&cert.achieved_value) >= cert.bound_value,
        half_fill_exact: int_rat(&c_j) * rat(2, 1) == l1,
        preconditions_hold: preconditions.holds,
        preconditions,
    }
}

impl GreedyCertificate {
    /// Independent re-check of every field against `(c, c~, bases)`.
    /// Returns the list of violated properties (empty when valid).
    pub fn verify(&self, c: &WeightVector, ctilde: &ProfitVector, bases: &[Vec<usize>; 3]) -> Vec<String> {
        let cw = c.entries();
        let ct = ctilde.entries();
        let n = cw.len();
        let mut bad = Vec::new();
        if ct.len() != n || self.relative_profits.len() != n {
            return vec!["length mismatch".into()];
        }
        if self.j.iter().any(|&i| i >= n) || self.sorted_order.iter().any(|&i| i >= n) {
            return vec!["index out of range".into()];
        }
        let mut pos: Vec<usize> = (0..n).filter(|&i| cw[i].is_positive()).collect();
        let mut listed = self.sorted_order.clone();
        listed.sort_unstable();
        pos.sort_unstable();
        if listed != pos {
            bad.push("sorted_order is not a permutation of the positive-cost indices".into());
        }
        for win in self.sorted_order.windows(2) {
            if ratio(ct, cw, win[0]) < ratio(ct, cw, win[1]) {
                bad.push(format!("ratios not descending at {} -> {}", win[0], win[1]));
                break;
            }
        }
        let t = &self.threshold;
        for (p, &i) in self.sorted_order.iter().enumerate() {
            let r = ratio(ct, cw, i);
            let ok = if p < self.q { &r >= t } else { &r <= t };
            if !ok {
                bad.push(format!("threshold does not separate position {p}"));
                break;
            }
        }
        if self.q > 0 && self.q < self.sorted_order.len() {
            let hi = ratio(ct, cw, self.sorted_order[self.q - 1]);
            let lo = ratio(ct, cw, self.sorted_order[self.q]);
            if hi != lo && (t >= &hi || t <= &lo) {
                bad.push("threshold is not strictly between distinct boundary ratios".into());
            }
        }
        if self.lambda.as_ref().map(|l| l * t) != (!t.is_zero()).then(|| rat(1, 1)) {
            bad.push("lambda is not the reciprocal of the threshold".into());
        }
        for i in 0..n {
            if self.relative_profits[i] != int_rat(&ct[i]) - int_rat(&cw[i]) * t {
                bad.push(format!("w[{i}] mismatch"));
                break;
            }
        }
        let l1w: Rational = self.relative_profits.iter().map(|x| x.abs()).sum();
        if l1w != self.w_l1 {
            bad.push("||w||_1 mismatch".into());
        }
        let c_j: BigInt = self.j.iter().map(|&i| &cw[i]).sum();
        if &c_j * 2u32 != c.l1() {
            bad.push(format!("c(J) = {c_j} is not half of ||c||_1"));
        }
        let achieved: BigInt = self.j.iter().map(|&i| &ct[i]).sum();
        if achieved != self.achieved_value {
            bad.push("achieved value mismatch".into());
        }
        if self.bound_value != int_rat(&ctilde.l1()) / rat(2, 1) + &l1w / rat(16, 1) {
            bad.push("bound value mismatch".into());
        }
        if self.chosen_basis > 2 {
            bad.push("basis index out of range".into());
        } else {
            let masses: Vec<Rational> =
                bases.iter().map(|b| b.iter().filter(|&&i| i < n).map(|&i| self.relative_profits[i].abs()).sum()).collect();
            if masses.iter().any(|m| m < &masses[self.chosen_basis]) {
                bad.push("chosen basis does not minimize |w| mass".into());
            }
        }
        bad
    }
}
