//! Exact 0/1 knapsack oracles: `max { p·x : w·x <= cap, x ∈ {0,1}^n }`.
//!
//! Three interchangeable engines share one preprocessing step:
//!
//! * zero-profit items are dropped (they never change the optimum and are never
//!   part of a witness),
//! * items heavier than the capacity are dropped,
//! * zero-weight items with positive profit belong to every optimum.
//!
//! Among all optimal subsets the witness is the lexicographically smallest
//! sorted index sequence, so every engine returns the same witness.

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dp,
    MeetInTheMiddle,
    Exhaustive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnapsackQuery {
    pub weights: Vec<BigInt>,
    pub capacity: BigInt,
    pub profits: Vec<BigInt>,
}

impl KnapsackQuery {
    pub fn new(weights: Vec<BigInt>, capacity: BigInt, profits: Vec<BigInt>) -> Result<Self> {
        if weights.len() != profits.len() {
            return Err(Error::LengthMismatch { expected: weights.len(), got: profits.len() });
        }
        if let Some(i) = weights.iter().position(|w| w.is_negative()) {
            return Err(Error::NegativeWeight(i));
        }
        if let Some(i) = profits.iter().position(|p| p.is_negative()) {
            return Err(Error::NegativeProfit(i));
        }
        if capacity.is_negative() {
            return Err(Error::InvalidArgument("negative knapsack capacity".into()));
        }
        Ok(Self { weights, capacity, profits })
    }

    pub fn from_i64(weights: &[i64], capacity: i64, profits: &[i64]) -> Result<Self> {
        Self::new(
            weights.iter().map(|&w| BigInt::from(w)).collect(),
            BigInt::from(capacity),
            profits.iter().map(|&p| BigInt::from(p)).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KnapsackResult {
    pub opt_value: BigInt,
    pub witness: Vec<usize>,
    pub method: Method,
}

/// Resource limits for method selection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnapsackBudget {
    /// Upper limit on `(items + 1) * (capacity + 1)` DP table cells.
    pub max_dp_cells: u64,
    pub max_exhaustive_n: usize,
    pub max_mitm_n: usize,
}

impl Default for KnapsackBudget {
    fn default() -> Self {
        Self { max_dp_cells: 10_000_000, max_exhaustive_n: 20, max_mitm_n: 40 }
    }
}

pub const EXHAUSTIVE_ORACLE_LIMIT: usize = 25;

/// Auto-selecting exact solver. With `hint`, only that method is tried.
pub fn knapsack_max(
    q: &KnapsackQuery,
    hint: Option<Method>,
    budget: &KnapsackBudget,
) -> Result<KnapsackResult> {
    let prep = Prepared::new(q);
    let k = prep.active.len();
    let dp_cells = prep.cap_usize().and_then(|c| (k as u64 + 1).checked_mul(c as u64 + 1));
    let dp_ok = dp_cells.is_some_and(|cells| cells <= budget.max_dp_cells);
    let chosen = match hint {
        Some(Method::Dp) if dp_ok => Method::Dp,
        Some(Method::Exhaustive) if k <= budget.max_exhaustive_n => Method::Exhaustive,
        Some(Method::MeetInTheMiddle) if k <= budget.max_mitm_n => Method::MeetInTheMiddle,
        Some(_) => return Err(prep.budget_error()),
        None if dp_ok => Method::Dp,
        None if k <= budget.max_exhaustive_n => Method::Exhaustive,
        None if k <= budget.max_mitm_n => Method::MeetInTheMiddle,
        None => return Err(prep.budget_error()),
    };
    Ok(prep.solve(chosen))
}

/// Ground-truth oracle by full enumeration of the relevant items.
pub fn knapsack_max_exhaustive(q: &KnapsackQuery) -> Result<KnapsackResult> {
    let prep = Prepared::new(q);
    if prep.active.len() > EXHAUSTIVE_ORACLE_LIMIT {
        return Err(Error::TooLarge { n: prep.active.len(), limit: EXHAUSTIVE_ORACLE_LIMIT });
    }
    Ok(prep.solve(Method::Exhaustive))
}

#[derive(Clone, Debug)]
struct Item {
    index: usize,
    weight: BigInt,
    profit: BigInt,
}

/// Items after preprocessing. `relevant` holds forced and active items in
/// index order; `active` are the items with positive weight.
struct Prepared {
    n: usize,
    relevant: Vec<Item>,
    active: Vec<Item>,
    capacity: BigInt,
}

impl Prepared {
    fn new(q: &KnapsackQuery) -> Self {
        let mut relevant = Vec::new();
        for (i, (w, p)) in q.weights.iter().zip(&q.profits).enumerate() {
            if p.is_zero() || w > &q.capacity {
                continue;
            }
            relevant.push(Item { index: i, weight: w.clone(), profit: p.clone() });
        }
        let active: Vec<Item> = relevant.iter().filter(|it| !it.weight.is_zero()).cloned().collect();
        let total: BigInt = active.iter().map(|it| &it.weight).sum();
        let capacity = q.capacity.clone().min(total);
        Self { n: q.len(), relevant, active, capacity }
    }

    fn cap_usize(&self) -> Option<usize> {
        self.capacity.to_usize()
    }

    fn budget_error(&self) -> Error {
        Error::ResourceBudgetExceeded { n: self.active.len(), capacity: self.capacity.clone() }
    }

    fn fits_u64(&self) -> bool {
        let wsum: BigInt = self.active.iter().map(|it| &it.weight).sum();
        let psum: BigInt = self.relevant.iter().map(|it| &it.profit).sum();
        wsum.to_u64().is_some() && psum.to_u64().is_some()
    }

    fn solve(&self, method: Method) -> KnapsackResult {
        let (opt, witness) = if self.fits_u64() {
            self.solve_with::<u64>(method)
        } else {
            self.solve_with::<BigInt>(method)
        };
        debug_assert!(witness.len() <= self.n);
        KnapsackResult { opt_value: opt, witness, method }
    }

    fn solve_with<V: Acc>(&self, method: Method) -> (BigInt, Vec<usize>) {
        let items: Vec<(V, V)> = self
            .active
            .iter()
            .map(|it| (V::from_big(&it.weight), V::from_big(&it.profit)))
            .collect();
        let cap = V::from_big(&self.capacity);
        match method {
            Method::Exhaustive => self.exhaustive::<V>(&items, &cap),
            Method::Dp => self.dp::<V>(&items),
            Method::MeetInTheMiddle => self.mitm::<V>(&items, &cap),
        }
    }

    fn forced_indices(&self) -> Vec<usize> {
        self.relevant.iter().filter(|it| it.weight.is_zero()).map(|it| it.index).collect()
    }

    fn forced_value(&self) -> BigInt {
        self.relevant.iter().filter(|it| it.weight.is_zero()).map(|it| &it.profit).sum()
    }

    /// Lexicographic-min recovery shared by the DP and MITM engines.
    /// `suffix_opt(a, cap)` is the optimum over `active[a..]` at capacity `cap`.
    fn recover<V: Acc>(&self, items: &[(V, V)], opt_active: V, mut suffix_opt: impl FnMut(usize, &V) -> V) -> Vec<usize> {
        // forced_after[j]: total forced profit among relevant[j..].
        let r = self.relevant.len();
        let mut forced_after = vec![V::zero(); r + 1];
        for j in (0..r).rev() {
            let it = &self.relevant[j];
            forced_after[j] = if it.weight.is_zero() {
                forced_after[j + 1].add(&V::from_big(&it.profit))
            } else {
                forced_after[j + 1].clone()
            };
        }
        let mut need = forced_after[0].add(&opt_active);
        let mut cap = V::from_big(&self.capacity);
        let mut witness = Vec::new();
        let mut a = 0usize;
        for (j, it) in self.relevant.iter().enumerate() {
            if need.is_nil() {
                break;
            }
            if it.weight.is_zero() {
                need = need.sub(&V::from_big(&it.profit));
                witness.push(it.index);
                continue;
            }
            let (w, p) = &items[a];
            a += 1;
            if w <= &cap {
                let rest = cap.sub(w);
                let reach = p.add(&forced_after[j + 1]).add(&suffix_opt(a, &rest));
                if reach >= need {
                    need = need.sub(p);
                    cap = rest;
                    witness.push(it.index);
                }
            }
        }
        witness
    }

    fn dp<V: Acc>(&self, items: &[(V, V)]) -> (BigInt, Vec<usize>) {
        let cap = self.cap_usize().expect("dp selected only for machine-sized capacity");
        let k = items.len();
        let width = cap + 1;
        let weights: Vec<usize> = self.active.iter().map(|it| it.weight.to_usize().unwrap()).collect();
        // best[i * width + c] = optimum over items[i..] with capacity c
        let mut best = vec![V::zero(); (k + 1) * width];
        for i in (0..k).rev() {
            let (lo, hi) = best.split_at_mut((i + 1) * width);
            let row = &mut lo[i * width..];
            let next = &hi[..width];
            let wi = weights[i];
            let pi = &items[i].1;
            for c in 0..width {
                let skip = &next[c];
                row[c] = if wi <= c {
                    let take = pi.add(&next[c - wi]);
                    if &take > skip { take } else { skip.clone() }
                } else {
                    skip.clone()
                };
            }
        }
        let opt_active = best[cap].clone();
        let witness = self.recover(items, opt_active.clone(), |a, c| {
            best[a * width + c.to_usize_exact()].clone()
        });
        (self.forced_value() + opt_active.to_big(), witness)
    }

    fn exhaustive<V: Acc>(&self, items: &[(V, V)], cap: &V) -> (BigInt, Vec<usize>) {
        let k = items.len();
        let forced = self.forced_indices();
        let full_set = |mask: u64| -> Vec<usize> {
            let mut v = forced.clone();
            v.extend((0..k).filter(|b| mask >> b & 1 == 1).map(|b| self.active[b].index));
            v.sort_unstable();
            v
        };
        let mut best_val = V::zero();
        let mut best_set = full_set(0);
        let (mut w, mut p) = (V::zero(), V::zero());
        let mut mask = 0u64;
        // Gray-code walk: one item flips per step.
        for step in 1u64..(1u64 << k) {
            let bit = step.trailing_zeros() as usize;
            mask ^= 1 << bit;
            let (wi, pi) = &items[bit];
            if mask >> bit & 1 == 1 {
                w = w.add(wi);
                p = p.add(pi);
            } else {
                w = w.sub(wi);
                p = p.sub(pi);
            }
            if &w > cap || p < best_val {
                continue;
            }
            if p > best_val {
                best_val = p.clone();
                best_set = full_set(mask);
            } else {
                let cand = full_set(mask);
                if cand < best_set {
                    best_set = cand;
                }
            }
        }
        (self.forced_value() + best_val.to_big(), best_set)
    }

    fn mitm<V: Acc>(&self, items: &[(V, V)], cap: &V) -> (BigInt, Vec<usize>) {
        let opt_active = mitm_value(items, cap);
        let witness = self.recover(items, opt_active.clone(), |a, c| mitm_value(&items[a..], c));
        (self.forced_value() + opt_active.to_big(), witness)
    }
}

fn subset_sums<V: Acc>(items: &[(V, V)]) -> Vec<(V, V)> {
    let mut out = vec![(V::zero(), V::zero())];
    for (w, p) in items {
        let len = out.len();
        for i in 0..len {
            let (ow, op) = &out[i];
            let e = (ow.add(w), op.add(p));
            out.push(e);
        }
    }
    out
}

/// Optimum value by splitting the items into two halves.
fn mitm_value<V: Acc>(items: &[(V, V)], cap: &V) -> V {
    let (left, right) = items.split_at(items.len() / 2);
    let mut rs = subset_sums(right);
    rs.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(&a.1)));
    // prefix maxima of profit over increasing weight
    let mut prefix: Vec<(V, V)> = Vec::with_capacity(rs.len());
    for (w, p) in rs {
        match prefix.last() {
            Some((_, bp)) if &p <= bp => {}
            _ => prefix.push((w, p)),
        }
    }
    let mut best = V::zero();
    for (w, p) in subset_sums(left) {
        if &w > cap {
            continue;
        }
        let room = cap.sub(&w);
        let pos = prefix.partition_point(|(pw, _)| pw <= &room);
        if pos > 0 {
            let cand = p.add(&prefix[pos - 1].1);
            if cand > best {
                best = cand;
            }
        }
    }
    best
}

/// Accumulator abstraction so small instances run on machine words.
trait Acc: Clone + Ord {
    fn zero() -> Self;
    fn is_nil(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn from_big(b: &BigInt) -> Self;
    fn to_big(&self) -> BigInt;
    fn to_usize_exact(&self) -> usize;
}

impl Acc for u64 {
    fn zero() -> Self {
        0
    }
    fn is_nil(&self) -> bool {
        *self == 0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn from_big(b: &BigInt) -> Self {
        b.to_u64().expect("u64 path selected only when sums fit")
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn to_usize_exact(&self) -> usize {
        *self as usize
    }
}

impl Acc for BigInt {
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_nil(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn from_big(b: &BigInt) -> Self {
        b.clone()
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn to_usize_exact(&self) -> usize {
        self.to_usize().expect("dp capacity fits usize")
    }
}
