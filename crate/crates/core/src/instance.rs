//! The polytope `P(c, eps)`: the 0/1 knapsack polytope `cx <= ||c||_1 / 2`
//! joined with the diagonal point `x*(eps) = (1/2 + eps) * 1`.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knapsack::{knapsack_max, KnapsackBudget, KnapsackQuery};
use crate::num::{self, fmt_rat, int_rat, serde_str, Rational};

/// Nonnegative integer normal vector `c` with at least one positive entry.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeightVector(Vec<BigInt>);

impl WeightVector {
    pub fn new(entries: Vec<BigInt>) -> Result<Self> {
        if let Some(i) = entries.iter().position(|x| x.is_negative()) {
            return Err(Error::NegativeWeight(i));
        }
        if entries.iter().all(|x| x.is_zero()) {
            return Err(Error::AllZeroWeights);
        }
        Ok(Self(entries))
    }

    pub fn from_i64(entries: &[i64]) -> Result<Self> {
        Self::new(entries.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1(&self) -> BigInt {
        num::l1(&self.0)
    }

    pub fn linf(&self) -> BigInt {
        num::linf(&self.0)
    }
}

/// Candidate cut normal `c~`; may carry negative entries until reduced.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProfitVector(#[serde(with = "serde_str::int_vec")] Vec<BigInt>);

impl ProfitVector {
    pub fn new(entries: Vec<BigInt>) -> Self {
        Self(entries)
    }

    pub fn from_i64(entries: &[i64]) -> Self {
        Self(entries.iter().map(|&x| BigInt::from(x)).collect())
    }

    pub fn entries(&self) -> &[BigInt] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<BigInt> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1(&self) -> BigInt {
        num::l1(&self.0)
    }

    pub fn is_nonnegative(&self) -> bool {
        self.0.iter().all(|x| !x.is_negative())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|x| x.is_zero())
    }

    pub fn scale(&self, k: &BigInt) -> Self {
        Self(self.0.iter().map(|x| x * k).collect())
    }

    pub fn dot_subset(&self, subset: &[usize]) -> BigInt {
        subset.iter().map(|&i| &self.0[i]).sum()
    }
}

/// `P(c, eps)` with `0 <= eps < 1/2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    c: WeightVector,
    eps: Rational,
}

impl Instance {
    pub fn c(&self) -> &WeightVector {
        &self.c
    }

    pub fn eps(&self) -> &Rational {
        &self.eps
    }

    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// Exact right-hand side `||c||_1 / 2`.
    pub fn capacity(&self) -> Rational {
        Rational::new(self.c.l1(), BigInt::from(2))
    }

    /// `floor(||c||_1 / 2)`, the capacity seen by 0/1 points.
    pub fn int_capacity(&self) -> BigInt {
        self.c.l1() / 2
    }

    /// Common coordinate `1/2 + eps` of `x*(eps)`.
    pub fn xstar_coord(&self) -> Rational {
        Rational::new(One::one(), BigInt::from(2)) + &self.eps
    }

    pub fn xstar(&self) -> Vec<Rational> {
        vec![self.xstar_coord(); self.n()]
    }

    pub fn with_eps(&self, eps: Rational) -> Result<Self> {
        make_instance(self.c.clone(), eps)
    }

    fn knapsack_query(&self, ctilde: &ProfitVector) -> Result<KnapsackQuery> {
        KnapsackQuery::new(self.c.entries().to_vec(), self.int_capacity(), ctilde.entries().to_vec())
    }
}

pub fn make_instance(c: WeightVector, eps: Rational) -> Result<Instance> {
    let half = Rational::new(One::one(), BigInt::from(2));
    if eps.is_negative() || eps >= half {
        return Err(Error::EpsOutOfRange(eps));
    }
    Ok(Instance { c, eps })
}

/// Clamps negative entries to zero. Criticality survives and `||.||_1` can only shrink,
/// because `P` is closed downward in the nonnegative orthant.
pub fn nonneg_reduce(ctilde: &ProfitVector) -> ProfitVector {
    ProfitVector(ctilde.0.iter().map(|x| x.clone().max(BigInt::zero())).collect())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub ctilde: ProfitVector,
    #[serde(with = "serde_str::int")]
    pub knapsack_opt: BigInt,
    #[serde(rename = "value_at_xstar", with = "serde_str::rat")]
    pub ctilde_at_xstar: Rational,
    #[serde(rename = "critical")]
    pub is_critical: bool,
    pub witness: Vec<usize>,
}

fn check_profit(inst: &Instance, ctilde: &ProfitVector) -> Result<()> {
    if ctilde.len() != inst.n() {
        return Err(Error::LengthMismatch { expected: inst.n(), got: ctilde.len() });
    }
    if let Some(i) = ctilde.0.iter().position(|x| x.is_negative()) {
        return Err(Error::NegativeProfit(i));
    }
    Ok(())
}

pub fn is_critical(inst: &Instance, ctilde: &ProfitVector) -> Result<CriticalityReport> {
    is_critical_with(inst, ctilde, &KnapsackBudget::default())
}

/// `c~ x*(eps) >= max { c~ x : x ∈ P_I }`, decided with an exact knapsack.
pub fn is_critical_with(
    inst: &Instance,
    ctilde: &ProfitVector,
    budget: &KnapsackBudget,
) -> Result<CriticalityReport> {
    check_profit(inst, ctilde)?;
    let res = knapsack_max(&inst.knapsack_query(ctilde)?, None, budget)?;
    let at_xstar = inst.xstar_coord() * int_rat(&ctilde.l1());
    Ok(CriticalityReport {
        ctilde: ctilde.clone(),
        is_critical: at_xstar >= int_rat(&res.opt_value),
        knapsack_opt: res.opt_value,
        ctilde_at_xstar: at_xstar,
        witness: res.witness,
    })
}

/// Largest `eps'` such that `x*(eps')` survives the single cut `c~ x <= floor(beta)`,
/// with `beta = max { c~ x : x ∈ P(c, eps) }`.
pub fn epsilon_step(inst: &Instance, ctilde: &ProfitVector) -> Result<Rational> {
    epsilon_step_with(inst, ctilde, &KnapsackBudget::default())
}

pub fn epsilon_step_with(
    inst: &Instance,
    ctilde: &ProfitVector,
    budget: &KnapsackBudget,
) -> Result<Rational> {
    check_profit(inst, ctilde)?;
    if ctilde.is_zero() {
        return Err(Error::ZeroVector);
    }
    let report = is_critical_with(inst, ctilde, budget)?;
    let beta = report.ctilde_at_xstar.clone().max(int_rat(&report.knapsack_opt));
    let norm = int_rat(&ctilde.l1());
    Ok(int_rat(&num::floor(&beta)) / norm - Rational::new(One::one(), BigInt::from(2)))
}

/// Wire form `{"c": [...], "eps": "p/q"}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceJson {
    #[serde(with = "serde_str::int_vec")]
    pub c: Vec<BigInt>,
    #[serde(with = "serde_str::rat")]
    pub eps: Rational,
}

impl From<&Instance> for InstanceJson {
    fn from(inst: &Instance) -> Self {
        Self { c: inst.c.entries().to_vec(), eps: inst.eps.clone() }
    }
}

impl TryFrom<InstanceJson> for Instance {
    type Error = Error;
    fn try_from(j: InstanceJson) -> Result<Self> {
        make_instance(WeightVector::new(j.c)?, j.eps)
    }
}

impl std::fmt::Display for Instance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "P(c, {}) with n = {}, ||c||_1 = {}", fmt_rat(&self.eps), self.n(), self.c.l1())
    }
}
