use num_bigint::BigInt;
use thiserror::Error;

use crate::num::Rational;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("weight vector has no positive entry")]
    AllZeroWeights,
    #[error("weight vector has a negative entry at index {0}")]
    NegativeWeight(usize),
    #[error("eps = {0} is outside [0, 1/2)")]
    EpsOutOfRange(Rational),
    #[error("profit vector has a negative entry at index {0}")]
    NegativeProfit(usize),
    #[error("profit vector is zero")]
    ZeroVector,
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no knapsack method fits the configured budget (n = {n}, capacity = {capacity})")]
    ResourceBudgetExceeded { n: usize, capacity: BigInt },
    #[error("exhaustive enumeration limited to n <= {limit}, got n = {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("target {target} is not a subset sum of the basis")]
    NoExactFill { target: BigInt },
    #[error("total weight {0} is odd; an exact half-fill is impossible")]
    OddTotalWeight(BigInt),
    #[error("gap {gap} cannot be filled from basis {basis}")]
    GapNotFillable { gap: BigInt, basis: usize },
    #[error("bases are not pairwise disjoint or index out of range")]
    InvalidBases,
    #[error("hard instance needs m >= 8, got m = {0}")]
    DimensionOverflow(usize),
    #[error("certified lambda grid has {size} points, budget is {budget}")]
    GridTooLarge { size: u128, budget: u128 },
    #[error("grid is not certifiable: {0}")]
    UncertifiableGrid(String),
    #[error("gamma = {0} is below 2")]
    GammaTooSmall(Rational),
    #[error("invalid interval: need delta0 > delta1 > 0")]
    InvalidInterval,
    #[error("polytope is empty")]
    EmptyPolytope,
    #[error("point set does not span the full dimension")]
    DegenerateHull,
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("half-fill preconditions do not hold: {0}")]
    PreconditionsUnmet(String),
    #[error("integer overflow in fixed-width fast path")]
    Overflow,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
