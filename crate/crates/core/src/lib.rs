//! Exact tools for Chvátal rank experiments on knapsack polytopes
//! `P(c, eps) = conv({x ∈ {0,1}^n : c x <= ||c||_1 / 2} ∪ {x*(eps)})`,
//! where `x*(eps) = (1/2 + eps) 1`.
//!
//! All arithmetic is exact (`BigInt` / `BigRational`). Floating point only
//! appears in human-facing summaries.

pub mod basis;
pub mod closure;
pub mod critical_rank;
pub mod error;
pub mod hardness;
pub mod instance;
pub mod knapsack;
pub mod num;

pub use basis::{
    basis_fill, check_claims, greedy_certificate, half_fill_preconditions, is_additive_basis, powers_basis,
    AdditiveBasis, ClaimReport, GreedyCertificate, PreconditionReport,
};
pub use closure::{candidate_closure, diagonal_trace, gc_cut, is_saturated, lp_max, HPolytope, Ineq, ZeroOneHull};
pub use critical_rank::{
    auto_gamma, critical_upper, l_min, rank_lower_bound, verify_gamma, verify_gamma_certificate, GammaCertificate,
    GammaMethod, GammaOptions, LMinResult, RankBound, UpperBound,
};
pub use error::{Error, Result};
pub use hardness::{
    assemble_hard_instance, diophantine_audit, generate_hard_instance, necessary_condition, sample_hard_vector,
    AuditConfig, AuditMode, AuditVerdict, BasisKind, DiophantineAuditReport, HardInstance, NcConstants,
    NecessaryCondition,
};
pub use instance::{
    epsilon_step, is_critical, make_instance, nonneg_reduce, CriticalityReport, Instance, InstanceJson, ProfitVector,
    WeightVector,
};
pub use knapsack::{knapsack_max, knapsack_max_exhaustive, KnapsackBudget, KnapsackQuery, KnapsackResult, Method};
pub use num::Rational;
