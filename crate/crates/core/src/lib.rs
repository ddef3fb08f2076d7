//! Revenue and welfare guarantees for auctions from threshold surplus.
//!
//! The crate covers feasibility environments ([`env`]), allocation rules and
//! payment formats ([`mech`]), value distributions and joint tables
//! ([`dist`]), interim rules and threshold surplus ([`thresh`]), competitive
//! and individual efficiency with the bounds built on them ([`eff`]), and
//! equilibrium construction and checking ([`eq`]).
//!
//! Agents are indexed from 0.

pub mod dist;
pub mod eff;
pub mod env;
pub mod eq;
pub mod error;
pub mod mech;
pub mod step;
pub mod thresh;

pub use dist::{myerson_optimal_revenue, JointScenario, Scenario, ValueDistribution};
pub use eff::{
    ce_deterministic, ce_randomized, composition_weak_ce, individual_efficiency, weak_individual_efficiency,
    BoundReport, CEReport, CeOptions, IEReport, Objective,
};
pub use env::{Allocation, EnvKind, Environment};
pub use eq::{
    best_response, br_dynamics, canonical_example, regret, symmetric_bne, BidGrid, CanonicalExample, CanonicalName,
    RegretReport, StrategyProfile, TieReading,
};
pub use error::{Error, Result};
pub use mech::{
    compose_simultaneous, convex_combine, Action, AllocationRule, ComposedMechanism, Mechanism, Outcome,
    PaymentFormat, Priority, RuleKind, TieBreak,
};
pub use step::StepFunction;
pub use thresh::{
    cost_frontier, interim_rule, threshold_surplus, BidScenario, BiddingOutcome, CostKind, InterimRule,
    SurplusConvention, SurplusCurve,
};
