//! Fair division of indivisible goods through integral Fisher markets.
//!
//! The solver computes allocations that are envy-free up to one good and
//! Pareto efficient by maintaining an integral market equilibrium while it
//! balances agent spending: goods move backwards along alternating
//! bang-per-buck/ownership paths, and prices rise uniformly on the goods
//! held by the least spender's reachability hierarchy. Exact rational
//! arithmetic is used throughout; every claimed property is re-checked by
//! independent verifiers (envy checkers, brute-force dominance enumeration,
//! an equilibrium certificate, and a trace auditor).

pub mod generate;
pub mod instance;
pub mod market;
pub mod matching;
pub mod rational;
pub mod rounding;
pub mod solver;
pub mod verify;

pub use instance::{
    parse_instance, serialize_instance, validate_instance, Allocation, Instance, ValidationReport,
};
pub use market::{
    build_hierarchy, find_eps_path_violator, is_eps_pef1, least_spender, mbb, reconstruct_path,
    spending, AlternatingPath, Hierarchy, MarketOutcome, MbbInfo, PriceVector,
};
pub use matching::{hall_decomposition, HallDecomposition};
pub use rational::{Rational, RationalRepr};
pub use rounding::{round_instance, round_up_value, Epsilon, RoundedInstance};
pub use solver::{
    compute_alphas, phase1_init, solve, solve_rounded, AlphaRule, AlphaTriple, Certificates, Event,
    EventKind, Mode, PoBruteForce, Solution, SolverConfig, SolverError, TerminateReason, Trace,
};
pub use verify::{
    audit_trace, brute_force_nash_opt, brute_force_pareto_dominator, check_delta_equivalence,
    check_eps_ef1, check_fpo_certificate, eps_pareto_dominator, nsw, AuditReport, AuditViolation,
    EnvyWitness, NswValue, Valuations, VerifyError,
};
