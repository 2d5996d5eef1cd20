//! Independent checkers and brute-force oracles: envy bounds, Nash welfare,
//! Pareto dominance enumeration, the market-equilibrium efficiency
//! certificate, and the event-trace auditor.
//!
//! Nothing here shares code with the solver's decision paths; these are the
//! second route that certifies what the solver claims.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::instance::{Allocation, Instance};
use crate::market::PriceVector;
use crate::rational::{int, is_nonneg_power_of, Rational};
use crate::rounding::RoundedInstance;
use crate::solver::{AlphaRule, EventKind, Trace};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("enumeration of {assignments} assignments exceeds budget {budget}")]
    BudgetExceeded { assignments: u128, budget: u64 },
    #[error("allocation malformed: {0}")]
    BadAllocation(String),
}

/// Read access to a valuation matrix, integral or rounded.
pub trait Valuations {
    fn agents(&self) -> usize;
    fn goods(&self) -> usize;
    fn value_of(&self, agent: usize, good: usize) -> Rational;

    fn bundle_value_of(&self, agent: usize, bundle: &BTreeSet<usize>) -> Rational {
        bundle
            .iter()
            .fold(Rational::zero(), |acc, &j| acc + self.value_of(agent, j))
    }
}

impl Valuations for Instance {
    fn agents(&self) -> usize {
        Instance::agents(self)
    }
    fn goods(&self) -> usize {
        Instance::goods(self)
    }
    fn value_of(&self, agent: usize, good: usize) -> Rational {
        int(self.value(agent, good))
    }
}

impl Valuations for RoundedInstance {
    fn agents(&self) -> usize {
        RoundedInstance::agents(self)
    }
    fn goods(&self) -> usize {
        RoundedInstance::goods(self)
    }
    fn value_of(&self, agent: usize, good: usize) -> Rational {
        self.value(agent, good).clone()
    }
}

/// Proof that an envy bound fails: after the best single removal from the
/// envied bundle, the envious agent still values it above its own bundle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnvyWitness {
    pub envious: usize,
    pub envied: usize,
    pub removed_good: usize,
    pub own_value: Rational,
    pub envied_value_after_removal: Rational,
}

/// Envy-freeness up to one good with multiplicative slack `1 + eps_factor`
/// on the envious agent's own value; `eps_factor = 0` is the exact check.
/// Returns the lexicographically first `(envious, envied)` witness on
/// failure. Empty bundles are never envied.
pub fn check_eps_ef1<V: Valuations>(
    vals: &V,
    x: &Allocation,
    eps_factor: &Rational,
) -> (bool, Option<EnvyWitness>) {
    debug_assert!(*eps_factor >= Rational::zero());
    let slack = Rational::one() + eps_factor;
    for envious in 0..vals.agents() {
        let own = vals.bundle_value_of(envious, &x.bundles[envious]);
        let own_bound = &slack * &own;
        for envied in 0..vals.agents() {
            if envied == envious || x.bundles[envied].is_empty() {
                continue;
            }
            let total = vals.bundle_value_of(envious, &x.bundles[envied]);
            // Best removal: drop the good the envious agent values most.
            let (best_good, best_value) = x.bundles[envied]
                .iter()
                .map(|&j| (j, vals.value_of(envious, j)))
                .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
                .expect("bundle is non-empty");
            let after = total - &best_value;
            if own_bound < after {
                return (
                    false,
                    Some(EnvyWitness {
                        envious,
                        envied,
                        removed_good: best_good,
                        own_value: own,
                        envied_value_after_removal: after,
                    }),
                );
            }
        }
    }
    (true, None)
}

/// Property check behind the small-slack collapse: at `δ = 1/(2·m·v_max)`
/// the δ-relaxed envy bound agrees with the exact one.
pub fn check_delta_equivalence(inst: &Instance, x: &Allocation) -> bool {
    let delta = Rational::new(1.into(), BigInt::from(2 * inst.goods() as i64 * inst.v_max()));
    let exact = check_eps_ef1(inst, x, &Rational::zero()).0;
    let relaxed = check_eps_ef1(inst, x, &delta).0;
    exact == relaxed
}

/// Nash social welfare held as the exact product of bundle values; the
/// geometric mean is derived only for display.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NswValue {
    pub product: BigInt,
    pub agents: usize,
}

impl NswValue {
    /// `product^(1/n)` as a floating-point number, for reports only.
    pub fn approx_root(&self) -> f64 {
        if self.product.is_zero() {
            return 0.0;
        }
        let n = self.agents as f64;
        match self.product.to_f64() {
            Some(p) if p.is_finite() => p.powf(1.0 / n),
            _ => {
                // Fall back to bit length: ln(product) ~ bits * ln 2.
                let ln = self.product.bits() as f64 * std::f64::consts::LN_2;
                (ln / n).exp()
            }
        }
    }
}

pub fn nsw(inst: &Instance, x: &Allocation) -> NswValue {
    let product = x
        .bundles
        .iter()
        .enumerate()
        .map(|(i, bundle)| BigInt::from(inst.bundle_value(i, bundle)))
        .fold(BigInt::one(), |acc, v| acc * v);
    NswValue {
        product,
        agents: inst.agents(),
    }
}

fn check_budget(n: usize, m: usize, budget: u64) -> Result<(), VerifyError> {
    let assignments = (n as u128)
        .checked_pow(m as u32)
        .unwrap_or(u128::MAX);
    if assignments > u128::from(budget) {
        return Err(VerifyError::BudgetExceeded {
            assignments,
            budget,
        });
    }
    Ok(())
}

/// Visits every complete assignment (each good to one agent) in
/// lexicographic order of the good-to-owner vector.
fn for_each_assignment(n: usize, m: usize, mut visit: impl FnMut(&[usize])) {
    let mut owner = vec![0usize; m];
    loop {
        visit(&owner);
        let mut idx = m;
        loop {
            if idx == 0 {
                return;
            }
            idx -= 1;
            owner[idx] += 1;
            if owner[idx] < n {
                break;
            }
            owner[idx] = 0;
            if idx == 0 {
                return;
            }
        }
    }
}

fn owner_vec_to_allocation(n: usize, owner: &[usize]) -> Allocation {
    let mut bundles = vec![Vec::new(); n];
    for (good, &agent) in owner.iter().enumerate() {
        bundles[agent].push(good);
    }
    Allocation::from_bundles(bundles)
}

fn assignment_values(inst: &Instance, owner: &[usize]) -> Vec<i64> {
    let mut values = vec![0i64; inst.agents()];
    for (good, &agent) in owner.iter().enumerate() {
        values[agent] += inst.value(agent, good);
    }
    values
}

/// Exhaustive Nash-welfare maximization over all `n^m` assignments.
/// Ties go to the lexicographically smallest owner vector.
pub fn brute_force_nash_opt(
    inst: &Instance,
    budget: u64,
) -> Result<(Allocation, NswValue), VerifyError> {
    let (n, m) = (inst.agents(), inst.goods());
    check_budget(n, m, budget)?;
    let mut best_owner: Option<Vec<usize>> = None;
    let mut best_product = BigInt::from(-1);
    for_each_assignment(n, m, |owner| {
        let values = assignment_values(inst, owner);
        let product = values
            .iter()
            .fold(BigInt::one(), |acc, &v| acc * BigInt::from(v));
        if product > best_product {
            best_product = product;
            best_owner = Some(owner.to_vec());
        }
    });
    let owner = best_owner.expect("at least one assignment exists");
    Ok((
        owner_vec_to_allocation(n, &owner),
        NswValue {
            product: best_product,
            agents: n,
        },
    ))
}

/// Searches all integral allocations for one that Pareto dominates `x`:
/// at least as good for everyone and strictly better for someone. `None`
/// certifies that `x` is Pareto efficient among integral allocations.
pub fn brute_force_pareto_dominator(
    inst: &Instance,
    x: &Allocation,
    budget: u64,
) -> Result<Option<Allocation>, VerifyError> {
    dominator_with_slack(inst, x, &Rational::zero(), budget)
}

/// The relaxed variant: a dominator must beat `(1+eps)` times every bundle
/// value. Only integral dominators are searched; fractional ones are out of
/// reach of enumeration and are covered by the price certificate instead.
pub fn eps_pareto_dominator(
    inst: &Instance,
    x: &Allocation,
    eps: &Rational,
    budget: u64,
) -> Result<Option<Allocation>, VerifyError> {
    dominator_with_slack(inst, x, eps, budget)
}

fn dominator_with_slack(
    inst: &Instance,
    x: &Allocation,
    eps: &Rational,
    budget: u64,
) -> Result<Option<Allocation>, VerifyError> {
    let (n, m) = (inst.agents(), inst.goods());
    x.check_shape(n, m)
        .map_err(VerifyError::BadAllocation)?;
    check_budget(n, m, budget)?;
    let slack = Rational::one() + eps;
    let thresholds: Vec<Rational> = (0..n)
        .map(|i| &slack * int(inst.bundle_value(i, &x.bundles[i])))
        .collect();
    let mut found: Option<Vec<usize>> = None;
    for_each_assignment(n, m, |owner| {
        if found.is_some() {
            return;
        }
        let values = assignment_values(inst, owner);
        let mut strict = false;
        for (agent, &v) in values.iter().enumerate() {
            let v = int(v);
            if v < thresholds[agent] {
                return;
            }
            if v > thresholds[agent] {
                strict = true;
            }
        }
        if strict {
            found = Some(owner.to_vec());
        }
    });
    Ok(found.map(|owner| owner_vec_to_allocation(n, &owner)))
}

/// Market-equilibrium certificate for fractional Pareto efficiency of an
/// allocation of the rounded instance: every positively priced good is
/// allocated exactly once, and every agent only holds goods attaining its
/// maximum bang-per-buck ratio. Sound by the first welfare theorem.
pub fn check_fpo_certificate(
    rounded: &RoundedInstance,
    x: &Allocation,
    prices: &PriceVector,
) -> bool {
    let (n, m) = (rounded.agents(), rounded.goods());
    if prices.len() != m || x.check_shape(n, m).is_err() {
        return false;
    }
    for j in 0..m {
        let p = prices.get(j);
        if p.is_negative() {
            return false;
        }
        if p.is_zero() && (0..n).any(|i| !rounded.value(i, j).is_zero()) {
            // A free good somebody wants cannot clear.
            return false;
        }
    }
    let owners = x.owner_map(m);
    for j in 0..m {
        if !prices.get(j).is_zero() && owners[j].is_none() {
            return false;
        }
    }
    for agent in 0..n {
        if x.bundles[agent].is_empty() {
            continue;
        }
        // Maximum ratio over positively priced, positively valued goods,
        // tracked as a (value, price) pair and compared cross-multiplied.
        let mut best: Option<(Rational, Rational)> = None;
        for j in 0..m {
            let v = rounded.value(agent, j);
            if v.is_zero() {
                continue;
            }
            let p = prices.get(j);
            match &best {
                None => best = Some((v.clone(), p.clone())),
                Some((bv, bp)) => {
                    if v * bp > bv * p {
                        best = Some((v.clone(), p.clone()));
                    }
                }
            }
        }
        let Some((bv, bp)) = best else {
            // Owns goods but values nothing: empty bang-per-buck set.
            return false;
        };
        for &j in &x.bundles[agent] {
            let v = rounded.value(agent, j);
            if v.is_zero() || v * &bp != &bv * prices.get(j) {
                return false;
            }
        }
    }
    true
}

/// One broken run-time invariant found by the auditor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditViolation {
    pub event_index: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default)]
pub struct AuditReport {
    pub violations: Vec<AuditViolation>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Audits a solver trace against the invariants that drive the run-time
/// analysis: the least spender's spending never drops, price rises are
/// factors of at least 1 (integral powers of `1+ε` unless the final
/// balancing rise), final prices respect the `m² v_max³` cap, and the run
/// ends with exactly one termination event.
pub fn audit_trace(trace: &Trace, rounded: &RoundedInstance) -> AuditReport {
    let mut report = AuditReport::default();
    let one_plus = rounded.epsilon().one_plus();

    let mut prev: Option<&Rational> = None;
    for (idx, event) in trace.events.iter().enumerate() {
        if let Some(prev) = prev {
            if event.least_spender_spending_after < *prev {
                report.violations.push(AuditViolation {
                    event_index: Some(idx),
                    message: "least spender's spending decreased".into(),
                });
            }
        }
        prev = Some(&event.least_spender_spending_after);

        if let EventKind::PriceRise { alpha, rule, .. } = &event.kind {
            if *alpha < Rational::one() {
                report.violations.push(AuditViolation {
                    event_index: Some(idx),
                    message: format!("price-rise factor {alpha} below 1"),
                });
            }
            if matches!(rule, AlphaRule::Alpha1 | AlphaRule::Alpha3)
                && !is_nonneg_power_of(alpha, &one_plus)
            {
                report.violations.push(AuditViolation {
                    event_index: Some(idx),
                    message: format!("price-rise factor {alpha} is not an integral power"),
                });
            }
        }
    }

    let m = rounded.goods();
    let cap = int((m * m) as i64) * rounded.v_max() * rounded.v_max() * rounded.v_max();
    for (good, price) in trace.final_prices.prices.iter().enumerate() {
        if *price > cap {
            report.violations.push(AuditViolation {
                event_index: None,
                message: format!("final price of good {} exceeds the cap", good + 1),
            });
        }
    }

    let terminates = trace
        .events
        .iter()
        .filter(|e| matches!(e.kind, EventKind::Terminate { .. }))
        .count();
    let ends_with_terminate = matches!(
        trace.events.last().map(|e| &e.kind),
        Some(EventKind::Terminate { .. })
    );
    if terminates != 1 || !ends_with_terminate {
        report.violations.push(AuditViolation {
            event_index: None,
            message: format!("expected exactly one final terminate event, found {terminates}"),
        });
    }
    report
}
