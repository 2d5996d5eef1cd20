//! The seeded benchmark suite: generate, solve, re-check every claim with
//! the independent verifiers, and aggregate a machine-readable report.

use std::time::Instant;

use num_bigint::BigInt;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use fairdiv_core::generate::{generate, Family};
use fairdiv_core::{
    audit_trace, brute_force_nash_opt, brute_force_pareto_dominator, check_eps_ef1,
    check_fpo_certificate, solve, Instance, Mode, NswValue, Rational, Solution, SolverConfig,
    VerifyError,
};

use crate::io::epsilon_display;

#[derive(Debug, Clone)]
pub struct SuiteParams {
    pub seeds: u64,
    pub n_min: usize,
    pub n_max: usize,
    pub m_min: usize,
    pub m_max: usize,
    pub v_max: i64,
    pub mode: Mode,
    pub po_budget: u64,
    pub max_steps: usize,
    pub timings: bool,
}

impl SuiteParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.seeds == 0 {
            return Err("empty suite: --seeds must be at least 1".into());
        }
        if self.n_min < 1 || self.n_min > self.n_max {
            return Err("need 1 <= n-min <= n-max".into());
        }
        if self.m_min < 1 || self.m_min > self.m_max {
            return Err("need 1 <= m-min <= m-max".into());
        }
        if self.m_max < self.n_max {
            return Err("need m-max >= n-max so every case can draw m >= n".into());
        }
        if self.v_max < 1 {
            return Err("need vmax >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseRecord {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub epsilon: String,
    pub events: usize,
    pub ef1_exact: bool,
    pub po_brute_force: String,
    pub fpo_cert: bool,
    /// `null` when the Nash optimum is zero or not enumerable.
    pub nsw_ratio_ok: Option<bool>,
    pub audit_clean: bool,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub cases: u64,
    pub passed: u64,
    pub failed: u64,
    pub max_events: usize,
    pub total_events: usize,
    pub epsilons_used: Vec<String>,
    pub all_passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_wall_ms: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub cases: Vec<CaseRecord>,
    pub summary: SuiteSummary,
}

impl SuiteReport {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string(self).expect("report serialization cannot fail");
        text.push('\n');
        text
    }
}

/// The instance a given case seed works on. Dimension draws use a distinct
/// stream from the valuation draws; `m` is always at least `n` so the
/// matching step never has to exclude agents in suite runs.
pub fn case_instance(params: &SuiteParams, seed: u64) -> Instance {
    let mut dims = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);
    let n = dims.gen_range(params.n_min..=params.n_max);
    let m = dims.gen_range(n.max(params.m_min)..=params.m_max);
    generate(
        &Family::Random {
            n,
            m,
            v_max: params.v_max,
        },
        seed,
    )
    .expect("suite dimensions are validated")
}

/// Exact check of the 1.45-approximation bound, with 1.45 as 29/20:
/// `product_alg * 29^n >= product_opt * 20^n`.
pub fn nsw_ratio_within_bound(alg: &NswValue, opt: &NswValue) -> bool {
    debug_assert_eq!(alg.agents, opt.agents);
    let n = alg.agents as u32;
    &alg.product * BigInt::from(29).pow(n) >= &opt.product * BigInt::from(20).pow(n)
}

/// Runs one case end to end and re-verifies every claim independently.
pub fn run_case(params: &SuiteParams, seed: u64) -> (CaseRecord, Option<Solution>) {
    let start = Instant::now();
    let inst = case_instance(params, seed);
    let (n, m) = (inst.agents(), inst.goods());
    let config = SolverConfig {
        mode: params.mode,
        po_check_budget: params.po_budget,
        max_steps: params.max_steps,
        trace_enabled: true,
        ..SolverConfig::default()
    };

    let solution = match solve(&inst, &config) {
        Ok(solution) => solution,
        Err(err) => {
            let record = CaseRecord {
                seed,
                n,
                m,
                epsilon: String::new(),
                events: 0,
                ef1_exact: false,
                po_brute_force: "error".into(),
                fpo_cert: false,
                nsw_ratio_ok: None,
                audit_clean: false,
                pass: false,
                error: Some(err.to_string()),
                wall_ms: params.timings.then(|| ms_since(start)),
            };
            return (record, None);
        }
    };

    let ef1_exact = check_eps_ef1(&inst, &solution.allocation, &Rational::zero()).0;

    let po_brute_force = match brute_force_pareto_dominator(&inst, &solution.allocation, params.po_budget)
    {
        Ok(None) => "confirmed",
        Ok(Some(_)) => "refuted",
        Err(VerifyError::BudgetExceeded { .. }) => "skipped-budget",
        Err(VerifyError::BadAllocation(_)) => "error",
    }
    .to_string();

    let restricted = solution.restricted_allocation();
    let fpo_cert = check_fpo_certificate(&solution.rounded, &restricted, &solution.prices);

    let nsw_ratio_ok = match brute_force_nash_opt(&inst, params.po_budget) {
        Ok((_, opt)) if opt.product > BigInt::zero() => {
            Some(nsw_ratio_within_bound(&solution.nsw, &opt))
        }
        _ => None,
    };

    let audit_clean = solution
        .trace
        .as_ref()
        .map(|trace| audit_trace(trace, &solution.rounded).is_clean())
        .unwrap_or(false);

    let pass = ef1_exact
        && fpo_cert
        && audit_clean
        && po_brute_force != "refuted"
        && po_brute_force != "error"
        && nsw_ratio_ok != Some(false);

    let record = CaseRecord {
        seed,
        n,
        m,
        epsilon: epsilon_display(&solution.epsilon_used),
        events: solution.event_count,
        ef1_exact,
        po_brute_force,
        fpo_cert,
        nsw_ratio_ok,
        audit_clean,
        pass,
        error: None,
        wall_ms: params.timings.then(|| ms_since(start)),
    };
    (record, Some(solution))
}

fn ms_since(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1000.0
}

/// Runs the whole suite in seed order and aggregates the report.
pub fn run_suite(params: &SuiteParams) -> Result<(SuiteReport, Vec<Option<Solution>>), String> {
    params.validate()?;
    let start = Instant::now();
    let mut cases = Vec::with_capacity(params.seeds as usize);
    let mut solutions = Vec::with_capacity(params.seeds as usize);
    for seed in 0..params.seeds {
        let (record, solution) = run_case(params, seed);
        cases.push(record);
        solutions.push(solution);
    }
    let passed = cases.iter().filter(|c| c.pass).count() as u64;
    let mut epsilons_used: Vec<String> = cases
        .iter()
        .filter(|c| !c.epsilon.is_empty())
        .map(|c| c.epsilon.clone())
        .collect();
    epsilons_used.sort();
    epsilons_used.dedup();
    let summary = SuiteSummary {
        cases: params.seeds,
        passed,
        failed: params.seeds - passed,
        max_events: cases.iter().map(|c| c.events).max().unwrap_or(0),
        total_events: cases.iter().map(|c| c.events).sum(),
        epsilons_used,
        all_passed: passed == params.seeds,
        total_wall_ms: params.timings.then(|| ms_since(start)),
    };
    Ok((SuiteReport { cases, summary }, solutions))
}
