//! Subcommand definitions and dispatch.
//!
//! Exit codes: 0 when the requested work succeeded and every checked
//! property held, 1 when a verified property failed (or the solver
//! reported an internal failure), 2 for usage and input errors.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::Zero;

use fairdiv_core::generate::{generate, Family, Fixture};
use fairdiv_core::{
    brute_force_nash_opt, brute_force_pareto_dominator, check_eps_ef1, check_fpo_certificate, nsw,
    parse_instance, round_instance, solve, validate_instance, Instance, Mode, PoBruteForce,
    Rational, Solution, SolverConfig, SolverError, VerifyError,
};

use crate::io::{
    epsilon_display, parse_allocation, parse_epsilon_flag, parse_prices, ratio_display,
    serialize_solution, serialize_trace,
};
use crate::suite::{run_suite, SuiteParams};

pub const EXIT_OK: i32 = 0;
pub const EXIT_PROPERTY_FAILED: i32 = 1;
pub const EXIT_INPUT_ERROR: i32 = 2;

#[derive(Parser)]
#[command(
    name = "fairdiv",
    version,
    about = "Fair and efficient allocation of indivisible goods via integral market equilibria"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Solve an instance and write the certified solution.
    Solve(SolveArgs),
    /// Check one property of an instance/allocation pair.
    Verify(VerifyArgs),
    /// Generate an instance file.
    Gen(GenArgs),
    /// Run the seeded solve-and-verify suite and write a report.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ModeFlag {
    Fixed,
    Adaptive,
    ExactTheorem,
}

impl From<ModeFlag> for Mode {
    fn from(flag: ModeFlag) -> Mode {
        match flag {
            ModeFlag::Fixed => Mode::Fixed,
            ModeFlag::Adaptive => Mode::Adaptive,
            ModeFlag::ExactTheorem => Mode::ExactTheorem,
        }
    }
}

#[derive(Args)]
pub struct SolveArgs {
    /// Instance JSON file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "adaptive")]
    pub mode: ModeFlag,
    /// Rounding parameter as 1/k (used by fixed mode; adaptive and
    /// exact-theorem modes pick their own).
    #[arg(long, default_value = "1/4")]
    pub epsilon: String,
    /// Solution JSON destination; stdout when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Event trace destination (one JSON object per line).
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Assignment-enumeration budget for the dominance scan.
    #[arg(long, default_value_t = 1_000_000)]
    pub po_budget: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_steps: usize,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum PropertyFlag {
    /// Exact envy-freeness up to one good.
    Ef1,
    /// Envy-freeness up to one good with slack 1+epsilon.
    EpsEf1,
    /// No integral Pareto dominator (exhaustive scan).
    PoBrute,
    /// Market-equilibrium certificate on the rounded instance.
    FpoCert,
    /// Nash welfare within 29/20 of the brute-force optimum.
    NswRatio,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Instance JSON file.
    #[arg(long)]
    pub input: PathBuf,
    /// Allocation file (bare array of 1-based good lists, or a solution
    /// file).
    #[arg(long)]
    pub allocation: PathBuf,
    #[arg(long, value_enum)]
    pub property: PropertyFlag,
    /// Slack (eps-ef1) or rounding parameter (fpo-cert), as 1/k.
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Price file required by fpo-cert.
    #[arg(long)]
    pub prices: Option<PathBuf>,
    /// Assignment-enumeration budget for po-brute and nsw-ratio.
    #[arg(long, default_value_t = 1_000_000)]
    pub budget: u64,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum FamilyFlag {
    Random,
    Identical,
    Fixture,
}

#[derive(Args)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub family: FamilyFlag,
    /// Fixture name: c3, c4, c5 or c6.
    #[arg(long)]
    pub fixture: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub vmax: Option<i64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Args)]
pub struct BenchArgs {
    /// Number of seeded cases (seeds 0..K).
    #[arg(long)]
    pub seeds: u64,
    #[arg(long)]
    pub n_min: usize,
    #[arg(long)]
    pub n_max: usize,
    #[arg(long)]
    pub m_min: usize,
    #[arg(long)]
    pub m_max: usize,
    #[arg(long)]
    pub vmax: i64,
    #[arg(long, value_enum, default_value = "adaptive")]
    pub mode: ModeFlag,
    /// Report destination; stdout when omitted.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value_t = 1_000_000)]
    pub po_budget: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub max_steps: usize,
    /// Omit wall-clock fields so reruns are byte-identical.
    #[arg(long)]
    pub no_timings: bool,
    /// Also write each case's solution JSON into this directory.
    #[arg(long)]
    pub solutions: Option<PathBuf>,
}

pub fn run(cli: Cli) -> i32 {
    match cli.command {
        Command::Solve(args) => cmd_solve(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Gen(args) => cmd_gen(&args),
        Command::Bench(args) => cmd_bench(&args),
    }
}

fn fail_input(message: impl AsRef<str>) -> i32 {
    eprintln!("error: {}", message.as_ref());
    EXIT_INPUT_ERROR
}

fn fail_property(message: impl AsRef<str>) -> i32 {
    eprintln!("{}", message.as_ref());
    EXIT_PROPERTY_FAILED
}

fn read_file(path: &Path) -> Result<String, String> {
    fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), String> {
    fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn load_instance(path: &Path) -> Result<Instance, String> {
    let inst = parse_instance(&read_file(path)?)?;
    let report = validate_instance(&inst);
    if !report.is_ok() {
        let details = report
            .violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        return Err(format!("invalid instance: {details}"));
    }
    Ok(inst)
}

fn emit_solution(solution: &Solution, args: &SolveArgs) -> Result<(), String> {
    let text = serialize_solution(solution)?;
    match &args.output {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    if let Some(path) = &args.trace {
        let trace = solution
            .trace
            .as_ref()
            .ok_or("solver did not record a trace")?;
        write_file(path, &serialize_trace(trace))?;
    }
    Ok(())
}

fn cmd_solve(args: &SolveArgs) -> i32 {
    let inst = match load_instance(&args.input) {
        Ok(inst) => inst,
        Err(msg) => return fail_input(msg),
    };
    let epsilon = match parse_epsilon_flag(&args.epsilon) {
        Ok(eps) => eps,
        Err(msg) => return fail_input(msg),
    };
    let config = SolverConfig {
        epsilon,
        mode: args.mode.into(),
        max_steps: args.max_steps,
        po_check_budget: args.po_budget,
        trace_enabled: true,
    };
    let solution = match solve(&inst, &config) {
        Ok(solution) => solution,
        Err(SolverError::Validation(_)) => {
            return fail_input("instance failed validation");
        }
        Err(err) => return fail_property(format!("solver failed: {err}")),
    };
    if let Err(msg) = emit_solution(&solution, args) {
        return fail_input(msg);
    }
    let certs = &solution.certificates;
    let ok = certs.ef1_exact
        && certs.fpo_certificate_rounded
        && certs.po_brute_force != PoBruteForce::Refuted;
    if ok {
        eprintln!(
            "solved with epsilon {}: exact EF1, equilibrium certificate, dominance scan {}",
            epsilon_display(&solution.epsilon_used),
            match certs.po_brute_force {
                PoBruteForce::Confirmed => "confirmed",
                PoBruteForce::SkippedBudget => "skipped (budget)",
                PoBruteForce::Refuted => unreachable!(),
            }
        );
        EXIT_OK
    } else {
        fail_property(format!(
            "certificate failed: ef1_exact={} fpo={} po={:?}",
            certs.ef1_exact, certs.fpo_certificate_rounded, certs.po_brute_force
        ))
    }
}

fn cmd_verify(args: &VerifyArgs) -> i32 {
    let inst = match load_instance(&args.input) {
        Ok(inst) => inst,
        Err(msg) => return fail_input(msg),
    };
    let allocation = match read_file(&args.allocation)
        .and_then(|text| parse_allocation(&text, inst.agents(), inst.goods()))
    {
        Ok(alloc) => alloc,
        Err(msg) => return fail_input(msg),
    };

    let epsilon = match &args.epsilon {
        Some(text) => match parse_epsilon_flag(text) {
            Ok(eps) => Some(eps),
            Err(msg) => return fail_input(msg),
        },
        None => None,
    };

    match args.property {
        PropertyFlag::Ef1 => {
            let (ok, witness) = check_eps_ef1(&inst, &allocation, &Rational::zero());
            if ok {
                println!("EF1 holds");
                EXIT_OK
            } else {
                let w = witness.unwrap();
                fail_property(format!(
                    "EF1 fails: agent {} envies agent {}; own value {}, their bundle minus good {} is worth {}",
                    w.envious + 1,
                    w.envied + 1,
                    w.own_value,
                    w.removed_good + 1,
                    w.envied_value_after_removal
                ))
            }
        }
        PropertyFlag::EpsEf1 => {
            let Some(eps) = epsilon else {
                return fail_input("eps-ef1 requires --epsilon");
            };
            let (ok, witness) = check_eps_ef1(&inst, &allocation, eps.value());
            if ok {
                println!("{}-EF1 holds", epsilon_display(&eps));
                EXIT_OK
            } else {
                let w = witness.unwrap();
                fail_property(format!(
                    "{}-EF1 fails: agent {} envies agent {} beyond one good (own {}, theirs-after-removal {})",
                    epsilon_display(&eps),
                    w.envious + 1,
                    w.envied + 1,
                    w.own_value,
                    w.envied_value_after_removal
                ))
            }
        }
        PropertyFlag::PoBrute => {
            match brute_force_pareto_dominator(&inst, &allocation, args.budget) {
                Ok(None) => {
                    println!("Pareto efficient among integral allocations");
                    EXIT_OK
                }
                Ok(Some(dominator)) => {
                    let bundles: Vec<Vec<usize>> = dominator
                        .bundles
                        .iter()
                        .map(|b| b.iter().map(|g| g + 1).collect())
                        .collect();
                    fail_property(format!("Pareto dominated by {bundles:?}"))
                }
                Err(err) => fail_input(err.to_string()),
            }
        }
        PropertyFlag::FpoCert => {
            let Some(eps) = epsilon else {
                return fail_input("fpo-cert requires --epsilon to build the rounded instance");
            };
            let Some(prices_path) = &args.prices else {
                return fail_input("fpo-cert requires --prices");
            };
            let prices = match read_file(prices_path)
                .and_then(|text| parse_prices(&text, inst.goods()))
            {
                Ok(prices) => prices,
                Err(msg) => return fail_input(msg),
            };
            let rounded = round_instance(&inst, &eps);
            if check_fpo_certificate(&rounded, &allocation, &prices) {
                println!("equilibrium certificate holds on the rounded instance");
                EXIT_OK
            } else {
                fail_property("equilibrium certificate fails on the rounded instance")
            }
        }
        PropertyFlag::NswRatio => {
            let (_, opt) = match brute_force_nash_opt(&inst, args.budget) {
                Ok(result) => result,
                Err(err @ VerifyError::BudgetExceeded { .. }) => return fail_input(err.to_string()),
                Err(err) => return fail_input(err.to_string()),
            };
            let value = nsw(&inst, &allocation);
            println!(
                "allocation product {}, optimum product {}, ratio {}",
                value.product,
                opt.product,
                ratio_display(&value.product, &opt.product)
            );
            if crate::suite::nsw_ratio_within_bound(&value, &opt) {
                println!("within the 29/20 bound of the optimum");
                EXIT_OK
            } else {
                fail_property("Nash welfare falls outside the 29/20 bound")
            }
        }
    }
}

fn cmd_gen(args: &GenArgs) -> i32 {
    let family = match args.family {
        FamilyFlag::Random | FamilyFlag::Identical => {
            let (Some(n), Some(m), Some(v_max)) = (args.n, args.m, args.vmax) else {
                return fail_input("random/identical families need --n, --m and --vmax");
            };
            match args.family {
                FamilyFlag::Random => Family::Random { n, m, v_max },
                FamilyFlag::Identical => Family::Identical { n, m, v_max },
                FamilyFlag::Fixture => unreachable!(),
            }
        }
        FamilyFlag::Fixture => {
            let Some(name) = &args.fixture else {
                return fail_input("fixture family needs --fixture c3|c4|c5|c6");
            };
            match Fixture::parse(name, args.n) {
                Ok(fixture) => Family::Fixture(fixture),
                Err(msg) => return fail_input(msg),
            }
        }
    };
    let inst = match generate(&family, args.seed) {
        Ok(inst) => inst,
        Err(msg) => return fail_input(msg),
    };
    match write_file(&args.output, &fairdiv_core::serialize_instance(&inst)) {
        Ok(()) => EXIT_OK,
        Err(msg) => fail_input(msg),
    }
}

fn cmd_bench(args: &BenchArgs) -> i32 {
    let params = SuiteParams {
        seeds: args.seeds,
        n_min: args.n_min,
        n_max: args.n_max,
        m_min: args.m_min,
        m_max: args.m_max,
        v_max: args.vmax,
        mode: args.mode.into(),
        po_budget: args.po_budget,
        max_steps: args.max_steps,
        timings: !args.no_timings,
    };
    if let Err(msg) = params.validate() {
        return fail_input(msg);
    }
    let (report, solutions) = match run_suite(&params) {
        Ok(result) => result,
        Err(msg) => return fail_input(msg),
    };
    if let Some(dir) = &args.solutions {
        if let Err(e) = fs::create_dir_all(dir) {
            return fail_input(format!("cannot create {}: {e}", dir.display()));
        }
        for (record, solution) in report.cases.iter().zip(&solutions) {
            let Some(solution) = solution else { continue };
            let text = match serialize_solution(solution) {
                Ok(text) => text,
                Err(msg) => return fail_input(msg),
            };
            let path = dir.join(format!("case-{:04}.json", record.seed));
            if let Err(msg) = write_file(&path, &text) {
                return fail_input(msg);
            }
        }
    }
    let text = report.to_json();
    match &args.report {
        Some(path) => {
            if let Err(msg) = write_file(path, &text) {
                return fail_input(msg);
            }
        }
        None => print!("{text}"),
    }
    eprintln!(
        "{}/{} cases passed; max events {}",
        report.summary.passed, report.summary.cases, report.summary.max_events
    );
    if report.summary.all_passed {
        EXIT_OK
    } else {
        EXIT_PROPERTY_FAILED
    }
}
