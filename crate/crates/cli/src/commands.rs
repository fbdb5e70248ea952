//! The subcommands. Each returns `Ok` on a pass and a [`CliError`] whose
//! exit code says what went wrong otherwise.

use std::collections::BTreeSet;
use std::path::PathBuf;

use chipfire::analysis::{self, AnalysisError, BoundViolation};
use chipfire::closedform::{self, FiringCountTable, OracleError};
use chipfire::engine::standard_initial;
use chipfire::explorer::{self, ExploreError};
use chipfire::poset::{self, PosetError};
use chipfire::{EngineError, Preset, Runner, Strategy, Trace, Variant};
use serde_json::json;

use crate::output::{print_counts, print_values, site_map, write_report, write_trace};
use crate::CliError;

impl From<EngineError> for CliError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::MoveCapExceeded { .. } => CliError::Cap(e.to_string()),
            EngineError::InvalidVariant(_)
            | EngineError::UnsupportedPreset { .. }
            | EngineError::Oracle(_) => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Inconsistent(_) => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<PosetError> for CliError {
    fn from(e: PosetError) -> Self {
        match e {
            PosetError::CapExceeded { .. } => CliError::Cap(e.to_string()),
            PosetError::OracleMismatch(_) => CliError::Failed(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ExploreError> for CliError {
    fn from(e: ExploreError) -> Self {
        match e {
            ExploreError::CapExceeded { .. } => CliError::Cap(e.to_string()),
            ExploreError::OutOfRange(_) => CliError::Usage(e.to_string()),
            ExploreError::Engine(e) => e.into(),
        }
    }
}

pub struct SimulateRun {
    pub variant: Variant,
    pub n: usize,
    pub preset: Preset,
    pub strategy: Strategy,
    pub seed: u64,
    pub move_cap: Option<u64>,
    pub trace: Option<PathBuf>,
    pub report: Option<PathBuf>,
}

pub fn simulate(run: SimulateRun) -> Result<(), CliError> {
    let initial = standard_initial(&run.variant, run.n, run.preset)?;
    let mut runner = Runner::new(run.variant, &run.strategy).seed(run.seed);
    if let Some(cap) = run.move_cap {
        runner = runner.move_cap(cap);
    }
    let trace = runner.run(&initial)?;
    write_trace(run.trace.as_deref(), &trace)?;

    let terminal = trace.terminal().values();
    let fires = trace.fire_counts();
    say!(
        "{} n={} {} seed={}: {} move(s)",
        run.variant,
        run.n,
        run.strategy.name(),
        run.seed,
        trace.len()
    );
    print_values("terminal", &terminal);
    print_counts("fires", &fires);
    say!(
        "weakly sorted: {}",
        analysis::is_weakly_sorted(trace.terminal())
    );
    write_report(
        run.report.as_deref(),
        &json!({
            "variant": run.variant,
            "n": run.n,
            "preset": run.preset,
            "strategy": run.strategy.name(),
            "seed": run.seed,
            "moves": trace.len(),
            "terminal": site_map(&terminal),
            "fire_counts": site_map(&fires),
            "weakly_sorted": analysis::is_weakly_sorted(trace.terminal()),
        }),
    )?;
    Ok(())
}

pub struct VerifyRun {
    pub variant: Variant,
    pub n: usize,
    pub preset: Preset,
    pub strategy: Strategy,
    pub first_seed: u64,
    pub runs: u64,
    pub report: Option<PathBuf>,
}

type Checker = fn(&Trace) -> Result<Vec<BoundViolation>, AnalysisError>;

fn square_entry(trace: &Trace) -> Result<Vec<BoundViolation>, AnalysisError> {
    analysis::check_diamond_entry(&analysis::diamond_configuration(trace)?)
}

const CHECKERS: [(&str, Checker); 5] = [
    ("chip_bounds", analysis::check_chip_bounds),
    ("square_tracking", analysis::check_diamond_tracking),
    ("loop_bounds", analysis::check_loop_bounds),
    ("square_progress", analysis::check_diamond_progress),
    ("square_entry", square_entry),
];

pub fn verify(run: VerifyRun) -> Result<(), CliError> {
    let initial = standard_initial(&run.variant, run.n, run.preset)?;
    // Fail fast on combinations the closed forms do not cover.
    let (expected_counts, expected_fires) = match run.preset {
        Preset::Origin => (
            Some(closedform::terminal_unlabeled(&run.variant, run.n)?.unlabeled),
            Some(closedform::fire_table(&run.variant, run.n)?),
        ),
        _ => (None, None),
    };
    let sorted_oracle = match closedform::expected_sorted_terminal(&run.variant, run.n, run.preset)
    {
        Ok(t) => t.labeled,
        Err(OracleError::NoSortingGuarantee { .. }) => None,
        Err(e) => return Err(e.into()),
    };

    let mut failures = Vec::new();
    let mut sortedness = Vec::new();
    let mut applied = BTreeSet::new();
    for seed in run.first_seed..run.first_seed + run.runs {
        let trace = Runner::new(run.variant, &run.strategy)
            .seed(seed)
            .run(&initial)?;
        let mut fail = |detail: String| failures.push(json!({ "seed": seed, "detail": detail }));
        let terminal = trace.terminal();
        let fires = FiringCountTable(trace.fire_counts());

        if let Some(want) = &expected_counts {
            if &terminal.unlabeled() != want {
                fail(format!("terminal chip counts {:?}", terminal.unlabeled()));
            }
        }
        if let Some(want) = &expected_fires {
            if &fires != want {
                fail(format!("fire counts {:?}", fires.0));
            }
        }
        let residuals = closedform::flow_balance_residuals(
            &run.variant,
            &initial.unlabeled(),
            &fires,
            &terminal.unlabeled(),
        );
        if !residuals.is_empty() {
            fail(format!("flow balance broken at {residuals:?}"));
        }
        match &sorted_oracle {
            Some(want) if &terminal.values() != want => {
                fail(format!("terminal values {:?}", terminal.values()))
            }
            Some(_) => {}
            None => sortedness.push(json!({
                "seed": seed,
                "weakly_sorted": analysis::is_weakly_sorted(terminal),
            })),
        }
        for (name, check) in CHECKERS {
            match check(&trace) {
                Ok(violations) => {
                    applied.insert(name);
                    if !violations.is_empty() {
                        fail(format!(
                            "{name}: {}",
                            serde_json::to_string(&violations).expect("serializable")
                        ));
                    }
                }
                Err(AnalysisError::Unsupported { .. }) => {}
                Err(e) => fail(format!("{name}: {e}")),
            }
        }
    }

    let passed = failures.is_empty();
    say!(
        "verify {} n={} ({}, {}): {} runs from seed {}, {} failures",
        run.variant,
        run.n,
        format!("{:?}", run.preset).to_lowercase(),
        run.strategy.name(),
        run.runs,
        run.first_seed,
        failures.len()
    );
    say!(
        "checks: terminal, fire counts, flow balance, {}{}",
        if sorted_oracle.is_some() {
            "sorted terminal"
        } else {
            "sortedness (reported only)"
        },
        applied.iter().map(|c| format!(", {c}")).collect::<String>()
    );
    if !sortedness.is_empty() {
        let sorted = sortedness
            .iter()
            .filter(|s| s["weakly_sorted"] == json!(true))
            .count();
        say!("{sorted} of {} runs ended weakly sorted", sortedness.len());
    }
    for f in failures.iter().take(10) {
        say!(
            "  seed {}: {}",
            f["seed"],
            f["detail"].as_str().unwrap_or("")
        );
    }
    write_report(
        run.report.as_deref(),
        &json!({
            "variant": run.variant,
            "n": run.n,
            "preset": run.preset,
            "strategy": run.strategy.name(),
            "first_seed": run.first_seed,
            "runs": run.runs,
            "passed": passed,
            "checks": applied,
            "failures": failures,
            "sortedness": if sortedness.is_empty() { json!(null) } else { json!(sortedness) },
        }),
    )?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Failed(format!(
            "{} failed checks",
            failures.len()
        )))
    }
}

#[derive(Clone, Copy)]
pub enum StructureCheck {
    Grid,
    Exponential,
}

pub fn poset(
    variant: Variant,
    n: usize,
    state_cap: usize,
    check: Option<StructureCheck>,
    dot: Option<PathBuf>,
    report_path: Option<PathBuf>,
) -> Result<(), CliError> {
    let reach = poset::ReachableSet::build(variant, n, state_cap)?;
    let poset = poset::build_poset(&reach);
    if let Some(path) = &dot {
        crate::output::write_atomic(path, poset::export_dot(&poset).as_bytes())?;
    }
    let report = match check {
        Some(StructureCheck::Grid) => Some(poset::check_grid_structure(&poset, &reach)?),
        Some(StructureCheck::Exponential) => Some(poset::check_exponential_grid(&poset, &reach)?),
        None => None,
    };

    say!(
        "poset {variant} n={n}: {} reachable states, {} moves, {} covering pairs",
        reach.len(),
        poset.nodes.len(),
        poset.covers.len()
    );
    if let Some(r) = &report {
        say!(
            "{} check: {} ({} violations)",
            r.check,
            if r.passed() { "pass" } else { "FAIL" },
            r.violations.len()
        );
        if let Some(indexing) = &r.indexing {
            say!("move indices read {indexing}");
        }
        for v in r.violations.iter().take(10) {
            say!("  {} [{}]: {}", v.node, v.clause, v.detail);
        }
    }
    write_report(
        report_path.as_deref(),
        &json!({
            "variant": variant,
            "n": n,
            "states": reach.len(),
            "grades": reach.grades(),
            "nodes": poset.nodes.len(),
            "covers": poset.covers.len(),
            "diamond_size": poset.diamond_size,
            "check": report,
        }),
    )?;
    match report {
        Some(r) if !r.passed() => Err(CliError::Failed(format!(
            "{} check found {} violations",
            r.check,
            r.violations.len()
        ))),
        _ => Ok(()),
    }
}

pub fn explore(
    variant: Variant,
    n: usize,
    state_cap: usize,
    trace: Option<PathBuf>,
    report_path: Option<PathBuf>,
) -> Result<(), CliError> {
    let initial = standard_initial(&variant, n, Preset::Origin)?;
    let report = explorer::explore(&initial, &variant, state_cap)?;
    if let Some(w) = &report.witness {
        write_trace(trace.as_deref(), w)?;
    }
    say!(
        "explore {variant} n={n}: {} states, {} terminals ({} weakly sorted), {}",
        report.states_visited,
        report.terminals.len(),
        report.sorted_terminals,
        if report.confluent {
            "confluent"
        } else {
            "not confluent"
        }
    );
    for (i, t) in report.terminals.iter().enumerate().take(10) {
        print_values(&format!("terminal {i}"), &t.0);
    }
    let mut json = report.to_json();
    json["variant"] = json!(variant);
    json["n"] = json!(n);
    write_report(report_path.as_deref(), &json)?;
    Ok(())
}

fn print_witness(trace: &Trace) {
    for m in &trace.moves {
        let values: Vec<String> = m.chosen.iter().map(|c| c.value.to_string()).collect();
        say!(
            "  step {}: fire site {} with {}",
            m.step,
            m.site,
            values.join(" ")
        );
    }
    print_values("terminal", &trace.terminal().values());
}

fn witness_report(trace: &Trace, case: &str, size: u64) -> serde_json::Value {
    json!({
        "case": case,
        "size": size,
        "moves": trace.len(),
        "terminal": site_map(&trace.terminal().values()),
        "weakly_sorted": analysis::is_weakly_sorted(trace.terminal()),
    })
}

pub fn odd_counterexample(
    n: u64,
    state_cap: usize,
    trace: Option<PathBuf>,
    report: Option<PathBuf>,
) -> Result<(), CliError> {
    if n.is_multiple_of(2) || n < 3 {
        return Err(CliError::Usage(format!(
            "no counterexample exists for {n} chips: every run sorts an even count or a single chip"
        )));
    }
    let initial = standard_initial(&Variant::Base, n as usize, Preset::Origin)?;
    let witness = explorer::find_unsorted_terminal(&initial, &Variant::Base, state_cap)?
        .ok_or_else(|| CliError::Failed(format!("every terminal with {n} chips is sorted")))?;
    say!(
        "{n} chips on the plain line, {} move(s) to an unsorted end:",
        witness.len()
    );
    print_witness(&witness);
    write_trace(trace.as_deref(), &witness)?;
    write_report(report.as_deref(), &witness_report(&witness, "odd", n))?;
    Ok(())
}

pub fn loops_counterexample(
    m: u64,
    seed: u64,
    trace: Option<PathBuf>,
    report: Option<PathBuf>,
) -> Result<(), CliError> {
    if m == 0 {
        return Err(CliError::Usage(
            "size must be at least 1: a single chip cannot end unsorted".into(),
        ));
    }
    let witness = explorer::adversarial_1mod4(m, seed)?;
    say!(
        "{} chips on the self-loop line, holding the chips valued -{m} back:",
        4 * m + 1
    );
    print_witness(&witness);
    write_trace(trace.as_deref(), &witness)?;
    write_report(
        report.as_deref(),
        &witness_report(&witness, "loops-1mod4", m),
    )?;
    if analysis::is_weakly_sorted(witness.terminal()) {
        return Err(CliError::Failed("the held run ended weakly sorted".into()));
    }
    Ok(())
}
