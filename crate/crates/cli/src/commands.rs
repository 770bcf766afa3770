//! Subcommand implementations. Each returns an exit code or a failure
//! carrying one.

use std::path::Path;

use anyhow::anyhow;
use serde_json::json;
use stride_core::governor::{
    build_moas, Membership, MoasArtifact, RolloutWrench, SampleGrid, DEFAULT_SAMPLE_BUDGET,
};
use stride_core::planner::{
    brute_force_solve, encode, evc as plan_evc, evc_sweep as sweep, solve, sweep_csv, validate_plan, PlanFile,
    SweepConfig,
};
use stride_core::sim::{check_trace, run_scenario, sidecar};
use stride_core::world::load_map;
use stride_core::{EnergyModel, GovernorError, GridMap, Mode, Plan, PlanConfig, PlanError, Scenario, Solution};

use crate::config::{apply, read, ConfigFile, RunManifest};
use crate::exit::{BUDGET, INFEASIBLE, IO, OK, USAGE, VALIDATION};
use crate::Common;

/// Candidates tried per step by the exact-membership governor.
const EXACT_CANDIDATES: usize = 64;

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

pub type Outcome = Result<u8, Failure>;

trait Coded<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Coded<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

fn fail(code: u8, msg: String) -> Failure {
    Failure { code, error: anyhow!(msg) }
}

fn plan_failure(e: PlanError) -> Failure {
    let code = match &e {
        PlanError::InvalidConfig(_) => USAGE,
        PlanError::InfeasibleEncoding(_) | PlanError::Infeasible => INFEASIBLE,
        PlanError::BudgetExceeded { .. } => BUDGET,
        _ => IO,
    };
    Failure { code, error: e.into() }
}

fn governor_failure(e: GovernorError) -> Failure {
    let code = match &e {
        GovernorError::InvalidParameters(_) => USAGE,
        GovernorError::EmptySet | GovernorError::EmptyIndex => INFEASIBLE,
        GovernorError::Budget { .. } => BUDGET,
        GovernorError::FingerprintMismatch { .. } => VALIDATION,
        GovernorError::Parse(_) | GovernorError::Io(_) => IO,
    };
    Failure { code, error: e.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EnvChoice {
    /// Spring contact taken from the scenario.
    Contact,
    /// Sampled wrench held constant.
    Constant,
}

fn setup(common: &Common, command: &str) -> Result<(ConfigFile, RunManifest), Failure> {
    if let Some(n) = common.workers {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global();
    }
    let cfg = match &common.config {
        Some(p) if !p.exists() => return Err(fail(IO, format!("config {} not found", p.display()))),
        p => ConfigFile::load(p.as_deref()).code(USAGE)?,
    };
    let mut manifest = RunManifest::new(command, &common.out, common.seed, common.workers.map(|n| n as usize));
    if let Some(p) = &common.config {
        manifest.input("config", p);
    }
    Ok((cfg, manifest))
}

fn load_map_file(path: &Path) -> Result<GridMap, Failure> {
    let text = read(path).code(IO)?;
    load_map(&text).map_err(|e| fail(IO, format!("map {}: {e}", path.display())))
}

fn load_plan_file(path: &Path) -> Result<Plan, Failure> {
    let text = read(path).code(IO)?;
    PlanFile::from_json(&text)
        .and_then(|f| f.to_plan())
        .map_err(|e| fail(IO, format!("plan {}: {e}", path.display())))
}

fn load_scenario(path: &Path, cfg: &ConfigFile) -> Result<Scenario, Failure> {
    let text = read(path).code(IO)?;
    let mut sc = Scenario::from_json(&text).map_err(|e| fail(IO, format!("scenario {}: {e}", path.display())))?;
    sc.gains = apply(&sc.gains, cfg.gains.as_ref(), "gains").code(USAGE)?;
    sc.bounds = apply(&sc.bounds, cfg.bounds.as_ref(), "bounds").code(USAGE)?;
    sc.validate().code(USAGE)?;
    Ok(sc)
}

fn planner_config(cfg: &ConfigFile) -> Result<PlanConfig, Failure> {
    apply(&PlanConfig::default(), cfg.planner.as_ref(), "planner").code(USAGE)
}

fn energy_model(cfg: &ConfigFile) -> Result<EnergyModel, Failure> {
    let e = apply(&EnergyModel::default(), cfg.energy.as_ref(), "energy").code(USAGE)?;
    e.validate().map_err(|m| fail(USAGE, m))?;
    Ok(e)
}

fn mode_labels(sol: &Solution) -> String {
    sol.plan
        .mode_sequence()
        .iter()
        .map(|m| m.map_or("?".to_string(), |m| (m as u8).to_string()))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn plan(map_path: &Path, horizon: Option<u32>, single_mode: Option<Mode>, exact: bool, common: &Common) -> Outcome {
    let (cfg, mut manifest) = setup(common, "plan")?;
    manifest.input("map", map_path);
    manifest.set_override("T", json!(horizon));
    manifest.set_override("single_mode", json!(single_mode));
    manifest.set_override("exact", json!(exact));
    let map = load_map_file(map_path)?;
    let mut config = planner_config(&cfg)?;
    if let Some(t) = horizon {
        config.horizon = t;
    }
    if let Some(m) = single_mode {
        config = config.single_mode(m);
    }
    let energy = energy_model(&cfg)?;

    let inst = encode(&map, &config).map_err(plan_failure)?;
    let (sol, budget_hit) = match solve(&inst) {
        Ok(sol) => (sol, false),
        Err(PlanError::BudgetExceeded { incumbent: Some(sol), .. }) => (*sol, true),
        Err(e) => return Err(plan_failure(e)),
    };
    let report = validate_plan(&sol.plan, &map, &config);
    let mut file = PlanFile::new(&sol.plan, sol.objective, &report);
    file.optimality_gap = Some(sol.stats.gap);
    file.solve_seconds = Some(sol.stats.seconds);
    manifest.write("plan.json", &file.to_json()).code(IO)?;
    let evc = plan_evc(&sol.plan, &map, &energy);
    manifest.write("evc.csv", &evc.to_csv()).code(IO)?;

    println!(
        "status {:?}  objective {:.6}  gap {:.4}  nodes {}  {:.3} s",
        sol.status, sol.objective, sol.stats.gap, sol.stats.nodes, sol.stats.seconds
    );
    println!("modes  {}", mode_labels(&sol));
    println!("EVC    {:.4} J/cell over {} cells", evc.evc(), sol.plan.visited.count());

    let mut code = OK;
    if exact {
        match brute_force_solve(&inst) {
            Ok(b) if b.score == sol.score => println!("exact  confirmed optimal"),
            Ok(b) => {
                eprintln!("exact search found objective {:.6}, solver {:.6}", b.objective, sol.objective);
                code = VALIDATION;
            }
            Err(PlanError::BudgetExceeded { .. }) => println!("exact  skipped, instance beyond the enumeration guard"),
            Err(e) => {
                eprintln!("exact search disagrees: {e}");
                code = VALIDATION;
            }
        }
    }
    if !report.is_ok() {
        eprintln!("plan fails validation: {} violations", report.violations.len());
        code = VALIDATION;
    } else if budget_hit && code == OK {
        eprintln!("search budget exhausted; wrote the incumbent");
        code = BUDGET;
    }
    manifest.finish().code(IO)?;
    Ok(code)
}

pub fn validate(map_path: &Path, plan_path: &Path, horizon: Option<u32>, common: &Common) -> Outcome {
    let (cfg, mut manifest) = setup(common, "validate")?;
    manifest.input("map", map_path);
    manifest.input("plan", plan_path);
    manifest.set_override("T", json!(horizon));
    let map = load_map_file(map_path)?;
    let plan = load_plan_file(plan_path)?;
    let mut config = planner_config(&cfg)?;
    config.horizon = horizon.unwrap_or(plan.displacements.len() as u32);
    let report = validate_plan(&plan, &map, &config);
    let doc = json!({ "ok": report.is_ok(), "families": report.family_counts(), "violations": report.violations });
    manifest.write("validation.json", &serde_json::to_string_pretty(&doc).code(IO)?).code(IO)?;
    for (family, n) in report.family_counts() {
        println!("{family:<17} {n}");
    }
    for v in &report.violations {
        println!("  {} {} t={:?}: {}", v.family, v.constraint, v.t, v.detail);
    }
    manifest.finish().code(IO)?;
    Ok(if report.is_ok() { OK } else { VALIDATION })
}

pub fn evc(map_path: &Path, plan_path: &Path, common: &Common) -> Outcome {
    let (cfg, mut manifest) = setup(common, "evc")?;
    manifest.input("map", map_path);
    manifest.input("plan", plan_path);
    let map = load_map_file(map_path)?;
    let plan = load_plan_file(plan_path)?;
    if plan.visited.n_grid != map.n_grid {
        return Err(fail(USAGE, format!("plan is for a {0}x{0} grid, map is {1}x{1}", plan.visited.n_grid, map.n_grid)));
    }
    let report = plan_evc(&plan, &map, &energy_model(&cfg)?);
    let csv = report.to_csv();
    manifest.write("evc.csv", &csv).code(IO)?;
    print!("{csv}");
    manifest.finish().code(IO)?;
    Ok(OK)
}

pub fn evc_sweep(map_path: &Path, common: &Common) -> Outcome {
    let (cfg, mut manifest) = setup(common, "evc-sweep")?;
    manifest.input("map", map_path);
    let map = load_map_file(map_path)?;
    let config = planner_config(&cfg)?;
    let energy = energy_model(&cfg)?;
    let sweep_cfg = apply(&SweepConfig::default(), cfg.sweep.as_ref(), "sweep").code(USAGE)?;
    let rows = sweep(&map, &config, &energy, &sweep_cfg).map_err(plan_failure)?;
    let csv = sweep_csv(&rows);
    manifest.write("sweep.csv", &csv).code(IO)?;
    manifest.write("sweep.json", &serde_json::to_string_pretty(&rows).code(IO)?).code(IO)?;
    print!("{csv}");
    manifest.finish().code(IO)?;
    Ok(if rows.iter().any(|r| r.feasible()) { OK } else { INFEASIBLE })
}

pub fn moas_build(scenario_path: &Path, points: usize, env: EnvChoice, common: &Common) -> Outcome {
    let (cfg, mut manifest) = setup(common, "moas-build")?;
    manifest.input("scenario", scenario_path);
    manifest.set_override("grid", json!(points));
    manifest.set_override("env", json!(format!("{env:?}").to_lowercase()));
    let sc = load_scenario(scenario_path, &cfg)?;
    let wrench = match env {
        EnvChoice::Contact => sc.rollout_wrench(),
        EnvChoice::Constant => RolloutWrench::Constant,
    };
    let grid = SampleGrid::uniform(&sc.bounds, [points; 5]);
    let started = std::time::Instant::now();
    let (index, summary) =
        build_moas(&sc.gains, &sc.bounds, &wrench, &grid, DEFAULT_SAMPLE_BUDGET).map_err(governor_failure)?;
    manifest.write("moas.json", &index.to_artifact().to_json()).code(IO)?;
    println!(
        "retained {}/{} samples ({:.1}%) in {:.2} s",
        summary.retained,
        summary.sampled,
        100.0 * summary.retained_fraction,
        started.elapsed().as_secs_f64()
    );
    println!("fingerprint {}", index.fingerprint());
    manifest.finish().code(IO)?;
    Ok(OK)
}

pub fn simulate(scenario_path: &Path, moas: Option<&Path>, no_governor: bool, exact: bool, common: &Common) -> Outcome {
    let (cfg, mut manifest) = setup(common, "simulate")?;
    manifest.input("scenario", scenario_path);
    manifest.set_override("no_governor", json!(no_governor));
    manifest.set_override("exact", json!(exact));
    let mut sc = load_scenario(scenario_path, &cfg)?;
    if no_governor {
        sc.governor.enabled = false;
    }
    if exact {
        sc.governor.membership = Some(Membership::Exact { candidates: EXACT_CANDIDATES });
    }
    let index = if sc.governor.enabled {
        let path = moas.ok_or_else(|| fail(USAGE, "governed scenario needs --moas".into()))?;
        manifest.input("moas", path);
        if !path.exists() {
            return Err(fail(IO, format!("MOAS artifact {} not found", path.display())));
        }
        let artifact = MoasArtifact::from_json(&read(path).code(IO)?).map_err(governor_failure)?;
        let wrench = artifact.env;
        Some(artifact.into_index(Some((&sc.gains, &sc.bounds, &wrench))).map_err(governor_failure)?)
    } else {
        None
    };
    let trace = run_scenario(&sc, index.as_ref()).code(USAGE)?;
    let report = check_trace(&trace, &sc.bounds);
    manifest.write("trace.csv", &trace.to_csv().code(IO)?).code(IO)?;
    manifest.write("trace_bounds.json", &serde_json::to_string_pretty(&sidecar(&sc.bounds)).code(IO)?).code(IO)?;
    manifest.write("violations.json", &serde_json::to_string_pretty(&report).code(IO)?).code(IO)?;
    println!(
        "{} steps, governor {}, {} modified",
        trace.len(),
        if sc.governor.enabled { "on" } else { "off" },
        trace.modified_steps()
    );
    println!(
        "violations  x {}  v {}  w {}  (first at t = {:?} / {:?} / {:?})",
        report.count_x, report.count_v, report.count_w, report.first_x, report.first_v, report.first_w
    );
    manifest.finish().code(IO)?;
    if sc.governor.enabled && !report.is_clean() {
        eprintln!("governed run left the bounds");
        return Ok(VALIDATION);
    }
    Ok(OK)
}
