//! Subcommand dispatch and report emission.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use osclab_correction::{load_state, Background, CorrectionState};

use crate::checks::{self, Outcome};
use crate::config::RunConfig;
use crate::error::{CliError, Context};
use crate::report::{inputs_hash, Artifacts, Report};
use crate::suite::{self, SuiteParams, CRITERIA};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    ModelValidate,
    OscResidual,
    OscSolve,
    HeSolve,
    Equivalence,
    ExpandVerify,
    LinearizeVerify,
    Correct,
    Polish,
    Norms,
    Suite,
}

impl Command {
    pub fn name(&self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

/// Where to write, which seed to use and how many worker threads to allow.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub out: PathBuf,
    pub seed: u64,
    pub threads: usize,
}

impl RunContext {
    /// Flags override the config; `OSCLAB_THREADS` caps parallelism.
    pub fn resolve(cfg: &RunConfig, out: Option<PathBuf>, seed: Option<u64>) -> Result<Self, CliError> {
        let threads = match std::env::var("OSCLAB_THREADS") {
            Ok(v) => v
                .trim()
                .parse::<usize>()
                .ok()
                .filter(|n| *n > 0)
                .ok_or_else(|| CliError::Config(format!("OSCLAB_THREADS must be a positive integer, got `{v}`")))?,
            Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        Ok(RunContext {
            out: out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("oscla-out")),
            seed: seed.unwrap_or(cfg.seed),
            threads,
        })
    }
}

/// Hash of everything that determines the report: the command, the
/// configuration with paths removed, the model text, any resumed archive
/// and the seed.
fn hash_inputs(command: Command, cfg: &RunConfig, seed: u64) -> Result<String, CliError> {
    let mut bare = cfg.clone();
    bare.model = PathBuf::new();
    bare.out = None;
    let state = match &cfg.state {
        Some(p) => std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?,
        None => String::new(),
    };
    bare.state = None;
    let cfg_json = serde_json::to_string(&bare).expect("config serializes");
    let model = cfg.model_text()?;
    Ok(inputs_hash(&[
        command.name().as_bytes(),
        cfg_json.as_bytes(),
        model.as_bytes(),
        state.as_bytes(),
        seed.to_string().as_bytes(),
    ]))
}

fn corrected_state(cfg: &RunConfig, m: &osclab_models::ModelFibration) -> Result<(Background, CorrectionState), CliError> {
    match &cfg.state {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            load_state(&text).context("load_state")
        }
        None => {
            let bg = checks::background(m)?;
            let (_, st) = checks::correction(&bg, cfg.mode_for(m), &cfg.ladder, cfg.orders, &cfg.slopes)?;
            Ok((bg, st))
        }
    }
}

/// Runs the acceptance criteria on up to `threads` workers; results keep
/// criterion order.
pub fn run_suite(params: &SuiteParams, threads: usize) -> Vec<Result<Outcome, CliError>> {
    let next = std::sync::atomic::AtomicUsize::new(1);
    let slots: Vec<std::sync::Mutex<Option<Result<Outcome, CliError>>>> =
        (0..CRITERIA).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, CRITERIA) {
            s.spawn(|| loop {
                let n = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if n > CRITERIA {
                    break;
                }
                let r = suite::criterion(n, params);
                *slots[n - 1].lock().expect("slot") = Some(r);
            });
        }
    });
    slots.into_iter().map(|s| s.into_inner().expect("slot").expect("every criterion ran")).collect()
}

fn evaluate(command: Command, cfg: &RunConfig, ctx: &RunContext) -> Result<Outcome, CliError> {
    let m = cfg.build_model()?;
    let (tol, slopes) = (&cfg.tolerances, &cfg.slopes);
    match command {
        Command::ModelValidate => checks::model_validate(&m, &cfg.ladder, tol),
        Command::OscResidual => checks::osc_report(&m, cfg.perturbation, tol),
        Command::OscSolve => checks::osc_solve_run(&m, cfg.target, cfg.perturbation, tol),
        Command::HeSolve => Ok(checks::he_solve(&m, &cfg.degrees_for(&m), ctx.seed, tol)?.0),
        Command::Equivalence => checks::he_equivalence(&m, &cfg.degrees_for(&m), ctx.seed, tol),
        Command::ExpandVerify => {
            let mut out = checks::expansion_orders(&m, &cfg.ladder, slopes)?;
            out.merge(checks::corrected_scalar(&m, &cfg.ladder, slopes)?);
            Ok(out)
        }
        Command::LinearizeVerify => {
            let mut out = checks::pl1_properties(&m, cfg.basis_degree, cfg.basis_modes, ctx.seed, tol)?;
            out.merge(checks::linearization_identities(&m, &cfg.probe_ladder, slopes)?);
            out.merge(checks::reality(&m, &cfg.probe_ladder, tol)?);
            Ok(out)
        }
        Command::Correct => {
            let bg = checks::background(&m)?;
            Ok(checks::correction(&bg, cfg.mode_for(&m), &cfg.ladder, cfg.orders, slopes)?.0)
        }
        Command::Polish => {
            let (bg, st) = corrected_state(cfg, &m)?;
            checks::polish(&bg, &st, cfg.k, cfg.max_newton_steps, tol)
        }
        Command::Norms => {
            let (bg, st) = corrected_state(cfg, &m)?;
            let mut out = checks::norms(&bg, &st, &cfg.ladder, slopes)?;
            let lip = checks::lipschitz(&bg, &st, cfg.k, cfg.lipschitz_pairs, cfg.lipschitz_radius, ctx.seed, tol)?;
            out.merge(lip);
            Ok(out)
        }
        Command::Suite => {
            let mut out = checks::model_validate(&m, &cfg.ladder, tol)?.prefixed("model");
            for (n, r) in run_suite(&SuiteParams::from_config(cfg, ctx.seed), ctx.threads).into_iter().enumerate() {
                out.merge(r?.prefixed(&format!("c{}", n + 1)));
            }
            Ok(out)
        }
    }
}

/// Executes one command, writes its artifacts and `report.json`.
pub fn run(command: Command, cfg: &RunConfig, ctx: &RunContext) -> Result<Report, CliError> {
    cfg.validate()?;
    let hash = hash_inputs(command, cfg, ctx.seed)?;
    let outcome = evaluate(command, cfg, ctx)?;
    let mut artifacts = Artifacts::new(&ctx.out)?;
    for (name, contents) in &outcome.files {
        artifacts.write(name, contents)?;
    }
    let mut report = Report::new(&command.name(), hash, ctx.seed);
    report.extend(outcome.checks);
    for o in outcome.observations {
        report.observe(o.name, o.value);
    }
    report.artifacts = artifacts.into_list();
    std::fs::write(ctx.out.join("report.json"), report.to_json())?;
    Ok(report)
}

pub fn report_path(out: &Path) -> PathBuf {
    out.join("report.json")
}
