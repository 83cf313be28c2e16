//! Command-line runner: configuration, mode dispatch and file outputs.

pub mod catalog;
pub mod config;
pub mod output;
pub mod verify;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use clap::Parser;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::continuation::{continue_branch, NewtonOptions};
use crate::elliptic::physical_samples;
use crate::energy::{electrostatics, energy_report, EnergyReport};
use crate::error::{Error, Result};
use crate::optimizer::{
    minimize_mechanical, verify_multiplier_bound, verify_pointwise_bound, MinimizerResult,
    OptimizerOptions,
};
pub use catalog::{profile_catalog, random_corpus};
pub use config::{Mode, RunConfig};
use output::{csv_table, plot_stub, write_atomic, write_json, write_manifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

/// Stationary MEMS plate solver. Options are read from an optional
/// key=value file and overridden by flags.
#[derive(Debug, Parser)]
#[command(name = "mems", version)]
pub struct Args {
    /// key=value configuration file
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// solve-potential | energy | minimize | branch | bifurcation | verify
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub tau: Option<String>,
    #[arg(long)]
    pub a: Option<String>,
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Plate nodes (odd)
    #[arg(long)]
    pub n: Option<String>,
    /// Rectangle nodes in x (must equal n)
    #[arg(long)]
    pub nx: Option<String>,
    /// Rectangle nodes in eta (odd)
    #[arg(long)]
    pub neta: Option<String>,
    #[arg(long)]
    pub rho: Option<String>,
    /// Comma-separated energy levels for bifurcation
    #[arg(long = "rho-list")]
    pub rho_list: Option<String>,
    #[arg(long = "lambda-max")]
    pub lambda_max: Option<String>,
    #[arg(long)]
    pub steps: Option<String>,
    #[arg(long = "kkt-tol")]
    pub kkt_tol: Option<String>,
    #[arg(long = "out-dir")]
    pub out_dir: Option<String>,
    /// Seed of the random test corpus
    #[arg(long)]
    pub seed: Option<String>,
    /// zero | quartic | sextic | eigen | constant
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub amplitude: Option<String>,
}

impl Args {
    fn overrides(&self) -> BTreeMap<String, String> {
        let fields = [
            ("mode", &self.mode),
            ("beta", &self.beta),
            ("tau", &self.tau),
            ("a", &self.a),
            ("epsilon", &self.epsilon),
            ("n", &self.n),
            ("nx", &self.nx),
            ("neta", &self.neta),
            ("rho", &self.rho),
            ("rho_list", &self.rho_list),
            ("lambda_max", &self.lambda_max),
            ("steps", &self.steps),
            ("kkt_tol", &self.kkt_tol),
            ("out_dir", &self.out_dir),
            ("seed", &self.seed),
            ("profile", &self.profile),
            ("amplitude", &self.amplitude),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v)))
            .collect()
    }

    pub fn into_config(self) -> Result<RunConfig> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    Error::config("config", format!("cannot read {}: {e}", path.display()))
                })?;
                config::parse_pairs(&text)?
            }
            None => BTreeMap::new(),
        };
        RunConfig::resolve(&file, &self.overrides())
    }
}

/// Files written and whether the verify suite (if run) passed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub files: Vec<String>,
    pub verify_failed: bool,
}

pub fn exit_code(result: &Result<Outcome>) -> i32 {
    match result {
        Ok(o) if o.verify_failed => EXIT_VERIFY,
        Ok(_) => EXIT_OK,
        Err(Error::Config { .. }) => EXIT_CONFIG,
        Err(_) => EXIT_SOLVER,
    }
}

/// Parse arguments, run, report, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = args.into_config().and_then(|cfg| run(&cfg));
    match &result {
        Ok(o) => {
            for f in &o.files {
                println!("wrote {f}");
            }
            if o.verify_failed {
                eprintln!("verify: at least one invariant failed (see verify.json)");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    exit_code(&result)
}

pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let (files, verify_failed) = match cfg.mode {
        Mode::SolvePotential => (solve_potential(cfg)?, false),
        Mode::Energy => (energy(cfg)?, false),
        Mode::Minimize => (minimize(cfg)?, false),
        Mode::Branch => (branch(cfg)?, false),
        Mode::Bifurcation => (bifurcation(cfg)?, false),
        Mode::Verify => verify_mode(cfg)?,
    };
    write_atomic(&cfg.out_dir, "plot.py", &plot_stub(cfg.mode))?;
    write_manifest(cfg, &files)?;
    let mut all = files;
    all.extend(["plot.py".to_string(), "manifest.json".to_string()]);
    Ok(Outcome {
        files: all
            .iter()
            .map(|f| cfg.out_dir.join(f).display().to_string())
            .collect(),
        verify_failed,
    })
}

fn optimizer_options(cfg: &RunConfig) -> OptimizerOptions {
    OptimizerOptions {
        kkt_tol: cfg.kkt_tol,
        ..Default::default()
    }
}

fn profile_csv(u: &crate::model::DeflectionProfile) -> String {
    csv_table(
        &["x", "u"],
        u.grid()
            .nodes()
            .into_iter()
            .zip(u.values())
            .map(|(x, v)| vec![x, *v]),
    )
}

fn solve_potential(cfg: &RunConfig) -> Result<Vec<String>> {
    let p = cfg.params;
    let grid = cfg.grid();
    let u = profile_catalog(&cfg.profile, cfg.amplitude, &cfg.line(), &p)?;
    let es = electrostatics(&u, &p, &grid)?;
    let phi = es.potential();
    let d = &cfg.out_dir;
    let mut rows = Vec::with_capacity(grid.node_count());
    for i in 0..grid.nx() {
        for j in 0..grid.neta() {
            rows.push(vec![grid.x(i), grid.eta(j), phi.at(i, j)]);
        }
    }
    write_atomic(d, "phi.csv", &csv_table(&["x", "eta", "phi"], rows))?;
    let psi = physical_samples(&u, phi).into_iter().map(|r| r.to_vec());
    write_atomic(d, "psi.csv", &csv_table(&["x", "z", "psi"], psi))?;
    let tr = u
        .grid()
        .nodes()
        .into_iter()
        .zip(&es.g)
        .map(|(x, g)| vec![x, *g]);
    write_atomic(d, "traction.csv", &csv_table(&["x", "g"], tr))?;
    write_atomic(d, "profile.csv", &profile_csv(&u))?;
    let g_min = es.g.iter().cloned().fold(f64::INFINITY, f64::min);
    let g_max = es.g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    write_json(
        d,
        "potential.json",
        &json!({
            "profile": cfg.profile,
            "amplitude": cfg.amplitude,
            "E_e": es.energy,
            "g_min": g_min,
            "g_max": g_max,
        }),
    )?;
    Ok(names(&[
        "phi.csv",
        "psi.csv",
        "traction.csv",
        "profile.csv",
        "potential.json",
    ]))
}

fn energy(cfg: &RunConfig) -> Result<Vec<String>> {
    let p = cfg.params;
    let u = profile_catalog(&cfg.profile, cfg.amplitude, &cfg.line(), &p)?;
    let report = energy_report(&u, &p, &cfg.grid())?;
    let d = &cfg.out_dir;
    write_atomic(
        d,
        "energy.csv",
        &format!("{}\n{}\n", EnergyReport::CSV_HEADER, report.csv_row()),
    )?;
    write_atomic(d, "profile.csv", &profile_csv(&u))?;
    write_json(d, "energy.json", &report)?;
    Ok(names(&["energy.csv", "profile.csv", "energy.json"]))
}

#[derive(Debug, Serialize)]
struct MinimizerSummary<'a> {
    rho: f64,
    converged: bool,
    lambda_rho: f64,
    lambda_least_squares: f64,
    e_m: f64,
    e_e: f64,
    min_u: f64,
    kkt_residual: f64,
    iterations: usize,
    polish_iterations: usize,
    seed_eta: f64,
    seed_e_m: f64,
    multiplier_bound: crate::optimizer::BoundCheck,
    pointwise_bound: crate::optimizer::BoundCheck,
    history: &'a [crate::optimizer::HistoryEntry],
}

fn summary<'a>(r: &'a MinimizerResult, cfg: &RunConfig) -> MinimizerSummary<'a> {
    MinimizerSummary {
        rho: r.rho,
        converged: r.converged,
        lambda_rho: r.lambda_rho,
        lambda_least_squares: r.lambda_ls,
        e_m: r.e_m,
        e_e: r.e_e,
        min_u: r.u_rho.min(),
        kkt_residual: r.kkt_residual,
        iterations: r.iterations,
        polish_iterations: r.polish_iterations,
        seed_eta: r.seed_eta,
        seed_e_m: r.seed_e_m,
        multiplier_bound: verify_multiplier_bound(r, &cfg.params),
        pointwise_bound: verify_pointwise_bound(&r.u_rho, r.rho),
        history: &r.history,
    }
}

fn minimize(cfg: &RunConfig) -> Result<Vec<String>> {
    let r = minimize_mechanical(cfg.rho, &cfg.params, &cfg.grid(), &optimizer_options(cfg))?;
    let d = &cfg.out_dir;
    write_atomic(d, "deflection.csv", &r.csv())?;
    write_json(d, "minimizer.json", &summary(&r, cfg))?;
    r.require_converged()?;
    Ok(names(&["deflection.csv", "minimizer.json"]))
}

fn branch(cfg: &RunConfig) -> Result<Vec<String>> {
    let b = continue_branch(
        cfg.lambda_max,
        cfg.steps,
        &cfg.params,
        &cfg.grid(),
        &NewtonOptions::default(),
    )?;
    let d = &cfg.out_dir;
    write_atomic(d, "branch.csv", &b.csv())?;
    let last = b.points.last().expect("branch starts at zero");
    write_atomic(d, "branch_end.csv", &profile_csv(&last.u))?;
    write_json(
        d,
        "branch.json",
        &json!({
            "target": b.target,
            "reached": b.reached(),
            "complete": b.complete(),
            "stopped": b.stopped,
            "points": b.points.len(),
        }),
    )?;
    if !b.complete() {
        return Err(Error::BranchIncomplete {
            reached: b.reached(),
            target: b.target,
        });
    }
    Ok(names(&["branch.csv", "branch_end.csv", "branch.json"]))
}

fn bifurcation(cfg: &RunConfig) -> Result<Vec<String>> {
    let grid = cfg.grid();
    let opts = optimizer_options(cfg);
    let results: Vec<MinimizerResult> = cfg
        .rho_list
        .par_iter()
        .map(|&rho| minimize_mechanical(rho, &cfg.params, &grid, &opts))
        .collect::<Result<_>>()?;
    let d = &cfg.out_dir;
    let mut files = Vec::new();
    for (k, r) in results.iter().enumerate() {
        let name = format!("deflection_{k}.csv");
        write_atomic(d, &name, &r.csv())?;
        files.push(name);
    }
    let rows = results
        .iter()
        .map(|r| vec![r.rho, r.lambda_rho, r.e_m, r.e_e, r.u_rho.min()]);
    write_atomic(
        d,
        "bifurcation.csv",
        &csv_table(&["rho", "lambda_rho", "E_m", "E_e", "min_u"], rows),
    )?;
    let mut order: Vec<&MinimizerResult> = results.iter().collect();
    order.sort_by(|a, b| a.rho.total_cmp(&b.rho));
    let lambda_decreasing = order.windows(2).all(|w| w[1].lambda_rho < w[0].lambda_rho);
    let mu_non_decreasing = order.windows(2).all(|w| w[1].e_m >= w[0].e_m);
    let summaries: Vec<_> = results.iter().map(|r| summary(r, cfg)).collect();
    write_json(
        d,
        "bifurcation.json",
        &json!({
            "all_converged": results.iter().all(|r| r.converged),
            "lambda_strictly_decreasing": lambda_decreasing,
            "mu_non_decreasing": mu_non_decreasing,
            "runs": summaries,
        }),
    )?;
    for r in &results {
        r.require_converged()?;
    }
    files.extend(names(&["bifurcation.csv", "bifurcation.json"]));
    Ok(files)
}

fn verify_mode(cfg: &RunConfig) -> Result<(Vec<String>, bool)> {
    let report = verify::run_suite(cfg)?;
    write_json(&cfg.out_dir, "verify.json", &report)?;
    Ok((names(&["verify.json"]), !report.all_pass))
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}
