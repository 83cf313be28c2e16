//! Deterministic file outputs: CSV tables, JSON summaries, the run manifest
//! and a plotting stub.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{Mode, RunConfig};
use crate::error::Result;

/// Write through a sibling temporary file and rename, so readers never see
/// a partial file.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, &path)?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(dir, name, &text)
}

/// CSV with a header row and every value printed with 17 significant digits.
pub fn csv_table(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

pub fn config_hash(cfg: &RunConfig) -> String {
    Sha256::digest(cfg.canonical().as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Every tolerance the solvers use, by name.
pub fn tolerances(cfg: &RunConfig) -> Value {
    use crate::{continuation, elliptic, energy, model, optimizer, spectral};
    let opt = optimizer::OptimizerOptions {
        kkt_tol: cfg.kkt_tol,
        ..Default::default()
    };
    let newton = continuation::NewtonOptions::default();
    json!({
        "linear_solve_relative_residual": elliptic::LINEAR_TOL,
        "touchdown_floor": model::DELTA_FLOOR,
        "rescale_relative_tol": energy::RESCALE_TOL,
        "rescale_max_iter": energy::RESCALE_MAX_ITER,
        "order_slack": energy::ORDER_SLACK,
        "monotonicity_relative_tol": energy::MONOTONE_TOL,
        "eigen_stagnation_tol": spectral::EIGEN_TOL,
        "eigen_max_iter": spectral::EIGEN_MAX_ITER,
        "seed_eta_max": spectral::SEED_ETA_MAX,
        "optimizer": opt,
        "bound_slack": optimizer::BOUND_SLACK,
        "newton": newton,
        "jacobian_fd_step": continuation::FD_STEP,
    })
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    version: &'static str,
    mode: String,
    config: &'a RunConfig,
    config_sha256: String,
    grid: Value,
    tolerances: Value,
    outputs: Vec<String>,
}

pub fn write_manifest(cfg: &RunConfig, outputs: &[String]) -> Result<PathBuf> {
    let mut outputs = outputs.to_vec();
    outputs.extend(["manifest.json".to_string(), "plot.py".to_string()]);
    let m = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        mode: cfg.mode.to_string(),
        config: cfg,
        config_sha256: config_hash(cfg),
        grid: json!({ "n": cfg.n, "nx": cfg.nx, "neta": cfg.neta }),
        tolerances: tolerances(cfg),
        outputs,
    };
    write_json(&cfg.out_dir, "manifest.json", &m)
}

/// A matplotlib script for the files the given mode writes.
pub fn plot_stub(mode: Mode) -> String {
    let body = match mode {
        Mode::SolvePotential => {
            "d = np.genfromtxt('psi.csv', delimiter=',', names=True)\n\
             plt.tricontourf(d['x'], d['z'], d['psi'], 30)\n\
             plt.colorbar(label='psi')\nplt.xlabel('x')\nplt.ylabel('z')\n"
        }
        Mode::Energy => {
            "d = np.genfromtxt('profile.csv', delimiter=',', names=True)\n\
             plt.plot(d['x'], d['u'])\nplt.xlabel('x')\nplt.ylabel('u')\n"
        }
        Mode::Minimize => {
            "d = np.genfromtxt('deflection.csv', delimiter=',', names=True)\n\
             plt.plot(d['x'], d['u'])\nplt.xlabel('x')\nplt.ylabel('u_rho')\n"
        }
        Mode::Branch => {
            "d = np.genfromtxt('branch.csv', delimiter=',', names=True)\n\
             plt.plot(d['lambda'], d['sup_norm'], 'o-')\n\
             plt.xlabel('lambda')\nplt.ylabel('sup |U_lambda|')\n"
        }
        Mode::Bifurcation => {
            "d = np.genfromtxt('bifurcation.csv', delimiter=',', names=True)\n\
             plt.plot(d['lambda_rho'], d['E_e'], 'o-')\n\
             plt.xlabel('lambda_rho')\nplt.ylabel('E_e')\n"
        }
        Mode::Verify => {
            "import json\nr = json.load(open('verify.json'))\n\
             for c in r['checks']:\n    print(('PASS' if c['pass'] else 'FAIL'), c['name'], c['value'], c['bound'])\n"
        }
    };
    format!(
        "# Plot the outputs of a `{mode}` run. Run from the output directory.\n\
         import numpy as np\nimport matplotlib.pyplot as plt\n\n{body}\
         plt.savefig('{mode}.png', dpi=150)\n"
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_uses_seventeen_digits() {
        let t = csv_table(&["a", "b"], [vec![1.0 / 3.0, -2.0]]);
        assert_eq!(t, "a,b\n3.3333333333333331e-1,-2.0000000000000000e0\n");
        let back: f64 = t
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .next()
            .unwrap()
            .parse()
            .unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        write_atomic(dir.path(), "x.csv", "a\n").unwrap();
        let names: Vec<_> = fs::read_dir(dir.path())
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        assert_eq!(names, vec![std::ffi::OsString::from("x.csv")]);
    }
}
