//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Grid1D, Grid2D, ModelParams};

pub const KEYS: &[&str] = &[
    "beta",
    "tau",
    "a",
    "epsilon",
    "n",
    "nx",
    "neta",
    "mode",
    "rho",
    "rho_list",
    "lambda_max",
    "steps",
    "kkt_tol",
    "out_dir",
    "seed",
    "profile",
    "amplitude",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    SolvePotential,
    Energy,
    Minimize,
    Branch,
    Bifurcation,
    Verify,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "solve-potential" => Mode::SolvePotential,
            "energy" => Mode::Energy,
            "minimize" => Mode::Minimize,
            "branch" => Mode::Branch,
            "bifurcation" => Mode::Bifurcation,
            "verify" => Mode::Verify,
            other => {
                return Err(Error::config(
                    "mode",
                    format!(
                        "unknown mode `{other}` (expected solve-potential, energy, minimize, \
                         branch, bifurcation or verify)"
                    ),
                ))
            }
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::SolvePotential => "solve-potential",
            Mode::Energy => "energy",
            Mode::Minimize => "minimize",
            Mode::Branch => "branch",
            Mode::Bifurcation => "bifurcation",
            Mode::Verify => "verify",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: ModelParams,
    pub n: usize,
    pub nx: usize,
    pub neta: usize,
    pub mode: Mode,
    pub rho: f64,
    pub rho_list: Vec<f64>,
    pub lambda_max: f64,
    pub steps: usize,
    pub kkt_tol: f64,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub profile: String,
    pub amplitude: f64,
}

/// Parse `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::config(
                format!("line {}", lineno + 1),
                format!("expected key=value, got `{line}`"),
            ));
        };
        let key = k.trim().to_string();
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::config(key, "unknown key"));
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn get<T: FromStr>(pairs: &BTreeMap<String, String>, key: &str, default: T) -> Result<T>
where
    T::Err: fmt::Display,
{
    match pairs.get(key) {
        None => Ok(default),
        Some(v) => v
            .parse()
            .map_err(|e: T::Err| Error::config(key, format!("cannot parse `{v}`: {e}"))),
    }
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be positive, got {v}")))
    }
}

fn odd_at_least_five(key: &str, v: usize) -> Result<usize> {
    if v >= 5 && v % 2 == 1 {
        Ok(v)
    } else {
        Err(Error::config(
            key,
            format!("must be odd and at least 5, got {v}"),
        ))
    }
}

impl RunConfig {
    /// Build from a file's pairs overridden by command-line pairs.
    pub fn resolve(
        file: &BTreeMap<String, String>,
        overrides: &BTreeMap<String, String>,
    ) -> Result<Self> {
        let mut pairs = file.clone();
        for (k, v) in overrides {
            if !KEYS.contains(&k.as_str()) {
                return Err(Error::config(k.clone(), "unknown key"));
            }
            pairs.insert(k.clone(), v.clone());
        }
        Self::from_pairs(&pairs)
    }

    pub fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mode: Mode = pairs
            .get("mode")
            .ok_or_else(|| Error::config("mode", "missing"))?
            .parse()?;
        let beta = positive("beta", get(pairs, "beta", 1.0)?)?;
        let tau: f64 = get(pairs, "tau", 0.0)?;
        let a: f64 = get(pairs, "a", 0.0)?;
        let epsilon = positive("epsilon", get(pairs, "epsilon", 0.5)?)?;
        for (k, v) in [("tau", tau), ("a", a)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(k, format!("must be non-negative, got {v}")));
            }
        }
        let params = ModelParams::new(beta, tau, a, epsilon)
            .map_err(|e| Error::config("params", e.to_string()))?;
        let n = odd_at_least_five("n", get(pairs, "n", 129)?)?;
        let nx = odd_at_least_five("nx", get(pairs, "nx", n)?)?;
        if nx != n {
            return Err(Error::config(
                "nx",
                format!("the rectangle shares the plate nodes, so nx must equal n = {n}"),
            ));
        }
        let neta = odd_at_least_five(
            "neta",
            get(pairs, "neta", Grid2D::for_line(Grid1D::new(n)?).neta())?,
        )?;
        let rho: f64 = get(pairs, "rho", 3.0)?;
        if !(rho.is_finite() && rho > 2.0) {
            return Err(Error::config("rho", format!("must exceed 2, got {rho}")));
        }
        let rho_list = match pairs.get("rho_list") {
            None => vec![3.0, 5.0, 10.0, 20.0],
            Some(v) => v
                .split(',')
                .map(|s| {
                    let r: f64 = s.trim().parse().map_err(|e| {
                        Error::config("rho_list", format!("cannot parse `{}`: {e}", s.trim()))
                    })?;
                    if r.is_finite() && r > 2.0 {
                        Ok(r)
                    } else {
                        Err(Error::config(
                            "rho_list",
                            format!("entries must exceed 2, got {r}"),
                        ))
                    }
                })
                .collect::<Result<Vec<f64>>>()?,
        };
        if rho_list.is_empty() {
            return Err(Error::config("rho_list", "empty"));
        }
        let lambda_max = positive("lambda_max", get(pairs, "lambda_max", 0.2)?)?;
        let steps: usize = get(pairs, "steps", 10)?;
        if steps < 2 {
            return Err(Error::config(
                "steps",
                format!("need at least 2, got {steps}"),
            ));
        }
        let kkt_tol = positive("kkt_tol", get(pairs, "kkt_tol", 1e-5)?)?;
        let out_dir = PathBuf::from(get(pairs, "out_dir", "out".to_string())?);
        let seed: u64 = get(pairs, "seed", 0)?;
        let profile: String = get(pairs, "profile", "quartic".to_string())?;
        let amplitude: f64 = get(pairs, "amplitude", 0.5)?;
        if !amplitude.is_finite() || amplitude < 0.0 {
            return Err(Error::config(
                "amplitude",
                format!("must be non-negative, got {amplitude}"),
            ));
        }
        Ok(RunConfig {
            params,
            n,
            nx,
            neta,
            mode,
            rho,
            rho_list,
            lambda_max,
            steps,
            kkt_tol,
            out_dir,
            seed,
            profile,
            amplitude,
        })
    }

    pub fn line(&self) -> Grid1D {
        Grid1D::new(self.n).expect("validated")
    }

    pub fn grid(&self) -> Grid2D {
        Grid2D::with_sizes(self.nx, self.neta).expect("validated")
    }

    /// Canonical `key=value` text, one key per line in `KEYS` order; the
    /// manifest hash is taken over this.
    pub fn canonical(&self) -> String {
        let rl: Vec<String> = self.rho_list.iter().map(|r| format!("{r:?}")).collect();
        let p = &self.params;
        let values = [
            format!("{:?}", p.beta),
            format!("{:?}", p.tau),
            format!("{:?}", p.a),
            format!("{:?}", p.epsilon),
            self.n.to_string(),
            self.nx.to_string(),
            self.neta.to_string(),
            self.mode.to_string(),
            format!("{:?}", self.rho),
            rl.join(","),
            format!("{:?}", self.lambda_max),
            self.steps.to_string(),
            format!("{:?}", self.kkt_tol),
            self.out_dir.display().to_string(),
            self.seed.to_string(),
            self.profile.clone(),
            format!("{:?}", self.amplitude),
        ];
        KEYS.iter()
            .zip(values)
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(text: &str) -> BTreeMap<String, String> {
        parse_pairs(text).unwrap()
    }

    #[test]
    fn defaults_and_comments() {
        let c = RunConfig::from_pairs(&pairs("mode = verify # all checks\n\n")).unwrap();
        assert_eq!(c.mode, Mode::Verify);
        assert_eq!((c.n, c.nx, c.neta), (129, 129, 65));
        assert_eq!(c.rho_list, vec![3.0, 5.0, 10.0, 20.0]);
    }

    #[test]
    fn overrides_win() {
        let file = pairs("mode=minimize\nrho=5\nbeta=2");
        let mut cli = BTreeMap::new();
        cli.insert("rho".to_string(), "10".to_string());
        let c = RunConfig::resolve(&file, &cli).unwrap();
        assert_eq!(c.rho, 10.0);
        assert_eq!(c.params.beta, 2.0);
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            ("mode=minimize\nrho=2", "rho"),
            ("mode=fly", "mode"),
            ("rho=3", "mode"),
            ("mode=verify\nn=64", "n"),
            ("mode=verify\nnx=65", "nx"),
            ("mode=verify\nrho_list=3,x", "rho_list"),
            ("mode=verify\nkkt_tol=0", "kkt_tol"),
            ("mode=verify\nsteps=1", "steps"),
        ];
        for (text, key) in cases {
            match RunConfig::from_pairs(&pairs(text)) {
                Err(Error::Config { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(
            parse_pairs("colour=red"),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            parse_pairs("mode verify"),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn canonical_text_round_trips() {
        let c =
            RunConfig::from_pairs(&pairs("mode=branch\nlambda_max=0.3\nrho_list=3,4.5")).unwrap();
        let again = RunConfig::from_pairs(&pairs(&c.canonical())).unwrap();
        assert_eq!(c, again);
    }
}
