//! Flat key-value run configuration with precedence
//! command line > config file > defaults, and an exact echo of every
//! resolved value for reproducibility.

use super::io::ColumnRoles;
use super::CliError;
use crate::sim::{DgpFamily, ErrorKind};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// Key-value store; later inserts win.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    map: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parse `key = value` lines; '#' starts a comment.
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        let mut map = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(CliError::Config(format!(
                    "{}:{}: expected 'key = value'",
                    path.display(),
                    lineno + 1
                )));
            };
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self { map })
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.map.insert(key.to_string(), value.to_string());
    }

    pub fn set_if_absent(&mut self, key: &str, value: impl ToString) {
        self.map.entry(key.to_string()).or_insert_with(|| value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(|s| s.as_str())
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| CliError::Config(format!("bad value for '{key}': '{v}'"))),
        }
    }

    pub fn require(&self, key: &str) -> Result<&str, CliError> {
        self.get(key).ok_or_else(|| CliError::Config(format!("missing required key '{key}'")))
    }

    /// Exact echo of every resolved entry, sufficient to re-run
    /// bit-identically.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.map {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelChoice {
    Linear,
    Bart,
    BartMarginalized,
    BartNp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorChoice {
    Vh,
    Omori,
    Ding,
}

#[derive(Debug, Clone)]
pub struct McmcKeys {
    pub iters: usize,
    pub burnin: usize,
    pub thin: usize,
    pub chains: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub data: PathBuf,
    pub test_data: Option<PathBuf>,
    pub roles: ColumnRoles,
    pub model: ModelChoice,
    pub prior: PriorChoice,
    pub mcmc: McmcKeys,
    pub out: PathBuf,
    pub binary_outcome: bool,
    /// tree counts (selection / outcome forests)
    pub m_selection: usize,
    pub m_outcome: usize,
    /// prior hyperparameter overrides (original outcome scale)
    pub tau: f64,
    pub n0: f64,
    pub g0: f64,
    pub big_g0: f64,
    pub nu0: f64,
    pub q: f64,
    /// explicit scale overrides; calibrated from the data when absent
    pub s0: Option<f64>,
    pub ding_c: Option<f64>,
    pub raw: RawConfig,
}

#[derive(Debug, Clone)]
pub struct SimulateConfig {
    pub family: DgpFamily,
    pub rho: f64,
    pub error_kind: ErrorKind,
    pub n_train: usize,
    pub n_test: usize,
    pub reps: usize,
    pub models: Vec<String>,
    pub mcmc: McmcKeys,
    pub m_selection: usize,
    pub m_outcome: usize,
    pub out: PathBuf,
    pub raw: RawConfig,
}

#[derive(Debug, Clone)]
pub struct CalibrateConfig {
    pub sigma_hat_y2: f64,
    pub tau: f64,
    pub n0: f64,
    pub g0: f64,
    pub big_g0: f64,
    pub nu0: f64,
    pub q: f64,
    pub out: Option<PathBuf>,
    pub raw: RawConfig,
}

#[derive(Debug)]
pub enum Command {
    Fit(FitConfig),
    Simulate(SimulateConfig),
    Calibrate(CalibrateConfig),
}

fn split_cols(v: &str) -> Vec<String> {
    v.split(',').map(|c| c.trim().to_string()).filter(|c| !c.is_empty()).collect()
}

fn mcmc_defaults(raw: &mut RawConfig) {
    raw.set_if_absent("iters", 1500);
    raw.set_if_absent("burnin", 500);
    raw.set_if_absent("thin", 1);
    raw.set_if_absent("chains", 1);
    raw.set_if_absent("seed", 20240901u64);
}

fn mcmc_of(raw: &RawConfig) -> Result<McmcKeys, CliError> {
    let m = McmcKeys {
        iters: raw.parsed("iters")?.unwrap(),
        burnin: raw.parsed("burnin")?.unwrap(),
        thin: raw.parsed("thin")?.unwrap(),
        chains: raw.parsed("chains")?.unwrap(),
        seed: raw.parsed("seed")?.unwrap(),
    };
    if m.iters <= m.burnin {
        return Err(CliError::Config("iters must exceed burnin".into()));
    }
    if m.thin == 0 || m.chains == 0 {
        return Err(CliError::Config("thin and chains must be positive".into()));
    }
    Ok(m)
}

/// Resolve the raw key-value map into a typed command configuration,
/// materializing every default into the map so the echo is complete.
pub fn resolve(command: &str, mut raw: RawConfig) -> Result<Command, CliError> {
    match command {
        "fit" => {
            mcmc_defaults(&mut raw);
            raw.set_if_absent("model", "bart");
            raw.set_if_absent("prior", "vh");
            raw.set_if_absent("out", "tobit-bart-out");
            raw.set_if_absent("binary_outcome", "false");
            raw.set_if_absent("m_selection", 50);
            raw.set_if_absent("m_outcome", 200);
            raw.set_if_absent("tau", 0.5);
            raw.set_if_absent("n0", 6.0);
            raw.set_if_absent("g0", 0.0);
            raw.set_if_absent("G0", 0.1);
            raw.set_if_absent("nu0", 3.0);
            raw.set_if_absent("q", 0.95);
            let model = match raw.require("model")? {
                "linear" => ModelChoice::Linear,
                "bart" => ModelChoice::Bart,
                "bart-marginalized" => ModelChoice::BartMarginalized,
                "bart-np" => ModelChoice::BartNp,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown model '{other}' (linear | bart | bart-marginalized | bart-np)"
                    )))
                }
            };
            let prior = match raw.require("prior")? {
                "vh" => PriorChoice::Vh,
                "omori" => PriorChoice::Omori,
                "ding" => PriorChoice::Ding,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown prior '{other}' (vh | omori | ding)"
                    )))
                }
            };
            let roles = ColumnRoles {
                outcome: raw.require("outcome")?.to_string(),
                select: raw.require("select")?.to_string(),
                x_cols: split_cols(raw.require("x_cols")?),
                w_cols: split_cols(raw.require("w_cols")?),
                treat: raw.get("treat").map(|s| s.to_string()),
            };
            let cfg = FitConfig {
                data: PathBuf::from(raw.require("data")?),
                test_data: raw.get("test_data").map(PathBuf::from),
                roles,
                model,
                prior,
                mcmc: mcmc_of(&raw)?,
                out: PathBuf::from(raw.require("out")?),
                binary_outcome: raw.parsed::<bool>("binary_outcome")?.unwrap(),
                m_selection: raw.parsed("m_selection")?.unwrap(),
                m_outcome: raw.parsed("m_outcome")?.unwrap(),
                tau: raw.parsed("tau")?.unwrap(),
                n0: raw.parsed("n0")?.unwrap(),
                g0: raw.parsed("g0")?.unwrap(),
                big_g0: raw.parsed("G0")?.unwrap(),
                nu0: raw.parsed("nu0")?.unwrap(),
                q: raw.parsed("q")?.unwrap(),
                s0: raw.parsed("S0")?,
                ding_c: raw.parsed("ding_c")?,
                raw,
            };
            Ok(Command::Fit(cfg))
        }
        "simulate" => {
            mcmc_defaults(&mut raw);
            raw.set_if_absent("dgp", "brewer1");
            raw.set_if_absent("rho", 0.9);
            raw.set_if_absent("error_kind", "normal");
            raw.set_if_absent("n_train", 2500);
            raw.set_if_absent("n_test", 500);
            raw.set_if_absent("reps", 3);
            raw.set_if_absent("models", "bart,tobart-vh");
            raw.set_if_absent("m_selection", 50);
            raw.set_if_absent("m_outcome", 200);
            raw.set_if_absent("out", "tobit-bart-sim");
            let family = match raw.require("dgp")? {
                "brewer1" => DgpFamily::Brewer { id: 1 },
                "brewer2" => DgpFamily::Brewer { id: 2 },
                "brewer3" => DgpFamily::Brewer { id: 3 },
                "brewer5" => DgpFamily::Brewer { id: 5 },
                "iqbal" => DgpFamily::Iqbal {
                    p: raw.parsed("p")?.unwrap_or(10),
                },
                "cate" => DgpFamily::Cate {
                    p: raw.parsed("p")?.unwrap_or(50),
                },
                other => return Err(CliError::Config(format!("unknown dgp '{other}'"))),
            };
            let error_kind = match raw.require("error_kind")? {
                "normal" => ErrorKind::Normal,
                "t5" => ErrorKind::T5,
                "mixture" => ErrorKind::NormalMixture,
                other => return Err(CliError::Config(format!("unknown error_kind '{other}'"))),
            };
            let cfg = SimulateConfig {
                family,
                rho: raw.parsed("rho")?.unwrap(),
                error_kind,
                n_train: raw.parsed("n_train")?.unwrap(),
                n_test: raw.parsed("n_test")?.unwrap(),
                reps: raw.parsed("reps")?.unwrap(),
                models: split_cols(raw.require("models")?),
                mcmc: mcmc_of(&raw)?,
                m_selection: raw.parsed("m_selection")?.unwrap(),
                m_outcome: raw.parsed("m_outcome")?.unwrap(),
                out: PathBuf::from(raw.require("out")?),
                raw,
            };
            Ok(Command::Simulate(cfg))
        }
        "calibrate" => {
            raw.set_if_absent("sigma2", 1.0);
            raw.set_if_absent("tau", 0.5);
            raw.set_if_absent("n0", 6.0);
            raw.set_if_absent("g0", 0.0);
            raw.set_if_absent("G0", 0.1);
            raw.set_if_absent("nu0", 3.0);
            raw.set_if_absent("q", 0.95);
            let cfg = CalibrateConfig {
                sigma_hat_y2: raw.parsed("sigma2")?.unwrap(),
                tau: raw.parsed("tau")?.unwrap(),
                n0: raw.parsed("n0")?.unwrap(),
                g0: raw.parsed("g0")?.unwrap(),
                big_g0: raw.parsed("G0")?.unwrap(),
                nu0: raw.parsed("nu0")?.unwrap(),
                q: raw.parsed("q")?.unwrap(),
                out: raw.get("out").map(PathBuf::from),
                raw,
            };
            Ok(Command::Calibrate(cfg))
        }
        other => Err(CliError::Config(format!("unknown command '{other}'"))),
    }
}
