use std::path::{Path, PathBuf};

use kfbd::estimation::{AuditConfig, LocationModel};
use kfbd::findim::suite::SuiteConfig;
use kfbd::{Kernel, KernelFamily, RadialGenerator, RadialProfile};
use serde::Deserialize;

use crate::args::Global;
use crate::error::CliError;
use crate::output::Format;

pub const DEFAULT_SEED: u64 = 42;

/// Experiment settings read from `--config`. Command-line flags take
/// precedence; relative paths are resolved against the config file's
/// directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: Option<KernelFamily<f64>>,
    pub generator: Option<RadialProfile<f64>>,
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    /// Trial count for `verify` (identities for `findim`, pairs for `sandwich`).
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub model: Option<LocationModel>,
    pub suite: Option<SuiteConfig>,
    pub audit: Option<AuditConfig>,
}

impl ExperimentConfig {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let cfg_err = |message: String| CliError::Config {
            path: path.display().to_string(),
            message,
        };
        let text = std::fs::read_to_string(path).map_err(|e| cfg_err(e.to_string()))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate().map_err(|e| cfg_err(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in cfg.inputs.iter_mut().chain(cfg.out.as_mut()) {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Checks every parameter before any computation starts.
    pub fn validate(&self) -> kfbd::Result<()> {
        if let Some(k) = self.kernel {
            Kernel::new(k)?;
        }
        if let Some(g) = self.generator {
            RadialGenerator::new(g)?;
        }
        if let Some(m) = &self.model {
            m.validate()?;
        }
        if let Some(a) = &self.audit {
            Kernel::new(a.kernel)?;
            RadialGenerator::new(a.generator)?;
            a.model.validate()?;
            a.contamination.validate()?;
            a.dependence.validate()?;
        }
        Ok(())
    }
}

/// Settings shared by every command after merging flags and config.
#[derive(Debug, Clone)]
pub struct Context {
    pub seed: u64,
    /// `None` means the command's default format.
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub seed_from_flag: bool,
    pub config: ExperimentConfig,
}

impl Context {
    pub fn new(global: &Global) -> Result<Self, CliError> {
        let config = match &global.config {
            Some(p) => ExperimentConfig::read(p)?,
            None => ExperimentConfig::default(),
        };
        let format = if global.json {
            Some(Format::Json)
        } else if global.csv {
            Some(Format::Csv)
        } else {
            config.format
        };
        Ok(Self {
            seed: global.seed.or(config.seed).unwrap_or(DEFAULT_SEED),
            format,
            out: global.out.clone().or_else(|| config.out.clone()),
            seed_from_flag: global.seed.is_some(),
            config,
        })
    }

    pub fn kernel(&self, flag: Option<KernelFamily<f64>>) -> Result<Kernel, CliError> {
        let family = flag
            .or(self.config.kernel)
            .unwrap_or(KernelFamily::Gaussian { bandwidth: 1.0 });
        Ok(Kernel::new(family)?)
    }

    pub fn model(&self, flag: Option<LocationModel>) -> Result<LocationModel, CliError> {
        Ok(match flag.or(self.config.model) {
            Some(m) => m,
            None => LocationModel::gaussian(1.0, 1)?,
        })
    }

    /// Input path `i`: the positional argument if given, else `inputs[i]`
    /// from the config.
    pub fn input(&self, flag: &Option<PathBuf>, i: usize, what: &str) -> Result<PathBuf, CliError> {
        flag.clone()
            .or_else(|| self.config.inputs.get(i).cloned())
            .ok_or_else(|| CliError::Input(format!("missing {what} (give a path or set `inputs` in the config)")))
    }
}
