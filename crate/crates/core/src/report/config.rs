//! Suite configuration: `key = value` lines under `[section]` headers,
//! `#` comments.
//!
//! ```text
//! [suite]
//! order = 128          # Gauss–Hermite order per axis
//! resolution = 4096    # transport grid points
//! window = -8, 8       # optional; default is centered on each density
//! jobs = 1
//! seed = 7
//! mc_samples = 0       # > 0 adds a Monte Carlo check of each deficit
//! dump_maps = false
//!
//! [params]
//! epsilon = 0.5
//! M = 2
//! r = 2                # optional; enables the L^r estimate
//! lr_bound = 4         # optional Hessian-moment bound, defaults to M
//!
//! [sinkhorn]
//! reg = 0.05
//! schedule = 1, 0.5, 0.25, 0.1
//! max_iterations = 5000
//! tol = 1e-6
//! grid = 64
//! half_width = 6
//!
//! [corpus]
//! density = family=quadratic a=0.5 dim=1
//! ```

use std::path::Path;

use serde::Serialize;

use super::spec::DensitySpec;
use crate::density::FamilyParams;
use crate::error::{Error, Result};
use crate::quadrature::{DEFICIT_ORDER, MAX_ORDER};
use crate::stability::{SINKHORN_GRID, SINKHORN_HALF_WIDTH};
use crate::transport::DEFAULT_RESOLUTION;
use crate::wasserstein::SinkhornConfig;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinkhornSettings {
    pub config: SinkhornConfig,
    pub grid: usize,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteConfig {
    #[serde(skip)]
    pub corpus: Vec<DensitySpec>,
    pub epsilon: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub r: Option<f64>,
    pub lr_bound: Option<f64>,
    pub order: usize,
    pub window: Option<(f64, f64)>,
    pub resolution: usize,
    /// Thread count; results do not depend on it, so it stays out of the report.
    #[serde(skip)]
    pub jobs: usize,
    pub seed: u64,
    pub mc_samples: usize,
    pub dump_maps: bool,
    pub sinkhorn: SinkhornSettings,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            corpus: Vec::new(),
            epsilon: 0.5,
            m: 2.0,
            r: None,
            lr_bound: None,
            order: DEFICIT_ORDER,
            window: None,
            resolution: DEFAULT_RESOLUTION,
            jobs: 1,
            seed: 0,
            mc_samples: 0,
            dump_maps: false,
            sinkhorn: SinkhornSettings {
                config: SinkhornConfig::default(),
                grid: SINKHORN_GRID,
                half_width: SINKHORN_HALF_WIDTH,
            },
        }
    }
}

impl SuiteConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SuiteConfig::default();
        let mut section = String::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let trimmed = content.trim();
            if trimmed.is_empty() {
                continue;
            }
            let indent = content.len() - content.trim_start().len();
            let err = |column: usize, message: String| Error::Parse { line, column, message };
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| err(indent + 1, "unterminated section header".into()))?
                    .trim();
                if !["suite", "params", "sinkhorn", "corpus"].contains(&name) {
                    return Err(err(indent + 2, format!("unknown section `{name}`")));
                }
                section = name.to_string();
                continue;
            }
            let eq = content
                .find('=')
                .ok_or_else(|| err(indent + 1, format!("expected key = value, got `{trimmed}`")))?;
            let key = content[..eq].trim();
            let value_raw = &content[eq + 1..];
            let value_col = eq + 2 + (value_raw.len() - value_raw.trim_start().len());
            let value = value_raw.trim();
            if value.is_empty() {
                return Err(err(value_col, format!("missing value for `{key}`")));
            }
            let num = || -> Result<f64> {
                value
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| err(value_col, format!("`{key}` expects a number, got `{value}`")))
            };
            let count = || -> Result<usize> {
                value.parse::<usize>().map_err(|_| {
                    err(
                        value_col,
                        format!("`{key}` expects a non-negative integer, got `{value}`"),
                    )
                })
            };
            let nums = || -> Result<Vec<f64>> {
                value
                    .split(',')
                    .map(|p| {
                        p.trim()
                            .parse::<f64>()
                            .ok()
                            .filter(|v| v.is_finite())
                            .ok_or_else(|| err(value_col, format!("`{key}` expects numbers, got `{value}`")))
                    })
                    .collect()
            };
            match (section.as_str(), key) {
                ("", _) => return Err(err(indent + 1, format!("`{key}` appears before any section"))),
                ("suite", "order") => cfg.order = count()?,
                ("suite", "resolution") => cfg.resolution = count()?,
                ("suite", "window") => match nums()?.as_slice() {
                    [lo, hi] if lo < hi => cfg.window = Some((*lo, *hi)),
                    _ => return Err(err(value_col, "window expects `lo, hi` with lo < hi".into())),
                },
                ("suite", "jobs") => cfg.jobs = count()?,
                ("suite", "seed") => {
                    cfg.seed = value
                        .parse()
                        .map_err(|_| err(value_col, format!("seed expects an integer, got `{value}`")))?
                }
                ("suite", "mc_samples") => cfg.mc_samples = count()?,
                ("suite", "dump_maps") => {
                    cfg.dump_maps = match value {
                        "true" => true,
                        "false" => false,
                        _ => {
                            return Err(err(
                                value_col,
                                format!("dump_maps expects true or false, got `{value}`"),
                            ))
                        }
                    }
                }
                ("params", "epsilon") => cfg.epsilon = num()?,
                ("params", "M") => cfg.m = num()?,
                ("params", "r") => cfg.r = Some(num()?),
                ("params", "lr_bound") => cfg.lr_bound = Some(num()?),
                ("sinkhorn", "reg") => cfg.sinkhorn.config.reg_epsilon = num()?,
                ("sinkhorn", "schedule") => cfg.sinkhorn.config.anneal_schedule = nums()?,
                ("sinkhorn", "max_iterations") => cfg.sinkhorn.config.max_iterations = count()?,
                ("sinkhorn", "tol") => cfg.sinkhorn.config.convergence_tol = num()?,
                ("sinkhorn", "grid") => cfg.sinkhorn.grid = count()?,
                ("sinkhorn", "half_width") => cfg.sinkhorn.half_width = num()?,
                ("corpus", "density") => {
                    let offset = content.len() - value_raw.len() + (value_raw.len() - value_raw.trim_start().len());
                    let spec = DensitySpec::parse_at(value, line, offset)?;
                    spec.build()?;
                    cfg.corpus.push(spec);
                }
                (s, k) => return Err(err(indent + 1, format!("unknown key `{k}` in [{s}]"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.corpus.is_empty() {
            return Err(Error::InvalidArgument("empty corpus".into()));
        }
        if self.order == 0 || self.order > MAX_ORDER {
            return Err(Error::InvalidArgument(format!("order must be in 1..={MAX_ORDER}")));
        }
        if self.jobs == 0 {
            return Err(Error::InvalidArgument("jobs must be at least 1".into()));
        }
        self.base_params()?;
        for spec in &self.corpus {
            self.params_for(spec)?;
        }
        self.sinkhorn.config.validate()
    }

    /// Suite-wide `F(ε, M)` parameters.
    pub fn base_params(&self) -> Result<FamilyParams> {
        match self.r {
            Some(r) => FamilyParams::with_r(self.epsilon, self.m, r),
            None => FamilyParams::new(self.epsilon, self.m),
        }
    }

    /// Parameters for one density, with its overrides applied.
    pub fn params_for(&self, spec: &DensitySpec) -> Result<FamilyParams> {
        let epsilon = spec.epsilon.unwrap_or(self.epsilon);
        let m = spec.m.unwrap_or(self.m);
        match spec.r.or(self.r) {
            Some(r) => FamilyParams::with_r(epsilon, m, r),
            None => FamilyParams::new(epsilon, m),
        }
    }
}
