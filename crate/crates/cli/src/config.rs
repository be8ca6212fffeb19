//! Run configuration: strict TOML parsing and validation.

use std::path::{Path, PathBuf};

use memwave::{
    EigenBasis, Edge, Endpoint, MemoryKernel, PronyTerm, SimulationForm, TimeGrid,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub basis: BasisConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    pub time: TimeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

fn default_length() -> f64 {
    std::f64::consts::PI
}

fn default_end() -> Endpoint {
    Endpoint::Left
}

fn default_edges() -> Vec<Edge> {
    vec![Edge::Bottom]
}

fn default_quad() -> usize {
    33
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum BasisConfig {
    Interval {
        modes: usize,
        #[serde(default = "default_length")]
        length: f64,
        #[serde(default = "default_end")]
        end: Endpoint,
    },
    Rectangle {
        nx: usize,
        ny: usize,
        lx: f64,
        ly: f64,
        #[serde(default = "default_edges")]
        edges: Vec<Edge>,
        #[serde(default = "default_quad")]
        n_quad: usize,
        /// Keep only the lowest `modes` eigenvalues.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modes: Option<usize>,
    },
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelConfig {
    #[default]
    Zero,
    Prony {
        /// `[weight, rate]` pairs.
        terms: Vec<(f64, f64)>,
    },
    Sampled {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "T1", default, skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    /// Number of intervals on whichever horizon a command runs on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// Sparse `[mode, value]` initial displacement coefficients.
    #[serde(default)]
    pub w0: Vec<(usize, f64)>,
    #[serde(default)]
    pub w1: Vec<(usize, f64)>,
}

fn default_reg() -> f64 {
    memwave::control::DEFAULT_TRUNCATION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlConfig {
    /// Spatial profiles on the boundary nodes; one unit profile per node when
    /// absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profiles: Option<Vec<Vec<f64>>>,
    /// Target displacement (L2 coefficients), sparse `[mode, value]`.
    #[serde(default)]
    pub xi: Vec<(usize, f64)>,
    /// Target velocity (H^-1 coefficients), sparse `[mode, value]`.
    #[serde(default)]
    pub eta: Vec<(usize, f64)>,
    #[serde(default = "default_reg")]
    pub reg: f64,
    #[serde(default)]
    pub form: SimulationForm,
}

fn default_samples() -> usize {
    64
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    #[serde(default = "default_samples")]
    pub samples: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    Horizon,
    Modes,
    KernelScale,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

impl RunConfig {
    /// Parse and validate. Relative file paths are resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.resolve_paths(base)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    fn resolve_paths(&mut self, base: &Path) -> Result<(), CliError> {
        let fix = |p: &mut PathBuf| -> Result<(), CliError> {
            if p.is_relative() {
                *p = base.join(&*p);
            }
            if !p.is_file() {
                return Err(CliError::Config(format!("file not found: {}", p.display())));
            }
            Ok(())
        };
        if let BasisConfig::File { path } = &mut self.basis {
            fix(path)?;
        }
        if let KernelConfig::Sampled { path } = &mut self.kernel {
            fix(path)?;
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), CliError> {
        let t = &self.time;
        match (t.h, t.steps) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(CliError::Config(
                    "time block needs exactly one of `h` and `steps`".into(),
                ))
            }
            _ => {}
        }
        self.grid(t.t)?;
        if let Some(t1) = t.t1 {
            self.grid(t1)?;
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(CliError::Config("sweep values must not be empty".into()));
            }
            for v in &s.values {
                match s.parameter {
                    SweepParameter::Horizon => {
                        self.grid(*v)?;
                    }
                    SweepParameter::Modes => {
                        if !(v.fract() == 0.0 && *v >= 1.0) {
                            return Err(CliError::Config(format!(
                                "mode counts must be positive integers, got {v}"
                            )));
                        }
                    }
                    SweepParameter::KernelScale => {
                        if !v.is_finite() {
                            return Err(CliError::Config(format!("kernel scale {v} is not finite")));
                        }
                    }
                }
            }
        }
        if let Some(v) = &self.verify {
            if v.samples == 0 {
                return Err(CliError::Config("verify.samples must be at least 1".into()));
            }
        }
        Ok(())
    }

    /// Uniform grid on `[0, horizon]` from the time block.
    pub fn grid(&self, horizon: f64) -> Result<TimeGrid, CliError> {
        let g = match (self.time.h, self.time.steps) {
            (Some(h), None) => TimeGrid::with_step(horizon, h),
            (None, Some(n)) => TimeGrid::from_horizon(horizon, n),
            _ => unreachable!("validated"),
        };
        g.map_err(|e| CliError::Config(format!("time block: {e}")))
    }

    /// Horizon used by the steering command.
    pub fn control_horizon(&self) -> f64 {
        self.time.t1.unwrap_or(self.time.t)
    }

    pub fn build_basis(&self) -> Result<EigenBasis, CliError> {
        let b = match &self.basis {
            BasisConfig::Interval { modes, length, end } => EigenBasis::interval(*modes, *length, *end),
            BasisConfig::Rectangle {
                nx,
                ny,
                lx,
                ly,
                edges,
                n_quad,
                modes,
            } => EigenBasis::rectangle(*nx, *ny, *lx, *ly, edges, *n_quad)
                .and_then(|b| match modes {
                    Some(n) => b.truncated(*n),
                    None => Ok(b),
                }),
            BasisConfig::File { path } => return load_basis(path),
        };
        b.map_err(CliError::from_input)
    }

    pub fn build_kernel(&self) -> Result<MemoryKernel, CliError> {
        let k = match &self.kernel {
            KernelConfig::Zero => Ok(MemoryKernel::zero()),
            KernelConfig::Prony { terms } => {
                MemoryKernel::prony(terms.iter().map(|&(c, g)| PronyTerm::new(c, g)).collect())
            }
            KernelConfig::Sampled { path } => {
                let rows = read_rows(path)?;
                let pairs = rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| match r.as_slice() {
                        [t, m] => Ok((*t, *m)),
                        _ => Err(CliError::Config(format!(
                            "{}: row {} must have 2 columns (t, M)",
                            path.display(),
                            i + 1
                        ))),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                MemoryKernel::from_rows(&pairs)
            }
        };
        k.map_err(CliError::from_input)
    }
}

/// Numeric CSV rows without a header.
fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    CliError::Config(format!("{}: line {}: `{f}` is not a number", path.display(), i + 1))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

/// First row: boundary weights. Each further row: `lambda, trace_1, ..., trace_q`.
fn load_basis(path: &Path) -> Result<EigenBasis, CliError> {
    let rows = read_rows(path)?;
    let (weights, modes) = rows
        .split_first()
        .ok_or_else(|| CliError::Config(format!("{}: empty basis file", path.display())))?;
    let modes = modes
        .iter()
        .map(|r| memwave::Mode {
            lambda: r[0],
            trace: r[1..].to_vec(),
        })
        .collect();
    EigenBasis::new(memwave::Dimension::Abstract, modes, weights.clone())
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Dense coefficient vector from sparse 1-based `[mode, value]` pairs.
pub fn dense(sparse: &[(usize, f64)], n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    let mut v = vec![0.0; n];
    for &(m, x) in sparse {
        if m == 0 || m > n {
            return Err(CliError::Config(format!(
                "{what}: mode {m} outside 1..={n}"
            )));
        }
        v[m - 1] += x;
    }
    Ok(v)
}
