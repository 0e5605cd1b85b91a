//! Versioned JSON scenario configuration.

use std::path::Path;

use adiabat_core::linalg::{c, hermiticity_defect, ComplexMatrix};
use adiabat_core::{CouplingRoute, DrivenTwoLevel, GridSpec, HamiltonianPath, Scenario, SpinHalf, SystemKind, Thresholds};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;
pub const MIN_GRID_POINTS: usize = 256;

/// A complex number as `[re, im]`.
pub type Entry = [f64; 2];
pub type MatrixRows = Vec<Vec<Entry>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum ModelConfig {
    /// Rotating-field spin-½ on `s ∈ [0, 2π]`; `τ = 2π/ω`.
    SpinHalf {
        theta: f64,
        #[serde(default = "one")]
        omega0: f64,
    },
    DrivenTwoLevel {
        #[serde(default = "one")]
        omega0: f64,
        amplitude: f64,
        drive_frequency: f64,
    },
    /// Hermitian samples placed uniformly on `span`, joined linearly.
    CustomMatrixPath { span: [f64; 2], matrices: Vec<MatrixRows> },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SystemConfig {
    #[default]
    A,
    B,
    C,
    /// `sign · U_x† H U_x` with `U_x = exp(−i·rate·(s − s₀)·G)`.
    X { generator: MatrixRows, sign: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Propagate the system as well; needed for the intertwining defect.
    pub propagator: bool,
    pub coupling_route: CouplingRoute,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            propagator: true,
            coupling_route: CouplingRoute::HellmannFeynman,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Write `series_*.csv` files.
    pub series: bool,
    /// Keep every n-th grid point in the series files.
    pub stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { series: true, stride: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    pub model: ModelConfig,
    #[serde(default)]
    pub system: SystemConfig,
    pub taus: Vec<f64>,
    #[serde(default = "auto")]
    pub grid: GridSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn auto() -> GridSpec {
    GridSpec::Auto
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

fn to_matrix(rows: &MatrixRows, what: &str) -> Result<ComplexMatrix, ConfigError> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(bad(format!("{what}: expected a non-empty square matrix")));
    }
    if rows.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(bad(format!("{what}: entries must be finite")));
    }
    let m = ComplexMatrix::from_fn(n, n, |i, j| c(rows[i][j][0], rows[i][j][1]));
    if hermiticity_defect(&m) > 1e-10 * m.norm().max(1.0) {
        return Err(bad(format!("{what}: matrix is not Hermitian")));
    }
    Ok(m)
}

impl ScenarioConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        match &self.model {
            ModelConfig::SpinHalf { theta, omega0 } => {
                if !(0.0..=std::f64::consts::PI).contains(theta) {
                    return Err(bad(format!("theta must lie in [0, pi], got {theta}")));
                }
                if !(*omega0 > 0.0) || !omega0.is_finite() {
                    return Err(bad(format!("omega0 must be positive, got {omega0}")));
                }
            }
            ModelConfig::DrivenTwoLevel {
                omega0,
                amplitude,
                drive_frequency,
            } => {
                if !(*omega0 > 0.0) || !omega0.is_finite() {
                    return Err(bad(format!("omega0 must be positive, got {omega0}")));
                }
                if !amplitude.is_finite() || !drive_frequency.is_finite() {
                    return Err(bad("amplitude and drive_frequency must be finite"));
                }
            }
            ModelConfig::CustomMatrixPath { span, matrices } => {
                if !(span[1] > span[0]) || !span.iter().all(|v| v.is_finite()) {
                    return Err(bad(format!("span must be increasing, got {span:?}")));
                }
                if matrices.len() < 2 {
                    return Err(bad("custom_matrix_path needs at least 2 matrices"));
                }
                let dim = matrices[0].len();
                for (k, m) in matrices.iter().enumerate() {
                    let m = to_matrix(m, &format!("matrices[{k}]"))?;
                    if m.nrows() != dim {
                        return Err(bad(format!("matrices[{k}] has dimension {} instead of {dim}", m.nrows())));
                    }
                }
            }
        }
        if let SystemConfig::X { generator, sign } = &self.system {
            let g = to_matrix(generator, "system.x.generator")?;
            if g.nrows() != self.dim() {
                return Err(bad("system.x.generator does not match the model dimension"));
            }
            if *sign != 1.0 && *sign != -1.0 {
                return Err(bad(format!("system.x.sign must be 1 or -1, got {sign}")));
            }
        }
        if self.taus.is_empty() {
            return Err(bad("taus must not be empty"));
        }
        if let Some(t) = self.taus.iter().find(|t| !(**t > 0.0) || !t.is_finite()) {
            return Err(bad(format!("every tau must be positive and finite, got {t}")));
        }
        if let GridSpec::Points(n) = self.grid {
            if n < MIN_GRID_POINTS {
                return Err(bad(format!("grid needs at least {MIN_GRID_POINTS} points, got {n}")));
            }
        }
        if self.output.stride == 0 {
            return Err(bad("output.stride must be at least 1"));
        }
        let t = &self.thresholds;
        if [t.eps_q, t.eps_r, t.slope_tolerance, t.averaged_slope].iter().any(|v| !v.is_finite()) {
            return Err(bad("thresholds must be finite"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match &self.model {
            ModelConfig::CustomMatrixPath { matrices, .. } => matrices[0].len(),
            _ => 2,
        }
    }

    /// Grid actually used: custom paths are sampled on their own points
    /// unless a fixed grid is given.
    pub fn grid_spec(&self) -> GridSpec {
        match (&self.model, self.grid) {
            (ModelConfig::CustomMatrixPath { matrices, .. }, GridSpec::Auto) => GridSpec::Points(matrices.len()),
            (_, g) => g,
        }
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let kind = match &self.system {
            SystemConfig::A => SystemKind::Base,
            SystemConfig::B => SystemKind::Dual,
            SystemConfig::C => SystemKind::NegatedDual,
            SystemConfig::X { generator, sign } => SystemKind::Transformed {
                generator: to_matrix(generator, "system.x.generator")?,
                sign: *sign,
            },
        };
        let mut sc = match &self.model {
            ModelConfig::SpinHalf { theta, omega0 } => Scenario::spin_half(SpinHalf::new(*theta, *omega0), kind),
            ModelConfig::DrivenTwoLevel {
                omega0,
                amplitude,
                drive_frequency,
            } => Scenario::new(DrivenTwoLevel::new(*omega0, *amplitude, *drive_frequency).hamiltonian(), kind),
            ModelConfig::CustomMatrixPath { span, matrices } => {
                let samples = matrices
                    .iter()
                    .enumerate()
                    .map(|(k, m)| to_matrix(m, &format!("matrices[{k}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                let h = HamiltonianPath::piecewise_linear((span[0], span[1]), samples).map_err(|e| bad(e.to_string()))?;
                Scenario::new(h, kind)
            }
        };
        sc.route = self.diagnostics.coupling_route;
        Ok(sc)
    }

    pub fn system_tag(&self) -> &'static str {
        match self.system {
            SystemConfig::A => "a",
            SystemConfig::B => "b",
            SystemConfig::C => "c",
            SystemConfig::X { .. } => "x",
        }
    }
}
