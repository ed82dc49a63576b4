//! JSON run configuration. Every struct rejects unknown keys; validation
//! happens before any computation.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use ske_core::dfcheck::{Branch, InitialSystemState};
use ske_core::model::{BathMode, CouplingKind, JProfile, JSegment, ModelConfig};
use ske_core::operator::Vector;
use ske_core::tolerances::DEFAULT_MAX_DIM;
use ske_core::{Order, Tolerances};

use crate::CliError;

/// Environment variable overriding the composite-dimension cap.
pub const MAX_DIM_ENV: &str = "SUBDYN_MAX_DIM";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Subdyn,
    Gates,
    Correct,
    Fidelity,
    DfCheck,
    Triangulate,
    Liouville,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Subdyn => "subdyn",
            Command::Gates => "gates",
            Command::Correct => "correct",
            Command::Fidelity => "fidelity",
            Command::DfCheck => "df-check",
            Command::Triangulate => "triangulate",
            Command::Liouville => "liouville",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OrderSpec {
    Exact,
    Order1,
}

impl From<OrderSpec> for Order {
    fn from(o: OrderSpec) -> Self {
        match o {
            OrderSpec::Exact => Order::Exact,
            OrderSpec::Order1 => Order::Order1,
        }
    }
}

/// Sign of the square root in γ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BranchSpec {
    Plus,
    Minus,
}

impl From<BranchSpec> for Branch {
    fn from(b: BranchSpec) -> Self {
        match b {
            BranchSpec::Plus => Branch::Plus,
            BranchSpec::Minus => Branch::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexSpec {
    pub re: f64,
    pub im: f64,
}

/// A real number or `{ "re": …, "im": … }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coupling {
    Real(f64),
    Complex(ComplexSpec),
}

impl Coupling {
    pub fn value(self) -> C64 {
        match self {
            Coupling::Real(x) => C64::new(x, 0.0),
            Coupling::Complex(z) => C64::new(z.re, z.im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub omega: f64,
    pub g: Coupling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SegmentSpec {
    pub duration: f64,
    pub j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiecewiseSpec {
    pub segments: Vec<SegmentSpec>,
}

/// Constant `J` or piecewise-constant segments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum JSpec {
    Constant(f64),
    Piecewise(PiecewiseSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingSpec {
    #[default]
    Dephasing,
    CaldeiraLeggett,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub j: JSpec,
    pub lambda: f64,
    pub modes: Vec<ModeSpec>,
    pub n_max: usize,
    #[serde(default)]
    pub coupling: CouplingSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_dim: Option<usize>,
}

impl ModelSpec {
    pub fn to_config(&self) -> ModelConfig {
        let j = match &self.j {
            JSpec::Constant(j) => JProfile::Constant(*j),
            JSpec::Piecewise(p) => JProfile::Piecewise(
                p.segments
                    .iter()
                    .map(|s| JSegment {
                        duration: s.duration,
                        j: s.j,
                    })
                    .collect(),
            ),
        };
        ModelConfig {
            j,
            lambda: self.lambda,
            modes: self
                .modes
                .iter()
                .map(|m| BathMode {
                    omega: m.omega,
                    g: m.g.value(),
                })
                .collect(),
            n_max: self.n_max,
            coupling: match self.coupling {
                CouplingSpec::Dephasing => CouplingKind::Dephasing,
                CouplingSpec::CaldeiraLeggett => CouplingKind::CaldeiraLeggett,
            },
            max_dim: self.max_dim.unwrap_or(DEFAULT_MAX_DIM),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeSpec {
    /// Four amplitudes over `|00⟩, |01⟩, |10⟩, |11⟩`.
    pub amplitudes: Vec<Coupling>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialSpec {
    Named(NamedState),
    Custom(AmplitudeSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedState {
    MixedTriplet,
    Up01,
}

impl InitialSpec {
    pub fn to_state(&self) -> Result<InitialSystemState, CliError> {
        Ok(match self {
            InitialSpec::Named(NamedState::MixedTriplet) => InitialSystemState::MixedTripletExample,
            InitialSpec::Named(NamedState::Up01) => InitialSystemState::Up01,
            InitialSpec::Custom(a) => {
                if a.amplitudes.len() != 4 {
                    return Err(CliError::Schema(format!(
                        "initial_state.amplitudes needs 4 entries, got {}",
                        a.amplitudes.len()
                    )));
                }
                let v = Vector::from_iterator(4, a.amplitudes.iter().map(|z| z.value()));
                let norm = v.norm();
                if !(norm.is_finite() && norm > 0.0) {
                    return Err(CliError::Schema(
                        "initial_state.amplitudes has zero norm".into(),
                    ));
                }
                InitialSystemState::Custom(v / C64::new(norm, 0.0))
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FidelitySpec {
    pub samples: usize,
    pub seed: u64,
    pub time: f64,
}

impl Default for FidelitySpec {
    fn default() -> Self {
        Self {
            samples: 20,
            seed: 7,
            time: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DfCheckSpec {
    /// Fock configuration at which the bath constraint is reported.
    pub occupations: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub path: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub command: Command,
    /// `lambda=start:stop:count` or `n_max=start:stop:count`
    pub grid: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSpec,
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub order: Option<OrderSpec>,
    #[serde(default)]
    pub branch: Option<BranchSpec>,
    /// Which crossing of `∫J = π (mod 2π)` defines `τ_s`.
    #[serde(default)]
    pub swap_branch: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: Option<OutputSpec>,
    /// Evaluation time for `liouville`.
    #[serde(default)]
    pub time: Option<f64>,
    #[serde(default)]
    pub initial_state: Option<InitialSpec>,
    #[serde(default)]
    pub fidelity: FidelitySpec,
    #[serde(default)]
    pub df_check: DfCheckSpec,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.fidelity.samples == 0 {
            return Err(CliError::Schema("fidelity.samples must be positive".into()));
        }
        if !self.fidelity.time.is_finite() {
            return Err(CliError::Schema("fidelity.time must be finite".into()));
        }
        if let Some(t) = self.time {
            if !(t.is_finite() && t >= 0.0) {
                return Err(CliError::Schema(format!(
                    "time must be finite and ≥ 0, got {t}"
                )));
            }
        }
        if let Some(s) = &self.sweep {
            if s.command == Command::Sweep {
                return Err(CliError::Schema("sweep.command cannot be sweep".into()));
            }
            Grid::parse(&s.grid)?;
        }
        if let Some(n) = &self.df_check.occupations {
            if n.len() != self.model.modes.len() {
                return Err(CliError::Schema(format!(
                    "df_check.occupations has {} entries for {} modes",
                    n.len(),
                    self.model.modes.len()
                )));
            }
        }
        Ok(())
    }

    /// Model with the `SUBDYN_MAX_DIM` override applied.
    pub fn model_config(&self) -> Result<ModelConfig, CliError> {
        let mut m = self.model.to_config();
        if let Some(cap) = max_dim_override()? {
            m.max_dim = cap;
        }
        m.validate().map_err(CliError::Core)?;
        Ok(m)
    }
}

fn max_dim_override() -> Result<Option<usize>, CliError> {
    match std::env::var(MAX_DIM_ENV) {
        Ok(v) => v.trim().parse::<usize>().map(Some).map_err(|_| {
            CliError::Schema(format!("{MAX_DIM_ENV}={v:?} is not a positive integer"))
        }),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Schema(format!("{MAX_DIM_ENV}: {e}"))),
    }
}

/// Swept parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Lambda,
    NMax,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Lambda => "lambda",
            SweepParam::NMax => "n_max",
        }
    }
}

/// Inclusive, evenly spaced grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub param: SweepParam,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn parse(spec: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::Schema(format!("sweep {spec:?}: {why}"));
        let (name, range) = spec
            .split_once('=')
            .ok_or_else(|| bad("expected name=start:stop:count"))?;
        let param = match name.trim() {
            "lambda" => SweepParam::Lambda,
            "n_max" => SweepParam::NMax,
            other => return Err(bad(&format!("unknown parameter {other:?}"))),
        };
        let parts: Vec<&str> = range.split(':').collect();
        let [start, stop, count] = parts[..] else {
            return Err(bad("expected start:stop:count"));
        };
        let start: f64 = start
            .trim()
            .parse()
            .map_err(|_| bad("start is not a number"))?;
        let stop: f64 = stop
            .trim()
            .parse()
            .map_err(|_| bad("stop is not a number"))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| bad("count is not an integer"))?;
        if count == 0 || !start.is_finite() || !stop.is_finite() {
            return Err(bad("count must be positive and bounds finite"));
        }
        let values: Vec<f64> = if count == 1 {
            vec![start]
        } else {
            (0..count)
                .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
                .collect()
        };
        if param == SweepParam::NMax && values.iter().any(|v| v.fract() != 0.0 || *v < 1.0) {
            return Err(bad("n_max grid must land on integers ≥ 1"));
        }
        Ok(Self { param, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str =
        r#"{"model": {"j": 1.0, "lambda": 0.05, "modes": [{"omega": 1.0, "g": 1.0}], "n_max": 1}}"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = RunConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.fidelity, FidelitySpec::default());
        assert_eq!(cfg.tolerances, Tolerances::default());
        let m = cfg.model.to_config();
        assert_eq!(m.dim().unwrap(), 8);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = MINIMAL.replace("\"n_max\": 1", "\"n_max\": 1, \"nmax\": 2");
        assert!(matches!(
            RunConfig::from_json(&text),
            Err(CliError::Schema(_))
        ));
        let text = MINIMAL.replacen('{', r#"{"tolerances": {"hermitan": 1e-3}, "#, 1);
        assert!(matches!(
            RunConfig::from_json(&text),
            Err(CliError::Schema(_))
        ));
    }

    #[test]
    fn partial_tolerance_override() {
        let text = MINIMAL.replacen('{', r#"{"tolerances": {"cluster_gap": 1e-6}, "#, 1);
        let cfg = RunConfig::from_json(&text).unwrap();
        assert_eq!(cfg.tolerances.cluster_gap, 1e-6);
        assert_eq!(cfg.tolerances.hermitian, Tolerances::default().hermitian);
    }

    #[test]
    fn complex_coupling_and_piecewise_j() {
        let text = r#"{"model": {"j": {"segments": [{"duration": 1.0, "j": 2.0}]}, "lambda": 0.0,
            "modes": [{"omega": 1.0, "g": {"re": 0.5, "im": -0.5}}], "n_max": 1}}"#;
        let m = RunConfig::from_json(text).unwrap().model.to_config();
        assert_eq!(m.modes[0].g, C64::new(0.5, -0.5));
        assert!(matches!(m.j, JProfile::Piecewise(_)));
    }

    #[test]
    fn grids() {
        let g = Grid::parse("lambda=0.01:0.1:5").unwrap();
        assert_eq!(g.param, SweepParam::Lambda);
        assert_eq!(g.values.len(), 5);
        assert!((g.values[4] - 0.1).abs() < 1e-15);
        assert_eq!(
            Grid::parse("n_max=1:3:3").unwrap().values,
            vec![1.0, 2.0, 3.0]
        );
        assert!(Grid::parse("n_max=1:2:3").is_err());
        assert!(Grid::parse("omega=1:2:3").is_err());
        assert!(Grid::parse("lambda=0:1").is_err());
    }
}
