//! Run configuration: one JSON document carrying the system and the
//! per-command parameter blocks. Unknown fields are rejected so schema
//! mistakes fail loudly at exit code 1.

use serde::Deserialize;
use wavestab_core::model::SystemSpec;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSpec,
    #[serde(default)]
    pub portrait: Option<PortraitCfg>,
    #[serde(default)]
    pub stability: Option<StabilityCfg>,
    #[serde(default)]
    pub asympt: Option<AsymptCfg>,
    #[serde(default)]
    pub sweep: Option<SweepCfg>,
    #[serde(default)]
    pub constants: Option<ConstantsCfg>,
    #[serde(default)]
    pub asymlib_check: Option<AsymlibCfg>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortraitCfg {
    pub c: f64,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityCfg {
    pub points: Vec<PointCfg>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointCfg {
    pub mu: f64,
    pub lambda: Vec<f64>,
    pub c: f64,
}

/// Geometric ladder of the limit's small parameter: `points_per_decade`
/// points per decade, starting at `start` and descending `decades`
/// decades.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LadderCfg {
    pub quantity: LadderQuantity,
    pub decades: usize,
    pub points_per_decade: usize,
    #[serde(default = "default_ladder_start")]
    pub start: f64,
}

fn default_ladder_start() -> f64 {
    1e-1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LadderQuantity {
    /// Distance of `mu` to the relevant window edge.
    Mu,
    /// Soliton-limit parameter `(v2 - v1)/(v3 - v2)`.
    Rho,
    /// Harmonic-limit half-amplitude `(v3 - v2)/2`.
    Delta,
}

impl LadderCfg {
    pub fn values(&self) -> Vec<f64> {
        let n = self.decades * self.points_per_decade;
        let step = 10f64.powf(-1.0 / self.points_per_decade as f64);
        (0..=n).map(|k| self.start * step.powi(k as i32)).collect()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptCfg {
    pub check: AsymptCheck,
    pub c: f64,
    pub lambda: Vec<f64>,
    pub ladder: LadderCfg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AsymptCheck {
    HarmonicHessian,
    SolitonHessian,
    HarmonicPeriod,
    SolitonAction,
    RootExpansionHarmonic,
    RootExpansionSoliton,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepCfg {
    pub lambda: Vec<f64>,
    pub mu: GridCfg,
    pub c: GridCfg,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridCfg {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl GridCfg {
    pub fn values(&self) -> Vec<f64> {
        if self.count <= 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|k| self.min + (self.max - self.min) * k as f64 / (self.count - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsCfg {
    pub v_star: f64,
    #[serde(default)]
    pub u_star: Option<f64>,
    pub c: f64,
    pub lambda: Vec<f64>,
    /// Wavenumbers for the dispersion relation.
    #[serde(default)]
    pub xi: Vec<f64>,
    /// Periods at which to evaluate the co-periodic criterion.
    #[serde(default)]
    pub periods: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymlibCfg {
    #[serde(default = "default_rhos")]
    pub rhos: Vec<f64>,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
}

fn default_rhos() -> Vec<f64> {
    vec![1e-1, 1e-2, 1e-3]
}

fn default_eps() -> Vec<f64> {
    vec![1e-3, 1e-4, 1e-5, 1e-6]
}
