//! Serializable descriptions of models, geometries and event sets.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use upsilon::diffusion::{DiffusionSpec, EventSet, Geometry};
use upsilon::samplers::{
    GibbsPotentials, IntensityMeasure, LevyMixture, McmcParams, OnePointPotential, PairPotential, PointProcessModel,
};
use upsilon::{Configuration, CountMode, Window};

use crate::CliError;

/// A piece of a piecewise constant density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityPiece {
    pub window: Window,
    pub rate: f64,
}

/// Intensity measure on `window`: exactly one of `rate`, `total_mass` or `pieces`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntensitySpec {
    pub window: Window,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pieces: Option<Vec<DensityPiece>>,
}

impl IntensitySpec {
    pub fn build(&self) -> Result<IntensityMeasure, CliError> {
        let w = self.window.clone();
        Ok(match (self.rate, self.total_mass, &self.pieces) {
            (Some(r), None, None) => IntensityMeasure::uniform(w, r)?,
            (None, Some(m), None) => IntensityMeasure::with_total_mass(w, m)?,
            (None, None, Some(pieces)) => {
                if pieces.iter().any(|p| p.window.dim() != w.dim() || !(p.rate >= 0.0) || !p.rate.is_finite()) {
                    return Err(CliError::schema("density pieces need matching dimension and finite rates >= 0"));
                }
                let sup: f64 = pieces.iter().map(|p| p.rate).sum();
                let pieces = pieces.clone();
                let density = Arc::new(move |x: &[f64]| {
                    pieces.iter().filter(|p| p.window.contains_coords(x)).map(|p| p.rate).sum::<f64>()
                });
                IntensityMeasure::with_density(w, density, sup)?
            }
            _ => return Err(CliError::schema("intensity needs exactly one of `rate`, `total_mass`, `pieces`")),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PhiSpec {
    Zero,
    Linear { coefficients: Vec<f64> },
    Quadratic { strength: f64, center: Vec<f64> },
    /// `A Σ_a cos(2πx_a/period)`.
    Cosine { amplitude: f64, period: f64 },
}

impl PhiSpec {
    fn build(&self) -> OnePointPotential {
        match self {
            PhiSpec::Zero => OnePointPotential::zero(),
            PhiSpec::Linear { coefficients } => OnePointPotential::linear(coefficients.clone()),
            PhiSpec::Quadratic { strength, center } => OnePointPotential::quadratic(*strength, center.clone()),
            PhiSpec::Cosine { amplitude, period } => OnePointPotential::cosine(*amplitude, *period),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PsiSpec {
    Zero,
    Distance,
    HardCore { radius: f64 },
    Gaussian { amplitude: f64, sigma: f64 },
}

impl PsiSpec {
    fn build(&self) -> PairPotential {
        match self {
            PsiSpec::Zero => PairPotential::zero(),
            PsiSpec::Distance => PairPotential::distance(),
            PsiSpec::HardCore { radius } => PairPotential::hard_core(*radius),
            PsiSpec::Gaussian { amplitude, sigma } => PairPotential::gaussian(*amplitude, *sigma),
        }
    }
}

fn zero_phi() -> PhiSpec {
    PhiSpec::Zero
}

fn zero_psi() -> PsiSpec {
    PsiSpec::Zero
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Poisson {
        intensity: IntensitySpec,
    },
    MixedPoisson {
        intensity: IntensitySpec,
        /// `(s, weight)` atoms of the mixing law.
        levy: Vec<(f64, f64)>,
    },
    Gibbs {
        intensity: IntensitySpec,
        #[serde(default = "zero_phi")]
        phi: PhiSpec,
        #[serde(default = "zero_psi")]
        psi: PsiSpec,
        #[serde(default)]
        mcmc: McmcParams,
    },
    Ginibre {
        n: usize,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<PointProcessModel, CliError> {
        Ok(match self {
            ModelSpec::Poisson { intensity } => PointProcessModel::poisson(intensity.build()?),
            ModelSpec::MixedPoisson { intensity, levy } => {
                PointProcessModel::MixedPoisson { intensity: intensity.build()?, levy: LevyMixture::new(levy.clone())? }
            }
            ModelSpec::Gibbs { intensity, phi, psi, mcmc } => PointProcessModel::gibbs(
                intensity.build()?,
                GibbsPotentials::new(phi.build(), psi.build()),
                mcmc.clone(),
            )?,
            ModelSpec::Ginibre { n } => {
                if *n == 0 {
                    return Err(CliError::schema("ginibre needs n >= 1"));
                }
                PointProcessModel::Ginibre { n: *n }
            }
        })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Poisson { .. } => "poisson",
            ModelSpec::MixedPoisson { .. } => "mixed_poisson",
            ModelSpec::Gibbs { .. } => "gibbs",
            ModelSpec::Ginibre { .. } => "ginibre",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    ReflectingBox { window: Window },
    Torus { period: Vec<f64> },
}

impl GeometrySpec {
    pub fn build(&self) -> Result<Geometry, CliError> {
        Ok(match self {
            GeometrySpec::ReflectingBox { window } => Geometry::reflecting(window.clone())?,
            GeometrySpec::Torus { period } => Geometry::torus(period.clone())?,
        })
    }
}

/// The particle dynamics; `dt` defaults to `min(1e−3, t_min/50)` and `horizon` to the largest
/// requested time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSpec {
    pub model: ModelSpec,
    pub geometry: GeometrySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Run with the drift reversed, a deliberately wrong dynamics.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reversed_drift: bool,
}

impl DynamicsSpec {
    pub fn build(&self, times: &[f64]) -> Result<DiffusionSpec, CliError> {
        let positive: Vec<f64> = times.iter().cloned().filter(|t| *t > 0.0).collect();
        let t_min = positive.iter().cloned().fold(f64::INFINITY, f64::min);
        let t_max = positive.iter().cloned().fold(0.0, f64::max);
        let horizon = self.horizon.unwrap_or(t_max);
        let dt = match self.dt {
            Some(dt) => dt,
            None if t_min.is_finite() => DiffusionSpec::default_dt(t_min),
            None => return Err(CliError::schema("no positive time given; declare `dt` and `horizon`")),
        };
        let spec = DiffusionSpec::new(self.model.build()?, self.geometry.build()?, dt, horizon)?;
        Ok(if self.reversed_drift { spec.with_reversed_drift() } else { spec })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventSpec {
    All,
    Mass { n: usize, mode: CountMode },
    Concentration { window: Window, n: usize, mode: CountMode },
    LambdaSet { gamma_ref: Configuration, window: Window },
    DistanceBall { center: Configuration, radius: f64 },
    LambdaNeighborhood { gamma_ref: Configuration, window: Window, radius: f64 },
    AllOf { sets: Vec<EventSpec> },
}

impl EventSpec {
    pub fn build(&self) -> EventSet {
        match self.clone() {
            EventSpec::All => EventSet::All,
            EventSpec::Mass { n, mode } => EventSet::Mass { n, mode },
            EventSpec::Concentration { window, n, mode } => EventSet::Concentration { window, n, mode },
            EventSpec::LambdaSet { gamma_ref, window } => EventSet::LambdaSet { gamma_ref, window },
            EventSpec::DistanceBall { center, radius } => EventSet::DistanceBall { center, radius },
            EventSpec::LambdaNeighborhood { gamma_ref, window, radius } => {
                EventSet::LambdaNeighborhood { gamma_ref, window, radius }
            }
            EventSpec::AllOf { sets } => EventSet::AllOf(sets.iter().map(|s| s.build()).collect()),
        }
    }
}

pub const BUILTIN_MODELS: &[(&str, &str)] = &[
    ("poisson", "intensity {window, rate | total_mass | pieces}"),
    ("mixed_poisson", "intensity, levy: [[s, weight], ...] with weights summing to 1"),
    ("gibbs", "intensity, phi, psi, mcmc {burn_in, thinning, proposal_mix, move_scale}"),
    ("ginibre", "n: matrix size; eigenvalues as points of R^2"),
];

pub const BUILTIN_POTENTIALS: &[(&str, &str)] = &[
    ("phi/zero", "no one-point potential"),
    ("phi/linear", "coefficients: c, Phi(x) = c . x"),
    ("phi/quadratic", "strength k, center c: Phi(x) = k |x - c|^2 / 2"),
    ("phi/cosine", "amplitude A, period L: Phi(x) = A sum_a cos(2 pi x_a / L)"),
    ("psi/zero", "no pair potential"),
    ("psi/distance", "Psi(x, y) = |x - y|"),
    ("psi/hard_core", "radius r: Psi = +inf below r"),
    ("psi/gaussian", "amplitude A, sigma: Psi = A exp(-|x - y|^2 / 2 sigma^2)"),
];

pub const BUILTIN_GEOMETRIES: &[(&str, &str)] = &[
    ("reflecting_box", "window: box with normal reflection"),
    ("torus", "period: [L_1, ..., L_d]"),
];

pub const BUILTIN_EVENT_SETS: &[(&str, &str)] = &[
    ("all", "every configuration"),
    ("mass", "n, mode: total mass compared with n"),
    ("concentration", "window, n, mode (eq | geq | leq): count in window compared with n"),
    ("lambda_set", "gamma_ref, window: configurations agreeing with gamma_ref inside the open window"),
    ("distance_ball", "center, radius: open d_Upsilon ball"),
    ("lambda_neighborhood", "gamma_ref, window, radius: rho_{gamma, U} < radius"),
    ("all_of", "sets: intersection"),
];

pub const BUILTIN_LIPSCHITZ: &[(&str, &str)] = &[
    ("rho_gamma_U", "gamma_ref, window, cap, scale: scale * min(rho_{gamma, U}, cap), Lipschitz constant |scale|"),
    ("constant", "value: Lipschitz constant 0"),
];
