//! Interacting Brownian particles on a reflecting box or a flat torus, and Monte Carlo estimators
//! of semigroup-level quantities.
//!
//! Particles follow `dX = −½∇Φ(X)dt − ½Σ∇₁Ψ(X, Y)dt + dB`, so the generator is `½Δ` plus drift and
//! `E[(u(X_t) − u(γ))²] ≈ t·Γ(u)(γ)`. Without a potential the motion is advanced exactly.

mod estimators;
mod events;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub use estimators::{
    carre_du_champ, carre_du_champ_mc, gaussian_bound_check, rademacher_check, semigroup_estimate, semigroup_profile,
    stationarity_test, varadhan_profile, CarreDuChampReport, GaussianBoundReport, GaussianBoundRow, LipschitzSpec,
    RademacherReport, SemigroupEstimate, StationarityReport, VaradhanReport, VaradhanRow, WindowTest,
};
pub use events::{certified_distance_lower_bound, EventSet};

use crate::error::{Error, Result};
use crate::samplers::{GibbsPotentials, PointProcessModel};
use crate::{Configuration, Point, Window};

/// The domain the particles live in.
#[derive(Clone, Debug, PartialEq)]
pub enum Geometry {
    /// Normal reflection at the faces of a box window.
    ReflectingBox { window: Window },
    /// `[0, L_1) × … × [0, L_d)` with periodic wrap-around.
    Torus { period: Vec<f64> },
}

impl Geometry {
    pub fn torus(period: Vec<f64>) -> Result<Self> {
        if period.is_empty() || period.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return Err(Error::InvalidParameter("torus periods must be positive".into()));
        }
        Ok(Geometry::Torus { period })
    }

    pub fn reflecting(window: Window) -> Result<Self> {
        match window {
            Window::Box { .. } => Ok(Geometry::ReflectingBox { window }),
            Window::Ball { .. } => Err(Error::InvalidWindow("reflection is implemented for boxes only".into())),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Geometry::ReflectingBox { window } => window.dim(),
            Geometry::Torus { period } => period.len(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Geometry::ReflectingBox { window } => window.diameter(),
            Geometry::Torus { period } => period.iter().map(|l| l * l).sum::<f64>().sqrt(),
        }
    }

    /// Map a free position back into the domain.
    fn project(&self, x: &mut [f64]) {
        match self {
            Geometry::ReflectingBox { window: Window::Box { lo, hi } } => {
                for (c, (l, h)) in x.iter_mut().zip(lo.iter().zip(hi)) {
                    let w = h - l;
                    let mut y = (*c - l).rem_euclid(2.0 * w);
                    if y > w {
                        y = 2.0 * w - y;
                    }
                    *c = l + y;
                }
            }
            Geometry::ReflectingBox { .. } => unreachable!("validated at construction"),
            Geometry::Torus { period } => {
                for (c, l) in x.iter_mut().zip(period) {
                    *c = c.rem_euclid(*l);
                }
            }
        }
    }

    /// Distance from `x` to the boundary; infinite on the torus.
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match self {
            Geometry::ReflectingBox { window } => window.distance_to_complement(x),
            Geometry::Torus { .. } => f64::INFINITY,
        }
    }
}

/// The particle dynamics whose invariant law is the model's `μ`.
#[derive(Clone, Debug)]
pub struct DiffusionSpec {
    pub model: PointProcessModel,
    pub geometry: Geometry,
    pub dt: f64,
    pub horizon: f64,
    /// Multiplies the drift; `-1` is the deliberately wrong dynamics used as a negative control.
    pub drift_sign: f64,
}

impl DiffusionSpec {
    pub fn new(model: PointProcessModel, geometry: Geometry, dt: f64, horizon: f64) -> Result<Self> {
        if geometry.dim() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), found: geometry.dim() });
        }
        if !(dt > 0.0) || !(horizon > 0.0) || !dt.is_finite() || !horizon.is_finite() {
            return Err(Error::InvalidParameter("dt and horizon must be positive".into()));
        }
        if dt > 1e-2 * horizon * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("dt = {dt} exceeds 1e-2 * horizon = {}", 1e-2 * horizon)));
        }
        Ok(DiffusionSpec { model, geometry, dt, horizon, drift_sign: 1.0 })
    }

    /// `min(1e−3, t_min/50)`.
    pub fn default_dt(t_min: f64) -> f64 {
        (t_min / 50.0).min(1e-3)
    }

    /// The same dynamics with the drift reversed.
    pub fn with_reversed_drift(mut self) -> Self {
        self.drift_sign = -self.drift_sign;
        self
    }

    pub fn is_free(&self) -> bool {
        self.model.potentials().is_none()
    }

    /// Number of steps reaching `t`, which must be a multiple of `dt` up to `1e−9`.
    pub fn steps_for(&self, t: f64) -> Result<usize> {
        if t < 0.0 || t > self.horizon * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("time {t} outside [0, horizon = {}]", self.horizon)));
        }
        let k = t / self.dt;
        if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
            return Err(Error::InvalidParameter(format!("time {t} is not a multiple of dt = {}", self.dt)));
        }
        Ok(k.round() as usize)
    }
}

fn drift(potentials: &GibbsPotentials, points: &[Vec<f64>], i: usize, sign: f64) -> Vec<f64> {
    let x = &points[i];
    let mut g = potentials.phi.gradient(x);
    for (j, y) in points.iter().enumerate() {
        if j != i {
            for (a, b) in g.iter_mut().zip(potentials.psi.gradient(x, y)) {
                *a += b;
            }
        }
    }
    g.iter().map(|c| -0.5 * sign * c).collect()
}

/// Particle positions, one entry per expanded atom.
pub(crate) fn positions(gamma: &Configuration) -> Vec<Vec<f64>> {
    gamma.expanded().into_iter().map(|p| p.coords().to_vec()).collect()
}

pub(crate) fn configuration(dim: usize, points: &[Vec<f64>]) -> Configuration {
    Configuration::from_points(dim, points.iter().map(|x| Point::new(x.clone()).expect("finite position")))
        .expect("positions share the dimension")
}

/// One Euler–Maruyama step of length `dt` applied in place.
fn euler_step<R: Rng + ?Sized>(points: &mut [Vec<f64>], spec: &DiffusionSpec, dt: f64, rng: &mut R) -> Result<()> {
    let limit = 0.5 * spec.geometry.diameter();
    let drifts: Option<Vec<Vec<f64>>> = spec
        .model
        .potentials()
        .map(|pot| (0..points.len()).map(|i| drift(pot, points, i, spec.drift_sign)).collect());
    let sd = dt.sqrt();
    for (i, x) in points.iter_mut().enumerate() {
        if let Some(d) = &drifts {
            let displacement = d[i].iter().map(|c| c * c).sum::<f64>().sqrt() * dt;
            if !(displacement <= limit) {
                return Err(Error::StepTooLarge { displacement, limit });
            }
            for (c, v) in x.iter_mut().zip(&d[i]) {
                *c += v * dt;
            }
        }
        for c in x.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *c += sd * z;
        }
        spec.geometry.project(x);
    }
    Ok(())
}

/// Advance positions by `duration`: one exact Gaussian step for free motion, `duration/dt`
/// Euler steps otherwise.
pub(crate) fn advance<R: Rng + ?Sized>(
    points: &mut [Vec<f64>],
    spec: &DiffusionSpec,
    duration: f64,
    rng: &mut R,
) -> Result<()> {
    if duration <= 0.0 || points.is_empty() {
        return Ok(());
    }
    if spec.is_free() {
        return euler_step(points, spec, duration, rng);
    }
    let k = duration / spec.dt;
    let steps = k.round() as usize;
    if (k - k.round()).abs() > 1e-9 * k.max(1.0) {
        return Err(Error::InvalidParameter(format!("duration {duration} is not a multiple of dt = {}", spec.dt)));
    }
    for _ in 0..steps {
        euler_step(points, spec, spec.dt, rng)?;
    }
    Ok(())
}

/// One step of length `dt` from `state`.
pub fn step<R: Rng + ?Sized>(state: &Configuration, spec: &DiffusionSpec, rng: &mut R) -> Result<Configuration> {
    if state.is_empty() {
        return Err(Error::InvalidParameter("step needs at least one particle".into()));
    }
    if state.dim() != spec.geometry.dim() {
        return Err(Error::DimensionMismatch { expected: spec.geometry.dim(), found: state.dim() });
    }
    let mut points = positions(state);
    euler_step(&mut points, spec, spec.dt, rng)?;
    Ok(configuration(state.dim(), &points))
}

/// States at each of the ascending `times`, started from `gamma`.
pub fn simulate<R: Rng + ?Sized>(
    gamma: &Configuration,
    spec: &DiffusionSpec,
    times: &[f64],
    rng: &mut R,
) -> Result<Vec<Configuration>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("times must be ascending".into()));
    }
    for &t in times {
        spec.steps_for(t)?;
    }
    let mut points = positions(gamma);
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        advance(&mut points, spec, t - now, rng)?;
        now = t;
        out.push(configuration(gamma.dim(), &points));
    }
    Ok(out)
}
