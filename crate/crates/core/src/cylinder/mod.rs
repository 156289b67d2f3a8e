//! Cylinder functions `u = F ∘ (f_1*, …, f_k*)` on configuration space and their square field.

mod functions;

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub use functions::{SmoothTestFunction, TestFunctionSpec, BUILTIN_TEST_FUNCTIONS, TENT_KINK_WIDTH};
use functions::{fd_gradient, FD_TOLERANCE};

use crate::error::{Error, Result};
use crate::parallel::{run_workers, worker_rng};
use crate::samplers::{MonteCarlo, PointProcessModel};
use crate::stats::MeanAccumulator;
use crate::transport::d_upsilon;
use crate::{Configuration, Point, Window};

type OuterValue = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type OuterGrad = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A smooth outer function `F: R^k → R` with gradient, `sup |F|` and `Lip(F)`.
#[derive(Clone)]
pub struct OuterFunction {
    name: String,
    arity: usize,
    value: OuterValue,
    gradient: OuterGrad,
    sup: f64,
    lip: f64,
}

impl fmt::Debug for OuterFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OuterFunction")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("sup", &self.sup)
            .field("lip", &self.lip)
            .finish()
    }
}

impl OuterFunction {
    /// Checked against central differences at 100 seeded points of `[−5, 5]^k`.
    pub fn new(
        name: impl Into<String>,
        arity: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        sup: f64,
        lip: f64,
    ) -> Result<Self> {
        let f = OuterFunction { name: name.into(), arity, value: Arc::new(value), gradient: Arc::new(gradient), sup, lip };
        let fail = |detail: String| Error::GradientCheck { name: f.name.clone(), detail };
        if !(lip >= 0.0) || !lip.is_finite() || !(sup >= 0.0) {
            return Err(fail("invalid declared bounds".into()));
        }
        if arity == 0 {
            return Ok(f);
        }
        let mut rng = worker_rng(0x0f7e, 0);
        for _ in 0..100 {
            let a: Vec<f64> = (0..arity).map(|_| rng.random_range(-5.0..5.0)).collect();
            let g = (f.gradient)(&a);
            let fd = fd_gradient(&|x: &[f64]| (f.value)(x), &a);
            let err = g.iter().zip(&fd).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
            if g.len() != arity || !(err <= FD_TOLERANCE) {
                return Err(fail(format!("gradient differs from finite differences by {err} at {a:?}")));
            }
            let norm = g.iter().map(|c| c * c).sum::<f64>().sqrt();
            if norm > lip + 1e-9 || (f.value)(&a).abs() > sup {
                return Err(fail(format!("declared bounds violated at {a:?}")));
            }
        }
        Ok(f)
    }

    pub fn constant(c: f64) -> Self {
        OuterFunction {
            name: "constant".into(),
            arity: 0,
            value: Arc::new(move |_| c),
            gradient: Arc::new(|_| Vec::new()),
            sup: c.abs(),
            lip: 0.0,
        }
    }

    /// `F(a) = c · a`.
    pub fn linear(coefficients: Vec<f64>) -> Result<Self> {
        let lip = coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        let c2 = coefficients.clone();
        Self::new(
            "linear",
            coefficients.len(),
            move |a| a.iter().zip(&coefficients).map(|(x, c)| x * c).sum(),
            move |_| c2.clone(),
            f64::INFINITY,
            lip,
        )
    }

    pub fn identity() -> Self {
        Self::linear(vec![1.0]).expect("identity is valid")
    }

    /// `F(a) = arctan(c · a)`.
    pub fn arctan(coefficients: Vec<f64>) -> Result<Self> {
        let lip = coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        let c2 = coefficients.clone();
        Self::new(
            "arctan",
            coefficients.len(),
            move |a| a.iter().zip(&coefficients).map(|(x, c)| x * c).sum::<f64>().atan(),
            move |a| {
                let s: f64 = a.iter().zip(&c2).map(|(x, c)| x * c).sum();
                let d = 1.0 / (1.0 + s * s);
                c2.iter().map(|c| c * d).collect()
            },
            std::f64::consts::FRAC_PI_2,
            lip,
        )
    }

    /// `F(a) = sin(c · a)`.
    pub fn sin(coefficients: Vec<f64>) -> Result<Self> {
        let lip = coefficients.iter().map(|c| c * c).sum::<f64>().sqrt();
        let c2 = coefficients.clone();
        Self::new(
            "sin",
            coefficients.len(),
            move |a| a.iter().zip(&coefficients).map(|(x, c)| x * c).sum::<f64>().sin(),
            move |a| {
                let s: f64 = a.iter().zip(&c2).map(|(x, c)| x * c).sum();
                c2.iter().map(|c| c * s.cos()).collect()
            },
            1.0,
            lip,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn lip(&self) -> f64 {
        self.lip
    }

    pub fn value(&self, a: &[f64]) -> f64 {
        (self.value)(a)
    }

    pub fn gradient(&self, a: &[f64]) -> Vec<f64> {
        (self.gradient)(a)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OuterSpec {
    Constant { value: f64 },
    Linear { coefficients: Vec<f64> },
    Identity,
    Arctan { coefficients: Vec<f64> },
    Sin { coefficients: Vec<f64> },
}

impl OuterSpec {
    pub fn build(&self) -> Result<OuterFunction> {
        match self {
            OuterSpec::Constant { value } => Ok(OuterFunction::constant(*value)),
            OuterSpec::Linear { coefficients } => OuterFunction::linear(coefficients.clone()),
            OuterSpec::Identity => Ok(OuterFunction::identity()),
            OuterSpec::Arctan { coefficients } => OuterFunction::arctan(coefficients.clone()),
            OuterSpec::Sin { coefficients } => OuterFunction::sin(coefficients.clone()),
        }
    }
}

pub const BUILTIN_OUTER_FUNCTIONS: &[(&str, &str)] = &[
    ("constant", "F = c, no inner functions"),
    ("identity", "F(a) = a"),
    ("linear", "F(a) = c . a"),
    ("arctan", "F(a) = arctan(c . a)"),
    ("sin", "F(a) = sin(c . a)"),
];

/// `u(γ) = F(f_1*γ, …, f_k*γ)`.
#[derive(Clone, Debug)]
pub struct CylinderFunction {
    outer: OuterFunction,
    inner: Vec<SmoothTestFunction>,
}

impl CylinderFunction {
    pub fn new(outer: OuterFunction, inner: Vec<SmoothTestFunction>) -> Result<Self> {
        if outer.arity() != inner.len() {
            return Err(Error::InvalidParameter(format!(
                "outer function takes {} arguments, got {} inner functions",
                outer.arity(),
                inner.len()
            )));
        }
        if let Some(f) = inner.first() {
            if let Some(g) = inner.iter().find(|g| g.dim() != f.dim()) {
                return Err(Error::DimensionMismatch { expected: f.dim(), found: g.dim() });
            }
        }
        Ok(CylinderFunction { outer, inner })
    }

    pub fn constant(c: f64) -> Self {
        CylinderFunction { outer: OuterFunction::constant(c), inner: Vec::new() }
    }

    pub fn outer(&self) -> &OuterFunction {
        &self.outer
    }

    pub fn inner(&self) -> &[SmoothTestFunction] {
        &self.inner
    }

    pub fn k(&self) -> usize {
        self.inner.len()
    }

    /// Base dimension, `None` for constants.
    pub fn dim(&self) -> Option<usize> {
        self.inner.first().map(|f| f.dim())
    }

    /// Bounding box of the union of inner supports.
    pub fn common_window(&self) -> Option<Window> {
        let first = self.inner.first()?;
        let (mut lo, mut hi) = first.support().bounding_box();
        for f in &self.inner[1..] {
            let (l, h) = f.support().bounding_box();
            for a in 0..lo.len() {
                lo[a] = lo[a].min(l[a]);
                hi[a] = hi[a].max(h[a]);
            }
        }
        Window::new_box(lo, hi).ok()
    }

    fn check_dim(&self, gamma: &Configuration) -> Result<()> {
        match self.dim() {
            Some(d) if d != gamma.dim() => Err(Error::DimensionMismatch { expected: d, found: gamma.dim() }),
            _ => Ok(()),
        }
    }

    /// `(f_1*γ, …, f_k*γ)`.
    pub fn star_values(&self, gamma: &Configuration) -> Result<Vec<f64>> {
        self.check_dim(gamma)?;
        self.inner.iter().map(|f| eval_star(f, gamma)).collect()
    }

    /// `∇F` at `f*γ`.
    fn outer_gradient(&self, gamma: &Configuration) -> Result<Vec<f64>> {
        Ok(self.outer.gradient(&self.star_values(gamma)?))
    }

    /// `Σ_i ∂_iF · ∇f_i(x)`, the one-point gradient of `u` at an atom.
    fn pointwise_gradient(&self, dfdx: &[f64], x: &Point) -> Vec<f64> {
        let mut g = vec![0.0; x.dim()];
        for (df, f) in dfdx.iter().zip(&self.inner) {
            for (a, b) in g.iter_mut().zip(f.gradient(x)) {
                *a += df * b;
            }
        }
        g
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderSpec {
    pub outer: OuterSpec,
    #[serde(default)]
    pub inner: Vec<TestFunctionSpec>,
}

impl CylinderSpec {
    pub fn build(&self) -> Result<CylinderFunction> {
        let inner = self.inner.iter().map(|f| f.build()).collect::<Result<Vec<_>>>()?;
        CylinderFunction::new(self.outer.build()?, inner)
    }
}

/// `f*γ = Σ_x γ_x f(x)`.
pub fn eval_star(f: &SmoothTestFunction, gamma: &Configuration) -> Result<f64> {
    if f.dim() != gamma.dim() {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: gamma.dim() });
    }
    Ok(gamma.atoms().iter().map(|a| a.multiplicity as f64 * f.value(&a.point)).sum())
}

pub fn eval_cylinder(u: &CylinderFunction, gamma: &Configuration) -> Result<f64> {
    Ok(u.outer.value(&u.star_values(gamma)?))
}

/// `Γ(f, g)(x) = ∇f(x) · ∇g(x)`.
pub fn square_field_base(f: &SmoothTestFunction, g: &SmoothTestFunction, x: &Point) -> f64 {
    f.gradient(x).iter().zip(g.gradient(x)).map(|(a, b)| a * b).sum()
}

/// `Σ_{i,j} ∂_iF(f*γ) ∂_jG(g*γ) · Γ(f_i, g_j)*γ`.
pub fn square_field_lifted(u: &CylinderFunction, v: &CylinderFunction, gamma: &Configuration) -> Result<f64> {
    if u.k() == 0 || v.k() == 0 {
        return Ok(0.0);
    }
    let du = u.outer_gradient(gamma)?;
    let dv = v.outer_gradient(gamma)?;
    let mut total = 0.0;
    for (i, f) in u.inner.iter().enumerate() {
        for (j, g) in v.inner.iter().enumerate() {
            let field: f64 =
                gamma.atoms().iter().map(|a| a.multiplicity as f64 * square_field_base(f, g, &a.point)).sum();
            total += du[i] * dv[j] * field;
        }
    }
    Ok(total)
}

/// `Σ_x γ_x⁻¹ ∇_y u(γ_{x→y}) · ∇_y v(γ_{x→y})` at `y = x`, where `γ_{x→y}` moves the whole atom
/// at `x` to `y`.
pub fn square_field_atomwise(u: &CylinderFunction, v: &CylinderFunction, gamma: &Configuration) -> Result<f64> {
    if u.k() == 0 || v.k() == 0 {
        return Ok(0.0);
    }
    let du = u.outer_gradient(gamma)?;
    let dv = v.outer_gradient(gamma)?;
    let mut total = 0.0;
    for a in gamma.atoms() {
        let m = a.multiplicity as f64;
        let gu = u.pointwise_gradient(&du, &a.point);
        let gv = v.pointwise_gradient(&dv, &a.point);
        let dot: f64 = gu.iter().zip(&gv).map(|(p, q)| (m * p) * (m * q)).sum();
        total += dot / m;
    }
    Ok(total)
}

/// `√n · √2 · √k · Lip(F) · max_i Lip(f_i)`; bounds `|u(γ) − u(η)| / d_Υ(γ, η)` whenever both
/// configurations carry at most `n` points in the common support window.
pub fn local_lipschitz_bound(u: &CylinderFunction, n: usize) -> f64 {
    if u.k() == 0 {
        return 0.0;
    }
    let max_lip = u.inner.iter().map(|f| f.lip()).fold(0.0, f64::max);
    (n as f64).sqrt() * 2f64.sqrt() * (u.k() as f64).sqrt() * u.outer.lip() * max_lip
}

/// `arctan ∘ f*` for the mollified tent together with `n` points packed into `[2 − ε, 2]`.
#[derive(Clone, Debug)]
pub struct NonLipExample {
    pub u: CylinderFunction,
    pub gamma: Configuration,
    /// `n / (1 + ε² n²)²`.
    pub lower_bound: f64,
}

pub fn nonlip_example(epsilon: f64, n: usize) -> Result<NonLipExample> {
    let margin = TENT_KINK_WIDTH;
    if !(epsilon > 2.0 * margin && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in ({}, 1]", 2.0 * margin)));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let u = CylinderFunction::new(OuterFunction::arctan(vec![1.0])?, vec![SmoothTestFunction::nonlip_tent()?])?;
    let span = epsilon - 2.0 * margin;
    let points = (0..n).map(|i| Point::from(2.0 - margin - span * (i as f64 + 0.5) / n as f64));
    let gamma = Configuration::from_points(1, points)?;
    let en = epsilon * n as f64;
    Ok(NonLipExample { u, gamma, lower_bound: n as f64 / ((1.0 + en * en) * (1.0 + en * en)) })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeEstimate {
    pub radii: Vec<f64>,
    /// Largest probed difference quotient at each radius.
    pub quotients: Vec<f64>,
    /// The quotient at the smallest radius.
    pub value: f64,
}

/// Probe `|u(γ) − u(η)| / d_Υ(γ, η)` over perturbations `η` of `γ` of size `r` for each radius.
/// Probe zero follows the analytic gradient; the others are Gaussian directions.
pub fn slope_estimate(
    u: &CylinderFunction,
    gamma: &Configuration,
    radii: &[f64],
    probes_per_radius: usize,
    seed: u64,
) -> Result<SlopeEstimate> {
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("radii must be positive and strictly decreasing".into()));
    }
    let base = eval_cylinder(u, gamma)?;
    let atoms = gamma.atoms();
    let d = gamma.dim();
    let mut rng = worker_rng(seed, 0);
    let analytic: Option<Vec<Vec<f64>>> = if u.k() > 0 && !atoms.is_empty() {
        let du = u.outer_gradient(gamma)?;
        Some(atoms.iter().map(|a| u.pointwise_gradient(&du, &a.point)).collect())
    } else {
        None
    };
    let mut quotients = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut best = 0.0f64;
        for probe in 0..probes_per_radius.max(1) {
            if atoms.is_empty() {
                break;
            }
            let dirs: Vec<Vec<f64>> = match (&analytic, probe) {
                (Some(g), 0) => g.clone(),
                _ => atoms.iter().map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect()).collect(),
            };
            let norm = atoms
                .iter()
                .zip(&dirs)
                .map(|(a, v)| a.multiplicity as f64 * v.iter().map(|c| c * c).sum::<f64>())
                .sum::<f64>()
                .sqrt();
            if norm == 0.0 {
                continue;
            }
            let moved = atoms.iter().zip(&dirs).map(|(a, v)| {
                let x: Vec<f64> = a.point.coords().iter().zip(v).map(|(c, dv)| c + r * dv / norm).collect();
                Point::new(x).map(|point| (point, a.multiplicity))
            });
            let eta = Configuration::from_atoms(d, moved.collect::<Result<Vec<_>>>()?)?;
            let dist = d_upsilon(gamma, &eta)?.to_scalar();
            if dist > 0.0 {
                best = best.max((eval_cylinder(u, &eta)? - base).abs() / dist);
            }
        }
        quotients.push(best);
    }
    let value = *quotients.last().expect("radii nonempty");
    Ok(SlopeEstimate { radii: radii.to_vec(), quotients, value })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnergyEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

/// Monte Carlo estimate of `∫ Γ^Υ(u, v) dμ`; each sample uses the symmetrized field so that the
/// result is the same with `u` and `v` swapped.
pub fn energy_monte_carlo(
    u: &CylinderFunction,
    v: &CylinderFunction,
    model: &PointProcessModel,
    mc: MonteCarlo,
) -> Result<EnergyEstimate> {
    let parts = run_workers(mc.n_samples, mc.workers, mc.seed, |rng, count, _| -> Result<MeanAccumulator> {
        let mut acc = MeanAccumulator::new();
        let mut sampler = model.sampler();
        for _ in 0..count {
            let g = sampler.next(rng)?;
            let a = square_field_lifted(u, v, &g)?;
            let b = square_field_lifted(v, u, &g)?;
            acc.push(0.5 * (a + b));
        }
        Ok(acc)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let acc = MeanAccumulator::merged(&parts);
    Ok(EnergyEstimate { estimate: acc.mean(), stderr: acc.stderr() })
}
