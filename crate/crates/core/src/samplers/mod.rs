//! Reference point processes on bounded windows and Monte Carlo checks of the Poisson identities.

mod checks;
mod gibbs;
mod ginibre;
mod potentials;

use std::fmt;
use std::sync::Arc;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use rand_distr::Poisson;

use crate::error::{Error, Result};
use crate::parallel::{self, run_workers};
use crate::{Configuration, Point, Window};

pub use checks::{
    check_laplace, check_mecke, tightness_profile, LaplaceReport, MeckeReport, MonteCarlo, TightnessRow,
    DEFAULT_STRATA_PER_AXIS,
};
pub use gibbs::{hamiltonian, GibbsChain, McmcParams};
pub use ginibre::sample_ginibre;
pub use potentials::{GibbsPotentials, OnePointPotential, PairPotential};

pub type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Density {
    Constant(f64),
    Function { f: DensityFn, sup: f64 },
}

/// The intensity measure `m` restricted to a window.
#[derive(Clone)]
pub struct IntensityMeasure {
    window: Window,
    density: Density,
    total_mass: f64,
}

impl fmt::Debug for IntensityMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let density = match &self.density {
            Density::Constant(c) => format!("constant({c})"),
            Density::Function { sup, .. } => format!("function(sup = {sup})"),
        };
        f.debug_struct("IntensityMeasure")
            .field("window", &self.window)
            .field("density", &density)
            .field("total_mass", &self.total_mass)
            .finish()
    }
}

/// Midpoint grid over a box: calls `visit(x, cell_volume)` at every cell center.
fn midpoint_grid(lo: &[f64], hi: &[f64], per_axis: usize, mut visit: impl FnMut(&[f64], f64)) {
    let d = lo.len();
    let widths: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| (h - l) / per_axis as f64).collect();
    let cell: f64 = widths.iter().product();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    loop {
        for a in 0..d {
            x[a] = lo[a] + (idx[a] as f64 + 0.5) * widths[a];
        }
        visit(&x, cell);
        let mut a = 0;
        loop {
            if a == d {
                return;
            }
            idx[a] += 1;
            if idx[a] < per_axis {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// Grid resolution keeping the total number of quadrature nodes near `2^20`.
pub fn default_grid(dim: usize) -> usize {
    ((1u64 << 20) as f64).powf(1.0 / dim as f64).floor().max(2.0) as usize
}

impl IntensityMeasure {
    /// Constant density `rate` on `window`; `mE = rate · |E|`.
    pub fn uniform(window: Window, rate: f64) -> Result<Self> {
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter("intensity rate must be finite and nonnegative".into()));
        }
        let total_mass = rate * window.volume();
        Ok(IntensityMeasure { window, density: Density::Constant(rate), total_mass })
    }

    /// Uniform intensity on `window` with prescribed total mass.
    pub fn with_total_mass(window: Window, total_mass: f64) -> Result<Self> {
        let rate = total_mass / window.volume();
        Self::uniform(window, rate)
    }

    /// A bounded density on `window`; `sup` must dominate it. The total mass is computed by
    /// midpoint quadrature.
    pub fn with_density(window: Window, density: DensityFn, sup: f64) -> Result<Self> {
        if !(sup > 0.0) || !sup.is_finite() {
            return Err(Error::InvalidParameter("density bound must be positive and finite".into()));
        }
        let (lo, hi) = window.bounding_box();
        let mut total = 0.0;
        let mut bad = false;
        midpoint_grid(&lo, &hi, default_grid(window.dim()), |x, cell| {
            if window.contains_coords(x) {
                let v = density(x);
                if !(0.0..=sup * (1.0 + 1e-12)).contains(&v) {
                    bad = true;
                }
                total += v * cell;
            }
        });
        if bad {
            return Err(Error::InvalidParameter("density must lie in [0, sup] on the window".into()));
        }
        Ok(IntensityMeasure { window, density: Density::Function { f: density, sup }, total_mass: total })
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    /// `mE`.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `s · m`.
    pub fn scaled(&self, s: f64) -> Self {
        let density = match &self.density {
            Density::Constant(c) => Density::Constant(c * s),
            Density::Function { f, sup } => {
                let f = f.clone();
                Density::Function { f: Arc::new(move |x| s * f(x)), sup: sup * s }
            }
        };
        IntensityMeasure { window: self.window.clone(), density, total_mass: self.total_mass * s }
    }

    /// Density with respect to Lebesgue measure, zero off the window.
    pub fn density_at(&self, x: &[f64]) -> f64 {
        if !self.window.contains_coords(x) {
            return 0.0;
        }
        match &self.density {
            Density::Constant(c) => *c,
            Density::Function { f, .. } => f(x),
        }
    }

    /// A point drawn from `m / mE`, by rejection from the window's bounding box.
    pub fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let (lo, hi) = self.window.bounding_box();
        let sup = match &self.density {
            Density::Constant(c) => *c,
            Density::Function { sup, .. } => *sup,
        };
        let mut x = vec![0.0; lo.len()];
        loop {
            for (a, c) in x.iter_mut().enumerate() {
                *c = rng.random_range(lo[a]..hi[a]);
            }
            if !self.window.contains_coords(&x) {
                continue;
            }
            let accept = match &self.density {
                Density::Constant(_) => true,
                Density::Function { f, .. } => rng.random::<f64>() * sup < f(&x),
            };
            if accept {
                return Point::new(x).expect("finite sample");
            }
        }
    }

    /// `m(E)` for a window `E`.
    pub fn measure_of(&self, e: &Window) -> f64 {
        if e == &self.window {
            return self.total_mass;
        }
        if let (Density::Constant(c), Window::Box { lo: alo, hi: ahi }, Window::Box { lo: blo, hi: bhi }) =
            (&self.density, &self.window, e)
        {
            let vol: f64 = (0..alo.len()).map(|a| (ahi[a].min(bhi[a]) - alo[a].max(blo[a])).max(0.0)).product();
            return c * vol;
        }
        self.integrate(|x| if e.contains_coords(x) { 1.0 } else { 0.0 }, default_grid(self.dim()))
    }

    /// `∫ g dm` by midpoint quadrature over the bounding box.
    pub fn integrate(&self, g: impl Fn(&[f64]) -> f64, per_axis: usize) -> f64 {
        let (lo, hi) = self.window.bounding_box();
        let mut total = 0.0;
        midpoint_grid(&lo, &hi, per_axis, |x, cell| {
            let rho = self.density_at(x);
            if rho > 0.0 {
                total += g(x) * rho * cell;
            }
        });
        total
    }
}

/// A finitely supported mixing law `λ = Σ w_i δ_{s_i}` on `(0, ∞)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LevyMixture {
    atoms: Vec<(f64, f64)>,
}

impl LevyMixture {
    /// From `(scale, weight)` pairs; weights must be positive and sum to one.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("mixture needs at least one atom".into()));
        }
        if atoms.iter().any(|&(s, w)| !(s > 0.0 && s.is_finite() && w > 0.0)) {
            return Err(Error::InvalidParameter("mixture scales and weights must be positive".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("mixture weights sum to {total}, not 1")));
        }
        Ok(LevyMixture { atoms })
    }

    pub fn dirac(s: f64) -> Result<Self> {
        Self::new(vec![(s, 1.0)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.atoms.len() == 1 {
            return self.atoms[0].0;
        }
        let index = WeightedIndex::new(self.atoms.iter().map(|a| a.1)).expect("validated weights");
        self.atoms[index.sample(rng)].0
    }
}

/// The law `μ` of a reference point process.
#[derive(Clone, Debug)]
pub enum PointProcessModel {
    Poisson { intensity: IntensityMeasure },
    MixedPoisson { intensity: IntensityMeasure, levy: LevyMixture },
    Gibbs { intensity: IntensityMeasure, potentials: GibbsPotentials, mcmc: McmcParams },
    /// Eigenvalues of an `n x n` matrix of i.i.d. standard complex Gaussians, in `R^2`.
    Ginibre { n: usize },
}

impl PointProcessModel {
    pub fn poisson(intensity: IntensityMeasure) -> Self {
        PointProcessModel::Poisson { intensity }
    }

    pub fn gibbs(intensity: IntensityMeasure, potentials: GibbsPotentials, mcmc: McmcParams) -> Result<Self> {
        mcmc.validate()?;
        potentials.check_symmetry(intensity.window())?;
        Ok(PointProcessModel::Gibbs { intensity, potentials, mcmc })
    }

    pub fn dim(&self) -> usize {
        match self {
            PointProcessModel::Poisson { intensity }
            | PointProcessModel::MixedPoisson { intensity, .. }
            | PointProcessModel::Gibbs { intensity, .. } => intensity.dim(),
            PointProcessModel::Ginibre { .. } => 2,
        }
    }

    pub fn intensity(&self) -> Option<&IntensityMeasure> {
        match self {
            PointProcessModel::Poisson { intensity }
            | PointProcessModel::MixedPoisson { intensity, .. }
            | PointProcessModel::Gibbs { intensity, .. } => Some(intensity),
            PointProcessModel::Ginibre { .. } => None,
        }
    }

    /// Short tag used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            PointProcessModel::Poisson { .. } => "poisson",
            PointProcessModel::MixedPoisson { .. } => "mixed_poisson",
            PointProcessModel::Gibbs { .. } => "gibbs",
            PointProcessModel::Ginibre { .. } => "ginibre",
        }
    }

    /// Potentials driving the particle dynamics, if any.
    pub fn potentials(&self) -> Option<&GibbsPotentials> {
        match self {
            PointProcessModel::Gibbs { potentials, .. } => Some(potentials),
            _ => None,
        }
    }

    /// A stateful sampler; for Gibbs models it owns a Markov chain that is burnt in on first use.
    pub fn sampler(&self) -> ModelSampler<'_> {
        ModelSampler { model: self, chain: None }
    }

    /// One exact (or, for Gibbs, freshly burnt-in) sample.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Configuration> {
        self.sampler().next(rng)
    }

    /// `n` samples split over `workers` independent streams of `seed`.
    pub fn sample_many(&self, n: usize, seed: u64, workers: usize) -> Result<Vec<Configuration>> {
        let parts = run_workers(n, workers, seed, |rng, count, _| {
            let mut sampler = self.sampler();
            (0..count).map(|_| sampler.next(rng)).collect::<Result<Vec<_>>>()
        });
        let mut out = Vec::with_capacity(n);
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    }
}

/// Draws successive samples of a model; Gibbs samples are successive thinned chain states.
pub struct ModelSampler<'a> {
    model: &'a PointProcessModel,
    chain: Option<GibbsChain<'a>>,
}

impl ModelSampler<'_> {
    pub fn next<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Configuration> {
        match self.model {
            PointProcessModel::Poisson { intensity } => Ok(sample_poisson(intensity, rng)),
            PointProcessModel::MixedPoisson { intensity, levy } => Ok(sample_mixed_poisson(intensity, levy, rng)),
            PointProcessModel::Gibbs { intensity, potentials, mcmc } => {
                if self.chain.is_none() {
                    let mut chain = GibbsChain::new(intensity, potentials, mcmc.clone());
                    chain.burn_in(rng)?;
                    self.chain = Some(chain);
                }
                let chain = self.chain.as_mut().expect("initialized chain");
                Ok(chain.next_sample(rng))
            }
            PointProcessModel::Ginibre { n } => sample_ginibre(*n, rng),
        }
    }
}

/// `N ~ Poisson(mE)` points drawn i.i.d. from `m / mE`.
pub fn sample_poisson<R: Rng + ?Sized>(intensity: &IntensityMeasure, rng: &mut R) -> Configuration {
    let n = poisson_count(intensity.total_mass(), rng);
    let points: Vec<Point> = (0..n).map(|_| intensity.sample_point(rng)).collect();
    Configuration::from_points(intensity.dim(), points).expect("points share the window dimension")
}

pub(crate) fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("positive finite Poisson mean");
    dist.sample(rng) as usize
}

/// Draw `s ~ λ` then a Poisson sample with intensity `s · m`.
pub fn sample_mixed_poisson<R: Rng + ?Sized>(
    intensity: &IntensityMeasure,
    levy: &LevyMixture,
    rng: &mut R,
) -> Configuration {
    let s = levy.sample(rng);
    let n = poisson_count(s * intensity.total_mass(), rng);
    let points: Vec<Point> = (0..n).map(|_| intensity.sample_point(rng)).collect();
    Configuration::from_points(intensity.dim(), points).expect("points share the window dimension")
}

/// One Gibbs sample from a fresh chain seeded by `seed`.
pub fn sample_gibbs(model: &PointProcessModel, seed: u64) -> Result<Configuration> {
    match model {
        PointProcessModel::Gibbs { .. } => model.sample(&mut parallel::worker_rng(seed, 0)),
        _ => Err(Error::InvalidParameter("sample_gibbs needs a Gibbs model".into())),
    }
}
