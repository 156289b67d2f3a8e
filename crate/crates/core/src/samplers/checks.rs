use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{default_grid, sample_poisson, IntensityMeasure, LevyMixture, PointProcessModel};
use crate::error::Result;
use crate::parallel::run_workers;
use crate::stats::{poisson_tail_geq, MeanAccumulator};
use crate::{Configuration, Point, Window};

pub const DEFAULT_STRATA_PER_AXIS: usize = 64;

/// Sample budget and stream layout of a Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonteCarlo {
    pub n_samples: usize,
    pub seed: u64,
    pub workers: usize,
}

impl MonteCarlo {
    pub fn new(n_samples: usize, seed: u64, workers: usize) -> Self {
        MonteCarlo { n_samples, seed, workers: workers.max(1) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeckeReport {
    pub lhs: f64,
    pub rhs: f64,
    /// Standard error of `lhs − rhs`, both sides being evaluated on the same samples.
    pub stderr: f64,
}

impl MeckeReport {
    pub fn within(&self, sigmas: f64) -> bool {
        (self.lhs - self.rhs).abs() <= sigmas * self.stderr
    }
}

/// Stratified estimate of `∫ g dm`: one uniform point per cell of a `strata^d` grid on the
/// bounding box.
fn stratified_integral<R: Rng + ?Sized>(
    m: &IntensityMeasure,
    strata: usize,
    rng: &mut R,
    mut g: impl FnMut(&Point) -> f64,
) -> f64 {
    let (lo, hi) = m.window().bounding_box();
    let d = lo.len();
    let widths: Vec<f64> = lo.iter().zip(&hi).map(|(l, h)| (h - l) / strata as f64).collect();
    let cell: f64 = widths.iter().product();
    let mut idx = vec![0usize; d];
    let mut total = 0.0;
    loop {
        let x: Vec<f64> = (0..d).map(|a| lo[a] + (idx[a] as f64 + rng.random::<f64>()) * widths[a]).collect();
        let rho = m.density_at(&x);
        if rho > 0.0 {
            let p = Point::new(x).expect("finite stratum point");
            total += g(&p) * rho * cell;
        }
        let mut a = 0;
        loop {
            if a == d {
                return total;
            }
            idx[a] += 1;
            if idx[a] < strata {
                break;
            }
            idx[a] = 0;
            a += 1;
        }
    }
}

/// Both sides of `E[Σ_{x∈γ} u(γ, x)] = E[∫ u(γ + δ_x, x) dm(x)]` under the Poisson measure `π_m`.
pub fn check_mecke<U>(m: &IntensityMeasure, u: U, mc: MonteCarlo, strata_per_axis: usize) -> MeckeReport
where
    U: Fn(&Configuration, &Point) -> f64 + Sync,
{
    let parts = run_workers(mc.n_samples, mc.workers, mc.seed, |rng, count, _| {
        let (mut lhs, mut rhs, mut diff) = (MeanAccumulator::new(), MeanAccumulator::new(), MeanAccumulator::new());
        for _ in 0..count {
            let g = sample_poisson(m, rng);
            let l: f64 = g.atoms().iter().map(|a| a.multiplicity as f64 * u(&g, &a.point)).sum();
            let r = stratified_integral(m, strata_per_axis, rng, |x| {
                u(&g.with_point(x.clone()).expect("window point has the right dimension"), x)
            });
            lhs.push(l);
            rhs.push(r);
            diff.push(l - r);
        }
        [lhs, rhs, diff]
    });
    let merge = |k: usize| MeanAccumulator::merged(parts.iter().map(|p| &p[k]));
    let diff = merge(2);
    MeckeReport { lhs: merge(0).mean(), rhs: merge(1).mean(), stderr: diff.stderr() }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LaplaceReport {
    pub empirical: f64,
    pub closed_form: f64,
    pub stderr: f64,
}

impl LaplaceReport {
    pub fn relative_error(&self) -> f64 {
        ((self.empirical - self.closed_form) / self.closed_form).abs()
    }
}

/// `E[e^{f*γ}]` under `π_m` against `exp(∫ (e^f − 1) dm)`.
pub fn check_laplace<F>(m: &IntensityMeasure, f: F, mc: MonteCarlo) -> LaplaceReport
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let parts = run_workers(mc.n_samples, mc.workers, mc.seed, |rng, count, _| {
        let mut acc = MeanAccumulator::new();
        for _ in 0..count {
            let g = sample_poisson(m, rng);
            let s: f64 = g.atoms().iter().map(|a| a.multiplicity as f64 * f(a.point.coords())).sum();
            acc.push(s.exp());
        }
        acc
    });
    let acc = MeanAccumulator::merged(&parts);
    let closed_form = m.integrate(|x| f(x).exp_m1(), default_grid(m.dim())).exp();
    LaplaceReport { empirical: acc.mean(), closed_form, stderr: acc.stderr() }
}

/// One row of the quantitative tightness profile `n ↦ n · μ(Ξ_{≥n}(E))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TightnessRow {
    pub n: usize,
    pub empirical: f64,
    pub stderr: f64,
    /// `n · P(γE ≥ n)` in closed form, for Poisson and mixed Poisson models.
    pub exact: Option<f64>,
    /// `n (1 − Γ(1 + n, mE)/n!) = n · P(γE > n)` for Poisson models.
    pub incomplete_gamma_form: Option<f64>,
}

fn mixture_tail(levy: &LevyMixture, n: usize, mass: f64) -> f64 {
    levy.atoms().iter().map(|&(s, w)| w * poisson_tail_geq(n, s * mass)).sum()
}

/// Empirical tail profile of the count in `E` for `n = 0..=n_max`.
pub fn tightness_profile(
    model: &PointProcessModel,
    e: &Window,
    n_max: usize,
    mc: MonteCarlo,
) -> Result<Vec<TightnessRow>> {
    let parts = run_workers(mc.n_samples, mc.workers, mc.seed, |rng, count, _| -> Result<Vec<u64>> {
        let mut hist = vec![0u64; n_max + 2];
        let mut sampler = model.sampler();
        for _ in 0..count {
            let c = sampler.next(rng)?.count(e)?;
            hist[c.min(n_max + 1)] += 1;
        }
        Ok(hist)
    });
    let mut hist = vec![0u64; n_max + 2];
    for p in parts {
        for (h, c) in hist.iter_mut().zip(p?) {
            *h += c;
        }
    }
    let total = mc.n_samples as f64;
    let mass = model.intensity().map(|m| m.measure_of(e));
    let mut rows = Vec::with_capacity(n_max + 1);
    let mut at_least: u64 = hist.iter().sum();
    for n in 0..=n_max {
        let p = at_least as f64 / total;
        let nf = n as f64;
        let (exact, incomplete_gamma_form) = match (model, mass) {
            (PointProcessModel::Poisson { .. }, Some(me)) => {
                (Some(nf * poisson_tail_geq(n, me)), Some(nf * poisson_tail_geq(n + 1, me)))
            }
            (PointProcessModel::MixedPoisson { levy, .. }, Some(me)) => (Some(nf * mixture_tail(levy, n, me)), None),
            _ => (None, None),
        };
        rows.push(TightnessRow {
            n,
            empirical: nf * p,
            stderr: nf * (p * (1.0 - p) / total).sqrt(),
            exact,
            incomplete_gamma_form,
        });
        at_least -= hist[n];
    }
    Ok(rows)
}
