use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{simulate, DiffusionSpec, EventSet};
use crate::cylinder::{eval_cylinder, CylinderFunction};
use crate::error::{Error, Result};
use crate::parallel::{run_workers, worker_rng};
use crate::samplers::MonteCarlo;
use crate::stats::{chi_square_homogeneity, linear_fit, MeanAccumulator};
use crate::transport::{d_upsilon, rho_gamma_u};
use crate::{Configuration, Window};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SemigroupEstimate {
    pub t: f64,
    pub estimate: f64,
    pub stderr: f64,
    pub hits: u64,
    pub paths: u64,
}

impl SemigroupEstimate {
    fn new(t: f64, hits: u64, paths: u64) -> Self {
        let n = paths as f64;
        let p = hits as f64 / n;
        SemigroupEstimate { t, estimate: p, stderr: (p * (1.0 - p) / n).sqrt(), hits, paths }
    }
}

#[derive(Default)]
struct PathTally {
    lambda: u64,
    xi_at_start: u64,
    joint: Vec<u64>,
    min_distance: Option<f64>,
}

/// Shared path loop: `γ₀ ~ μ`, and for `γ₀ ∈ Λ` the states at each ascending time are tested
/// against `Ξ`. With `track_distance`, also the smallest `d_Υ(γ₀, Ξ)` over `γ₀ ∈ Λ`.
fn tally_paths(
    xi: &EventSet,
    lambda: &EventSet,
    ascending: &[f64],
    spec: &DiffusionSpec,
    mc: MonteCarlo,
    track_distance: bool,
) -> Result<PathTally> {
    let parts = run_workers(mc.n_samples, mc.workers, mc.seed, |rng, count, _| -> Result<PathTally> {
        let mut tally = PathTally { joint: vec![0; ascending.len()], ..Default::default() };
        let mut sampler = spec.model.sampler();
        for _ in 0..count {
            let g0 = sampler.next(rng)?;
            if xi.contains(&g0)? {
                tally.xi_at_start += 1;
            }
            if !lambda.contains(&g0)? {
                continue;
            }
            tally.lambda += 1;
            if track_distance {
                if let Some(d) = xi.distance_from(&g0)? {
                    tally.min_distance = Some(tally.min_distance.map_or(d, |m: f64| m.min(d)));
                }
            }
            for (k, state) in simulate(&g0, spec, ascending, rng)?.iter().enumerate() {
                if xi.contains(state)? {
                    tally.joint[k] += 1;
                }
            }
        }
        Ok(tally)
    });
    let mut total = PathTally { joint: vec![0; ascending.len()], ..Default::default() };
    for part in parts {
        let part = part?;
        total.lambda += part.lambda;
        total.xi_at_start += part.xi_at_start;
        for (a, b) in total.joint.iter_mut().zip(&part.joint) {
            *a += b;
        }
        total.min_distance = match (total.min_distance, part.min_distance) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
    }
    Ok(total)
}

fn ascending_order(times: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));
    let sorted = order.iter().map(|&i| times[i]).collect();
    (order, sorted)
}

/// `T̂_t(Ξ, Λ) = (1/n) Σ 1_Λ(γ₀) 1_Ξ(γ_t)` at each time, from one set of paths.
pub fn semigroup_profile(
    xi: &EventSet,
    lambda: &EventSet,
    times: &[f64],
    spec: &DiffusionSpec,
    mc: MonteCarlo,
) -> Result<Vec<SemigroupEstimate>> {
    let (order, sorted) = ascending_order(times);
    let tally = tally_paths(xi, lambda, &sorted, spec, mc, false)?;
    let mut out = vec![SemigroupEstimate::new(0.0, 0, 1); times.len()];
    for (k, &i) in order.iter().enumerate() {
        out[i] = SemigroupEstimate::new(times[i], tally.joint[k], mc.n_samples as u64);
    }
    Ok(out)
}

pub fn semigroup_estimate(
    xi: &EventSet,
    lambda: &EventSet,
    t: f64,
    spec: &DiffusionSpec,
    mc: MonteCarlo,
) -> Result<SemigroupEstimate> {
    Ok(semigroup_profile(xi, lambda, &[t], spec, mc)?[0])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GaussianBoundRow {
    pub t: f64,
    pub estimate: f64,
    pub stderr: f64,
    /// `T̂_t + 3σ`.
    pub upper: f64,
    /// `√(μ̂Λ₁ μ̂Λ₂) exp(−d²/2t)` with `d` the certified lower bound.
    pub bound: f64,
    /// `T̂_t − 3σ > bound`.
    pub violated: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianBoundReport {
    pub distance_lower_bound: f64,
    pub mass_1: f64,
    pub mass_2: f64,
    pub rows: Vec<GaussianBoundRow>,
    pub pass: bool,
}

/// `T_t(Λ₁, Λ₂) ≤ √(μΛ₁ μΛ₂) exp(−d_Υ(Λ₁, Λ₂)²/2t)` on a grid of times.
pub fn gaussian_bound_check(
    lambda_1: &EventSet,
    lambda_2: &EventSet,
    t_grid: &[f64],
    spec: &DiffusionSpec,
    mc: MonteCarlo,
) -> Result<GaussianBoundReport> {
    let d = super::certified_distance_lower_bound(lambda_1, lambda_2)?;
    let (order, sorted) = ascending_order(t_grid);
    let tally = tally_paths(lambda_2, lambda_1, &sorted, spec, mc, false)?;
    let n = mc.n_samples as f64;
    let (mass_1, mass_2) = (tally.lambda as f64 / n, tally.xi_at_start as f64 / n);
    let mut rows = vec![None; t_grid.len()];
    for (k, &i) in order.iter().enumerate() {
        let t = t_grid[i];
        let est = SemigroupEstimate::new(t, tally.joint[k], mc.n_samples as u64);
        let bound = (mass_1 * mass_2).sqrt() * (-d * d / (2.0 * t)).exp();
        rows[i] = Some(GaussianBoundRow {
            t,
            estimate: est.estimate,
            stderr: est.stderr,
            upper: est.estimate + 3.0 * est.stderr,
            bound,
            violated: est.estimate - 3.0 * est.stderr > bound,
        });
    }
    let rows: Vec<GaussianBoundRow> = rows.into_iter().map(|r| r.expect("every time filled")).collect();
    let pass = rows.iter().all(|r| !r.violated);
    Ok(GaussianBoundReport { distance_lower_bound: d, mass_1, mass_2, rows, pass })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VaradhanRow {
    pub t: f64,
    pub estimate: f64,
    pub hits: u64,
    /// `−2t log T̂_t`.
    pub value: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VaradhanReport {
    pub rows: Vec<VaradhanRow>,
    /// Least-squares extrapolation to `t = 0`.
    pub intercept: f64,
    pub intercept_stderr: f64,
    pub slope: f64,
    /// Smallest `d_Υ(γ₀, Ξ)²` over sampled `γ₀ ∈ Λ`, when `Ξ` has a closed-form distance.
    pub reference: Option<f64>,
    /// Whether `Ξ` is open, as the limit theorem requires.
    pub xi_open: bool,
}

/// The profile `t ↦ −2t log T̂_t(Ξ, Λ)` over a decreasing grid and its linear extrapolation.
pub fn varadhan_profile(
    xi: &EventSet,
    lambda: &EventSet,
    t_grid: &[f64],
    spec: &DiffusionSpec,
    mc: MonteCarlo,
) -> Result<VaradhanReport> {
    if t_grid.len() < 2 || t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("t_grid must be strictly decreasing with at least two points".into()));
    }
    let (order, sorted) = ascending_order(t_grid);
    let tally = tally_paths(xi, lambda, &sorted, spec, mc, true)?;
    let paths = mc.n_samples as u64;
    let mut rows = vec![None; t_grid.len()];
    for (k, &i) in order.iter().enumerate() {
        let t = t_grid[i];
        let hits = tally.joint[k];
        if hits < 10 {
            return Err(Error::InsufficientPaths { t, hits, paths });
        }
        let est = SemigroupEstimate::new(t, hits, paths);
        rows[i] = Some(VaradhanRow {
            t,
            estimate: est.estimate,
            hits,
            value: -2.0 * t * est.estimate.ln(),
            stderr: 2.0 * t * est.stderr / est.estimate,
        });
    }
    let rows: Vec<VaradhanRow> = rows.into_iter().map(|r| r.expect("every time filled")).collect();
    let ts: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let vs: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let ss: Vec<f64> = rows.iter().map(|r| r.stderr).collect();
    let fit = linear_fit(&ts, &vs, &ss);
    Ok(VaradhanReport {
        rows,
        intercept: fit.intercept,
        intercept_stderr: fit.intercept_stderr,
        slope: fit.slope,
        reference: tally.min_distance.map(|d| d * d),
        xi_open: xi.is_open(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CarreDuChampReport {
    /// `(t, E[(u(X_t) − u(γ))²]/t, stderr)`.
    pub rows: Vec<(f64, f64, f64)>,
    pub estimate: f64,
    pub estimate_stderr: f64,
}

/// Short-time variance ratio `E[(u(X_t) − u(γ))²]/t` from `γ`, extrapolated linearly to `t = 0`.
pub fn carre_du_champ<U>(
    u: U,
    gamma: &Configuration,
    t_grid: &[f64],
    spec: &DiffusionSpec,
    mc: MonteCarlo,
) -> Result<CarreDuChampReport>
where
    U: Fn(&Configuration) -> Result<f64> + Sync,
{
    if t_grid.len() < 2 || t_grid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidParameter("need at least two positive times".into()));
    }
    let t_max = t_grid.iter().cloned().fold(0.0, f64::max);
    let required = 3.0 * t_max.sqrt();
    let margin = gamma
        .atoms()
        .iter()
        .map(|a| spec.geometry.boundary_distance(a.point.coords()))
        .fold(f64::INFINITY, f64::min);
    if margin < required {
        return Err(Error::BoundaryContamination { margin, required });
    }
    let base = u(gamma)?;
    let (order, sorted) = ascending_order(t_grid);
    let parts = run_workers(mc.n_samples, mc.workers, mc.seed, |rng, count, _| -> Result<Vec<MeanAccumulator>> {
        let mut acc = vec![MeanAccumulator::new(); sorted.len()];
        for _ in 0..count {
            for (k, state) in simulate(gamma, spec, &sorted, rng)?.iter().enumerate() {
                let du = u(state)? - base;
                acc[k].push(du * du / sorted[k]);
            }
        }
        Ok(acc)
    });
    let parts = parts.into_iter().collect::<Result<Vec<_>>>()?;
    let mut rows = vec![(0.0, 0.0, 0.0); t_grid.len()];
    for (k, &i) in order.iter().enumerate() {
        let acc = MeanAccumulator::merged(parts.iter().map(|p| &p[k]));
        rows[i] = (t_grid[i], acc.mean(), acc.stderr());
    }
    let ts: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let vs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let ss: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let fit = linear_fit(&ts, &vs, &ss);
    Ok(CarreDuChampReport { rows, estimate: fit.intercept, estimate_stderr: fit.intercept_stderr })
}

pub fn carre_du_champ_mc(
    u: &CylinderFunction,
    gamma: &Configuration,
    t_grid: &[f64],
    spec: &DiffusionSpec,
    mc: MonteCarlo,
) -> Result<CarreDuChampReport> {
    carre_du_champ(|g| eval_cylinder(u, g), gamma, t_grid, spec, mc)
}

fn one() -> f64 {
    1.0
}

/// Built-in `d_Υ`-Lipschitz functions with known constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum LipschitzSpec {
    /// `scale · (ρ_{γ,U} ∧ cap)`, Lipschitz with constant `|scale|`.
    #[serde(rename = "rho_gamma_U")]
    RhoGammaU {
        gamma_ref: Configuration,
        window: Window,
        cap: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    #[serde(rename = "constant")]
    Constant { value: f64 },
}

impl LipschitzSpec {
    pub fn lip(&self) -> f64 {
        match self {
            LipschitzSpec::RhoGammaU { scale, .. } => scale.abs(),
            LipschitzSpec::Constant { .. } => 0.0,
        }
    }

    pub fn eval(&self, gamma: &Configuration) -> Result<f64> {
        match self {
            LipschitzSpec::RhoGammaU { gamma_ref, window, cap, scale } => {
                Ok(scale * rho_gamma_u(gamma, gamma_ref, window)?.min_with(*cap))
            }
            LipschitzSpec::Constant { value } => Ok(*value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RademacherReport {
    pub lip: f64,
    pub pairs_checked: usize,
    pub max_pair_ratio: f64,
    /// Every pair ratio, in sampling order.
    pub pair_ratios: Vec<f64>,
    pub carre_du_champ: Vec<f64>,
    pub max_carre_du_champ: f64,
    pub pass: bool,
}

/// Pairwise Lipschitz ratios on same-mass `μ`-pairs and short-time square-field estimates at
/// `μ`-sampled configurations.
#[allow(clippy::too_many_arguments)]
pub fn rademacher_check(
    u: &LipschitzSpec,
    spec: &DiffusionSpec,
    n_pairs: usize,
    n_configs: usize,
    t_grid: &[f64],
    paths_per_config: usize,
    seed: u64,
    workers: usize,
) -> Result<RademacherReport> {
    let lip = u.lip();
    let mut rng = worker_rng(seed, 0);
    let mut sampler = spec.model.sampler();
    let mut pending: HashMap<usize, Configuration> = HashMap::new();
    let mut ratios = Vec::with_capacity(n_pairs);
    let mut draws = 0usize;
    while ratios.len() < n_pairs {
        if draws > 100 * n_pairs.max(1) {
            return Err(Error::InvalidParameter("could not find enough same-mass pairs".into()));
        }
        draws += 1;
        let g = sampler.next(&mut rng)?;
        match pending.remove(&g.total_mass()) {
            Some(h) => {
                let d = d_upsilon(&g, &h)?.to_scalar();
                if d > 0.0 {
                    ratios.push((u.eval(&g)? - u.eval(&h)?).abs() / d);
                }
            }
            None => {
                pending.insert(g.total_mass(), g);
            }
        }
    }
    let max_pair_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let mut configs_rng = worker_rng(seed, 1);
    let mut config_sampler = spec.model.sampler();
    let mut cdc = Vec::with_capacity(n_configs);
    for i in 0..n_configs {
        let g = config_sampler.next(&mut configs_rng)?;
        let mc = MonteCarlo::new(paths_per_config, seed.wrapping_add(1 + i as u64), workers);
        cdc.push(carre_du_champ(|x| u.eval(x), &g, t_grid, spec, mc)?.estimate);
    }
    let max_carre_du_champ = cdc.iter().cloned().fold(0.0, f64::max);
    let pass = max_pair_ratio <= lip + 1e-9 && max_carre_du_champ <= lip * lip * 1.1;
    Ok(RademacherReport {
        lip,
        pairs_checked: ratios.len(),
        max_pair_ratio,
        pair_ratios: ratios,
        carre_du_champ: cdc,
        max_carre_du_champ,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WindowTest {
    pub window: Window,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationarityReport {
    pub tests: Vec<WindowTest>,
    /// `0.01 / number of windows`.
    pub threshold: f64,
    pub pass: bool,
}

/// Chi-square homogeneity of window counts at time 0 and at `horizon` across `n_chains` runs.
pub fn stationarity_test(
    spec: &DiffusionSpec,
    horizon: f64,
    windows: &[Window],
    n_chains: usize,
    seed: u64,
    workers: usize,
) -> Result<StationarityReport> {
    if windows.is_empty() {
        return Err(Error::InvalidParameter("no statistics windows".into()));
    }
    let times: Vec<f64> = if horizon > 0.0 { vec![horizon] } else { Vec::new() };
    let parts = run_workers(n_chains, workers, seed, |rng, count, _| -> Result<Vec<(Vec<usize>, Vec<usize>)>> {
        let mut sampler = spec.model.sampler();
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let g0 = sampler.next(rng)?;
            let end = match times.is_empty() {
                true => g0.clone(),
                false => simulate(&g0, spec, &times, rng)?.pop().expect("one time"),
            };
            let c0 = windows.iter().map(|w| g0.count(w)).collect::<Result<Vec<_>>>()?;
            let c1 = windows.iter().map(|w| end.count(w)).collect::<Result<Vec<_>>>()?;
            out.push((c0, c1));
        }
        Ok(out)
    });
    let mut counts = Vec::with_capacity(n_chains);
    for p in parts {
        counts.extend(p?);
    }
    let threshold = 0.01 / windows.len() as f64;
    let mut tests = Vec::with_capacity(windows.len());
    for (k, w) in windows.iter().enumerate() {
        let max = counts.iter().map(|(a, b)| a[k].max(b[k])).max().unwrap_or(0);
        let (mut h0, mut h1) = (vec![0u64; max + 1], vec![0u64; max + 1]);
        for (a, b) in &counts {
            h0[a[k]] += 1;
            h1[b[k]] += 1;
        }
        let t = chi_square_homogeneity(&h0, &h1);
        tests.push(WindowTest { window: w.clone(), statistic: t.statistic, df: t.df, p_value: t.p_value });
    }
    let pass = tests.iter().all(|t| t.p_value > threshold);
    Ok(StationarityReport { tests, threshold, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::Geometry;
    use crate::samplers::{IntensityMeasure, PointProcessModel};
    use crate::CountMode;

    fn free_line(window: Window, rate: f64, geometry: Geometry, dt: f64, horizon: f64) -> DiffusionSpec {
        let m = IntensityMeasure::uniform(window, rate).unwrap();
        DiffusionSpec::new(PointProcessModel::poisson(m), geometry, dt, horizon).unwrap()
    }

    #[test]
    fn whole_space_is_conserved() {
        let spec = free_line(
            Window::interval(0.0, 1.0).unwrap(),
            2.0,
            Geometry::torus(vec![1.0]).unwrap(),
            1e-3,
            0.1,
        );
        let e = semigroup_estimate(&EventSet::All, &EventSet::All, 0.05, &spec, MonteCarlo::new(200, 1, 2)).unwrap();
        assert_eq!((e.estimate, e.stderr), (1.0, 0.0));
    }

    #[test]
    fn varadhan_requires_hits() {
        let w = Window::interval(-0.01, 0.01).unwrap();
        let spec = free_line(w, 1.0, Geometry::reflecting(Window::interval(-3.0, 3.0).unwrap()).unwrap(), 1e-4, 0.01);
        let xi = EventSet::Concentration { window: Window::interval(2.5, 3.0).unwrap(), n: 1, mode: CountMode::Geq };
        let lam = EventSet::Mass { n: 1, mode: CountMode::Eq };
        let r = varadhan_profile(&xi, &lam, &[0.01, 0.005], &spec, MonteCarlo::new(1000, 1, 1));
        assert!(matches!(r, Err(Error::InsufficientPaths { .. })));
    }

    #[test]
    fn constant_function_has_zero_field() {
        let spec = free_line(
            Window::interval(0.0, 1.0).unwrap(),
            2.0,
            Geometry::reflecting(Window::interval(-1.0, 2.0).unwrap()).unwrap(),
            1e-4,
            0.01,
        );
        let g = Configuration::from_reals(&[0.5]).unwrap();
        let r = carre_du_champ_mc(&CylinderFunction::constant(1.0), &g, &[0.004, 0.002], &spec, MonteCarlo::new(50, 1, 1))
            .unwrap();
        assert_eq!(r.estimate, 0.0);
        let near = Configuration::from_reals(&[1.95]).unwrap();
        let e = carre_du_champ_mc(&CylinderFunction::constant(1.0), &near, &[0.004, 0.002], &spec, MonteCarlo::new(5, 1, 1));
        assert!(matches!(e, Err(Error::BoundaryContamination { .. })));
    }

    #[test]
    fn zero_horizon_is_identical() {
        let spec = free_line(
            Window::interval(0.0, 1.0).unwrap(),
            3.0,
            Geometry::torus(vec![1.0]).unwrap(),
            1e-3,
            1.0,
        );
        let w = vec![Window::interval(0.0, 0.5).unwrap()];
        let r = stationarity_test(&spec, 0.0, &w, 200, 3, 2).unwrap();
        assert_eq!(r.tests[0].statistic, 0.0);
        assert!(r.pass);
    }
}
