use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use upsilon::cylinder::{square_field_lifted, CylinderFunction, OuterFunction, SmoothTestFunction};
use upsilon::diffusion::{
    carre_du_champ_mc, gaussian_bound_check, rademacher_check, semigroup_estimate, simulate, stationarity_test,
    varadhan_profile, DiffusionSpec, EventSet, Geometry, LipschitzSpec,
};
use upsilon::samplers::{GibbsPotentials, IntensityMeasure, McmcParams, MonteCarlo, OnePointPotential, PairPotential, PointProcessModel};
use upsilon::stats::chi_square_gof;
use upsilon::{Configuration, CountMode, Window};

fn interval(a: f64, b: f64) -> Window {
    Window::interval(a, b).unwrap()
}

fn poisson(window: Window, rate: f64) -> PointProcessModel {
    PointProcessModel::poisson(IntensityMeasure::uniform(window, rate).unwrap())
}

fn conc(a: f64, b: f64, n: usize, mode: CountMode) -> EventSet {
    EventSet::Concentration { window: interval(a, b), n, mode }
}

#[test]
fn semigroup_matches_heat_kernel() {
    let (a, t) = (0.1, 0.25);
    let spec = DiffusionSpec::new(poisson(interval(0.0, a), 10.0), Geometry::reflecting(interval(-10.0, 10.0)).unwrap(), 1e-3, t).unwrap();
    let lambda = EventSet::Mass { n: 1, mode: CountMode::Eq };
    let xi = conc(1.0, 1.1, 1, CountMode::Eq);
    let est = semigroup_estimate(&xi, &lambda, t, &spec, MonteCarlo::new(200_000, 5, 2)).unwrap();
    let phi = Normal::new(0.0, t.sqrt()).unwrap();
    let nodes = 2000;
    let inner: f64 = (0..nodes)
        .map(|i| {
            let x = a * (i as f64 + 0.5) / nodes as f64;
            phi.cdf(1.1 - x) - phi.cdf(1.0 - x)
        })
        .sum::<f64>()
        / nodes as f64;
    let exact = 1.0 * (-1.0f64).exp() * inner;
    assert!((est.estimate - exact).abs() <= 3.0 * est.stderr, "{est:?} vs {exact}");
}

#[test]
fn whole_space_and_short_time_limits() {
    let spec = DiffusionSpec::new(poisson(interval(0.0, 1.0), 3.0), Geometry::torus(vec![1.0]).unwrap(), 1e-4, 0.01).unwrap();
    let all = semigroup_estimate(&EventSet::All, &EventSet::All, 0.01, &spec, MonteCarlo::new(500, 1, 1)).unwrap();
    assert_eq!((all.estimate, all.stderr), (1.0, 0.0));
    let lam = conc(0.2, 0.6, 1, CountMode::Geq);
    let n = 20_000;
    let short = semigroup_estimate(&lam, &lam, 1e-4 * 2.0, &spec, MonteCarlo::new(n, 2, 2)).unwrap();
    let mass = 1.0 - (-1.2f64).exp();
    assert!((short.estimate - mass).abs() <= 3.0 * (mass * (1.0 - mass) / n as f64).sqrt() + 0.01, "{short:?}");
}

fn symmetric(spec: &DiffusionSpec, xi: &EventSet, lam: &EventSet, t: f64, n: usize) {
    let ab = semigroup_estimate(xi, lam, t, spec, MonteCarlo::new(n, 31, 2)).unwrap();
    let ba = semigroup_estimate(lam, xi, t, spec, MonteCarlo::new(n, 32, 2)).unwrap();
    let sd = (ab.stderr.powi(2) + ba.stderr.powi(2)).sqrt();
    assert!((ab.estimate - ba.estimate).abs() <= 3.0 * sd, "{ab:?} vs {ba:?}");
}

#[test]
fn semigroup_is_symmetric() {
    let lam = conc(0.0, 0.3, 1, CountMode::Eq);
    let xi = conc(0.5, 0.9, 2, CountMode::Geq);
    let free = DiffusionSpec::new(poisson(interval(0.0, 1.0), 3.0), Geometry::reflecting(interval(0.0, 1.0)).unwrap(), 1e-3, 0.2).unwrap();
    symmetric(&free, &xi, &lam, 0.1, 40_000);
    let m = IntensityMeasure::uniform(interval(0.0, 1.0), 3.0).unwrap();
    let pot = GibbsPotentials::new(OnePointPotential::cosine(1.0, 1.0), PairPotential::zero());
    let gibbs = PointProcessModel::gibbs(m, pot, McmcParams::default()).unwrap();
    let spec = DiffusionSpec::new(gibbs, Geometry::torus(vec![1.0]).unwrap(), 1e-3, 0.2).unwrap();
    symmetric(&spec, &xi, &lam, 0.1, 10_000);
}

#[test]
fn free_torus_increments_are_gaussian() {
    let dt = 1e-3;
    let spec = DiffusionSpec::new(poisson(interval(0.0, 1.0), 1.0), Geometry::torus(vec![100.0]).unwrap(), dt, 0.1).unwrap();
    let g = Configuration::from_reals(&[50.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let std = Normal::new(0.0, 1.0).unwrap();
    let edges: Vec<f64> = (1..10).map(|k| std.inverse_cdf(k as f64 / 10.0)).collect();
    let mut hist = vec![0u64; 10];
    let mut state = g;
    for _ in 0..20_000 {
        let next = simulate(&state, &spec, &[dt], &mut rng).unwrap().pop().unwrap();
        let z = (next.atoms()[0].point.coords()[0] - state.atoms()[0].point.coords()[0]) / dt.sqrt();
        hist[edges.iter().filter(|e| **e < z).count()] += 1;
        state = next;
    }
    assert!(chi_square_gof(&hist, &[0.1; 10]).p_value > 0.01);
}

#[test]
fn carre_du_champ_one_particle() {
    let f = SmoothTestFunction::poly_bump(vec![0.0], 1.5, 1.0).unwrap();
    let u = CylinderFunction::new(OuterFunction::identity(), vec![f.clone()]).unwrap();
    let spec = DiffusionSpec::new(poisson(interval(-1.0, 1.0), 1.0), Geometry::reflecting(interval(-5.0, 5.0)).unwrap(), 2e-5, 4e-3).unwrap();
    let g = Configuration::from_reals(&[0.6]).unwrap();
    let r = carre_du_champ_mc(&u, &g, &[4e-3, 2e-3, 1e-3], &spec, MonteCarlo::new(20_000, 3, 2)).unwrap();
    let grad = f.gradient_at(&[0.6])[0];
    assert!((r.estimate - grad * grad).abs() <= 0.1 * grad * grad, "{r:?} vs {}", grad * grad);
}

#[test]
fn carre_du_champ_matches_lifted_field() {
    let spec = DiffusionSpec::new(poisson(Window::cube(2, -1.0, 1.0).unwrap(), 1.0), Geometry::reflecting(Window::cube(2, -5.0, 5.0).unwrap()).unwrap(), 2e-5, 4e-3).unwrap();
    let mut checked = 0;
    let mut seed = 0;
    while checked < 20 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let k = rng.random_range(1..=2);
        let inner = (0..k)
            .map(|_| SmoothTestFunction::gaussian_bump(vec![rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)], 0.7, 2.0, 1.0).unwrap())
            .collect();
        let coeffs = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
        let u = CylinderFunction::new(OuterFunction::arctan(coeffs).unwrap(), inner).unwrap();
        let pts: Vec<f64> = (0..rng.random_range(1..4) * 2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let g = Configuration::from_points(2, pts.chunks(2).map(|c| upsilon::Point::new(c.to_vec()).unwrap())).unwrap();
        let exact = square_field_lifted(&u, &u, &g).unwrap();
        if exact < 0.05 {
            continue;
        }
        let r = carre_du_champ_mc(&u, &g, &[4e-3, 2e-3, 1e-3], &spec, MonteCarlo::new(20_000, seed, 2)).unwrap();
        assert!((r.estimate - exact).abs() <= 0.1 * exact, "{r:?} vs {exact}");
        checked += 1;
    }
}

#[test]
fn varadhan_profile_vanishes_when_lambda_is_inside_xi() {
    let spec = DiffusionSpec::new(poisson(interval(0.0, 0.1), 1.0), Geometry::reflecting(interval(-5.0, 5.0)).unwrap(), 1e-4, 0.04).unwrap();
    let lam = conc(0.0, 0.1, 1, CountMode::Eq);
    let xi = conc(-0.5, 0.6, 1, CountMode::Geq);
    let r = varadhan_profile(&xi, &lam, &[0.04, 0.03, 0.02, 0.01], &spec, MonteCarlo::new(50_000, 4, 2)).unwrap();
    assert!(r.xi_open);
    assert_eq!(r.reference, Some(0.0));
    assert!(r.intercept.abs() <= 3.0 * r.intercept_stderr + 1e-3, "{r:?}");
}

#[test]
fn gaussian_bound_small_battery() {
    let spec = DiffusionSpec::new(poisson(interval(0.0, 1.0), 1.0), Geometry::reflecting(interval(0.0, 1.0)).unwrap(), 1e-3, 0.5).unwrap();
    let ball = |x: f64| EventSet::DistanceBall { center: Configuration::from_reals(&[x]).unwrap(), radius: 0.1 };
    let r = gaussian_bound_check(&ball(0.3), &ball(0.7), &[0.01, 0.05, 0.1, 0.5], &spec, MonteCarlo::new(20_000, 8, 2)).unwrap();
    assert!((r.distance_lower_bound - 0.2).abs() < 1e-12);
    assert!(r.pass, "{r:?}");
    let u = interval(0.0, 1.0);
    let empty = EventSet::LambdaSet { gamma_ref: Configuration::empty(1), window: u.clone() };
    let r = gaussian_bound_check(&empty, &empty.clone(), &[0.05, 0.5], &spec, MonteCarlo::new(20_000, 9, 2)).unwrap();
    assert_eq!(r.distance_lower_bound, 0.0);
    assert!(r.pass);
    assert!(gaussian_bound_check(&empty, &EventSet::All, &[0.05], &spec, MonteCarlo::new(10, 1, 1)).is_err());
}

#[test]
fn rademacher_for_rho() {
    let spec = DiffusionSpec::new(poisson(interval(0.0, 1.0), 2.0), Geometry::reflecting(interval(-3.0, 4.0)).unwrap(), 2e-5, 4e-3).unwrap();
    let u = LipschitzSpec::RhoGammaU { gamma_ref: Configuration::from_reals(&[0.5]).unwrap(), window: interval(0.2, 0.8), cap: 1.0, scale: 1.0 };
    let r = rademacher_check(&u, &spec, 300, 10, &[4e-3, 2e-3, 1e-3], 2_000, 5, 2).unwrap();
    assert!(r.pass, "{r:?}");
    let scaled = LipschitzSpec::RhoGammaU { gamma_ref: Configuration::from_reals(&[0.5]).unwrap(), window: interval(0.2, 0.8), cap: 1.0, scale: 2.0 };
    let s = rademacher_check(&scaled, &spec, 300, 2, &[4e-3, 2e-3, 1e-3], 200, 5, 2).unwrap();
    for (a, b) in r.pair_ratios.iter().zip(&s.pair_ratios) {
        assert_eq!((2.0 * a).to_bits(), b.to_bits());
    }
    let c = rademacher_check(&LipschitzSpec::Constant { value: 3.0 }, &spec, 50, 2, &[4e-3, 2e-3], 50, 5, 1).unwrap();
    assert_eq!((c.max_pair_ratio, c.max_carre_du_champ), (0.0, 0.0));
}

#[test]
fn torus_invariance_and_negative_control() {
    let spec = DiffusionSpec::new(poisson(interval(0.0, 1.0), 5.0), Geometry::torus(vec![1.0]).unwrap(), 1e-3, 1.0).unwrap();
    let windows = vec![interval(0.375, 0.625), interval(0.0, 0.125), interval(0.0, 1.0)];
    assert!(stationarity_test(&spec, 1.0, &windows, 1000, 1, 2).unwrap().pass);
    let m = IntensityMeasure::uniform(interval(0.0, 1.0), 5.0).unwrap();
    let pot = GibbsPotentials::new(OnePointPotential::cosine(2.0, 1.0), PairPotential::zero());
    let gibbs = PointProcessModel::gibbs(m, pot, McmcParams::default()).unwrap();
    let right = DiffusionSpec::new(gibbs, Geometry::torus(vec![1.0]).unwrap(), 1e-3, 1.0).unwrap();
    let wrong = right.clone().with_reversed_drift();
    let bad = stationarity_test(&wrong, 1.0, &windows, 1000, 2, 2).unwrap();
    assert!(!bad.pass, "{bad:?}");
}
