//! The extended L²-transportation distance between finite configurations.
//!
//! Between configurations of equal total mass the distance is the square root of the minimal
//! total squared displacement over all bijections of expanded atoms; between configurations of
//! different mass no coupling exists and the distance is [`ExtendedDistance::Infinite`].

pub mod assignment;

use std::cmp::Ordering;
use std::fmt;

use itertools::Itertools;

use crate::error::{Error, Result};
use crate::point_config::{Configuration, LabeledSequence, Point, Window};
use crate::scalar::Scalar;

/// Mass cap of [`brute_force_distance`] when none is given.
pub const DEFAULT_ORACLE_CAP: usize = 8;

/// A distance value in `[0, +∞]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtendedDistance<S> {
    Finite(S),
    Infinite,
}

impl<S: Scalar> ExtendedDistance<S> {
    pub fn is_finite(&self) -> bool {
        matches!(self, ExtendedDistance::Finite(_))
    }

    pub fn finite(&self) -> Option<S> {
        match *self {
            ExtendedDistance::Finite(d) => Some(d),
            ExtendedDistance::Infinite => None,
        }
    }

    /// The value as a float, with `+∞` for [`ExtendedDistance::Infinite`].
    pub fn to_scalar(&self) -> S {
        self.finite().unwrap_or_else(S::infinity)
    }

    /// `self ∧ cap`.
    pub fn min_with(&self, cap: S) -> S {
        self.finite().map_or(cap, |d| d.min(cap))
    }

    fn from_squared(cost: S) -> Self {
        ExtendedDistance::Finite(cost.max(S::zero()).sqrt())
    }
}

impl<S: Scalar> std::ops::Add for ExtendedDistance<S> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (ExtendedDistance::Finite(a), ExtendedDistance::Finite(b)) => ExtendedDistance::Finite(a + b),
            _ => ExtendedDistance::Infinite,
        }
    }
}

impl<S: Scalar> PartialOrd for ExtendedDistance<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtendedDistance::*;
        match (self, other) {
            (Finite(a), Finite(b)) => a.partial_cmp(b),
            (Finite(_), Infinite) => Some(Ordering::Less),
            (Infinite, Finite(_)) => Some(Ordering::Greater),
            (Infinite, Infinite) => Some(Ordering::Equal),
        }
    }
}

impl<S: Scalar> fmt::Display for ExtendedDistance<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtendedDistance::Finite(d) => write!(f, "{d}"),
            ExtendedDistance::Infinite => f.write_str("inf"),
        }
    }
}

/// A bijective pairing of expanded atoms, with its total squared displacement.
#[derive(Clone, Debug, PartialEq)]
pub struct Matching<S> {
    /// `(index into γ's expanded atoms, index into η's expanded atoms)`, sorted by the first.
    pub pairs: Vec<(usize, usize)>,
    pub cost: S,
}

impl<S: Scalar> Matching<S> {
    pub fn distance(&self) -> S {
        self.cost.max(S::zero()).sqrt()
    }
}

fn check_dims<S: Scalar>(a: &Configuration<S>, b: &Configuration<S>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

fn cost_matrix<S: Scalar>(xs: &[&Point<S>], ys: &[&Point<S>]) -> Vec<S> {
    xs.iter().flat_map(|x| ys.iter().map(move |y| x.squared_distance(y))).collect()
}

fn match_points<S: Scalar>(xs: &[&Point<S>], ys: &[&Point<S>]) -> Matching<S> {
    let n = xs.len();
    let costs = cost_matrix(xs, ys);
    let assignment = assignment::solve(&costs, n);
    let cost = assignment::assignment_cost(&costs, n, &assignment);
    Matching { pairs: assignment.into_iter().enumerate().collect(), cost }
}

/// An optimal matching between two configurations of equal mass.
pub fn optimal_matching<S: Scalar>(gamma: &Configuration<S>, eta: &Configuration<S>) -> Result<Matching<S>> {
    check_dims(gamma, eta)?;
    let (left, right) = (gamma.total_mass(), eta.total_mass());
    if left != right {
        return Err(Error::SectorMismatch { left, right });
    }
    Ok(match_points(&gamma.expanded(), &eta.expanded()))
}

/// `d_Υ(γ, η)`: infinite across sectors, otherwise the optimal assignment cost rooted.
pub fn d_upsilon<S: Scalar>(gamma: &Configuration<S>, eta: &Configuration<S>) -> Result<ExtendedDistance<S>> {
    match optimal_matching(gamma, eta) {
        Ok(m) => Ok(ExtendedDistance::from_squared(m.cost)),
        Err(Error::SectorMismatch { .. }) => Ok(ExtendedDistance::Infinite),
        Err(e) => Err(e),
    }
}

/// `d_Υ` by explicit enumeration of all bijections. Used as an oracle.
pub fn brute_force_distance<S: Scalar>(
    gamma: &Configuration<S>,
    eta: &Configuration<S>,
    cap: usize,
) -> Result<ExtendedDistance<S>> {
    check_dims(gamma, eta)?;
    let mass = gamma.total_mass().max(eta.total_mass());
    if mass > cap {
        return Err(Error::OracleTooLarge { mass, cap });
    }
    if gamma.total_mass() != eta.total_mass() {
        return Ok(ExtendedDistance::Infinite);
    }
    let (xs, ys) = (gamma.expanded(), eta.expanded());
    let n = xs.len();
    let best = (0..n)
        .permutations(n)
        .map(|sigma| sigma.iter().enumerate().map(|(i, &j)| xs[i].squared_distance(ys[j])).sum::<S>())
        .fold(S::infinity(), S::min);
    Ok(ExtendedDistance::from_squared(if n == 0 { S::zero() } else { best }))
}

/// Reorder `η` along an optimal matching against the canonical labeling of `γ` around `anchor`.
///
/// Returns `(x, y)` with `x = canonical_label(γ)` and `Σ d(x_p, y_p)² = d_Υ(γ, η)²`.
pub fn matched_labeling<S: Scalar>(
    gamma: &Configuration<S>,
    eta: &Configuration<S>,
    anchor: &Point<S>,
) -> Result<(LabeledSequence<S>, LabeledSequence<S>)> {
    check_dims(gamma, eta)?;
    let (left, right) = (gamma.total_mass(), eta.total_mass());
    if left != right {
        return Err(Error::SectorMismatch { left, right });
    }
    let x = gamma.canonical_label(anchor)?;
    let ys = eta.expanded();
    let m = match_points(&x.points().iter().collect::<Vec<_>>(), &ys);
    let y = LabeledSequence::new(eta.dim(), m.pairs.iter().map(|&(_, j)| ys[j].clone()).collect())?;
    Ok((x, y))
}

/// `ρ_{γ,U}(η) = d_Υ(η, Λ_{γ,U})` with `Λ_{γ,U} = {η' : η'_U = γ_U}` and `U` the open interior of `window`.
///
/// Each expanded atom of `η` is sent either to one of the fixed atoms of `γ_U` or to the closed
/// complement of `U`, the latter at the cost of its squared distance to `U^∁`.
pub fn rho_gamma_u<S: Scalar>(
    eta: &Configuration<S>,
    gamma: &Configuration<S>,
    window: &Window<S>,
) -> Result<ExtendedDistance<S>> {
    check_dims(eta, gamma)?;
    if window.dim() != eta.dim() {
        return Err(Error::DimensionMismatch { expected: eta.dim(), found: window.dim() });
    }
    let targets = gamma.restrict_interior(window)?;
    let targets = targets.expanded();
    let sources = eta.expanded();
    let (n, k) = (sources.len(), targets.len());
    if n < k {
        return Ok(ExtendedDistance::Infinite);
    }
    let mut costs = Vec::with_capacity(n * n);
    for x in &sources {
        costs.extend(targets.iter().map(|y| x.squared_distance(y)));
        let escape = window.distance_to_complement(x.coords());
        costs.extend(std::iter::repeat_n(escape * escape, n - k));
    }
    let assignment = assignment::solve(&costs, n);
    Ok(ExtendedDistance::from_squared(assignment::assignment_cost(&costs, n, &assignment)))
}

/// A lower bound on `d_Υ(Λ_{γ,U}, Λ_{η,U})`.
///
/// In any coupling of `ζ ∈ Λ_{γ,U}` with `ξ ∈ Λ_{η,U}`, every atom of `γ_U` is paired with an atom
/// of `η_U` or with an atom outside `U`, and likewise for `η_U`. Relaxing the outside atoms to
/// free sinks on `U^∁` gives an assignment problem of size `|γ_U| + |η_U|`.
pub fn lambda_sets_distance_lower_bound<S: Scalar>(
    gamma: &Configuration<S>,
    eta: &Configuration<S>,
    window: &Window<S>,
) -> Result<S> {
    check_dims(gamma, eta)?;
    let a = gamma.restrict_interior(window)?;
    let b = eta.restrict_interior(window)?;
    let (xs, ys) = (a.expanded(), b.expanded());
    let (p, q) = (xs.len(), ys.len());
    let n = p + q;
    if n == 0 {
        return Ok(S::zero());
    }
    let escape = |x: &Point<S>| {
        let d = window.distance_to_complement(x.coords());
        d * d
    };
    let mut costs = Vec::with_capacity(n * n);
    for x in &xs {
        costs.extend(ys.iter().map(|y| x.squared_distance(y)));
        costs.extend(std::iter::repeat_n(escape(x), p));
    }
    for _ in 0..q {
        costs.extend(ys.iter().map(|y| escape(y)));
        costs.extend(std::iter::repeat_n(S::zero(), p));
    }
    let assignment = assignment::solve(&costs, n);
    Ok(assignment::assignment_cost(&costs, n, &assignment).max(S::zero()).sqrt())
}

/// Which constrained McShane extension to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McShaneSide {
    /// `sup_A f ∧ inf_a (f(a) + L d(x, a))`
    Upper,
    /// `inf_A f ∨ sup_a (f(a) - L d(x, a))`
    Lower,
}

/// Constrained McShane extension of finitely many samples `(a, f(a))` with Lipschitz constant `lip`.
///
/// Sample pairs at infinite distance impose no constraint; terms at infinite distance from the
/// query drop out of the inner infimum (resp. supremum).
pub fn mcshane_extend<S: Scalar>(
    samples: &[(Configuration<S>, S)],
    lip: S,
    query: &Configuration<S>,
    side: McShaneSide,
) -> Result<S> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("McShane extension needs at least one sample".into()));
    }
    if !(lip > S::zero()) {
        return Err(Error::InvalidParameter("Lipschitz constant must be positive".into()));
    }
    let scale = samples.iter().map(|(_, v)| v.abs()).fold(S::one(), S::max);
    let tol = S::tolerance() * scale;
    for ((a, fa), (b, fb)) in samples.iter().tuple_combinations() {
        if let Some(d) = d_upsilon(a, b)?.finite() {
            if (*fa - *fb).abs() > lip * d + tol {
                return Err(Error::NotLipschitzOnA { a: fa.as_f64(), b: fb.as_f64(), d: d.as_f64(), lip: lip.as_f64() });
            }
        }
    }
    let values = samples.iter().map(|(_, v)| *v);
    let sup = values.clone().fold(S::neg_infinity(), S::max);
    let inf = values.fold(S::infinity(), S::min);
    let mut value = match side {
        McShaneSide::Upper => sup,
        McShaneSide::Lower => inf,
    };
    for (a, fa) in samples {
        if let Some(d) = d_upsilon(query, a)?.finite() {
            value = match side {
                McShaneSide::Upper => value.min(*fa + lip * d),
                McShaneSide::Lower => value.max(*fa - lip * d),
            };
        }
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reals(xs: &[f64]) -> Configuration<f64> {
        Configuration::from_reals(xs).unwrap()
    }

    fn plane(pts: &[[f64; 2]]) -> Configuration<f64> {
        Configuration::from_points(2, pts.iter().map(|p| Point::new(p.to_vec()).unwrap())).unwrap()
    }

    #[test]
    fn cross_sector_is_infinite() {
        let g = Configuration::from_atoms(1, [(Point::from(0.0), 2)]).unwrap();
        let e = Configuration::from_atoms(1, [(Point::from(1.0), 3)]).unwrap();
        assert_eq!(d_upsilon(&g, &e).unwrap(), ExtendedDistance::Infinite);
        assert_eq!(optimal_matching(&g, &e), Err(Error::SectorMismatch { left: 2, right: 3 }));
    }

    #[test]
    fn self_distance_zero() {
        let g = reals(&[0.3, -1.0, 0.3, 7.0]);
        assert_eq!(d_upsilon(&g, &g).unwrap(), ExtendedDistance::Finite(0.0));
    }

    #[test]
    fn two_point_line_example() {
        // permutations cost 1+1 = 2 and 4+4 = 8
        let g = reals(&[0.0, 3.0]);
        let e = reals(&[1.0, 2.0]);
        let d = d_upsilon(&g, &e).unwrap().finite().unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        let m = optimal_matching(&g, &e).unwrap();
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(m.cost, 2.0);
    }

    #[test]
    fn identity_matching() {
        let g = reals(&[0.0, 1.0]);
        let m = optimal_matching(&g, &g).unwrap();
        assert_eq!(m.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(m.cost, 0.0);
    }

    #[test]
    fn brute_force_examples() {
        let empty = Configuration::<f64>::empty(2);
        assert_eq!(brute_force_distance(&empty, &empty, 8).unwrap(), ExtendedDistance::Finite(0.0));
        assert_eq!(
            brute_force_distance(&reals(&[0.0]), &reals(&[0.0, 1.0]), 8).unwrap(),
            ExtendedDistance::Infinite
        );
        // costs 1+1 = 2 and 2+2 = 4
        let g = plane(&[[0.0, 0.0], [1.0, 0.0]]);
        let e = plane(&[[0.0, 1.0], [1.0, 1.0]]);
        let d = brute_force_distance(&g, &e, 8).unwrap().finite().unwrap();
        assert!((d - 2f64.sqrt()).abs() < 1e-15);
        let big = reals(&[0.0; 9].iter().enumerate().map(|(i, _)| i as f64).collect::<Vec<_>>());
        assert_eq!(
            brute_force_distance(&big, &big, 8),
            Err(Error::OracleTooLarge { mass: 9, cap: 8 })
        );
    }

    #[test]
    fn dimension_mismatch() {
        let g = reals(&[0.0]);
        let e = plane(&[[0.0, 0.0]]);
        assert!(matches!(d_upsilon(&g, &e), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn rho_examples() {
        let u = Window::interval(-2.0, 2.0).unwrap();
        // ηX = 1 < γU = 2
        assert_eq!(rho_gamma_u(&reals(&[0.0]), &reals(&[0.0, 1.0]), &u).unwrap(), ExtendedDistance::Infinite);
        // η already agrees with γ on U; the extra atom of η sits outside U
        let g = reals(&[0.5, 5.0]);
        let e = reals(&[0.5, 9.0]);
        assert_eq!(rho_gamma_u(&e, &g, &u).unwrap(), ExtendedDistance::Finite(0.0));
        // move 1 -> 0 costs 1, escape 1 -> 2 costs 1
        let d = rho_gamma_u(&reals(&[1.0]), &reals(&[0.0]), &u).unwrap().finite().unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        // escape is strictly better here: 1.9 -> 2 costs 0.01
        let d = rho_gamma_u(&reals(&[0.0, 1.9]), &reals(&[0.0]), &u).unwrap().finite().unwrap();
        assert!((d - 0.1).abs() < 1e-12);
    }

    #[test]
    fn rho_empty_target_is_escape_distance() {
        let u = Window::ball(Point::new(vec![0.0, 0.0]).unwrap(), 1.0).unwrap();
        let e = plane(&[[0.0, 0.25], [3.0, 3.0]]);
        let d = rho_gamma_u(&e, &Configuration::empty(2), &u).unwrap().finite().unwrap();
        assert!((d - 0.75).abs() < 1e-15);
    }

    #[test]
    fn mcshane_examples() {
        let samples = vec![(reals(&[0.0]), 0.0), (reals(&[4.0]), 2.0)];
        let q = reals(&[1.0]);
        assert!((mcshane_extend(&samples, 1.0, &q, McShaneSide::Upper).unwrap() - 1.0).abs() < 1e-15);
        // at a sample point both extensions reproduce the sample
        for (a, fa) in &samples {
            assert_eq!(mcshane_extend(&samples, 1.0, a, McShaneSide::Upper).unwrap(), *fa);
            assert_eq!(mcshane_extend(&samples, 1.0, a, McShaneSide::Lower).unwrap(), *fa);
        }
        let single = vec![(reals(&[0.0]), 0.0)];
        assert_eq!(mcshane_extend(&single, 1.0, &reals(&[2.0]), McShaneSide::Upper).unwrap(), 0.0);
    }

    #[test]
    fn mcshane_rejects_non_lipschitz_samples() {
        let samples = vec![(reals(&[0.0]), 0.0), (reals(&[1.0]), 5.0)];
        assert!(matches!(
            mcshane_extend(&samples, 1.0, &reals(&[0.5]), McShaneSide::Upper),
            Err(Error::NotLipschitzOnA { .. })
        ));
    }

    #[test]
    fn mcshane_infinite_distance_query() {
        let samples = vec![(reals(&[0.0]), -1.0), (reals(&[4.0]), 2.0)];
        let far = reals(&[0.0, 1.0]);
        assert_eq!(mcshane_extend(&samples, 1.0, &far, McShaneSide::Upper).unwrap(), 2.0);
        assert_eq!(mcshane_extend(&samples, 1.0, &far, McShaneSide::Lower).unwrap(), -1.0);
    }

    #[test]
    fn extended_distance_arithmetic() {
        let a = ExtendedDistance::Finite(1.0f64);
        assert_eq!(a + ExtendedDistance::Finite(2.0), ExtendedDistance::Finite(3.0));
        assert_eq!(a + ExtendedDistance::Infinite, ExtendedDistance::Infinite);
        assert!(a < ExtendedDistance::Infinite);
        assert_eq!(ExtendedDistance::<f64>::Infinite.to_string(), "inf");
        assert_eq!(ExtendedDistance::<f64>::Infinite.min_with(1.5), 1.5);
    }

    #[test]
    fn f32_distance() {
        let g = Configuration::<f32>::from_reals(&[0.0, 3.0]).unwrap();
        let e = Configuration::<f32>::from_reals(&[1.0, 2.0]).unwrap();
        let d = d_upsilon(&g, &e).unwrap().finite().unwrap();
        assert!((d - 2f32.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn lambda_lower_bound() {
        let u = Window::interval(-2.0, 2.0).unwrap();
        let g = Configuration::from_reals(&[0.0]).unwrap();
        let e = Configuration::from_reals(&[0.5]).unwrap();
        // moving 0 to 0.5 beats pushing both out of U
        assert!((lambda_sets_distance_lower_bound(&g, &e, &u).unwrap() - 0.5f64).abs() < 1e-12);
        let far = Configuration::from_reals(&[1.9]).unwrap();
        let lb = lambda_sets_distance_lower_bound(&Configuration::empty(1), &far, &u).unwrap();
        assert!((lb - 0.1f64).abs() < 1e-12);
        assert_eq!(lambda_sets_distance_lower_bound(&Configuration::empty(1), &Configuration::empty(1), &u).unwrap(), 0.0);
        // never above the distance between the restrictions
        let g2 = Configuration::from_reals(&[-1.0, 1.0]).unwrap();
        let e2 = Configuration::from_reals(&[-0.5, 1.5]).unwrap();
        let lb = lambda_sets_distance_lower_bound(&g2, &e2, &u).unwrap();
        assert!(lb <= d_upsilon(&g2, &e2).unwrap().to_scalar() + 1e-12);
    }
}
