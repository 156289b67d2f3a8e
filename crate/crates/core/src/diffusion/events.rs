use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::transport::{d_upsilon, lambda_sets_distance_lower_bound, rho_gamma_u};
use crate::{Configuration, CountMode, Window};

type Predicate = Arc<dyn Fn(&Configuration) -> bool + Send + Sync>;

/// Measurable sets of configurations used as `Ξ` and `Λ`.
#[derive(Clone)]
pub enum EventSet {
    All,
    /// Total mass compared with `n`.
    Mass { n: usize, mode: CountMode },
    /// `Ξ_{·n}(E)`.
    Concentration { window: Window, n: usize, mode: CountMode },
    /// `Λ_{γ,U} = {η : η_U = γ_U}` with `U` the interior of `window`.
    LambdaSet { gamma_ref: Configuration, window: Window },
    /// `{η : d_Υ(η, center) < radius}`.
    DistanceBall { center: Configuration, radius: f64 },
    /// `{η : ρ_{γ,U}(η) < radius}`, an open neighborhood of `Λ_{γ,U}`.
    LambdaNeighborhood { gamma_ref: Configuration, window: Window, radius: f64 },
    AllOf(Vec<EventSet>),
    Custom { name: String, predicate: Predicate, open: bool },
}

impl fmt::Debug for EventSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventSet::All => write!(f, "All"),
            EventSet::Mass { n, mode } => write!(f, "Mass({mode:?} {n})"),
            EventSet::Concentration { window, n, mode } => write!(f, "Concentration({window:?}, {mode:?} {n})"),
            EventSet::LambdaSet { gamma_ref, window } => write!(f, "LambdaSet({gamma_ref:?}, {window:?})"),
            EventSet::DistanceBall { center, radius } => write!(f, "DistanceBall({center:?}, {radius})"),
            EventSet::LambdaNeighborhood { gamma_ref, window, radius } => {
                write!(f, "LambdaNeighborhood({gamma_ref:?}, {window:?}, {radius})")
            }
            EventSet::AllOf(sets) => f.debug_tuple("AllOf").field(sets).finish(),
            EventSet::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl EventSet {
    pub fn custom(
        name: impl Into<String>,
        open: bool,
        predicate: impl Fn(&Configuration) -> bool + Send + Sync + 'static,
    ) -> Self {
        EventSet::Custom { name: name.into(), predicate: Arc::new(predicate), open }
    }

    pub fn contains(&self, gamma: &Configuration) -> Result<bool> {
        Ok(match self {
            EventSet::All => true,
            EventSet::Mass { n, mode } => mode.holds(gamma.total_mass(), *n),
            EventSet::Concentration { window, n, mode } => gamma.in_concentration_set(window, *n, *mode)?,
            EventSet::LambdaSet { gamma_ref, window } => {
                gamma.restrict_interior(window)? == gamma_ref.restrict_interior(window)?
            }
            EventSet::DistanceBall { center, radius } => {
                d_upsilon(gamma, center)?.finite().is_some_and(|d| d < *radius)
            }
            EventSet::LambdaNeighborhood { gamma_ref, window, radius } => {
                rho_gamma_u(gamma, gamma_ref, window)?.finite().is_some_and(|d| d < *radius)
            }
            EventSet::AllOf(sets) => {
                for s in sets {
                    if !s.contains(gamma)? {
                        return Ok(false);
                    }
                }
                true
            }
            EventSet::Custom { predicate, .. } => predicate(gamma),
        })
    }

    /// Whether the set is open for `d_Υ`; the Varadhan limit is only asserted for open `Ξ`.
    pub fn is_open(&self) -> bool {
        match self {
            EventSet::All | EventSet::Mass { .. } => true,
            EventSet::Concentration { mode, .. } => !matches!(mode, CountMode::Eq),
            EventSet::LambdaSet { .. } => false,
            EventSet::DistanceBall { .. } | EventSet::LambdaNeighborhood { .. } => true,
            EventSet::AllOf(sets) => sets.iter().all(|s| s.is_open()),
            EventSet::Custom { open, .. } => *open,
        }
    }

    /// `d_Υ(γ, self)` when it has a closed form, `None` otherwise.
    pub fn distance_from(&self, gamma: &Configuration) -> Result<Option<f64>> {
        Ok(match self {
            EventSet::All => Some(0.0),
            EventSet::Mass { n, mode } => {
                Some(if mode.holds(gamma.total_mass(), *n) { 0.0 } else { f64::INFINITY })
            }
            EventSet::Concentration { window, n, mode: CountMode::Geq } => {
                if gamma.total_mass() < *n {
                    Some(f64::INFINITY)
                } else {
                    let mut outside: Vec<f64> = gamma
                        .expanded()
                        .into_iter()
                        .map(|p| window.distance_to(p.coords()))
                        .map(|d| d * d)
                        .collect();
                    outside.sort_by(f64::total_cmp);
                    Some(outside[..*n].iter().sum::<f64>().sqrt())
                }
            }
            EventSet::LambdaSet { gamma_ref, window } => Some(rho_gamma_u(gamma, gamma_ref, window)?.to_scalar()),
            EventSet::DistanceBall { center, radius } => {
                Some((d_upsilon(gamma, center)?.to_scalar() - radius).max(0.0))
            }
            EventSet::LambdaNeighborhood { gamma_ref, window, radius } => {
                Some((rho_gamma_u(gamma, gamma_ref, window)?.to_scalar() - radius).max(0.0))
            }
            _ => None,
        })
    }
}

/// A certified lower bound on `d_Υ(Λ₁, Λ₂)` for supported pairs of event sets.
pub fn certified_distance_lower_bound(a: &EventSet, b: &EventSet) -> Result<f64> {
    match (a, b) {
        (EventSet::DistanceBall { center: c1, radius: r1 }, EventSet::DistanceBall { center: c2, radius: r2 }) => {
            Ok((d_upsilon(c1, c2)?.to_scalar() - r1 - r2).max(0.0))
        }
        (EventSet::LambdaSet { gamma_ref: g, window: u }, EventSet::LambdaSet { gamma_ref: e, window: v }) if u == v => {
            lambda_sets_distance_lower_bound(g, e, u)
        }
        (
            EventSet::LambdaNeighborhood { gamma_ref: g, window: u, radius: r1 },
            EventSet::LambdaNeighborhood { gamma_ref: e, window: v, radius: r2 },
        ) if u == v => Ok((lambda_sets_distance_lower_bound(g, e, u)? - r1 - r2).max(0.0)),
        _ => Err(Error::NoDistanceCertificate),
    }
}
