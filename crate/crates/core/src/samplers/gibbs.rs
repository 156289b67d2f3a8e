use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{GibbsPotentials, IntensityMeasure, OnePointPotential, PairPotential};
use crate::error::{Error, Result};
use crate::{Configuration, Point};

/// Birth-death-move Metropolis-Hastings parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McmcParams {
    pub burn_in: usize,
    pub thinning: usize,
    /// Probabilities of (birth, death, move) proposals.
    pub proposal_mix: [f64; 3],
    /// Standard deviation of move proposals; `None` means a tenth of the window diameter.
    pub move_scale: Option<f64>,
}

impl Default for McmcParams {
    fn default() -> Self {
        McmcParams { burn_in: 5_000, thinning: 20, proposal_mix: [1.0 / 3.0; 3], move_scale: None }
    }
}

impl McmcParams {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in == 0 || self.thinning == 0 {
            return Err(Error::InvalidParameter("burn_in and thinning must be at least 1".into()));
        }
        let p = self.proposal_mix;
        if p.iter().any(|&q| !(q >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("proposal mix must be nonnegative and sum to 1".into()));
        }
        if p[0] > 0.0 && p[1] == 0.0 || p[1] > 0.0 && p[0] == 0.0 {
            return Err(Error::InvalidParameter("birth and death proposals must come together".into()));
        }
        if let Some(s) = self.move_scale {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::InvalidParameter("move_scale must be positive".into()));
            }
        }
        Ok(())
    }
}

/// `H(γ) = Σ m_x Φ(x) + ½ Σ_{i ≠ j} Ψ(x_i, x_j)` over expanded atoms.
pub fn hamiltonian(gamma: &Configuration, phi: &OnePointPotential, psi: &PairPotential) -> f64 {
    let pts = gamma.expanded();
    let mut h = 0.0;
    for (i, x) in pts.iter().enumerate() {
        h += phi.value(x.coords());
        for y in &pts[..i] {
            h += psi.value(x.coords(), y.coords());
        }
        if h == f64::INFINITY {
            return h;
        }
    }
    h
}

/// A birth-death-move chain targeting `e^{−H} · π_m` on the window.
pub struct GibbsChain<'a> {
    intensity: &'a IntensityMeasure,
    potentials: &'a GibbsPotentials,
    params: McmcParams,
    move_scale: f64,
    state: Vec<Vec<f64>>,
    proposed: u64,
    accepted: u64,
}

impl<'a> GibbsChain<'a> {
    pub fn new(intensity: &'a IntensityMeasure, potentials: &'a GibbsPotentials, params: McmcParams) -> Self {
        let move_scale = params.move_scale.unwrap_or(0.1 * intensity.window().diameter());
        GibbsChain { intensity, potentials, params, move_scale, state: Vec::new(), proposed: 0, accepted: 0 }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            return 0.0;
        }
        self.accepted as f64 / self.proposed as f64
    }

    /// Energy of `x` against every state point except `skip`.
    fn local_energy(&self, x: &[f64], skip: Option<usize>) -> f64 {
        let mut e = self.potentials.phi.value(x);
        for (j, y) in self.state.iter().enumerate() {
            if Some(j) != skip {
                e += self.potentials.psi.value(x, y);
            }
        }
        e
    }

    fn accept<R: Rng + ?Sized>(rng: &mut R, log_ratio: f64) -> bool {
        log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp()
    }

    /// One proposal; returns whether it was accepted.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> bool {
        let [pb, pd, _] = self.params.proposal_mix;
        let mass = self.intensity.total_mass();
        let n = self.state.len();
        let u: f64 = rng.random();
        self.proposed += 1;
        let accepted = if u < pb {
            let x = self.intensity.sample_point(rng).into_coords();
            let dh = self.local_energy(&x, None);
            let ok = dh < f64::INFINITY && Self::accept(rng, (mass / (n + 1) as f64).ln() + (pd / pb).ln() - dh);
            if ok {
                self.state.push(x);
            }
            ok
        } else if u < pb + pd {
            if n == 0 {
                false
            } else {
                let i = rng.random_range(0..n);
                let dh = -self.local_energy(&self.state[i], Some(i));
                let ok = Self::accept(rng, (n as f64 / mass).ln() + (pb / pd).ln() - dh);
                if ok {
                    self.state.swap_remove(i);
                }
                ok
            }
        } else if n == 0 {
            false
        } else {
            let i = rng.random_range(0..n);
            let to: Vec<f64> = self.state[i]
                .iter()
                .map(|c| {
                    let z: f64 = StandardNormal.sample(rng);
                    c + self.move_scale * z
                })
                .collect();
            let rho_to = self.intensity.density_at(&to);
            if rho_to <= 0.0 {
                false
            } else {
                let new = self.local_energy(&to, Some(i));
                if new == f64::INFINITY {
                    false
                } else {
                    let old = self.local_energy(&self.state[i], Some(i));
                    let rho_from = self.intensity.density_at(&self.state[i]);
                    let ok = Self::accept(rng, (rho_to / rho_from).ln() - (new - old));
                    if ok {
                        self.state[i] = to;
                    }
                    ok
                }
            }
        };
        if accepted {
            self.accepted += 1;
        }
        accepted
    }

    /// Run the burn-in; a chain accepting under 0.1% of proposals is reported as stuck.
    pub fn burn_in<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        let (p0, a0) = (self.proposed, self.accepted);
        for _ in 0..self.params.burn_in {
            self.step(rng);
        }
        let rate = (self.accepted - a0) as f64 / (self.proposed - p0) as f64;
        if rate < 1e-3 {
            return Err(Error::ChainStuck { rate });
        }
        Ok(())
    }

    pub fn state(&self) -> Configuration {
        let pts = self.state.iter().map(|x| Point::new(x.clone()).expect("finite state"));
        Configuration::from_points(self.intensity.dim(), pts).expect("state shares the window dimension")
    }

    /// Advance by `thinning` steps and return the state.
    pub fn next_sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Configuration {
        for _ in 0..self.params.thinning {
            self.step(rng);
        }
        self.state()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parallel::worker_rng;
    use crate::samplers::PointProcessModel;
    use crate::stats::{chi_square_gof, poisson_pmf};
    use crate::Window;

    #[test]
    fn hamiltonian_examples() {
        let g = Configuration::from_reals(&[0.0, 1.0]).unwrap();
        assert_eq!(hamiltonian(&g, &OnePointPotential::zero(), &PairPotential::zero()), 0.0);
        let h = hamiltonian(&g, &OnePointPotential::linear(vec![1.0]), &PairPotential::distance());
        assert!((h - 2.0).abs() < 1e-15);
        let close = Configuration::from_reals(&[0.0, 0.05]).unwrap();
        assert_eq!(hamiltonian(&close, &OnePointPotential::zero(), &PairPotential::hard_core(0.1)), f64::INFINITY);
        // a double atom interacts with itself once
        let double = Configuration::from_reals(&[0.5, 0.5, 0.5]).unwrap();
        let quad = PairPotential::new("const", |_, _| 1.0, None);
        assert_eq!(hamiltonian(&double, &OnePointPotential::zero(), &quad), 3.0);
    }

    #[test]
    fn params_validation() {
        assert!(McmcParams::default().validate().is_ok());
        assert!(McmcParams { burn_in: 0, ..Default::default() }.validate().is_err());
        assert!(McmcParams { proposal_mix: [0.5, 0.5, 0.1], ..Default::default() }.validate().is_err());
        assert!(McmcParams { proposal_mix: [0.5, 0.0, 0.5], ..Default::default() }.validate().is_err());
    }

    #[test]
    fn stuck_chain_is_reported() {
        let m = IntensityMeasure::uniform(Window::interval(0.0, 1.0).unwrap(), 2.0).unwrap();
        let wall = GibbsPotentials::new(OnePointPotential::new("wall", |_| f64::INFINITY, None), PairPotential::zero());
        let model = PointProcessModel::gibbs(m, wall, McmcParams::default()).unwrap();
        assert!(matches!(model.sample(&mut worker_rng(1, 0)), Err(Error::ChainStuck { .. })));
    }

    #[test]
    fn free_chain_counts_are_poisson() {
        let m = IntensityMeasure::uniform(Window::interval(0.0, 1.0).unwrap(), 2.0).unwrap();
        let model = PointProcessModel::gibbs(m, GibbsPotentials::free(), McmcParams::default()).unwrap();
        let samples = model.sample_many(20_000, 4, 4).unwrap();
        let mut h = vec![0u64; 10];
        for g in &samples {
            h[g.total_mass().min(9)] += 1;
        }
        let mut p: Vec<f64> = (0..9).map(|k| poisson_pmf(k, 2.0)).collect();
        p.push(1.0 - p.iter().sum::<f64>());
        let t = chi_square_gof(&h, &p);
        assert!(t.p_value > 0.01, "{t:?}");
    }
}
