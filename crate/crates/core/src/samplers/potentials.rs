use std::fmt;
use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::parallel::worker_rng;
use crate::scalar::squared_distance;
use crate::Window;

type PhiFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type PhiGrad = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
type PsiFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
type PsiGrad = Arc<dyn Fn(&[f64], &[f64]) -> Vec<f64> + Send + Sync>;

const FD_STEP: f64 = 1e-6;

/// A one-body potential `Φ` with values in `R ∪ {+∞}`.
#[derive(Clone)]
pub struct OnePointPotential {
    name: String,
    value: PhiFn,
    gradient: Option<PhiGrad>,
}

/// A symmetric pair potential `Ψ`; the gradient is taken in the first argument.
#[derive(Clone)]
pub struct PairPotential {
    name: String,
    value: PsiFn,
    gradient: Option<PsiGrad>,
}

impl fmt::Debug for OnePointPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Phi({})", self.name)
    }
}

impl fmt::Debug for PairPotential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Psi({})", self.name)
    }
}

fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|a| {
            y[a] = x[a] + FD_STEP;
            let up = f(&y);
            y[a] = x[a] - FD_STEP;
            let down = f(&y);
            y[a] = x[a];
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

impl OnePointPotential {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: Option<PhiGrad>,
    ) -> Self {
        OnePointPotential { name: name.into(), value: Arc::new(value), gradient }
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0, Some(Arc::new(|x: &[f64]| vec![0.0; x.len()])))
    }

    /// `Φ(x) = Σ_a c_a x_a`.
    pub fn linear(coefficients: Vec<f64>) -> Self {
        let c = coefficients.clone();
        Self::new(
            "linear",
            move |x| x.iter().zip(&coefficients).map(|(a, b)| a * b).sum(),
            Some(Arc::new(move |_: &[f64]| c.clone())),
        )
    }

    /// `Φ(x) = (k/2) |x − c|²`.
    pub fn quadratic(strength: f64, center: Vec<f64>) -> Self {
        let c = center.clone();
        Self::new(
            "quadratic",
            move |x| 0.5 * strength * squared_distance(x, &center),
            Some(Arc::new(move |x: &[f64]| x.iter().zip(&c).map(|(a, b)| strength * (a - b)).collect())),
        )
    }

    /// `Φ(x) = A Σ_a cos(2π x_a / L)`.
    pub fn cosine(amplitude: f64, period: f64) -> Self {
        let k = 2.0 * std::f64::consts::PI / period;
        Self::new(
            "cosine",
            move |x| amplitude * x.iter().map(|a| (k * a).cos()).sum::<f64>(),
            Some(Arc::new(move |x: &[f64]| x.iter().map(|a| -amplitude * k * (k * a).sin()).collect())),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    /// Analytic gradient when given, otherwise central differences.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.gradient {
            Some(g) => g(x),
            None => central_difference(|y| self.value(y), x),
        }
    }
}

impl PairPotential {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
        gradient: Option<PsiGrad>,
    ) -> Self {
        PairPotential { name: name.into(), value: Arc::new(value), gradient }
    }

    pub fn zero() -> Self {
        Self::new("zero", |_, _| 0.0, Some(Arc::new(|x: &[f64], _: &[f64]| vec![0.0; x.len()])))
    }

    /// `Ψ(x, y) = |x − y|`.
    pub fn distance() -> Self {
        Self::new(
            "distance",
            |x, y| squared_distance(x, y).sqrt(),
            Some(Arc::new(|x: &[f64], y: &[f64]| {
                let r = squared_distance(x, y).sqrt();
                if r == 0.0 {
                    return vec![0.0; x.len()];
                }
                x.iter().zip(y).map(|(a, b)| (a - b) / r).collect()
            })),
        )
    }

    /// `+∞` when `|x − y| < r`, zero otherwise.
    pub fn hard_core(radius: f64) -> Self {
        let r2 = radius * radius;
        Self::new(
            "hard_core",
            move |x, y| if squared_distance(x, y) < r2 { f64::INFINITY } else { 0.0 },
            Some(Arc::new(|x: &[f64], _: &[f64]| vec![0.0; x.len()])),
        )
    }

    /// `Ψ(x, y) = A exp(−|x − y|² / (2σ²))`.
    pub fn gaussian(amplitude: f64, sigma: f64) -> Self {
        let s2 = sigma * sigma;
        Self::new(
            "gaussian",
            move |x, y| amplitude * (-squared_distance(x, y) / (2.0 * s2)).exp(),
            Some(Arc::new(move |x: &[f64], y: &[f64]| {
                let e = amplitude * (-squared_distance(x, y) / (2.0 * s2)).exp();
                x.iter().zip(y).map(|(a, b)| -e * (a - b) / s2).collect()
            })),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        (self.value)(x, y)
    }

    /// `∇_x Ψ(x, y)`.
    pub fn gradient(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        match &self.gradient {
            Some(g) => g(x, y),
            None => central_difference(|z| self.value(z, y), x),
        }
    }
}

/// The pair `(Φ, Ψ)` defining a finite-volume Hamiltonian.
#[derive(Clone, Debug)]
pub struct GibbsPotentials {
    pub phi: OnePointPotential,
    pub psi: PairPotential,
}

impl GibbsPotentials {
    pub fn new(phi: OnePointPotential, psi: PairPotential) -> Self {
        GibbsPotentials { phi, psi }
    }

    pub fn free() -> Self {
        Self::new(OnePointPotential::zero(), PairPotential::zero())
    }

    /// Spot-check `Ψ(x, y) = Ψ(y, x)` on random pairs from the window's bounding box.
    pub fn check_symmetry(&self, window: &Window) -> Result<()> {
        let (lo, hi) = window.bounding_box();
        let mut rng = worker_rng(0x5eed, 0);
        let draw = |rng: &mut crate::parallel::Rng| -> Vec<f64> {
            lo.iter().zip(&hi).map(|(l, h)| rng.random_range(*l..*h)).collect()
        };
        for _ in 0..64 {
            let x = draw(&mut rng);
            let y = draw(&mut rng);
            let a = self.psi.value(&x, &y);
            let b = self.psi.value(&y, &x);
            let same = if a.is_infinite() || b.is_infinite() {
                a == b
            } else {
                (a - b).abs() <= 1e-12 * (1.0 + a.abs())
            };
            if !same {
                return Err(Error::InvalidParameter(format!(
                    "pair potential `{}` is not symmetric: {a} vs {b}",
                    self.psi.name
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_gradients_match_differences() {
        let x = [0.3, -0.7];
        let y = [1.1, 0.2];
        let phis = [
            OnePointPotential::quadratic(2.0, vec![0.5, 0.5]),
            OnePointPotential::cosine(0.7, 3.0),
            OnePointPotential::linear(vec![1.0, -2.0]),
        ];
        for phi in &phis {
            let fd = central_difference(|z| phi.value(z), &x);
            for (a, b) in phi.gradient(&x).iter().zip(&fd) {
                assert!((a - b).abs() < 1e-6, "{phi:?}");
            }
        }
        for psi in [PairPotential::gaussian(1.5, 0.8), PairPotential::distance()] {
            let fd = central_difference(|z| psi.value(z, &y), &x);
            for (a, b) in psi.gradient(&x, &y).iter().zip(&fd) {
                assert!((a - b).abs() < 1e-6, "{psi:?}");
            }
        }
    }

    #[test]
    fn asymmetric_pair_rejected() {
        let psi = PairPotential::new("skew", |x, y| x[0] - y[0], None);
        let w = Window::interval(0.0, 1.0).unwrap();
        assert!(GibbsPotentials::new(OnePointPotential::zero(), psi).check_symmetry(&w).is_err());
        assert!(GibbsPotentials::new(OnePointPotential::zero(), PairPotential::hard_core(0.1))
            .check_symmetry(&w)
            .is_ok());
    }
}
