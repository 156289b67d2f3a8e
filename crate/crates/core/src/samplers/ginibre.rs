use nalgebra::{Complex, DMatrix, Schur};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::{Configuration, Point};

/// Eigenvalues of an `n x n` matrix with i.i.d. entries `(a + ib)/√2`, `a, b ~ N(0, 1)`.
pub fn sample_ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Configuration> {
    if n == 0 {
        return Err(Error::InvalidParameter("Ginibre size must be at least 1".into()));
    }
    eigenvalue_configuration(ginibre_matrix(n, rng))
}

fn ginibre_matrix<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<Complex<f64>> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    DMatrix::from_fn(n, n, |_, _| {
        let a: f64 = StandardNormal.sample(rng);
        let b: f64 = StandardNormal.sample(rng);
        Complex::new(a * scale, b * scale)
    })
}

fn eigenvalue_configuration(m: DMatrix<Complex<f64>>) -> Result<Configuration> {
    let schur = Schur::try_new(m, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NumericalFailure("Schur decomposition did not converge".into()))?;
    let eig = schur.eigenvalues().ok_or_else(|| Error::NumericalFailure("no eigenvalues".into()))?;
    let pts = eig
        .iter()
        .map(|z| Point::new(vec![z.re, z.im]).map_err(|_| Error::NumericalFailure("non-finite eigenvalue".into())))
        .collect::<Result<Vec<_>>>()?;
    Configuration::from_points(2, pts)
}
