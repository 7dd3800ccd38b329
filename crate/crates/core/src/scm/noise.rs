use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-9;

/// Joint Gaussian law of `(U_1, …, U_n, U_Y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    /// `factor · factorᵀ = cov`; lower triangular when Cholesky succeeds.
    factor: DMatrix<f64>,
}

impl NoiseSpec {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::usage(format!(
                "noise covariance is {}x{}, expected {d}x{d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::usage("noise parameters must be finite"));
        }
        for i in 0..d {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL {
                    return Err(Error::usage(format!("noise covariance not symmetric at ({i}, {j})")));
                }
            }
        }
        let min_eig = SymmetricEigen::new(cov.clone())
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if d > 0 && min_eig < -PSD_TOL {
            return Err(Error::numerical(format!(
                "noise covariance is not positive semi-definite (smallest eigenvalue {min_eig:e})"
            )));
        }
        let factor = sampling_factor(&cov);
        Ok(NoiseSpec { mean, cov, factor })
    }

    pub fn from_rows(mean: &[f64], cov: &[&[f64]]) -> Result<Self> {
        let d = mean.len();
        let flat: Vec<f64> = cov.iter().flat_map(|r| r.iter().copied()).collect();
        if flat.len() != d * d {
            return Err(Error::usage("covariance rows do not match mean length"));
        }
        NoiseSpec::new(DVector::from_column_slice(mean), DMatrix::from_row_slice(d, d, &flat))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Writes one draw into `out`, using `scratch` for the standard normals.
    pub fn draw_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut [f64], out: &mut [f64]) {
        let d = self.dim();
        for z in scratch.iter_mut().take(d) {
            *z = rng.sample(StandardNormal);
        }
        for i in 0..d {
            let mut v = self.mean[i];
            for j in 0..d {
                let f = self.factor[(i, j)];
                if f != 0.0 {
                    v += f * scratch[j];
                }
            }
            out[i] = v;
        }
    }
}

/// Cholesky factor of `cov`, or `V·sqrt(max(Λ, 0))` for singular inputs.
pub(crate) fn sampling_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(ch) = cov.clone().cholesky() {
        return ch.l();
    }
    let eig = SymmetricEigen::new(cov.clone());
    let sqrt = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&sqrt)
}

/// Clips negative eigenvalues to zero and re-symmetrizes.
pub fn repair_psd(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (cov + cov.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym.clone());
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return sym;
    }
    let clipped = eig.eigenvalues.map(|l| l.max(0.0));
    let rebuilt = &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
    (&rebuilt + rebuilt.transpose()) * 0.5
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeds;

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        assert!(NoiseSpec::from_rows(&[0.0, 0.0], &[&[1.0, 0.5], &[0.4, 1.0]]).is_err());
        assert!(NoiseSpec::from_rows(&[0.0, 0.0], &[&[1.0, 2.0], &[2.0, 1.0]]).is_err());
        assert!(NoiseSpec::from_rows(&[0.0], &[&[1.0, 0.0]]).is_err());
    }

    #[test]
    fn singular_covariance_still_samples() {
        let spec = NoiseSpec::from_rows(&[1.0, -1.0], &[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        let mut rng = seeds::rng(3);
        let mut z = [0.0; 2];
        let mut u = [0.0; 2];
        for _ in 0..10 {
            spec.draw_into(&mut rng, &mut z, &mut u);
            assert!(((u[0] - 1.0) - (u[1] + 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn repair_clips_negative_eigenvalues() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let fixed = repair_psd(&bad);
        let min = SymmetricEigen::new(fixed).eigenvalues.min();
        assert!(min > -1e-12);
    }
}
