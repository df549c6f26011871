//! The centered multivariate normal: density, characteristic function, the
//! closed form for covariance-coordinate derivatives of the characteristic
//! function, and deterministic sampling.

use rayon::prelude::*;

use crate::cov::{omega_pack, CovCoords, CovMatrix, CovMultiindex};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;

const LN_2PI: f64 = 1.837877066409345483560659472811;

/// A centered Gaussian `N(0, Sigma)` with the log normalization constant
/// precomputed from the Cholesky diagonal.
#[derive(Clone, Debug)]
pub struct GaussianModel {
    cov: CovMatrix,
    log_norm: f64,
}

impl GaussianModel {
    pub fn new(cov: CovMatrix) -> Self {
        let n = cov.n() as f64;
        let log_norm = -0.5 * (n * LN_2PI + cov.log_det());
        Self { cov, log_norm }
    }

    pub fn standard(n: usize) -> Self {
        let cov = CovMatrix::validate(&crate::cov::SymMatrix::identity(n))
            .expect("identity is positive definite");
        Self::new(cov)
    }

    pub fn n(&self) -> usize {
        self.cov.n()
    }

    pub fn cov(&self) -> &CovMatrix {
        &self.cov
    }

    /// `log [(2 pi)^n det Sigma]^{-1/2}`.
    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: len,
            });
        }
        Ok(())
    }

    /// Log density. The quadratic form is `|L^{-1} x|^2` by forward
    /// substitution; the matrix inverse is never formed.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        let y = linalg::solve_lower(self.n(), self.cov.chol(), x);
        let q: f64 = y.iter().map(|v| v * v).sum();
        Ok(self.log_norm - 0.5 * q)
    }

    /// The density, accumulated in log space and exponentiated once.
    pub fn density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.log_density(x)?.exp())
    }

    /// Characteristic function `exp(-<xi, Sigma xi>/2)`, real-valued for a
    /// centered Gaussian; lies in `(0, 1]` with value 1 exactly at the
    /// origin.
    pub fn characteristic(&self, xi: &[f64]) -> Result<f64> {
        self.check_dim(xi.len())?;
        let sx = linalg::matvec(self.n(), self.cov.sym().data(), xi);
        let q: f64 = xi.iter().zip(&sx).map(|(a, b)| a * b).sum();
        Ok((-0.5 * q).exp())
    }

    /// `count` draws of `L z` with `z` standard normal; sample `i` is fully
    /// determined by `(seed, i)`, so runs of any worker count agree.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<Vec<f64>> {
        let n = self.n();
        let l = self.cov.chol();
        (0..count as u64)
            .into_par_iter()
            .map(|i| {
                let z = rng::standard_normal_vector(seed, i, n);
                (0..n)
                    .map(|r| (0..=r).map(|c| l[r * n + c] * z[c]).sum())
                    .collect()
            })
            .collect()
    }
}

/// Closed form for the coordinate derivative of the characteristic function:
/// differentiating `A -> psi_{Omega(A)}(xi)` by the multiindex `beta` yields
/// `(-1)^{|beta|} (1/2)^{|beta|_par} xi^{flatten(beta)} psi(xi)`.
pub fn characteristic_deriv(a: &CovCoords, beta: &CovMultiindex, xi: &[f64]) -> Result<f64> {
    if beta.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: beta.dim(),
        });
    }
    let cov = CovMatrix::validate(&omega_pack(a))?;
    let model = GaussianModel::new(cov);
    let psi = model.characteristic(xi)?;
    let total = beta.total();
    let sign = if total % 2 == 0 { 1.0 } else { -1.0 };
    let half_pow = 0.5_f64.powi(beta.parallel_weight() as i32);
    let monomial: f64 = beta
        .flatten()
        .iter()
        .zip(xi)
        .map(|(&k, &x)| x.powi(k as i32))
        .product();
    Ok(sign * half_pow * monomial * psi)
}

/// The conditional law of the free coordinates given fixed values on a
/// subset of axes, together with the marginal density of the fixed part.
/// `phi_Sigma(a_S, x_F) = marginal_density * phi_c(x_F - mean)`.
pub(crate) struct Conditional {
    pub marginal_density: f64,
    pub mean: Vec<f64>,
    pub model: GaussianModel,
}

pub(crate) fn condition(m: &GaussianModel, fixed: &[(usize, f64)]) -> Result<Conditional> {
    let n = m.n();
    let fixed_axes: Vec<usize> = fixed.iter().map(|&(k, _)| k).collect();
    let free: Vec<usize> = (0..n).filter(|k| !fixed_axes.contains(k)).collect();
    let ns = fixed.len();
    let nf = free.len();
    debug_assert!(ns > 0 && nf > 0);

    let sym = m.cov().sym();
    // Marginal covariance of the fixed block is just the submatrix.
    let mut ss = vec![0.0; ns * ns];
    for (r, &(i, _)) in fixed.iter().enumerate() {
        for (c, &(j, _)) in fixed.iter().enumerate() {
            ss[r * ns + c] = sym.get(i, j);
        }
    }
    let l_ss = linalg::cholesky_lower(ns, &ss).ok_or_else(|| {
        Error::NotPositiveDefinite("conditioning block is not positive definite".into())
    })?;
    let a_vals: Vec<f64> = fixed.iter().map(|&(_, v)| v).collect();

    // Marginal density at the fixed values, in log space.
    let y = linalg::solve_lower(ns, &l_ss, &a_vals);
    let q: f64 = y.iter().map(|v| v * v).sum();
    let log_det_ss: f64 = 2.0 * (0..ns).map(|i| l_ss[i * ns + i].ln()).sum::<f64>();
    let marginal_density = (-0.5 * (ns as f64 * LN_2PI + log_det_ss + q)).exp();

    // w = Sigma_SS^{-1} a; conditional mean of the free block is Sigma_FS w.
    let w = linalg::solve_lower_transpose(ns, &l_ss, &y);
    let mean: Vec<f64> = free
        .iter()
        .map(|&f| fixed.iter().zip(&w).map(|(&(s, _), wv)| sym.get(f, s) * wv).sum())
        .collect();

    // Schur complement Sigma_FF - Sigma_FS Sigma_SS^{-1} Sigma_SF.
    let mut cols = Vec::with_capacity(nf);
    for &f in &free {
        let col: Vec<f64> = fixed.iter().map(|&(s, _)| sym.get(s, f)).collect();
        let t = linalg::solve_lower(ns, &l_ss, &col);
        let sol = linalg::solve_lower_transpose(ns, &l_ss, &t);
        cols.push(sol);
    }
    let schur = crate::cov::SymMatrix::from_fn(nf, |r, c| {
        let direct = sym.get(free[r], free[c]);
        let correction: f64 = fixed
            .iter()
            .enumerate()
            .map(|(k, &(s, _))| sym.get(free[r], s) * cols[c][k])
            .sum();
        direct - correction
    });
    let model = GaussianModel::new(CovMatrix::validate(&schur)?);
    Ok(Conditional {
        marginal_density,
        mean,
        model,
    })
}
