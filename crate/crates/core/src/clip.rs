//! The clipping correlator study: `F_tau(alpha) = E[f_tau(X) f_tau(Y)]` for
//! unit-variance Gaussians with correlation `alpha` and hard limiter
//! `f_tau`, its closed-form second derivative, the convexity and linear
//! bound on `[0, 1]`, and an a-priori continuity modulus.

use rayon::prelude::*;
use serde::Serialize;

use crate::cov::{correlation_coords, omega_pack, CovMatrix};
use crate::error::{Error, Result};
use crate::expectation::{pair, QuadratureSpec};
use crate::gaussian::GaussianModel;
use crate::linalg::pairwise_sum;
use crate::nonlin::GeneralizedFunction;
use crate::quad::{rule, Family};

/// `E|X|` for a standard normal: the half-normal mean `sigma sqrt(2/pi)`
/// with `sigma = 1`.
pub const MEAN_ABS_STD_NORMAL: f64 = 0.797_884_560_802_865_4;

/// Correlations this close to `+-1` are evaluated by the one-dimensional
/// endpoint reductions instead of the (singular there) two-dimensional
/// quadrature.
pub const ENDPOINT_MARGIN: f64 = 1e-6;

/// Sampled values of the clipping correlator along a correlation grid.
#[derive(Clone, Debug, Serialize)]
pub struct ClipCurve {
    pub tau: f64,
    pub alphas: Vec<f64>,
    pub values: Vec<f64>,
    /// Closed-form second derivative at interior grid points; `None` where
    /// the endpoint reduction was used.
    pub second_derivs: Vec<Option<f64>>,
    /// `F_tau(1) = E[f_tau(X)^2]`, from the one-dimensional reduction.
    pub f_at_one: f64,
}

/// `F_tau(1) = E[min(X^2, tau^2)]` by split-cell one-dimensional quadrature:
/// `x^2` inside the window, the constant `tau^2` outside, truncated where
/// the Gaussian tail is negligible.
pub fn f_tau_at_one(tau: f64, q: &QuadratureSpec) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tau must be a positive finite number, got {tau}"
        )));
    }
    let gl = rule(Family::Legendre, q.order_per_axis());
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let radius = 12.0_f64.max(tau + 1.0);
    let bounds = crate::quad::subdivide_bounds(vec![0.0, tau, radius], 4.0);
    let cells: Vec<f64> = bounds
        .windows(2)
        .map(|cell| {
            let vals: Vec<f64> = gl
                .mapped(cell[0], cell[1])
                .map(|(x, w)| w * x.min(tau) * x.min(tau) * phi(x))
                .collect();
            pairwise_sum(&vals)
        })
        .collect();
    Ok(2.0 * pairwise_sum(&cells))
}

/// Evaluates the correlator along `grid`, which must lie in `[-1, 1]`.
///
/// Interior points pair the clip tensor against the correlated Gaussian;
/// points within [`ENDPOINT_MARGIN`] of `+-1` use `F_tau(+-1) = +-F_tau(1)`
/// (at correlation 1 the two coordinates coincide, and `f_tau` is odd).
pub fn f_tau_curve(tau: f64, grid: &[f64], q: &QuadratureSpec) -> Result<ClipCurve> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tau must be a positive finite number, got {tau}"
        )));
    }
    if let Some(bad) = grid.iter().find(|a| !(a.abs() <= 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "grid point {bad} outside [-1, 1]"
        )));
    }
    let f_one = f_tau_at_one(tau, q)?;
    let clip = GeneralizedFunction::clip_1d(tau)?;
    let g = GeneralizedFunction::tensor(&[clip.clone(), clip])?;

    let rows: Vec<(f64, Option<f64>)> = grid
        .par_iter()
        .map(|&alpha| -> Result<(f64, Option<f64>)> {
            if alpha.abs() >= 1.0 - ENDPOINT_MARGIN {
                Ok((alpha.signum() * f_one, None))
            } else {
                let cov = CovMatrix::validate(&omega_pack(&correlation_coords(alpha)))?;
                let value = pair(&g, &GaussianModel::new(cov), q)?.value;
                Ok((value, Some(f_tau_second_derivative(tau, alpha)?)))
            }
        })
        .collect::<Result<_>>()?;

    Ok(ClipCurve {
        tau,
        alphas: grid.to_vec(),
        values: rows.iter().map(|r| r.0).collect(),
        second_derivs: rows.iter().map(|r| r.1).collect(),
        f_at_one: f_one,
    })
}

/// Closed form for `F_tau''(alpha)`: the pairing of the four signed corner
/// point masses (the fourth mixed weak derivative of the clip tensor)
/// against the density.
pub fn f_tau_second_derivative(tau: f64, alpha: f64) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tau must be a positive finite number, got {tau}"
        )));
    }
    let cov = CovMatrix::validate(&omega_pack(&correlation_coords(alpha)))?;
    let m = GaussianModel::new(cov);
    Ok(m.density(&[tau, tau])? - m.density(&[-tau, tau])? - m.density(&[tau, -tau])?
        + m.density(&[-tau, -tau])?)
}

#[derive(Clone, Debug, Serialize)]
pub struct LinearBoundRow {
    pub alpha: f64,
    pub value: f64,
    pub bound: f64,
    /// `bound - value`; nonnegative (up to tolerance) when the bound holds.
    pub slack: f64,
}

/// Pointwise check of `F_tau(alpha) <= alpha F_tau(1)` on a grid in `[0, 1]`.
#[derive(Clone, Debug, Serialize)]
pub struct LinearBoundReport {
    pub tau: f64,
    pub f_at_one: f64,
    pub rows: Vec<LinearBoundRow>,
    /// Largest value of `F(alpha) - alpha F(1)` over the grid.
    pub max_violation: f64,
    /// Largest slack over the grid.
    pub max_slack: f64,
    pub holds: bool,
}

pub const LINEAR_BOUND_TOL: f64 = 1e-8;

pub fn check_linear_bound(tau: f64, grid: &[f64], q: &QuadratureSpec) -> Result<LinearBoundReport> {
    if let Some(bad) = grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::InvalidParameter(format!(
            "grid point {bad} outside [0, 1]"
        )));
    }
    let curve = f_tau_curve(tau, grid, q)?;
    let rows: Vec<LinearBoundRow> = curve
        .alphas
        .iter()
        .zip(&curve.values)
        .map(|(&alpha, &value)| {
            let bound = alpha * curve.f_at_one;
            LinearBoundRow {
                alpha,
                value,
                bound,
                slack: bound - value,
            }
        })
        .collect();
    let max_violation = rows
        .iter()
        .map(|r| -r.slack)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_slack = rows.iter().map(|r| r.slack).fold(f64::NEG_INFINITY, f64::max);
    Ok(LinearBoundReport {
        tau,
        f_at_one: curve.f_at_one,
        rows,
        max_violation,
        max_slack,
        holds: max_violation <= LINEAR_BOUND_TOL,
    })
}

/// A-priori bound on `|F_tau(alpha) - F_tau(beta)|` from the Lipschitz
/// construction `Y_alpha = alpha X + sqrt(1 - alpha^2) Z`:
/// `tau (|alpha - beta| + |sqrt(1-alpha^2) - sqrt(1-beta^2)|) E|X|`.
pub fn continuity_modulus(tau: f64, alpha: f64, beta: f64) -> f64 {
    let da = (alpha - beta).abs();
    let ds = ((1.0 - alpha * alpha).sqrt() - (1.0 - beta * beta).sqrt()).abs();
    tau * (da + ds) * MEAN_ABS_STD_NORMAL
}

impl ClipCurve {
    /// CSV rendering: `alpha, F_tau, F_second, linear_bound, slack` at 17
    /// significant digits, with the second-derivative cell left empty at the
    /// endpoint reductions.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,F_tau,F_second,linear_bound,slack\n");
        for ((&alpha, &value), second) in self
            .alphas
            .iter()
            .zip(&self.values)
            .zip(&self.second_derivs)
        {
            let bound = alpha * self.f_at_one;
            let second_cell = second.map(|s| format!("{s:.16e}")).unwrap_or_default();
            out.push_str(&format!(
                "{alpha:.16e},{value:.16e},{second_cell},{bound:.16e},{slack:.16e}\n",
                slack = bound - value
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn q() -> QuadratureSpec {
        QuadratureSpec::default_for_dim(2)
    }

    #[test]
    fn endpoint_value_matches_frozen_oracle() {
        // E[min(X^2, tau^2)] cross-checked against the closed form
        // (2 Phi(tau) - 1) - 2 tau phi(tau) + 2 tau^2 (1 - Phi(tau)).
        for (tau, want) in [
            (0.5, 0.18512836514672017768),
            (1.0, 0.5160585509617133004),
            (2.0, 0.9205369256363230354),
        ] {
            let got = f_tau_at_one(tau, &q()).unwrap();
            assert_relative_eq!(got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn curve_values_at_special_points() {
        let grid = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let curve = f_tau_curve(1.0, &grid, &q()).unwrap();
        let f1 = curve.f_at_one;
        assert_relative_eq!(curve.values[4], f1, epsilon = 1e-14);
        assert_relative_eq!(curve.values[0], -f1, epsilon = 1e-14);
        assert!(curve.values[2].abs() < 1e-8, "F(0) = {}", curve.values[2]);
        // frozen two-dimensional quadrature value at alpha = 0.5
        assert_relative_eq!(curve.values[3], 0.23816916580077065, epsilon = 1e-10);
        assert!(curve.second_derivs[0].is_none());
        assert!(curve.second_derivs[2].is_some());
    }

    #[test]
    fn curve_is_odd_in_alpha() {
        let grid: Vec<f64> = (0..=20).map(|k| -1.0 + k as f64 * 0.1).collect();
        let curve = f_tau_curve(0.8, &grid, &q()).unwrap();
        for k in 0..=20 {
            let mirrored = curve.values[20 - k];
            assert!(
                (curve.values[k] + mirrored).abs() < 1e-8,
                "odd symmetry broken at {}",
                grid[k]
            );
        }
    }

    #[test]
    fn second_derivative_closed_form() {
        // independence: all four corners equal in pairs, so the sum vanishes
        assert_relative_eq!(f_tau_second_derivative(1.0, 0.0).unwrap(), 0.0, epsilon = 1e-15);

        // frozen value at alpha = 0.5, tau = 1; also equals the symmetric
        // two-corner form
        let d = f_tau_second_derivative(1.0, 0.5).unwrap();
        assert_relative_eq!(d, 0.1389649606056270964, epsilon = 1e-13);
        let cov = CovMatrix::validate(&omega_pack(&correlation_coords(0.5))).unwrap();
        let m = GaussianModel::new(cov);
        let two_corner = 2.0 * (m.density(&[1.0, 1.0]).unwrap() - m.density(&[-1.0, 1.0]).unwrap());
        assert_relative_eq!(d, two_corner, epsilon = 1e-15);
    }

    #[test]
    fn second_derivative_matches_second_difference_of_curve() {
        let h = 1e-3;
        for alpha in [0.2, 0.5, 0.8] {
            let grid = [alpha - h, alpha, alpha + h];
            let curve = f_tau_curve(1.0, &grid, &q()).unwrap();
            let fd = (curve.values[2] - 2.0 * curve.values[1] + curve.values[0]) / (h * h);
            let closed = f_tau_second_derivative(1.0, alpha).unwrap();
            assert!(
                (fd - closed).abs() < 1e-5,
                "alpha {alpha}: fd {fd} vs closed {closed}"
            );
        }
    }

    #[test]
    fn convexity_on_the_unit_interval() {
        let grid: Vec<f64> = (0..101)
            .map(|k| k as f64 * (1.0 - 1e-6) / 100.0)
            .collect();
        for tau in [0.5, 1.0, 2.0] {
            for &alpha in &grid {
                let d = f_tau_second_derivative(tau, alpha).unwrap();
                assert!(d >= -1e-12, "F'' = {d} at alpha {alpha}, tau {tau}");
            }
        }
    }

    #[test]
    fn linear_bound_holds_with_endpoint_equality() {
        let grid: Vec<f64> = (0..=50).map(|k| k as f64 / 50.0).collect();
        let report = check_linear_bound(1.0, &grid, &q()).unwrap();
        assert!(report.holds, "max violation {}", report.max_violation);
        assert!(report.rows[0].slack.abs() <= 1e-8);
        assert!(report.rows[50].slack.abs() <= 1e-8);
        // strict slack somewhere in the middle
        assert!(report.rows[25].slack > 1e-3, "slack {}", report.rows[25].slack);
    }

    #[test]
    fn continuity_modulus_examples() {
        assert_eq!(continuity_modulus(1.0, 0.3, 0.3), 0.0);
        // (0.6 + (1 - 0.8)) sqrt(2/pi)
        assert_relative_eq!(
            continuity_modulus(1.0, 0.0, 0.6),
            0.8 * MEAN_ABS_STD_NORMAL,
            epsilon = 1e-15
        );
    }

    #[test]
    fn continuity_modulus_dominates_increments() {
        let grid: Vec<f64> = (0..=10).map(|k| -0.9 + k as f64 * 0.18).collect();
        let curve = f_tau_curve(1.0, &grid, &q()).unwrap();
        for i in 0..grid.len() {
            for j in (i + 1)..grid.len() {
                let diff = (curve.values[i] - curve.values[j]).abs();
                let bound = continuity_modulus(1.0, grid[i], grid[j]);
                assert!(
                    diff <= bound + 1e-8,
                    "increment {diff} exceeds modulus {bound} between {} and {}",
                    grid[i],
                    grid[j]
                );
            }
        }
    }

    #[test]
    fn csv_has_header_and_full_rows() {
        let curve = f_tau_curve(1.0, &[0.0, 0.5, 1.0], &q()).unwrap();
        let csv = curve.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("alpha,F_tau,F_second,linear_bound,slack"));
        let rows: Vec<&str> = lines.collect();
        assert_eq!(rows.len(), 3);
        // interior rows carry five populated fields; the endpoint second
        // derivative is empty
        assert_eq!(rows[1].split(',').count(), 5);
        assert!(rows[2].split(',').nth(2).unwrap().is_empty());
        // 17 significant digits survive a parse round trip
        let alpha_back: f64 = rows[1].split(',').next().unwrap().parse().unwrap();
        assert_eq!(alpha_back, 0.5);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(f_tau_curve(0.0, &[0.0], &q()).is_err());
        assert!(f_tau_curve(1.0, &[1.5], &q()).is_err());
        assert!(check_linear_bound(1.0, &[-0.1], &q()).is_err());
    }
}
