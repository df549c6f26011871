//! The dual pairing of a catalog nonlinearity against a Gaussian density:
//! the expectation `E[g(X_Sigma)]` when `g` is a function, extended to point
//! masses by density evaluation.
//!
//! Every term of a [`GeneralizedFunction`] is separable, with each axis
//! either an evaluable function or a point mass. Atomic axes are eliminated
//! first by Gaussian conditioning (the density factorizes as the marginal at
//! the fixed coordinates times a lower-dimensional Gaussian in the rest);
//! the remaining function factors are integrated by quadrature:
//!
//! * smooth factors (polynomials) under [`Scheme::GaussHermiteWhitened`] use
//!   tensor Gauss-Hermite in whitened coordinates, with the order clamped to
//!   the smallest rule that is exact for the term's total degree;
//! * factors with jumps or kinks are integrated cell by cell, splitting the
//!   domain at the recorded breakpoints — in whitened coordinates under
//!   [`Scheme::GaussHermiteWhitened`] (per-axis breakpoints mapped through
//!   the triangular factor), or directly in `x`-space against the explicit
//!   density under [`Scheme::RectangleRestricted`]. Unbounded cells are
//!   truncated where the Gaussian tail drops below ~1e-30.
//!
//! The two schemes are genuinely different integration routes and are held
//! to agree to tight tolerances in the tests.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian::{condition, GaussianModel};
use crate::linalg::pairwise_sum;
use crate::nonlin::{AxisFactor, Func1d, GeneralizedFunction, Term};
use crate::quad::{rule, Family};

/// Hard cap on `order_per_axis ^ n` tensor nodes.
pub const NODE_BUDGET: u128 = 10_000_000;
/// Largest allowed per-axis quadrature order.
pub const MAX_ORDER: usize = 200;

/// Truncation radius in whitened coordinates; the standard normal tail
/// beyond 12 is ~e^{-72}.
const WHITENED_RADIUS: f64 = 12.0;
/// Truncation radius in `x`-space, in units of the largest marginal
/// standard deviation.
const RADIUS_SIGMAS: f64 = 12.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Method {
    Quadrature,
    MonteCarlo,
    Exact,
}

/// How the function part of a pairing is integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Scheme {
    /// Whitened coordinates: Gauss-Hermite for smooth terms, cell-split
    /// Gauss-Legendre against the standard normal weight otherwise.
    GaussHermiteWhitened,
    /// Original coordinates: cell-split Gauss-Legendre against the explicit
    /// density for every term.
    RectangleRestricted,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct QuadratureSpec {
    order_per_axis: usize,
    scheme: Scheme,
}

impl QuadratureSpec {
    pub fn new(order_per_axis: usize, scheme: Scheme) -> Result<Self> {
        if !(2..=MAX_ORDER).contains(&order_per_axis) {
            return Err(Error::InvalidParameter(format!(
                "order_per_axis must be in 2..={MAX_ORDER}, got {order_per_axis}"
            )));
        }
        Ok(Self {
            order_per_axis,
            scheme,
        })
    }

    /// Default orders: 60 per axis up to two dimensions, 30 in three. Tensor
    /// grids grow too fast beyond that; use Monte Carlo instead.
    pub fn default_for_dim(n: usize) -> Self {
        let order = match n {
            0..=2 => 60,
            3 => 30,
            _ => 10,
        };
        Self {
            order_per_axis: order,
            scheme: Scheme::GaussHermiteWhitened,
        }
    }

    pub fn order_per_axis(&self) -> usize {
        self.order_per_axis
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn with_scheme(self, scheme: Scheme) -> Self {
        Self { scheme, ..self }
    }
}

/// A numerical value with an error model.
#[derive(Clone, Debug, Serialize)]
pub struct Estimate {
    /// The estimated value.
    pub value: f64,
    /// How the value was produced.
    pub method: Method,
    /// For quadrature, the difference between consecutive orders; for Monte
    /// Carlo, the standard error of the mean; zero for exact evaluations.
    pub err: f64,
    /// Sample count for Monte Carlo estimates.
    pub samples: Option<u64>,
}

/// Evaluates `<g, phi_Sigma>` by quadrature.
///
/// The returned error field is the difference against the next quadrature
/// order, a practical stability proxy rather than a rigorous bound.
pub fn pair(g: &GeneralizedFunction, m: &GaussianModel, q: &QuadratureSpec) -> Result<Estimate> {
    if g.n() != m.n() {
        return Err(Error::DimensionMismatch {
            expected: m.n(),
            got: g.n(),
        });
    }
    let nodes = (q.order_per_axis as u128).pow(g.n().max(1) as u32);
    if nodes > NODE_BUDGET {
        return Err(Error::NodeBudgetExceeded {
            nodes,
            cap: NODE_BUDGET,
        });
    }

    let all_atomic = g
        .terms()
        .iter()
        .all(|t| t.axes.iter().all(|a| matches!(a, AxisFactor::Atom(_))));
    if all_atomic {
        // Pure point masses: the pairing is a finite sum of density values.
        let contributions: Vec<f64> = g
            .terms()
            .iter()
            .map(|t| term_value(t, m, q.scheme, q.order_per_axis))
            .collect::<Result<_>>()?;
        return Ok(Estimate {
            value: pairwise_sum(&contributions),
            method: Method::Exact,
            err: 0.0,
            samples: None,
        });
    }

    let mut main = Vec::with_capacity(g.terms().len());
    let mut check = Vec::with_capacity(g.terms().len());
    for t in g.terms() {
        let (order_main, order_check) = term_orders(t, q);
        main.push(term_value(t, m, q.scheme, order_main)?);
        check.push(term_value(t, m, q.scheme, order_check)?);
    }
    let value = pairwise_sum(&main);
    let check_value = pairwise_sum(&check);
    Ok(Estimate {
        value,
        method: Method::Quadrature,
        err: (value - check_value).abs(),
        samples: None,
    })
}

/// Monte Carlo estimate of the pairing for purely functional nonlinearities.
pub fn pair_mc(
    g: &GeneralizedFunction,
    m: &GaussianModel,
    seed: u64,
    count: usize,
) -> Result<Estimate> {
    if g.n() != m.n() {
        return Err(Error::DimensionMismatch {
            expected: m.n(),
            got: g.n(),
        });
    }
    if g.has_atoms() {
        return Err(Error::AtomsNotSampleable);
    }
    if count < 2 {
        return Err(Error::InvalidParameter(format!(
            "Monte Carlo needs at least 2 samples, got {count}"
        )));
    }
    let draws = m.sample(seed, count);
    let values: Vec<f64> = draws
        .par_iter()
        .map(|x| g.eval_fn_unchecked(x))
        .collect();
    let mean = pairwise_sum(&values) / count as f64;
    let centered: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let variance = pairwise_sum(&centered) / (count as f64 - 1.0);
    Ok(Estimate {
        value: mean,
        method: Method::MonteCarlo,
        err: (variance / count as f64).sqrt(),
        samples: Some(count as u64),
    })
}

/// Main and companion quadrature orders for one term. Smooth terms under the
/// whitened scheme clamp to the smallest exact rule for their degree, in
/// which case the companion order is exact as well and the reported error
/// collapses to rounding noise.
fn term_orders(t: &Term, q: &QuadratureSpec) -> (usize, usize) {
    let smooth_gh = q.scheme == Scheme::GaussHermiteWhitened && term_is_smooth(t);
    let main = if smooth_gh {
        let degree: u32 = t
            .axes
            .iter()
            .filter_map(|a| match a {
                AxisFactor::Func(f) => f.poly_degree(),
                AxisFactor::Atom(_) => None,
            })
            .sum();
        let exact = degree as usize / 2 + 1;
        exact.clamp(2, q.order_per_axis)
    } else {
        q.order_per_axis
    };
    let check = if main < q.order_per_axis || main == 2 {
        main + 1
    } else {
        main - 1
    };
    (main, check)
}

fn term_is_smooth(t: &Term) -> bool {
    t.axes
        .iter()
        .all(|a| matches!(a, AxisFactor::Func(f) if f.is_smooth()))
}

/// Integrates one separable term against the Gaussian at a fixed order.
fn term_value(t: &Term, m: &GaussianModel, scheme: Scheme, order: usize) -> Result<f64> {
    let fixed: Vec<(usize, f64)> = t
        .axes
        .iter()
        .enumerate()
        .filter_map(|(k, a)| match a {
            AxisFactor::Atom(loc) => Some((k, *loc)),
            AxisFactor::Func(_) => None,
        })
        .collect();
    let factors: Vec<&Func1d> = t
        .axes
        .iter()
        .filter_map(|a| match a {
            AxisFactor::Func(f) => Some(f),
            AxisFactor::Atom(_) => None,
        })
        .collect();

    if factors.is_empty() {
        let point: Vec<f64> = fixed.iter().map(|&(_, v)| v).collect();
        return Ok(t.coeff * m.density(&point)?);
    }

    // Eliminate atomic axes: phi_Sigma(a_S, x_F) factorizes into the marginal
    // density at the fixed block times a Gaussian in the free block.
    let zero_mean;
    let conditional;
    let (scale, mean, model): (f64, &[f64], &GaussianModel) = if fixed.is_empty() {
        zero_mean = vec![0.0; factors.len()];
        (1.0, &zero_mean, m)
    } else {
        conditional = condition(m, &fixed)?;
        (
            conditional.marginal_density,
            &conditional.mean,
            &conditional.model,
        )
    };

    let all_smooth = factors.iter().all(|f| f.is_smooth());
    let integral = match (scheme, all_smooth) {
        (Scheme::GaussHermiteWhitened, true) => gauss_hermite_tensor(&factors, model, mean, order),
        (Scheme::GaussHermiteWhitened, false) => whitened_cells(&factors, model, mean, order),
        (Scheme::RectangleRestricted, _) => rectangle_cells(&factors, model, mean, order),
    };
    Ok(t.coeff * scale * integral)
}

/// Plain tensor Gauss-Hermite quadrature of a smooth integrand in whitened
/// coordinates: `E[prod_k f_k(mean_k + (L u)_k)]` with `u` standard normal.
fn gauss_hermite_tensor(
    factors: &[&Func1d],
    model: &GaussianModel,
    mean: &[f64],
    order: usize,
) -> f64 {
    let gh = rule(Family::HermiteProb, order);
    let f = factors.len();
    let l = model_chol(model);
    let mut u = vec![0.0_f64; f];

    fn recurse(
        axis: usize,
        prod: f64,
        u: &mut [f64],
        factors: &[&Func1d],
        l: &[f64],
        mean: &[f64],
        gh: &crate::quad::QuadRule,
    ) -> f64 {
        let f = factors.len();
        if axis == f {
            return prod;
        }
        let mut parts = Vec::with_capacity(gh.nodes.len());
        for (&z, &w) in gh.nodes.iter().zip(&gh.weights) {
            u[axis] = z;
            let x = mean[axis]
                + (0..=axis).map(|j| l[axis * f + j] * u[j]).sum::<f64>();
            let val = factors[axis].eval(x);
            parts.push(w * recurse(axis + 1, prod * val, u, factors, l, mean, gh));
        }
        pairwise_sum(&parts)
    }

    recurse(0, 1.0, &mut u, factors, l, mean, &gh)
}

/// Cell-split Gauss-Legendre in whitened coordinates. Breakpoints of factor
/// `k` map through the triangular factor to u-axis locations that depend on
/// the outer quadrature prefix, so cells are recomputed per node path.
fn whitened_cells(factors: &[&Func1d], model: &GaussianModel, mean: &[f64], order: usize) -> f64 {
    let gl = rule(Family::Legendre, order);
    let f = factors.len();
    let l = model_chol(model);
    let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut u = vec![0.0_f64; f];

    fn recurse(
        axis: usize,
        prod: f64,
        u: &mut [f64],
        factors: &[&Func1d],
        l: &[f64],
        mean: &[f64],
        gl: &crate::quad::QuadRule,
        inv_sqrt_2pi: f64,
    ) -> f64 {
        let f = factors.len();
        if axis == f {
            return prod;
        }
        let center = mean[axis]
            + (0..axis).map(|j| l[axis * f + j] * u[j]).sum::<f64>();
        let diag = l[axis * f + axis];

        // Domain in u for this axis: truncation plus any support restriction,
        // split at mapped breakpoints.
        let (mut lo, mut hi) = (-WHITENED_RADIUS, WHITENED_RADIUS);
        if let Some((slo, shi)) = factors[axis].support() {
            lo = lo.max((slo - center) / diag);
            hi = hi.min((shi - center) / diag);
        }
        if lo >= hi {
            return 0.0;
        }
        let mut cuts: Vec<f64> = factors[axis]
            .breakpoints()
            .iter()
            .map(|b| (b - center) / diag)
            .filter(|c| *c > lo && *c < hi)
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoint"));
        let mut bounds = vec![lo];
        bounds.extend(cuts);
        bounds.push(hi);
        // standard-normal coordinates: unit scale
        let bounds = crate::quad::subdivide_bounds(bounds, 4.0);

        let mut parts = Vec::with_capacity((bounds.len() - 1) * gl.nodes.len());
        for cell in bounds.windows(2) {
            if cell[1] - cell[0] <= 0.0 {
                continue;
            }
            for (uk, w) in gl.mapped(cell[0], cell[1]) {
                u[axis] = uk;
                let x = center + diag * uk;
                let weight = w * inv_sqrt_2pi * (-0.5 * uk * uk).exp();
                let val = factors[axis].eval(x);
                parts.push(weight * recurse(axis + 1, prod * val, u, factors, l, mean, gl, inv_sqrt_2pi));
            }
        }
        pairwise_sum(&parts)
    }

    recurse(0, 1.0, &mut u, factors, l, mean, &gl, inv_sqrt_2pi)
}

/// Cell-split Gauss-Legendre in the original coordinates against the
/// explicit density. Breakpoints are axis-aligned here, so the cell
/// decomposition is fixed up front.
fn rectangle_cells(factors: &[&Func1d], model: &GaussianModel, mean: &[f64], order: usize) -> f64 {
    let gl = rule(Family::Legendre, order);
    let f = factors.len();
    let radius = RADIUS_SIGMAS * model.cov().sym().max_diag().sqrt();
    // The density varies per axis on the conditional scale, which is at
    // least sqrt(lambda_min); cells wider than a few of those starve the
    // fixed-order rule of resolution.
    let cell_width = 4.0 * model.cov().sigma_min().sqrt();

    let mut axis_cells: Vec<Vec<(f64, f64)>> = Vec::with_capacity(f);
    for (k, fac) in factors.iter().enumerate() {
        let (mut lo, mut hi) = (mean[k] - radius, mean[k] + radius);
        if let Some((slo, shi)) = fac.support() {
            lo = lo.max(slo);
            hi = hi.min(shi);
        }
        if lo >= hi {
            return 0.0;
        }
        let mut cuts: Vec<f64> = fac
            .breakpoints()
            .into_iter()
            .filter(|b| *b > lo && *b < hi)
            .collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoint"));
        let mut bounds = vec![lo];
        bounds.extend(cuts);
        bounds.push(hi);
        let bounds = crate::quad::subdivide_bounds(bounds, cell_width);
        axis_cells.push(bounds.windows(2).map(|w| (w[0], w[1])).collect());
    }

    let mut x = vec![0.0_f64; f];
    fn recurse(
        axis: usize,
        prod: f64,
        x: &mut [f64],
        factors: &[&Func1d],
        axis_cells: &[Vec<(f64, f64)>],
        model: &GaussianModel,
        mean: &[f64],
        gl: &crate::quad::QuadRule,
    ) -> f64 {
        let f = factors.len();
        if axis == f {
            let shifted: Vec<f64> = x.iter().zip(mean).map(|(xi, mi)| xi - mi).collect();
            return prod
                * model
                    .density(&shifted)
                    .expect("dimension fixed by construction");
        }
        let mut parts = Vec::new();
        for &(a, b) in &axis_cells[axis] {
            for (xk, w) in gl.mapped(a, b) {
                x[axis] = xk;
                let val = factors[axis].eval(xk);
                parts.push(w * recurse(axis + 1, prod * val, x, factors, axis_cells, model, mean, gl));
            }
        }
        pairwise_sum(&parts)
    }

    recurse(0, 1.0, &mut x, factors, &axis_cells, model, mean, &gl)
}

fn model_chol(model: &GaussianModel) -> &[f64] {
    model.cov().chol()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cov::{correlation_coords, omega_pack, CovMatrix, SymMatrix};
    use crate::isserlis::isserlis_moment;
    use approx::assert_relative_eq;

    fn model(rows: &[Vec<f64>]) -> GaussianModel {
        GaussianModel::new(CovMatrix::validate(&SymMatrix::from_rows(rows).unwrap()).unwrap())
    }

    fn model_alpha(alpha: f64) -> GaussianModel {
        GaussianModel::new(CovMatrix::validate(&omega_pack(&correlation_coords(alpha))).unwrap())
    }

    fn clip_tensor(tau: f64) -> GeneralizedFunction {
        let c = GeneralizedFunction::clip_1d(tau).unwrap();
        GeneralizedFunction::tensor(&[c.clone(), c]).unwrap()
    }

    #[test]
    fn covariance_moment() {
        let g = GeneralizedFunction::monomial(&[1, 1]);
        let est = pair(&g, &model_alpha(0.3), &QuadratureSpec::default_for_dim(2)).unwrap();
        assert_relative_eq!(est.value, 0.3, epsilon = 1e-12);
        assert!(est.err < 1e-12);
    }

    #[test]
    fn constant_integrates_to_one() {
        for n in 1..=3 {
            let g = GeneralizedFunction::constant(n, 1.0);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| if i == j { 1.0 + 0.2 * i as f64 } else { 0.1 })
                        .collect()
                })
                .collect();
            let est = pair(&g, &model(&rows), &QuadratureSpec::default_for_dim(n)).unwrap();
            assert_relative_eq!(est.value, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn pure_atom_is_density_evaluation() {
        let g = GeneralizedFunction::dirac(&[0.0, 0.0], 1.0);
        let est = pair(&g, &model(&[vec![1.0, 0.0], vec![0.0, 1.0]]), &QuadratureSpec::default_for_dim(2)).unwrap();
        assert_relative_eq!(est.value, 0.15915494309189533577, epsilon = 1e-15);
        assert_eq!(est.method, Method::Exact);
        assert_eq!(est.err, 0.0);
    }

    #[test]
    fn clip_correlator_matches_frozen_value() {
        // E[f_1(X) f_1(Y)] at correlation 0.5, cross-checked against two
        // independent high-precision integrators.
        let q = QuadratureSpec::default_for_dim(2);
        let est = pair(&clip_tensor(1.0), &model_alpha(0.5), &q).unwrap();
        assert_relative_eq!(est.value, 0.23816916580077065, epsilon = 1e-10);
    }

    #[test]
    fn indicator_square_pairing_matches_frozen_value() {
        let d = clip_tensor(1.0).weak_derivative(&[1, 1]).unwrap();
        let q = QuadratureSpec::default_for_dim(2);
        let est = pair(&d, &model_alpha(0.5), &q).unwrap();
        assert_relative_eq!(est.value, 0.49797177783920798968, epsilon = 1e-10);
    }

    #[test]
    fn semi_atomic_pairing_matches_frozen_value() {
        // d^2/dx1^2 of the clip tensor: a point-mass pair in x1 times the
        // clip in x2.
        let d = clip_tensor(1.0).weak_derivative(&[2, 0]).unwrap();
        let q = QuadratureSpec::default_for_dim(2);
        let est = pair(&d, &model_alpha(0.5), &q).unwrap();
        assert_relative_eq!(est.value, -0.17572543585277565303, epsilon = 1e-10);
    }

    #[test]
    fn schemes_agree_on_discontinuous_integrands() {
        let q_gh = QuadratureSpec::default_for_dim(2);
        let q_rect = q_gh.with_scheme(Scheme::RectangleRestricted);
        let cases = vec![
            clip_tensor(1.0),
            clip_tensor(1.0).weak_derivative(&[1, 1]).unwrap(),
            clip_tensor(2.0).weak_derivative(&[1, 0]).unwrap(),
            clip_tensor(1.0).weak_derivative(&[2, 0]).unwrap(),
            GeneralizedFunction::tensor(&[
                GeneralizedFunction::sign_1d(),
                GeneralizedFunction::positive_part_1d(),
            ])
            .unwrap(),
        ];
        for (alpha, g) in [(-0.6, &cases[0]), (0.5, &cases[0]), (0.5, &cases[1]), (0.9, &cases[2]), (0.5, &cases[3]), (0.3, &cases[4])] {
            let m = model_alpha(alpha);
            let a = pair(g, &m, &q_gh).unwrap().value;
            let b = pair(g, &m, &q_rect).unwrap().value;
            assert!(
                (a - b).abs() < 1e-8,
                "schemes disagree at alpha {alpha}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn order_stability_for_clip_tensors() {
        for tau in [0.5, 1.0, 3.0] {
            let g = clip_tensor(tau);
            let m = model_alpha(0.4);
            let v60 = pair(&g, &m, &QuadratureSpec::new(60, Scheme::GaussHermiteWhitened).unwrap())
                .unwrap()
                .value;
            let v40 = pair(&g, &m, &QuadratureSpec::new(40, Scheme::GaussHermiteWhitened).unwrap())
                .unwrap()
                .value;
            assert!((v60 - v40).abs() < 1e-9, "tau {tau}: {v60} vs {v40}");
        }
    }

    #[test]
    fn odd_nonlinearity_pairs_to_zero() {
        let g = GeneralizedFunction::clip_1d(1.0).unwrap();
        let m = model(&[vec![1.0]]);
        let est = pair(&g, &m, &QuadratureSpec::default_for_dim(1)).unwrap();
        assert!(est.value.abs() < 1e-12, "got {}", est.value);
    }

    #[test]
    fn matches_isserlis_for_monomials() {
        // Every monomial up to total degree 8 against a few covariances, for
        // both schemes.
        let seeds = [
            vec![vec![1.0, 0.3], vec![0.3, 1.0]],
            vec![vec![2.0, -0.7], vec![-0.7, 0.8]],
            vec![vec![1.0, 0.5, 0.2], vec![0.5, 1.5, -0.3], vec![0.2, -0.3, 0.9]],
        ];
        for rows in &seeds {
            let n = rows.len();
            let m = model(rows);
            let q = QuadratureSpec::default_for_dim(n);
            let q_rect = q.with_scheme(Scheme::RectangleRestricted);
            for gamma in all_gammas(n, 8) {
                let g = GeneralizedFunction::monomial(&gamma);
                let exact = isserlis_moment(m.cov(), &gamma).unwrap();
                let quad = pair(&g, &m, &q).unwrap().value;
                let scale = exact.abs().max(1.0);
                assert!(
                    (quad - exact).abs() / scale < 1e-8,
                    "gh mismatch for {gamma:?}: {quad} vs {exact}"
                );
                // the rectangle scheme pays full order for smooth terms;
                // spot-check it on the lower degrees in low dimension
                if n <= 2 && gamma.iter().sum::<u32>() <= 4 {
                    let rect = pair(&g, &m, &q_rect).unwrap().value;
                    assert!(
                        (rect - exact).abs() / scale < 1e-8,
                        "rect mismatch for {gamma:?}: {rect} vs {exact}"
                    );
                }
            }
        }
    }

    fn all_gammas(n: usize, max_total: u32) -> Vec<Vec<u32>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            let mut next = Vec::new();
            for prefix in &out {
                let used: u32 = prefix.iter().sum();
                for k in 0..=(max_total - used) {
                    let mut p = prefix.clone();
                    p.push(k);
                    next.push(p);
                }
            }
            out = next;
        }
        out
    }

    #[test]
    fn monte_carlo_matches_quadrature() {
        let g = GeneralizedFunction::monomial(&[2, 0]);
        let m = model(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let est = pair_mc(&g, &m, 5, 200_000).unwrap();
        assert_eq!(est.samples, Some(200_000));
        assert!(
            (est.value - 1.0).abs() < 4.0 * est.err,
            "MC value {} err {}",
            est.value,
            est.err
        );

        let clip = clip_tensor(1.0);
        let mc = pair_mc(&clip, &model_alpha(0.0), 7, 200_000).unwrap();
        assert!(mc.value.abs() < 4.0 * mc.err, "E at independence should vanish");
    }

    #[test]
    fn monte_carlo_rejects_atoms() {
        let g = clip_tensor(1.0).weak_derivative(&[2, 0]).unwrap();
        let m = model_alpha(0.0);
        assert!(matches!(
            pair_mc(&g, &m, 1, 100),
            Err(Error::AtomsNotSampleable)
        ));
    }

    #[test]
    fn node_budget_is_enforced() {
        let g = GeneralizedFunction::monomial(&[1, 1, 1, 1]);
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let q = QuadratureSpec::new(60, Scheme::GaussHermiteWhitened).unwrap();
        assert!(matches!(
            pair(&g, &model(&rows), &q),
            Err(Error::NodeBudgetExceeded { .. })
        ));
    }

    #[test]
    fn estimate_serializes_to_schema() {
        let est = Estimate {
            value: 0.25,
            method: Method::Quadrature,
            err: 1e-12,
            samples: None,
        };
        let json = serde_json::to_value(&est).unwrap();
        assert_eq!(json["value"], 0.25);
        assert_eq!(json["method"], "Quadrature");
        assert!(json["samples"].is_null());
    }
}
