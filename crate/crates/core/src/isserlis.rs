//! Exact Gaussian monomial moments by Wick pairing.
//!
//! `E[X^gamma]` for a centered Gaussian is a sum over perfect matchings of
//! the multiset of coordinate labels, each matching contributing the product
//! of covariance entries it pairs up. This is a combinatorial route with no
//! quadrature anywhere, which makes it the independent oracle the rest of
//! the crate is tested against. [`MomentPolynomial`] keeps the matching sum
//! symbolic in the covariance coordinates so it can be differentiated
//! termwise.

use std::collections::BTreeMap;

use crate::cov::{CovCoords, CovMatrix, CovMultiindex, IndexPair};
use crate::error::{Error, Result};

/// Largest supported total order; `(2m-1)!!` matchings get expensive fast.
pub const MAX_MOMENT_ORDER: u32 = 12;

/// `E[X^gamma]` for `X ~ N(0, Sigma)`, exact up to rounding.
pub fn isserlis_moment(sigma: &CovMatrix, gamma: &[u32]) -> Result<f64> {
    if gamma.len() != sigma.n() {
        return Err(Error::DimensionMismatch {
            expected: sigma.n(),
            got: gamma.len(),
        });
    }
    let poly = MomentPolynomial::gaussian_moment(gamma)?;
    Ok(poly.eval(&crate::cov::omega_unpack(sigma.sym())))
}

/// The moment `E[X^gamma]` as a polynomial in the covariance coordinates:
/// one monomial per distinct pairing pattern, integer coefficients counting
/// the matchings that produce it.
#[derive(Clone, Debug)]
pub struct MomentPolynomial {
    n: usize,
    /// exponent vector over the packed index set -> coefficient
    terms: BTreeMap<Vec<u32>, f64>,
}

impl MomentPolynomial {
    pub fn gaussian_moment(gamma: &[u32]) -> Result<Self> {
        let n = gamma.len();
        let total: u32 = gamma.iter().sum();
        if total > MAX_MOMENT_ORDER {
            return Err(Error::OrderTooLarge {
                order: total,
                max: MAX_MOMENT_ORDER,
            });
        }
        let pair_count = n * (n + 1) / 2;
        let mut terms = BTreeMap::new();
        if total % 2 == 1 {
            // Odd moments of a centered Gaussian vanish: no matchings exist.
            return Ok(Self { n, terms });
        }
        let mut labels: Vec<usize> = Vec::with_capacity(total as usize);
        for (coord, &count) in gamma.iter().enumerate() {
            labels.extend(std::iter::repeat(coord).take(count as usize));
        }
        let mut exponents = vec![0_u32; pair_count];
        enumerate_matchings(&mut labels, n, &mut exponents, &mut terms);
        Ok(Self { n, terms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval(&self, a: &CovCoords) -> f64 {
        self.terms
            .iter()
            .map(|(expo, &coef)| {
                let mut v = coef;
                for (p, &e) in crate::cov::index_pairs(self.n).zip(expo) {
                    if e > 0 {
                        v *= a.get(p).powi(e as i32);
                    }
                }
                v
            })
            .sum()
    }

    /// Termwise partial derivative by the multiindex `beta` over covariance
    /// coordinates.
    pub fn derivative(&self, beta: &CovMultiindex) -> Self {
        let packed_beta: Vec<u32> = crate::cov::index_pairs(self.n).map(|p| beta.get(p)).collect();
        let mut terms = BTreeMap::new();
        'term: for (expo, &coef) in &self.terms {
            let mut new_coef = coef;
            let mut new_expo = expo.clone();
            for (k, &b) in packed_beta.iter().enumerate() {
                if b == 0 {
                    continue;
                }
                if expo[k] < b {
                    continue 'term;
                }
                for step in 0..b {
                    new_coef *= (expo[k] - step) as f64;
                }
                new_expo[k] = expo[k] - b;
            }
            *terms.entry(new_expo).or_insert(0.0) += new_coef;
        }
        Self { n: self.n, terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|&c| c == 0.0)
    }
}

/// Recursively pair off the first remaining label with every later one.
fn enumerate_matchings(
    labels: &mut Vec<usize>,
    n: usize,
    exponents: &mut [u32],
    terms: &mut BTreeMap<Vec<u32>, f64>,
) {
    if labels.is_empty() {
        *terms.entry(exponents.to_vec()).or_insert(0.0) += 1.0;
        return;
    }
    let first = labels[0];
    for k in 1..labels.len() {
        let other = labels[k];
        let p = IndexPair::new(first, other);
        let idx = packed_position(n, p);
        let mut rest: Vec<usize> = Vec::with_capacity(labels.len() - 2);
        rest.extend_from_slice(&labels[1..k]);
        rest.extend_from_slice(&labels[k + 1..]);
        exponents[idx] += 1;
        enumerate_matchings(&mut rest, n, exponents, terms);
        exponents[idx] -= 1;
    }
}

fn packed_position(n: usize, p: IndexPair) -> usize {
    crate::cov::index_pairs(n)
        .position(|q| q == p)
        .expect("pair within dimension")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cov::{correlation_coords, omega_pack};
    use approx::assert_relative_eq;

    fn sigma_alpha(alpha: f64) -> CovMatrix {
        CovMatrix::validate(&omega_pack(&correlation_coords(alpha))).unwrap()
    }

    #[test]
    fn second_moments() {
        let s = sigma_alpha(0.37);
        assert_relative_eq!(isserlis_moment(&s, &[1, 1]).unwrap(), 0.37, epsilon = 1e-15);
        assert_relative_eq!(isserlis_moment(&s, &[2, 0]).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn fourth_moment_pairing_count() {
        // E[X1^2 X2^2] = S11 S22 + 2 S12^2: three matchings of {1,1,2,2}.
        for alpha in [-0.7, 0.0, 0.3, 0.9] {
            let s = sigma_alpha(alpha);
            assert_relative_eq!(
                isserlis_moment(&s, &[2, 2]).unwrap(),
                1.0 + 2.0 * alpha * alpha,
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn odd_moments_vanish() {
        let s = sigma_alpha(0.4);
        assert_eq!(isserlis_moment(&s, &[2, 1]).unwrap(), 0.0);
        assert_eq!(isserlis_moment(&s, &[3, 0]).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_sixth_moment_1d() {
        // E[X^6] = 15 sigma^6
        let s = CovMatrix::validate(&crate::cov::SymMatrix::from_rows(&[vec![2.0]]).unwrap()).unwrap();
        assert_relative_eq!(isserlis_moment(&s, &[6]).unwrap(), 15.0 * 8.0, epsilon = 1e-12);
    }

    #[test]
    fn order_cap_is_enforced() {
        let s = sigma_alpha(0.0);
        assert!(matches!(
            isserlis_moment(&s, &[7, 7]),
            Err(Error::OrderTooLarge { .. })
        ));
    }

    #[test]
    fn polynomial_derivative_of_covariance_moment() {
        // E[X1 X2] = A_{12}; its derivative in A_{12} is the constant 1.
        let poly = MomentPolynomial::gaussian_moment(&[1, 1]).unwrap();
        let beta = CovMultiindex::unit(2, IndexPair::new(0, 1));
        let d = poly.derivative(&beta);
        assert_relative_eq!(d.eval(&correlation_coords(0.9)), 1.0, epsilon = 1e-15);

        // E[X1^2 X2^2] = A11 A22 + 2 A12^2; d/dA12 = 4 A12.
        let poly = MomentPolynomial::gaussian_moment(&[2, 2]).unwrap();
        let d = poly.derivative(&beta);
        assert_relative_eq!(d.eval(&correlation_coords(0.3)), 1.2, epsilon = 1e-15);

        // and d/dA11 = A22 evaluated anywhere is 1 for unit diagonals.
        let d11 = poly.derivative(&CovMultiindex::unit(2, IndexPair::new(0, 0)));
        assert_relative_eq!(d11.eval(&correlation_coords(0.3)), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn polynomial_matches_direct_evaluation() {
        let gammas: [&[u32]; 4] = [&[4, 0], &[2, 2], &[3, 1], &[1, 1]];
        for gamma in gammas {
            let poly = MomentPolynomial::gaussian_moment(gamma).unwrap();
            for alpha in [-0.5, 0.2, 0.8] {
                let via_poly = poly.eval(&correlation_coords(alpha));
                let direct = isserlis_moment(&sigma_alpha(alpha), gamma).unwrap();
                assert_relative_eq!(via_poly, direct, epsilon = 1e-14);
            }
        }
    }
}
