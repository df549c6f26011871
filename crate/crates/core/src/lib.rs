//! Expectations of nonlinear functions of correlated Gaussian vectors, and
//! their derivatives with respect to covariance entries.
//!
//! The central identity: parametrize a symmetric covariance by its upper
//! triangle, `Sigma = Omega(A)`. Then for a nonlinearity `g` the map
//! `A -> <g, phi_{Omega(A)}>` is smooth, and its partial derivative by a
//! multiindex `beta` over the coordinates equals
//! `(1/2)^{|beta|_par} <d^{flatten(beta)} g, phi_{Omega(A)}>`,
//! where the derivative of `g` is taken in the weak (distributional) sense
//! and `|beta|_par` counts derivatives in diagonal coordinates. Derivatives
//! of the expectation in covariance entries therefore reduce to expectations
//! of derivatives of the nonlinearity — which may pick up jumps and point
//! masses along the way, all of which remain numerically pairable against
//! the Gaussian density.
//!
//! What lives where:
//!
//! * [`cov`] — symmetric-matrix coordinates, the multiindex bookkeeping, and
//!   positive-definiteness certification;
//! * [`gaussian`] — density, characteristic function and its closed-form
//!   coordinate derivatives, deterministic sampling;
//! * [`nonlin`] — the nonlinearity catalog with stored weak derivatives;
//! * [`expectation`] — quadrature and Monte Carlo evaluation of the pairing;
//! * [`isserlis`] — exact Gaussian monomial moments (the independent test
//!   oracle);
//! * [`price`] — the derivative operator, its two-dimensional correlation
//!   form, and the finite-difference verification harness;
//! * [`clip`] — the hard-limiter correlator study (convexity, linear bound,
//!   continuity modulus).

mod error;
mod linalg;
mod rng;

pub mod clip;
pub mod cov;
pub mod expectation;
pub mod gaussian;
pub mod isserlis;
pub mod nonlin;
pub mod price;
pub mod quad;

pub use clip::{
    check_linear_bound, continuity_modulus, f_tau_at_one, f_tau_curve, f_tau_second_derivative,
    ClipCurve, LinearBoundReport, LinearBoundRow,
};
pub use cov::{
    correlation_coords, index_pairs, omega_pack, omega_unpack, validate_pd, CovCoords, CovMatrix,
    CovMultiindex, IndexPair, SymMatrix, DEFAULT_PD_TOL,
};
pub use error::{Error, Result};
pub use expectation::{pair, pair_mc, Estimate, Method, QuadratureSpec, Scheme, NODE_BUDGET};
pub use gaussian::{characteristic_deriv, GaussianModel};
pub use isserlis::{isserlis_moment, MomentPolynomial, MAX_MOMENT_ORDER};
pub use nonlin::{parse_nonlinearity, GeneralizedFunction};
pub use price::{
    default_verify_tol, fd_derivative, mcmahon_derivative, price_derivative, verify, PriceReport,
    Verdict, MAX_FD_ORDER,
};
