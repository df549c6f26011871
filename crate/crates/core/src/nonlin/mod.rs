//! The catalog of nonlinearities with explicitly stored weak derivatives.
//!
//! A [`GeneralizedFunction`] is a finite sum of separable terms. Each term is
//! a scalar coefficient times a product of per-axis factors, where a factor
//! is either an evaluable one-dimensional function from a closed catalog or a
//! unit point mass at a location. This covers everything the catalog can
//! produce under differentiation: ordinary functions (all factors evaluable),
//! pure point masses in `R^n` (all factors atomic), and the mixed objects
//! that arise as derivatives of piecewise-smooth tensor products, e.g. a
//! point mass in one coordinate times a function of the others.
//!
//! Weak derivatives are not computed symbolically; each catalog primitive
//! carries its own derivative ladder, and differentiation walks that ladder
//! one coordinate step at a time. Requests that step off the ladder (third
//! derivative of a hard limiter, say) report
//! [`Error::DerivativeUnavailable`](crate::Error::DerivativeUnavailable)
//! instead of guessing.

mod func1d;
mod parse;

pub use parse::parse_nonlinearity;

pub(crate) use func1d::{Deriv1d, Func1d};

use crate::error::{Error, Result};

/// One per-axis factor of a separable term.
#[derive(Clone, Debug)]
pub(crate) enum AxisFactor {
    Func(Func1d),
    /// Unit point mass at the location; weights live in the term coefficient.
    Atom(f64),
}

/// A separable term `coeff * prod_k factor_k(x_k)`.
#[derive(Clone, Debug)]
pub(crate) struct Term {
    pub(crate) coeff: f64,
    pub(crate) axes: Vec<AxisFactor>,
}

impl Term {
    fn is_degenerate(&self) -> bool {
        self.coeff == 0.0
            || self
                .axes
                .iter()
                .any(|a| matches!(a, AxisFactor::Func(f) if f.is_zero()))
    }

    fn is_pure_function(&self) -> bool {
        self.axes.iter().all(|a| matches!(a, AxisFactor::Func(_)))
    }

    fn is_pure_atom(&self) -> bool {
        self.axes.iter().all(|a| matches!(a, AxisFactor::Atom(_)))
    }
}

/// A nonlinearity from the catalog: function part plus finite atomic part,
/// with growth certificate and stored weak derivatives.
#[derive(Clone, Debug)]
pub struct GeneralizedFunction {
    n: usize,
    terms: Vec<Term>,
}

impl GeneralizedFunction {
    fn from_terms(n: usize, terms: Vec<Term>) -> Self {
        let terms = terms.into_iter().filter(|t| !t.is_degenerate()).collect();
        Self { n, terms }
    }

    fn single(n: usize, coeff: f64, axes: Vec<AxisFactor>) -> Self {
        Self::from_terms(n, vec![Term { coeff, axes }])
    }

    /// The hard limiter `x -> clamp(x, -tau, tau)` in one dimension.
    pub fn clip_1d(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "clip threshold must be a positive finite number, got {tau}"
            )));
        }
        Ok(Self::single(
            1,
            1.0,
            vec![AxisFactor::Func(Func1d::Clip { tau })],
        ))
    }

    /// The sign function; its weak derivative is the double point mass at 0.
    pub fn sign_1d() -> Self {
        Self::single(1, 1.0, vec![AxisFactor::Func(Func1d::Sign)])
    }

    /// The positive part `max(x, 0)`.
    pub fn positive_part_1d() -> Self {
        Self::single(1, 1.0, vec![AxisFactor::Func(Func1d::Relu)])
    }

    /// The monomial `x^gamma`; all of its weak derivatives stay in the
    /// catalog.
    pub fn monomial(gamma: &[u32]) -> Self {
        let axes = gamma
            .iter()
            .map(|&g| AxisFactor::Func(Func1d::monomial(g)))
            .collect();
        Self::single(gamma.len(), 1.0, axes)
    }

    /// The constant function `c` on `R^n`.
    pub fn constant(n: usize, c: f64) -> Self {
        let axes = (0..n)
            .map(|_| AxisFactor::Func(Func1d::constant(1.0)))
            .collect();
        Self::single(n, c, axes)
    }

    /// A single point mass.
    pub fn dirac(point: &[f64], weight: f64) -> Self {
        let axes = point.iter().map(|&p| AxisFactor::Atom(p)).collect();
        Self::single(point.len(), weight, axes)
    }

    /// Tensor product; dimensions concatenate. Products of atomic factors in
    /// distinct coordinates become product atoms with multiplied weights.
    pub fn tensor(parts: &[GeneralizedFunction]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidParameter("tensor of zero factors".into()));
        }
        let n = parts.iter().map(|p| p.n).sum();
        let mut terms = vec![Term {
            coeff: 1.0,
            axes: Vec::with_capacity(n),
        }];
        for part in parts {
            let mut next = Vec::with_capacity(terms.len() * part.terms.len().max(1));
            for acc in &terms {
                for t in &part.terms {
                    let mut axes = acc.axes.clone();
                    axes.extend(t.axes.iter().cloned());
                    next.push(Term {
                        coeff: acc.coeff * t.coeff,
                        axes,
                    });
                }
            }
            terms = next;
        }
        Ok(Self::from_terms(n, terms))
    }

    /// Scalar multiple.
    pub fn scale(&self, c: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: c * t.coeff,
                axes: t.axes.clone(),
            })
            .collect();
        Self::from_terms(self.n, terms)
    }

    /// Pointwise sum of two catalog entries of equal dimension.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self::from_terms(self.n, terms))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// True when every factor is a polynomial: the function is globally
    /// smooth and every derivative stays available.
    pub fn is_smooth(&self) -> bool {
        self.terms.iter().all(|t| {
            t.axes
                .iter()
                .all(|a| matches!(a, AxisFactor::Func(f) if f.is_smooth()))
        })
    }

    /// True when some term carries a point-mass factor in any coordinate.
    pub fn has_atoms(&self) -> bool {
        self.terms
            .iter()
            .any(|t| t.axes.iter().any(|a| matches!(a, AxisFactor::Atom(_))))
    }

    /// Whether a function part is present at all.
    pub fn has_function_part(&self) -> bool {
        self.terms.iter().any(|t| t.is_pure_function())
    }

    /// Evaluates the function part at `x`. Terms with atomic factors are
    /// singular measures and contribute nothing pointwise.
    pub fn eval_fn(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self.eval_fn_unchecked(x))
    }

    pub(crate) fn eval_fn_unchecked(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.is_pure_function())
            .map(|t| {
                let mut v = t.coeff;
                for (a, &xi) in t.axes.iter().zip(x) {
                    let AxisFactor::Func(f) = a else { unreachable!() };
                    v *= f.eval(xi);
                }
                v
            })
            .sum()
    }

    /// The pure point masses as `(location, weight)` pairs.
    pub fn atoms(&self) -> Vec<(Vec<f64>, f64)> {
        self.terms
            .iter()
            .filter(|t| t.is_pure_atom())
            .map(|t| {
                let point = t
                    .axes
                    .iter()
                    .map(|a| {
                        let AxisFactor::Atom(loc) = a else { unreachable!() };
                        *loc
                    })
                    .collect();
                (point, t.coeff)
            })
            .collect()
    }

    /// Growth certificate `(C, N)` with `|fn_part(x)| <= C (1 + |x|)^N`
    /// declared for all `x`. Since `|x_k| <= |x|`, per-axis certificates
    /// multiply into a valid joint one.
    pub fn growth_cert(&self) -> (f64, u32) {
        let mut c_total = 0.0;
        let mut n_max = 0;
        for t in self.terms.iter().filter(|t| t.is_pure_function()) {
            let mut c = t.coeff.abs();
            let mut order = 0;
            for a in &t.axes {
                let AxisFactor::Func(f) = a else { unreachable!() };
                let (fc, fo) = f.growth();
                c *= fc;
                order += fo;
            }
            c_total += c;
            n_max = n_max.max(order);
        }
        (c_total, n_max)
    }

    /// Checks the growth certificate on a deterministic pseudorandom grid in
    /// `[-halfwidth, halfwidth]^n`; returns the first violating point.
    pub fn audit_growth(&self, points: usize, halfwidth: f64) -> Option<(Vec<f64>, f64, f64)> {
        let (c, order) = self.growth_cert();
        let mut state = 0x853c_49e6_748f_ea9b_u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1_u64 << 53) as f64) * 2.0 - 1.0
        };
        for _ in 0..points {
            let x: Vec<f64> = (0..self.n).map(|_| next() * halfwidth).collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let bound = c * (1.0 + norm).powi(order as i32);
            let value = self.eval_fn_unchecked(&x).abs();
            if value > bound * (1.0 + 1e-12) {
                return Some((x, value, bound));
            }
        }
        None
    }

    /// The stored weak derivative of multiindex `gamma`, composed one
    /// coordinate step at a time.
    pub fn weak_derivative(&self, gamma: &[u32]) -> Result<Self> {
        if gamma.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: gamma.len(),
            });
        }
        let unavailable = || Error::DerivativeUnavailable {
            order: gamma.to_vec(),
        };
        let mut terms = self.terms.clone();
        for (axis, &count) in gamma.iter().enumerate() {
            for _ in 0..count {
                let mut next = Vec::with_capacity(terms.len());
                for t in &terms {
                    match &t.axes[axis] {
                        AxisFactor::Atom(_) => return Err(unavailable()),
                        AxisFactor::Func(f) => match f.derivative() {
                            Deriv1d::Func(g) => {
                                if !g.is_zero() {
                                    let mut axes = t.axes.clone();
                                    axes[axis] = AxisFactor::Func(g);
                                    next.push(Term {
                                        coeff: t.coeff,
                                        axes,
                                    });
                                }
                            }
                            Deriv1d::Atoms(list) => {
                                for (w, loc) in list {
                                    let mut axes = t.axes.clone();
                                    axes[axis] = AxisFactor::Atom(loc);
                                    next.push(Term {
                                        coeff: t.coeff * w,
                                        axes,
                                    });
                                }
                            }
                        },
                    }
                }
                terms = next;
            }
        }
        Ok(Self::from_terms(self.n, terms))
    }

    pub(crate) fn terms(&self) -> &[Term] {
        &self.terms
    }
}
