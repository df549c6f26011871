//! One-dimensional building blocks of the nonlinearity catalog.
//!
//! Each primitive knows how to evaluate itself, where its discontinuities or
//! kinks sit (so quadrature can split cells there), a pointwise growth
//! certificate, and its weak derivative — which is either another primitive,
//! a finite list of point masses, or outside the catalog.

/// Weak derivative of a [`Func1d`]. Once a factor has degenerated to point
/// masses, the next derivative (a dipole) is outside the catalog; that case
/// is reported by the caller, which tracks atomic factors separately.
#[derive(Clone, Debug)]
pub(crate) enum Deriv1d {
    Func(Func1d),
    /// Point masses as `(weight, location)`.
    Atoms(Vec<(f64, f64)>),
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Func1d {
    /// Coefficients in ascending degree; the empty vector is the zero
    /// function.
    Poly(Vec<f64>),
    /// Hard limiter: clamp to `[-tau, tau]`.
    Clip { tau: f64 },
    /// Indicator of the open interval `(lo, hi)`.
    Indicator { lo: f64, hi: f64 },
    Sign,
    /// Positive part `max(x, 0)`.
    Relu,
    /// Indicator of `(0, inf)`; shows up as the derivative of [`Func1d::Relu`].
    Heaviside,
}

impl Func1d {
    pub(crate) fn monomial(degree: u32) -> Self {
        let mut coeffs = vec![0.0; degree as usize + 1];
        coeffs[degree as usize] = 1.0;
        Func1d::Poly(coeffs)
    }

    pub(crate) fn constant(c: f64) -> Self {
        Func1d::Poly(vec![c])
    }

    pub(crate) fn eval(&self, x: f64) -> f64 {
        match self {
            Func1d::Poly(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck),
            Func1d::Clip { tau } => x.clamp(-tau, *tau),
            Func1d::Indicator { lo, hi } => {
                if x > *lo && x < *hi {
                    1.0
                } else {
                    0.0
                }
            }
            Func1d::Sign => {
                if x > 0.0 {
                    1.0
                } else if x < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Func1d::Relu => x.max(0.0),
            Func1d::Heaviside => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Locations where the function or one of its low-order derivatives
    /// jumps; quadrature cells split here.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        match self {
            Func1d::Poly(_) => vec![],
            Func1d::Clip { tau } => vec![-tau, *tau],
            Func1d::Indicator { lo, hi } => vec![*lo, *hi],
            Func1d::Sign | Func1d::Relu | Func1d::Heaviside => vec![0.0],
        }
    }

    /// The interval outside of which the function vanishes identically, if
    /// there is one.
    pub(crate) fn support(&self) -> Option<(f64, f64)> {
        match self {
            Func1d::Indicator { lo, hi } => Some((*lo, *hi)),
            _ => None,
        }
    }

    pub(crate) fn is_smooth(&self) -> bool {
        matches!(self, Func1d::Poly(_))
    }

    pub(crate) fn poly_degree(&self) -> Option<u32> {
        match self {
            Func1d::Poly(c) => Some(
                c.iter()
                    .rposition(|&v| v != 0.0)
                    .map(|d| d as u32)
                    .unwrap_or(0),
            ),
            _ => None,
        }
    }

    pub(crate) fn is_zero(&self) -> bool {
        matches!(self, Func1d::Poly(c) if c.iter().all(|&v| v == 0.0))
    }

    /// Growth certificate `(C, N)` with `|f(x)| <= C (1 + |x|)^N`.
    pub(crate) fn growth(&self) -> (f64, u32) {
        match self {
            Func1d::Poly(c) => {
                let sum: f64 = c.iter().map(|v| v.abs()).sum();
                (sum.max(f64::MIN_POSITIVE), self.poly_degree().unwrap_or(0))
            }
            Func1d::Clip { tau } => (*tau, 0),
            Func1d::Indicator { .. } | Func1d::Sign | Func1d::Heaviside => (1.0, 0),
            Func1d::Relu => (1.0, 1),
        }
    }

    pub(crate) fn derivative(&self) -> Deriv1d {
        match self {
            Func1d::Poly(c) => {
                let d: Vec<f64> = c
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, &ck)| k as f64 * ck)
                    .collect();
                Deriv1d::Func(Func1d::Poly(if d.is_empty() { vec![0.0] } else { d }))
            }
            Func1d::Clip { tau } => Deriv1d::Func(Func1d::Indicator { lo: -tau, hi: *tau }),
            Func1d::Indicator { lo, hi } => Deriv1d::Atoms(vec![(1.0, *lo), (-1.0, *hi)]),
            Func1d::Sign => Deriv1d::Atoms(vec![(2.0, 0.0)]),
            Func1d::Relu => Deriv1d::Func(Func1d::Heaviside),
            Func1d::Heaviside => Deriv1d::Atoms(vec![(1.0, 0.0)]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip_evaluation() {
        let f = Func1d::Clip { tau: 1.0 };
        assert_eq!(f.eval(2.0), 1.0);
        assert_eq!(f.eval(-3.0), -1.0);
        assert_eq!(f.eval(0.25), 0.25);
    }

    #[test]
    fn clip_derivative_ladder() {
        let f = Func1d::Clip { tau: 1.5 };
        let Deriv1d::Func(ind) = f.derivative() else {
            panic!("clip derivative is a function");
        };
        assert_eq!(ind, Func1d::Indicator { lo: -1.5, hi: 1.5 });
        assert_eq!(ind.eval(0.0), 1.0);
        assert_eq!(ind.eval(3.0), 0.0);
        let Deriv1d::Atoms(atoms) = ind.derivative() else {
            panic!("indicator derivative is atomic");
        };
        assert_eq!(atoms, vec![(1.0, -1.5), (-1.0, 1.5)]);
    }

    #[test]
    fn poly_derivative() {
        // d/dx (x^2) = 2x, then 2, then 0
        let f = Func1d::monomial(2);
        let Deriv1d::Func(d1) = f.derivative() else { panic!() };
        assert_eq!(d1, Func1d::Poly(vec![0.0, 2.0]));
        let Deriv1d::Func(d2) = d1.derivative() else { panic!() };
        assert_eq!(d2, Func1d::Poly(vec![2.0]));
        let Deriv1d::Func(d3) = d2.derivative() else { panic!() };
        assert!(d3.is_zero());
    }

    #[test]
    fn sign_carries_double_atom() {
        let Deriv1d::Atoms(atoms) = Func1d::Sign.derivative() else { panic!() };
        assert_eq!(atoms, vec![(2.0, 0.0)]);
    }

    #[test]
    fn growth_certificates_hold_on_grid() {
        let funcs = [
            Func1d::Poly(vec![1.0, -2.0, 0.5]),
            Func1d::Clip { tau: 2.0 },
            Func1d::Indicator { lo: -1.0, hi: 1.0 },
            Func1d::Sign,
            Func1d::Relu,
            Func1d::Heaviside,
        ];
        for f in &funcs {
            let (c, n) = f.growth();
            for k in -200..=200 {
                let x = k as f64 * 0.25;
                let bound = c * (1.0 + x.abs()).powi(n as i32);
                assert!(
                    f.eval(x).abs() <= bound + 1e-12,
                    "{f:?} violates growth at {x}"
                );
            }
        }
    }
}
