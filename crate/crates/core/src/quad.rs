//! Gauss quadrature rules computed at runtime by the Golub-Welsch method.
//!
//! Nodes are eigenvalues of the symmetric tridiagonal Jacobi matrix of the
//! orthogonal-polynomial recurrence; weights come from the first component of
//! each eigenvector. No external node tables, reproducible to machine
//! precision, cached per `(family, order)`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    /// Probabilists' Hermite: weights integrate against the standard normal
    /// density and sum to 1, so `E[f(Z)] ~ sum w_i f(x_i)`.
    HermiteProb,
    /// Legendre on `[-1, 1]`: weights sum to 2.
    Legendre,
}

#[derive(Debug)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    /// Nodes and weights mapped affinely onto the interval `[a, b]`
    /// (meaningful for the Legendre family).
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, w * half))
    }
}

/// Fetches (computing and caching on first use) the rule for `order` nodes.
pub fn rule(family: Family, order: usize) -> Arc<QuadRule> {
    assert!(
        (1..=256).contains(&order),
        "quadrature order {order} out of range"
    );
    static CACHE: OnceLock<Mutex<HashMap<(Family, usize), Arc<QuadRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry((family, order))
        .or_insert_with(|| Arc::new(golub_welsch(family, order)))
        .clone()
}

/// Inserts uniform cuts so that no cell is wider than `max_width`. A fixed
/// Legendre order resolves a Gaussian factor only if the cell is a few
/// standard deviations wide; truncation radii are much larger than that.
pub(crate) fn subdivide_bounds(bounds: Vec<f64>, max_width: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(bounds.len());
    out.push(bounds[0]);
    for w in bounds.windows(2) {
        let width = w[1] - w[0];
        let pieces = if width > max_width {
            (width / max_width).ceil() as usize
        } else {
            1
        };
        for k in 1..pieces {
            out.push(w[0] + width * k as f64 / pieces as f64);
        }
        out.push(w[1]);
    }
    out
}

fn golub_welsch(family: Family, order: usize) -> QuadRule {
    let mut diag = vec![0.0_f64; order];
    let mut off = vec![0.0_f64; order];
    let mu0 = match family {
        Family::HermiteProb => {
            // Monic recurrence He_{k+1} = x He_k - k He_{k-1}; weights are
            // normalized to the probability measure, so mu0 = 1.
            for i in 0..order.saturating_sub(1) {
                off[i] = ((i + 1) as f64).sqrt();
            }
            1.0
        }
        Family::Legendre => {
            // Monic recurrence with b_k = k^2 / (4k^2 - 1); mu0 = 2.
            for i in 0..order.saturating_sub(1) {
                let k = (i + 1) as f64;
                off[i] = k / (4.0 * k * k - 1.0).sqrt();
            }
            2.0
        }
    };
    let mut first_row = vec![0.0_f64; order];
    first_row[0] = 1.0;
    tridiagonal_ql(&mut diag, &mut off, &mut first_row);

    let mut pairs: Vec<(f64, f64)> = diag
        .iter()
        .zip(&first_row)
        .map(|(&x, &z)| (x, mu0 * z * z))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("non-finite quadrature node"));
    QuadRule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Implicit-shift QL iteration for a symmetric tridiagonal matrix.
///
/// `d` holds the diagonal, `e[0..n-1]` the subdiagonal. Eigenvalues land in
/// `d` (unsorted); `z0` is transformed as the first row of the accumulated
/// eigenvector matrix, which is all the weight computation needs.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], z0: &mut [f64]) {
    let n = d.len();
    if n <= 1 {
        return;
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 60, "tridiagonal QL failed to converge");

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let sign_r = if g >= 0.0 { r } else { -r };
            g = d[m] - d[l] + e[l] / (g + sign_r);
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;

            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                f = z0[i + 1];
                z0[i + 1] = s * z0[i] + c * f;
                z0[i] = c * z0[i] - s * f;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}
