//! Dense helpers for the small symmetric matrices this crate works with.
//!
//! Matrices are stored row-major in a flat `Vec<f64>`. Dimensions stay tiny
//! (covariances of 2- and 3-dimensional Gaussians in practice), so nothing
//! here is blocked or pivoted.

/// Lower-triangular Cholesky factor of a symmetric matrix, or `None` if a
/// pivot is non-positive or non-finite. Only the lower triangle of the
/// result is populated.
pub(crate) fn cholesky_lower(n: usize, a: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0_f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s.is_finite() && s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solve `L y = b` by forward substitution.
pub(crate) fn solve_lower(n: usize, l: &[f64], b: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0_f64; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    y
}

/// Solve `L^T x = b` by back substitution.
pub(crate) fn solve_lower_transpose(n: usize, l: &[f64], b: &[f64]) -> Vec<f64> {
    let mut x = vec![0.0_f64; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

pub(crate) fn matvec(n: usize, a: &[f64], x: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Certified lower bound on the smallest eigenvalue of a symmetric positive
/// definite matrix with known Cholesky factor `l`.
///
/// Inverse power iteration drives a deterministic start vector toward the
/// bottom eigenvector; the returned bound is the Rayleigh quotient minus the
/// residual norm, which cannot overestimate the true smallest eigenvalue.
pub(crate) fn smallest_eigenvalue_bound(
    n: usize,
    a: &[f64],
    l: &[f64],
    iters: usize,
    tol: f64,
) -> f64 {
    // Pseudorandom start breaks any symmetry the matrix might share with a
    // structured vector (e.g. all-ones orthogonal to the bottom eigenvector
    // of an equicorrelation matrix).
    let mut state = 0x9e37_79b9_7f4a_7c15_u64;
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1_u64 << 53) as f64) + 0.25
        })
        .collect();
    let nv = norm(&v);
    v.iter_mut().for_each(|x| *x /= nv);

    let mut rho = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..iters {
        let y = solve_lower(n, l, &v);
        let w = solve_lower_transpose(n, l, &y);
        let nw = norm(&w);
        if !(nw.is_finite() && nw > 0.0) {
            break;
        }
        v = w.iter().map(|x| x / nw).collect();
        let av = matvec(n, a, &v);
        rho = v.iter().zip(&av).map(|(x, y)| x * y).sum::<f64>();
        residual = av
            .iter()
            .zip(&v)
            .map(|(ax, x)| (ax - rho * x) * (ax - rho * x))
            .sum::<f64>()
            .sqrt();
        // The Rayleigh quotient settles before the eigenvector does, and the
        // bound quality is set by the residual; iterate until that is small.
        if residual <= tol * rho.abs().max(1.0) {
            break;
        }
    }
    rho - residual
}

/// Pairwise (tree) summation. The reduction order depends only on the length
/// of the slice, so accumulation results do not depend on how the values were
/// produced (sequentially or by a worker pool).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_reproduces_matrix() {
        let a = [4.0, 2.0, 0.5, 2.0, 3.0, 1.0, 0.5, 1.0, 2.0];
        let l = cholesky_lower(3, &a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += l[i * 3 + k] * l[j * 3 + k];
                }
                assert_relative_eq!(s, a[i * 3 + j], max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = [1.0, 2.0, 2.0, 1.0];
        assert!(cholesky_lower(2, &a).is_none());
    }

    #[test]
    fn triangular_solves_invert() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let l = cholesky_lower(2, &a).unwrap();
        let b = [1.0, -2.0];
        let y = solve_lower(2, &l, &b);
        let x = solve_lower_transpose(2, &l, &y);
        let back = matvec(2, &a, &x);
        assert_relative_eq!(back[0], b[0], epsilon = 1e-13);
        assert_relative_eq!(back[1], b[1], epsilon = 1e-13);
    }

    #[test]
    fn smallest_eigenvalue_of_equicorrelation() {
        // Eigenvalues of [[1, a], [a, 1]] are 1 +- a; the all-ones vector is
        // orthogonal to the bottom eigenvector, which the pseudorandom start
        // must not get trapped by.
        let a = [1.0, 0.5, 0.5, 1.0];
        let l = cholesky_lower(2, &a).unwrap();
        let bound = smallest_eigenvalue_bound(2, &a, &l, 20, 1e-12);
        assert!(bound <= 0.5 + 1e-12);
        assert!(bound > 0.5 - 1e-9, "bound {bound} too loose");
    }

    #[test]
    fn pairwise_sum_matches_naive_on_smooth_data() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64).sin()).collect();
        let naive: f64 = v.iter().sum();
        assert_relative_eq!(pairwise_sum(&v), naive, epsilon = 1e-10);
    }
}
