//! Symmetric tridiagonal eigenvalue machinery: implicit QL with shifts
//! for the full spectrum, inverse iteration with cluster
//! re-orthogonalization for selected eigenvectors.

use crate::error::Error;
use crate::Result;

/// All eigenvalues of the symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e` (length n−1), ascending.
pub fn eigenvalues(d: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    let n = d.len();
    debug_assert_eq!(e.len(), n.saturating_sub(1));
    let mut d = d.to_vec();
    // Work array with a trailing zero, as-is convention for the sweep.
    let mut e: Vec<f64> = e.iter().cloned().chain(std::iter::once(0.0)).collect();

    for l in 0..n {
        let mut iter = 0;
        loop {
            // Find the first negligible off-diagonal at or after l.
            let mut m = l;
            while m + 1 < n {
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
            if iter > 60 {
                return Err(Error::InvalidArgument(
                    "tridiagonal QL failed to converge".into(),
                ));
            }
            // Wilkinson-style shift from the leading 2x2.
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            let mut underflowed = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflowed = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if !underflowed {
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
    }
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Solves (T − shift) x = b for tridiagonal T by Gaussian elimination
/// with partial pivoting (the pivoted form carries a second
/// superdiagonal).
fn solve_shifted(d: &[f64], e: &[f64], shift: f64, b: &mut [f64]) {
    let n = d.len();
    let mut diag: Vec<f64> = d.iter().map(|v| v - shift).collect();
    let mut upper1: Vec<f64> = (0..n - 1).map(|i| e[i]).collect();
    let mut upper2 = vec![0.0f64; n.saturating_sub(2)];
    let mut lower: Vec<f64> = (0..n - 1).map(|i| e[i]).collect();

    for i in 0..n - 1 {
        if lower[i].abs() > diag[i].abs() {
            // Swap rows i and i+1 (three active columns each).
            let r0 = (
                diag[i],
                upper1[i],
                if i + 2 < n { upper2[i] } else { 0.0 },
            );
            let r1 = (
                lower[i],
                diag[i + 1],
                if i + 2 < n { upper1[i + 1] } else { 0.0 },
            );
            diag[i] = r1.0;
            upper1[i] = r1.1;
            lower[i] = r0.0;
            diag[i + 1] = r0.1;
            if i + 2 < n {
                upper2[i] = r1.2;
                upper1[i + 1] = r0.2;
            }
            b.swap(i, i + 1);
        }
        let piv = if diag[i] != 0.0 { diag[i] } else { 1e-300 };
        let m = lower[i] / piv;
        diag[i + 1] -= m * upper1[i];
        if i + 2 < n {
            upper1[i + 1] -= m * upper2[i];
        }
        b[i + 1] -= m * b[i];
        lower[i] = 0.0;
    }
    // Back substitution.
    for i in (0..n).rev() {
        let mut acc = b[i];
        if i + 1 < n {
            acc -= upper1[i] * b[i + 1];
        }
        if i + 2 < n {
            acc -= upper2[i] * b[i + 2];
        }
        let piv = if diag[i] != 0.0 { diag[i] } else { 1e-300 };
        b[i] = acc / piv;
    }
}

fn deterministic_start(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    (0..n)
        .map(|_| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Eigenvector for an already computed eigenvalue by inverse iteration.
///
/// `neighbors` holds previously computed eigenpairs; vectors whose
/// eigenvalue lies within `cluster_tol` are projected out to keep the
/// basis orthonormal through close spacings.
pub fn eigenvector(
    d: &[f64],
    e: &[f64],
    lambda: f64,
    neighbors: &[(f64, Vec<f64>)],
    cluster_tol: f64,
) -> Result<Vec<f64>> {
    let n = d.len();
    let scale = d.iter().fold(0.0f64, |m, v| m.max(v.abs()))
        + 2.0 * e.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let shift = lambda + scale * 1e-14;
    for attempt in 0..4 {
        let mut v = deterministic_start(n, 0xeb5u64 + attempt);
        let nv = norm(&v);
        for x in v.iter_mut() {
            *x /= nv;
        }
        for _ in 0..4 {
            solve_shifted(d, e, shift, &mut v);
            for (le, prev) in neighbors {
                if (le - lambda).abs() < cluster_tol {
                    let dot: f64 = v.iter().zip(prev).map(|(a, b)| a * b).sum();
                    for (x, p) in v.iter_mut().zip(prev) {
                        *x -= dot * p;
                    }
                }
            }
            let nv = norm(&v);
            if nv == 0.0 {
                break;
            }
            for x in v.iter_mut() {
                *x /= nv;
            }
        }
        // Residual acceptance.
        let mut worst = 0.0f64;
        for i in 0..n {
            let mut acc = (d[i] - lambda) * v[i];
            if i > 0 {
                acc += e[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                acc += e[i] * v[i + 1];
            }
            worst = worst.max(acc.abs());
        }
        if worst <= scale * 1e-10 {
            return Ok(v);
        }
    }
    Err(Error::InvalidArgument(format!(
        "inverse iteration failed to converge at eigenvalue {lambda}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Free Laplacian row (2, −1) eigenvalues: 4 sin²(kπ/(2(n+1))).
    #[test]
    fn dirichlet_laplacian_spectrum() {
        let n = 200;
        let d = vec![2.0; n];
        let e = vec![-1.0; n - 1];
        let eig = eigenvalues(&d, &e).unwrap();
        for (k, lam) in eig.iter().enumerate() {
            let expect = 4.0 * ((k + 1) as f64 * std::f64::consts::PI / (2.0 * (n as f64 + 1.0)))
                .sin()
                .powi(2);
            assert_relative_eq!(*lam, expect, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn eigenvectors_match_known_modes() {
        let n = 120;
        let d = vec![2.0; n];
        let e = vec![-1.0; n - 1];
        let eig = eigenvalues(&d, &e).unwrap();
        let mut computed: Vec<(f64, Vec<f64>)> = Vec::new();
        for &lam in eig.iter().take(5) {
            let v = eigenvector(&d, &e, lam, &computed, 1e-6).unwrap();
            computed.push((lam, v));
        }
        for (k, (lam, v)) in computed.iter().enumerate() {
            // Mode shape sin((k+1)π j / (n+1)) up to sign and norm.
            let mut reference: Vec<f64> = (0..n)
                .map(|j| {
                    ((k + 1) as f64 * std::f64::consts::PI * (j + 1) as f64 / (n as f64 + 1.0))
                        .sin()
                })
                .collect();
            let nr = norm(&reference);
            for r in reference.iter_mut() {
                *r /= nr;
            }
            let dot: f64 = v.iter().zip(&reference).map(|(a, b)| a * b).sum();
            assert!(dot.abs() > 1.0 - 1e-8, "mode {k} misaligned (dot {dot})");
            let _ = lam;
        }
        // Orthogonality.
        for i in 0..computed.len() {
            for j in 0..i {
                let dot: f64 = computed[i].1.iter().zip(&computed[j].1).map(|(a, b)| a * b).sum();
                assert!(dot.abs() < 1e-8);
            }
        }
    }

    #[test]
    fn pivoted_solver_handles_zero_diagonal() {
        // T with a zero pivot without pivoting: [[0,1],[1,0]] − 0.
        let d = vec![0.0, 0.0];
        let e = vec![1.0];
        let mut b = vec![1.0, 2.0];
        solve_shifted(&d, &e, 0.0, &mut b);
        // [[0,1],[1,0]] x = (1,2) → x = (2,1).
        assert_relative_eq!(b[0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(b[1], 1.0, epsilon = 1e-12);
    }
}
