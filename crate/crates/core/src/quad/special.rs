//! Normal tail functions and truncated-normal moments, stable in the far
//! tail. Used for closed-form tilted moments of the exponential coordinate
//! law, where the posterior is a normal truncated from below.

use std::f64::consts::PI;

/// Standard normal density.
pub fn phi(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal upper tail Q(x) = P(Z >= x).
pub fn norm_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse Mills ratio phi(x)/Q(x), stable for large positive x.
///
/// For x >= 15 the Laplace continued fraction for the tail is used:
/// Q(x) = phi(x) / (x + 1/(x + 2/(x + 3/(x + ...)))); below that the
/// erfc route is accurate and the fraction would converge too slowly.
pub fn mills_inv(x: f64) -> f64 {
    if x < 15.0 {
        phi(x) / norm_tail(x)
    } else {
        let mut cf = 0.0;
        for k in (1..=60).rev() {
            cf = k as f64 / (x + cf);
        }
        x + cf
    }
}

/// Mean and variance of N(m, sigma^2) conditioned on exceeding `a`.
pub fn truncated_normal_lower(m: f64, sigma: f64, a: f64) -> (f64, f64) {
    let alpha = (a - m) / sigma;
    let r = mills_inv(alpha);
    if alpha > 1e6 {
        // Deep truncation: exponential-like boundary layer of width sigma/alpha.
        let w = sigma / alpha;
        return (a + w, w * w);
    }
    let mean = m + sigma * r;
    let var = sigma * sigma * (1.0 + alpha * r - r * r);
    (mean, var.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::tilted_moments;
    use approx::assert_relative_eq;

    #[test]
    fn tail_matches_known_values() {
        assert_relative_eq!(norm_tail(0.0), 0.5, epsilon = 1e-15);
        assert_relative_eq!(norm_tail(1.0), 0.15865525393145707, epsilon = 1e-14);
        // Against the asymptotic phi(x)/x (1 - 1/x^2 + 3/x^4) at x=20.
        let q = norm_tail(20.0);
        let asym = phi(20.0) / 20.0 * (1.0 - 1.0 / 400.0 + 3.0 / 160_000.0);
        assert_relative_eq!(q, asym, max_relative = 1e-6);
    }

    #[test]
    fn mills_matches_high_precision_references() {
        // 50-digit reference values, covering both branches.
        assert_relative_eq!(mills_inv(5.0), 5.186503967125842, max_relative = 1e-13);
        assert_relative_eq!(mills_inv(15.0), 15.066086827167822, max_relative = 1e-13);
        assert_relative_eq!(mills_inv(20.0), 20.049753068527851, max_relative = 1e-13);
        assert_relative_eq!(mills_inv(31.6), 31.631582502249701, max_relative = 1e-13);
    }

    #[test]
    fn truncated_moments_match_quadrature() {
        for &(m, sigma, a) in &[
            (0.0, 1.0, -1.0),
            (-3.0, 0.5, -1.0),
            (-40.0, 2.0, -1.0),
            (2.0, 1.5, -1.0),
            (-900.0, 30.0, -1.0),
        ] {
            let (mean, var) = truncated_normal_lower(m, sigma, a);
            let log_rho = |x: f64| {
                if x >= a {
                    -0.5 * ((x - m) / sigma).powi(2)
                } else {
                    f64::NEG_INFINITY
                }
            };
            let q = tilted_moments(log_rho, (a, f64::INFINITY), 0.0, 0.0);
            assert_relative_eq!(mean, q.mean, max_relative = 1e-9, epsilon = 1e-9);
            assert_relative_eq!(var, q.var, max_relative = 1e-7);
        }
    }
}
