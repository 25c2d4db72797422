//! One-dimensional quadrature and the tilted-moment oracle.
//!
//! `tilted_moments` computes normalizer, mean, variance and third central
//! moment of a density proportional to `exp(theta*x - t*x^2/2) * rho(x)`
//! for a log-concave `rho` given as a log-density closure. It is the
//! ground-truth channel the Monte-Carlo reweighting backend is tested
//! against; accuracy is limited by the integrand smoothness, not sampling.

pub mod special;

/// Moments of a tilted 1D log-concave density.
#[derive(Debug, Clone, Copy)]
pub struct TiltedMoments {
    /// log of the normalizer `∫ exp(theta*x - t*x^2/2) rho(x) dx`.
    pub log_z: f64,
    pub mean: f64,
    pub var: f64,
    /// Third central moment.
    pub third: f64,
}

/// Composite Simpson rule with `panels` even subdivisions.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    debug_assert!(panels >= 2 && panels % 2 == 0);
    let h = (b - a) / panels as f64;
    let mut acc = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Composite Simpson, doubling panels until two refinements agree to
/// `rel_tol` (or the panel cap is hit).
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let mut panels = 64;
    let mut prev = simpson(&f, a, b, panels);
    loop {
        panels *= 2;
        let next = simpson(&f, a, b, panels);
        let scale = next.abs().max(1e-300);
        if ((next - prev) / scale).abs() <= rel_tol || panels >= 1 << 20 {
            return next;
        }
        prev = next;
    }
}

/// Maximizer of a concave function on [a, b] by ternary search.
fn concave_argmax(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if g(m1) < g(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    0.5 * (lo + hi)
}

/// Bisect outward from the mode until `g` drops `drop` below `g_max`,
/// clipped to `limit`.
fn decay_bound(g: impl Fn(f64) -> f64, mode: f64, g_max: f64, limit: f64, drop: f64) -> f64 {
    let target = g_max - drop;
    if g(limit).is_finite() && g(limit) > target {
        return limit;
    }
    let mut step = 1.0f64.min((limit - mode).abs().max(1e-6));
    let mut inner = mode;
    let mut outer;
    loop {
        let cand = if limit > mode {
            (inner + step).min(limit)
        } else {
            (inner - step).max(limit)
        };
        let v = g(cand);
        if !v.is_finite() || v <= target {
            outer = cand;
            break;
        }
        inner = cand;
        step *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (inner + outer);
        let v = g(mid);
        if v.is_finite() && v > target {
            inner = mid;
        } else {
            outer = mid;
        }
    }
    outer
}

/// Moments of `exp(theta*x - t*x^2/2) * exp(log_rho(x))` on `support`.
///
/// Requires `t >= 0`, a concave `log_rho` (−∞ outside the support) and an
/// integrable tilt (always the case for t > 0; for t = 0 the tilt must not
/// overpower the density's decay).
pub fn tilted_moments(
    log_rho: impl Fn(f64) -> f64,
    support: (f64, f64),
    t: f64,
    theta: f64,
) -> TiltedMoments {
    let g = |x: f64| theta * x - 0.5 * t * x * x + log_rho(x);
    let lo = support.0.max(-1e12);
    let hi = support.1.min(1e12);
    let mode = concave_argmax(&g, lo, hi);
    let g_max = g(mode);
    debug_assert!(g_max.is_finite(), "tilted density vanished everywhere");
    // e^-46 ~ 1e-20 of the peak; contributions beyond are irrelevant at f64.
    let a = decay_bound(&g, mode, g_max, lo, 46.0);
    let b = decay_bound(&g, mode, g_max, hi, 46.0);

    let weight = |x: f64| {
        let v = g(x) - g_max;
        if v.is_finite() {
            v.exp()
        } else {
            0.0
        }
    };
    let m0 = integrate(&weight, a, b, 1e-12);
    let m1 = integrate(|x| x * weight(x), a, b, 1e-12);
    let mean = m1 / m0;
    let var = integrate(|x| (x - mean).powi(2) * weight(x), a, b, 1e-12) / m0;
    let third = integrate(|x| (x - mean).powi(3) * weight(x), a, b, 1e-12) / m0;
    TiltedMoments {
        log_z: g_max + m0.ln(),
        mean,
        var,
        third,
    }
}

/// Expectation ∫u dp of `u` under the tilted density
/// `∝ exp(theta*x - t*x^2/2) rho(x)`.
pub fn tilted_expectation(
    log_rho: impl Fn(f64) -> f64 + Copy,
    support: (f64, f64),
    t: f64,
    theta: f64,
    u: impl Fn(f64) -> f64,
) -> f64 {
    let g = |x: f64| theta * x - 0.5 * t * x * x + log_rho(x);
    let lo = support.0.max(-1e12);
    let hi = support.1.min(1e12);
    let mode = concave_argmax(g, lo, hi);
    let g_max = g(mode);
    let a = decay_bound(g, mode, g_max, lo, 46.0);
    let b = decay_bound(g, mode, g_max, hi, 46.0);
    let weight = |x: f64| {
        let v = g(x) - g_max;
        if v.is_finite() {
            v.exp()
        } else {
            0.0
        }
    };
    let m0 = integrate(weight, a, b, 1e-12);
    integrate(|x| u(x) * weight(x), a, b, 1e-12) / m0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn std_normal_log(x: f64) -> f64 {
        -0.5 * x * x - 0.5 * (2.0 * std::f64::consts::PI).ln()
    }

    #[test]
    fn simpson_integrates_cubic_exactly() {
        let v = simpson(|x| x * x * x + 2.0 * x, 0.0, 2.0, 2);
        assert_relative_eq!(v, 4.0 + 4.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_tilt_matches_closed_form() {
        // Posterior precision 1+t, mean theta/(1+t).
        for &(t, theta) in &[(0.0, 0.0), (1.0, 2.0), (0.3, -1.2), (5.0, 0.7)] {
            let m = tilted_moments(std_normal_log, (f64::NEG_INFINITY, f64::INFINITY), t, theta);
            assert_relative_eq!(m.mean, theta / (1.0 + t), epsilon = 1e-9, max_relative = 1e-9);
            assert_relative_eq!(m.var, 1.0 / (1.0 + t), max_relative = 1e-9);
            assert!(m.third.abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_tilt_log_normalizer() {
        // Z = (1+t)^{-1/2} exp(theta^2/(2(1+t))) for the standard normal.
        let (t, theta) = (1.5, 0.8);
        let m = tilted_moments(std_normal_log, (f64::NEG_INFINITY, f64::INFINITY), t, theta);
        let expect = -0.5 * (1.0 + t).ln() + theta * theta / (2.0 * (1.0 + t));
        assert_relative_eq!(m.log_z, expect, epsilon = 1e-10);
    }

    #[test]
    fn exponential_untilted_moments() {
        // Centered exponential: mean 0, var 1, third central moment 2.
        let log_rho = |x: f64| if x >= -1.0 { -(x + 1.0) } else { f64::NEG_INFINITY };
        let m = tilted_moments(log_rho, (-1.0, f64::INFINITY), 0.0, 0.0);
        assert_relative_eq!(m.mean, 0.0, epsilon = 1e-9);
        assert_relative_eq!(m.var, 1.0, epsilon = 1e-9);
        assert_relative_eq!(m.third, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn compact_support_is_respected() {
        let h = 3.0f64.sqrt();
        let log_rho = move |x: f64| {
            if x.abs() <= h {
                -(2.0 * h).ln()
            } else {
                f64::NEG_INFINITY
            }
        };
        let m = tilted_moments(log_rho, (-h, h), 0.0, 0.0);
        assert_relative_eq!(m.mean, 0.0, epsilon = 1e-12);
        assert_relative_eq!(m.var, 1.0, epsilon = 1e-10);
        assert_relative_eq!(m.log_z, 0.0, epsilon = 1e-10);
    }
}
