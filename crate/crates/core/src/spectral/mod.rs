//! 1D spectral toolkit for the weighted generator L = Δ + ⟨∇log ρ, ∇⟩.
//!
//! The generator is discretized in divergence form, Lu = ρ⁻¹(ρu')', on a
//! uniform grid with geometric-mean midpoint densities and zero-flux
//! boundary rows. That discretization is exactly self-adjoint in the
//! lumped weighted inner product ⟨u, v⟩ = Σ u_j v_j ρ_j h, has the
//! constants in its kernel to machine precision, and its symmetrization
//! touches only density *ratios*, so deep tails cost no precision.

pub mod tridiag;

use crate::error::Error;
use crate::heatflow::{Grid1, Smoothed1, TestFn1};
use crate::measures::CoordinateLaw;
use crate::stats::CompensatedSum;
use crate::Result;

/// A tabulated 1D log-density (unnormalized) on a uniform grid.
#[derive(Debug, Clone)]
pub struct Density1D {
    pub grid: Grid1,
    pub log_rho: Vec<f64>,
}

impl Density1D {
    pub fn from_fn(grid: Grid1, log_rho: impl Fn(f64) -> f64) -> Self {
        let log_rho = grid.nodes().map(log_rho).collect();
        Density1D { grid, log_rho }
    }

    /// Catalog tabulation. The Gaussian truncates at ±8 (mass defect
    /// ~1e−15); the cube is exact; the exponential needs a long domain
    /// because the bottom of its spectrum is only reached in the limit of
    /// an infinite interval — the gap of the truncated problem sits at
    /// 1/4 + (π/L)², so L = 160 resolves 0.25 to ~4e−4.
    pub fn from_law(law: &CoordinateLaw, nodes: usize) -> Self {
        let (a, b) = match law {
            CoordinateLaw::StandardGaussian => (-8.0, 8.0),
            CoordinateLaw::CenteredExponential => (-1.0, 159.0),
            CoordinateLaw::UniformSym { half } => (-half, *half),
        };
        // Cell-centered nodes: the zero-flux rows then discretize the
        // Neumann problem on exactly [a, b]. For decaying densities the
        // half-cell shift is irrelevant; for the cube it removes an O(1/n)
        // eigenvalue bias.
        let dx = (b - a) / nodes as f64;
        let grid = Grid1 {
            x0: a + 0.5 * dx,
            dx,
            n: nodes,
        };
        Density1D::from_fn(grid, |x| law.log_density(x))
    }

    /// Trimmed tabulation of a smoothed density (nodes with ρ_s below the
    /// floor carry tabulation noise, not mass).
    pub fn from_smoothed(sm: &Smoothed1, floor: f64) -> Self {
        let keep: Vec<usize> = (0..sm.grid.n).filter(|&i| sm.rho_s[i] >= floor).collect();
        let lo = *keep.first().unwrap();
        let hi = *keep.last().unwrap();
        let grid = Grid1 {
            x0: sm.grid.node(lo),
            dx: sm.grid.dx,
            n: hi - lo + 1,
        };
        Density1D {
            grid,
            log_rho: sm.rho_s[lo..=hi].iter().map(|r| r.ln()).collect(),
        }
    }

    /// Mass lying outside the grid for the catalog laws (monitor for the
    /// truncation design; exact supports report 0).
    pub fn mass_defect(law: &CoordinateLaw, grid: &Grid1) -> f64 {
        match law {
            CoordinateLaw::StandardGaussian => {
                crate::quad::special::norm_tail(grid.last())
                    + crate::quad::special::norm_tail(-grid.x0)
            }
            CoordinateLaw::CenteredExponential => (-(grid.last() + 1.0)).exp(),
            CoordinateLaw::UniformSym { .. } => 0.0,
        }
    }
}

/// Spectral decomposition of −L with all eigenvalues and K+1 retained
/// orthonormal modes.
#[derive(Debug)]
pub struct SpectralDecomposition {
    pub grid: Grid1,
    /// Lumped weights w_j = ρ̃_j h, Σw = 1.
    pub weights: Vec<f64>,
    /// √ρ̃ per node (symmetrization gauge).
    pub sqrt_rho: Vec<f64>,
    /// All n eigenvalues of −L, ascending (λ₀ ≈ 0 first).
    pub eigenvalues: Vec<f64>,
    /// Retained modes 0..=K in the symmetrized gauge, Σv²h = 1.
    modes: Vec<Vec<f64>>,
    /// Symmetrized tridiagonal (diag, off) for residual checks.
    sym_diag: Vec<f64>,
    sym_off: Vec<f64>,
}

impl SpectralDecomposition {
    /// Count K of retained modes above the constant.
    pub fn retained(&self) -> usize {
        self.modes.len() - 1
    }

    /// Eigenfunction values φ_k = v_k/√ρ̃, orthonormal in L²(μ).
    pub fn eigenfunction(&self, k: usize) -> Vec<f64> {
        self.modes[k]
            .iter()
            .zip(&self.sqrt_rho)
            .map(|(v, s)| v / s.max(1e-300))
            .collect()
    }

    /// ⟨u, φ_k⟩_μ for all retained modes.
    pub fn coefficients(&self, u: &[f64]) -> Vec<f64> {
        debug_assert_eq!(u.len(), self.grid.n);
        let h = self.grid.dx;
        self.modes
            .iter()
            .map(|v| {
                let mut acc = CompensatedSum::new();
                for i in 0..u.len() {
                    acc.add(u[i] * v[i] * self.sqrt_rho[i] * h);
                }
                acc.value()
            })
            .collect()
    }

    /// Mean and variance of a grid function under the lumped measure.
    pub fn moments(&self, u: &[f64]) -> (f64, f64) {
        let mut m = CompensatedSum::new();
        for (ui, wi) in u.iter().zip(&self.weights) {
            m.add(ui * wi);
        }
        let mean = m.value();
        let mut v = CompensatedSum::new();
        for (ui, wi) in u.iter().zip(&self.weights) {
            v.add((ui - mean) * (ui - mean) * wi);
        }
        (mean, v.value())
    }

    /// Discrete Dirichlet form Σ ρ_{j+1/2}(u_{j+1}−u_j)²/h, the energy
    /// paired with the lumped inner product.
    pub fn dirichlet_form(&self, u: &[f64]) -> f64 {
        let h = self.grid.dx;
        let mut acc = CompensatedSum::new();
        for j in 0..self.grid.n - 1 {
            let mid = self.sqrt_rho[j] * self.sqrt_rho[j + 1];
            let diff = u[j + 1] - u[j];
            acc.add(mid * diff * diff / h);
        }
        acc.value()
    }

    /// Rayleigh quotient (Dirichlet form over variance).
    pub fn rayleigh(&self, u: &[f64]) -> f64 {
        let (_, var) = self.moments(u);
        self.dirichlet_form(u) / var
    }

    /// Residual ‖(−L)φ_k − λ_k φ_k‖_{L²(μ)} via the symmetrized form.
    pub fn residual(&self, k: usize) -> f64 {
        let v = &self.modes[k];
        let lam = self.eigenvalues[k];
        let n = self.grid.n;
        let mut acc = 0.0f64;
        for i in 0..n {
            let mut r = (self.sym_diag[i] - lam) * v[i];
            if i > 0 {
                r += self.sym_off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                r += self.sym_off[i] * v[i + 1];
            }
            acc += r * r * self.grid.dx;
        }
        acc.sqrt()
    }

    /// Gram matrix deviation max |⟨φ_a, φ_b⟩ − δ_ab| over retained modes.
    pub fn gram_deviation(&self) -> f64 {
        let h = self.grid.dx;
        let mut worst = 0.0f64;
        for a in 0..self.modes.len() {
            for b in 0..=a {
                let dot: f64 =
                    self.modes[a].iter().zip(&self.modes[b]).map(|(x, y)| x * y).sum::<f64>() * h;
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Discretizes −L for a tabulated log-density and solves for the full
/// spectrum plus `k` retained eigenmodes above the constant mode.
pub fn discretize_generator(density: &Density1D, k: usize) -> Result<SpectralDecomposition> {
    let grid = density.grid;
    let n = grid.n;
    if k + 1 >= n / 4 {
        return Err(Error::ResolutionTooCoarse {
            requested: k,
            max: n / 4,
        });
    }
    let h = grid.dx;
    let lr = &density.log_rho;
    if lr.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "log-density must be finite on the grid".into(),
        ));
    }

    // Normalized lumped weights and √ρ̃ by log-sum-exp.
    let m = lr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = lr.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = raw.iter().sum::<f64>() * h;
    let weights: Vec<f64> = raw.iter().map(|r| r * h / z).collect();
    let sqrt_rho: Vec<f64> = raw.iter().map(|r| (r / z).sqrt()).collect();

    // Symmetrized tridiagonal of −L: geometric midpoints make every
    // off-diagonal exactly −1/h² and the diagonal a function of density
    // ratios only.
    let h2 = h * h;
    let mut diag = vec![0.0; n];
    let off = vec![-1.0 / h2; n - 1];
    for (j, dj) in diag.iter_mut().enumerate() {
        let mut v = 0.0;
        if j + 1 < n {
            v += (0.5 * (lr[j + 1] - lr[j])).exp();
        }
        if j > 0 {
            v += (0.5 * (lr[j - 1] - lr[j])).exp();
        }
        *dj = v / h2;
    }
    let eigenvalues = tridiag::eigenvalues(&diag, &off)?;

    let scale = diag.iter().fold(0.0f64, |mx, v| mx.max(v.abs())) + 2.0 / h2;
    if eigenvalues[0].abs() > 1e-8 * scale.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "kernel eigenvalue came out as {}",
            eigenvalues[0]
        )));
    }

    let cluster_tol = scale * 1e-9 + 1e-8;
    let mut pairs: Vec<(f64, Vec<f64>)> = Vec::with_capacity(k + 1);
    for &lam in eigenvalues.iter().take(k + 1) {
        let mut v = tridiag::eigenvector(&diag, &off, lam, &pairs, cluster_tol)?;
        let nv = (v.iter().map(|x| x * x).sum::<f64>() * h).sqrt();
        for x in v.iter_mut() {
            *x /= nv;
        }
        if let Some(lead) = v.iter().find(|x| x.abs() > 1e-9) {
            if *lead < 0.0 {
                for x in v.iter_mut() {
                    *x = -*x;
                }
            }
        }
        pairs.push((lam, v));
    }
    let modes = pairs.into_iter().map(|(_, v)| v).collect();

    Ok(SpectralDecomposition {
        grid,
        weights,
        sqrt_rho,
        eigenvalues,
        modes,
        sym_diag: diag,
        sym_off: off,
    })
}

/// Spectral projection of u strictly below level λ.
///
/// The kernel mode is included only when u carries visible mean (for
/// mean-zero u its coefficient is rounding dust and is dropped).
pub fn project_below(dec: &SpectralDecomposition, u: &[f64], lambda: f64) -> Vec<f64> {
    let mut out = vec![0.0; dec.grid.n];
    if lambda <= 0.0 {
        return out;
    }
    let coeffs = dec.coefficients(u);
    let (_, var) = dec.moments(u);
    let norm_u = var.sqrt();
    for (k, &c) in coeffs.iter().enumerate() {
        if dec.eigenvalues[k] >= lambda {
            break;
        }
        if k == 0 && c.abs() <= 1e-10 * norm_u.max(1e-300) {
            continue;
        }
        for (o, (v, s)) in out.iter_mut().zip(dec.modes[k].iter().zip(&dec.sqrt_rho)) {
            *o += c * v / s.max(1e-300);
        }
    }
    out
}

/// The coordinate spectral profile F(λ): variance-normalized coefficient
/// mass strictly below λ.
#[derive(Debug, Clone)]
pub struct SpectralProfile {
    pub lambdas: Vec<f64>,
    pub f_values: Vec<f64>,
    /// Whether each λ was fully resolved by the retained modes (or closed
    /// by completeness above the whole spectrum).
    pub resolved: Vec<bool>,
}

/// Profile of the coordinate function on the grid.
pub fn profile(dec: &SpectralDecomposition, lambdas: &[f64]) -> SpectralProfile {
    let x: Vec<f64> = dec.grid.nodes().collect();
    let coeffs = dec.coefficients(&x);
    let (_, total_var) = dec.moments(&x);
    let lambda_max_retained = dec.eigenvalues[dec.retained()];
    let lambda_top = *dec.eigenvalues.last().unwrap();
    let mut f_values = Vec::with_capacity(lambdas.len());
    let mut resolved = Vec::with_capacity(lambdas.len());
    for &lam in lambdas {
        if lam > lambda_top {
            // Completeness: the whole spectrum lies strictly below λ.
            f_values.push(1.0);
            resolved.push(true);
            continue;
        }
        let mut acc = 0.0;
        for (k, &c) in coeffs.iter().enumerate().skip(1) {
            if dec.eigenvalues[k] >= lam {
                break;
            }
            acc += c * c;
        }
        f_values.push((acc / total_var).min(1.0));
        resolved.push(lam <= lambda_max_retained);
    }
    SpectralProfile {
        lambdas: lambdas.to_vec(),
        f_values,
        resolved,
    }
}

/// Thin-shell comparison: per-coordinate σ² = Var(x²) against the
/// spectral bound 4 Σ_k c_k²/λ_k — the exact λ-integral of the resolved
/// step profile (mode truncation only lowers the bound, so a pass is
/// conservative).
#[derive(Debug, Clone, Copy)]
pub struct ThinShellReport {
    pub sigma_sq: f64,
    pub bound: f64,
    /// Coefficient mass of the coordinate beyond the retained modes.
    pub tail_mass: f64,
    pub pass: bool,
}

pub fn thin_shell_bound_check(dec: &SpectralDecomposition) -> ThinShellReport {
    let x: Vec<f64> = dec.grid.nodes().collect();
    let xsq: Vec<f64> = x.iter().map(|v| v * v).collect();
    let (_, var_xsq) = dec.moments(&xsq);
    let coeffs = dec.coefficients(&x);
    let (_, total_var) = dec.moments(&x);
    let mut bound = 0.0;
    let mut captured = 0.0;
    for (k, &c) in coeffs.iter().enumerate().skip(1) {
        bound += 4.0 * c * c / dec.eigenvalues[k] / total_var;
        captured += c * c;
    }
    let sigma_sq = var_xsq / (total_var * total_var);
    ThinShellReport {
        sigma_sq,
        bound,
        tail_mass: (1.0 - captured / total_var).max(0.0),
        pass: sigma_sq <= bound + 1e-6,
    }
}

/// H⁻¹(μ) norm squared of a mean-zero grid function: Σ_k ⟨v, φ_k⟩²/λ_k
/// over the retained modes (a lower bound; the unresolved coefficient
/// mass is returned alongside).
pub fn h_minus1_norm_sq(dec: &SpectralDecomposition, v: &[f64]) -> Result<(f64, f64)> {
    let (mean, _) = dec.moments(v);
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if mean.abs() > 1e-8 * scale.max(1.0) {
        return Err(Error::HypothesisViolation {
            reason: format!("function has mean {mean}, H⁻¹ needs mean zero"),
        });
    }
    let coeffs = dec.coefficients(v);
    let mut acc = 0.0;
    let mut captured = 0.0;
    for (k, &c) in coeffs.iter().enumerate().skip(1) {
        acc += c * c / dec.eigenvalues[k];
        captured += c * c;
    }
    let (_, total) = dec.moments(v);
    Ok((acc, (total - captured).max(0.0)))
}

/// Variance bound Var(u) ≤ Σᵢ ‖∂ᵢu‖²_{H⁻¹} for a separable two-factor
/// test function u(x, y) = g(x)h(y) on the product of the decomposed
/// measure with itself.
#[derive(Debug, Clone, Copy)]
pub struct ProductH1Report {
    pub var_u: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub fn h_minus1_product_check(
    dec: &SpectralDecomposition,
    g: &TestFn1,
    h: &TestFn1,
) -> Result<ProductH1Report> {
    let xs: Vec<f64> = dec.grid.nodes().collect();
    let gv: Vec<f64> = xs.iter().map(|&x| (g.f)(x)).collect();
    let hv: Vec<f64> = xs.iter().map(|&x| (h.f)(x)).collect();
    let dgv: Vec<f64> = xs.iter().map(|&x| (g.d1)(x)).collect();
    let dhv: Vec<f64> = xs.iter().map(|&x| (h.d1)(x)).collect();

    let (mg, vg) = dec.moments(&gv);
    let (mh, vh) = dec.moments(&hv);
    let (mdg, _) = dec.moments(&dgv);
    let (mdh, _) = dec.moments(&dhv);
    // Hypothesis ∫∇u dμ = 0 for u = g ⊗ h.
    if (mdg * mh).abs() > 1e-8 || (mdh * mg).abs() > 1e-8 {
        return Err(Error::HypothesisViolation {
            reason: "∫∇u dμ does not vanish".into(),
        });
    }
    // Var(g h) = E g² E h² − (E g E h)² for independent factors.
    let var_u = (vg + mg * mg) * (vh + mh * mh) - (mg * mh).powi(2);

    let ca_d1 = dec.coefficients(&dgv);
    let cb_h = dec.coefficients(&hv);
    let ca_g = dec.coefficients(&gv);
    let cb_d2 = dec.coefficients(&dhv);
    let mut rhs = 0.0;
    for (a, &ca) in ca_d1.iter().enumerate() {
        for (b, &cb) in cb_h.iter().enumerate() {
            if a == 0 && b == 0 {
                continue;
            }
            rhs += ca * ca * cb * cb / (dec.eigenvalues[a] + dec.eigenvalues[b]);
        }
    }
    for (a, &ca) in ca_g.iter().enumerate() {
        for (b, &cb) in cb_d2.iter().enumerate() {
            if a == 0 && b == 0 {
                continue;
            }
            rhs += ca * ca * cb * cb / (dec.eigenvalues[a] + dec.eigenvalues[b]);
        }
    }
    Ok(ProductH1Report {
        var_u,
        rhs,
        pass: var_u <= rhs + 1e-6,
    })
}

/// Poincaré constant, isoperimetric constant by half-line scan, and the
/// associated inequality flags.
#[derive(Debug, Clone, Copy)]
pub struct PoincareReport {
    pub lambda_1: f64,
    pub c_p: f64,
    pub psi: f64,
    pub variance: f64,
    pub buser_ledoux_pass: bool,
    /// (slack, pass) of C_p ≤ 1/t for a certified t-uniform input.
    pub lichnerowicz: Option<(f64, bool)>,
    /// (slack, pass) of C_p ≤ √(‖Cov‖/t).
    pub spectral_variance: Option<(f64, bool)>,
}

/// `t_uniform` asserts the tabulated density is t-uniformly log-concave
/// (−log ρ − t|x|² convex); callers certify before passing it.
pub fn poincare_and_isoperimetry(
    dec: &SpectralDecomposition,
    t_uniform: Option<f64>,
) -> PoincareReport {
    let lambda_1 = dec.eigenvalues[1];
    let c_p = 1.0 / lambda_1;
    // 1D log-concave isoperimetric minimizers are half-lines: scan
    // thresholds, ψ = max min(F, 1−F)/ρ.
    let h = dec.grid.dx;
    let mut cdf = 0.0;
    let mut psi = 0.0f64;
    for j in 0..dec.grid.n {
        cdf += dec.weights[j];
        // Midpoint CDF convention: the threshold sits at the node, which
        // carries half of its own cell mass on each side.
        let at_node = cdf - 0.5 * dec.weights[j];
        let rho = dec.weights[j] / h;
        if rho > 1e-300 {
            psi = psi.max(at_node.min(1.0 - at_node).max(0.0) / rho);
        }
    }
    let x: Vec<f64> = dec.grid.nodes().collect();
    let (_, variance) = dec.moments(&x);
    let buser = psi * psi <= 9.0 / lambda_1 + 1e-9;
    let lichnerowicz = t_uniform.map(|t| {
        let slack = 1.0 / t - c_p;
        (slack, slack >= -1e-9)
    });
    let spectral_variance = t_uniform.map(|t| {
        let slack = (variance / t).sqrt() - c_p;
        (slack, slack >= -1e-9)
    });
    PoincareReport {
        lambda_1,
        c_p,
        psi,
        variance,
        buser_ledoux_pass: buser,
        lichnerowicz,
        spectral_variance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::CUBE_HALF_WIDTH;
    use approx::assert_relative_eq;

    const GAUSS: CoordinateLaw = CoordinateLaw::StandardGaussian;
    const EXP: CoordinateLaw = CoordinateLaw::CenteredExponential;
    const CUBE: CoordinateLaw = CoordinateLaw::UniformSym {
        half: CUBE_HALF_WIDTH,
    };

    fn gaussian_dec(nodes: usize, k: usize) -> SpectralDecomposition {
        discretize_generator(&Density1D::from_law(&GAUSS, nodes), k).unwrap()
    }

    #[test]
    fn ou_spectrum_is_integers() {
        // Hermite spectrum of Δ − x·∇: eigenvalues 0, 1, 2, 3 within 1e−3
        // at 4000 nodes on [−8, 8].
        let dec = gaussian_dec(4000, 8);
        for k in 0..4 {
            assert!(
                (dec.eigenvalues[k] - k as f64).abs() < 1e-3,
                "λ_{k} = {}",
                dec.eigenvalues[k]
            );
        }
    }

    #[test]
    fn exponential_gap_is_one_quarter() {
        let dec =
            discretize_generator(&Density1D::from_law(&EXP, 6000), 8).unwrap();
        assert!(
            (dec.eigenvalues[1] - 0.25).abs() < 1e-3,
            "λ₁ = {}",
            dec.eigenvalues[1]
        );
    }

    #[test]
    fn cube_gap_matches_neumann_interval() {
        let dec = discretize_generator(&Density1D::from_law(&CUBE, 4000), 8).unwrap();
        let expect = (std::f64::consts::PI / (2.0 * CUBE_HALF_WIDTH)).powi(2);
        assert_relative_eq!(dec.eigenvalues[1], expect, max_relative = 1e-5);
    }

    #[test]
    fn kernel_mode_is_constant() {
        let dec = gaussian_dec(2000, 4);
        assert!(dec.eigenvalues[0].abs() < 1e-8);
        let phi0 = dec.eigenfunction(0);
        let (m, var) = dec.moments(&phi0);
        assert_relative_eq!(m.abs(), 1.0, max_relative = 1e-6);
        assert!(var < 1e-10);
    }

    #[test]
    fn modes_are_orthonormal_with_small_residual() {
        let dec = gaussian_dec(3000, 12);
        assert!(dec.gram_deviation() < 1e-8, "gram {}", dec.gram_deviation());
        for k in 1..=6 {
            let res = dec.residual(k);
            assert!(
                res <= 1e-6 * dec.eigenvalues[k],
                "residual {res} at λ = {}",
                dec.eigenvalues[k]
            );
        }
    }

    #[test]
    fn projection_of_coordinate_below_levels() {
        let dec = gaussian_dec(4000, 8);
        let x: Vec<f64> = dec.grid.nodes().collect();
        // x is the λ = 1 Hermite mode: empty window below 0.5,
        // fully recovered below 1.5.
        let p_low = project_below(&dec, &x, 0.5);
        let (_, var_low) = dec.moments(&p_low);
        assert!(var_low < 1e-10);
        let p_mid = project_below(&dec, &x, 1.5);
        let diff: f64 = p_mid
            .iter()
            .zip(&x)
            .zip(&dec.weights)
            .map(|((p, xv), w)| (p - xv) * (p - xv) * w)
            .sum();
        assert!(diff < 1e-6, "L²(μ) recovery error {diff}");
        assert!(project_below(&dec, &x, -1.0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn profile_is_a_step_for_the_gaussian() {
        let dec = gaussian_dec(4000, 12);
        let prof = profile(&dec, &[0.5, 0.99, 1.01, 2.0, 1e6]);
        assert!(prof.f_values[0] < 1e-10);
        assert!(prof.f_values[1] < 1e-10);
        assert!(prof.f_values[2] > 1.0 - 1e-6);
        assert!(prof.f_values[3] > 1.0 - 1e-6);
        assert_relative_eq!(prof.f_values[4], 1.0);
        assert!(prof.resolved.iter().all(|&r| r));
        // Monotone within [0, 1].
        for w in prof.f_values.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn thin_shell_gaussian_numbers() {
        let dec = gaussian_dec(4000, 12);
        let rep = thin_shell_bound_check(&dec);
        assert_relative_eq!(rep.sigma_sq, 2.0, max_relative = 1e-6);
        assert_relative_eq!(rep.bound, 4.0, max_relative = 1e-4);
        assert!(rep.pass);
        assert!(rep.tail_mass < 1e-8);
    }

    #[test]
    fn h_minus1_hermite_values() {
        // u = x² − 1 has Var 2; ∂u = 2x has H⁻¹ norm² = 4 (λ = 1 mode).
        let dec = gaussian_dec(4000, 12);
        let u: Vec<f64> = dec.grid.nodes().map(|x| x * x - 1.0).collect();
        let du: Vec<f64> = dec.grid.nodes().map(|x| 2.0 * x).collect();
        let (_, var_u) = dec.moments(&u);
        assert_relative_eq!(var_u, 2.0, max_relative = 1e-6);
        let (h1, tail) = h_minus1_norm_sq(&dec, &du).unwrap();
        assert_relative_eq!(h1, 4.0, max_relative = 1e-5);
        assert!(tail < 1e-8);
        assert!(var_u <= h1);
    }

    #[test]
    fn h_minus1_hypothesis_violation() {
        let dec = gaussian_dec(1000, 4);
        let ones = vec![1.0; dec.grid.n];
        assert!(matches!(
            h_minus1_norm_sq(&dec, &ones).unwrap_err(),
            Error::HypothesisViolation { .. }
        ));
        // u = x fails ∫∂u dμ = 1 ≠ 0 in the product check.
        let err =
            h_minus1_product_check(&dec, &TestFn1::coordinate(), &TestFn1::constant(1.0))
                .unwrap_err();
        assert!(matches!(err, Error::HypothesisViolation { .. }));
    }

    #[test]
    fn h_minus1_product_gaussian() {
        let dec = gaussian_dec(3000, 24);
        let g = TestFn1::polynomial(vec![-1.0, 0.0, 1.0]); // x² − 1
        let rep = h_minus1_product_check(&dec, &g, &TestFn1::constant(1.0)).unwrap();
        // Reduces to the 1D case: Var = 2 ≤ ‖2x‖²_{H⁻¹} = 4.
        assert_relative_eq!(rep.var_u, 2.0, max_relative = 1e-6);
        assert_relative_eq!(rep.rhs, 4.0, max_relative = 1e-5);
        assert!(rep.pass);
    }

    #[test]
    fn poincare_gaussian_numbers() {
        let dec = gaussian_dec(4000, 4);
        // Certified at t = 1/2: −log ρ − t x² = x²/2 − x²/2 convex.
        let rep = poincare_and_isoperimetry(&dec, Some(0.5));
        assert_relative_eq!(rep.c_p, 1.0, max_relative = 1e-4);
        // Threshold at zero: ψ = 0.5/φ(0) = √(π/2).
        assert_relative_eq!(
            rep.psi,
            (std::f64::consts::PI / 2.0).sqrt(),
            max_relative = 1e-3
        );
        assert!(rep.buser_ledoux_pass);
        assert!(rep.lichnerowicz.unwrap().1);
        assert!(rep.spectral_variance.unwrap().1);
    }

    #[test]
    fn rayleigh_quotients_dominate_gap() {
        let dec = gaussian_dec(2000, 4);
        let lam1 = dec.eigenvalues[1];
        // Random mean-zero functions never undercut λ₁. Deterministic
        // pseudo-random probes keep the test reproducible.
        let mut state = 77u64;
        for _ in 0..200 {
            let mut u: Vec<f64> = (0..dec.grid.n)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(123);
                    ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
                })
                .collect();
            let (mean, _) = dec.moments(&u);
            for v in u.iter_mut() {
                *v -= mean;
            }
            assert!(dec.rayleigh(&u) >= lam1 - 1e-8);
        }
        // The first eigenfunction attains it.
        let phi1 = dec.eigenfunction(1);
        assert_relative_eq!(dec.rayleigh(&phi1), lam1, max_relative = 1e-8);
    }

    #[test]
    fn eigenvalue_grid_convergence() {
        for law in [GAUSS, EXP, CUBE] {
            let nodes = if law == EXP { 6000 } else { 3000 };
            let a = discretize_generator(&Density1D::from_law(&law, nodes), 2).unwrap();
            let b = discretize_generator(&Density1D::from_law(&law, 2 * nodes), 2).unwrap();
            let drift = (a.eigenvalues[1] - b.eigenvalues[1]).abs();
            assert!(drift < 1e-4, "λ₁ moved by {drift} under refinement");
        }
    }

    #[test]
    fn mass_defect_monitor() {
        let d = Density1D::from_law(&GAUSS, 1000);
        assert!(Density1D::mass_defect(&GAUSS, &d.grid) < 1e-12);
        let d = Density1D::from_law(&EXP, 1000);
        assert!(Density1D::mass_defect(&EXP, &d.grid) < 1e-12);
        let d = Density1D::from_law(&CUBE, 1000);
        assert_eq!(Density1D::mass_defect(&CUBE, &d.grid), 0.0);
    }

    #[test]
    fn resolution_guard() {
        let d = Density1D::from_law(&GAUSS, 100);
        assert!(matches!(
            discretize_generator(&d, 30).unwrap_err(),
            Error::ResolutionTooCoarse { .. }
        ));
    }

    #[test]
    fn t_uniform_input_lichnerowicz() {
        // N(0, 1/(2t)) is exactly t-uniform: C_p = 1/(2t) ≤ 1/t with a
        // factor-two slack, and the variance bound also holds.
        let t = 0.8f64;
        let grid = Grid1::span(-8.0 / (2.0 * t).sqrt(), 8.0 / (2.0 * t).sqrt(), 3001);
        let d = Density1D::from_fn(grid, |x| -t * x * x);
        let dec = discretize_generator(&d, 2).unwrap();
        let rep = poincare_and_isoperimetry(&dec, Some(t));
        assert_relative_eq!(rep.c_p, 1.0 / (2.0 * t), max_relative = 1e-3);
        assert!(rep.lichnerowicz.unwrap().1);
        assert!(rep.spectral_variance.unwrap().1);
    }
}
