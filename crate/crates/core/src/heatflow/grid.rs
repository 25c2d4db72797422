//! Uniform grids and quadrature used by the smoothing and spectral
//! machinery. Grids of one family share the spacing and lattice, so
//! convolution kernels depend only on index offsets.

/// Uniform 1D grid with nodes `x0 + i*dx`, `i = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1 {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl Grid1 {
    /// Grid spanning [a, b] with an odd node count of at least `min_nodes`
    /// (odd so Simpson weights apply and the midpoint is a node).
    pub fn span(a: f64, b: f64, min_nodes: usize) -> Self {
        let n = if min_nodes % 2 == 0 {
            min_nodes + 1
        } else {
            min_nodes
        };
        Grid1 {
            x0: a,
            dx: (b - a) / (n - 1) as f64,
            n,
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn last(&self) -> f64 {
        self.node(self.n - 1)
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.node(i))
    }

    /// Extend by `pad` on both sides, preserving spacing and lattice.
    pub fn padded(&self, pad: f64) -> Grid1 {
        let extra = (pad / self.dx).ceil() as usize;
        Grid1 {
            x0: self.x0 - extra as f64 * self.dx,
            dx: self.dx,
            n: self.n + 2 * extra,
        }
    }

    /// Composite Simpson weights (trapezoid fallback on even counts).
    pub fn quad_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n];
        if self.n < 3 || self.n % 2 == 0 {
            for v in w.iter_mut() {
                *v = self.dx;
            }
            w[0] = 0.5 * self.dx;
            w[self.n - 1] = 0.5 * self.dx;
            return w;
        }
        let h3 = self.dx / 3.0;
        w[0] = h3;
        w[self.n - 1] = h3;
        for (i, v) in w.iter_mut().enumerate().take(self.n - 1).skip(1) {
            *v = if i % 2 == 1 { 4.0 * h3 } else { 2.0 * h3 };
        }
        w
    }

    /// ∫ f over the grid by composite Simpson.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let w = self.quad_weights();
        let mut acc = crate::stats::CompensatedSum::new();
        for (v, wi) in values.iter().zip(&w) {
            acc.add(v * wi);
        }
        acc.value()
    }

    /// Linear interpolation, clamped at the ends.
    pub fn interp(&self, values: &[f64], x: f64) -> f64 {
        let t = (x - self.x0) / self.dx;
        if t <= 0.0 {
            return values[0];
        }
        let i = t.floor() as usize;
        if i >= self.n - 1 {
            return values[self.n - 1];
        }
        let frac = t - i as f64;
        values[i] * (1.0 - frac) + values[i + 1] * frac
    }

    /// Centered first derivative (one-sided at the ends).
    pub fn derivative(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for i in 1..n - 1 {
            out[i] = (values[i + 1] - values[i - 1]) / (2.0 * self.dx);
        }
        out[0] = (values[1] - values[0]) / self.dx;
        out[n - 1] = (values[n - 1] - values[n - 2]) / self.dx;
        out
    }

    /// Centered second derivative (copied inward at the ends).
    pub fn second_derivative(&self, values: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        let h2 = self.dx * self.dx;
        for i in 1..n - 1 {
            out[i] = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / h2;
        }
        out[0] = out[1];
        out[n - 1] = out[n - 2];
        out
    }
}

/// Uniform rectangular grid, values stored row-major as `ix * y.n + iy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2 {
    pub x: Grid1,
    pub y: Grid1,
}

impl Grid2 {
    pub fn len(&self) -> usize {
        self.x.n * self.y.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, ix: usize, iy: usize) -> usize {
        ix * self.y.n + iy
    }

    /// Tensor Simpson integral.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.len());
        let wx = self.x.quad_weights();
        let wy = self.y.quad_weights();
        let mut acc = crate::stats::CompensatedSum::new();
        for ix in 0..self.x.n {
            for iy in 0..self.y.n {
                acc.add(values[self.idx(ix, iy)] * wx[ix] * wy[iy]);
            }
        }
        acc.value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn simpson_weights_integrate_quartics_well() {
        let g = Grid1::span(0.0, 2.0, 201);
        let vals: Vec<f64> = g.nodes().map(|x| x.powi(4)).collect();
        assert_relative_eq!(g.integrate(&vals), 32.0 / 5.0, max_relative = 1e-9);
    }

    #[test]
    fn padded_preserves_lattice() {
        let g = Grid1::span(-1.0, 1.0, 101);
        let p = g.padded(0.5);
        assert_eq!(p.dx, g.dx);
        let offset = (g.x0 - p.x0) / g.dx;
        assert_relative_eq!(offset, offset.round(), epsilon = 1e-9);
        assert!(p.x0 <= g.x0 - 0.5 && p.last() >= g.last() + 0.5);
    }

    #[test]
    fn derivatives_of_a_cubic() {
        let g = Grid1::span(0.0, 1.0, 401);
        let vals: Vec<f64> = g.nodes().map(|x| x * x * x).collect();
        let d1 = g.derivative(&vals);
        let d2 = g.second_derivative(&vals);
        let i = 200;
        let x = g.node(i);
        assert_relative_eq!(d1[i], 3.0 * x * x, max_relative = 1e-4);
        assert_relative_eq!(d2[i], 6.0 * x, max_relative = 1e-6);
    }

    #[test]
    fn grid2_integrates_separable_function() {
        let g = Grid2 {
            x: Grid1::span(0.0, 1.0, 101),
            y: Grid1::span(0.0, 2.0, 151),
        };
        let mut vals = vec![0.0; g.len()];
        for ix in 0..g.x.n {
            for iy in 0..g.y.n {
                vals[g.idx(ix, iy)] = g.x.node(ix) * g.y.node(iy);
            }
        }
        assert_relative_eq!(g.integrate(&vals), 0.5 * 2.0, max_relative = 1e-10);
    }
}
