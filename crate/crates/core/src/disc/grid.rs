//! Polar lattice on the closed unit disc.
//!
//! Node 0 is the origin; ring `i ∈ 1..=N_r` sits at `r = i/N_r` with
//! `N_θ` equally spaced angles. Radial derivatives use second-order
//! differences (one-sided on the boundary ring), angular derivatives are
//! spectral. The origin carries the five-point-like stencil
//! `Δu(0) ≈ 4(mean of ring 1 − u(0))/h²` and Fourier-mode derivative formulas.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub struct DiscGrid {
    nr: usize,
    nt: usize,
    h: f64,
    weights: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for DiscGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiscGrid")
            .field("radial_nodes", &self.nr)
            .field("angular_nodes", &self.nt)
            .finish()
    }
}

impl PartialEq for DiscGrid {
    fn eq(&self, other: &Self) -> bool {
        self.nr == other.nr && self.nt == other.nt
    }
}

/// First and second Cartesian partial derivatives of a nodal field.
#[derive(Clone, Debug)]
pub struct Partials {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub xx: Vec<f64>,
    pub xy: Vec<f64>,
    pub yy: Vec<f64>,
}

impl DiscGrid {
    pub fn new(radial_nodes: usize, angular_nodes: usize) -> Result<Arc<Self>> {
        if radial_nodes < 4 {
            return Err(Error::Argument(format!(
                "need at least 4 radial nodes, got {radial_nodes}"
            )));
        }
        if angular_nodes < 8 || !angular_nodes.is_multiple_of(2) {
            return Err(Error::Argument(format!(
                "angular node count must be even and at least 8, got {angular_nodes}"
            )));
        }
        let (nr, nt) = (radial_nodes, angular_nodes);
        let h = 1.0 / nr as f64;
        let dtheta = 2.0 * PI / nt as f64;
        let mut weights = Vec::with_capacity(1 + nr * nt);
        weights.push(PI * h * h / 3.0);
        for i in 1..=nr {
            let radial = if i < nr {
                i as f64 * h * h
            } else {
                h / 2.0 - h * h / 6.0
            };
            weights.extend(std::iter::repeat_n(radial * dtheta, nt));
        }
        let cos = (0..nt).map(|j| (j as f64 * dtheta).cos()).collect();
        let sin = (0..nt).map(|j| (j as f64 * dtheta).sin()).collect();
        let mut planner = FftPlanner::new();
        Ok(Arc::new(Self {
            nr,
            nt,
            h,
            weights,
            cos,
            sin,
            forward: planner.plan_fft_forward(nt),
            inverse: planner.plan_fft_inverse(nt),
        }))
    }

    pub fn radial_nodes(&self) -> usize {
        self.nr
    }

    pub fn angular_nodes(&self) -> usize {
        self.nt
    }

    /// Radial spacing `1/N_r`.
    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        1 + self.nr * self.nt
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node index of ring `i ≥ 1`, angle `j`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        1 + (i - 1) * self.nt + (j % self.nt)
    }

    /// `(ring, angle)`; the origin is `(0, 0)`.
    #[inline]
    pub fn ring_angle(&self, idx: usize) -> (usize, usize) {
        if idx == 0 {
            (0, 0)
        } else {
            (1 + (idx - 1) / self.nt, (idx - 1) % self.nt)
        }
    }

    pub fn radius(&self, idx: usize) -> f64 {
        self.ring_angle(idx).0 as f64 * self.h
    }

    pub fn theta(&self, idx: usize) -> f64 {
        self.ring_angle(idx).1 as f64 * 2.0 * PI / self.nt as f64
    }

    pub fn xy(&self, idx: usize) -> (f64, f64) {
        let (i, j) = self.ring_angle(idx);
        let r = i as f64 * self.h;
        (r * self.cos[j], r * self.sin[j])
    }

    pub fn cos_sin(&self, j: usize) -> (f64, f64) {
        (self.cos[j], self.sin[j])
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        self.ring_angle(idx).0 == self.nr
    }

    /// Origin plus rings `1..N_r`.
    pub fn interior_count(&self) -> usize {
        1 + (self.nr - 1) * self.nt
    }

    /// Boundary ring occupies the last `N_θ` indices.
    pub fn boundary_range(&self) -> std::ops::Range<usize> {
        self.interior_count()..self.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Area integral of a nodal field (fixed summation order).
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }

    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let (x, y) = self.xy(k);
                f(x, y)
            })
            .collect()
    }

    fn ring(&self, values: &[f64], i: usize) -> Vec<C64> {
        if i == 0 {
            return vec![C64::new(values[0], 0.0); self.nt];
        }
        let s = self.index(i, 0);
        values[s..s + self.nt]
            .iter()
            .map(|&v| C64::new(v, 0.0))
            .collect()
    }

    /// Signed frequency of FFT bin `k`; Nyquist bin reported as `N/2`.
    fn freq(&self, k: usize) -> f64 {
        if k <= self.nt / 2 {
            k as f64
        } else {
            k as f64 - self.nt as f64
        }
    }

    /// `∂_θ` and `∂²_θ` of every ring (origin entries zero).
    pub fn theta_derivatives(&self, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut d1 = vec![0.0; self.len()];
        let mut d2 = vec![0.0; self.len()];
        let n = self.nt as f64;
        for i in 1..=self.nr {
            let mut buf = self.ring(values, i);
            self.forward.process(&mut buf);
            let mut b1: Vec<C64> = Vec::with_capacity(self.nt);
            let mut b2: Vec<C64> = Vec::with_capacity(self.nt);
            for (k, c) in buf.iter().enumerate() {
                let m = self.freq(k);
                if k == self.nt / 2 {
                    b1.push(C64::new(0.0, 0.0));
                } else {
                    b1.push(c * C64::new(0.0, m));
                }
                b2.push(c * (-m * m));
            }
            self.inverse.process(&mut b1);
            self.inverse.process(&mut b2);
            let s = self.index(i, 0);
            for j in 0..self.nt {
                d1[s + j] = b1[j].re / n;
                d2[s + j] = b2[j].re / n;
            }
        }
        (d1, d2)
    }

    /// Value on the ray at angle `j` and ring `i`, where ring 0 is the origin.
    #[inline]
    fn ray(&self, values: &[f64], i: usize, j: usize) -> f64 {
        if i == 0 {
            values[0]
        } else {
            values[self.index(i, j)]
        }
    }

    /// `∂_r` and `∂²_r` on rings (origin entries zero).
    pub fn radial_derivatives(&self, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut d1 = vec![0.0; self.len()];
        let mut d2 = vec![0.0; self.len()];
        let h = self.h;
        let nr = self.nr;
        for j in 0..self.nt {
            for i in 1..nr {
                let (um, u0, up) = (
                    self.ray(values, i - 1, j),
                    self.ray(values, i, j),
                    self.ray(values, i + 1, j),
                );
                let k = self.index(i, j);
                d1[k] = (up - um) / (2.0 * h);
                d2[k] = (up - 2.0 * u0 + um) / (h * h);
            }
            let (a, b, c, d) = (
                self.ray(values, nr, j),
                self.ray(values, nr - 1, j),
                self.ray(values, nr - 2, j),
                self.ray(values, nr - 3, j),
            );
            let k = self.index(nr, j);
            d1[k] = (3.0 * a - 4.0 * b + c) / (2.0 * h);
            d2[k] = (2.0 * a - 5.0 * b + 4.0 * c - d) / (h * h);
        }
        (d1, d2)
    }

    /// `(mean, cos-coefficient, sin-coefficient)` of Fourier mode `m` on ring `i`:
    /// ring values ≈ mean + Σ (a_m cos mθ + b_m sin mθ).
    fn ring_mode(&self, values: &[f64], i: usize, m: usize) -> (f64, f64) {
        let s = self.index(i, 0);
        let ring = &values[s..s + self.nt];
        let n = self.nt as f64;
        if m == 0 {
            return (ring.iter().sum::<f64>() / n, 0.0);
        }
        let (mut a, mut b) = (0.0, 0.0);
        for (j, v) in ring.iter().enumerate() {
            let jj = (j * m) % self.nt;
            a += v * self.cos[jj];
            b += v * self.sin[jj];
        }
        (2.0 * a / n, 2.0 * b / n)
    }

    /// Gradient at the origin from the first Fourier mode on rings 1 and 2
    /// (Richardson-extrapolated; exact for fields whose mode-1 part is `a r + b r³`).
    pub fn origin_gradient(&self, values: &[f64]) -> (f64, f64) {
        let h = self.h;
        let (a1, b1) = self.ring_mode(values, 1, 1);
        let (a2, b2) = self.ring_mode(values, 2, 1);
        (
            (4.0 * a1 / h - a2 / (2.0 * h)) / 3.0,
            (4.0 * b1 / h - b2 / (2.0 * h)) / 3.0,
        )
    }

    /// `(u_xx, u_xy, u_yy)` at the origin from modes 0 and 2 of ring 1;
    /// the trace equals the origin Laplacian stencil.
    pub fn origin_hessian(&self, values: &[f64]) -> (f64, f64, f64) {
        let h2 = self.h * self.h;
        let (mean, _) = self.ring_mode(values, 1, 0);
        let (c2, s2) = self.ring_mode(values, 1, 2);
        let lap = 4.0 * (mean - values[0]) / h2;
        let diff = 4.0 * c2 / h2;
        let xy = 2.0 * s2 / h2;
        (0.5 * (lap + diff), xy, 0.5 * (lap - diff))
    }

    /// Cartesian gradient `(u_x, u_y)` at every node.
    pub fn gradient(&self, values: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (ur, _) = self.radial_derivatives(values);
        let (ut, _) = self.theta_derivatives(values);
        let mut gx = vec![0.0; self.len()];
        let mut gy = vec![0.0; self.len()];
        let (ox, oy) = self.origin_gradient(values);
        gx[0] = ox;
        gy[0] = oy;
        for k in 1..self.len() {
            let (i, j) = self.ring_angle(k);
            let r = i as f64 * self.h;
            let (c, s) = (self.cos[j], self.sin[j]);
            gx[k] = c * ur[k] - s * ut[k] / r;
            gy[k] = s * ur[k] + c * ut[k] / r;
        }
        (gx, gy)
    }

    /// All first and second Cartesian partials.
    pub fn partials(&self, values: &[f64]) -> Partials {
        let n = self.len();
        let (ur, urr) = self.radial_derivatives(values);
        let (ut, utt) = self.theta_derivatives(values);
        let (urt, _) = self.theta_derivatives(&ur);
        let mut p = Partials {
            x: vec![0.0; n],
            y: vec![0.0; n],
            xx: vec![0.0; n],
            xy: vec![0.0; n],
            yy: vec![0.0; n],
        };
        let (ox, oy) = self.origin_gradient(values);
        let (hxx, hxy, hyy) = self.origin_hessian(values);
        p.x[0] = ox;
        p.y[0] = oy;
        p.xx[0] = hxx;
        p.xy[0] = hxy;
        p.yy[0] = hyy;
        for k in 1..n {
            let (i, j) = self.ring_angle(k);
            let r = i as f64 * self.h;
            let (c, s) = (self.cos[j], self.sin[j]);
            p.x[k] = c * ur[k] - s * ut[k] / r;
            p.y[k] = s * ur[k] + c * ut[k] / r;
            let tang = ur[k] / r + utt[k] / (r * r);
            let mixed = urt[k] / r - ut[k] / (r * r);
            p.xx[k] = c * c * urr[k] + s * s * tang - 2.0 * c * s * mixed;
            p.yy[k] = s * s * urr[k] + c * c * tang + 2.0 * c * s * mixed;
            p.xy[k] = c * s * (urr[k] - tang) + (c * c - s * s) * mixed;
        }
        p
    }

    /// Discrete Laplacian on interior nodes (boundary entries zero).
    pub fn laplacian(&self, values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        let h = self.h;
        let (_, utt) = self.theta_derivatives(values);
        let (mean, _) = self.ring_mode(values, 1, 0);
        out[0] = 4.0 * (mean - values[0]) / (h * h);
        for i in 1..self.nr {
            let r = i as f64 * h;
            let a = 1.0 / (h * h) - 1.0 / (2.0 * h * r);
            let b = -2.0 / (h * h);
            let c = 1.0 / (h * h) + 1.0 / (2.0 * h * r);
            for j in 0..self.nt {
                let k = self.index(i, j);
                out[k] = a * self.ray(values, i - 1, j)
                    + b * values[k]
                    + c * self.ray(values, i + 1, j)
                    + utt[k] / (r * r);
            }
        }
        out
    }

    fn ring_fft(&self, values: &[f64], i: usize) -> Vec<C64> {
        let mut buf = self.ring(values, i);
        self.forward.process(&mut buf);
        buf
    }

    fn write_ring(&self, out: &mut [f64], i: usize, mut buf: Vec<C64>) {
        self.inverse.process(&mut buf);
        let n = self.nt as f64;
        let s = self.index(i, 0);
        for j in 0..self.nt {
            out[s + j] = buf[j].re / n;
        }
    }

    /// Solves `Δu = f` on interior nodes with `u = boundary` on the last ring.
    /// `rhs` is indexed by node; boundary entries are ignored.
    pub fn solve_dirichlet(&self, rhs: &[f64], boundary: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.len());
        assert_eq!(boundary.len(), self.nt);
        let (nr, nt, h) = (self.nr, self.nt, self.h);
        let rings: Vec<Vec<C64>> = (1..nr).map(|i| self.ring_fft(rhs, i)).collect();
        let mut bnd: Vec<C64> = boundary.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.forward.process(&mut bnd);
        let mut sol: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); nt]; nr - 1];
        let mut origin_mode = C64::new(0.0, 0.0);
        let h2 = h * h;
        for k in 0..nt {
            let m = self.freq(k);
            let m2 = m * m;
            // unknowns: [V0 (mode 0 only)], û_1..û_{N-1}
            let offset = usize::from(k == 0);
            let size = nr - 1 + offset;
            let mut lower = vec![0.0; size];
            let mut diag = vec![0.0; size];
            let mut upper = vec![0.0; size];
            let mut b = vec![C64::new(0.0, 0.0); size];
            if k == 0 {
                diag[0] = -4.0 / h2;
                upper[0] = 4.0 / h2;
                b[0] = C64::new(rhs[0] * nt as f64, 0.0);
            }
            for i in 1..nr {
                let r = i as f64 * h;
                let row = i - 1 + offset;
                lower[row] = 1.0 / h2 - 1.0 / (2.0 * h * r);
                diag[row] = -2.0 / h2 - m2 / (r * r);
                upper[row] = 1.0 / h2 + 1.0 / (2.0 * h * r);
                b[row] = rings[i - 1][k];
            }
            if k != 0 {
                lower[0] = 0.0;
            }
            let last = size - 1;
            b[last] -= bnd[k] * upper[last];
            upper[last] = 0.0;
            let x = thomas(&lower, &diag, &upper, &b);
            if k == 0 {
                origin_mode = x[0];
            }
            for i in 1..nr {
                sol[i - 1][k] = x[i - 1 + offset];
            }
        }
        let mut out = vec![0.0; self.len()];
        out[0] = origin_mode.re / nt as f64;
        for (i, buf) in sol.into_iter().enumerate() {
            self.write_ring(&mut out, i + 1, buf);
        }
        let s = self.index(nr, 0);
        out[s..s + nt].copy_from_slice(boundary);
        out
    }

    /// Solves `Δu = f` on all rings (boundary included, through a ghost ring)
    /// with `∂_r u = flux` on the boundary, pinning `u(0) = 0`.
    /// The origin equation absorbs the discrete compatibility defect.
    pub fn solve_neumann(&self, rhs: &[f64], flux: &[f64]) -> Vec<f64> {
        assert_eq!(rhs.len(), self.len());
        assert_eq!(flux.len(), self.nt);
        let (nr, nt, h) = (self.nr, self.nt, self.h);
        let rings: Vec<Vec<C64>> = (1..=nr).map(|i| self.ring_fft(rhs, i)).collect();
        let mut fl: Vec<C64> = flux.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.forward.process(&mut fl);
        let mut sol: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); nt]; nr];
        let h2 = h * h;
        for k in 0..nt {
            let m = self.freq(k);
            let m2 = m * m;
            let offset = usize::from(k == 0);
            let size = nr + offset;
            let mut lower = vec![0.0; size];
            let mut diag = vec![0.0; size];
            let mut upper = vec![0.0; size];
            let mut b = vec![C64::new(0.0, 0.0); size];
            if k == 0 {
                diag[0] = 1.0;
            }
            for i in 1..=nr {
                let r = i as f64 * h;
                let row = i - 1 + offset;
                lower[row] = 1.0 / h2 - 1.0 / (2.0 * h * r);
                diag[row] = -2.0 / h2 - m2 / (r * r);
                upper[row] = 1.0 / h2 + 1.0 / (2.0 * h * r);
                b[row] = rings[i - 1][k];
            }
            if k != 0 {
                lower[0] = 0.0;
            }
            let last = size - 1;
            b[last] -= fl[k] * (2.0 * h * upper[last]);
            lower[last] += upper[last];
            upper[last] = 0.0;
            let x = thomas(&lower, &diag, &upper, &b);
            for i in 1..=nr {
                sol[i - 1][k] = x[i - 1 + offset];
            }
        }
        let mut out = vec![0.0; self.len()];
        for (i, buf) in sol.into_iter().enumerate() {
            self.write_ring(&mut out, i + 1, buf);
        }
        out
    }

    /// Precomputes per-ring Fourier data for evaluation off the nodes.
    pub fn interpolator(self: &Arc<Self>, values: &[f64]) -> Interpolator {
        let n = self.nt as f64;
        let modes = (1..=self.nr)
            .map(|i| {
                let buf = self.ring_fft(values, i);
                buf[..=self.nt / 2].iter().map(|c| c / n).collect()
            })
            .collect();
        Interpolator {
            grid: Arc::clone(self),
            origin: values[0],
            modes,
        }
    }

    /// Boundary ring values.
    pub fn boundary_values<'a>(&self, values: &'a [f64]) -> &'a [f64] {
        &values[self.boundary_range()]
    }
}

/// Thomas algorithm; real tridiagonal coefficients, complex right-hand side.
fn thomas(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[C64]) -> Vec<C64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![C64::new(0.0, 0.0); n];
    c[0] = upper[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - lower[i] * c[i - 1];
        c[i] = upper[i] / m;
        d[i] = (rhs[i] - d[i - 1] * lower[i]) / m;
    }
    let mut x = vec![C64::new(0.0, 0.0); n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - x[i + 1] * c[i];
    }
    x
}

/// Trigonometric interpolation in θ and cubic Lagrange interpolation in `r`
/// (through the origin along the diameter).
#[derive(Clone, Debug)]
pub struct Interpolator {
    grid: Arc<DiscGrid>,
    origin: f64,
    modes: Vec<Vec<C64>>,
}

impl Interpolator {
    fn ring_value(&self, ring: i64, theta: f64) -> f64 {
        if ring == 0 {
            return self.origin;
        }
        let (i, th) = if ring < 0 {
            ((-ring) as usize, theta + PI)
        } else {
            (ring as usize, theta)
        };
        let c = &self.modes[i - 1];
        let half = self.grid.nt / 2;
        let (s1, c1) = th.sin_cos();
        let (mut s, mut co) = (0.0, 1.0);
        let mut v = c[0].re;
        for cm in c.iter().take(half).skip(1) {
            (s, co) = (s * c1 + co * s1, co * c1 - s * s1);
            v += 2.0 * (cm.re * co - cm.im * s);
        }
        v + c[half].re * (half as f64 * th).cos()
    }

    /// Value at `(x, y)` with `x² + y² ≤ 1` (slightly outside is extrapolated).
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let g = &self.grid;
        let r = x.hypot(y);
        let theta = y.atan2(x);
        let t = r / g.h;
        let nr = g.nr as i64;
        let k = (t.floor() as i64).clamp(0, nr - 2);
        let lo = k - 1;
        let mut v = 0.0;
        for a in 0..4 {
            let ra = (lo + a) as f64;
            let mut w = 1.0;
            for b in 0..4 {
                if a != b {
                    let rb = (lo + b) as f64;
                    w *= (t - rb) / (ra - rb);
                }
            }
            if w != 0.0 {
                v += w * self.ring_value(lo + a, theta);
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> Arc<DiscGrid> {
        DiscGrid::new(16, 32).unwrap()
    }

    #[test]
    fn quadrature_moments() {
        let g = DiscGrid::new(64, 128).unwrap();
        assert!(g.weights().iter().all(|w| *w > 0.0));
        assert_relative_eq!(g.integrate(&vec![1.0; g.len()]), PI, epsilon = 1e-12);
        assert!(g.integrate(&g.sample(|x, _| x)).abs() < 1e-12);
        assert!(g.integrate(&g.sample(|_, y| y)).abs() < 1e-12);
    }

    #[test]
    fn derivatives_of_quadratics_are_exact() {
        let g = grid();
        let u = g.sample(|x, y| 1.0 + 2.0 * x - y + 0.5 * x * x + 3.0 * x * y - y * y);
        let p = g.partials(&u);
        for k in 0..g.len() {
            let (x, y) = g.xy(k);
            let tol = 1e-9;
            assert!((p.x[k] - (2.0 + x + 3.0 * y)).abs() < tol, "u_x at {k}");
            assert!((p.y[k] - (-1.0 + 3.0 * x - 2.0 * y)).abs() < tol, "u_y at {k}");
            assert!((p.xx[k] - 1.0).abs() < 1e-7, "u_xx at {k}: {}", p.xx[k]);
            assert!((p.xy[k] - 3.0).abs() < 1e-7, "u_xy at {k}");
            assert!((p.yy[k] + 2.0).abs() < 1e-7, "u_yy at {k}");
        }
        let lap = g.laplacian(&u);
        for k in 0..g.interior_count() {
            assert!((lap[k] + 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn dirichlet_solver_inverts_laplacian() {
        let g = grid();
        let u = g.sample(|x, y| (x * 1.3).sin() * (y - 0.2).cosh() + x * y * y);
        let f = g.laplacian(&u);
        let sol = g.solve_dirichlet(&f, g.boundary_values(&u));
        for (a, b) in sol.iter().zip(&u) {
            assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn neumann_solver_recovers_field_up_to_pin() {
        let g = DiscGrid::new(32, 64).unwrap();
        let u = g.sample(|x, y| x * x - y * y + 0.3 * x);
        let f = g.laplacian(&u);
        // ∂_r u on the boundary: 2cos²θ − 2sin²θ + 0.3cosθ
        let flux: Vec<f64> = (0..g.angular_nodes())
            .map(|j| {
                let (c, s) = g.cos_sin(j);
                2.0 * (c * c - s * s) + 0.3 * c
            })
            .collect();
        let mut rhs = f.clone();
        for k in g.boundary_range() {
            rhs[k] = 0.0;
        }
        let sol = g.solve_neumann(&rhs, &flux);
        let err = sol.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-3, "{err}");
    }

    #[test]
    fn interpolation_reproduces_smooth_fields() {
        let g = DiscGrid::new(32, 64).unwrap();
        let f = |x: f64, y: f64| (x + 0.5 * y).exp() * (1.0 + x * y);
        let it = g.interpolator(&g.sample(f));
        for (x, y) in [(0.0, 0.0), (0.01, -0.02), (0.3, 0.4), (-0.7, 0.5), (0.0, -0.999)] {
            assert!((it.eval(x, y) - f(x, y)).abs() < 1e-6, "({x},{y})");
        }
    }
}
