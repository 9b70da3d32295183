//! Scalar fields on chart coordinates with first and second derivatives.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const GRADIENT_STEP: f64 = 1e-4;
pub const HESSIAN_STEP: f64 = 1e-3;

pub trait ScalarField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn label(&self) -> String;

    fn value(&self, x: &DVector<f64>) -> Result<f64>;

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        stencil_gradient(self, x, GRADIENT_STEP)
    }

    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        stencil_hessian(self, x, HESSIAN_STEP)
    }
}

pub fn stencil_gradient<F: ScalarField + ?Sized>(
    f: &F,
    x: &DVector<f64>,
    h: f64,
) -> Result<DVector<f64>> {
    let mut g = DVector::zeros(x.len());
    let mut y = x.clone();
    for k in 0..x.len() {
        y[k] = x[k] + h;
        let fp = f.value(&y)?;
        y[k] = x[k] - h;
        let fm = f.value(&y)?;
        y[k] = x[k];
        g[k] = (fp - fm) / (2.0 * h);
    }
    Ok(g)
}

pub fn stencil_hessian<F: ScalarField + ?Sized>(
    f: &F,
    x: &DVector<f64>,
    h: f64,
) -> Result<DMatrix<f64>> {
    let n = x.len();
    let f0 = f.value(x)?;
    let mut m = DMatrix::zeros(n, n);
    let mut y = x.clone();
    for i in 0..n {
        y[i] = x[i] + h;
        let fp = f.value(&y)?;
        y[i] = x[i] - h;
        let fm = f.value(&y)?;
        y[i] = x[i];
        m[(i, i)] = (fp - 2.0 * f0 + fm) / (h * h);
        for j in i + 1..n {
            let mut at = |si: f64, sj: f64| {
                y[i] = x[i] + si * h;
                y[j] = x[j] + sj * h;
                let v = f.value(&y);
                y[i] = x[i];
                y[j] = x[j];
                v
            };
            let v = (at(1.0, 1.0)? - at(1.0, -1.0)? - at(-1.0, 1.0)? + at(-1.0, -1.0)?)
                / (4.0 * h * h);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    Ok(m)
}

/// `|x − c|²`.
#[derive(Clone, Debug)]
pub struct NormSquared {
    pub center: DVector<f64>,
}

impl NormSquared {
    pub fn new(center: DVector<f64>) -> Self {
        Self { center }
    }

    pub fn centered(dim: usize) -> Self {
        Self::new(DVector::zeros(dim))
    }
}

impl ScalarField for NormSquared {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn label(&self) -> String {
        "norm_squared".into()
    }
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok((x - &self.center).norm_squared())
    }
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok((x - &self.center) * 2.0)
    }
    fn hessian(&self, _x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        Ok(DMatrix::identity(n, n) * 2.0)
    }
}

/// `a·x + b`.
#[derive(Clone, Debug)]
pub struct Linear {
    pub coefficients: DVector<f64>,
    pub offset: f64,
}

impl Linear {
    pub fn new(coefficients: DVector<f64>, offset: f64) -> Self {
        Self {
            coefficients,
            offset,
        }
    }
}

impl ScalarField for Linear {
    fn dim(&self) -> usize {
        self.coefficients.len()
    }
    fn label(&self) -> String {
        "linear".into()
    }
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.coefficients.dot(x) + self.offset)
    }
    fn gradient(&self, _x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.coefficients.clone())
    }
    fn hessian(&self, _x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        Ok(DMatrix::zeros(n, n))
    }
}

/// `xᵀ Q x + b·x + c` with `Q` symmetrized on construction.
#[derive(Clone, Debug)]
pub struct Quadratic {
    pub matrix: DMatrix<f64>,
    pub linear: DVector<f64>,
    pub constant: f64,
}

impl Quadratic {
    pub fn new(matrix: DMatrix<f64>, linear: DVector<f64>, constant: f64) -> Self {
        let matrix = (&matrix + matrix.transpose()) * 0.5;
        Self {
            matrix,
            linear,
            constant,
        }
    }

    /// `Σ d_i x_i²`.
    pub fn diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(d)),
            DVector::zeros(n),
            0.0,
        )
    }
}

impl ScalarField for Quadratic {
    fn dim(&self) -> usize {
        self.linear.len()
    }
    fn label(&self) -> String {
        "quadratic".into()
    }
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(x.dot(&(&self.matrix * x)) + self.linear.dot(x) + self.constant)
    }
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(&self.matrix * x * 2.0 + &self.linear)
    }
    fn hessian(&self, _x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(&self.matrix * 2.0)
    }
}

/// `Σ c_k f_k`.
#[derive(Clone, Debug)]
pub struct Sum {
    terms: Vec<(f64, Arc<dyn ScalarField>)>,
}

impl Sum {
    pub fn new(terms: Vec<(f64, Arc<dyn ScalarField>)>) -> Self {
        assert!(!terms.is_empty(), "empty sum");
        let n = terms[0].1.dim();
        assert!(terms.iter().all(|(_, f)| f.dim() == n), "dimension mismatch");
        Self { terms }
    }
}

impl ScalarField for Sum {
    fn dim(&self) -> usize {
        self.terms[0].1.dim()
    }
    fn label(&self) -> String {
        self.terms
            .iter()
            .map(|(c, f)| format!("{c}*{}", f.label()))
            .collect::<Vec<_>>()
            .join("+")
    }
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let mut s = 0.0;
        for (c, f) in &self.terms {
            s += c * f.value(x)?;
        }
        Ok(s)
    }
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let mut s = DVector::zeros(self.dim());
        for (c, f) in &self.terms {
            s += f.gradient(x)? * *c;
        }
        Ok(s)
    }
    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = self.dim();
        let mut s = DMatrix::zeros(n, n);
        for (c, f) in &self.terms {
            s += f.hessian(x)? * *c;
        }
        Ok(s)
    }
}

/// A radial function `f(|x − c|)` given by its profile and two derivatives.
pub trait RadialProfile: Send + Sync + fmt::Debug {
    /// `(f(s), f'(s), f''(s))` for `s > 0`.
    fn eval(&self, s: f64) -> (f64, f64, f64);
    fn label(&self) -> String;
}

#[derive(Clone, Debug)]
pub struct Radial<P> {
    pub center: DVector<f64>,
    pub profile: P,
}

impl<P: RadialProfile> Radial<P> {
    pub fn new(center: DVector<f64>, profile: P) -> Self {
        Self { center, profile }
    }

    fn split(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let d = x - &self.center;
        let s = d.norm();
        if s == 0.0 {
            return Err(Error::domain(x.as_slice(), "radial field evaluated at its center"));
        }
        Ok((s, d / s))
    }
}

impl<P: RadialProfile> ScalarField for Radial<P> {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn label(&self) -> String {
        self.profile.label()
    }
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let (s, _) = self.split(x)?;
        Ok(self.profile.eval(s).0)
    }
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (s, r) = self.split(x)?;
        Ok(r * self.profile.eval(s).1)
    }
    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (s, r) = self.split(x)?;
        let (_, d1, d2) = self.profile.eval(s);
        let n = self.dim();
        let rr = &r * r.transpose();
        Ok(&rr * d2 + (DMatrix::identity(n, n) - rr) * (d1 / s))
    }
}

/// `log s + A s`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogPlusLinear {
    pub a: f64,
}

impl RadialProfile for LogPlusLinear {
    fn eval(&self, s: f64) -> (f64, f64, f64) {
        (s.ln() + self.a * s, 1.0 / s + self.a, -1.0 / (s * s))
    }
    fn label(&self) -> String {
        format!("log_plus_linear(A={})", self.a)
    }
}

/// `φ_A(x) = log|x − c| + A|x − c|`.
pub type LogBarrier = Radial<LogPlusLinear>;

pub fn log_barrier(center: DVector<f64>, a: f64) -> LogBarrier {
    Radial::new(center, LogPlusLinear { a })
}

/// Squared geodesic distance from the origin for the metric `4|dx|²/(1 + K|x|²)²`,
/// `d² = u·q(Ku)²` with `u = |x|²` and `q(w) = 2 atan(√w)/√w`.
#[derive(Clone, Debug)]
pub struct GeodesicSquared {
    pub dim: usize,
    pub curvature: f64,
}

impl GeodesicSquared {
    pub fn new(dim: usize, curvature: f64) -> Self {
        Self { dim, curvature }
    }

    /// `f(w) = atan(√w)/√w` (atanh for `w < 0`) and two derivatives.
    fn profile(w: f64) -> (f64, f64, f64) {
        if w.abs() < 0.05 {
            // f = Σ (−w)^k/(2k+1)
            let (mut f, mut f1, mut f2) = (0.0, 0.0, 0.0);
            for k in (0..30).rev() {
                let c = if k % 2 == 0 { 1.0 } else { -1.0 } / (2 * k + 1) as f64;
                let kf = k as f64;
                f = f * w + c;
                if k >= 1 {
                    f1 = f1 * w + c * kf;
                }
                if k >= 2 {
                    f2 = f2 * w + c * kf * (kf - 1.0);
                }
            }
            return (f, f1, f2);
        }
        let s = w.abs().sqrt();
        let f = if w > 0.0 { s.atan() / s } else { s.atanh() / s };
        // 2w f' + f = 1/(1+w)
        let f1 = (1.0 / (1.0 + w) - f) / (2.0 * w);
        let f2 = (-1.0 / ((1.0 + w) * (1.0 + w)) - 3.0 * f1) / (2.0 * w);
        (f, f1, f2)
    }

    /// `G(u)` with `d² = G(|x|²)`, and two derivatives in `u`.
    fn g(&self, u: f64) -> Result<(f64, f64, f64)> {
        let k = self.curvature;
        let w = k * u;
        if w <= -1.0 {
            return Err(Error::domain(&[u], "outside the hyperbolic ball model"));
        }
        let (f, f1, f2) = Self::profile(w);
        // q = 2f, G = u q²
        let (q, q1, q2) = (2.0 * f, 2.0 * f1, 2.0 * f2);
        let g0 = u * q * q;
        let g1 = q * q + 2.0 * u * k * q * q1;
        let g2 = 4.0 * k * q * q1 + 2.0 * u * k * k * (q1 * q1 + q * q2);
        Ok((g0, g1, g2))
    }
}

impl ScalarField for GeodesicSquared {
    fn dim(&self) -> usize {
        self.dim
    }
    fn label(&self) -> String {
        format!("geodesic_squared(K={})", self.curvature)
    }
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.g(x.norm_squared())?.0)
    }
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(x * (2.0 * self.g(x.norm_squared())?.1))
    }
    fn hessian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let (_, g1, g2) = self.g(x.norm_squared())?;
        let n = self.dim;
        Ok(DMatrix::identity(n, n) * (2.0 * g1) + x * x.transpose() * (4.0 * g2))
    }
}

/// A closure field whose derivatives come from central differences.
pub struct FnField<F> {
    dim: usize,
    label: String,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&DVector<f64>) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, label: impl Into<String>, f: F) -> Self {
        Self {
            dim,
            label: label.into(),
            f,
        }
    }
}

impl<F> fmt::Debug for FnField<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnField")
            .field("dim", &self.dim)
            .field("label", &self.label)
            .finish()
    }
}

impl<F> ScalarField for FnField<F>
where
    F: Fn(&DVector<f64>) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn label(&self) -> String {
        self.label.clone()
    }
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(x.as_slice(), format!("{} is not finite", self.label)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::dvector;
    use proptest::prelude::*;

    #[test]
    fn geodesic_squared_matches_closed_forms() {
        let x = dvector![0.3, -0.2, 0.1];
        let s: f64 = x.norm();
        let sphere = GeodesicSquared::new(3, 1.0);
        assert_relative_eq!(sphere.value(&x).unwrap(), (2.0 * s.atan()).powi(2), epsilon = 1e-14);
        let hyp = GeodesicSquared::new(3, -1.0);
        assert_relative_eq!(hyp.value(&x).unwrap(), (2.0 * s.atanh()).powi(2), epsilon = 1e-14);
        assert_relative_eq!(GeodesicSquared::new(3, 0.0).value(&x).unwrap(), 4.0 * s * s, epsilon = 1e-15);
        for f in [&sphere, &hyp] {
            for p in [x.clone(), dvector![0.05, 0.1, 0.0], dvector![0.0, 0.0, 0.0]] {
                let g = f.gradient(&p).unwrap();
                assert_relative_eq!(g, stencil_gradient(f, &p, 1e-5).unwrap(), epsilon = 1e-8);
                let h = f.hessian(&p).unwrap();
                assert_relative_eq!(h, stencil_hessian(f, &p, 1e-4).unwrap(), epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn log_barrier_derivatives_match_stencils() {
        let f = log_barrier(dvector![0.1, 0.0, -0.1], 3.0);
        let x = dvector![0.4, 0.2, 0.3];
        let g = f.gradient(&x).unwrap();
        let gs = stencil_gradient(&f, &x, 1e-5).unwrap();
        assert_relative_eq!(g, gs, epsilon = 1e-8);
        let h = f.hessian(&x).unwrap();
        let hs = stencil_hessian(&f, &x, 1e-3).unwrap();
        assert_relative_eq!(h, hs, epsilon = 1e-4);
    }

    #[test]
    fn radial_center_is_domain_error() {
        let f = log_barrier(dvector![0.0, 0.0], 1.0);
        assert!(f.value(&dvector![0.0, 0.0]).is_err());
    }

    proptest! {
        #[test]
        fn quadratic_stencils_are_exact_to_roundoff(
            q in proptest::collection::vec(-2.0f64..2.0, 9),
            b in proptest::collection::vec(-2.0f64..2.0, 3),
            x in proptest::collection::vec(-1.0f64..1.0, 3),
        ) {
            let f = Quadratic::new(DMatrix::from_row_slice(3, 3, &q), DVector::from_vec(b), 0.5);
            let x = DVector::from_vec(x);
            let h = f.hessian(&x).unwrap();
            let hs = stencil_hessian(&f, &x, 1e-3).unwrap();
            prop_assert!((h - hs).amax() < 1e-6);
            let g = f.gradient(&x).unwrap();
            let gs = stencil_gradient(&f, &x, 1e-4).unwrap();
            prop_assert!((g - gs).amax() < 1e-8);
        }
    }
}
