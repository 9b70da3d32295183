//! Riemannian charts: a coordinate box carrying a smooth metric tensor field.
//!
//! A [`Chart`] evaluates `g_ij(x)`, its first derivatives (closed form when the
//! field provides them, second-order central differences otherwise), the
//! Levi-Civita Christoffel symbols and covariant Hessians of scalar fields.
//! Geodesic machinery (exponential map, normal coordinates, distance) lives in
//! [`geodesic`].

pub mod geodesic;
pub mod metrics;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::field::ScalarField;

pub use metrics::{ChartSpec, MetricSpec};

/// Default central-difference step (chart units).
pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// A smooth field of symmetric matrices `x ↦ g(x)`.
pub trait MetricField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn tensor(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;

    /// `∂g/∂x_k` for every `k`, when known in closed form.
    fn derivatives(&self, _x: &DVector<f64>) -> Option<Result<Vec<DMatrix<f64>>>> {
        None
    }

    /// Constant tensor field (all Christoffel symbols vanish).
    fn is_constant(&self) -> bool {
        false
    }

    /// Serializable description, when the field is one of the built-in kinds.
    fn spec(&self) -> Option<MetricSpec> {
        None
    }
}

/// How metric derivatives are obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DerivativeScheme {
    Analytic,
    CentralDifference { step: f64 },
}

/// Christoffel symbols `Γ^i_jk` at a point, stored densely and symmetric in `(j, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    dim: usize,
    values: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            values: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    fn set_sym(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let n = self.dim;
        self.values[(i * n + j) * n + k] = v;
        self.values[(i * n + k) * n + j] = v;
    }

    /// `Σ_jk Γ^i_jk a^j b^k` for every `i`.
    pub fn contract(&self, a: &[f64], b: &[f64]) -> DVector<f64> {
        let n = self.dim;
        DVector::from_fn(n, |i, _| {
            let mut s = 0.0;
            for j in 0..n {
                let row = &self.values[(i * n + j) * n..(i * n + j + 1) * n];
                let mut t = 0.0;
                for k in 0..n {
                    t += row[k] * b[k];
                }
                s += a[j] * t;
            }
            s
        })
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Copy with `(j, k)` averaged; equal to `self` for any output of [`Chart::christoffel_at`].
    pub fn symmetrized(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    out.set_sym(i, j, k, 0.5 * (self.get(i, j, k) + self.get(i, k, j)));
                }
            }
        }
        out
    }
}

/// Covariant Hessian `∇²ρ` at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianForm(pub DMatrix<f64>);

impl HessianForm {
    pub fn apply(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&(&self.0 * b))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// A coordinate box with a Riemannian metric.
#[derive(Clone, Debug)]
pub struct Chart {
    bounds: Vec<(f64, f64)>,
    field: Arc<dyn MetricField>,
    scheme: DerivativeScheme,
}

impl Chart {
    /// Builds a chart; the derivative scheme is analytic when the field
    /// supplies closed-form derivatives and central differences otherwise.
    pub fn new(bounds: Vec<(f64, f64)>, field: Arc<dyn MetricField>) -> Result<Self> {
        if bounds.len() != field.dim() {
            return Err(Error::Argument(format!(
                "box has {} intervals but metric has dimension {}",
                bounds.len(),
                field.dim()
            )));
        }
        if field.dim() < 2 {
            return Err(Error::Argument("chart dimension must be at least 2".into()));
        }
        if bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::Argument(format!("empty box {bounds:?}")));
        }
        let probe = DVector::from_iterator(bounds.len(), bounds.iter().map(|(l, h)| 0.5 * (l + h)));
        let scheme = match field.derivatives(&probe) {
            Some(_) => DerivativeScheme::Analytic,
            None => DerivativeScheme::CentralDifference {
                step: DEFAULT_FD_STEP,
            },
        };
        Ok(Self {
            bounds,
            field,
            scheme,
        })
    }

    pub fn euclidean(dim: usize, half_width: f64) -> Self {
        Self::new(
            vec![(-half_width, half_width); dim],
            Arc::new(metrics::Euclidean { dim }),
        )
        .expect("valid euclidean chart")
    }

    pub fn from_spec(spec: &ChartSpec) -> Result<Self> {
        spec.build()
    }

    pub fn spec(&self) -> Option<ChartSpec> {
        self.field.spec().map(|metric| ChartSpec {
            dim: self.dim(),
            bounds: self.bounds.iter().map(|&(l, h)| [l, h]).collect(),
            metric,
        })
    }

    /// Forces a derivative scheme (central differences are always available).
    pub fn with_scheme(mut self, scheme: DerivativeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn scheme(&self) -> DerivativeScheme {
        self.scheme
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn field(&self) -> &Arc<dyn MetricField> {
        &self.field
    }

    pub fn is_flat(&self) -> bool {
        self.field.is_constant()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| *v >= *lo && *v <= *hi)
    }

    fn contains_with_margin(&self, x: &[f64], margin: f64) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.bounds)
                .all(|(v, (lo, hi))| *v - margin >= *lo && *v + margin <= *hi)
    }

    fn check_inside(&self, x: &DVector<f64>) -> Result<()> {
        if self.contains(x.as_slice()) {
            Ok(())
        } else {
            Err(Error::domain(x.as_slice(), "outside box"))
        }
    }

    /// Metric tensor at `x`, checked for symmetry and positive definiteness.
    pub fn metric_at(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_inside(x)?;
        let g = self.field.tensor(x)?;
        let n = self.dim();
        let scale = g.amax().max(1.0);
        for i in 0..n {
            for j in i + 1..n {
                if (g[(i, j)] - g[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Numeric(format!(
                        "metric tensor not symmetric at {:?}",
                        x.as_slice()
                    )));
                }
            }
        }
        if g.clone().cholesky().is_none() {
            let min_eigenvalue = g.clone().symmetric_eigen().eigenvalues.min();
            return Err(Error::Metric {
                point: x.as_slice().to_vec(),
                min_eigenvalue,
            });
        }
        Ok(g)
    }

    /// `∂g/∂x_k` for all `k`.
    pub fn metric_derivatives(&self, x: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
        let n = self.dim();
        if self.field.is_constant() {
            self.check_inside(x)?;
            return Ok(vec![DMatrix::zeros(n, n); n]);
        }
        match self.scheme {
            DerivativeScheme::Analytic => {
                self.check_inside(x)?;
                match self.field.derivatives(x) {
                    Some(d) => d,
                    None => self.fd_derivatives(x, DEFAULT_FD_STEP),
                }
            }
            DerivativeScheme::CentralDifference { step } => self.fd_derivatives(x, step),
        }
    }

    fn fd_derivatives(&self, x: &DVector<f64>, h: f64) -> Result<Vec<DMatrix<f64>>> {
        if !self.contains_with_margin(x.as_slice(), h) {
            return Err(Error::domain(
                x.as_slice(),
                format!("difference stencil of step {h:e} leaves the box"),
            ));
        }
        (0..self.dim())
            .map(|k| {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[k] += h;
                xm[k] -= h;
                Ok((self.field.tensor(&xp)? - self.field.tensor(&xm)?) / (2.0 * h))
            })
            .collect()
    }

    /// Levi-Civita symbols `Γ^i_jk = ½ g^{il}(∂_j g_lk + ∂_k g_lj − ∂_l g_jk)`.
    pub fn christoffel_at(&self, x: &DVector<f64>) -> Result<Christoffel> {
        let n = self.dim();
        if self.field.is_constant() {
            self.check_inside(x)?;
            return Ok(Christoffel::zeros(n));
        }
        let g = self.metric_at(x)?;
        let dg = self.metric_derivatives(x)?;
        let ginv = g
            .cholesky()
            .ok_or_else(|| Error::Numeric("metric inversion failed".into()))?
            .inverse();
        let mut out = Christoffel::zeros(n);
        let mut lower = vec![0.0; n];
        for j in 0..n {
            for k in j..n {
                for (l, slot) in lower.iter_mut().enumerate() {
                    *slot = 0.5 * (dg[j][(l, k)] + dg[k][(l, j)] - dg[l][(j, k)]);
                }
                for i in 0..n {
                    let v: f64 = (0..n).map(|l| ginv[(i, l)] * lower[l]).sum();
                    out.set_sym(i, j, k, v);
                }
            }
        }
        Ok(out)
    }

    /// Covariant Hessian `∂²ρ/∂x_i∂x_j − Σ_k Γ^k_ij ∂ρ/∂x_k`.
    pub fn hessian_at(&self, rho: &dyn ScalarField, x: &DVector<f64>) -> Result<HessianForm> {
        if rho.dim() != self.dim() {
            return Err(Error::Argument(format!(
                "field dimension {} does not match chart dimension {}",
                rho.dim(),
                self.dim()
            )));
        }
        let gamma = self.christoffel_at(x)?;
        let mut h = rho.hessian(x)?;
        let grad = rho.gradient(x)?;
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += gamma.get(k, i, j) * grad[k];
                }
                h[(i, j)] -= s;
            }
        }
        let hs = (&h + h.transpose()) * 0.5;
        Ok(HessianForm(hs))
    }

    /// The rescaled metric `h_t(x) = t^{-2} · (t² g(t x))`: the dilation
    /// pullback normalized so that a constant metric is left unchanged.
    /// The box is divided by `t`.
    pub fn rescale_metric(&self, t: f64) -> Result<Chart> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Argument(format!("scale must be positive, got {t}")));
        }
        let n = self.dim();
        let field = metrics::AffinePullback::new(
            self.clone(),
            DVector::zeros(n),
            DMatrix::identity(n, n) * t,
            1.0 / (t * t),
        );
        let bounds = self.bounds.iter().map(|&(l, h)| (l / t, h / t)).collect();
        let mut chart = Chart::new(bounds, Arc::new(field))?;
        if let DerivativeScheme::CentralDifference { step } = self.scheme {
            chart.scheme = DerivativeScheme::CentralDifference { step: step / t };
        }
        Ok(chart)
    }

    /// Affine chart `y ↦ origin + M y` with metric `factor · Mᵀ g M`.
    ///
    /// The box is the largest centered cube whose image stays inside this
    /// chart's box.
    pub fn affine_pullback(
        &self,
        origin: &DVector<f64>,
        m: &DMatrix<f64>,
        factor: f64,
    ) -> Result<Chart> {
        self.check_inside(origin)?;
        let n = self.dim();
        let mut half = f64::INFINITY;
        for i in 0..n {
            let row: f64 = (0..n).map(|k| m[(i, k)].abs()).sum();
            if row > 0.0 {
                let (lo, hi) = self.bounds[i];
                half = half.min((origin[i] - lo).min(hi - origin[i]) / row);
            }
        }
        if !(half > 0.0) {
            return Err(Error::domain(origin.as_slice(), "origin on the box boundary"));
        }
        let field = metrics::AffinePullback::new(self.clone(), origin.clone(), m.clone(), factor);
        let mut chart = Chart::new(vec![(-half, half); n], Arc::new(field))?;
        chart.scheme = match self.scheme {
            DerivativeScheme::Analytic => DerivativeScheme::Analytic,
            DerivativeScheme::CentralDifference { .. } => DerivativeScheme::CentralDifference {
                step: DEFAULT_FD_STEP,
            },
        };
        Ok(chart)
    }

    /// `sqrt(g(v, v))` at `x`.
    pub fn norm_at(&self, x: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let g = self.metric_at(x)?;
        Ok(v.dot(&(&g * v)).max(0.0).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Linear, NormSquared};
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn diag_x1_squared() -> Chart {
        // diag(1, x_1²)
        let spec = metrics::Diagonal {
            constant: vec![1.0, 0.0],
            quadratic: vec![vec![0.0, 0.0], vec![1.0, 0.0]],
        };
        Chart::new(vec![(0.5, 4.0), (-2.0, 2.0)], Arc::new(spec)).unwrap()
    }

    #[test]
    fn euclidean_metric_is_identity() {
        let c = Chart::euclidean(3, 2.0);
        let g = c.metric_at(&dvector![0.3, -1.0, 1.5]).unwrap();
        assert_eq!(g, DMatrix::identity(3, 3));
        assert_eq!(c.christoffel_at(&dvector![0.0, 0.0, 0.0]).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn conformal_metric_values() {
        let c = Chart::new(
            vec![(-2.0, 2.0); 2],
            Arc::new(metrics::Conformal {
                gradient: vec![1.0, 0.0],
            }),
        )
        .unwrap();
        assert_relative_eq!(c.metric_at(&dvector![0.0, 0.0]).unwrap(), DMatrix::identity(2, 2));
        let g = c.metric_at(&dvector![1.0, 0.0]).unwrap();
        assert_relative_eq!(g[(0, 0)], 7.38905609893065, epsilon = 1e-12);
        assert_relative_eq!(g[(1, 1)], 7.38905609893065, epsilon = 1e-12);
        assert_eq!(g[(0, 1)], 0.0);
    }

    #[test]
    fn outside_box_is_domain_error() {
        let c = Chart::euclidean(2, 1.0);
        assert!(matches!(
            c.metric_at(&dvector![1.5, 0.0]),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn indefinite_metric_is_rejected() {
        let spec = metrics::Diagonal {
            constant: vec![1.0, -1.0],
            quadratic: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
        };
        let c = Chart::new(vec![(-1.0, 1.0); 2], Arc::new(spec)).unwrap();
        assert!(matches!(
            c.metric_at(&dvector![0.0, 0.0]),
            Err(Error::Metric { .. })
        ));
    }

    /// Independent oracle: Levi-Civita formula fed with metric entries
    /// differentiated by a fourth-order stencil written out by hand.
    fn oracle_christoffel(g: impl Fn(f64, f64) -> [[f64; 2]; 2], x: [f64; 2]) -> [[[f64; 2]; 2]; 2] {
        let h = 1e-3;
        let d = |k: usize, i: usize, j: usize| {
            let at = |s: f64| {
                let mut p = x;
                p[k] += s;
                g(p[0], p[1])[i][j]
            };
            (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h)
        };
        let g0 = g(x[0], x[1]);
        let det = g0[0][0] * g0[1][1] - g0[0][1] * g0[1][0];
        let inv = [
            [g0[1][1] / det, -g0[0][1] / det],
            [-g0[1][0] / det, g0[0][0] / det],
        ];
        let mut out = [[[0.0; 2]; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    out[i][j][k] = (0..2)
                        .map(|l| 0.5 * inv[i][l] * (d(j, l, k) + d(k, l, j) - d(l, j, k)))
                        .sum();
                }
            }
        }
        out
    }

    #[test]
    fn christoffel_of_polar_like_metric() {
        let c = diag_x1_squared();
        let gamma = c.christoffel_at(&dvector![2.0, 0.0]).unwrap();
        let oracle = oracle_christoffel(|x1, _| [[1.0, 0.0], [0.0, x1 * x1]], [2.0, 0.0]);
        assert_relative_eq!(oracle[1][0][1], 0.5, epsilon = 1e-9);
        assert_relative_eq!(oracle[0][1][1], -2.0, epsilon = 1e-9);
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    assert_relative_eq!(gamma.get(i, j, k), oracle[i][j][k], epsilon = 1e-8);
                }
            }
        }
        let fd = c
            .clone()
            .with_scheme(DerivativeScheme::CentralDifference { step: 1e-4 })
            .christoffel_at(&dvector![2.0, 0.0])
            .unwrap();
        assert_relative_eq!(fd.get(1, 0, 1), 0.5, epsilon = 1e-7);
        assert_relative_eq!(fd.get(0, 1, 1), -2.0, epsilon = 1e-7);
    }

    #[test]
    fn christoffel_is_symmetric() {
        let c = Chart::new(
            vec![(-1.0, 1.0); 3],
            Arc::new(metrics::PerturbedEuclidean::new(3, 0.3, vec![0.1, 0.0, -0.2], 0.7)),
        )
        .unwrap();
        let gamma = c.christoffel_at(&dvector![0.2, 0.4, -0.1]).unwrap();
        let sym = gamma.symmetrized();
        for (a, b) in gamma.values.iter().zip(&sym.values) {
            assert_eq!(a - b, 0.0);
        }
    }

    #[test]
    fn analytic_and_difference_derivatives_agree() {
        let c = Chart::new(
            vec![(-1.0, 1.0); 3],
            Arc::new(metrics::PerturbedEuclidean::new(3, 0.4, vec![0.0; 3], 0.5)),
        )
        .unwrap();
        assert_eq!(c.scheme(), DerivativeScheme::Analytic);
        let x = dvector![0.3, -0.2, 0.1];
        let a = c.metric_derivatives(&x).unwrap();
        for (h, tol) in [(1e-2, 2e-3), (5e-3, 5e-4)] {
            let d = c
                .clone()
                .with_scheme(DerivativeScheme::CentralDifference { step: h })
                .metric_derivatives(&x)
                .unwrap();
            let err = a.iter().zip(&d).map(|(p, q)| (p - q).amax()).fold(0.0, f64::max);
            assert!(err < tol, "h={h} err={err}");
        }
    }

    #[test]
    fn hessian_of_norm_squared_and_linear() {
        let c = Chart::euclidean(3, 1.0);
        let h = c
            .hessian_at(&NormSquared::centered(3), &dvector![0.0, 0.0, 0.0])
            .unwrap();
        assert_relative_eq!(h.0, DMatrix::identity(3, 3) * 2.0, epsilon = 1e-12);
        let lin = Linear::new(dvector![1.0, 0.0, 0.0], 0.0);
        let h = c.hessian_at(&lin, &dvector![0.3, 0.1, -0.5]).unwrap();
        assert!(h.0.amax() < 1e-12);
    }

    #[test]
    fn hessian_is_linear_in_the_field() {
        use crate::field::{Quadratic, Sum};
        let c = Chart::new(
            vec![(-1.0, 1.0); 3],
            Arc::new(metrics::Conformal {
                gradient: vec![0.5, -0.2, 0.1],
            }),
        )
        .unwrap();
        let q1 = Quadratic::new(
            DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, -1.0, 0.3, 0.0, 0.3, 0.5]),
            dvector![0.1, 0.0, -0.4],
            0.0,
        );
        let q2 = Quadratic::new(DMatrix::identity(3, 3), dvector![0.0, 1.0, 0.0], 2.0);
        let combo = Sum::new(vec![(2.0, Arc::new(q1.clone()) as _), (-3.0, Arc::new(q2.clone()) as _)]);
        let x = dvector![0.2, -0.1, 0.3];
        let lhs = c.hessian_at(&combo, &x).unwrap().0;
        let rhs = c.hessian_at(&q1, &x).unwrap().0 * 2.0 - c.hessian_at(&q2, &x).unwrap().0 * 3.0;
        assert_relative_eq!(lhs, rhs, epsilon = 1e-9);
    }

    #[test]
    fn rescaling_constant_metric_is_identity_map() {
        let c = Chart::euclidean(3, 1.0);
        let r = c.rescale_metric(0.25).unwrap();
        assert_eq!(r.bounds()[0], (-4.0, 4.0));
        assert_eq!(r.metric_at(&dvector![3.0, 0.0, -3.0]).unwrap(), DMatrix::identity(3, 3));
        let same = c.rescale_metric(1.0).unwrap();
        let x = dvector![0.5, 0.5, 0.1];
        assert_eq!(same.metric_at(&x).unwrap(), c.metric_at(&x).unwrap());
    }

    #[test]
    fn rescale_rejects_nonpositive_scale() {
        assert!(Chart::euclidean(2, 1.0).rescale_metric(0.0).is_err());
        assert!(Chart::euclidean(2, 1.0).rescale_metric(-1.0).is_err());
    }
}
