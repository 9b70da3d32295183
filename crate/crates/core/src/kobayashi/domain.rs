//! Domains `Ω = {ρ < 0}` in a chart, with the certified constants the estimates need.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::field::{GeodesicSquared, Linear, NormSquared, ScalarField, Sum};
use crate::mpsh::relative_eigen;
use crate::numerics::sphere_points;

/// Target number of lattice samples used to certify `ε` and `B`.
const CERTIFY_SAMPLES: usize = 4000;
const BOUNDARY_DIRECTIONS: usize = 64;
const BISECTION_STEPS: usize = 60;

/// Known geometry of `Ω` that admits closed-form slices.
#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    /// Euclidean ball in a flat chart with identity metric.
    Ball { center: Vec<f64>, radius: f64 },
    General,
}

#[derive(Clone, Debug)]
pub struct DomainSpec {
    pub label: String,
    pub chart: Chart,
    pub rho: Arc<dyn ScalarField>,
    pub shape: Shape,
    /// Center of the localization coordinates `x`.
    pub origin: DVector<f64>,
    /// `dρ ≠ 0` at every sampled boundary point.
    pub boundary_regular: bool,
    /// Largest `ε` with `ρ − ε|x − origin|²` MPSH on the lattice samples of `Ω`.
    pub strictness: f64,
    /// `B = sup |ρ|` over the samples of `Ω ∩ {|x − origin| < 2}`.
    pub rho_bound: f64,
    pub certify_spacing: f64,
    pub certify_samples: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DomainSummary {
    pub label: String,
    pub dim: usize,
    pub shape: Shape,
    pub origin: Vec<f64>,
    pub boundary_regular: bool,
    pub strictness: f64,
    pub rho_bound: f64,
    pub certify_spacing: f64,
    pub certify_samples: usize,
}

impl DomainSpec {
    /// Certifies `ε`, `B` and boundary regularity by sampling.
    pub fn new(label: impl Into<String>, chart: Chart, rho: Arc<dyn ScalarField>, shape: Shape) -> Result<Self> {
        let n = chart.dim();
        if rho.dim() != n {
            return Err(Error::Argument(format!("ρ has dimension {}, chart {}", rho.dim(), n)));
        }
        let origin = DVector::zeros(n);
        if !(chart.contains(origin.as_slice()) && rho.value(&origin)? < 0.0) {
            return Err(Error::Argument("the coordinate origin must lie in Ω".into()));
        }
        let mut dom = DomainSpec {
            label: label.into(),
            chart,
            rho,
            shape,
            origin,
            boundary_regular: false,
            strictness: 0.0,
            rho_bound: 0.0,
            certify_spacing: 0.0,
            certify_samples: 0,
        };
        let vol: f64 = dom.chart.bounds().iter().map(|(a, b)| b - a).product();
        let spacing = (vol / CERTIFY_SAMPLES as f64).powf(1.0 / n as f64);
        let samples = dom.interior_lattice(spacing)?;
        if samples.is_empty() {
            return Err(Error::Argument("no lattice sample falls inside Ω".into()));
        }
        dom.certify_spacing = spacing;
        dom.certify_samples = samples.len();
        dom.strictness = strictness_on(&dom.chart, dom.rho.as_ref(), &dom.origin, &samples)?;
        let mut b = dom.rho.value(&dom.origin)?.abs();
        for x in &samples {
            if (x - &dom.origin).norm() < 2.0 {
                b = b.max(dom.rho.value(x)?.abs());
            }
        }
        dom.rho_bound = b;
        dom.boundary_regular = dom.boundary_points(BOUNDARY_DIRECTIONS)?.iter().all(|p| {
            dom.rho.gradient(p).map(|g| g.norm() > 1e-10).unwrap_or(false)
        });
        Ok(dom)
    }

    /// `{|x − c|² < r²}` in a flat chart with identity metric, boxed at `1.5 r` around `c`.
    pub fn euclidean_ball(dim: usize, center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.len() != dim || !(radius > 0.0) {
            return Err(Error::Argument("ball needs a center of the right dimension and radius > 0".into()));
        }
        let bounds = center.iter().map(|c| (c - 1.5 * radius, c + 1.5 * radius)).collect();
        let chart = Chart::new(bounds, Arc::new(crate::chart::metrics::Euclidean { dim }))?;
        let rho = ball_field(DVector::from_vec(center.clone()), radius);
        Self::new(format!("euclidean_ball(n={dim},r={radius})"), chart, rho, Shape::Ball { center, radius })
    }

    /// Coordinate ball `{|x|² < r²}` in an arbitrary chart.
    pub fn coordinate_ball(label: impl Into<String>, chart: Chart, radius: f64) -> Result<Self> {
        let rho = ball_field(DVector::zeros(chart.dim()), radius);
        Self::new(label, chart, rho, Shape::General)
    }

    /// Geodesic ball of radius `r` about the origin of the constant-curvature chart with curvature `K`.
    pub fn geodesic_ball(dim: usize, curvature: f64, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Argument("geodesic ball needs radius > 0".into()));
        }
        // coordinate radius of the geodesic sphere
        let s = if curvature > 0.0 {
            if radius * curvature.sqrt() >= std::f64::consts::PI {
                return Err(Error::Argument("geodesic radius exceeds the injectivity radius".into()));
            }
            (0.5 * radius * curvature.sqrt()).tan() / curvature.sqrt()
        } else if curvature < 0.0 {
            (0.5 * radius * (-curvature).sqrt()).tanh() / (-curvature).sqrt()
        } else {
            0.5 * radius
        };
        let mut half = 1.5 * s;
        if curvature < 0.0 {
            half = half.min(0.99 / (-curvature).sqrt());
        }
        let chart = Chart::new(
            vec![(-half, half); dim],
            Arc::new(crate::chart::metrics::ConstantCurvature { dim, curvature }),
        )?;
        let rho = Arc::new(Sum::new(vec![
            (1.0, Arc::new(GeodesicSquared::new(dim, curvature)) as Arc<dyn ScalarField>),
            (-radius * radius, Arc::new(Linear::new(DVector::zeros(dim), 1.0))),
        ]));
        Self::new(format!("geodesic_ball(n={dim},K={curvature},r={radius})"), chart, rho, Shape::General)
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn rho_at(&self, x: &DVector<f64>) -> Result<f64> {
        self.rho.value(x)
    }

    /// `x ∈ Ω` and inside the chart box.
    pub fn contains(&self, x: &DVector<f64>) -> bool {
        self.chart.contains(x.as_slice()) && self.rho.value(x).map(|r| r < 0.0).unwrap_or(false)
    }

    /// Lattice points `origin + spacing·k` lying in `Ω`.
    pub fn interior_lattice(&self, spacing: f64) -> Result<Vec<DVector<f64>>> {
        if !(spacing > 0.0) {
            return Err(Error::Argument("lattice spacing must be positive".into()));
        }
        let n = self.dim();
        let ranges: Vec<(i64, i64)> = self
            .chart
            .bounds()
            .iter()
            .zip(self.origin.iter())
            .map(|(&(lo, hi), &o)| (((lo - o) / spacing).ceil() as i64, ((hi - o) / spacing).floor() as i64))
            .collect();
        let mut out = Vec::new();
        let mut idx: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            let x = DVector::from_iterator(n, (0..n).map(|i| self.origin[i] + spacing * idx[i] as f64));
            if self.contains(&x) {
                out.push(x);
            }
            let mut k = 0;
            loop {
                if k == n {
                    return Ok(out);
                }
                idx[k] += 1;
                if idx[k] <= ranges[k].1 {
                    break;
                }
                idx[k] = ranges[k].0;
                k += 1;
            }
        }
    }

    /// First crossing of `{ρ = 0}` along the ray `from + t·dir`, `t > 0`, inside the chart box.
    pub fn boundary_along(&self, from: &DVector<f64>, dir: &DVector<f64>) -> Result<Option<DVector<f64>>> {
        if !self.contains(from) {
            return Err(Error::Argument("ray must start inside Ω".into()));
        }
        let d = dir.normalize();
        let diam: f64 = self.chart.bounds().iter().map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
        // march to bracket the first exit, then bisect
        let steps = 256;
        let h = diam / steps as f64;
        let mut lo = 0.0;
        let mut hi = None;
        for k in 1..=steps {
            let t = k as f64 * h;
            if !self.chart.contains((from + &d * t).as_slice()) {
                break;
            }
            if self.contains(&(from + &d * t)) {
                lo = t;
            } else {
                hi = Some(t);
                break;
            }
        }
        let Some(mut hi) = hi else { return Ok(None) };
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if self.contains(&(from + &d * mid)) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(from + d * lo))
    }

    /// Boundary points hit by rays from the origin in quasi-uniform directions.
    pub fn boundary_points(&self, directions: usize) -> Result<Vec<DVector<f64>>> {
        let mut out = Vec::new();
        for d in sphere_points(self.dim(), directions, 0) {
            if let Some(p) = self.boundary_along(&self.origin, &d)? {
                out.push(p);
            }
        }
        Ok(out)
    }

    /// Coordinate distance to `{ρ = 0}`, minimized over `directions` rays (an upper bound).
    pub fn boundary_distance(&self, x: &DVector<f64>, directions: usize) -> Result<f64> {
        if let Shape::Ball { center, radius } = &self.shape {
            return Ok(radius - (x - DVector::from_column_slice(center)).norm());
        }
        let mut best = f64::INFINITY;
        for d in sphere_points(self.dim(), directions, 0) {
            if let Some(p) = self.boundary_along(x, &d)? {
                best = best.min((p - x).norm());
            }
        }
        Ok(best)
    }

    pub fn summary(&self) -> DomainSummary {
        DomainSummary {
            label: self.label.clone(),
            dim: self.dim(),
            shape: self.shape.clone(),
            origin: self.origin.as_slice().to_vec(),
            boundary_regular: self.boundary_regular,
            strictness: self.strictness,
            rho_bound: self.rho_bound,
            certify_spacing: self.certify_spacing,
            certify_samples: self.certify_samples,
        }
    }
}

fn ball_field(center: DVector<f64>, radius: f64) -> Arc<dyn ScalarField> {
    let n = center.len();
    Arc::new(Sum::new(vec![
        (1.0, Arc::new(NormSquared::new(center)) as Arc<dyn ScalarField>),
        (-radius * radius, Arc::new(Linear::new(DVector::zeros(n), 1.0))),
    ]))
}

/// Sum of the two smallest eigenvalues of `h` relative to `g`.
fn min_pair(h: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<f64> {
    let (v, _) = relative_eigen(h, g)?;
    Ok(v[0] + v[1])
}

/// Largest `ε ≥ 0` with `ρ − ε|x − o|²` having nonnegative pair traces at every sample.
pub fn strictness_on(chart: &Chart, rho: &dyn ScalarField, origin: &DVector<f64>, samples: &[DVector<f64>]) -> Result<f64> {
    let q = NormSquared::new(origin.clone());
    let mut data = Vec::with_capacity(samples.len());
    let mut hi = f64::INFINITY;
    for x in samples {
        let g = chart.metric_at(x)?;
        let hr = chart.hessian_at(rho, x)?.0;
        let hq = chart.hessian_at(&q, x)?.0;
        let base = min_pair(&hr, &g)?;
        if base < 0.0 {
            return Ok(0.0);
        }
        // pair traces of hq are positive near the origin; bound ε by the ratio
        let pq = min_pair(&hq, &g)?;
        if pq > 0.0 {
            hi = hi.min(base / pq * 4.0);
        }
        data.push((g, hr, hq));
    }
    if !hi.is_finite() {
        hi = 1e6;
    }
    let pass = |eps: f64| -> Result<bool> {
        for (g, hr, hq) in &data {
            if min_pair(&(hr - hq * eps), g)? < 0.0 {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if pass(hi)? {
        return Ok(hi);
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if pass(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::metrics::PerturbedEuclidean;

    #[test]
    fn unit_ball_constants() {
        let d = DomainSpec::euclidean_ball(3, vec![0.0; 3], 1.0).unwrap();
        assert!((d.strictness - 1.0).abs() < 1e-9, "{}", d.strictness);
        assert_eq!(d.rho_bound, 1.0);
        assert!(d.boundary_regular);
        let p = d.boundary_along(&d.origin, &DVector::from_vec(vec![1.0, 1.0, 0.0])).unwrap().unwrap();
        assert!((p.norm() - 1.0).abs() < 1e-12);
        assert!(d.contains(&DVector::from_vec(vec![0.5, 0.5, 0.5])));
        assert!(!d.contains(&DVector::from_vec(vec![0.72, 0.72, 0.0])));
    }

    #[test]
    fn geodesic_balls_are_strictly_mpsh() {
        for k in [1.0, -1.0] {
            let d = DomainSpec::geodesic_ball(3, k, 0.6).unwrap();
            assert!(d.strictness > 0.1, "{k}: {}", d.strictness);
            assert!((d.rho_bound - 0.36).abs() < 1e-12);
            assert!(d.boundary_regular);
            for p in d.boundary_points(8).unwrap() {
                let expect = if k > 0.0 { 0.3f64.tan() } else { 0.3f64.tanh() };
                assert!((p.norm() - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn perturbed_ball_has_positive_strictness() {
        let chart = Chart::new(
            vec![(-1.5, 1.5); 3],
            Arc::new(PerturbedEuclidean::new(3, 0.05, vec![0.0; 3], 1.0)),
        )
        .unwrap();
        let d = DomainSpec::coordinate_ball("perturbed", chart, 1.0).unwrap();
        assert!(d.strictness > 0.5 && d.strictness < 1.5, "{}", d.strictness);
    }
}
