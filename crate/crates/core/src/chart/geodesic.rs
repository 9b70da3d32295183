//! Geodesics: exponential map, normal coordinates, geodesic distance.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use petgraph::algo::astar;
use petgraph::graph::{NodeIndex, UnGraph};

use super::{metrics::AffinePullback, Chart, DerivativeScheme, MetricField};
use crate::error::{Error, Result};

/// RK4 steps used for one exponential-map evaluation.
pub const EXP_STEPS: usize = 256;
/// Newton shooting tolerance (chart units).
pub const SHOOTING_TOL: f64 = 1e-10;
pub const SHOOTING_MAX_ITER: usize = 50;
/// Difference step for the differential of the exponential map.
const JACOBIAN_STEP: f64 = 1e-4;

fn geodesic_rhs(chart: &Chart, x: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    let gamma = chart.christoffel_at(x)?;
    Ok(-gamma.contract(v.as_slice(), v.as_slice()))
}

/// Integrates the geodesic equation from `(p, v)` over `t ∈ [0, 1]` with `steps` RK4 steps.
/// Returns the samples `γ(k/steps)`, `k = 0..=steps`.
pub fn geodesic_path(
    chart: &Chart,
    p: &DVector<f64>,
    v: &DVector<f64>,
    steps: usize,
) -> Result<Vec<DVector<f64>>> {
    let mut out = Vec::with_capacity(steps + 1);
    out.push(p.clone());
    if chart.is_flat() {
        for k in 1..=steps {
            let x = p + v * (k as f64 / steps as f64);
            if !chart.contains(x.as_slice()) {
                return Err(Error::domain(x.as_slice(), "geodesic leaves the box"));
            }
            out.push(x);
        }
        return Ok(out);
    }
    let h = 1.0 / steps as f64;
    let mut x = p.clone();
    let mut u = v.clone();
    for _ in 0..steps {
        let k1x = u.clone();
        let k1v = geodesic_rhs(chart, &x, &u)?;
        let x2 = &x + &k1x * (0.5 * h);
        let u2 = &u + &k1v * (0.5 * h);
        let k2v = geodesic_rhs(chart, &x2, &u2)?;
        let x3 = &x + &u2 * (0.5 * h);
        let u3 = &u + &k2v * (0.5 * h);
        let k3v = geodesic_rhs(chart, &x3, &u3)?;
        let x4 = &x + &u3 * h;
        let u4 = &u + &k3v * h;
        let k4v = geodesic_rhs(chart, &x4, &u4)?;
        x += (k1x + &u2 * 2.0 + &u3 * 2.0 + &u4) * (h / 6.0);
        u += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        if !chart.contains(x.as_slice()) {
            return Err(Error::domain(x.as_slice(), "geodesic leaves the box"));
        }
        out.push(x.clone());
    }
    Ok(out)
}

/// `exp_p(v)`.
pub fn exp_map(chart: &Chart, p: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    exp_map_steps(chart, p, v, EXP_STEPS)
}

fn exp_map_steps(
    chart: &Chart,
    p: &DVector<f64>,
    v: &DVector<f64>,
    steps: usize,
) -> Result<DVector<f64>> {
    Ok(geodesic_path(chart, p, v, steps)?.pop().expect("nonempty path"))
}

/// `L⁻ᵀ` for `g = L Lᵀ`: columns form a g-orthonormal basis.
pub(crate) fn orthonormal_basis(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let l = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("metric is not positive definite".into()))?
        .l();
    let linv = l
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    Ok(linv.transpose())
}

/// Metric of the chart `y ↦ exp_p(B y)` with `B` a g(p)-orthonormal basis.
#[derive(Clone, Debug)]
pub struct NormalCoordMetric {
    base: Chart,
    center: DVector<f64>,
    basis: DMatrix<f64>,
    steps: usize,
}

impl NormalCoordMetric {
    pub fn to_base(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        exp_map_steps(&self.base, &self.center, &(&self.basis * y), self.steps)
    }

    fn differential(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        let n = y.len();
        let mut j = DMatrix::zeros(n, n);
        let mut z = y.clone();
        for k in 0..n {
            z[k] = y[k] + JACOBIAN_STEP;
            let fp = self.to_base(&z)?;
            z[k] = y[k] - JACOBIAN_STEP;
            let fm = self.to_base(&z)?;
            z[k] = y[k];
            j.set_column(k, &((fp - fm) / (2.0 * JACOBIAN_STEP)));
        }
        Ok(j)
    }
}

impl MetricField for NormalCoordMetric {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn tensor(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        let x = self.to_base(y)?;
        let j = self.differential(y)?;
        let g = self.base.metric_at(&x)?;
        let m = j.transpose() * g * &j;
        Ok((&m + m.transpose()) * 0.5)
    }
}

/// Normal coordinates centered at `p` on the cube `[-radius, radius]^n`.
///
/// The returned chart has `g(0) = I` and vanishing Christoffel symbols at 0
/// up to discretization error. The injectivity check is heuristic: geodesics
/// to the cube's corners and face centers must stay inside the box, and the
/// differential of the exponential map must keep a positive determinant along them.
pub fn normal_coordinates(chart: &Chart, p: &DVector<f64>, radius: f64) -> Result<Chart> {
    if !(radius > 0.0) {
        return Err(Error::Argument(format!("radius must be positive, got {radius}")));
    }
    let n = chart.dim();
    let g = chart.metric_at(p)?;
    let basis = orthonormal_basis(&g)?;
    let bounds = vec![(-radius, radius); n];
    if chart.is_flat() {
        for y in probe_directions(n) {
            let x = p + &basis * (y * radius);
            if !chart.contains(x.as_slice()) {
                return Err(Error::Radius(format!(
                    "normal chart of radius {radius} leaves the box"
                )));
            }
        }
        let field = AffinePullback::new(chart.clone(), p.clone(), basis, 1.0);
        return Chart::new(bounds, Arc::new(field));
    }
    let field = NormalCoordMetric {
        base: chart.clone(),
        center: p.clone(),
        basis,
        steps: EXP_STEPS,
    };
    for dir in probe_directions(n) {
        for frac in [0.25, 0.5, 0.75, 1.0] {
            let y = &dir * (radius * frac);
            let j = field.differential(&y).map_err(|e| {
                Error::Radius(format!("normal chart of radius {radius}: {e}"))
            })?;
            if !(j.determinant() > 0.0) {
                return Err(Error::Radius(format!(
                    "exponential map degenerates at {:?}",
                    y.as_slice()
                )));
            }
        }
    }
    Ok(Chart::new(bounds, Arc::new(field))?.with_scheme(DerivativeScheme::CentralDifference {
        step: super::DEFAULT_FD_STEP,
    }))
}

/// Corners and face centers of the unit cube.
fn probe_directions(n: usize) -> Vec<DVector<f64>> {
    let mut out = Vec::new();
    for mask in 0..(1usize << n) {
        out.push(DVector::from_fn(n, |i, _| if mask >> i & 1 == 1 { 1.0 } else { -1.0 }));
    }
    for i in 0..n {
        for s in [-1.0, 1.0] {
            let mut e = DVector::zeros(n);
            e[i] = s;
            out.push(e);
        }
    }
    out
}

/// Riemannian distance between two points of the box.
///
/// Shooting is seeded with the chart segment; if Newton does not converge
/// (or a shot leaves the box) the distance is the shortest path on a
/// sampled lattice.
pub fn geodesic_distance(chart: &Chart, p: &DVector<f64>, q: &DVector<f64>) -> Result<f64> {
    if !chart.contains(p.as_slice()) {
        return Err(Error::domain(p.as_slice(), "outside box"));
    }
    if !chart.contains(q.as_slice()) {
        return Err(Error::domain(q.as_slice(), "outside box"));
    }
    let d = q - p;
    if d.amax() == 0.0 {
        return Ok(0.0);
    }
    if chart.is_flat() {
        return chart.norm_at(p, &d);
    }
    match shoot(chart, p, q) {
        Ok(v) => chart.norm_at(p, &v),
        Err(_) => lattice_distance(chart, p, q, 16),
    }
}

/// Initial velocity `v` with `exp_p(v) = q`.
pub fn shoot(chart: &Chart, p: &DVector<f64>, q: &DVector<f64>) -> Result<DVector<f64>> {
    let n = chart.dim();
    let scale = (q - p).norm();
    let mut v = q - p;
    let mut r = exp_map(chart, p, &v)? - q;
    for _ in 0..SHOOTING_MAX_ITER {
        if r.norm() < SHOOTING_TOL {
            return Ok(v);
        }
        let h = 1e-7 * scale.max(1e-3);
        let mut jac = DMatrix::zeros(n, n);
        for k in 0..n {
            let mut vp = v.clone();
            let mut vm = v.clone();
            vp[k] += h;
            vm[k] -= h;
            let col = (exp_map(chart, p, &vp)? - exp_map(chart, p, &vm)?) / (2.0 * h);
            jac.set_column(k, &col);
        }
        let step = jac
            .lu()
            .solve(&(-&r))
            .ok_or_else(|| Error::Convergence {
                message: "singular shooting Jacobian".into(),
                history: vec![r.norm()],
            })?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let cand = &v + &step * t;
            if let Ok(x) = exp_map(chart, p, &cand) {
                let rc = x - q;
                if rc.norm() < r.norm() {
                    v = cand;
                    r = rc;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r.norm() < SHOOTING_TOL * 10.0 {
        return Ok(v);
    }
    Err(Error::Convergence {
        message: "geodesic shooting did not converge".into(),
        history: vec![r.norm()],
    })
}

/// Shortest path on a lattice with `per_axis` points per axis plus `p` and `q`,
/// edges to the `3^n − 1` neighbors, edge lengths by Simpson's rule.
pub fn lattice_distance(
    chart: &Chart,
    p: &DVector<f64>,
    q: &DVector<f64>,
    per_axis: usize,
) -> Result<f64> {
    let n = chart.dim();
    let bounds = chart.bounds().to_vec();
    let spacing: Vec<f64> = bounds
        .iter()
        .map(|(lo, hi)| (hi - lo) / (per_axis - 1) as f64)
        .collect();
    let total = per_axis.pow(n as u32);
    let coord = |mut idx: usize| {
        let mut x = DVector::zeros(n);
        for i in 0..n {
            x[i] = bounds[i].0 + (idx % per_axis) as f64 * spacing[i];
            idx /= per_axis;
        }
        x
    };
    let edge = |a: &DVector<f64>, b: &DVector<f64>| -> Option<f64> {
        let d = b - a;
        let m = (a + b) * 0.5;
        let la = chart.norm_at(a, &d).ok()?;
        let lm = chart.norm_at(&m, &d).ok()?;
        let lb = chart.norm_at(b, &d).ok()?;
        Some((la + 4.0 * lm + lb) / 6.0)
    };
    let mut graph: UnGraph<(), f64> = UnGraph::with_capacity(total + 2, total * 13);
    let nodes: Vec<NodeIndex> = (0..total).map(|_| graph.add_node(())).collect();
    let valid: Vec<bool> = (0..total)
        .map(|i| chart.metric_at(&coord(i)).is_ok())
        .collect();
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(n as u32))
        .map(|mut m| {
            (0..n)
                .map(|_| {
                    let o = (m % 3) as i64 - 1;
                    m /= 3;
                    o
                })
                .collect()
        })
        .filter(|o: &Vec<i64>| o.iter().any(|&v| v != 0))
        .collect();
    for i in 0..total {
        if !valid[i] {
            continue;
        }
        let mut digits = Vec::with_capacity(n);
        let mut t = i;
        for _ in 0..n {
            digits.push((t % per_axis) as i64);
            t /= per_axis;
        }
        for off in &offsets {
            let mut j = 0usize;
            let mut mult = 1usize;
            let mut ok = true;
            for k in 0..n {
                let d = digits[k] + off[k];
                if d < 0 || d >= per_axis as i64 {
                    ok = false;
                    break;
                }
                j += d as usize * mult;
                mult *= per_axis;
            }
            if ok && j > i && valid[j] {
                if let Some(w) = edge(&coord(i), &coord(j)) {
                    graph.add_edge(nodes[i], nodes[j], w);
                }
            }
        }
    }
    let attach = |graph: &mut UnGraph<(), f64>, x: &DVector<f64>| {
        let node = graph.add_node(());
        for i in 0..total {
            let c = coord(i);
            let near = (0..n).all(|k| (c[k] - x[k]).abs() <= spacing[k] * 1.0001);
            if near && valid[i] {
                if let Some(w) = edge(x, &c) {
                    graph.add_edge(node, nodes[i], w);
                }
            }
        }
        node
    };
    let sp = attach(&mut graph, p);
    let sq = attach(&mut graph, q);
    if let Some(w) = edge(p, q) {
        if (0..n).all(|k| (p[k] - q[k]).abs() <= spacing[k]) {
            graph.add_edge(sp, sq, w);
        }
    }
    astar(&graph, sp, |v| v == sq, |e| *e.weight(), |_| 0.0)
        .map(|(d, _)| d)
        .ok_or_else(|| Error::Connectivity("no lattice path joins the points inside the box".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::metrics::{Conformal, Diagonal};
    use approx::assert_relative_eq;
    use nalgebra::dvector;

    fn conformal_chart() -> Chart {
        Chart::new(
            vec![(-1.0, 1.0); 3],
            Arc::new(Conformal {
                gradient: vec![0.5, -0.3, 0.2],
            }),
        )
        .unwrap()
    }

    #[test]
    fn euclidean_distance_is_straight_line() {
        let c = Chart::euclidean(2, 5.0);
        let d = geodesic_distance(&c, &dvector![0.0, 0.0], &dvector![3.0, 4.0]).unwrap();
        assert_eq!(d, 5.0);
        assert_eq!(geodesic_distance(&c, &dvector![1.0, 1.0], &dvector![1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn scaled_metric_distance() {
        let c = Chart::new(
            vec![(-2.0, 2.0); 2],
            Arc::new(Diagonal {
                constant: vec![4.0, 4.0],
                quadratic: vec![vec![0.0; 2]; 2],
            }),
        )
        .unwrap();
        let d = geodesic_distance(&c, &dvector![0.0, 0.0], &dvector![1.0, 0.0]).unwrap();
        assert_relative_eq!(d, 2.0, epsilon = 1e-14);
    }

    #[test]
    fn hyperbolic_distance_from_origin() {
        use crate::chart::metrics::ConstantCurvature;
        let c = Chart::new(
            vec![(-0.9, 0.9); 2],
            Arc::new(ConstantCurvature {
                dim: 2,
                curvature: -1.0,
            }),
        )
        .unwrap();
        let d = geodesic_distance(&c, &dvector![0.0, 0.0], &dvector![0.5, 0.0]).unwrap();
        assert_relative_eq!(d, 2.0 * 0.5f64.atanh(), epsilon = 1e-9);
        // off-axis pair: closed form 2·artanh|(p−q)/(1−p q̄)|
        let (p, q) = (dvector![0.1, 0.2], dvector![-0.3, 0.4]);
        let d = geodesic_distance(&c, &p, &q).unwrap();
        let (pr, pi, qr, qi): (f64, f64, f64, f64) = (0.1, 0.2, -0.3, 0.4);
        let (nr, ni) = (pr - qr, pi - qi);
        let (dr, di) = (1.0 - (pr * qr + pi * qi), -(pi * qr - pr * qi));
        let ratio = ((nr * nr + ni * ni) / (dr * dr + di * di)).sqrt();
        assert_relative_eq!(d, 2.0 * ratio.atanh(), epsilon = 1e-9);
    }

    #[test]
    fn lattice_fallback_upper_bounds_shooting() {
        let c = conformal_chart();
        let (p, q) = (dvector![-0.5, 0.1, 0.0], dvector![0.6, -0.2, 0.3]);
        let exact = geodesic_distance(&c, &p, &q).unwrap();
        let lattice = lattice_distance(&c, &p, &q, 11).unwrap();
        assert!(lattice >= exact - 1e-9);
        // 26-neighbor stencils overestimate off-axis lengths by up to ~10%
        assert!(lattice < exact * 1.15, "{lattice} vs {exact}");
    }

    #[test]
    fn normal_coordinates_of_euclidean_chart_are_translation() {
        let c = Chart::euclidean(3, 2.0);
        let nc = normal_coordinates(&c, &dvector![0.5, -0.5, 0.0], 1.0).unwrap();
        assert_eq!(nc.metric_at(&dvector![0.3, 0.2, -0.9]).unwrap(), DMatrix::identity(3, 3));
    }

    #[test]
    fn normal_coordinates_center_conditions() {
        let c = conformal_chart();
        let nc = normal_coordinates(&c, &dvector![0.0, 0.0, 0.0], 0.3).unwrap();
        let z = dvector![0.0, 0.0, 0.0];
        assert!((nc.metric_at(&z).unwrap() - DMatrix::identity(3, 3)).amax() < 1e-8);
        assert!(nc.christoffel_at(&z).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn normal_coordinates_radius_error() {
        let c = conformal_chart();
        assert!(matches!(
            normal_coordinates(&c, &dvector![0.8, 0.0, 0.0], 0.5),
            Err(Error::Radius(_))
        ));
    }

    #[test]
    fn rescaled_normal_chart_approaches_identity() {
        let c = conformal_chart();
        let nc = normal_coordinates(&c, &dvector![0.0, 0.0, 0.0], 0.3).unwrap();
        let dev = |t: f64| {
            let h = nc.rescale_metric(t).unwrap();
            let mut m: f64 = 0.0;
            for y in probe_directions(3) {
                m = m.max((h.metric_at(&(y * 0.25)).unwrap() - DMatrix::identity(3, 3)).amax());
            }
            m
        };
        let (d1, d3) = (dev(1e-1), dev(1e-3));
        assert!(d3 < d1, "{d3} !< {d1}");
    }
}
