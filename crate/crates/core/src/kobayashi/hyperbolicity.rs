//! Complete-hyperbolicity diagnostics near the boundary: distance growth
//! towards a boundary point and the constants of the disc estimates that
//! force it.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::disc::{DiscMap, Jet1};
use crate::error::{Error, Result};
use crate::solver::{conformal_reparametrize, match_jet, ConformalConfig, SolverConfig};

use super::distance::{build_path_graph, edge_weight, GraphConfig};
use super::domain::DomainSpec;
use super::probes::{linear_fit, outward_normal, tangent_to};
use super::upper::{shrink_into, UpperConfig};

/// How `d_upper(p, w_δ)` is integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceRoute {
    /// Upper metric integrated along the segment `p → w_δ`.
    Segment,
    /// Shortest path in the sample graph.
    Graph,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperbolicityConfig {
    pub route: DistanceRoute,
    pub graph: GraphConfig,
    pub solver: SolverConfig,
    pub conformal: ConformalConfig,
    /// Tilt of each disc plane out of the tangent space, in degrees.
    pub tilts_deg: Vec<f64>,
    /// `r` in the Hölder and Schwarz estimates.
    pub inner_radius: f64,
    /// `r'` where the gradient is bounded.
    pub schwarz_radius: f64,
    /// Norm bound of the logarithmic potential operator on the unit disc.
    pub c_pot: f64,
    pub shrink_iterations: usize,
}

impl Default for HyperbolicityConfig {
    fn default() -> Self {
        HyperbolicityConfig {
            route: DistanceRoute::Segment,
            // each upper evaluation on a curved chart solves discs; a coarse rule is enough for a log fit
            graph: GraphConfig {
                quad_tol: 1e-4,
                max_depth: 8,
                upper: UpperConfig { planes: 1, ..Default::default() },
                ..Default::default()
            },
            solver: SolverConfig::default().with_resolution(32, 64),
            conformal: ConformalConfig::default(),
            tilts_deg: vec![0.0, 30.0, 60.0],
            inner_radius: 0.5,
            schwarz_radius: 0.25,
            c_pot: 1.0,
            shrink_iterations: 40,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscConstants {
    pub tilt_deg: f64,
    pub shrink: f64,
    /// `max_{|ζ|≤r} |u(ζ) − u(0)| / dist(u(0), ∂Ω)^{1/2}`.
    pub c_half: f64,
    /// `max_{|ζ|≤r'} |∇u(ζ)| / max_{|ω|≤r} |u(ω) − u(0)|`.
    pub c_schwarz: f64,
    /// `max |Δu¹| / |u¹(0)|` over the disc, `u¹ = ⟨u − p₀, ν⟩`.
    pub a_lap: f64,
    /// `|∇u¹(0)| / |u¹(0)|`.
    pub c_grad: f64,
    /// `2(2A + 1) + C_pot·A`.
    pub grad_bound: f64,
    pub consistent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DepthRow {
    pub delta: f64,
    pub point: Vec<f64>,
    pub rho: f64,
    pub boundary_distance: f64,
    pub distance_upper: f64,
    pub discs: Vec<DiscConstants>,
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Stability {
    pub c_half: f64,
    pub c_schwarz: f64,
    pub a_lap: f64,
    pub c_grad: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HyperbolicityReport {
    pub p: Vec<f64>,
    pub boundary_point: Vec<f64>,
    pub rows: Vec<DepthRow>,
    /// Slope of `d_upper(p, w_δ)` against `log(1/δ)`.
    pub distance_slope: f64,
    /// Max/min ratio across `δ` of each constant (largest over the discs at that depth).
    pub stability: Stability,
    pub stable_within_2: bool,
    pub consistent: bool,
    pub divergence: String,
}

/// Point on the segment from `boundary` towards `inner` with `ρ = −δ`.
fn depth_point(dom: &DomainSpec, boundary: &DVector<f64>, inner: &DVector<f64>, delta: f64) -> Result<DVector<f64>> {
    let f = |t: f64| -> Result<f64> { Ok(dom.rho_at(&(boundary + (inner - boundary) * t))? + delta) };
    if f(1.0)? > 0.0 {
        return Err(Error::Argument(format!("p is shallower than δ = {delta:e}")));
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-17 {
            break;
        }
    }
    Ok(boundary + (inner - boundary) * hi)
}

fn disc_at(dom: &DomainSpec, w: &DVector<f64>, e1: &DVector<f64>, e2: &DVector<f64>, hint: f64, cfg: &HyperbolicityConfig) -> Result<DiscMap> {
    if dom.chart.is_flat() {
        let jet = Jet1::from_plane(&dom.chart, w.clone(), e1, e2, hint)?;
        return DiscMap::affine(cfg.solver.grid()?, &jet);
    }
    let jet = Jet1::from_plane(&dom.chart, w.clone(), e1, e2, 1.0)?;
    let mut scfg = cfg.solver.clone();
    scfg.radius = Some(hint);
    let u = match_jet(&dom.chart, &jet, &scfg)?;
    Ok(conformal_reparametrize(&dom.chart, &u, &cfg.conformal)?.map)
}

fn measure(dom: &DomainSpec, u: &DiscMap, p0: &DVector<f64>, nu: &DVector<f64>, dist: f64, cfg: &HyperbolicityConfig) -> Result<(f64, f64, f64, f64)> {
    let grid = u.grid();
    let n = u.dim();
    let w = u.center();
    let within = |k: usize, r: f64| grid.radius(k) <= r + 1e-12;
    let mut sup_r: f64 = 0.0;
    for k in (0..grid.len()).filter(|&k| within(k, cfg.inner_radius)) {
        sup_r = sup_r.max((u.point(k) - &w).norm());
    }
    let grads: Vec<(Vec<f64>, Vec<f64>)> = (0..n).map(|i| grid.gradient(u.component(i))).collect();
    let mut grad_sup: f64 = 0.0;
    for k in (0..grid.len()).filter(|&k| within(k, cfg.schwarz_radius)) {
        let s: f64 = grads.iter().map(|(gx, gy)| gx[k] * gx[k] + gy[k] * gy[k]).sum();
        grad_sup = grad_sup.max(s.sqrt());
    }
    let u1_0 = (&w - p0).dot(nu);
    if !(u1_0 < 0.0) {
        return Err(Error::Argument("disc center is not on the inner side of the tangent hyperplane".into()));
    }
    let mut lap_sup: f64 = 0.0;
    if !dom.chart.is_flat() {
        for k in 0..grid.len() {
            let x = u.point(k);
            let gamma = dom.chart.christoffel_at(&x)?;
            let ux: Vec<f64> = grads.iter().map(|g| g.0[k]).collect();
            let uy: Vec<f64> = grads.iter().map(|g| g.1[k]).collect();
            let lap = -(gamma.contract(&ux, &ux) + gamma.contract(&uy, &uy));
            lap_sup = lap_sup.max(lap.dot(nu).abs());
        }
    }
    let g1 = nu.dot(&u.ux(0)).hypot(nu.dot(&u.uy(0)));
    Ok((sup_r / dist.sqrt(), grad_sup / sup_r, lap_sup / u1_0.abs(), g1 / u1_0.abs()))
}

fn ratio(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(0.0f64, f64::max);
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi < 1e-9 {
        1.0
    } else if lo > 0.0 {
        hi / lo
    } else {
        f64::INFINITY
    }
}

/// Distances from `p` to points approaching `boundary_pt` and the disc constants at each depth.
pub fn hyperbolicity_diagnostics(
    dom: &DomainSpec,
    p: &DVector<f64>,
    boundary_pt: &DVector<f64>,
    deltas: &[f64],
    cfg: &HyperbolicityConfig,
) -> Result<HyperbolicityReport> {
    if !(dom.strictness > 0.0) {
        return Err(Error::Precondition(format!(
            "domain '{}' has no certified strictness (ε = {})",
            dom.label, dom.strictness
        )));
    }
    if deltas.len() < 2 {
        return Err(Error::Argument("need at least two depths".into()));
    }
    if dom.rho_at(boundary_pt)?.abs() > 1e-8 {
        return Err(Error::Argument("boundary_pt must lie on ρ = 0".into()));
    }
    let nu = outward_normal(dom, boundary_pt)?;
    let t1 = tangent_to(&nu);
    let targets = deltas
        .iter()
        .map(|&d| depth_point(dom, boundary_pt, p, d))
        .collect::<Result<Vec<_>>>()?;
    let dist: Vec<f64> = match cfg.route {
        DistanceRoute::Segment => {
            // the targets lie on one segment; integrate between consecutive depths and accumulate
            let mut order: Vec<usize> = (0..deltas.len()).collect();
            order.sort_by(|&a, &b| deltas[b].total_cmp(&deltas[a]));
            let mut out = vec![0.0; deltas.len()];
            let (mut from, mut acc) = (p.clone(), 0.0);
            for k in order {
                if (&targets[k] - &from).norm() > 0.0 {
                    acc += edge_weight(dom, &from, &targets[k], &cfg.graph)?;
                }
                out[k] = acc;
                from = targets[k].clone();
            }
            out
        }
        DistanceRoute::Graph => {
            let mut terminals = vec![p.clone()];
            terminals.extend(targets.iter().cloned());
            let graph = build_path_graph(dom, &terminals, &cfg.graph)?;
            let all = graph.distances_from(graph.terminals[0]);
            graph.terminals[1..].iter().map(|t| all[t.index()]).collect()
        }
    };
    let scale = dom.boundary_distance(&dom.origin, 32)?;
    let n = dom.dim();
    let mut rows = Vec::new();
    for (k, (&delta, w)) in deltas.iter().zip(&targets).enumerate() {
        let bd = dom.boundary_distance(w, 64)?;
        // second tangent direction, or the other coordinate plane direction in 2D
        let t2 = if n >= 3 {
            let mut e = DVector::zeros(n);
            let mut best = (f64::INFINITY, 0);
            for i in 0..n {
                let a = nu[i].abs() + t1[i].abs();
                if a < best.0 {
                    best = (a, i);
                }
            }
            e[best.1] = 1.0;
            let v = &e - &nu * nu.dot(&e) - &t1 * t1.dot(&e);
            let nv = v.norm();
            v / nv
        } else {
            nu.clone()
        };
        let mut discs = Vec::new();
        let mut failures = Vec::new();
        let tilts: Vec<f64> = if n >= 3 { cfg.tilts_deg.clone() } else { vec![90.0] };
        for tilt in tilts {
            let th = tilt.to_radians();
            let e2 = &t2 * th.cos() + &nu * th.sin();
            let e2 = if n >= 3 { e2 } else { nu.clone() };
            let hint = if th.sin() < 1e-3 {
                1.25 * (2.0 * bd * scale).sqrt()
            } else {
                (1.25 * bd / th.sin()).min(1.25 * (2.0 * bd * scale).sqrt())
            };
            let res = disc_at(dom, w, &t1, &e2, hint, cfg).and_then(|u| {
                let s = shrink_into(dom, &u, cfg.shrink_iterations)?;
                if !(s > 0.0) {
                    return Err(Error::Radius("disc does not fit".into()));
                }
                let us = u.dilate(s)?;
                let m = measure(dom, &us, boundary_pt, &nu, bd, cfg)?;
                Ok((s, m))
            });
            match res {
                Ok((shrink, (c_half, c_schwarz, a_lap, c_grad))) => {
                    let grad_bound = 2.0 * (2.0 * a_lap + 1.0) + cfg.c_pot * a_lap;
                    discs.push(DiscConstants {
                        tilt_deg: tilt,
                        shrink,
                        c_half,
                        c_schwarz,
                        a_lap,
                        c_grad,
                        grad_bound,
                        consistent: c_grad <= grad_bound,
                    });
                }
                Err(e) => failures.push(format!("tilt {tilt}°: {e}")),
            }
        }
        rows.push(DepthRow {
            delta,
            point: w.as_slice().to_vec(),
            rho: dom.rho_at(w)?,
            boundary_distance: bd,
            distance_upper: dist[k],
            discs,
            failures,
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| (1.0 / r.delta).ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.distance_upper).collect();
    let (distance_slope, _, _) = linear_fit(&lx, &ly);
    let per = |f: fn(&DiscConstants) -> f64| -> Vec<f64> {
        rows.iter()
            .map(|r| r.discs.iter().map(f).fold(0.0f64, f64::max))
            .collect()
    };
    let stability = Stability {
        c_half: ratio(&per(|d| d.c_half)),
        c_schwarz: ratio(&per(|d| d.c_schwarz)),
        a_lap: ratio(&per(|d| d.a_lap)),
        c_grad: ratio(&per(|d| d.c_grad)),
    };
    let stable_within_2 = [stability.c_half, stability.c_schwarz, stability.a_lap, stability.c_grad]
        .iter()
        .all(|r| *r <= 2.0);
    let all_discs = rows.iter().all(|r| !r.discs.is_empty());
    let consistent = all_discs && rows.iter().flat_map(|r| &r.discs).all(|d| d.consistent);
    let c = per(|d| d.c_grad).into_iter().fold(0.0f64, f64::max);
    let divergence = format!(
        "linear δ(t) = C·t with C = {c:.6e}: ∫₀¹ dt/δ(t) = +∞"
    );
    Ok(HyperbolicityReport {
        p: p.as_slice().to_vec(),
        boundary_point: boundary_pt.as_slice().to_vec(),
        rows,
        distance_slope,
        stability,
        stable_within_2,
        consistent,
        divergence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn flat_ball_constants_are_stable() {
        let dom = DomainSpec::euclidean_ball(3, vec![0.0; 3], 1.0).unwrap();
        let cfg = HyperbolicityConfig {
            route: DistanceRoute::Graph,
            graph: GraphConfig { spacing: 0.2, anchor_spacing: 0.4, chords: 100, ..Default::default() },
            ..Default::default()
        };
        let r = hyperbolicity_diagnostics(&dom, &v(&[0.0; 3]), &v(&[1.0, 0.0, 0.0]), &[1e-1, 1e-2, 1e-3], &cfg).unwrap();
        for row in &r.rows {
            assert_eq!(row.discs.len(), 3, "{:?}", row.failures);
            assert!((row.rho + row.delta).abs() < 1e-12);
        }
        assert!(r.consistent);
        assert!(r.stable_within_2, "{:?}", r.stability);
        // d(0, w_δ) grows like ½ log(1/δ)
        assert!(r.distance_slope > 0.3 && r.distance_slope < 0.7, "{}", r.distance_slope);
    }

    #[test]
    fn requires_certified_strictness() {
        let mut dom = DomainSpec::euclidean_ball(2, vec![0.0; 2], 1.0).unwrap();
        dom.strictness = 0.0;
        let err = hyperbolicity_diagnostics(&dom, &v(&[0.0, 0.0]), &v(&[1.0, 0.0]), &[0.1, 0.01], &HyperbolicityConfig::default());
        assert!(matches!(err, Err(Error::Precondition(_))));
        assert!(dom.rho.value(&v(&[1.0, 0.0])).unwrap().abs() < 1e-15);
    }
}
