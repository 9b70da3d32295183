//! Upper bounds on the Kobayashi–Royden pseudometric from explicit discs.
//!
//! `F(w, ξ) ≤ |ξ|_g / |du(0)e₁|_g` for every conformal harmonic `u: 𝔻 → Ω` with
//! `u(0) = w` and `du(0)e₁ ∥ ξ`. Candidates: Möbius-recentred round discs in
//! planar slices on flat charts, jet-matched stationary discs on curved ones.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::disc::{DiscMap, Jet1};
use crate::error::{Error, Result};
use crate::numerics::gaussian_vectors;
use crate::solver::{conformal_reparametrize, match_jet, ConformalConfig, SolverConfig};

use super::domain::{DomainSpec, Shape};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UpperConfig {
    /// Planes through `ξ` tried per evaluation (the boundary-tangent one first).
    pub planes: usize,
    pub seed: u64,
    /// Bisection steps when shrinking a candidate into `Ω`.
    pub shrink_iterations: usize,
    /// Angular samples of the membership test for round discs.
    pub ring_samples: usize,
    pub solver: SolverConfig,
    pub conformal: ConformalConfig,
}

impl Default for UpperConfig {
    fn default() -> Self {
        UpperConfig {
            planes: 4,
            seed: 0,
            shrink_iterations: 40,
            ring_samples: 64,
            solver: SolverConfig::default().with_resolution(16, 32),
            conformal: ConformalConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct UpperEstimate {
    /// `+∞` when no candidate fits.
    pub value: f64,
    pub candidate: String,
    /// Dilation factor applied to the best candidate.
    pub shrink: f64,
    /// `|du(0)e₁|_g` of the best candidate after shrinking.
    pub derivative: f64,
    pub candidates: usize,
    pub diagnostic: Option<String>,
}

fn ip(g: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.dot(&(g * b))
}

/// g-orthonormal directions completing `xi` (g-unit) to planes, boundary-tangent first.
fn plane_directions(dom: &DomainSpec, w: &DVector<f64>, xi: &DVector<f64>, g: &DMatrix<f64>, cfg: &UpperConfig) -> Result<Vec<DVector<f64>>> {
    let n = dom.dim();
    // g-orthonormal basis of the complement of xi
    let mut comp: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        v -= xi * ip(g, xi, &v);
        for c in &comp {
            v -= c * ip(g, c, &v);
        }
        let nv = ip(g, &v, &v).sqrt();
        if nv > 1e-8 {
            comp.push(v / nv);
        }
        if comp.len() == n - 1 {
            break;
        }
    }
    if n == 2 {
        return Ok(comp);
    }
    // g-gradient of ρ, projected off xi; the first plane avoids it
    let grad = g.clone().lu().solve(&dom.rho.gradient(w)?).ok_or_else(|| Error::Numeric("singular metric".into()))?;
    let coords: Vec<f64> = comp.iter().map(|c| ip(g, c, &grad)).collect();
    let cn = coords.iter().map(|x| x * x).sum::<f64>().sqrt();
    // orthonormal frame of the complement whose first vector is orthogonal to the gradient
    let mut frame: Vec<DVector<f64>> = Vec::new();
    if cn > 1e-14 {
        let v: DVector<f64> = comp.iter().zip(&coords).fold(DVector::zeros(n), |acc, (c, a)| acc + c * (a / cn));
        for c in &comp {
            let mut e = c - &v * ip(g, &v, c);
            for f in &frame {
                e -= f * ip(g, f, &e);
            }
            let ne = ip(g, &e, &e).sqrt();
            if ne > 1e-6 {
                frame.push(e / ne);
            }
            if frame.len() == n - 2 {
                break;
            }
        }
        frame.push(v);
    } else {
        frame = comp.clone();
    }
    let mut out = vec![frame[0].clone()];
    let extra = cfg.planes.saturating_sub(1);
    if n == 3 {
        for k in 1..=extra {
            let t = std::f64::consts::PI * k as f64 / (extra + 1) as f64;
            out.push(&frame[0] * t.cos() + &frame[1] * t.sin());
        }
    } else {
        for z in gaussian_vectors(n - 1, extra, cfg.seed) {
            let v = frame.iter().zip(z.iter()).fold(DVector::zeros(n), |acc, (f, a)| acc + f * *a);
            let nv = ip(g, &v, &v).sqrt();
            out.push(v / nv);
        }
    }
    Ok(out)
}

/// Value `R/(R² − |w − c|²)` of the Möbius-recentred round disc `c + R𝔻` at `w`.
fn mobius_value(radius: f64, offset: f64) -> f64 {
    let den = radius * radius - offset * offset;
    if den <= 0.0 {
        f64::INFINITY
    } else {
        radius / den
    }
}

/// Largest `R ≤ rmax` with the round disc `c + R𝔻` in the plane `(e1, e2)` inside `Ω`.
fn round_radius(dom: &DomainSpec, c: &DVector<f64>, e1: &DVector<f64>, e2: &DVector<f64>, rmax: f64, cfg: &UpperConfig) -> f64 {
    if !dom.contains(c) {
        return 0.0;
    }
    let m = cfg.ring_samples.max(8);
    let trig: Vec<(f64, f64)> = (0..m)
        .map(|j| {
            let t = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            (t.cos(), t.sin())
        })
        .collect();
    let inside = |r: f64| {
        [0.25, 0.5, 0.75, 1.0].iter().all(|f| {
            trig.iter()
                .all(|(co, si)| dom.contains(&(c + e1 * (f * r * co) + e2 * (f * r * si))))
        })
    };
    if inside(rmax) {
        return rmax;
    }
    let (mut lo, mut hi) = (0.0, rmax);
    for _ in 0..cfg.shrink_iterations {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Best Möbius round disc through `w` in the plane `(e1, e2)` (g-orthonormal), by pattern search on the center.
fn slice_candidate(dom: &DomainSpec, w: &DVector<f64>, e1: &DVector<f64>, e2: &DVector<f64>, cfg: &UpperConfig) -> (f64, f64) {
    let rmax: f64 = dom.chart.bounds().iter().map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt();
    let eval = |a: f64, b: f64| {
        let c = w + e1 * a + e2 * b;
        let r = round_radius(dom, &c, e1, e2, rmax, cfg);
        (mobius_value(r, a.hypot(b)), r)
    };
    let (mut best, mut radius) = eval(0.0, 0.0);
    if !best.is_finite() {
        return (best, radius);
    }
    let (mut a, mut b) = (0.0, 0.0);
    let mut step = 0.5 * radius;
    let stop = 1e-6 * radius;
    while step > stop {
        let mut moved = false;
        for (da, db) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let (na, nb) = (a + da * step, b + db * step);
            let (v, r) = eval(na, nb);
            if v < best {
                best = v;
                radius = r;
                a = na;
                b = nb;
                moved = true;
                break;
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (best, radius)
}

/// Exact slice of a Euclidean ball: center `c` and radius of `Ω ∩ (w + span(e1, e2))`.
fn ball_slice(center: &[f64], radius: f64, w: &DVector<f64>, e1: &DVector<f64>, e2: &DVector<f64>) -> (f64, f64) {
    let d = DVector::from_column_slice(center) - w;
    let inplane = e1 * e1.dot(&d) + e2 * e2.dot(&d);
    let off = (&d - &inplane).norm_squared();
    let rs2 = radius * radius - off;
    if rs2 <= 0.0 {
        return (f64::INFINITY, 0.0);
    }
    let rs = rs2.sqrt();
    (mobius_value(rs, inplane.norm()), rs)
}

/// Largest dilation `s ∈ (0, 1]` with `u(s𝔻)` inside `Ω` at every node.
pub(crate) fn shrink_into(dom: &DomainSpec, u: &DiscMap, iterations: usize) -> Result<f64> {
    let inside = |m: &DiscMap| (0..m.grid().len()).all(|k| dom.contains(&m.point(k)));
    if inside(u) {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..iterations {
        let mid = 0.5 * (lo + hi);
        if mid <= 0.0 {
            break;
        }
        if inside(&u.dilate(mid)?) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Smallest g-singular value of `du(0)`.
pub(crate) fn min_stretch(dom: &DomainSpec, u: &DiscMap) -> Result<f64> {
    let c = u.center();
    let g = dom.chart.metric_at(&c)?;
    let (ux, uy) = (u.ux(0), u.uy(0));
    let gram = nalgebra::Matrix2::new(ip(&g, &ux, &ux), ip(&g, &ux, &uy), ip(&g, &uy, &ux), ip(&g, &uy, &uy));
    Ok(gram.symmetric_eigenvalues().min().max(0.0).sqrt())
}

fn solver_candidate(
    dom: &DomainSpec,
    w: &DVector<f64>,
    xi: &DVector<f64>,
    eta: &DVector<f64>,
    radius: Option<f64>,
    cfg: &UpperConfig,
) -> Result<(f64, f64)> {
    let jet = Jet1::new(&dom.chart, w.clone(), xi.clone(), eta.clone())?;
    let mut scfg = cfg.solver.clone();
    scfg.radius = radius;
    let u = match_jet(&dom.chart, &jet, &scfg)?;
    let u = conformal_reparametrize(&dom.chart, &u, &cfg.conformal)?.map;
    let s = shrink_into(dom, &u, cfg.shrink_iterations)?;
    let stretch = min_stretch(dom, &u)? * s;
    Ok((stretch, s))
}

/// Upper bound on `F(w, ξ)`.
pub fn royden_upper(dom: &DomainSpec, w: &DVector<f64>, xi: &DVector<f64>, cfg: &UpperConfig) -> Result<UpperEstimate> {
    if w.len() != dom.dim() || xi.len() != dom.dim() {
        return Err(Error::Argument("point and vector must match the chart dimension".into()));
    }
    if !dom.contains(w) {
        return Err(Error::Argument(format!("w = {:?} is not in Ω", w.as_slice())));
    }
    let g = dom.chart.metric_at(w)?;
    let xi_norm = ip(&g, xi, xi).sqrt();
    if !(xi_norm > 0.0) || !xi_norm.is_finite() {
        return Err(Error::Argument("ξ must be a nonzero finite vector".into()));
    }
    let e1 = xi / xi_norm;
    let planes = plane_directions(dom, w, &e1, &g, cfg)?;
    // best value of |du(0)e₁|^{-1} for a unit vector, then scaled by |ξ|
    let mut best = (f64::INFINITY, String::from("none"), 0.0, 0.0);
    let mut tried = 0;
    let mut failures = Vec::new();
    let identity = (&g - DMatrix::identity(dom.dim(), dom.dim())).amax() == 0.0;
    if dom.chart.is_flat() {
        for (k, e2) in planes.iter().enumerate() {
            tried += 1;
            let (v, r) = match (&dom.shape, identity) {
                (Shape::Ball { center, radius }, true) => {
                    let (v, r) = ball_slice(center, *radius, w, &e1, e2);
                    (v, r)
                }
                _ => slice_candidate(dom, w, &e1, e2, cfg),
            };
            if v < best.0 {
                best = (v, format!("slice(plane={k})"), 1.0, 1.0 / v);
                let _ = r;
            }
        }
    } else {
        let dist = dom.boundary_distance(w, 32)?;
        let scale = dom.boundary_distance(&dom.origin, 32)?;
        let mut radii = vec![None];
        for r in [1.25 * dist, 1.25 * (2.0 * dist * scale).sqrt()] {
            if r.is_finite() && r > 0.0 {
                radii.push(Some(r));
            }
        }
        for (k, e2) in planes.iter().enumerate() {
            for r in &radii {
                tried += 1;
                match solver_candidate(dom, w, &e1, e2, *r, cfg) {
                    Ok((stretch, s)) if stretch > 0.0 => {
                        let v = 1.0 / stretch;
                        if v < best.0 {
                            let label = match r {
                                Some(r) => format!("solver(plane={k},R={r:.3e})"),
                                None => format!("solver(plane={k},R=fit)"),
                            };
                            best = (v, label, s, stretch);
                        }
                    }
                    Ok(_) => failures.push(format!("plane {k}: disc does not fit")),
                    Err(e) => failures.push(format!("plane {k}: {e}")),
                }
            }
        }
    }
    let diagnostic = if best.0.is_finite() {
        None
    } else {
        Some(if failures.is_empty() {
            "no candidate disc fits inside Ω".to_string()
        } else {
            failures.join("; ")
        })
    };
    Ok(UpperEstimate {
        value: best.0 * xi_norm,
        candidate: best.1,
        shrink: best.2,
        derivative: best.3,
        candidates: tried,
        diagnostic,
    })
}
