//! Stationary graph discs over a prescribed tangent plane.
//!
//! In the frame-adapted chart `x = p + s A y` (`A` g(p)-orthonormal, first two
//! columns spanning the plane, `s = t·R`) with metric `Aᵀ g(p + s A y) A`, a disc
//! is the graph `(ξ, η) ↦ (ξ, η, f(ξ, η))` over the unit disc. The unknown is
//! `w` on interior nodes (zero on the boundary) and
//! `f = w − w(0) − ∇w(0)·(ξ, η)`, so `f(0) = 0` and `∇f(0) = 0` hold exactly and
//! the boundary values of `f` are affine. The stationary system is solved by
//! Newton's method with matrix-free GMRES preconditioned by the fast polar
//! Poisson solver (the linearization at the flat disc is the Dirichlet Laplacian).

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chart::Chart;
use crate::disc::{DiscGrid, DiscMap, Jet1};
use crate::error::{Error, Result};
use crate::numerics::gmres;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Decreasing scales in `(0, 1]`; the largest one whose Newton iteration converges is used.
    pub t_schedule: Vec<f64>,
    pub newton_tol: f64,
    pub max_newton: usize,
    /// `(N_r, N_θ)`.
    pub resolution: (usize, usize),
    /// Maximum number of step halvings per Newton step.
    pub damping: usize,
    /// Disc radius `R` at `t = 1`, in g-units at the center; `None` fits the chart box.
    pub radius: Option<f64>,
    /// Bound on `sup|f|` in adapted units.
    pub max_height: f64,
    /// Relative tolerance of the inner linear solves (inexact Newton forcing term).
    pub gmres_tol: f64,
    pub gmres_restart: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            t_schedule: (0..=6).map(|k| 0.5f64.powi(k)).collect(),
            newton_tol: 1e-10,
            max_newton: 25,
            resolution: (64, 128),
            damping: 8,
            radius: None,
            max_height: 0.5,
            gmres_tol: 1e-5,
            gmres_restart: 40,
        }
    }
}

impl SolverConfig {
    pub fn with_resolution(mut self, nr: usize, nt: usize) -> Self {
        self.resolution = (nr, nt);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_schedule.is_empty() {
            return Err(Error::Config("t_schedule is empty".into()));
        }
        if self.t_schedule.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
            return Err(Error::Config("t_schedule entries must lie in (0, 1]".into()));
        }
        if self.t_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("t_schedule must be strictly decreasing".into()));
        }
        if !(self.newton_tol > 0.0) {
            return Err(Error::Config("newton_tol must be positive".into()));
        }
        if let Some(r) = self.radius {
            if !(r > 0.0) {
                return Err(Error::Config("radius must be positive".into()));
            }
        }
        if self.max_newton == 0 {
            return Err(Error::Config("max_newton must be at least 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<DiscGrid>> {
        DiscGrid::new(self.resolution.0, self.resolution.1)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SolverReport {
    pub t_used: f64,
    pub newton_iterations: usize,
    pub final_residual: f64,
    pub residual_history: Vec<f64>,
    pub conformality_defect: Option<f64>,
    /// `(t, outcome)` for every attempted scale.
    pub attempts: Vec<(f64, String)>,
}

/// The affine chart `y ↦ origin + scale · basis · y`.
#[derive(Clone, Debug, PartialEq)]
pub struct AdaptedFrame {
    pub origin: DVector<f64>,
    pub basis: DMatrix<f64>,
    pub scale: f64,
}

impl AdaptedFrame {
    /// Chart in adapted coordinates, carrying the metric `basisᵀ g basis` (the `h_t` normalization).
    pub fn chart(&self, base: &Chart) -> Result<Chart> {
        let m = &self.basis * self.scale;
        base.affine_pullback(&self.origin, &m, 1.0 / (self.scale * self.scale))
    }

    pub fn to_chart(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.origin + &self.basis * y * self.scale
    }

    pub fn vector_to_chart(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.basis * v * self.scale
    }
}

/// g(p)-orthonormal basis whose first two columns are the normalized jet frame.
pub fn adapted_basis(chart: &Chart, jet: &Jet1) -> Result<DMatrix<f64>> {
    let n = chart.dim();
    let g = chart.metric_at(&jet.center)?;
    let ip = |a: &DVector<f64>, b: &DVector<f64>| a.dot(&(&g * b));
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(n);
    for v in [&jet.v1, &jet.v2] {
        let mut w = v.clone();
        for c in &cols {
            w -= c * ip(c, &w);
        }
        let nw = ip(&w, &w).sqrt();
        if !(nw > 0.0) {
            return Err(Error::Argument("degenerate jet frame".into()));
        }
        cols.push(w / nw);
    }
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut w = DVector::zeros(n);
        w[e] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                w -= c * ip(c, &w);
            }
        }
        let nw = ip(&w, &w).sqrt();
        if nw > 1e-6 {
            cols.push(w / nw);
        }
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Largest radius keeping the adapted box (half-width 1.25 in adapted units) inside the chart box.
pub fn fitted_radius(chart: &Chart, p: &DVector<f64>, basis: &DMatrix<f64>) -> f64 {
    let n = chart.dim();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let row: f64 = (0..n).map(|k| basis[(i, k)].abs()).sum();
        let (lo, hi) = chart.bounds()[i];
        let room = (p[i] - lo).min(hi - p[i]);
        if row > 0.0 {
            best = best.min(room / (1.25 * row));
        }
    }
    best
}

/// A solved (or candidate) graph disc.
#[derive(Clone, Debug)]
pub struct GraphDisc {
    pub jet: Jet1,
    pub frame: AdaptedFrame,
    pub grid: Arc<DiscGrid>,
    /// `n − 2` components over the grid nodes.
    pub profile: Vec<Vec<f64>>,
    pub report: SolverReport,
}

impl GraphDisc {
    /// `(ξ, η, f)` in adapted coordinates.
    pub fn adapted_map(&self) -> Result<DiscMap> {
        let g = &self.grid;
        let mut comps = vec![g.sample(|x, _| x), g.sample(|_, y| y)];
        comps.extend(self.profile.iter().cloned());
        DiscMap::new(g.clone(), comps)
    }

    /// The disc in chart coordinates.
    pub fn to_disc_map(&self) -> Result<DiscMap> {
        let n = self.frame.origin.len();
        let g = &self.grid;
        let mut comps = vec![vec![0.0; g.len()]; n];
        let mut y = DVector::zeros(n);
        for k in 0..g.len() {
            let (a, b) = g.xy(k);
            y[0] = a;
            y[1] = b;
            for (j, f) in self.profile.iter().enumerate() {
                y[j + 2] = f[k];
            }
            let x = self.frame.to_chart(&y);
            for i in 0..n {
                comps[i][k] = x[i];
            }
        }
        DiscMap::new(g.clone(), comps)
    }

    pub fn profile_sup(&self) -> f64 {
        self.profile
            .iter()
            .flatten()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Graph residual `H^j = Z^j − Z^1 f^j_x − Z^2 f^j_y`, `Z = G^{ab}(u_ab + Γ(u_a, u_b))`,
/// in the adapted chart. Component-major, zero on the boundary ring.
pub(crate) fn residual_in(adapted: &Chart, grid: &DiscGrid, f: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = f.len() + 2;
    let parts: Vec<_> = f.iter().map(|c| grid.partials(c)).collect();
    let mut out = vec![vec![0.0; grid.len()]; n - 2];
    let flat = adapted.is_flat();
    let mut y = DVector::zeros(n);
    let mut ux = DVector::zeros(n);
    let mut uy = DVector::zeros(n);
    ux[0] = 1.0;
    uy[1] = 1.0;
    for k in 0..grid.interior_count() {
        let (a, b) = grid.xy(k);
        y[0] = a;
        y[1] = b;
        for j in 0..n - 2 {
            y[j + 2] = f[j][k];
            ux[j + 2] = parts[j].x[k];
            uy[j + 2] = parts[j].y[k];
        }
        let h = adapted.metric_at(&y)?;
        let hx = &h * &ux;
        let hy = &h * &uy;
        let (e, ff, gg) = (ux.dot(&hx), ux.dot(&hy), uy.dot(&hy));
        let det = e * gg - ff * ff;
        if !(det > 0.0) {
            return Err(Error::Immersion {
                node: k,
                detail: format!("induced metric determinant {det:e}"),
            });
        }
        let (ixx, ixy, iyy) = (gg / det, -ff / det, e / det);
        let mut z = DVector::zeros(n);
        for j in 0..n - 2 {
            z[j + 2] = ixx * parts[j].xx[k] + 2.0 * ixy * parts[j].xy[k] + iyy * parts[j].yy[k];
        }
        if !flat {
            let gamma = adapted.christoffel_at(&y)?;
            z += gamma.contract(ux.as_slice(), ux.as_slice()) * ixx;
            z += gamma.contract(ux.as_slice(), uy.as_slice()) * (2.0 * ixy);
            z += gamma.contract(uy.as_slice(), uy.as_slice()) * iyy;
        }
        for j in 0..n - 2 {
            out[j][k] = z[j + 2] - z[0] * parts[j].x[k] - z[1] * parts[j].y[k];
        }
    }
    Ok(out)
}

/// Stationary residual of `gd` (per node, `n − 2` components) under the adapted metric.
pub fn stationary_residual(chart: &Chart, gd: &GraphDisc) -> Result<Vec<DVector<f64>>> {
    let adapted = gd.frame.chart(chart)?;
    let r = residual_in(&adapted, &gd.grid, &gd.profile)?;
    Ok((0..gd.grid.len())
        .map(|k| DVector::from_iterator(r.len(), r.iter().map(|c| c[k])))
        .collect())
}

fn sup(r: &[Vec<f64>]) -> f64 {
    r.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `f = w − w(0) − ∇w(0)·(ξ, η)` for every component.
fn profile_from(grid: &DiscGrid, w: &[Vec<f64>]) -> Vec<Vec<f64>> {
    w.iter()
        .map(|wc| {
            let (gx, gy) = grid.origin_gradient(wc);
            let w0 = wc[0];
            (0..grid.len())
                .map(|k| {
                    let (a, b) = grid.xy(k);
                    wc[k] - w0 - gx * a - gy * b
                })
                .collect()
        })
        .collect()
}

fn pack(grid: &DiscGrid, comps: &[Vec<f64>]) -> DVector<f64> {
    let m = grid.interior_count();
    DVector::from_iterator(comps.len() * m, comps.iter().flat_map(|c| c[..m].iter().copied()))
}

fn unpack(grid: &DiscGrid, v: &DVector<f64>, ncomp: usize) -> Vec<Vec<f64>> {
    let m = grid.interior_count();
    (0..ncomp)
        .map(|j| {
            let mut c = vec![0.0; grid.len()];
            c[..m].copy_from_slice(&v.as_slice()[j * m..(j + 1) * m]);
            c
        })
        .collect()
}

/// Dirichlet Poisson inverse applied component-wise (zero boundary data).
pub(crate) fn poisson_precond(grid: &DiscGrid, v: &DVector<f64>, ncomp: usize) -> DVector<f64> {
    let zero = vec![0.0; grid.angular_nodes()];
    let comps: Vec<Vec<f64>> = unpack(grid, v, ncomp)
        .iter()
        .map(|c| grid.solve_dirichlet(c, &zero))
        .collect();
    pack(grid, &comps)
}

struct NewtonOutcome {
    w: Vec<Vec<f64>>,
    history: Vec<f64>,
    converged: bool,
    message: String,
}

fn newton_graph(adapted: &Chart, grid: &DiscGrid, cfg: &SolverConfig, ncomp: usize) -> NewtonOutcome {
    let eval = |w: &[Vec<f64>]| -> Result<Vec<Vec<f64>>> {
        let f = profile_from(grid, w);
        if sup(&f) > cfg.max_height {
            return Err(Error::Numeric(format!(
                "graph height {:.3e} exceeds {}",
                sup(&f),
                cfg.max_height
            )));
        }
        residual_in(adapted, grid, &f)
    };
    let mut w = vec![vec![0.0; grid.len()]; ncomp];
    let mut history = Vec::new();
    let mut r = match eval(&w) {
        Ok(r) => r,
        Err(e) => {
            return NewtonOutcome {
                w,
                history,
                converged: false,
                message: e.to_string(),
            }
        }
    };
    for _ in 0..cfg.max_newton {
        let rn = sup(&r);
        history.push(rn);
        if rn < cfg.newton_tol {
            return NewtonOutcome {
                w,
                history,
                converged: true,
                message: "converged".into(),
            };
        }
        let wv = pack(grid, &w);
        let rv = pack(grid, &r);
        let wnorm = wv.norm();
        let apply = |v: &DVector<f64>| -> Result<DVector<f64>> {
            let vn = v.norm();
            if vn == 0.0 {
                return Ok(DVector::zeros(v.len()));
            }
            let eps = 1e-7 * (1.0 + wnorm) / vn;
            let wp = unpack(grid, &(&wv + v * eps), ncomp);
            let rp = pack(grid, &eval(&wp)?);
            Ok((rp - &rv) / eps)
        };
        let precond = |v: &DVector<f64>| Ok(poisson_precond(grid, v, ncomp));
        let step = match gmres(apply, precond, &(-&rv), cfg.gmres_tol, cfg.gmres_restart, cfg.gmres_restart) {
            Ok(out) => out.solution,
            Err(e) => {
                return NewtonOutcome {
                    w,
                    history,
                    converged: false,
                    message: format!("linear solve failed: {e}"),
                }
            }
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..=cfg.damping {
            let cand = unpack(grid, &(&wv + &step * lambda), ncomp);
            if let Ok(rc) = eval(&cand) {
                if sup(&rc) < rn {
                    w = cand;
                    r = rc;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return NewtonOutcome {
                w,
                history,
                converged: false,
                message: "step halving exhausted".into(),
            };
        }
    }
    let rn = sup(&r);
    history.push(rn);
    NewtonOutcome {
        w,
        history,
        converged: rn < cfg.newton_tol,
        message: if rn < cfg.newton_tol {
            "converged".into()
        } else {
            "iteration cap reached".into()
        },
    }
}

/// Solves the stationary graph system over the plane of `jet` at its center.
pub fn solve_graph_disc(chart: &Chart, jet: &Jet1, cfg: &SolverConfig) -> Result<GraphDisc> {
    cfg.validate()?;
    let n = chart.dim();
    if jet.dim() != n {
        return Err(Error::Argument("jet dimension differs from chart dimension".into()));
    }
    let g = chart.metric_at(&jet.center)?;
    let (a, b, c) = (
        jet.v1.dot(&(&g * &jet.v1)),
        jet.v1.dot(&(&g * &jet.v2)),
        jet.v2.dot(&(&g * &jet.v2)),
    );
    if b.abs() > 1e-10 * a.max(c) || (a - c).abs() > 1e-10 * a.max(c) {
        return Err(Error::Argument("jet frame is not g-orthonormal up to scale".into()));
    }
    let grid = cfg.grid()?;
    let basis = adapted_basis(chart, jet)?;
    let radius = match cfg.radius {
        Some(r) => r,
        None => fitted_radius(chart, &jet.center, &basis),
    };
    let ncomp = n - 2;
    let mut report = SolverReport::default();
    if ncomp == 0 {
        // Gr(2,2): the plane itself.
        let frame = AdaptedFrame {
            origin: jet.center.clone(),
            basis,
            scale: radius * cfg.t_schedule[0],
        };
        frame.chart(chart)?;
        report.t_used = cfg.t_schedule[0];
        report.newton_iterations = 1;
        report.residual_history = vec![0.0];
        report.attempts.push((report.t_used, "converged".into()));
        return Ok(GraphDisc {
            jet: jet.clone(),
            frame,
            grid,
            profile: Vec::new(),
            report,
        });
    }
    let mut last_history = Vec::new();
    for &t in &cfg.t_schedule {
        let frame = AdaptedFrame {
            origin: jet.center.clone(),
            basis: basis.clone(),
            scale: radius * t,
        };
        let adapted = match frame.chart(chart) {
            Ok(c) => c,
            Err(e) => {
                report.attempts.push((t, e.to_string()));
                continue;
            }
        };
        let out = newton_graph(&adapted, &grid, cfg, ncomp);
        report.attempts.push((t, out.message.clone()));
        if out.converged {
            report.t_used = t;
            report.newton_iterations = out.history.len();
            report.final_residual = *out.history.last().unwrap_or(&0.0);
            report.residual_history = out.history;
            let profile = profile_from(&grid, &out.w);
            return Ok(GraphDisc {
                jet: jet.clone(),
                frame,
                grid,
                profile,
                report,
            });
        }
        last_history = out.history;
    }
    Err(Error::Convergence {
        message: format!(
            "graph Newton failed at every scale: {}",
            report
                .attempts
                .iter()
                .map(|(t, m)| format!("t={t}: {m}"))
                .collect::<Vec<_>>()
                .join("; ")
        ),
        history: last_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::metrics::{Diagonal, PerturbedEuclidean};
    use nalgebra::dvector;

    fn jet(chart: &Chart) -> Jet1 {
        let n = chart.dim();
        let mut a = DVector::zeros(n);
        let mut b = DVector::zeros(n);
        a[0] = 1.0;
        b[1] = 1.0;
        Jet1::from_plane(chart, DVector::zeros(n), &a, &b, 1.0).unwrap()
    }

    #[test]
    fn flat_residual_examples() {
        let chart = Chart::euclidean(3, 2.0);
        let grid = DiscGrid::new(32, 64).unwrap();
        let zero = vec![vec![0.0; grid.len()]];
        assert_eq!(sup(&residual_in(&chart, &grid, &zero).unwrap()), 0.0);
        let lin = vec![grid.sample(|x, y| 0.2 * x - 0.1 * y + 0.05)];
        assert!(sup(&residual_in(&chart, &grid, &lin).unwrap()) < 1e-10);
        // oracle: div(∇f/W) = (Δf − f_a f_b f_ab/W²)/W; at the origin this is Δf = 4
        let par = vec![grid.sample(|x, y| x * x + y * y)];
        let r = residual_in(&chart, &grid, &par).unwrap();
        assert!((r[0][0] - 4.0).abs() < 1e-9);
        let k = grid.index(10, 7);
        let (x, y) = grid.xy(k);
        let (fx, fy) = (2.0 * x, 2.0 * y);
        let w2 = 1.0 + fx * fx + fy * fy;
        let oracle = 4.0 - (fx * fx * 2.0 + fy * fy * 2.0) / w2;
        assert!((r[0][k] - oracle).abs() < 1e-8);
    }

    #[test]
    fn euclidean_solve_is_exactly_flat() {
        let chart = Chart::euclidean(3, 2.0);
        let gd = solve_graph_disc(&chart, &jet(&chart), &SolverConfig::default()).unwrap();
        assert!(gd.profile.iter().flatten().all(|v| *v == 0.0));
        assert_eq!(gd.report.newton_iterations, 1);
        assert_eq!(gd.report.t_used, 1.0);
        let r = stationary_residual(&chart, &gd).unwrap();
        assert!(r.iter().all(|v| v.iter().all(|x| *x == 0.0)));
    }

    #[test]
    fn perturbed_metric_converges() {
        let chart = Chart::new(
            vec![(-1.5, 1.5); 3],
            Arc::new(PerturbedEuclidean::new(3, 0.05, vec![0.0; 3], 1.0)),
        )
        .unwrap();
        let cfg = SolverConfig::default().with_resolution(32, 64);
        let j = Jet1::from_plane(
            &chart,
            dvector![0.1, 0.0, 0.2],
            &dvector![1.0, 0.0, 0.0],
            &dvector![0.0, 1.0, 0.0],
            1.0,
        )
        .unwrap();
        let gd = solve_graph_disc(&chart, &j, &cfg).unwrap();
        assert!(gd.report.final_residual < 1e-8);
        assert!(gd.profile_sup() < 0.05, "{}", gd.profile_sup());
        assert!(gd.profile_sup() > 0.0);
        let f = &gd.profile[0];
        assert_eq!(f[0], 0.0);
        let (gx, gy) = gd.grid.origin_gradient(f);
        assert!(gx.abs() < 1e-12 && gy.abs() < 1e-12);
    }

    #[test]
    fn diagonal_metric_profile_is_resolution_stable() {
        let chart = Chart::new(
            vec![(-1.0, 1.0); 3],
            Arc::new(Diagonal {
                constant: vec![1.0, 1.0, 1.0],
                quadratic: vec![vec![0.0; 3], vec![0.0; 3], vec![0.1, 0.0, 0.0]],
            }),
        )
        .unwrap();
        let j = jet(&chart);
        let solve = |nr, nt| {
            solve_graph_disc(&chart, &j, &SolverConfig::default().with_resolution(nr, nt)).unwrap()
        };
        let (c, f) = (solve(16, 32), solve(32, 64));
        let gx = c.grid.origin_gradient(&c.profile[0]);
        assert!(gx.0.abs() < 1e-8 && gx.1.abs() < 1e-8);
        let mut diff: f64 = 0.0;
        for i in 1..=16 {
            for jj in 0..32 {
                let a = c.profile[0][c.grid.index(i, jj)];
                let b = f.profile[0][f.grid.index(2 * i, 2 * jj)];
                diff = diff.max((a - b).abs());
            }
        }
        assert!(diff < 1e-3 * (1.0 + c.profile_sup()), "{diff}");
    }

    #[test]
    fn config_validation() {
        let mut cfg = SolverConfig::default();
        cfg.t_schedule = vec![0.5, 1.0];
        assert!(cfg.validate().is_err());
        cfg.t_schedule = vec![1.0, 0.0];
        assert!(cfg.validate().is_err());
        cfg = SolverConfig::default();
        cfg.newton_tol = 0.0;
        assert!(cfg.validate().is_err());
    }
}
