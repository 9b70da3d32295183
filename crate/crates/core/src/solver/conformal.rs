//! Conformal reparametrization of immersed discs.
//!
//! Steps: a linear map making the induced metric conformal at the origin, a
//! Beltrami solve `ψ = z e^σ` with `ψ_z̄ = μ ψ_z` (so `|ψ| = 1` on the rim and
//! `ψ(0) = 0`), inversion of `ψ` on the grid, and a harmonic-map polish that keeps
//! the rim values up to low Fourier modes chosen so that the center and the
//! tangent plane at the center are preserved.

use nalgebra::{DMatrix, DVector, Matrix2};
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chart::Chart;
use crate::disc::{
    conformality_defect, first_fundamental_form, harmonic_residual, DiscGrid, DiscMap,
};
use crate::error::{Error, Result};
use crate::numerics::gmres;

use super::graph::poisson_precond;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConformalConfig {
    pub beltrami_tol: f64,
    pub max_beltrami: usize,
    /// Target sup of the harmonic residual after polishing.
    pub harmonic_tol: f64,
    pub max_newton: usize,
    /// Tolerance on the center and tangent-plane constraints.
    pub jet_tol: f64,
    pub max_jet_iterations: usize,
    pub gmres_tol: f64,
    pub gmres_restart: usize,
}

impl Default for ConformalConfig {
    fn default() -> Self {
        Self {
            beltrami_tol: 1e-12,
            max_beltrami: 60,
            harmonic_tol: 1e-10,
            max_newton: 25,
            jet_tol: 1e-11,
            max_jet_iterations: 30,
            gmres_tol: 1e-5,
            gmres_restart: 40,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConformalReport {
    pub defect_before: f64,
    pub defect_after: f64,
    pub beltrami_iterations: usize,
    pub beltrami_change: f64,
    pub newton_iterations: usize,
    pub harmonic_residual: f64,
    pub jet_iterations: usize,
    /// True when the defect did not drop below `max(1e-3, defect_before / 10)`.
    pub no_progress: bool,
}

#[derive(Clone, Debug)]
pub struct Reparametrized {
    pub map: DiscMap,
    pub report: ConformalReport,
}

type C = Complex64;

/// Linear map `L` with `Lᵀ G0 L` a multiple of the identity and operator norm 1.
fn linear_conformalizer(e: f64, f: f64, g: f64) -> Option<Matrix2<f64>> {
    if (e - g).abs() <= 1e-14 * (e + g) && f.abs() <= 1e-14 * (e + g) {
        return None;
    }
    let eig = Matrix2::new(e, f, f, g).symmetric_eigen();
    let lmin = eig.eigenvalues.min();
    let q = eig.eigenvectors;
    let d = Matrix2::new(
        (lmin / eig.eigenvalues[0]).sqrt(),
        0.0,
        0.0,
        (lmin / eig.eigenvalues[1]).sqrt(),
    );
    Some(q * d * q.transpose())
}

/// Complex dilatation `μ = (E − G + 2iF) / (E + G + 2√(EG − F²))` at every node.
fn dilatation(forms: &[(f64, f64, f64)]) -> Vec<C> {
    forms
        .iter()
        .map(|&(e, f, g)| {
            let den = e + g + 2.0 * (e * g - f * f).max(0.0).sqrt();
            C::new(e - g, 2.0 * f) / den
        })
        .collect()
}

/// Solves `σ_z̄ = μ(1/z + σ_z)` with `Re σ = 0` on the rim and `Im σ(0) = 0`.
fn solve_beltrami(
    grid: &DiscGrid,
    mu: &[C],
    cfg: &ConformalConfig,
) -> Result<(Vec<f64>, Vec<f64>, usize, f64)> {
    let len = grid.len();
    let nt = grid.angular_nodes();
    let zero = vec![0.0; nt];
    let mut a = vec![0.0; len];
    let mut b = vec![0.0; len];
    let ring1: Vec<usize> = (0..nt).map(|j| grid.index(1, j)).collect();
    let mut change = f64::INFINITY;
    for it in 1..=cfg.max_beltrami {
        let (ax, ay) = grid.gradient(&a);
        let (bx, by) = grid.gradient(&b);
        let sz = |k: usize| C::new(0.5 * (ax[k] + by[k]), 0.5 * (bx[k] - ay[k]));
        let mut p = vec![0.0; len];
        let mut q = vec![0.0; len];
        for k in 0..len {
            let fk = if k == 0 {
                let m0: C = ring1
                    .iter()
                    .map(|&i| {
                        let (x, y) = grid.xy(i);
                        mu[i] / C::new(x, y)
                    })
                    .sum::<C>()
                    / nt as f64;
                m0 + mu[0] * sz(0)
            } else {
                let (x, y) = grid.xy(k);
                mu[k] * (C::new(x, y).inv() + sz(k))
            };
            p[k] = 2.0 * fk.re;
            q[k] = 2.0 * fk.im;
        }
        let (px, py) = grid.gradient(&p);
        let (qx, qy) = grid.gradient(&q);
        let rhs_a: Vec<f64> = (0..len).map(|k| px[k] + qy[k]).collect();
        let a_new = grid.solve_dirichlet(&rhs_a, &zero);
        let (nax, nay) = grid.gradient(&a_new);
        let rhs_b: Vec<f64> = (0..len).map(|k| qx[k] - py[k]).collect();
        let flux: Vec<f64> = grid
            .boundary_range()
            .enumerate()
            .map(|(j, k)| {
                let (c, s) = grid.cos_sin(j);
                c * (q[k] - nay[k]) + s * (nax[k] - p[k])
            })
            .collect();
        let b_new = grid.solve_neumann(&rhs_b, &flux);
        change = a_new
            .iter()
            .zip(&a)
            .chain(b_new.iter().zip(&b))
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        if !change.is_finite() {
            return Err(Error::Numeric("Beltrami iteration diverged".into()));
        }
        a = a_new;
        b = b_new;
        if change < cfg.beltrami_tol {
            return Ok((a, b, it, change));
        }
    }
    if change < 1e-8 {
        return Ok((a, b, cfg.max_beltrami, change));
    }
    Err(Error::Convergence {
        message: format!("Beltrami iteration stalled at change {change:e}"),
        history: vec![change],
    })
}

/// For every grid node `w`, the point `z` with `ψ(z) = w`.
fn invert(grid: &std::sync::Arc<DiscGrid>, a: &[f64], b: &[f64]) -> Result<Vec<(f64, f64)>> {
    let len = grid.len();
    let mut pr = vec![0.0; len];
    let mut pi = vec![0.0; len];
    for k in 0..len {
        let (x, y) = grid.xy(k);
        let v = C::new(x, y) * C::new(a[k], b[k]).exp();
        pr[k] = v.re;
        pi[k] = v.im;
    }
    let (prx, pry) = grid.gradient(&pr);
    let (pix, piy) = grid.gradient(&pi);
    for k in 0..grid.interior_count() {
        let det = prx[k] * piy[k] - pry[k] * pix[k];
        if !(det > 0.0) {
            return Err(Error::Numeric(format!(
                "conformal map folds at node {k} (Jacobian {det:e})"
            )));
        }
    }
    let ip = [&pr, &pi, &prx, &pry, &pix, &piy].map(|v| grid.interpolator(v));
    let ib = grid.interpolator(b);
    let mut out = vec![(0.0, 0.0); len];
    for k in 1..grid.interior_count() {
        let (wx, wy) = grid.xy(k);
        let (mut x, mut y) = (wx, wy);
        let mut ok = false;
        for _ in 0..60 {
            let rx = ip[0].eval(x, y) - wx;
            let ry = ip[1].eval(x, y) - wy;
            if rx.hypot(ry) < 1e-13 {
                ok = true;
                break;
            }
            let j = Matrix2::new(ip[2].eval(x, y), ip[3].eval(x, y), ip[4].eval(x, y), ip[5].eval(x, y));
            let inv = j
                .try_inverse()
                .ok_or_else(|| Error::Numeric("singular Jacobian in inversion".into()))?;
            x -= inv[(0, 0)] * rx + inv[(0, 1)] * ry;
            y -= inv[(1, 0)] * rx + inv[(1, 1)] * ry;
            let r = x.hypot(y);
            if r > 1.0 {
                x /= r;
                y /= r;
            }
        }
        if !ok {
            return Err(Error::Convergence {
                message: format!("inversion of the conformal map failed at node {k}"),
                history: Vec::new(),
            });
        }
        out[k] = (x, y);
    }
    // on the rim ψ(e^{iθ}) = e^{i(θ + b(θ))}
    let h = 1e-6;
    for (j, k) in grid.boundary_range().enumerate() {
        let target = grid.theta(k);
        let mut th = target;
        let phase = |t: f64| t + ib.eval(t.cos(), t.sin());
        let mut ok = false;
        for _ in 0..60 {
            let r = phase(th) - target;
            if r.abs() < 1e-13 {
                ok = true;
                break;
            }
            let d = (phase(th + h) - phase(th - h)) / (2.0 * h);
            th -= r / d;
        }
        if !ok {
            return Err(Error::Convergence {
                message: format!("rim inversion failed at angle index {j}"),
                history: Vec::new(),
            });
        }
        out[k] = (th.cos(), th.sin());
    }
    Ok(out)
}

/// Normal directions of the plane `span(a, b)`, g-orthonormal.
fn normal_frame(g: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = g.nrows();
    let ip = |x: &DVector<f64>, y: &DVector<f64>| x.dot(&(g * y));
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for v in [a, b] {
        let mut w = v.clone();
        for c in &basis {
            w -= c * ip(c, &w);
        }
        let nw = ip(&w, &w).sqrt();
        basis.push(w / nw);
    }
    for e in 0..n {
        if basis.len() == n {
            break;
        }
        let mut w = DVector::zeros(n);
        w[e] = 1.0;
        for _ in 0..2 {
            for c in &basis {
                w -= c * ip(c, &w);
            }
        }
        let nw = ip(&w, &w).sqrt();
        if nw > 1e-6 {
            basis.push(w / nw);
        }
    }
    basis.split_off(2)
}

/// Harmonic map with the given rim values, by Newton–GMRES from `start`.
pub fn harmonic_dirichlet(
    chart: &Chart,
    start: &DiscMap,
    rim: &[Vec<f64>],
    cfg: &ConformalConfig,
) -> Result<(DiscMap, usize, f64)> {
    let grid = start.grid().clone();
    let n = start.dim();
    let m = grid.interior_count();
    let br = grid.boundary_range();
    let build = |v: &DVector<f64>| -> Result<DiscMap> {
        let comps = (0..n)
            .map(|i| {
                let mut c = vec![0.0; grid.len()];
                c[..m].copy_from_slice(&v.as_slice()[i * m..(i + 1) * m]);
                c[br.clone()].copy_from_slice(&rim[i]);
                c
            })
            .collect();
        DiscMap::new(grid.clone(), comps)
    };
    let resid = |u: &DiscMap| -> Result<DVector<f64>> {
        let r = harmonic_residual(chart, u)?;
        Ok(DVector::from_iterator(n * m, (0..n).flat_map(|i| (0..m).map(move |k| (i, k))).map(|(i, k)| r[k][i])))
    };
    let mut v = DVector::from_iterator(n * m, (0..n).flat_map(|i| start.component(i)[..m].to_vec()));
    let mut u = build(&v)?;
    let mut r = resid(&u)?;
    for it in 0..cfg.max_newton {
        let rn = r.amax();
        if rn < cfg.harmonic_tol {
            return Ok((u, it, rn));
        }
        let vnorm = v.norm();
        let apply = |d: &DVector<f64>| -> Result<DVector<f64>> {
            let dn = d.norm();
            if dn == 0.0 {
                return Ok(DVector::zeros(d.len()));
            }
            let eps = 1e-7 * (1.0 + vnorm) / dn;
            Ok((resid(&build(&(&v + d * eps))?)? - &r) / eps)
        };
        let precond = |d: &DVector<f64>| Ok(poisson_precond(&grid, d, n));
        let step = gmres(apply, precond, &(-&r), cfg.gmres_tol, cfg.gmres_restart, cfg.gmres_restart)?.solution;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..9 {
            let cand = &v + &step * lambda;
            if let Ok(uc) = build(&cand) {
                if let Ok(rc) = resid(&uc) {
                    if rc.amax() < rn {
                        v = cand;
                        u = uc;
                        r = rc;
                        accepted = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let rn = r.amax();
    if rn < cfg.harmonic_tol {
        return Ok((u, cfg.max_newton, rn));
    }
    Err(Error::Convergence {
        message: format!("harmonic polish stalled at residual {rn:e}"),
        history: vec![rn],
    })
}

/// Harmonic map close to `v0` whose rim values differ from those of `v0` by
/// constant and first-harmonic normal modes, fixed so that `v(0) = p` and the
/// tangent plane at the center stays `span(a, b)`.
fn polish_with_jet(
    chart: &Chart,
    v0: &DiscMap,
    p: &DVector<f64>,
    plane: (&DVector<f64>, &DVector<f64>),
    cfg: &ConformalConfig,
) -> Result<(DiscMap, usize, usize, f64)> {
    let grid = v0.grid().clone();
    let n = v0.dim();
    let g = chart.metric_at(p)?;
    let normals = normal_frame(&g, plane.0, plane.1);
    let base_rim: Vec<Vec<f64>> = (0..n).map(|i| grid.boundary_values(v0.component(i)).to_vec()).collect();
    let nt = grid.angular_nodes();
    let mut shift = DVector::zeros(n);
    let mut cos_c = vec![0.0; normals.len()];
    let mut sin_c = vec![0.0; normals.len()];
    let mut current = v0.clone();
    let mut newton_total = 0;
    for it in 0..=cfg.max_jet_iterations {
        let rim: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (0..nt)
                    .map(|j| {
                        let (c, s) = grid.cos_sin(j);
                        let mut v = base_rim[i][j] + shift[i];
                        for (l, nv) in normals.iter().enumerate() {
                            v += nv[i] * (cos_c[l] * c + sin_c[l] * s);
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        let (u, its, res) = harmonic_dirichlet(chart, &current, &rim, cfg)?;
        newton_total += its;
        current = u;
        let dp = current.center() - p;
        let (ux, uy) = (current.ux(0), current.uy(0));
        let cx: Vec<f64> = normals.iter().map(|nv| nv.dot(&(&g * &ux))).collect();
        let cy: Vec<f64> = normals.iter().map(|nv| nv.dot(&(&g * &uy))).collect();
        let err = dp
            .amax()
            .max(cx.iter().chain(&cy).fold(0.0f64, |m, v| m.max(v.abs())));
        if err < cfg.jet_tol {
            return Ok((current, newton_total, it, res));
        }
        if it == cfg.max_jet_iterations {
            return Err(Error::Convergence {
                message: format!("center/tangent constraint stalled at {err:e}"),
                history: vec![err],
            });
        }
        // rim constant e_i moves u(0) by e_i; rim ν cos θ moves u_x(0) by ν (flat harmonic extension)
        shift -= dp;
        for l in 0..normals.len() {
            cos_c[l] -= cx[l];
            sin_c[l] -= cy[l];
        }
    }
    unreachable!()
}

/// Conformally equivalent reparametrization of `u`, harmonic for the chart
/// metric, with the same center and tangent plane at the center.
pub fn conformal_reparametrize(chart: &Chart, u: &DiscMap, cfg: &ConformalConfig) -> Result<Reparametrized> {
    let grid = u.grid().clone();
    let defect_before = conformality_defect(chart, u)?;
    let mut report = ConformalReport {
        defect_before,
        ..Default::default()
    };
    if defect_before <= 1e-12 {
        report.defect_after = defect_before;
        return Ok(Reparametrized {
            map: u.clone(),
            report,
        });
    }
    let p = u.center();
    let (ux0, uy0) = (u.ux(0), u.uy(0));
    let forms = first_fundamental_form(chart, u)?;
    let (e0, f0, g0) = forms[0];
    let u1 = match linear_conformalizer(e0, f0, g0) {
        Some(l) => u.precompose(grid.clone(), |x, y| {
            (l[(0, 0)] * x + l[(0, 1)] * y, l[(1, 0)] * x + l[(1, 1)] * y)
        })?,
        None => u.clone(),
    };
    let mu = dilatation(&first_fundamental_form(chart, &u1)?);
    let (a, b, its, change) = solve_beltrami(&grid, &mu, cfg)?;
    report.beltrami_iterations = its;
    report.beltrami_change = change;
    let pre = invert(&grid, &a, &b)?;
    let its: Vec<_> = u1.components().iter().map(|c| grid.interpolator(c)).collect();
    let comps = its
        .iter()
        .enumerate()
        .map(|(i, it)| {
            (0..grid.len())
                .map(|k| if k == 0 { u1.component(i)[0] } else { it.eval(pre[k].0, pre[k].1) })
                .collect()
        })
        .collect();
    let v0 = DiscMap::new(grid.clone(), comps)?;
    let (v, newton, jet_its, res) = polish_with_jet(chart, &v0, &p, (&ux0, &uy0), cfg)?;
    report.newton_iterations = newton;
    report.jet_iterations = jet_its;
    report.harmonic_residual = res;
    report.defect_after = conformality_defect(chart, &v)?;
    report.no_progress = report.defect_after >= (1e-3f64).max(defect_before / 10.0);
    Ok(Reparametrized { map: v, report })
}
