//! Discs through a point with a prescribed tangent plane.

use nalgebra::{DMatrix, DVector};

use crate::chart::Chart;
use crate::disc::{DiscMap, Jet1};
use crate::error::{Error, Result};

use super::graph::{solve_graph_disc, SolverConfig, SolverReport};

/// Tolerance on `u(0) = p` and on the angle between `du(0)` and the jet plane.
pub const JET_TOL: f64 = 1e-8;

/// Largest principal angle (radians) between `span(a1, a2)` and `span(b1, b2)` in the inner product `g`.
pub fn plane_angle(
    g: &DMatrix<f64>,
    a: (&DVector<f64>, &DVector<f64>),
    b: (&DVector<f64>, &DVector<f64>),
) -> Result<f64> {
    let ortho = |x: &DVector<f64>, y: &DVector<f64>| -> Result<(DVector<f64>, DVector<f64>)> {
        let nx = x.dot(&(g * x)).sqrt();
        if !(nx > 0.0) {
            return Err(Error::Argument("degenerate plane".into()));
        }
        let e1 = x / nx;
        let w = y - &e1 * e1.dot(&(g * y));
        let nw = w.dot(&(g * &w)).sqrt();
        if !(nw > 1e-14 * y.dot(&(g * y)).sqrt()) {
            return Err(Error::Argument("degenerate plane".into()));
        }
        Ok((e1, w / nw))
    };
    let (a1, a2) = ortho(a.0, a.1)?;
    let (b1, b2) = ortho(b.0, b.1)?;
    // sines of the principal angles are the singular values of the part of b orthogonal to a
    let resid = |x: &DVector<f64>| x - &a1 * a1.dot(&(g * x)) - &a2 * a2.dot(&(g * x));
    let (r1, r2) = (resid(&b1), resid(&b2));
    let gram = nalgebra::Matrix2::new(
        r1.dot(&(g * &r1)),
        r1.dot(&(g * &r2)),
        r2.dot(&(g * &r1)),
        r2.dot(&(g * &r2)),
    );
    let smax = gram.symmetric_eigenvalues().max().max(0.0).sqrt().min(1.0);
    Ok(smax.asin())
}

/// Center and largest principal angle between the plane of `du(0)` and the jet plane.
pub fn jet_mismatch(chart: &Chart, u: &DiscMap, jet: &Jet1) -> Result<(f64, f64)> {
    let center = u.center();
    let g = chart.metric_at(&jet.center)?;
    let dc = (&center - &jet.center).norm();
    let angle = plane_angle(&g, (&u.ux(0), &u.uy(0)), (&jet.v1, &jet.v2))?;
    Ok((dc, angle))
}

/// Disc through `jet.center` tangent to `span(jet.v1, jet.v2)`, parametrized as a graph.
pub fn match_jet(chart: &Chart, jet: &Jet1, cfg: &SolverConfig) -> Result<DiscMap> {
    match_jet_with_report(chart, jet, cfg).map(|(u, _)| u)
}

/// [`match_jet`] together with the solver report.
pub fn match_jet_with_report(
    chart: &Chart,
    jet: &Jet1,
    cfg: &SolverConfig,
) -> Result<(DiscMap, SolverReport)> {
    let gd = solve_graph_disc(chart, jet, cfg)?;
    let u = gd.to_disc_map()?;
    let (dc, angle) = jet_mismatch(chart, &u, jet)?;
    if dc > JET_TOL || angle > JET_TOL {
        return Err(Error::Convergence {
            message: format!("jet mismatch: center {dc:e}, plane angle {angle:e}"),
            history: gd.report.residual_history.clone(),
        });
    }
    Ok((u, gd.report))
}
