//! Logarithmic potentials on the unit disc and the Poincaré radius.

use std::f64::consts::PI;

use serde::Serialize;

use super::grid::DiscGrid;
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct LogPotential {
    /// `(1/2π) ∫_𝔻 ln|ζ − ω| Δu¹(ω) dm(ω)` at every node.
    pub potential: Vec<f64>,
    /// `u¹ − potential − A|u¹(0)|`.
    pub h: Vec<f64>,
    pub a_bound: f64,
}

/// Splits `u1` into its logarithmic potential and the harmonic remainder `h`.
///
/// The potential solves `Δw = Δu¹` inside the disc with boundary values given
/// by quadrature of the logarithmic kernel; on the unit circle the kernel
/// integrates to zero against constants, which removes the singular cell:
/// `P(ζ) = (1/2π) Σ_ω w_ω (Δu¹(ω) − Δu¹(ζ)) ln|ζ − ω|`.
pub fn log_potential_decompose(grid: &DiscGrid, u1: &[f64], a_bound: f64) -> Result<LogPotential> {
    if u1.len() != grid.len() {
        return Err(Error::Argument(format!(
            "field has {} values, grid has {} nodes",
            u1.len(),
            grid.len()
        )));
    }
    let mut lap = grid.laplacian(u1);
    let p = grid.partials(u1);
    for k in grid.boundary_range() {
        lap[k] = p.xx[k] + p.yy[k];
    }
    let xy: Vec<(f64, f64)> = (0..grid.len()).map(|k| grid.xy(k)).collect();
    let weights = grid.weights();
    let boundary: Vec<f64> = grid
        .boundary_range()
        .map(|b| {
            let (zx, zy) = xy[b];
            let fb = lap[b];
            let mut s = 0.0;
            for (k, &(wx, wy)) in xy.iter().enumerate() {
                if k == b {
                    continue;
                }
                let d = (zx - wx).hypot(zy - wy);
                s += weights[k] * (lap[k] - fb) * d.ln();
            }
            s / (2.0 * PI)
        })
        .collect();
    let potential = grid.solve_dirichlet(&lap, &boundary);
    let shift = a_bound * u1[0].abs();
    let h = u1
        .iter()
        .zip(&potential)
        .map(|(u, w)| u - w - shift)
        .collect();
    Ok(LogPotential {
        potential,
        h,
        a_bound,
    })
}

/// Radius `r` of the disc `r𝔻` whose Poincaré radius in `𝔻` is `n`: `r = tanh(n)`.
pub fn poincare_radius(n: f64) -> Result<f64> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Argument(format!("Poincaré radius needs N > 0, got {n}")));
    }
    Ok(n.tanh())
}
