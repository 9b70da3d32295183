//! Families of conformal stationary discs through a point, one per tangent plane.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::chart::geodesic::orthonormal_basis;
use crate::chart::Chart;
use crate::disc::{harmonic_residual_sup, DiscMap, Jet1};
use crate::error::{Error, Result};
use crate::numerics::{gaussian_vectors, Halton};

use super::conformal::{conformal_reparametrize, ConformalConfig, ConformalReport};
use super::graph::{SolverConfig, SolverReport};
use super::jet::{match_jet_with_report, plane_angle};

/// Number of probe planes used to estimate the covering gap.
const GAP_PROBES: usize = 2000;

#[derive(Clone, Debug, Default)]
pub struct FamilyConfig {
    pub solver: SolverConfig,
    pub conformal: ConformalConfig,
    /// Offset into the quasi-random plane sequence.
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct FamilyMember {
    /// g-orthonormal basis of the tangent plane at the center.
    pub plane: (DVector<f64>, DVector<f64>),
    pub map: DiscMap,
    pub solver: SolverReport,
    pub conformal: ConformalReport,
    pub harmonic_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilySummary {
    pub requested: usize,
    pub solved: usize,
    pub failures: Vec<(usize, String)>,
    pub max_gap_deg: f64,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct DiscFamily {
    pub members: Vec<FamilyMember>,
    pub summary: FamilySummary,
}

/// Euclidean-orthonormal frames of quasi-random planes in `ℝ^n`.
fn euclidean_planes(n: usize, count: usize, seed: u64) -> Vec<(DVector<f64>, DVector<f64>)> {
    match n {
        2 => vec![(DVector::from_vec(vec![1.0, 0.0]), DVector::from_vec(vec![0.0, 1.0]))],
        3 => {
            // golden-angle spiral of normals on the upper hemisphere
            let golden = PI * (3.0 - 5f64.sqrt());
            let offset = seed as f64 * golden;
            (0..count)
                .map(|i| {
                    let z = 1.0 - (i as f64 + 0.5) / count as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let phi = i as f64 * golden + offset;
                    let nrm = DVector::from_vec(vec![rho * phi.cos(), rho * phi.sin(), z]);
                    plane_from_normal(&nrm)
                })
                .collect()
        }
        _ => gaussian_vectors(2 * n, count, seed)
            .into_iter()
            .map(|g| {
                let a = DVector::from_column_slice(&g.as_slice()[..n]).normalize();
                let b = DVector::from_column_slice(&g.as_slice()[n..]);
                let b = (&b - &a * a.dot(&b)).normalize();
                (a, b)
            })
            .collect(),
    }
}

fn plane_from_normal(nrm: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    let helper = if nrm[0].abs() < 0.9 {
        DVector::from_vec(vec![1.0, 0.0, 0.0])
    } else {
        DVector::from_vec(vec![0.0, 1.0, 0.0])
    };
    let a = (&helper - nrm * nrm.dot(&helper)).normalize();
    let b = nrm.cross(&a);
    (a, b)
}

/// Quasi-random tangent planes at `p`, as g(p)-orthonormal frames.
pub fn sample_planes(chart: &Chart, p: &DVector<f64>, count: usize, seed: u64) -> Result<Vec<(DVector<f64>, DVector<f64>)>> {
    if count == 0 {
        return Err(Error::Argument("disc family needs at least one plane".into()));
    }
    let g = chart.metric_at(p)?;
    let b = orthonormal_basis(&g)?;
    Ok(euclidean_planes(chart.dim(), count, seed)
        .into_iter()
        .map(|(x, y)| (&b * x, &b * y))
        .collect())
}

/// Largest angle (degrees) from a probe plane to the nearest plane of `planes`.
pub fn max_plane_gap(g: &DMatrix<f64>, planes: &[(DVector<f64>, DVector<f64>)]) -> Result<f64> {
    let n = g.nrows();
    if n == 2 {
        return Ok(0.0);
    }
    let b = orthonormal_basis(g)?;
    let probes = if n == 3 {
        // normals from a Halton sequence on the sphere
        Halton::new(2, 7919)
            .take(GAP_PROBES)
            .map(|u| {
                let z = 2.0 * u[0] - 1.0;
                let rho = (1.0 - z * z).sqrt();
                let phi = 2.0 * PI * u[1];
                plane_from_normal(&DVector::from_vec(vec![rho * phi.cos(), rho * phi.sin(), z]))
            })
            .collect()
    } else {
        euclidean_planes(n, GAP_PROBES, 7919)
    };
    let mut worst: f64 = 0.0;
    for (x, y) in probes {
        let (x, y) = (&b * x, &b * y);
        let mut best = f64::INFINITY;
        for (a1, a2) in planes {
            best = best.min(plane_angle(g, (a1, a2), (&x, &y))?);
        }
        worst = worst.max(best);
    }
    Ok(worst.to_degrees())
}

/// Jet-matched, conformally reparametrized stationary discs through `p`, one per sampled plane.
/// Planes whose solve fails are recorded in the summary and skipped.
pub fn disc_family(chart: &Chart, p: &DVector<f64>, count: usize, cfg: &FamilyConfig) -> Result<DiscFamily> {
    let planes = sample_planes(chart, p, count, cfg.seed)?;
    let g = chart.metric_at(p)?;
    let mut members = Vec::new();
    let mut failures = Vec::new();
    for (i, (a, b)) in planes.iter().enumerate() {
        let solved = (|| -> Result<FamilyMember> {
            let jet = Jet1::new(chart, p.clone(), a.clone(), b.clone())?;
            let (u, solver) = match_jet_with_report(chart, &jet, &cfg.solver)?;
            let out = conformal_reparametrize(chart, &u, &cfg.conformal)?;
            let harmonic_residual = harmonic_residual_sup(chart, &out.map)?;
            Ok(FamilyMember {
                plane: (a.clone(), b.clone()),
                map: out.map,
                solver,
                conformal: out.report,
                harmonic_residual,
            })
        })();
        match solved {
            Ok(m) => members.push(m),
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    if members.is_empty() {
        return Err(Error::Convergence {
            message: format!("no disc of the family converged ({} failures)", failures.len()),
            history: Vec::new(),
        });
    }
    let solved_planes: Vec<_> = members.iter().map(|m| m.plane.clone()).collect();
    let max_gap_deg = max_plane_gap(&g, &solved_planes)?;
    Ok(DiscFamily {
        summary: FamilySummary {
            requested: planes.len(),
            solved: members.len(),
            failures,
            max_gap_deg,
            seed: cfg.seed,
        },
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::metrics::PerturbedEuclidean;
    use crate::disc::conformality_defect;
    use std::sync::Arc;

    #[test]
    fn sampled_planes_are_orthonormal_and_cover() {
        let chart = Chart::new(
            vec![(-1.5, 1.5); 3],
            Arc::new(PerturbedEuclidean::new(3, 0.05, vec![0.0; 3], 1.0)),
        )
        .unwrap();
        let p = DVector::from_vec(vec![0.2, 0.1, 0.0]);
        let g = chart.metric_at(&p).unwrap();
        let planes = sample_planes(&chart, &p, 64, 0).unwrap();
        for (a, b) in &planes {
            assert!((a.dot(&(&g * a)) - 1.0).abs() < 1e-12);
            assert!((b.dot(&(&g * b)) - 1.0).abs() < 1e-12);
            assert!(a.dot(&(&g * b)).abs() < 1e-12);
        }
        let gap = max_plane_gap(&g, &planes).unwrap();
        assert!(gap < 25.0, "{gap}");
        assert!(gap > 5.0);
        let e = Chart::euclidean(4, 1.0);
        let p4 = DVector::zeros(4);
        let g4 = e.metric_at(&p4).unwrap();
        let few = max_plane_gap(&g4, &sample_planes(&e, &p4, 8, 0).unwrap()).unwrap();
        let many = max_plane_gap(&g4, &sample_planes(&e, &p4, 200, 0).unwrap()).unwrap();
        assert!(many < few);
        assert!(matches!(sample_planes(&e, &p4, 0, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn small_family_in_perturbed_ball() {
        let chart = Chart::new(
            vec![(-1.5, 1.5); 3],
            Arc::new(PerturbedEuclidean::new(3, 0.05, vec![0.0; 3], 1.0)),
        )
        .unwrap();
        let cfg = FamilyConfig {
            solver: SolverConfig::default().with_resolution(16, 32),
            ..Default::default()
        };
        let p = DVector::from_vec(vec![0.1, 0.0, -0.1]);
        let fam = disc_family(&chart, &p, 6, &cfg).unwrap();
        assert_eq!(fam.summary.solved, 6);
        for m in &fam.members {
            assert!(m.harmonic_residual < cfg.solver.newton_tol);
            assert!((m.map.center() - &p).norm() < 1e-8);
            assert!(conformality_defect(&chart, &m.map).unwrap() < 1e-2);
        }
    }
}
