//! Stationary disc through a prescribed 1-jet in a perturbed metric, then conformal reparametrization.

use std::sync::Arc;

use kobharm::chart::metrics::PerturbedEuclidean;
use kobharm::chart::Chart;
use kobharm::disc::{conformality_defect, harmonic_residual_sup, Jet1};
use kobharm::solver::{conformal_reparametrize, match_jet_with_report, ConformalConfig, SolverConfig};
use nalgebra::DVector;

fn main() -> kobharm::Result<()> {
    let chart = Chart::new(vec![(-1.5, 1.5); 3], Arc::new(PerturbedEuclidean::new(3, 0.05, vec![0.0; 3], 1.0)))?;
    let e = |i: usize| {
        let mut v = DVector::zeros(3);
        v[i] = 1.0;
        v
    };
    let jet = Jet1::from_plane(&chart, DVector::zeros(3), &e(0), &e(1), 1.0)?;
    let cfg = SolverConfig::default().with_resolution(32, 64);
    let (u, report) = match_jet_with_report(&chart, &jet, &cfg)?;
    println!(
        "graph solver: t = {}, {} Newton steps, residual {:.3e}",
        report.t_used, report.newton_iterations, report.final_residual
    );
    println!("conformality defect before: {:.3e}", conformality_defect(&chart, &u)?);
    let r = conformal_reparametrize(&chart, &u, &ConformalConfig::default())?;
    println!("conformality defect after:  {:.3e}", conformality_defect(&chart, &r.map)?);
    println!("harmonic residual sup:      {:.3e}", harmonic_residual_sup(&chart, &r.map)?);
    println!("center {:?}", r.map.center().as_slice());
    Ok(())
}
