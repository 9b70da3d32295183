//! Minimal plurisubharmonicity: pointwise pair traces, a lattice scan and a check along solved discs.

use std::sync::Arc;

use kobharm::chart::metrics::PerturbedEuclidean;
use kobharm::chart::Chart;
use kobharm::field::{NormSquared, Quadratic};
use kobharm::kobayashi::DomainSpec;
use kobharm::mpsh::{is_mpsh_at, mpsh_scan, verify_along_discs};
use kobharm::solver::{disc_family, FamilyConfig, SolverConfig};
use nalgebra::{DMatrix, DVector};

fn main() -> kobharm::Result<()> {
    let flat = Chart::euclidean(3, 2.0);
    let p = DVector::zeros(3);
    // Hessian diag(1, 1, −1): the two positive eigenvalues pair to 2 > 0, the smallest pair is 0
    let saddle = Quadratic::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0])), DVector::zeros(3), 0.0);
    println!("saddle min pair trace at 0: {:.6}", is_mpsh_at(&flat, &saddle, &p)?.min_pair_trace);

    let dom = DomainSpec::euclidean_ball(3, vec![0.0; 3], 1.0)?;
    let region = dom.interior_lattice(0.2)?;
    let rep = mpsh_scan(&flat, &NormSquared::centered(3), &region)?;
    println!("|x|² on the unit ball: {} over {} samples", rep.verdict, region.len());

    let chart = Chart::new(vec![(-1.5, 1.5); 3], Arc::new(PerturbedEuclidean::new(3, 0.05, vec![0.0; 3], 1.0)))?;
    let cfg = FamilyConfig { solver: SolverConfig::default().with_resolution(16, 32), ..Default::default() };
    let fam = disc_family(&chart, &p, 6, &cfg)?;
    let maps: Vec<_> = fam.members.iter().map(|m| m.map.clone()).collect();
    let v = verify_along_discs(&chart, &NormSquared::centered(3), &maps)?;
    println!(
        "perturbed metric: {} discs solved, subharmonic along all: {}, swept min pair trace {:.4}",
        fam.summary.solved, v.all_pass, v.swept_min_pair_trace
    );
    Ok(())
}
