//! Upper and lower bounds of the Kobayashi–Royden metric on the unit ball, with the constants ledger.

use kobharm::kobayashi::{localize, metric_estimate, BarrierConfig, DomainSpec, UpperConfig};
use nalgebra::DVector;

fn main() -> kobharm::Result<()> {
    let dom = DomainSpec::euclidean_ball(3, vec![0.0; 3], 1.0)?;
    let bcfg = BarrierConfig::default();
    let loc = localize(&dom, &bcfg)?;
    println!("ε = {}, κ = {}, A = {:.4}, N = r = {:.4e}", loc.epsilon, loc.kappa, loc.a, loc.n);
    let ucfg = UpperConfig::default();
    for x in [0.0, 0.5, 0.9] {
        let w = DVector::from_vec(vec![x, 0.0, 0.0]);
        for (name, xi) in [("normal", [1.0, 0.0, 0.0]), ("tangent", [0.0, 1.0, 0.0])] {
            let est = metric_estimate(&dom, &w, &DVector::from_row_slice(&xi), &ucfg, Some((&loc, &bcfg)))?;
            println!("w = {x:.1} e1, {name:7}: {:.6e} ≤ F ≤ {:.6}", est.lower, est.upper);
        }
    }
    Ok(())
}
