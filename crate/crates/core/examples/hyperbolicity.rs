//! Distance growth and disc constants near a boundary point of the unit ball.

use kobharm::kobayashi::{hyperbolicity_diagnostics, DomainSpec, HyperbolicityConfig};
use nalgebra::DVector;

fn main() -> kobharm::Result<()> {
    let dom = DomainSpec::euclidean_ball(3, vec![0.0; 3], 1.0)?;
    let r = hyperbolicity_diagnostics(
        &dom,
        &DVector::zeros(3),
        &DVector::from_vec(vec![1.0, 0.0, 0.0]),
        &[1e-1, 1e-2, 1e-3],
        &HyperbolicityConfig::default(),
    )?;
    for row in &r.rows {
        println!("δ = {:<6} d_upper = {:.5}", row.delta, row.distance_upper);
        for d in &row.discs {
            println!(
                "  tilt {:>4}°: C_half {:.4}  C_schwarz {:.4}  A_lap {:.2e}  C_grad {:.4} ≤ {:.4}",
                d.tilt_deg, d.c_half, d.c_schwarz, d.a_lap, d.c_grad, d.grad_bound
            );
        }
    }
    println!("stability ratios {:?}", r.stability);
    println!("{}", r.divergence);
    Ok(())
}
