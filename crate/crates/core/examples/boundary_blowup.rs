//! Blow-up of the metric towards the sphere: tangential rate |ρ|^{-1/2}, normal rate |ρ|^{-1}.

use kobharm::kobayashi::{approach_path, boundary_scan, DomainSpec, UpperConfig, XiMode};
use nalgebra::DVector;

fn main() -> kobharm::Result<()> {
    let dom = DomainSpec::euclidean_ball(3, vec![0.0; 3], 1.0)?;
    let base = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    let deltas: Vec<f64> = (0..7).map(|k| 10f64.powf(-1.0 - 0.5 * k as f64)).collect();
    let path = approach_path(&dom, &base, &deltas)?;
    for mode in [XiMode::Tangential, XiMode::Normal] {
        let r = boundary_scan(&dom, &base, &path, mode, &UpperConfig::default(), None)?;
        println!("{mode:?}: slope {:.4}", r.slope_upper);
        if let Some(n) = r.note {
            println!("  {n}");
        }
    }
    Ok(())
}
