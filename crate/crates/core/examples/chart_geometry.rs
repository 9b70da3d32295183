//! Metrics, Christoffel symbols and geodesics in a constant-curvature chart.

use std::sync::Arc;

use kobharm::chart::geodesic::{exp_map, geodesic_distance};
use kobharm::chart::metrics::ConstantCurvature;
use kobharm::chart::Chart;
use nalgebra::DVector;

fn main() -> kobharm::Result<()> {
    for k in [1.0, -1.0] {
        let chart = Chart::new(vec![(-0.9, 0.9); 3], Arc::new(ConstantCurvature { dim: 3, curvature: k }))?;
        let o = DVector::zeros(3);
        let x = DVector::from_vec(vec![0.3, 0.0, 0.0]);
        let g = chart.metric_at(&x)?;
        let gamma = chart.christoffel_at(&x)?;
        let d = geodesic_distance(&chart, &o, &x)?;
        // the stereographic radius s corresponds to geodesic length 2·atan(s) (K = 1) or 2·atanh(s) (K = −1)
        let exact = if k > 0.0 { 2.0 * 0.3f64.atan() } else { 2.0 * 0.3f64.atanh() };
        println!("K = {k:+}: g_11(x) = {:.6}, max |Γ| = {:.6}", g[(0, 0)], gamma.max_abs());
        println!("  d(0, x) = {d:.10} (closed form {exact:.10})");
        let v = DVector::from_vec(vec![0.0, 0.5, 0.0]);
        println!("  exp_0(0.5 e2) = {:?}", exp_map(&chart, &o, &v)?.as_slice());
    }
    Ok(())
}
