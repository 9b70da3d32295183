//! Integrated Kobayashi distance on the unit disc against the Poincaré distance.

use kobharm::kobayashi::{kobayashi_distance, DomainSpec, GraphConfig};
use nalgebra::DVector;

fn main() -> kobharm::Result<()> {
    let dom = DomainSpec::euclidean_ball(2, vec![0.0; 2], 1.0)?;
    let cfg = GraphConfig { spacing: 0.1, ..Default::default() };
    let o = DVector::zeros(2);
    for delta in [0.5, 0.1, 0.01, 0.001] {
        let q = DVector::from_vec(vec![1.0 - delta, 0.0]);
        let d = kobayashi_distance(&dom, &o, &q, &cfg)?;
        let exact = (1.0 - delta).atanh();
        println!("δ = {delta:<6} d_upper = {:.8}  arctanh(1−δ) = {exact:.8}  ({} nodes)", d.upper, d.nodes);
    }
    Ok(())
}
