//! Hölder exponent of discs landing on the sphere: a square-root landing and a smooth one.

use kobharm::disc::DiscGrid;
use kobharm::kobayashi::{holder_probe, DomainSpec};
use kobharm::scenario::landing_disc;

fn main() -> kobharm::Result<()> {
    let dom = DomainSpec::euclidean_ball(3, vec![0.0; 3], 1.0)?;
    let grid = DiscGrid::new(64, 256)?;
    for (name, sqrt) in [("square-root landing", true), ("smooth landing", false)] {
        let u = landing_disc(&dom, grid.clone(), sqrt)?;
        let r = holder_probe(&dom, &u, (-0.5, 0.5))?;
        println!("{name}: α = {:.4}, band [{:.4}, {:.4}]", r.alpha, r.band.0, r.band.1);
    }
    Ok(())
}
