//! Grid calculus on the unit disc: Laplacian of ρ∘u, energy and conformality of an affine disc.

use std::sync::Arc;

use kobharm::chart::metrics::PerturbedEuclidean;
use kobharm::chart::Chart;
use kobharm::disc::{area, conformality_defect, energy, laplacian_of_composition, DiscGrid, DiscMap, Jet1};
use kobharm::field::NormSquared;
use nalgebra::DVector;

fn main() -> kobharm::Result<()> {
    let grid = DiscGrid::new(32, 64)?;
    let flat = Chart::euclidean(3, 2.0);
    let jet = Jet1::new(
        &flat,
        DVector::zeros(3),
        DVector::from_vec(vec![0.5, 0.0, 0.0]),
        DVector::from_vec(vec![0.0, 0.5, 0.0]),
    )?;
    let u = DiscMap::affine(grid.clone(), &jet)?;
    let rho = NormSquared::centered(3);
    // Δ|u|² = 4·|du e₁|² for a conformal affine disc of radius 1/2
    println!("Δ(ρ∘u)(0) = {:.12} (expected 1)", laplacian_of_composition(&flat, &rho, &u, 0, 1e-8)?);
    println!("energy = {:.10}, area = {:.10}, π/4 = {:.10}", energy(&flat, &u)?, area(&flat, &u)?, std::f64::consts::FRAC_PI_4);

    let curved = Chart::new(vec![(-1.5, 1.5); 3], Arc::new(PerturbedEuclidean::new(3, 0.05, vec![0.0; 3], 1.0)))?;
    println!("conformality defect of the same disc under a perturbed metric: {:.3e}", conformality_defect(&curved, &u)?);
    Ok(())
}
