//! Halton low-discrepancy sequence.

use std::f64::consts::PI;

use nalgebra::DVector;

const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

/// Radical inverse of `index` in `base`.
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// Points of `[0,1)^dim`, starting after `skip` leading points.
#[derive(Clone, Debug)]
pub struct Halton {
    dim: usize,
    next: u64,
}

impl Halton {
    pub fn new(dim: usize, skip: u64) -> Self {
        assert!(dim <= PRIMES.len(), "Halton dimension above {}", PRIMES.len());
        Self {
            dim,
            next: skip + 1,
        }
    }
}

impl Iterator for Halton {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let i = self.next;
        self.next += 1;
        Some((0..self.dim).map(|k| radical_inverse(i, PRIMES[k])).collect())
    }
}

/// Standard normal pair from two uniforms (Box–Muller).
pub fn gaussian_pair(u1: f64, u2: f64) -> (f64, f64) {
    let r = (-2.0 * (1.0 - u1).max(f64::MIN_POSITIVE).ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    (r * c, r * s)
}

/// Quasi-random Gaussian vectors in `ℝ^dim` (`dim ≤ 16`).
pub fn gaussian_vectors(dim: usize, count: usize, skip: u64) -> Vec<DVector<f64>> {
    let half = dim.div_ceil(2);
    Halton::new(2 * half, skip)
        .take(count)
        .map(|u| {
            let mut g = Vec::with_capacity(2 * half);
            for pair in u.chunks(2) {
                let (a, b) = gaussian_pair(pair[0], pair[1]);
                g.push(a);
                g.push(b);
            }
            DVector::from_column_slice(&g[..dim])
        })
        .collect()
}

/// Deterministic, roughly uniform unit vectors: equal angles for `dim = 2`, a
/// golden-angle spiral for `dim = 3`, normalized Halton–Gaussian vectors otherwise.
pub fn sphere_points(dim: usize, count: usize, skip: u64) -> Vec<DVector<f64>> {
    match dim {
        2 => (0..count)
            .map(|i| {
                let t = 2.0 * PI * (i as f64 + 0.5 * (skip % 2) as f64) / count as f64;
                DVector::from_vec(vec![t.cos(), t.sin()])
            })
            .collect(),
        3 => {
            let golden = PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let phi = (i as u64 + skip) as f64 * golden;
                    DVector::from_vec(vec![rho * phi.cos(), rho * phi.sin(), z])
                })
                .collect()
        }
        _ => gaussian_vectors(dim, count, skip)
            .into_iter()
            .map(|v| v.normalize())
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_two_prefix() {
        let v: Vec<f64> = (1..5).map(|i| radical_inverse(i, 2)).collect();
        assert_eq!(v, vec![0.5, 0.25, 0.75, 0.125]);
    }

    #[test]
    fn sphere_points_are_unit_and_balanced() {
        for dim in 2..=5 {
            let pts = sphere_points(dim, 500, 3);
            let mut mean = DVector::zeros(dim);
            for p in &pts {
                assert!((p.norm() - 1.0).abs() < 1e-12);
                mean += p;
            }
            assert!(mean.norm() / 500.0 < 0.05, "{dim}");
        }
    }

    #[test]
    fn mean_is_near_half() {
        let pts: Vec<Vec<f64>> = Halton::new(3, 0).take(4096).collect();
        for k in 0..3 {
            let m = pts.iter().map(|p| p[k]).sum::<f64>() / pts.len() as f64;
            assert!((m - 0.5).abs() < 2e-3);
        }
    }
}
