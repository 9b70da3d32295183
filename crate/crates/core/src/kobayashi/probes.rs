//! Falsification probes: Kobayashi-ball containment, boundary blow-up scans,
//! Hölder regularity of boundary-landing discs and the negative-harmonic
//! gradient bound.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::disc::{DiscGrid, DiscMap};
use crate::error::{Error, Result};

use super::barrier::{BarrierConfig, Localization};
use super::distance::{build_path_graph, GraphConfig};
use super::domain::DomainSpec;
use super::lower::royden_lower;
use super::upper::{royden_upper, UpperConfig};

#[derive(Clone, Debug, Serialize)]
pub struct BallViolation {
    pub point: Vec<f64>,
    pub distance_upper: f64,
    pub coordinate_distance: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct BallProbeReport {
    pub q: Vec<f64>,
    pub delta: f64,
    pub n: f64,
    /// Coordinate radius `δ/N` the ball must fit in.
    pub radius: f64,
    pub samples: usize,
    /// Samples with graph distance `< δ` from `q`.
    pub inside: usize,
    /// Largest `|x − x(q)| / (δ/N)` among those samples.
    pub max_ratio: f64,
    /// Smallest graph distance from `q` to a sample outside the coordinate ball.
    pub outside_min_distance: f64,
    pub violations: Vec<BallViolation>,
    /// Samples with `d_upper(q, x) < N·min(1, |x − q|)`.
    pub lower_violations: Vec<BallViolation>,
    pub verdict: String,
}

/// Checks `{d(q, ·) < δ} ⊂ {|x − x(q)| < δ/N}` on the sample graph around `q`.
///
/// The graph distance is an upper bound for the Kobayashi distance, so any
/// sample inside the graph ball lies inside the true ball and a violation
/// contradicts the containment; it means the upper-bound graph is wrong.
pub fn kobayashi_ball_probe(dom: &DomainSpec, q: &DVector<f64>, delta: f64, loc: &Localization, cfg: &GraphConfig) -> Result<BallProbeReport> {
    let n = loc.n;
    if !(delta > 0.0) || delta > n {
        return Err(Error::Precondition(format!("ball probe needs 0 < δ ≤ N = {n:e}, got {delta:e}")));
    }
    if (q - &dom.origin).norm() >= 1.0 {
        return Err(Error::Precondition(format!(
            "q = {:?} must satisfy |x(q)| < 1 in the localization coordinates",
            q.as_slice()
        )));
    }
    let g = build_path_graph(dom, std::slice::from_ref(q), cfg)?;
    let t = g.terminals[0];
    let dist = g.distances_from(t);
    let radius = delta / n;
    let mut inside = 0;
    let mut max_ratio: f64 = 0.0;
    let mut outside_min = f64::INFINITY;
    let mut violations = Vec::new();
    let mut lower_violations = Vec::new();
    for (k, x) in g.nodes.iter().enumerate() {
        let d = dist[k];
        let c = (x - q).norm();
        let record = || BallViolation {
            point: x.as_slice().to_vec(),
            distance_upper: d,
            coordinate_distance: c,
        };
        if d < delta {
            inside += 1;
            max_ratio = max_ratio.max(c / radius);
            if c >= radius {
                violations.push(record());
            }
        } else if c >= radius {
            outside_min = outside_min.min(d);
        }
        if d.is_finite() && d < n * c.min(1.0) {
            lower_violations.push(record());
        }
    }
    let verdict = if violations.is_empty() && lower_violations.is_empty() {
        "contained".to_string()
    } else {
        format!(
            "{} containment and {} lower-estimate violations: the upper-bound graph is wrong",
            violations.len(),
            lower_violations.len()
        )
    };
    Ok(BallProbeReport {
        q: q.as_slice().to_vec(),
        delta,
        n,
        radius,
        samples: g.nodes.len(),
        inside,
        max_ratio,
        outside_min_distance: outside_min,
        violations,
        lower_violations,
        verdict,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XiMode {
    Tangential,
    Normal,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanRow {
    pub point: Vec<f64>,
    pub rho: f64,
    pub xi: Vec<f64>,
    pub upper: f64,
    pub lower: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundaryScanReport {
    pub mode: XiMode,
    pub rows: Vec<ScanRow>,
    /// Least-squares slope of `log upper` against `log |ρ|`.
    pub slope_upper: f64,
    pub intercept_upper: f64,
    pub slope_lower: Option<f64>,
    pub lower_below_upper: bool,
    pub note: Option<String>,
}

/// Unit outward coordinate normal `∇ρ/|∇ρ|` at `p`.
pub fn outward_normal(dom: &DomainSpec, p: &DVector<f64>) -> Result<DVector<f64>> {
    let g = dom.rho.gradient(p)?;
    let n = g.norm();
    if !(n > 0.0) {
        return Err(Error::domain(p.as_slice(), "dρ vanishes"));
    }
    Ok(g / n)
}

/// Unit coordinate vector orthogonal to `nu`, built from the axis least aligned with it.
pub fn tangent_to(nu: &DVector<f64>) -> DVector<f64> {
    let k = (0..nu.len())
        .min_by(|&a, &b| nu[a].abs().total_cmp(&nu[b].abs()))
        .unwrap_or(0);
    let mut e = DVector::zeros(nu.len());
    e[k] = 1.0;
    let t = &e - nu * nu.dot(&e);
    let n = t.norm();
    t / n
}

/// Points `base − t ν` on the inward normal at the boundary point `base` with `ρ = −δ` for each `δ`.
pub fn approach_path(dom: &DomainSpec, base: &DVector<f64>, deltas: &[f64]) -> Result<Vec<DVector<f64>>> {
    let nu = outward_normal(dom, base)?;
    let target = dom.origin.clone();
    deltas
        .iter()
        .map(|&d| {
            if !(d > 0.0) {
                return Err(Error::Argument(format!("δ must be positive, got {d}")));
            }
            point_at_depth(dom, base, &(base - &nu), d, &target)
        })
        .collect()
}

/// Point on the segment from `boundary` to `inner` with `ρ = −δ`, by bisection.
fn point_at_depth(dom: &DomainSpec, boundary: &DVector<f64>, inner: &DVector<f64>, delta: f64, fallback: &DVector<f64>) -> Result<DVector<f64>> {
    let f = |t: f64| -> Result<f64> { Ok(dom.rho_at(&(boundary + (inner - boundary) * t))? + delta) };
    let mut hi = 1.0;
    let mut end = inner.clone();
    if f(hi)? > 0.0 {
        // the normal segment does not reach depth δ; aim at the fallback instead
        end = fallback.clone();
        if dom.rho_at(&end)? + delta > 0.0 {
            return Err(Error::Argument(format!("no point at depth δ = {delta:e}")));
        }
        hi = 1.0;
    }
    let seg = |t: f64| boundary + (&end - boundary) * t;
    let g = |t: f64| -> Result<f64> { Ok(dom.rho_at(&seg(t))? + delta) };
    let mut lo = 0.0;
    if g(lo)? < 0.0 {
        return Err(Error::Argument("start point is already deeper than δ".into()));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-17 {
            break;
        }
    }
    Ok(seg(hi))
}

/// Least-squares fit `y = a + b x`; returns `(b, a, standard error of b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let se = if x.len() > 2 {
        let rss: f64 = x.iter().zip(y).map(|(p, q)| (q - a - b * p).powi(2)).sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    (b, a, se)
}

/// Upper (and optionally lower) bounds along a path approaching `base` with `ξ` tangential or normal to `∂Ω` there.
pub fn boundary_scan(
    dom: &DomainSpec,
    base: &DVector<f64>,
    path: &[DVector<f64>],
    mode: XiMode,
    upper_cfg: &UpperConfig,
    lower: Option<(&Localization, &BarrierConfig)>,
) -> Result<BoundaryScanReport> {
    if path.len() < 3 {
        return Err(Error::Argument("boundary scan needs at least 3 points".into()));
    }
    let rhos = path.iter().map(|p| dom.rho_at(p)).collect::<Result<Vec<_>>>()?;
    if rhos.iter().any(|r| !(*r < 0.0)) {
        return Err(Error::Argument("every scan point must lie in Ω".into()));
    }
    let increasing = rhos.windows(2).all(|w| w[1].abs() > w[0].abs());
    let decreasing = rhos.windows(2).all(|w| w[1].abs() < w[0].abs());
    if !(increasing || decreasing) {
        return Err(Error::Argument("|ρ| must be strictly monotone along the scan path".into()));
    }
    let (lo, hi) = rhos.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r.abs()), b.max(r.abs())));
    if hi < 1e3 * lo * (1.0 - 1e-9) {
        return Err(Error::Precondition(format!("|ρ| must span at least 3 decades along the path (got {lo:e}..{hi:e})")));
    }
    let nu = outward_normal(dom, base)?;
    let xi = match mode {
        XiMode::Normal => nu.clone(),
        XiMode::Tangential => tangent_to(&nu),
    };
    let mut rows = Vec::with_capacity(path.len());
    for (p, &rho) in path.iter().zip(&rhos) {
        let up = royden_upper(dom, p, &xi, upper_cfg)?;
        let lo = match lower {
            Some((loc, bcfg)) => match royden_lower(dom, p, &xi, loc, bcfg) {
                Ok(l) => Some(l.value),
                Err(e) if e.is_finding() => return Err(e),
                Err(_) => None,
            },
            None => None,
        };
        rows.push(ScanRow {
            point: p.as_slice().to_vec(),
            rho,
            xi: xi.as_slice().to_vec(),
            upper: up.value,
            lower: lo,
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.rho.abs().ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.upper.ln()).collect();
    let (slope_upper, intercept_upper, _) = linear_fit(&lx, &ly);
    let with_lower: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.lower.filter(|v| *v > 0.0).map(|v| (r.rho.abs().ln(), v.ln())))
        .collect();
    let slope_lower = (with_lower.len() >= 2).then(|| {
        let (x, y): (Vec<f64>, Vec<f64>) = with_lower.into_iter().unzip();
        linear_fit(&x, &y).0
    });
    let lower_below_upper = rows.iter().all(|r| r.lower.is_none_or(|l| l <= r.upper));
    let note = (mode == XiMode::Normal && slope_upper < -0.75)
        .then(|| "lower bound not tight in normal direction".to_string());
    Ok(BoundaryScanReport {
        mode,
        rows,
        slope_upper,
        intercept_upper,
        slope_lower,
        lower_below_upper,
        note,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderReport {
    pub alpha: f64,
    /// `α ± 2·se`.
    pub band: (f64, f64),
    /// `(d, ω(d))`: largest node displacement over pairs at distance `≤ d`.
    pub scales: Vec<(f64, f64)>,
    pub boundary_rho: f64,
    /// `α < 0.45` on a domain with certified strictness.
    pub finding: bool,
    pub note: Option<String>,
}

/// Tolerance on `|ρ ∘ u|` along the arc for the disc to count as landing on `∂Ω`.
pub const LANDING_TOLERANCE: f64 = 1e-8;

/// Modulus-of-continuity fit of `u` near the boundary arc `θ ∈ [arc.0, arc.1]`.
pub fn holder_probe(dom: &DomainSpec, u: &DiscMap, arc: (f64, f64)) -> Result<HolderReport> {
    let grid = u.grid();
    let (nr, nt) = (grid.radial_nodes(), grid.angular_nodes());
    let h = grid.spacing();
    if u.dim() != dom.dim() {
        return Err(Error::Argument("disc and domain dimensions differ".into()));
    }
    if !(arc.1 > arc.0) {
        return Err(Error::Argument("arc must have positive length".into()));
    }
    let in_arc = |j: usize| {
        let t = 2.0 * PI * j as f64 / nt as f64;
        let t = arc.0 + (t - arc.0).rem_euclid(2.0 * PI);
        t <= arc.1
    };
    let arc_nodes: Vec<usize> = (0..nt).filter(|&j| in_arc(j)).collect();
    if arc_nodes.is_empty() {
        return Err(Error::Argument("arc contains no boundary nodes".into()));
    }
    let mut boundary_rho: f64 = 0.0;
    for &j in &arc_nodes {
        boundary_rho = boundary_rho.max(dom.rho_at(&u.point(grid.index(nr, j)))?.abs());
    }
    if boundary_rho > LANDING_TOLERANCE {
        return Err(Error::Precondition(format!(
            "disc does not land on ∂Ω along the arc (max |ρ∘u| = {boundary_rho:e})"
        )));
    }
    // (distance in 𝔻, displacement) for tangential and radial node pairs
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    let max_m = (nr / 2).max(1);
    for &j in &arc_nodes {
        let b = u.point(grid.index(nr, j));
        let mut m = 1;
        while m <= max_m {
            let s = 2.0 * (PI * m as f64 / nt as f64).sin();
            for jj in [j + m, j + nt - m] {
                pairs.push((s, (&b - u.point(grid.index(nr, jj))).norm()));
            }
            let ring = nr - m;
            let other = if ring == 0 { u.point(0) } else { u.point(grid.index(ring, j)) };
            pairs.push((m as f64 * h, (&b - other).norm()));
            m += 1;
        }
    }
    // smallest scale resolved by both pair families
    let mut scales = Vec::new();
    let mut d = h.max(2.0 * (PI / nt as f64).sin());
    while d <= 0.25 + 1e-12 {
        let w = pairs
            .iter()
            .filter(|(s, _)| *s <= d * (1.0 + 1e-9))
            .fold(0.0f64, |m, (_, v)| m.max(*v));
        scales.push((d, w));
        d *= 2.0;
    }
    if scales.len() < 3 || scales.iter().any(|(_, w)| !(*w > 0.0)) {
        return Err(Error::Argument("too few resolved scales for a Hölder fit; refine the grid".into()));
    }
    let x: Vec<f64> = scales.iter().map(|s| s.0.ln()).collect();
    let y: Vec<f64> = scales.iter().map(|s| s.1.ln()).collect();
    let (alpha, _, se) = linear_fit(&x, &y);
    let finding = alpha < 0.45 && dom.strictness > 0.0;
    let note = finding.then(|| format!("Hölder exponent {alpha:.3} below 1/2 on a strictly MPSH domain"));
    Ok(HolderReport {
        alpha,
        band: (alpha - 2.0 * se, alpha + 2.0 * se),
        scales,
        boundary_rho,
        finding,
        note,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct SchwarzCheck {
    pub value: f64,
    pub gradient: f64,
    /// `|∇h(0)| / |h(0)|`, at most 2 for negative harmonic `h`.
    pub ratio: f64,
    pub holds: bool,
}

/// `|∇h(0)| ≤ 2|h(0)|` for a negative harmonic function sampled on the grid.
pub fn negative_harmonic_schwarz(grid: &DiscGrid, h: &[f64], tol: f64) -> Result<SchwarzCheck> {
    if h.len() != grid.len() {
        return Err(Error::Argument("field length does not match the grid".into()));
    }
    if let Some(k) = h.iter().position(|v| !(*v < 0.0)) {
        return Err(Error::Precondition(format!("h is not negative at node {k} (h = {})", h[k])));
    }
    let (gx, gy) = grid.origin_gradient(h);
    let gradient = gx.hypot(gy);
    let value = h[0];
    let ratio = gradient / value.abs();
    Ok(SchwarzCheck {
        value,
        gradient,
        ratio,
        holds: ratio <= 2.0 + tol,
    })
}

/// `−Σ w_k P(R_k e^{iθ_k}, ζ)` with the Poisson kernel `(R² − |ζ|²)/|R e^{iθ} − ζ|²`, poles outside the closed disc.
pub fn poisson_negative(grid: &DiscGrid, poles: &[(f64, f64, f64)]) -> Result<Vec<f64>> {
    for &(w, r, _) in poles {
        if !(w > 0.0) || !(r > 1.0) {
            return Err(Error::Argument(format!("pole needs weight > 0 and radius > 1, got ({w}, {r})")));
        }
    }
    Ok((0..grid.len())
        .map(|k| {
            let (x, y) = grid.xy(k);
            -poles
                .iter()
                .map(|&(w, r, t)| {
                    let (px, py) = (r * t.cos(), r * t.sin());
                    w * (r * r - x * x - y * y) / ((px - x).powi(2) + (py - y).powi(2))
                })
                .sum::<f64>()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kobayashi::{localize, BarrierConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    #[test]
    fn schwarz_bound_with_poisson_oracle() {
        let grid = DiscGrid::new(32, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let poles: Vec<(f64, f64, f64)> = (0..3)
                .map(|_| (rng.random_range(0.1..2.0), rng.random_range(1.02..2.0), rng.random_range(0.0..2.0 * PI)))
                .collect();
            let h = poisson_negative(&grid, &poles).unwrap();
            let c = negative_harmonic_schwarz(&grid, &h, 1e-9).unwrap();
            let value: f64 = -poles.iter().map(|p| p.0).sum::<f64>();
            let (gx, gy) = poles
                .iter()
                .fold((0.0, 0.0), |(a, b), &(w, r, t)| (a - 2.0 * w * t.cos() / r, b - 2.0 * w * t.sin() / r));
            assert!((c.value - value).abs() < 1e-12);
            assert!((c.gradient - gx.hypot(gy)).abs() < 1e-6 * gx.hypot(gy).max(1.0), "{} {}", c.gradient, gx.hypot(gy));
            assert!(c.holds);
        }
        let mut bad = poisson_negative(&grid, &[(1.0, 1.5, 0.0)]).unwrap();
        bad[5] = 0.1;
        assert!(matches!(negative_harmonic_schwarz(&grid, &bad, 0.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn holder_exponents_of_landing_discs() {
        let dom = DomainSpec::euclidean_ball(3, vec![0.0; 3], 1.0).unwrap();
        let grid = DiscGrid::new(64, 256).unwrap();
        let smooth = DiscMap::from_fn(grid.clone(), 3, |x, y| DVector::from_vec(vec![x, y, 0.0])).unwrap();
        let r = holder_probe(&dom, &smooth, (-0.5, 0.5)).unwrap();
        assert!(r.alpha >= 0.95, "{}", r.alpha);
        assert!(!r.finding);
        let root = DiscMap::from_fn(grid.clone(), 3, |x, y| {
            let s = crate::disc::C64::new(1.0 - x, -y).sqrt();
            let z = crate::disc::C64::new(x, y) * crate::disc::C64::new(0.0, 2.0 * s.im).exp();
            DVector::from_vec(vec![z.re, z.im, 0.0])
        })
        .unwrap();
        let r = holder_probe(&dom, &root, (-0.5, 0.5)).unwrap();
        assert!(r.alpha >= 0.45 && r.alpha <= 0.6, "{} {:?}", r.alpha, r.scales);
        let inner = smooth.dilate(0.9).unwrap();
        assert!(matches!(holder_probe(&dom, &inner, (-0.5, 0.5)), Err(Error::Precondition(_))));
    }

    #[test]
    fn normal_approach_path_hits_the_depths() {
        let dom = DomainSpec::euclidean_ball(3, vec![0.0; 3], 1.0).unwrap();
        let base = v(&[1.0, 0.0, 0.0]);
        let path = approach_path(&dom, &base, &[1e-1, 1e-2, 1e-3, 1e-4]).unwrap();
        for (p, d) in path.iter().zip([1e-1, 1e-2, 1e-3, 1e-4]) {
            assert!((dom.rho_at(p).unwrap() + d).abs() < 1e-12);
            assert!(p[1].abs() < 1e-15);
        }
        let cfg = UpperConfig::default();
        let scan = boundary_scan(&dom, &base, &path, XiMode::Tangential, &cfg, None).unwrap();
        assert!((scan.slope_upper + 0.5).abs() < 0.05, "{}", scan.slope_upper);
        let scan = boundary_scan(&dom, &base, &path, XiMode::Normal, &cfg, None).unwrap();
        assert!((scan.slope_upper + 1.0).abs() < 0.05, "{}", scan.slope_upper);
        assert!(scan.note.is_some());
        let mut shuffled = path.clone();
        shuffled.swap(0, 1);
        assert!(matches!(boundary_scan(&dom, &base, &shuffled, XiMode::Normal, &cfg, None), Err(Error::Argument(_))));
        assert!(matches!(boundary_scan(&dom, &base, &path[..3], XiMode::Normal, &cfg, None), Err(Error::Precondition(_))));
    }

    #[test]
    fn ball_probe_preconditions_and_containment() {
        let dom = DomainSpec::euclidean_ball(2, vec![0.0; 2], 1.0).unwrap();
        let bcfg = BarrierConfig { lattice_spacing: 0.2, ..Default::default() };
        let loc = localize(&dom, &bcfg).unwrap();
        let gcfg = GraphConfig { spacing: 0.1, ..Default::default() };
        let q = v(&[0.1, 0.0]);
        assert!(matches!(
            kobayashi_ball_probe(&dom, &q, 2.0 * loc.n, &loc, &gcfg),
            Err(Error::Precondition(_))
        ));
        let r = kobayashi_ball_probe(&dom, &q, loc.n / 2.0, &loc, &gcfg).unwrap();
        assert!(r.violations.is_empty() && r.lower_violations.is_empty(), "{}", r.verdict);
        assert!(r.inside >= 1);
    }
}
