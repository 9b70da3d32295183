//! Minimal plurisubharmonicity: pair traces of the covariant Hessian,
//! strictness moduli, logarithmic model functions and checks along discs.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Serialize, Serializer};

use crate::chart::Chart;
use crate::disc::{compose, subharmonicity_check, DiscMap, SubharmonicityReport};
use crate::error::{Error, Result};
use crate::field::{log_barrier, ScalarField};
use crate::numerics::sphere_points;

/// Orthonormality tolerance for frames passed to [`pair_trace`].
pub const FRAME_TOL: f64 = 1e-8;
/// Pair traces above `-SIGN_TOL` count as nonnegative.
pub const SIGN_TOL: f64 = 1e-9;

/// `∇²ρ(p)(v₁,v₁) + ∇²ρ(p)(v₂,v₂)` for a g(p)-orthonormal frame `(v₁, v₂)`.
pub fn pair_trace(
    chart: &Chart,
    rho: &dyn ScalarField,
    p: &DVector<f64>,
    frame: (&DVector<f64>, &DVector<f64>),
) -> Result<f64> {
    let g = chart.metric_at(p)?;
    let (v1, v2) = frame;
    let ip = |a: &DVector<f64>, b: &DVector<f64>| a.dot(&(&g * b));
    if (ip(v1, v1) - 1.0).abs() > FRAME_TOL
        || (ip(v2, v2) - 1.0).abs() > FRAME_TOL
        || ip(v1, v2).abs() > FRAME_TOL
    {
        return Err(Error::Argument("frame is not g-orthonormal".into()));
    }
    let h = chart.hessian_at(rho, p)?;
    Ok(h.apply(v1, v1) + h.apply(v2, v2))
}

/// Eigen-decomposition of the Hessian relative to the metric at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct PairTraceMin {
    /// `λ₁ + λ₂`, the two smallest eigenvalues of `∇²ρ(p)` relative to `g(p)`.
    pub min_pair_trace: f64,
    /// g-orthonormal eigenvectors of `λ₁, λ₂`.
    pub plane: (DVector<f64>, DVector<f64>),
    /// All relative eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
}

/// Relative eigenvalues `∇²ρ v = λ g v`, ascending, with g-orthonormal eigenvectors.
pub fn relative_eigen(h: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let l = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numeric("metric is not positive definite".into()))?
        .l();
    let linv = l
        .try_inverse()
        .ok_or_else(|| Error::Numeric("singular Cholesky factor".into()))?;
    let m = &linv * h * linv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = m.symmetric_eigen();
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("eigen-solver produced non-finite values".into()));
    }
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let lt = linv.transpose();
    Ok((
        order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        order
            .iter()
            .map(|&i| &lt * eig.eigenvectors.column(i))
            .collect(),
    ))
}

/// Minimum over all 2-planes of the pair trace at `p`.
pub fn is_mpsh_at(chart: &Chart, rho: &dyn ScalarField, p: &DVector<f64>) -> Result<PairTraceMin> {
    if chart.dim() < 2 {
        return Err(Error::Argument("pair traces need dimension at least 2".into()));
    }
    let g = chart.metric_at(p)?;
    let h = chart.hessian_at(rho, p)?;
    let (values, vectors) = relative_eigen(h.matrix(), &g)?;
    Ok(PairTraceMin {
        min_pair_trace: values[0] + values[1],
        plane: (vectors[0].clone(), vectors[1].clone()),
        eigenvalues: values,
    })
}

/// Largest `ε ≥ 0` with `ρ − ε|x|²` (normal coordinates at `p`) having nonnegative
/// pair traces at `p`.
///
/// In normal coordinates at `p` the covariant Hessian of `|x|²` at `p` is `2g(p)`,
/// so every pair trace drops by exactly `4ε`; the modulus is `max(0, (λ₁+λ₂)/4)`.
pub fn strictness_modulus(chart: &Chart, rho: &dyn ScalarField, p: &DVector<f64>) -> Result<f64> {
    let m = is_mpsh_at(chart, rho, p)?;
    Ok((m.min_pair_trace / 4.0).max(0.0))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Mpsh,
    StrictlyMpsh { epsilon: f64 },
    NotMpsh,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Mpsh => write!(f, "MPSH"),
            Verdict::StrictlyMpsh { epsilon } => write!(f, "strictly MPSH, ε={epsilon}"),
            Verdict::NotMpsh => write!(f, "not MPSH"),
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

fn vec_ser<S: Serializer>(v: &DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

fn plane_ser<S: Serializer>(
    v: &(DVector<f64>, DVector<f64>),
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq([v.0.as_slice(), v.1.as_slice()])
}

/// Pointwise certification over a sampled region.
#[derive(Clone, Debug, Serialize)]
pub struct MpshReport {
    pub label: String,
    pub region: Vec<Vec<f64>>,
    pub min_pair_trace: f64,
    #[serde(serialize_with = "vec_ser")]
    pub worst_point: DVector<f64>,
    #[serde(serialize_with = "plane_ser")]
    pub worst_plane: (DVector<f64>, DVector<f64>),
    /// Minimum over the samples of [`strictness_modulus`].
    pub strictness: f64,
    pub verdict: Verdict,
}

impl MpshReport {
    pub fn is_mpsh(&self) -> bool {
        self.verdict != Verdict::NotMpsh
    }
}

/// Certifies `rho` at every point of `region`.
pub fn mpsh_scan(chart: &Chart, rho: &dyn ScalarField, region: &[DVector<f64>]) -> Result<MpshReport> {
    let mut worst: Option<(f64, DVector<f64>, (DVector<f64>, DVector<f64>))> = None;
    for p in region {
        let m = is_mpsh_at(chart, rho, p)?;
        if worst.as_ref().is_none_or(|w| m.min_pair_trace < w.0) {
            worst = Some((m.min_pair_trace, p.clone(), m.plane));
        }
    }
    let (min_pair_trace, worst_point, worst_plane) =
        worst.ok_or_else(|| Error::Argument("empty region".into()))?;
    let strictness = (min_pair_trace / 4.0).max(0.0);
    let verdict = if min_pair_trace < -SIGN_TOL {
        Verdict::NotMpsh
    } else if strictness > SIGN_TOL {
        Verdict::StrictlyMpsh {
            epsilon: strictness,
        }
    } else {
        Verdict::Mpsh
    };
    Ok(MpshReport {
        label: rho.label(),
        region: region.iter().map(|p| p.as_slice().to_vec()).collect(),
        min_pair_trace,
        worst_point,
        worst_plane,
        strictness,
        verdict,
    })
}

/// Points of the coordinate shell `inner ≤ |x − center| ≤ outer`: radii
/// `outer·2^{-k/2}` down to `inner`, times `directions` unit vectors.
///
/// Radii are anchored at `outer`, so a smaller `inner` only adds points.
pub fn shell_samples(center: &DVector<f64>, inner: f64, outer: f64, directions: usize) -> Vec<DVector<f64>> {
    let dirs = sphere_points(center.len(), directions, 0);
    let mut radii = Vec::new();
    let mut r = outer;
    while r >= inner {
        radii.push(r);
        r *= std::f64::consts::FRAC_1_SQRT_2;
    }
    if radii.last().is_none_or(|&l| l > inner) {
        radii.push(inner);
    }
    let mut out = Vec::with_capacity(radii.len() * dirs.len());
    for r in radii {
        for d in &dirs {
            out.push(center + d * r);
        }
    }
    out
}

/// Result of the search for `A` making `log|x − p| + A|x − p|` strictly MPSH.
#[derive(Clone, Debug, Serialize)]
pub struct LogConstant {
    pub a: f64,
    /// Minimum pair trace of the certified function over the shell samples.
    pub margin: f64,
    /// `min |ζ|·Δ(φ∘u)(ζ)` over the supplied discs, near their centers.
    pub b_margin: Option<f64>,
    pub samples: usize,
    pub inner: f64,
    pub radius: f64,
    /// `(A, min pair trace)` for every tried value.
    pub trials: Vec<(f64, f64)>,
}

/// Doubling cap for the `A` search.
pub const LOG_CONSTANT_CAP: f64 = 1024.0;
const SHELL_DIRECTIONS: usize = 64;

fn shell_min(chart: &Chart, center: &DVector<f64>, a: f64, samples: &[DVector<f64>]) -> Result<f64> {
    let phi = log_barrier(center.clone(), a);
    let mut m = f64::INFINITY;
    for q in samples {
        m = m.min(is_mpsh_at(chart, &phi, q)?.min_pair_trace);
    }
    Ok(m)
}

/// Smallest `A` in `{1, 2, 4, …}` (refined by 10 bisection steps below the
/// first passing power) such that `log|x − p| + A|x − p|` has positive pair
/// traces on the shell `annulus_inner ≤ |x − p| ≤ radius`. `chart` should be
/// normal at `p`. `discs` (centered at `p`, harmonic) yield the measured margin
/// `min |ζ| Δ(φ∘u)(ζ)` over `0 < |ζ| ≤ 1/2`.
pub fn find_log_constant(
    chart: &Chart,
    p: &DVector<f64>,
    radius: f64,
    annulus_inner: Option<f64>,
    discs: &[DiscMap],
) -> Result<LogConstant> {
    let inner = annulus_inner.unwrap_or(1e-3 * radius);
    if !(inner > 0.0 && inner < radius) {
        return Err(Error::Argument("annulus needs 0 < inner < radius".into()));
    }
    let samples = shell_samples(p, inner, radius, SHELL_DIRECTIONS);
    let mut trials = Vec::new();
    let mut a = 1.0;
    let mut margin = shell_min(chart, p, a, &samples)?;
    trials.push((a, margin));
    while margin <= 0.0 {
        a *= 2.0;
        if a > LOG_CONSTANT_CAP {
            return Err(Error::Certificate {
                message: format!("no A ≤ {LOG_CONSTANT_CAP} makes the log model strictly MPSH"),
                worst_point: p.as_slice().to_vec(),
                margin,
            });
        }
        margin = shell_min(chart, p, a, &samples)?;
        trials.push((a, margin));
    }
    if a > 1.0 {
        let (mut lo, mut hi) = (a / 2.0, a);
        for _ in 0..10 {
            let mid = 0.5 * (lo + hi);
            let m = shell_min(chart, p, mid, &samples)?;
            trials.push((mid, m));
            if m > 0.0 {
                hi = mid;
                margin = m;
            } else {
                lo = mid;
            }
        }
        a = hi;
    }
    let b_margin = if discs.is_empty() {
        None
    } else {
        Some(disc_log_margin(chart, p, a, discs)?)
    };
    Ok(LogConstant {
        a,
        margin,
        b_margin,
        samples: samples.len(),
        inner,
        radius,
        trials,
    })
}

/// `min |ζ|·(∇²φ(u)(u_x,u_x) + ∇²φ(u)(u_y,u_y))` over nodes with `0 < |ζ| ≤ 1/2`.
pub fn disc_log_margin(chart: &Chart, p: &DVector<f64>, a: f64, discs: &[DiscMap]) -> Result<f64> {
    let phi = log_barrier(p.clone(), a);
    let mut m = f64::INFINITY;
    for u in discs {
        let grid = u.grid();
        for k in 1..grid.len() {
            let r = grid.radius(k);
            if r > 0.5 {
                break;
            }
            let h = chart.hessian_at(&phi, &u.point(k))?;
            let (ux, uy) = (u.ux(k), u.uy(k));
            m = m.min(r * (h.apply(&ux, &ux) + h.apply(&uy, &uy)));
        }
    }
    Ok(m)
}

/// Checks that the same `A` certifies `log|x − q| + A|x − q|` around each `q`.
pub fn log_constant_uniform(
    chart: &Chart,
    centers: &[DVector<f64>],
    a: f64,
    radius: f64,
    inner: f64,
) -> Result<f64> {
    let mut m = f64::INFINITY;
    for q in centers {
        let samples: Vec<_> = shell_samples(q, inner, radius, SHELL_DIRECTIONS)
            .into_iter()
            .filter(|x| chart.contains(x.as_slice()))
            .collect();
        m = m.min(shell_min(chart, q, a, &samples)?);
    }
    Ok(m)
}

/// Subharmonicity of `ρ∘u` on every disc, compared with the pointwise scan
/// over the swept points.
#[derive(Clone, Debug, Serialize)]
pub struct DiscVerification {
    pub discs: Vec<SubharmonicityReport>,
    pub all_pass: bool,
    /// Minimum pair trace over the points swept by the discs.
    pub swept_min_pair_trace: f64,
    /// Discs failing although the scan certifies a positive margin.
    pub disagreements: Vec<usize>,
}

/// Stride between swept nodes fed to the pointwise scan.
const SWEEP_STRIDE: usize = 7;

pub fn verify_along_discs(chart: &Chart, rho: &dyn ScalarField, family: &[DiscMap]) -> Result<DiscVerification> {
    let mut discs = Vec::with_capacity(family.len());
    let mut swept = f64::INFINITY;
    for u in family {
        let values = compose(rho, u)?;
        discs.push(subharmonicity_check(u.grid(), &values));
        for k in (0..u.grid().len()).step_by(SWEEP_STRIDE) {
            swept = swept.min(is_mpsh_at(chart, rho, &u.point(k))?.min_pair_trace);
        }
    }
    let disagreements = if swept > 0.0 {
        discs
            .iter()
            .enumerate()
            .filter(|(_, r)| !r.pass)
            .map(|(i, _)| i)
            .collect()
    } else {
        Vec::new()
    };
    Ok(DiscVerification {
        all_pass: discs.iter().all(|r| r.pass),
        discs,
        swept_min_pair_trace: swept,
        disagreements,
    })
}

/// `ρ − ε|x − p|²` as a field, for strictness checks away from `p`.
pub fn shifted(rho: Arc<dyn ScalarField>, p: &DVector<f64>, epsilon: f64) -> crate::field::Sum {
    crate::field::Sum::new(vec![
        (1.0, rho),
        (-epsilon, Arc::new(crate::field::NormSquared::new(p.clone()))),
    ])
}
