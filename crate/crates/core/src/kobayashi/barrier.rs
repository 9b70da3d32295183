//! Cutoff barriers `Ψ_q` (localization) and `Φ_w` (boundary estimate), their
//! MPSH certificates and the constants derived from them.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::disc::poincare_radius;
use crate::error::{Error, Result};
use crate::field::{NormSquared, Radial, RadialProfile, ScalarField, Sum};
use crate::mpsh::{find_log_constant, relative_eigen, SIGN_TOL};
use crate::numerics::sphere_points;

use super::domain::DomainSpec;

/// `N(ε, B) = exp(−A − AB/2ε)`.
pub fn n_constant(a: f64, b: f64, epsilon: f64) -> f64 {
    (-a - a * b / (2.0 * epsilon)).exp()
}

/// `C = e^{−A/2} e^{−C₃/2ε} r`.
pub fn c_constant(a: f64, c3: f64, epsilon: f64, r: f64) -> f64 {
    (-a / 2.0).exp() * (-c3 / (2.0 * epsilon)).exp() * r
}

const TABULATION_POINTS: usize = 4096;

/// `ψ(t) = t` for `t ≤ t0`, `ψ(t) = 1` for `t ≥ t1`, joined by the quintic
/// Hermite polynomial matching value, slope and curvature at both ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Cutoff {
    pub t0: f64,
    pub t1: f64,
    /// `sup ψ'` and `sup |ψ''|` on the transition, tabulated.
    pub d1_sup: f64,
    pub d2_sup: f64,
}

impl Cutoff {
    pub fn new(t0: f64, t1: f64) -> Result<Self> {
        if !(t0 > 0.0 && t0 < t1 && t0 < 1.0) {
            return Err(Error::Argument(format!("cutoff needs 0 < t0 < min(t1, 1), got {t0}, {t1}")));
        }
        let mut c = Cutoff { t0, t1, d1_sup: 0.0, d2_sup: 0.0 };
        for k in 0..=TABULATION_POINTS {
            let t = t0 + (t1 - t0) * k as f64 / TABULATION_POINTS as f64;
            let (_, d1, d2) = c.eval(t);
            if d1 < -1e-12 {
                return Err(Error::Argument(format!("cutoff on [{t0}, {t1}] is not monotone")));
            }
            c.d1_sup = c.d1_sup.max(d1);
            c.d2_sup = c.d2_sup.max(d2.abs());
        }
        Ok(c)
    }

    /// Transition on `[1/2, 3/4]`.
    pub fn step1() -> Self {
        Self::new(0.5, 0.75).expect("valid cutoff")
    }

    /// Transition on `[1/2, 1]`.
    pub fn step4() -> Self {
        Self::new(0.5, 1.0).expect("valid cutoff")
    }

    /// `(ψ, ψ', ψ'')` at `t ≥ 0`.
    pub fn eval(&self, t: f64) -> (f64, f64, f64) {
        if t <= self.t0 {
            return (t, 1.0, 0.0);
        }
        if t >= self.t1 {
            return (1.0, 0.0, 0.0);
        }
        let h = self.t1 - self.t0;
        let s = (t - self.t0) / h;
        let (s2, s3, s4, s5) = (s * s, s * s * s, s * s * s * s, s * s * s * s * s);
        let h0 = (1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5, -30.0 * s2 + 60.0 * s3 - 30.0 * s4, -60.0 * s + 180.0 * s2 - 120.0 * s3);
        let h1 = (s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5, 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4, -36.0 * s + 96.0 * s2 - 60.0 * s3);
        let h5 = (10.0 * s3 - 15.0 * s4 + 6.0 * s5, 30.0 * s2 - 60.0 * s3 + 30.0 * s4, 60.0 * s - 180.0 * s2 + 120.0 * s3);
        let v = self.t0 * h0.0 + h * h1.0 + h5.0;
        let d1 = (self.t0 * h0.1 + h * h1.1 + h5.1) / h;
        let d2 = (self.t0 * h0.2 + h * h1.2 + h5.2) / (h * h);
        (v, d1, d2)
    }
}

/// `s ↦ log ψ(s²/β²)`.
#[derive(Clone, Copy, Debug)]
struct LogCutoff {
    cutoff: Cutoff,
    beta2: f64,
}

impl RadialProfile for LogCutoff {
    fn eval(&self, s: f64) -> (f64, f64, f64) {
        let tau = s * s / self.beta2;
        if tau <= self.cutoff.t0 {
            return (tau.ln(), 2.0 / s, -2.0 / (s * s));
        }
        let (p, p1, p2) = self.cutoff.eval(tau);
        let (l1, l2) = (p1 / p, p2 / p - (p1 / p) * (p1 / p));
        let dt = 2.0 * s / self.beta2;
        (p.ln(), l1 * dt, l2 * dt * dt + l1 * 2.0 / self.beta2)
    }
    fn label(&self) -> String {
        format!("log_cutoff(beta2={})", self.beta2)
    }
}

/// `s ↦ ψ(s)`.
#[derive(Clone, Copy, Debug)]
struct CutoffRadial {
    cutoff: Cutoff,
}

impl RadialProfile for CutoffRadial {
    fn eval(&self, s: f64) -> (f64, f64, f64) {
        self.cutoff.eval(s)
    }
    fn label(&self) -> String {
        "cutoff".into()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BarrierKind {
    Step1,
    Step4,
}

/// `ψ(|x − q|²/β²)·exp(Aψ(|x − q|))·exp(λρ)`.
#[derive(Clone, Debug, Serialize)]
pub struct BarrierFunction {
    pub kind: BarrierKind,
    pub center: Vec<f64>,
    pub cutoff: Cutoff,
    pub a: f64,
    pub lambda: f64,
    pub beta2: f64,
    #[serde(skip)]
    rho: Option<Arc<dyn ScalarField>>,
}

impl BarrierFunction {
    pub fn new(kind: BarrierKind, center: &DVector<f64>, a: f64, lambda: f64, beta2: f64, rho: Arc<dyn ScalarField>) -> Self {
        let cutoff = match kind {
            BarrierKind::Step1 => Cutoff::step1(),
            BarrierKind::Step4 => Cutoff::step4(),
        };
        BarrierFunction {
            kind,
            center: center.as_slice().to_vec(),
            cutoff,
            a,
            lambda,
            beta2,
            rho: Some(rho),
        }
    }

    fn q(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.center)
    }

    fn log_part(&self) -> Radial<LogCutoff> {
        Radial::new(self.q(), LogCutoff { cutoff: self.cutoff, beta2: self.beta2 })
    }

    fn cutoff_part(&self) -> Radial<CutoffRadial> {
        Radial::new(self.q(), CutoffRadial { cutoff: self.cutoff })
    }

    /// The logarithm of the barrier as a field (singular at the center).
    pub fn log_field(&self) -> Sum {
        let rho = self.rho.clone().expect("barrier carries ρ");
        Sum::new(vec![
            (1.0, Arc::new(self.log_part()) as Arc<dyn ScalarField>),
            (self.a, Arc::new(self.cutoff_part())),
            (self.lambda, rho),
        ])
    }

    /// Barrier value, `0` at the center.
    pub fn value(&self, x: &DVector<f64>) -> Result<f64> {
        if (x - self.q()).norm() == 0.0 {
            return Ok(0.0);
        }
        Ok(self.log_field().value(x)?.exp())
    }
}

/// Sampling of the certification regions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierConfig {
    /// Spacing of the lattice covering `D ∩ U`.
    pub lattice_spacing: f64,
    pub shell_directions: usize,
    /// Radii per factor 2 in the graded shell around the barrier center.
    pub shell_per_octave: usize,
    /// Excluded ball around the center, relative to `β`.
    pub annulus: f64,
    /// Spacing of the localization centers `q`.
    pub center_spacing: f64,
    pub kappa_max: f64,
    pub a_cap: f64,
    /// Coordinate radius of `U`.
    pub u_radius: f64,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        BarrierConfig {
            lattice_spacing: 0.1,
            shell_directions: 48,
            shell_per_octave: 16,
            annulus: 1e-3,
            center_spacing: 0.5,
            kappa_max: 256.0,
            a_cap: 1024.0,
            u_radius: 3.0,
        }
    }
}

/// Per-sample data reused across parameter searches: metric and covariant Hessians.
struct Prepared {
    x: DVector<f64>,
    g: DMatrix<f64>,
    log: DMatrix<f64>,
    cut: DMatrix<f64>,
    rho: DMatrix<f64>,
    quad: DMatrix<f64>,
    dist: f64,
}

fn min_pair(h: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<f64> {
    let (v, _) = relative_eigen(h, g)?;
    Ok(v[0] + v[1])
}

fn passes(h: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<(bool, f64)> {
    let m = min_pair(h, g)?;
    Ok((m >= -SIGN_TOL * (1.0 + h.amax()), m))
}

/// Shell `inner ≤ |x − c| ≤ outer` with `per_octave` radii per factor 2.
fn graded_shell(center: &DVector<f64>, inner: f64, outer: f64, directions: usize, per_octave: usize) -> Vec<DVector<f64>> {
    let dirs = sphere_points(center.len(), directions, 0);
    let ratio = 2f64.powf(-1.0 / per_octave as f64);
    let mut out = Vec::new();
    let mut r = outer;
    while r >= inner {
        for d in &dirs {
            out.push(center + d * r);
        }
        r *= ratio;
    }
    out
}

/// Lattice of `D ∩ U` plus a graded shell around `center`, minus the excluded ball.
fn region_samples(dom: &DomainSpec, center: &DVector<f64>, excluded: f64, cfg: &BarrierConfig) -> Result<Vec<DVector<f64>>> {
    let in_u = |x: &DVector<f64>| (x - &dom.origin).norm() < cfg.u_radius;
    let mut pts: Vec<DVector<f64>> = dom
        .interior_lattice(cfg.lattice_spacing)?
        .into_iter()
        .filter(|x| in_u(x) && (x - center).norm() >= excluded)
        .collect();
    for x in graded_shell(center, excluded, cfg.u_radius, cfg.shell_directions, cfg.shell_per_octave) {
        if in_u(&x) && dom.contains(&x) {
            pts.push(x);
        }
    }
    Ok(pts)
}

fn prepare(dom: &DomainSpec, center: &DVector<f64>, cutoff: Cutoff, beta2: f64, samples: Vec<DVector<f64>>) -> Result<Vec<Prepared>> {
    let log = Radial::new(center.clone(), LogCutoff { cutoff, beta2 });
    let cut = Radial::new(center.clone(), CutoffRadial { cutoff });
    let quad = NormSquared::new(dom.origin.clone());
    samples
        .into_iter()
        .map(|x| {
            Ok(Prepared {
                g: dom.chart.metric_at(&x)?,
                log: dom.chart.hessian_at(&log, &x)?.0,
                cut: dom.chart.hessian_at(&cut, &x)?.0,
                rho: dom.chart.hessian_at(dom.rho.as_ref(), &x)?.0,
                quad: dom.chart.hessian_at(&quad, &x)?.0,
                dist: (&x - center).norm(),
                x,
            })
        })
        .collect()
}

/// Minimum pair trace of `log + A·cut + λ·ρ` over the samples, with pass flag and worst point.
fn scan(data: &[Prepared], a: f64, lambda: f64) -> Result<(bool, f64, Vec<f64>)> {
    let mut ok = true;
    let mut margin = f64::INFINITY;
    let mut worst = Vec::new();
    for p in data {
        let h = &p.log + &p.cut * a + &p.rho * lambda;
        let (pass, m) = passes(&h, &p.g)?;
        ok &= pass;
        if m < margin {
            margin = m;
            worst = p.x.as_slice().to_vec();
        }
    }
    Ok((ok, margin, worst))
}

/// Smallest `c ≥ 0` with `base + c·quad` passing at this sample.
fn quad_coefficient(base: &DMatrix<f64>, quad: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<f64> {
    if passes(base, g)?.0 {
        return Ok(0.0);
    }
    // exact when the Hessian of |x|² is a multiple of the metric (flat identity charts)
    let alpha = quad[(0, 0)] / g[(0, 0)];
    if (quad - g * alpha).amax() <= 1e-12 * quad.amax() && alpha > 0.0 {
        let c = -min_pair(base, g)? / (2.0 * alpha);
        let c = c * (1.0 + 1e-12);
        if passes(&(base + quad * c), g)?.0 {
            return Ok(c);
        }
    }
    let mut hi = 1.0;
    while !passes(&(base + quad * hi), g)?.0 {
        hi *= 2.0;
        if hi > 1e15 {
            return Err(Error::Numeric("no quadratic coefficient restores positivity".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if passes(&(base + quad * mid), g)?.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Step 1 data shared by every localization barrier.
#[derive(Clone, Debug, Serialize)]
pub struct Localization {
    pub epsilon: f64,
    /// `ε/κ`, the strictness actually used for `λ = A/ε_eff`.
    pub epsilon_eff: f64,
    pub kappa: f64,
    pub b: f64,
    pub a: f64,
    /// Constant of the pure log model at the origin.
    pub a_log: f64,
    pub lambda: f64,
    pub n: f64,
    pub r: f64,
    pub centers: usize,
    pub margin: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
    pub config: BarrierConfig,
    /// `(κ, A or ∞)` for every tried `κ`.
    pub trials: Vec<(f64, f64)>,
}

/// Smallest `A ≥ a0` (doubling, then 10 bisection steps) passing for one center.
fn search_a(data: &[Prepared], a0: f64, kappa: f64, eps: f64, cap: f64) -> Result<Option<f64>> {
    let lam = |a: f64| kappa * a / eps;
    let mut a = a0;
    while !scan(data, a, lam(a))?.0 {
        a *= 2.0;
        if a > cap {
            return Ok(None);
        }
    }
    if a > a0 {
        let (mut lo, mut hi) = ((a / 2.0).max(a0), a);
        for _ in 0..10 {
            let mid = 0.5 * (lo + hi);
            if scan(data, mid, lam(mid))?.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        a = hi;
    }
    Ok(Some(a))
}

/// Certifies the Step 1 barriers `log Ψ_q` for lattice centers `q` with `|x(q)| < 2`
/// and derives `N` and `r`.
pub fn localize(dom: &DomainSpec, cfg: &BarrierConfig) -> Result<Localization> {
    let eps = dom.strictness;
    if !(eps > 0.0) {
        return Err(Error::Precondition(format!("{} is not strictly MPSH (ε = {eps})", dom.label)));
    }
    let mut centers = vec![dom.origin.clone()];
    for x in dom.interior_lattice(cfg.center_spacing)? {
        let d = (&x - &dom.origin).norm();
        if d > 0.0 && d < 2.0 {
            centers.push(x);
        }
    }
    let radius = (0.5 * dom.boundary_distance(&dom.origin, 64)?).min(1.0);
    let a_log = find_log_constant(&dom.chart, &dom.origin, radius, None, &[])?.a;
    let cutoff = Cutoff::step1();
    let mut kappas = vec![1.0];
    while *kappas.last().unwrap() * 2.0 <= cfg.kappa_max {
        kappas.push(kappas.last().unwrap() * 2.0);
    }
    // best[k] = max over centers of the smallest passing A for kappas[k]
    let mut best: Vec<Option<f64>> = vec![Some(a_log); kappas.len()];
    let mut samples = 0;
    for q in &centers {
        let data = prepare(dom, q, cutoff, 1.0, region_samples(dom, q, cfg.annulus, cfg)?)?;
        samples += data.len();
        for (k, kappa) in kappas.iter().enumerate() {
            if let Some(cur) = best[k] {
                best[k] = search_a(&data, cur, *kappa, eps, cfg.a_cap)?;
            }
        }
    }
    let trials: Vec<(f64, f64)> = kappas
        .iter()
        .zip(&best)
        .map(|(k, a)| (*k, a.unwrap_or(f64::INFINITY)))
        .collect();
    // largest N among passing κ
    let b = dom.rho_bound;
    let choice = kappas
        .iter()
        .zip(&best)
        .filter_map(|(k, a)| a.map(|a| (*k, a, n_constant(a, b, eps / k))))
        .max_by(|x, y| x.2.total_cmp(&y.2));
    let Some((kappa, a, n)) = choice else {
        return Err(Error::Certificate {
            message: format!("no κ ≤ {} and A ≤ {} make every log Ψ_q MPSH", cfg.kappa_max, cfg.a_cap),
            worst_point: dom.origin.as_slice().to_vec(),
            margin: f64::NEG_INFINITY,
        });
    };
    let eps_eff = eps / kappa;
    let lambda = a / eps_eff;
    let mut margin = f64::INFINITY;
    let mut worst = Vec::new();
    for q in &centers {
        let data = prepare(dom, q, cutoff, 1.0, region_samples(dom, q, cfg.annulus, cfg)?)?;
        let (_, m, w) = scan(&data, a, lambda)?;
        if m < margin {
            margin = m;
            worst = w;
        }
    }
    let r = poincare_radius(n)?;
    Ok(Localization {
        epsilon: eps,
        epsilon_eff: eps_eff,
        kappa,
        b,
        a,
        a_log,
        lambda,
        n,
        r,
        centers: centers.len(),
        margin,
        worst_point: worst,
        samples,
        config: cfg.clone(),
        trials,
    })
}

/// A barrier together with the scan that certifies its logarithm.
#[derive(Clone, Debug, Serialize)]
pub struct BarrierCertificate {
    pub barrier: BarrierFunction,
    pub epsilon: f64,
    pub margin: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
    pub excluded_radius: f64,
    /// `sup Ψ` over the samples; at most `e^A`.
    pub value_sup: f64,
    pub rho_w: Option<f64>,
    /// Step 4 constants, as coefficients of `|x|²` scaled by `β²` where the text does.
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub beta2_le_b: Option<bool>,
    pub beta2_le_b_squared: Option<bool>,
}

/// Builds and certifies the Step 1 barrier at `q` or the Step 4 barrier at `w = q`.
pub fn barrier_certificate(
    dom: &DomainSpec,
    q: &DVector<f64>,
    kind: BarrierKind,
    loc: &Localization,
    cfg: &BarrierConfig,
) -> Result<BarrierCertificate> {
    if q.len() != dom.dim() || !dom.contains(q) {
        return Err(Error::Argument(format!("barrier center {:?} is not in Ω", q.as_slice())));
    }
    match kind {
        BarrierKind::Step1 => {
            if (q - &dom.origin).norm() >= 2.0 {
                return Err(Error::Precondition("Step 1 centers need |x(q)| < 2".into()));
            }
            let cutoff = Cutoff::step1();
            let data = prepare(dom, q, cutoff, 1.0, region_samples(dom, q, cfg.annulus, cfg)?)?;
            let (ok, margin, worst) = scan(&data, loc.a, loc.lambda)?;
            let barrier = BarrierFunction::new(kind, q, loc.a, loc.lambda, 1.0, dom.rho.clone());
            if !ok {
                return Err(Error::Certificate {
                    message: "log Ψ_q fails the MPSH scan".into(),
                    worst_point: worst,
                    margin,
                });
            }
            let value_sup = sup_value(&barrier, &data)?;
            Ok(BarrierCertificate {
                barrier,
                epsilon: loc.epsilon_eff,
                margin,
                worst_point: worst,
                samples: data.len(),
                excluded_radius: cfg.annulus,
                value_sup,
                rho_w: None,
                c0: None,
                c1: None,
                c2: None,
                c3: None,
                beta2_le_b: None,
                beta2_le_b_squared: None,
            })
        }
        BarrierKind::Step4 => step4(dom, q, loc, cfg),
    }
}

fn sup_value(b: &BarrierFunction, data: &[Prepared]) -> Result<f64> {
    let mut s: f64 = 0.0;
    for p in data {
        s = s.max(b.value(&p.x)?);
    }
    Ok(s)
}

fn step4(dom: &DomainSpec, w: &DVector<f64>, loc: &Localization, cfg: &BarrierConfig) -> Result<BarrierCertificate> {
    if (w - &dom.origin).norm() >= 1.0 {
        return Err(Error::Precondition(format!(
            "w = {:?} lies outside the unit coordinate ball of the localization chart",
            w.as_slice()
        )));
    }
    let rho_w = dom.rho_at(w)?;
    let beta2 = rho_w.abs();
    let beta = beta2.sqrt();
    let cutoff = Cutoff::step4();
    let excluded = cfg.annulus * beta;
    let data = prepare(dom, w, cutoff, beta2, region_samples(dom, w, excluded, cfg)?)?;
    let a = loc.a;
    let (mut c0, mut c1, mut c2, mut c3): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for p in &data {
        let base = &p.log + &p.cut * a;
        let c = quad_coefficient(&base, &p.quad, &p.g)?;
        let tau = p.dist * p.dist / beta2;
        if tau <= 0.5 {
            c0 = c0.max(c);
        } else if tau >= 1.0 {
            c1 = c1.max(c);
        } else {
            // second derivatives of log ψ(|x−w|²/β²), scaled by β²
            let e = p.log.clone().symmetric_eigen().eigenvalues.amax();
            c2 = c2.max(e * beta2);
        }
        c3 = c3.max(c * beta2);
    }
    let eps = loc.epsilon;
    let lambda = c3 / (eps * beta2);
    let barrier = BarrierFunction::new(BarrierKind::Step4, w, a, lambda, beta2, dom.rho.clone());
    let (ok, margin, worst) = scan(&data, a, lambda)?;
    if !ok {
        return Err(Error::Certificate {
            message: "log Φ_w fails the MPSH scan".into(),
            worst_point: worst,
            margin,
        });
    }
    let value_sup = sup_value(&barrier, &data)?;
    let b = dom.rho_bound;
    Ok(BarrierCertificate {
        barrier,
        epsilon: eps,
        margin,
        worst_point: worst,
        samples: data.len(),
        excluded_radius: excluded,
        value_sup,
        rho_w: Some(rho_w),
        c0: Some(c0),
        c1: Some(c1),
        c2: Some(c2),
        c3: Some(c3),
        beta2_le_b: Some(beta2 <= b),
        beta2_le_b_squared: Some(beta2 <= b * b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use crate::field::{stencil_gradient, stencil_hessian};

    #[test]
    fn cutoff_is_c2_and_monotone() {
        for c in [Cutoff::step1(), Cutoff::step4()] {
            for t in [c.t0, c.t1] {
                let (l, r) = (c.eval(t - 1e-9), c.eval(t + 1e-9));
                assert!((l.0 - r.0).abs() < 1e-8 && (l.1 - r.1).abs() < 1e-7 && (l.2 - r.2).abs() < 1e-5);
            }
            assert!(c.d1_sup > 1.0 && c.d2_sup > 0.0);
        }
        // average slope 2 on [1/2, 3/4] forces a larger slope somewhere
        assert!(Cutoff::step1().d1_sup > 2.0);
        assert!(Cutoff::new(0.5, 0.4).is_err());
    }

    #[test]
    fn constants_closed_forms() {
        // A = 1, B = 2ε
        let n = n_constant(1.0, 2.0, 1.0);
        assert_relative_eq!(n, (-2.0f64).exp(), epsilon = 1e-16);
        assert_relative_eq!(n, 0.1353352832366127, epsilon = 1e-15);
        assert_relative_eq!(poincare_radius(n).unwrap(), 0.13452, epsilon = 1e-5);
        assert_relative_eq!(c_constant(2.0, 1.0, 0.5, 0.3), (-1.0f64).exp() * (-1.0f64).exp() * 0.3, epsilon = 1e-16);
    }

    #[test]
    fn barrier_log_field_derivatives() {
        let rho: Arc<dyn ScalarField> = Arc::new(Sum::new(vec![
            (1.0, Arc::new(NormSquared::centered(3)) as Arc<dyn ScalarField>),
            (-1.0, Arc::new(crate::field::Linear::new(DVector::zeros(3), 1.0))),
        ]));
        let q = DVector::from_vec(vec![0.1, 0.0, 0.0]);
        for (kind, beta2) in [(BarrierKind::Step1, 1.0), (BarrierKind::Step4, 0.2)] {
            let b = BarrierFunction::new(kind, &q, 3.0, 2.0, beta2, rho.clone());
            let f = b.log_field();
            // points in the inner region, the transition and outside
            for s in [0.2, 0.4, 0.55, 0.62, 0.7, 0.8, 0.9] {
                let x = &q + DVector::from_vec(vec![0.6, 0.48, 0.64]) * s;
                let g = f.gradient(&x).unwrap();
                assert_relative_eq!(g, stencil_gradient(&f, &x, 1e-6).unwrap(), epsilon = 1e-6, max_relative = 1e-6);
                let h = f.hessian(&x).unwrap();
                assert_relative_eq!(h, stencil_hessian(&f, &x, 1e-4).unwrap(), epsilon = 1e-4, max_relative = 1e-4);
                let v = b.value(&x).unwrap();
                assert!(v >= 0.0 && v <= 3f64.exp());
            }
        }
    }
}
