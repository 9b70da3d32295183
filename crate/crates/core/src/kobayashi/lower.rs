//! The barrier lower bound `F(w, ξ) ≥ C|ξ||ρ(w)|^{-1/2}` and combined estimates.

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};

use super::barrier::{barrier_certificate, c_constant, BarrierCertificate, BarrierConfig, BarrierKind, Localization};
use super::domain::DomainSpec;
use super::upper::{royden_upper, UpperConfig, UpperEstimate};

/// One named constant with where it came from.
#[derive(Clone, Debug, Serialize)]
pub struct Constant {
    pub value: f64,
    pub provenance: String,
}

fn named(value: f64, provenance: impl Into<String>) -> Constant {
    Constant {
        value,
        provenance: provenance.into(),
    }
}

/// Every constant entering the lower bound at one point.
#[derive(Clone, Debug, Serialize)]
pub struct ConstantsLedger {
    pub epsilon: Constant,
    pub epsilon_eff: Constant,
    pub kappa: Constant,
    #[serde(rename = "B")]
    pub b: Constant,
    #[serde(rename = "A")]
    pub a: Constant,
    pub lambda: Constant,
    pub beta: Constant,
    #[serde(rename = "C0")]
    pub c0: Constant,
    #[serde(rename = "C1")]
    pub c1: Constant,
    #[serde(rename = "C2")]
    pub c2: Constant,
    #[serde(rename = "C3")]
    pub c3: Constant,
    #[serde(rename = "N")]
    pub n: Constant,
    pub r: Constant,
    #[serde(rename = "C")]
    pub c: Constant,
    pub beta2_le_b: bool,
    pub beta2_le_b_squared: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LowerEstimate {
    pub value: f64,
    pub constants: ConstantsLedger,
    pub certificate: BarrierCertificate,
}

/// `C·|ξ|·|ρ(w)|^{-1/2}` with `C = e^{−A/2}e^{−C₃/2ε}r`, after certifying `log Φ_w`.
/// `|ξ|` is the coordinate norm of the localization chart.
pub fn royden_lower(
    dom: &DomainSpec,
    w: &DVector<f64>,
    xi: &DVector<f64>,
    loc: &Localization,
    cfg: &BarrierConfig,
) -> Result<LowerEstimate> {
    if xi.len() != dom.dim() || !(xi.norm() > 0.0) {
        return Err(Error::Argument("ξ must be a nonzero vector of the chart dimension".into()));
    }
    let cert = barrier_certificate(dom, w, BarrierKind::Step4, loc, cfg)?;
    let rho_w = cert.rho_w.expect("step 4 records ρ(w)");
    let c3 = cert.c3.expect("step 4 records C3");
    let c = c_constant(loc.a, c3, loc.epsilon, loc.r);
    let value = c * xi.norm() / rho_w.abs().sqrt();
    let scan = format!(
        "scan: lattice {} + graded shell ({} directions, {} radii/octave), {} samples, excluded radius {:e}",
        cfg.lattice_spacing, cfg.shell_directions, cfg.shell_per_octave, cert.samples, cert.excluded_radius
    );
    let loc_scan = format!(
        "Step 1 scan over {} centers, {} samples, lattice {}",
        loc.centers, loc.samples, loc.config.lattice_spacing
    );
    let constants = ConstantsLedger {
        epsilon: named(loc.epsilon, "strictness of ρ − ε|x|² certified on the domain lattice"),
        epsilon_eff: named(loc.epsilon_eff, "ε/κ, used for λ = A/ε_eff in Step 1"),
        kappa: named(loc.kappa, format!("smallest-N passing power of two; {loc_scan}")),
        b: named(loc.b, "sup |ρ| on the domain lattice inside |x| < 2"),
        a: named(loc.a, format!("doubling + bisection from the log-model constant {}; {loc_scan}", loc.a_log)),
        lambda: named(cert.barrier.lambda, "C3/(ε|ρ(w)|)"),
        beta: named(cert.barrier.beta2.sqrt(), "β² = |ρ(w)|"),
        c0: named(cert.c0.unwrap_or(0.0), format!("inner region |x−w|²/β² ≤ 1/2; {scan}")),
        c1: named(cert.c1.unwrap_or(0.0), format!("outer region |x−w|²/β² ≥ 1; {scan}")),
        c2: named(cert.c2.unwrap_or(0.0), format!("β²·sup|∇² log ψ| on the transition; {scan}")),
        c3: named(c3, format!("β²·(smallest |x|² coefficient) over D ∩ U; {scan}")),
        n: named(loc.n, "exp(−A − AB/2ε_eff)"),
        r: named(loc.r, "tanh(N)"),
        c: named(c, "e^{−A/2} e^{−C3/2ε} r"),
        beta2_le_b: cert.beta2_le_b.unwrap_or(false),
        beta2_le_b_squared: cert.beta2_le_b_squared.unwrap_or(false),
    };
    Ok(LowerEstimate {
        value,
        constants,
        certificate: cert,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricEstimate {
    pub w: Vec<f64>,
    pub xi: Vec<f64>,
    pub rho_w: f64,
    pub upper: f64,
    pub lower: f64,
    pub upper_certificate: UpperEstimate,
    pub lower_certificate: Option<ConstantsLedger>,
    /// Why the lower side is missing, if it is.
    pub lower_diagnostic: Option<String>,
}

impl MetricEstimate {
    /// `lower ≤ upper` whenever both are finite.
    pub fn bracket_holds(&self) -> bool {
        !(self.lower.is_finite() && self.upper.is_finite()) || self.lower <= self.upper
    }
}

/// Upper and (when `loc` is given and `w` is in the certified ball) lower bounds at `(w, ξ)`.
pub fn metric_estimate(
    dom: &DomainSpec,
    w: &DVector<f64>,
    xi: &DVector<f64>,
    upper_cfg: &UpperConfig,
    loc: Option<(&Localization, &BarrierConfig)>,
) -> Result<MetricEstimate> {
    let upper = royden_upper(dom, w, xi, upper_cfg)?;
    let (lower, lower_certificate, lower_diagnostic) = match loc {
        None => (0.0, None, Some("no localization supplied".to_string())),
        Some((loc, cfg)) => match royden_lower(dom, w, xi, loc, cfg) {
            Ok(l) => (l.value, Some(l.constants), None),
            Err(e @ Error::Certificate { .. }) => return Err(e),
            Err(e) => (0.0, None, Some(e.to_string())),
        },
    };
    Ok(MetricEstimate {
        w: w.as_slice().to_vec(),
        xi: xi.as_slice().to_vec(),
        rho_w: dom.rho_at(w)?,
        upper: upper.value,
        lower,
        upper_certificate: upper,
        lower_certificate,
        lower_diagnostic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kobayashi::barrier::localize;

    #[test]
    fn plug_in_and_bracket_on_the_flat_ball() {
        // C = 0.1, ρ(w) = −0.01, |ξ| = 1 → 1.0
        assert!((0.1 * 1.0 / 0.01f64.sqrt() - 1.0).abs() < 1e-15);
        let dom = DomainSpec::euclidean_ball(3, vec![0.0; 3], 1.0).unwrap();
        let cfg = BarrierConfig {
            lattice_spacing: 0.2,
            center_spacing: 1.0,
            shell_directions: 24,
            shell_per_octave: 8,
            ..Default::default()
        };
        let loc = localize(&dom, &cfg).unwrap();
        let w = DVector::from_vec(vec![0.6, 0.3, 0.0]);
        let xi = DVector::from_vec(vec![0.0, 0.0, 2.0]);
        let est = metric_estimate(&dom, &w, &xi, &UpperConfig::default(), Some((&loc, &cfg))).unwrap();
        assert!(est.lower > 0.0 && est.bracket_holds(), "{} {}", est.lower, est.upper);
        let ledger = est.lower_certificate.unwrap();
        let direct = royden_lower(&dom, &w, &xi, &loc, &cfg).unwrap();
        assert_eq!(direct.certificate.barrier.beta2, dom.rho_at(&w).unwrap().abs());
        assert_eq!(direct.value, est.lower);
        assert!(direct.certificate.value_sup <= loc.a.exp());
        let json = serde_json::to_value(&ledger).unwrap();
        for k in ["epsilon", "B", "A", "lambda", "beta", "C0", "C1", "C2", "C3", "N", "r", "C"] {
            assert!(json.get(k).is_some(), "{k}");
        }
        // outside the certified coordinate ball there is no lower side
        let far = DomainSpec::euclidean_ball(3, vec![0.0; 3], 2.0).unwrap();
        let l = localize(&far, &cfg);
        if let Ok(l) = l {
            let r = royden_lower(&far, &DVector::from_vec(vec![1.5, 0.0, 0.0]), &xi, &l, &cfg);
            assert!(matches!(r, Err(Error::Precondition(_))));
        }
    }
}
