//! Named domains available to scenarios.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::chart::metrics::PerturbedEuclidean;
use crate::chart::{Chart, ChartSpec};
use crate::error::{Error, Result};
use crate::kobayashi::DomainSpec;

#[derive(Clone, Debug, Serialize)]
pub struct RegistryEntry {
    pub key: &'static str,
    /// Constructor parameters with their defaults.
    pub parameters: Value,
    pub provenance: &'static str,
}

/// Every registered domain, in a fixed order.
pub fn registry_list() -> Vec<RegistryEntry> {
    vec![
        RegistryEntry {
            key: "euclidean-ball",
            parameters: json!({"dim": 3, "radius": 1.0}),
            provenance: "round ball with the flat metric; ρ = |x|² − r², ε = 1",
        },
        RegistryEntry {
            key: "euclidean-disc",
            parameters: json!({"radius": 1.0}),
            provenance: "unit disc in the plane; the Kobayashi distance is the Poincaré distance",
        },
        RegistryEntry {
            key: "perturbed-ball",
            parameters: json!({"dim": 3, "radius": 1.0, "amplitude": 0.05, "width": 1.0}),
            provenance: "coordinate ball in g = I + a·exp(−|x|²/w²)·P, a small C² deformation of the flat ball",
        },
        RegistryEntry {
            key: "geodesic-ball",
            parameters: json!({"dim": 3, "curvature": 1.0, "radius": 0.6}),
            provenance: "small geodesic ball about the origin of a constant-curvature chart",
        },
        RegistryEntry {
            key: "hyperbolic-ball",
            parameters: json!({"dim": 3, "radius": 0.6}),
            provenance: "geodesic ball in the constant curvature −1 model chart (non-positive sectional curvature)",
        },
    ]
}

/// Inline domain: a chart definition and a coordinate-ball radius.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineDomain {
    pub chart: ChartSpec,
    pub radius: f64,
    #[serde(default)]
    pub label: Option<String>,
}

fn get_f64(params: &Value, defaults: &Value, key: &str) -> Result<f64> {
    params
        .get(key)
        .or_else(|| defaults.get(key))
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Config(format!("parameter '{key}' must be a number")))
}

fn get_usize(params: &Value, defaults: &Value, key: &str) -> Result<usize> {
    params
        .get(key)
        .or_else(|| defaults.get(key))
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| Error::Config(format!("parameter '{key}' must be a non-negative integer")))
}

/// Builds the registered domain `key`; missing parameters take their defaults.
pub fn build_domain(key: &str, params: &Value) -> Result<DomainSpec> {
    let entry = registry_list()
        .into_iter()
        .find(|e| e.key == key)
        .ok_or_else(|| Error::Config(format!("unknown domain '{key}'")))?;
    let d = &entry.parameters;
    if let Some(obj) = params.as_object() {
        for k in obj.keys() {
            if d.get(k).is_none() {
                return Err(Error::Config(format!("domain '{key}' has no parameter '{k}'")));
            }
        }
    } else if !params.is_null() {
        return Err(Error::Config("domain parameters must be an object".into()));
    }
    let mut dom = match key {
        "euclidean-ball" => {
            let n = get_usize(params, d, "dim")?;
            DomainSpec::euclidean_ball(n, vec![0.0; n], get_f64(params, d, "radius")?)?
        }
        "euclidean-disc" => DomainSpec::euclidean_ball(2, vec![0.0; 2], get_f64(params, d, "radius")?)?,
        "perturbed-ball" => {
            let n = get_usize(params, d, "dim")?;
            let r = get_f64(params, d, "radius")?;
            let metric = PerturbedEuclidean::new(n, get_f64(params, d, "amplitude")?, vec![0.0; n], get_f64(params, d, "width")?);
            let chart = Chart::new(vec![(-1.5 * r, 1.5 * r); n], Arc::new(metric))?;
            DomainSpec::coordinate_ball("perturbed-ball", chart, r)?
        }
        "geodesic-ball" => DomainSpec::geodesic_ball(
            get_usize(params, d, "dim")?,
            get_f64(params, d, "curvature")?,
            get_f64(params, d, "radius")?,
        )?,
        "hyperbolic-ball" => DomainSpec::geodesic_ball(get_usize(params, d, "dim")?, -1.0, get_f64(params, d, "radius")?)?,
        _ => unreachable!("registry key without constructor"),
    };
    dom.label = key.to_string();
    Ok(dom)
}

pub fn build_inline(spec: &InlineDomain) -> Result<DomainSpec> {
    let chart = Chart::from_spec(&spec.chart)?;
    DomainSpec::coordinate_ball(spec.label.clone().unwrap_or_else(|| "inline".into()), chart, spec.radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn listing_is_deterministic_and_complete() {
        let keys: Vec<_> = registry_list().iter().map(|e| e.key).collect();
        assert_eq!(keys, registry_list().iter().map(|e| e.key).collect::<Vec<_>>());
        for k in ["euclidean-ball", "perturbed-ball", "hyperbolic-ball", "geodesic-ball", "euclidean-disc"] {
            assert!(keys.contains(&k));
        }
        let p = registry_list().into_iter().find(|e| e.key == "perturbed-ball").unwrap();
        assert!(p.parameters.get("amplitude").is_some());
    }

    #[test]
    fn every_entry_passes_the_domain_checks() {
        for e in registry_list() {
            let dom = build_domain(e.key, &Value::Null).unwrap();
            assert!(dom.boundary_regular, "{}", e.key);
            assert!(dom.strictness > 0.0, "{}", e.key);
            assert!(dom.contains(&dom.origin));
        }
        assert!(matches!(build_domain("nope", &Value::Null), Err(Error::Config(_))));
        assert!(matches!(build_domain("euclidean-ball", &json!({"radus": 1.0})), Err(Error::Config(_))));
        let d = build_domain("euclidean-ball", &json!({"dim": 2})).unwrap();
        assert_eq!(d.dim(), 2);
    }
}
