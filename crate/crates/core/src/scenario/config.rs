use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    MpshCheck,
    SolveDisc,
    Kobayashi,
    Distance,
    BallProbe,
    BoundaryScan,
    Hyperbolicity,
    HolderProbe,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::MpshCheck,
        Experiment::SolveDisc,
        Experiment::Kobayashi,
        Experiment::Distance,
        Experiment::BallProbe,
        Experiment::BoundaryScan,
        Experiment::Hyperbolicity,
        Experiment::HolderProbe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::MpshCheck => "mpsh-check",
            Experiment::SolveDisc => "solve-disc",
            Experiment::Kobayashi => "kobayashi",
            Experiment::Distance => "distance",
            Experiment::BallProbe => "ball-probe",
            Experiment::BoundaryScan => "boundary-scan",
            Experiment::Hyperbolicity => "hyperbolicity",
            Experiment::HolderProbe => "holder-probe",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Registry key with optional constructor parameters, or an inline chart and radius.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DomainRef {
    Key(String),
    Registry {
        key: String,
        #[serde(default)]
        params: Value,
    },
    Inline(Value),
}

impl Default for DomainRef {
    fn default() -> Self {
        DomainRef::Key("euclidean-ball".into())
    }
}

/// One experiment run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub domain_ref: DomainRef,
    pub experiment: Experiment,
    /// Experiment-specific settings; unknown keys are rejected when the run starts.
    #[serde(default)]
    pub parameters: Value,
    #[serde(default)]
    pub seed: u64,
    /// `(N_r, N_θ)` of the experiment's disc grid, when it has one.
    #[serde(default)]
    pub resolution: Option<(usize, usize)>,
}

fn default_name() -> String {
    "scenario".into()
}

impl Scenario {
    pub fn new(experiment: Experiment) -> Self {
        Scenario {
            name: default_name(),
            domain_ref: DomainRef::default(),
            experiment,
            parameters: Value::Null,
            seed: 0,
            resolution: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("scenario: {e}")))
    }

    /// Reads a scenario file; `experiment` may be omitted when `fallback` is given.
    pub fn from_file(path: &Path, fallback: Option<Experiment>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut v: Value = serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let (Some(obj), Some(exp)) = (v.as_object_mut(), fallback) {
            match obj.get("experiment") {
                None => {
                    obj.insert("experiment".into(), serde_json::to_value(exp)?);
                }
                Some(given) if given != &serde_json::to_value(exp)? => {
                    return Err(Error::Config(format!("config experiment {given} does not match subcommand '{exp}'")));
                }
                Some(_) => {}
            }
        }
        serde_json::from_value(v).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn config_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_hashes_deterministically() {
        let s = Scenario::from_json(r#"{"experiment": "boundary-scan", "seed": 4, "parameters": {"mode": "normal"}}"#).unwrap();
        assert_eq!(s.experiment, Experiment::BoundaryScan);
        assert_eq!(s.domain_ref, DomainRef::Key("euclidean-ball".into()));
        assert_eq!(s.config_hash(), s.clone().config_hash());
        assert_eq!(s.config_hash().len(), 64);
        let mut t = s.clone();
        t.seed = 5;
        assert_ne!(s.config_hash(), t.config_hash());
        let r = Scenario::from_json(r#"{"experiment": "distance", "domain_ref": {"key": "perturbed-ball", "params": {"amplitude": 0.1}}}"#).unwrap();
        assert!(matches!(r.domain_ref, DomainRef::Registry { .. }));
        assert!(Scenario::from_json(r#"{"experiment": "nope"}"#).is_err());
        assert!(Scenario::from_json(r#"{"experiment": "distance", "sede": 1}"#).is_err());
        for e in Experiment::ALL {
            assert_eq!(serde_json::to_value(e).unwrap(), Value::String(e.name().into()));
        }
    }
}
