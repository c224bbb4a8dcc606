//! Scenario configuration: strict JSON schema, one variant per scenario kind.

use std::str::FromStr;

use num_rational::BigRational;
use qpool_core::fusion::MeasureFamily;
use qpool_core::linalg::{ComplexMatrix, DensityMatrix};
use qpool_core::measurement::{KnownOutcomes, Owner};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::emit::canonical_json;
use crate::run::{build_history, diagonal_effects, prob_dist};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("field `{path}`: {message}")]
    Field { path: String, message: String },
    #[error("{0}")]
    Io(String),
}

impl ConfigError {
    fn field(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Field { path: path.into(), message: message.into() }
    }
}

/// A real parameter written either as a JSON number or as a `"p/q"` string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Param {
    Number(f64),
    Text(String),
}

impl Param {
    /// Exact value; numbers convert exactly from their binary form.
    pub fn rational(&self) -> Result<BigRational, String> {
        match self {
            Param::Number(x) => BigRational::from_float(*x).ok_or_else(|| format!("{x} is not finite")),
            Param::Text(s) => {
                let t = s.trim();
                BigRational::from_str(t)
                    .ok()
                    .or_else(|| t.parse::<f64>().ok().and_then(BigRational::from_float))
                    .ok_or_else(|| format!("cannot read {s:?} as a number or p/q ratio"))
            }
        }
    }

    pub fn value(&self) -> Result<f64, String> {
        match self {
            Param::Number(x) => Ok(*x),
            Param::Text(_) => {
                let r = self.rational()?;
                Ok(num_traits::ToPrimitive::to_f64(&r).unwrap_or(f64::NAN))
            }
        }
    }
}

/// One measurement in a history: its effects, and optionally explicit Kraus operators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub owner: Owner,
    pub povm: Vec<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kraus: Option<Vec<ComplexMatrix>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolClassical {
    #[serde(alias = "P")]
    pub p: Vec<Param>,
    #[serde(alias = "Q")]
    pub q: Vec<Param>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct History {
    pub steps: Vec<StepConfig>,
    #[serde(default)]
    pub known: KnownOutcomes,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<DensityMatrix>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Consistency {
    pub rho_a: DensityMatrix,
    pub rho_b: DensityMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Realize {
    pub rho_a: DensityMatrix,
    pub rho_b: DensityMatrix,
    pub sigma: DensityMatrix,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Ambiguity {
    pub rho_a: DensityMatrix,
    pub rho_b: DensityMatrix,
    pub sigma1: DensityMatrix,
    pub sigma2: DensityMatrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Fuse {
    pub rho_a: DensityMatrix,
    pub rho_b: DensityMatrix,
    #[serde(default)]
    pub family: MeasureFamily,
    pub n_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight_exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Estimate {
    pub alice: Vec<Param>,
    pub bob: Vec<Param>,
    /// Monte-Carlo cross-check over sampled pure states; skipped when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReproducePaper {}

/// Tagged by `kind` on the wire.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    PoolClassical(PoolClassical),
    History(History),
    Consistency(Consistency),
    Realize(Realize),
    Ambiguity(Ambiguity),
    Fuse(Fuse),
    Estimate(Estimate),
    ReproducePaper(ReproducePaper),
}

pub const KINDS: [&str; 8] =
    ["pool-classical", "history", "consistency", "realize", "ambiguity", "fuse", "estimate", "reproduce-paper"];

/// Goes through text because the streaming deserializer reports full field paths.
fn payload<T: serde::de::DeserializeOwned>(v: Value) -> Result<T, ConfigError> {
    let text = v.to_string();
    let mut de = serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let msg = e.into_inner().to_string();
        let msg = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(m, _)| m).to_string();
        ConfigError::field(path, msg)
    })
}

impl Scenario {
    pub fn kind(&self) -> &'static str {
        match self {
            Scenario::PoolClassical(_) => KINDS[0],
            Scenario::History(_) => KINDS[1],
            Scenario::Consistency(_) => KINDS[2],
            Scenario::Realize(_) => KINDS[3],
            Scenario::Ambiguity(_) => KINDS[4],
            Scenario::Fuse(_) => KINDS[5],
            Scenario::Estimate(_) => KINDS[6],
            Scenario::ReproducePaper(_) => KINDS[7],
        }
    }

    /// Reads the `kind` tag, then the payload with field paths kept for diagnostics.
    pub fn from_value(mut v: Value) -> Result<Self, ConfigError> {
        let obj = v.as_object_mut().ok_or_else(|| ConfigError::field(".", "expected a JSON object"))?;
        let kind = match obj.remove("kind") {
            Some(Value::String(k)) => k,
            Some(_) => return Err(ConfigError::field("kind", "expected a string")),
            None => return Err(ConfigError::field("kind", "missing")),
        };
        Ok(match kind.as_str() {
            "pool-classical" => Scenario::PoolClassical(payload(v)?),
            "history" => Scenario::History(payload(v)?),
            "consistency" => Scenario::Consistency(payload(v)?),
            "realize" => Scenario::Realize(payload(v)?),
            "ambiguity" => Scenario::Ambiguity(payload(v)?),
            "fuse" => Scenario::Fuse(payload(v)?),
            "estimate" => Scenario::Estimate(payload(v)?),
            "reproduce-paper" => Scenario::ReproducePaper(payload(v)?),
            other => {
                return Err(ConfigError::field("kind", format!("unknown kind `{other}`, expected one of {}", KINDS.join(", "))))
            }
        })
    }
}

/// A scenario plus the top-level seed shared by every kind.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub seed: Option<u64>,
    pub scenario: Scenario,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario) -> Self {
        Self { seed: None, scenario }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| ConfigError::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_value(value)
    }

    pub fn from_value(mut value: Value) -> Result<Self, ConfigError> {
        let obj = value.as_object_mut().ok_or_else(|| ConfigError::field(".", "expected a JSON object"))?;
        let seed = match obj.remove("seed") {
            None | Some(Value::Null) => None,
            Some(v) => Some(v.as_u64().ok_or_else(|| ConfigError::field("seed", "expected a non-negative integer"))?),
        };
        let scenario = Scenario::from_value(value)?;
        let cfg = Self { seed, scenario };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_value(&self) -> Value {
        let mut v = serde_json::to_value(&self.scenario).expect("scenario serializes");
        if let (Some(seed), Some(obj)) = (self.seed, v.as_object_mut()) {
            obj.insert("seed".into(), Value::from(seed));
        }
        v
    }

    /// Canonical JSON; parses back to an equal config.
    pub fn to_json(&self) -> String {
        canonical_json(&self.to_value())
    }

    /// Kind-specific checks that the schema alone cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let params = |name: &str, ps: &[Param]| -> Result<(), ConfigError> {
            for (i, p) in ps.iter().enumerate() {
                p.rational().map_err(|m| ConfigError::field(format!("{name}[{i}]"), m))?;
            }
            Ok(())
        };
        match &self.scenario {
            Scenario::PoolClassical(PoolClassical { p, q }) => {
                params("p", p)?;
                params("q", q)?;
                if p.len() != q.len() || p.is_empty() {
                    return Err(ConfigError::field("q", "p and q must be non-empty and equally long"));
                }
                prob_dist("p", p)?;
                prob_dist("q", q)?;
            }
            Scenario::History(History { steps, .. }) => {
                if steps.is_empty() {
                    return Err(ConfigError::field("steps", "at least one step is required"));
                }
                for (i, s) in steps.iter().enumerate() {
                    if let Some(k) = &s.kraus {
                        if k.len() != s.povm.len() {
                            return Err(ConfigError::field(
                                format!("steps[{i}].kraus"),
                                "one Kraus operator per effect is required",
                            ));
                        }
                    }
                }
                build_history(steps)?;
            }
            Scenario::Realize(Realize { alpha, beta, .. }) => {
                for (name, w) in [("alpha", alpha), ("beta", beta)] {
                    if w.is_some_and(|w| !(w > 0.0 && w <= 1.0)) {
                        return Err(ConfigError::field(name, "must lie in (0, 1]"));
                    }
                }
            }
            Scenario::Consistency(Consistency { tolerance: Some(t), .. }) if t.is_nan() || *t <= 0.0 => {
                return Err(ConfigError::field("tolerance", "must be positive"));
            }
            Scenario::Fuse(Fuse { n_samples, weight_exponent, .. }) => {
                if *n_samples == 0 {
                    return Err(ConfigError::field("nSamples", "must be at least 1"));
                }
                if weight_exponent.is_some_and(|w| !w.is_finite()) {
                    return Err(ConfigError::field("weightExponent", "must be finite"));
                }
            }
            Scenario::Estimate(Estimate { alice, bob, n_samples }) => {
                diagonal_effects("alice", alice)?;
                diagonal_effects("bob", bob)?;
                if *n_samples == Some(0) {
                    return Err(ConfigError::field("nSamples", "must be at least 1"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_accepts_aliases_and_ratios() {
        let cfg = ScenarioConfig::from_json(r#"{"kind":"pool-classical","P":[0.5,0.5],"Q":["1/3","2/3"]}"#).unwrap();
        match &cfg.scenario {
            Scenario::PoolClassical(PoolClassical { q, .. }) => {
                assert_eq!(q[0].rational().unwrap(), BigRational::new(1.into(), 3.into()));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(cfg.seed, None);
    }

    #[test]
    fn unknown_fields_rejected_with_path() {
        let err = ScenarioConfig::from_json(r#"{"kind":"reproduce-paper","extra":1}"#).unwrap_err();
        assert!(matches!(err, ConfigError::Field { .. }), "{err}");
        let err = ScenarioConfig::from_json(
            r#"{"kind":"history","steps":[{"owner":"alice","povm":[[[[1,0]]]],"colour":1}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("steps[0]"), "{err}");
    }

    #[test]
    fn syntax_error_reports_line() {
        let err = ScenarioConfig::from_json("{\n\"kind\": }").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }), "{err}");
    }

    #[test]
    fn bad_ratio_and_seed_rejected() {
        assert!(ScenarioConfig::from_json(r#"{"kind":"estimate","alice":["x/2"],"bob":[]}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"kind":"reproduce-paper","seed":-1}"#).is_err());
        assert!(ScenarioConfig::from_json(r#"{"kind":"nonsense"}"#).is_err());
    }

    #[test]
    fn density_literals_are_validated() {
        let err = ScenarioConfig::from_json(
            r#"{"kind":"consistency","rhoA":[[[1,0],[0,0]],[[0,0],[1,0]]],"rhoB":[[[1,0],[0,0]],[[0,0],[0,0]]]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("rhoA"), "{err}");
    }

    #[test]
    fn round_trip_keeps_seed() {
        let mut cfg = ScenarioConfig::new(Scenario::Estimate(Estimate {
            alice: vec![Param::Text("1/2".into()), Param::Number(0.75)],
            bob: vec![],
            n_samples: Some(10),
        }));
        cfg.seed = Some(9);
        assert_eq!(ScenarioConfig::from_json(&cfg.to_json()).unwrap(), cfg);
    }
}
