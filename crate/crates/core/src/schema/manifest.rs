use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SchemaError;

pub const SCHEMA_VERSION: &str = "1.0";
pub const DEFAULT_TEST_FRACTION: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectionMethod {
    Teleoperation,
    Autonomous,
    Scripted,
    Synthetic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorSkill {
    ExpertSurgeon,
    Clinician,
    Researcher,
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Environment {
    Simulation,
    BenchtopPhantom,
    ExVivo,
    InVivo,
    Clinical,
}

impl Environment {
    /// Whether scenes from this environment involve real tissue.
    pub fn is_tissue(self) -> bool {
        matches!(self, Environment::ExVivo | Environment::InVivo | Environment::Clinical)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KinematicRepresentation {
    AbsoluteCartesian,
    RelativeCartesian,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions { train: 1.0 - DEFAULT_TEST_FRACTION, test: DEFAULT_TEST_FRACTION }
    }
}

/// Typed form of the per-dataset README template.
///
/// Enumerated template fields are optional at the type level so that an
/// incomplete document still parses and the validator can name every missing
/// field instead of failing on the first one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub openh_schema: String,
    pub dataset_id: String,
    pub robot_config_id: String,
    pub collection_method: Option<CollectionMethod>,
    pub operator_skill: Option<OperatorSkill>,
    pub environment: Option<Environment>,
    #[serde(default)]
    pub sync_strategy: String,
    pub kinematic_representation: Option<KinematicRepresentation>,
    #[serde(default)]
    pub diversity_notes: String,
    pub episode_count: u64,
    pub total_seconds: f64,
    #[serde(default)]
    pub split_fractions: SplitFractions,
    /// Reserved for domain extensions whose semantics are defined elsewhere.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extensions: BTreeMap<String, serde_json::Value>,
}

impl DatasetManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        Ok(serde_json::from_str(text)?)
    }
}
