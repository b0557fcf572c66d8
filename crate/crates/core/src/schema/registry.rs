use std::collections::BTreeMap;
use std::sync::{Arc, RwLock};

use super::{RobotConfiguration, SchemaError};

/// Configurations keyed by `config_id`.
///
/// Reads take a shared lock; registration is serialized.
#[derive(Debug, Default)]
pub struct ConfigRegistry {
    configs: RwLock<BTreeMap<String, Arc<RobotConfiguration>>>,
}

impl ConfigRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `config`. Re-registering an identical payload is a no-op.
    pub fn register(&self, config: RobotConfiguration) -> Result<(), SchemaError> {
        let violations = config.check();
        if !violations.is_empty() {
            let joined = violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ");
            return Err(SchemaError::InvalidConfig { id: config.config_id, violations: joined });
        }
        let mut map = self.configs.write().expect("registry lock poisoned");
        match map.get(&config.config_id) {
            Some(existing) if **existing == config => Ok(()),
            Some(_) => Err(SchemaError::DuplicateConfig(config.config_id)),
            None => {
                map.insert(config.config_id.clone(), Arc::new(config));
                Ok(())
            }
        }
    }

    pub fn get(&self, config_id: &str) -> Option<Arc<RobotConfiguration>> {
        self.configs.read().expect("registry lock poisoned").get(config_id).cloned()
    }

    pub fn lookup(&self, config_id: &str) -> Result<Arc<RobotConfiguration>, SchemaError> {
        self.get(config_id).ok_or_else(|| SchemaError::UnknownConfig(config_id.to_string()))
    }

    /// All configurations, ordered by id.
    pub fn configs(&self) -> Vec<Arc<RobotConfiguration>> {
        self.configs.read().expect("registry lock poisoned").values().cloned().collect()
    }

    pub fn len(&self) -> usize {
        self.configs.read().expect("registry lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn to_json(&self) -> String {
        let list: Vec<RobotConfiguration> = self.configs().iter().map(|c| (**c).clone()).collect();
        let mut s = serde_json::to_string_pretty(&list).expect("registry serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, SchemaError> {
        let list: Vec<RobotConfiguration> = serde_json::from_str(text)?;
        let registry = Self::new();
        for config in list {
            registry.register(config)?;
        }
        Ok(registry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{CameraView, ControlSpace};

    fn config(id: &str, arms: u32) -> RobotConfiguration {
        RobotConfiguration {
            config_id: id.into(),
            platform_name: "dVRK".into(),
            arm_count: arms,
            per_arm_dof: vec![10; arms as usize],
            native_rate_hz: 30.0,
            camera_views: vec![CameraView { view_id: "endo".into(), width: 64, height: 48, channels: 3 }],
            control_space: ControlSpace::AbsoluteEef,
            gripper_native_range: [0.0, 1.2],
            extra_streams: vec![],
        }
    }

    #[test]
    fn register_and_lookup_round_trips() {
        let reg = ConfigRegistry::new();
        let c = config("dvrk", 2);
        reg.register(c.clone()).unwrap();
        assert_eq!(*reg.lookup("dvrk").unwrap(), c);
    }

    #[test]
    fn identical_re_registration_is_idempotent() {
        let reg = ConfigRegistry::new();
        reg.register(config("dvrk", 2)).unwrap();
        reg.register(config("dvrk", 2)).unwrap();
        assert_eq!(reg.len(), 1);
    }

    #[test]
    fn conflicting_payload_is_rejected() {
        let reg = ConfigRegistry::new();
        reg.register(config("dvrk", 2)).unwrap();
        assert!(matches!(reg.register(config("dvrk", 1)), Err(SchemaError::DuplicateConfig(_))));
    }

    #[test]
    fn invalid_config_is_rejected() {
        let reg = ConfigRegistry::new();
        let mut c = config("big", 5);
        c.per_arm_dof = vec![10; 5];
        assert!(matches!(reg.register(c), Err(SchemaError::InvalidConfig { .. })));
        let mut c = config("slow", 1);
        c.native_rate_hz = 0.0;
        assert!(reg.register(c).is_err());
    }

    #[test]
    fn json_round_trip() {
        let reg = ConfigRegistry::new();
        reg.register(config("a", 1)).unwrap();
        reg.register(config("b", 2)).unwrap();
        let back = ConfigRegistry::from_json(&reg.to_json()).unwrap();
        assert_eq!(back.configs(), reg.configs());
    }
}
