//! Models, tables and motion libraries, from the bundled defaults or a
//! config root directory.
//!
//! A config root may contain any of `model.toml`, `actuators.toml`,
//! `rewards.toml`, `runtime.toml`, `disturbances.toml`, `clips/`, `gait/`
//! and `policies/`. Missing entries fall back to the bundled versions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use stagebot_core::actuator::ActuatorTable;
use stagebot_core::animation::authoring::builtin_clips;
use stagebot_core::control::{Controller, PolicyNet, Policies, RuntimeConfig};
use stagebot_core::motion::{ClipLibrary, GaitLibrary, GaitParams, VelocityLimits};
use stagebot_core::reward::RewardConfig;
use stagebot_core::robot::RobotModel;

use crate::disturbance::DisturbanceConfig;
use crate::error::{SimError, SimResult};

pub const CONFIG_ROOT_ENV: &str = "STAGEBOT_CONFIG_ROOT";

#[derive(Debug, Clone)]
pub struct Libraries {
    pub model: Arc<RobotModel>,
    pub actuators: ActuatorTable,
    pub clips: Arc<ClipLibrary>,
    pub gait: Arc<GaitLibrary>,
    pub rewards: RewardConfig,
    pub runtime: RuntimeConfig,
    pub disturbances: DisturbanceConfig,
    pub policies: Policies,
}

fn builtin_gait() -> Arc<GaitLibrary> {
    static GAIT: OnceLock<Arc<GaitLibrary>> = OnceLock::new();
    GAIT.get_or_init(|| {
        let m = RobotModel::builtin();
        Arc::new(GaitLibrary::procedural(&m, &GaitParams::default(), &VelocityLimits::default()).expect("procedural gait"))
    })
    .clone()
}

impl Libraries {
    pub fn builtin() -> Self {
        Self {
            model: Arc::new(RobotModel::builtin()),
            actuators: ActuatorTable::builtin(),
            clips: Arc::new(builtin_clips()),
            gait: builtin_gait(),
            rewards: RewardConfig::builtin(),
            runtime: RuntimeConfig::default(),
            disturbances: DisturbanceConfig::builtin(),
            policies: Policies::default(),
        }
    }

    /// `root` if given, else `$STAGEBOT_CONFIG_ROOT`, else the defaults.
    pub fn resolve(root: Option<&Path>) -> SimResult<Self> {
        match root {
            Some(r) => Self::from_root(r),
            None => match std::env::var_os(CONFIG_ROOT_ENV) {
                Some(r) if !r.is_empty() => Self::from_root(Path::new(&r)),
                _ => Ok(Self::builtin()),
            },
        }
    }

    pub fn from_root(root: &Path) -> SimResult<Self> {
        if !root.is_dir() {
            return Err(SimError::Scenario(format!("config root {} is not a directory", root.display())));
        }
        let mut libs = Self::builtin();
        let file = |name: &str| Some(root.join(name)).filter(|p| p.is_file());
        let custom_model = file("model.toml");
        if let Some(p) = &custom_model {
            libs.model = Arc::new(RobotModel::load(p)?);
        }
        if let Some(p) = file("actuators.toml") {
            libs.actuators = ActuatorTable::load(&p)?;
        }
        if let Some(p) = file("rewards.toml") {
            libs.rewards = RewardConfig::load(&p)?;
        }
        if let Some(p) = file("runtime.toml") {
            let text = std::fs::read_to_string(&p).map_err(|e| SimError::io(&p, e))?;
            libs.runtime = toml::from_str(&text).map_err(|source| stagebot_core::Error::Toml {
                what: p.display().to_string(),
                source,
            })?;
        }
        if let Some(p) = file("disturbances.toml") {
            libs.disturbances = DisturbanceConfig::load(&p)?;
        }
        let dir = |name: &str| Some(root.join(name)).filter(|p| p.is_dir());
        if let Some(d) = dir("clips") {
            libs.clips = Arc::new(ClipLibrary::load_dir(&d)?);
        }
        if let Some(d) = dir("gait") {
            libs.gait = Arc::new(GaitLibrary::load_dir(&libs.model, &d)?);
        } else if custom_model.is_some() {
            libs.gait = Arc::new(GaitLibrary::procedural(&libs.model, &GaitParams::default(), &VelocityLimits::default())?);
        }
        if let Some(d) = dir("policies") {
            libs.policies = load_policies(&d)?;
        }
        Ok(libs)
    }

    pub fn controller(&self) -> SimResult<Controller> {
        Ok(Controller::new(
            self.model.clone(),
            self.gait.clone(),
            self.clips.clone(),
            &self.actuators,
            self.runtime.clone(),
            self.policies.clone(),
        )?)
    }
}

/// `perpetual.json`, `periodic.json` and `episodic/<clip>.json`.
pub fn load_policies(dir: &Path) -> SimResult<Policies> {
    let opt = |p: PathBuf| -> SimResult<Option<PolicyNet>> {
        if p.is_file() {
            Ok(Some(PolicyNet::load(&p)?))
        } else {
            Ok(None)
        }
    };
    let mut episodic = BTreeMap::new();
    let ep = dir.join("episodic");
    if ep.is_dir() {
        let mut paths: Vec<_> = std::fs::read_dir(&ep)
            .map_err(|e| SimError::io(&ep, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for p in paths {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            episodic.insert(name, PolicyNet::load(&p)?);
        }
    }
    Ok(Policies {
        perpetual: opt(dir.join("perpetual.json"))?,
        periodic: opt(dir.join("periodic.json"))?,
        episodic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_root_equals_builtin() {
        let dir = tempfile::tempdir().unwrap();
        let libs = Libraries::from_root(dir.path()).unwrap();
        assert_eq!(libs.clips.len(), Libraries::builtin().clips.len());
        assert_eq!(libs.rewards, RewardConfig::builtin());
    }

    #[test]
    fn broken_file_in_root_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("rewards.toml"), "schema = \"nope\"").unwrap();
        let err = Libraries::from_root(dir.path()).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn missing_root_is_an_input_error() {
        let err = Libraries::from_root(Path::new("/definitely/not/here")).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
