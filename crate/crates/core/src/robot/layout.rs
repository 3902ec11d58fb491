//! Joint layout and the model file that defines it.

use std::collections::HashMap;
use std::ops::Range;
use std::path::Path;

use nalgebra::{Isometry3, SVector, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{iso, rpy_rotation};

pub const NUM_JOINTS: usize = 14;
pub type JointVector = SVector<f64, NUM_JOINTS>;

pub const JOINT_NAMES: [&str; NUM_JOINTS] = [
    "L_HY", "L_HR", "L_HP", "L_KP", "L_AP", "R_HY", "R_HR", "R_HP", "R_KP", "R_AP", "NY", "NR",
    "NP", "NF",
];

pub const LEG_JOINTS: Range<usize> = 0..10;
pub const NECK_JOINTS: Range<usize> = 10..14;

pub const MODEL_SCHEMA: &str = "stagebot-model/1";

/// Joint indices in the canonical joint vector.
pub mod idx {
    pub const L_HY: usize = 0;
    pub const L_HR: usize = 1;
    pub const L_HP: usize = 2;
    pub const L_KP: usize = 3;
    pub const L_AP: usize = 4;
    pub const R_HY: usize = 5;
    pub const R_HR: usize = 6;
    pub const R_HP: usize = 7;
    pub const R_KP: usize = 8;
    pub const R_AP: usize = 9;
    pub const NY: usize = 10;
    pub const NR: usize = 11;
    pub const NP: usize = 12;
    pub const NF: usize = 13;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActuatorType {
    A1,
    Go1,
    XH540,
}

impl ActuatorType {
    pub const ALL: [ActuatorType; 3] = [ActuatorType::A1, ActuatorType::Go1, ActuatorType::XH540];

    pub fn name(self) -> &'static str {
        match self {
            ActuatorType::A1 => "A1",
            ActuatorType::Go1 => "Go1",
            ActuatorType::XH540 => "XH540",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    /// First joint index of this leg.
    pub fn offset(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 5,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Link {
    pub name: String,
    pub mass: f64,
    pub com: Vector3<f64>,
}

#[derive(Debug, Clone)]
pub struct Joint {
    pub name: String,
    pub parent: usize,
    pub child: usize,
    pub origin: Isometry3<f64>,
    pub axis: Unit<Vector3<f64>>,
    pub lower: f64,
    pub upper: f64,
    pub actuator: ActuatorType,
}

#[derive(Debug, Clone)]
pub struct SphereProxy {
    pub link: usize,
    pub center: Vector3<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone)]
pub struct BoxProxy {
    pub link: usize,
    pub center: Vector3<f64>,
    pub half_extents: Vector3<f64>,
}

/// Validated kinematic tree: links, the 14 joints in canonical order, and
/// collision proxies.
#[derive(Debug, Clone)]
pub struct JointLayout {
    pub links: Vec<Link>,
    pub joints: Vec<Joint>,
    pub root: usize,
    /// Joint indices ordered so that every parent link is posed before use.
    pub fk_order: Vec<usize>,
    pub head_sphere: SphereProxy,
    pub torso_box: BoxProxy,
    pub nominal_leg_length: f64,
    pub ankle_height: f64,
    pub nominal_neck_forward: f64,
    pub approximate: bool,
}

#[derive(Debug, Deserialize)]
struct ModelFile {
    schema: String,
    #[serde(default)]
    approximate: bool,
    nominal_leg_length: f64,
    ankle_height: f64,
    nominal_neck_forward: f64,
    links: Vec<LinkEntry>,
    joints: Vec<JointEntry>,
    proxies: ProxyEntries,
}

#[derive(Debug, Deserialize)]
struct LinkEntry {
    name: String,
    mass: f64,
    com: [f64; 3],
}

#[derive(Debug, Deserialize)]
struct JointEntry {
    name: String,
    parent: String,
    child: String,
    origin_xyz: [f64; 3],
    #[serde(default)]
    origin_rpy: [f64; 3],
    axis: [f64; 3],
    limits: [f64; 2],
    actuator: ActuatorType,
}

#[derive(Debug, Deserialize)]
struct ProxyEntries {
    head_sphere: SphereEntry,
    torso_box: BoxEntry,
}

#[derive(Debug, Deserialize)]
struct SphereEntry {
    link: String,
    center: [f64; 3],
    radius: f64,
}

#[derive(Debug, Deserialize)]
struct BoxEntry {
    link: String,
    center: [f64; 3],
    half_extents: [f64; 3],
}

pub const DEFAULT_MODEL: &str = include_str!("../../assets/model.toml");

impl JointLayout {
    pub fn builtin() -> Self {
        Self::from_toml_str(DEFAULT_MODEL).expect("bundled model file is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let file: ModelFile = toml::from_str(text).map_err(|source| Error::Toml {
            what: "model file".into(),
            source,
        })?;
        Self::from_file(file)
    }

    fn from_file(file: ModelFile) -> Result<Self> {
        if file.schema != MODEL_SCHEMA {
            return Err(Error::config(format!(
                "unsupported model schema `{}` (expected `{MODEL_SCHEMA}`)",
                file.schema
            )));
        }
        let mut link_index = HashMap::new();
        let mut links = Vec::with_capacity(file.links.len());
        for l in file.links {
            if l.mass < 0.0 || !l.mass.is_finite() {
                return Err(Error::config(format!("link `{}` has invalid mass", l.name)));
            }
            if link_index.insert(l.name.clone(), links.len()).is_some() {
                return Err(Error::config(format!("duplicate link `{}`", l.name)));
            }
            links.push(Link {
                name: l.name,
                mass: l.mass,
                com: Vector3::from(l.com),
            });
        }
        let lookup = |name: &str| -> Result<usize> {
            link_index
                .get(name)
                .copied()
                .ok_or_else(|| Error::config(format!("unknown link `{name}`")))
        };

        if file.joints.len() != NUM_JOINTS {
            return Err(Error::config(format!(
                "expected {NUM_JOINTS} joints, found {}",
                file.joints.len()
            )));
        }
        let mut slots: Vec<Option<Joint>> = vec![None; NUM_JOINTS];
        for j in file.joints {
            let slot = JOINT_NAMES
                .iter()
                .position(|n| *n == j.name)
                .ok_or_else(|| Error::config(format!("unknown joint name `{}`", j.name)))?;
            if slots[slot].is_some() {
                return Err(Error::config(format!("duplicate joint `{}`", j.name)));
            }
            let axis = Vector3::from(j.axis);
            if axis.norm() < 1e-9 {
                return Err(Error::config(format!("joint `{}` has a zero axis", j.name)));
            }
            if !(j.limits[0] < j.limits[1]) {
                return Err(Error::config(format!("joint `{}` has empty limits", j.name)));
            }
            slots[slot] = Some(Joint {
                parent: lookup(&j.parent)?,
                child: lookup(&j.child)?,
                origin: iso(Vector3::from(j.origin_xyz), rpy_rotation(j.origin_rpy)),
                axis: Unit::new_normalize(axis),
                lower: j.limits[0],
                upper: j.limits[1],
                actuator: j.actuator,
                name: j.name,
            });
        }
        let joints: Vec<Joint> = slots.into_iter().map(|j| j.expect("all slots filled")).collect();

        let mut child_of = vec![None; links.len()];
        for (i, j) in joints.iter().enumerate() {
            if child_of[j.child].replace(i).is_some() {
                return Err(Error::config(format!(
                    "link `{}` is the child of more than one joint",
                    links[j.child].name
                )));
            }
        }
        let used: Vec<bool> = (0..links.len())
            .map(|l| child_of[l].is_some() || joints.iter().any(|j| j.parent == l))
            .collect();
        if let Some(l) = used.iter().position(|u| !u) {
            return Err(Error::config(format!("link `{}` is not attached to any joint", links[l].name)));
        }
        let roots: Vec<usize> = (0..links.len()).filter(|&l| child_of[l].is_none()).collect();
        if roots.len() != 1 || links[roots[0]].name != "torso" {
            return Err(Error::config("the kinematic tree must have `torso` as its only root"));
        }
        let root = roots[0];

        // Topological order; a cycle leaves joints unplaced.
        let mut posed = vec![false; links.len()];
        posed[root] = true;
        let mut fk_order = Vec::with_capacity(NUM_JOINTS);
        while fk_order.len() < NUM_JOINTS {
            let before = fk_order.len();
            for (i, j) in joints.iter().enumerate() {
                if !fk_order.contains(&i) && posed[j.parent] {
                    posed[j.child] = true;
                    fk_order.push(i);
                }
            }
            if fk_order.len() == before {
                return Err(Error::config("joint tree contains a cycle"));
            }
        }

        for (i, j) in joints.iter().enumerate() {
            let expect_leg = LEG_JOINTS.contains(&i);
            let ok = match j.name.as_str() {
                "NY" | "NR" | "NP" => j.actuator == ActuatorType::XH540,
                _ if expect_leg => matches!(j.actuator, ActuatorType::A1 | ActuatorType::Go1),
                _ => true,
            };
            if !ok {
                return Err(Error::config(format!(
                    "joint `{}` has actuator {:?}, which does not match its torque class",
                    j.name, j.actuator
                )));
            }
        }

        let sphere = &file.proxies.head_sphere;
        let boxp = &file.proxies.torso_box;
        if sphere.radius <= 0.0 || boxp.half_extents.iter().any(|h| *h <= 0.0) {
            return Err(Error::config("collision proxies must have positive size"));
        }
        if file.nominal_leg_length <= 0.0 || file.ankle_height < 0.0 {
            return Err(Error::config("leg dimensions must be positive"));
        }

        let layout = JointLayout {
            head_sphere: SphereProxy {
                link: lookup(&sphere.link)?,
                center: Vector3::from(sphere.center),
                radius: sphere.radius,
            },
            torso_box: BoxProxy {
                link: lookup(&boxp.link)?,
                center: Vector3::from(boxp.center),
                half_extents: Vector3::from(boxp.half_extents),
            },
            links,
            joints,
            root,
            fk_order,
            nominal_leg_length: file.nominal_leg_length,
            ankle_height: file.ankle_height,
            nominal_neck_forward: file.nominal_neck_forward,
            approximate: file.approximate,
        };
        layout.check_ik_structure()?;
        Ok(layout)
    }

    /// The closed-form leg and neck solvers assume intersecting hip axes
    /// (z, x, y), parallel pitch axes, and a spherical head wrist.
    fn check_ik_structure(&self) -> Result<()> {
        let axis_is = |i: usize, v: Vector3<f64>| (self.joints[i].axis.into_inner() - v).norm() < 1e-9;
        let origin_zero = |i: usize| self.joints[i].origin.translation.vector.norm() < 1e-12;
        let no_rot = |i: usize| self.joints[i].origin.rotation.angle() < 1e-12;
        let x = Vector3::x();
        let y = Vector3::y();
        let z = Vector3::z();
        for side in Side::BOTH {
            let o = side.offset();
            let down = |i: usize| {
                let t = self.joints[i].origin.translation.vector;
                t.x.abs() < 1e-12 && t.y.abs() < 1e-12 && t.z < 0.0
            };
            let ok = axis_is(o, z)
                && axis_is(o + 1, x)
                && axis_is(o + 2, y)
                && axis_is(o + 3, y)
                && axis_is(o + 4, y)
                && origin_zero(o + 1)
                && origin_zero(o + 2)
                && down(o + 3)
                && down(o + 4)
                && (o..o + 5).all(no_rot);
            if !ok {
                return Err(Error::config(
                    "leg joints must be hip yaw(z)/roll(x)/pitch(y) intersecting, then knee and ankle pitch(y) along -z",
                ));
            }
        }
        let up = self.joints[idx::NY].origin.translation.vector;
        let ok = axis_is(idx::NF, y)
            && axis_is(idx::NY, z)
            && axis_is(idx::NR, x)
            && axis_is(idx::NP, y)
            && up.x.abs() < 1e-12
            && up.y.abs() < 1e-12
            && up.z > 0.0
            && origin_zero(idx::NR)
            && origin_zero(idx::NP)
            && [idx::NR, idx::NP, idx::NF].into_iter().all(no_rot)
            && self.neck_wrist_tilt().is_some()
            && self.joints[idx::NF].parent == self.root
            && self.joints[idx::NY].parent == self.joints[idx::NF].child
            && self.joints[idx::NR].parent == self.joints[idx::NY].child
            && self.joints[idx::NP].parent == self.joints[idx::NR].child;
        if !ok {
            return Err(Error::config(
                "neck must be NF(y) at the torso, a straight link, then a NY(z)/NR(x)/NP(y) wrist",
            ));
        }
        Ok(())
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    pub fn joint_index(name: &str) -> Option<usize> {
        JOINT_NAMES.iter().position(|n| *n == name)
    }

    pub fn lower_limits(&self) -> JointVector {
        JointVector::from_iterator(self.joints.iter().map(|j| j.lower))
    }

    pub fn upper_limits(&self) -> JointVector {
        JointVector::from_iterator(self.joints.iter().map(|j| j.upper))
    }

    pub fn actuator_types(&self) -> [ActuatorType; NUM_JOINTS] {
        std::array::from_fn(|i| self.joints[i].actuator)
    }

    /// Leg link lengths (hip-to-knee, knee-to-ankle).
    pub fn leg_lengths(&self) -> (f64, f64) {
        (
            -self.joints[idx::L_KP].origin.translation.vector.z,
            -self.joints[idx::L_AP].origin.translation.vector.z,
        )
    }

    pub fn hip_offset(&self, side: Side) -> Vector3<f64> {
        self.joints[side.offset()].origin.translation.vector
    }

    pub fn neck_base(&self) -> Vector3<f64> {
        self.joints[idx::NF].origin.translation.vector
    }

    /// Fixed pitch of the head wrist relative to the neck link.
    pub fn neck_wrist_tilt(&self) -> Option<f64> {
        let r = self.joints[idx::NY].origin.rotation;
        if r.angle() < 1e-12 {
            return Some(0.0);
        }
        let axis = r.axis()?;
        (axis.x.abs() < 1e-9 && axis.z.abs() < 1e-9).then(|| r.angle() * axis.y.signum())
    }

    pub fn neck_length(&self) -> f64 {
        self.joints[idx::NY].origin.translation.vector.z
    }
}
