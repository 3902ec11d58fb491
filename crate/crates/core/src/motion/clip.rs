//! Motion clips: uniformly sampled frames in path coordinates, stored as a
//! small line-oriented text format.
//!
//! ```text
//! clip yes
//! category triggered
//! duration 1.2
//! sample_rate 50
//! show yes
//! fields show
//! ---
//! <px py pyaw> <tx ty tz> <qw qx qy qz> <q x14> <cl cr> [feet x8] [show x11]
//! ```
//!
//! Gait samples additionally carry `command vx vy omega` and are cyclic:
//! their frames cover `[0, duration)` instead of `[0, duration]`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::PathFrame;
use crate::animation::show::{ShowFunctionState, SHOW_DIM};
use crate::error::{Error, Result};
use crate::math::{lerp, slerp};
use crate::robot::{JointVector, NUM_JOINTS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClipCategory {
    Background,
    Triggered,
    Episodic,
    GaitSample,
}

impl ClipCategory {
    pub fn name(self) -> &'static str {
        match self {
            ClipCategory::Background => "background",
            ClipCategory::Triggered => "triggered",
            ClipCategory::Episodic => "episodic",
            ClipCategory::GaitSample => "gait-sample",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            ClipCategory::Background,
            ClipCategory::Triggered,
            ClipCategory::Episodic,
            ClipCategory::GaitSample,
        ]
        .into_iter()
        .find(|c| c.name() == s)
    }

    /// Background loops and gait cycles wrap around.
    pub fn is_cyclic(self) -> bool {
        matches!(self, ClipCategory::Background | ClipCategory::GaitSample)
    }
}

/// Ankle position and heading of one foot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootPose {
    pub position: Vector3<f64>,
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipFrame {
    /// Path frame relative to the clip start.
    pub path: PathFrame,
    /// Torso pose relative to `path`.
    pub torso_position: Vector3<f64>,
    pub torso_orientation: UnitQuaternion<f64>,
    pub q: JointVector,
    pub contacts: [bool; 2],
    /// Feet relative to `path` (gait samples).
    pub feet: Option<[FootPose; 2]>,
    pub show: Option<ShowFunctionState>,
}

impl ClipFrame {
    /// Componentwise interpolation with slerp for the torso orientation.
    /// Contacts switch at the midpoint.
    pub fn interpolate(&self, other: &ClipFrame, t: f64) -> ClipFrame {
        let feet = match (&self.feet, &other.feet) {
            (Some(a), Some(b)) => Some(std::array::from_fn(|i| FootPose {
                position: a[i].position.lerp(&b[i].position, t),
                yaw: a[i].yaw + crate::math::angle_diff(b[i].yaw, a[i].yaw) * t,
            })),
            _ => None,
        };
        let show = match (&self.show, &other.show) {
            (Some(a), Some(b)) => Some(a.blend(b, t)),
            _ => None,
        };
        ClipFrame {
            path: self.path.interpolate(&other.path, t),
            torso_position: self.torso_position.lerp(&other.torso_position, t),
            torso_orientation: slerp(&self.torso_orientation, &other.torso_orientation, t),
            q: self.q.zip_map(&other.q, |a, b| lerp(a, b, t)),
            contacts: if t < 0.5 { self.contacts } else { other.contacts },
            feet,
            show,
        }
    }
}

/// Command point and cycle length of a gait sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitTag {
    pub velocity: Vector2<f64>,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionClip {
    pub name: String,
    pub category: ClipCategory,
    /// Seconds; for gait samples, the cycle duration.
    pub duration: f64,
    pub sample_rate: f64,
    /// Show-function/audio cue id played alongside the clip.
    pub show_track: Option<String>,
    pub gait: Option<GaitTag>,
    pub frames: Vec<ClipFrame>,
}

impl MotionClip {
    pub fn is_cyclic(&self) -> bool {
        self.category.is_cyclic()
    }

    fn expected_frames(&self) -> usize {
        let n = (self.duration * self.sample_rate).round() as usize;
        if self.is_cyclic() {
            n
        } else {
            n + 1
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::config(format!("clip `{}`: {m}", self.name)));
        if self.name.is_empty() || self.name.contains(char::is_whitespace) {
            return fail("name must be a single non-empty word".into());
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return fail(format!("duration {} must be positive", self.duration));
        }
        if !(self.sample_rate > 0.0 && self.sample_rate.is_finite()) {
            return fail(format!("sample rate {} must be positive", self.sample_rate));
        }
        if self.frames.len() < 2 {
            return fail(format!("needs at least 2 frames, has {}", self.frames.len()));
        }
        let span = self.duration * self.sample_rate;
        if (span - span.round()).abs() > 1e-6 {
            return fail("duration is not a whole number of sample periods".into());
        }
        if self.frames.len() != self.expected_frames() {
            return fail(format!(
                "{} frames do not match duration {} s at {} Hz",
                self.frames.len(),
                self.duration,
                self.sample_rate
            ));
        }
        match (self.category, self.gait.is_some()) {
            (ClipCategory::GaitSample, false) => return fail("gait samples need a command tag".into()),
            (c, true) if c != ClipCategory::GaitSample => {
                return fail("only gait samples carry a command tag".into())
            }
            _ => {}
        }
        let with_feet = self.frames[0].feet.is_some();
        let with_show = self.frames[0].show.is_some();
        if self.category == ClipCategory::GaitSample && !with_feet {
            return fail("gait samples need foot poses".into());
        }
        for (i, f) in self.frames.iter().enumerate() {
            if f.feet.is_some() != with_feet || f.show.is_some() != with_show {
                return fail(format!("frame {i} has a different field layout"));
            }
            let finite = f.q.iter().all(|v| v.is_finite())
                && f.torso_position.iter().all(|v| v.is_finite())
                && f.path.position.iter().all(|v| v.is_finite());
            if !finite {
                return fail(format!("frame {i} is not finite"));
            }
            if let Some(s) = &f.show {
                if !s.is_valid() {
                    return fail(format!("frame {i} has show values out of range"));
                }
            }
        }
        Ok(())
    }

    pub fn frame_dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    /// Frame at normalized phase `phi`. Cyclic clips wrap, others clamp.
    pub fn sample(&self, phi: f64) -> ClipFrame {
        let n = self.frames.len();
        if self.is_cyclic() {
            let x = phi.rem_euclid(1.0) * n as f64;
            let i = (x.floor() as usize).min(n - 1);
            let t = x - i as f64;
            if t == 0.0 {
                return self.frames[i].clone();
            }
            self.frames[i].interpolate(&self.frames[(i + 1) % n], t)
        } else {
            let x = phi.clamp(0.0, 1.0) * (n - 1) as f64;
            let i = (x.floor() as usize).min(n - 2);
            let t = x - i as f64;
            if t == 0.0 {
                return self.frames[i].clone();
            }
            if t == 1.0 {
                return self.frames[i + 1].clone();
            }
            self.frames[i].interpolate(&self.frames[i + 1], t)
        }
    }

    /// Frame at playback time `t` seconds.
    pub fn sample_time(&self, t: f64) -> ClipFrame {
        self.sample(t / self.duration)
    }

    /// Joint velocities at each frame by central differences (one-sided at
    /// the ends of non-cyclic clips).
    pub fn joint_velocities(&self) -> Vec<JointVector> {
        let n = self.frames.len();
        let dt = self.frame_dt();
        (0..n)
            .map(|i| {
                let (a, b, h) = if self.is_cyclic() {
                    ((i + n - 1) % n, (i + 1) % n, 2.0 * dt)
                } else if i == 0 {
                    (0, 1, dt)
                } else if i == n - 1 {
                    (n - 2, n - 1, dt)
                } else {
                    (i - 1, i + 1, 2.0 * dt)
                };
                (self.frames[b].q - self.frames[a].q) / h
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "clip {}", self.name);
        let _ = writeln!(s, "category {}", self.category.name());
        let _ = writeln!(s, "duration {}", self.duration);
        let _ = writeln!(s, "sample_rate {}", self.sample_rate);
        if let Some(t) = &self.show_track {
            let _ = writeln!(s, "show {t}");
        }
        if let Some(g) = &self.gait {
            let _ = writeln!(s, "command {} {} {}", g.velocity.x, g.velocity.y, g.omega);
        }
        let mut fields = Vec::new();
        if self.frames[0].feet.is_some() {
            fields.push("feet");
        }
        if self.frames[0].show.is_some() {
            fields.push("show");
        }
        if !fields.is_empty() {
            let _ = writeln!(s, "fields {}", fields.join(" "));
        }
        s.push_str("---\n");
        for f in &self.frames {
            let mut row: Vec<f64> = vec![f.path.position.x, f.path.position.y, f.path.heading];
            row.extend(f.torso_position.iter());
            let o = f.torso_orientation.quaternion();
            row.extend([o.w, o.i, o.j, o.k]);
            row.extend(f.q.iter());
            row.extend(f.contacts.map(|c| if c { 1.0 } else { 0.0 }));
            if let Some(feet) = &f.feet {
                for p in feet {
                    row.extend(p.position.iter());
                    row.push(p.yaw);
                }
            }
            if let Some(sh) = &f.show {
                row.extend(sh.to_array());
            }
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            file: file.to_string(),
            line,
            message,
        };
        let mut header: BTreeMap<&str, (usize, Vec<&str>)> = BTreeMap::new();
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut body_start = None;
        for (n, raw) in lines.by_ref() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line == "---" {
                body_start = Some(n);
                break;
            }
            let mut parts = line.split_whitespace();
            let key = parts.next().expect("non-empty line");
            if header.insert(key, (n, parts.collect())).is_some() {
                return Err(err(n, format!("duplicate header key `{key}`")));
            }
        }
        let body_start = body_start.ok_or_else(|| err(text.lines().count().max(1), "missing `---` separator".into()))?;

        let known = ["clip", "category", "duration", "sample_rate", "show", "command", "fields"];
        for (k, (n, _)) in &header {
            if !known.contains(k) {
                return Err(err(*n, format!("unknown header key `{k}`")));
            }
        }
        let single = |key: &str| -> Result<(usize, &str)> {
            match header.get(key) {
                Some((n, v)) if v.len() == 1 => Ok((*n, v[0])),
                Some((n, _)) => Err(err(*n, format!("`{key}` takes exactly one value"))),
                None => Err(err(body_start, format!("missing header `{key}`"))),
            }
        };
        let number = |key: &str| -> Result<f64> {
            let (n, v) = single(key)?;
            v.parse().map_err(|_| err(n, format!("`{key}` value `{v}` is not a number")))
        };
        let name = single("clip")?.1.to_string();
        let (cn, cv) = single("category")?;
        let category = ClipCategory::parse(cv).ok_or_else(|| err(cn, format!("unknown category `{cv}`")))?;
        let duration = number("duration")?;
        let sample_rate = number("sample_rate")?;
        let show_track = header.contains_key("show").then(|| single("show")).transpose()?.map(|(_, v)| v.to_string());
        let gait = match header.get("command") {
            Some((n, v)) => {
                if v.len() != 3 {
                    return Err(err(*n, "`command` takes vx vy omega".into()));
                }
                let p: Vec<f64> = v
                    .iter()
                    .map(|s| s.parse().map_err(|_| err(*n, format!("`{s}` is not a number"))))
                    .collect::<Result<_>>()?;
                Some(GaitTag {
                    velocity: Vector2::new(p[0], p[1]),
                    omega: p[2],
                })
            }
            None => None,
        };
        let (mut with_feet, mut with_show) = (false, false);
        if let Some((n, v)) = header.get("fields") {
            for f in v {
                match *f {
                    "feet" => with_feet = true,
                    "show" => with_show = true,
                    other => return Err(err(*n, format!("unknown field group `{other}`"))),
                }
            }
        }

        let width = 3 + 3 + 4 + NUM_JOINTS + 2 + if with_feet { 8 } else { 0 } + if with_show { SHOW_DIM } else { 0 };
        let mut frames = Vec::new();
        for (n, raw) in lines {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|_| err(n, format!("`{s}` is not a number"))))
                .collect::<Result<_>>()?;
            if vals.len() != width {
                return Err(err(n, format!("expected {width} values, found {}", vals.len())));
            }
            if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
                return Err(err(n, format!("non-finite value {v}")));
            }
            let quat = Quaternion::new(vals[6], vals[7], vals[8], vals[9]);
            if (quat.norm() - 1.0).abs() > 1e-6 {
                return Err(err(n, format!("torso quaternion has norm {}", quat.norm())));
            }
            let mut k = 10;
            let q = JointVector::from_column_slice(&vals[k..k + NUM_JOINTS]);
            k += NUM_JOINTS;
            let mut contacts = [false; 2];
            for (c, v) in contacts.iter_mut().zip(&vals[k..k + 2]) {
                *c = match *v {
                    0.0 => false,
                    1.0 => true,
                    other => return Err(err(n, format!("contact flag must be 0 or 1, got {other}"))),
                };
            }
            k += 2;
            let feet = with_feet.then(|| {
                let f = |o: usize| FootPose {
                    position: Vector3::new(vals[o], vals[o + 1], vals[o + 2]),
                    yaw: vals[o + 3],
                };
                let r = [f(k), f(k + 4)];
                k += 8;
                r
            });
            let show = with_show.then(|| {
                let mut a = [0.0; SHOW_DIM];
                a.copy_from_slice(&vals[k..k + SHOW_DIM]);
                ShowFunctionState::from_array(&a)
            });
            if let Some(s) = &show {
                if !s.is_valid() {
                    return Err(err(n, "show values out of range".into()));
                }
            }
            frames.push(ClipFrame {
                path: PathFrame::new(vals[0], vals[1], vals[2]),
                torso_position: Vector3::new(vals[3], vals[4], vals[5]),
                torso_orientation: UnitQuaternion::new_normalize(quat),
                q,
                contacts,
                feet,
                show,
            });
        }
        let clip = MotionClip {
            name,
            category,
            duration,
            sample_rate,
            show_track,
            gait,
            frames,
        };
        clip.validate().map_err(|e| match e {
            Error::Config(m) => err(body_start, m),
            other => other,
        })?;
        Ok(clip)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// Named clips, e.g. the contents of an animation library directory.
#[derive(Debug, Clone, Default)]
pub struct ClipLibrary {
    clips: BTreeMap<String, MotionClip>,
}

impl ClipLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, clip: MotionClip) -> Option<MotionClip> {
        self.clips.insert(clip.name.clone(), clip)
    }

    /// Loads every `*.clip` file in `dir`.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut lib = Self::new();
        let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "clip"))
            .collect();
        paths.sort();
        for p in paths {
            let clip = MotionClip::load(&p)?;
            if lib.clips.contains_key(&clip.name) {
                return Err(Error::config(format!("duplicate clip name `{}` in {}", clip.name, dir.display())));
            }
            lib.insert(clip);
        }
        Ok(lib)
    }

    pub fn get(&self, name: &str) -> Option<&MotionClip> {
        self.clips.get(name)
    }

    /// Looks up a clip of the given category, listing the alternatives on
    /// failure.
    pub fn require(&self, name: &str, category: ClipCategory) -> Result<&MotionClip> {
        match self.clips.get(name) {
            Some(c) if c.category == category => Ok(c),
            _ => Err(Error::UnknownClip {
                name: name.to_string(),
                available: self.names(category).join(", "),
            }),
        }
    }

    pub fn names(&self, category: ClipCategory) -> Vec<&str> {
        self.clips
            .values()
            .filter(|c| c.category == category)
            .map(|c| c.name.as_str())
            .collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &MotionClip> {
        self.clips.values()
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }
}
