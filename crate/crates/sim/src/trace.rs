//! Episode traces: one CSV row per 50 Hz decision and a binary record per
//! 600 Hz actuation tick.

use std::io::{Read, Write};

use nalgebra::{Quaternion, UnitQuaternion, Vector2, Vector3};
use stagebot_core::motion::PathFrame;
use stagebot_core::reward::{RewardTerm, Termination};
use stagebot_core::robot::{JointVector, KinematicTargetState, JOINT_NAMES, NUM_JOINTS};

use crate::error::{SimError, SimResult};

pub const FAST_MAGIC: &[u8; 8] = b"SBTRACE\0";
pub const FAST_VERSION: u32 = 1;
const FAST_FIELDS: usize = 1 + 5 * NUM_JOINTS;

#[derive(Debug, Clone, PartialEq)]
pub struct SlowSample {
    pub t: f64,
    /// Mode name, `episodic:<clip>` for clips.
    pub mode: String,
    pub phi: f64,
    pub path: PathFrame,
    /// Walking command `(vx, vy, omega)`, zero otherwise.
    pub command: [f64; 3],
    pub reference: KinematicTargetState,
    pub sim: KinematicTargetState,
    pub setpoint: JointVector,
    pub action: JointVector,
    pub tau: JointVector,
    /// Weighted reward per term, in [`RewardTerm::ALL`] order.
    pub reward: [f64; RewardTerm::ALL.len()],
    pub total: f64,
    pub termination: Option<Termination>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastSample {
    pub t: f64,
    pub setpoint: JointVector,
    pub q: JointVector,
    pub qd: JointVector,
    pub tau: JointVector,
    pub tau_disturbance: JointVector,
}

fn state_columns(prefix: &str, out: &mut Vec<String>) {
    for c in ["px", "py", "pz", "qw", "qx", "qy", "qz", "vx", "vy", "vz", "wx", "wy", "wz", "contact_l", "contact_r"] {
        out.push(format!("{prefix}_{c}"));
    }
    for kind in ["q", "qd"] {
        out.extend(JOINT_NAMES.iter().map(|j| format!("{prefix}_{kind}_{j}")));
    }
}

pub fn slow_header() -> Vec<String> {
    let mut h: Vec<String> = ["t", "mode", "phi", "path_x", "path_y", "path_heading", "cmd_vx", "cmd_vy", "cmd_omega"]
        .map(String::from)
        .to_vec();
    state_columns("ref", &mut h);
    state_columns("sim", &mut h);
    for kind in ["setpoint", "action", "tau"] {
        h.extend(JOINT_NAMES.iter().map(|j| format!("{kind}_{j}")));
    }
    h.extend(RewardTerm::ALL.iter().map(|t| format!("r_{}", t.name())));
    h.push("r_total".into());
    h.push("termination".into());
    h
}

fn push_state(s: &KinematicTargetState, out: &mut Vec<String>) {
    let q = s.orientation.quaternion();
    let nums = [
        s.position.x,
        s.position.y,
        s.position.z,
        q.w,
        q.i,
        q.j,
        q.k,
        s.linear_velocity.x,
        s.linear_velocity.y,
        s.linear_velocity.z,
        s.angular_velocity.x,
        s.angular_velocity.y,
        s.angular_velocity.z,
    ];
    out.extend(nums.iter().map(f64::to_string));
    out.push((s.contact_left as u8).to_string());
    out.push((s.contact_right as u8).to_string());
    out.extend(s.q.iter().chain(s.qd.iter()).map(f64::to_string));
}

fn termination_name(t: Option<Termination>) -> &'static str {
    match t {
        None => "",
        Some(Termination::HeadGround) => "head_ground",
        Some(Termination::TorsoGround) => "torso_ground",
        Some(Termination::SelfCollision) => "self_collision",
    }
}

impl SlowSample {
    pub fn record(&self) -> Vec<String> {
        let mut r = vec![self.t.to_string(), self.mode.clone(), self.phi.to_string()];
        let head = [self.path.position.x, self.path.position.y, self.path.heading];
        r.extend(head.iter().chain(self.command.iter()).map(f64::to_string));
        push_state(&self.reference, &mut r);
        push_state(&self.sim, &mut r);
        for v in [&self.setpoint, &self.action, &self.tau] {
            r.extend(v.iter().map(f64::to_string));
        }
        r.extend(self.reward.iter().map(f64::to_string));
        r.push(self.total.to_string());
        r.push(termination_name(self.termination).into());
        r
    }
}

pub fn write_slow_csv<W: Write>(rows: &[SlowSample], w: W) -> SimResult<()> {
    let err = |source| SimError::Csv {
        what: "50 Hz trace".into(),
        source,
    };
    let mut out = csv::Writer::from_writer(w);
    out.write_record(slow_header()).map_err(err)?;
    for r in rows {
        out.write_record(r.record()).map_err(err)?;
    }
    out.flush().map_err(|e| err(e.into()))?;
    Ok(())
}

struct Cursor<'a> {
    rec: &'a csv::StringRecord,
    i: usize,
    line: u64,
}

impl<'a> Cursor<'a> {
    fn text(&mut self) -> SimResult<&'a str> {
        let rec: &'a csv::StringRecord = self.rec;
        let v = rec.get(self.i).ok_or_else(|| self.bad("row is too short"))?;
        self.i += 1;
        Ok(v)
    }

    fn num(&mut self) -> SimResult<f64> {
        let i = self.i;
        let s = self.text()?;
        s.parse().map_err(|_| self.bad(&format!("column {} is not a number: `{s}`", i + 1)))
    }

    fn flag(&mut self) -> SimResult<bool> {
        match self.text()? {
            "0" => Ok(false),
            "1" => Ok(true),
            other => Err(self.bad(&format!("expected 0 or 1, got `{other}`"))),
        }
    }

    fn joints(&mut self) -> SimResult<JointVector> {
        let mut v = JointVector::zeros();
        for x in v.iter_mut() {
            *x = self.num()?;
        }
        Ok(v)
    }

    fn vec3(&mut self) -> SimResult<Vector3<f64>> {
        Ok(Vector3::new(self.num()?, self.num()?, self.num()?))
    }

    fn state(&mut self) -> SimResult<KinematicTargetState> {
        let position = self.vec3()?;
        let (w, i, j, k) = (self.num()?, self.num()?, self.num()?, self.num()?);
        Ok(KinematicTargetState {
            position,
            // Stored quaternions are already unit; keep the bits as written.
            orientation: UnitQuaternion::new_unchecked(Quaternion::new(w, i, j, k)),
            linear_velocity: self.vec3()?,
            angular_velocity: self.vec3()?,
            contact_left: self.flag()?,
            contact_right: self.flag()?,
            q: self.joints()?,
            qd: self.joints()?,
        })
    }

    fn bad(&self, message: &str) -> SimError {
        SimError::Trace {
            what: format!("line {}", self.line),
            message: message.into(),
        }
    }
}

pub fn read_slow_csv<R: Read>(r: R) -> SimResult<Vec<SlowSample>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd
        .headers()
        .map_err(|source| SimError::Csv {
            what: "50 Hz trace".into(),
            source,
        })?
        .clone();
    if header.iter().ne(slow_header().iter().map(String::as_str)) {
        return Err(SimError::Trace {
            what: "header".into(),
            message: "columns do not match this trace format".into(),
        });
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|source| SimError::Csv {
            what: "50 Hz trace".into(),
            source,
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut c = Cursor { rec: &rec, i: 0, line };
        let t = c.num()?;
        let mode = c.text()?.to_string();
        let phi = c.num()?;
        let path = PathFrame {
            position: Vector2::new(c.num()?, c.num()?),
            heading: c.num()?,
        };
        let command = [c.num()?, c.num()?, c.num()?];
        let reference = c.state()?;
        let sim = c.state()?;
        let setpoint = c.joints()?;
        let action = c.joints()?;
        let tau = c.joints()?;
        let mut reward = [0.0; RewardTerm::ALL.len()];
        for r in reward.iter_mut() {
            *r = c.num()?;
        }
        let total = c.num()?;
        let termination = match c.text()? {
            "" => None,
            "head_ground" => Some(Termination::HeadGround),
            "torso_ground" => Some(Termination::TorsoGround),
            "self_collision" => Some(Termination::SelfCollision),
            other => return Err(c.bad(&format!("unknown termination `{other}`"))),
        };
        rows.push(SlowSample {
            t,
            mode,
            phi,
            path,
            command,
            reference,
            sim,
            setpoint,
            action,
            tau,
            reward,
            total,
            termination,
        });
    }
    Ok(rows)
}

/// Header: magic, version and joint count (u32 little endian), then one
/// record of little-endian f64 per tick: `t`, setpoint, q, qd, tau and
/// disturbance torque.
pub fn write_fast<W: Write>(rows: &[FastSample], mut w: W) -> std::io::Result<()> {
    w.write_all(FAST_MAGIC)?;
    w.write_all(&FAST_VERSION.to_le_bytes())?;
    w.write_all(&(NUM_JOINTS as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(FAST_FIELDS * 8);
    for r in rows {
        buf.clear();
        buf.extend_from_slice(&r.t.to_le_bytes());
        for v in [&r.setpoint, &r.q, &r.qd, &r.tau, &r.tau_disturbance] {
            for x in v.iter() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        w.write_all(&buf)?;
    }
    w.flush()
}

pub fn read_fast<R: Read>(mut r: R) -> SimResult<Vec<FastSample>> {
    let bad = |m: &str| SimError::Trace {
        what: "600 Hz trace".into(),
        message: m.into(),
    };
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| SimError::io("600 Hz trace", e))?;
    if bytes.len() < 16 || &bytes[..8] != FAST_MAGIC {
        return Err(bad("missing header"));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    if word(8) != FAST_VERSION || word(12) as usize != NUM_JOINTS {
        return Err(bad("unsupported version or joint count"));
    }
    let body = &bytes[16..];
    let rec = FAST_FIELDS * 8;
    if body.len() % rec != 0 {
        return Err(bad("truncated record"));
    }
    let rows = body
        .chunks_exact(rec)
        .map(|chunk| {
            let f: Vec<f64> = chunk
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                .collect();
            let jv = |k: usize| JointVector::from_column_slice(&f[1 + k * NUM_JOINTS..1 + (k + 1) * NUM_JOINTS]);
            FastSample {
                t: f[0],
                setpoint: jv(0),
                q: jv(1),
                qd: jv(2),
                tau: jv(3),
                tau_disturbance: jv(4),
            }
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use stagebot_core::reward::state_at_rest;
    use stagebot_core::robot::RobotModel;

    fn sample(x: f64) -> SlowSample {
        let mut reference = state_at_rest(&RobotModel::builtin().nominal_pose());
        reference.linear_velocity.x = x;
        reference.orientation = UnitQuaternion::from_euler_angles(0.1 * x, -0.2, x);
        let mut sim = reference.clone();
        sim.q[3] += x / 3.0;
        sim.contact_right = false;
        SlowSample {
            t: 0.02,
            mode: "episodic:bow".into(),
            phi: 1.0 / 3.0,
            path: PathFrame::new(x, -x, 0.7),
            command: [x, 0.0, -1.8],
            reference,
            sim,
            setpoint: JointVector::from_element(x / 7.0),
            action: JointVector::from_element(-x),
            tau: JointVector::from_element(1e-17),
            reward: [x; RewardTerm::ALL.len()],
            total: 27.0,
            termination: Some(Termination::SelfCollision),
        }
    }

    #[test]
    fn header_and_row_have_the_same_width() {
        assert_eq!(slow_header().len(), sample(0.3).record().len());
    }

    #[test]
    fn rejects_foreign_csv() {
        assert!(read_slow_csv("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn fast_rejects_truncation() {
        let mut buf = Vec::new();
        let z = JointVector::zeros();
        let s = FastSample { t: 0.0, setpoint: z, q: z, qd: z, tau: z, tau_disturbance: z };
        write_fast(&[s, s], &mut buf).unwrap();
        assert_eq!(read_fast(&buf[..]).unwrap().len(), 2);
        assert!(read_fast(&buf[..buf.len() - 3]).is_err());
        assert!(read_fast(&b"nonsense"[..]).is_err());
    }

    proptest! {
        #[test]
        fn slow_rows_round_trip_exactly(x in -3.0f64..3.0) {
            let rows = vec![sample(x), sample(x * 0.5)];
            let mut buf = Vec::new();
            write_slow_csv(&rows, &mut buf).unwrap();
            prop_assert_eq!(read_slow_csv(&buf[..]).unwrap(), rows);
        }

        #[test]
        fn fast_rows_round_trip_exactly(vals in prop::collection::vec(-100.0f64..100.0, 5)) {
            let jv = |k: usize| JointVector::from_fn(|i, _| vals[k] * (i as f64 + 0.1));
            let s = FastSample { t: vals[0] / 600.0, setpoint: jv(0), q: jv(1), qd: jv(2), tau: jv(3), tau_disturbance: jv(4) };
            let mut buf = Vec::new();
            write_fast(&[s], &mut buf).unwrap();
            prop_assert_eq!(read_fast(&buf[..]).unwrap(), vec![s]);
        }
    }
}
