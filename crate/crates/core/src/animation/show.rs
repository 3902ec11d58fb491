use serde::{Deserialize, Serialize};

use crate::math::lerp;

/// Antenna travel, symmetric about zero.
pub const ANTENNA_LIMIT: f64 = 1.2;

pub const SHOW_DIM: usize = 11;

/// Non-dynamic expressive outputs: antennas, eyes and head lamp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShowFunctionState {
    /// Left, right (rad).
    pub antennas: [f64; 2],
    /// Linear RGB per eye, components in [0, 1].
    pub eye_color: [[f64; 3]; 2],
    /// Fraction of the full eye radius.
    pub eye_radius: [f64; 2],
    pub lamp: f64,
}

impl Default for ShowFunctionState {
    fn default() -> Self {
        Self::NEUTRAL
    }
}

impl ShowFunctionState {
    pub const NEUTRAL: ShowFunctionState = ShowFunctionState {
        antennas: [0.0, 0.0],
        eye_color: [[0.35, 0.75, 1.0], [0.35, 0.75, 1.0]],
        eye_radius: [0.8, 0.8],
        lamp: 0.0,
    };

    pub fn to_array(&self) -> [f64; SHOW_DIM] {
        let [l, r] = self.eye_color;
        [
            self.antennas[0],
            self.antennas[1],
            l[0],
            l[1],
            l[2],
            r[0],
            r[1],
            r[2],
            self.eye_radius[0],
            self.eye_radius[1],
            self.lamp,
        ]
    }

    pub fn from_array(a: &[f64; SHOW_DIM]) -> Self {
        Self {
            antennas: [a[0], a[1]],
            eye_color: [[a[2], a[3], a[4]], [a[5], a[6], a[7]]],
            eye_radius: [a[8], a[9]],
            lamp: a[10],
        }
    }

    /// `(1 - w) self + w other`, componentwise.
    pub fn blend(&self, other: &Self, w: f64) -> Self {
        let (a, b) = (self.to_array(), other.to_array());
        Self::from_array(&std::array::from_fn(|i| lerp(a[i], b[i], w)))
    }

    pub fn clamped(&self) -> Self {
        let mut a = self.to_array();
        for (i, v) in a.iter_mut().enumerate() {
            *v = if i < 2 {
                v.clamp(-ANTENNA_LIMIT, ANTENNA_LIMIT)
            } else {
                v.clamp(0.0, 1.0)
            };
        }
        Self::from_array(&a)
    }

    pub fn is_valid(&self) -> bool {
        let a = self.to_array();
        a.iter().all(|v| v.is_finite())
            && a[..2].iter().all(|v| v.abs() <= ANTENNA_LIMIT)
            && a[2..].iter().all(|v| (0.0..=1.0).contains(v))
    }
}
