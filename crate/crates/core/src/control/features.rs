//! Phase feature vectors fed to the policy instead of the raw phase.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::motion::PhaseMode;

pub const HARMONIC_FEATURES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseFeatureParams {
    pub rbf_count: usize,
    /// Width of each Gaussian basis function in phase units.
    pub rbf_sigma: f64,
}

impl Default for PhaseFeatureParams {
    fn default() -> Self {
        Self {
            rbf_count: 50,
            rbf_sigma: 1.0 / 50.0,
        }
    }
}

impl PhaseFeatureParams {
    pub fn dim(&self, mode: PhaseMode) -> usize {
        match mode {
            PhaseMode::Periodic => HARMONIC_FEATURES,
            PhaseMode::Episodic => self.rbf_count,
        }
    }

    /// Center of basis function `i`, equally spaced over [0, 1].
    pub fn center(&self, i: usize) -> f64 {
        if self.rbf_count < 2 {
            0.0
        } else {
            i as f64 / (self.rbf_count - 1) as f64
        }
    }
}

/// First two harmonics for periodic phases, Gaussian bumps for episodic ones.
pub fn phase_features(phi: f64, mode: PhaseMode, params: &PhaseFeatureParams) -> Vec<f64> {
    match mode {
        PhaseMode::Periodic => {
            let a = 2.0 * PI * phi.rem_euclid(1.0);
            vec![a.sin(), a.cos(), (2.0 * a).sin(), (2.0 * a).cos()]
        }
        PhaseMode::Episodic => {
            let phi = phi.clamp(0.0, 1.0);
            let s2 = 2.0 * params.rbf_sigma * params.rbf_sigma;
            (0..params.rbf_count)
                .map(|i| (-(phi - params.center(i)).powi(2) / s2).exp())
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const P: PhaseFeatureParams = PhaseFeatureParams {
        rbf_count: 50,
        rbf_sigma: 0.02,
    };

    #[test]
    fn periodic_at_zero() {
        let f = phase_features(0.0, PhaseMode::Periodic, &P);
        assert_eq!(f, vec![0.0, 1.0, 0.0, 1.0]);
    }

    #[test]
    fn rbf_peaks_at_its_center() {
        let phi = P.center(7);
        let f = phase_features(phi, PhaseMode::Episodic, &P);
        assert_eq!(f.len(), 50);
        assert_eq!(f[7], 1.0);
        assert!(f.iter().enumerate().all(|(i, &v)| i == 7 || v < 1.0));
        // Neighbor one spacing away: exp(-(1/49)^2 / (2 * 0.02^2)).
        let d: f64 = 1.0 / 49.0;
        assert!((f[8] - (-d * d / (2.0 * 0.0004)).exp()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn half_cycle_flips_first_harmonic(phi in 0.0f64..1.0) {
            let a = phase_features(phi, PhaseMode::Periodic, &P);
            let b = phase_features(phi + 0.5, PhaseMode::Periodic, &P);
            prop_assert!((a[0] + b[0]).abs() < 1e-9 && (a[1] + b[1]).abs() < 1e-9);
            prop_assert!((a[2] - b[2]).abs() < 1e-9 && (a[3] - b[3]).abs() < 1e-9);
        }

        #[test]
        fn periodic_features_wrap(phi in -3.0f64..3.0) {
            let a = phase_features(phi, PhaseMode::Periodic, &P);
            let b = phase_features(phi.rem_euclid(1.0), PhaseMode::Periodic, &P);
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn rbf_values_in_unit_interval(phi in 0.0f64..=1.0) {
            let f = phase_features(phi, PhaseMode::Episodic, &P);
            // Far-away bumps underflow to 0; the nearest one never does.
            prop_assert!(f.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!(f.iter().cloned().fold(0.0, f64::max) > 0.5);
        }
    }
}
