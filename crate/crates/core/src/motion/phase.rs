use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseMode {
    Periodic,
    Episodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSignal {
    pub phi: f64,
    pub rate: f64,
    pub mode: PhaseMode,
    /// Set once an episodic phase reaches 1.
    pub completed: bool,
}

impl PhaseSignal {
    pub fn periodic(phi: f64, rate: f64) -> Self {
        Self {
            phi: phi.rem_euclid(1.0),
            rate,
            mode: PhaseMode::Periodic,
            completed: false,
        }
    }

    pub fn episodic(duration: f64) -> Self {
        Self {
            phi: 0.0,
            rate: 1.0 / duration,
            mode: PhaseMode::Episodic,
            completed: false,
        }
    }

    pub fn advance(&self, dt: f64) -> Self {
        let next = self.phi + self.rate * dt;
        match self.mode {
            PhaseMode::Periodic => Self {
                phi: next.rem_euclid(1.0),
                ..*self
            },
            PhaseMode::Episodic => Self {
                phi: next.min(1.0),
                completed: self.completed || next >= 1.0,
                ..*self
            },
        }
    }
}

pub fn advance_phase(phase: &PhaseSignal, dt: f64) -> PhaseSignal {
    phase.advance(dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn periodic_wraps() {
        let p = PhaseSignal::periodic(0.9, 10.0).advance(0.02);
        assert!((p.phi - 0.1).abs() < 1e-12);
        assert!(!p.completed);
    }

    #[test]
    fn episodic_clamps_and_completes() {
        let mut p = PhaseSignal::episodic(1.0);
        p.phi = 0.95;
        p.rate = 10.0;
        let q = p.advance(0.02);
        assert_eq!(q.phi, 1.0);
        assert!(q.completed);
        assert!(q.advance(0.02).completed);
    }

    #[test]
    fn zero_rate_is_stationary() {
        let p = PhaseSignal::periodic(0.3, 0.0);
        assert_eq!(p.advance(0.02), p);
    }
}
