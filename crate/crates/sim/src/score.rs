//! Re-evaluates rewards on a recorded 50 Hz trace.

use std::io::Write;

use stagebot_core::actuator::ACTUATION_DT;
use stagebot_core::control::TICKS_PER_ACTION;
use stagebot_core::reward::{evaluate, RewardBreakdown, RewardConfig, RewardInputs, RewardTerm};
use stagebot_core::robot::{JointVector, RobotModel};

use crate::error::{SimError, SimResult};
use crate::trace::SlowSample;

/// Backward difference of joint velocity between decisions; zero on the
/// first one.
pub fn decision_acceleration(qd: &JointVector, prev: Option<&JointVector>) -> JointVector {
    match prev {
        Some(p) => (qd - p) * (1.0 / (TICKS_PER_ACTION as f64 * ACTUATION_DT)),
        None => JointVector::zeros(),
    }
}

#[derive(Debug, Clone)]
pub struct ScoreReport {
    pub rows: Vec<RewardBreakdown>,
    pub means: Vec<(RewardTerm, f64)>,
    pub total_mean: f64,
    /// Largest difference between a recomputed and a recorded total.
    pub max_deviation: f64,
    pub terminations: usize,
}

/// Scores every row. Actions before the first row repeat the first one,
/// as during recording.
pub fn score_trace(model: &RobotModel, rewards: &RewardConfig, rows: &[SlowSample]) -> ScoreReport {
    let mut out = Vec::with_capacity(rows.len());
    let mut max_deviation: f64 = 0.0;
    let mut terminations = 0;
    for (k, row) in rows.iter().enumerate() {
        let qdd = decision_acceleration(&row.sim.qd, k.checked_sub(1).map(|p| &rows[p].sim.qd));
        let a = |back: usize| &rows[k.saturating_sub(back)].action;
        let inputs = RewardInputs {
            sim: &row.sim,
            target: &row.reference,
            tau: &row.tau,
            qdd: &qdd,
            actions: [a(0), a(1), a(2)],
        };
        let (b, term) = evaluate(model, &inputs, rewards, row.phi);
        terminations += term.is_some() as usize;
        max_deviation = max_deviation.max((b.total - row.total).abs());
        out.push(b);
    }
    let n = out.len().max(1) as f64;
    let means = RewardTerm::ALL
        .iter()
        .map(|&t| (t, out.iter().map(|b| b.get(t).map_or(0.0, |v| v.weighted)).sum::<f64>() / n))
        .collect();
    ScoreReport {
        total_mean: out.iter().map(|b| b.total).sum::<f64>() / n,
        rows: out,
        means,
        max_deviation,
        terminations,
    }
}

/// Per-row weighted terms with the row time in front.
pub fn write_score_csv<W: Write>(report: &ScoreReport, rows: &[SlowSample], w: W) -> SimResult<()> {
    let err = |source: csv::Error| SimError::Csv {
        what: "score".into(),
        source,
    };
    let mut out = csv::Writer::from_writer(w);
    let header = format!("t,{}", RewardBreakdown::csv_header());
    out.write_record(header.split(',')).map_err(err)?;
    for (row, b) in rows.iter().zip(&report.rows) {
        let line = format!("{},{}", row.t, b.csv_row());
        out.write_record(line.split(',')).map_err(err)?;
    }
    out.flush().map_err(|e| err(e.into()))?;
    Ok(())
}
