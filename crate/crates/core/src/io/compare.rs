//! Three-mode comparison from identical initial states.

use serde::{Deserialize, Serialize};

use super::{summarize_run, RunSummary};
use crate::model::{GainSet, Network, Objective};
use crate::sim::{simulate, Mode, SimConfig, SimError};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRun {
    pub x0_index: usize,
    pub event: RunSummary,
    pub continuous: RunSummary,
    pub uncontrolled: RunSummary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub seed: u64,
    pub runs: Vec<ComparisonRun>,
    /// Every run's event-triggered controller met every threshold.
    pub event_all_pass: bool,
    pub continuous_all_pass: bool,
    /// Some uncontrolled run exceeded at least one threshold.
    pub uncontrolled_exceeds: bool,
    /// Largest absolute gap between event and continuous tail peaks.
    pub max_mode_gap: f64,
}

/// Run the three controller modes from `x0_draws` seeded initial states and
/// summarize per-group outcomes.
pub fn compare_modes(
    net: &Network,
    gains: &GainSet,
    obj: &Objective,
    config: &SimConfig,
    seed: u64,
    x0_draws: usize,
    tail_fraction: f64,
) -> Result<ComparisonReport, SimError> {
    let mut runs = Vec::new();
    let mut event_all_pass = true;
    let mut continuous_all_pass = true;
    let mut uncontrolled_exceeds = false;
    let mut max_mode_gap = 0.0f64;
    for r in 0..x0_draws.max(1) {
        let x0 = super::draw_x0(seed, r, net.node_count());
        let ev = simulate(net, Some(gains), Mode::EventTriggered, &x0, config)?;
        let co = simulate(net, Some(gains), Mode::Continuous, &x0, config)?;
        let un = simulate(net, None, Mode::Uncontrolled, &x0, config)?;
        let event = summarize_run(&ev, obj, config.horizon, config.step, tail_fraction);
        let continuous = summarize_run(&co, obj, config.horizon, config.step, tail_fraction);
        let uncontrolled = summarize_run(&un, obj, config.horizon, config.step, tail_fraction);
        event_all_pass &= event.verdicts.iter().all(|&v| v);
        continuous_all_pass &= continuous.verdicts.iter().all(|&v| v);
        uncontrolled_exceeds |= uncontrolled.verdicts.iter().any(|&v| !v);
        for (a, b) in event
            .group_tail_peak
            .iter()
            .zip(continuous.group_tail_peak.iter())
        {
            max_mode_gap = max_mode_gap.max((a - b).abs());
        }
        runs.push(ComparisonRun { x0_index: r, event, continuous, uncontrolled });
    }
    Ok(ComparisonReport {
        seed,
        runs,
        event_all_pass,
        continuous_all_pass,
        uncontrolled_exceeds,
        max_mode_gap,
    })
}
