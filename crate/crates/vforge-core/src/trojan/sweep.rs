//! Trigger-avoidance sweeps over a hardened bundle: enumerate rare
//! combinational triggers in the reference variant's window and measure how
//! many reactivate in each later variant's window (its trailing compare
//! code included).
//!
//! The reference window comes from a clean bundle run. Escalation variants
//! never execute on a clean run, so their windows come from a second run
//! with a forced-escalation Trojan that corrupts only the reference
//! variant's output cursor, leaving every other variant's trace untouched.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use crate::harness::{run_bundle_traced, HardenedBundle, RunVerdict};

use super::scenario::{forced_escalation_trojan, ScenarioError};
use super::tar::{tar, TarEntry};
use super::trace::NetTraceMatrix;
use super::trigger::{enumerate_triggers, TriggerError};

/// Sweep parameters: trigger widths, SP bands as `(sp_min, sp_max)`, the
/// per-enumeration subset cap and the sampling seed.
#[derive(Debug, Clone)]
pub struct TarSweepConfig {
    pub widths: Vec<usize>,
    pub sp_bands: Vec<(f64, f64)>,
    pub cap: usize,
    pub seed: u64,
}

impl Default for TarSweepConfig {
    fn default() -> TarSweepConfig {
        TarSweepConfig {
            widths: alloc::vec![4, 5, 6, 7, 8],
            sp_bands: alloc::vec![(0.001, 0.05), (0.001, 0.025)],
            cap: 200_000,
            seed: 0,
        }
    }
}

/// One sweep measurement for a `(reference, target)` variant pair.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TarObservation {
    /// Variant indices `(n, m)`: triggers enumerated in n, checked in m.
    pub pair: (usize, usize),
    pub width: usize,
    pub sp_min: f64,
    pub sp_max: f64,
    pub entry: TarEntry,
    /// Whether trigger enumeration was exhaustive or capped sampling.
    pub exhaustive: bool,
    /// Candidate nets inside the SP band.
    pub candidate_nets: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SweepError {
    #[error("bundle run failed: {0}")]
    Run(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Variant trace windows of a bundle: index 0 from the clean run, later
/// indices (escalation variants plus their compare window) from the forced
/// run. Window m > 0 includes the compare or vote code that follows it.
pub fn variant_windows(
    bundle: &HardenedBundle,
    inputs: &[u32],
    cycle_limit: u64,
) -> Result<Vec<NetTraceMatrix>, SweepError> {
    let run_err = |e: crate::harness::RunError| SweepError::Run(format!("{e}"));
    let (_, clean) = run_bundle_traced(bundle, inputs, &[], None, cycle_limit).map_err(run_err)?;
    let escalator = forced_escalation_trojan(bundle)?;
    let (report, forced) = run_bundle_traced(bundle, inputs, &[escalator], None, cycle_limit)
        .map_err(run_err)?;
    if report.verdict == RunVerdict::Clean {
        return Err(SweepError::Run(String::from(
            "escalation trojan failed to force a mismatch",
        )));
    }

    let k = bundle.layout.k;
    let mut windows = Vec::with_capacity(k);
    for i in 0..k {
        let ranges: Vec<Range<usize>> = bundle.layout.variant_window(i);
        let source = if i < 2 { &clean } else { &forced };
        windows.push(source.slice_pc_ranges(&ranges, format!("v{i}")));
    }
    Ok(windows)
}

/// Runs the full sweep: for every width and SP band, enumerate triggers in
/// variant 0's window and measure reactivation in each later variant's
/// window. Bands with no candidate nets are skipped silently (small
/// programs may not populate the rarest band).
pub fn tar_sweep(
    bundle: &HardenedBundle,
    inputs: &[u32],
    config: &TarSweepConfig,
    cycle_limit: u64,
) -> Result<Vec<TarObservation>, SweepError> {
    let windows = variant_windows(bundle, inputs, cycle_limit)?;
    let mut out = Vec::new();
    for &(sp_min, sp_max) in &config.sp_bands {
        for &width in &config.widths {
            let enumeration =
                match enumerate_triggers(&windows[0], width, sp_min, sp_max, config.cap, config.seed)
                {
                    Ok(e) => e,
                    Err(TriggerError::NoCandidateNets { .. }) => continue,
                    Err(e) => return Err(SweepError::Run(format!("{e}"))),
                };
            for m in 1..windows.len() {
                let entry = tar(&windows[m], &enumeration.triggers);
                out.push(TarObservation {
                    pair: (0, m),
                    width,
                    sp_min,
                    sp_max,
                    entry,
                    exhaustive: enumeration.exhaustive,
                    candidate_nets: enumeration.candidates.len(),
                });
            }
        }
    }
    Ok(out)
}

/// Mean TAR per `(width, sp_max)` over a set of observations, skipping
/// undefined entries.
pub fn mean_tar(observations: &[TarObservation], width: usize, sp_max: f64) -> Option<f64> {
    let values: Vec<f64> = observations
        .iter()
        .filter(|o| o.width == width && o.sp_max == sp_max)
        .filter_map(|o| o.entry.tar)
        .collect();
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}
