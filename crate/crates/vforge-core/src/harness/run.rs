use alloc::vec::Vec;

use crate::isa::{execute, execute_with_machine, Fault, Program, Termination};
use crate::trojan::{run_traced, Firing, NetTraceMatrix, TrojanSpec};

use super::bundle::HardenedBundle;
use super::layout::{
    out_cursor_cell, region_base, CELL_ACC_BASE, CELL_ACC_COUNT, CELL_VERDICT,
    IN_BUF_WORDS, VERDICT_CLEAN, VERDICT_NO_MAJORITY, VERDICT_TOLERATED,
};

/// Bundle-run verdict, decoded from the glue's verdict word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum RunVerdict {
    /// The two eager variants agreed.
    Clean,
    /// Mismatch detected, majority vote recovered an output stream.
    DetectedTolerated,
    /// Mismatch detected, no strict majority across all variants.
    DetectedUntolerated,
}

/// Everything observable from one bundle run.
#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunReport {
    pub verdict: RunVerdict,
    pub variants_executed: usize,
    /// Output stream the bundle accepted (verdict word stripped).
    pub accepted: Vec<u32>,
    /// Per-variant protected output streams; `None` for variants that never
    /// ran (escalation skipped).
    pub per_variant: Vec<Option<Vec<u32>>>,
    pub cycles: u64,
    /// Ground-truth label, only in experiment mode (golden supplied):
    /// true when the run looked clean but the accepted stream is wrong.
    pub undetected_corruption: Option<bool>,
    /// Trojan activations observed during the run.
    pub firings: Vec<Firing>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("bundle run faulted: {0:?}")]
    Fault(Fault),
    #[error("bundle run hit the cycle limit")]
    CycleLimit,
    #[error("{count} input words exceed the staging buffer ({capacity})")]
    InputOverflow { count: usize, capacity: usize },
    #[error("variant {index} overflowed its output region ({count} of {capacity} words)")]
    RegionOverflow {
        index: usize,
        count: usize,
        capacity: usize,
    },
    #[error("bundle memory is inconsistent: {0}")]
    Malformed(&'static str),
}

/// Executes a hardened bundle. The bundle's input convention prepends the
/// word count: callers pass the same `inputs` the base program takes.
/// Trojans, when supplied, run on the net-level machine; a clean invocation
/// uses the golden interpreter. `golden` switches on experiment mode and
/// the `undetected_corruption` label.
pub fn run_bundle(
    bundle: &HardenedBundle,
    inputs: &[u32],
    trojans: &[TrojanSpec],
    golden: Option<&[u32]>,
    cycle_limit: u64,
) -> Result<RunReport, RunError> {
    let (result, mem, firings) = run_bundle_raw(bundle, inputs, trojans, cycle_limit, false)?;
    let (outputs, cycles) = (result.0, result.1);
    decode_report(bundle, outputs, cycles, mem, firings, golden)
}

/// [`run_bundle`] that also records the net trace (always on the net-level
/// machine), for TAR and scenario analysis.
pub fn run_bundle_traced(
    bundle: &HardenedBundle,
    inputs: &[u32],
    trojans: &[TrojanSpec],
    golden: Option<&[u32]>,
    cycle_limit: u64,
) -> Result<(RunReport, NetTraceMatrix), RunError> {
    let full = stage_inputs(bundle, inputs)?;
    let run = run_traced(&bundle.program, &full, trojans, cycle_limit, true);
    check_termination(run.result.termination)?;
    let trace = run.trace.expect("recording enabled");
    let report = decode_report(
        bundle,
        run.result.outputs,
        run.result.cycles,
        run.mem,
        run.firings,
        golden,
    )?;
    Ok((report, trace))
}

fn stage_inputs(bundle: &HardenedBundle, inputs: &[u32]) -> Result<Vec<u32>, RunError> {
    let _ = bundle;
    if inputs.len() > IN_BUF_WORDS as usize {
        return Err(RunError::InputOverflow {
            count: inputs.len(),
            capacity: IN_BUF_WORDS as usize,
        });
    }
    let mut full = Vec::with_capacity(inputs.len() + 1);
    full.push(inputs.len() as u32);
    full.extend_from_slice(inputs);
    Ok(full)
}

fn check_termination(t: Termination) -> Result<(), RunError> {
    match t {
        Termination::Halted => Ok(()),
        Termination::CycleLimit => Err(RunError::CycleLimit),
        Termination::Fault(f) => Err(RunError::Fault(f)),
    }
}

type RawRun = ((Vec<u32>, u64), Vec<u32>, Vec<Firing>);

fn run_bundle_raw(
    bundle: &HardenedBundle,
    inputs: &[u32],
    trojans: &[TrojanSpec],
    cycle_limit: u64,
    force_traced: bool,
) -> Result<RawRun, RunError> {
    let full = stage_inputs(bundle, inputs)?;
    if trojans.is_empty() && !force_traced {
        let (result, machine) = execute_with_machine(&bundle.program, &full, cycle_limit);
        check_termination(result.termination)?;
        Ok((
            (result.outputs, result.cycles),
            machine.mem().to_vec(),
            Vec::new(),
        ))
    } else {
        let run = run_traced(&bundle.program, &full, trojans, cycle_limit, false);
        check_termination(run.result.termination)?;
        Ok(((run.result.outputs, run.result.cycles), run.mem, run.firings))
    }
}

fn decode_report(
    bundle: &HardenedBundle,
    outputs: Vec<u32>,
    cycles: u64,
    mem: Vec<u32>,
    firings: Vec<Firing>,
    golden: Option<&[u32]>,
) -> Result<RunReport, RunError> {
    let k = bundle.policy.variants();
    let region_words = bundle.layout.region_words as usize;

    let verdict_word = mem[CELL_VERDICT as usize];
    let verdict = match verdict_word {
        VERDICT_CLEAN => RunVerdict::Clean,
        VERDICT_TOLERATED => RunVerdict::DetectedTolerated,
        VERDICT_NO_MAJORITY => RunVerdict::DetectedUntolerated,
        _ => return Err(RunError::Malformed("unknown verdict word")),
    };
    let variants_executed = if verdict == RunVerdict::Clean { 2 } else { k };

    let mut per_variant: Vec<Option<Vec<u32>>> = Vec::with_capacity(k);
    for i in 0..k {
        let count = mem[out_cursor_cell(i) as usize] as usize;
        if count > region_words {
            return Err(RunError::RegionOverflow {
                index: i,
                count,
                capacity: region_words,
            });
        }
        if i < variants_executed {
            let base = region_base(i) as usize;
            per_variant.push(Some(mem[base..base + count].to_vec()));
        } else {
            per_variant.push(None);
        }
    }

    // The bundle's own output stream is the accepted values plus the
    // verdict word; cross-check it against the glue cells.
    if outputs.last() != Some(&verdict_word) {
        return Err(RunError::Malformed("output stream missing verdict word"));
    }
    let accepted = outputs[..outputs.len() - 1].to_vec();
    let acc_base = mem[CELL_ACC_BASE as usize] as usize;
    let acc_count = mem[CELL_ACC_COUNT as usize] as usize;
    if acc_count != accepted.len() || mem[acc_base..acc_base + acc_count] != accepted[..] {
        return Err(RunError::Malformed("accepted region disagrees with stream"));
    }

    let undetected_corruption =
        golden.map(|g| verdict == RunVerdict::Clean && accepted.as_slice() != g);

    Ok(RunReport {
        verdict,
        variants_executed,
        accepted,
        per_variant,
        cycles,
        undetected_corruption,
        firings,
    })
}

/// Whole-stream majority vote: streams form equality classes and a class
/// wins with strictly more than half the members. Streams of different
/// lengths are simply unequal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum VoteOutcome {
    Majority(Vec<u32>),
    NoMajority,
}

pub fn majority_vote(streams: &[Vec<u32>]) -> VoteOutcome {
    for candidate in streams {
        let matches = streams.iter().filter(|s| *s == candidate).count();
        if 2 * matches > streams.len() {
            return VoteOutcome::Majority(candidate.clone());
        }
    }
    VoteOutcome::NoMajority
}

/// Code-size and simulated-cycle overhead of a bundle against its base
/// program. LoC counts instructions only (labels and directives excluded);
/// cycle counts come from clean runs on `inputs`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OverheadReport {
    pub loc_original: usize,
    pub loc_per_variant: Vec<usize>,
    pub loc_integrated: usize,
    pub pct_loc_increase: f64,
    pub cycles_original: u64,
    pub cycles_integrated: u64,
    pub pct_cycle_increase: f64,
}

pub fn overhead_report(
    base: &Program,
    bundle: &HardenedBundle,
    inputs: &[u32],
    cycle_limit: u64,
) -> Result<OverheadReport, RunError> {
    let base_run = execute(base, inputs, cycle_limit);
    check_termination(base_run.termination)?;
    let report = run_bundle(bundle, inputs, &[], None, cycle_limit)?;

    let loc_original = base.len();
    let loc_per_variant: Vec<usize> = bundle.variants.iter().map(Program::len).collect();
    let loc_integrated = bundle.program.len();
    let pct = |a: u64, b: u64| (b as f64 / a as f64 - 1.0) * 100.0;

    Ok(OverheadReport {
        loc_original,
        loc_per_variant,
        loc_integrated,
        pct_loc_increase: pct(loc_original as u64, loc_integrated as u64),
        cycles_original: base_run.cycles,
        cycles_integrated: report.cycles,
        pct_cycle_increase: pct(base_run.cycles, report.cycles),
    })
}
