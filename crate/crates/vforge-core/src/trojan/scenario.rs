//! Detection/tolerance scenario construction: nine Trojan configurations
//! whose activation masks and payload styles walk the full outcome space of
//! a three-variant bundle, from single-variant activation (detected and
//! tolerated) through identical dual corruption (undetected) to divergent
//! dual corruption (detected, not tolerated) and benign-in-one activation.
//!
//! Scenarios are found by trace-guided search: candidate rare triggers come
//! from the bundle's own clean execution, get bucketed by which variant
//! windows they fire in, and are verified by actually injecting them and
//! checking the run outcome against the row's expectations. The search is
//! deterministic, so a fixture bundle always yields the same nine Trojans.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use crate::harness::{
    run_bundle, run_bundle_traced, BundleLayout, HardenedBundle, RunReport, RunVerdict,
    SegmentKind,
};
use crate::isa::{Instruction, Opcode, Program, Reg};

use alloc::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::nets::NetId;
use super::trace::{static_probabilities, NetTraceMatrix};
use super::trigger::{fires_at_all, NetCondition, PayloadKind, TriggerSpec, TrojanSpec};

const LIMIT: u64 = 1 << 24;

/// Ground-truth classification of one injected run.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OutcomeClass {
    /// Whether each variant's own window saw at least one firing.
    pub activation_mask: Vec<bool>,
    /// Eager-stage mismatch occurred.
    pub detected: bool,
    /// Accepted output equals the golden output.
    pub tolerated: bool,
}

/// Classifies a run against the golden output: detection is an eager-stage
/// mismatch, tolerance is accepted-equals-golden, and the activation mask
/// maps firing program counters onto variant segments.
pub fn classify_outcome(
    report: &RunReport,
    layout: &BundleLayout,
    golden: &[u32],
) -> OutcomeClass {
    let mut activation_mask = alloc::vec![false; layout.k];
    for f in &report.firings {
        for (i, active) in activation_mask.iter_mut().enumerate() {
            if layout
                .segment(SegmentKind::Variant(i))
                .is_some_and(|s| s.contains(f.pc))
            {
                *active = true;
            }
        }
    }
    OutcomeClass {
        activation_mask,
        detected: report.verdict != RunVerdict::Clean,
        tolerated: report.accepted.as_slice() == golden,
    }
}

/// One constructed scenario with its verified outcome.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub name: String,
    pub trojan: TrojanSpec,
    pub outcome: OutcomeClass,
    pub verdict: RunVerdict,
    pub accepted: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScenarioError {
    #[error("no forced-escalation site found in variant 0")]
    NoEscalationSite,
    #[error("bundle run failed during scenario search: {0}")]
    Run(String),
    #[error("search exhausted for scenario {name}: tried {tried} candidates")]
    SearchExhausted { name: &'static str, tried: usize },
}

/// Expectation row: activation mask, payload-style preference order and the
/// detection/tolerance outcome the scenario must reproduce.
struct RowSpec {
    name: &'static str,
    mask: [bool; 3],
    payloads: &'static [PayloadKind],
    detected: bool,
    tolerated: bool,
    /// Both eager variants must corrupt identically (undetected case).
    identical_corruption: bool,
    /// Variant 0 fires without output impact; variant 1 is corrupted.
    benign_in_first: bool,
}

const BIT_PAYLOADS_IMM: &[PayloadKind] = &[
    PayloadKind::ImmediateBit { bit: 0 },
    PayloadKind::ImmediateBit { bit: 3 },
    PayloadKind::ImmediateBit { bit: 7 },
    PayloadKind::ImmediateBit { bit: 12 },
];
const BIT_PAYLOADS_ALU_OP: &[PayloadKind] = &[
    PayloadKind::AluOpSelectBit { bit: 0 },
    PayloadKind::AluOpSelectBit { bit: 1 },
    PayloadKind::AluOpSelectBit { bit: 2 },
];
const BIT_PAYLOADS_REG_WRITE: &[PayloadKind] = &[
    PayloadKind::RegWriteAddressBit { bit: 0 },
    PayloadKind::RegWriteAddressBit { bit: 1 },
    PayloadKind::RegWriteAddressBit { bit: 2 },
    PayloadKind::RegWriteAddressBit { bit: 3 },
];
const BIT_PAYLOADS_RESULT: &[PayloadKind] = &[
    PayloadKind::AluResultBit { bit: 0 },
    PayloadKind::AluResultBit { bit: 5 },
    PayloadKind::AluResultBit { bit: 13 },
    PayloadKind::AluResultBit { bit: 28 },
    PayloadKind::AluResultBit { bit: 31 },
];
const BIT_PAYLOADS_BRANCH: &[PayloadKind] = &[PayloadKind::BranchSelect];

fn rows() -> [RowSpec; 9] {
    let single = [true, false, false];
    let dual = [true, true, false];
    [
        RowSpec {
            name: "T1",
            mask: single,
            payloads: BIT_PAYLOADS_BRANCH,
            detected: true,
            tolerated: true,
            identical_corruption: false,
            benign_in_first: false,
        },
        RowSpec {
            name: "T2",
            mask: single,
            payloads: BIT_PAYLOADS_IMM,
            detected: true,
            tolerated: true,
            identical_corruption: false,
            benign_in_first: false,
        },
        RowSpec {
            name: "T3",
            mask: single,
            payloads: BIT_PAYLOADS_ALU_OP,
            detected: true,
            tolerated: true,
            identical_corruption: false,
            benign_in_first: false,
        },
        RowSpec {
            name: "T4",
            mask: single,
            payloads: BIT_PAYLOADS_REG_WRITE,
            detected: true,
            tolerated: true,
            identical_corruption: false,
            benign_in_first: false,
        },
        RowSpec {
            name: "T5",
            mask: dual,
            payloads: BIT_PAYLOADS_IMM,
            detected: false,
            tolerated: false,
            identical_corruption: true,
            benign_in_first: false,
        },
        RowSpec {
            name: "T6",
            mask: dual,
            payloads: BIT_PAYLOADS_IMM,
            detected: true,
            tolerated: false,
            identical_corruption: false,
            benign_in_first: false,
        },
        RowSpec {
            name: "T7",
            mask: dual,
            payloads: BIT_PAYLOADS_ALU_OP,
            detected: true,
            tolerated: false,
            identical_corruption: false,
            benign_in_first: false,
        },
        RowSpec {
            name: "T8",
            mask: dual,
            payloads: BIT_PAYLOADS_REG_WRITE,
            detected: true,
            tolerated: true,
            identical_corruption: false,
            benign_in_first: true,
        },
        RowSpec {
            name: "T9",
            mask: dual,
            payloads: BIT_PAYLOADS_BRANCH,
            detected: true,
            tolerated: true,
            identical_corruption: false,
            benign_in_first: true,
        },
    ]
}

/// Whether a payload can change architectural behaviour on at least one of
/// the instructions a trigger fires on.
fn payload_bites(payload: PayloadKind, firing_ops: &[Opcode]) -> bool {
    use Opcode::*;
    firing_ops.iter().any(|op| match payload {
        PayloadKind::AluResultBit { .. } => *op != Halt,
        PayloadKind::ImmediateBit { bit } => match op {
            Sll | Srl => bit < 5,
            Addi | Li | Lw | Sw | Beq | Bne | Jmp => true,
            _ => false,
        },
        PayloadKind::AluOpSelectBit { .. } => !matches!(
            op,
            Li | Mov | Jmp | In | Out | Halt
        ),
        PayloadKind::RegWriteAddressBit { .. } => matches!(
            op,
            Add | Sub | Mul | And | Or | Xor | Sll | Srl | Addi | Li | Mov | Lw | In
        ),
        PayloadKind::BranchSelect => matches!(op, Beq | Bne | Jmp),
    })
}

/// Fallback payload families tried, in order, when a row's preferred style
/// finds no configuration on the fixture bundle.
fn fallback_payloads() -> Vec<PayloadKind> {
    let mut all = Vec::new();
    all.extend_from_slice(BIT_PAYLOADS_RESULT);
    all.extend_from_slice(BIT_PAYLOADS_IMM);
    all.extend_from_slice(BIT_PAYLOADS_ALU_OP);
    all.extend_from_slice(BIT_PAYLOADS_REG_WRITE);
    all.extend_from_slice(BIT_PAYLOADS_BRANCH);
    all
}

/// A Trojan that reliably forces escalation: it corrupts variant 0's
/// output-cursor increment so the eager output counts disagree. Used to
/// obtain a trace of the escalation variants and the vote from a clean
/// bundle.
pub fn forced_escalation_trojan(bundle: &HardenedBundle) -> Result<TrojanSpec, ScenarioError> {
    let v0 = bundle
        .layout
        .segment(SegmentKind::Variant(0))
        .ok_or(ScenarioError::NoEscalationSite)?;
    let glue = [Reg::new(14).unwrap(), Reg::new(15).unwrap()];
    for pc in v0.range() {
        let inst: &Instruction = &bundle.program.instructions()[pc];
        if inst.opcode == Opcode::Addi
            && glue.contains(&inst.reg(0))
            && inst.reg(0) == inst.reg(1)
            && inst.imm(2) == 1
        {
            return Ok(TrojanSpec {
                trigger: exact_pc_trigger(pc, None),
                payload: PayloadKind::ImmediateBit { bit: 1 },
            });
        }
    }
    Err(ScenarioError::NoEscalationSite)
}

/// One-step sequential trigger matching an exact instruction index, with an
/// optional opcode condition.
pub fn exact_pc_trigger(pc: usize, opcode: Option<Opcode>) -> TriggerSpec {
    let mut conditions: Vec<NetCondition> = (0..16)
        .map(|b| NetCondition {
            net: NetId::pc_bit(b),
            value: pc >> b & 1 == 1,
        })
        .collect();
    if let Some(op) = opcode {
        conditions.push(NetCondition {
            net: NetId::opcode_one_hot(op),
            value: true,
        });
    }
    TriggerSpec::exact(conditions)
}

/// Trigger firing on every `LI` of one exact 32-bit constant, wherever it
/// appears: the opcode one-hot plus all 32 immediate bits.
pub fn li_constant_trigger(value: u32) -> TriggerSpec {
    let mut conditions = alloc::vec![NetCondition {
        net: NetId::opcode_one_hot(Opcode::Li),
        value: true,
    }];
    for b in 0..32 {
        conditions.push(NetCondition {
            net: NetId::imm_bit(b),
            value: value >> b & 1 == 1,
        });
    }
    TriggerSpec::exact(conditions)
}

/// Large `LI` constants (magnitude above 2^16) shared by the two eager
/// variants and absent from every escalation variant; triggers keyed on
/// them fire identically in both eager variants and nowhere else.
pub fn shared_li_constants(bundle: &HardenedBundle) -> Vec<u32> {
    let li_constants = |p: &Program| -> Vec<u32> {
        p.instructions()
            .iter()
            .filter(|i| i.opcode == Opcode::Li)
            .map(|i| i.imm(1) as u32)
            .filter(|v| (*v as i32).unsigned_abs() > 1 << 16)
            .collect()
    };
    let eager0 = li_constants(&bundle.variants[0]);
    let eager1 = li_constants(&bundle.variants[1]);
    let later: Vec<Vec<u32>> = bundle.variants[2..].iter().map(li_constants).collect();
    let mut shared: Vec<u32> = eager0
        .into_iter()
        .filter(|v| eager1.contains(v) && later.iter().all(|l| !l.contains(v)))
        .collect();
    shared.sort_unstable();
    shared.dedup();
    shared
}

struct SearchContext<'a> {
    bundle: &'a HardenedBundle,
    inputs: &'a [u32],
    golden: &'a [u32],
    /// Variant-window slices: v0 and v1 from the clean run, the rest from
    /// the forced-escalation run.
    windows: Vec<NetTraceMatrix>,
    /// Glue-only slices of both runs; construction rejects triggers firing
    /// in glue so masks stay attributable to variants.
    glue: Vec<NetTraceMatrix>,
}

impl<'a> SearchContext<'a> {
    fn new(
        bundle: &'a HardenedBundle,
        inputs: &'a [u32],
        golden: &'a [u32],
    ) -> Result<SearchContext<'a>, ScenarioError> {
        let run_err = |e: crate::harness::RunError| ScenarioError::Run(format!("{e}"));
        let (_, clean_trace) =
            run_bundle_traced(bundle, inputs, &[], None, LIMIT).map_err(run_err)?;
        let escalator = forced_escalation_trojan(bundle)?;
        let (forced_report, forced_trace) =
            run_bundle_traced(bundle, inputs, &[escalator], None, LIMIT).map_err(run_err)?;
        if forced_report.verdict == RunVerdict::Clean {
            return Err(ScenarioError::Run(String::from(
                "escalation trojan failed to force a mismatch",
            )));
        }

        let k = bundle.layout.k;
        let mut windows = Vec::with_capacity(k);
        for i in 0..k {
            let seg = bundle.layout.segment(SegmentKind::Variant(i)).unwrap();
            let source = if i < 2 { &clean_trace } else { &forced_trace };
            windows.push(source.slice_pc_ranges(&[seg.range()], format!("v{i}")));
        }
        let glue_ranges: Vec<Range<usize>> = bundle
            .layout
            .segments
            .iter()
            .filter(|s| !matches!(s.kind, SegmentKind::Variant(_)))
            .map(|s| s.range())
            .collect();
        let glue = alloc::vec![
            clean_trace.slice_pc_ranges(&glue_ranges, "glue-clean"),
            forced_trace.slice_pc_ranges(&glue_ranges, "glue-forced"),
        ];

        Ok(SearchContext {
            bundle,
            inputs,
            golden,
            windows,
            glue,
        })
    }

    /// Predicted activation mask of a trigger over the variant windows.
    fn predicted_mask(&self, t: &TriggerSpec) -> Vec<bool> {
        self.windows.iter().map(|w| fires_at_all(t, w)).collect()
    }

    fn fires_in_glue(&self, t: &TriggerSpec) -> bool {
        self.glue.iter().any(|g| fires_at_all(t, g))
    }

    /// Injects one Trojan and classifies the result; `None` when the run
    /// faults or loops.
    fn try_trojan(&self, trojan: &TrojanSpec) -> Option<(OutcomeClass, RunReport)> {
        let report = run_bundle(
            self.bundle,
            self.inputs,
            core::slice::from_ref(trojan),
            Some(self.golden),
            LIMIT,
        )
        .ok()?;
        let outcome = classify_outcome(&report, &self.bundle.layout, self.golden);
        Some((outcome, report))
    }
}

/// Valid triggers of one window by construction: every cycle's set of high
/// in-band nets contributes its `width`-subsets, so each returned trigger
/// provably fires. Large per-cycle high-sets are sampled with the seeded
/// generator; output order is deterministic.
fn valid_triggers_from_window(
    window: &NetTraceMatrix,
    width: usize,
    sp_min: f64,
    sp_max: f64,
    max_triggers: usize,
    seed: u64,
) -> Vec<TriggerSpec> {
    let sp = static_probabilities(window);
    let in_band: Vec<NetId> = NetId::all()
        .filter(|n| sp.ones(*n) >= 1 && sp.sp(*n) >= sp_min && sp.sp(*n) <= sp_max)
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen: BTreeSet<Vec<u8>> = BTreeSet::new();
    let mut out: Vec<TriggerSpec> = Vec::new();
    const PER_CYCLE: usize = 16;

    // Visit cycles in seeded shuffled order so the pool draws from the
    // whole window rather than its first cycles.
    let mut cycle_order: Vec<usize> = (0..window.cycles()).collect();
    cycle_order.shuffle(&mut rng);

    for c in cycle_order {
        if out.len() >= max_triggers {
            break;
        }
        let high: Vec<NetId> = in_band.iter().copied().filter(|n| window.bit(c, *n)).collect();
        if high.len() < width {
            continue;
        }
        let mut emit = |nets: Vec<NetId>, out: &mut Vec<TriggerSpec>| {
            let key: Vec<u8> = nets.iter().map(|n| n.index() as u8).collect();
            if seen.insert(key) {
                out.push(TriggerSpec::Combinational { nets });
            }
        };
        if combinations_count(high.len(), width) <= PER_CYCLE as u128 {
            let mut subset: Vec<usize> = (0..width).collect();
            loop {
                emit(subset.iter().map(|&i| high[i]).collect(), &mut out);
                if !next_subset(&mut subset, high.len()) {
                    break;
                }
            }
        } else {
            let mut idx: Vec<usize> = (0..high.len()).collect();
            for _ in 0..PER_CYCLE {
                idx.shuffle(&mut rng);
                let mut nets: Vec<NetId> = idx[..width].iter().map(|&i| high[i]).collect();
                nets.sort_unstable();
                emit(nets, &mut out);
            }
        }
    }
    out.truncate(max_triggers);
    out
}

/// Decode-style triggers over an opcode one-hot plus the low program
/// counter bits: fires at every executed instruction of that opcode whose
/// index is congruent to the residue. Variants lay the same computation at
/// different indices, so the (opcode, residue) space is dense in
/// cross-variant activation patterns while escalation variants, whose
/// insertions shift every subsequent index, frequently hold none.
fn residue_triggers(bundle: &HardenedBundle, bits: usize) -> Vec<TriggerSpec> {
    use alloc::collections::BTreeMap;
    let k = bundle.layout.k;
    let modulus = 1usize << bits;
    // counts[segment bucket][(opcode, residue)]; bucket k is all glue.
    let mut counts: Vec<BTreeMap<(Opcode, usize), usize>> =
        alloc::vec![BTreeMap::new(); k + 1];
    for (pc, inst) in bundle.program.instructions().iter().enumerate() {
        let bucket = match bundle.layout.segment_of_pc(pc).map(|s| s.kind) {
            Some(SegmentKind::Variant(i)) => i,
            _ => k,
        };
        *counts[bucket]
            .entry((inst.opcode, pc & (modulus - 1)))
            .or_insert(0) += 1;
    }
    let mut out = Vec::new();
    for &(op, residue) in counts[0].keys() {
        let in_v1 = counts[1].contains_key(&(op, residue));
        let in_later = (2..k).any(|i| counts[i].contains_key(&(op, residue)));
        let in_glue = counts[k].contains_key(&(op, residue));
        if in_later || in_glue {
            continue;
        }
        // Keep both single- and dual-activation shapes; the mask filter
        // sorts them into pools.
        let _ = in_v1;
        let mut conditions = alloc::vec![NetCondition {
            net: NetId::opcode_one_hot(op),
            value: true,
        }];
        for b in 0..bits {
            conditions.push(NetCondition {
                net: NetId::pc_bit(b),
                value: residue >> b & 1 == 1,
            });
        }
        out.push(TriggerSpec::exact(conditions));
    }
    out
}

/// Exact enumeration of two-net triggers that fire in both eager variants'
/// windows: in-band nets of both windows, intersected pairwise with cycle
/// bitsets. These are the raw material for cross-variant activation
/// scenarios.
fn dual_pair_triggers(w0: &NetTraceMatrix, w1: &NetTraceMatrix, sp_max: f64) -> Vec<TriggerSpec> {
    let sp0 = static_probabilities(w0);
    let sp1 = static_probabilities(w1);
    let nets: Vec<NetId> = NetId::all()
        .filter(|n| {
            sp0.ones(*n) >= 1 && sp0.sp(*n) <= sp_max && sp1.ones(*n) >= 1 && sp1.sp(*n) <= sp_max
        })
        .collect();
    let col0: Vec<Vec<u64>> = nets.iter().map(|n| w0.column_bitset(*n)).collect();
    let col1: Vec<Vec<u64>> = nets.iter().map(|n| w1.column_bitset(*n)).collect();
    let co_fires = |cols: &[Vec<u64>], i: usize, j: usize| -> bool {
        cols[i].iter().zip(cols[j].iter()).any(|(a, b)| a & b != 0)
    };
    let mut out = Vec::new();
    for i in 0..nets.len() {
        for j in i + 1..nets.len() {
            if co_fires(&col0, i, j) && co_fires(&col1, i, j) {
                out.push(TriggerSpec::Combinational {
                    nets: alloc::vec![nets[i], nets[j]],
                });
            }
        }
    }
    out
}

fn combinations_count(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn next_subset(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    loop {
        if i == 0 {
            return false;
        }
        i -= 1;
        if subset[i] != i + n - k {
            break;
        }
    }
    subset[i] += 1;
    for j in i + 1..k {
        subset[j] = subset[j - 1] + 1;
    }
    true
}

/// Builds the nine-scenario suite on `bundle`. The bundle should be built
/// from three mutually diverse variants of one program; `golden` is the
/// base program's output on `inputs`.
pub fn build_scenario_suite(
    bundle: &HardenedBundle,
    inputs: &[u32],
    golden: &[u32],
) -> Result<Vec<ScenarioResult>, ScenarioError> {
    let ctx = SearchContext::new(bundle, inputs, golden)?;

    // Single-activation material: rare triggers from the reference
    // variant's window, most of which stay dormant elsewhere.
    let mut candidates: Vec<TriggerSpec> = Vec::new();
    for (width, sp_max, cap) in [(4usize, 0.06, 4000usize), (3, 0.25, 2000)] {
        candidates.extend(valid_triggers_from_window(
            &ctx.windows[0],
            width,
            0.0005,
            sp_max,
            cap,
            0x5EED ^ width as u64,
        ));
    }
    // Cross-activation material: shared-constant triggers (the
    // identical-corruption construction), decode-residue triggers over both
    // trigger-width granularities, and exact pair enumeration over both
    // eager windows.
    let li_triggers: Vec<TriggerSpec> = shared_li_constants(bundle)
        .into_iter()
        .map(li_constant_trigger)
        .collect();
    let mut structured: Vec<TriggerSpec> = li_triggers;
    structured.extend(residue_triggers(bundle, 7));
    structured.extend(residue_triggers(bundle, 6));
    structured.extend(dual_pair_triggers(&ctx.windows[0], &ctx.windows[1], 0.5));

    let mut single_pool: Vec<TriggerSpec> = Vec::new();
    let mut dual_pool: Vec<TriggerSpec> = Vec::new();
    for t in candidates {
        if ctx.fires_in_glue(&t) {
            continue;
        }
        let mask = ctx.predicted_mask(&t);
        if mask == [true, false, false] {
            single_pool.push(t);
        } else if mask == [true, true, false] {
            dual_pool.push(t);
        }
    }
    for t in structured {
        if ctx.fires_in_glue(&t) {
            continue;
        }
        let mask = ctx.predicted_mask(&t);
        if mask == [true, true, false] {
            dual_pool.push(t);
        } else if mask == [true, false, false] {
            single_pool.push(t);
        }
    }

    // Precompute where each pooled trigger fires, as opcodes, so payloads
    // that cannot affect those instructions are skipped without a run.
    let annotate = |pool: Vec<TriggerSpec>| -> Vec<(TriggerSpec, Vec<Opcode>, Vec<Opcode>)> {
        pool.into_iter()
            .map(|t| {
                let ops = |w: &NetTraceMatrix| -> Vec<Opcode> {
                    super::trigger::fires(&t, w)
                        .into_iter()
                        .map(|c| bundle.program.instructions()[w.pc(c)].opcode)
                        .collect()
                };
                let v0 = ops(&ctx.windows[0]);
                let v1 = ops(&ctx.windows[1]);
                (t, v0, v1)
            })
            .collect()
    };
    let single_pool = annotate(single_pool);
    let dual_pool = annotate(dual_pool);

    let fallback = fallback_payloads();
    let mut results = Vec::with_capacity(9);
    for row in rows() {
        let pool = if row.mask[1] { &dual_pool } else { &single_pool };
        let mut tried = 0usize;
        let mut found: Option<ScenarioResult> = None;

        'search: for payload in row.payloads.iter().chain(fallback.iter()) {
            for (trigger, v0_ops, v1_ops) in pool {
                // The payload must be able to corrupt somewhere that
                // matters: variant 1 for benign-in-first rows, variant 0
                // otherwise (and both for divergent-dual rows).
                let bites = if row.benign_in_first {
                    payload_bites(*payload, v1_ops)
                } else if row.mask[1] {
                    payload_bites(*payload, v0_ops) && payload_bites(*payload, v1_ops)
                } else {
                    payload_bites(*payload, v0_ops)
                };
                if !bites {
                    continue;
                }
                tried += 1;
                if tried > 4000 {
                    break 'search;
                }
                let trojan = TrojanSpec {
                    trigger: trigger.clone(),
                    payload: *payload,
                };
                let Some((outcome, report)) = ctx.try_trojan(&trojan) else {
                    continue;
                };
                if outcome.detected != row.detected
                    || outcome.tolerated != row.tolerated
                    || outcome.activation_mask != row.mask
                {
                    continue;
                }
                if row.identical_corruption {
                    let v0 = report.per_variant[0].as_deref();
                    let v1 = report.per_variant[1].as_deref();
                    if v0 != v1 || v0 == Some(golden) {
                        continue;
                    }
                }
                if row.benign_in_first {
                    let v0 = report.per_variant[0].as_deref();
                    let v1 = report.per_variant[1].as_deref();
                    if v0 != Some(golden) || v1 == Some(golden) {
                        continue;
                    }
                }
                if row.detected && !row.tolerated {
                    // Divergent corruption: the eager streams must differ.
                    let v0 = report.per_variant[0].as_deref();
                    let v1 = report.per_variant[1].as_deref();
                    if v0 == v1 {
                        continue;
                    }
                }
                found = Some(ScenarioResult {
                    name: String::from(row.name),
                    trojan,
                    outcome,
                    verdict: report.verdict,
                    accepted: report.accepted,
                });
                break 'search;
            }
        }

        match found {
            Some(r) => results.push(r),
            None => {
                return Err(ScenarioError::SearchExhausted {
                    name: row.name,
                    tried,
                })
            }
        }
    }
    Ok(results)
}
