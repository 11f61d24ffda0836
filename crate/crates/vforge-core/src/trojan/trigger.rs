use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::nets::NetId;
use super::trace::{static_probabilities, NetTraceMatrix};

/// Activation condition over catalog nets.
///
/// Combinational triggers fire on any cycle where every listed net is
/// logic one. Sequential triggers hold a step counter that advances once
/// per cycle satisfying the current step's conditions and never resets on
/// non-matching cycles; the trigger fires when the final step is satisfied,
/// then starts over.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum TriggerSpec {
    Combinational { nets: Vec<NetId> },
    Sequential { steps: Vec<TriggerStep> },
}

/// One step of a sequential trigger: required values on a set of nets.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TriggerStep {
    pub conditions: Vec<NetCondition>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NetCondition {
    pub net: NetId,
    pub value: bool,
}

impl TriggerSpec {
    /// Exact-match single-step sequential trigger: fires whenever every
    /// `(net, value)` pair holds in one cycle.
    pub fn exact(conditions: Vec<NetCondition>) -> TriggerSpec {
        TriggerSpec::Sequential {
            steps: alloc::vec![TriggerStep { conditions }],
        }
    }
}

/// Transient payload: a single-cycle inversion of one datapath field,
/// applied only on firing cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum PayloadKind {
    AluResultBit { bit: u8 },
    ImmediateBit { bit: u8 },
    AluOpSelectBit { bit: u8 },
    RegWriteAddressBit { bit: u8 },
    BranchSelect,
}

/// A Trojan: a trigger plus a transient payload.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrojanSpec {
    pub trigger: TriggerSpec,
    pub payload: PayloadKind,
}

/// Running automaton state of one trigger, evaluated on pre-payload rows.
#[derive(Debug, Clone)]
pub enum TriggerState {
    Comb { mask: u128 },
    Seq { steps: Vec<(u128, u128)>, at: usize },
}

impl TriggerState {
    pub fn new(spec: &TriggerSpec) -> TriggerState {
        match spec {
            TriggerSpec::Combinational { nets } => {
                let mut mask = 0u128;
                for n in nets {
                    mask |= 1 << n.index();
                }
                TriggerState::Comb { mask }
            }
            TriggerSpec::Sequential { steps } => TriggerState::Seq {
                steps: steps
                    .iter()
                    .map(|s| {
                        let mut care = 0u128;
                        let mut value = 0u128;
                        for c in &s.conditions {
                            care |= 1 << c.net.index();
                            if c.value {
                                value |= 1 << c.net.index();
                            }
                        }
                        (care, value)
                    })
                    .collect(),
                at: 0,
            },
        }
    }

    /// Feeds one cycle's net row; true when the trigger fires this cycle.
    pub fn advance(&mut self, row: &u128) -> bool {
        match self {
            TriggerState::Comb { mask } => row & *mask == *mask && *mask != 0,
            TriggerState::Seq { steps, at } => {
                if steps.is_empty() {
                    return false;
                }
                let (care, value) = steps[*at];
                if row & care == value {
                    *at += 1;
                    if *at == steps.len() {
                        *at = 0;
                        return true;
                    }
                }
                false
            }
        }
    }
}

/// Cycles of `trace` on which `spec` fires, from a fresh automaton.
pub fn fires(spec: &TriggerSpec, trace: &NetTraceMatrix) -> Vec<usize> {
    let mut state = TriggerState::new(spec);
    let mut out = Vec::new();
    for c in 0..trace.cycles() {
        if state.advance(&trace.row(c)) {
            out.push(c);
        }
    }
    out
}

/// True when `spec` fires at least once in `trace`; cheaper than [`fires`]
/// for combinational triggers thanks to early exit.
pub fn fires_at_all(spec: &TriggerSpec, trace: &NetTraceMatrix) -> bool {
    let mut state = TriggerState::new(spec);
    (0..trace.cycles()).any(|c| state.advance(&trace.row(c)))
}

/// Result of trigger enumeration over one trace window.
#[derive(Debug, Clone)]
pub struct TriggerEnumeration {
    pub triggers: Vec<TriggerSpec>,
    /// Nets inside the SP band with at least one active cycle.
    pub candidates: Vec<NetId>,
    /// True when every k-subset of the candidates was examined; false when
    /// the space exceeded the cap and was sampled without replacement.
    pub exhaustive: bool,
    /// Number of k-subsets examined.
    pub examined: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TriggerError {
    #[error("no nets fall in the SP band [{sp_min}, {sp_max}]")]
    NoCandidateNets { sp_min: f64, sp_max: f64 },
    #[error("trigger width {0} not in [1, 16]")]
    BadWidth(usize),
    #[error("empty SP band: sp_min {0} >= sp_max {1}")]
    EmptyBand(f64, f64),
}

/// Enumerates `width`-input combinational triggers over nets whose static
/// probability lies in `[sp_min, sp_max]` and that are active at least once
/// in `trace`. Every returned trigger fires at least once in `trace`.
///
/// All `C(candidates, width)` subsets are examined when that count stays
/// within `cap`; otherwise `cap` distinct subsets are drawn without
/// replacement from the seeded generator and the result is flagged sampled.
pub fn enumerate_triggers(
    trace: &NetTraceMatrix,
    width: usize,
    sp_min: f64,
    sp_max: f64,
    cap: usize,
    seed: u64,
) -> Result<TriggerEnumeration, TriggerError> {
    if width == 0 || width > 16 {
        return Err(TriggerError::BadWidth(width));
    }
    if sp_min >= sp_max {
        return Err(TriggerError::EmptyBand(sp_min, sp_max));
    }
    let sp = static_probabilities(trace);
    let candidates: Vec<NetId> = NetId::all()
        .filter(|n| {
            let ones = sp.ones(*n);
            ones >= 1 && sp.sp(*n) >= sp_min && sp.sp(*n) <= sp_max
        })
        .collect();
    if candidates.len() < width {
        return Err(TriggerError::NoCandidateNets { sp_min, sp_max });
    }

    let columns: Vec<Vec<u64>> = candidates.iter().map(|n| trace.column_bitset(*n)).collect();
    let words = columns.first().map_or(0, Vec::len);
    let subset_fires = |subset: &[usize]| -> bool {
        (0..words).any(|w| subset.iter().fold(!0u64, |acc, &i| acc & columns[i][w]) != 0)
    };

    let n = candidates.len();
    let total = combinations(n, width);
    let mut triggers = Vec::new();
    let examined;
    let exhaustive;

    if total <= cap as u128 {
        exhaustive = true;
        examined = total as usize;
        let mut subset: Vec<usize> = (0..width).collect();
        loop {
            if subset_fires(&subset) {
                triggers.push(TriggerSpec::Combinational {
                    nets: subset.iter().map(|&i| candidates[i]).collect(),
                });
            }
            if !next_combination(&mut subset, n) {
                break;
            }
        }
    } else {
        exhaustive = false;
        examined = cap;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut seen: alloc::collections::BTreeSet<Vec<u16>> = alloc::collections::BTreeSet::new();
        let mut scratch: Vec<usize> = (0..n).collect();
        while seen.len() < cap {
            scratch.shuffle(&mut rng);
            let mut pick: Vec<u16> = scratch[..width].iter().map(|&i| i as u16).collect();
            pick.sort_unstable();
            if !seen.insert(pick.clone()) {
                continue;
            }
            let subset: Vec<usize> = pick.iter().map(|&i| i as usize).collect();
            if subset_fires(&subset) {
                triggers.push(TriggerSpec::Combinational {
                    nets: subset.iter().map(|&i| candidates[i]).collect(),
                });
            }
        }
        // Deterministic output order regardless of draw order.
        triggers.sort_by(|a, b| match (a, b) {
            (TriggerSpec::Combinational { nets: x }, TriggerSpec::Combinational { nets: y }) => {
                x.cmp(y)
            }
            _ => core::cmp::Ordering::Equal,
        });
    }

    Ok(TriggerEnumeration {
        triggers,
        candidates,
        exhaustive,
        examined,
    })
}

fn combinations(n: usize, k: usize) -> u128 {
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

fn next_combination(subset: &mut [usize], n: usize) -> bool {
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
