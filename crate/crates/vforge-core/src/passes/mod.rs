//! Semantics-preserving transformation passes and the machinery around
//! them: seeded pass sequences, differential equivalence checking, candidate
//! pool generation and diversity-driven selection.
//!
//! Every pass maps a valid program to a valid program with an identical
//! observable output stream on all inputs. A pass that finds no applicable
//! site returns the program unchanged. All randomness flows from explicit
//! 64-bit seeds through ChaCha8, so any (program, pass, seed) triple replays
//! bit for bit.

mod editor;
mod equiv;
mod liveness;
mod pool;
mod rename;
mod rewrite;
mod sched;
mod select;

pub use editor::ProgramEditor;
pub use equiv::{check_equivalence, default_test_inputs, EquivalenceVerdict, DEFAULT_CYCLE_LIMIT};
pub use liveness::live_sets;
pub use pool::{generate_pool, Candidate, CandidatePool, Provenance};
pub use select::{exhaustive_best_objective, select_variants, SelectError, SelectionResult};

use alloc::string::String;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::isa::Program;

/// The pass catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum PassId {
    /// Permute registers r0-r13 consistently (r14/r15 are the reserved
    /// harness glue registers and never move).
    Rename,
    /// Seeded list scheduling within basic blocks, honoring register,
    /// memory and IN/OUT ordering dependences.
    Sched,
    /// Swap the source operands of commutative ALU instructions.
    Commute,
    /// Rewrite among equivalent instruction forms (MOV/ADDI-0/OR-self,
    /// SLL-by-1/ADD-self, XOR-self/LI-0, ADDI via a dead temporary).
    Strength,
    /// Split `LI rd, K` into `LI rd, K-d; ADDI rd, rd, d`.
    ImmSplit,
    /// Invert a conditional branch, swapping fallthrough and target.
    BrFlip,
    /// Insert a provably dead two-instruction pair on a dead register,
    /// capped at 10% growth per application.
    PadPair,
}

impl PassId {
    pub const ALL: [PassId; 7] = [
        PassId::Rename,
        PassId::Sched,
        PassId::Commute,
        PassId::Strength,
        PassId::ImmSplit,
        PassId::BrFlip,
        PassId::PadPair,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PassId::Rename => "rename",
            PassId::Sched => "sched",
            PassId::Commute => "commute",
            PassId::Strength => "strength",
            PassId::ImmSplit => "immsplit",
            PassId::BrFlip => "brflip",
            PassId::PadPair => "padpair",
        }
    }

    pub fn from_name(s: &str) -> Option<PassId> {
        PassId::ALL.iter().copied().find(|p| p.name() == s)
    }
}

impl core::fmt::Display for PassId {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// A named, ordered list of passes. Per-pass seeds derive from the master
/// seed by drawing one `u64` per pass, in order, from
/// `ChaCha8Rng::seed_from_u64(master_seed)`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PassSequence {
    pub name: String,
    pub passes: Vec<PassId>,
}

impl PassSequence {
    pub fn new(name: impl Into<String>, passes: Vec<PassId>) -> PassSequence {
        PassSequence {
            name: name.into(),
            passes,
        }
    }
}

/// Applies one pass with one seed. Always returns a valid program; if the
/// pass finds no applicable site the program comes back unchanged.
pub fn apply_pass(p: &Program, id: PassId, seed: u64) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match id {
        PassId::Rename => rename::run(p, &mut rng),
        PassId::Sched => sched::run(p, &mut rng),
        PassId::Commute => rewrite::commute(p, &mut rng),
        PassId::Strength => rewrite::strength(p, &mut rng),
        PassId::ImmSplit => rewrite::imm_split(p, &mut rng),
        PassId::BrFlip => rewrite::branch_flip(p, &mut rng),
        PassId::PadPair => rewrite::pad_pair(p, &mut rng),
    }
}

/// Left-to-right composition of [`apply_pass`] with seeds derived from
/// `master_seed` as documented on [`PassSequence`].
pub fn apply_sequence(p: &Program, sequence: &PassSequence, master_seed: u64) -> Program {
    let mut seeder = ChaCha8Rng::seed_from_u64(master_seed);
    let mut out = p.clone();
    for pass in &sequence.passes {
        let pass_seed = seeder.next_u64();
        out = apply_pass(&out, *pass, pass_seed);
    }
    out
}

/// The built-in pass-sequence database: eight sequences mixing the catalog
/// at different depths.
pub fn default_database() -> Vec<PassSequence> {
    use PassId::*;
    alloc::vec![
        PassSequence::new("rename", alloc::vec![Rename]),
        PassSequence::new("sched", alloc::vec![Sched]),
        PassSequence::new("rename-sched", alloc::vec![Rename, Sched]),
        PassSequence::new("strength-commute", alloc::vec![Strength, Commute]),
        PassSequence::new("imm-shuffle", alloc::vec![ImmSplit, Strength, ImmSplit, Sched]),
        PassSequence::new("brflip-mix", alloc::vec![BrFlip, Sched, Rename]),
        PassSequence::new("pad-strength", alloc::vec![PadPair, Strength, Sched]),
        PassSequence::new(
            "full-stack",
            alloc::vec![Rename, Sched, Commute, Strength, ImmSplit, BrFlip, PadPair],
        ),
    ]
}
