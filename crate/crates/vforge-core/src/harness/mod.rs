//! Variant-integrated execution: bundle construction (two eager variants,
//! in-simulator output regions, an eager compare, conditional escalation to
//! the full variant set, majority vote), bundle runs with optional Trojan
//! injection, and code-size/cycle overhead reporting.

mod bundle;
mod glue;
mod layout;
mod run;

pub use bundle::{build_bundle, build_bundle_verified, BundleError, HardenedBundle};
pub use glue::{Asm, IoStyle};
pub use layout::{
    in_cursor_cell, out_cursor_cell, region_base, BundleLayout, SegmentKind, SegmentSpan,
    CELL_ACC_BASE, CELL_ACC_COUNT, CELL_IN_COUNT, CELL_VERDICT, IN_BUF_BASE, IN_BUF_WORDS,
    REGION_BASE, REGION_STRIDE, REGION_WORDS, VERDICT_CLEAN, VERDICT_NO_MAJORITY,
    VERDICT_TOLERATED,
};
pub use run::{
    majority_vote, overhead_report, run_bundle, run_bundle_traced, OverheadReport, RunError,
    RunReport, RunVerdict, VoteOutcome,
};

use alloc::string::String;

/// Which code region a checkpoint guards: a named `.func` span or the whole
/// program. The bundle builder operates on whole programs; function-level
/// compare blocks carry through manifests for finer-grained deployments.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CompareBlock {
    WholeProgram,
    Function(String),
}

/// Voting policy: `k` total variants (odd, at least 3), of which exactly
/// two run eagerly; the rest run only after an eager-stage mismatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VotePolicy {
    k: usize,
}

impl VotePolicy {
    pub const EAGER: usize = 2;

    pub fn new(k: usize) -> Result<VotePolicy, BundleError> {
        if k < 3 || k.is_multiple_of(2) {
            return Err(BundleError::NonOddK(k));
        }
        Ok(VotePolicy { k })
    }

    pub fn variants(&self) -> usize {
        self.k
    }
}
