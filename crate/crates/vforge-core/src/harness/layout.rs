use alloc::vec::Vec;
use core::ops::Range;

/// Word addresses of the bundle's fixed memory map. Variant programs own
/// everything below `IN_BUF_BASE`; the glue owns the rest.
pub const IN_BUF_BASE: u32 = 0x7000;
pub const IN_BUF_WORDS: u32 = 0x1000;
pub const REGION_BASE: u32 = 0x8000;
pub const REGION_STRIDE: u32 = 0x800;
pub const REGION_WORDS: u32 = 0x400;

pub const CELL_IN_COUNT: u32 = 0xF000;
pub const CELL_VERDICT: u32 = 0xF001;
pub const CELL_ACC_BASE: u32 = 0xF002;
pub const CELL_ACC_COUNT: u32 = 0xF003;
pub const CELL_IN_CUR_BASE: u32 = 0xF010;
pub const CELL_OUT_CUR_BASE: u32 = 0xF020;
pub const CELL_EQ_BASE: u32 = 0xF030;

/// Verdict words written by the glue.
pub const VERDICT_CLEAN: u32 = 0;
pub const VERDICT_TOLERATED: u32 = 1;
pub const VERDICT_NO_MAJORITY: u32 = 2;

pub fn region_base(variant: usize) -> u32 {
    REGION_BASE + variant as u32 * REGION_STRIDE
}

pub fn in_cursor_cell(variant: usize) -> u32 {
    CELL_IN_CUR_BASE + variant as u32
}

pub fn out_cursor_cell(variant: usize) -> u32 {
    CELL_OUT_CUR_BASE + variant as u32
}

pub fn eq_flag_cell(k: usize, i: usize, j: usize) -> u32 {
    debug_assert!(i < j && j < k);
    CELL_EQ_BASE + (i * k + j) as u32
}

/// What a stretch of the integrated program implements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SegmentKind {
    /// Input staging: reads the count word and copies the stream.
    Prologue,
    /// One embedded variant, zero-wall and IO glue included.
    Variant(usize),
    /// Eager compare of the first two variants' output regions.
    Compare,
    /// Majority vote across all regions.
    Vote,
    /// Accepted-stream and verdict emission.
    Emit,
}

/// Instruction index range of one segment, end exclusive.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmentSpan {
    pub kind: SegmentKind,
    pub start: usize,
    pub end: usize,
}

impl SegmentSpan {
    pub fn range(&self) -> Range<usize> {
        self.start..self.end
    }

    pub fn contains(&self, pc: usize) -> bool {
        (self.start..self.end).contains(&pc)
    }
}

/// Static layout of a hardened bundle: variant count and the segment map of
/// the integrated program. Serialized into the bundle manifest so external
/// tools can slice traces by segment.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BundleLayout {
    pub k: usize,
    pub region_words: u32,
    pub segments: Vec<SegmentSpan>,
}

impl BundleLayout {
    pub fn segment(&self, kind: SegmentKind) -> Option<&SegmentSpan> {
        self.segments.iter().find(|s| s.kind == kind)
    }

    pub fn segment_of_pc(&self, pc: usize) -> Option<&SegmentSpan> {
        self.segments.iter().find(|s| s.contains(pc))
    }

    /// Trace window of variant `index` for trigger analysis: the variant's
    /// own code plus the compare code that runs right after it (the eager
    /// compare for variant 1, the vote for escalation variants, nothing for
    /// variant 0 which is the trigger-enumeration reference).
    pub fn variant_window(&self, index: usize) -> Vec<Range<usize>> {
        let mut ranges = Vec::new();
        if let Some(v) = self.segment(SegmentKind::Variant(index)) {
            ranges.push(v.range());
        }
        if index == 1 {
            if let Some(c) = self.segment(SegmentKind::Compare) {
                ranges.push(c.range());
            }
        } else if index >= 2 {
            if let Some(v) = self.segment(SegmentKind::Vote) {
                ranges.push(v.range());
            }
        }
        ranges
    }
}
