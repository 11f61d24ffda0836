use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use super::nets::{NetId, NET_COUNT};

/// Per-cycle logic values of the 120 traced nets, one row per retired
/// instruction. Rows also remember the instruction index that produced
/// them so traces can be sliced into bundle-segment windows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetTraceMatrix {
    rows: Vec<u128>,
    pcs: Vec<u32>,
    pub label: String,
}

impl NetTraceMatrix {
    pub fn new(label: impl Into<String>) -> NetTraceMatrix {
        NetTraceMatrix {
            rows: Vec::new(),
            pcs: Vec::new(),
            label: label.into(),
        }
    }

    pub fn cycles(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push_row(&mut self, row: u128, pc: usize) {
        self.rows.push(row);
        self.pcs.push(pc as u32);
    }

    pub fn bit(&self, cycle: usize, net: NetId) -> bool {
        self.rows[cycle] >> net.index() & 1 == 1
    }

    pub fn row(&self, cycle: usize) -> u128 {
        self.rows[cycle]
    }

    pub fn pc(&self, cycle: usize) -> usize {
        self.pcs[cycle] as usize
    }

    /// Number of cycles the net holds logic one.
    pub fn ones(&self, net: NetId) -> usize {
        let mask = 1u128 << net.index();
        self.rows.iter().filter(|&&r| r & mask != 0).count()
    }

    /// Cycle bitset of one net, 64 cycles per word, for fast subset
    /// intersection during trigger analysis.
    pub fn column_bitset(&self, net: NetId) -> Vec<u64> {
        let mask = 1u128 << net.index();
        let mut words = vec![0u64; self.rows.len().div_ceil(64)];
        for (c, &row) in self.rows.iter().enumerate() {
            if row & mask != 0 {
                words[c / 64] |= 1 << (c % 64);
            }
        }
        words
    }

    /// Rows whose pc falls inside any of `ranges`, preserving cycle order.
    pub fn slice_pc_ranges(&self, ranges: &[Range<usize>], label: impl Into<String>) -> NetTraceMatrix {
        let mut out = NetTraceMatrix::new(label);
        for (c, &pc) in self.pcs.iter().enumerate() {
            if ranges.iter().any(|r| r.contains(&(pc as usize))) {
                out.push_row(self.rows[c], pc as usize);
            }
        }
        out
    }
}

/// Per-net static probability: the fraction of cycles the net sits at
/// logic one over the trace window.
#[derive(Debug, Clone)]
pub struct StaticProbabilityTable {
    ones: Vec<u32>,
    cycles: usize,
}

impl StaticProbabilityTable {
    pub fn sp(&self, net: NetId) -> f64 {
        if self.cycles == 0 {
            0.0
        } else {
            self.ones[net.index()] as f64 / self.cycles as f64
        }
    }

    pub fn ones(&self, net: NetId) -> u32 {
        self.ones[net.index()]
    }

    pub fn cycles(&self) -> usize {
        self.cycles
    }
}

/// Counts logic-one cycles per net; exact fractions, no sampling.
pub fn static_probabilities(trace: &NetTraceMatrix) -> StaticProbabilityTable {
    let mut ones = vec![0u32; NET_COUNT];
    for c in 0..trace.cycles() {
        let row = trace.row(c);
        if row == 0 {
            continue;
        }
        for (i, count) in ones.iter_mut().enumerate() {
            if row >> i & 1 == 1 {
                *count += 1;
            }
        }
    }
    StaticProbabilityTable {
        ones,
        cycles: trace.cycles(),
    }
}
