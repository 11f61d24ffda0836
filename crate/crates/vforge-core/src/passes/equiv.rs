use alloc::vec::Vec;

use crate::isa::{execute, ExecutionResult, Program};
use crate::sample::random_inputs;

/// Cycle budget for differential runs; far above anything in the corpus.
pub const DEFAULT_CYCLE_LIMIT: u64 = 1 << 20;

/// Outcome of differential testing two programs.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EquivalenceVerdict {
    Equivalent,
    /// First mismatching input vector, with both observed results. A fault
    /// on either side that the other side does not reproduce identically
    /// lands here too.
    Divergent {
        witness: Vec<u32>,
        left: ExecutionResult,
        right: ExecutionResult,
    },
}

impl EquivalenceVerdict {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, EquivalenceVerdict::Equivalent)
    }
}

/// Default differential stimulus: 64 seeded random vectors of 128 words.
pub fn default_test_inputs(seed: u64) -> Vec<Vec<u32>> {
    random_inputs(seed, 64, 128)
}

/// Runs both programs on every test vector and compares observable
/// behaviour: the output stream and the termination cause. Cycle counts may
/// differ freely. Returns the first divergence as a witness.
pub fn check_equivalence(p: &Program, q: &Program, tests: &[Vec<u32>]) -> EquivalenceVerdict {
    for input in tests {
        let left = execute(p, input, DEFAULT_CYCLE_LIMIT);
        let right = execute(q, input, DEFAULT_CYCLE_LIMIT);
        if left.outputs != right.outputs || left.termination != right.termination {
            return EquivalenceVerdict::Divergent {
                witness: input.clone(),
                left,
                right,
            };
        }
    }
    EquivalenceVerdict::Equivalent
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::parse_program;

    #[test]
    fn program_is_equivalent_to_itself() {
        let p = parse_program("IN r1\nADDI r1, r1, 1\nOUT r1\nHALT").unwrap();
        let tests = default_test_inputs(1);
        assert_eq!(check_equivalence(&p, &p, &tests), EquivalenceVerdict::Equivalent);
    }

    #[test]
    fn corrupted_constant_diverges_with_witness() {
        let p = parse_program("IN r1\nADDI r1, r1, 1\nOUT r1\nHALT").unwrap();
        let q = parse_program("IN r1\nADDI r1, r1, 2\nOUT r1\nHALT").unwrap();
        let tests = default_test_inputs(1);
        match check_equivalence(&p, &q, &tests) {
            EquivalenceVerdict::Divergent { witness, left, right } => {
                assert_eq!(witness, tests[0]);
                assert_eq!(left.outputs[0].wrapping_add(1), right.outputs[0]);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn fault_on_one_side_is_divergence() {
        let p = parse_program("IN r1\nOUT r1\nHALT").unwrap();
        let q = parse_program("IN r1\nIN r2\nOUT r1\nHALT").unwrap();
        // One-word inputs exhaust q but not p.
        let tests = alloc::vec![alloc::vec![42u32]];
        assert!(!check_equivalence(&p, &q, &tests).is_equivalent());
    }
}
