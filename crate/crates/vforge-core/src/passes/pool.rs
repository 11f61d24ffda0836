use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::isa::Program;

use super::equiv::{check_equivalence, EquivalenceVerdict};
use super::{apply_sequence, PassSequence};

/// How a candidate was produced: which sequence with which master seed.
/// Structural duplicates merge, accumulating provenance entries.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Provenance {
    pub sequence: String,
    pub seed: u64,
}

/// One generated variant with its differential verdict.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub name: String,
    pub program: Program,
    pub provenance: Vec<Provenance>,
    pub verdict: EquivalenceVerdict,
}

impl Candidate {
    pub fn is_eligible(&self) -> bool {
        self.verdict.is_equivalent()
    }
}

/// A base program with its deduplicated, verified candidate variants.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    pub base: Program,
    pub candidates: Vec<Candidate>,
}

impl CandidatePool {
    /// Candidates whose verdict is `Equivalent`; only these may be selected.
    pub fn eligible(&self) -> impl Iterator<Item = &Candidate> {
        self.candidates.iter().filter(|c| c.is_eligible())
    }
}

/// Runs every sequence in `db` with `seeds_per_sequence` master seeds drawn
/// in order from `ChaCha8Rng::seed_from_u64(master_seed)`, verifies each
/// result differentially against `base` on `tests`, and deduplicates
/// structurally equal programs (keeping all provenance).
///
/// Candidate names are `{base}.{sequence}.s{index}` from the first
/// provenance entry.
pub fn generate_pool(
    base: &Program,
    db: &[PassSequence],
    seeds_per_sequence: usize,
    master_seed: u64,
    tests: &[Vec<u32>],
) -> CandidatePool {
    let mut seeder = ChaCha8Rng::seed_from_u64(master_seed);
    let mut by_structure: BTreeMap<crate::isa::StructuralKey, usize> = BTreeMap::new();
    let mut candidates: Vec<Candidate> = Vec::new();

    for sequence in db {
        for index in 0..seeds_per_sequence {
            let seed = seeder.next_u64();
            let mut program = apply_sequence(base, sequence, seed);
            let provenance = Provenance {
                sequence: sequence.name.clone(),
                seed,
            };
            let key = program.structural_key();
            match by_structure.get(&key) {
                Some(&at) => candidates[at].provenance.push(provenance),
                None => {
                    let name = format!("{}.{}.s{index}", base.name(), sequence.name);
                    program.set_name(name.clone());
                    let verdict = check_equivalence(base, &program, tests);
                    by_structure.insert(key, candidates.len());
                    candidates.push(Candidate {
                        name,
                        program,
                        provenance: alloc::vec![provenance],
                        verdict,
                    });
                }
            }
        }
    }

    CandidatePool {
        base: base.clone(),
        candidates,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::parse_program;
    use crate::passes::{default_test_inputs, PassId};

    #[test]
    fn identity_sequences_dedup_to_one_candidate() {
        // No commutative sites and no branches: these passes cannot touch
        // the program, so three seeds collapse to one candidate.
        let p = parse_program("IN r1\nOUT r1\nHALT").unwrap();
        let db = [PassSequence::new(
            "noop",
            alloc::vec![PassId::Commute, PassId::BrFlip],
        )];
        let tests = default_test_inputs(0);
        let pool = generate_pool(&p, &db, 3, 42, &tests);
        assert_eq!(pool.candidates.len(), 1);
        assert_eq!(pool.candidates[0].provenance.len(), 3);
        assert!(pool.candidates[0].is_eligible());
    }

    #[test]
    fn every_candidate_is_verified_equivalent() {
        let src = "
    IN r1
    IN r2
    ADD r3, r1, r2
    MOV r4, r3
    MUL r4, r4, r3
    OUT r4
    HALT
";
        let p = parse_program(src).unwrap();
        let db = crate::passes::default_database();
        let tests = default_test_inputs(7);
        let pool = generate_pool(&p, &db, 3, 1234, &tests);
        assert!(pool.candidates.len() >= 4, "got {}", pool.candidates.len());
        for c in &pool.candidates {
            assert!(c.is_eligible(), "candidate {} diverged", c.name);
        }
    }

    #[test]
    fn pool_generation_replays_exactly() {
        let p = parse_program("IN r1\nADDI r2, r1, 9\nOUT r2\nHALT").unwrap();
        let db = crate::passes::default_database();
        let tests = default_test_inputs(7);
        let a = generate_pool(&p, &db, 2, 99, &tests);
        let b = generate_pool(&p, &db, 2, 99, &tests);
        assert_eq!(a.candidates.len(), b.candidates.len());
        for (x, y) in a.candidates.iter().zip(b.candidates.iter()) {
            assert_eq!(x.program, y.program);
            assert_eq!(x.provenance.len(), y.provenance.len());
        }
    }
}
