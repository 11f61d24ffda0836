use alloc::vec::Vec;

use crate::isa::Program;
use crate::similarity::{pairwise_matrix, ScoreMode, SimilarityError, SimilarityMatrix};

use super::pool::CandidatePool;

/// Outcome of diversity-driven selection: the chosen programs, the largest
/// pairwise normalized VS among them (lower is more diverse) and the full
/// pairwise matrix over the chosen set.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub chosen: Vec<Program>,
    pub objective: f64,
    pub matrix: SimilarityMatrix,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SelectError {
    #[error("need at least {needed} equivalent candidates, pool has {available}")]
    InsufficientCandidates { needed: usize, available: usize },
    #[error("selection requires k >= 2, got {0}")]
    KTooSmall(usize),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
}

/// Greedy minimum-similarity selection over the base program plus all
/// eligible candidates: seed with the globally minimum-VS pair, then
/// repeatedly add the candidate whose worst similarity against the chosen
/// set is smallest. Ties break toward the lexicographically smaller program
/// name, so selection is deterministic.
pub fn select_variants(
    pool: &CandidatePool,
    k: usize,
    mode: ScoreMode,
) -> Result<SelectionResult, SelectError> {
    if k < 2 {
        return Err(SelectError::KTooSmall(k));
    }
    let mut participants: Vec<&Program> = alloc::vec![&pool.base];
    participants.extend(pool.eligible().map(|c| &c.program));
    participants.sort_by(|a, b| a.name().cmp(b.name()));
    if participants.len() < k {
        return Err(SelectError::InsufficientCandidates {
            needed: k,
            available: participants.len(),
        });
    }

    let matrix = pairwise_matrix(&participants, mode)?;
    let n = participants.len();
    let norm = |i: usize, j: usize| matrix.get(i, j).normalized;

    // Seed pair: smallest normalized VS, first in name order on ties.
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..n {
        for j in i + 1..n {
            let v = norm(i, j);
            if best.is_none_or(|(bv, _, _)| v < bv) {
                best = Some((v, i, j));
            }
        }
    }
    let (_, a, b) = best.expect("n >= 2");
    let mut chosen: Vec<usize> = alloc::vec![a, b];

    while chosen.len() < k {
        let mut next: Option<(f64, usize)> = None;
        for c in 0..n {
            if chosen.contains(&c) {
                continue;
            }
            let worst = chosen
                .iter()
                .map(|&s| norm(c, s))
                .fold(0.0_f64, f64::max);
            if next.is_none_or(|(bv, _)| worst < bv) {
                next = Some((worst, c));
            }
        }
        chosen.push(next.expect("pool large enough").1);
    }
    chosen.sort_unstable();

    let chosen_programs: Vec<&Program> = chosen.iter().map(|&i| participants[i]).collect();
    let sub = pairwise_matrix(&chosen_programs, mode)?;
    let objective = sub.max_off_diagonal().unwrap_or(1.0);

    Ok(SelectionResult {
        chosen: chosen_programs.into_iter().cloned().collect(),
        objective,
        matrix: sub,
    })
}

/// Exhaustive optimum of the same objective, for oracle checks on small
/// pools: the k-subset minimizing the maximum pairwise normalized VS.
pub fn exhaustive_best_objective(
    pool: &CandidatePool,
    k: usize,
    mode: ScoreMode,
) -> Result<f64, SelectError> {
    if k < 2 {
        return Err(SelectError::KTooSmall(k));
    }
    let mut participants: Vec<&Program> = alloc::vec![&pool.base];
    participants.extend(pool.eligible().map(|c| &c.program));
    participants.sort_by(|a, b| a.name().cmp(b.name()));
    let n = participants.len();
    if n < k {
        return Err(SelectError::InsufficientCandidates {
            needed: k,
            available: n,
        });
    }
    let matrix = pairwise_matrix(&participants, mode)?;

    let mut best = f64::INFINITY;
    let mut subset: Vec<usize> = (0..k).collect();
    loop {
        let mut worst = 0.0_f64;
        for x in 0..k {
            for y in x + 1..k {
                worst = worst.max(matrix.get(subset[x], subset[y]).normalized);
            }
        }
        best = best.min(worst);

        // Next k-combination in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                return Ok(best);
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
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::parse_program;
    use crate::passes::pool::{Candidate, CandidatePool};
    use crate::passes::EquivalenceVerdict;

    fn pool_of(base: &str, variants: &[(&str, &str)]) -> CandidatePool {
        let base = parse_program(base).unwrap();
        let candidates = variants
            .iter()
            .map(|(name, src)| {
                let mut program = parse_program(src).unwrap();
                program.set_name(*name);
                Candidate {
                    name: String::from(*name),
                    program,
                    provenance: alloc::vec![],
                    verdict: EquivalenceVerdict::Equivalent,
                }
            })
            .collect();
        CandidatePool { base, candidates }
    }

    #[test]
    fn disjoint_pair_wins() {
        // base and copy are identical; b is disjoint from both.
        let mut pool = pool_of(
            "LI r1, 5\nLI r1, 6\nJMP e\ne: HALT",
            &[
                ("copy", "LI r1, 5\nLI r1, 6\nJMP e\ne: HALT"),
                ("b", "IN r2\nOUT r2\nIN r2\nOUT r2\nOUT r2\nHALT"),
            ],
        );
        pool.base.set_name("base");
        let r = select_variants(&pool, 2, ScoreMode::Full).unwrap();
        assert_eq!(r.objective, 0.0);
        let names: Vec<&str> = r.chosen.iter().map(|p| p.name()).collect();
        assert!(names.contains(&"b"));
    }

    #[test]
    fn k_equals_pool_size_takes_everything() {
        let mut pool = pool_of(
            "LI r1, 5\nOUT r1\nHALT",
            &[
                ("v1", "LI r2, 5\nOUT r2\nHALT"),
                ("v2", "LI r3, 5\nOUT r3\nHALT"),
            ],
        );
        pool.base.set_name("base");
        let r = select_variants(&pool, 3, ScoreMode::Full).unwrap();
        assert_eq!(r.chosen.len(), 3);
        let full = pairwise_matrix(
            &r.chosen.iter().collect::<Vec<_>>(),
            ScoreMode::Full,
        )
        .unwrap();
        assert_eq!(r.objective, full.max_off_diagonal().unwrap());
    }

    #[test]
    fn insufficient_candidates_is_an_error() {
        let mut pool = pool_of("LI r1, 5\nOUT r1\nHALT", &[]);
        pool.base.set_name("base");
        assert!(matches!(
            select_variants(&pool, 2, ScoreMode::Full),
            Err(SelectError::InsufficientCandidates { .. })
        ));
    }
}
