//! Variant Similarity (VS): bigram count tables over opcodes and operands,
//! scored by summed element-wise minima.
//!
//! Two variants of a program that differ in the frequency and ordering of
//! opcodes and operands drive internal processor nets differently; the lower
//! the VS of a pair, the less likely a rare trigger condition exercised by
//! one variant is exercised by the other. Scores are computed from the
//! static listing order of the assembly, not an execution trace.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::isa::{Operand, Program, OPCODE_COUNT};

/// Tokens in the operand alphabet: 16 registers, one bucket for all
/// immediates, one for all labels.
pub const OPERAND_ALPHABET: usize = 18;

const IMM_TOKEN: usize = 16;
const LABEL_TOKEN: usize = 17;

/// Which token alphabet a [`BigramTable`] counts over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alphabet {
    Opcode,
    Operand,
}

impl Alphabet {
    pub fn size(self) -> usize {
        match self {
            Alphabet::Opcode => OPCODE_COUNT,
            Alphabet::Operand => OPERAND_ALPHABET,
        }
    }

    /// Token names in index order, for table dumps.
    pub fn token_name(self, index: usize) -> String {
        match self {
            Alphabet::Opcode => String::from(crate::isa::Opcode::ALL[index].mnemonic()),
            Alphabet::Operand => match index {
                IMM_TOKEN => String::from("IMM"),
                LABEL_TOKEN => String::from("LABEL"),
                r => alloc::format!("r{r}"),
            },
        }
    }
}

/// Square table of adjacent-pair counts: `count(a, b)` is the number of
/// times token `a` is immediately followed by token `b` in the sequence the
/// table was built from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigramTable {
    alphabet: Alphabet,
    counts: Vec<u32>,
}

impl BigramTable {
    pub fn from_sequence(alphabet: Alphabet, tokens: &[usize]) -> BigramTable {
        let n = alphabet.size();
        let mut counts = vec![0u32; n * n];
        for pair in tokens.windows(2) {
            counts[pair[0] * n + pair[1]] += 1;
        }
        BigramTable { alphabet, counts }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn count(&self, a: usize, b: usize) -> u32 {
        self.counts[a * self.alphabet.size() + b]
    }

    /// Sum of all cells; equals `max(0, sequence length - 1)`.
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    fn min_sum(&self, other: &BigramTable) -> u64 {
        self.counts
            .iter()
            .zip(other.counts.iter())
            .map(|(&a, &b)| a.min(b) as u64)
            .sum()
    }
}

/// Bigram profile of one program: opcode table in listing order plus operand
/// table over the flattened operand sequence (destination first, immediates
/// bucketed as `IMM`, labels as `LABEL`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariantSignature {
    pub opcode_table: BigramTable,
    pub operand_table: BigramTable,
    pub opcode_pair_total: u64,
    pub operand_pair_total: u64,
}

impl VariantSignature {
    fn total_pairs(&self, mode: ScoreMode) -> u64 {
        match mode {
            ScoreMode::Full => self.opcode_pair_total + self.operand_pair_total,
            ScoreMode::OpcodeOnly => self.opcode_pair_total,
        }
    }
}

/// Raw and normalized similarity of a signature pair. `raw` is the summed
/// element-wise minimum; `normalized` divides by the mean total pair count
/// of the two programs, giving 1.0 for identical programs.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimilarityScore {
    pub raw: u64,
    pub normalized: f64,
}

/// Whether operand bigrams participate in the score. `OpcodeOnly` matches
/// deployments where hardware register renaming makes the operand tables
/// unreliable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ScoreMode {
    #[default]
    Full,
    OpcodeOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimilarityError {
    #[error("cannot build a signature for an empty program")]
    EmptyProgram,
    #[error("signatures were built over different alphabets")]
    AlphabetMismatch,
}

/// Builds the opcode and operand bigram tables of `p` in listing order.
pub fn build_signature(p: &Program) -> Result<VariantSignature, SimilarityError> {
    if p.is_empty() {
        return Err(SimilarityError::EmptyProgram);
    }
    let opcodes: Vec<usize> = p.instructions().iter().map(|i| i.opcode.index()).collect();
    let operands: Vec<usize> = p
        .instructions()
        .iter()
        .flat_map(|i| i.operands.iter())
        .map(|o| match o {
            Operand::Reg(r) => r.index(),
            Operand::Imm(_) => IMM_TOKEN,
            Operand::Label(_) => LABEL_TOKEN,
        })
        .collect();

    let opcode_table = BigramTable::from_sequence(Alphabet::Opcode, &opcodes);
    let operand_table = BigramTable::from_sequence(Alphabet::Operand, &operands);
    let opcode_pair_total = opcode_table.total();
    let operand_pair_total = operand_table.total();
    Ok(VariantSignature {
        opcode_table,
        operand_table,
        opcode_pair_total,
        operand_pair_total,
    })
}

/// Scores a signature pair in [`ScoreMode::Full`].
pub fn variant_similarity(
    a: &VariantSignature,
    b: &VariantSignature,
) -> Result<SimilarityScore, SimilarityError> {
    variant_similarity_with(a, b, ScoreMode::Full)
}

/// Scores a signature pair: `raw` sums the element-wise minima of the
/// opcode tables (and operand tables in full mode); `normalized` divides by
/// the mean of the two programs' total pair counts. Degenerate pairs where
/// both totals are zero score 1.0.
pub fn variant_similarity_with(
    a: &VariantSignature,
    b: &VariantSignature,
    mode: ScoreMode,
) -> Result<SimilarityScore, SimilarityError> {
    if a.opcode_table.alphabet() != b.opcode_table.alphabet()
        || a.operand_table.alphabet() != b.operand_table.alphabet()
    {
        return Err(SimilarityError::AlphabetMismatch);
    }
    let mut raw = a.opcode_table.min_sum(&b.opcode_table);
    if mode == ScoreMode::Full {
        raw += a.operand_table.min_sum(&b.operand_table);
    }
    let mean = (a.total_pairs(mode) + b.total_pairs(mode)) as f64 / 2.0;
    let normalized = if mean == 0.0 { 1.0 } else { raw as f64 / mean };
    Ok(SimilarityScore { raw, normalized })
}

/// Pairwise similarity over a pool of programs.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    names: Vec<String>,
    scores: Vec<SimilarityScore>,
}

impl SimilarityMatrix {
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> SimilarityScore {
        self.scores[i * self.names.len() + j]
    }

    /// Largest normalized score strictly off the diagonal.
    pub fn max_off_diagonal(&self) -> Option<f64> {
        let n = self.len();
        let mut best: Option<f64> = None;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let v = self.get(i, j).normalized;
                    best = Some(best.map_or(v, |b: f64| b.max(v)));
                }
            }
        }
        best
    }
}

/// Builds the full symmetric similarity matrix of `pool`, diagonal included.
pub fn pairwise_matrix(
    pool: &[&Program],
    mode: ScoreMode,
) -> Result<SimilarityMatrix, SimilarityError> {
    let signatures: Vec<VariantSignature> = pool
        .iter()
        .map(|p| build_signature(p))
        .collect::<Result<_, _>>()?;
    let n = pool.len();
    let mut scores = vec![
        SimilarityScore {
            raw: 0,
            normalized: 0.0
        };
        n * n
    ];
    for i in 0..n {
        for j in i..n {
            let s = variant_similarity_with(&signatures[i], &signatures[j], mode)?;
            scores[i * n + j] = s;
            scores[j * n + i] = s;
        }
    }
    Ok(SimilarityMatrix {
        names: pool.iter().map(|p| String::from(p.name())).collect(),
        scores,
    })
}
