use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::isa::{Instruction, Opcode, Operand, Program, Reg};
use crate::passes::{check_equivalence, default_test_inputs};

use super::glue::{
    compare_fragment, emit_section, prologue, vote_fragment, zero_wall, Asm, IoStyle,
};
use super::layout::{BundleLayout, SegmentKind, SegmentSpan, REGION_WORDS};
use super::VotePolicy;

/// The variant-integrated executable: k embedded variants, diversified
/// compare/vote glue, and the layout needed to interpret a run.
#[derive(Debug, Clone)]
pub struct HardenedBundle {
    pub program: Program,
    pub variants: Vec<Program>,
    pub policy: VotePolicy,
    pub layout: BundleLayout,
    /// Named glue instruction sequences, for diversity inspection: the
    /// per-variant IO templates (instantiated on a placeholder register)
    /// plus the diversified compare and vote fragments.
    pub glue_fragments: Vec<(String, Vec<Instruction>)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BundleError {
    #[error("vote policy requires an odd variant count >= 3, got {0}")]
    NonOddK(usize),
    #[error("policy expects {expected} variants, got {found}")]
    VariantCountMismatch { expected: usize, found: usize },
    #[error("variant {index} is empty")]
    EmptyVariant { index: usize },
    #[error("variant {index} uses reserved glue register r{reg}")]
    ReservedRegisterUse { index: usize, reg: usize },
    #[error("variant {index} has {outs} protected outputs, region holds {capacity}")]
    RegionOverflow {
        index: usize,
        outs: usize,
        capacity: usize,
    },
    #[error("variant {index} diverges from variant 0 on differential tests")]
    InequivalentVariants { index: usize },
}

/// Builds the single integrated program per the layout in
/// [`super::layout`]: a staging prologue, the first two variants, the eager
/// compare, the escalation variants, the vote, and the emit tail. `seed`
/// drives every glue diversification choice, so bundles replay exactly.
pub fn build_bundle(
    variants: &[Program],
    policy: VotePolicy,
    seed: u64,
) -> Result<HardenedBundle, BundleError> {
    let k = policy.variants();
    if variants.len() != k {
        return Err(BundleError::VariantCountMismatch {
            expected: k,
            found: variants.len(),
        });
    }
    validate_variants(variants)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let styles = IoStyle::deal(k, &mut rng);
    let mut fragments: Vec<(String, Vec<Instruction>)> = Vec::new();
    let placeholder = Reg::new(0).unwrap();
    for (i, style) in styles.iter().enumerate() {
        fragments.push((
            format!("v{i}_out_template"),
            style.out_template(i, placeholder),
        ));
        fragments.push((
            format!("v{i}_in_template"),
            style.in_template(i, placeholder),
        ));
    }

    let mut asm = Asm::new();
    let mut segments: Vec<SegmentSpan> = Vec::new();
    let mark = |segments: &mut Vec<SegmentSpan>, kind, start, end| {
        segments.push(SegmentSpan { kind, start, end });
    };

    let start = asm.len();
    prologue(&mut asm);
    mark(&mut segments, SegmentKind::Prologue, start, asm.len());

    for i in 0..2 {
        let start = asm.len();
        embed_variant(&mut asm, i, &variants[i], styles[i], &mut rng);
        mark(&mut segments, SegmentKind::Variant(i), start, asm.len());
    }

    let start = asm.len();
    let cmp = compare_fragment("__emit_clean", "__v2_entry", rng.next_u64());
    fragments.push((
        String::from("compare_fragment"),
        cmp.iter().map(|(_, i)| i.clone()).collect(),
    ));
    asm.extend(cmp);
    mark(&mut segments, SegmentKind::Compare, start, asm.len());

    for i in 2..k {
        let start = asm.len();
        embed_variant(&mut asm, i, &variants[i], styles[i], &mut rng);
        mark(&mut segments, SegmentKind::Variant(i), start, asm.len());
    }

    let start = asm.len();
    let vote = vote_fragment(k, "__emit_acc", rng.next_u64());
    fragments.push((
        String::from("vote_fragment"),
        vote.iter().map(|(_, i)| i.clone()).collect(),
    ));
    asm.extend(vote);
    mark(&mut segments, SegmentKind::Vote, start, asm.len());

    let start = asm.len();
    emit_section(&mut asm);
    mark(&mut segments, SegmentKind::Emit, start, asm.len());

    let name = format!("{}-bundle", variants[0].name());
    let program = asm.finish(name).expect("bundle assembles to a valid program");

    Ok(HardenedBundle {
        program,
        variants: variants.to_vec(),
        policy,
        layout: BundleLayout {
            k,
            region_words: REGION_WORDS,
            segments,
        },
        glue_fragments: fragments,
    })
}

/// [`build_bundle`] plus a differential safety net: every variant is
/// re-checked against variant 0 on seeded random vectors before bundling.
pub fn build_bundle_verified(
    variants: &[Program],
    policy: VotePolicy,
    seed: u64,
) -> Result<HardenedBundle, BundleError> {
    let tests = default_test_inputs(seed);
    for (index, v) in variants.iter().enumerate().skip(1) {
        if !check_equivalence(&variants[0], v, &tests).is_equivalent() {
            return Err(BundleError::InequivalentVariants { index });
        }
    }
    build_bundle(variants, policy, seed)
}

fn validate_variants(variants: &[Program]) -> Result<(), BundleError> {
    for (index, v) in variants.iter().enumerate() {
        if v.is_empty() {
            return Err(BundleError::EmptyVariant { index });
        }
        let mut outs = 0usize;
        for inst in v.instructions() {
            for r in inst.regs() {
                if r.index() >= 14 {
                    return Err(BundleError::ReservedRegisterUse {
                        index,
                        reg: r.index(),
                    });
                }
            }
            if inst.opcode == Opcode::Out {
                outs += 1;
            }
        }
        // Static lower bound; loops are re-checked at run time against the
        // region cursor.
        if outs > REGION_WORDS as usize {
            return Err(BundleError::RegionOverflow {
                index,
                outs,
                capacity: REGION_WORDS as usize,
            });
        }
    }
    Ok(())
}

/// Splices variant `index` into the bundle: entry label, register
/// zero-wall, relabeled body with `IN`/`OUT` rewired through the variant's
/// IO templates, and every `HALT` turned into a jump to the exit label
/// (which binds to whatever section follows).
fn embed_variant(
    asm: &mut Asm,
    index: usize,
    variant: &Program,
    style: IoStyle,
    rng: &mut ChaCha8Rng,
) {
    let prefix = |l: &str| format!("__v{index}_{l}");
    asm.label(format!("__v{index}_entry"));
    for inst in zero_wall(rng) {
        asm.push(inst);
    }

    let mut labels_at: Vec<Vec<&str>> = alloc::vec![Vec::new(); variant.len()];
    for (name, at) in variant.labels() {
        labels_at[*at].push(name);
    }

    for (i, inst) in variant.instructions().iter().enumerate() {
        for l in &labels_at[i] {
            asm.label(prefix(l));
        }
        match inst.opcode {
            Opcode::In => {
                for t in style.in_template(index, inst.reg(0)) {
                    asm.push(t);
                }
            }
            Opcode::Out => {
                for t in style.out_template(index, inst.reg(0)) {
                    asm.push(t);
                }
            }
            Opcode::Halt => asm.push(Instruction::jmp(prefix("exit"))),
            _ => {
                let operands = inst
                    .operands
                    .iter()
                    .map(|o| match o {
                        Operand::Label(l) => Operand::Label(prefix(l)),
                        other => other.clone(),
                    })
                    .collect();
                asm.push(Instruction::new(inst.opcode, operands).expect("same signature"));
            }
        }
    }
    asm.label(prefix("exit"));
}
