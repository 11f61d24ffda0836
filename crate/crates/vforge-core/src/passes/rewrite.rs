//! Site-local rewrites: operand commutation, strength-reduction style form
//! changes, immediate splitting, branch inversion and dead-pair padding.
//!
//! Each pass scans the original program, collects edits against original
//! instruction indices (consulting original liveness where a rewrite needs a
//! certifiably dead register), then applies them in descending index order
//! so earlier indices stay valid.

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::isa::{Instruction, Opcode, Program, Reg};

use super::editor::ProgramEditor;
use super::liveness::live_sets;
use super::rename::RENAMEABLE_REGS;

/// Swaps the source operands of commutative instructions at seeded sites.
pub fn commute(p: &Program, rng: &mut ChaCha8Rng) -> Program {
    let mut editor = ProgramEditor::from_program(p);
    for index in 0..editor.len() {
        let inst = editor.inst(index);
        if inst.opcode.is_commutative()
            && inst.operands[1] != inst.operands[2]
            && rng.random_bool(0.5)
        {
            let swapped = Instruction::rrr(inst.opcode, inst.reg(0), inst.reg(2), inst.reg(1));
            editor.set_inst(index, swapped);
        }
    }
    editor.finish().expect("commutation preserves validity")
}

enum Edit {
    Replace(usize, Instruction),
    /// Replace item at index with the first instruction (labels kept) and
    /// insert the second right after it.
    ReplacePair(usize, Instruction, Instruction),
    /// Collapse items (index, index+1) into one instruction at `index`.
    Collapse(usize, Instruction),
}

fn apply_edits(p: &Program, mut edits: Vec<Edit>) -> Program {
    if edits.is_empty() {
        return p.clone();
    }
    edits.sort_by_key(|e| {
        core::cmp::Reverse(match e {
            Edit::Replace(i, _) | Edit::ReplacePair(i, _, _) | Edit::Collapse(i, _) => *i,
        })
    });
    let mut editor = ProgramEditor::from_program(p);
    for edit in edits {
        match edit {
            Edit::Replace(i, inst) => editor.set_inst(i, inst),
            Edit::ReplacePair(i, a, b) => {
                editor.set_inst(i, a);
                editor.insert_after(i, b);
            }
            Edit::Collapse(i, inst) => {
                editor.set_inst(i, inst);
                editor.remove(i + 1);
            }
        }
    }
    editor.finish().expect("rewrites preserve validity")
}

/// Rewrites among equivalent instruction forms:
///
/// - `MOV rd, rs` / `ADDI rd, rs, 0` / `OR rd, rs, rs` interchange,
/// - `SLL rd, rs, 1` / `ADD rd, rs, rs` interchange,
/// - `XOR rd, rs, rs` -> `LI rd, 0` and `LI rd, 0` -> `XOR rd, rd, rd`,
/// - `ADDI rd, rs, K` -> `LI rt, K; ADD rd, rs, rt` when some `rt` is
///   provably dead at the site, and the adjacent reverse collapse when the
///   temporary dies immediately after.
pub fn strength(p: &Program, rng: &mut ChaCha8Rng) -> Program {
    let liveness = live_sets(p);
    let insts = p.instructions();
    let mut edits = Vec::new();
    let mut claimed = alloc::vec![false; insts.len()];

    for i in 0..insts.len() {
        if claimed[i] {
            continue;
        }
        // Adjacent `LI rt, K; ADD rd, rs, rt` (or the SUB form with -K)
        // collapses back to ADDI when rt is dead afterwards and nothing
        // jumps between the two.
        if i + 1 < insts.len() && !claimed[i + 1] {
            let (a, b) = (&insts[i], &insts[i + 1]);
            if a.opcode == Opcode::Li
                && matches!(b.opcode, Opcode::Add | Opcode::Sub)
                && p.labels().values().all(|&t| t != i + 1)
            {
                let rt = a.reg(0);
                let (rd, rs1, rs2) = (b.reg(0), b.reg(1), b.reg(2));
                let collapse = match (b.opcode, rs1 == rt, rs2 == rt) {
                    (Opcode::Add, false, true) => Some((rs1, a.imm(1))),
                    (Opcode::Add, true, false) => Some((rs2, a.imm(1))),
                    (Opcode::Sub, false, true) => Some((rs1, a.imm(1).wrapping_neg())),
                    _ => None,
                };
                if let Some((rs, constant)) = collapse {
                    if rs != rt
                        && rd != rt
                        && !liveness.live_out(i + 1).contains(rt)
                        && rng.random_bool(0.5)
                    {
                        claimed[i] = true;
                        claimed[i + 1] = true;
                        edits.push(Edit::Collapse(
                            i,
                            Instruction::rri(Opcode::Addi, rd, rs, constant),
                        ));
                        continue;
                    }
                }
            }
        }

        let inst = &insts[i];
        let replacement = match inst.opcode {
            Opcode::Mov => pick(rng, &[
                Instruction::rri(Opcode::Addi, inst.reg(0), inst.reg(1), 0),
                Instruction::rrr(Opcode::Or, inst.reg(0), inst.reg(1), inst.reg(1)),
            ]),
            Opcode::Addi if inst.imm(2) == 0 => pick(rng, &[
                Instruction::rr(Opcode::Mov, inst.reg(0), inst.reg(1)),
                Instruction::rrr(Opcode::Or, inst.reg(0), inst.reg(1), inst.reg(1)),
            ]),
            Opcode::Or if inst.reg(1) == inst.reg(2) => pick(rng, &[
                Instruction::rr(Opcode::Mov, inst.reg(0), inst.reg(1)),
                Instruction::rri(Opcode::Addi, inst.reg(0), inst.reg(1), 0),
            ]),
            Opcode::Sll if inst.imm(2) == 1 => {
                pick(rng, &[Instruction::rrr(Opcode::Add, inst.reg(0), inst.reg(1), inst.reg(1))])
            }
            Opcode::Add if inst.reg(1) == inst.reg(2) => {
                pick(rng, &[Instruction::rri(Opcode::Sll, inst.reg(0), inst.reg(1), 1)])
            }
            Opcode::Xor if inst.reg(1) == inst.reg(2) => {
                pick(rng, &[Instruction::ri(Opcode::Li, inst.reg(0), 0)])
            }
            Opcode::Li if inst.imm(1) == 0 => pick(rng, &[Instruction::rrr(
                Opcode::Xor,
                inst.reg(0),
                inst.reg(0),
                inst.reg(0),
            )]),
            Opcode::Addi => {
                // Expansion through a dead temporary, as an addition of the
                // immediate or a subtraction of its negation; the two forms
                // carry complementary immediate bit patterns.
                let rd = inst.reg(0);
                let rs = inst.reg(1);
                if rng.random_bool(0.5) {
                    let busy = liveness
                        .live_out(i)
                        .union(crate::isa::RegSet::from_iter([rd, rs]));
                    if let Some(rt) = dead_register(&busy) {
                        // Negative immediates preferentially become
                        // subtractions of the positive complement, flipping
                        // the sign profile of the constant stream.
                        let use_sub = if inst.imm(2) < 0 {
                            rng.random_ratio(7, 8)
                        } else {
                            rng.random_bool(0.5)
                        };
                        let (constant, op) = if use_sub {
                            (inst.imm(2).wrapping_neg(), Opcode::Sub)
                        } else {
                            (inst.imm(2), Opcode::Add)
                        };
                        edits.push(Edit::ReplacePair(
                            i,
                            Instruction::ri(Opcode::Li, rt, constant),
                            Instruction::rrr(op, rd, rs, rt),
                        ));
                    }
                }
                None
            }
            _ => None,
        };
        if let Some(inst) = replacement {
            edits.push(Edit::Replace(i, inst));
        }
    }

    apply_edits(p, edits)
}

fn pick(rng: &mut ChaCha8Rng, options: &[Instruction]) -> Option<Instruction> {
    if rng.random_bool(0.5) {
        Some(options[rng.random_range(0..options.len())].clone())
    } else {
        None
    }
}

/// First register in r0..r13 absent from `busy`.
fn dead_register(busy: &crate::isa::RegSet) -> Option<Reg> {
    (0..RENAMEABLE_REGS)
        .map(|i| Reg::new(i).unwrap())
        .find(|r| !busy.contains(*r))
}

/// Splits `LI rd, K` into `LI rd, K-d; ADDI rd, rd, d` at seeded sites.
/// The delta spans the full word so both halves of the split carry bit
/// patterns unrelated to K; wrapping arithmetic makes the pair exact for
/// every K.
pub fn imm_split(p: &Program, rng: &mut ChaCha8Rng) -> Program {
    let insts = p.instructions();
    let mut edits = Vec::new();
    for (i, inst) in insts.iter().enumerate() {
        if inst.opcode == Opcode::Li && rng.random_bool(0.5) {
            let mut delta: u32 = 0;
            while delta == 0 {
                delta = rng.random();
            }
            let head = (inst.imm(1) as u32).wrapping_sub(delta) as i32;
            edits.push(Edit::ReplacePair(
                i,
                Instruction::ri(Opcode::Li, inst.reg(0), head),
                Instruction::rri(Opcode::Addi, inst.reg(0), inst.reg(0), delta as i32),
            ));
        }
    }
    apply_edits(p, edits)
}

/// Inverts conditional branches at seeded sites:
/// `BEQ a, b, L` becomes `BNE a, b, skip; JMP L; skip:` (and dually for
/// `BNE`), swapping taken and fallthrough paths.
pub fn branch_flip(p: &Program, rng: &mut ChaCha8Rng) -> Program {
    let insts = p.instructions();
    let mut sites: Vec<usize> = Vec::new();
    for (i, inst) in insts.iter().enumerate() {
        if matches!(inst.opcode, Opcode::Beq | Opcode::Bne) && rng.random_bool(0.5) {
            sites.push(i);
        }
    }
    if sites.is_empty() {
        return p.clone();
    }

    let mut editor = ProgramEditor::from_program(p);
    for &i in sites.iter().rev() {
        let inst = editor.inst(i).clone();
        let flipped = match inst.opcode {
            Opcode::Beq => Opcode::Bne,
            Opcode::Bne => Opcode::Beq,
            _ => unreachable!("site filter"),
        };
        let target = alloc::string::String::from(inst.label().expect("branch has a label"));
        let skip = editor.fresh_label("bf");
        editor.set_inst(i, Instruction::rrl(flipped, inst.reg(0), inst.reg(1), skip.clone()));
        editor.insert_after(i, Instruction::jmp(target));
        editor.add_label(i + 2, skip);
    }
    editor.finish().expect("branch flip preserves validity")
}

/// Inserts up to `max(1, len/20)` dead two-instruction pairs on registers
/// certified dead at the insertion point, bounding growth near 10%.
pub fn pad_pair(p: &Program, rng: &mut ChaCha8Rng) -> Program {
    if p.is_empty() {
        return p.clone();
    }
    let liveness = live_sets(p);
    let n = p.len();
    let cap = (n / 20).max(1);
    let count = rng.random_range(1..=cap);

    let mut positions: Vec<usize> = Vec::new();
    for _ in 0..count {
        positions.push(rng.random_range(0..n));
    }
    positions.sort_unstable();
    positions.dedup();

    let mut editor = ProgramEditor::from_program(p);
    for &pos in positions.iter().rev() {
        let busy = liveness.live_in(pos);
        let Some(rt) = dead_register(&busy) else {
            continue;
        };
        // Small positive constants keep pad immediates from polluting the
        // high immediate bits the trigger analysis watches.
        let c1: i32 = (rng.random::<u32>() >> 12) as i32;
        let second = match rng.random_range(0..4u8) {
            0 => Instruction::rri(Opcode::Addi, rt, rt, (rng.random::<u32>() >> 12) as i32),
            1 => Instruction::rri(Opcode::Sll, rt, rt, rng.random_range(0..32)),
            2 => Instruction::rrr(Opcode::Mul, rt, rt, rt),
            _ => Instruction::rrr(Opcode::Xor, rt, rt, rt),
        };
        editor.insert_before(pos, Instruction::ri(Opcode::Li, rt, c1));
        editor.insert_after(pos, second);
    }
    editor.finish().expect("padding preserves validity")
}
