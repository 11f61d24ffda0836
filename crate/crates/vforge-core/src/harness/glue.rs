//! Glue code generation: input staging, per-variant IO rewiring, the eager
//! compare loop and the majority-vote routine.
//!
//! The compare and vote fragments are themselves pushed through the variant
//! generator (with a control-flow-safe pass subset) so no two bundles, and
//! no two fragments within a bundle, present the attacker with one fixed
//! compare implementation to key a trigger on. Per-variant IO templates are
//! drawn from a seeded style space for the same reason.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::isa::{Instruction, Opcode, Operand, Program, Reg, ValidateError};
use crate::passes::{apply_pass, PassId};

use super::layout::{
    eq_flag_cell, in_cursor_cell, out_cursor_cell, region_base, CELL_ACC_BASE, CELL_ACC_COUNT,
    CELL_IN_COUNT, CELL_VERDICT, IN_BUF_BASE, VERDICT_NO_MAJORITY, VERDICT_TOLERATED,
};

/// Tiny assembler accumulating labeled instructions.
#[derive(Debug, Default)]
pub struct Asm {
    items: Vec<(Vec<String>, Instruction)>,
    pending: Vec<String>,
}

impl Asm {
    pub fn new() -> Asm {
        Asm::default()
    }

    /// Attaches `name` to the next pushed instruction.
    pub fn label(&mut self, name: impl Into<String>) {
        self.pending.push(name.into());
    }

    pub fn push(&mut self, inst: Instruction) {
        let labels = core::mem::take(&mut self.pending);
        self.items.push((labels, inst));
    }

    pub fn extend(&mut self, items: impl IntoIterator<Item = (Vec<String>, Instruction)>) {
        for (labels, inst) in items {
            for l in labels {
                self.label(l);
            }
            self.push(inst);
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn finish(self, name: impl Into<String>) -> Result<Program, ValidateError> {
        assert!(self.pending.is_empty(), "trailing labels without code");
        let mut labels = BTreeMap::new();
        let mut instructions = Vec::with_capacity(self.items.len());
        for (index, (names, inst)) in self.items.into_iter().enumerate() {
            for n in names {
                labels.insert(n, index);
            }
            instructions.push(inst);
        }
        Program::new(name, instructions, labels, Vec::new())
    }
}

const GLUE_ADDR: Reg = match Reg::new(14) {
    Some(r) => r,
    None => unreachable!(),
};
const GLUE_CUR: Reg = match Reg::new(15) {
    Some(r) => r,
    None => unreachable!(),
};

/// Style parameters of one variant's IO templates; distinct styles yield
/// instruction sequences that differ beyond their baked-in addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IoStyle {
    /// Which reserved register holds the cursor cell address.
    swap_regs: bool,
    /// Update the cursor before (true) or after (false) the payload access.
    pre_increment: bool,
    /// Displacement folded out of the cursor cell address into offsets.
    delta: i32,
}

impl IoStyle {
    /// Deals pairwise-distinct styles for `k` variants from a seeded space.
    pub fn deal(k: usize, rng: &mut ChaCha8Rng) -> Vec<IoStyle> {
        let mut space: Vec<IoStyle> = Vec::new();
        for delta in 0..16 {
            for swap_regs in [false, true] {
                for pre_increment in [false, true] {
                    space.push(IoStyle {
                        swap_regs,
                        pre_increment,
                        delta,
                    });
                }
            }
        }
        space.shuffle(rng);
        space.truncate(k);
        space
    }

    fn regs(&self) -> (Reg, Reg) {
        if self.swap_regs {
            (GLUE_CUR, GLUE_ADDR)
        } else {
            (GLUE_ADDR, GLUE_CUR)
        }
    }

    /// `OUT rs` replacement: append `rs` to this variant's output region and
    /// bump the region cursor.
    pub fn out_template(&self, variant: usize, rs: Reg) -> Vec<Instruction> {
        self.stream_template(out_cursor_cell(variant), region_base(variant), rs, false)
    }

    /// `IN rd` replacement: read the next staged input word for this
    /// variant and bump its input cursor.
    pub fn in_template(&self, variant: usize, rd: Reg) -> Vec<Instruction> {
        self.stream_template(in_cursor_cell(variant), IN_BUF_BASE, rd, true)
    }

    fn stream_template(&self, cell: u32, buf: u32, payload: Reg, is_load: bool) -> Vec<Instruction> {
        let (addr, cur) = self.regs();
        let delta = self.delta;
        let mut seq = Vec::with_capacity(5);
        seq.push(Instruction::ri(Opcode::Li, addr, cell as i32 - delta));
        seq.push(Instruction::rri(Opcode::Lw, cur, addr, delta));
        let access = |base_adjust: i32| {
            let offset = buf as i32 + base_adjust;
            if is_load {
                Instruction::rri(Opcode::Lw, payload, cur, offset)
            } else {
                Instruction::rri(Opcode::Sw, payload, cur, offset)
            }
        };
        if self.pre_increment {
            seq.push(Instruction::rri(Opcode::Addi, cur, cur, 1));
            seq.push(Instruction::rri(Opcode::Sw, cur, addr, delta));
            seq.push(access(-1));
        } else {
            seq.push(access(0));
            seq.push(Instruction::rri(Opcode::Addi, cur, cur, 1));
            seq.push(Instruction::rri(Opcode::Sw, cur, addr, delta));
        }
        seq
    }
}

/// Register zero-wall at a variant entry: every renameable register is reset
/// so the variant starts from the same architectural state a standalone run
/// would see. Order and zeroing form are seeded per variant.
pub fn zero_wall(rng: &mut ChaCha8Rng) -> Vec<Instruction> {
    let mut regs: Vec<u8> = (0..14).collect();
    regs.shuffle(rng);
    regs.into_iter()
        .map(|i| {
            let r = Reg::new(i).unwrap();
            if rng.random_bool(0.5) {
                Instruction::ri(Opcode::Li, r, 0)
            } else {
                Instruction::rrr(Opcode::Xor, r, r, r)
            }
        })
        .collect()
}

/// Input staging prologue: `IN` the count word, store it, then copy that
/// many words into the staging buffer.
pub fn prologue(asm: &mut Asm) {
    let r = |i: u8| Reg::new(i).unwrap();
    asm.push(Instruction::r(Opcode::In, r(0)));
    asm.push(Instruction::ri(Opcode::Li, r(1), 0));
    asm.push(Instruction::rri(Opcode::Sw, r(0), r(1), CELL_IN_COUNT as i32));
    asm.push(Instruction::ri(Opcode::Li, r(3), 0));
    asm.label("__pro_copy");
    asm.push(Instruction::rrl(Opcode::Beq, r(3), r(0), "__pro_done"));
    asm.push(Instruction::r(Opcode::In, r(2)));
    asm.push(Instruction::rri(Opcode::Sw, r(2), r(3), IN_BUF_BASE as i32));
    asm.push(Instruction::rri(Opcode::Addi, r(3), r(3), 1));
    asm.push(Instruction::jmp("__pro_copy"));
    // `__pro_done` lands on whatever follows the prologue.
    asm.label("__pro_done");
}

/// External jump targets a fragment may reference before splicing.
pub struct FragmentExits<'a> {
    /// `__ext0` resolves to this label after splicing.
    pub ext0: &'a str,
    /// `__ext1` resolves to this label after splicing.
    pub ext1: Option<&'a str>,
}

/// Builds the eager compare fragment in its base form. Jumps to `__ext0`
/// when the first two regions agree and to `__ext1` on any mismatch.
fn compare_fragment_base() -> Asm {
    let r = |i: u8| Reg::new(i).unwrap();
    let mut a = Asm::new();
    a.push(Instruction::ri(Opcode::Li, r(1), 0));
    a.push(Instruction::rri(Opcode::Lw, r(2), r(1), out_cursor_cell(0) as i32));
    a.push(Instruction::rri(Opcode::Lw, r(3), r(1), out_cursor_cell(1) as i32));
    a.push(Instruction::rrl(Opcode::Bne, r(2), r(3), "__cmp_bad"));
    a.push(Instruction::ri(Opcode::Li, r(4), 0));
    a.label("__cmp_loop");
    a.push(Instruction::rrl(Opcode::Beq, r(4), r(2), "__cmp_ok"));
    a.push(Instruction::rri(Opcode::Lw, r(5), r(4), region_base(0) as i32));
    a.push(Instruction::rri(Opcode::Lw, r(6), r(4), region_base(1) as i32));
    a.push(Instruction::rrl(Opcode::Bne, r(5), r(6), "__cmp_bad"));
    a.push(Instruction::rri(Opcode::Addi, r(4), r(4), 1));
    a.push(Instruction::jmp("__cmp_loop"));
    a.label("__cmp_ok");
    a.push(Instruction::jmp("__ext0"));
    a.label("__cmp_bad");
    a.push(Instruction::jmp("__ext1"));
    a
}

/// Builds the vote fragment in its base form: pairwise whole-stream
/// equality flags, then a strict-majority scan. Accepts the lowest variant
/// whose match count reaches `(k+1)/2 + 1` members counting itself; falls
/// back to region 0 with the no-majority verdict. Exits through `__ext0`.
fn vote_fragment_base(k: usize) -> Asm {
    let r = |i: u8| Reg::new(i).unwrap();
    let mut a = Asm::new();

    for i in 0..k {
        for j in i + 1..k {
            let done = format!("__vote_p{i}_{j}_done");
            let eq = format!("__vote_p{i}_{j}_eq");
            let lp = format!("__vote_p{i}_{j}_loop");
            a.push(Instruction::ri(Opcode::Li, r(1), 0));
            a.push(Instruction::rri(Opcode::Lw, r(2), r(1), out_cursor_cell(i) as i32));
            a.push(Instruction::rri(Opcode::Lw, r(3), r(1), out_cursor_cell(j) as i32));
            a.push(Instruction::ri(Opcode::Li, r(4), 0));
            a.push(Instruction::rrl(Opcode::Bne, r(2), r(3), done.clone()));
            a.push(Instruction::ri(Opcode::Li, r(5), 0));
            a.label(lp.clone());
            a.push(Instruction::rrl(Opcode::Beq, r(5), r(2), eq.clone()));
            a.push(Instruction::rri(Opcode::Lw, r(6), r(5), region_base(i) as i32));
            a.push(Instruction::rri(Opcode::Lw, r(7), r(5), region_base(j) as i32));
            a.push(Instruction::rrl(Opcode::Bne, r(6), r(7), done.clone()));
            a.push(Instruction::rri(Opcode::Addi, r(5), r(5), 1));
            a.push(Instruction::jmp(lp));
            a.label(eq);
            a.push(Instruction::ri(Opcode::Li, r(4), 1));
            a.label(done);
            a.push(Instruction::ri(Opcode::Li, r(8), 0));
            a.push(Instruction::rri(Opcode::Sw, r(4), r(8), eq_flag_cell(k, i, j) as i32));
        }
    }

    let majority = (k / 2 + 1) as i32;
    for i in 0..k {
        let yes = format!("__vote_m{i}_yes");
        let no = format!("__vote_m{i}_no");
        let chk = format!("__vote_m{i}_chk");
        a.push(Instruction::ri(Opcode::Li, r(1), 1));
        a.push(Instruction::ri(Opcode::Li, r(9), 0));
        for j in 0..k {
            if j == i {
                continue;
            }
            let cell = eq_flag_cell(k, i.min(j), i.max(j));
            a.push(Instruction::rri(Opcode::Lw, r(2), r(9), cell as i32));
            a.push(Instruction::rrr(Opcode::Add, r(1), r(1), r(2)));
        }
        // Equality-only ISA: test `matches >= majority` by walking the
        // candidate thresholds majority..=k.
        a.push(Instruction::ri(Opcode::Li, r(3), majority));
        a.push(Instruction::ri(Opcode::Li, r(4), k as i32 + 1));
        a.label(chk.clone());
        a.push(Instruction::rrl(Opcode::Beq, r(3), r(4), no.clone()));
        a.push(Instruction::rrl(Opcode::Beq, r(1), r(3), yes.clone()));
        a.push(Instruction::rri(Opcode::Addi, r(3), r(3), 1));
        a.push(Instruction::jmp(chk));
        a.label(yes);
        accept_region(&mut a, i, VERDICT_TOLERATED);
        a.push(Instruction::jmp("__ext0"));
        a.label(no);
        // Falls through to the next candidate's scan.
        a.push(Instruction::ri(Opcode::Li, r(0), 0));
    }

    accept_region(&mut a, 0, VERDICT_NO_MAJORITY);
    a.push(Instruction::jmp("__ext0"));
    a
}

fn accept_region(a: &mut Asm, variant: usize, verdict: u32) {
    let r = |i: u8| Reg::new(i).unwrap();
    a.push(Instruction::ri(Opcode::Li, r(5), region_base(variant) as i32));
    a.push(Instruction::ri(Opcode::Li, r(6), 0));
    a.push(Instruction::rri(Opcode::Sw, r(5), r(6), CELL_ACC_BASE as i32));
    a.push(Instruction::rri(Opcode::Lw, r(7), r(6), out_cursor_cell(variant) as i32));
    a.push(Instruction::rri(Opcode::Sw, r(7), r(6), CELL_ACC_COUNT as i32));
    a.push(Instruction::ri(Opcode::Li, r(8), verdict as i32));
    a.push(Instruction::rri(Opcode::Sw, r(8), r(6), CELL_VERDICT as i32));
}

/// Emission tail. `__emit_clean` accepts region 0 with the clean verdict
/// and falls into `__emit_acc`, which streams the accepted region and the
/// verdict word, then halts.
pub fn emit_section(asm: &mut Asm) {
    let r = |i: u8| Reg::new(i).unwrap();
    asm.label("__emit_clean");
    // accept_region inlined here so the first instruction carries the label.
    asm.push(Instruction::ri(Opcode::Li, r(5), region_base(0) as i32));
    asm.push(Instruction::ri(Opcode::Li, r(6), 0));
    asm.push(Instruction::rri(Opcode::Sw, r(5), r(6), CELL_ACC_BASE as i32));
    asm.push(Instruction::rri(Opcode::Lw, r(7), r(6), out_cursor_cell(0) as i32));
    asm.push(Instruction::rri(Opcode::Sw, r(7), r(6), CELL_ACC_COUNT as i32));
    asm.push(Instruction::ri(Opcode::Li, r(8), 0));
    asm.push(Instruction::rri(Opcode::Sw, r(8), r(6), CELL_VERDICT as i32));
    asm.label("__emit_acc");
    asm.push(Instruction::ri(Opcode::Li, r(1), 0));
    asm.push(Instruction::rri(Opcode::Lw, r(2), r(1), CELL_ACC_BASE as i32));
    asm.push(Instruction::rri(Opcode::Lw, r(3), r(1), CELL_ACC_COUNT as i32));
    asm.push(Instruction::ri(Opcode::Li, r(4), 0));
    asm.label("__emit_loop");
    asm.push(Instruction::rrl(Opcode::Beq, r(4), r(3), "__emit_fin"));
    asm.push(Instruction::rrr(Opcode::Add, r(5), r(2), r(4)));
    asm.push(Instruction::rri(Opcode::Lw, r(6), r(5), 0));
    asm.push(Instruction::r(Opcode::Out, r(6)));
    asm.push(Instruction::rri(Opcode::Addi, r(4), r(4), 1));
    asm.push(Instruction::jmp("__emit_loop"));
    asm.label("__emit_fin");
    asm.push(Instruction::rri(Opcode::Lw, r(7), r(1), CELL_VERDICT as i32));
    asm.push(Instruction::r(Opcode::Out, r(7)));
    asm.push(Instruction::halt());
}

/// Control-flow-safe pass subset used to diversify glue fragments.
const FRAGMENT_PASSES: [PassId; 5] = [
    PassId::Rename,
    PassId::Sched,
    PassId::Commute,
    PassId::Strength,
    PassId::ImmSplit,
];

/// Diversifies a fragment and splices in its external exits.
///
/// The fragment is materialized as a standalone program whose external
/// targets `__ext0`/`__ext1` point at trailing stub HALTs, pushed through
/// the fragment-safe passes, then the stubs are stripped and the ext labels
/// rebound to the real targets.
pub fn diversify_fragment(
    fragment: Asm,
    exits: &FragmentExits<'_>,
    seed: u64,
) -> Vec<(Vec<String>, Instruction)> {
    let mut carrier = fragment;
    carrier.label("__ext0");
    carrier.push(Instruction::halt());
    carrier.label("__ext1");
    carrier.push(Instruction::halt());
    let mut program = carrier.finish("fragment").expect("well-formed fragment");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for pass in FRAGMENT_PASSES {
        program = apply_pass(&program, pass, rng.next_u64());
    }

    // Strip the trailing stub HALTs; their labels resolve externally now.
    let stub_at = |name: &str| program.resolve(name).expect("stub label survives passes");
    let first_stub = stub_at("__ext0").min(stub_at("__ext1"));
    for idx in first_stub..program.len() {
        assert_eq!(
            program.instructions()[idx].opcode,
            Opcode::Halt,
            "stub zone must stay untouched"
        );
    }

    let mut labels_at: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (name, index) in program.labels() {
        labels_at.entry(*index).or_default().push(name.clone());
    }

    let rebind = |label: &str| -> String {
        if label == "__ext0" {
            String::from(exits.ext0)
        } else if label == "__ext1" {
            String::from(exits.ext1.expect("fragment uses __ext1"))
        } else {
            String::from(label)
        }
    };

    let mut items = Vec::new();
    for (index, inst) in program.instructions()[..first_stub].iter().enumerate() {
        let labels = labels_at
            .get(&index)
            .map(|ls| ls.iter().map(|l| rebind_internal(l)).collect())
            .unwrap_or_default();
        let operands = inst
            .operands
            .iter()
            .map(|o| match o {
                Operand::Label(l) => Operand::Label(rebind(l)),
                other => other.clone(),
            })
            .collect();
        items.push((
            labels,
            Instruction::new(inst.opcode, operands).expect("same signature"),
        ));
    }
    items
}

// Internal fragment labels pass through unchanged; ext labels never label
// retained instructions (they sit on stripped stubs).
fn rebind_internal(label: &str) -> String {
    String::from(label)
}

/// The compare fragment, diversified and wired to its exits.
pub fn compare_fragment(
    clean_target: &str,
    escalate_target: &str,
    seed: u64,
) -> Vec<(Vec<String>, Instruction)> {
    diversify_fragment(
        compare_fragment_base(),
        &FragmentExits {
            ext0: clean_target,
            ext1: Some(escalate_target),
        },
        seed,
    )
}

/// The vote fragment, diversified and wired to the emit tail.
pub fn vote_fragment(k: usize, emit_target: &str, seed: u64) -> Vec<(Vec<String>, Instruction)> {
    diversify_fragment(
        vote_fragment_base(k),
        &FragmentExits {
            ext0: emit_target,
            ext1: None,
        },
        seed,
    )
}
