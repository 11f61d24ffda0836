//! Seeded generation of sample programs and input vectors.
//!
//! Random programs feed differential and property testing (similarity
//! oracles, interpreter robustness); random input vectors are the default
//! stimulus for equivalence checking. Everything is a pure function of the
//! seed, so failures replay exactly.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::isa::{Instruction, Opcode, Program, Reg};

/// Shape of generated programs.
#[derive(Debug, Clone)]
pub struct SampleOptions {
    /// Number of instructions, final `HALT` excluded.
    pub len: usize,
    /// Highest register index used (inclusive). Keep at 13 when the program
    /// may later flow into a hardened bundle, which reserves r14/r15.
    pub max_reg: u8,
    /// Allow `LW`/`SW`. Generated addresses are unconstrained, so runs may
    /// legitimately end in an out-of-bounds fault.
    pub memory_ops: bool,
    /// Number of `IN` instructions to sprinkle in.
    pub inputs: usize,
    /// Number of `OUT` instructions to sprinkle in.
    pub outputs: usize,
}

impl Default for SampleOptions {
    fn default() -> SampleOptions {
        SampleOptions {
            len: 24,
            max_reg: 13,
            memory_ops: false,
            inputs: 2,
            outputs: 2,
        }
    }
}

/// Generates a valid, always-terminating program from `seed`.
///
/// The shape is straight-line code with occasional forward branches, so
/// every run retires at most `len + 1` instructions. Branch targets are
/// always ahead of the branch, labels are unique, and the program ends with
/// `HALT`.
pub fn random_program(seed: u64, opts: &SampleOptions) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut instructions: Vec<Instruction> = Vec::with_capacity(opts.len + 1);
    let mut labels: BTreeMap<String, usize> = BTreeMap::new();
    // Labels of emitted branches still waiting for a target ahead.
    let mut pending: Vec<String> = Vec::new();
    let mut label_counter = 0usize;

    let mut io_slots: Vec<bool> = Vec::new();
    io_slots.extend(std::iter::repeat_n(true, opts.inputs.min(opts.len / 2)));
    io_slots.extend(std::iter::repeat_n(false, opts.outputs.min(opts.len / 2)));

    for i in 0..opts.len {
        if !pending.is_empty() && rng.random_ratio(1, 3) {
            let label = pending.remove(0);
            labels.insert(label, instructions.len());
        }

        let remaining = opts.len - i;
        let io_due = io_slots.len().min(remaining) as u32;
        let inst = if io_due > 0 && rng.random_ratio(io_due, remaining as u32) {
            let take = rng.random_range(0..io_slots.len());
            let is_input = io_slots.swap_remove(take);
            let r = random_reg(&mut rng, opts.max_reg);
            if is_input {
                Instruction::r(Opcode::In, r)
            } else {
                Instruction::r(Opcode::Out, r)
            }
        } else {
            random_compute(
                &mut rng,
                opts,
                remaining,
                &mut pending,
                &mut label_counter,
            )
        };
        instructions.push(inst);
    }

    // Land any branches that never found a target on the final HALT.
    let halt_index = instructions.len();
    for label in pending {
        labels.insert(label, halt_index);
    }
    instructions.push(Instruction::halt());

    Program::new(format!("sample_{seed}"), instructions, labels, Vec::new())
        .expect("generated program is valid by construction")
}

fn random_compute(
    rng: &mut ChaCha8Rng,
    opts: &SampleOptions,
    remaining: usize,
    pending: &mut Vec<String>,
    label_counter: &mut usize,
) -> Instruction {
    let can_branch = remaining > 2 && pending.len() < 2;
    loop {
        let op = Opcode::ALL[rng.random_range(0..Opcode::ALL.len())];
        let reg = |rng: &mut ChaCha8Rng| random_reg(rng, opts.max_reg);
        let imm = |rng: &mut ChaCha8Rng| rng.random::<i32>() >> rng.random_range(0..24);
        let inst = match op {
            Opcode::Add | Opcode::Sub | Opcode::Mul | Opcode::And | Opcode::Or | Opcode::Xor => {
                Instruction::rrr(op, reg(rng), reg(rng), reg(rng))
            }
            Opcode::Sll | Opcode::Srl => {
                Instruction::rri(op, reg(rng), reg(rng), rng.random_range(0..32))
            }
            Opcode::Addi => Instruction::rri(op, reg(rng), reg(rng), imm(rng)),
            Opcode::Li => Instruction::ri(op, reg(rng), imm(rng)),
            Opcode::Mov => Instruction::rr(op, reg(rng), reg(rng)),
            Opcode::Lw if opts.memory_ops => {
                Instruction::rri(op, reg(rng), reg(rng), rng.random_range(0..256))
            }
            Opcode::Sw if opts.memory_ops => {
                Instruction::rri(op, reg(rng), reg(rng), rng.random_range(0..256))
            }
            Opcode::Beq | Opcode::Bne if can_branch => {
                let label = format!("fwd{}", *label_counter);
                *label_counter += 1;
                pending.push(label.clone());
                Instruction::rrl(op, reg(rng), reg(rng), label)
            }
            _ => continue,
        };
        return inst;
    }
}

fn random_reg(rng: &mut ChaCha8Rng, max_reg: u8) -> Reg {
    Reg::new(rng.random_range(0..=max_reg)).expect("max_reg <= 15")
}

/// Seeded random input vectors: `count` vectors of `len` words each.
pub fn random_inputs(seed: u64, count: usize, len: usize) -> Vec<Vec<u32>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| (0..len).map(|_| rng.random()).collect())
        .collect()
}
