//! Net-level execution model: a second, datapath-shaped implementation of
//! the ISA that computes per-cycle net values and applies Trojan payloads.
//!
//! The golden interpreter in `isa` stays independent; differential tests
//! pin this machine's observable behaviour to it on clean runs. Trigger
//! logic taps the pre-payload net values of each cycle (the wires feeding
//! the Trojan), while committed state and recorded trace rows reflect the
//! post-payload datapath.

use alloc::vec;
use alloc::vec::Vec;

use crate::isa::{
    ExecutionResult, Fault, Instruction, Opcode, Program, Termination, DEFAULT_MEM_WORDS,
};

use super::nets::NET_COUNT;
use super::trace::NetTraceMatrix;
use super::trigger::{PayloadKind, TriggerState, TrojanSpec};

/// Internal ALU operation select, 5-bit encoded on the net catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AluOp {
    Pass,
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Sll,
    Srl,
}

impl AluOp {
    pub fn index(self) -> u32 {
        self as u32
    }

    /// Decodes a 5-bit select value; undefined encodings pass through.
    pub fn from_index(index: u32) -> AluOp {
        match index {
            1 => AluOp::Add,
            2 => AluOp::Sub,
            3 => AluOp::Mul,
            4 => AluOp::And,
            5 => AluOp::Or,
            6 => AluOp::Xor,
            7 => AluOp::Sll,
            8 => AluOp::Srl,
            _ => AluOp::Pass,
        }
    }

    pub fn for_opcode(op: Opcode) -> AluOp {
        match op {
            Opcode::Add | Opcode::Addi | Opcode::Lw | Opcode::Sw => AluOp::Add,
            Opcode::Sub | Opcode::Beq | Opcode::Bne => AluOp::Sub,
            Opcode::Mul => AluOp::Mul,
            Opcode::And => AluOp::And,
            Opcode::Or => AluOp::Or,
            Opcode::Xor => AluOp::Xor,
            Opcode::Sll => AluOp::Sll,
            Opcode::Srl => AluOp::Srl,
            Opcode::Li | Opcode::Mov | Opcode::Jmp | Opcode::In | Opcode::Out | Opcode::Halt => {
                AluOp::Pass
            }
        }
    }

    fn eval(self, a: u32, b: u32) -> u32 {
        match self {
            AluOp::Pass => a,
            AluOp::Add => a.wrapping_add(b),
            AluOp::Sub => a.wrapping_sub(b),
            AluOp::Mul => a.wrapping_mul(b),
            AluOp::And => a & b,
            AluOp::Or => a | b,
            AluOp::Xor => a ^ b,
            AluOp::Sll => a << (b & 31),
            AluOp::Srl => a >> (b & 31),
        }
    }
}

/// Decoded instruction fields before any corruption.
#[derive(Debug, Clone, Copy)]
struct Decoded {
    opcode: Opcode,
    rd: u32,
    rs1: u32,
    rs2: u32,
    imm: u32,
    alu_op: AluOp,
    reg_we: bool,
    mem_rd: bool,
    mem_wr: bool,
}

fn decode(program: &Program, pc: usize, inst: &Instruction) -> Decoded {
    let reg = |slot: usize| inst.reg(slot).index() as u32;
    let target = || program.target_of(pc).expect("validated target") as u32;
    let (rd, rs1, rs2, imm) = match inst.opcode {
        Opcode::Add | Opcode::Sub | Opcode::Mul | Opcode::And | Opcode::Or | Opcode::Xor => {
            (reg(0), reg(1), reg(2), 0)
        }
        Opcode::Sll | Opcode::Srl | Opcode::Addi => (reg(0), reg(1), 0, inst.imm(2) as u32),
        Opcode::Li => (reg(0), 0, 0, inst.imm(1) as u32),
        Opcode::Mov => (reg(0), reg(1), 0, 0),
        Opcode::Lw => (reg(0), reg(1), 0, inst.imm(2) as u32),
        Opcode::Sw => (0, reg(1), reg(0), inst.imm(2) as u32),
        Opcode::Beq | Opcode::Bne => (0, reg(0), reg(1), target()),
        Opcode::Jmp => (0, 0, 0, target()),
        Opcode::In => (reg(0), 0, 0, 0),
        Opcode::Out => (0, reg(0), 0, 0),
        Opcode::Halt => (0, 0, 0, 0),
    };
    Decoded {
        opcode: inst.opcode,
        rd,
        rs1,
        rs2,
        imm,
        alu_op: AluOp::for_opcode(inst.opcode),
        reg_we: matches!(
            inst.opcode,
            Opcode::Add
                | Opcode::Sub
                | Opcode::Mul
                | Opcode::And
                | Opcode::Or
                | Opcode::Xor
                | Opcode::Sll
                | Opcode::Srl
                | Opcode::Addi
                | Opcode::Li
                | Opcode::Mov
                | Opcode::Lw
                | Opcode::In
        ),
        mem_rd: inst.opcode == Opcode::Lw,
        mem_wr: inst.opcode == Opcode::Sw,
    }
}

/// One Trojan activation during a traced run.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Firing {
    pub trojan: usize,
    pub cycle: u64,
    pub pc: usize,
}

/// Everything a traced run produced.
#[derive(Debug, Clone)]
pub struct TracedRun {
    pub result: ExecutionResult,
    pub trace: Option<NetTraceMatrix>,
    pub firings: Vec<Firing>,
    /// Final data memory, for harness region inspection.
    pub mem: Vec<u32>,
}

struct ArmedTrojan<'a> {
    spec: &'a TrojanSpec,
    state: TriggerState,
}

/// Runs `program` on the net-level machine. Payloads of `trojans` apply
/// transiently on their firing cycles; with no Trojans the observable
/// behaviour is bit-identical to the golden interpreter.
pub fn run_traced(
    program: &Program,
    inputs: &[u32],
    trojans: &[TrojanSpec],
    cycle_limit: u64,
    record_trace: bool,
) -> TracedRun {
    let mut regs = [0u32; 16];
    let mut mem = vec![0u32; DEFAULT_MEM_WORDS];
    let mut outputs: Vec<u32> = Vec::new();
    let mut input_pos = 0usize;
    let mut pc = 0usize;
    let mut cycles = 0u64;
    let mut trace = record_trace.then(|| NetTraceMatrix::new(program.name()));
    let mut firings: Vec<Firing> = Vec::new();
    let mut armed: Vec<ArmedTrojan> = trojans
        .iter()
        .map(|spec| ArmedTrojan {
            spec,
            state: TriggerState::new(&spec.trigger),
        })
        .collect();

    let termination = 'run: loop {
        if program.is_empty() || pc >= program.len() {
            break if program.is_empty() {
                Termination::Halted
            } else {
                Termination::Fault(Fault::PcOutOfRange { pc })
            };
        }
        if cycles >= cycle_limit {
            break Termination::CycleLimit;
        }

        let inst = &program.instructions()[pc];
        let d = decode(program, pc, inst);
        cycles += 1;

        // IN consumes its word up front; exhaustion faults exactly like the
        // golden machine, payloads notwithstanding.
        let mut input_word = 0u32;
        if d.opcode == Opcode::In {
            match inputs.get(input_pos) {
                Some(&w) => {
                    input_word = w;
                    input_pos += 1;
                }
                None => break Termination::Fault(Fault::InputExhausted { pc }),
            }
        }

        // Clean datapath pass: the wires the trigger logic taps.
        let clean = datapath(&d, &regs, input_word, false, 0, AluOp::index(d.alu_op));
        let clean_row = net_row(&d, pc, d.rd, d.imm, clean.result, d.alu_op, clean.taken);

        // Trigger evaluation on the pre-payload row.
        let mut imm = d.imm;
        let mut rd = d.rd;
        let mut alu_idx = d.alu_op.index();
        let mut flip_branch = false;
        let mut result_mask = 0u32;
        let mut fired_any = false;
        for (t, a) in armed.iter_mut().enumerate() {
            if a.state.advance(&clean_row) {
                fired_any = true;
                firings.push(Firing {
                    trojan: t,
                    cycle: cycles - 1,
                    pc,
                });
                match a.spec.payload {
                    PayloadKind::AluResultBit { bit } => result_mask ^= 1 << bit,
                    PayloadKind::ImmediateBit { bit } => imm ^= 1 << bit,
                    PayloadKind::AluOpSelectBit { bit } => alu_idx ^= 1 << bit,
                    PayloadKind::RegWriteAddressBit { bit } => rd ^= 1u32 << bit,
                    PayloadKind::BranchSelect => flip_branch = !flip_branch,
                }
            }
        }
        rd &= 0xF;
        alu_idx &= 0x1F;

        // Actual datapath pass, payloads applied.
        let (eff, row) = if fired_any {
            let corrupted = Decoded {
                imm,
                rd,
                ..d
            };
            let eff = datapath(&corrupted, &regs, input_word, flip_branch, result_mask, alu_idx);
            let row = net_row(
                &d,
                pc,
                rd,
                imm,
                eff.result,
                AluOp::from_index(alu_idx),
                eff.taken,
            );
            (eff, row)
        } else {
            (clean, clean_row)
        };

        if let Some(t) = trace.as_mut() {
            t.push_row(row, pc);
        }

        // Commit.
        match d.opcode {
            Opcode::Lw => {
                let addr = eff.result;
                match mem.get(addr as usize) {
                    Some(&v) => regs[rd as usize] = v,
                    None => break Termination::Fault(Fault::OutOfBoundsMemory { pc, addr }),
                }
            }
            Opcode::Sw => {
                let addr = eff.result;
                let value = regs[d.rs2 as usize];
                match mem.get_mut(addr as usize) {
                    Some(cell) => *cell = value,
                    None => break Termination::Fault(Fault::OutOfBoundsMemory { pc, addr }),
                }
            }
            Opcode::Out => outputs.push(eff.result),
            Opcode::Halt => break Termination::Halted,
            _ => {
                if d.reg_we {
                    regs[rd as usize] = eff.result;
                }
            }
        }

        if eff.taken {
            let target = eff.branch_target as usize;
            if target >= program.len() {
                break 'run Termination::Fault(Fault::PcOutOfRange { pc });
            }
            pc = target;
        } else {
            pc += 1;
        }
    };

    TracedRun {
        result: ExecutionResult {
            outputs,
            cycles,
            termination,
        },
        trace,
        firings,
        mem,
    }
}

struct DatapathOut {
    result: u32,
    taken: bool,
    branch_target: u32,
}

fn datapath(
    d: &Decoded,
    regs: &[u32; 16],
    input_word: u32,
    flip_branch: bool,
    result_mask: u32,
    alu_idx: u32,
) -> DatapathOut {
    let ra = regs[d.rs1 as usize];
    let rb = regs[d.rs2 as usize];
    let (alu_a, alu_b) = match d.opcode {
        Opcode::Add | Opcode::Sub | Opcode::Mul | Opcode::And | Opcode::Or | Opcode::Xor => {
            (ra, rb)
        }
        Opcode::Sll | Opcode::Srl | Opcode::Addi | Opcode::Lw | Opcode::Sw => (ra, d.imm),
        Opcode::Li | Opcode::Jmp => (d.imm, 0),
        Opcode::Mov | Opcode::Out => (ra, 0),
        Opcode::Beq | Opcode::Bne => (ra, rb),
        Opcode::In => (input_word, 0),
        Opcode::Halt => (0, 0),
    };
    let result = AluOp::from_index(alu_idx).eval(alu_a, alu_b) ^ result_mask;

    let base_taken = match d.opcode {
        Opcode::Beq => result == 0,
        Opcode::Bne => result != 0,
        Opcode::Jmp => true,
        _ => false,
    };
    let taken = if matches!(d.opcode, Opcode::Beq | Opcode::Bne | Opcode::Jmp) {
        base_taken ^ flip_branch
    } else {
        false
    };

    DatapathOut {
        result,
        taken,
        branch_target: d.imm,
    }
}

fn net_row(
    d: &Decoded,
    pc: usize,
    rd: u32,
    imm: u32,
    result: u32,
    alu_op: AluOp,
    taken: bool,
) -> u128 {
    debug_assert!(NET_COUNT <= 128);
    use super::nets::{
        ALU_BASE, ALU_OP_BASE, BRANCH_TAKEN, IMM_BASE, MEM_RD, MEM_WR, OPC_BASE, PC_BASE,
        RD_BASE, REG_WE, RS1_BASE, RS2_BASE,
    };
    let mut row = 1u128 << (OPC_BASE + d.opcode.index());
    row |= ((rd & 0xF) as u128) << RD_BASE;
    row |= ((d.rs1 & 0xF) as u128) << RS1_BASE;
    row |= ((d.rs2 & 0xF) as u128) << RS2_BASE;
    row |= (imm as u128) << IMM_BASE;
    row |= (result as u128) << ALU_BASE;
    row |= ((alu_op.index() & 0x1F) as u128) << ALU_OP_BASE;
    row |= (d.reg_we as u128) << REG_WE;
    row |= (d.mem_rd as u128) << MEM_RD;
    row |= (d.mem_wr as u128) << MEM_WR;
    row |= (taken as u128) << BRANCH_TAKEN;
    row |= ((pc as u128) & 0xFFFF) << PC_BASE;
    row
}

/// Records the net trace of a clean run. Faults and cycle-limit hits come
/// back as errors; the caller gets the trace only for completed runs.
pub fn trace_nets(
    program: &Program,
    inputs: &[u32],
    cycle_limit: u64,
) -> Result<(NetTraceMatrix, ExecutionResult), TraceError> {
    let run = run_traced(program, inputs, &[], cycle_limit, true);
    match run.result.termination {
        Termination::Halted => Ok((run.trace.expect("recording enabled"), run.result)),
        Termination::CycleLimit => Err(TraceError::CycleLimit),
        Termination::Fault(f) => Err(TraceError::Fault(f)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("execution faulted: {0:?}")]
    Fault(Fault),
    #[error("cycle limit reached before completion")]
    CycleLimit,
}
