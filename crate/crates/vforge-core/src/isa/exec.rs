use alloc::vec;
use alloc::vec::Vec;

use super::inst::Reg;
use super::opcode::Opcode;
use super::program::Program;

/// Default data memory size in 32-bit words.
pub const DEFAULT_MEM_WORDS: usize = 65_536;

/// Why an execution stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Termination {
    Halted,
    CycleLimit,
    Fault(Fault),
}

/// Runtime fault. `pc` is the index of the faulting instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Fault {
    OutOfBoundsMemory { pc: usize, addr: u32 },
    InputExhausted { pc: usize },
    PcOutOfRange { pc: usize },
}

/// Observable outcome of a run: the output stream, retired-instruction count
/// and termination cause. Identical inputs always produce identical results.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExecutionResult {
    pub outputs: Vec<u32>,
    pub cycles: u64,
    pub termination: Termination,
}

/// Architectural state of one execution. `execute` is the usual entry point;
/// the machine is exposed so callers can inspect final memory and registers.
#[derive(Debug, Clone)]
pub struct Machine {
    regs: [u32; Reg::COUNT],
    mem: Vec<u32>,
    pc: usize,
    inputs: Vec<u32>,
    input_pos: usize,
    outputs: Vec<u32>,
    cycles: u64,
}

impl Machine {
    pub fn new(inputs: &[u32], mem_words: usize) -> Machine {
        Machine {
            regs: [0; Reg::COUNT],
            mem: vec![0; mem_words],
            pc: 0,
            inputs: inputs.to_vec(),
            input_pos: 0,
            outputs: Vec::new(),
            cycles: 0,
        }
    }

    pub fn reg(&self, r: Reg) -> u32 {
        self.regs[r.index()]
    }

    pub fn mem(&self) -> &[u32] {
        &self.mem
    }

    pub fn outputs(&self) -> &[u32] {
        &self.outputs
    }

    pub fn cycles(&self) -> u64 {
        self.cycles
    }

    pub fn pc(&self) -> usize {
        self.pc
    }

    /// Runs `program` until halt, fault or `cycle_limit` retired
    /// instructions. One instruction is one cycle.
    pub fn run(&mut self, program: &Program, cycle_limit: u64) -> Termination {
        loop {
            if self.pc >= program.len() {
                // Unreachable for validated programs (they end in HALT/JMP).
                return Termination::Fault(Fault::PcOutOfRange { pc: self.pc });
            }
            if self.cycles >= cycle_limit {
                return Termination::CycleLimit;
            }
            if let Some(t) = self.step(program) {
                return t;
            }
        }
    }

    /// Executes the instruction at `pc`. Returns `Some` when the run stops.
    fn step(&mut self, program: &Program) -> Option<Termination> {
        let inst = &program.instructions()[self.pc];
        self.cycles += 1;
        let pc = self.pc;
        let mut next = pc + 1;

        match inst.opcode {
            Opcode::Add => self.set(inst.reg(0), self.get(inst.reg(1)).wrapping_add(self.get(inst.reg(2)))),
            Opcode::Sub => self.set(inst.reg(0), self.get(inst.reg(1)).wrapping_sub(self.get(inst.reg(2)))),
            Opcode::Mul => self.set(inst.reg(0), self.get(inst.reg(1)).wrapping_mul(self.get(inst.reg(2)))),
            Opcode::And => self.set(inst.reg(0), self.get(inst.reg(1)) & self.get(inst.reg(2))),
            Opcode::Or => self.set(inst.reg(0), self.get(inst.reg(1)) | self.get(inst.reg(2))),
            Opcode::Xor => self.set(inst.reg(0), self.get(inst.reg(1)) ^ self.get(inst.reg(2))),
            Opcode::Sll => self.set(inst.reg(0), self.get(inst.reg(1)) << (inst.imm(2) as u32)),
            Opcode::Srl => self.set(inst.reg(0), self.get(inst.reg(1)) >> (inst.imm(2) as u32)),
            Opcode::Addi => self.set(
                inst.reg(0),
                self.get(inst.reg(1)).wrapping_add(inst.imm(2) as u32),
            ),
            Opcode::Li => self.set(inst.reg(0), inst.imm(1) as u32),
            Opcode::Mov => self.set(inst.reg(0), self.get(inst.reg(1))),
            Opcode::Lw => {
                let addr = self.get(inst.reg(1)).wrapping_add(inst.imm(2) as u32);
                match self.load(addr) {
                    Some(v) => self.set(inst.reg(0), v),
                    None => {
                        return Some(Termination::Fault(Fault::OutOfBoundsMemory { pc, addr }))
                    }
                }
            }
            Opcode::Sw => {
                let addr = self.get(inst.reg(1)).wrapping_add(inst.imm(2) as u32);
                let value = self.get(inst.reg(0));
                if !self.store(addr, value) {
                    return Some(Termination::Fault(Fault::OutOfBoundsMemory { pc, addr }));
                }
            }
            Opcode::Beq => {
                if self.get(inst.reg(0)) == self.get(inst.reg(1)) {
                    next = program.target_of(pc).expect("validated branch target");
                }
            }
            Opcode::Bne => {
                if self.get(inst.reg(0)) != self.get(inst.reg(1)) {
                    next = program.target_of(pc).expect("validated branch target");
                }
            }
            Opcode::Jmp => {
                next = program.target_of(pc).expect("validated jump target");
            }
            Opcode::In => match self.pop_input() {
                Some(v) => self.set(inst.reg(0), v),
                None => return Some(Termination::Fault(Fault::InputExhausted { pc })),
            },
            Opcode::Out => {
                let v = self.get(inst.reg(0));
                self.outputs.push(v);
            }
            Opcode::Halt => return Some(Termination::Halted),
        }

        self.pc = next;
        None
    }

    fn get(&self, r: Reg) -> u32 {
        self.regs[r.index()]
    }

    fn set(&mut self, r: Reg, v: u32) {
        self.regs[r.index()] = v;
    }

    fn load(&self, addr: u32) -> Option<u32> {
        self.mem.get(addr as usize).copied()
    }

    fn store(&mut self, addr: u32, value: u32) -> bool {
        match self.mem.get_mut(addr as usize) {
            Some(cell) => {
                *cell = value;
                true
            }
            None => false,
        }
    }

    fn pop_input(&mut self) -> Option<u32> {
        let v = self.inputs.get(self.input_pos).copied()?;
        self.input_pos += 1;
        Some(v)
    }

    fn result(&self, termination: Termination) -> ExecutionResult {
        ExecutionResult {
            outputs: self.outputs.clone(),
            cycles: self.cycles,
            termination,
        }
    }
}

/// Interprets `program` with the default memory size. Deterministic: the
/// result is a pure function of `(program, inputs, cycle_limit)`.
pub fn execute(program: &Program, inputs: &[u32], cycle_limit: u64) -> ExecutionResult {
    let mut m = Machine::new(inputs, DEFAULT_MEM_WORDS);
    if program.is_empty() {
        return m.result(Termination::Halted);
    }
    let t = m.run(program, cycle_limit);
    m.result(t)
}

/// [`execute`] that also hands back the final machine state.
pub fn execute_with_machine(
    program: &Program,
    inputs: &[u32],
    cycle_limit: u64,
) -> (ExecutionResult, Machine) {
    let mut m = Machine::new(inputs, DEFAULT_MEM_WORDS);
    let t = if program.is_empty() {
        Termination::Halted
    } else {
        m.run(program, cycle_limit)
    };
    (m.result(t), m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::parse::parse_program;

    #[test]
    fn out_emits_and_cycles_count_retired_instructions() {
        let p = parse_program("LI r1, 5\nOUT r1\nHALT").unwrap();
        let r = execute(&p, &[], 1000);
        assert_eq!(r.outputs, vec![5]);
        assert_eq!(r.cycles, 3);
        assert_eq!(r.termination, Termination::Halted);
    }

    #[test]
    fn arithmetic_wraps_modulo_two_pow_32() {
        let p = parse_program("LI r1, 0xFFFFFFFF\nADDI r1, r1, 1\nOUT r1\nHALT").unwrap();
        let r = execute(&p, &[], 1000);
        assert_eq!(r.outputs, vec![0]);
    }

    #[test]
    fn input_exhaustion_faults() {
        let p = parse_program("IN r1\nIN r2\nHALT").unwrap();
        let r = execute(&p, &[7], 1000);
        assert_eq!(r.termination, Termination::Fault(Fault::InputExhausted { pc: 1 }));
    }

    #[test]
    fn memory_bounds_are_checked() {
        let p = parse_program("LI r1, 0xFFFF0000\nLW r2, r1, 0\nHALT").unwrap();
        let r = execute(&p, &[], 1000);
        assert!(matches!(
            r.termination,
            Termination::Fault(Fault::OutOfBoundsMemory { pc: 1, .. })
        ));
    }

    #[test]
    fn store_then_load_round_trips() {
        let p = parse_program("LI r1, 100\nLI r2, 0xDEAD\nSW r2, r1, 5\nLW r3, r1, 5\nOUT r3\nHALT")
            .unwrap();
        let r = execute(&p, &[], 1000);
        assert_eq!(r.outputs, vec![0xDEAD]);
    }

    #[test]
    fn cycle_limit_stops_infinite_loop() {
        let p = parse_program("spin: JMP spin").unwrap();
        let r = execute(&p, &[], 50);
        assert_eq!(r.termination, Termination::CycleLimit);
        assert_eq!(r.cycles, 50);
    }

    #[test]
    fn branches_follow_equality() {
        let src = "
    IN r1
    IN r2
    BEQ r1, r2, same
    LI r3, 0
    JMP done
same:
    LI r3, 1
done:
    OUT r3
    HALT
";
        let p = parse_program(src).unwrap();
        assert_eq!(execute(&p, &[4, 4], 100).outputs, vec![1]);
        assert_eq!(execute(&p, &[4, 5], 100).outputs, vec![0]);
    }

    #[test]
    fn empty_program_halts_immediately() {
        let p = parse_program("").unwrap();
        let r = execute(&p, &[], 10);
        assert_eq!(r.termination, Termination::Halted);
        assert_eq!(r.cycles, 0);
    }
}
