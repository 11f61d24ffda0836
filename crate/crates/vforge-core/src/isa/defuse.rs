use super::inst::{Instruction, Reg};
use super::opcode::Opcode;

/// A set of registers as a 16-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RegSet(u16);

impl RegSet {
    pub const EMPTY: RegSet = RegSet(0);

    pub fn insert(&mut self, r: Reg) {
        self.0 |= 1 << r.index();
    }

    pub fn remove(&mut self, r: Reg) {
        self.0 &= !(1 << r.index());
    }

    pub fn contains(self, r: Reg) -> bool {
        self.0 & (1 << r.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn union(self, other: RegSet) -> RegSet {
        RegSet(self.0 | other.0)
    }

    pub fn minus(self, other: RegSet) -> RegSet {
        RegSet(self.0 & !other.0)
    }

    pub fn intersect(self, other: RegSet) -> RegSet {
        RegSet(self.0 & other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = Reg> {
        Reg::all().filter(move |r| self.contains(*r))
    }
}

impl FromIterator<Reg> for RegSet {
    fn from_iter<T: IntoIterator<Item = Reg>>(iter: T) -> RegSet {
        let mut s = RegSet::EMPTY;
        for r in iter {
            s.insert(r);
        }
        s
    }
}

/// Memory effect of one instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemEffect {
    None,
    Read,
    Write,
}

/// Stream effect of one instruction. `IN`/`OUT` are observable side effects
/// and may never be reordered past one another.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IoEffect {
    None,
    Input,
    Output,
}

/// Exact def/use sets and effects of one instruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DefUse {
    pub defs: RegSet,
    pub uses: RegSet,
    pub mem: MemEffect,
    pub io: IoEffect,
}

impl DefUse {
    pub fn is_side_effecting(&self) -> bool {
        self.mem != MemEffect::None || self.io != IoEffect::None
    }
}

/// Computes defined registers, used registers and memory/IO effects from the
/// opcode signature. Feeds liveness analysis and the block scheduler.
pub fn def_use(inst: &Instruction) -> DefUse {
    let mut defs = RegSet::EMPTY;
    let mut uses = RegSet::EMPTY;
    let mut mem = MemEffect::None;
    let mut io = IoEffect::None;

    match inst.opcode {
        Opcode::Add
        | Opcode::Sub
        | Opcode::Mul
        | Opcode::And
        | Opcode::Or
        | Opcode::Xor => {
            defs.insert(inst.reg(0));
            uses.insert(inst.reg(1));
            uses.insert(inst.reg(2));
        }
        Opcode::Sll | Opcode::Srl | Opcode::Addi => {
            defs.insert(inst.reg(0));
            uses.insert(inst.reg(1));
        }
        Opcode::Li => defs.insert(inst.reg(0)),
        Opcode::Mov => {
            defs.insert(inst.reg(0));
            uses.insert(inst.reg(1));
        }
        Opcode::Lw => {
            defs.insert(inst.reg(0));
            uses.insert(inst.reg(1));
            mem = MemEffect::Read;
        }
        Opcode::Sw => {
            uses.insert(inst.reg(0));
            uses.insert(inst.reg(1));
            mem = MemEffect::Write;
        }
        Opcode::Beq | Opcode::Bne => {
            uses.insert(inst.reg(0));
            uses.insert(inst.reg(1));
        }
        Opcode::Jmp | Opcode::Halt => {}
        Opcode::In => {
            defs.insert(inst.reg(0));
            io = IoEffect::Input;
        }
        Opcode::Out => {
            uses.insert(inst.reg(0));
            io = IoEffect::Output;
        }
    }

    DefUse {
        defs,
        uses,
        mem,
        io,
    }
}
