/// Number of opcodes in the ISA; bigram tables are `OPCODE_COUNT` square.
pub const OPCODE_COUNT: usize = 19;

/// The 19 VR32 mnemonics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "UPPERCASE"))]
pub enum Opcode {
    Add,
    Sub,
    Mul,
    And,
    Or,
    Xor,
    Sll,
    Srl,
    Addi,
    Li,
    Mov,
    Lw,
    Sw,
    Beq,
    Bne,
    Jmp,
    In,
    Out,
    Halt,
}

/// Kind of operand an opcode slot accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperandKind {
    Reg,
    Imm,
    Label,
}

use OperandKind::{Imm, Label, Reg};

impl Opcode {
    pub const ALL: [Opcode; OPCODE_COUNT] = [
        Opcode::Add,
        Opcode::Sub,
        Opcode::Mul,
        Opcode::And,
        Opcode::Or,
        Opcode::Xor,
        Opcode::Sll,
        Opcode::Srl,
        Opcode::Addi,
        Opcode::Li,
        Opcode::Mov,
        Opcode::Lw,
        Opcode::Sw,
        Opcode::Beq,
        Opcode::Bne,
        Opcode::Jmp,
        Opcode::In,
        Opcode::Out,
        Opcode::Halt,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            Opcode::Add => "ADD",
            Opcode::Sub => "SUB",
            Opcode::Mul => "MUL",
            Opcode::And => "AND",
            Opcode::Or => "OR",
            Opcode::Xor => "XOR",
            Opcode::Sll => "SLL",
            Opcode::Srl => "SRL",
            Opcode::Addi => "ADDI",
            Opcode::Li => "LI",
            Opcode::Mov => "MOV",
            Opcode::Lw => "LW",
            Opcode::Sw => "SW",
            Opcode::Beq => "BEQ",
            Opcode::Bne => "BNE",
            Opcode::Jmp => "JMP",
            Opcode::In => "IN",
            Opcode::Out => "OUT",
            Opcode::Halt => "HALT",
        }
    }

    pub fn from_mnemonic(s: &str) -> Option<Opcode> {
        Opcode::ALL
            .iter()
            .copied()
            .find(|op| op.mnemonic().eq_ignore_ascii_case(s))
    }

    /// Stable index into the opcode alphabet, `0..OPCODE_COUNT`.
    pub fn index(self) -> usize {
        self as usize
    }

    /// Operand signature: kinds in listing order, destination first.
    ///
    /// `SLL`/`SRL` shift by an immediate in `[0, 31]`. `LW rd, ra, imm` loads
    /// `mem[ra + imm]`; `SW rv, ra, imm` stores `rv` to `mem[ra + imm]`.
    pub fn signature(self) -> &'static [OperandKind] {
        match self {
            Opcode::Add | Opcode::Sub | Opcode::Mul | Opcode::And | Opcode::Or | Opcode::Xor => {
                &[Reg, Reg, Reg]
            }
            Opcode::Sll | Opcode::Srl | Opcode::Addi | Opcode::Lw | Opcode::Sw => {
                &[Reg, Reg, Imm]
            }
            Opcode::Li => &[Reg, Imm],
            Opcode::Mov => &[Reg, Reg],
            Opcode::Beq | Opcode::Bne => &[Reg, Reg, Label],
            Opcode::Jmp => &[Label],
            Opcode::In | Opcode::Out => &[Reg],
            Opcode::Halt => &[],
        }
    }

    /// Control transfer or stop: terminates a basic block.
    pub fn is_control(self) -> bool {
        matches!(self, Opcode::Beq | Opcode::Bne | Opcode::Jmp | Opcode::Halt)
    }

    /// First two source operands may be swapped without changing the result.
    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            Opcode::Add | Opcode::Mul | Opcode::And | Opcode::Or | Opcode::Xor
        )
    }
}

impl core::fmt::Display for Opcode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.mnemonic())
    }
}
