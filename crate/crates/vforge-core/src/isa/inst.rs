use alloc::string::String;
use alloc::vec::Vec;

use super::opcode::{Opcode, OperandKind};

/// A register index in `[0, 15]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Reg(u8);

impl Reg {
    pub const COUNT: usize = 16;

    pub const fn new(index: u8) -> Option<Reg> {
        if index < Reg::COUNT as u8 {
            Some(Reg(index))
        } else {
            None
        }
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = Reg> {
        (0..Reg::COUNT as u8).map(Reg)
    }
}

impl core::fmt::Display for Reg {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// One instruction operand. Immediates are 32-bit two's-complement; labels
/// are symbolic and resolve to instruction indices at validation time.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Operand {
    Reg(Reg),
    Imm(i32),
    Label(String),
}

impl Operand {
    pub fn kind(&self) -> OperandKind {
        match self {
            Operand::Reg(_) => OperandKind::Reg,
            Operand::Imm(_) => OperandKind::Imm,
            Operand::Label(_) => OperandKind::Label,
        }
    }

    pub fn as_reg(&self) -> Option<Reg> {
        match self {
            Operand::Reg(r) => Some(*r),
            _ => None,
        }
    }

    pub fn as_imm(&self) -> Option<i32> {
        match self {
            Operand::Imm(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_label(&self) -> Option<&str> {
        match self {
            Operand::Label(l) => Some(l),
            _ => None,
        }
    }
}

impl core::fmt::Display for Operand {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Operand::Reg(r) => write!(f, "{r}"),
            Operand::Imm(v) => write!(f, "{v}"),
            Operand::Label(l) => f.write_str(l),
        }
    }
}

/// An opcode with operands matching its signature.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Instruction {
    pub opcode: Opcode,
    pub operands: Vec<Operand>,
}

impl Instruction {
    /// Builds an instruction, checking arity and operand kinds against the
    /// opcode signature. Shift-amount range checks happen at program
    /// validation, not here.
    pub fn new(opcode: Opcode, operands: Vec<Operand>) -> Result<Instruction, SignatureError> {
        let sig = opcode.signature();
        if sig.len() != operands.len() {
            return Err(SignatureError::Arity {
                opcode,
                expected: sig.len(),
                found: operands.len(),
            });
        }
        for (slot, (want, got)) in sig.iter().zip(operands.iter()).enumerate() {
            if *want != got.kind() {
                return Err(SignatureError::Kind { opcode, slot });
            }
        }
        Ok(Instruction { opcode, operands })
    }

    pub fn reg(&self, slot: usize) -> Reg {
        self.operands[slot].as_reg().expect("register slot")
    }

    pub fn imm(&self, slot: usize) -> i32 {
        self.operands[slot].as_imm().expect("immediate slot")
    }

    pub fn label(&self) -> Option<&str> {
        self.operands.iter().find_map(|o| o.as_label())
    }

    /// Iterator over the register operands in listing order.
    pub fn regs(&self) -> impl Iterator<Item = Reg> + '_ {
        self.operands.iter().filter_map(Operand::as_reg)
    }
}

impl core::fmt::Display for Instruction {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.opcode.mnemonic())?;
        for (i, op) in self.operands.iter().enumerate() {
            if i == 0 {
                write!(f, " {op}")?;
            } else {
                write!(f, ", {op}")?;
            }
        }
        Ok(())
    }
}

/// Violation of an opcode's operand signature.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("{opcode} takes {expected} operands, found {found}")]
    Arity {
        opcode: Opcode,
        expected: usize,
        found: usize,
    },
    #[error("{opcode}: operand {slot} has the wrong kind")]
    Kind { opcode: Opcode, slot: usize },
}

/// Shorthand constructors used by pass and glue code generation. Each panics
/// if the operands do not fit the opcode signature, which is a programming
/// error at the call site.
impl Instruction {
    pub fn rrr(opcode: Opcode, rd: Reg, rs1: Reg, rs2: Reg) -> Instruction {
        Instruction::new(
            opcode,
            alloc::vec![Operand::Reg(rd), Operand::Reg(rs1), Operand::Reg(rs2)],
        )
        .expect("rrr signature")
    }

    pub fn rri(opcode: Opcode, rd: Reg, rs: Reg, imm: i32) -> Instruction {
        Instruction::new(
            opcode,
            alloc::vec![Operand::Reg(rd), Operand::Reg(rs), Operand::Imm(imm)],
        )
        .expect("rri signature")
    }

    pub fn ri(opcode: Opcode, rd: Reg, imm: i32) -> Instruction {
        Instruction::new(opcode, alloc::vec![Operand::Reg(rd), Operand::Imm(imm)])
            .expect("ri signature")
    }

    pub fn rr(opcode: Opcode, rd: Reg, rs: Reg) -> Instruction {
        Instruction::new(opcode, alloc::vec![Operand::Reg(rd), Operand::Reg(rs)])
            .expect("rr signature")
    }

    pub fn rrl(opcode: Opcode, rs1: Reg, rs2: Reg, label: impl Into<String>) -> Instruction {
        Instruction::new(
            opcode,
            alloc::vec![
                Operand::Reg(rs1),
                Operand::Reg(rs2),
                Operand::Label(label.into())
            ],
        )
        .expect("rrl signature")
    }

    pub fn jmp(label: impl Into<String>) -> Instruction {
        Instruction::new(Opcode::Jmp, alloc::vec![Operand::Label(label.into())])
            .expect("jmp signature")
    }

    pub fn r(opcode: Opcode, r: Reg) -> Instruction {
        Instruction::new(opcode, alloc::vec![Operand::Reg(r)]).expect("r signature")
    }

    pub fn halt() -> Instruction {
        Instruction::new(Opcode::Halt, Vec::new()).expect("halt signature")
    }
}
