use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::inst::{Instruction, Operand};
use super::opcode::Opcode;

/// A `.func name` / `.endfunc` annotated range of instructions. Spans are
/// metadata for checkpointing; they do not change execution.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FunctionSpan {
    pub name: String,
    /// Start instruction index, inclusive.
    pub start: usize,
    /// End instruction index, exclusive.
    pub end: usize,
}

/// A validated VR32 program: instructions, resolved label map and function
/// annotations. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Program {
    name: String,
    instructions: Vec<Instruction>,
    labels: BTreeMap<String, usize>,
    functions: Vec<FunctionSpan>,
}

/// Structural violation found while validating a program.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidateError {
    #[error("label `{0}` is referenced but never defined")]
    UndefinedLabel(String),
    #[error("label `{name}` points at instruction {index}, past the end of the program")]
    LabelOutOfRange { name: String, index: usize },
    #[error("last instruction must be HALT or JMP, found {0}")]
    MissingTerminator(Opcode),
    #[error("instruction {index}: shift amount {amount} outside [0, 31]")]
    ShiftOutOfRange { index: usize, amount: i32 },
    #[error("function `{name}` has an empty, overlapping or out-of-range span {start}..{end}")]
    BadFunctionSpan {
        name: String,
        start: usize,
        end: usize,
    },
}

impl Program {
    /// Builds and validates a program. Checks performed:
    ///
    /// - every referenced label is defined and in range,
    /// - shift immediates lie in `[0, 31]`,
    /// - the final instruction is `HALT` or `JMP` (empty programs are fine),
    /// - function spans nest inside the instruction list.
    ///
    /// Operand arity/kind correctness is already guaranteed per
    /// [`Instruction`]; duplicate labels cannot be expressed in the map.
    pub fn new(
        name: impl Into<String>,
        instructions: Vec<Instruction>,
        labels: BTreeMap<String, usize>,
        functions: Vec<FunctionSpan>,
    ) -> Result<Program, ValidateError> {
        for (label, index) in &labels {
            if *index >= instructions.len() {
                return Err(ValidateError::LabelOutOfRange {
                    name: label.clone(),
                    index: *index,
                });
            }
        }
        for (index, inst) in instructions.iter().enumerate() {
            if let Some(l) = inst.label() {
                if !labels.contains_key(l) {
                    return Err(ValidateError::UndefinedLabel(String::from(l)));
                }
            }
            if matches!(inst.opcode, Opcode::Sll | Opcode::Srl) {
                let amount = inst.imm(2);
                if !(0..=31).contains(&amount) {
                    return Err(ValidateError::ShiftOutOfRange { index, amount });
                }
            }
        }
        if let Some(last) = instructions.last() {
            if !matches!(last.opcode, Opcode::Halt | Opcode::Jmp) {
                return Err(ValidateError::MissingTerminator(last.opcode));
            }
        }
        let mut prev_end = 0usize;
        for f in &functions {
            if f.start >= f.end || f.end > instructions.len() || f.start < prev_end {
                return Err(ValidateError::BadFunctionSpan {
                    name: f.name.clone(),
                    start: f.start,
                    end: f.end,
                });
            }
            prev_end = f.end;
        }
        Ok(Program {
            name: name.into(),
            instructions,
            labels,
            functions,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    pub fn labels(&self) -> &BTreeMap<String, usize> {
        &self.labels
    }

    pub fn functions(&self) -> &[FunctionSpan] {
        &self.functions
    }

    pub fn function(&self, name: &str) -> Option<&FunctionSpan> {
        self.functions.iter().find(|f| f.name == name)
    }

    /// Instruction index a label resolves to.
    pub fn resolve(&self, label: &str) -> Option<usize> {
        self.labels.get(label).copied()
    }

    /// Resolved branch/jump target of the instruction at `index`, if any.
    pub fn target_of(&self, index: usize) -> Option<usize> {
        self.instructions[index]
            .label()
            .and_then(|l| self.resolve(l))
    }

    /// Key for structural equality modulo label names: opcodes plus operands
    /// with every label replaced by its resolved target index. Two programs
    /// with the same key execute identically instruction for instruction.
    pub fn structural_key(&self) -> StructuralKey {
        let items = self
            .instructions
            .iter()
            .map(|inst| {
                let ops = inst
                    .operands
                    .iter()
                    .map(|o| match o {
                        Operand::Reg(r) => OperandKey::Reg(r.index() as u8),
                        Operand::Imm(v) => OperandKey::Imm(*v),
                        Operand::Label(l) => {
                            OperandKey::Target(self.resolve(l).expect("validated label"))
                        }
                    })
                    .collect();
                (inst.opcode, ops)
            })
            .collect();
        StructuralKey(items)
    }
}

/// See [`Program::structural_key`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StructuralKey(Vec<(Opcode, Vec<OperandKey>)>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OperandKey {
    Reg(u8),
    Imm(i32),
    Target(usize),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::inst::Reg;
    use alloc::vec;

    fn r(i: u8) -> Reg {
        Reg::new(i).unwrap()
    }

    #[test]
    fn rejects_undefined_label() {
        let insts = vec![Instruction::jmp("nowhere"), Instruction::halt()];
        let err = Program::new("t", insts, BTreeMap::new(), vec![]);
        assert_eq!(
            err,
            Err(ValidateError::UndefinedLabel(String::from("nowhere")))
        );
    }

    #[test]
    fn rejects_missing_terminator() {
        let insts = vec![Instruction::ri(Opcode::Li, r(1), 5)];
        let err = Program::new("t", insts, BTreeMap::new(), vec![]);
        assert!(matches!(err, Err(ValidateError::MissingTerminator(_))));
    }

    #[test]
    fn rejects_bad_shift_amount() {
        let insts = vec![
            Instruction::rri(Opcode::Sll, r(1), r(2), 32),
            Instruction::halt(),
        ];
        let err = Program::new("t", insts, BTreeMap::new(), vec![]);
        assert!(matches!(err, Err(ValidateError::ShiftOutOfRange { .. })));
    }

    #[test]
    fn structural_key_ignores_label_spelling() {
        let mk = |label: &str| {
            let insts = vec![
                Instruction::rrl(Opcode::Beq, r(1), r(2), label),
                Instruction::halt(),
            ];
            let mut labels = BTreeMap::new();
            labels.insert(String::from(label), 1);
            Program::new("t", insts, labels, vec![]).unwrap()
        };
        assert_eq!(mk("a").structural_key(), mk("b").structural_key());
    }

    #[test]
    fn empty_program_is_valid() {
        let p = Program::new("t", vec![], BTreeMap::new(), vec![]).unwrap();
        assert!(p.is_empty());
    }
}
