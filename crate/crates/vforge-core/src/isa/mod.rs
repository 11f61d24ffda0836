//! The VR32 toy RISC ISA: textual assembly, validated programs and a
//! deterministic interpreter that serves as the golden semantics oracle.
//!
//! Sixteen general registers `r0`-`r15`, word-addressed memory, modulo-2^32
//! arithmetic. One retired instruction is one simulated cycle. `IN` pops a
//! word from the input stream, `OUT` appends one to the output stream; the
//! output stream is the observable behaviour every other module compares.

mod defuse;
mod exec;
mod format;
mod inst;
mod opcode;
mod parse;
mod program;

pub use defuse::{def_use, DefUse, IoEffect, MemEffect, RegSet};
pub use exec::{
    execute, execute_with_machine, ExecutionResult, Fault, Machine, Termination, DEFAULT_MEM_WORDS,
};
pub use format::format_program;
pub use inst::{Instruction, Operand, Reg};
pub use opcode::{Opcode, OperandKind, OPCODE_COUNT};
pub use parse::{parse_program, parse_program_named, ParseError};
pub use program::{FunctionSpan, Program, StructuralKey, ValidateError};
