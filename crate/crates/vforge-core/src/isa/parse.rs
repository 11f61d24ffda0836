use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::inst::{Instruction, Operand, Reg};
use super::opcode::{Opcode, OperandKind};
use super::program::{FunctionSpan, Program, ValidateError};

/// Error raised while parsing assembly text. Line numbers are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: unknown opcode `{mnemonic}`")]
    UnknownOpcode { line: usize, mnemonic: String },
    #[error("line {line}: {opcode} takes {expected} operands, found {found}")]
    ArityMismatch {
        line: usize,
        opcode: Opcode,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: immediate `{text}` out of 32-bit range")]
    ImmediateOutOfRange { line: usize, text: String },
    #[error("line {line}: expected {expected:?} operand, found `{text}`")]
    BadOperand {
        line: usize,
        expected: OperandKind,
        text: String,
    },
    #[error("line {line}: duplicate label `{name}`")]
    DuplicateLabel { line: usize, name: String },
    #[error("label `{name}` has no instruction to attach to")]
    DanglingLabel { name: String },
    #[error("line {line}: `.func` while `{open}` is still open")]
    NestedFunction { line: usize, open: String },
    #[error("line {line}: `.endfunc` without `.func`")]
    StrayEndfunc { line: usize },
    #[error("function `{name}` is never closed with `.endfunc`")]
    UnterminatedFunction { name: String },
    #[error("line {line}: malformed directive `{text}`")]
    BadDirective { line: usize, text: String },
    #[error(transparent)]
    Invalid(#[from] ValidateError),
}

/// Parses assembly text into a validated [`Program`] named `source`.
///
/// The format is line oriented: `;` starts a comment, `name:` defines a
/// label (an instruction may follow on the same line), `.func name` /
/// `.endfunc` bracket function annotations. Registers are `r0`-`r15`,
/// immediates are signed decimal or `0x` hexadecimal.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    parse_program_named(text, "source")
}

/// [`parse_program`] with an explicit program name.
pub fn parse_program_named(text: &str, name: &str) -> Result<Program, ParseError> {
    let mut instructions: Vec<Instruction> = Vec::new();
    let mut labels: BTreeMap<String, usize> = BTreeMap::new();
    let mut pending_labels: Vec<String> = Vec::new();
    let mut functions: Vec<FunctionSpan> = Vec::new();
    let mut open_func: Option<(String, usize)> = None;

    for (line_no, raw) in text.lines().enumerate() {
        let line = line_no + 1;
        let mut rest = match raw.split_once(';') {
            Some((code, _comment)) => code.trim(),
            None => raw.trim(),
        };
        if rest.is_empty() {
            continue;
        }

        if let Some(directive) = rest.strip_prefix('.') {
            parse_directive(
                directive,
                line,
                instructions.len(),
                &mut functions,
                &mut open_func,
            )?;
            continue;
        }

        // One leading `label:` allowed per line, instruction optional after.
        if let Some((head, tail)) = rest.split_once(':') {
            let label = head.trim();
            if !is_identifier(label) {
                return Err(ParseError::BadOperand {
                    line,
                    expected: OperandKind::Label,
                    text: label.to_string(),
                });
            }
            if labels.contains_key(label) || pending_labels.iter().any(|l| l == label) {
                return Err(ParseError::DuplicateLabel {
                    line,
                    name: label.to_string(),
                });
            }
            pending_labels.push(label.to_string());
            rest = tail.trim();
            if rest.is_empty() {
                continue;
            }
        }

        let inst = parse_instruction(rest, line)?;
        for label in pending_labels.drain(..) {
            labels.insert(label, instructions.len());
        }
        instructions.push(inst);
    }

    if let Some(label) = pending_labels.into_iter().next() {
        return Err(ParseError::DanglingLabel { name: label });
    }
    if let Some((name, _)) = open_func {
        return Err(ParseError::UnterminatedFunction { name });
    }

    Ok(Program::new(name, instructions, labels, functions)?)
}

fn parse_directive(
    directive: &str,
    line: usize,
    at: usize,
    functions: &mut Vec<FunctionSpan>,
    open_func: &mut Option<(String, usize)>,
) -> Result<(), ParseError> {
    let mut words = directive.split_whitespace();
    match words.next() {
        Some("func") => {
            let name = match (words.next(), words.next()) {
                (Some(n), None) if is_identifier(n) => n.to_string(),
                _ => {
                    return Err(ParseError::BadDirective {
                        line,
                        text: directive.to_string(),
                    })
                }
            };
            if let Some((open, _)) = open_func {
                return Err(ParseError::NestedFunction {
                    line,
                    open: open.clone(),
                });
            }
            *open_func = Some((name, at));
            Ok(())
        }
        Some("endfunc") if words.next().is_none() => match open_func.take() {
            Some((name, start)) => {
                functions.push(FunctionSpan {
                    name,
                    start,
                    end: at,
                });
                Ok(())
            }
            None => Err(ParseError::StrayEndfunc { line }),
        },
        _ => Err(ParseError::BadDirective {
            line,
            text: directive.to_string(),
        }),
    }
}

fn parse_instruction(text: &str, line: usize) -> Result<Instruction, ParseError> {
    let (mnemonic, operand_text) = match text.split_once(char::is_whitespace) {
        Some((m, rest)) => (m, rest.trim()),
        None => (text, ""),
    };
    let opcode = Opcode::from_mnemonic(mnemonic).ok_or_else(|| ParseError::UnknownOpcode {
        line,
        mnemonic: mnemonic.to_string(),
    })?;

    let parts: Vec<&str> = if operand_text.is_empty() {
        Vec::new()
    } else {
        operand_text.split(',').map(str::trim).collect()
    };
    let sig = opcode.signature();
    if parts.len() != sig.len() {
        return Err(ParseError::ArityMismatch {
            line,
            opcode,
            expected: sig.len(),
            found: parts.len(),
        });
    }

    let mut operands = Vec::with_capacity(sig.len());
    for (kind, part) in sig.iter().zip(parts) {
        operands.push(parse_operand(*kind, part, line)?);
    }
    Ok(Instruction::new(opcode, operands).expect("signature checked above"))
}

fn parse_operand(kind: OperandKind, text: &str, line: usize) -> Result<Operand, ParseError> {
    let bad = || ParseError::BadOperand {
        line,
        expected: kind,
        text: text.to_string(),
    };
    match kind {
        OperandKind::Reg => {
            let idx = text
                .strip_prefix(['r', 'R'])
                .and_then(|n| n.parse::<u8>().ok())
                .and_then(Reg::new)
                .ok_or_else(bad)?;
            Ok(Operand::Reg(idx))
        }
        OperandKind::Imm => Ok(Operand::Imm(parse_immediate(text, line)?)),
        OperandKind::Label => {
            if is_identifier(text) {
                Ok(Operand::Label(text.to_string()))
            } else {
                Err(bad())
            }
        }
    }
}

/// Accepts signed decimal in the i32 range, unsigned decimal up to
/// 2^32 - 1 (reinterpreted as two's complement) and `0x` hex.
fn parse_immediate(text: &str, line: usize) -> Result<i32, ParseError> {
    let out_of_range = || ParseError::ImmediateOutOfRange {
        line,
        text: text.to_string(),
    };
    let (negative, digits) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    if digits.is_empty() {
        return Err(out_of_range());
    }
    let magnitude = if let Some(hex) = digits.strip_prefix("0x").or(digits.strip_prefix("0X")) {
        u32::from_str_radix(hex, 16).map_err(|_| out_of_range())?
    } else {
        digits.parse::<u32>().map_err(|_| out_of_range())?
    };
    if negative {
        if magnitude > (i32::MAX as u32) + 1 {
            return Err(out_of_range());
        }
        Ok((magnitude as i32).wrapping_neg())
    } else {
        Ok(magnitude as i32)
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_program_parses() {
        let p = parse_program("LI r1, 5\nOUT r1\nHALT").unwrap();
        assert_eq!(p.len(), 3);
        assert!(p.labels().is_empty());
    }

    #[test]
    fn arity_mismatch_is_reported_with_line() {
        let err = parse_program("ADD r1, r2").unwrap_err();
        assert_eq!(
            err,
            ParseError::ArityMismatch {
                line: 1,
                opcode: Opcode::Add,
                expected: 3,
                found: 2,
            }
        );
    }

    #[test]
    fn unknown_opcode_is_reported() {
        let err = parse_program("FOO r1\nHALT").unwrap_err();
        assert!(matches!(err, ParseError::UnknownOpcode { line: 1, .. }));
    }

    #[test]
    fn labels_comments_and_directives() {
        let src = "
.func main
    LI r1, 3      ; counter
loop:
    ADDI r1, r1, -1
    BNE r1, r2, loop
.endfunc
    HALT
";
        let p = parse_program(src).unwrap();
        assert_eq!(p.len(), 4);
        assert_eq!(p.resolve("loop"), Some(1));
        let f = p.function("main").unwrap();
        assert_eq!((f.start, f.end), (0, 3));
    }

    #[test]
    fn duplicate_label_rejected() {
        let err = parse_program("x:\nHALT\nx:\nHALT").unwrap_err();
        assert!(matches!(err, ParseError::DuplicateLabel { .. }));
    }

    #[test]
    fn dangling_label_rejected() {
        let err = parse_program("HALT\nend:\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::DanglingLabel {
                name: String::from("end")
            }
        );
    }

    #[test]
    fn label_with_instruction_on_same_line() {
        let p = parse_program("top: LI r1, 1\nJMP top").unwrap();
        assert_eq!(p.resolve("top"), Some(0));
    }

    #[test]
    fn immediate_forms() {
        let p = parse_program("LI r1, -7\nLI r2, 0xFFFFFFFF\nLI r3, 4294967295\nHALT").unwrap();
        assert_eq!(p.instructions()[0].imm(1), -7);
        assert_eq!(p.instructions()[1].imm(1), -1);
        assert_eq!(p.instructions()[2].imm(1), -1);
        let err = parse_program("LI r1, 4294967296\nHALT").unwrap_err();
        assert!(matches!(err, ParseError::ImmediateOutOfRange { .. }));
    }

    #[test]
    fn undefined_branch_target_rejected() {
        let err = parse_program("BEQ r1, r2, missing\nHALT").unwrap_err();
        assert!(matches!(
            err,
            ParseError::Invalid(ValidateError::UndefinedLabel(_))
        ));
    }

    #[test]
    fn empty_source_parses_to_empty_program() {
        let p = parse_program("").unwrap();
        assert!(p.is_empty());
    }
}
