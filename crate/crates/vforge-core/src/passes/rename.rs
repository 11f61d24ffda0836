use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::isa::{Instruction, Operand, Program, Reg};

use super::editor::ProgramEditor;

/// Highest register index the renamer may touch; r14/r15 are the reserved
/// harness glue registers and keep their identity.
pub const RENAMEABLE_REGS: u8 = 14;

/// Applies a seeded permutation of r0-r13 to every register operand.
/// IN/OUT operands rename consistently with everything else, so the
/// observable stream is untouched.
pub fn run(p: &Program, rng: &mut ChaCha8Rng) -> Program {
    let mut perm: [u8; RENAMEABLE_REGS as usize] = core::array::from_fn(|i| i as u8);
    perm.shuffle(rng);

    let mut editor = ProgramEditor::from_program(p);
    for index in 0..editor.len() {
        let inst = editor.inst(index);
        let operands = inst
            .operands
            .iter()
            .map(|o| match o {
                Operand::Reg(r) if (r.index() as u8) < RENAMEABLE_REGS => {
                    Operand::Reg(Reg::new(perm[r.index()]).expect("permutation stays in range"))
                }
                other => other.clone(),
            })
            .collect();
        let renamed = Instruction::new(inst.opcode, operands).expect("same signature");
        editor.set_inst(index, renamed);
    }
    editor.finish().expect("renaming preserves validity")
}
