use alloc::vec;
use alloc::vec::Vec;

use crate::isa::{def_use, Opcode, Program, RegSet};

/// Per-instruction live register sets, computed by backward dataflow to a
/// fixpoint over the control-flow graph. Nothing is live out of `HALT`;
/// `OUT` keeps its operand live like any other use.
#[derive(Debug, Clone)]
pub struct Liveness {
    live_in: Vec<RegSet>,
    live_out: Vec<RegSet>,
}

impl Liveness {
    pub fn live_in(&self, index: usize) -> RegSet {
        self.live_in[index]
    }

    pub fn live_out(&self, index: usize) -> RegSet {
        self.live_out[index]
    }
}

/// Successor instruction indices of instruction `index`.
pub fn successors(p: &Program, index: usize) -> impl Iterator<Item = usize> {
    let inst = &p.instructions()[index];
    let (fallthrough, target) = match inst.opcode {
        Opcode::Halt => (None, None),
        Opcode::Jmp => (None, p.target_of(index)),
        Opcode::Beq | Opcode::Bne => (Some(index + 1), p.target_of(index)),
        _ => (Some(index + 1), None),
    };
    fallthrough.into_iter().chain(target)
}

/// Computes [`Liveness`] for `p`.
pub fn live_sets(p: &Program) -> Liveness {
    let n = p.len();
    let defuse: Vec<_> = p.instructions().iter().map(def_use).collect();
    let mut live_in = vec![RegSet::EMPTY; n];
    let mut live_out = vec![RegSet::EMPTY; n];

    let mut changed = true;
    while changed {
        changed = false;
        for i in (0..n).rev() {
            let mut out = RegSet::EMPTY;
            for s in successors(p, i) {
                out = out.union(live_in[s]);
            }
            let inn = defuse[i].uses.union(out.minus(defuse[i].defs));
            if out != live_out[i] || inn != live_in[i] {
                live_out[i] = out;
                live_in[i] = inn;
                changed = true;
            }
        }
    }

    Liveness { live_in, live_out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::{parse_program, Reg};

    fn r(i: u8) -> Reg {
        Reg::new(i).unwrap()
    }

    #[test]
    fn straight_line_liveness() {
        let p = parse_program("LI r1, 5\nADD r2, r1, r1\nOUT r2\nHALT").unwrap();
        let l = live_sets(&p);
        assert!(l.live_out(0).contains(r(1)));
        assert!(!l.live_out(1).contains(r(1)));
        assert!(l.live_out(1).contains(r(2)));
        assert!(l.live_out(2).is_empty());
        assert!(l.live_out(3).is_empty());
    }

    #[test]
    fn loop_keeps_counter_live() {
        let src = "
    LI r1, 3
top:
    ADDI r1, r1, -1
    BNE r1, r0, top
    OUT r1
    HALT
";
        let p = parse_program(src).unwrap();
        let l = live_sets(&p);
        // r1 is live around the back edge and r0 is read by the branch.
        assert!(l.live_out(1).contains(r(1)));
        assert!(l.live_in(1).contains(r(1)));
        assert!(l.live_in(2).contains(r(0)));
        // r5 is never touched.
        assert!(!l.live_in(0).contains(r(5)));
    }

    #[test]
    fn dead_past_final_write() {
        let p = parse_program("IN r1\nLI r1, 0\nOUT r1\nHALT").unwrap();
        let l = live_sets(&p);
        // The IN result is dead: overwritten before any read.
        assert!(!l.live_out(0).contains(r(1)));
    }
}
