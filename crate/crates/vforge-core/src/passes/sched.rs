use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::isa::{def_use, DefUse, IoEffect, MemEffect, Program};

use super::editor::ProgramEditor;

/// Seeded list scheduling within basic blocks.
///
/// Blocks break at labels, after control transfers and at function
/// boundaries; a control instruction stays pinned at its block end. Within a
/// block the scheduler respects RAW/WAR/WAW register dependences, keeps
/// every memory operation ordered against stores, and never reorders
/// IN/OUT against each other. Ready instructions are drawn in seeded random
/// order, so one program yields many legal schedules.
pub fn run(p: &Program, rng: &mut ChaCha8Rng) -> Program {
    if p.is_empty() {
        return p.clone();
    }
    let editor = ProgramEditor::from_program(p);
    let n = editor.len();

    let mut block_start = vec![false; n];
    block_start[0] = true;
    for i in 0..n {
        if editor.has_labels(i) {
            block_start[i] = true;
        }
        if editor.inst(i).opcode.is_control() && i + 1 < n {
            block_start[i + 1] = true;
        }
    }
    for f in p.functions() {
        block_start[f.start] = true;
        if f.end < n {
            block_start[f.end] = true;
        }
    }

    let mut order: Vec<usize> = Vec::with_capacity(n);
    let mut start = 0;
    for end in 1..=n {
        if end == n || block_start[end] {
            schedule_block(&editor, start, end, rng, &mut order);
            start = end;
        }
    }

    // Labels keep their positions, and positions with labels are exactly the
    // block entries; scheduling permutes instructions only within a block,
    // so every label still marks its block's entry point afterwards.
    let mut out = ProgramEditor::from_program(p);
    for (slot, &src) in order.iter().enumerate() {
        out.set_inst(slot, editor.inst(src).clone());
    }
    out.finish().expect("scheduling preserves validity")
}

fn schedule_block(
    editor: &ProgramEditor,
    start: usize,
    end: usize,
    rng: &mut ChaCha8Rng,
    order: &mut Vec<usize>,
) {
    let mut window_end = end;
    if editor.inst(end - 1).opcode.is_control() {
        window_end = end - 1;
    }
    let len = window_end - start;
    if len <= 1 {
        order.extend(start..end);
        return;
    }

    let effects: Vec<DefUse> = (start..window_end)
        .map(|i| def_use(editor.inst(i)))
        .collect();
    let mut succs: Vec<Vec<usize>> = vec![Vec::new(); len];
    let mut indeg = vec![0usize; len];
    for i in 0..len {
        for j in i + 1..len {
            if depends(&effects[i], &effects[j]) {
                succs[i].push(j);
                indeg[j] += 1;
            }
        }
    }

    let mut ready: Vec<usize> = (0..len).filter(|&i| indeg[i] == 0).collect();
    let mut scheduled = 0;
    while !ready.is_empty() {
        let pick = ready.remove(rng.random_range(0..ready.len()));
        order.push(start + pick);
        scheduled += 1;
        for &s in &succs[pick] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                // Keep the ready list sorted so the draw order is a pure
                // function of the seed.
                let pos = ready.partition_point(|&x| x < s);
                ready.insert(pos, s);
            }
        }
    }
    debug_assert_eq!(scheduled, len);
    order.extend(window_end..end);
}

/// True when instruction `b` must stay after instruction `a`.
fn depends(a: &DefUse, b: &DefUse) -> bool {
    let raw = !a.defs.intersect(b.uses).is_empty();
    let war = !a.uses.intersect(b.defs).is_empty();
    let waw = !a.defs.intersect(b.defs).is_empty();
    let touches_mem = |d: &DefUse| d.mem != MemEffect::None;
    let mem = touches_mem(a)
        && touches_mem(b)
        && (a.mem == MemEffect::Write || b.mem == MemEffect::Write);
    let io = a.io != IoEffect::None && b.io != IoEffect::None;
    raw || war || waw || mem || io
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isa::{execute, parse_program};
    use rand::SeedableRng;

    fn outputs_match(src: &str, inputs: &[u32], seeds: core::ops::Range<u64>) {
        let p = parse_program(src).unwrap();
        let base = execute(&p, inputs, 100_000);
        for seed in seeds {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let q = run(&p, &mut rng);
            assert_eq!(q.len(), p.len(), "seed {seed}: same instruction count");
            let r = execute(&q, inputs, 100_000);
            assert_eq!(base.outputs, r.outputs, "seed {seed}");
            assert_eq!(base.termination, r.termination, "seed {seed}");
        }
    }

    #[test]
    fn respects_register_dependences() {
        outputs_match(
            "IN r1\nADDI r2, r1, 3\nMUL r3, r2, r2\nSUB r4, r3, r1\nOUT r4\nHALT",
            &[11],
            0..30,
        );
    }

    #[test]
    fn respects_store_load_order() {
        let src = "
    LI r1, 10
    LI r2, 111
    SW r2, r1, 0
    LI r3, 222
    SW r3, r1, 0
    LW r4, r1, 0
    OUT r4
    HALT
";
        outputs_match(src, &[], 0..30);
    }

    #[test]
    fn respects_io_order() {
        outputs_match(
            "IN r1\nIN r2\nOUT r2\nOUT r1\nHALT",
            &[5, 6],
            0..30,
        );
    }

    #[test]
    fn independent_instructions_do_get_reordered() {
        let src = "LI r1, 1\nLI r2, 2\nLI r3, 3\nLI r4, 4\nLI r5, 5\nOUT r1\nHALT";
        let p = parse_program(src).unwrap();
        let mut seen_different = false;
        for seed in 0..30 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            if run(&p, &mut rng) != p {
                seen_different = true;
                break;
            }
        }
        assert!(seen_different, "scheduler should find another legal order");
    }

    #[test]
    fn loops_and_labels_stay_intact() {
        let src = "
    LI r1, 5
    LI r2, 0
top:
    ADDI r2, r2, 3
    ADDI r1, r1, -1
    BNE r1, r0, top
    OUT r2
    HALT
";
        outputs_match(src, &[], 0..30);
    }
}
