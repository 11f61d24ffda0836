//! Corpus-level checks: every bundled program parses, round-trips through
//! the formatter, stays inside the renameable register file, and runs to
//! completion on its input fixture. The TEA-like cipher is additionally
//! pinned against an independent reference implementation.

use std::fs;
use std::path::{Path, PathBuf};

use vforge_core::isa::{execute, format_program, parse_program_named, Program, Termination};
use vforge_core::sample::random_inputs;

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn load_corpus() -> Vec<(String, Program, Vec<u32>)> {
    let mut entries: Vec<_> = fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "s"))
        .collect();
    entries.sort();
    entries
        .into_iter()
        .map(|path| {
            let name = path.file_stem().unwrap().to_str().unwrap().to_string();
            let text = fs::read_to_string(&path).unwrap();
            let program = parse_program_named(&text, &name)
                .unwrap_or_else(|e| panic!("{name}: {e}"));
            let inputs = fs::read_to_string(path.with_extension("in"))
                .unwrap_or_else(|_| panic!("{name}: missing .in fixture"))
                .lines()
                .map(|l| l.trim().parse::<u32>().unwrap())
                .collect();
            (name, program, inputs)
        })
        .collect()
}

#[test]
fn corpus_has_at_least_ten_programs() {
    assert!(load_corpus().len() >= 10);
}

#[test]
fn corpus_parses_and_round_trips_structurally() {
    for (name, program, _) in load_corpus() {
        let text = format_program(&program);
        let again = parse_program_named(&text, &name).unwrap();
        assert_eq!(program, again, "{name}: parse(format(p)) != p");
        // Canonical text is a fixed point.
        assert_eq!(text, format_program(&again), "{name}");
    }
}

#[test]
fn tea_file_is_stored_in_canonical_form() {
    let path = corpus_dir().join("tea.s");
    let text = fs::read_to_string(path).unwrap();
    let program = parse_program_named(&text, "tea").unwrap();
    assert_eq!(text, format_program(&program), "tea.s must be canonical");
    assert!(program.functions().len() >= 2);
}

#[test]
fn corpus_avoids_reserved_glue_registers() {
    for (name, program, _) in load_corpus() {
        for inst in program.instructions() {
            for r in inst.regs() {
                assert!(
                    r.index() < 14,
                    "{name}: uses reserved register r{}",
                    r.index()
                );
            }
        }
    }
}

#[test]
fn corpus_halts_on_fixtures_and_produces_output() {
    for (name, program, inputs) in load_corpus() {
        let r = execute(&program, &inputs, 1 << 20);
        assert_eq!(r.termination, Termination::Halted, "{name}");
        assert!(!r.outputs.is_empty(), "{name}: no protected outputs");
    }
}

#[test]
fn corpus_terminates_cleanly_on_random_inputs() {
    // Input-driven loops in the corpus mask their trip counts, so random
    // stimulus must neither spin past the cycle budget nor fault.
    for (name, program, _) in load_corpus() {
        for (i, input) in random_inputs(0xC0FFEE, 8, 128).iter().enumerate() {
            let r = execute(&program, input, 1 << 20);
            assert_eq!(r.termination, Termination::Halted, "{name} vector {i}");
        }
    }
}

/// Independent TEA reference, written against the cipher definition rather
/// than the interpreter: 32 rounds, delta 0x9E3779B9, all arithmetic mod
/// 2^32.
fn tea_reference(key: [u32; 4], block: [u32; 2]) -> [u32; 2] {
    let (mut v0, mut v1) = (block[0], block[1]);
    let mut sum = 0u32;
    let delta = 0x9E37_79B9u32;
    for _ in 0..32 {
        sum = sum.wrapping_add(delta);
        v0 = v0.wrapping_add(
            (v1 << 4).wrapping_add(key[0]) ^ v1.wrapping_add(sum) ^ (v1 >> 5).wrapping_add(key[1]),
        );
        v1 = v1.wrapping_add(
            (v0 << 4).wrapping_add(key[2]) ^ v0.wrapping_add(sum) ^ (v0 >> 5).wrapping_add(key[3]),
        );
    }
    [v0, v1]
}

#[test]
fn tea_matches_independent_reference_on_fixture_and_random_blocks() {
    let corpus = load_corpus();
    let (_, tea, fixture) = corpus.iter().find(|(n, _, _)| n == "tea").unwrap();

    let mut cases: Vec<Vec<u32>> = vec![fixture.clone()];
    cases.extend(random_inputs(0x7EA, 32, 6));
    for input in cases {
        let key = [input[0], input[1], input[2], input[3]];
        let block = [input[4], input[5]];
        let expected = tea_reference(key, block);
        let r = execute(tea, &input, 1 << 20);
        assert_eq!(r.termination, Termination::Halted);
        assert_eq!(r.outputs, expected, "inputs {input:?}");
    }
}
