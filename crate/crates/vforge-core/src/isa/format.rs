use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use super::program::Program;

/// Prints a program in canonical form: labels and directives at column zero,
/// instructions indented four spaces, immediates in signed decimal, one
/// trailing newline per line and nothing else. `parse_program` applied to
/// the output reproduces the program structurally; canonical files on disk
/// round-trip byte for byte.
pub fn format_program(p: &Program) -> String {
    let mut out = String::new();

    // Labels grouped by target index, emitted in name order per index.
    let mut labels_at: Vec<Vec<&str>> = alloc::vec![Vec::new(); p.len()];
    for (name, index) in p.labels() {
        labels_at[*index].push(name);
    }

    let mut func_starts: Vec<Vec<&str>> = alloc::vec![Vec::new(); p.len() + 1];
    let mut func_ends: Vec<Vec<&str>> = alloc::vec![Vec::new(); p.len() + 1];
    for f in p.functions() {
        func_starts[f.start].push(&f.name);
        func_ends[f.end].push(&f.name);
    }

    for (index, inst) in p.instructions().iter().enumerate() {
        for name in func_ends[index].iter().rev() {
            let _ = name;
            out.push_str(".endfunc\n");
        }
        for name in &func_starts[index] {
            let _ = writeln!(out, ".func {name}");
        }
        for label in &labels_at[index] {
            let _ = writeln!(out, "{label}:");
        }
        let _ = writeln!(out, "    {inst}");
    }
    for _ in &func_ends[p.len()] {
        out.push_str(".endfunc\n");
    }

    out
}
