//! IO, file formats and pipeline drivers for the `vforge` toolchain. The
//! algorithmic core lives in `vforge-core`; this crate owns everything that
//! touches the filesystem: assembly and input files, JSON manifests, CSV
//! emission, and the subcommand implementations behind the `vforge` binary.

pub mod config;
pub mod formats;
pub mod manifest;
pub mod pipeline;
pub mod report;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use vforge_core::isa::{parse_program_named, Program};

/// Loads and validates one assembly file; the program is named after the
/// file stem.
pub fn load_program(path: &Path) -> Result<Program> {
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .context("program path has no usable file stem")?;
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_program_named(&text, name).with_context(|| format!("parsing {}", path.display()))
}

/// Reads a whitespace/line separated list of 32-bit words (decimal or 0x
/// hex, negative decimal accepted and wrapped).
pub fn load_words(path: &Path) -> Result<Vec<u32>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut words = Vec::new();
    for (i, token) in text.split_whitespace().enumerate() {
        let value = parse_word(token)
            .with_context(|| format!("{}: bad word #{} `{token}`", path.display(), i + 1))?;
        words.push(value);
    }
    Ok(words)
}

fn parse_word(token: &str) -> Result<u32> {
    if let Some(hex) = token.strip_prefix("0x").or_else(|| token.strip_prefix("0X")) {
        return Ok(u32::from_str_radix(hex, 16)?);
    }
    if let Some(rest) = token.strip_prefix('-') {
        let magnitude: u32 = rest.parse()?;
        return Ok((magnitude as i32).wrapping_neg() as u32);
    }
    Ok(token.parse()?)
}

/// Corpus programs with their input fixtures, sorted by name. `.s` files
/// without a matching `.in` get an empty input vector.
pub fn load_corpus(dir: &Path) -> Result<Vec<(Program, Vec<u32>)>> {
    let mut sources: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading corpus directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "s"))
        .collect();
    sources.sort();
    if sources.is_empty() {
        bail!("no programs found in {}", dir.display());
    }
    sources
        .into_iter()
        .map(|path| {
            let program = load_program(&path)?;
            let inputs = match fs::read_to_string(path.with_extension("in")) {
                Ok(text) => text
                    .split_whitespace()
                    .map(parse_word)
                    .collect::<Result<Vec<u32>>>()?,
                Err(_) => Vec::new(),
            };
            Ok((program, inputs))
        })
        .collect()
}
