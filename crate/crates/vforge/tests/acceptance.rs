//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measured numbers. Thresholds and tolerances are
//! pinned here, not configurable.
//!
//! 1. TAR formula reproduction on the reference trigger counts.
//! 2. Nine-scenario detection/tolerance suite on the TEA-like bundle.
//! 3. Equivalence fuzzing: 1000+ seeded pass-sequence applications.
//! 4. Similarity against a brute-force bigram oracle on random pairs.
//! 5. TAR trend over trigger widths and SP bands across 32 fixtures.
//! 6. Negative correlation between pair similarity and TAR.
//! 7. Overhead shrinks with program size; bundles reproduce base outputs.
//! 8. Clean-path frugality: exactly two variants execute without Trojans.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use vforge_core::harness::{
    build_bundle_verified, run_bundle, overhead_report, RunVerdict, VotePolicy,
};
use vforge_core::isa::{execute, parse_program_named, Operand, Program};
use vforge_core::passes::{
    apply_sequence, default_database, default_test_inputs, check_equivalence, PassId,
    PassSequence,
};
use vforge_core::sample::{random_program, SampleOptions};
use vforge_core::similarity::{build_signature, variant_similarity_with, ScoreMode};
use vforge_core::trojan::scenario::{build_scenario_suite, shared_li_constants};
use vforge_core::trojan::sweep::{tar_sweep, TarSweepConfig};
use vforge_core::trojan::TarEntry;

const LIMIT: u64 = 1 << 24;

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn load(name: &str) -> (Program, Vec<u32>) {
    let dir = corpus_dir();
    let program = parse_program_named(
        &fs::read_to_string(dir.join(format!("{name}.s"))).unwrap(),
        name,
    )
    .unwrap();
    let inputs = fs::read_to_string(dir.join(format!("{name}.in")))
        .unwrap()
        .split_whitespace()
        .map(|t| t.parse().unwrap())
        .collect();
    (program, inputs)
}

fn load_all() -> Vec<(Program, Vec<u32>)> {
    let mut names: Vec<String> = fs::read_dir(corpus_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "s").then(|| p.file_stem()?.to_str().map(String::from))?
        })
        .collect();
    names.sort();
    names.iter().map(|n| load(n)).collect()
}

fn variant(base: &Program, name: &str, passes: Vec<PassId>, seed: u64) -> Program {
    let mut v = apply_sequence(base, &PassSequence::new(name, passes), seed);
    v.set_name(format!("{}-{name}", base.name()));
    v
}

#[test]
fn criterion_1_tar_formula_reproduction() {
    let entry = TarEntry::from_counts(18742, 2830);
    let tar = entry.tar.expect("defined for nonzero T_n");
    assert!(
        (tar - 84.90).abs() <= 0.01,
        "TAR(18742, 2830) = {tar}, expected 84.90 +/- 0.01"
    );
    assert_eq!(TarEntry::from_counts(100, 0).tar, Some(100.0));
    assert_eq!(TarEntry::from_counts(100, 100).tar, Some(0.0));
    assert_eq!(TarEntry::from_counts(0, 0).tar, None);
    println!("criterion 1 (TAR formula): PASS - TAR(18742, 2830) = {tar:.4}%");
}

#[test]
fn criterion_2_scenario_suite() {
    let (base, inputs) = load("tea");
    let golden = execute(&base, &inputs, LIMIT);

    // Fixture bundle: the two eager variants keep the cipher's round
    // constant as a literal LI while the escalation variant splits it; the
    // seed scan below pins the first seed with that property.
    let v0_seq = vec![PassId::Rename, PassId::Sched];
    let v1_seq = vec![PassId::Sched, PassId::Commute, PassId::Rename];
    let v2_seq = vec![PassId::ImmSplit, PassId::Sched, PassId::Rename];
    let mut bundle = None;
    for seed in 0..64u64 {
        let v0 = variant(&base, "eager0", v0_seq.clone(), seed * 3 + 1);
        let v1 = variant(&base, "eager1", v1_seq.clone(), seed * 5 + 2);
        let v2 = variant(&base, "escal", v2_seq.clone(), seed * 7 + 3);
        let Ok(b) = build_bundle_verified(&[v0, v1, v2], VotePolicy::new(3).unwrap(), seed ^ 0xB00)
        else {
            continue;
        };
        if !shared_li_constants(&b).is_empty() {
            bundle = Some(b);
            break;
        }
    }
    let bundle = bundle.expect("fixture bundle");

    let scenarios =
        build_scenario_suite(&bundle, &inputs, &golden.outputs).expect("scenario construction");
    let observed: Vec<(bool, bool)> = scenarios
        .iter()
        .map(|s| (s.outcome.detected, s.outcome.tolerated))
        .collect();
    let expected = vec![
        (true, true),
        (true, true),
        (true, true),
        (true, true),
        (false, false),
        (true, false),
        (true, false),
        (true, true),
        (true, true),
    ];
    assert_eq!(observed, expected, "detection/tolerance pattern mismatch");
    for (s, mask) in scenarios.iter().zip([
        [true, false, false],
        [true, false, false],
        [true, false, false],
        [true, false, false],
        [true, true, false],
        [true, true, false],
        [true, true, false],
        [true, true, false],
        [true, true, false],
    ]) {
        assert_eq!(s.outcome.activation_mask, mask, "{} activation mask", s.name);
    }
    println!(
        "criterion 2 (scenario suite): PASS - 9 scenarios, pattern (Y,Y)x4 (N,N) (Y,N)x2 (Y,Y)x2"
    );
}

#[test]
fn criterion_3_equivalence_fuzzing() {
    let corpus = load_all();
    assert!(corpus.len() >= 10, "need >= 10 corpus programs");
    let db = default_database();
    let seeds_per_sequence = 10u64;
    let mut applications = 0usize;

    for (base, fixture) in &corpus {
        let mut tests = vec![fixture.clone()];
        tests.extend(default_test_inputs(0xACCE97));
        for sequence in &db {
            for s in 0..seeds_per_sequence {
                let seed = s * 7919 + 17;
                let candidate = apply_sequence(base, sequence, seed);
                let verdict = check_equivalence(base, &candidate, &tests);
                assert!(
                    verdict.is_equivalent(),
                    "{}: sequence {} seed {seed} diverged: {verdict:?}",
                    base.name(),
                    sequence.name
                );
                applications += 1;
            }
        }
    }
    assert!(applications >= 1000, "only {applications} applications");
    println!(
        "criterion 3 (equivalence fuzzing): PASS - {applications} applications x {} vectors, zero divergences",
        1 + 64
    );
}

/// Brute-force bigram minimum, written against rendered token text rather
/// than the table implementation.
fn oracle_raw(a: &Program, b: &Program) -> u64 {
    fn pairs(tokens: &[String]) -> BTreeMap<(String, String), u64> {
        let mut m = BTreeMap::new();
        for w in tokens.windows(2) {
            *m.entry((w[0].clone(), w[1].clone())).or_insert(0) += 1;
        }
        m
    }
    fn min_sum(a: &BTreeMap<(String, String), u64>, b: &BTreeMap<(String, String), u64>) -> u64 {
        a.iter()
            .filter_map(|(k, va)| b.get(k).map(|vb| (*va).min(*vb)))
            .sum()
    }
    let opcodes = |p: &Program| -> Vec<String> {
        p.instructions()
            .iter()
            .map(|i| i.opcode.mnemonic().to_string())
            .collect()
    };
    let operands = |p: &Program| -> Vec<String> {
        p.instructions()
            .iter()
            .flat_map(|i| i.operands.iter())
            .map(|o| match o {
                Operand::Reg(r) => format!("{r}"),
                Operand::Imm(_) => "IMM".into(),
                Operand::Label(_) => "LABEL".into(),
            })
            .collect()
    };
    min_sum(&pairs(&opcodes(a)), &pairs(&opcodes(b)))
        + min_sum(&pairs(&operands(a)), &pairs(&operands(b)))
}

#[test]
fn criterion_4_vs_oracle_equivalence() {
    let mut checked = 0usize;
    for seed in 0..110u64 {
        let len = 5 + (seed as usize * 13) % 46; // lengths 5..=50
        let opts = SampleOptions {
            len,
            ..SampleOptions::default()
        };
        let a = random_program(seed * 2 + 1000, &opts);
        let b = random_program(seed * 2 + 1001, &opts);
        let got = variant_similarity_with(
            &build_signature(&a).unwrap(),
            &build_signature(&b).unwrap(),
            ScoreMode::Full,
        )
        .unwrap()
        .raw;
        assert_eq!(got, oracle_raw(&a, &b), "seed {seed}");
        checked += 1;
    }
    assert!(checked >= 100);
    println!("criterion 4 (VS oracle): PASS - {checked} random pairs, exact agreement");
}

/// Shared fixture sweep for criteria 5 and 6: 6 constant-rich programs x 2
/// bundles x 2 variant pairs = 24 (program, pair) fixtures. Rare-trigger
/// populations live in the immediate-bit nets, so the fixtures are programs
/// whose windows carry distinctive constants; crc runs a shortened stimulus
/// to keep its single-shot polynomial constant inside the SP band.
fn trend_fixtures() -> Vec<(String, f64, Vec<vforge_core::trojan::sweep::TarObservation>)> {
    let programs = ["tea", "crc", "lfsr", "mulsum", "midmix", "unrolled"];
    let config = TarSweepConfig {
        widths: vec![4, 5, 6, 7, 8],
        sp_bands: vec![(0.001, 0.05), (0.001, 0.025)],
        cap: 3000,
        seed: 11,
    };
    let mut fixtures = Vec::new();
    for (pi, name) in programs.iter().enumerate() {
        let (base, mut inputs) = load(name);
        if *name == "crc" {
            inputs = vec![2, 0x48, 0x65];
        }
        let ps = pi as u64 * 101;
        let bundles = [
            // One near-identical variant (operand swaps only) anchors the
            // high-similarity end of the scatter; one aggressive
            // constant-splitting variant anchors the diverse end.
            (
                variant(&base, "mild", vec![PassId::Commute], ps + 1),
                variant(
                    &base,
                    "aggr",
                    vec![
                        PassId::ImmSplit,
                        PassId::Strength,
                        PassId::Rename,
                        PassId::ImmSplit,
                        PassId::Sched,
                    ],
                    ps + 2,
                ),
            ),
            (
                variant(&base, "mid", vec![PassId::Rename, PassId::Sched], ps + 3),
                variant(
                    &base,
                    "full",
                    vec![
                        PassId::Rename,
                        PassId::Sched,
                        PassId::Commute,
                        PassId::Strength,
                        PassId::ImmSplit,
                        PassId::BrFlip,
                        PassId::PadPair,
                    ],
                    ps + 4,
                ),
            ),
        ];
        for (bi, (v1, v2)) in bundles.into_iter().enumerate() {
            let bundle = build_bundle_verified(
                &[base.clone(), v1.clone(), v2.clone()],
                VotePolicy::new(3).unwrap(),
                ps + bi as u64,
            )
            .unwrap_or_else(|e| panic!("{name} bundle {bi}: {e}"));
            let observations = tar_sweep(&bundle, &inputs, &config, LIMIT)
                .unwrap_or_else(|e| panic!("{name} bundle {bi}: sweep {e}"));
            let sig0 = build_signature(&base).unwrap();
            for (m, v) in [(1usize, &v1), (2usize, &v2)] {
                let vs = variant_similarity_with(
                    &sig0,
                    &build_signature(v).unwrap(),
                    ScoreMode::Full,
                )
                .unwrap()
                .normalized;
                let obs: Vec<_> = observations
                    .iter()
                    .filter(|o| o.pair.1 == m)
                    .cloned()
                    .collect();
                fixtures.push((format!("{name}.b{bi}.v0-v{m}"), vs, obs));
            }
        }
    }
    fixtures
}

#[test]
fn criterion_5_and_6_tar_trends_and_diversity_benefit() {
    let fixtures = trend_fixtures();
    assert!(fixtures.len() >= 20, "only {} fixtures", fixtures.len());

    // Criterion 5a: mean TAR non-decreasing in trigger width per SP band.
    let widths = [4usize, 5, 6, 7, 8];
    let bands = [0.05f64, 0.025];
    let mut means: BTreeMap<(usize, u32), (f64, usize)> = BTreeMap::new();
    for (_, _, obs) in &fixtures {
        for o in obs {
            if let Some(t) = o.entry.tar {
                let band_key = (o.sp_max * 1000.0) as u32;
                let e = means.entry((o.width, band_key)).or_insert((0.0, 0));
                e.0 += t;
                e.1 += 1;
            }
        }
    }
    let mean = |w: usize, band: f64| -> Option<f64> {
        let (sum, n) = means.get(&(w, (band * 1000.0) as u32))?;
        (*n > 0).then(|| sum / *n as f64)
    };

    const SLACK_PP: f64 = 2.0;
    for band in bands {
        let series: Vec<(usize, f64)> = widths
            .iter()
            .filter_map(|&w| mean(w, band).map(|m| (w, m)))
            .collect();
        assert!(series.len() >= 4, "band {band}: too few defined widths");
        for pair in series.windows(2) {
            assert!(
                pair[1].1 >= pair[0].1 - SLACK_PP,
                "band {band}: mean TAR fell from {:.2} (k={}) to {:.2} (k={})",
                pair[0].1,
                pair[0].0,
                pair[1].1,
                pair[1].0
            );
        }
        println!(
            "  band sp_max={band}: mean TAR by width = {:?}",
            series
                .iter()
                .map(|(w, m)| format!("k{w}:{m:.1}"))
                .collect::<Vec<_>>()
        );
    }

    // Criterion 5b: the rarer band tracks or beats the wider one per width.
    for &w in &widths {
        if let (Some(rare), Some(wide)) = (mean(w, 0.025), mean(w, 0.05)) {
            assert!(
                rare >= wide - SLACK_PP,
                "width {w}: mean TAR at sp 0.025 ({rare:.2}) below sp 0.05 ({wide:.2}) - {SLACK_PP}pp"
            );
        }
    }
    println!("criterion 5 (TAR trends): PASS - {} fixtures, widths 4..8, both SP bands", fixtures.len());

    // Criterion 6: Spearman between pair VS and pair TAR at the 0.05 band.
    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for (_, vs, obs) in &fixtures {
        let tars: Vec<f64> = obs
            .iter()
            .filter(|o| o.sp_max == 0.05)
            .filter_map(|o| o.entry.tar)
            .collect();
        if !tars.is_empty() {
            pairs.push((*vs, tars.iter().sum::<f64>() / tars.len() as f64));
        }
    }
    assert!(pairs.len() >= 15, "only {} scored pairs", pairs.len());
    let rho = vforge::report::spearman(&pairs).expect("correlation defined");
    assert!(
        rho < 0.0,
        "Spearman(VS, TAR) = {rho:.4}, expected negative across {} pairs",
        pairs.len()
    );
    println!(
        "criterion 6 (diversity benefit): PASS - Spearman(VS, TAR) = {rho:.4} over {} pairs",
        pairs.len()
    );
}

fn fixed_bundle(base: &Program, seed: u64) -> vforge_core::harness::HardenedBundle {
    let v1 = variant(base, "rs", vec![PassId::Rename, PassId::Sched], seed + 1);
    let v2 = variant(
        base,
        "fs",
        vec![
            PassId::Rename,
            PassId::Sched,
            PassId::Commute,
            PassId::Strength,
            PassId::ImmSplit,
            PassId::BrFlip,
            PassId::PadPair,
        ],
        seed + 2,
    );
    build_bundle_verified(&[base.clone(), v1, v2], VotePolicy::new(3).unwrap(), seed)
        .unwrap_or_else(|e| panic!("{}: {e}", base.name()))
}

#[test]
fn criterion_7_overhead_trend_and_integrated_equality() {
    // Distinct-size subset spanning 10 to 577 instructions (57x range).
    let names = ["minipad", "collatz", "tea", "midmix", "unrolled"];
    let mut rows: Vec<(usize, f64)> = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let (base, inputs) = load(name);
        let bundle = fixed_bundle(&base, 500 + i as u64);
        let golden = execute(&base, &inputs, LIMIT);
        let report = run_bundle(&bundle, &inputs, &[], Some(&golden.outputs), LIMIT).unwrap();
        assert_eq!(report.verdict, RunVerdict::Clean, "{name}");
        assert_eq!(report.accepted, golden.outputs, "{name}: bundle != base");
        let overhead = overhead_report(&base, &bundle, &inputs, LIMIT).unwrap();
        rows.push((overhead.loc_original, overhead.pct_loc_increase));
    }
    let span = rows.last().unwrap().0 as f64 / rows.first().unwrap().0 as f64;
    assert!(span >= 10.0, "size range only {span:.1}x");
    for pair in rows.windows(2) {
        assert!(
            pair[1].0 > pair[0].0 && pair[1].1 < pair[0].1,
            "overhead not strictly decreasing: {:?} -> {:?}",
            pair[0],
            pair[1]
        );
    }
    println!(
        "criterion 7 (overhead trend): PASS - {:.0}x size range, pct {:.0}% down to {:.0}%",
        span,
        rows.first().unwrap().1,
        rows.last().unwrap().1
    );
}

#[test]
fn criterion_8_clean_path_frugality_across_corpus() {
    let corpus = load_all();
    for (i, (base, inputs)) in corpus.iter().enumerate() {
        let bundle = fixed_bundle(base, 900 + i as u64);
        let report = run_bundle(&bundle, inputs, &[], None, LIMIT).unwrap();
        assert_eq!(
            report.variants_executed,
            2,
            "{}: {} variants executed on a clean run",
            base.name(),
            report.variants_executed
        );
        assert_eq!(report.verdict, RunVerdict::Clean, "{}", base.name());
        assert_eq!(report.per_variant[2], None, "{}", base.name());
    }
    println!(
        "criterion 8 (clean-path frugality): PASS - {} corpus bundles, exactly 2 variants each",
        corpus.len()
    );
}
