//! The end-to-end flow: for every corpus program, generate a verified
//! candidate pool, score it, select the most diverse k-set, build the
//! hardened bundle, prove the clean path against the golden interpreter and
//! record code-size/cycle overhead.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context, Result};

use vforge_core::harness::{
    build_bundle_verified, overhead_report, run_bundle, OverheadReport, RunVerdict, VotePolicy,
};
use vforge_core::isa::execute;
use vforge_core::passes::{
    default_database, default_test_inputs, generate_pool, select_variants, PassSequence,
};
use vforge_core::similarity::ScoreMode;

use crate::config::WorkspaceConfig;
use crate::formats::{save_bundle, save_pool, save_run_report, save_selection, RunReportFile};
use crate::manifest::ExperimentManifest;

/// Cycle budget for pipeline runs.
pub const PIPELINE_CYCLE_LIMIT: u64 = 1 << 24;

/// Pipeline failure, carrying the exit code contract: 1 for configuration
/// problems, 2 for equivalence/selection failures, 3 for simulation faults.
#[derive(Debug)]
pub struct PipelineError {
    pub exit_code: u8,
    pub error: anyhow::Error,
}

impl PipelineError {
    fn config(error: anyhow::Error) -> PipelineError {
        PipelineError {
            exit_code: 1,
            error,
        }
    }

    fn equivalence(error: anyhow::Error) -> PipelineError {
        PipelineError {
            exit_code: 2,
            error,
        }
    }

    fn simulation(error: anyhow::Error) -> PipelineError {
        PipelineError {
            exit_code: 3,
            error,
        }
    }
}

impl std::fmt::Display for PipelineError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

/// Per-program seed: the master seed mixed with the program name, so corpus
/// ordering does not leak into any program's randomness.
pub fn program_seed(master_seed: u64, name: &str) -> u64 {
    let digest = crate::manifest::hex_digest(name.as_bytes());
    let mut key = [0u8; 8];
    key.copy_from_slice(&hex::decode_prefix(&digest));
    master_seed ^ u64::from_le_bytes(key)
}

mod hex {
    pub fn decode_prefix(digest: &str) -> [u8; 8] {
        let mut out = [0u8; 8];
        for (i, chunk) in digest.as_bytes().chunks(2).take(8).enumerate() {
            let hi = (chunk[0] as char).to_digit(16).unwrap() as u8;
            let lo = (chunk[1] as char).to_digit(16).unwrap() as u8;
            out[i] = hi << 4 | lo;
        }
        out
    }
}

/// One row of the pipeline's overhead CSV.
pub struct OverheadRow {
    pub program: String,
    pub report: OverheadReport,
}

pub fn overhead_csv(rows: &[OverheadRow], k: usize) -> String {
    let mut out = String::from("program,loc_original");
    for i in 0..k {
        let _ = write!(out, ",loc_v{}", i + 1);
    }
    out.push_str(
        ",loc_integrated,pct_loc_increase,cycles_original,cycles_integrated,pct_cycle_increase\n",
    );
    for row in rows {
        let r = &row.report;
        let _ = write!(out, "{},{}", row.program, r.loc_original);
        for v in &r.loc_per_variant {
            let _ = write!(out, ",{v}");
        }
        let _ = writeln!(
            out,
            ",{},{:.4},{},{},{:.4}",
            r.loc_integrated,
            r.pct_loc_increase,
            r.cycles_original,
            r.cycles_integrated,
            r.pct_cycle_increase
        );
    }
    out
}

/// Runs the full flow over the configured corpus. Artifacts land under
/// `config.out_dir`: one directory per program plus `overhead.csv` and the
/// replay manifest.
pub fn run_pipeline(
    config: &WorkspaceConfig,
    db: &[PassSequence],
    command: Vec<String>,
) -> Result<(), PipelineError> {
    let corpus = crate::load_corpus(&config.corpus_dir).map_err(PipelineError::config)?;
    fs::create_dir_all(&config.out_dir)
        .context("creating output directory")
        .map_err(PipelineError::config)?;

    let mut manifest = ExperimentManifest::new(
        command,
        config.master_seed,
        serde_json::to_value(config).unwrap_or_default(),
    );
    let mut rows: Vec<OverheadRow> = Vec::new();

    for (base, inputs) in &corpus {
        let name = base.name().to_string();
        let seed = program_seed(config.master_seed, &name);
        let program_dir = config.out_dir.join(&name);
        eprintln!("[pipeline] {name}: pool");

        let mut tests = vec![inputs.clone()];
        tests.extend(default_test_inputs(seed));
        let pool = generate_pool(base, db, config.seeds_per_sequence, seed, &tests);
        let eligible = pool.eligible().count();
        if pool.candidates.len() != pool.eligible().count() {
            let bad: Vec<&str> = pool
                .candidates
                .iter()
                .filter(|c| !c.is_eligible())
                .map(|c| c.name.as_str())
                .collect();
            return Err(PipelineError::equivalence(anyhow!(
                "{name}: {} candidate(s) diverged from the base program: {bad:?}",
                bad.len()
            )));
        }
        let pool_dir = program_dir.join("pool");
        let pool_manifest = save_pool(&pool_dir, &pool, seed)
            .with_context(|| format!("{name}: writing pool"))
            .map_err(PipelineError::config)?;
        manifest.record_output(&pool_manifest);

        eprintln!("[pipeline] {name}: select k={} from {eligible} candidates", config.k);
        let selection = select_variants(&pool, config.k, ScoreMode::Full)
            .with_context(|| format!("{name}: selection"))
            .map_err(PipelineError::equivalence)?;
        let selection_path = save_selection(&program_dir, &selection)
            .map_err(PipelineError::config)?;
        manifest.record_output(&selection_path);

        eprintln!("[pipeline] {name}: harden + clean run");
        let policy = VotePolicy::new(config.k)
            .map_err(|e| PipelineError::config(anyhow::Error::from(e)))?;
        let bundle = build_bundle_verified(&selection.chosen, policy, seed)
            .with_context(|| format!("{name}: bundling"))
            .map_err(PipelineError::equivalence)?;
        let bundle_s = program_dir.join("bundle.s");
        let bundle_manifest = save_bundle(&bundle_s, &bundle, seed)
            .map_err(PipelineError::config)?;
        manifest.record_output(&bundle_s);
        manifest.record_output(&bundle_manifest);

        let golden = execute(base, inputs, PIPELINE_CYCLE_LIMIT);
        let report = run_bundle(&bundle, inputs, &[], Some(&golden.outputs), PIPELINE_CYCLE_LIMIT)
            .with_context(|| format!("{name}: clean bundle run"))
            .map_err(PipelineError::simulation)?;
        if report.verdict != RunVerdict::Clean || report.accepted != golden.outputs {
            return Err(PipelineError::equivalence(anyhow!(
                "{name}: integrated bundle diverges from the base program on its fixture"
            )));
        }
        let report_path = program_dir.join("runreport.json");
        save_run_report(
            &report_path,
            &RunReportFile {
                bundle: bundle_s.display().to_string(),
                report,
                scenario: None,
            },
        )
        .map_err(PipelineError::config)?;
        manifest.record_output(&report_path);

        let overhead = overhead_report(base, &bundle, inputs, PIPELINE_CYCLE_LIMIT)
            .with_context(|| format!("{name}: overhead"))
            .map_err(PipelineError::simulation)?;
        rows.push(OverheadRow {
            program: name,
            report: overhead,
        });
    }

    rows.sort_by(|a, b| a.program.cmp(&b.program));
    let overhead_path = config.out_dir.join("overhead.csv");
    fs::write(&overhead_path, overhead_csv(&rows, config.k))
        .context("writing overhead.csv")
        .map_err(PipelineError::config)?;
    manifest.record_output(&overhead_path);

    let manifest_path = config.out_dir.join("manifest.json");
    manifest
        .save(&manifest_path)
        .map_err(PipelineError::config)?;
    eprintln!(
        "[pipeline] done: {} programs, artifacts in {}",
        rows.len(),
        config.out_dir.display()
    );
    Ok(())
}

pub fn builtin_or_file_db(path: Option<&Path>) -> Result<Vec<PassSequence>> {
    match path {
        Some(p) => crate::formats::load_passdb(p),
        None => Ok(default_database()),
    }
}
