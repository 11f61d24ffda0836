use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Result};
use clap::{Args, Parser, Subcommand};

use vforge::config::WorkspaceConfig;
use vforge::formats::{
    load_bundle, load_pool, load_trojans, matrix_to_csv, save_bundle, save_pool, save_run_report,
    save_selection, save_trace, tar_csv, RunReportFile,
};
use vforge::manifest::ExperimentManifest;
use vforge::pipeline::{builtin_or_file_db, program_seed, run_pipeline, PIPELINE_CYCLE_LIMIT};
use vforge::{load_corpus, load_program, load_words};
use vforge_core::harness::{build_bundle_verified, run_bundle, run_bundle_traced, VotePolicy};
use vforge_core::passes::{default_test_inputs, generate_pool, select_variants};
use vforge_core::similarity::{
    build_signature, pairwise_matrix, variant_similarity_with, ScoreMode,
};
use vforge_core::trojan::scenario::classify_outcome;
use vforge_core::trojan::sweep::{tar_sweep, TarSweepConfig};

/// Software-diversity toolchain for the VR32 toy ISA: variant generation,
/// bigram similarity, hardened-bundle execution and Trojan experiments.
#[derive(Parser)]
#[command(name = "vforge", version, about)]
struct Cli {
    /// Master seed for all derived randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Workspace configuration JSON (pipeline defaults).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Assembly-level checks.
    Asm {
        #[command(subcommand)]
        command: AsmCommand,
    },
    /// Variant pool generation.
    Variants {
        #[command(subcommand)]
        command: VariantsCommand,
    },
    /// Variant similarity scoring.
    Vs {
        #[command(subcommand)]
        command: VsCommand,
    },
    /// Diversity-driven k-subset selection over a generated pool.
    Select(SelectArgs),
    /// Build a hardened bundle from a base program and variants.
    Harden(HardenArgs),
    /// Execute a bundle, optionally with Trojans armed.
    Run(RunArgs),
    /// Trojan tooling.
    Trojan {
        #[command(subcommand)]
        command: TrojanCommand,
    },
    /// Trigger-avoidance sweep over a bundle.
    Tar(TarArgs),
    /// Aggregate results and evaluate trend assertions.
    Report(ReportArgs),
    /// Full corpus pipeline: pool, select, harden, verify, overhead.
    Pipeline(PipelineArgs),
}

#[derive(Subcommand)]
enum AsmCommand {
    /// Parse and validate a program, printing a short summary.
    Check { file: PathBuf },
}

#[derive(Subcommand)]
enum VariantsCommand {
    /// Generate a verified, deduplicated variant pool.
    Gen(VariantsGenArgs),
}

#[derive(Args)]
struct VariantsGenArgs {
    /// Base assembly program.
    file: PathBuf,
    /// Pass-sequence database JSON (built-in database when omitted).
    #[arg(long)]
    db: Option<PathBuf>,
    /// Master seeds per sequence.
    #[arg(long, default_value_t = 4)]
    seeds: usize,
    /// Output directory for variants, pool.json and matrix.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum VsCommand {
    /// Score one pair of programs.
    Score {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        /// Ignore operand bigrams (register-renaming hardware).
        #[arg(long)]
        opcode_only: bool,
    },
    /// Pairwise matrix over every `.s` program in a directory.
    Matrix {
        dir: PathBuf,
        #[arg(long)]
        opcode_only: bool,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SelectArgs {
    /// Pool directory produced by `variants gen`.
    #[arg(long)]
    pool: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    opcode_only: bool,
    /// Output directory (defaults to the pool directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct HardenArgs {
    /// Base assembly program.
    base: PathBuf,
    /// Directory of variant `.s` files; `selection.json` is honored when
    /// present.
    #[arg(long)]
    variants: PathBuf,
    #[arg(long, default_value_t = 3)]
    k: usize,
    /// Output bundle image; the manifest lands beside it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Bundle image (`.json` manifest expected beside it).
    bundle: PathBuf,
    /// Input word file for the protected program.
    #[arg(long)]
    inputs: PathBuf,
    /// Trojan specification JSON to arm.
    #[arg(long)]
    trojans: Option<PathBuf>,
    /// Golden output word file; enables experiment-mode labelling.
    #[arg(long)]
    golden: Option<PathBuf>,
    /// Write the net trace dump here (forces the net-level machine).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the JSON run report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum TrojanCommand {
    /// Arm Trojans from a specification file and run the bundle.
    Inject(InjectArgs),
}

#[derive(Args)]
struct InjectArgs {
    /// Trojan specification JSON.
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    inputs: PathBuf,
    #[arg(long)]
    golden: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TarArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    inputs: PathBuf,
    /// Trigger width or inclusive range, e.g. `4` or `4..8`; overrides
    /// --k-min/--k-max.
    #[arg(long)]
    k: Option<String>,
    /// Smallest trigger width.
    #[arg(long, default_value_t = 4)]
    k_min: usize,
    /// Largest trigger width.
    #[arg(long, default_value_t = 8)]
    k_max: usize,
    #[arg(long, default_value_t = 0.05)]
    sp_max: f64,
    #[arg(long, default_value_t = 0.001)]
    sp_min: f64,
    /// Enumeration cap before seeded sampling kicks in.
    #[arg(long, default_value_t = 200_000)]
    cap: usize,
    /// Output CSV path.
    #[arg(long)]
    csv: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Results directory to aggregate.
    dir: PathBuf,
    /// Where to write the summary (defaults to the results directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PipelineArgs {
    /// Corpus directory (overrides the config file).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output directory (overrides the config file).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Pass-sequence database JSON.
    #[arg(long)]
    db: Option<PathBuf>,
    /// Variants per bundle.
    #[arg(long)]
    k: Option<usize>,
    /// Master seeds per pass sequence.
    #[arg(long)]
    seeds: Option<usize>,
}

const CYCLE_LIMIT: u64 = PIPELINE_CYCLE_LIMIT;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let argv: Vec<String> = std::env::args().collect();
    match dispatch(cli, argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code)
        }
    }
}

struct CliError {
    exit_code: u8,
    inner: anyhow::Error,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.inner)
    }
}

impl From<anyhow::Error> for CliError {
    fn from(inner: anyhow::Error) -> CliError {
        CliError {
            exit_code: 1,
            inner,
        }
    }
}

fn dispatch(cli: Cli, argv: Vec<String>) -> Result<(), CliError> {
    match cli.command {
        Command::Asm {
            command: AsmCommand::Check { file },
        } => {
            let p = load_program(&file)?;
            println!(
                "{}: ok ({} instructions, {} labels, {} functions)",
                file.display(),
                p.len(),
                p.labels().len(),
                p.functions().len()
            );
            Ok(())
        }
        Command::Variants {
            command: VariantsCommand::Gen(args),
        } => cmd_variants_gen(args, cli.seed, argv).map_err(CliError::from),
        Command::Vs { command } => cmd_vs(command, argv).map_err(CliError::from),
        Command::Select(args) => cmd_select(args, argv).map_err(CliError::from),
        Command::Harden(args) => cmd_harden(args, cli.seed, argv).map_err(CliError::from),
        Command::Run(args) => cmd_run(args, argv).map_err(|e| CliError {
            exit_code: 3,
            inner: e,
        }),
        Command::Trojan {
            command: TrojanCommand::Inject(args),
        } => cmd_inject(args, argv).map_err(|e| CliError {
            exit_code: 3,
            inner: e,
        }),
        Command::Tar(args) => cmd_tar(args, cli.seed, argv).map_err(CliError::from),
        Command::Report(args) => cmd_report(args, argv).map_err(CliError::from),
        Command::Pipeline(args) => cmd_pipeline(args, cli.seed, cli.config.as_deref(), argv),
    }
}

fn cmd_variants_gen(args: VariantsGenArgs, seed: u64, argv: Vec<String>) -> Result<()> {
    let base = load_program(&args.file)?;
    let db = builtin_or_file_db(args.db.as_deref())?;
    let mut tests = Vec::new();
    if let Ok(fixture) = load_words(&args.file.with_extension("in")) {
        tests.push(fixture);
    }
    let master = program_seed(seed, base.name());
    tests.extend(default_test_inputs(master));
    let pool = generate_pool(&base, &db, args.seeds, master, &tests);
    let eligible = pool.eligible().count();
    let pool_manifest = save_pool(&args.out, &pool, master)?;

    let mut manifest = ExperimentManifest::new(
        argv,
        seed,
        serde_json::json!({
            "db": args.db.as_ref().map(|p| p.display().to_string()),
            "seeds": args.seeds,
        }),
    );
    manifest.record_input(&args.file)?;
    manifest.record_output(&pool_manifest);
    manifest.save(&args.out.join("manifest.json"))?;
    println!(
        "pool: {} candidates ({} equivalent) in {}",
        pool.candidates.len(),
        eligible,
        args.out.display()
    );
    Ok(())
}

fn cmd_vs(command: VsCommand, argv: Vec<String>) -> Result<()> {
    match command {
        VsCommand::Score { a, b, opcode_only } => {
            let mode = score_mode(opcode_only);
            let pa = load_program(&a)?;
            let pb = load_program(&b)?;
            let score =
                variant_similarity_with(&build_signature(&pa)?, &build_signature(&pb)?, mode)?;
            println!("raw {}", score.raw);
            println!("normalized {:.6}", score.normalized);
            Ok(())
        }
        VsCommand::Matrix {
            dir,
            opcode_only,
            out,
        } => {
            let corpus = load_corpus(&dir)?;
            let programs: Vec<&vforge_core::isa::Program> =
                corpus.iter().map(|(p, _)| p).collect();
            let matrix = pairwise_matrix(&programs, score_mode(opcode_only))?;
            let csv = matrix_to_csv(&matrix);
            match out {
                Some(path) => {
                    std::fs::write(&path, &csv)?;
                    let mut manifest = ExperimentManifest::new(argv, 0, serde_json::json!({}));
                    manifest.record_output(&path);
                    manifest.save(&path.with_extension("manifest.json"))?;
                    println!("matrix: {}", path.display());
                }
                None => print!("{csv}"),
            }
            Ok(())
        }
    }
}

fn score_mode(opcode_only: bool) -> ScoreMode {
    if opcode_only {
        ScoreMode::OpcodeOnly
    } else {
        ScoreMode::Full
    }
}

fn cmd_select(args: SelectArgs, argv: Vec<String>) -> Result<()> {
    let pool = load_pool(&args.pool)?;
    let selection = select_variants(&pool, args.k, score_mode(args.opcode_only))?;
    let out = args.out.unwrap_or_else(|| args.pool.clone());
    let path = save_selection(&out, &selection)?;
    let mut manifest = ExperimentManifest::new(argv, 0, serde_json::json!({ "k": args.k }));
    manifest.record_input(&args.pool.join("pool.json"))?;
    manifest.record_output(&path);
    manifest.save(&out.join("selection.manifest.json"))?;
    for p in &selection.chosen {
        println!("chosen {}", p.name());
    }
    println!("objective {:.6}", selection.objective);
    Ok(())
}

fn cmd_harden(args: HardenArgs, seed: u64, argv: Vec<String>) -> Result<()> {
    let base = load_program(&args.base)?;
    let selection_path = args.variants.join("selection.json");
    let variants: Vec<vforge_core::isa::Program> = if selection_path.exists() {
        let sel: vforge::formats::SelectionManifest =
            vforge::formats::read_json(&selection_path)?;
        sel.chosen
            .iter()
            .map(|name| load_program(&args.variants.join(format!("{name}.s"))))
            .collect::<Result<_>>()?
    } else {
        let mut all = load_corpus(&args.variants)?;
        all.truncate(args.k.saturating_sub(1));
        let mut v = vec![base.clone()];
        v.extend(all.into_iter().map(|(p, _)| p));
        v
    };
    if variants.len() != args.k {
        bail!(
            "need exactly {} variants, found {} in {}",
            args.k,
            variants.len(),
            args.variants.display()
        );
    }
    let policy = VotePolicy::new(args.k)?;
    let bundle = build_bundle_verified(&variants, policy, seed)?;
    let manifest_path = save_bundle(&args.out, &bundle, seed)?;

    let mut manifest = ExperimentManifest::new(argv, seed, serde_json::json!({ "k": args.k }));
    manifest.record_input(&args.base)?;
    manifest.record_output(&args.out);
    manifest.record_output(&manifest_path);
    manifest.save(&args.out.with_extension("harden.manifest.json"))?;
    println!(
        "bundle: {} ({} instructions, {} variants)",
        args.out.display(),
        bundle.program.len(),
        args.k
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn run_and_report(
    bundle_path: &Path,
    inputs_path: &Path,
    trojans_path: Option<&Path>,
    golden_path: Option<&Path>,
    trace_path: Option<&Path>,
    out: Option<&Path>,
    scenario: Option<String>,
    argv: Vec<String>,
) -> Result<()> {
    let bundle = load_bundle(bundle_path)?;
    let inputs = load_words(inputs_path)?;
    let trojans = match trojans_path {
        Some(p) => load_trojans(p)?,
        None => Vec::new(),
    };
    let golden = golden_path.map(load_words).transpose()?;

    let report = if let Some(trace_out) = trace_path {
        let (report, trace) =
            run_bundle_traced(&bundle, &inputs, &trojans, golden.as_deref(), CYCLE_LIMIT)?;
        save_trace(trace_out, &trace)?;
        report
    } else {
        run_bundle(&bundle, &inputs, &trojans, golden.as_deref(), CYCLE_LIMIT)?
    };

    if let Some(g) = &golden {
        let outcome = classify_outcome(&report, &bundle.layout, g);
        eprintln!(
            "classification: mask {:?} detected {} tolerated {}",
            outcome.activation_mask, outcome.detected, outcome.tolerated
        );
    }

    let doc = RunReportFile {
        bundle: bundle_path.display().to_string(),
        report,
        scenario,
    };
    match out {
        Some(path) => {
            save_run_report(path, &doc)?;
            let mut manifest = ExperimentManifest::new(argv, 0, serde_json::json!({}));
            manifest.record_input(bundle_path)?;
            manifest.record_input(inputs_path)?;
            if let Some(p) = trojans_path {
                manifest.record_input(p)?;
            }
            manifest.record_output(path);
            manifest.save(&path.with_extension("manifest.json"))?;
            println!("report: {}", path.display());
        }
        None => println!("{}", serde_json::to_string_pretty(&doc)?),
    }
    Ok(())
}

fn cmd_run(args: RunArgs, argv: Vec<String>) -> Result<()> {
    run_and_report(
        &args.bundle,
        &args.inputs,
        args.trojans.as_deref(),
        args.golden.as_deref(),
        args.trace.as_deref(),
        args.out.as_deref(),
        None,
        argv,
    )
}

fn cmd_inject(args: InjectArgs, argv: Vec<String>) -> Result<()> {
    run_and_report(
        &args.bundle,
        &args.inputs,
        Some(&args.spec),
        args.golden.as_deref(),
        None,
        args.out.as_deref(),
        None,
        argv,
    )
}

fn cmd_tar(mut args: TarArgs, seed: u64, argv: Vec<String>) -> Result<()> {
    if let Some(range) = &args.k {
        match range.split_once("..") {
            Some((lo, hi)) => {
                args.k_min = lo.trim().parse()?;
                args.k_max = hi.trim().parse()?;
            }
            None => {
                args.k_min = range.trim().parse()?;
                args.k_max = args.k_min;
            }
        }
    }
    if args.k_min < 1 || args.k_max < args.k_min {
        bail!("invalid trigger width range {}..{}", args.k_min, args.k_max);
    }
    let bundle = load_bundle(&args.bundle)?;
    let inputs = load_words(&args.inputs)?;
    let config = TarSweepConfig {
        widths: (args.k_min..=args.k_max).collect(),
        sp_bands: vec![(args.sp_min, args.sp_max)],
        cap: args.cap,
        seed,
    };
    let observations = tar_sweep(&bundle, &inputs, &config, CYCLE_LIMIT)
        .map_err(|e| anyhow!("tar sweep failed: {e}"))?;

    // Join each observation with the variant pair's normalized similarity.
    let signatures: Vec<_> = bundle
        .variants
        .iter()
        .map(build_signature)
        .collect::<Result<_, _>>()?;
    let rows: Vec<(String, _, Option<f64>)> = observations
        .into_iter()
        .map(|o| {
            let (n, m) = o.pair;
            let vs = variant_similarity_with(&signatures[n], &signatures[m], ScoreMode::Full)
                .ok()
                .map(|s| s.normalized);
            (format!("v{}-v{}", n + 1, m + 1), o, vs)
        })
        .collect();
    std::fs::write(&args.csv, tar_csv(&rows))?;

    let mut manifest = ExperimentManifest::new(
        argv,
        seed,
        serde_json::json!({
            "k_min": args.k_min, "k_max": args.k_max,
            "sp_min": args.sp_min, "sp_max": args.sp_max, "cap": args.cap,
        }),
    );
    manifest.record_input(&args.bundle)?;
    manifest.record_input(&args.inputs)?;
    manifest.record_output(&args.csv);
    manifest.save(&args.csv.with_extension("manifest.json"))?;
    println!("tar sweep: {} ({} rows)", args.csv.display(), rows.len());
    Ok(())
}

fn cmd_report(args: ReportArgs, argv: Vec<String>) -> Result<()> {
    let results = vforge::report::collect(&args.dir)?;
    let out = args.out.unwrap_or_else(|| args.dir.clone());
    let summary = vforge::report::write_report(&results, &out)?;
    let mut manifest = ExperimentManifest::new(argv, 0, serde_json::json!({}));
    manifest.record_output(&summary);
    manifest.save(&out.join("report.manifest.json"))?;
    println!("summary: {}", summary.display());
    Ok(())
}

fn cmd_pipeline(
    args: PipelineArgs,
    seed: u64,
    config_path: Option<&Path>,
    argv: Vec<String>,
) -> Result<(), CliError> {
    let mut config = match config_path {
        Some(p) => WorkspaceConfig::load(p).map_err(CliError::from)?,
        None => {
            let corpus = args.corpus.clone().ok_or_else(|| CliError {
                exit_code: 1,
                inner: anyhow!("pipeline needs --config or both --corpus and --out"),
            })?;
            let out = args.out.clone().ok_or_else(|| CliError {
                exit_code: 1,
                inner: anyhow!("pipeline needs --out when no config is given"),
            })?;
            WorkspaceConfig {
                corpus_dir: corpus,
                passdb: None,
                master_seed: seed,
                k: 3,
                seeds_per_sequence: 4,
                sp_min: 0.001,
                sp_max: 0.05,
                trigger_cap: 200_000,
                out_dir: out,
            }
        }
    };
    if let Some(c) = args.corpus {
        config.corpus_dir = c;
    }
    if let Some(o) = args.out {
        config.out_dir = o;
    }
    if let Some(d) = args.db {
        config.passdb = Some(d);
    }
    if let Some(k) = args.k {
        config.k = k;
    }
    if let Some(s) = args.seeds {
        config.seeds_per_sequence = s;
    }

    let db = builtin_or_file_db(config.passdb.as_deref()).map_err(CliError::from)?;
    run_pipeline(&config, &db, argv).map_err(|e| CliError {
        exit_code: e.exit_code,
        inner: e.error,
    })
}
