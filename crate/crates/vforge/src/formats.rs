//! On-disk interchange formats: the pass-sequence database, pool and bundle
//! manifests, selection results, run reports, Trojan specifications, net
//! trace dumps and the CSV emitters shared by subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use vforge_core::harness::{
    build_bundle, BundleLayout, HardenedBundle, RunReport, VotePolicy,
};
use vforge_core::isa::{format_program, parse_program_named, Program};
use vforge_core::passes::{CandidatePool, PassId, PassSequence, Provenance, SelectionResult};
use vforge_core::similarity::SimilarityMatrix;
use vforge_core::trojan::sweep::TarObservation;
use vforge_core::trojan::{NetId, NetTraceMatrix, TrojanSpec};

/// Pass-sequence database document: a JSON array of named sequences,
/// `[{"name": "...", "passes": ["rename", ...]}, ...]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PassSequenceEntry {
    pub name: String,
    pub passes: Vec<PassId>,
}

pub fn load_passdb(path: &Path) -> Result<Vec<PassSequence>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let entries: Vec<PassSequenceEntry> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if entries.is_empty() {
        bail!("{}: empty pass-sequence database", path.display());
    }
    Ok(entries
        .into_iter()
        .map(|e| PassSequence::new(e.name, e.passes))
        .collect())
}

pub fn save_passdb(path: &Path, db: &[PassSequence]) -> Result<()> {
    let entries: Vec<PassSequenceEntry> = db
        .iter()
        .map(|s| PassSequenceEntry {
            name: s.name.clone(),
            passes: s.passes.clone(),
        })
        .collect();
    write_json(path, &entries)
}

/// Pool manifest: per-candidate provenance and verdict, plus the path of
/// the pairwise VS matrix CSV written beside it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolManifest {
    pub base: String,
    pub master_seed: u64,
    pub candidates: Vec<PoolCandidate>,
    pub matrix_csv: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolCandidate {
    pub name: String,
    pub file: String,
    pub equivalent: bool,
    pub provenance: Vec<Provenance>,
}

/// Writes pool variants as `.s` files plus `pool.json` and the VS matrix
/// CSV into `dir`.
pub fn save_pool(dir: &Path, pool: &CandidatePool, master_seed: u64) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let mut candidates = Vec::new();
    for c in &pool.candidates {
        let file = format!("{}.s", c.name);
        fs::write(dir.join(&file), format_program(&c.program))?;
        candidates.push(PoolCandidate {
            name: c.name.clone(),
            file,
            equivalent: c.is_eligible(),
            provenance: c.provenance.clone(),
        });
    }
    fs::write(
        dir.join(format!("{}.s", pool.base.name())),
        format_program(&pool.base),
    )?;

    let eligible: Vec<&Program> = std::iter::once(&pool.base)
        .chain(pool.eligible().map(|c| &c.program))
        .collect();
    let matrix = vforge_core::similarity::pairwise_matrix(
        &eligible,
        vforge_core::similarity::ScoreMode::Full,
    )?;
    let matrix_csv = "matrix.csv".to_string();
    fs::write(dir.join(&matrix_csv), matrix_to_csv(&matrix))?;

    let manifest = PoolManifest {
        base: pool.base.name().to_string(),
        master_seed,
        candidates,
        matrix_csv,
    };
    let path = dir.join("pool.json");
    write_json(&path, &manifest)?;
    Ok(path)
}

/// Loads a pool directory back into memory: the base program plus every
/// candidate listed in `pool.json`.
pub fn load_pool(dir: &Path) -> Result<CandidatePool> {
    let manifest: PoolManifest = read_json(&dir.join("pool.json"))?;
    let base = crate::load_program(&dir.join(format!("{}.s", manifest.base)))?;
    let mut candidates = Vec::new();
    for c in manifest.candidates {
        let program = crate::load_program(&dir.join(&c.file))?;
        candidates.push(vforge_core::passes::Candidate {
            name: c.name,
            program,
            provenance: c.provenance,
            verdict: if c.equivalent {
                vforge_core::passes::EquivalenceVerdict::Equivalent
            } else {
                vforge_core::passes::EquivalenceVerdict::Divergent {
                    witness: Vec::new(),
                    left: vforge_core::isa::ExecutionResult {
                        outputs: Vec::new(),
                        cycles: 0,
                        termination: vforge_core::isa::Termination::Halted,
                    },
                    right: vforge_core::isa::ExecutionResult {
                        outputs: Vec::new(),
                        cycles: 0,
                        termination: vforge_core::isa::Termination::Halted,
                    },
                }
            },
        });
    }
    Ok(CandidatePool { base, candidates })
}

/// Bundle manifest stored beside `bundle.s`: the layout, build seed and the
/// variant sources, making the pair self-contained.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleManifest {
    pub k: usize,
    pub seed: u64,
    pub layout: BundleLayout,
    /// Output region base address per variant.
    pub region_bases: Vec<u32>,
    /// Input staging buffer base address.
    pub in_buf_base: u32,
    pub variants: Vec<BundleVariant>,
    /// Names of the diversified glue fragments, in build order.
    pub glue: Vec<String>,
    /// Compare checkpoint granularity of this bundle.
    pub compare_block: vforge_core::harness::CompareBlock,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleVariant {
    pub name: String,
    pub asm: String,
}

/// Writes `bundle.s` plus its manifest; returns the manifest path.
pub fn save_bundle(path_s: &Path, bundle: &HardenedBundle, seed: u64) -> Result<PathBuf> {
    if let Some(parent) = path_s.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path_s, format_program(&bundle.program))?;
    let manifest = BundleManifest {
        k: bundle.policy.variants(),
        seed,
        layout: bundle.layout.clone(),
        region_bases: (0..bundle.policy.variants())
            .map(vforge_core::harness::region_base)
            .collect(),
        in_buf_base: vforge_core::harness::IN_BUF_BASE,
        variants: bundle
            .variants
            .iter()
            .map(|v| BundleVariant {
                name: v.name().to_string(),
                asm: format_program(v),
            })
            .collect(),
        glue: bundle
            .glue_fragments
            .iter()
            .map(|(n, _)| n.clone())
            .collect(),
        compare_block: vforge_core::harness::CompareBlock::WholeProgram,
    };
    let path = manifest_path_for(path_s);
    write_json(&path, &manifest)?;
    Ok(path)
}

pub fn manifest_path_for(bundle_s: &Path) -> PathBuf {
    bundle_s.with_extension("json")
}

/// Reconstructs a bundle from `bundle.s` and its manifest. The program is
/// rebuilt from the variant sources with the recorded seed and must match
/// the on-disk image exactly, so a tampered pair is rejected.
pub fn load_bundle(path_s: &Path) -> Result<HardenedBundle> {
    let text =
        fs::read_to_string(path_s).with_context(|| format!("reading {}", path_s.display()))?;
    let manifest: BundleManifest = read_json(&manifest_path_for(path_s))?;
    let variants: Vec<Program> = manifest
        .variants
        .iter()
        .map(|v| parse_program_named(&v.asm, &v.name).map_err(anyhow::Error::from))
        .collect::<Result<_>>()?;
    let policy = VotePolicy::new(manifest.k)?;
    let bundle = build_bundle(&variants, policy, manifest.seed)?;
    let on_disk = parse_program_named(&text, bundle.program.name())?;
    if on_disk != bundle.program {
        bail!(
            "{}: image does not match its manifest (stale or edited?)",
            path_s.display()
        );
    }
    if bundle.layout != manifest.layout {
        bail!("{}: layout drift against manifest", path_s.display());
    }
    Ok(bundle)
}

/// Selection result document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionManifest {
    pub chosen: Vec<String>,
    pub objective: f64,
    pub matrix_csv: String,
}

pub fn save_selection(dir: &Path, selection: &SelectionResult) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let matrix_csv = "selection_matrix.csv".to_string();
    fs::write(dir.join(&matrix_csv), matrix_to_csv(&selection.matrix))?;
    let doc = SelectionManifest {
        chosen: selection.chosen.iter().map(|p| p.name().to_string()).collect(),
        objective: selection.objective,
        matrix_csv,
    };
    let path = dir.join("selection.json");
    write_json(&path, &doc)?;
    Ok(path)
}

/// Trojan specification document: an array of Trojans to arm together.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrojanFile {
    pub trojans: Vec<TrojanSpec>,
}

pub fn load_trojans(path: &Path) -> Result<Vec<TrojanSpec>> {
    let doc: TrojanFile = read_json(path)?;
    Ok(doc.trojans)
}

pub fn save_trojans(path: &Path, trojans: &[TrojanSpec]) -> Result<()> {
    write_json(
        path,
        &TrojanFile {
            trojans: trojans.to_vec(),
        },
    )
}

/// Run report document: the core report plus context for the report
/// aggregator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReportFile {
    pub bundle: String,
    pub report: RunReport,
    /// Experiment label when a scenario name is known.
    #[serde(default)]
    pub scenario: Option<String>,
}

pub fn save_run_report(path: &Path, doc: &RunReportFile) -> Result<()> {
    write_json(path, doc)
}

/// Net trace dump: a header naming all 120 nets, then one `0`/`1` row per
/// cycle, most significant net last.
pub fn save_trace(path: &Path, trace: &NetTraceMatrix) -> Result<()> {
    use std::fmt::Write as _;
    let mut out = String::new();
    let names: Vec<String> = NetId::all().map(|n| n.name()).collect();
    let _ = writeln!(out, "# vr32 net trace: {}", trace.label);
    let _ = writeln!(out, "# nets: {}", names.join(" "));
    for c in 0..trace.cycles() {
        for net in NetId::all() {
            out.push(if trace.bit(c, net) { '1' } else { '0' });
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// VS matrix CSV: header row and column carry program names; cells are the
/// normalized score with six decimal places.
pub fn matrix_to_csv(matrix: &SimilarityMatrix) -> String {
    let mut out = String::new();
    out.push_str("name");
    for n in matrix.names() {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for i in 0..matrix.len() {
        out.push_str(&matrix.names()[i]);
        for j in 0..matrix.len() {
            out.push_str(&format!(",{:.6}", matrix.get(i, j).normalized));
        }
        out.push('\n');
    }
    out
}

/// TAR sweep CSV with the pinned column order
/// `pair,k,sp_max,T_n,T_m,TAR`; undefined TAR prints as `NA`. The `vs`
/// column appends the pair's normalized similarity when known.
pub fn tar_csv(rows: &[(String, TarObservation, Option<f64>)]) -> String {
    let mut out = String::from("pair,k,sp_max,T_n,T_m,TAR,exhaustive,vs\n");
    for (pair, o, vs) in rows {
        let tar = o
            .entry
            .tar
            .map(|t| format!("{t:.4}"))
            .unwrap_or_else(|| "NA".to_string());
        let vs = vs.map(|v| format!("{v:.6}")).unwrap_or_default();
        out.push_str(&format!(
            "{pair},{},{},{},{},{tar},{},{vs}\n",
            o.width, o.sp_max, o.entry.t_n, o.entry.t_m, o.exhaustive
        ));
    }
    out
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use vforge_core::trojan::{NetCondition, PayloadKind, TriggerSpec};

    #[test]
    fn trojan_file_round_trips() {
        let spec = TrojanSpec {
            trigger: TriggerSpec::Combinational {
                nets: vec![NetId::new(3).unwrap(), NetId::new(90).unwrap()],
            },
            payload: PayloadKind::ImmediateBit { bit: 7 },
        };
        let seq = TrojanSpec {
            trigger: TriggerSpec::exact(vec![NetCondition {
                net: NetId::new(5).unwrap(),
                value: false,
            }]),
            payload: PayloadKind::BranchSelect,
        };
        let text = serde_json::to_string(&TrojanFile {
            trojans: vec![spec.clone(), seq.clone()],
        })
        .unwrap();
        let back: TrojanFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.trojans, vec![spec, seq]);
    }

    #[test]
    fn passdb_rejects_unknown_pass_names() {
        let r: Result<Vec<PassSequenceEntry>, _> = serde_json::from_str(
            r#"[{"name": "x", "passes": ["rename", "optimize-everything"]}]"#,
        );
        assert!(r.is_err());
        let ok: Vec<PassSequenceEntry> =
            serde_json::from_str(r#"[{"name": "x", "passes": ["rename", "sched"]}]"#).unwrap();
        assert_eq!(ok[0].passes.len(), 2);
    }
}
