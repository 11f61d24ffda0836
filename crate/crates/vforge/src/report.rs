//! Result aggregation: walks a results tree, collects overhead CSVs, TAR
//! sweep CSVs and run reports, emits summary CSVs and a `SUMMARY.md` that
//! evaluates the trend assertions (TAR versus trigger width, TAR versus SP
//! band, similarity-versus-TAR correlation, overhead versus program size).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::formats::RunReportFile;
use vforge_core::harness::RunVerdict;

/// One parsed TAR CSV row.
#[derive(Debug, Clone)]
pub struct TarRow {
    pub pair: String,
    pub width: usize,
    pub sp_max: f64,
    pub t_n: usize,
    pub t_m: usize,
    pub tar: Option<f64>,
    pub vs: Option<f64>,
}

/// Everything the aggregator found under a results directory.
#[derive(Debug, Default)]
pub struct CollectedResults {
    pub manifests: usize,
    pub overhead_lines: Vec<String>,
    pub tar_rows: Vec<TarRow>,
    pub run_reports: Vec<RunReportFile>,
}

pub fn collect(dir: &Path) -> Result<CollectedResults> {
    let mut out = CollectedResults::default();
    let mut stack = vec![dir.to_path_buf()];
    let mut files: Vec<PathBuf> = Vec::new();
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).with_context(|| format!("reading {}", d.display()))? {
            let path = entry?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.push(path);
            }
        }
    }
    files.sort();

    for path in files {
        let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("");
        if name == "manifest.json" || name.ends_with(".manifest.json") {
            out.manifests += 1;
        } else if name == "overhead.csv" {
            let text = fs::read_to_string(&path)?;
            for line in text.lines().skip(1) {
                if !line.trim().is_empty() {
                    out.overhead_lines.push(line.to_string());
                }
            }
        } else if name.starts_with("tar") && name.ends_with(".csv") {
            out.tar_rows.extend(parse_tar_csv(&fs::read_to_string(&path)?)?);
        } else if name.starts_with("runreport") && name.ends_with(".json") {
            out.run_reports.push(crate::formats::read_json(&path)?);
        }
    }
    if out.manifests == 0 {
        bail!(
            "{}: no manifests found; is this a results directory?",
            dir.display()
        );
    }
    Ok(out)
}

fn parse_tar_csv(text: &str) -> Result<Vec<TarRow>> {
    let mut rows = Vec::new();
    for line in text.lines().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() < 6 {
            bail!("malformed TAR CSV row: {line}");
        }
        rows.push(TarRow {
            pair: f[0].to_string(),
            width: f[1].parse()?,
            sp_max: f[2].parse()?,
            t_n: f[3].parse()?,
            t_m: f[4].parse()?,
            tar: (f[5] != "NA").then(|| f[5].parse()).transpose()?,
            vs: f.get(7).and_then(|v| (!v.is_empty()).then(|| v.parse()).transpose().ok()?),
        });
    }
    Ok(rows)
}

/// Mean defined TAR per `(width, sp_max)` cell.
pub fn tar_trend_table(rows: &[TarRow]) -> BTreeMap<(usize, String), (f64, usize)> {
    let mut acc: BTreeMap<(usize, String), (f64, usize)> = BTreeMap::new();
    for r in rows {
        if let Some(t) = r.tar {
            let key = (r.width, format!("{}", r.sp_max));
            let e = acc.entry(key).or_insert((0.0, 0));
            e.0 += t;
            e.1 += 1;
        }
    }
    acc.into_iter()
        .map(|(k, (sum, n))| (k, (sum / n as f64, n)))
        .collect()
}

/// Spearman rank correlation with average ranks on ties.
pub fn spearman(pairs: &[(f64, f64)]) -> Option<f64> {
    let n = pairs.len();
    if n < 3 {
        return None;
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let rx = ranks(&xs);
    let ry = ranks(&ys);
    let mean = (n as f64 + 1.0) / 2.0;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for i in 0..n {
        num += (rx[i] - mean) * (ry[i] - mean);
        dx += (rx[i] - mean).powi(2);
        dy += (ry[i] - mean).powi(2);
    }
    if dx == 0.0 || dy == 0.0 {
        return None;
    }
    Some(num / (dx * dy).sqrt())
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

/// Trend evaluation outcome for `SUMMARY.md`.
pub struct TrendChecks {
    pub width_trend_ok: Option<bool>,
    pub band_trend_ok: Option<bool>,
    pub spearman_vs_tar: Option<f64>,
    pub overhead_trend_ok: Option<bool>,
}

/// Slack, in TAR percentage points, allowed on the monotone trends.
pub const TREND_SLACK_PP: f64 = 2.0;

pub fn evaluate_trends(results: &CollectedResults) -> TrendChecks {
    let trend = tar_trend_table(&results.tar_rows);

    // Mean TAR non-decreasing in trigger width, per SP band, within slack.
    let mut bands: Vec<String> = trend.keys().map(|(_, b)| b.clone()).collect();
    bands.sort();
    bands.dedup();
    let mut width_trend_ok = None;
    for band in &bands {
        let mut widths: Vec<(usize, f64)> = trend
            .iter()
            .filter(|((_, b), _)| b == band)
            .map(|((w, _), (mean, _))| (*w, *mean))
            .collect();
        widths.sort_by_key(|(w, _)| *w);
        for pair in widths.windows(2) {
            let ok = pair[1].1 >= pair[0].1 - TREND_SLACK_PP;
            width_trend_ok = Some(width_trend_ok.unwrap_or(true) && ok);
        }
    }

    // Mean TAR at the rarer band at least the wider band's minus slack.
    let mut band_trend_ok = None;
    if bands.len() >= 2 {
        let widths: Vec<usize> = trend.keys().map(|(w, _)| *w).collect();
        for w in widths {
            let mut means: Vec<(f64, f64)> = trend
                .iter()
                .filter(|((tw, _), _)| *tw == w)
                .map(|((_, b), (mean, _))| (b.parse::<f64>().unwrap_or(1.0), *mean))
                .collect();
            means.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
            if means.len() >= 2 {
                let rarer = means.first().unwrap().1;
                let wider = means.last().unwrap().1;
                let ok = rarer >= wider - TREND_SLACK_PP;
                band_trend_ok = Some(band_trend_ok.unwrap_or(true) && ok);
            }
        }
    }

    // Similarity against TAR across pairs (defined VS plus defined TAR).
    let pairs: Vec<(f64, f64)> = results
        .tar_rows
        .iter()
        .filter_map(|r| Some((r.vs?, r.tar?)))
        .collect();
    let spearman_vs_tar = spearman(&pairs);

    // Overhead shrinks with program size on the collected rows.
    let mut overhead: Vec<(usize, f64)> = results
        .overhead_lines
        .iter()
        .filter_map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            let loc: usize = f.get(1)?.parse().ok()?;
            // pct_loc_increase sits after the per-variant LoC columns.
            let pct: f64 = f.get(f.len() - 4)?.parse().ok()?;
            Some((loc, pct))
        })
        .collect();
    overhead.sort_by_key(|(loc, _)| *loc);
    let overhead_trend_ok = if overhead.len() >= 2 {
        Some(overhead.windows(2).all(|w| w[1].1 < w[0].1 || w[1].0 == w[0].0))
    } else {
        None
    };

    TrendChecks {
        width_trend_ok,
        band_trend_ok,
        spearman_vs_tar,
        overhead_trend_ok,
    }
}

/// Writes the aggregate CSVs and `SUMMARY.md`; returns the summary path.
pub fn write_report(results: &CollectedResults, out_dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;

    let trend = tar_trend_table(&results.tar_rows);
    let mut tar_trends = String::from("k,sp_max,mean_tar,samples\n");
    for ((w, band), (mean, n)) in &trend {
        let _ = writeln!(tar_trends, "{w},{band},{mean:.4},{n}");
    }
    fs::write(out_dir.join("tar_trends.csv"), &tar_trends)?;

    let mut scenario_table = String::from("scenario,verdict,detected,tolerated\n");
    let mut scenario_rows = 0;
    for rr in &results.run_reports {
        if let Some(name) = &rr.scenario {
            let detected = rr.report.verdict != RunVerdict::Clean;
            let tolerated = rr.report.undetected_corruption == Some(false);
            let _ = writeln!(
                scenario_table,
                "{name},{:?},{},{}",
                rr.report.verdict,
                if detected { "yes" } else { "no" },
                if tolerated { "yes" } else { "no" }
            );
            scenario_rows += 1;
        }
    }
    fs::write(out_dir.join("scenario_table.csv"), &scenario_table)?;

    let mut overhead = String::from(
        "program,loc_original,pct_loc_increase,cycles_original,pct_cycle_increase\n",
    );
    for line in &results.overhead_lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() >= 5 {
            let _ = writeln!(
                overhead,
                "{},{},{},{},{}",
                f[0],
                f[1],
                f[f.len() - 4],
                f[f.len() - 3],
                f[f.len() - 1]
            );
        }
    }
    fs::write(out_dir.join("overhead_summary.csv"), &overhead)?;

    let checks = evaluate_trends(results);
    let mut md = String::from("# Result summary\n\n");
    let _ = writeln!(
        md,
        "- collected: {} manifests, {} TAR rows, {} overhead rows, {} run reports ({} scenario-labelled)\n",
        results.manifests,
        results.tar_rows.len(),
        results.overhead_lines.len(),
        results.run_reports.len(),
        scenario_rows
    );
    md.push_str("## Trend assertions\n\n");
    let verdict = |v: Option<bool>| match v {
        Some(true) => "PASS",
        Some(false) => "FAIL",
        None => "NO DATA",
    };
    let _ = writeln!(
        md,
        "- TAR non-decreasing in trigger width (slack {TREND_SLACK_PP}pp): {}",
        verdict(checks.width_trend_ok)
    );
    let _ = writeln!(
        md,
        "- TAR at rarer SP band >= wider band - {TREND_SLACK_PP}pp: {}",
        verdict(checks.band_trend_ok)
    );
    match checks.spearman_vs_tar {
        Some(rho) => {
            let _ = writeln!(
                md,
                "- Spearman(VS, TAR) negative: {} (rho = {rho:.4})",
                if rho < 0.0 { "PASS" } else { "FAIL" }
            );
        }
        None => {
            let _ = writeln!(md, "- Spearman(VS, TAR) negative: NO DATA");
        }
    }
    let _ = writeln!(
        md,
        "- LoC overhead strictly decreasing with program size: {}",
        verdict(checks.overhead_trend_ok)
    );

    let path = out_dir.join("SUMMARY.md");
    fs::write(&path, md)?;
    Ok(path)
}
