//! Aggregates persisted run records into a human-readable summary plus
//! plot-ready CSVs of the fitted polynomials.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use ddlab_core::Pattern;
use ddlab_train::OptimizerKind;

use crate::runner::{CellRecord, LabError};

/// Aggregated view of a results directory.
#[derive(Debug)]
pub struct Summary {
    pub records: Vec<CellRecord>,
    /// Files that failed to load, with the reason; the summary is still
    /// produced from the readable remainder.
    pub errors: Vec<String>,
    pub markdown: String,
}

/// How a cell behaved, for the learning-rate boundary analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LrClass {
    Diverged,
    ConvergedNonDd,
    DoubleDescent,
    Other,
}

fn lr_class(record: &CellRecord) -> LrClass {
    if record.halted_at.is_some() || record.verdict == Pattern::MonotoneIncrease {
        return LrClass::Diverged;
    }
    match record.verdict {
        Pattern::DoubleDescent => LrClass::DoubleDescent,
        Pattern::MonotoneDecrease | Pattern::Plateau => LrClass::ConvergedNonDd,
        _ => LrClass::Other,
    }
}

fn scan_reports(dir: &Path, records: &mut Vec<CellRecord>, errors: &mut Vec<String>) {
    let mut stack = vec![dir.to_path_buf()];
    let mut files: Vec<PathBuf> = Vec::new();
    while let Some(d) = stack.pop() {
        let entries = match fs::read_dir(&d) {
            Ok(e) => e,
            Err(e) => {
                errors.push(format!("{}: {e}", d.display()));
                continue;
            }
        };
        for entry in entries.flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == "report.json") {
                files.push(path);
            }
        }
    }
    files.sort();
    for path in files {
        match fs::read(&path).map_err(LabError::from).and_then(|bytes| {
            serde_json::from_slice::<CellRecord>(&bytes).map_err(LabError::from)
        }) {
            Ok(r) => records.push(r),
            Err(e) => errors.push(format!("{}: {e}", path.display())),
        }
    }
}

fn verdict_counts(records: &[&CellRecord]) -> BTreeMap<&'static str, usize> {
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    for r in records {
        let key = match r.verdict {
            Pattern::DoubleDescent => "double_descent",
            Pattern::Plateau => "plateau",
            Pattern::MonotoneDecrease => "monotone_decrease",
            Pattern::MonotoneIncrease => "monotone_increase",
            Pattern::Inconclusive => "inconclusive",
        };
        *counts.entry(key).or_default() += 1;
    }
    counts
}

/// Per-seed scan for the structure high-LR divergence → mid-LR convergence
/// without double descent → low-LR double descent.
fn lr_boundary_lines(records: &[CellRecord]) -> Vec<String> {
    let mut by_opt: BTreeMap<OptimizerKind, BTreeMap<u64, Vec<(f64, LrClass)>>> = BTreeMap::new();
    for r in records {
        by_opt
            .entry(r.optimizer)
            .or_default()
            .entry(r.seed)
            .or_default()
            .push((r.lr, lr_class(r)));
    }
    let mut lines = Vec::new();
    for (opt, seeds) in &by_opt {
        let mut found = 0usize;
        let mut missing: Vec<String> = Vec::new();
        for (seed, cells) in seeds {
            let mut cells = cells.clone();
            // Highest learning rate first.
            cells.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let mut ok = false;
            'outer: for i in 0..cells.len() {
                if cells[i].1 != LrClass::Diverged {
                    continue;
                }
                for j in i + 1..cells.len() {
                    if cells[j].1 != LrClass::ConvergedNonDd {
                        continue;
                    }
                    for c in cells.iter().skip(j + 1) {
                        if c.1 == LrClass::DoubleDescent {
                            ok = true;
                            break 'outer;
                        }
                    }
                }
            }
            if ok {
                found += 1;
            } else {
                let has = |class: LrClass| cells.iter().any(|c| c.1 == class);
                let why = if !has(LrClass::Diverged) {
                    "no diverging/non-converged run at a higher learning rate"
                } else if !has(LrClass::DoubleDescent) {
                    "no double-descent verdict at a lower learning rate"
                } else if !has(LrClass::ConvergedNonDd) {
                    "no converging non-double-descent learning rate in the grid"
                } else {
                    "classes present but not ordered diverging > converging > double descent"
                };
                missing.push(format!("seed {seed}: {why}"));
            }
        }
        let total = seeds.len();
        if 2 * found > total {
            lines.push(format!(
                "- {opt}: diverging → converging (no DD) → double-descent boundary observed for {found}/{total} seeds (majority)."
            ));
        } else {
            lines.push(format!(
                "- {opt}: boundary NOT observed for a majority of seeds ({found}/{total}); negative results:"
            ));
            for m in missing {
                lines.push(format!("  - {m}"));
            }
        }
    }
    lines
}

/// Stride-1 vs coarser verdicts of the alias sweep, per seed.
fn alias_lines(records: &[CellRecord]) -> Vec<String> {
    let mut by_seed: BTreeMap<u64, Vec<&CellRecord>> = BTreeMap::new();
    for r in records {
        by_seed.entry(r.seed).or_default().push(r);
    }
    let mut lines = Vec::new();
    for (seed, mut rs) in by_seed {
        rs.sort_by_key(|r| r.stride);
        let base = rs.iter().find(|r| r.stride == 1).map(|r| r.verdict);
        let rest: Vec<String> = rs
            .iter()
            .filter(|r| r.stride != 1)
            .map(|r| {
                let flag = r
                    .report
                    .as_ref()
                    .is_some_and(|rep| rep.undersampled)
                    .then_some(" (undersampled)")
                    .unwrap_or("");
                format!("stride {} → {}{flag}", r.stride, r.verdict)
            })
            .collect();
        match base {
            Some(b) => lines.push(format!("- seed {seed}: stride 1 → {b}; {}", rest.join("; "))),
            None => lines.push(format!("- seed {seed}: no stride-1 record; {}", rest.join("; "))),
        }
    }
    lines
}

fn write_fit_overlays(dir: &Path, records: &[CellRecord]) -> Vec<String> {
    let mut errors = Vec::new();
    for r in records {
        let Some(report) = &r.report else { continue };
        let Ok(dfit) = report.fit.derivative() else { continue };
        let (lo, hi) = report.segment;
        let n = 200;
        let mut csv = String::from("t,fit,derivative\n");
        for i in 0..n {
            let t = lo + (hi - lo) * i as f64 / (n - 1) as f64;
            csv.push_str(&format!(
                "{t:.16e},{:.16e},{:.16e}\n",
                report.fit.evaluate(t),
                dfit.evaluate(t)
            ));
        }
        let path = dir
            .join(&r.scenario)
            .join(&r.cell)
            .join(r.seed.to_string())
            .join("fit_samples.csv");
        if let Err(e) = fs::write(&path, csv) {
            errors.push(format!("{}: {e}", path.display()));
        }
    }
    errors
}

/// Builds `summary.md` and `summary.csv` from everything persisted under
/// `dir`, and writes plot-ready fit overlays next to each report. Corrupt
/// files are listed, not fatal.
pub fn report(dir: &Path) -> Result<Summary, LabError> {
    let mut records = Vec::new();
    let mut errors = Vec::new();
    scan_reports(dir, &mut records, &mut errors);
    errors.extend(write_fit_overlays(dir, &records));

    let mut md = String::from("# Sweep summary\n");
    if records.is_empty() {
        md.push_str("\nWARNING: no readable run records found.\n");
    }

    let mut by_scenario: BTreeMap<String, Vec<&CellRecord>> = BTreeMap::new();
    for r in &records {
        by_scenario.entry(r.scenario.clone()).or_default().push(r);
    }

    for (scenario, recs) in &by_scenario {
        md.push_str(&format!("\n## {scenario}\n\n"));
        md.push_str("| cell | runs | double_descent | plateau | monotone_decrease | monotone_increase | inconclusive | halted | dd_freq |\n");
        md.push_str("|---|---|---|---|---|---|---|---|---|\n");

        let mut by_cell: BTreeMap<&str, Vec<&CellRecord>> = BTreeMap::new();
        for r in recs {
            by_cell.entry(&r.cell).or_default().push(r);
        }
        // Learning-rate cells read best from high to low lr.
        let mut cells: Vec<(&str, Vec<&CellRecord>)> =
            by_cell.into_iter().map(|(c, rs)| (c, rs)).collect();
        cells.sort_by(|a, b| {
            let (ra, rb) = (&a.1[0], &b.1[0]);
            (ra.optimizer, rb.lr.partial_cmp(&ra.lr).unwrap(), a.0)
                .partial_cmp(&(rb.optimizer, std::cmp::Ordering::Equal, b.0))
                .unwrap()
        });
        for (cell, rs) in &cells {
            let counts = verdict_counts(rs);
            let get = |k: &str| counts.get(k).copied().unwrap_or(0);
            let halted = rs.iter().filter(|r| r.halted_at.is_some()).count();
            let dd_freq = get("double_descent") as f64 / rs.len() as f64;
            md.push_str(&format!(
                "| {cell} | {} | {} | {} | {} | {} | {} | {halted} | {dd_freq:.2} |\n",
                rs.len(),
                get("double_descent"),
                get("plateau"),
                get("monotone_decrease"),
                get("monotone_increase"),
                get("inconclusive"),
            ));
        }

        if scenario == "lr_sweep" {
            md.push_str("\n### Learning-rate boundary structure\n\n");
            let owned: Vec<CellRecord> = recs.iter().map(|&r| r.clone()).collect();
            for line in lr_boundary_lines(&owned) {
                md.push_str(&line);
                md.push('\n');
            }
        }
        if scenario == "alias_sweep" {
            md.push_str("\n### Verdict vs. sampling stride\n\n");
            let owned: Vec<CellRecord> = recs.iter().map(|&r| r.clone()).collect();
            for line in alias_lines(&owned) {
                md.push_str(&line);
                md.push('\n');
            }
        }
    }

    if !errors.is_empty() {
        md.push_str("\n## Errors\n\n");
        for e in &errors {
            md.push_str(&format!("- {e}\n"));
        }
    }

    let mut csv = String::from("scenario,cell,seed,optimizer,lr,verdict,halted_at,t_s\n");
    let mut sorted: Vec<&CellRecord> = records.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.scenario, &a.cell, a.seed).cmp(&(&b.scenario, &b.cell, b.seed))
    });
    for r in sorted {
        let t_s = r
            .report
            .as_ref()
            .and_then(|rep| rep.t_s)
            .map_or(String::new(), |t| format!("{t}"));
        let halted = r.halted_at.map_or(String::new(), |h| h.to_string());
        csv.push_str(&format!(
            "{},{},{},{},{:e},{},{halted},{t_s}\n",
            r.scenario, r.cell, r.seed, r.optimizer, r.lr, r.verdict
        ));
    }

    fs::write(dir.join("summary.md"), &md)?;
    fs::write(dir.join("summary.csv"), &csv)?;

    Ok(Summary {
        records,
        errors,
        markdown: md,
    })
}
