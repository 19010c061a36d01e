use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{
    export_csv, import_csv, log_column, log_file_name, Case, Metrics, ScenarioResult, SummaryRow,
};
use crate::persist::{write_csv, PersistError};

pub const SUMMARY_FILE: &str = "summary.csv";

struct Curve {
    case: Case,
    expr: String,
    title: String,
}

fn idx(name: &str) -> usize {
    log_column(name).expect("known column")
}

/// Column reference for a `using` spec.
fn col(name: &str) -> String {
    idx(name).to_string()
}

fn curve(case: Case, y: &str, title: &str) -> Curve {
    Curve {
        case,
        expr: format!("{}:{}", col("t"), y),
        title: format!("{title} ({case})"),
    }
}

fn panels() -> Vec<(&'static str, &'static str, Vec<Curve>)> {
    let (n, c, i) = (Case::NoDob, Case::ConventionalDob, Case::ImageDob);
    let comb = format!("(${}+${})", idx("d_hat"), idx("d_f"));
    vec![
        (
            "Altitude without observer",
            "z (m)",
            vec![curve(n, &col("rz"), "r_z"), curve(n, &col("z"), "z")],
        ),
        (
            "Disturbance, conventional observer",
            "force (N)",
            vec![curve(c, &col("d"), "d"), curve(c, &col("d_hat"), "d_hat")],
        ),
        (
            "Disturbance, image-based observer",
            "force (N)",
            vec![curve(i, &col("d"), "d"), curve(i, &comb, "d_hat + d_f")],
        ),
        (
            "Position",
            "position (m)",
            [c, i]
                .into_iter()
                .flat_map(|k| ["x", "y", "z"].map(|a| curve(k, &col(a), a)))
                .collect(),
        ),
        (
            "Velocity",
            "velocity (m/s)",
            [c, i]
                .into_iter()
                .flat_map(|k| ["vx", "vy", "vz"].map(|a| curve(k, &col(a), a)))
                .collect(),
        ),
    ]
}

/// Gnuplot script with five stacked panels for one class. Only logs
/// present in `dir` are referenced; a panel without data is left empty.
pub fn plot_script(dir: &Path, class: usize) -> String {
    let mut s = String::new();
    let png = format!("figures_class{class}.png");
    writeln!(s, "set terminal pngcairo size 900,1800").unwrap();
    writeln!(s, "set output '{png}'").unwrap();
    writeln!(s, "set datafile separator ','").unwrap();
    writeln!(s, "set key outside right").unwrap();
    writeln!(s, "set grid").unwrap();
    writeln!(s, "set xlabel 't (s)'").unwrap();
    writeln!(s, "set multiplot layout 5,1 title 'class {class}'").unwrap();
    for (title, ylabel, curves) in panels() {
        writeln!(s, "set title '{title}'").unwrap();
        writeln!(s, "set ylabel '{ylabel}'").unwrap();
        let parts: Vec<String> = curves
            .iter()
            .filter_map(|c| {
                let file = log_file_name(c.case.name(), class);
                dir.join(&file).is_file().then(|| {
                    format!(
                        "'{file}' every ::1 using {} with lines title '{}'",
                        c.expr, c.title
                    )
                })
            })
            .collect();
        if parts.is_empty() {
            writeln!(s, "plot [0:1] 0 title 'no data'").unwrap();
        } else {
            writeln!(s, "plot {}", parts.join(", \\\n     ")).unwrap();
        }
    }
    writeln!(s, "unset multiplot").unwrap();
    s
}

pub fn emit_plot_script(dir: &Path, class: usize) -> Result<PathBuf, PersistError> {
    let path = dir.join(format!("plots_class{class}.gp"));
    std::fs::write(&path, plot_script(dir, class)).map_err(|e| PersistError::io(&path, e))?;
    Ok(path)
}

/// Writes every log, the summary table and one plot script per class.
pub fn write_results(dir: &Path, results: &[ScenarioResult]) -> Result<Vec<PathBuf>, PersistError> {
    std::fs::create_dir_all(dir).map_err(|e| PersistError::io(dir, e))?;
    for r in results {
        export_csv(r, &dir.join(r.file_name()))?;
    }
    let rows: Vec<SummaryRow> = results.iter().map(SummaryRow::from).collect();
    write_csv(&dir.join(SUMMARY_FILE), &rows)?;
    let classes: BTreeSet<usize> = results.iter().map(|r| r.scenario.class).collect();
    classes
        .into_iter()
        .map(|k| emit_plot_script(dir, k))
        .collect()
}

/// Logs found in `dir`, as (case, class, path), sorted.
pub fn find_logs(dir: &Path) -> Result<Vec<(Case, usize, PathBuf)>, PersistError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| PersistError::io(dir, e))? {
        let path = entry.map_err(|e| PersistError::io(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = name.strip_suffix(".csv") else {
            continue;
        };
        let Some((case, class)) = stem.split_once("_class") else {
            continue;
        };
        if let (Ok(case), Ok(class)) = (case.parse::<Case>(), class.parse::<usize>()) {
            out.push((case, class, path));
        }
    }
    out.sort_by_key(|(c, k, _)| (*k, *c));
    Ok(out)
}

/// Recomputes metrics from the logs in `dir` and rewrites the summary and
/// plot scripts.
pub fn report(dir: &Path) -> Result<(Vec<SummaryRow>, Vec<PathBuf>), PersistError> {
    let logs = find_logs(dir)?;
    let mut rows = Vec::with_capacity(logs.len());
    for (case, class, path) in &logs {
        let m = Metrics::from_rows(&import_csv(path)?);
        rows.push(SummaryRow::new(case.name(), *class, &m));
    }
    write_csv(&dir.join(SUMMARY_FILE), &rows)?;
    let classes: BTreeSet<usize> = logs.iter().map(|(_, k, _)| *k).collect();
    let scripts = classes
        .into_iter()
        .map(|k| emit_plot_script(dir, k))
        .collect::<Result<_, _>>()?;
    Ok((rows, scripts))
}
