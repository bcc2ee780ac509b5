//! File emitters. JSON goes through `serde_json::Value`, whose object map is
//! ordered, so keys come out sorted and reruns are byte-identical.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use xaudit::audit::SCHEMA_VERSION;
use xaudit::{ConsistencyReport, ImportanceVector, MetricKind, MetricSet, TransferReport};

use crate::CliError;

/// Bars drawn by [`importance_svg`].
pub const SVG_MAX_BARS: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Markdown,
    Svg,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Markdown => "md",
            Format::Svg => "svg",
        }
    }
}

/// Writes `body` to `<dir>/<stem>.<ext>` and returns the path.
pub fn emit_report(
    dir: &Path,
    stem: &str,
    format: Format,
    body: &str,
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Output {
        path: dir.to_path_buf(),
        source,
    })?;
    let path = dir.join(format!("{stem}.{}", format.extension()));
    fs::write(&path, body).map_err(|source| CliError::Output {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Pretty JSON with sorted keys, shortest round-trip floats and a top-level
/// `schema_version`.
pub fn canonical_json<T: Serialize>(report: &T) -> Result<String, CliError> {
    let mut value = serde_json::to_value(report)?;
    if let Value::Object(map) = &mut value {
        map.entry("schema_version")
            .or_insert(Value::from(SCHEMA_VERSION));
    }
    let mut s = serde_json::to_string_pretty(&value)?;
    s.push('\n');
    Ok(s)
}

fn fmt7(v: f64) -> String {
    format!("{v:.7}")
}

/// Metrics as rows, one column per labelled score set.
pub fn metric_table(columns: &[(String, MetricSet)]) -> String {
    let mut s = String::from("| Metric |");
    for (name, _) in columns {
        let _ = write!(s, " {name} |");
    }
    s.push_str("\n|---|");
    s.push_str(&"---|".repeat(columns.len()));
    s.push('\n');
    for kind in MetricKind::ALL {
        let _ = write!(s, "| {} |", kind.label());
        for (_, m) in columns {
            let _ = write!(s, " {} |", fmt7(m.get(kind)));
        }
        s.push('\n');
    }
    s
}

pub fn transfer_markdown(r: &TransferReport) -> String {
    let src = &r.source.source;
    let model = src.model.map_or("-".to_string(), |m| m.label().to_string());
    let method = src
        .method
        .map_or("forced".to_string(), |m| m.name().to_string());
    let mut s = String::from("## Transferability\n\n");
    s.push_str(
        "| Source | Method | Top features | Accuracy | MCC | MCC variance | Transferable |\n",
    );
    s.push_str("|---|---|---|---|---|---|---|\n");
    let _ = writeln!(
        s,
        "| {model} | {method} | {} | {} | {} | {:.3e} | {} |",
        r.source.features.join(", "),
        fmt7(r.receiver_scores.accuracy),
        fmt7(r.receiver_scores.mcc),
        r.receiver_variance.mcc,
        if r.transferable { "yes" } else { "no" }
    );
    let _ = write!(
        s,
        "\nReceiver: default decision tree, {} repeats, threshold MCC >= {}.\n\n",
        r.repeats, r.threshold
    );
    s.push_str(&metric_table(&[(
        "Receiver mean".into(),
        r.receiver_scores,
    )]));
    s
}

pub fn sweep_markdown(r: &ConsistencyReport) -> String {
    let mut s = String::from("## Runs\n\n| # | Variation | Top features |\n|---|---|---|\n");
    for (i, run) in r.runs.iter().enumerate() {
        let _ = writeln!(
            s,
            "| {i} | {} | {} |",
            run.label,
            run.top_k.features.join(", ")
        );
    }
    s.push_str("\n## Scores\n\n");
    let cols: Vec<(String, MetricSet)> = r
        .runs
        .iter()
        .enumerate()
        .map(|(i, run)| (format!("#{i}"), run.metrics))
        .collect();
    s.push_str(&metric_table(&cols));
    s.push_str("\n## Pairwise Jaccard\n\n| |");
    for i in 0..r.runs.len() {
        let _ = write!(s, " #{i} |");
    }
    s.push_str("\n|---|");
    s.push_str(&"---|".repeat(r.runs.len()));
    s.push('\n');
    for (i, row) in r.pairwise_jaccard.iter().enumerate() {
        let _ = write!(s, "| #{i} |");
        for v in row {
            let _ = write!(s, " {v:.3} |");
        }
        s.push('\n');
    }
    let sum = xaudit::performance_delta_summary(r);
    let _ = write!(
        s,
        "\nMean Jaccard {:.4}; max delta {:.4} on accuracy/F1/precision/recall, {:.4} on MCC.\n",
        sum.explanation_mean_jaccard, sum.standard_metrics_max_delta, sum.mcc_max_delta
    );
    s
}

pub fn importance_markdown(v: &ImportanceVector, limit: usize) -> String {
    let mut s = format!(
        "## {}\n\n| Rank | Feature | Score |\n|---|---|---|\n",
        v.method.name()
    );
    for (rank, i) in v.ranking().into_iter().take(limit).enumerate() {
        let _ = writeln!(
            s,
            "| {} | {} | {:.6e} |",
            rank + 1,
            v.feature_names[i],
            v.scores[i]
        );
    }
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Horizontal bars for the top features by |score|, largest on top.
pub fn importance_svg(v: &ImportanceVector) -> String {
    const BAR: f64 = 18.0;
    const GAP: f64 = 6.0;
    const LABEL_W: f64 = 180.0;
    const PLOT_W: f64 = 380.0;
    const TOP: f64 = 34.0;
    let ranked: Vec<usize> = v.ranking().into_iter().take(SVG_MAX_BARS).collect();
    let max = ranked
        .iter()
        .map(|&i| v.scores[i].abs())
        .fold(0.0, f64::max);
    let height = TOP + ranked.len() as f64 * (BAR + GAP) + 10.0;
    let width = LABEL_W + PLOT_W + 110.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
        width / 2.0,
        escape(v.method.name())
    );
    for (row, &i) in ranked.iter().enumerate() {
        let y = TOP + row as f64 * (BAR + GAP);
        let score = v.scores[i];
        let w = if max > 0.0 {
            PLOT_W * score.abs() / max
        } else {
            0.0
        };
        let fill = if score < 0.0 { "#c0504d" } else { "#4f81bd" };
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LABEL_W - 6.0,
            y + BAR * 0.72,
            escape(&v.feature_names[i])
        );
        let _ = writeln!(
            s,
            r#"<rect x="{LABEL_W:.1}" y="{y:.1}" width="{w:.2}" height="{BAR:.1}" fill="{fill}"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}">{score:.4e}</text>"#,
            LABEL_W + w + 4.0,
            y + BAR * 0.72
        );
    }
    s.push_str("</svg>\n");
    s
}
