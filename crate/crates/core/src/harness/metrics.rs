//! Metrics files and text/SVG rendering.
//!
//! `metrics.csv` columns, in order:
//! `environment,snr_db,interval_index,accuracy,n_effective_accepted,
//! n_rejected_conf,n_rejected_dist,mean_confidence,n_inputs,n_labeled`.
//!
//! `cells.csv` columns: `environment,snr_db,final_accuracy,mean_accuracy,
//! baseline_accuracy,clean_before,clean_after` (`baseline_accuracy` empty
//! when not measured).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cl::IntervalMetrics;
use crate::error::{KwsError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub environment: String,
    pub snr_db: f64,
    pub interval_index: usize,
    pub accuracy: f64,
    pub n_effective_accepted: usize,
    pub n_rejected_conf: usize,
    pub n_rejected_dist: usize,
    pub mean_confidence: f64,
    pub n_inputs: usize,
    pub n_labeled: usize,
}

impl MetricsRow {
    pub fn from_interval(environment: &str, snr_db: f64, m: &IntervalMetrics) -> Self {
        MetricsRow {
            environment: environment.to_string(),
            snr_db,
            interval_index: m.interval,
            accuracy: m.accuracy(),
            n_effective_accepted: m.n_accepted,
            n_rejected_conf: m.n_rejected_conf,
            n_rejected_dist: m.n_rejected_dist,
            mean_confidence: m.mean_confidence,
            n_inputs: m.n_inputs,
            n_labeled: m.n_labeled,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_effective_accepted + self.n_rejected_conf + self.n_rejected_dist != self.n_inputs {
            return Err(KwsError::Usage(format!(
                "row {}/{}/{}: decision counts do not sum to {} inputs",
                self.environment, self.snr_db, self.interval_index, self.n_inputs
            )));
        }
        if !(0.0..=1.0).contains(&self.accuracy) || !(0.0..=1.0).contains(&self.mean_confidence) {
            return Err(KwsError::Usage(format!(
                "row {}/{}/{}: accuracy or confidence outside [0, 1]",
                self.environment, self.snr_db, self.interval_index
            )));
        }
        Ok(())
    }
}

/// Per environment × SNR outcome of one deployment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub environment: String,
    pub snr_db: f64,
    /// Accuracy during the last interval (headline figure).
    pub final_accuracy: f64,
    pub mean_accuracy: f64,
    /// Mean accuracy over the same stream with no adaptation at all, when
    /// measured.
    pub baseline_accuracy: Option<f64>,
    /// Clean test accuracy of the integer model before and after.
    pub clean_before: f64,
    pub clean_after: f64,
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| KwsError::io(path, e))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(KwsError::from)).collect()
}

/// Aligned text table; the first column is left-aligned, others right.
pub fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let n = header.len();
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[String]| {
        let parts: Vec<String> = (0..n)
            .map(|i| {
                let c = cells.get(i).map_or("", String::as_str);
                if i == 0 {
                    format!("{c:<w$}", w = widths[i])
                } else {
                    format!("{c:>w$}", w = widths[i])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", parts.join("  ").trim_end());
    };
    line(header);
    line(&widths.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>());
    for r in rows {
        line(r);
    }
    out
}

pub fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

pub fn fmt_snr(s: f64) -> String {
    format!("{s}")
}

/// Summary of deployment cells: one line per cell.
pub fn render_cells(cells: &[CellSummary]) -> String {
    let header = [
        "environment",
        "snr_db",
        "final_%",
        "mean_%",
        "baseline_%",
        "clean_before_%",
        "clean_after_%",
    ]
    .map(String::from);
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|c| {
            vec![
                c.environment.clone(),
                fmt_snr(c.snr_db),
                pct(c.final_accuracy),
                pct(c.mean_accuracy),
                c.baseline_accuracy.map_or("-".into(), pct),
                pct(c.clean_before),
                pct(c.clean_after),
            ]
        })
        .collect();
    render_table(&header, &rows)
}

/// Environment × SNR aggregate of metric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub environments: Vec<String>,
    pub snrs: Vec<f64>,
    /// `(final-interval accuracy, mean accuracy over intervals)` per cell.
    pub cells: BTreeMap<(String, i64), (f64, f64)>,
}

fn snr_key(s: f64) -> i64 {
    (s * 1000.0).round() as i64
}

impl Grid {
    pub fn from_rows(rows: &[MetricsRow]) -> Self {
        let mut groups: BTreeMap<(String, i64), Vec<&MetricsRow>> = BTreeMap::new();
        let mut envs = Vec::new();
        let mut snrs = BTreeSet::new();
        for r in rows {
            if !envs.contains(&r.environment) {
                envs.push(r.environment.clone());
            }
            snrs.insert(snr_key(r.snr_db));
            groups
                .entry((r.environment.clone(), snr_key(r.snr_db)))
                .or_default()
                .push(r);
        }
        let cells = groups
            .into_iter()
            .map(|(k, rs)| {
                let last = rs.iter().max_by_key(|r| r.interval_index).expect("group is non-empty");
                let mean = rs.iter().map(|r| r.accuracy).sum::<f64>() / rs.len() as f64;
                (k, (last.accuracy, mean))
            })
            .collect();
        Grid {
            environments: envs,
            snrs: snrs.into_iter().map(|k| k as f64 / 1000.0).collect(),
            cells,
        }
    }

    pub fn get(&self, env: &str, snr: f64) -> Option<(f64, f64)> {
        self.cells.get(&(env.to_string(), snr_key(snr))).copied()
    }

    /// Text grid of final-interval accuracy (mean in parentheses); absent
    /// cells are shown as `-`.
    pub fn render(&self) -> String {
        let mut header = vec!["environment".to_string()];
        header.extend(self.snrs.iter().map(|s| format!("{} dB", fmt_snr(*s))));
        let rows: Vec<Vec<String>> = self
            .environments
            .iter()
            .map(|env| {
                let mut row = vec![env.clone()];
                row.extend(self.snrs.iter().map(|&s| match self.get(env, s) {
                    Some((last, mean)) => format!("{} ({})", pct(last), pct(mean)),
                    None => "-".into(),
                }));
                row
            })
            .collect();
        render_table(&header, &rows)
    }
}

/// Line plot of accuracy per interval, one series per SNR.
pub fn render_svg(title: &str, series: &[(String, Vec<f64>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const M: f64 = 48.0;
    const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
    let n = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0).max(2);
    let x = |i: usize| M + (W - 2.0 * M) * i as f64 / (n - 1) as f64;
    let y = |a: f64| H - M - (H - 2.0 * M) * a.clamp(0.0, 1.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle">{title}</text>"#, W / 2.0);
    let _ = writeln!(
        s,
        r#"<line x1="{M}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - M,
        W - M,
        H - M
    );
    let _ = writeln!(s, r#"<line x1="{M}" y1="{M}" x2="{M}" y2="{}" stroke="black"/>"#, H - M);
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{:.0}%</text>"#,
            M - 4.0,
            y(tick) + 4.0,
            tick * 100.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">interval</text>"#,
        W / 2.0,
        H - 12.0
    );
    for (k, (label, values)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let points: Vec<String> = values
            .iter()
            .enumerate()
            .map(|(i, &a)| format!("{:.1},{:.1}", x(i), y(a)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" fill="{color}">{label}</text>"#,
            W - M + 4.0,
            M + 14.0 * k as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(env: &str, snr: f64, i: usize, acc: f64) -> MetricsRow {
        MetricsRow {
            environment: env.into(),
            snr_db: snr,
            interval_index: i,
            accuracy: acc,
            n_effective_accepted: 1,
            n_rejected_conf: 2,
            n_rejected_dist: 3,
            mean_confidence: 0.9,
            n_inputs: 6,
            n_labeled: 4,
        }
    }

    #[test]
    fn grid_shape_and_missing_cells() {
        let mut rows: Vec<MetricsRow> = [-10.0, -5.0, 0.0, 5.0, 10.0]
            .iter()
            .map(|&s| row("TCAR", s, 0, 0.5))
            .collect();
        rows.push(row("OOFFICE", 0.0, 0, 0.7));
        rows.push(row("OOFFICE", 0.0, 1, 0.9));
        let g = Grid::from_rows(&rows);
        assert_eq!(g.environments, vec!["TCAR", "OOFFICE"]);
        assert_eq!(g.snrs.len(), 5);
        assert_eq!(g.get("OOFFICE", 0.0), Some((0.9, 0.8)));
        assert_eq!(g.get("OOFFICE", 10.0), None);
        let text = g.render();
        assert!(text.lines().nth(3).unwrap().contains('-'));
    }

    #[test]
    fn csv_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        let rows = vec![row("SYN_WHITE", -10.0, 0, 0.25), row("SYN_WHITE", -10.0, 1, 0.5)];
        write_csv(&path, &rows).unwrap();
        let header = std::fs::read_to_string(&path).unwrap();
        assert!(header.starts_with(
            "environment,snr_db,interval_index,accuracy,n_effective_accepted,n_rejected_conf,n_rejected_dist,mean_confidence,n_inputs,n_labeled\n"
        ));
        let back: Vec<MetricsRow> = read_csv(&path).unwrap();
        assert_eq!(back, rows);
        assert!(back.iter().all(|r| r.validate().is_ok()));
        let mut bad = rows[0].clone();
        bad.n_inputs = 7;
        assert!(bad.validate().is_err());
    }

    #[test]
    fn table_is_aligned() {
        let t = render_table(&["a".into(), "bb".into()], &[vec!["xyz".into(), "1".into()]]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "a    bb");
        assert_eq!(lines[2], "xyz   1");
    }
}
