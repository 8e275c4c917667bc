use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::Metrics;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Original,
    Pruned,
    FsPruned,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Original, Stage::Pruned, Stage::FsPruned];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Original => "original",
            Stage::Pruned => "pruned",
            Stage::FsPruned => "fs_pruned",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL.into_iter().find(|st| st.as_str() == s).ok_or_else(|| Error::Parse(format!("unknown stage {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub model: String,
    pub stage: Stage,
    pub metrics: Metrics,
    pub latency_ms: f64,
    pub size_kb: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

pub const REPORT_COLUMNS: [&str; 8] = ["Model", "Stage", "Accuracy", "Precision", "Recall", "F1", "AvgInferenceTime_ms", "ModelSize_KB"];

fn round_to(v: f64, places: i32) -> f64 {
    let s = 10f64.powi(places);
    (v * s).round() / s
}

impl BenchReport {
    pub fn push(&mut self, row: BenchRow) {
        self.rows.push(row);
    }

    /// Model names in first-seen order.
    pub fn models(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.model.as_str()) {
                out.push(&r.model);
            }
        }
        out
    }

    pub fn get(&self, model: &str, stage: Stage) -> Option<&BenchRow> {
        self.rows.iter().find(|r| r.model == model && r.stage == stage)
    }

    /// Missing `model/stage` cells and rows violating value ranges.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.rows.is_empty() {
            out.push("report has no rows".into());
        }
        for m in self.models() {
            for st in Stage::ALL {
                match self.rows.iter().filter(|r| r.model == m && r.stage == st).count() {
                    0 => out.push(format!("{m}/{} missing", st.as_str())),
                    1 => {}
                    n => out.push(format!("{m}/{} appears {n} times", st.as_str())),
                }
            }
        }
        for r in &self.rows {
            if !r.metrics.in_unit_range() {
                out.push(format!("{}/{} metrics outside [0, 1]", r.model, r.stage.as_str()));
            }
            if !(r.latency_ms > 0.0 && r.latency_ms.is_finite()) {
                out.push(format!("{}/{} latency {} is not positive", r.model, r.stage.as_str(), r.latency_ms));
            }
            if !(r.size_kb >= 0.0 && r.size_kb.is_finite()) {
                out.push(format!("{}/{} size {} is invalid", r.model, r.stage.as_str(), r.size_kb));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::IncompleteReport(p))
        }
    }

    /// Rows ordered by model (first seen) then stage.
    fn ordered(&self) -> Vec<&BenchRow> {
        let models = self.models();
        let mut rows: Vec<&BenchRow> = self.rows.iter().collect();
        rows.sort_by_key(|r| (models.iter().position(|m| *m == r.model), r.stage));
        rows
    }

    fn cells(r: &BenchRow, with_latency: bool) -> [String; 8] {
        let m = r.metrics;
        [
            r.model.clone(),
            r.stage.as_str().into(),
            format!("{:.4}", m.accuracy),
            format!("{:.4}", m.precision),
            format!("{:.4}", m.recall),
            format!("{:.4}", m.f1),
            if with_latency { format!("{:.6}", r.latency_ms) } else { "-".into() },
            format!("{:.4}", r.size_kb),
        ]
    }

    /// The report as written to disk, with values rounded to their printed
    /// precision.
    pub fn rounded(&self) -> BenchReport {
        let rows = self
            .ordered()
            .into_iter()
            .map(|r| BenchRow {
                model: r.model.clone(),
                stage: r.stage,
                metrics: Metrics {
                    accuracy: round_to(r.metrics.accuracy, 4),
                    precision: round_to(r.metrics.precision, 4),
                    recall: round_to(r.metrics.recall, 4),
                    f1: round_to(r.metrics.f1, 4),
                },
                latency_ms: round_to(r.latency_ms, 6),
                size_kb: round_to(r.size_kb, 4),
            })
            .collect();
        BenchReport { rows }
    }

    pub fn to_csv_string(&self) -> Result<String> {
        self.validate()?;
        Ok(self.csv_text(true))
    }

    /// CSV with the latency column blanked, for byte-level reproducibility
    /// comparisons between runs.
    pub fn to_csv_string_without_latency(&self) -> Result<String> {
        self.validate()?;
        Ok(self.csv_text(false))
    }

    fn csv_text(&self, with_latency: bool) -> String {
        let mut out = REPORT_COLUMNS.join(",");
        out.push('\n');
        for r in self.ordered() {
            out.push_str(&Self::cells(r, with_latency).join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_markdown(&self) -> Result<String> {
        self.validate()?;
        let mut out = format!("| {} |\n", REPORT_COLUMNS.join(" | "));
        let _ = writeln!(out, "|{}", ["---|"; 8].concat());
        for r in self.ordered() {
            let _ = writeln!(out, "| {} |", Self::cells(r, true).join(" | "));
        }
        Ok(out)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }

    pub fn write_markdown(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_markdown()?)?;
        Ok(())
    }

    pub fn from_csv_str(text: &str) -> Result<BenchReport> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let headers = r.headers()?.clone();
        if headers.iter().ne(REPORT_COLUMNS) {
            return Err(Error::Parse(format!("unexpected report header {:?}", headers.iter().collect::<Vec<_>>())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("report value {s:?}")));
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            rows.push(BenchRow {
                model: rec[0].to_string(),
                stage: rec[1].parse()?,
                metrics: Metrics { accuracy: num(&rec[2])?, precision: num(&rec[3])?, recall: num(&rec[4])?, f1: num(&rec[5])? },
                latency_ms: num(&rec[6])?,
                size_kb: num(&rec[7])?,
            });
        }
        Ok(BenchReport { rows })
    }

    pub fn read_csv(path: &Path) -> Result<BenchReport> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        Self::from_csv_str(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: &str, stage: Stage, a: f64) -> BenchRow {
        BenchRow {
            model: model.into(),
            stage,
            metrics: Metrics { accuracy: a, precision: a - 0.01, recall: a, f1: a - 0.005 },
            latency_ms: 0.0123456789,
            size_kb: 39.0625,
        }
    }

    fn full(model: &str) -> Vec<BenchRow> {
        vec![row(model, Stage::FsPruned, 0.9712345), row(model, Stage::Original, 0.99), row(model, Stage::Pruned, 0.98)]
    }

    #[test]
    fn csv_layout_and_round_trip() {
        let r = BenchReport { rows: full("MLP") };
        let text = r.to_csv_string().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "Model,Stage,Accuracy,Precision,Recall,F1,AvgInferenceTime_ms,ModelSize_KB");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "MLP,original,0.9900,0.9800,0.9900,0.9850,0.012346,39.0625");
        assert!(lines[3].starts_with("MLP,fs_pruned,0.9712,"));
        assert_eq!(BenchReport::from_csv_str(&text).unwrap(), r.rounded());
    }

    #[test]
    fn markdown_has_eight_columns() {
        let mut rows = full("MLP");
        rows.extend(full("LSTM"));
        let md = BenchReport { rows }.to_markdown().unwrap();
        let lines: Vec<&str> = md.lines().collect();
        assert_eq!(lines.len(), 8);
        assert!(lines.iter().all(|l| l.matches('|').count() == 9));
        assert!(lines[2].starts_with("| MLP | original"));
        assert!(lines[5].starts_with("| LSTM | original"));
    }

    #[test]
    fn incomplete_reports_list_missing_cells() {
        let mut rows = full("MLP");
        rows.retain(|r| r.stage != Stage::Pruned);
        rows.push(row("LSTM", Stage::Original, 0.9));
        let err = BenchReport { rows }.to_csv_string().unwrap_err();
        let Error::IncompleteReport(missing) = err else { panic!("{err:?}") };
        assert_eq!(missing, vec!["MLP/pruned missing", "LSTM/pruned missing", "LSTM/fs_pruned missing"]);
    }

    #[test]
    fn range_violations() {
        let mut rows = full("MLP");
        rows[0].latency_ms = 0.0;
        rows[1].metrics.f1 = 1.2;
        assert_eq!(BenchReport { rows }.problems().len(), 2);
    }
}
