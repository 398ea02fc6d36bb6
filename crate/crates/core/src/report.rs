//! Aggregation of finished runs: means with sample standard deviations at the
//! final generation, and per-repetition ranks of the algorithms.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::protocol::RunRecord;

/// Final-generation metrics of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct FinalMetrics {
    pub algorithm: String,
    pub repetition: usize,
    pub archive_size: f64,
    pub coverage: f64,
    pub support: f64,
    pub confidence: f64,
    pub cosine: f64,
}

impl FinalMetrics {
    pub fn from_record(record: &RunRecord) -> Option<Self> {
        let last = record.metrics().last()?;
        Some(FinalMetrics {
            algorithm: record.algorithm.to_string(),
            repetition: record.repetition,
            archive_size: last.archive_size as f64,
            coverage: last.coverage,
            support: last.mean_support,
            confidence: last.mean_confidence,
            cosine: last.mean_cosine,
        })
    }

    fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::ArchiveSize => self.archive_size,
            Metric::Coverage => self.coverage,
            Metric::Support => self.support,
            Metric::Confidence => self.confidence,
            Metric::Cosine => self.cosine,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    ArchiveSize,
    Coverage,
    Support,
    Confidence,
    Cosine,
}

impl Metric {
    pub const SUMMARY: [Metric; 5] = [
        Metric::ArchiveSize,
        Metric::Coverage,
        Metric::Support,
        Metric::Confidence,
        Metric::Cosine,
    ];
    /// The objective means algorithms are ranked on.
    pub const RANKED: [Metric; 3] = [Metric::Support, Metric::Confidence, Metric::Cosine];

    pub fn name(self) -> &'static str {
        match self {
            Metric::ArchiveSize => "archive_size",
            Metric::Coverage => "coverage",
            Metric::Support => "support",
            Metric::Confidence => "confidence",
            Metric::Cosine => "cosine",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
}

pub fn mean_std(values: &[f64]) -> MeanStd {
    let n = values.len() as f64;
    if values.is_empty() {
        return MeanStd {
            mean: 0.0,
            std: 0.0,
        };
    }
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MeanStd { mean, std }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub runs: usize,
    pub stats: BTreeMap<Metric, MeanStd>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankRow {
    pub repetition: usize,
    pub algorithm: String,
    pub metric: Metric,
    /// Competition rank, 1 = best; ties share the better rank.
    pub rank: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub summary: Vec<SummaryRow>,
    pub ranks: Vec<RankRow>,
    /// `(metric, algorithm)` -> count of repetitions at rank `k + 1`.
    pub histograms: BTreeMap<(Metric, String), Vec<usize>>,
}

pub fn aggregate_and_rank(runs: &[FinalMetrics]) -> Report {
    let mut by_algo: BTreeMap<&str, Vec<&FinalMetrics>> = BTreeMap::new();
    let mut by_rep: BTreeMap<usize, Vec<&FinalMetrics>> = BTreeMap::new();
    for r in runs {
        by_algo.entry(&r.algorithm).or_default().push(r);
        by_rep.entry(r.repetition).or_default().push(r);
    }

    let summary = by_algo
        .iter()
        .map(|(algo, rs)| SummaryRow {
            algorithm: algo.to_string(),
            runs: rs.len(),
            stats: Metric::SUMMARY
                .iter()
                .map(|&m| {
                    (
                        m,
                        mean_std(&rs.iter().map(|r| r.get(m)).collect::<Vec<_>>()),
                    )
                })
                .collect(),
        })
        .collect();

    let n_algos = by_algo.len();
    let mut histograms: BTreeMap<(Metric, String), Vec<usize>> = BTreeMap::new();
    for &m in &Metric::RANKED {
        for algo in by_algo.keys() {
            histograms.insert((m, algo.to_string()), vec![0; n_algos]);
        }
    }
    let mut ranks = Vec::new();
    for (&rep, rs) in &by_rep {
        let mut rs = rs.clone();
        rs.sort_by(|a, b| a.algorithm.cmp(&b.algorithm));
        for &m in &Metric::RANKED {
            for r in &rs {
                let rank = 1 + rs.iter().filter(|o| o.get(m) > r.get(m)).count();
                histograms
                    .get_mut(&(m, r.algorithm.clone()))
                    .expect("histogram per algorithm")[rank - 1] += 1;
                ranks.push(RankRow {
                    repetition: rep,
                    algorithm: r.algorithm.clone(),
                    metric: m,
                    rank,
                });
            }
        }
    }
    Report {
        summary,
        ranks,
        histograms,
    }
}

impl Report {
    pub fn summary_csv(&self) -> String {
        let mut s = String::from("algorithm,runs");
        for m in Metric::SUMMARY {
            s.push_str(&format!(",{0}_mean,{0}_std", m.name()));
        }
        s.push('\n');
        for row in &self.summary {
            s.push_str(&format!("{},{}", row.algorithm, row.runs));
            for m in Metric::SUMMARY {
                let ms = row.stats[&m];
                s.push_str(&format!(",{:.6},{:.6}", ms.mean, ms.std));
            }
            s.push('\n');
        }
        s
    }

    pub fn ranks_csv(&self) -> String {
        let width = self.histograms.values().next().map_or(0, Vec::len);
        let mut s = String::from("metric,algorithm");
        for k in 1..=width {
            s.push_str(&format!(",rank_{k}"));
        }
        s.push('\n');
        for ((m, algo), counts) in &self.histograms {
            s.push_str(&format!("{},{}", m.name(), algo));
            for c in counts {
                s.push_str(&format!(",{c}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn ranks_by_repetition_csv(&self) -> String {
        let mut s = String::from("repetition,algorithm,metric,rank\n");
        for r in &self.ranks {
            s.push_str(&format!(
                "{},{},{},{}\n",
                r.repetition,
                r.algorithm,
                r.metric.name(),
                r.rank
            ));
        }
        s
    }

    /// Writes `summary.csv`, `ranks.csv` and `ranks_by_repetition.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for (name, body) in [
            ("summary.csv", self.summary_csv()),
            ("ranks.csv", self.ranks_csv()),
            ("ranks_by_repetition.csv", self.ranks_by_repetition_csv()),
        ] {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct MetricRow {
    archive_size: usize,
    coverage: f64,
    mean_support: f64,
    mean_confidence: f64,
    mean_cosine: f64,
}

/// Reads the last row of every `metrics_<algo>_<rep>.csv` in `dir`.
pub fn load_final_metrics(dir: &Path) -> Result<Vec<FinalMetrics>> {
    let listing = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut names: Vec<String> = listing
        .filter_map(|e| e.ok())
        .filter_map(|e| e.file_name().into_string().ok())
        .filter(|n| n.starts_with("metrics_") && n.ends_with(".csv"))
        .collect();
    names.sort();
    let mut out = Vec::new();
    for name in names {
        let stem = &name["metrics_".len()..name.len() - ".csv".len()];
        let Some((algo, rep)) = stem.rsplit_once('_') else {
            continue;
        };
        let Ok(repetition) = rep.parse::<usize>() else {
            continue;
        };
        let path = dir.join(&name);
        let mut reader = csv::Reader::from_path(&path)?;
        let mut last = None;
        for row in reader.deserialize::<MetricRow>() {
            last = Some(row?);
        }
        if let Some(m) = last {
            out.push(FinalMetrics {
                algorithm: algo.to_string(),
                repetition,
                archive_size: m.archive_size as f64,
                coverage: m.coverage,
                support: m.mean_support,
                confidence: m.mean_confidence,
                cosine: m.mean_cosine,
            });
        }
    }
    if out.is_empty() {
        return Err(Error::config(format!(
            "no run records found in {}",
            dir.display()
        )));
    }
    Ok(out)
}
