use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    /// Image query, caption candidates.
    #[serde(rename = "i2t")]
    ImageToText,
    /// Caption query, image candidates.
    #[serde(rename = "t2i")]
    TextToImage,
}

impl Direction {
    pub const BOTH: [Direction; 2] = [Direction::ImageToText, Direction::TextToImage];

    pub fn code(self) -> &'static str {
        match self {
            Direction::ImageToText => "i2t",
            Direction::TextToImage => "t2i",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::ImageToText => "I→T",
            Direction::TextToImage => "T→I",
        })
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "i2t" | "I→T" => Ok(Direction::ImageToText),
            "t2i" | "T→I" => Ok(Direction::TextToImage),
            other => Err(Error::Config(format!(
                "unknown direction `{other}` (expected i2t or t2i)"
            ))),
        }
    }
}

/// What to measure: which languages, directions and cutoffs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalProtocol {
    pub languages: Vec<String>,
    pub directions: Vec<Direction>,
    pub ks: Vec<usize>,
}

impl RetrievalProtocol {
    pub const DEFAULT_KS: [usize; 3] = [1, 5, 10];

    pub fn new<S: AsRef<str>>(languages: &[S]) -> Self {
        Self {
            languages: languages.iter().map(|l| l.as_ref().to_owned()).collect(),
            directions: Direction::BOTH.to_vec(),
            ks: Self::DEFAULT_KS.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.languages.is_empty() || self.directions.is_empty() || self.ks.is_empty() {
            return Err(Error::Config(
                "protocol needs at least one language, direction and k".into(),
            ));
        }
        if self.ks[0] == 0 || self.ks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "k values must be positive and strictly ascending, got {:?}",
                self.ks
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub language: String,
    pub direction: Direction,
    pub k: usize,
    pub mean: f64,
    pub std: f64,
    pub seeds: usize,
}

/// Recall percentages per (language, direction, k), possibly averaged over
/// several seeds.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RetrievalReport {
    pub entries: Vec<ReportEntry>,
}

impl RetrievalReport {
    pub fn get(&self, language: &str, direction: Direction, k: usize) -> Option<&ReportEntry> {
        self.entries
            .iter()
            .find(|e| e.language == language && e.direction == direction && e.k == k)
    }

    pub fn mean(&self, language: &str, direction: Direction, k: usize) -> Option<f64> {
        self.get(language, direction, k).map(|e| e.mean)
    }

    pub fn seeds(&self) -> usize {
        self.entries.first().map_or(0, |e| e.seeds)
    }

    pub fn languages(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.language) {
                out.push(e.language.clone());
            }
        }
        out
    }

    /// Sum of every mean recall in the report.
    pub fn recall_sum(&self) -> f64 {
        self.entries.iter().map(|e| e.mean).sum()
    }

    fn key(&self) -> Vec<(&str, Direction, usize)> {
        self.entries
            .iter()
            .map(|e| (e.language.as_str(), e.direction, e.k))
            .collect()
    }

    /// One JSON object per entry.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("plain struct serializes"));
            out.push('\n');
        }
        out
    }

    /// Aligned table, one row per language, I→T columns then T→I columns.
    pub fn table(&self) -> String {
        let rows: Vec<(String, &RetrievalReport, String)> = self
            .languages()
            .into_iter()
            .map(|l| (l.clone(), self, l))
            .collect();
        let borrowed: Vec<(&str, &RetrievalReport, &str)> = rows
            .iter()
            .map(|(label, r, l)| (label.as_str(), *r, l.as_str()))
            .collect();
        comparison_table(&borrowed)
    }
}

fn directions_and_ks(reports: &[(&str, &RetrievalReport, &str)]) -> (Vec<Direction>, Vec<usize>) {
    let mut dirs = Vec::new();
    let mut ks = Vec::new();
    for (_, r, _) in reports {
        for e in &r.entries {
            if !dirs.contains(&e.direction) {
                dirs.push(e.direction);
            }
            if !ks.contains(&e.k) {
                ks.push(e.k);
            }
        }
    }
    dirs.sort();
    ks.sort();
    (dirs, ks)
}

/// Aligned table with one row per `(label, report, language)`. Cells show
/// the mean with one decimal, plus `±std` when more than one seed went in.
pub fn comparison_table(rows: &[(&str, &RetrievalReport, &str)]) -> String {
    let (dirs, ks) = directions_and_ks(rows);
    let label_w = rows
        .iter()
        .map(|(l, _, _)| l.chars().count())
        .max()
        .unwrap_or(0)
        .max(5);
    let multi = rows.iter().any(|(_, r, _)| r.seeds() > 1);
    let cell_w = if multi { 11 } else { 6 };

    let mut out = String::new();
    let _ = write!(out, "{:label_w$}", "");
    for d in &dirs {
        let span = ks.len() * (cell_w + 1);
        let _ = write!(out, " |{:^span$}", d.to_string());
    }
    out.push('\n');
    let _ = write!(out, "{:label_w$}", "");
    for _ in &dirs {
        out.push_str(" |");
        for k in &ks {
            let _ = write!(out, " {:>cell_w$}", format!("R@{k}"));
        }
    }
    out.push('\n');
    for (label, report, lang) in rows {
        let pad = label_w - label.chars().count();
        let _ = write!(out, "{label}{:pad$}", "");
        for &d in &dirs {
            out.push_str(" |");
            for &k in &ks {
                let cell = match report.get(lang, d, k) {
                    Some(e) if multi => format!("{:.1}±{:.1}", e.mean, e.std),
                    Some(e) => format!("{:.1}", e.mean),
                    None => "-".to_owned(),
                };
                let _ = write!(out, " {cell:>cell_w$}");
            }
        }
        out.push('\n');
    }
    out
}

/// Per-entry arithmetic mean and sample standard deviation across
/// single-seed reports (or reports that are themselves aggregates, weighting
/// each report once).
pub fn aggregate_seeds(reports: &[RetrievalReport]) -> Result<RetrievalReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::Aggregation("no reports to aggregate".into()))?;
    let key = first.key();
    for (i, r) in reports.iter().enumerate().skip(1) {
        if r.key() != key {
            return Err(Error::Aggregation(format!(
                "report {i} measures a different protocol than report 0"
            )));
        }
    }
    let n = reports.len() as f64;
    let entries = first
        .entries
        .iter()
        .enumerate()
        .map(|(idx, e)| {
            let values: Vec<f64> = reports.iter().map(|r| r.entries[idx].mean).collect();
            let mean = values.iter().sum::<f64>() / n;
            let std = if reports.len() > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            ReportEntry {
                language: e.language.clone(),
                direction: e.direction,
                k: e.k,
                mean,
                std,
                seeds: reports.len(),
            }
        })
        .collect();
    Ok(RetrievalReport { entries })
}
