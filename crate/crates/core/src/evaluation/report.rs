use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EvalRow, EvalSettings, MetricSummary, SigmaRule, Stat, Target};
use crate::error::{Error, Result};
use crate::surrogates::SurrogateKind;

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Counts of non-NV cells whose mean R² clears each threshold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Buckets {
    pub above_095: usize,
    pub above_080: usize,
    pub above_050: usize,
    pub cells: usize,
}

impl Buckets {
    fn add(&mut self, cell: &MetricSummary) {
        self.cells += 1;
        if let Some(m) = cell.r2_mean().filter(|_| !cell.nv) {
            self.above_095 += usize::from(m > 0.95);
            self.above_080 += usize::from(m > 0.8);
            self.above_050 += usize::from(m > 0.5);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub target: Target,
    pub repeats: usize,
    pub train_fraction: f64,
    pub base_seed: u64,
    pub sigma_rule: SigmaRule,
    pub rows: Vec<EvalRow>,
    pub buckets: BTreeMap<SurrogateKind, Buckets>,
}

fn tally(rows: &[EvalRow]) -> BTreeMap<SurrogateKind, Buckets> {
    let mut out: BTreeMap<SurrogateKind, Buckets> = BTreeMap::new();
    for row in rows {
        for (k, c) in &row.cells {
            out.entry(*k).or_default().add(c);
        }
    }
    out
}

fn stat(s: Option<Stat>) -> String {
    match s {
        Some(s) => format!("{:.3} ({:.3})", s.mean, s.std),
        None => "n/a".into(),
    }
}

impl EvalReport {
    pub fn new(settings: &EvalSettings, rows: Vec<EvalRow>) -> Self {
        EvalReport {
            format_version: REPORT_FORMAT_VERSION,
            target: settings.target,
            repeats: settings.repeats,
            train_fraction: settings.train_fraction,
            base_seed: settings.base_seed,
            sigma_rule: settings.sigma_rule,
            buckets: tally(&rows),
            rows,
        }
    }

    /// Appends rows and recomputes the bucket tallies.
    pub fn extend(&mut self, rows: impl IntoIterator<Item = EvalRow>) {
        self.rows.extend(rows);
        self.buckets = tally(&self.rows);
    }

    pub fn validate(&self) -> Result<()> {
        for row in &self.rows {
            for (k, c) in &row.cells {
                if c.repeats != self.repeats {
                    return Err(Error::Evaluation(format!(
                        "{} {} {} {k}: {} repeats, report declares {}",
                        row.algorithm, row.dataset, row.protected, c.repeats, self.repeats
                    )));
                }
            }
        }
        if tally(&self.rows) != self.buckets {
            return Err(Error::Evaluation("bucket tallies disagree with the cells".into()));
        }
        Ok(())
    }

    pub fn kinds(&self) -> Vec<SurrogateKind> {
        SurrogateKind::ALL
            .into_iter()
            .filter(|k| self.rows.iter().any(|r| r.cells.contains_key(k)))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: EvalReport = serde_json::from_str(text)?;
        if r.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::Incompatible(format!("unsupported report version {}", r.format_version)));
        }
        r.validate()?;
        Ok(r)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Table with one row per (algorithm, dataset, protected attribute): the
    /// baseline's relative RMSE first, then relative RMSE and R² per kind as
    /// `mean (std)`. R² ≤ 0 prints as `NV`; best cells are bold.
    pub fn to_markdown(&self) -> String {
        let kinds: Vec<SurrogateKind> =
            self.kinds().into_iter().filter(|k| *k != SurrogateKind::Baseline).collect();
        let has_baseline = self.rows.iter().any(|r| r.cells.contains_key(&SurrogateKind::Baseline));
        let mut out = String::new();
        let _ = writeln!(
            out,
            "Target: {}. Mean (std) over {} repeats; NV means R² ≤ 0; bold marks the best R² and those within two standard deviations of it.\n",
            self.target.as_str().to_uppercase(),
            self.repeats
        );
        let mut header = vec!["Algorithm".to_string(), "Dataset".into(), "Prot.".into()];
        if has_baseline {
            header.push("Baseline".into());
        }
        for k in &kinds {
            header.push(format!("{} Rel. RMSE", k.label()));
            header.push(format!("{} R²", k.label()));
        }
        let _ = writeln!(out, "| {} |", header.join(" | "));
        let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
        for row in &self.rows {
            let dataset = match (&row.train_release, row.release.as_str()) {
                (Some(from), to) => format!("{} ({from} → {to})", row.dataset),
                (None, "base") => row.dataset.clone(),
                (None, rel) => format!("{} ({rel})", row.dataset),
            };
            let mut cells = vec![row.algorithm.display_name().to_string(), dataset, row.protected.clone()];
            if has_baseline {
                cells.push(match row.cells.get(&SurrogateKind::Baseline) {
                    Some(c) => stat(c.rel_rmse),
                    None => "-".into(),
                });
            }
            for k in &kinds {
                match row.cells.get(k) {
                    Some(c) => {
                        cells.push(stat(c.rel_rmse));
                        cells.push(if c.nv {
                            "NV".into()
                        } else if row.best.contains(k) {
                            format!("**{}**", stat(c.r2))
                        } else {
                            stat(c.r2)
                        });
                    }
                    None => cells.extend(["-".to_string(), "-".to_string()]),
                }
            }
            let _ = writeln!(out, "| {} |", cells.join(" | "));
        }
        if !self.buckets.is_empty() {
            let _ = writeln!(out, "\n| Predictor | R² > 0.95 | R² > 0.8 | R² > 0.5 | Cells |\n|---|---|---|---|---|");
            for (k, b) in &self.buckets {
                if *k == SurrogateKind::Baseline {
                    continue;
                }
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    k.label(),
                    b.above_095,
                    b.above_080,
                    b.above_050,
                    b.cells
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::cell;
    use super::super::mark_best;
    use super::*;
    use crate::trainers::Algorithm;

    fn census_row() -> EvalRow {
        let mut baseline = cell(0.0, 0.0);
        baseline.rel_rmse = Some(Stat { mean: 0.444, std: 0.013 });
        let mut cells: BTreeMap<_, _> = [
            (SurrogateKind::Baseline, baseline),
            (SurrogateKind::Mlp, cell(0.316, 0.057)),
            (SurrogateKind::Svr, cell(0.237, 0.034)),
            (SurrogateKind::Forest, cell(0.875, 0.018)),
            (SurrogateKind::Gbt, cell(0.863, 0.016)),
        ]
        .into();
        cells.get_mut(&SurrogateKind::Forest).unwrap().rel_rmse = Some(Stat { mean: 0.157, std: 0.014 });
        let best = mark_best(&cells, SigmaRule::Best);
        EvalRow {
            algorithm: Algorithm::DecisionTree,
            dataset: "census".into(),
            release: "base".into(),
            train_release: None,
            protected: "sex".into(),
            target: Target::Aod,
            cells,
            best,
        }
    }

    #[test]
    fn markdown_renders_a_census_row() {
        let r = EvalReport::new(&EvalSettings::default(), vec![census_row()]);
        let md = r.to_markdown();
        let line = md.lines().find(|l| l.starts_with("| Decision Tree")).unwrap();
        assert!(line.contains("| census | sex | 0.444 (0.013) |"), "{line}");
        assert!(line.contains("0.157 (0.014) | **0.875 (0.018)**"), "{line}");
        assert!(line.contains("**0.863 (0.016)**"), "{line}");
        assert!(line.contains("| 0.316 (0.057) |"), "{line}");
        let header = md.lines().find(|l| l.starts_with("| Algorithm")).unwrap();
        assert!(header.find("Baseline").unwrap() < header.find("DNN").unwrap());
        assert!(header.find("SVR").unwrap() < header.find("TR ").unwrap());
        assert!(header.find("TR ").unwrap() < header.find("XGB").unwrap());
    }

    #[test]
    fn nv_cells_print_literally_and_buckets_nest() {
        let mut row = census_row();
        row.cells.insert(SurrogateKind::Svr, cell(-0.2, 0.1));
        let r = EvalReport::new(&EvalSettings::default(), vec![row]);
        assert!(r.to_markdown().contains("| NV |"));
        let b = r.buckets[&SurrogateKind::Forest];
        assert_eq!((b.above_095, b.above_080, b.above_050), (0, 1, 1));
        r.validate().unwrap();
    }

    #[test]
    fn json_round_trip_and_repeat_check() {
        let r = EvalReport::new(&EvalSettings::default(), vec![census_row()]);
        assert_eq!(EvalReport::from_json(&r.to_json().unwrap()).unwrap(), r);
        let mut bad = r.clone();
        bad.repeats = 3;
        assert!(bad.validate().is_err());
    }
}
