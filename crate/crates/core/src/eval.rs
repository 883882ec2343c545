//! Micro-F1, improvement over a baseline, and table rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{HgmnError, Result};

/// Per-class confusion counts for single-label predictions.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: Vec<u64>,
    pub fp: Vec<u64>,
    pub fn_: Vec<u64>,
    pub total: u64,
}

impl ConfusionCounts {
    pub fn from_labels(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(HgmnError::shape(
                "micro_f1",
                format!("{} predictions for {} labels", pred.len(), truth.len()),
            ));
        }
        if pred.is_empty() {
            return Err(HgmnError::InvalidLabels("no samples to score".into()));
        }
        let m = pred.iter().chain(truth).max().map_or(0, |&c| c + 1);
        let mut c = ConfusionCounts {
            tp: vec![0; m],
            fp: vec![0; m],
            fn_: vec![0; m],
            total: pred.len() as u64,
        };
        for (&p, &t) in pred.iter().zip(truth) {
            if p == t {
                c.tp[t] += 1;
            } else {
                c.fp[p] += 1;
                c.fn_[t] += 1;
            }
        }
        Ok(c)
    }

    pub fn micro_precision(&self) -> f64 {
        let tp: u64 = self.tp.iter().sum();
        let fp: u64 = self.fp.iter().sum();
        ratio(tp, tp + fp)
    }

    pub fn micro_recall(&self) -> f64 {
        let tp: u64 = self.tp.iter().sum();
        let fn_: u64 = self.fn_.iter().sum();
        ratio(tp, tp + fn_)
    }

    pub fn micro_f1(&self) -> f64 {
        let (p, r) = (self.micro_precision(), self.micro_recall());
        // Single-label data always lands here, giving accuracy exactly.
        if p == r {
            p
        } else if p + r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Micro-averaged F1. For single-label multiclass data this equals accuracy.
pub fn micro_f1(pred: &[usize], truth: &[usize]) -> Result<f64> {
    Ok(ConfusionCounts::from_labels(pred, truth)?.micro_f1())
}

/// Absolute improvement and improvement ratio (percent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Improvement {
    pub ai: f64,
    pub ir: f64,
}

pub fn improvement(p1: f64, p2: f64) -> Result<Improvement> {
    if p2 <= 0.0 || !p1.is_finite() || !p2.is_finite() {
        return Err(HgmnError::Config(format!("baseline score must be positive and finite, got {p2}")));
    }
    let ai = p1 - p2;
    Ok(Improvement { ai, ir: ai / p2 * 100.0 })
}

/// One model row of a results table; scores are fractions in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub max: Option<f64>,
    pub trials: usize,
    pub failed: usize,
}

/// Best score of a competing method, already in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub name: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub csv: String,
    pub text: String,
    /// AI/IR of the best row's max against the best baseline, computed from
    /// the rounded cells that appear in the table.
    pub improvement: Option<Improvement>,
}

/// Percent with two decimals.
pub fn pct(x: f64) -> f64 {
    (x * 10000.0).round() / 100.0
}

fn cell(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{:.2}", pct(v)))
}

const CSV_HEADER: &str = "row,mean,std,max,trials,failed";

/// Renders `rows` as CSV and as an aligned text table. With baselines, one
/// row per baseline plus `AI` and `IR` rows are appended.
pub fn render_report(rows: &[ReportRow], baselines: Option<&[Baseline]>) -> Result<Report> {
    let mut table: Vec<[String; 6]> = rows
        .iter()
        .map(|r| {
            [
                r.name.clone(),
                cell(r.mean),
                cell(r.std),
                cell(r.max),
                r.trials.to_string(),
                r.failed.to_string(),
            ]
        })
        .collect();
    let mut imp = None;
    if let Some(bs) = baselines.filter(|b| !b.is_empty()) {
        for b in bs {
            table.push([
                format!("baseline:{}", b.name),
                String::new(),
                String::new(),
                format!("{:.2}", b.score),
                String::new(),
                String::new(),
            ]);
        }
        let p1 = rows.iter().filter_map(|r| r.max).map(pct).fold(f64::NAN, f64::max);
        let p2 = bs.iter().map(|b| (b.score * 100.0).round() / 100.0).fold(f64::NAN, f64::max);
        if p1.is_finite() {
            let i = improvement(p1, p2)?;
            table.push(["AI".into(), String::new(), String::new(), format!("{:.2}", i.ai), String::new(), String::new()]);
            table.push(["IR".into(), String::new(), String::new(), format!("{:.2}", i.ir), String::new(), String::new()]);
            imp = Some(i);
        }
    }

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &table {
        csv.push_str(&r.join(","));
        csv.push('\n');
    }

    let head = ["model", "mean", "std", "max", "trials", "failed"];
    let mut widths = head.map(str::len);
    for r in &table {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut text = String::new();
    let line = |text: &mut String, cells: &[&str]| {
        for (k, (c, w)) in cells.iter().zip(widths).enumerate() {
            if k == 0 {
                let _ = write!(text, "{c:<w$}");
            } else {
                let _ = write!(text, "  {c:>w$}");
            }
        }
        text.push('\n');
    };
    line(&mut text, &head);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    line(&mut text, &rule.iter().map(String::as_str).collect::<Vec<_>>());
    for r in &table {
        let mut cells: Vec<&str> = r.iter().map(String::as_str).collect();
        // mean ± std in the text view
        let joined;
        if !r[1].is_empty() {
            joined = format!("{} ± {}", r[1], r[2]);
            cells[1] = &joined;
            cells[2] = "";
        }
        line(&mut text, &cells);
    }
    Ok(Report {
        csv,
        text,
        improvement: imp,
    })
}

/// Rows, baselines and AI/IR read back from [`render_report`] CSV, all in
/// percent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedReport {
    pub rows: Vec<ParsedRow>,
    pub baselines: Vec<Baseline>,
    pub ai: Option<f64>,
    pub ir: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRow {
    pub name: String,
    pub mean: Option<f64>,
    pub std: Option<f64>,
    pub max: Option<f64>,
    pub trials: usize,
    pub failed: usize,
}

pub fn parse_report_csv(text: &str) -> Result<ParsedReport> {
    let mut lines = text.lines().enumerate();
    let bad = |line: usize, message: String| HgmnError::Parse {
        path: "<report>".into(),
        line: line + 1,
        message,
    };
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        _ => return Err(bad(0, format!("expected header `{CSV_HEADER}`"))),
    }
    let mut out = ParsedReport::default();
    for (i, l) in lines {
        if l.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 6 {
            return Err(bad(i, format!("expected 6 fields, found {}", f.len())));
        }
        let num = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| bad(i, format!("not a number: `{s}`")))
            }
        };
        let count = |s: &str| -> Result<usize> {
            s.parse().map_err(|_| bad(i, format!("not a count: `{s}`")))
        };
        match f[0] {
            "AI" => out.ai = num(f[3])?,
            "IR" => out.ir = num(f[3])?,
            name if name.starts_with("baseline:") => out.baselines.push(Baseline {
                name: name["baseline:".len()..].to_string(),
                score: num(f[3])?.ok_or_else(|| bad(i, "baseline without score".into()))?,
            }),
            name => out.rows.push(ParsedRow {
                name: name.to_string(),
                mean: num(f[1])?,
                std: num(f[2])?,
                max: num(f[3])?,
                trials: count(f[4])?,
                failed: count(f[5])?,
            }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn f1_examples() {
        assert_eq!(micro_f1(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert_eq!(micro_f1(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap(), 0.75);
        assert!(micro_f1(&[0], &[0, 1]).is_err());
        assert!(micro_f1(&[], &[]).is_err());
    }

    #[test]
    fn confusion_totals() {
        let c = ConfusionCounts::from_labels(&[0, 2, 1, 1], &[0, 1, 1, 2]).unwrap();
        assert_eq!(c.tp.iter().sum::<u64>() + c.fn_.iter().sum::<u64>(), c.total);
        assert_eq!((c.tp.clone(), c.fp.clone(), c.fn_.clone()), (vec![1, 1, 0], vec![0, 1, 1], vec![0, 1, 1]));
    }

    #[test]
    fn improvement_examples() {
        let i = improvement(73.14, 72.26).unwrap();
        assert!((i.ai - 0.88).abs() < 1e-9 && (i.ir - 1.2178).abs() < 1e-3);
        assert_eq!(improvement(50.0, 50.0).unwrap(), Improvement { ai: 0.0, ir: 0.0 });
        assert!(improvement(1.0, 0.0).is_err());
        assert!(improvement(1.0, -3.0).is_err());
    }

    fn row(name: &str, mean: f64, std: f64, max: f64) -> ReportRow {
        ReportRow {
            name: name.into(),
            mean: Some(mean),
            std: Some(std),
            max: Some(max),
            trials: 10,
            failed: 0,
        }
    }

    #[test]
    fn report_without_baselines() {
        let r = render_report(&[row("HGMN (L)", 0.7123, 0.0101, 0.7314)], None).unwrap();
        assert!(!r.csv.contains("AI") && r.improvement.is_none());
        assert!(r.text.contains("71.23 ± 1.01"));
        let parsed = parse_report_csv(&r.csv).unwrap();
        assert_eq!(parsed.rows[0].mean, Some(71.23));
        assert_eq!(parsed.rows[0].max, Some(73.14));
    }

    #[test]
    fn report_ai_ir_recomputed_from_cells() {
        let rows = [row("HGMN (L)", 0.70, 0.01, 0.7314), row("HGMN (D)", 0.69, 0.02, 0.7201)];
        let bs = [
            Baseline { name: "GCN".into(), score: 72.26 },
            Baseline { name: "GAT".into(), score: 70.0 },
        ];
        let r = render_report(&rows, Some(&bs)).unwrap();
        let p = parse_report_csv(&r.csv).unwrap();
        let p1 = p.rows.iter().filter_map(|r| r.max).fold(f64::MIN, f64::max);
        let p2 = p.baselines.iter().map(|b| b.score).fold(f64::MIN, f64::max);
        let i = improvement(p1, p2).unwrap();
        assert_eq!(p.ai, Some((i.ai * 100.0).round() / 100.0));
        assert_eq!(p.ir, Some((i.ir * 100.0).round() / 100.0));
        assert_eq!(p.ai, Some(0.88));
        assert_eq!(p.ir, Some(1.22));
    }

    #[test]
    fn report_with_failed_row() {
        let r = ReportRow {
            name: "HGMN".into(),
            mean: None,
            std: None,
            max: None,
            trials: 2,
            failed: 2,
        };
        let out = render_report(&[r], Some(&[Baseline { name: "x".into(), score: 1.0 }])).unwrap();
        assert!(out.improvement.is_none());
        assert_eq!(parse_report_csv(&out.csv).unwrap().rows[0].failed, 2);
    }

    #[test]
    fn parse_rejects_garbage() {
        assert!(parse_report_csv("nope\n").is_err());
        assert!(parse_report_csv(&format!("{CSV_HEADER}\na,b\n")).is_err());
    }

    proptest! {
        #[test]
        fn f1_is_accuracy_and_order_free(pairs in prop::collection::vec((0usize..5, 0usize..5), 1..60), rot in 0usize..60) {
            let (p, t): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
            let acc = p.iter().zip(&t).filter(|(a, b)| a == b).count() as f64 / p.len() as f64;
            let f = micro_f1(&p, &t).unwrap();
            prop_assert!((f - acc).abs() < 1e-12);
            let k = rot % p.len();
            let (mut p2, mut t2) = (p.clone(), t.clone());
            p2.rotate_left(k);
            t2.rotate_left(k);
            prop_assert_eq!(micro_f1(&p2, &t2).unwrap(), f);
            prop_assert_eq!(micro_f1(&t, &t).unwrap(), 1.0);
        }

        #[test]
        fn improvement_sign_flips(a in 0.1f64..100.0, b in 0.1f64..100.0) {
            let x = improvement(a, b).unwrap().ai;
            let y = improvement(b, a).unwrap().ai;
            prop_assert_eq!(x, -y);
        }
    }
}
