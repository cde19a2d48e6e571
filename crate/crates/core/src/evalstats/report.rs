use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::llm::Target;
use crate::pipeline::RunRecord;

use super::metrics::{summarize, MetricsSummary, MissingGroundTruth};
use super::stats::{mann_whitney_u, z_test_proportions, StatTestResult};

/// Metrics for one (variant, model) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Cell {
    pub variant: String,
    pub model: String,
    pub target: Target,
    pub structured: bool,
    pub refinement: bool,
    pub inline_data: bool,
    pub summary: MetricsSummary,
}

/// Groups records by (variant, model), sorted by model then variant.
pub fn build_cells(records: &[RunRecord], ground_truths: &BTreeMap<String, f64>) -> Result<Vec<Cell>, MissingGroundTruth> {
    let mut groups: BTreeMap<(&str, &str), Vec<RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((&r.model, &r.variant)).or_default().push(r.clone());
    }
    groups
        .into_iter()
        .map(|((model, variant), recs)| {
            let first = &recs[0];
            Ok(Cell {
                variant: variant.to_string(),
                model: model.to_string(),
                target: first.target,
                structured: first.structured,
                refinement: first.refinement,
                inline_data: first.inline_data,
                summary: summarize(&recs, ground_truths)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Executed share, z-test.
    Success,
    /// RelErr of executed specs, U test and effect size.
    Relerr,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::Success => "success",
            Metric::Relerr => "relerr",
        }
    }
}

/// One requested test of "variant `a` is better than variant `b`".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonSpec {
    pub a: String,
    pub b: String,
    pub metric: Metric,
    /// Restrict to one model; otherwise every model having both cells.
    pub model: Option<String>,
}

/// ```toml
/// [[comparison]]
/// a = "Ampl4"
/// b = "Python4"
/// metric = "success"
/// ```
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonConfig {
    #[serde(default, rename = "comparison")]
    pub comparisons: Vec<ComparisonSpec>,
}

impl ComparisonConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub model: String,
    pub metric: Metric,
    pub result: Option<StatTestResult>,
    /// Why no test was run.
    pub note: Option<String>,
}

pub fn compare(cells: &[Cell], config: &ComparisonConfig) -> Vec<Comparison> {
    let find = |v: &str, m: &str| cells.iter().find(|c| c.variant == v && c.model == m);
    let mut out = Vec::new();
    for spec in &config.comparisons {
        let models: Vec<String> = match &spec.model {
            Some(m) => vec![m.clone()],
            None => {
                let mut ms: Vec<String> = cells
                    .iter()
                    .filter(|c| c.variant == spec.a && find(&spec.b, &c.model).is_some())
                    .map(|c| c.model.clone())
                    .collect();
                ms.sort();
                ms.dedup();
                ms
            }
        };
        if models.is_empty() {
            out.push(Comparison {
                a: spec.a.clone(),
                b: spec.b.clone(),
                model: String::new(),
                metric: spec.metric,
                result: None,
                note: Some("no model has both cells".into()),
            });
        }
        for model in models {
            let (result, note) = match (find(&spec.a, &model), find(&spec.b, &model)) {
                (Some(a), Some(b)) => run_test(spec.metric, &a.summary, &b.summary),
                _ => (None, Some("cell missing".to_string())),
            };
            out.push(Comparison {
                a: spec.a.clone(),
                b: spec.b.clone(),
                model,
                metric: spec.metric,
                result,
                note,
            });
        }
    }
    out
}

fn run_test(metric: Metric, a: &MetricsSummary, b: &MetricsSummary) -> (Option<StatTestResult>, Option<String>) {
    let r = match metric {
        Metric::Success => z_test_proportions(a.n_exec as u64, a.n_total as u64, b.n_exec as u64, b.n_total as u64),
        Metric::Relerr => mann_whitney_u(&a.relerrs, &b.relerrs),
    };
    match r {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportDocument {
    pub markdown: String,
    pub cells_csv: String,
    pub comparisons_csv: String,
}

/// Cell pairs that differ only in target, as (AMPL cell, external cell).
fn delta_pairs(cells: &[Cell]) -> Vec<(&Cell, &Cell)> {
    let mut out = Vec::new();
    for a in cells.iter().filter(|c| c.target == Target::Ampl) {
        let partner = cells.iter().find(|b| {
            b.target == Target::ExternalRuntime
                && b.model == a.model
                && b.structured == a.structured
                && b.refinement == a.refinement
                && b.inline_data == a.inline_data
        });
        if let Some(b) = partner {
            out.push((a, b));
        }
    }
    out
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.digits$}"))
}

fn signed_int(v: i64) -> String {
    format!("{v:+}")
}

fn diff(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    Some(a? - b?)
}

fn csv_num(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v}"))
}

const CSV_HEADER: &str =
    "row,variant,model,target,structured,refinement,inline_data,n_total,n_exec,success_rate,n_ce,n_re,relerr_mean,relerr_median,relerr_std,n_zero,n_undefined\n";

/// Markdown tables plus CSV forms. Output depends only on the inputs.
pub fn report(cells: &[Cell], comparisons: &[Comparison]) -> ReportDocument {
    let pairs = delta_pairs(cells);
    let mut md = String::from("# Results\n\n## Executability\n\n");
    md.push_str("| Variant | Model | Total | #Exec | Success | #CE | #RE |\n|---|---|---:|---:|---:|---:|---:|\n");
    for c in cells {
        let s = &c.summary;
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {:.1}% | {} | {} |",
            c.variant,
            c.model,
            s.n_total,
            s.n_exec,
            100.0 * s.success_rate,
            s.n_ce,
            s.n_re
        );
    }
    for (a, b) in &pairs {
        let (x, y) = (&a.summary, &b.summary);
        let d = |p: usize, q: usize| signed_int(p as i64 - q as i64);
        let _ = writeln!(
            md,
            "| {} vs. {} (Δ) | {} | {} | {} | {:+.1}% | {} | {} |",
            a.variant,
            b.variant,
            a.model,
            d(x.n_total, y.n_total),
            d(x.n_exec, y.n_exec),
            100.0 * (x.success_rate - y.success_rate),
            d(x.n_ce, y.n_ce),
            d(x.n_re, y.n_re)
        );
    }

    md.push_str("\n## Relative error\n\n");
    md.push_str("| Variant | Model | Mean | Med | Std | #Zero | #Undef |\n|---|---|---:|---:|---:|---:|---:|\n");
    for c in cells {
        let s = &c.summary;
        let _ = writeln!(
            md,
            "| {} | {} | {} | {} | {} | {} | {} |",
            c.variant,
            c.model,
            opt(s.relerr_mean, 3),
            opt(s.relerr_median, 3),
            opt(s.relerr_std, 3),
            s.n_zero,
            s.n_undefined
        );
    }
    for (a, b) in &pairs {
        let (x, y) = (&a.summary, &b.summary);
        let sd = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:+.3}"));
        let _ = writeln!(
            md,
            "| {} vs. {} (Δ) | {} | {} | {} | {} | {} | {} |",
            a.variant,
            b.variant,
            a.model,
            sd(diff(x.relerr_mean, y.relerr_mean)),
            sd(diff(x.relerr_median, y.relerr_median)),
            sd(diff(x.relerr_std, y.relerr_std)),
            signed_int(x.n_zero as i64 - y.n_zero as i64),
            signed_int(x.n_undefined as i64 - y.n_undefined as i64)
        );
    }

    let mut cmp_csv = String::from("a,b,model,metric,test,statistic,p_value,p_rounded,a12,a12_magnitude,direction,significant,degenerate,exact,note\n");
    if !comparisons.is_empty() {
        md.push_str("\n## Comparisons\n\n");
        md.push_str("| A | B | Model | Metric | Test | Statistic | p | p (2 dp) | Â12 | Magnitude | A better |\n|---|---|---|---|---|---:|---:|---:|---:|---|---|\n");
        for c in comparisons {
            match &c.result {
                Some(r) => {
                    let _ = writeln!(
                        md,
                        "| {} | {} | {} | {} | {} | {:.4} | {:.3e} | {:.2} | {} | {} | {} |",
                        c.a,
                        c.b,
                        c.model,
                        c.metric.as_str(),
                        r.test.as_str(),
                        r.statistic,
                        r.p_value,
                        r.p_value,
                        opt(r.a12, 2),
                        r.a12_magnitude.map_or("-", |m| m.as_str()),
                        if r.significant() { "yes" } else { "no" }
                    );
                    let _ = writeln!(
                        cmp_csv,
                        "{},{},{},{},{},{},{},{:.2},{},{},{},{},{},{},",
                        c.a,
                        c.b,
                        c.model,
                        c.metric.as_str(),
                        r.test.as_str(),
                        r.statistic,
                        r.p_value,
                        r.p_value,
                        csv_num(r.a12),
                        r.a12_magnitude.map_or("", |m| m.as_str()),
                        match r.direction {
                            super::stats::Direction::A => "a",
                            super::stats::Direction::B => "b",
                            super::stats::Direction::Neither => "neither",
                        },
                        r.significant(),
                        r.degenerate,
                        r.exact
                    );
                }
                None => {
                    let note = c.note.as_deref().unwrap_or("");
                    let _ = writeln!(
                        md,
                        "| {} | {} | {} | {} | - | - | - | - | - | - | {} |",
                        c.a,
                        c.b,
                        c.model,
                        c.metric.as_str(),
                        note
                    );
                    let _ = writeln!(
                        cmp_csv,
                        "{},{},{},{},,,,,,,,,,,{}",
                        c.a,
                        c.b,
                        c.model,
                        c.metric.as_str(),
                        note.replace(',', ";")
                    );
                }
            }
        }
    }

    let mut csv = String::from(CSV_HEADER);
    for c in cells {
        let s = &c.summary;
        let _ = writeln!(
            csv,
            "cell,{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.variant,
            c.model,
            c.target.as_str(),
            c.structured,
            c.refinement,
            c.inline_data,
            s.n_total,
            s.n_exec,
            s.success_rate,
            s.n_ce,
            s.n_re,
            csv_num(s.relerr_mean),
            csv_num(s.relerr_median),
            csv_num(s.relerr_std),
            s.n_zero,
            s.n_undefined
        );
    }
    for (a, b) in &pairs {
        let (x, y) = (&a.summary, &b.summary);
        let d = |p: usize, q: usize| p as i64 - q as i64;
        let _ = writeln!(
            csv,
            "delta,{}-{},{},,{},{},{},{},{},{},{},{},{},{},{},{},{}",
            a.variant,
            b.variant,
            a.model,
            a.structured,
            a.refinement,
            a.inline_data,
            d(x.n_total, y.n_total),
            d(x.n_exec, y.n_exec),
            x.success_rate - y.success_rate,
            d(x.n_ce, y.n_ce),
            d(x.n_re, y.n_re),
            csv_num(diff(x.relerr_mean, y.relerr_mean)),
            csv_num(diff(x.relerr_median, y.relerr_median)),
            csv_num(diff(x.relerr_std, y.relerr_std)),
            d(x.n_zero, y.n_zero),
            d(x.n_undefined, y.n_undefined)
        );
    }
    ReportDocument {
        markdown: md,
        cells_csv: csv,
        comparisons_csv: cmp_csv,
    }
}
