//! Tables, CSV/SVG artifacts and report comparison.
//!
//! Everything here is derived from the fold-level data persisted in a
//! [`CvReport`], so a saved `report.json` is enough to regenerate it.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::eval::cv::{ClassifierReport, CvReport};
use crate::eval::{t_test, Averaging, EvalError};

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Mean AUC per class over runs, `None` when undefined in every run.
pub fn mean_auc(cr: &ClassifierReport, class: usize) -> Option<f64> {
    let aucs: Vec<f64> = cr.runs.iter().filter_map(|r| r.roc[class].auc).collect();
    (!aucs.is_empty()).then(|| mean(&aucs))
}

/// Confusion matrix summed over runs.
pub fn pooled_confusion(cr: &ClassifierReport) -> Vec<Vec<usize>> {
    let k = cr.runs[0].confusion.len();
    let mut m = vec![vec![0; k]; k];
    for r in &cr.runs {
        for (i, row) in r.confusion.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                m[i][j] += v;
            }
        }
    }
    m
}

/// Plain-text summary: `mean(std)` over run means, in percent, with the
/// fold-level std in brackets.
pub fn summary_table(report: &CvReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "features: {}", report.features);
    let _ = writeln!(
        s,
        "plan: k={} runs={} base_seed={} grouping={:?}",
        report.plan.k, report.plan.runs, report.plan.base_seed, report.plan.grouping
    );
    let counts: Vec<String> = report
        .class_names
        .iter()
        .zip(&report.class_counts)
        .map(|(n, c)| format!("{n}={c}"))
        .collect();
    let _ = writeln!(s, "classes: {}", counts.join(" "));
    let _ = writeln!(
        s,
        "{:<12} {:>18} {:>18} {:>18} {:>8}",
        "classifier", "weighted F1", "macro F1", "micro F1", "AUC"
    );
    for cr in &report.classifiers {
        let cell = |a: Averaging| {
            let g = cr.summary.get(a);
            format!("{:.1}({:.1}) [{:.1}]", 100.0 * g.mean, 100.0 * g.std, 100.0 * g.fold_std)
        };
        let aucs: Vec<f64> = (0..report.class_names.len())
            .filter_map(|c| mean_auc(cr, c))
            .collect();
        let auc = if aucs.is_empty() {
            "-".to_owned()
        } else {
            format!("{:.4}", mean(&aucs))
        };
        let _ = writeln!(
            s,
            "{:<12} {:>18} {:>18} {:>18} {:>8}",
            cr.name,
            cell(Averaging::Weighted),
            cell(Averaging::Macro),
            cell(Averaging::Micro),
            auc
        );
    }
    s
}

pub fn summary_csv(report: &CvReport) -> String {
    let mut s = String::from("classifier,averaging,mean,std_runs,fold_mean,std_folds\n");
    for cr in &report.classifiers {
        for a in Averaging::ALL {
            let g = cr.summary.get(a);
            let _ = writeln!(
                s,
                "{},{},{:?},{:?},{:?},{:?}",
                cr.name,
                a.name(),
                g.mean,
                g.std,
                g.fold_mean,
                g.fold_std
            );
        }
    }
    s
}

/// One row per (run, true class); columns are predicted classes.
pub fn confusion_csv(cr: &ClassifierReport, class_names: &[String]) -> String {
    let mut s = String::from("run,true");
    for n in class_names {
        let _ = write!(s, ",pred_{n}");
    }
    s.push('\n');
    for r in &cr.runs {
        for (i, row) in r.confusion.iter().enumerate() {
            let _ = write!(s, "{},{}", r.run, class_names[i]);
            for v in row {
                let _ = write!(s, ",{v}");
            }
            s.push('\n');
        }
    }
    s
}

pub fn roc_csv(cr: &ClassifierReport) -> String {
    let mut s = String::from("run,class,auc,fpr,tpr\n");
    for r in &cr.runs {
        for roc in &r.roc {
            let auc = roc.auc.map(|a| format!("{a:?}")).unwrap_or_default();
            for (fpr, tpr) in &roc.points {
                let _ = writeln!(s, "{},{},{},{:?},{:?}", r.run, roc.class, auc, fpr, tpr);
            }
        }
    }
    s
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

/// Row-normalized heatmap of the run-pooled confusion matrix.
pub fn confusion_svg(cr: &ClassifierReport, class_names: &[String]) -> String {
    let m = pooled_confusion(cr);
    let k = m.len();
    let cell = 80.0;
    let (ox, oy) = (110.0, 50.0);
    let w = ox + cell * k as f64 + 20.0;
    let h = oy + cell * k as f64 + 50.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="13">"##
    );
    let _ = writeln!(
        s,
        r##"<text x="{ox}" y="20">{} confusion (pooled over {} runs)</text>"##,
        cr.name,
        cr.runs.len()
    );
    for (i, row) in m.iter().enumerate() {
        let total: usize = row.iter().sum();
        for (j, &v) in row.iter().enumerate() {
            let frac = if total > 0 { v as f64 / total as f64 } else { 0.0 };
            let shade = (255.0 * (1.0 - frac)).round() as u8;
            let (x, y) = (ox + cell * j as f64, oy + cell * i as f64);
            let ink = if frac > 0.5 { "#fff" } else { "#000" };
            let _ = writeln!(
                s,
                r##"<rect x="{x}" y="{y}" width="{cell}" height="{cell}" fill="rgb({shade},{shade},255)" stroke="#666"/>"##
            );
            let _ = writeln!(
                s,
                r##"<text x="{}" y="{}" text-anchor="middle" fill="{ink}">{v} ({:.2})</text>"##,
                x + cell / 2.0,
                y + cell / 2.0 + 4.0,
                frac
            );
        }
        let _ = writeln!(
            s,
            r##"<text x="{}" y="{}" text-anchor="end">{}</text>"##,
            ox - 6.0,
            oy + cell * i as f64 + cell / 2.0 + 4.0,
            class_names[i]
        );
    }
    for (j, n) in class_names.iter().enumerate() {
        let _ = writeln!(
            s,
            r##"<text x="{}" y="{}" text-anchor="middle">{n}</text>"##,
            ox + cell * j as f64 + cell / 2.0,
            oy + cell * k as f64 + 18.0
        );
    }
    let _ = writeln!(
        s,
        r##"<text x="{}" y="{}" text-anchor="middle">predicted</text>"##,
        ox + cell * k as f64 / 2.0,
        oy + cell * k as f64 + 38.0
    );
    s.push_str("</svg>\n");
    s
}

/// One-vs-rest ROC curves of run 0.
pub fn roc_svg(cr: &ClassifierReport) -> String {
    let size = 300.0;
    let (ox, oy) = (50.0, 30.0);
    let px = |fpr: f64| ox + fpr * size;
    let py = |tpr: f64| oy + (1.0 - tpr) * size;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif" font-size="12">"##,
        ox + size + 170.0,
        oy + size + 40.0
    );
    let _ = writeln!(s, r##"<text x="{ox}" y="18">{} ROC (run 0)</text>"##, cr.name);
    let _ = writeln!(
        s,
        r##"<rect x="{ox}" y="{oy}" width="{size}" height="{size}" fill="none" stroke="#000"/>"##
    );
    let _ = writeln!(
        s,
        r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#aaa" stroke-dasharray="4 4"/>"##,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    let _ = writeln!(
        s,
        r##"<text x="{}" y="{}" text-anchor="middle">false positive rate</text>"##,
        ox + size / 2.0,
        oy + size + 30.0
    );
    for (c, roc) in cr.runs[0].roc.iter().enumerate() {
        let colour = PALETTE[c % PALETTE.len()];
        if !roc.points.is_empty() {
            let pts: Vec<String> = roc
                .points
                .iter()
                .map(|&(f, t)| format!("{:.2},{:.2}", px(f), py(t)))
                .collect();
            let _ = writeln!(
                s,
                r##"<polyline points="{}" fill="none" stroke="{colour}" stroke-width="2"/>"##,
                pts.join(" ")
            );
        }
        let label = match roc.auc {
            Some(a) => format!("{} AUC={a:.4}", roc.class),
            None => format!("{} AUC undefined", roc.class),
        };
        let _ = writeln!(
            s,
            r##"<text x="{}" y="{}" fill="{colour}">{label}</text>"##,
            ox + size + 10.0,
            oy + 20.0 + 18.0 * c as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

fn put(dir: &Path, name: &str, body: &str, written: &mut Vec<PathBuf>) -> io::Result<()> {
    let p = dir.join(name);
    fs::write(&p, body)?;
    written.push(p);
    Ok(())
}

/// Writes `report.json`, `summary.txt`, `summary.csv` and per-classifier
/// confusion/ROC CSV and SVG files into `dir`.
pub fn write_artifacts(report: &CvReport, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    put(dir, "report.json", &report.to_json(), &mut written)?;
    write_derived(report, dir, &mut written)?;
    Ok(written)
}

/// Everything except `report.json`, for regenerating plots from a saved
/// report.
pub fn write_derived(report: &CvReport, dir: &Path, written: &mut Vec<PathBuf>) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    put(dir, "summary.txt", &summary_table(report), written)?;
    put(dir, "summary.csv", &summary_csv(report), written)?;
    for cr in &report.classifiers {
        let stem = cr.name.replace('#', "_");
        put(
            dir,
            &format!("{stem}_confusion.csv"),
            &confusion_csv(cr, &report.class_names),
            written,
        )?;
        put(
            dir,
            &format!("{stem}_confusion.svg"),
            &confusion_svg(cr, &report.class_names),
            written,
        )?;
        put(dir, &format!("{stem}_roc.csv"), &roc_csv(cr), written)?;
        put(dir, &format!("{stem}_roc.svg"), &roc_svg(cr), written)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub classifier: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub features_a: String,
    pub features_b: String,
    pub averaging: Averaging,
    pub paired: bool,
    pub alpha: f64,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "A: {}", self.features_a);
        let _ = writeln!(s, "B: {}", self.features_b);
        let _ = writeln!(
            s,
            "{} {} F1 over fold scores, * = p < {}",
            if self.paired { "paired t-test" } else { "Welch t-test" },
            self.averaging.name(),
            self.alpha
        );
        let _ = writeln!(
            s,
            "{:<12} {:>8} {:>8} {:>9} {:>10}",
            "classifier", "A", "B", "t", "p"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<12} {:>8.4} {:>8.4} {:>9.3} {:>10.3e}{}",
                r.classifier,
                r.mean_a,
                r.mean_b,
                r.statistic,
                r.p_value,
                if r.significant { " *" } else { "" }
            );
        }
        s
    }
}

/// Per-classifier t-test on the fold scores of two reports with the same
/// plan, seeds and samples. Classifiers are matched by name.
pub fn compare(
    a: &CvReport,
    b: &CvReport,
    averaging: Averaging,
    paired: bool,
    alpha: f64,
) -> Result<Comparison, EvalError> {
    if a.seeds != b.seeds {
        return Err(EvalError::Incomparable(format!(
            "seeds differ: {:?} vs {:?}",
            a.seeds, b.seeds
        )));
    }
    if a.plan != b.plan {
        return Err(EvalError::Incomparable(format!(
            "plans differ: {:?} vs {:?}",
            a.plan, b.plan
        )));
    }
    if a.sample_ids != b.sample_ids || a.labels != b.labels {
        return Err(EvalError::Incomparable("different samples or labels".into()));
    }
    if paired && a.fold_assignments != b.fold_assignments {
        return Err(EvalError::Incomparable(
            "fold partitions differ; paired test needs shared folds".into(),
        ));
    }
    let mut rows = Vec::new();
    for ca in &a.classifiers {
        let Some(cb) = b.classifier(&ca.name) else {
            log::warn!("classifier {} only in the first report; skipped", ca.name);
            continue;
        };
        let sa = ca.fold_scores(averaging);
        let sb = cb.fold_scores(averaging);
        let t = t_test(&sa, &sb, paired)?;
        rows.push(ComparisonRow {
            classifier: ca.name.clone(),
            mean_a: mean(&sa),
            mean_b: mean(&sb),
            statistic: t.statistic,
            df: t.df,
            p_value: t.p_value,
            significant: t.p_value < alpha,
        });
    }
    if rows.is_empty() {
        return Err(EvalError::Incomparable("no classifier in common".into()));
    }
    Ok(Comparison {
        features_a: a.features.clone(),
        features_b: b.features.clone(),
        averaging,
        paired,
        alpha,
        rows,
    })
}
