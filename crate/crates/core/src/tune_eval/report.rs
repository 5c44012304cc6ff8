//! Tab-separated report tables, training curves and ROC plots.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::grid::{canonical, GridOutcome};
use super::metrics::RocCurve;
use crate::error::{Error, Result};
use crate::models::ModelFamily;
use crate::outlier::OutlierReport;
use crate::vectorize::EncoderTag;

/// Everything reported for one (encoder, family) cell.
#[derive(Debug, Clone)]
pub struct CellReport {
    pub encoder: EncoderTag,
    pub family: ModelFamily,
    pub grid: GridOutcome,
    /// ROC of the winning configuration's held-out scores; `None` when the
    /// labels hold a single class.
    pub roc: Option<RocCurve>,
}

impl CellReport {
    pub fn run_name(&self) -> String {
        format!("{}_{}", self.family, self.encoder)
    }
}

pub(crate) fn write_file(out: &Path, rel: &str, contents: &str) -> Result<PathBuf> {
    let path = out.join(rel);
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(PathBuf::from(rel))
}

/// Mean accuracy matrix, encoders as rows and families as columns. Cells
/// that were not run hold `NA`.
pub fn scores_table(cells: &[CellReport], encoders: &[EncoderTag], families: &[ModelFamily]) -> String {
    let mut out = String::from("encoder");
    for f in families {
        write!(out, "\t{f}").unwrap();
    }
    out.push('\n');
    for e in encoders {
        out.push_str(e.as_str());
        for f in families {
            match cells.iter().find(|c| c.encoder == *e && c.family == *f) {
                Some(c) => write!(out, "\t{:.6}", c.grid.best_result().mean_accuracy).unwrap(),
                None => out.push_str("\tNA"),
            }
        }
        out.push('\n');
    }
    out
}

pub fn grid_table(cell: &CellReport) -> String {
    let k = cell.grid.best_result().fold_accuracies.len();
    let mut out = String::from("stage\tstage_name\tconfig");
    for f in 1..=k {
        write!(out, "\tfold_{f}").unwrap();
    }
    out.push_str("\tmean\tselected\n");
    for (i, c) in cell.grid.cells.iter().enumerate() {
        write!(out, "{}\t{}\t{}", c.stage + 1, c.stage_name, canonical(&c.result.hyperparams)).unwrap();
        for a in &c.result.fold_accuracies {
            write!(out, "\t{a:.6}").unwrap();
        }
        writeln!(out, "\t{:.6}\t{}", c.result.mean_accuracy, u8::from(i == cell.grid.best_cell)).unwrap();
    }
    out
}

/// Per-epoch loss and accuracy of every fold of the winning configuration.
pub fn curve_table(cell: &CellReport) -> Option<String> {
    let curves = &cell.grid.best_result().curves;
    if curves.is_empty() {
        return None;
    }
    let mut out = String::from("fold\tepoch\tloss\taccuracy\n");
    for (fold, c) in curves.iter().enumerate() {
        for (epoch, (l, a)) in c.loss.iter().zip(&c.accuracy).enumerate() {
            writeln!(out, "{}\t{}\t{l:.10}\t{a:.6}", fold + 1, epoch + 1).unwrap();
        }
    }
    Some(out)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Standalone SVG of an ROC curve with labeled axes and the AUC in the
/// title.
pub fn roc_svg(title: &str, roc: &RocCurve) -> String {
    const SIZE: f64 = 400.0;
    const PAD: f64 = 60.0;
    let span = SIZE - 2.0 * PAD;
    let px = |x: f64| PAD + x * span;
    let py = |y: f64| SIZE - PAD - y * span;
    let mut s = String::new();
    writeln!(
        s,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">
<title>{} (AUC = {:.4})</title>
<rect x="0" y="0" width="{SIZE}" height="{SIZE}" fill="white"/>
<text x="{}" y="30" text-anchor="middle" font-family="sans-serif" font-size="14">{} (AUC = {:.4})</text>"#,
        xml_escape(title),
        roc.auc,
        SIZE / 2.0,
        xml_escape(title),
        roc.auc
    )
    .unwrap();
    writeln!(
        s,
        r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/>
<line x1="{0}" y1="{1}" x2="{0}" y2="{3}" stroke="black"/>
<line x1="{0}" y1="{1}" x2="{2}" y2="{3}" stroke="gray" stroke-dasharray="4 4"/>"#,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    )
    .unwrap();
    for t in [0.0, 0.25, 0.5, 0.75, 1.0] {
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="10">{t}</text>
<text x="{}" y="{}" text-anchor="end" font-family="sans-serif" font-size="10">{t}</text>"#,
            px(t),
            py(0.0) + 15.0,
            px(0.0) - 6.0,
            py(t) + 3.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">False positive rate</text>
<text x="15" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 15 {})">True positive rate</text>"#,
        SIZE / 2.0,
        SIZE - 20.0,
        SIZE / 2.0,
        SIZE / 2.0
    )
    .unwrap();
    let pts: Vec<String> = roc
        .points
        .iter()
        .map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y)))
        .collect();
    writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>
</svg>"#,
        pts.join(" ")
    )
    .unwrap();
    s
}

pub fn outlier_table(reports: &[(usize, &OutlierReport)]) -> String {
    let mut out = String::from("encoder\tfold\trows_before\trows_after\tpercent_removed\n");
    for (fold, r) in reports {
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{:.4}",
            r.encoder,
            fold + 1,
            r.rows_before,
            r.rows_after,
            r.percent_removed()
        )
        .unwrap();
    }
    out
}

/// Writes all report files under `out` and returns their paths relative to
/// it, in write order.
pub fn emit_reports(
    cells: &[CellReport],
    encoders: &[EncoderTag],
    families: &[ModelFamily],
    out: &Path,
) -> Result<Vec<PathBuf>> {
    if cells.is_empty() {
        return Err(Error::Empty("no results to report".into()));
    }
    let mut written = vec![write_file(out, "reports/scores.tsv", &scores_table(cells, encoders, families))?];

    let mut auc = String::from("encoder\tfamily\tauc\n");
    let mut leakage = format!("encoder\tfamily\t{}\n", super::cv::FoldAudit::TSV_HEADER);
    let mut outliers: Vec<(usize, &OutlierReport)> = Vec::new();
    let mut seen_encoders = Vec::new();
    for cell in cells {
        let name = cell.run_name();
        written.push(write_file(out, &format!("reports/grid_{name}.tsv"), &grid_table(cell))?);
        if let Some(t) = curve_table(cell) {
            written.push(write_file(out, &format!("curves/{name}.tsv"), &t)?);
        }
        match &cell.roc {
            Some(roc) => {
                let title = format!("ROC {} + {}", cell.encoder, cell.family);
                written.push(write_file(out, &format!("roc/{name}.svg"), &roc_svg(&title, roc))?);
                writeln!(auc, "{}\t{}\t{:.6}", cell.encoder, cell.family, roc.auc).unwrap();
            }
            None => writeln!(auc, "{}\t{}\tNA", cell.encoder, cell.family).unwrap(),
        }
        let best = cell.grid.best_result();
        for a in &best.audits {
            writeln!(leakage, "{}\t{}\t{}", cell.encoder, cell.family, a.tsv_line()).unwrap();
        }
        if !seen_encoders.contains(&cell.encoder) {
            seen_encoders.push(cell.encoder);
            outliers.extend(best.outliers.iter().enumerate());
        }
    }
    written.push(write_file(out, "reports/auc.tsv", &auc)?);
    written.push(write_file(out, "reports/leakage.tsv", &leakage)?);
    written.push(write_file(out, "reports/outliers.tsv", &outlier_table(&outliers))?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tune_eval::cv::CVResult;
    use crate::tune_eval::grid::{GridCell, Hyperparams};
    use crate::tune_eval::metrics::roc_curve;

    fn cell(encoder: EncoderTag, family: ModelFamily, mean: f64) -> CellReport {
        let result = CVResult {
            encoder,
            family,
            fold_accuracies: vec![mean; 3],
            mean_accuracy: mean,
            ..Default::default()
        };
        CellReport {
            encoder,
            family,
            grid: GridOutcome {
                best: Hyperparams::new(),
                best_cell: 0,
                cells: vec![GridCell {
                    stage: 0,
                    stage_name: "only".into(),
                    result,
                }],
            },
            roc: Some(roc_curve(&[0.9, 0.4, 0.4, 0.1], &[1, 1, 0, 0]).unwrap()),
        }
    }

    #[test]
    fn full_matrix_has_fifteen_cells() {
        let encoders = [EncoderTag::Count, EncoderTag::Tfidf, EncoderTag::W2v];
        let cells: Vec<CellReport> = encoders
            .iter()
            .flat_map(|&e| ModelFamily::ALL.iter().map(move |&f| cell(e, f, 0.9)))
            .collect();
        let t = scores_table(&cells, &encoders, &ModelFamily::ALL);
        let values: Vec<&str> = t.lines().skip(1).flat_map(|l| l.split('\t').skip(1)).collect();
        assert_eq!(values.len(), 15);
        assert!(values.iter().all(|v| *v == "0.900000"));
    }

    #[test]
    fn empty_results_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(emit_reports(&[], &[], &[], dir.path()).is_err());
    }

    #[test]
    fn svg_is_well_formed() {
        let c = cell(EncoderTag::Count, ModelFamily::Svm, 0.5);
        let svg = roc_svg("ROC <count> & \"svm\"", c.roc.as_ref().unwrap());
        let doc = roxmltree::Document::parse(&svg).unwrap();
        assert_eq!(doc.root_element().tag_name().name(), "svg");
        assert!(svg.contains("AUC = 0.8750"));
    }

    #[test]
    fn emits_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let cells = vec![cell(EncoderTag::Tfidf, ModelFamily::LogReg, 0.75)];
        let files = emit_reports(&cells, &[EncoderTag::Tfidf], &[ModelFamily::LogReg], dir.path()).unwrap();
        for f in ["reports/scores.tsv", "reports/grid_logistic_tfidf.tsv", "roc/logistic_tfidf.svg"] {
            assert!(files.contains(&PathBuf::from(f)), "{f}");
            assert!(dir.path().join(f).exists());
        }
    }
}
