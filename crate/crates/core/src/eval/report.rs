//! Report files: confusion CSV, rates CSV, ROC CSV with an AUC sidecar,
//! ROC SVG and a plain-text CV summary. Output bytes depend only on the
//! input values.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::eval::confusion::{format_pct, ClassRates, ConfusionMatrix};
use crate::eval::cv::CvReport;
use crate::eval::roc::RocCurve;
use crate::ingest::fmt_real;
use crate::types::GaitPhase;

pub fn write_confusion_csv<W: Write>(mut w: W, cm: &ConfusionMatrix) -> io::Result<()> {
    let names: Vec<&str> = GaitPhase::ALL.iter().map(|p| p.name()).collect();
    writeln!(w, "true\\predicted,{}", names.join(","))?;
    for t in GaitPhase::ALL {
        let row: Vec<String> = GaitPhase::ALL.iter().map(|&p| cm.get(t, p).to_string()).collect();
        writeln!(w, "{},{}", t, row.join(","))?;
    }
    Ok(())
}

fn raw(rate: Option<f64>) -> String {
    rate.map_or_else(|| "n/a".to_string(), fmt_real)
}

pub fn write_rates_csv<W: Write>(mut w: W, rates: &ClassRates) -> io::Result<()> {
    writeln!(w, "phase,ppv,fdr,tpr,fnr,ppv_pct,fdr_pct,tpr_pct,fnr_pct")?;
    for p in GaitPhase::ALL {
        let r = rates.get(p);
        let v = [r.ppv, r.fdr, r.tpr, r.fnr];
        let raws: Vec<String> = v.iter().map(|x| raw(*x)).collect();
        let pcts: Vec<String> = v.iter().map(|x| format_pct(*x)).collect();
        writeln!(w, "{p},{},{}", raws.join(","), pcts.join(","))?;
    }
    Ok(())
}

pub fn write_roc_csv<W: Write>(mut w: W, curve: &RocCurve) -> io::Result<()> {
    writeln!(w, "fpr,tpr,threshold")?;
    for p in &curve.points {
        let threshold = if p.threshold.is_infinite() {
            "inf".to_string()
        } else {
            fmt_real(p.threshold)
        };
        writeln!(w, "{},{},{}", fmt_real(p.fpr), fmt_real(p.tpr), threshold)?;
    }
    Ok(())
}

/// Sidecar metadata for a ROC CSV.
pub fn write_roc_meta<W: Write>(mut w: W, target: GaitPhase, curve: &RocCurve) -> io::Result<()> {
    writeln!(w, "target={target}")?;
    writeln!(w, "points={}", curve.points.len())?;
    writeln!(w, "auc={}", fmt_real(curve.auc))
}

pub const SVG_SIZE: f64 = 512.0;
const SVG_MARGIN: f64 = 40.0;

/// 512x512 SVG with unit axes, the chance diagonal and the ROC polyline.
pub fn roc_svg(target: GaitPhase, curve: &RocCurve) -> String {
    let span = SVG_SIZE - 2.0 * SVG_MARGIN;
    let px = |fpr: f64| SVG_MARGIN + fpr * span;
    let py = |tpr: f64| SVG_SIZE - SVG_MARGIN - tpr * span;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="512" height="512" viewBox="0 0 512 512">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="512" height="512" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{m}" y="{m}" width="{span}" height="{span}" fill="none" stroke="black"/>"#,
        m = SVG_MARGIN
    );
    let _ = writeln!(
        s,
        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="4 4"/>"#,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    for t in [0.0, 0.5, 1.0] {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="middle">{t}</text>"#,
            px(t),
            SVG_SIZE - SVG_MARGIN + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="11" text-anchor="end">{t}</text>"#,
            SVG_MARGIN - 6.0,
            py(t) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="256" y="{:.2}" font-size="12" text-anchor="middle">False positive rate</text>"#,
        SVG_SIZE - 8.0
    );
    let _ = writeln!(
        s,
        r#"<text x="12" y="256" font-size="12" text-anchor="middle" transform="rotate(-90 12 256)">True positive rate</text>"#
    );
    let _ = writeln!(
        s,
        r#"<text x="256" y="24" font-size="13" text-anchor="middle">{target} (AUC {:.4})</text>"#,
        curve.auc
    );
    let pts: Vec<String> = curve
        .points
        .iter()
        .map(|p| format!("{:.2},{:.2}", px(p.fpr), py(p.tpr)))
        .collect();
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        pts.join(" ")
    );
    s.push_str("</svg>\n");
    s
}

pub fn write_cv_summary<W: Write>(mut w: W, report: &CvReport) -> io::Result<()> {
    writeln!(w, "k={}", report.k)?;
    writeln!(w, "rows={}", report.confusion.total())?;
    writeln!(w, "accuracy={}", fmt_real(report.accuracy))?;
    writeln!(w, "accuracy_pct={}", format_pct(Some(report.accuracy)))?;
    for (f, a) in report.fold_accuracies.iter().enumerate() {
        writeln!(w, "fold{f}_accuracy={}", fmt_real(*a))?;
    }
    writeln!(w, "all_converged={}", report.all_converged())
}
