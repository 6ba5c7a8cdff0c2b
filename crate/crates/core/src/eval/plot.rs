use std::fmt::Write as _;

use super::experiments::{EvalReport, ExperimentReport};

const COLORS: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn fmt_threshold(t: f64) -> String {
    if t.is_infinite() {
        if t > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        t.to_string()
    }
}

/// `experiment,approach,threshold,fpr,tpr`, one line per ROC point.
pub fn roc_csv(experiments: &[ExperimentReport]) -> String {
    let mut s = String::from("experiment,approach,threshold,fpr,tpr\n");
    for e in experiments {
        for r in &e.reports {
            for p in &r.roc {
                let name = if r.name.contains(',') {
                    format!("\"{}\"", r.name)
                } else {
                    r.name.clone()
                };
                writeln!(
                    s,
                    "{},{},{},{},{}",
                    e.experiment,
                    name,
                    fmt_threshold(p.threshold),
                    p.fpr,
                    p.tpr
                )
                .expect("write to string");
            }
        }
    }
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Static ROC plot: unit axes, chance diagonal, one polyline per report
/// and a legend with each AUC.
pub fn roc_svg(title: &str, curves: &[&EvalReport]) -> String {
    let (w, h) = (520.0, 440.0);
    let (left, top, size) = (60.0, 40.0, 340.0);
    let x = |v: f64| left + v * size;
    let y = |v: f64| top + (1.0 - v) * size;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        left + size / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{size}" height="{size}" fill="none" stroke="black"/>"#
    );
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let _ = writeln!(
            s,
            r#"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="black"/><text x="{0:.1}" y="{3:.1}" text-anchor="middle">{4:.1}</text>"#,
            x(v),
            y(0.0),
            y(0.0) + 5.0,
            y(0.0) + 18.0,
            v
        );
        let _ = writeln!(
            s,
            r#"<line x1="{0:.1}" y1="{2:.1}" x2="{1:.1}" y2="{2:.1}" stroke="black"/><text x="{3:.1}" y="{4:.1}" text-anchor="end">{5:.1}</text>"#,
            x(0.0) - 5.0,
            x(0.0),
            y(v),
            x(0.0) - 8.0,
            y(v) + 4.0,
            v
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">False positive rate</text>"#,
        left + size / 2.0,
        top + size + 36.0
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">True positive rate</text>"#,
        top + size / 2.0
    );
    let _ = writeln!(
        s,
        r#"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="gray" stroke-dasharray="4 4"/>"#,
        x(0.0),
        y(0.0),
        x(1.0),
        y(1.0)
    );
    for (i, r) in curves.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = r
            .roc
            .iter()
            .map(|p| format!("{:.2},{:.2}", x(p.fpr), y(p.tpr)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 14.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{color}" stroke-width="2"/><text x="{3}" y="{4}">{5} ({6:.3})</text>"#,
            left + size + 10.0,
            ly,
            left + size + 28.0,
            left + size + 32.0,
            ly + 4.0,
            escape(&r.name),
            r.auc
        );
    }
    s.push_str("</svg>\n");
    s
}
