//! CSV, JSON and SVG output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::experiment::{ResultRow, TargetRecord};
use crate::BenchError;

pub const CSV_HEADER: [&str; 10] = [
    "method",
    "family",
    "dims",
    "N",
    "trial",
    "seed",
    "ness",
    "jsd",
    "evidence_mse",
    "wall_time_seconds",
];

/// Writes rows as CSV. The header is written even when `rows` is empty.
pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.method.clone(),
            r.family.clone(),
            r.dims.to_string(),
            r.n.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.ness.to_string(),
            r.jsd.to_string(),
            r.evidence_mse.to_string(),
            r.wall_time_seconds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_targets(targets: &[TargetRecord], path: &Path) -> Result<(), BenchError> {
    let text = serde_json::to_string_pretty(targets)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Ness,
    Jsd,
    EvidenceMse,
    WallTime,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Ness, Metric::Jsd, Metric::EvidenceMse, Metric::WallTime];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Ness => "ness",
            Metric::Jsd => "jsd",
            Metric::EvidenceMse => "evidence_mse",
            Metric::WallTime => "wall_time_seconds",
        }
    }

    pub fn value(self, row: &ResultRow) -> f64 {
        match self {
            Metric::Ness => row.ness,
            Metric::Jsd => row.jsd,
            Metric::EvidenceMse => row.evidence_mse,
            Metric::WallTime => row.wall_time_seconds,
        }
    }
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// (N, q25, median, q75) for one curve.
pub type CurvePoint = (usize, f64, f64, f64);

/// Median and interquartile range of `metric` per method and N, over the
/// finite values of the rows matching `family` and `dims`.
pub fn summarize(
    rows: &[ResultRow],
    family: &str,
    dims: usize,
    metric: Metric,
) -> BTreeMap<String, Vec<CurvePoint>> {
    let mut groups: BTreeMap<(String, usize), Vec<f64>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.family == family && r.dims == dims) {
        let v = metric.value(r);
        if v.is_finite() {
            groups.entry((r.method.clone(), r.n)).or_default().push(v);
        }
    }
    let mut curves: BTreeMap<String, Vec<CurvePoint>> = BTreeMap::new();
    for ((method, n), mut vals) in groups {
        vals.sort_by(f64::total_cmp);
        curves.entry(method).or_default().push((
            n,
            quantile(&vals, 0.25),
            quantile(&vals, 0.5),
            quantile(&vals, 0.75),
        ));
    }
    curves
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

/// Renders one metric-vs-N chart. Returns `None` when there is nothing to draw.
pub fn render_svg(title: &str, y_label: &str, curves: &BTreeMap<String, Vec<CurvePoint>>) -> Option<String> {
    let pts: Vec<&CurvePoint> = curves.values().flatten().collect();
    if pts.is_empty() {
        return None;
    }
    let (mut x0, mut x1) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY);
    for &&(n, lo, _, hi) in &pts {
        let lx = (n as f64).log2();
        x0 = x0.min(lx);
        x1 = x1.max(lx);
        y0 = y0.min(lo);
        y1 = y1.max(hi);
    }
    if x1 - x0 < 1e-9 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    y0 = y0.min(0.0);
    if y1 - y0 < 1e-12 {
        y1 = y0 + 1.0;
    }
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let sx = |n: usize| MARGIN_L + ((n as f64).log2() - x0) / (x1 - x0) * pw;
    let sy = |v: f64| MARGIN_T + (1.0 - (v - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, WIDTH / 2.0, escape(title));
    let (bx, by) = (MARGIN_L, MARGIN_T + ph);
    let _ = writeln!(s, r#"<line x1="{bx}" y1="{by}" x2="{}" y2="{by}" stroke="black"/>"#, bx + pw);
    let _ = writeln!(s, r#"<line x1="{bx}" y1="{MARGIN_T}" x2="{bx}" y2="{by}" stroke="black"/>"#);

    let mut ns: Vec<usize> = pts.iter().map(|p| p.0).collect();
    ns.sort_unstable();
    ns.dedup();
    for n in ns {
        let x = sx(n);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{by}" x2="{x:.2}" y2="{}" stroke="black"/>"#, by + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{n}</text>"#, by + 18.0);
    }
    for i in 0..=4 {
        let v = y0 + (y1 - y0) * i as f64 / 4.0;
        let y = sy(v);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.2}" x2="{bx}" y2="{y:.2}" stroke="black"/>"#, bx - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, bx - 8.0, y + 4.0, fmt_tick(v));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">N (log scale)</text>"#, bx + pw / 2.0, HEIGHT - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        MARGIN_T + ph / 2.0,
        escape(y_label)
    );

    for (i, (method, curve)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut band = String::new();
        for &(n, _, _, hi) in curve {
            let _ = write!(band, "{:.2},{:.2} ", sx(n), sy(hi));
        }
        for &(n, lo, _, _) in curve.iter().rev() {
            let _ = write!(band, "{:.2},{:.2} ", sx(n), sy(lo));
        }
        let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#, band.trim_end());
        let line: Vec<String> = curve.iter().map(|&(n, _, m, _)| format!("{:.2},{:.2}", sx(n), sy(m))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" "));
        let ly = MARGIN_T + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_R + 12.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(method));
    }
    s.push_str("</svg>\n");
    Some(s)
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-2 && v.abs() < 1e4 {
        format!("{v:.3}")
    } else {
        format!("{v:.1e}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `{dims}d_{family}_{metric}.svg` for every (family, dims) group and
/// metric with data. Returns the written paths.
pub fn emit_plots(rows: &[ResultRow], dir: &Path) -> Result<Vec<PathBuf>, BenchError> {
    if rows.is_empty() {
        return Err(BenchError::InvalidSpec("no rows to plot".into()));
    }
    fs::create_dir_all(dir)?;
    let mut groups: Vec<(String, usize)> = rows.iter().map(|r| (r.family.clone(), r.dims)).collect();
    groups.sort();
    groups.dedup();
    let mut written = Vec::new();
    for (family, dims) in groups {
        for metric in Metric::ALL {
            let curves = summarize(rows, &family, dims, metric);
            let title = format!("{family}, {dims}D: {}", metric.name());
            if let Some(svg) = render_svg(&title, metric.name(), &curves) {
                let path = dir.join(format!("{dims}d_{family}_{}.svg", metric.name()));
                fs::write(&path, svg)?;
                written.push(path);
            }
        }
    }
    Ok(written)
}
