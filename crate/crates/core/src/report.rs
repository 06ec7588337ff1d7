//! Report files: `cq_summary.csv`, `lcq_curve.csv`, and an SVG line plot of
//! the LCQ curve. Output is byte-deterministic for identical inputs.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::metrics::CQReport;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportFiles {
    pub cq_summary: PathBuf,
    pub lcq_curve: PathBuf,
    pub lcq_plot: PathBuf,
}

/// Writes the three report files into `dir` (created if missing).
pub fn emit_report(report: &CQReport, dir: &Path) -> io::Result<ReportFiles> {
    fs::create_dir_all(dir)?;
    let files = ReportFiles {
        cq_summary: dir.join("cq_summary.csv"),
        lcq_curve: dir.join("lcq_curve.csv"),
        lcq_plot: dir.join("lcq_curve.svg"),
    };
    fs::write(&files.cq_summary, cq_summary_csv(report))?;
    fs::write(&files.lcq_curve, lcq_curve_csv(report))?;
    fs::write(&files.lcq_plot, lcq_svg(report))?;
    Ok(files)
}

pub fn cq_summary_csv(report: &CQReport) -> String {
    let mut out = String::new();
    out.push_str("language,run_id,cq,accepted,rejected,timeout,crashed,total\n");
    for run in &report.per_run {
        let _ = writeln!(
            out,
            "{},{},{:.4},{},{},{},{},{}",
            report.language,
            run.run_id,
            run.cq,
            run.counts.accepted,
            run.counts.rejected,
            run.counts.timeout,
            run.counts.crashed,
            run.counts.total()
        );
    }
    let _ = writeln!(out, "# mean_cq={:.4}", report.cq);
    match report.relative_std_dev {
        Some(rsd) => {
            let _ = writeln!(
                out,
                "# relative_std_dev_pct={rsd:.4} (sample standard deviation, n-1)"
            );
        }
        None => out.push_str("# relative_std_dev_pct=n/a (single run)\n"),
    }
    out.push_str("# cq and lcq are estimators over the sampled set, not the full language\n");
    out
}

pub fn lcq_curve_csv(report: &CQReport) -> String {
    let mut out = String::new();
    out.push_str("x,lcq,defined,window_population\n");
    for point in &report.lcq_curve {
        match point.lcq {
            Some(v) => {
                let _ = writeln!(out, "{},{:.4},true,{}", point.x, v, point.window_population);
            }
            None => {
                let _ = writeln!(out, "{},,false,{}", point.x, point.window_population);
            }
        }
    }
    out
}

/// Minimal SVG line plot: x = program size in bytes, y = LCQ from 0 to 100.
/// Gaps in the curve (undefined windows) break the polyline.
pub fn lcq_svg(report: &CQReport) -> String {
    const WIDTH: f64 = 720.0;
    const HEIGHT: f64 = 420.0;
    const LEFT: f64 = 56.0;
    const RIGHT: f64 = 16.0;
    const TOP: f64 = 28.0;
    const BOTTOM: f64 = 44.0;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_max = report.params.size_bound.max(1) as f64;

    let sx = |x: u64| LEFT + plot_w * (x as f64 / x_max);
    let sy = |v: f64| TOP + plot_h * (1.0 - v / 100.0);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="18" font-family="sans-serif" font-size="14">LCQ of {} (mean over {} run{})</text>"#,
        LEFT,
        xml_escape(&report.language),
        report.per_run.len(),
        if report.per_run.len() == 1 { "" } else { "s" }
    );

    // Axes.
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="black"/>"#,
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    );
    let _ = writeln!(
        svg,
        r#"<line x1="{LEFT:.1}" y1="{TOP:.1}" x2="{LEFT:.1}" y2="{:.1}" stroke="black"/>"#,
        TOP + plot_h
    );
    for tick in 0..=5 {
        let v = tick as f64 * 20.0;
        let y = sy(v);
        let _ = writeln!(
            svg,
            r#"<line x1="{:.1}" y1="{y:.1}" x2="{LEFT:.1}" y2="{y:.1}" stroke="black"/>"#,
            LEFT - 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.0}</text>"#,
            LEFT - 8.0,
            y + 4.0
        );
    }
    for tick in 0..=8 {
        let x_val = (x_max * tick as f64 / 8.0).round() as u64;
        let x = sx(x_val);
        let _ = writeln!(
            svg,
            r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="black"/>"#,
            TOP + plot_h,
            TOP + plot_h + 4.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="middle">{x_val}</text>"#,
            TOP + plot_h + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">program size (bytes)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 8.0
    );

    // Polyline segments between consecutive defined points.
    let mut segment: Vec<String> = Vec::new();
    let mut segments: Vec<String> = Vec::new();
    for point in &report.lcq_curve {
        match point.lcq {
            Some(v) => segment.push(format!("{:.2},{:.2}", sx(point.x), sy(v))),
            None => {
                if segment.len() > 1 {
                    segments.push(segment.join(" "));
                }
                segment.clear();
            }
        }
    }
    if segment.len() > 1 {
        segments.push(segment.join(" "));
    }
    for points in &segments {
        let _ = writeln!(
            svg,
            r##"<polyline points="{points}" fill="none" stroke="#1f6fb2" stroke-width="1.5"/>"##
        );
    }
    // Isolated defined points would vanish in a polyline; draw them as dots.
    for window in report.lcq_curve.windows(3) {
        if window[0].lcq.is_none() && window[2].lcq.is_none() {
            if let Some(v) = window[1].lcq {
                let _ = writeln!(
                    svg,
                    r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#1f6fb2"/>"##,
                    sx(window[1].x),
                    sy(v)
                );
            }
        }
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::VerdictCounts;
    use crate::metrics::{CurvePoint, MetricParams, RunSummary};

    fn report(points: Vec<CurvePoint>) -> CQReport {
        CQReport {
            language: "toy".to_string(),
            cq: 50.0,
            per_run: vec![RunSummary {
                run_id: "seed1-0".to_string(),
                cq: 50.0,
                counts: VerdictCounts {
                    accepted: 1,
                    rejected: 1,
                    timeout: 0,
                    crashed: 0,
                },
            }],
            relative_std_dev: None,
            lcq_curve: points,
            verdict_breakdown: VerdictCounts {
                accepted: 1,
                rejected: 1,
                timeout: 0,
                crashed: 0,
            },
            params: MetricParams::default(),
        }
    }

    fn point(x: u64, lcq: Option<f64>) -> CurvePoint {
        CurvePoint {
            x,
            lcq,
            window_population: lcq.map_or(0, |_| 2),
        }
    }

    #[test]
    fn empty_curve_gives_header_only() {
        let csv = lcq_curve_csv(&report(vec![]));
        assert_eq!(csv, "x,lcq,defined,window_population\n");
    }

    #[test]
    fn curve_rows_ascend_and_mark_gaps() {
        let csv = lcq_curve_csv(&report(vec![
            point(0, Some(100.0)),
            point(1, None),
            point(2, Some(25.0)),
        ]));
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "0,100.0000,true,2");
        assert_eq!(lines[2], "1,,false,0");
        assert_eq!(lines[3], "2,25.0000,true,2");
    }

    #[test]
    fn summary_has_run_rows_and_footer() {
        let csv = cq_summary_csv(&report(vec![]));
        assert!(csv.starts_with("language,run_id,cq,"));
        assert!(csv.contains("toy,seed1-0,50.0000,1,1,0,0,2"));
        assert!(csv.contains("# relative_std_dev_pct=n/a"));
    }

    #[test]
    fn svg_is_deterministic_and_breaks_on_gaps() {
        let r = report(vec![
            point(0, Some(100.0)),
            point(1, Some(80.0)),
            point(2, None),
            point(3, Some(40.0)),
            point(4, Some(20.0)),
        ]);
        let a = lcq_svg(&r);
        let b = lcq_svg(&r);
        assert_eq!(a, b);
        assert_eq!(a.matches("<polyline").count(), 2);
    }

    #[test]
    fn emit_writes_three_files() {
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&report(vec![point(0, Some(100.0))]), dir.path()).unwrap();
        for path in [&files.cq_summary, &files.lcq_curve, &files.lcq_plot] {
            assert!(path.exists(), "{path:?} missing");
        }
    }
}
