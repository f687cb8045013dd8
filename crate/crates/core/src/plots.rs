//! Self-contained SVG plots for the quality report: correlation heatmap,
//! per-trace box plots, normal-vs-anomalous histograms, and the anomaly
//! timeline. No plotting dependency; each function returns one standalone
//! SVG document.

use std::fmt::Write as _;

use crate::analysis::{CorrelationMatrix, DistributionEntry};
use crate::dataset::RunRecord;
use crate::Real;

const FONT: &str = "font-family=\"Helvetica,Arial,sans-serif\"";

fn esc(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn open_svg(out: &mut String, width: Real, height: Real) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\">\n\
         <rect width=\"{width:.0}\" height=\"{height:.0}\" fill=\"white\"/>\n"
    );
}

/// Diverging blue–white–red fill for a correlation in [-1, 1].
fn correlation_color(r: Real) -> String {
    let t = r.clamp(-1.0, 1.0);
    let lerp = |a: Real, b: Real, t: Real| a + (b - a) * t;
    let (red, green, blue) = if t < 0.0 {
        let t = -t;
        (
            lerp(255.0, 59.0, t),
            lerp(255.0, 76.0, t),
            lerp(255.0, 192.0, t),
        )
    } else {
        (
            lerp(255.0, 180.0, t),
            lerp(255.0, 4.0, t),
            lerp(255.0, 38.0, t),
        )
    };
    format!("rgb({:.0},{:.0},{:.0})", red, green, blue)
}

/// Renders the metric correlation matrix as an annotated heatmap.
pub fn correlation_heatmap_svg(matrix: &CorrelationMatrix) -> String {
    let n = matrix.metrics.len();
    let cell = 52.0;
    let left = 200.0;
    let top = 170.0;
    let width = left + cell * n as Real + 20.0;
    let height = top + cell * n as Real + 20.0;
    let mut out = String::new();
    open_svg(&mut out, width, height);
    let _ = writeln!(
        out,
        "<text x=\"{left}\" y=\"28\" {FONT} font-size=\"16\" font-weight=\"bold\">\
         Metric correlation (Pearson r, pooled windows)</text>"
    );
    for (i, metric) in matrix.metrics.iter().enumerate() {
        let y = top + cell * (i as Real + 0.5) + 4.0;
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{y:.1}\" {FONT} font-size=\"11\" text-anchor=\"end\">{}</text>",
            left - 8.0,
            esc(metric)
        );
        let x = left + cell * (i as Real + 0.5);
        let _ = writeln!(
            out,
            "<text x=\"{x:.1}\" y=\"{:.1}\" {FONT} font-size=\"11\" text-anchor=\"start\" \
             transform=\"rotate(-60 {x:.1} {:.1})\">{}</text>",
            top - 10.0,
            top - 10.0,
            esc(metric)
        );
    }
    for i in 0..n {
        for j in 0..n {
            let r = matrix.values[i][j];
            let x = left + cell * j as Real;
            let y = top + cell * i as Real;
            let fill = correlation_color(r);
            let text_fill = if r.abs() > 0.6 { "white" } else { "black" };
            let _ = write!(
                out,
                "<rect x=\"{x:.1}\" y=\"{y:.1}\" width=\"{cell}\" height=\"{cell}\" \
                 fill=\"{fill}\" stroke=\"#ccc\"/>\n\
                 <text x=\"{:.1}\" y=\"{:.1}\" {FONT} font-size=\"10\" fill=\"{text_fill}\" \
                 text-anchor=\"middle\">{r:.2}</text>\n",
                x + cell / 2.0,
                y + cell / 2.0 + 3.0,
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

/// Renders per-trace box plots (five-number summaries of normal windows)
/// for one metric. Spans three decades or more switch to a log axis.
pub fn boxplot_svg(entries: &[DistributionEntry], metric: &str) -> String {
    let rows: Vec<&DistributionEntry> = entries.iter().filter(|e| e.metric == metric).collect();
    let row_h = 34.0;
    let left = 280.0;
    let plot_w = 640.0;
    let top = 56.0;
    let height = top + row_h * rows.len().max(1) as Real + 40.0;
    let width = left + plot_w + 40.0;
    let mut out = String::new();
    open_svg(&mut out, width, height);
    let _ = writeln!(
        out,
        "<text x=\"24\" y=\"30\" {FONT} font-size=\"16\" font-weight=\"bold\">{} \
         — normal windows, per trace</text>",
        esc(metric)
    );
    if rows.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let lo = rows
        .iter()
        .map(|e| e.summary.min)
        .fold(Real::INFINITY, Real::min);
    let hi = rows
        .iter()
        .map(|e| e.summary.max)
        .fold(Real::NEG_INFINITY, Real::max);
    let log_axis = lo > 0.0 && hi / lo >= 1_000.0;
    let span = if log_axis {
        (hi.ln() - lo.ln()).max(1e-12)
    } else {
        (hi - lo).max(1e-12)
    };
    let x_of = |v: Real| {
        let t = if log_axis {
            (v.ln() - lo.ln()) / span
        } else {
            (v - lo) / span
        };
        left + t * plot_w
    };
    let _ = write!(
        out,
        "<text x=\"{left}\" y=\"{:.1}\" {FONT} font-size=\"10\" fill=\"#555\">{}</text>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" {FONT} font-size=\"10\" fill=\"#555\" text-anchor=\"end\">{}\
         </text>\n",
        height - 14.0,
        esc(&format!(
            "{lo:.4e}{}",
            if log_axis { "  (log axis)" } else { "" }
        )),
        left + plot_w,
        height - 14.0,
        esc(&format!("{hi:.4e}")),
    );
    for (i, entry) in rows.iter().enumerate() {
        let cy = top + row_h * (i as Real + 0.5);
        let s = &entry.summary;
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" {FONT} font-size=\"11\" text-anchor=\"end\">{}</text>",
            left - 10.0,
            cy + 4.0,
            esc(&format!("{}/{}", entry.app, entry.microservice))
        );
        let (x_min, x_q1, x_med, x_q3, x_max) = (
            x_of(s.min),
            x_of(s.q1),
            x_of(s.median),
            x_of(s.q3),
            x_of(s.max),
        );
        let _ = write!(
            out,
            "<line x1=\"{x_min:.1}\" y1=\"{cy:.1}\" x2=\"{x_max:.1}\" y2=\"{cy:.1}\" \
             stroke=\"#888\"/>\n\
             <rect x=\"{x_q1:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"16\" fill=\"#9ecae1\" \
             stroke=\"#3182bd\"/>\n\
             <line x1=\"{x_med:.1}\" y1=\"{:.1}\" x2=\"{x_med:.1}\" y2=\"{:.1}\" \
             stroke=\"#08306b\" stroke-width=\"2\"/>\n",
            cy - 8.0,
            (x_q3 - x_q1).max(1.0),
            cy - 8.0,
            cy + 8.0,
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Renders overlaid normal-vs-anomalous histograms of one metric on one
/// trace, binned over the shared range like the overlap coefficient.
pub fn overlap_histogram_svg(
    normal: &[Real],
    anomalous: &[Real],
    bins: usize,
    title: &str,
) -> String {
    assert!(bins > 0, "histogram requires at least one bin");
    let left = 60.0;
    let plot_w = 720.0;
    let plot_h = 260.0;
    let top = 56.0;
    let width = left + plot_w + 30.0;
    let height = top + plot_h + 50.0;
    let mut out = String::new();
    open_svg(&mut out, width, height);
    let _ = write!(
        out,
        "<text x=\"24\" y=\"30\" {FONT} font-size=\"16\" font-weight=\"bold\">{}</text>\n\
         <rect x=\"{:.0}\" y=\"40\" width=\"12\" height=\"12\" fill=\"#3182bd\" fill-opacity=\"0.55\"/>\n\
         <text x=\"{:.0}\" y=\"50\" {FONT} font-size=\"11\">normal</text>\n\
         <rect x=\"{:.0}\" y=\"40\" width=\"12\" height=\"12\" fill=\"#cb181d\" fill-opacity=\"0.55\"/>\n\
         <text x=\"{:.0}\" y=\"50\" {FONT} font-size=\"11\">anomalous</text>\n",
        esc(title),
        left,
        left + 16.0,
        left + 90.0,
        left + 106.0,
    );
    if normal.is_empty() || anomalous.is_empty() {
        out.push_str("</svg>\n");
        return out;
    }
    let lo = normal
        .iter()
        .chain(anomalous)
        .copied()
        .fold(Real::INFINITY, Real::min);
    let hi = normal
        .iter()
        .chain(anomalous)
        .copied()
        .fold(Real::NEG_INFINITY, Real::max);
    let span = (hi - lo).max(1e-12);
    let histogram = |values: &[Real]| {
        let mut counts = vec![0.0 as Real; bins];
        for &v in values {
            let idx = (((v - lo) / span) * bins as Real) as usize;
            counts[idx.min(bins - 1)] += 1.0;
        }
        let total: Real = values.len() as Real;
        for c in &mut counts {
            *c /= total;
        }
        counts
    };
    let h_normal = histogram(normal);
    let h_anomalous = histogram(anomalous);
    let peak = h_normal
        .iter()
        .chain(&h_anomalous)
        .copied()
        .fold(0.0 as Real, Real::max)
        .max(1e-12);
    let bin_w = plot_w / bins as Real;
    for (counts, color) in [(&h_normal, "#3182bd"), (&h_anomalous, "#cb181d")] {
        for (i, &p) in counts.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let bar_h = p / peak * plot_h;
            let _ = writeln!(
                out,
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" \
                 fill=\"{color}\" fill-opacity=\"0.55\"/>",
                left + bin_w * i as Real,
                top + plot_h - bar_h,
                bin_w.max(1.0),
                bar_h,
            );
        }
    }
    let _ = write!(
        out,
        "<line x1=\"{left}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
         <text x=\"{left}\" y=\"{:.1}\" {FONT} font-size=\"10\" fill=\"#555\">{:.4e}</text>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" {FONT} font-size=\"10\" fill=\"#555\" text-anchor=\"end\">{:.4e}</text>\n",
        top + plot_h,
        left + plot_w,
        top + plot_h,
        top + plot_h + 18.0,
        lo,
        left + plot_w,
        top + plot_h + 18.0,
        hi,
    );
    out.push_str("</svg>\n");
    out
}

/// Renders every run's anomaly schedule on a shared time axis, one lane per
/// (run, target, kind), with the normal/anomaly phase boundary marked.
pub fn timeline_svg(runs: &[RunRecord]) -> String {
    let mut lanes: Vec<(String, Vec<(u64, u64)>)> = Vec::new();
    let mut boundaries: Vec<(String, u64, u64)> = Vec::new();
    for run in runs {
        boundaries.push((
            run.app.clone(),
            run.config.normal_duration_s,
            run.config.total_duration_s(),
        ));
        for event in &run.schedule {
            let label = format!("{} {} {}", run.app, event.target, event.kind.as_str());
            let span = (event.start_s, event.start_s + event.duration_s);
            match lanes.iter_mut().find(|(l, _)| *l == label) {
                Some((_, spans)) => spans.push(span),
                None => lanes.push((label, vec![span])),
            }
        }
    }
    let total = boundaries
        .iter()
        .map(|&(_, _, t)| t)
        .max()
        .unwrap_or(1)
        .max(1);
    let row_h = 26.0;
    let left = 420.0;
    let plot_w = 760.0;
    let top = 56.0;
    let width = left + plot_w + 30.0;
    let height = top + row_h * lanes.len().max(1) as Real + 50.0;
    let mut out = String::new();
    open_svg(&mut out, width, height);
    let _ = writeln!(
        out,
        "<text x=\"24\" y=\"30\" {FONT} font-size=\"16\" font-weight=\"bold\">\
         Anomaly schedule</text>"
    );
    let x_of = |t: u64| left + (t as Real / total as Real) * plot_w;
    for &(_, normal_end, run_total) in &boundaries {
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{top}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#bbb\" \
             stroke-dasharray=\"4 3\"/>",
            x_of(normal_end),
            x_of(normal_end),
            height - 40.0,
        );
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{top}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#eee\"/>",
            x_of(run_total),
            x_of(run_total),
            height - 40.0,
        );
    }
    for (i, (label, spans)) in lanes.iter().enumerate() {
        let cy = top + row_h * (i as Real + 0.5);
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" {FONT} font-size=\"11\" text-anchor=\"end\">{}</text>",
            left - 10.0,
            cy + 4.0,
            esc(label)
        );
        for &(start, end) in spans {
            let _ = writeln!(
                out,
                "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"12\" fill=\"#e6550d\"/>",
                x_of(start),
                cy - 6.0,
                (x_of(end) - x_of(start)).max(1.0),
            );
        }
    }
    let _ = write!(
        out,
        "<text x=\"{left}\" y=\"{:.1}\" {FONT} font-size=\"10\" fill=\"#555\">0 s</text>\n\
         <text x=\"{:.1}\" y=\"{:.1}\" {FONT} font-size=\"10\" fill=\"#555\" text-anchor=\"end\">{total} s</text>\n",
        height - 16.0,
        left + plot_w,
        height - 16.0,
    );
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{correlation_matrix, distribution_stats, load_records};
    use crate::config::parse_config;
    use crate::orchestrator::run_corpus;

    fn sample_runs() -> (
        tempfile::TempDir,
        Vec<RunRecord>,
        crate::analysis::LoadedDataset,
    ) {
        let dir = tempfile::tempdir().unwrap();
        let doc = "\
app: location_retrieval
normal:
  duration_s: 1200
  workload:
    base_rate: 20.0
anomalies:
  phase_duration_s: 1200
  inject:
    - kind: cpu_hog
      target: location_service
      events: 3
";
        let cfg = parse_config(doc).unwrap();
        let outcome = run_corpus(&[(cfg, 42)], dir.path()).unwrap();
        let ds = load_records(&outcome.handle).unwrap();
        let runs = outcome.handle.manifest.runs.clone();
        (dir, runs, ds)
    }

    #[test]
    fn heatmap_covers_all_cells() {
        let (_dir, _runs, ds) = sample_runs();
        let (matrix, _) = correlation_matrix(&ds).unwrap();
        let svg = correlation_heatmap_svg(&matrix);
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("NaN"));
        assert_eq!(svg.matches("<rect").count(), 1 + 11 * 11);
        assert!(svg.contains("latency_p99"));
    }

    #[test]
    fn boxplot_lists_each_trace_row() {
        let (_dir, _runs, ds) = sample_runs();
        let stats = distribution_stats(&ds);
        let svg = boxplot_svg(&stats, "cpu_usage");
        assert!(svg.starts_with("<svg "));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert!(!svg.contains("NaN"));
        assert!(svg.contains("location_retrieval/location_service"));
    }

    #[test]
    fn histogram_draws_both_populations() {
        let normal = vec![1.0, 1.1, 1.2, 1.3, 0.9];
        let anomalous = vec![1.6, 1.9, 2.1];
        let svg = overlap_histogram_svg(&normal, &anomalous, 16, "demo");
        assert!(svg.starts_with("<svg "));
        assert!(svg.contains("#3182bd"));
        assert!(svg.contains("#cb181d"));
        assert!(!svg.contains("NaN"));
    }

    #[test]
    fn timeline_shows_every_event() {
        let (_dir, runs, _ds) = sample_runs();
        let events: usize = runs.iter().map(|r| r.schedule.len()).sum();
        let svg = timeline_svg(&runs);
        assert!(svg.starts_with("<svg "));
        assert!(!svg.contains("NaN"));
        // One background rect, per-event bars.
        assert_eq!(svg.matches("fill=\"#e6550d\"").count(), events);
        assert!(svg.contains("cpu_hog"));
    }
}
