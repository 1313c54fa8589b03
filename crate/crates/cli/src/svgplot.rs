use std::fmt::Write as _;

use scatfex_core::synthgen::triangle_bump;
use scatfex_core::{LabeledDataset, MlrModel};

use crate::config::DatasetKind;

/// Apex sample positions (1-based) of the three triangle-waveform bumps,
/// attached to overlay polylines as `data-apex` attributes.
pub const TRIANGLE_APEXES: [usize; 3] = [43, 64, 85];

const PANEL_W: f64 = 150.0;
const PANEL_H: f64 = 80.0;
const WIDE_W: f64 = 760.0;
const MARGIN: f64 = 12.0;
const LABEL_H: f64 = 16.0;

const SIGNAL_STROKE: &str = "#1f77b4";
const OVERLAY_STROKE: &str = "#d62728";
const AXIS_STROKE: &str = "#999999";

fn svg_open(width: f64, height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" \
         viewBox=\"0 0 {width:.0} {height:.0}\" font-family=\"monospace\" font-size=\"11\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn text(s: &mut String, x: f64, y: f64, msg: &str) {
    let _ = writeln!(s, "<text x=\"{x:.1}\" y=\"{y:.1}\">{msg}</text>");
}

/// Maps `values` into panel pixels, y-range `[lo, hi]`, returning the
/// `points` attribute payload.
fn points_attr(values: &[f64], px: f64, py: f64, w: f64, h: f64, lo: f64, hi: f64) -> String {
    let span = (hi - lo).max(1e-12);
    let n = values.len().max(2);
    let mut pts = String::new();
    for (i, v) in values.iter().enumerate() {
        let x = px + (i as f64 / (n - 1) as f64) * w;
        let y = py + h - ((v - lo) / span) * h;
        let _ = write!(pts, "{x:.2},{y:.2} ");
    }
    pts.trim_end().to_string()
}

fn polyline(s: &mut String, pts: &str, stroke: &str, extra: &str) {
    let _ = writeln!(
        s,
        "<polyline fill=\"none\" stroke=\"{stroke}\" stroke-width=\"1\"{extra} points=\"{pts}\"/>"
    );
}

fn value_range(values: &[f64]) -> (f64, f64) {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn class_title(dataset: DatasetKind, class: u32) -> String {
    match (dataset, class) {
        (DatasetKind::Cbf, 1) => "class 1 (cylinder)".into(),
        (DatasetKind::Cbf, 2) => "class 2 (bell)".into(),
        (DatasetKind::Cbf, 3) => "class 3 (funnel)".into(),
        (_, k) => format!("class {k}"),
    }
}

/// Grid of example waveforms: one row per class, `per_class` panels each.
/// Returns the SVG document and its CSV sibling
/// (`class,sample,t,value`).
pub fn samples_plot(train: &LabeledDataset, dataset: DatasetKind, per_class: usize) -> (String, String) {
    let k = train.n_classes;
    let mut chosen: Vec<Vec<&[f64]>> = vec![Vec::new(); k as usize];
    for (signal, &label) in train.signals.iter().zip(&train.labels) {
        let slot = &mut chosen[(label - 1) as usize];
        if slot.len() < per_class {
            slot.push(signal.samples());
        }
    }
    let cols = per_class.max(1) as f64;
    let width = MARGIN + cols * (PANEL_W + MARGIN);
    let height = MARGIN + k as f64 * (PANEL_H + LABEL_H + MARGIN);
    let mut svg = svg_open(width, height);
    let mut csv = String::from("class,sample,t,value\n");
    for (ci, row) in chosen.iter().enumerate() {
        let class = ci as u32 + 1;
        let py = MARGIN + ci as f64 * (PANEL_H + LABEL_H + MARGIN) + LABEL_H;
        text(&mut svg, MARGIN, py - 4.0, &class_title(dataset, class));
        for (si, samples) in row.iter().enumerate() {
            let px = MARGIN + si as f64 * (PANEL_W + MARGIN);
            let (lo, hi) = value_range(samples);
            let _ = writeln!(
                svg,
                "<rect x=\"{px:.1}\" y=\"{py:.1}\" width=\"{PANEL_W}\" height=\"{PANEL_H}\" \
                 fill=\"none\" stroke=\"{AXIS_STROKE}\"/>"
            );
            polyline(
                &mut svg,
                &points_attr(samples, px, py, PANEL_W, PANEL_H, lo, hi),
                SIGNAL_STROKE,
                "",
            );
            for (t, v) in samples.iter().enumerate() {
                let _ = writeln!(csv, "{class},{si},{t},{v}");
            }
        }
    }
    svg.push_str("</svg>\n");
    (svg, csv)
}

/// Per-class stem plot of the model's β coefficients over feature index.
/// Classes with no nonzero coefficients render as a bare baseline with an
/// annotation. CSV sibling lists the nonzero entries
/// (`class,feature,value`).
pub fn betas_plot(model: &MlrModel) -> (String, String) {
    let k = model.n_classes();
    let p = model.n_features();
    let betas = model.betas();
    let width = MARGIN * 2.0 + WIDE_W;
    let height = MARGIN + k as f64 * (PANEL_H + LABEL_H + MARGIN);
    let mut svg = svg_open(width, height);
    let mut csv = String::from("class,feature,value\n");
    let global_max = betas.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for class in 1..=k {
        let row = betas.row((class - 1) as usize);
        let ci = (class - 1) as f64;
        let py = MARGIN + ci * (PANEL_H + LABEL_H + MARGIN) + LABEL_H;
        let baseline = py + PANEL_H / 2.0;
        let nnz = row.iter().filter(|v| **v != 0.0).count();
        text(
            &mut svg,
            MARGIN,
            py - 4.0,
            &format!("class {class} beta ({nnz} nonzero)"),
        );
        let _ = writeln!(
            svg,
            "<line x1=\"{MARGIN:.1}\" y1=\"{baseline:.1}\" x2=\"{:.1}\" y2=\"{baseline:.1}\" \
             stroke=\"{AXIS_STROKE}\"/>",
            MARGIN + WIDE_W
        );
        if nnz == 0 {
            text(
                &mut svg,
                MARGIN + WIDE_W / 2.0 - 60.0,
                baseline - 6.0,
                "all coefficients zero",
            );
            continue;
        }
        let scale = if global_max > 0.0 { global_max } else { 1.0 };
        for (feature, &v) in row.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let x = MARGIN + (feature as f64 / (p - 1).max(1) as f64) * WIDE_W;
            let y = baseline - (v / scale) * (PANEL_H / 2.0);
            let _ = writeln!(
                svg,
                "<line x1=\"{x:.2}\" y1=\"{baseline:.2}\" x2=\"{x:.2}\" y2=\"{y:.2}\" \
                 stroke=\"{SIGNAL_STROKE}\"/>\n\
                 <circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"1.5\" fill=\"{SIGNAL_STROKE}\"/>"
            );
            let _ = writeln!(csv, "{class},{feature},{v}");
        }
    }
    svg.push_str("</svg>\n");
    (svg, csv)
}

/// One panel per class showing the max-normalized extracted signal. For the
/// triangle problem each panel overlays the class's noiseless bump shape as
/// a reference polyline tagged with its apex position. CSV sibling:
/// `class,t,x,x_maxnorm` plus an `h` column for triangle overlays.
pub fn extracted_plot(extracted: &LabeledDataset, dataset: DatasetKind) -> (String, String) {
    let k = extracted.n_classes;
    let width = MARGIN * 2.0 + WIDE_W;
    let height = MARGIN + k as f64 * (PANEL_H + LABEL_H + MARGIN);
    let mut svg = svg_open(width, height);
    let mut csv = String::new();
    let overlay = dataset == DatasetKind::Triangle;
    csv.push_str(if overlay {
        "class,t,x,x_maxnorm,h\n"
    } else {
        "class,t,x,x_maxnorm\n"
    });
    for (ci, (signal, &label)) in extracted.signals.iter().zip(&extracted.labels).enumerate() {
        let samples = signal.samples();
        let max_abs = samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let normed: Vec<f64> = if max_abs > 0.0 {
            samples.iter().map(|v| v / max_abs).collect()
        } else {
            samples.to_vec()
        };
        let py = MARGIN + ci as f64 * (PANEL_H + LABEL_H + MARGIN) + LABEL_H;
        let bump = overlay.then(|| triangle_bump(label));
        let (mut lo, mut hi) = value_range(&normed);
        if let Some(b) = &bump {
            let (blo, bhi) = value_range(b.samples());
            lo = lo.min(blo);
            hi = hi.max(bhi);
        }
        text(&mut svg, MARGIN, py - 4.0, &class_title(dataset, label));
        let _ = writeln!(
            svg,
            "<rect x=\"{MARGIN:.1}\" y=\"{py:.1}\" width=\"{WIDE_W}\" height=\"{PANEL_H}\" \
             fill=\"none\" stroke=\"{AXIS_STROKE}\"/>"
        );
        polyline(
            &mut svg,
            &points_attr(&normed, MARGIN, py, WIDE_W, PANEL_H, lo, hi),
            SIGNAL_STROKE,
            "",
        );
        if let Some(b) = &bump {
            let apex = TRIANGLE_APEXES[(label - 1) as usize];
            polyline(
                &mut svg,
                &points_attr(b.samples(), MARGIN, py, WIDE_W, PANEL_H, lo, hi),
                OVERLAY_STROKE,
                &format!(" stroke-dasharray=\"4 3\" data-apex=\"{apex}\""),
            );
            for (t, (&x, h)) in samples.iter().zip(b.samples()).enumerate() {
                let xn = normed[t];
                let _ = writeln!(csv, "{label},{t},{x},{xn},{h}");
            }
        } else {
            for (t, &x) in samples.iter().enumerate() {
                let xn = normed[t];
                let _ = writeln!(csv, "{label},{t},{x},{xn}");
            }
        }
    }
    svg.push_str("</svg>\n");
    (svg, csv)
}
