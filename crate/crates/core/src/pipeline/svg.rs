//! Hand-written SVG: stacked rank bars and frequency curves.

use std::fmt::Write;

use crate::experiments::{FrequencyCurves, RankTable};

const W: f64 = 720.0;
const H: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
/// Curves beyond this many (by peak) are drawn in grey without a legend entry.
const MAX_LEGEND: usize = 12;

const PALETTE: [&str; 12] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f",
    "#bab0ac", "#1f77b4", "#d62728",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(title: &str, y_label: &str) -> String {
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\" \
         font-family=\"sans-serif\" font-size=\"11\">\n<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    );
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"22\" font-size=\"14\" text-anchor=\"middle\">{}</text>", LEFT + plot_w() / 2.0, escape(title));
    let (x0, y0, y1) = (LEFT, TOP + plot_h(), TOP);
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{:.1}\" y2=\"{y0}\" stroke=\"black\"/>", LEFT + plot_w());
    let _ = writeln!(s, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>");
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let y = y0 - f * plot_h();
        let _ = writeln!(s, "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{x0}\" y2=\"{y:.1}\" stroke=\"black\"/>", x0 - 4.0);
        let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{f:.2}</text>", x0 - 7.0, y + 4.0);
    }
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">segment length</text>",
        LEFT + plot_w() / 2.0,
        H - 10.0
    );
    let _ = writeln!(
        s,
        "<text transform=\"translate(16 {:.1}) rotate(-90)\" text-anchor=\"middle\">{}</text>",
        TOP + plot_h() / 2.0,
        escape(y_label)
    );
    s
}

fn plot_w() -> f64 {
    W - LEFT - RIGHT
}

fn plot_h() -> f64 {
    H - TOP - BOTTOM
}

fn x_ticks(s: &mut String, lengths: &[usize], x_of: impl Fn(usize) -> f64) {
    let step = lengths.len().div_ceil(10).max(1);
    for (i, &l) in lengths.iter().enumerate().step_by(step) {
        let x = x_of(i);
        let y = TOP + plot_h();
        let _ = writeln!(s, "<line x1=\"{x:.1}\" y1=\"{y:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"black\"/>", y + 4.0);
        let _ = writeln!(s, "<text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{l}</text>", y + 16.0);
    }
}

fn legend(s: &mut String, i: usize, color: &str, label: &str) {
    let x = LEFT + plot_w() + 15.0;
    let y = TOP + 8.0 + 16.0 * i as f64;
    let _ = writeln!(s, "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{color}\"/>", y - 9.0);
    let _ = writeln!(s, "<text x=\"{:.1}\" y=\"{y:.1}\">{}</text>", x + 15.0, escape(label));
}

/// One stacked bar per segment length, one band per cycling rank.
pub fn rank_plot(table: &RankTable, title: &str) -> String {
    let mut s = header(title, "fraction of segments");
    let lengths: Vec<usize> = table.lengths().collect();
    let n = lengths.len().max(1) as f64;
    let slot = plot_w() / n;
    let x_of = |i: usize| LEFT + slot * (i as f64 + 0.5);
    for (i, &l) in lengths.iter().enumerate() {
        let mut acc = 0.0;
        for k in 0..=table.max_rank {
            let f = table.fraction(l, k);
            if f == 0.0 {
                continue;
            }
            let h = f * plot_h();
            let y = TOP + plot_h() - acc - h;
            let _ = writeln!(
                s,
                "<rect x=\"{:.2}\" y=\"{y:.2}\" width=\"{:.2}\" height=\"{h:.2}\" fill=\"{}\"><title>L={l} rank {k}: {f:.3}</title></rect>",
                x_of(i) - slot * 0.4,
                slot * 0.8,
                PALETTE[k % PALETTE.len()]
            );
            acc += h;
        }
    }
    x_ticks(&mut s, &lengths, x_of);
    if !lengths.is_empty() {
        for k in 0..=table.max_rank {
            legend(&mut s, k, PALETTE[k % PALETTE.len()], &format!("rank {k}"));
        }
    }
    s.push_str("</svg>\n");
    s
}

/// One polyline per signature key; the y axis is scaled to the largest peak.
pub fn curves_plot(curves: &FrequencyCurves, title: &str) -> String {
    let mut s = header(title, "frequency (share of max)");
    let n = curves.lengths.len();
    let top = curves.curves.keys().map(|k| curves.peak(k)).fold(0.0, f64::max);
    let scale = if top > 0.0 { top } else { 1.0 };
    let x_of = |i: usize| {
        if n <= 1 {
            LEFT + plot_w() / 2.0
        } else {
            LEFT + plot_w() * i as f64 / (n - 1) as f64
        }
    };
    let _ = writeln!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"start\">max = {top:.3}</text>",
        LEFT + 4.0,
        TOP - 6.0
    );
    let mut keys: Vec<&String> = curves.curves.keys().collect();
    keys.sort_by(|a, b| curves.peak(b).total_cmp(&curves.peak(a)).then(a.cmp(b)));
    // Grey background curves first so the highlighted ones stay on top.
    for (rank, key) in keys.iter().enumerate().rev() {
        let c = &curves.curves[*key];
        let color = if rank < MAX_LEGEND { PALETTE[rank % PALETTE.len()] } else { "#cccccc" };
        let pts: Vec<String> = c
            .iter()
            .enumerate()
            .map(|(i, v)| format!("{:.2},{:.2}", x_of(i), TOP + plot_h() - v / scale * plot_h()))
            .collect();
        let _ = writeln!(
            s,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"><title>{}</title></polyline>",
            pts.join(" "),
            escape(key)
        );
    }
    for (rank, key) in keys.iter().take(MAX_LEGEND).enumerate() {
        legend(&mut s, rank, PALETTE[rank % PALETTE.len()], key);
    }
    x_ticks(&mut s, &curves.lengths, x_of);
    s.push_str("</svg>\n");
    s
}
