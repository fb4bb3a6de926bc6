//! Minimal static SVG charts for barcodes and curves.

use std::fmt::Write as _;

use crate::tda::{BettiCurve, FiltrationKind, PersistenceBarcode};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        let widen = |a: f64, b: f64| if b > a { (a, b) } else { (a - 0.5, a + 0.5) };
        let (x0, x1) = widen(x0, x1);
        let (y0, y1) = widen(y0, y1);
        Self { x0, x1, y0, y1 }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x0) / (self.x1 - self.x0) * (WIDTH - 2.0 * MARGIN)
    }

    fn y(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y0) / (self.y1 - self.y0) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn open(title: &str) -> String {
    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##).unwrap();
    writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        WIDTH / 2.0,
        escape(title)
    )
    .unwrap();
    s
}

fn axes(s: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (l, r, t, b) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    writeln!(
        s,
        r##"<path d="M{l} {t} V{b} H{r}" fill="none" stroke="#333333"/>"##
    )
    .unwrap();
    for (v, anchor, x) in [(f.x0, "start", l), (f.x1, "end", r)] {
        writeln!(
            s,
            r#"<text x="{x}" y="{}" text-anchor="{anchor}">{}</text>"#,
            b + 16.0,
            fmt_num(v)
        )
        .unwrap();
    }
    for (v, y) in [(f.y0, b), (f.y1, t)] {
        writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            l - 4.0,
            y + 4.0,
            fmt_num(v)
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" transform="rotate(-90 14 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    )
    .unwrap();
}

fn fmt_num(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-3) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// One horizontal bar per interval, longest at the bottom. Superlevel
/// barcodes are drawn in original signal units.
pub fn barcode_svg(barcode: &PersistenceBarcode, title: &str) -> String {
    let flip = barcode.filtration_kind() == FiltrationKind::Superlevel;
    let mut bars: Vec<(f64, f64, bool)> = barcode
        .intervals()
        .iter()
        .map(|iv| {
            if flip {
                (-iv.death, -iv.birth, iv.essential)
            } else {
                (iv.birth, iv.death, iv.essential)
            }
        })
        .collect();
    bars.sort_by(|a, b| {
        (b.1 - b.0)
            .total_cmp(&(a.1 - a.0))
            .then(a.0.total_cmp(&b.0))
    });
    let lo = bars.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
    let hi = bars.iter().map(|b| b.1).fold(f64::NEG_INFINITY, f64::max);
    let f = Frame::new(lo, hi, 0.0, bars.len().max(1) as f64);
    let mut s = open(title);
    axes(&mut s, &f, "threshold", "interval");
    for (i, (b, d, essential)) in bars.iter().enumerate() {
        let y = f.y(i as f64 + 0.5);
        let color = if *essential { COLORS[1] } else { COLORS[0] };
        // Zero-length bars still get a visible tick.
        let (x0, x1) = (f.x(*b), f.x(*d).max(f.x(*b) + 1.5));
        writeln!(s, r#"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"/>"#)
            .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Line chart of named `(x, y)` series.
pub fn curves_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(&str, Vec<(f64, f64)>)],
) -> String {
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
    );
    for &(x, y) in pts.filter(|(x, y)| x.is_finite() && y.is_finite()) {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let f = Frame::new(x0, x1, y0.min(0.0), y1);
    let mut s = open(title);
    axes(&mut s, &f, x_label, y_label);
    for (k, (name, points)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let path: Vec<String> = points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", f.x(x), f.y(y)))
            .collect();
        writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            path.join(" ")
        )
        .unwrap();
        let ly = MARGIN + 14.0 * k as f64;
        writeln!(
            s,
            r#"<text x="{}" y="{ly}" text-anchor="end" fill="{color}">{}</text>"#,
            WIDTH - MARGIN,
            escape(name)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Sublevel and superlevel Betti curves drawn as step functions.
pub fn betti_svg(sub: &BettiCurve, sup: &BettiCurve, title: &str) -> String {
    let steps = |c: &BettiCurve, flip: bool| -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = c
            .grid()
            .iter()
            .zip(c.counts())
            .map(|(&a, &n)| (if flip { -a } else { a }, n as f64))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out = Vec::with_capacity(2 * pts.len());
        for (i, &(x, y)) in pts.iter().enumerate() {
            if i > 0 {
                out.push((x, pts[i - 1].1));
            }
            out.push((x, y));
        }
        out
    };
    curves_svg(
        title,
        "threshold",
        "intervals alive",
        &[
            ("sublevel", steps(sub, false)),
            ("superlevel", steps(sup, true)),
        ],
    )
}
