//! SVG picture of a sweep decomposition: the function, its cumulative
//! positive and negative variation `g` and `h`, the broken line through the
//! sweep points, and the summands.

use std::fmt::Write;

use num::Zero;

use crate::exact::{fmt_q, q_to_f64, Q};
use crate::pl_line::{DomainKind, PLFunction};
use crate::sweep::{sweep_points, SweepError, UnimodalDecomposition};

const W: f64 = 800.0;
const H: f64 = 420.0;
const PAD: f64 = 40.0;
const COLORS: &[&str] = &["#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2", "#17becf", "#bcbd22"];

struct Frame {
    x0: f64,
    x1: f64,
    ymax: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0).max(1e-12) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - y / self.ymax.max(1e-12) * (H - 2.0 * PAD)
    }

    fn polyline(&self, out: &mut String, pts: &[(f64, f64)], color: &str, width: f64, dash: Option<&str>, label: &str) {
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y))).collect();
        let dash = dash.map(|d| format!(" stroke-dasharray=\"{d}\"")).unwrap_or_default();
        let _ = writeln!(
            out,
            "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"{width}\"{dash} points=\"{}\"><title>{label}</title></polyline>",
            coords.join(" ")
        );
    }
}

fn running(vs: &[Q]) -> (Vec<Q>, Vec<Q>) {
    let mut g = vec![Q::zero()];
    let mut h = vec![Q::zero()];
    for w in vs.windows(2) {
        let d = &w[1] - &w[0];
        let (gl, hl) = (g.last().unwrap().clone(), h.last().unwrap().clone());
        if d > Q::zero() {
            g.push(gl + d);
            h.push(hl);
        } else {
            g.push(gl);
            h.push(hl - d);
        }
    }
    (g, h)
}

fn at(xs: &[Q], vs: &[Q], x: &Q) -> Q {
    let k = xs.partition_point(|t| t <= x);
    if k == 0 {
        return vs[0].clone();
    }
    if k == xs.len() {
        return vs[k - 1].clone();
    }
    let t = (x - &xs[k - 1]) / (&xs[k] - &xs[k - 1]);
    &vs[k - 1] + (&vs[k] - &vs[k - 1]) * t
}

fn to_f(xs: &[Q], vs: &[Q]) -> Vec<(f64, f64)> {
    xs.iter().zip(vs).map(|(x, v)| (q_to_f64(x), q_to_f64(v))).collect()
}

/// Plots on powered values; needs them rational.
pub fn decomposition_svg(f: &PLFunction, d: &UnimodalDecomposition) -> Result<String, SweepError> {
    let vs = f
        .powered_rational()
        .ok_or_else(|| SweepError::UnsupportedExponent(fmt_q(f.exponent())))?;
    let xs = f.breakpoints();
    let (g, h) = running(&vs);
    let line = f.domain() == DomainKind::Line;
    let mut ymax = vs.iter().map(q_to_f64).fold(0.0, f64::max);
    if line {
        ymax = ymax.max(q_to_f64(g.last().unwrap())).max(q_to_f64(h.last().unwrap()));
    }
    let mut x0 = q_to_f64(&xs[0]);
    let mut x1 = q_to_f64(&xs[xs.len() - 1]);
    for u in &d.summands {
        x0 = x0.min(q_to_f64(&u.breakpoints()[0]));
        x1 = x1.max(q_to_f64(&u.breakpoints()[u.len() - 1]));
    }
    let fr = Frame { x0, x1, ymax };
    let mut out = String::new();
    let _ = writeln!(out, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">");
    let _ = writeln!(out, "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "  <line x1=\"{PAD}\" y1=\"{y}\" x2=\"{x2}\" y2=\"{y}\" stroke=\"#999\"/>",
        y = fr.py(0.0),
        x2 = W - PAD
    );
    if line {
        fr.polyline(&mut out, &to_f(xs, &g), "#ff7f0e", 1.5, None, "g: positive variation");
        fr.polyline(&mut out, &to_f(xs, &h), "#1f77b4", 1.5, None, "h: negative variation");
        let pts = sweep_points(f)?;
        let mut broken = vec![(q_to_f64(&xs[0]), 0.0)];
        let mut level = Q::zero();
        for x in &pts {
            broken.push((q_to_f64(x), q_to_f64(&level)));
            level = at(xs, &g, x);
            broken.push((q_to_f64(x), q_to_f64(&level)));
        }
        broken.push((q_to_f64(&xs[xs.len() - 1]), q_to_f64(&level)));
        fr.polyline(&mut out, &broken, "#7f7f7f", 1.0, Some("6 4"), "broken line");
    }
    fr.polyline(&mut out, &to_f(xs, &vs), "black", 2.5, None, "f");
    for (i, u) in d.summands.iter().enumerate() {
        fr.polyline(&mut out, &to_f(u.breakpoints(), u.values()), COLORS[i % COLORS.len()], 1.5, Some("2 2"), &format!("u{}", i + 1));
    }
    let mut legend = vec![("f", "black")];
    if line {
        legend.extend([("g", "#ff7f0e"), ("h", "#1f77b4"), ("broken line", "#7f7f7f")]);
    }
    let names: Vec<String> = (1..=d.summands.len()).map(|i| format!("u{i}")).collect();
    for (i, n) in names.iter().enumerate() {
        legend.push((n, COLORS[i % COLORS.len()]));
    }
    for (i, (name, color)) in legend.iter().enumerate() {
        let _ = writeln!(out, "  <text x=\"{}\" y=\"20\" font-size=\"12\" fill=\"{color}\">{name}</text>", PAD + 90.0 * i as f64);
    }
    out.push_str("</svg>\n");
    Ok(out)
}
