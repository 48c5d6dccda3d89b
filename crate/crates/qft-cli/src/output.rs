//! CSV and SVG writers.

use std::io;
use std::path::Path;

/// 17 significant digits; non-finite values spelled out.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()
}

/// Single-series line chart.
pub fn write_svg(path: &Path, title: &str, xs: &[f64], ys: &[f64]) -> io::Result<()> {
    let (w, h, pad) = (640.0, 400.0, 50.0);
    let finite: Vec<(f64, f64)> = xs.iter().zip(ys).map(|(a, b)| (*a, *b)).filter(|(a, b)| a.is_finite() && b.is_finite()).collect();
    let (x0, x1) = bounds(finite.iter().map(|p| p.0));
    let (y0, y1) = bounds(finite.iter().map(|p| p.1));
    let sx = |x: f64| pad + (x - x0) / (x1 - x0) * (w - 2.0 * pad);
    let sy = |y: f64| h - pad - (y - y0) / (y1 - y0) * (h - 2.0 * pad);
    let pts: Vec<String> = finite.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
    let svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{pad}\" y=\"25\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>\n\
         <line x1=\"{pad}\" y1=\"{yb}\" x2=\"{xr}\" y2=\"{yb}\" stroke=\"black\"/>\n\
         <line x1=\"{pad}\" y1=\"{pad}\" x2=\"{pad}\" y2=\"{yb}\" stroke=\"black\"/>\n\
         <text x=\"{pad}\" y=\"{yl}\" font-family=\"sans-serif\" font-size=\"10\">t = {x0:.4}</text>\n\
         <text x=\"{xr}\" y=\"{yl}\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\">t = {x1:.4}</text>\n\
         <text x=\"4\" y=\"{yb}\" font-family=\"sans-serif\" font-size=\"10\">{y0:.6e}</text>\n\
         <text x=\"4\" y=\"{yt}\" font-family=\"sans-serif\" font-size=\"10\">{y1:.6e}</text>\n\
         <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"{}\"/>\n</svg>\n",
        pts.join(" "),
        yb = h - pad,
        xr = w - pad,
        yl = h - pad + 15.0,
        yt = pad - 5.0,
    );
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, svg)
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        let pad = lo.abs().max(1.0) * 1e-9;
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}
