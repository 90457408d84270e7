//! Minimal deterministic SVG figures: interval plots, significance-shaded
//! bar panels, p-value panels, scatter panels, and the four-panel metrics
//! grid. Output is plain text built with fixed formatting, so identical
//! inputs yield identical bytes.

use std::fmt::Write as _;

const PANEL_W: f64 = 360.0;
const PANEL_H: f64 = 300.0;
const MARGIN_L: f64 = 56.0;
const MARGIN_R: f64 = 16.0;
const MARGIN_T: f64 = 34.0;
const MARGIN_B: f64 = 44.0;

pub const COLOR_EXPOSED: &str = "#d95f02";
pub const COLOR_DIFFERENCE: &str = "#7570b3";
pub const COLOR_BAYES: &str = "#1b9e77";

fn fmt(v: f64) -> String {
    if !v.is_finite() {
        return "0".into();
    }
    let s = format!("{v:.2}");
    s
}

/// Tick label: trims trailing zeros from a fixed representation.
fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    let s = if !(0.001..1000.0).contains(&a) {
        format!("{v:.1e}")
    } else if a >= 10.0 {
        format!("{v:.0}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    };
    s
}

#[derive(Debug, Clone, Copy)]
struct Scale {
    lo: f64,
    hi: f64,
    px_lo: f64,
    px_hi: f64,
}

impl Scale {
    fn map(&self, v: f64) -> f64 {
        let t = (v - self.lo) / (self.hi - self.lo);
        self.px_lo + t * (self.px_hi - self.px_lo)
    }
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let range = (hi - lo).abs().max(1e-12);
    let raw_step = range / 5.0;
    let mag = 10f64.powf(raw_step.log10().floor());
    let norm = raw_step / mag;
    let step = if norm < 1.5 {
        mag
    } else if norm < 3.5 {
        2.0 * mag
    } else if norm < 7.5 {
        5.0 * mag
    } else {
        10.0 * mag
    };
    let start = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    let mut t = start;
    while t <= hi + 1e-9 * range {
        ticks.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    ticks
}

fn expand(lo: f64, hi: f64) -> (f64, f64) {
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if (hi - lo).abs() < 1e-12 {
        return (lo - 1.0, hi + 1.0);
    }
    let pad = 0.06 * (hi - lo);
    (lo - pad, hi + pad)
}

/// One panel with axes; data drawing is appended by the callers through the
/// closure, working in data coordinates via the returned scales.
struct Panel {
    svg: String,
    x: Scale,
    y: Scale,
}

impl Panel {
    fn new(
        origin_x: f64,
        title: &str,
        x_label: &str,
        y_label: &str,
        (x_lo, x_hi): (f64, f64),
        (y_lo, y_hi): (f64, f64),
    ) -> Panel {
        let x = Scale {
            lo: x_lo,
            hi: x_hi,
            px_lo: origin_x + MARGIN_L,
            px_hi: origin_x + PANEL_W - MARGIN_R,
        };
        let y = Scale {
            lo: y_lo,
            hi: y_hi,
            px_lo: PANEL_H - MARGIN_B,
            px_hi: MARGIN_T,
        };
        let mut svg = String::new();
        let _ = write!(
            svg,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#444" stroke-width="1"/>"##,
            fmt(x.px_lo),
            fmt(y.px_hi),
            fmt(x.px_hi - x.px_lo),
            fmt(y.px_lo - y.px_hi)
        );
        let _ = write!(
            svg,
            r##"<text x="{}" y="20" text-anchor="middle" font-size="13" font-weight="bold">{}</text>"##,
            fmt(origin_x + PANEL_W / 2.0),
            title
        );
        let _ = write!(
            svg,
            r##"<text x="{}" y="{}" text-anchor="middle" font-size="11">{}</text>"##,
            fmt(origin_x + MARGIN_L + (PANEL_W - MARGIN_L - MARGIN_R) / 2.0),
            fmt(PANEL_H - 10.0),
            x_label
        );
        let _ = write!(
            svg,
            r##"<text x="{}" y="{}" text-anchor="middle" font-size="11" transform="rotate(-90 {} {})">{}</text>"##,
            fmt(origin_x + 14.0),
            fmt(PANEL_H / 2.0),
            fmt(origin_x + 14.0),
            fmt(PANEL_H / 2.0),
            y_label
        );
        for t in nice_ticks(x.lo, x.hi) {
            let px = x.map(t);
            let _ = write!(
                svg,
                r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#444" stroke-width="1"/><text x="{0}" y="{3}" text-anchor="middle" font-size="10">{4}</text>"##,
                fmt(px),
                fmt(y.px_lo),
                fmt(y.px_lo + 4.0),
                fmt(y.px_lo + 16.0),
                tick_label(t)
            );
        }
        for t in nice_ticks(y.lo, y.hi) {
            let py = y.map(t);
            let _ = write!(
                svg,
                r##"<line x1="{0}" y1="{2}" x2="{1}" y2="{2}" stroke="#444" stroke-width="1"/><text x="{3}" y="{4}" text-anchor="end" font-size="10">{5}</text>"##,
                fmt(x.px_lo - 4.0),
                fmt(x.px_lo),
                fmt(py),
                fmt(x.px_lo - 6.0),
                fmt(py + 3.5),
                tick_label(t)
            );
        }
        Panel { svg, x, y }
    }

    fn hline(&mut self, v: f64, color: &str, dash: bool) {
        if v < self.y.lo || v > self.y.hi {
            return;
        }
        let py = self.y.map(v);
        let dash_attr = if dash {
            r##" stroke-dasharray="4 3""##
        } else {
            ""
        };
        let _ = write!(
            self.svg,
            r##"<line x1="{0}" y1="{2}" x2="{1}" y2="{2}" stroke="{3}"{4} stroke-width="1"/>"##,
            fmt(self.x.px_lo),
            fmt(self.x.px_hi),
            fmt(py),
            color,
            dash_attr
        );
    }
}

fn document(panels: Vec<Panel>) -> String {
    let n = panels.len();
    let mut out = format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" font-family="sans-serif">"##,
        (n as f64 * PANEL_W) as u32,
        PANEL_H as u32
    );
    out.push_str(r##"<rect width="100%" height="100%" fill="white"/>"##);
    for p in panels {
        out.push_str(&p.svg);
    }
    out.push_str("</svg>\n");
    out
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo > hi {
        (0.0, 1.0)
    } else {
        expand(lo, hi)
    }
}

/// Bar panel shaded by significance band plus a p-value panel, the layout of
/// the original published summary.
pub fn estimates_figure(
    title: &str,
    xs: &[f64],
    estimates: &[f64],
    bands: &[shamstat::estimators::Band],
    p_values: &[f64],
    x_label: &str,
) -> String {
    use shamstat::estimators::Band;
    let (x_lo, x_hi) = bounds(xs.iter().copied());
    let (y_lo, y_hi) = bounds(estimates.iter().copied().chain([0.0]));
    let mut left = Panel::new(0.0, title, x_label, "estimate", (x_lo, x_hi), (y_lo, y_hi));
    left.hline(0.0, "#888", false);
    let zero_py = left.y.map(0.0);
    for ((x, e), band) in xs.iter().zip(estimates).zip(bands) {
        let fill = match band {
            Band::Below01 => "#222222",
            Band::Between => "#9a9a9a",
            Band::NotSignificant => "#ffffff",
        };
        let px = left.x.map(*x);
        let py = left.y.map(*e);
        let (top, h) = if py < zero_py {
            (py, zero_py - py)
        } else {
            (zero_py, py - zero_py)
        };
        let _ = write!(
            left.svg,
            r##"<rect x="{}" y="{}" width="5" height="{}" fill="{}" stroke="#222" stroke-width="0.7"/>"##,
            fmt(px - 2.5),
            fmt(top),
            fmt(h.max(0.5)),
            fill
        );
    }

    let mut right = Panel::new(
        PANEL_W,
        "p-values",
        x_label,
        "two-sided p",
        (x_lo, x_hi),
        (0.0, 1.0),
    );
    right.hline(0.05, "#777", true);
    right.hline(0.01, "#777", true);
    for (x, p) in xs.iter().zip(p_values) {
        let _ = write!(
            right.svg,
            r##"<circle cx="{}" cy="{}" r="3" fill="#333"/>"##,
            fmt(right.x.map(*x)),
            fmt(right.y.map(*p))
        );
    }
    document(vec![left, right])
}

/// Title, x positions, centers, and half-widths of one interval panel.
pub type IntervalPanel<'a> = (&'a str, &'a [f64], &'a [f64], &'a [f64]);

/// Point-with-error-bar panels side by side (model estimates vs raw data).
pub fn interval_figure(panels_data: &[IntervalPanel], x_label: &str, y_label: &str) -> String {
    let (x_lo, x_hi) = bounds(
        panels_data
            .iter()
            .flat_map(|(_, xs, ..)| xs.iter().copied()),
    );
    let (y_lo, y_hi) = bounds(panels_data.iter().flat_map(|(_, _, ys, es)| {
        ys.iter()
            .zip(es.iter())
            .flat_map(|(y, e)| [y - e, y + e])
            .chain([0.0])
    }));
    let mut panels = Vec::new();
    for (i, (title, xs, ys, errs)) in panels_data.iter().enumerate() {
        let mut p = Panel::new(
            i as f64 * PANEL_W,
            title,
            x_label,
            y_label,
            (x_lo, x_hi),
            (y_lo, y_hi),
        );
        p.hline(0.0, "#888", false);
        for ((x, y), e) in xs.iter().zip(ys.iter()).zip(errs.iter()) {
            let px = p.x.map(*x);
            let _ = write!(
                p.svg,
                r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#555" stroke-width="1"/><circle cx="{0}" cy="{3}" r="2.5" fill="#111"/>"##,
                fmt(px),
                fmt(p.y.map(y - e)),
                fmt(p.y.map(y + e)),
                fmt(p.y.map(*y))
            );
        }
        panels.push(p);
    }
    document(panels)
}

/// Sham estimates vs covariate plus sham-vs-exposed scatter.
pub fn sham_figure(xs: &[f64], y0: &[f64], s0: &[f64], y1: &[f64], x_label: &str) -> String {
    let (x_lo, x_hi) = bounds(xs.iter().copied());
    let (sy_lo, sy_hi) = bounds(
        y0.iter()
            .zip(s0)
            .flat_map(|(y, s)| [y - s, y + s])
            .chain([0.0]),
    );
    let mut left = Panel::new(
        0.0,
        "sham estimates",
        x_label,
        "sham estimate",
        (x_lo, x_hi),
        (sy_lo, sy_hi),
    );
    left.hline(0.0, "#888", false);
    for ((x, y), s) in xs.iter().zip(y0).zip(s0) {
        let px = left.x.map(*x);
        let _ = write!(
            left.svg,
            r##"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#555" stroke-width="1"/><circle cx="{0}" cy="{3}" r="2.5" fill="#111"/>"##,
            fmt(px),
            fmt(left.y.map(y - s)),
            fmt(left.y.map(y + s)),
            fmt(left.y.map(*y))
        );
    }

    let (e_lo, e_hi) = bounds(y1.iter().copied());
    let mut right = Panel::new(
        PANEL_W,
        "sham vs exposed",
        "exposed estimate",
        "sham estimate",
        (e_lo, e_hi),
        (sy_lo, sy_hi),
    );
    right.hline(0.0, "#888", false);
    for (x, y) in y1.iter().zip(y0) {
        let _ = write!(
            right.svg,
            r##"<circle cx="{}" cy="{}" r="3" fill="#333"/>"##,
            fmt(right.x.map(*x)),
            fmt(right.y.map(*y))
        );
    }
    document(vec![left, right])
}

/// Four metric panels (significance rate, type S rate, RMSE, rank
/// correlation) as lines over sigma_b, one series per estimator.
pub fn metrics_figure(grid: &shamstat::sim::MetricsGrid) -> String {
    use shamstat::sim::EstimatorKind;
    let estimators: Vec<EstimatorKind> = {
        let mut seen = Vec::new();
        for c in &grid.cells {
            if !seen.contains(&c.estimator) {
                seen.push(c.estimator);
            }
        }
        seen
    };
    let sigma_bs: Vec<f64> = {
        let mut seen = Vec::new();
        for c in &grid.cells {
            if !seen.contains(&c.sigma_b) {
                seen.push(c.sigma_b);
            }
        }
        seen
    };
    let color = |e: EstimatorKind| match e {
        EstimatorKind::ExposedOnly => COLOR_EXPOSED,
        EstimatorKind::Difference => COLOR_DIFFERENCE,
        EstimatorKind::Bayes => COLOR_BAYES,
    };

    let metric_of = |c: &shamstat::sim::GridCell, m: usize| match m {
        0 => c.prop_significant,
        1 => c.type_s_rate,
        2 => c.rmse,
        _ => c.rank_corr,
    };
    let titles = [
        "proportion significant",
        "type S error rate",
        "root mean squared error",
        "rank correlation",
    ];

    let (x_lo, x_hi) = bounds(sigma_bs.iter().copied());
    let mut panels = Vec::new();
    #[allow(clippy::needless_range_loop)]
    for m in 0..4 {
        let (y_lo, y_hi) = match m {
            0 | 1 => (0.0, 1.0),
            2 => bounds(grid.cells.iter().map(|c| c.rmse).chain([0.0])),
            _ => bounds(grid.cells.iter().map(|c| c.rank_corr).chain([0.0, 1.0])),
        };
        let mut panel = Panel::new(
            m as f64 * PANEL_W,
            titles[m],
            "sigma_b",
            titles[m],
            (x_lo, x_hi),
            (y_lo, y_hi),
        );
        for &est in &estimators {
            let mut path = String::new();
            let mut started = false;
            for &sb in &sigma_bs {
                if let Some(c) = grid.cell(sb, est) {
                    let v = metric_of(c, m);
                    if !v.is_finite() {
                        continue;
                    }
                    let cmd = if started { 'L' } else { 'M' };
                    started = true;
                    let _ = write!(
                        path,
                        "{}{} {} ",
                        cmd,
                        fmt(panel.x.map(sb)),
                        fmt(panel.y.map(v))
                    );
                }
            }
            let _ = write!(
                panel.svg,
                r##"<path d="{}" fill="none" stroke="{}" stroke-width="2"/>"##,
                path.trim_end(),
                color(est)
            );
            for &sb in &sigma_bs {
                if let Some(c) = grid.cell(sb, est) {
                    let v = metric_of(c, m);
                    if v.is_finite() {
                        let _ = write!(
                            panel.svg,
                            r##"<circle cx="{}" cy="{}" r="2.5" fill="{}"/>"##,
                            fmt(panel.x.map(sb)),
                            fmt(panel.y.map(v)),
                            color(est)
                        );
                    }
                }
            }
        }
        // legend on the first panel
        if m == 0 {
            for (k, &est) in estimators.iter().enumerate() {
                let y = MARGIN_T + 14.0 + 14.0 * k as f64;
                let _ = write!(
                    panel.svg,
                    r##"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{3}" stroke-width="2"/><text x="{4}" y="{5}" font-size="10">{6}</text>"##,
                    fmt(MARGIN_L + 8.0),
                    fmt(y),
                    fmt(MARGIN_L + 28.0),
                    color(est),
                    fmt(MARGIN_L + 32.0),
                    fmt(y + 3.5),
                    est.name()
                );
            }
        }
        panels.push(panel);
    }
    document(panels)
}
