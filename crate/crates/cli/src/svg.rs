//! Minimal hand-rolled SVG renderings of emitted CSV tables.
//!
//! Plots are built only from parsed CSV rows, never from internal state, so
//! the pictures cannot show anything the data files do not contain.

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

struct Axes {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Axes {
    fn around(xs: impl Iterator<Item = f64>, ys: impl Iterator<Item = f64>) -> Axes {
        let mut a = Axes {
            x_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_min: f64::INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for x in xs {
            a.x_min = a.x_min.min(x);
            a.x_max = a.x_max.max(x);
        }
        for y in ys {
            a.y_min = a.y_min.min(y);
            a.y_max = a.y_max.max(y);
        }
        for (lo, hi) in [(&mut a.x_min, &mut a.x_max), (&mut a.y_min, &mut a.y_max)] {
            if !lo.is_finite() || !hi.is_finite() {
                (*lo, *hi) = (0.0, 1.0);
            } else if *hi - *lo < 1e-300 {
                *lo -= 0.5;
                *hi += 0.5;
            } else {
                let pad = 0.05 * (*hi - *lo);
                *lo -= pad;
                *hi += pad;
            }
        }
        a
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x_min) / (self.x_max - self.x_min) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y - self.y_min) / (self.y_max - self.y_min) * (HEIGHT - 2.0 * MARGIN)
    }
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(1e-3..1e4).contains(&a) {
        format!("{v:.2e}")
    } else {
        let s = format!("{v:.4}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn frame(out: &mut String, axes: &Axes, title: &str, x_label: &str, y_label: &str) {
    out.push_str(&format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">
<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>
<text x="{:.1}" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>
"#,
        WIDTH / 2.0
    ));
    let (x0, x1) = (MARGIN, WIDTH - MARGIN);
    let (y0, y1) = (HEIGHT - MARGIN, MARGIN);
    out.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let xv = axes.x_min + f * (axes.x_max - axes.x_min);
        let yv = axes.y_min + f * (axes.y_max - axes.y_min);
        let xp = axes.px(xv);
        let yp = axes.py(yv);
        out.push_str(&format!(
            "<line x1=\"{xp:.1}\" y1=\"{y0}\" x2=\"{xp:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n\
             <text x=\"{xp:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            y0 + 5.0,
            y0 + 18.0,
            tick_label(xv)
        ));
        out.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{yp:.1}\" x2=\"{x0}\" y2=\"{yp:.1}\" stroke=\"black\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{}</text>\n",
            x0 - 5.0,
            x0 - 8.0,
            yp + 4.0,
            tick_label(yv)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">{x_label}</text>\n",
        WIDTH / 2.0,
        HEIGHT - 15.0
    ));
    out.push_str(&format!(
        "<text x=\"18\" y=\"{:.1}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 {:.1})\">{y_label}</text>\n",
        HEIGHT / 2.0,
        HEIGHT / 2.0
    ));
}

fn legend(out: &mut String, labels: &[&str]) {
    for (i, label) in labels.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN + 16.0 * i as f64;
        out.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{label}</text>\n",
            WIDTH - MARGIN - 160.0,
            y,
            WIDTH - MARGIN - 143.0,
            y + 11.0
        ));
    }
}

/// Line plot of one or more `(label, ys)` series over a shared `xs` grid.
pub fn line_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    series: &[(&str, Vec<f64>)],
) -> String {
    let axes = Axes::around(
        xs.iter().copied(),
        series.iter().flat_map(|(_, ys)| ys.iter().copied()),
    );
    let mut out = String::new();
    frame(&mut out, &axes, title, x_label, y_label);
    for (i, (_, ys)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = xs
            .iter()
            .zip(ys.iter())
            .map(|(&x, &y)| format!("{:.2},{:.2}", axes.px(x), axes.py(y)))
            .collect();
        out.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            pts.join(" ")
        ));
    }
    let labels: Vec<&str> = series.iter().map(|(l, _)| *l).collect();
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

/// Scatter plot of `(label, points)` frames, one color per frame.
pub fn scatter_plot(
    title: &str,
    x_label: &str,
    y_label: &str,
    frames: &[(String, Vec<(f64, f64)>)],
) -> String {
    let axes = Axes::around(
        frames.iter().flat_map(|(_, ps)| ps.iter().map(|p| p.0)),
        frames.iter().flat_map(|(_, ps)| ps.iter().map(|p| p.1)),
    );
    let mut out = String::new();
    frame(&mut out, &axes, title, x_label, y_label);
    for (i, (_, points)) in frames.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for &(x, y) in points {
            out.push_str(&format!(
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"2.5\" fill=\"{color}\"/>\n",
                axes.px(x),
                axes.py(y)
            ));
        }
    }
    let labels: Vec<&str> = frames.iter().map(|(l, _)| l.as_str()).collect();
    legend(&mut out, &labels);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_plot_emits_one_polyline_per_series() {
        let xs = [0.0, 0.5, 1.0];
        let s = vec![("a", vec![0.0, 1.0, 4.0]), ("b", vec![0.0, 0.5, 1.0])];
        let svg = line_plot("t", "x", "y", &xs, &s);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn scatter_plot_emits_one_circle_per_point() {
        let frames = vec![
            ("t=0".to_string(), vec![(0.0, 0.0), (1.0, 1.0)]),
            ("t=1".to_string(), vec![(2.0, -1.0)]),
        ];
        let svg = scatter_plot("s", "x", "y", &frames);
        assert_eq!(svg.matches("<circle").count(), 3);
    }

    #[test]
    fn degenerate_ranges_stay_finite() {
        let svg = line_plot("c", "x", "y", &[1.0, 1.0], &[("a", vec![2.0, 2.0])]);
        assert!(!svg.contains("NaN") && !svg.contains("inf"));
    }
}
