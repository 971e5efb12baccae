//! Semicircular 2-D view of consecutive axes.
//!
//! Axis `ℓ` of an interval `[a, b]` points along `θ_ℓ = (ℓ − a)π / (b − a)`,
//! so the first axis of the interval lies on the positive x-axis and the
//! last on the negative one. Each word lands at `Q = T̂_I · P_I`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use ndarray::{s, Array2, Axis};

use crate::dimred::Interval;
use crate::embed_io::{normalize_rows, EmbeddingMatrix, Vocabulary};
use crate::redact::redact;
use crate::tour::top_k_indices;
use crate::{Error, Result};

/// Words per axis eligible for labels.
pub const TOP_WORDS: usize = 5;
/// Background points drawn at most; the rest are thinned by a fixed stride.
pub const MAX_BACKGROUND: usize = 20_000;

const WIDTH: f64 = 900.0;
const HEIGHT: f64 = 500.0;
const MARGIN: f64 = 50.0;
const LABEL_STEP: f64 = 12.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

#[derive(Debug, Clone)]
pub struct ProjectionFrame {
    pub interval: Interval,
    /// `|I| × 2`, row `ℓ − a` is `φ_ℓ`.
    pub directions: Array2<f64>,
    /// `n × 2`.
    pub coords: Array2<f64>,
    /// Row indices of the labelled words, ascending.
    pub show: Vec<usize>,
    /// Per row, the interval axis (0-based offset) holding its largest value.
    pub argmax: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScatterFormat {
    Svg,
    Csv,
}

impl std::str::FromStr for ScatterFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svg" => Ok(ScatterFormat::Svg),
            "csv" => Ok(ScatterFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown plot format {other:?}"))),
        }
    }
}

/// Unit directions `(cos θ_ℓ, sin θ_ℓ)`; a one-axis interval points along +x.
pub fn projection_directions(interval: Interval) -> Result<Array2<f64>> {
    if interval.is_empty() {
        return Err(Error::InvalidArgument(format!("empty interval {interval}")));
    }
    let len = interval.len();
    let span = (len - 1) as f64;
    Ok(Array2::from_shape_fn((len, 2), |(i, c)| {
        if len == 1 {
            return [1.0, 0.0][c];
        }
        // exact endpoints and midpoint
        let (cos, sin) = if 2 * i == len - 1 {
            (0.0, 1.0)
        } else if i == len - 1 {
            (-1.0, 0.0)
        } else {
            let theta = i as f64 * std::f64::consts::PI / span;
            (theta.cos(), theta.sin())
        };
        [cos, sin][c]
    }))
}

/// Projects the interval's columns of the row-normalized matrix onto the
/// semicircle. Rows are normalized here unless already flagged.
pub fn project_2d(t: &EmbeddingMatrix, interval: Interval) -> Result<ProjectionFrame> {
    if interval.end > t.ncols() || interval.is_empty() {
        return Err(Error::InvalidArgument(format!("interval {interval} outside 1–{}", t.ncols())));
    }
    let normalized;
    let t_hat = if t.is_normalized() {
        t
    } else {
        normalized = normalize_rows(t)?;
        &normalized
    };
    let block = t_hat.data().slice(s![.., interval.start..interval.end]);
    let directions = projection_directions(interval)?;
    let coords = block.dot(&directions);

    let k = TOP_WORDS.min(t_hat.nrows());
    let mut candidates = vec![false; t_hat.nrows()];
    for col in block.axis_iter(Axis(1)) {
        for i in top_k_indices(col, k)? {
            candidates[i] = true;
        }
    }
    let show = (0..t_hat.nrows()).filter(|&i| candidates[i] && coords[[i, 1]] >= 0.0).collect();

    let argmax = block
        .outer_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect();
    Ok(ProjectionFrame { interval, directions, coords, show, argmax })
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// SVG text of the frame. Background words above the x-axis are small dots
/// coloured by their strongest axis; shown words get a ring and a label.
pub fn render_svg(frame: &ProjectionFrame, vocab: &Vocabulary) -> String {
    let max_norm = frame
        .coords
        .outer_iter()
        .filter(|q| q[1] >= 0.0)
        .map(|q| q.dot(&q).sqrt())
        .fold(0.0f64, f64::max);
    let scale = max_norm.max(1.0);
    let unit = (WIDTH - 2.0 * MARGIN) / (2.0 * scale);
    let (cx, cy) = (WIDTH / 2.0, HEIGHT - MARGIN);
    let px = |x: f64, y: f64| (cx + x * unit, cy - y * unit);
    let color = |axis: usize| PALETTE[axis % PALETTE.len()];

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(svg, r#"<g font-family="sans-serif" font-size="10">"#);

    let r = unit;
    let _ = writeln!(
        svg,
        r##"<path d="M {:.2} {:.2} A {:.2} {:.2} 0 0 1 {:.2} {:.2}" fill="none" stroke="#cccccc"/>"##,
        cx - r,
        cy,
        r,
        r,
        cx + r,
        cy
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{:.2}" y1="{cy:.2}" x2="{:.2}" y2="{cy:.2}" stroke="#999999"/>"##,
        MARGIN,
        WIDTH - MARGIN
    );
    for (i, phi) in frame.directions.outer_iter().enumerate() {
        let (x, y) = px(phi[0], phi[1]);
        let (lx, ly) = px(phi[0] * 1.04, phi[1] * 1.04);
        let _ = writeln!(
            svg,
            r#"<line x1="{cx:.2}" y1="{cy:.2}" x2="{x:.2}" y2="{y:.2}" stroke="{}" stroke-opacity="0.5"/>"#,
            color(i)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{lx:.2}" y="{ly:.2}" text-anchor="middle" fill="{}">{}</text>"#,
            color(i),
            frame.interval.start + i + 1
        );
    }

    let visible: Vec<usize> = (0..frame.coords.nrows()).filter(|&i| frame.coords[[i, 1]] >= 0.0).collect();
    let stride = visible.len().div_ceil(MAX_BACKGROUND).max(1);
    let _ = writeln!(svg, r#"<g fill-opacity="0.35">"#);
    for &i in visible.iter().step_by(stride) {
        let (x, y) = px(frame.coords[[i, 0]], frame.coords[[i, 1]]);
        let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1.5" fill="{}"/>"#, color(frame.argmax[i]));
    }
    let _ = writeln!(svg, "</g>");

    let mut placed: Vec<(f64, f64, f64)> = Vec::new();
    for &i in &frame.show {
        let (x, y) = px(frame.coords[[i, 0]], frame.coords[[i, 1]]);
        let word = redact(vocab.word(i));
        let w = 6.0 * word.chars().count() as f64;
        let (lx, mut ly) = (x + 4.0, y - 4.0);
        while placed.iter().any(|&(ox, oy, ow)| (lx - ox).abs() < w.max(ow) && (ly - oy).abs() < LABEL_STEP) {
            ly -= LABEL_STEP;
        }
        placed.push((lx, ly, w));
        let c = color(frame.argmax[i]);
        let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3" fill="{c}" stroke="black" stroke-width="0.5"/>"#);
        let _ = writeln!(svg, r#"<text x="{lx:.2}" y="{ly:.2}" fill="{c}">{}</text>"#, escape(&word));
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    svg
}

/// `word,x,y,argmax_axis,shown` for every row; `argmax_axis` is 1-based.
pub fn write_csv<W: Write>(frame: &ProjectionFrame, vocab: &Vocabulary, out: W) -> Result<()> {
    let mut shown = vec![false; frame.coords.nrows()];
    for &i in &frame.show {
        shown[i] = true;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["word", "x", "y", "argmax_axis", "shown"])?;
    for (i, q) in frame.coords.outer_iter().enumerate() {
        w.write_record([
            redact(vocab.word(i)).as_ref(),
            &format!("{:.6}", q[0]),
            &format!("{:.6}", q[1]),
            &(frame.interval.start + frame.argmax[i] + 1).to_string(),
            if shown[i] { "true" } else { "false" },
        ])?;
    }
    w.flush().map_err(|e| Error::Numeric(format!("csv flush: {e}")))?;
    Ok(())
}

pub fn emit_scatter(frame: &ProjectionFrame, vocab: &Vocabulary, format: ScatterFormat, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if vocab.len() != frame.coords.nrows() {
        return Err(Error::DimensionMismatch(format!("{} words for {} points", vocab.len(), frame.coords.nrows())));
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    match format {
        ScatterFormat::Svg => out.write_all(render_svg(frame, vocab).as_bytes()).map_err(|e| Error::io(path, e))?,
        ScatterFormat::Csv => write_csv(frame, vocab, &mut out)?,
    }
    out.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn direction_examples() {
        let p = projection_directions(Interval::new(3, 8).unwrap()).unwrap();
        assert_eq!(p.row(0).to_vec(), vec![1.0, 0.0]);
        assert_eq!(p.row(4).to_vec(), vec![-1.0, 0.0]);
        assert_eq!(p.row(2).to_vec(), vec![0.0, 1.0]);
        for row in p.outer_iter() {
            assert_abs_diff_eq!(row.dot(&row), 1.0, epsilon = 1e-15);
        }
        let single = projection_directions(Interval::new(0, 1).unwrap()).unwrap();
        assert_eq!(single.row(0).to_vec(), vec![1.0, 0.0]);
    }

    #[test]
    fn hand_multiplied_projection() {
        let s2 = 0.5f64.sqrt();
        let t = array![[1.0, 0.0, 0.0], [0.0, s2, s2], [0.6, 0.0, 0.8]];
        let e = EmbeddingMatrix::from_array(t).unwrap();
        let f = project_2d(&e, Interval::new(0, 3).unwrap()).unwrap();
        let expect = array![[1.0, 0.0], [-s2, s2], [0.6 - 0.8, 0.0]];
        for (a, b) in f.coords.iter().zip(expect.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
        assert_eq!(f.argmax, vec![0, 1, 2]);
        assert_eq!(f.show, vec![0, 1, 2]);
    }

    #[test]
    fn indicator_row_lands_on_first_direction() {
        let e = EmbeddingMatrix::from_array(array![[0.0, 2.0, 0.0], [0.0, 1.0, 1.0]]).unwrap();
        let f = project_2d(&e, Interval::new(1, 3).unwrap()).unwrap();
        assert_eq!(f.coords.row(0).to_vec(), vec![1.0, 0.0]);
        assert!(project_2d(&e, Interval::new(1, 4).unwrap()).is_err());
    }

    #[test]
    fn show_set_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = Array2::from_shape_simple_fn((200, 12), || rng.random_range(-1.0..1.0));
        let e = EmbeddingMatrix::from_array(t).unwrap();
        let interval = Interval::new(4, 10).unwrap();
        let f = project_2d(&e, interval).unwrap();
        let t_hat = normalize_rows(&e).unwrap();
        let mut expect = Vec::new();
        for axis in interval.start..interval.end {
            expect.extend(top_k_indices(t_hat.data().column(axis), TOP_WORDS).unwrap());
        }
        expect.sort_unstable();
        expect.dedup();
        expect.retain(|&i| f.coords[[i, 1]] >= 0.0);
        assert_eq!(f.show, expect);

        // non-expansive: ‖q‖ ≤ ‖t̂_I‖ · σ_max(P)
        let sigma = crate::linalg::symmetric_eigen(f.directions.t().dot(&f.directions).view())
            .unwrap()
            .0[0]
            .sqrt();
        for i in 0..200 {
            let q = f.coords.row(i);
            let block = t_hat.data().slice(s![i, 4..10]);
            assert!(q.dot(&q).sqrt() <= block.dot(&block).sqrt() * sigma + 1e-12);
            let best = f.argmax[i];
            assert!(block.iter().all(|&v| v <= block[best]));
        }
    }

    #[test]
    fn svg_is_deterministic_and_redacted() {
        let e = EmbeddingMatrix::new(
            Vocabulary::new(vec!["a<b".into(), "www.x.com".into(), "cat".into()]).unwrap(),
            array![[1.0, 0.2], [0.1, 1.0], [0.5, 0.5]],
        )
        .unwrap();
        let f = project_2d(&e, Interval::new(0, 2).unwrap()).unwrap();
        let a = render_svg(&f, e.vocab());
        assert_eq!(a, render_svg(&f, e.vocab()));
        assert!(a.contains("a&lt;b") && a.contains("***.com") && !a.contains("www.x.com"));

        let mut buf = Vec::new();
        write_csv(&f, e.vocab(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("word,x,y,argmax_axis,shown\n"));
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn empty_show_set_still_renders() {
        // every row points below the x-axis
        let e = EmbeddingMatrix::from_array(array![[-1.0, -1.0, 1.0], [-1.0, -2.0, 3.0]]).unwrap();
        let f = project_2d(&e, Interval::new(0, 3).unwrap()).unwrap();
        assert!(f.show.is_empty());
        let svg = render_svg(&f, e.vocab());
        assert!(svg.contains("<line") && !svg.contains(r#"r="3""#));
        let mut buf = Vec::new();
        write_csv(&f, e.vocab(), &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().lines().skip(1).all(|l| l.ends_with(",false")));
    }
}
