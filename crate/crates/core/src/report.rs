//! SVG heatmaps and histograms with CSV companions.
//!
//! Grids put depth on the horizontal axis and qubit count on the vertical
//! axis, smallest `n` at the bottom.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::harness::{BenchmarkMatrix, CellStatus, TopEntry};
use crate::metrics::{clamp_unit, DeltaGrid};
use crate::sim::ShotHistogram;
use crate::bits::BitString;

#[derive(Clone, Debug, PartialEq)]
pub struct Style {
    pub cell: f64,
    pub margin_left: f64,
    pub margin_top: f64,
    pub margin_bottom: f64,
    pub legend_width: f64,
    pub title: Option<String>,
}

impl Default for Style {
    fn default() -> Self {
        Self {
            cell: 18.0,
            margin_left: 64.0,
            margin_top: 36.0,
            margin_bottom: 52.0,
            legend_width: 150.0,
            title: None,
        }
    }
}

pub const NON_IDENTIFIED_FILL: &str = "#d3d3d3";
pub const SKIPPED_FILL: &str = "#ffffff";
pub const TARGET_FILL: &str = "#d62728";
pub const OTHER_FILL: &str = "#4c72b0";

/// Anchors of a perceptually ordered dark-to-light ramp (viridis samples).
const SEQUENTIAL: [(f64, [u8; 3]); 5] = [
    (0.0, [68, 1, 84]),
    (0.25, [59, 82, 139]),
    (0.5, [33, 145, 140]),
    (0.75, [94, 201, 98]),
    (1.0, [253, 231, 37]),
];
const POSITIVE: [u8; 3] = [178, 24, 43];
const NEGATIVE: [u8; 3] = [33, 102, 172];

fn hex([r, g, b]: [u8; 3]) -> String {
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn lerp(a: [u8; 3], b: [u8; 3], t: f64) -> [u8; 3] {
    let mix = |x: u8, y: u8| (x as f64 + (y as f64 - x as f64) * t).round() as u8;
    [mix(a[0], b[0]), mix(a[1], b[1]), mix(a[2], b[2])]
}

/// Fill for a fidelity error, clamped to `[0, 1]`.
pub fn sequential_color(f: f64) -> String {
    let f = clamp_unit(f);
    for w in SEQUENTIAL.windows(2) {
        let (x0, c0) = w[0];
        let (x1, c1) = w[1];
        if f <= x1 {
            return hex(lerp(c0, c1, (f - x0) / (x1 - x0)));
        }
    }
    hex(SEQUENTIAL[4].1)
}

/// Diverging fill on `[−1, 1]`: white at zero, red for positive, blue for negative.
pub fn delta_color(v: f64) -> String {
    let v = v.clamp(-1.0, 1.0);
    if v >= 0.0 {
        hex(lerp([255, 255, 255], POSITIVE, v))
    } else {
        hex(lerp([255, 255, 255], NEGATIVE, -v))
    }
}

struct Grid {
    qubits: Vec<usize>,
    depths: Vec<usize>,
    style: Style,
}

impl Grid {
    fn width(&self) -> f64 {
        self.style.margin_left + self.depths.len() as f64 * self.style.cell + self.style.legend_width
    }

    fn height(&self) -> f64 {
        self.style.margin_top + self.qubits.len() as f64 * self.style.cell + self.style.margin_bottom
    }

    fn x(&self, col: usize) -> f64 {
        self.style.margin_left + col as f64 * self.style.cell
    }

    /// Top edge of the row holding `qubits[row]` (row 0 drawn lowest).
    fn y(&self, row: usize) -> f64 {
        self.style.margin_top + (self.qubits.len() - 1 - row) as f64 * self.style.cell
    }

    fn open(&self, out: &mut String) {
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}" font-family="sans-serif" font-size="10">"#,
            self.width(),
            self.height(),
            self.width(),
            self.height()
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        if let Some(t) = &self.style.title {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="20" font-size="13">{}</text>"#,
                self.style.margin_left,
                escape(t)
            );
        }
    }

    fn axes(&self, out: &mut String) {
        let c = self.style.cell;
        let label_every = if self.depths.len() > 25 { 5 } else { 1 };
        let bottom = self.y(0) + c;
        for (col, d) in self.depths.iter().enumerate() {
            if col % label_every == 0 || col + 1 == self.depths.len() {
                let _ = writeln!(
                    out,
                    r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{d}</text>"#,
                    self.x(col) + c / 2.0,
                    bottom + 12.0
                );
            }
        }
        for (row, n) in self.qubits.iter().enumerate() {
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{n}</text>"#,
                self.style.margin_left - 4.0,
                self.y(row) + c / 2.0 + 3.5
            );
        }
        let mid_x = self.style.margin_left + self.depths.len() as f64 * c / 2.0;
        let _ = writeln!(
            out,
            r#"<text x="{mid_x:.1}" y="{:.1}" text-anchor="middle" font-size="12">Depth d</text>"#,
            bottom + 32.0
        );
        let mid_y = self.style.margin_top + self.qubits.len() as f64 * c / 2.0;
        let _ = writeln!(
            out,
            r#"<text x="18" y="{mid_y:.1}" text-anchor="middle" font-size="12" transform="rotate(-90 18 {mid_y:.1})">Qubits n</text>"#
        );
    }

    fn cell(&self, out: &mut String, row: usize, col: usize, fill: &str, n: usize, d: usize) {
        let _ = writeln!(
            out,
            r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{fill}" stroke="#eeeeee" stroke-width="0.5" data-n="{n}" data-d="{d}"/>"##,
            self.x(col),
            self.y(row),
            self.style.cell,
            self.style.cell
        );
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Vertices of the staircase separating executed cells (left) from skipped
/// ones, walking rows from the top of the drawing to the bottom.
pub fn boundary_vertices(matrix: &BenchmarkMatrix, style: &Style) -> Vec<(f64, f64)> {
    let grid = Grid {
        qubits: matrix.qubits(),
        depths: matrix.depths(),
        style: style.clone(),
    };
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for row in (0..grid.qubits.len()).rev() {
        let n = grid.qubits[row];
        let executed = grid
            .depths
            .iter()
            .rposition(|&d| matrix.get(n, d).is_some_and(|c| c.status != CellStatus::Skipped))
            .map_or(0, |col| col + 1);
        let x = grid.x(executed);
        let (top, bottom) = (grid.y(row), grid.y(row) + style.cell);
        for p in [(x, top), (x, bottom)] {
            if pts.last() != Some(&p) {
                pts.push(p);
            }
        }
    }
    pts
}

fn points_attr(pts: &[(f64, f64)]) -> String {
    pts.iter()
        .map(|(x, y)| format!("{x:.1},{y:.1}"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Success-matrix heatmap: identified cells colored by mean F.
pub fn render_matrix_heatmap(matrix: &BenchmarkMatrix, style: &Style) -> Result<String> {
    if matrix.cells.is_empty() {
        return Err(Error::InvalidArgument("empty benchmark matrix".into()));
    }
    let grid = Grid {
        qubits: matrix.qubits(),
        depths: matrix.depths(),
        style: style.clone(),
    };
    let mut out = String::new();
    grid.open(&mut out);
    for (row, &n) in grid.qubits.iter().enumerate() {
        for (col, &d) in grid.depths.iter().enumerate() {
            let Some(cell) = matrix.get(n, d) else { continue };
            let fill = match (cell.status, cell.mean_f) {
                (CellStatus::Identified, Some(f)) => sequential_color(f),
                (CellStatus::Identified, None) | (CellStatus::NonIdentified, _) => NON_IDENTIFIED_FILL.to_string(),
                (CellStatus::Skipped, _) => SKIPPED_FILL.to_string(),
            };
            grid.cell(&mut out, row, col, &fill, n, d);
        }
    }
    let _ = writeln!(
        out,
        r#"<polyline class="boundary" points="{}" fill="none" stroke="black" stroke-width="1.5"/>"#,
        points_attr(&boundary_vertices(matrix, style))
    );
    grid.axes(&mut out);

    // Legend: color bar for F plus status swatches.
    let lx = grid.x(grid.depths.len()) + 20.0;
    let top = style.margin_top;
    let bar_h = 100.0;
    out.push_str("<defs><linearGradient id=\"ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">");
    for (pos, c) in SEQUENTIAL {
        let _ = write!(out, r#"<stop offset="{pos}" stop-color="{}"/>"#, hex(c));
    }
    out.push_str("</linearGradient></defs>\n");
    let _ = writeln!(
        out,
        r#"<rect x="{lx:.1}" y="{top:.1}" width="12" height="{bar_h:.1}" fill="url(#ramp)" stroke="black" stroke-width="0.5"/>"#
    );
    for (v, label) in [(0.0, "0"), (0.5, "0.5"), (1.0, "1")] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{label}</text>"#,
            lx + 16.0,
            top + bar_h * (1.0 - v) + 3.5
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{lx:.1}" y="{:.1}">Fidelity error F</text>"#,
        top - 6.0
    );
    for (i, (fill, label)) in [(NON_IDENTIFIED_FILL, "non-identified"), (SKIPPED_FILL, "skipped")]
        .iter()
        .enumerate()
    {
        let y = top + bar_h + 16.0 + i as f64 * 16.0;
        let _ = writeln!(
            out,
            r#"<rect x="{lx:.1}" y="{y:.1}" width="12" height="12" fill="{fill}" stroke="black" stroke-width="0.5"/>"#
        );
        let _ = writeln!(out, r#"<text x="{:.1}" y="{:.1}">{label}</text>"#, lx + 16.0, y + 10.0);
    }
    out.push_str("</svg>\n");
    Ok(out)
}

/// Companion table of the values drawn by [`render_matrix_heatmap`].
pub fn heatmap_csv(matrix: &BenchmarkMatrix) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "d", "status", "mean_f", "f_display"])?;
    for c in &matrix.cells {
        w.write_record([
            c.n.to_string(),
            c.d.to_string(),
            c.status.as_str().to_string(),
            c.mean_f.map(|f| f.to_string()).unwrap_or_default(),
            c.mean_f.map(|f| clamp_unit(f).to_string()).unwrap_or_default(),
        ])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// ΔF heatmap on a symmetric diverging scale; absent cells stay unfilled.
pub fn render_delta_heatmap(delta: &DeltaGrid, style: &Style) -> Result<String> {
    if delta.cells.is_empty() {
        return Err(Error::InvalidArgument("empty delta grid".into()));
    }
    let mut qubits: Vec<usize> = delta.cells.iter().map(|c| c.n).collect();
    qubits.sort_unstable();
    qubits.dedup();
    let mut depths: Vec<usize> = delta.cells.iter().map(|c| c.d).collect();
    depths.sort_unstable();
    depths.dedup();
    let grid = Grid {
        qubits,
        depths,
        style: style.clone(),
    };
    let mut out = String::new();
    grid.open(&mut out);
    for (row, &n) in grid.qubits.iter().enumerate() {
        for (col, &d) in grid.depths.iter().enumerate() {
            let Some(cell) = delta.get(n, d) else { continue };
            let fill = cell.delta.map_or_else(|| "none".to_string(), delta_color);
            grid.cell(&mut out, row, col, &fill, n, d);
        }
    }
    grid.axes(&mut out);
    let lx = grid.x(grid.depths.len()) + 20.0;
    let top = style.margin_top;
    let bar_h = 100.0;
    let _ = writeln!(
        out,
        "<defs><linearGradient id=\"diverging\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\"><stop offset=\"0\" stop-color=\"{}\"/><stop offset=\"0.5\" stop-color=\"#ffffff\"/><stop offset=\"1\" stop-color=\"{}\"/></linearGradient></defs>",
        hex(NEGATIVE),
        hex(POSITIVE)
    );
    let _ = writeln!(
        out,
        r#"<rect x="{lx:.1}" y="{top:.1}" width="12" height="{bar_h:.1}" fill="url(#diverging)" stroke="black" stroke-width="0.5"/>"#
    );
    for (v, label) in [(-1.0, "-1"), (0.0, "0"), (1.0, "1")] {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{label}</text>"#,
            lx + 16.0,
            top + bar_h * (1.0 - v) / 2.0 + 3.5
        );
    }
    let _ = writeln!(out, r#"<text x="{lx:.1}" y="{:.1}">ΔF = F_A − F_B</text>"#, top - 6.0);
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn delta_csv(delta: &DeltaGrid) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "d", "delta_f"])?;
    for c in &delta.cells {
        w.write_record([
            c.n.to_string(),
            c.d.to_string(),
            c.delta.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    finish(w)
}

/// The `top_k` most frequent outcomes of a histogram, plus the target when it
/// falls outside them.
pub fn histogram_entries(hist: &ShotHistogram, target: &BitString, top_k: usize) -> Vec<TopEntry> {
    let shots = hist.shots().max(1) as f64;
    let entries = hist
        .ranked()
        .into_iter()
        .take(top_k.max(1))
        .map(|(bitstring, c)| TopEntry {
            bitstring,
            frequency: c as f64 / shots,
        })
        .collect();
    with_target(entries, target, hist.count(target) as f64 / shots)
}

/// Appends the target to `entries` if it is not already listed.
pub fn with_target(mut entries: Vec<TopEntry>, target: &BitString, frequency: f64) -> Vec<TopEntry> {
    if !entries.iter().any(|e| e.bitstring == *target) {
        entries.push(TopEntry {
            bitstring: *target,
            frequency,
        });
    }
    entries
}

/// Bar chart of outcome frequencies with the target in red.
pub fn render_histogram(entries: &[TopEntry], target: &BitString) -> Result<String> {
    if entries.is_empty() {
        return Err(Error::InvalidArgument("empty histogram".into()));
    }
    let width_bits = entries[0].bitstring.len();
    let max_freq = entries.iter().map(|e| e.frequency).fold(0.0, f64::max).max(1e-12);
    let (left, top, plot_h, bar_w, gap) = (50.0, 30.0, 200.0, 24.0, 8.0);
    let width = left + entries.len() as f64 * (bar_w + gap) + 20.0;
    let label_room = 8.0 + 6.5 * width_bits as f64;
    let height = top + plot_h + label_room + 30.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="10">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let base = top + plot_h;
    let _ = writeln!(
        out,
        r#"<line x1="{left:.1}" y1="{base:.1}" x2="{:.1}" y2="{base:.1}" stroke="black"/>"#,
        width - 10.0
    );
    for (i, e) in entries.iter().enumerate() {
        let (b, freq) = (&e.bitstring, e.frequency);
        let h = plot_h * freq / max_freq;
        let x = left + gap / 2.0 + i as f64 * (bar_w + gap);
        let is_target = b == target;
        let fill = if is_target { TARGET_FILL } else { OTHER_FILL };
        let _ = writeln!(
            out,
            r#"<rect x="{x:.1}" y="{:.1}" width="{bar_w:.1}" height="{h:.1}" fill="{fill}" data-bitstring="{b}" data-target="{is_target}"/>"#,
            base - h
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="8">{freq:.3}</text>"#,
            x + bar_w / 2.0,
            base - h - 3.0
        );
        let lx = x + bar_w / 2.0 + 3.0;
        let ly = base + 6.0;
        let _ = writeln!(
            out,
            r#"<text x="{lx:.1}" y="{ly:.1}" font-family="monospace" transform="rotate(90 {lx:.1} {ly:.1})">{b}</text>"#
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="12" y="{:.1}" transform="rotate(-90 12 {:.1})" text-anchor="middle">Frequency</text>"#,
        top + plot_h / 2.0,
        top + plot_h / 2.0
    );
    out.push_str("</svg>\n");
    Ok(out)
}

pub fn histogram_csv(entries: &[TopEntry], target: &BitString) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["bitstring", "frequency", "target"])?;
    for e in entries {
        w.write_record([
            e.bitstring.to_string(),
            e.frequency.to_string(),
            (e.bitstring == *target).to_string(),
        ])?;
    }
    finish(w)
}
