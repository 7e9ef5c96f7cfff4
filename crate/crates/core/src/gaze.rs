//! Gaze traces, dwell heatmaps, I-DT fixation detection and fusion of the
//! resulting gaze plot with a candidate board graph.
//!
//! Log format: one `t_ms, x, y, valid` record per line, `x`/`y` in board
//! tile units, `valid` as `1`/`0` or `true`/`false`. Blank lines and lines
//! starting with `#` are skipped.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::candidate::CandidateBoard;
use crate::error::GazeError;
use crate::nodelink::{LinkEdge, LinkKind, NodeLinkGraph, NodeRecord};

pub const DEFAULT_DISPERSION: f64 = 1.0 / 3.0;
pub const DEFAULT_MIN_DURATION_MS: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GazeSample {
    pub t_ms: f64,
    pub x: f64,
    pub y: f64,
    pub valid: bool,
}

impl GazeSample {
    pub fn new(t_ms: f64, x: f64, y: f64, valid: bool) -> GazeSample {
        GazeSample { t_ms, x, y, valid }
    }
}

/// An immutable, time-ordered sequence of samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GazeTrace {
    samples: Vec<GazeSample>,
}

impl GazeTrace {
    pub fn samples(&self) -> &[GazeSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time from the first to the last sample.
    pub fn duration_ms(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t_ms - a.t_ms,
            _ => 0.0,
        }
    }

    /// Summed duration of intervals that start at a valid sample.
    pub fn valid_dwell_ms(&self) -> f64 {
        self.samples.windows(2).filter(|w| w[0].valid).map(|w| w[1].t_ms - w[0].t_ms).sum()
    }

    /// Returns a new trace with `more` appended.
    pub fn extended(&self, more: &[GazeSample]) -> Result<GazeTrace, GazeError> {
        let mut all = self.samples.clone();
        all.extend_from_slice(more);
        ingest(all)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.samples {
            let _ = writeln!(out, "{}, {}, {}, {}", s.t_ms, s.x, s.y, u8::from(s.valid));
        }
        out
    }
}

/// Builds a trace, rejecting non-finite values and decreasing timestamps.
/// Errors carry the 1-based sample index as the line.
pub fn ingest(samples: impl IntoIterator<Item = GazeSample>) -> Result<GazeTrace, GazeError> {
    let mut out: Vec<GazeSample> = Vec::new();
    for (i, s) in samples.into_iter().enumerate() {
        let line = i + 1;
        if !(s.t_ms.is_finite() && s.x.is_finite() && s.y.is_finite()) {
            return Err(GazeError::Parse { line, msg: "non-finite value".into() });
        }
        if let Some(prev) = out.last() {
            if s.t_ms < prev.t_ms {
                return Err(GazeError::NonMonotone { line, t: s.t_ms, prev: prev.t_ms });
            }
        }
        out.push(s);
    }
    Ok(GazeTrace { samples: out })
}

/// Parses a gaze log into a trace.
pub fn parse_log(text: &str) -> Result<GazeTrace, GazeError> {
    let mut out: Vec<GazeSample> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let raw = raw.trim();
        if raw.is_empty() || raw.starts_with('#') {
            continue;
        }
        let err = |msg: String| GazeError::Parse { line, msg };
        let f: Vec<&str> = raw.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", f.len())));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(format!("{what}: bad number '{s}'")))
        };
        let t_ms = num(f[0], "t_ms")?;
        let x = num(f[1], "x")?;
        let y = num(f[2], "y")?;
        let valid = match f[3] {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(err(format!("valid: expected 0/1, found '{other}'"))),
        };
        if let Some(prev) = out.last() {
            if t_ms < prev.t_ms {
                return Err(GazeError::NonMonotone { line, t: t_ms, prev: prev.t_ms });
            }
        }
        out.push(GazeSample { t_ms, x, y, valid });
    }
    Ok(GazeTrace { samples: out })
}

/// Dwell time per sub-tile cell of a `3W × 3W` grid, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub side: usize,
    pub grid: Vec<f64>,
    /// Undecayed dwell over valid samples, on or off the board.
    pub total_dwell_ms: f64,
    /// Mass credited to positions outside the board.
    pub off_board: f64,
}

impl Heatmap {
    pub fn zeros(board_size: usize) -> Heatmap {
        let side = board_size * 3;
        Heatmap { side, grid: vec![0.0; side * side], total_dwell_ms: 0.0, off_board: 0.0 }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.grid[row * self.side + col]
    }

    pub fn mass(&self) -> f64 {
        self.grid.iter().sum()
    }

    /// Cell of a board-plane point, if it lies on the board.
    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let (c, r) = ((x * 3.0).floor(), (y * 3.0).floor());
        let side = self.side as f64;
        (c >= 0.0 && r >= 0.0 && c < side && r < side).then(|| (r as usize, c as usize))
    }

    /// One CSV row per grid row, no header.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.grid.chunks(self.side.max(1)) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Credits each interval to the cell of its earlier sample when that sample
/// is valid. With a half-life, an interval ending `a` ms before the trace end
/// is weighted by `0.5^(a / half_life)` over its span.
pub fn heatmap(trace: &GazeTrace, board_size: usize, half_life_ms: Option<f64>) -> Heatmap {
    let mut hm = Heatmap::zeros(board_size);
    let end = trace.samples.last().map_or(0.0, |s| s.t_ms);
    let decay = half_life_ms.filter(|h| h.is_finite() && *h > 0.0).map(|h| std::f64::consts::LN_2 / h);
    for w in trace.samples.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !a.valid {
            continue;
        }
        let dt = b.t_ms - a.t_ms;
        hm.total_dwell_ms += dt;
        let mass = match decay {
            None => dt,
            // integral of exp(-k (end - t)) over [a.t, b.t]
            Some(k) => ((-k * (end - b.t_ms)).exp() - (-k * (end - a.t_ms)).exp()) / k,
        };
        match hm.cell_of(a.x, a.y) {
            Some((r, c)) => hm.grid[r * hm.side + c] += mass,
            None => hm.off_board += mass,
        }
    }
    hm
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub x: f64,
    pub y: f64,
    pub onset_ms: f64,
    pub duration_ms: f64,
    /// Number of samples in the window.
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Saccade {
    pub from: usize,
    pub to: usize,
    pub index: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GazeGraph {
    pub fixations: Vec<Fixation>,
    pub saccades: Vec<Saccade>,
    pub dispersion_threshold: f64,
    pub duration_threshold_ms: f64,
}

fn diagonal(window: &[GazeSample]) -> f64 {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in window {
        x0 = x0.min(s.x);
        x1 = x1.max(s.x);
        y0 = y0.min(s.y);
        y1 = y1.max(s.y);
    }
    (x1 - x0).hypot(y1 - y0)
}

/// I-DT over runs of valid samples. A window grows from its start until it
/// spans the duration threshold; if its bounding-box diagonal is within the
/// dispersion threshold it keeps growing while that holds and becomes a
/// fixation, otherwise the start advances by one sample.
pub fn fixations(trace: &GazeTrace, dispersion_threshold: f64, duration_threshold_ms: f64) -> GazeGraph {
    let mut graph = GazeGraph { dispersion_threshold, duration_threshold_ms, ..GazeGraph::default() };
    if !(dispersion_threshold > 0.0 && duration_threshold_ms > 0.0) {
        return graph;
    }
    let s = &trace.samples;
    let mut run_start = 0;
    while run_start < s.len() {
        if !s[run_start].valid {
            run_start += 1;
            continue;
        }
        let mut run_end = run_start;
        while run_end < s.len() && s[run_end].valid {
            run_end += 1;
        }
        detect_run(&s[run_start..run_end], dispersion_threshold, duration_threshold_ms, &mut graph.fixations);
        run_start = run_end;
    }
    graph.saccades = (1..graph.fixations.len()).map(|i| Saccade { from: i - 1, to: i, index: i - 1 }).collect();
    graph
}

fn detect_run(run: &[GazeSample], dispersion: f64, min_duration: f64, out: &mut Vec<Fixation>) {
    let mut i = 0;
    while i < run.len() {
        let mut j = i;
        while j < run.len() && run[j].t_ms - run[i].t_ms < min_duration {
            j += 1;
        }
        if j == run.len() {
            break;
        }
        if diagonal(&run[i..=j]) > dispersion {
            i += 1;
            continue;
        }
        while j + 1 < run.len() && diagonal(&run[i..=j + 1]) <= dispersion {
            j += 1;
        }
        let window = &run[i..=j];
        let n = window.len() as f64;
        out.push(Fixation {
            x: window.iter().map(|s| s.x).sum::<f64>() / n,
            y: window.iter().map(|s| s.y).sum::<f64>() / n,
            onset_ms: run[i].t_ms,
            duration_ms: run[j].t_ms - run[i].t_ms,
            samples: window.len(),
        });
        i = j + 1;
    }
}

/// Fuses a gaze graph with a candidate board: board vertices keep their ids,
/// fixations follow, saccades become `saccade` edges and each fixation links
/// to every vertex strictly closer than `radius`.
pub fn attach(gaze: &GazeGraph, board: &CandidateBoard, radius: f64) -> NodeLinkGraph {
    let mut fused = board.to_node_link();
    let first = board.vertices.iter().map(|v| v.id + 1).max().unwrap_or(0);
    for (i, f) in gaze.fixations.iter().enumerate() {
        let id = first + i as u32;
        fused.nodes.push(NodeRecord::Fixation { id, x: f.x, y: f.y, onset_ms: f.onset_ms, duration_ms: f.duration_ms });
        for v in &board.vertices {
            let (vx, vy) = v.plane_coords();
            if (vx - f.x).hypot(vy - f.y) < radius {
                fused.edges.push(LinkEdge { kind: LinkKind::Link, a: id, b: v.id });
            }
        }
    }
    for s in &gaze.saccades {
        fused.edges.push(LinkEdge { kind: LinkKind::Saccade, a: first + s.from as u32, b: first + s.to as u32 });
    }
    fused
}
