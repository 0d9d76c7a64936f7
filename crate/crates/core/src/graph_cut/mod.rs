//! Exact minimization of the binary shape energy by an s-t minimum cut.
//!
//! Each pixel is a node. A node on the sink side of the cut means the pixel
//! is inside the shape. Pairwise terms `c |theta_a - theta_b|` become a pair of
//! opposite arcs of capacity `c`; these are submodular for any `c >= 0`, so
//! spatially varying (nonsymmetric) weights need no special treatment.

mod maxflow;

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::{BufRead, Write};

pub use maxflow::{max_flow, MaxFlowResult};

use crate::energy::shape_energy;
use crate::error::{Result, ShapeError};
use crate::field::{ensure_same_dims, BinaryMask, ScalarField, WeightField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminalCaps {
    /// Capacity of the source link; paid when the node ends on the sink side.
    pub source: f64,
    /// Capacity of the sink link; paid when the node ends on the source side.
    pub sink: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutArc {
    pub from: usize,
    pub to: usize,
    pub cap: f64,
    pub reverse_cap: f64,
}

/// Node and arc capacities of a two-terminal cut problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CutProblem {
    terminals: Vec<TerminalCaps>,
    arcs: Vec<CutArc>,
    /// Energy of a labeling is its cut capacity plus this constant.
    energy_offset: f64,
}

fn check_cap(c: f64, what: &str) -> Result<()> {
    if !(c.is_finite() && c >= 0.0) {
        return Err(ShapeError::InvalidParameter(format!(
            "{what} capacity must be finite and nonnegative, got {c}"
        )));
    }
    Ok(())
}

impl CutProblem {
    pub fn new(terminals: Vec<TerminalCaps>, arcs: Vec<CutArc>) -> Result<Self> {
        for t in &terminals {
            check_cap(t.source, "source")?;
            check_cap(t.sink, "sink")?;
        }
        let n = terminals.len();
        for a in &arcs {
            if a.from >= n || a.to >= n {
                return Err(ShapeError::InvalidParameter(format!(
                    "arc {} -> {} references a node outside 0..{n}",
                    a.from, a.to
                )));
            }
            if a.from == a.to {
                return Err(ShapeError::InvalidParameter(format!("self-loop on node {}", a.from)));
            }
            check_cap(a.cap, "arc")?;
            check_cap(a.reverse_cap, "arc")?;
        }
        Ok(Self {
            terminals,
            arcs,
            energy_offset: 0.0,
        })
    }

    pub fn with_energy_offset(mut self, offset: f64) -> Self {
        self.energy_offset = offset;
        self
    }

    pub fn node_count(&self) -> usize {
        self.terminals.len()
    }

    pub fn terminals(&self) -> &[TerminalCaps] {
        &self.terminals
    }

    pub fn arcs(&self) -> &[CutArc] {
        &self.arcs
    }

    pub fn energy_offset(&self) -> f64 {
        self.energy_offset
    }

    /// Capacity of the cut given by `sink_side`.
    pub fn cut_capacity(&self, sink_side: &[bool]) -> f64 {
        let mut total = 0.0;
        for (t, &in_sink) in self.terminals.iter().zip(sink_side) {
            total += if in_sink { t.source } else { t.sink };
        }
        for a in &self.arcs {
            match (sink_side[a.from], sink_side[a.to]) {
                (false, true) => total += a.cap,
                (true, false) => total += a.reverse_cap,
                _ => {}
            }
        }
        total
    }

    /// Rescales every capacity by `2^bits` and rounds to an integer. Sums of
    /// such capacities are exact in `f64`, which removes rounding from the
    /// flow computation at the cost of a quantization of the energy.
    pub fn quantized(&self, bits: u32) -> Self {
        let s = f64::from(2u32.pow(bits.min(30)));
        let q = |c: f64| (c * s).round();
        Self {
            terminals: self
                .terminals
                .iter()
                .map(|t| TerminalCaps {
                    source: q(t.source),
                    sink: q(t.sink),
                })
                .collect(),
            arcs: self
                .arcs
                .iter()
                .map(|a| CutArc {
                    cap: q(a.cap),
                    reverse_cap: q(a.reverse_cap),
                    ..*a
                })
                .collect(),
            energy_offset: self.energy_offset * s,
        }
    }

    /// Writes the problem as plain text: a `nodes arcs` header, one
    /// `source sink` line per node, then one `from to cap reverse_cap` line
    /// per arc.
    pub fn write_dump(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "{} {}", self.terminals.len(), self.arcs.len())?;
        for t in &self.terminals {
            writeln!(out, "{} {}", t.source, t.sink)?;
        }
        for a in &self.arcs {
            writeln!(out, "{} {} {} {}", a.from, a.to, a.cap, a.reverse_cap)?;
        }
        Ok(())
    }

    /// Parses the format produced by [`CutProblem::write_dump`].
    pub fn read_dump(input: impl BufRead) -> Result<Self> {
        fn fields<T: std::str::FromStr>(line: &str, count: usize) -> Result<Vec<T>> {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != count {
                return Err(ShapeError::Format(format!(
                    "expected {count} fields, got line {line:?}"
                )));
            }
            parts
                .iter()
                .map(|p| {
                    p.parse()
                        .map_err(|_| ShapeError::Format(format!("bad number {p:?}")))
                })
                .collect()
        }
        let mut lines = input.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| ShapeError::Format("unexpected end of dump".into()))?
                .map_err(ShapeError::from)
        };
        let header: Vec<usize> = fields(&next()?, 2)?;
        let (nodes, arcs) = (header[0], header[1]);
        let mut terminals = Vec::with_capacity(nodes);
        for _ in 0..nodes {
            let v: Vec<f64> = fields(&next()?, 2)?;
            terminals.push(TerminalCaps {
                source: v[0],
                sink: v[1],
            });
        }
        let mut arc_list = Vec::with_capacity(arcs);
        for _ in 0..arcs {
            let line = next()?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 {
                return Err(ShapeError::Format(format!("bad arc line {line:?}")));
            }
            let ends: Vec<usize> = fields(&parts[..2].join(" "), 2)?;
            let caps: Vec<f64> = fields(&parts[2..].join(" "), 2)?;
            arc_list.push(CutArc {
                from: ends[0],
                to: ends[1],
                cap: caps[0],
                reverse_cap: caps[1],
            });
        }
        Self::new(terminals, arc_list)
    }
}

/// Neighbor directions of a pixel `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    North,
    South,
    West,
    East,
    NorthWest,
    NorthEast,
    SouthWest,
    SouthEast,
}

impl Direction {
    pub const ALL: [Direction; 8] = [
        Direction::North,
        Direction::South,
        Direction::West,
        Direction::East,
        Direction::NorthWest,
        Direction::NorthEast,
        Direction::SouthWest,
        Direction::SouthEast,
    ];

    /// Row and column offsets; "south" increases `i`, "east" increases `j`.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::North => (-1, 0),
            Direction::South => (1, 0),
            Direction::West => (0, -1),
            Direction::East => (0, 1),
            Direction::NorthWest => (-1, -1),
            Direction::NorthEast => (-1, 1),
            Direction::SouthWest => (1, -1),
            Direction::SouthEast => (1, 1),
        }
    }

    pub fn is_diagonal(self) -> bool {
        let (di, dj) = self.offset();
        di != 0 && dj != 0
    }
}

/// Per-pixel neighbor weights: `g` along the axes, `g / sqrt 2` along diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborWeights {
    g: WeightField,
}

impl NeighborWeights {
    pub fn new(g: &WeightField) -> Self {
        Self { g: g.clone() }
    }

    pub fn weight(&self, i: usize, j: usize, dir: Direction) -> f64 {
        let base = self.g.get(i, j);
        if dir.is_diagonal() {
            FRAC_1_SQRT_2 * base
        } else {
            base
        }
    }
}

/// Forward neighbor directions that carry the pairwise terms of the energy:
/// each pixel pays half its neighbor weight for a label change towards
/// `(i+1, j)`, `(i, j+1)`, `(i+1, j+1)` and `(i-1, j+1)`.
const ENERGY_DIRECTIONS: [Direction; 4] = [
    Direction::South,
    Direction::East,
    Direction::SouthEast,
    Direction::NorthEast,
];

/// Encodes `sum (alpha - f) theta + TV(theta)` as a cut problem whose cut
/// capacity plus [`CutProblem::energy_offset`] equals the energy of the
/// labeling (sink side = inside).
pub fn build_cut_problem(f: &ScalarField, g: &WeightField, alpha: f64) -> Result<CutProblem> {
    ensure_same_dims(f.dims(), g.dims())?;
    if !alpha.is_finite() {
        return Err(ShapeError::InvalidParameter(format!("alpha must be finite, got {alpha}")));
    }
    let (h, w) = f.dims();
    let weights = NeighborWeights::new(g);
    let mut offset = 0.0;
    let terminals = f
        .values()
        .iter()
        .map(|&fx| {
            let cost_inside = alpha - fx;
            offset += cost_inside.min(0.0);
            TerminalCaps {
                source: cost_inside.max(0.0),
                sink: (-cost_inside).max(0.0),
            }
        })
        .collect();
    let mut arcs = Vec::with_capacity(4 * h * w);
    for i in 0..h {
        for j in 0..w {
            for dir in ENERGY_DIRECTIONS {
                let (di, dj) = dir.offset();
                let (ni, nj) = (i as isize + di, j as isize + dj);
                if ni < 0 || nj < 0 || ni >= h as isize || nj >= w as isize {
                    continue;
                }
                let c = 0.5 * weights.weight(i, j, dir);
                arcs.push(CutArc {
                    from: i * w + j,
                    to: ni as usize * w + nj as usize,
                    cap: c,
                    reverse_cap: c,
                });
            }
        }
    }
    Ok(CutProblem::new(terminals, arcs)?.with_energy_offset(offset))
}

/// How capacities are represented when solving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CapacityMode {
    #[default]
    Real,
    /// Capacities scaled by `2^bits` and rounded to integers.
    Quantized { bits: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutSegmentation {
    pub mask: BinaryMask,
    /// Shape energy of `mask`, re-evaluated from the energy definition.
    pub energy: f64,
    /// Maximum flow of the (possibly quantized) cut problem.
    pub flow_value: f64,
}

pub fn cut_segment(f: &ScalarField, g: &WeightField, alpha: f64) -> Result<CutSegmentation> {
    cut_segment_with(f, g, alpha, CapacityMode::Real)
}

pub fn cut_segment_with(
    f: &ScalarField,
    g: &WeightField,
    alpha: f64,
    mode: CapacityMode,
) -> Result<CutSegmentation> {
    let problem = build_cut_problem(f, g, alpha)?;
    let problem = match mode {
        CapacityMode::Real => problem,
        CapacityMode::Quantized { bits } => problem.quantized(bits),
    };
    let result = max_flow(&problem);
    let mask = BinaryMask::new(f.height(), f.width(), result.sink_side)?;
    let energy = shape_energy(&mask, f, g, alpha)?;
    Ok(CutSegmentation {
        mask,
        energy,
        flow_value: result.flow_value,
    })
}
