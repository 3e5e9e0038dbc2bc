//! Problem instances: one searched cell surrounded by evidence cells.
//!
//! An instance is valid when every evidence cell lies within Chebyshev
//! radius `delta` of the searched cell, the evidence set is a nonempty
//! subset of the grid, and `min(width, height) > 2 * delta + 1`.

use crate::grid::{chebyshev, BitGrid, Coord, Dims};
use crate::oracle::{SearchSpace, VisitOutcome};
use rand::Rng;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Smallest side accepted by [`generate_instance`].
pub const MIN_SIDE: u32 = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("side length {0} is too small: generated instances need s >= {MIN_SIDE}")]
    SideTooSmall(u32),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A Definition-style condition an instance can break.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Violation {
    /// Some evidence cell is farther than `delta` from the searched cell.
    EvidenceBeyondRadius,
    /// Some evidence cell (or the searched cell) lies outside the grid.
    OutsideGrid,
    /// The evidence set is empty.
    NoEvidence,
    /// `min(width, height) <= 2 * delta + 1`.
    GridTooSmall,
    /// An evidence cell coincides with the searched cell.
    EvidenceOnTarget,
    /// Two evidence cells share a coordinate.
    DuplicateEvidence,
}

#[derive(Clone, Debug)]
pub struct Instance {
    width: u32,
    height: u32,
    psi: Coord,
    evidence: Vec<Coord>,
    delta: u32,
    // Evidence inside the clipped window around psi, one bit per window cell.
    window_origin: Coord,
    window_dims: Dims,
    window: BitGrid,
    // Evidence outside the window; only non-empty for invalid instances.
    stray: Vec<Coord>,
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.psi == other.psi
            && self.evidence == other.evidence
            && self.delta == other.delta
    }
}

impl Eq for Instance {}

impl Instance {
    /// Builds an instance without validating it; see [`validate_instance`].
    pub fn new(width: u32, height: u32, psi: Coord, evidence: Vec<Coord>, delta: u32) -> Self {
        let x0 = psi.x.saturating_sub(delta);
        let y0 = psi.y.saturating_sub(delta);
        let x1 = psi.x.saturating_add(delta).min(width.saturating_sub(1)).max(x0);
        let y1 = psi.y.saturating_add(delta).min(height.saturating_sub(1)).max(y0);
        let window_origin = Coord::new(x0, y0);
        let window_dims = Dims::new(x1 - x0 + 1, y1 - y0 + 1);
        let mut window = BitGrid::new(window_dims);
        let mut stray = Vec::new();
        for &q in &evidence {
            if (x0..=x1).contains(&q.x) && (y0..=y1).contains(&q.y) {
                window.insert(Coord::new(q.x - x0, q.y - y0));
            } else {
                stray.push(q);
            }
        }
        Self {
            width,
            height,
            psi,
            evidence,
            delta,
            window_origin,
            window_dims,
            window,
            stray,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> Dims {
        Dims::new(self.width, self.height)
    }

    pub fn psi(&self) -> Coord {
        self.psi
    }

    pub fn evidence(&self) -> &[Coord] {
        &self.evidence
    }

    pub fn delta(&self) -> u32 {
        self.delta
    }

    pub fn is_evidence(&self, p: Coord) -> bool {
        let o = self.window_origin;
        if p.x >= o.x && p.y >= o.y {
            let local = Coord::new(p.x - o.x, p.y - o.y);
            if local.in_bounds(self.window_dims.width, self.window_dims.height) {
                return self.window.contains(local);
            }
        }
        self.stray.contains(&p)
    }

    /// Serializes to the line format
    /// `s=<int> delta=<int> psi=<x>,<y>` followed by one `mu=<x>,<y>` per evidence cell.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl SearchSpace for Instance {
    #[inline]
    fn dims(&self) -> Dims {
        Dims::new(self.width, self.height)
    }

    #[inline]
    fn classify(&self, p: Coord) -> VisitOutcome {
        if p == self.psi {
            VisitOutcome::Found
        } else if chebyshev(p, self.psi) <= self.delta || !self.stray.is_empty() {
            if self.is_evidence(p) {
                VisitOutcome::Evidence
            } else {
                VisitOutcome::Miss
            }
        } else {
            VisitOutcome::Miss
        }
    }
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.width == self.height {
            write!(f, "s={}", self.width)?;
        } else {
            write!(f, "w={} h={}", self.width, self.height)?;
        }
        writeln!(f, " delta={} psi={}", self.delta, self.psi)?;
        for q in &self.evidence {
            writeln!(f, "mu={q}")?;
        }
        Ok(())
    }
}

fn parse_coord(s: &str, line: usize) -> Result<Coord, InstanceError> {
    let err = || InstanceError::Parse {
        line,
        msg: format!("expected <x>,<y>, got {s:?}"),
    };
    let (x, y) = s.split_once(',').ok_or_else(err)?;
    Ok(Coord::new(
        x.trim().parse().map_err(|_| err())?,
        y.trim().parse().map_err(|_| err())?,
    ))
}

fn parse_u32(key: &str, s: &str, line: usize) -> Result<u32, InstanceError> {
    s.parse().map_err(|_| InstanceError::Parse {
        line,
        msg: format!("{key} must be a non-negative integer, got {s:?}"),
    })
}

impl FromStr for Instance {
    type Err = InstanceError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (n, header) = lines.next().ok_or(InstanceError::Parse {
            line: 1,
            msg: "empty input".into(),
        })?;
        let (mut width, mut height, mut delta, mut psi) = (None, None, None, None);
        for field in header.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| InstanceError::Parse {
                line: n,
                msg: format!("expected key=value, got {field:?}"),
            })?;
            match key {
                "s" => {
                    let s = parse_u32(key, value, n)?;
                    width = Some(s);
                    height = Some(s);
                }
                "w" => width = Some(parse_u32(key, value, n)?),
                "h" => height = Some(parse_u32(key, value, n)?),
                "delta" => delta = Some(parse_u32(key, value, n)?),
                "psi" => psi = Some(parse_coord(value, n)?),
                other => {
                    return Err(InstanceError::Parse {
                        line: n,
                        msg: format!("unknown key {other:?}"),
                    })
                }
            }
        }
        let missing = |what: &str| InstanceError::Parse {
            line: n,
            msg: format!("header is missing {what}"),
        };
        let width = width.ok_or_else(|| missing("s"))?;
        let height = height.ok_or_else(|| missing("s"))?;
        let delta = delta.ok_or_else(|| missing("delta"))?;
        let psi = psi.ok_or_else(|| missing("psi"))?;

        let mut evidence = Vec::new();
        for (n, line) in lines {
            let value = line.strip_prefix("mu=").ok_or_else(|| InstanceError::Parse {
                line: n,
                msg: format!("expected mu=<x>,<y>, got {line:?}"),
            })?;
            evidence.push(parse_coord(value, n)?);
        }
        Ok(Instance::new(width, height, psi, evidence, delta))
    }
}

/// Number of evidence cells and the radius used by the generator for side `s`.
pub fn generator_shape(s: u32) -> (usize, u32) {
    ((s / 16) as usize, s / 10)
}

/// Random square instance of side `s`: the searched cell is uniform over the
/// grid and `s / 16` distinct evidence cells are drawn uniformly from the
/// window of radius `s / 10` around it, clipped to the grid.
pub fn generate_instance<R: Rng + ?Sized>(s: u32, rng: &mut R) -> Result<Instance, InstanceError> {
    if s < MIN_SIDE {
        return Err(InstanceError::SideTooSmall(s));
    }
    let (n, delta) = generator_shape(s);
    let psi = Coord::new(rng.gen_range(0..s), rng.gen_range(0..s));
    let xs = psi.x.saturating_sub(delta)..=(psi.x + delta).min(s - 1);
    let ys = psi.y.saturating_sub(delta)..=(psi.y + delta).min(s - 1);

    let mut taken = std::collections::HashSet::with_capacity(n);
    let mut evidence = Vec::with_capacity(n);
    while evidence.len() < n {
        let q = Coord::new(rng.gen_range(xs.clone()), rng.gen_range(ys.clone()));
        if q != psi && taken.insert(q) {
            evidence.push(q);
        }
    }
    Ok(Instance::new(s, s, psi, evidence, delta))
}

/// Lists every broken condition; an empty list means the instance is valid.
pub fn validate_instance(inst: &Instance) -> Vec<Violation> {
    let mut report = Vec::new();
    let (w, h) = (inst.width, inst.height);
    if inst.evidence.iter().any(|&q| chebyshev(inst.psi, q) > inst.delta) {
        report.push(Violation::EvidenceBeyondRadius);
    }
    if !inst.psi.in_bounds(w, h) || inst.evidence.iter().any(|q| !q.in_bounds(w, h)) {
        report.push(Violation::OutsideGrid);
    }
    if inst.evidence.is_empty() {
        report.push(Violation::NoEvidence);
    }
    if (w.min(h) as u64) <= 2 * inst.delta as u64 + 1 {
        report.push(Violation::GridTooSmall);
    }
    if inst.evidence.contains(&inst.psi) {
        report.push(Violation::EvidenceOnTarget);
    }
    let mut sorted = inst.evidence.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|p| p[0] == p[1]) {
        report.push(Violation::DuplicateEvidence);
    }
    report
}

/// Chance of hitting the searched cell with one uniform guess over the whole
/// grid, and with one uniform guess over the window around a known evidence cell.
pub fn probability_bounds(s: u32, delta: u32) -> (f64, f64) {
    let side = 2.0 * delta as f64 + 1.0;
    (1.0 / (s as f64 * s as f64), 1.0 / (side * side))
}

/// Mean number of row-major visits an exhaustive scan needs when the target is
/// uniform over a `w x h` grid: `(w*h + 1) / 2`.
pub fn expected_exhaustive_visits(w: u32, h: u32) -> f64 {
    (w as f64 * h as f64 + 1.0) / 2.0
}
