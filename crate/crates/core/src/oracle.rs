//! The visit oracle: classifies cells and counts every evaluation a search makes.

use crate::grid::{BitGrid, Coord, Dims};
use std::io::{self, Write};
use thiserror::Error;

/// Result of evaluating one cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VisitOutcome {
    /// The searched cell.
    Found,
    /// An evidence cell.
    Evidence,
    Miss,
}

impl VisitOutcome {
    /// Single-letter code used in trace files.
    pub fn code(self) -> char {
        match self {
            VisitOutcome::Found => 'F',
            VisitOutcome::Evidence => 'E',
            VisitOutcome::Miss => 'M',
        }
    }
}

/// Anything a searcher can walk over: a grid whose cells can be classified.
pub trait SearchSpace {
    fn dims(&self) -> Dims;
    fn classify(&self, p: Coord) -> VisitOutcome;
}

impl<S: SearchSpace + ?Sized> SearchSpace for &S {
    fn dims(&self) -> Dims {
        (**self).dims()
    }

    fn classify(&self, p: Coord) -> VisitOutcome {
        (**self).classify(p)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("coordinate {coord} is outside the {width}x{height} grid")]
    OutOfGrid { coord: Coord, width: u32, height: u32 },
}

/// Signals that the searched cell has been visited; searches unwind on it with `?`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Converged;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    pub coord: Coord,
    pub outcome: VisitOutcome,
}

/// Per-run evaluation state. One oracle belongs to exactly one search run.
pub struct Oracle<'a, S: ?Sized> {
    space: &'a S,
    dims: Dims,
    total: u64,
    unique: u64,
    evidence_hits: u64,
    seen: BitGrid,
    found: Option<Coord>,
    trace: Option<Vec<TraceEntry>>,
}

impl<'a, S: SearchSpace + ?Sized> Oracle<'a, S> {
    pub fn new(space: &'a S) -> Self {
        let dims = space.dims();
        Self {
            space,
            dims,
            total: 0,
            unique: 0,
            evidence_hits: 0,
            seen: BitGrid::new(dims),
            found: None,
            trace: None,
        }
    }

    /// Same as [`Oracle::new`] but records every visit in order.
    pub fn with_trace(space: &'a S) -> Self {
        let mut oracle = Self::new(space);
        oracle.trace = Some(Vec::new());
        oracle
    }

    pub fn space(&self) -> &'a S {
        self.space
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    /// Evaluates `p`, updating the counters. Out-of-grid coordinates are
    /// rejected; wrapping is the caller's job.
    pub fn visit(&mut self, p: Coord) -> Result<VisitOutcome, OracleError> {
        if !p.in_bounds(self.dims.width, self.dims.height) {
            return Err(OracleError::OutOfGrid {
                coord: p,
                width: self.dims.width,
                height: self.dims.height,
            });
        }
        Ok(self.evaluate(p))
    }

    #[inline]
    fn evaluate(&mut self, p: Coord) -> VisitOutcome {
        self.total += 1;
        if self.seen.insert(p) {
            self.unique += 1;
        }
        let outcome = self.space.classify(p);
        match outcome {
            VisitOutcome::Found => self.found = Some(p),
            VisitOutcome::Evidence => self.evidence_hits += 1,
            VisitOutcome::Miss => {}
        }
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEntry { coord: p, outcome });
        }
        outcome
    }

    /// Search-side visit: `Err(Converged)` on the searched cell, otherwise
    /// whether the cell is evidence. `p` must already be wrapped onto the grid.
    #[inline]
    pub(crate) fn probe(&mut self, p: Coord) -> Result<bool, Converged> {
        debug_assert!(p.in_bounds(self.dims.width, self.dims.height));
        match self.evaluate(p) {
            VisitOutcome::Found => Err(Converged),
            VisitOutcome::Evidence => Ok(true),
            VisitOutcome::Miss => Ok(false),
        }
    }

    /// Probe at a signed position, wrapped onto the grid torus first.
    #[inline]
    pub(crate) fn probe_wrapped(&mut self, x: i64, y: i64) -> Result<bool, Converged> {
        let p = self.dims.wrap(x, y);
        self.probe(p)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn unique(&self) -> u64 {
        self.unique
    }

    pub fn evidence_hits(&self) -> u64 {
        self.evidence_hits
    }

    pub fn found(&self) -> Option<Coord> {
        self.found
    }

    pub fn has_seen(&self, p: Coord) -> bool {
        self.seen.contains(p)
    }

    pub fn trace(&self) -> Option<&[TraceEntry]> {
        self.trace.as_deref()
    }

    pub fn take_trace(&mut self) -> Option<Vec<TraceEntry>> {
        self.trace.take()
    }
}

/// Writes a trace as `step,x,y,outcome` CSV, steps counted from 1.
pub fn write_trace_csv<W: Write>(trace: &[TraceEntry], mut out: W) -> io::Result<()> {
    writeln!(out, "step,x,y,outcome")?;
    for (i, e) in trace.iter().enumerate() {
        writeln!(out, "{},{},{},{}", i + 1, e.coord.x, e.coord.y, e.outcome.code())?;
    }
    Ok(())
}
