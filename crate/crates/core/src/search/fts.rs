//! Fractal triangular search.
//!
//! A probe is a small triangle that grows in a fractal fashion: each growth
//! step flips the orientation and wraps the current triangle with three
//! congruent pieces (two at the flanks, one at the far apex), producing a
//! solid triangle of twice the row count that contains the old one as its
//! central, inverted piece. Pieces never overlap, so a single triangle's
//! growth never revisits a cell until it wraps around the grid.
//!
//! Triangle height `h` counts rows including the apex (2, 4, 8, ...), the
//! width `w = 2h - 1` is the base row length. A stretch of height `k` draws
//! the apex plus `k` further rows, so each piece is a stretch of `h - 1`.

use super::{finish, pos_step, random_anchor, scan_all, SearchOutcome, StepMetric};
use crate::grid::Coord;
use crate::oracle::{Converged, Oracle, SearchSpace};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// What a stretch does when it meets an evidence cell.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StretchPolicy {
    /// Finish the whole triangle and report whether evidence was seen.
    #[default]
    Complete,
    /// Abandon the rest of the triangle at the first evidence cell.
    StopAtEvidence,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FtsParams {
    /// Number of triangles placed before falling back to a full scan.
    pub t: u32,
    /// Distance between consecutive triangle anchors.
    pub d: u32,
    /// Growth iterations per triangle when no evidence shows up.
    pub c: u32,
    #[serde(default)]
    pub stretch: StretchPolicy,
}

impl FtsParams {
    pub fn new(t: u32, d: u32, c: u32) -> Self {
        Self { t, d, c, stretch: StretchPolicy::Complete }
    }

    pub fn with_stretch(self, stretch: StretchPolicy) -> Self {
        Self { stretch, ..self }
    }
}

/// Visits the cell `(x, y)` and then `h` rows in direction `yc`, row `k`
/// spanning columns `x - k ..= x + k`. Returns whether any evidence was seen.
pub fn triangle_stretch<S: SearchSpace + ?Sized>(
    oracle: &mut Oracle<'_, S>,
    x: i64,
    y: i64,
    yc: i64,
    h: u32,
    policy: StretchPolicy,
) -> Result<bool, Converged> {
    let mut seen = oracle.probe_wrapped(x, y)?;
    if seen && policy == StretchPolicy::StopAtEvidence {
        return Ok(true);
    }
    let (mut lo, mut hi, mut row) = (x, x, y);
    for _ in 0..h {
        row += yc;
        lo -= 1;
        hi += 1;
        for col in lo..=hi {
            if oracle.probe_wrapped(col, row)? {
                if policy == StretchPolicy::StopAtEvidence {
                    return Ok(true);
                }
                seen = true;
            }
        }
    }
    Ok(seen)
}

/// Geometry of one growing triangle. `x, y` is the apex in unwrapped
/// coordinates, `yc` the direction its rows extend in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TriangleState {
    pub x: i64,
    pub y: i64,
    pub yc: i64,
    pub h: u32,
    pub w: u32,
    pub count: u32,
}

impl TriangleState {
    pub fn new(anchor: Coord) -> Self {
        Self { x: anchor.x as i64, y: anchor.y as i64, yc: -1, h: 2, w: 3, count: 0 }
    }

    /// The seed triangle: apex plus one row of three cells.
    pub fn seed<S: SearchSpace + ?Sized>(
        &self,
        oracle: &mut Oracle<'_, S>,
        policy: StretchPolicy,
    ) -> Result<bool, Converged> {
        triangle_stretch(oracle, self.x, self.y, self.yc, self.h - 1, policy)
    }

    /// One fractal growth step. All three pieces are always stretched; the
    /// result is whether any of them saw evidence.
    pub fn grow<S: SearchSpace + ?Sized>(
        &mut self,
        oracle: &mut Oracle<'_, S>,
        policy: StretchPolicy,
    ) -> Result<bool, Converged> {
        self.yc = -self.yc;
        self.count += 1;
        let half = self.w.div_ceil(2) as i64;
        let h = self.h as i64;
        let piece = self.h - 1;
        let flank_y = self.y - self.yc * (h - 1);
        let mut seen = triangle_stretch(oracle, self.x - half, flank_y, self.yc, piece, policy)?;
        seen |= triangle_stretch(oracle, self.x + half, flank_y, self.yc, piece, policy)?;
        seen |= triangle_stretch(oracle, self.x, self.y - self.yc * (2 * h - 1), self.yc, piece, policy)?;
        self.h *= 2;
        self.w = 2 * self.w + 1;
        self.y -= self.yc * (self.h as i64 - 1);
        Ok(seen)
    }
}

/// Seeds a triangle at `anchor` and grows it `iterations` times regardless of
/// evidence. Used to inspect the growth pattern in isolation.
pub fn grow_triangle<S: SearchSpace + ?Sized>(
    oracle: &mut Oracle<'_, S>,
    anchor: Coord,
    iterations: u32,
    policy: StretchPolicy,
) -> Result<TriangleState, Converged> {
    let mut tri = TriangleState::new(anchor);
    tri.seed(oracle, policy)?;
    for _ in 0..iterations {
        tri.grow(oracle, policy)?;
    }
    Ok(tri)
}

fn run<S: SearchSpace + ?Sized, R: Rng + ?Sized>(
    oracle: &mut Oracle<'_, S>,
    params: &FtsParams,
    rng: &mut R,
    fallback: &mut bool,
) -> Result<(), Converged> {
    let dims = oracle.dims();
    let extent = dims.width.max(dims.height);
    let policy = params.stretch;
    let mut tri = TriangleState::new(random_anchor(rng, dims));
    let mut evidence = tri.seed(oracle, policy)?;
    for _ in 0..params.t {
        // Once evidence is seen the triangle keeps growing until the target
        // turns up or the triangle spans the grid.
        while tri.count < params.c || evidence {
            if tri.h >= extent {
                *fallback = true;
                return scan_all(oracle);
            }
            evidence |= tri.grow(oracle, policy)?;
        }
        let apex = dims.wrap(tri.x, tri.y);
        tri = TriangleState::new(pos_step(apex, params.d, rng, dims));
        evidence = tri.seed(oracle, policy)?;
    }
    *fallback = true;
    scan_all(oracle)
}

pub fn fts_search<S: SearchSpace + ?Sized, R: Rng + ?Sized>(
    mut oracle: Oracle<'_, S>,
    params: &FtsParams,
    rng: &mut R,
) -> SearchOutcome {
    let mut fallback = false;
    let result = run(&mut oracle, params, rng, &mut fallback);
    finish(oracle, result, fallback, StepMetric::Total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Dims;
    use crate::instance::Instance;
    use crate::oracle::VisitOutcome;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    /// A large empty grid with the target parked in a corner.
    fn empty(s: u32) -> Instance {
        Instance::new(s, s, Coord::new(s - 1, s - 1), vec![Coord::new(s - 2, s - 2)], 1)
    }

    fn traced(oracle: &Oracle<'_, Instance>) -> Vec<Coord> {
        oracle.trace().unwrap().iter().map(|e| e.coord).collect()
    }

    #[test]
    fn stretch_of_two_rows_visits_nine_cells() {
        let inst = empty(64);
        let mut o = Oracle::with_trace(&inst);
        let seen = triangle_stretch(&mut o, 10, 10, -1, 2, StretchPolicy::Complete).unwrap();
        assert!(!seen);
        let mut expected = vec![Coord::new(10, 10)];
        expected.extend((9..=11).map(|x| Coord::new(x, 9)));
        expected.extend((8..=12).map(|x| Coord::new(x, 8)));
        assert_eq!(traced(&o), expected);
    }

    #[test]
    fn stretch_of_one_row_visits_four_cells() {
        let inst = empty(64);
        let mut o = Oracle::with_trace(&inst);
        triangle_stretch(&mut o, 10, 10, 1, 1, StretchPolicy::Complete).unwrap();
        let mut expected = vec![Coord::new(10, 10)];
        expected.extend((9..=11).map(|x| Coord::new(x, 11)));
        assert_eq!(traced(&o), expected);
    }

    #[test]
    fn stretch_policies_differ_only_after_evidence() {
        let inst = Instance::new(64, 64, Coord::new(40, 40), vec![Coord::new(9, 9)], 40);
        let mut stop = Oracle::new(&inst);
        assert_eq!(triangle_stretch(&mut stop, 10, 10, -1, 2, StretchPolicy::StopAtEvidence), Ok(true));
        assert_eq!(stop.total(), 2);
        let mut full = Oracle::new(&inst);
        assert_eq!(triangle_stretch(&mut full, 10, 10, -1, 2, StretchPolicy::Complete), Ok(true));
        assert_eq!(full.total(), 9);
    }

    #[test]
    fn stretch_wraps_around_the_torus() {
        let inst = Instance::new(32, 32, Coord::new(16, 16), vec![Coord::new(17, 17)], 1);
        let mut o = Oracle::with_trace(&inst);
        triangle_stretch(&mut o, 0, 0, -1, 1, StretchPolicy::Complete).unwrap();
        assert_eq!(
            traced(&o),
            vec![Coord::new(0, 0), Coord::new(31, 31), Coord::new(0, 31), Coord::new(1, 31)]
        );
    }

    #[test]
    fn target_on_the_anchor_costs_one_visit() {
        let inst = Instance::new(64, 64, Coord::new(10, 10), vec![Coord::new(11, 11)], 2);
        let mut o = Oracle::new(&inst);
        assert_eq!(triangle_stretch(&mut o, 10, 10, 1, 3, StretchPolicy::Complete), Err(Converged));
        assert_eq!(o.total(), 1);
    }

    #[test]
    fn growth_pieces_tile_without_overlap() {
        let inst = empty(4096);
        for iterations in 0..=6u32 {
            let mut o = Oracle::with_trace(&inst);
            grow_triangle(&mut o, Coord::new(2048, 2048), iterations, StretchPolicy::Complete).unwrap();
            let cells = traced(&o);
            let distinct: HashSet<_> = cells.iter().copied().collect();
            assert_eq!(distinct.len(), cells.len(), "revisit after {iterations} growths");
            // a solid triangle of 2^(k+1) rows holds 4^(k+1) cells
            assert_eq!(cells.len() as u64, 4u64.pow(iterations + 1));
        }
    }

    #[test]
    fn growth_yields_a_solid_triangle() {
        let inst = empty(512);
        let mut o = Oracle::with_trace(&inst);
        let tri = grow_triangle(&mut o, Coord::new(256, 256), 3, StretchPolicy::Complete).unwrap();
        let cells: HashSet<_> = traced(&o).into_iter().collect();
        // apex at (tri.x, tri.y), rows extend along yc, row k spans x-k..=x+k
        let rows = tri.h as i64;
        assert_eq!(rows, 16);
        let mut expected = HashSet::new();
        for k in 0..rows {
            for dx in -k..=k {
                expected.insert(Coord::new((tri.x + dx) as u32, (tri.y + tri.yc * k) as u32));
            }
        }
        assert_eq!(cells, expected);
    }

    #[test]
    fn unreachable_evidence_with_one_triangle_falls_back() {
        let dims = Dims::new(64, 64);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let start = random_anchor(&mut rng.clone(), dims);
        // opposite corner of the torus from the start anchor
        let psi = Coord::new((start.x + 32) % 64, (start.y + 32) % 64);
        let mu = Coord::new((psi.x + 1) % 64, psi.y);
        let inst = Instance::new(64, 64, psi, vec![mu], 2);
        let out = fts_search(Oracle::new(&inst), &FtsParams::new(1, 1, 1), &mut rng);
        assert!(out.fallback_used);
        assert_eq!(out.found, psi);
        // seed (4) + one growth (12) + next seed (4) + row-major scan up to psi
        assert_eq!(out.total_visits, 20 + psi.index(64) as u64 + 1);
    }

    #[test]
    fn evidence_latches_growth_until_target() {
        // evidence right next to the start anchor, target within reach of growth
        let dims = Dims::new(256, 256);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let start = random_anchor(&mut rng.clone(), dims);
        let psi = Coord::new(start.x, (start.y + 20) % 256);
        let mu = Coord::new(start.x, (start.y + 255) % 256);
        let inst = Instance::new(256, 256, psi, vec![mu], 25);
        let out = fts_search(Oracle::new(&inst), &FtsParams::new(1, 7, 1), &mut rng);
        assert_eq!(out.found, psi);
        assert!(!out.fallback_used);
        assert!(out.evidence_hits >= 1);
    }

    #[test]
    fn literal_policy_still_terminates() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let inst = crate::instance::generate_instance(64, &mut rng).unwrap();
            let params = FtsParams::new(30, 11, 2).with_stretch(StretchPolicy::StopAtEvidence);
            let out = fts_search(Oracle::new(&inst), &params, &mut rng);
            assert_eq!(out.found, inst.psi());
            assert_eq!(inst.classify(out.found), VisitOutcome::Found);
        }
    }
}
