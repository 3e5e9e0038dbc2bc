//! Variable neighbourhood searches VNS1-3 and the tabu variant of VNS2.
//!
//! All of them walk a chain of probe anchors spaced `d` apart and differ in
//! the local search they trigger:
//!
//! * VNS1 sweeps the fixed `(2m+1)^2` window around an evidence cell.
//! * VNS2 grows Chebyshev rings around an evidence cell, nearest first.
//! * VNS3 visits a 3x3 block at every anchor and grows square rings `g`
//!   times, or until the target shows up once evidence was seen.
//! * Tabu runs VNS2 but only counts first accesses as steps.

use super::{finish, pos_step, random_anchor, scan_all, SearchOutcome, StepMetric};
use crate::oracle::{Converged, Oracle, SearchSpace};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vns1Params {
    pub t: u32,
    /// Chebyshev radius of the evidence window.
    pub m: u32,
    pub d: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vns2Params {
    pub t: u32,
    pub d: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vns3Params {
    pub t: u32,
    pub d: u32,
    /// Ring growths per square when no evidence shows up.
    pub g: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabuParams {
    pub t: u32,
    pub d: u32,
}

/// Visits the perimeter of the square of radius `r` around `(cx, cy)`, rows
/// top to bottom and left to right within a row.
fn ring<S: SearchSpace + ?Sized>(oracle: &mut Oracle<'_, S>, cx: i64, cy: i64, r: i64) -> Result<bool, Converged> {
    if r == 0 {
        return oracle.probe_wrapped(cx, cy);
    }
    let mut seen = false;
    for dy in -r..=r {
        if dy.abs() == r {
            for dx in -r..=r {
                seen |= oracle.probe_wrapped(cx + dx, cy + dy)?;
            }
        } else {
            seen |= oracle.probe_wrapped(cx - r, cy + dy)?;
            seen |= oracle.probe_wrapped(cx + r, cy + dy)?;
        }
    }
    Ok(seen)
}

fn run_vns1<S: SearchSpace + ?Sized, R: Rng + ?Sized>(
    oracle: &mut Oracle<'_, S>,
    params: &Vns1Params,
    rng: &mut R,
    fallback: &mut bool,
) -> Result<(), Converged> {
    let dims = oracle.dims();
    let m = params.m as i64;
    let mut p = random_anchor(rng, dims);
    for _ in 0..params.t {
        if oracle.probe(p)? {
            let (cx, cy) = (p.x as i64, p.y as i64);
            for y in cy - m..=cy + m {
                for x in cx - m..=cx + m {
                    oracle.probe_wrapped(x, y)?;
                }
            }
        }
        p = pos_step(p, params.d, rng, dims);
    }
    *fallback = true;
    scan_all(oracle)
}

fn run_vns2<S: SearchSpace + ?Sized, R: Rng + ?Sized>(
    oracle: &mut Oracle<'_, S>,
    t: u32,
    d: u32,
    rng: &mut R,
    fallback: &mut bool,
) -> Result<(), Converged> {
    let dims = oracle.dims();
    let extent = dims.width.max(dims.height) as i64;
    let mut p = random_anchor(rng, dims);
    for _ in 0..t {
        if oracle.probe(p)? {
            for r in 1..extent {
                ring(oracle, p.x as i64, p.y as i64, r)?;
            }
            // rings spanning the whole torus missed the target
            *fallback = true;
            return scan_all(oracle);
        }
        p = pos_step(p, d, rng, dims);
    }
    *fallback = true;
    scan_all(oracle)
}

fn run_vns3<S: SearchSpace + ?Sized, R: Rng + ?Sized>(
    oracle: &mut Oracle<'_, S>,
    params: &Vns3Params,
    rng: &mut R,
    fallback: &mut bool,
) -> Result<(), Converged> {
    let dims = oracle.dims();
    let extent = dims.width.max(dims.height);
    let mut p = random_anchor(rng, dims);
    for _ in 0..params.t {
        let (cx, cy) = (p.x as i64, p.y as i64);
        let mut evidence = ring(oracle, cx, cy, 0)? | ring(oracle, cx, cy, 1)?;
        let mut count = 1;
        while count < params.g || evidence {
            count += 1;
            if count >= extent {
                *fallback = true;
                return scan_all(oracle);
            }
            evidence |= ring(oracle, cx, cy, count as i64)?;
        }
        p = pos_step(p, params.d, rng, dims);
    }
    *fallback = true;
    scan_all(oracle)
}

pub fn vns1_search<S: SearchSpace + ?Sized, R: Rng + ?Sized>(
    mut oracle: Oracle<'_, S>,
    params: &Vns1Params,
    rng: &mut R,
) -> SearchOutcome {
    let mut fallback = false;
    let result = run_vns1(&mut oracle, params, rng, &mut fallback);
    finish(oracle, result, fallback, StepMetric::Total)
}

pub fn vns2_search<S: SearchSpace + ?Sized, R: Rng + ?Sized>(
    mut oracle: Oracle<'_, S>,
    params: &Vns2Params,
    rng: &mut R,
) -> SearchOutcome {
    let mut fallback = false;
    let result = run_vns2(&mut oracle, params.t, params.d, rng, &mut fallback);
    finish(oracle, result, fallback, StepMetric::Total)
}

pub fn vns3_search<S: SearchSpace + ?Sized, R: Rng + ?Sized>(
    mut oracle: Oracle<'_, S>,
    params: &Vns3Params,
    rng: &mut R,
) -> SearchOutcome {
    let mut fallback = false;
    let result = run_vns3(&mut oracle, params, rng, &mut fallback);
    finish(oracle, result, fallback, StepMetric::Total)
}

/// VNS2 with a visited-cell matrix: the oracle's first-access bitmap plays
/// that role, and re-evaluating a marked cell is not counted as a step.
pub fn tabu_search<S: SearchSpace + ?Sized, R: Rng + ?Sized>(
    mut oracle: Oracle<'_, S>,
    params: &TabuParams,
    rng: &mut R,
) -> SearchOutcome {
    let mut fallback = false;
    let result = run_vns2(&mut oracle, params.t, params.d, rng, &mut fallback);
    finish(oracle, result, fallback, StepMetric::Unique)
}
