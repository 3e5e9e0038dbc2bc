//! Iterated local search over an equal square tiling.

use super::{finish, SearchOutcome, StepMetric};
use crate::grid::{Coord, Dims};
use crate::oracle::{Converged, Oracle, SearchSpace};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IlsParams {
    /// Requested number of squares; coerced by [`ils_tiling`].
    pub t: u32,
    /// Random samples taken in each square per pass.
    pub a: u32,
}

/// Squares per side: the largest `k` with `k * k <= t` that divides both grid sides.
pub fn ils_tiling(t: u32, dims: Dims) -> u32 {
    let mut k = (t.max(1) as f64).sqrt() as u32;
    while (k as u64 + 1) * (k as u64 + 1) <= t as u64 {
        k += 1;
    }
    while k > 1 && (!dims.width.is_multiple_of(k) || !dims.height.is_multiple_of(k)) {
        k -= 1;
    }
    k.max(1)
}

fn run<S: SearchSpace + ?Sized, R: Rng + ?Sized>(
    oracle: &mut Oracle<'_, S>,
    params: &IlsParams,
    rng: &mut R,
) -> Result<(), Converged> {
    let dims = oracle.dims();
    let k = ils_tiling(params.t, dims);
    let (sw, sh) = (dims.width / k, dims.height / k);
    let mut order: Vec<u32> = (0..k * k).collect();
    // Passes repeat with fresh randomness until the target is visited.
    loop {
        order.shuffle(rng);
        for &square in &order {
            let (ox, oy) = ((square % k) * sw, (square / k) * sh);
            for _ in 0..params.a {
                let p = Coord::new(ox + rng.gen_range(0..sw), oy + rng.gen_range(0..sh));
                if oracle.probe(p)? {
                    for y in oy..oy + sh {
                        for x in ox..ox + sw {
                            oracle.probe(Coord::new(x, y))?;
                        }
                    }
                }
            }
        }
    }
}

pub fn ils_search<S: SearchSpace + ?Sized, R: Rng + ?Sized>(
    mut oracle: Oracle<'_, S>,
    params: &IlsParams,
    rng: &mut R,
) -> SearchOutcome {
    let result = run(&mut oracle, params, rng);
    finish(oracle, result, false, StepMetric::Total)
}
