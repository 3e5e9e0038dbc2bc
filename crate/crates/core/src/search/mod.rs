//! The seven searchers behind one interface.
//!
//! Every searcher runs until the searched cell is visited. Probe anchors and
//! growth shapes live on the grid torus: coordinates are wrapped before each
//! visit. When a searcher exhausts its own strategy it falls back to a
//! row-major scan of the whole grid, so every run terminates.

mod exhaustive;
mod fts;
mod ils;
mod vns;

pub use exhaustive::exhaustive_search;
pub use fts::{fts_search, grow_triangle, triangle_stretch, FtsParams, StretchPolicy, TriangleState};
pub use ils::{ils_search, ils_tiling, IlsParams};
pub use vns::{
    tabu_search, vns1_search, vns2_search, vns3_search, TabuParams, Vns1Params, Vns2Params, Vns3Params,
};

use crate::grid::{Coord, Dims};
use crate::oracle::{Converged, Oracle, SearchSpace, TraceEntry};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Fts,
    Ils,
    Vns1,
    Vns2,
    Vns3,
    Tabu,
    Exhaustive,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Fts,
        Algorithm::Ils,
        Algorithm::Vns1,
        Algorithm::Vns2,
        Algorithm::Vns3,
        Algorithm::Tabu,
        Algorithm::Exhaustive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Fts => "fts",
            Algorithm::Ils => "ils",
            Algorithm::Vns1 => "vns1",
            Algorithm::Vns2 => "vns2",
            Algorithm::Vns3 => "vns3",
            Algorithm::Tabu => "tabu",
            Algorithm::Exhaustive => "exhaustive",
        }
    }

    /// Names of the tunable parameters, in genome order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Algorithm::Fts => &["t", "d", "c"],
            Algorithm::Ils => &["t", "a"],
            Algorithm::Vns1 => &["t", "m", "d"],
            Algorithm::Vns2 | Algorithm::Tabu => &["t", "d"],
            Algorithm::Vns3 => &["t", "d", "g"],
            Algorithm::Exhaustive => &[],
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParamsError {
    #[error("unknown algorithm {0:?} (expected one of fts, ils, vns1, vns2, vns3, tabu, exhaustive)")]
    UnknownAlgorithm(String),
    #[error("parameter {name} of {algorithm} must be at least 1")]
    NotPositive { algorithm: Algorithm, name: &'static str },
    #[error("{algorithm} has no parameter {name:?}")]
    UnknownParam { algorithm: Algorithm, name: String },
    #[error("{algorithm} needs parameter {name}")]
    MissingParam { algorithm: Algorithm, name: &'static str },
    #[error("malformed parameter {0:?}, expected name=value")]
    Malformed(String),
}

impl FromStr for Algorithm {
    type Err = ParamsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ParamsError::UnknownAlgorithm(s.to_string()))
    }
}

/// A fully specified searcher: which algorithm plus its parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum Params {
    Fts(FtsParams),
    Ils(IlsParams),
    Vns1(Vns1Params),
    Vns2(Vns2Params),
    Vns3(Vns3Params),
    Tabu(TabuParams),
    Exhaustive,
}

impl Params {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Params::Fts(_) => Algorithm::Fts,
            Params::Ils(_) => Algorithm::Ils,
            Params::Vns1(_) => Algorithm::Vns1,
            Params::Vns2(_) => Algorithm::Vns2,
            Params::Vns3(_) => Algorithm::Vns3,
            Params::Tabu(_) => Algorithm::Tabu,
            Params::Exhaustive => Algorithm::Exhaustive,
        }
    }

    /// Builds parameters from values listed in [`Algorithm::param_names`] order.
    pub fn from_values(algorithm: Algorithm, values: &[u32]) -> Result<Self, ParamsError> {
        let names = algorithm.param_names();
        if let Some(i) = values.iter().position(|&v| v == 0) {
            return Err(ParamsError::NotPositive { algorithm, name: names[i] });
        }
        if values.len() < names.len() {
            return Err(ParamsError::MissingParam { algorithm, name: names[values.len()] });
        }
        let v = values;
        Ok(match algorithm {
            Algorithm::Fts => Params::Fts(FtsParams::new(v[0], v[1], v[2])),
            Algorithm::Ils => Params::Ils(IlsParams { t: v[0], a: v[1] }),
            Algorithm::Vns1 => Params::Vns1(Vns1Params { t: v[0], m: v[1], d: v[2] }),
            Algorithm::Vns2 => Params::Vns2(Vns2Params { t: v[0], d: v[1] }),
            Algorithm::Vns3 => Params::Vns3(Vns3Params { t: v[0], d: v[1], g: v[2] }),
            Algorithm::Tabu => Params::Tabu(TabuParams { t: v[0], d: v[1] }),
            Algorithm::Exhaustive => Params::Exhaustive,
        })
    }

    /// Parameter values in [`Algorithm::param_names`] order.
    pub fn values(&self) -> Vec<u32> {
        match *self {
            Params::Fts(p) => vec![p.t, p.d, p.c],
            Params::Ils(p) => vec![p.t, p.a],
            Params::Vns1(p) => vec![p.t, p.m, p.d],
            Params::Vns2(p) => vec![p.t, p.d],
            Params::Vns3(p) => vec![p.t, p.d, p.g],
            Params::Tabu(p) => vec![p.t, p.d],
            Params::Exhaustive => vec![],
        }
    }

    /// Parses `name=value` pairs separated by commas or whitespace, e.g. `t=40,d=97,c=4`.
    pub fn parse(algorithm: Algorithm, spec: &str) -> Result<Self, ParamsError> {
        let names = algorithm.param_names();
        let mut values: Vec<Option<u32>> = vec![None; names.len()];
        for pair in spec.split(|c: char| c == ',' || c.is_whitespace()).filter(|p| !p.is_empty()) {
            let (name, value) = pair
                .split_once('=')
                .ok_or_else(|| ParamsError::Malformed(pair.to_string()))?;
            let slot = names
                .iter()
                .position(|n| *n == name.trim())
                .ok_or_else(|| ParamsError::UnknownParam { algorithm, name: name.to_string() })?;
            let value = value
                .trim()
                .parse()
                .map_err(|_| ParamsError::Malformed(pair.to_string()))?;
            values[slot] = Some(value);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or(ParamsError::MissingParam { algorithm, name: names[i] }))
            .collect::<Result<Vec<_>, _>>()?;
        Params::from_values(algorithm, &values)
    }
}

impl fmt::Display for Params {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.algorithm().param_names();
        let pairs: Vec<String> = names
            .iter()
            .zip(self.values())
            .map(|(n, v)| format!("{n}={v}"))
            .collect();
        write!(f, "{}", pairs.join(","))
    }
}

/// What a finished search reports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchOutcome {
    pub found: Coord,
    pub total_visits: u64,
    pub unique_visits: u64,
    pub evidence_hits: u64,
    pub fallback_used: bool,
    /// The step complexity of this run: total visits for every searcher
    /// except tabu, which counts only first accesses.
    pub steps: u64,
    pub trace: Option<Vec<TraceEntry>>,
}

/// Moves one probe anchor: `d` cells right or `d` cells down with equal
/// probability, modulo the grid.
pub fn pos_step<R: Rng + ?Sized>(p: Coord, d: u32, rng: &mut R, dims: Dims) -> Coord {
    pos_step_with(p, d, rng.gen::<bool>(), dims)
}

/// [`pos_step`] with the coin flip supplied.
pub fn pos_step_with(p: Coord, d: u32, horizontal: bool, dims: Dims) -> Coord {
    if horizontal {
        Coord::new(((p.x as u64 + d as u64) % dims.width as u64) as u32, p.y)
    } else {
        Coord::new(p.x, ((p.y as u64 + d as u64) % dims.height as u64) as u32)
    }
}

pub(crate) fn random_anchor<R: Rng + ?Sized>(rng: &mut R, dims: Dims) -> Coord {
    Coord::new(rng.gen_range(0..dims.width), rng.gen_range(0..dims.height))
}

/// Row-major scan of the whole grid; the fallback every searcher ends with.
pub(crate) fn scan_all<S: SearchSpace + ?Sized>(oracle: &mut Oracle<'_, S>) -> Result<(), Converged> {
    let dims = oracle.dims();
    for y in 0..dims.height {
        for x in 0..dims.width {
            oracle.probe(Coord::new(x, y))?;
        }
    }
    Ok(())
}

/// How a searcher's step count is read off the oracle.
#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum StepMetric {
    Total,
    Unique,
}

pub(crate) fn finish<S: SearchSpace + ?Sized>(
    mut oracle: Oracle<'_, S>,
    result: Result<(), Converged>,
    fallback_used: bool,
    metric: StepMetric,
) -> SearchOutcome {
    let found = match (result, oracle.found()) {
        (Err(Converged), Some(p)) => p,
        _ => panic!("search space has no target cell: a full scan never converged"),
    };
    let steps = match metric {
        StepMetric::Total => oracle.total(),
        StepMetric::Unique => oracle.unique(),
    };
    SearchOutcome {
        found,
        total_visits: oracle.total(),
        unique_visits: oracle.unique(),
        evidence_hits: oracle.evidence_hits(),
        fallback_used,
        steps,
        trace: oracle.take_trace(),
    }
}

/// Runs the searcher described by `params` once over `space`.
pub fn run_search<S, R>(space: &S, params: &Params, rng: &mut R, trace: bool) -> SearchOutcome
where
    S: SearchSpace + ?Sized,
    R: Rng + ?Sized,
{
    let oracle = if trace { Oracle::with_trace(space) } else { Oracle::new(space) };
    match params {
        Params::Fts(p) => fts_search(oracle, p, rng),
        Params::Ils(p) => ils_search(oracle, p, rng),
        Params::Vns1(p) => vns1_search(oracle, p, rng),
        Params::Vns2(p) => vns2_search(oracle, p, rng),
        Params::Vns3(p) => vns3_search(oracle, p, rng),
        Params::Tabu(p) => tabu_search(oracle, p, rng),
        Params::Exhaustive => exhaustive_search(oracle),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pos_step_examples() {
        let dims = Dims::new(10, 10);
        assert_eq!(pos_step_with(Coord::new(5, 7), 3, true, dims), Coord::new(8, 7));
        assert_eq!(pos_step_with(Coord::new(5, 7), 3, false, dims), Coord::new(5, 0));
    }

    #[test]
    fn pos_step_coin_is_fair() {
        let dims = Dims::new(10, 10);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let right = (0..n)
            .filter(|_| pos_step(Coord::new(5, 7), 3, &mut rng, dims) == Coord::new(8, 7))
            .count();
        let freq = right as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 0.01, "horizontal frequency {freq}");
    }

    #[test]
    fn params_parse_and_display() {
        let p = Params::parse(Algorithm::Fts, "t=40, d=97,c=4").unwrap();
        assert_eq!(p, Params::Fts(FtsParams::new(40, 97, 4)));
        assert_eq!(p.to_string(), "t=40,d=97,c=4");
        assert_eq!(Params::parse(Algorithm::Exhaustive, "").unwrap(), Params::Exhaustive);
        assert_eq!(
            Params::parse(Algorithm::Vns2, "t=3"),
            Err(ParamsError::MissingParam { algorithm: Algorithm::Vns2, name: "d" })
        );
        assert_eq!(
            Params::parse(Algorithm::Vns2, "t=3,d=0"),
            Err(ParamsError::NotPositive { algorithm: Algorithm::Vns2, name: "d" })
        );
        assert!(matches!(Params::parse(Algorithm::Ils, "t=4,z=1"), Err(ParamsError::UnknownParam { .. })));
        assert!(matches!(Params::parse(Algorithm::Ils, "t4"), Err(ParamsError::Malformed(_))));
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert!(matches!("simplex".parse::<Algorithm>(), Err(ParamsError::UnknownAlgorithm(_))));
    }
}
