use super::{finish, scan_all, SearchOutcome, StepMetric};
use crate::oracle::{Oracle, SearchSpace};

/// Row-major scan from (0, 0) that ignores evidence. Needs exactly
/// `index(psi) + 1` visits.
pub fn exhaustive_search<S: SearchSpace + ?Sized>(mut oracle: Oracle<'_, S>) -> SearchOutcome {
    let result = scan_all(&mut oracle);
    finish(oracle, result, false, StepMetric::Total)
}
