use super::rng::RandomSource;
use crate::error::{Error, Result};

/// Epsilon-greedy arm choice over the available arms.
///
/// With probability `epsilon` a uniform available arm is returned; otherwise
/// an available arm with maximal index, ties broken uniformly at random.
pub fn epsilon_greedy_select(
    indices: &[f64],
    available: &[bool],
    epsilon: f64,
    rng: &mut RandomSource,
) -> Result<usize> {
    let candidates: Vec<usize> = (0..indices.len())
        .filter(|&i| available.get(i).copied().unwrap_or(false))
        .collect();
    if candidates.is_empty() {
        return Err(Error::EmptySelection);
    }
    if rng.uniform() < epsilon {
        return Ok(candidates[rng.below(candidates.len())]);
    }
    Ok(greedy_among(indices, &candidates, rng))
}

/// Uniformly random element of the argmax set of `indices` over `candidates`.
pub fn greedy_among(indices: &[f64], candidates: &[usize], rng: &mut RandomSource) -> usize {
    let best = candidates
        .iter()
        .map(|&i| indices[i])
        .fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = candidates.iter().copied().filter(|&i| indices[i] == best).collect();
    if ties.len() == 1 {
        ties[0]
    } else {
        ties[rng.below(ties.len())]
    }
}
