//! Monte Carlo trajectories through chains of instruments.
//!
//! Randomness comes from SplitMix64 used in counter mode: the `n`-th draw for a
//! key is `mix(key + (n + 1)·γ)`. Trajectory `t` of a run seeded with `s` is keyed
//! by `at(s, t)` and step `k` of that trajectory uses `at(key, k)`, so any single
//! trajectory can be replayed without generating the ones before it.

use qmulti_core::{sequential_instruments, ComplexMatrix, InstrumentF64, OutcomeSpace, StateF64, Tolerance};
use rayon::prelude::*;
use thiserror::Error;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draw `counter` of the SplitMix64 stream seeded with `key`.
pub fn at(key: u64, counter: u64) -> u64 {
    mix(key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GAMMA)))
}

/// Uniform in `[0, 1)` from the top 53 bits.
pub fn unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

#[derive(Debug, Error, PartialEq)]
pub enum SampleError {
    #[error("vanishing distribution at step {step} (total mass {mass:e})")]
    Vanishing { step: usize, mass: f64 },
    #[error("step {step}: instrument expects dimension {expected}, state has {found}")]
    Dimension { step: usize, expected: usize, found: usize },
    #[error("step {step}: post-measurement state rejected: {message}")]
    State { step: usize, message: String },
    #[error("empty instrument chain")]
    EmptyChain,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectorySample {
    pub seed: u64,
    /// Outcome key drawn at each step.
    pub outcomes: Vec<String>,
    /// Normalized post-measurement state after each step.
    pub states: Vec<StateF64>,
    /// Probability of the drawn outcome at each step.
    pub weights: Vec<f64>,
}

/// Instrument used at `step`; the chain repeats when `steps` exceeds its length.
fn instrument_at(chain: &[InstrumentF64], step: usize) -> &InstrumentF64 {
    &chain[step % chain.len()]
}

fn walk(
    chain: &[InstrumentF64],
    rho0: &StateF64,
    key: u64,
    steps: usize,
    eps: f64,
    mut visit: impl FnMut(usize, f64, &ComplexMatrix),
) -> Result<(), SampleError> {
    if chain.is_empty() {
        return Err(SampleError::EmptyChain);
    }
    let mut rho = rho0.matrix().clone();
    for step in 0..steps {
        let inst = instrument_at(chain, step);
        if inst.in_dim() != rho.rows() {
            return Err(SampleError::Dimension { step, expected: inst.in_dim(), found: rho.rows() });
        }
        let images: Vec<ComplexMatrix> =
            inst.operations().iter().map(|op| op.apply(&rho).expect("dimension checked")).collect();
        let probs: Vec<f64> = images.iter().map(|m| m.trace().re.max(0.0)).collect();
        let mass: f64 = probs.iter().sum();
        if mass < eps {
            return Err(SampleError::Vanishing { step, mass });
        }
        let target = unit(at(key, step as u64)) * mass;
        let mut acc = 0.0;
        let mut x = probs.iter().rposition(|&p| p > 0.0).expect("positive mass");
        for (k, &p) in probs.iter().enumerate() {
            acc += p;
            if target < acc {
                x = k;
                break;
            }
        }
        rho = images[x].scale_real(1.0 / probs[x]);
        visit(x, probs[x], &rho);
    }
    Ok(())
}

/// One trajectory keyed directly by `seed`.
pub fn sample_trajectory(
    chain: &[InstrumentF64],
    rho0: &StateF64,
    seed: u64,
    steps: usize,
    eps: f64,
) -> Result<TrajectorySample, SampleError> {
    let mut out = TrajectorySample { seed, outcomes: Vec::new(), states: Vec::new(), weights: Vec::new() };
    let mut states = Vec::with_capacity(steps);
    let mut step = 0;
    walk(chain, rho0, seed, steps, eps, |x, w, rho| {
        out.outcomes.push(instrument_at(chain, step).space().key(x));
        out.weights.push(w);
        states.push(rho.clone());
        step += 1;
    })?;
    let tol = Tolerance::new(eps.max(1e-9));
    for (step, m) in states.into_iter().enumerate() {
        out.states.push(StateF64::new(m, tol).map_err(|e| SampleError::State { step, message: e.to_string() })?);
    }
    Ok(out)
}

/// Outcome indices of `trajectories` runs; trajectory `t` is keyed by `at(seed, t)`.
pub fn sample_outcomes(
    chain: &[InstrumentF64],
    rho0: &StateF64,
    seed: u64,
    steps: usize,
    trajectories: usize,
    eps: f64,
) -> Result<Vec<Vec<usize>>, SampleError> {
    (0..trajectories as u64)
        .into_par_iter()
        .map(|t| {
            let mut seq = Vec::with_capacity(steps);
            walk(chain, rho0, at(seed, t), steps, eps, |x, _, _| seq.push(x))?;
            Ok(seq)
        })
        .collect()
}

/// Empirical joint frequencies of a sampling run against the analytic distribution
/// of the sequential product of the (repeated) chain.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleSummary {
    pub space: OutcomeSpace,
    pub counts: Vec<usize>,
    pub analytic: Vec<f64>,
    pub trajectories: usize,
    /// Largest `|f − p| / σ` with `σ = √(p(1−p)/N)`; zero-variance outcomes count
    /// only when they disagree.
    pub max_z: f64,
    pub within: bool,
}

pub fn summarize(
    chain: &[InstrumentF64],
    rho0: &StateF64,
    outcomes: &[Vec<usize>],
    steps: usize,
    sigmas: f64,
    eps: f64,
) -> Result<SampleSummary, String> {
    if chain.is_empty() {
        return Err(SampleError::EmptyChain.to_string());
    }
    let expanded: Vec<InstrumentF64> = (0..steps).map(|k| instrument_at(chain, k).clone()).collect();
    let joint = sequential_instruments(&expanded).map_err(|e| e.to_string())?;
    let analytic = joint.distribution(rho0).map_err(|e| e.to_string())?.probs;
    let space = joint.space().clone();
    let mut counts = vec![0usize; space.len()];
    for seq in outcomes {
        counts[space.from_digits(seq)] += 1;
    }
    let n = outcomes.len() as f64;
    let mut max_z: f64 = 0.0;
    let mut within = true;
    for (&c, &p) in counts.iter().zip(&analytic) {
        let f = c as f64 / n;
        let sigma = (p * (1.0 - p) / n).max(0.0).sqrt();
        let gap = (f - p).abs();
        if gap > sigmas * sigma + eps {
            within = false;
        }
        let z = if sigma > 0.0 {
            gap / sigma
        } else if gap <= eps {
            0.0
        } else {
            f64::INFINITY
        };
        max_z = max_z.max(z);
    }
    Ok(SampleSummary { space, counts, analytic, trajectories: outcomes.len(), max_z, within })
}
