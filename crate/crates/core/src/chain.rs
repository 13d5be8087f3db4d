//! Realizations of the chain `X_{k+1} = f_{i_{k+1}}(X_k)` driven by
//! reproducible random words.
//!
//! Replica `r` of any ensemble draws its word from stream `(seed, r)`, so
//! replicas are independent of scheduling; parallel results are collected in
//! replica order before any reduction.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::ifs::IfsSystem;
use crate::measure::EmpiricalMeasure;
use crate::rng::{SplitMix64, StreamSpec};

/// States may leave `[0, 1]` by rounding only up to this much.
pub const STATE_TOL: f64 = 1e-12;

/// One realized path. `states[k]` is the state after `symbols[..=k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub x0: f64,
    pub symbols: Vec<usize>,
    pub states: Vec<f64>,
}

impl Trajectory {
    /// Runs a fixed word from `x0`.
    pub fn from_word(system: &IfsSystem, x0: f64, word: &[usize]) -> Result<Self> {
        check_unit("x0", x0)?;
        system.word_apply(word, x0)?;
        let mut x = x0;
        let states = word
            .iter()
            .map(|&s| {
                x = system.step(s, x);
                x
            })
            .collect();
        Ok(Self {
            x0,
            symbols: word.to_vec(),
            states,
        })
    }

    /// Final state; `x0` for an empty path.
    pub fn terminal(&self) -> f64 {
        self.states.last().copied().unwrap_or(self.x0)
    }
}

#[inline]
pub(crate) fn check_state(x: f64) -> Result<f64> {
    if (-STATE_TOL..=1.0 + STATE_TOL).contains(&x) {
        Ok(x)
    } else {
        Err(Error::InvariantBreach(format!(
            "chain state {x} left [0, 1]"
        )))
    }
}

/// Draws the next symbol from `gen`.
#[inline]
pub fn next_symbol(system: &IfsSystem, gen: &mut SplitMix64) -> usize {
    system.symbol_for(gen.next_f64())
}

pub fn sample_symbols(system: &IfsSystem, n: usize, stream: StreamSpec) -> Vec<usize> {
    let mut gen = stream.generator();
    (0..n).map(|_| next_symbol(system, &mut gen)).collect()
}

pub fn run_trajectory(
    system: &IfsSystem,
    x0: f64,
    n: usize,
    stream: StreamSpec,
) -> Result<Trajectory> {
    check_unit("x0", x0)?;
    let mut gen = stream.generator();
    let mut symbols = Vec::with_capacity(n);
    let mut states = Vec::with_capacity(n);
    let mut x = x0;
    for _ in 0..n {
        let s = next_symbol(system, &mut gen);
        x = check_state(system.step(s, x))?;
        symbols.push(s);
        states.push(x);
    }
    Ok(Trajectory {
        x0,
        symbols,
        states,
    })
}

/// Two trajectories driven by the same word.
pub fn run_coupled_pair(
    system: &IfsSystem,
    x0: f64,
    y0: f64,
    n: usize,
    stream: StreamSpec,
) -> Result<(Trajectory, Trajectory)> {
    check_unit("y0", y0)?;
    let a = run_trajectory(system, x0, n, stream)?;
    let b = Trajectory::from_word(system, y0, &a.symbols)?;
    for &y in &b.states {
        check_state(y)?;
    }
    Ok((a, b))
}

/// State after `n` steps from `x0`, without storing the path.
#[inline]
pub fn terminal_state(system: &IfsSystem, x0: f64, n: usize, gen: &mut SplitMix64) -> Result<f64> {
    let mut x = x0;
    for _ in 0..n {
        x = system.step(next_symbol(system, gen), x);
    }
    check_state(x)
}

/// Where ensemble replicas start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Starts {
    /// Every replica starts at the same point.
    Point(f64),
    /// Replica `r` starts at `points[r % len]`.
    Points(Vec<f64>),
    /// Replica `r` starts at the terminal state of burn-in replica `r`, a
    /// trajectory of `n_burn` steps from ½ on stream `(seed, r)`.
    Stationary { n_burn: usize, seed: u64 },
}

impl Starts {
    pub fn validate(&self) -> Result<()> {
        match self {
            Starts::Point(x) => check_unit("start", *x),
            Starts::Points(xs) if xs.is_empty() => {
                Err(Error::Precondition("start point list is empty".into()))
            }
            Starts::Points(xs) => xs.iter().try_for_each(|&x| check_unit("start", x)),
            Starts::Stationary { .. } => Ok(()),
        }
    }

    /// Start of replica `r`.
    pub fn start(&self, system: &IfsSystem, r: u64) -> Result<f64> {
        match self {
            Starts::Point(x) => Ok(*x),
            Starts::Points(xs) => Ok(xs[(r % xs.len() as u64) as usize]),
            Starts::Stationary { n_burn, seed } => {
                let mut gen = StreamSpec::new(*seed, r).generator();
                terminal_state(system, 0.5, *n_burn, &mut gen)
            }
        }
    }
}

/// Runs `f(r)` for replicas `0..replicas` in parallel and returns the results
/// in replica order.
pub fn map_replicas<T, F>(replicas: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    (0..replicas as u64).into_par_iter().map(f).collect()
}

/// `R` full trajectories; replica `r` uses stream `(seed, r)`.
pub fn run_ensemble(
    system: &IfsSystem,
    starts: &Starts,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<Trajectory>> {
    starts.validate()?;
    if replicas == 0 {
        return Err(Error::Precondition(
            "ensemble needs at least one replica".into(),
        ));
    }
    map_replicas(replicas, |r| {
        run_trajectory(
            system,
            starts.start(system, r)?,
            n,
            StreamSpec::new(seed, r),
        )
    })
}

/// Terminal states only; the same values as `run_ensemble(..)[r].terminal()`.
pub fn ensemble_terminals(
    system: &IfsSystem,
    starts: &Starts,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    starts.validate()?;
    map_replicas(replicas, |r| {
        let x0 = starts.start(system, r)?;
        terminal_state(system, x0, n, &mut StreamSpec::new(seed, r).generator())
    })
}

/// Approximate draws from the invariant measure: terminal states of `R`
/// trajectories of length `n_burn` started at ½.
pub fn burn_in_sample(
    system: &IfsSystem,
    n_burn: usize,
    replicas: usize,
    seed: u64,
) -> Result<EmpiricalMeasure> {
    if replicas == 0 {
        return Err(Error::Precondition(
            "burn-in needs at least one replica".into(),
        ));
    }
    let xs = ensemble_terminals(system, &Starts::Point(0.5), n_burn, replicas, seed)?;
    EmpiricalMeasure::from_samples(&xs.iter().map(|x| x.clamp(0.0, 1.0)).collect::<Vec<_>>())
}
