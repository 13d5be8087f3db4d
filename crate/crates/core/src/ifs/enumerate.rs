//! Exhaustive walks over the tree of finite words.
//!
//! Every expectation over `n` random symbols is a finite weighted sum over
//! the `N^n` words of length `n`. [`walk_words`] visits that tree depth first,
//! handing each node's state and path probability to a visitor that
//! accumulates into a flat `f64` buffer. The first level is split across
//! threads; subtree buffers are then added in symbol order, so the result does
//! not depend on the thread count.

use rayon::prelude::*;

use super::system::IfsSystem;
use crate::error::Result;
use crate::plan::Budget;

/// Walks all words of length up to `depth`.
///
/// `step(state, symbol)` produces a child's state. `visit(d, state, weight,
/// acc)` is called for every node at depth `d >= 1`; returning `false`
/// prunes that node's subtree. Symbols with zero probability are skipped.
pub fn walk_words<T, S, V>(
    system: &IfsSystem,
    root: T,
    depth: usize,
    budget: Budget,
    acc_len: usize,
    step: S,
    visit: V,
) -> Result<Vec<f64>>
where
    T: Send + Sync,
    S: Fn(&T, usize) -> T + Sync,
    V: Fn(usize, &T, f64, &mut [f64]) -> bool + Sync,
{
    budget.check(system.len(), depth)?;
    let mut total = vec![0.0; acc_len];
    if depth == 0 {
        return Ok(total);
    }

    let walker = Walker {
        probs: system.probs(),
        depth,
        step: &step,
        visit: &visit,
    };
    let subtrees: Vec<Vec<f64>> = (0..system.len())
        .into_par_iter()
        .map(|symbol| {
            let mut acc = vec![0.0; acc_len];
            let p = walker.probs[symbol];
            if p > 0.0 {
                walker.descend(1, step(&root, symbol), p, &mut acc);
            }
            acc
        })
        .collect();

    for acc in subtrees {
        for (t, a) in total.iter_mut().zip(acc) {
            *t += a;
        }
    }
    Ok(total)
}

struct Walker<'a, S, V> {
    probs: &'a [f64],
    depth: usize,
    step: &'a S,
    visit: &'a V,
}

impl<S, V> Walker<'_, S, V> {
    fn descend<T>(&self, d: usize, state: T, weight: f64, acc: &mut [f64])
    where
        S: Fn(&T, usize) -> T,
        V: Fn(usize, &T, f64, &mut [f64]) -> bool,
    {
        if !(self.visit)(d, &state, weight, acc) || d == self.depth {
            return;
        }
        for (symbol, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                self.descend(d + 1, (self.step)(&state, symbol), weight * p, acc);
            }
        }
    }
}

/// `U^n φ(x)`: the probability-weighted mean of `φ` over all images of `x`
/// under words of length `n`.
///
/// Evaluated as `Σ_i p_i U^(n-1) φ(f_i(x))` from the leaves up, so constants
/// are reproduced exactly whenever the `p_i` are powers of two.
pub fn dual_apply_exact<F>(
    system: &IfsSystem,
    phi: F,
    n: usize,
    x: f64,
    budget: Budget,
) -> Result<f64>
where
    F: Fn(f64) -> f64 + Sync,
{
    crate::error::check_unit("x", x)?;
    budget.check(system.len(), n)?;
    if n == 0 {
        return Ok(phi(x));
    }
    let parts: Vec<f64> = (0..system.len())
        .into_par_iter()
        .map(|s| {
            let p = system.probs()[s];
            if p > 0.0 {
                p * dual_rec(system, &phi, n - 1, system.step(s, x))
            } else {
                0.0
            }
        })
        .collect();
    Ok(parts.into_iter().sum())
}

fn dual_rec<F: Fn(f64) -> f64>(system: &IfsSystem, phi: &F, n: usize, x: f64) -> f64 {
    if n == 0 {
        return phi(x);
    }
    let mut value = 0.0;
    for (s, &p) in system.probs().iter().enumerate() {
        if p > 0.0 {
            value += p * dual_rec(system, phi, n - 1, system.step(s, x));
        }
    }
    value
}

/// `U^k φ(x)` for every `k = 1..=n` in a single walk; entry `k - 1` holds `U^k φ(x)`.
pub fn dual_ladder_exact<F>(
    system: &IfsSystem,
    phi: F,
    n: usize,
    x: f64,
    budget: Budget,
) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64 + Sync,
{
    crate::error::check_unit("x", x)?;
    budget.check(system.len(), n)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    let parts: Vec<Vec<f64>> = (0..system.len())
        .into_par_iter()
        .map(|s| {
            let p = system.probs()[s];
            if p > 0.0 {
                ladder_rec(system, &phi, n - 1, system.step(s, x))
                    .into_iter()
                    .map(|v| p * v)
                    .collect()
            } else {
                vec![0.0; n]
            }
        })
        .collect();
    let mut out = vec![0.0; n];
    for part in parts {
        for (o, v) in out.iter_mut().zip(part) {
            *o += v;
        }
    }
    Ok(out)
}

/// `[U^0 φ(x), ..., U^m φ(x)]`.
fn ladder_rec<F: Fn(f64) -> f64>(system: &IfsSystem, phi: &F, m: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; m + 1];
    out[0] = phi(x);
    if m == 0 {
        return out;
    }
    for (s, &p) in system.probs().iter().enumerate() {
        if p > 0.0 {
            let child = ladder_rec(system, phi, m - 1, system.step(s, x));
            for (o, c) in out[1..].iter_mut().zip(child) {
                *o += p * c;
            }
        }
    }
    out
}
