use std::path::Path;

use serde::{Deserialize, Serialize};

use super::map::{IntervalMap, PiecewiseLinearMap};
use crate::error::{check_unit, Error, Result};

/// Tolerance on `Σ p_i = 1`.
pub const PROB_SUM_TOL: f64 = 1e-12;

/// A finite family of maps together with the probabilities of choosing each.
///
/// Symbols index `maps` from zero. A word `[i1, i2, ..., in]` is applied left
/// to right: `i1` acts first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IfsSystem {
    maps: Vec<PiecewiseLinearMap>,
    probs: Vec<f64>,
    #[serde(skip)]
    cumulative: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    maps: Vec<RawMap>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMap {
    nodes: Vec<[f64; 2]>,
}

impl IfsSystem {
    pub fn new(maps: Vec<PiecewiseLinearMap>, probs: Vec<f64>) -> Result<Self> {
        if maps.len() < 2 {
            return Err(Error::InvalidSystem(format!(
                "need at least 2 maps, got {}",
                maps.len()
            )));
        }
        if maps.len() != probs.len() {
            return Err(Error::InvalidSystem(format!(
                "{} maps but {} probabilities",
                maps.len(),
                probs.len()
            )));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p >= 0.0))
        {
            return Err(Error::InvalidSystem(format!(
                "probability {} is {p}, must be nonnegative",
                i + 1
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidSystem(format!(
                "probabilities sum to {total}, must sum to 1 within {PROB_SUM_TOL:e}"
            )));
        }

        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // The last positive-probability symbol must catch every u in [0, 1).
        let last_positive = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        for c in &mut cumulative[last_positive..] {
            *c = 1.0;
        }

        Ok(Self {
            maps,
            probs,
            cumulative,
        })
    }

    /// The two-map reference system used throughout the docs and tests.
    ///
    /// `f1` has slope 1/2 up to `(4/5, 2/5)` and slope 3 after; `f2` has
    /// slope 3 up to `(1/5, 3/5)` and slope 1/2 after; `p = (1/2, 1/2)`.
    /// The pair is conjugate under `x -> 1 - x`, so the invariant measure on
    /// `(0, 1)` is symmetric about 1/2.
    pub fn am2() -> Self {
        Self::am2_with_probs(0.5, 0.5).expect("fixture is valid")
    }

    pub fn am2_with_probs(p1: f64, p2: f64) -> Result<Self> {
        let f1 = PiecewiseLinearMap::new(vec![(0.0, 0.0), (0.8, 0.4), (1.0, 1.0)])?;
        let f2 = PiecewiseLinearMap::new(vec![(0.0, 0.0), (0.2, 0.6), (1.0, 1.0)])?;
        Self::new(vec![f1, f2], vec![p1, p2])
    }

    pub fn maps(&self) -> &[PiecewiseLinearMap] {
        &self.maps
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Applies a single map without domain checks.
    #[inline]
    pub fn step(&self, symbol: usize, x: f64) -> f64 {
        self.maps[symbol].apply(x)
    }

    /// Smallest symbol whose cumulative probability exceeds `u`.
    #[inline]
    pub fn symbol_for(&self, u: f64) -> usize {
        self.cumulative
            .iter()
            .position(|&c| c > u)
            .unwrap_or(self.cumulative.len() - 1)
    }

    /// Applies `word` to `x`, first symbol first. The empty word is the identity.
    pub fn word_apply(&self, word: &[usize], x: f64) -> Result<f64> {
        check_unit("x", x)?;
        if let Some(&symbol) = word.iter().find(|&&s| s >= self.len()) {
            return Err(Error::SymbolOutOfRange {
                symbol,
                maps: self.len(),
            });
        }
        Ok(word.iter().fold(x, |x, &s| self.step(s, x)))
    }

    /// Parses a system definition:
    /// `{ "maps": [ { "nodes": [[x, y], ...] }, ... ], "probs": [ ... ] }`.
    ///
    /// `origin` names the source in diagnostics.
    pub fn from_json_str(text: &str, origin: &str) -> Result<Self> {
        let raw: RawSystem = serde_json::from_str(text).map_err(|e| Error::Load {
            path: origin.to_string(),
            line: e.line(),
            message: e.to_string(),
        })?;

        let mut maps = Vec::with_capacity(raw.maps.len());
        for (i, m) in raw.maps.into_iter().enumerate() {
            let nodes = m.nodes.iter().map(|&[x, y]| (x, y)).collect();
            let map = PiecewiseLinearMap::new(nodes).map_err(|e| Error::Load {
                path: origin.to_string(),
                line: nth_key_line(text, "nodes", i),
                message: format!("map {}: {e}", i + 1),
            })?;
            maps.push(map);
        }

        Self::new(maps, raw.probs).map_err(|e| Error::Load {
            path: origin.to_string(),
            line: nth_key_line(text, "probs", 0),
            message: e.to_string(),
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Load {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        Self::from_json_str(&text, &path.display().to_string())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serializes")
    }
}

/// 1-based line of the `n`-th occurrence of `"key"` in `text`, or 1.
fn nth_key_line(text: &str, key: &str, n: usize) -> usize {
    let needle = format!("\"{key}\"");
    text.match_indices(&needle)
        .nth(n)
        .map(|(pos, _)| text[..pos].matches('\n').count() + 1)
        .unwrap_or(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn word_apply_examples() {
        let am2 = IfsSystem::am2();
        assert_eq!(am2.word_apply(&[], 0.37).unwrap(), 0.37);
        assert_eq!(am2.word_apply(&[0, 1], 0.5).unwrap(), 0.625);
        assert_eq!(am2.word_apply(&[1, 1], 0.5).unwrap(), 0.875);
        assert!(matches!(
            am2.word_apply(&[0, 2], 0.5),
            Err(Error::SymbolOutOfRange { symbol: 2, maps: 2 })
        ));
    }

    #[test]
    fn am2_is_reflection_symmetric() {
        let am2 = IfsSystem::am2();
        for k in 0..=1000 {
            let x = k as f64 / 1000.0;
            let lhs = am2.step(1, x);
            let rhs = 1.0 - am2.step(0, 1.0 - x);
            assert!((lhs - rhs).abs() < 1e-15, "x = {x}");
        }
    }

    #[test]
    fn symbol_selection_uses_strict_cumulative_comparison() {
        let am2 = IfsSystem::am2();
        assert_eq!(am2.symbol_for(0.0), 0);
        assert_eq!(am2.symbol_for(0.4999), 0);
        // u equal to the boundary is not below C_1, so it goes to the next symbol.
        assert_eq!(am2.symbol_for(0.5), 1);
        assert_eq!(am2.symbol_for(0.999_999), 1);

        let degenerate = IfsSystem::am2_with_probs(1.0, 0.0).unwrap();
        assert_eq!(degenerate.symbol_for(0.999_999_999), 0);
    }

    #[test]
    fn rejects_bad_probabilities() {
        assert!(IfsSystem::am2_with_probs(0.5, 0.4).is_err());
        assert!(IfsSystem::am2_with_probs(1.1, -0.1).is_err());
        let f = PiecewiseLinearMap::identity();
        assert!(IfsSystem::new(vec![f.clone()], vec![1.0]).is_err());
        assert!(IfsSystem::new(vec![f.clone(), f], vec![1.0]).is_err());
    }

    #[test]
    fn loads_json_and_reports_lines() {
        let good = r#"{
  "maps": [
    { "nodes": [[0, 0], [0.8, 0.4], [1, 1]] },
    { "nodes": [[0, 0], [0.2, 0.6], [1, 1]] }
  ],
  "probs": [0.5, 0.5]
}"#;
        let sys = IfsSystem::from_json_str(good, "am2.json").unwrap();
        assert_eq!(sys, IfsSystem::am2());

        let bad_probs = good.replace("[0.5, 0.5]", "[0.5, 0.4]");
        match IfsSystem::from_json_str(&bad_probs, "x.json") {
            Err(Error::Load { line, message, .. }) => {
                assert_eq!(line, 6);
                assert!(message.contains("sum to"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }

        let bad_map = good.replace("[0.2, 0.6]", "[0.2, 1.2]");
        match IfsSystem::from_json_str(&bad_map, "x.json") {
            Err(Error::Load { line, message, .. }) => {
                assert_eq!(line, 4);
                assert!(message.starts_with("map 2"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }

        match IfsSystem::from_json_str("{\n  \"maps\": [,\n}", "x.json") {
            Err(Error::Load { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn json_round_trip() {
        let am2 = IfsSystem::am2();
        let back = IfsSystem::from_json_str(&am2.to_json_pretty(), "rt").unwrap();
        assert_eq!(back, am2);
    }

    proptest! {
        #[test]
        fn word_composition(
            a in prop::collection::vec(0usize..2, 0..20),
            b in prop::collection::vec(0usize..2, 0..20),
            x in 0.0f64..=1.0,
        ) {
            let am2 = IfsSystem::am2();
            let joined: Vec<usize> = a.iter().chain(&b).copied().collect();
            let direct = am2.word_apply(&joined, x).unwrap();
            let staged = am2.word_apply(&b, am2.word_apply(&a, x).unwrap()).unwrap();
            prop_assert_eq!(direct, staged);
        }
    }
}
