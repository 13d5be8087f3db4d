//! Increasing piecewise-linear homeomorphisms of the unit interval.

use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};

/// An increasing homeomorphism of `[0, 1]` fixing both endpoints.
///
/// Only piecewise-linear maps exist today; anything implementing this trait
/// must be strictly increasing with `eval(0) = 0` and `eval(1) = 1`.
pub trait IntervalMap {
    /// Evaluates the map. `x` must already lie in `[0, 1]`.
    fn apply(&self, x: f64) -> f64;

    /// Evaluates the inverse. `y` must already lie in `[0, 1]`.
    fn apply_inverse(&self, y: f64) -> f64;

    /// One-sided derivatives at 0 and at 1.
    fn endpoint_slopes(&self) -> (f64, f64);
}

/// A strictly increasing piecewise-linear map through `(0, 0)` and `(1, 1)`.
///
/// Because the map is affine on its first and last segments it is exactly
/// linear in a neighbourhood of each endpoint, so its endpoint derivatives are
/// the first and last segment slopes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapNodes", into = "MapNodes")]
pub struct PiecewiseLinearMap {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct MapNodes {
    nodes: Vec<[f64; 2]>,
}

impl TryFrom<MapNodes> for PiecewiseLinearMap {
    type Error = Error;

    fn try_from(raw: MapNodes) -> Result<Self> {
        Self::new(raw.nodes.iter().map(|&[x, y]| (x, y)).collect())
    }
}

impl From<PiecewiseLinearMap> for MapNodes {
    fn from(map: PiecewiseLinearMap) -> Self {
        MapNodes {
            nodes: map.nodes().map(|(x, y)| [x, y]).collect(),
        }
    }
}

impl PiecewiseLinearMap {
    /// Builds a map from its breakpoints, including `(0, 0)` and `(1, 1)`.
    pub fn new(nodes: Vec<(f64, f64)>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidMap(format!(
                "need at least the two endpoint nodes, got {}",
                nodes.len()
            )));
        }
        if nodes.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::InvalidMap("node coordinates must be finite".into()));
        }
        if nodes[0] != (0.0, 0.0) {
            return Err(Error::InvalidMap(format!(
                "first node must be (0, 0), got {:?}",
                nodes[0]
            )));
        }
        let last = nodes[nodes.len() - 1];
        if last != (1.0, 1.0) {
            return Err(Error::InvalidMap(format!(
                "last node must be (1, 1), got {last:?}"
            )));
        }

        let mut slopes = Vec::with_capacity(nodes.len() - 1);
        for (k, pair) in nodes.windows(2).enumerate() {
            let ((x0, y0), (x1, y1)) = (pair[0], pair[1]);
            if x1 <= x0 {
                return Err(Error::InvalidMap(format!(
                    "x-coordinates must increase strictly (node {} -> {})",
                    k,
                    k + 1
                )));
            }
            if y1 <= y0 {
                return Err(Error::InvalidMap(format!(
                    "y-coordinates must increase strictly (node {} -> {})",
                    k,
                    k + 1
                )));
            }
            let slope = (y1 - y0) / (x1 - x0);
            if !(slope.is_finite() && slope > 0.0) {
                return Err(Error::InvalidMap(format!(
                    "segment {k} has slope {slope}, expected positive and finite"
                )));
            }
            slopes.push(slope);
        }

        let (xs, ys) = nodes.into_iter().unzip();
        Ok(Self { xs, ys, slopes })
    }

    /// The identity map, a single segment of slope 1.
    pub fn identity() -> Self {
        Self {
            xs: vec![0.0, 1.0],
            ys: vec![0.0, 1.0],
            slopes: vec![1.0],
        }
    }

    pub fn nodes(&self) -> impl DoubleEndedIterator<Item = (f64, f64)> + ExactSizeIterator + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    /// Breakpoint abscissae strictly inside `(0, 1)`.
    pub fn interior_breakpoints(&self) -> &[f64] {
        &self.xs[1..self.xs.len() - 1]
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// Evaluates the map, rejecting points outside `[0, 1]`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        Ok(self.apply(x))
    }

    /// Evaluates the inverse map, rejecting points outside `[0, 1]`.
    pub fn eval_inverse(&self, y: f64) -> Result<f64> {
        check_unit("y", y)?;
        Ok(self.apply_inverse(y))
    }

    /// The map `x -> 1 - f(1 - x)`, which swaps the roles of the endpoints.
    pub fn reflected(&self) -> Self {
        let nodes = self
            .nodes()
            .rev()
            .map(|(x, y)| (1.0 - x, 1.0 - y))
            .collect::<Vec<_>>();
        let mut map = Self::new_unchecked(nodes);
        // 1 - (1 - x) can drift by an ulp; pin the endpoints.
        *map.xs.first_mut().unwrap() = 0.0;
        *map.ys.first_mut().unwrap() = 0.0;
        *map.xs.last_mut().unwrap() = 1.0;
        *map.ys.last_mut().unwrap() = 1.0;
        map
    }

    /// The inverse homeomorphism as a map in its own right.
    pub fn inverted(&self) -> Self {
        Self::new_unchecked(self.nodes().map(|(x, y)| (y, x)).collect())
    }

    fn new_unchecked(nodes: Vec<(f64, f64)>) -> Self {
        let slopes = nodes
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        let (xs, ys) = nodes.into_iter().unzip();
        Self { xs, ys, slopes }
    }
}

/// Interpolates on the segment containing `t`, anchoring at the closer end so
/// that segment endpoints map exactly onto their node values.
#[inline]
fn interpolate(knots: &[f64], values: &[f64], slopes: &[f64], t: f64, forward: bool) -> f64 {
    let last = knots.len() - 2;
    let seg = knots
        .partition_point(|&b| b <= t)
        .saturating_sub(1)
        .min(last);
    let (k0, k1) = (knots[seg], knots[seg + 1]);
    let (v0, v1) = (values[seg], values[seg + 1]);
    let slope = slopes[seg];
    if t - k0 <= k1 - t {
        if forward {
            v0 + slope * (t - k0)
        } else {
            v0 + (t - k0) / slope
        }
    } else if forward {
        v1 - slope * (k1 - t)
    } else {
        v1 - (k1 - t) / slope
    }
}

impl IntervalMap for PiecewiseLinearMap {
    #[inline]
    fn apply(&self, x: f64) -> f64 {
        interpolate(&self.xs, &self.ys, &self.slopes, x, true)
    }

    #[inline]
    fn apply_inverse(&self, y: f64) -> f64 {
        interpolate(&self.ys, &self.xs, &self.slopes, y, false)
    }

    fn endpoint_slopes(&self) -> (f64, f64) {
        (self.slopes[0], self.slopes[self.slopes.len() - 1])
    }
}
