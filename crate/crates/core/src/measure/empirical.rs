use serde::{Deserialize, Serialize};

use crate::error::{check_unit, Error, Result};
use crate::stats::least_squares;

/// Tolerance on total mass.
pub const MASS_TOL: f64 = 1e-12;

/// A finitely supported probability measure on `[0, 1]`, atoms sorted by location.
///
/// Coincident atoms are kept separate. The empty measure (mass 0) is allowed
/// so that pushforwards of nothing stay representable.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EmpiricalMeasure {
    points: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl EmpiricalMeasure {
    /// Builds a measure from `(point, weight)` atoms in any order.
    pub fn new(atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(x, w) in &atoms {
            check_unit("atom", x)?;
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Precondition(format!(
                    "atom weight {w} must be positive"
                )));
            }
        }
        let measure = Self::from_atoms_unchecked(atoms);
        if !measure.is_empty() && (measure.mass() - 1.0).abs() > MASS_TOL {
            return Err(Error::Precondition(format!(
                "weights sum to {}, expected 1",
                measure.mass()
            )));
        }
        Ok(measure)
    }

    /// Equal-weight measure on a sample.
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let w = 1.0 / samples.len() as f64;
        for &x in samples {
            check_unit("sample", x)?;
        }
        Ok(Self::from_atoms_unchecked(
            samples.iter().map(|&x| (x, w)).collect(),
        ))
    }

    pub fn dirac(x: f64) -> Result<Self> {
        Self::new(vec![(x, 1.0)])
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub(crate) fn from_atoms_unchecked(mut atoms: Vec<(f64, f64)>) -> Self {
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (points, weights): (Vec<f64>, Vec<f64>) = atoms.into_iter().unzip();
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Self {
            points,
            weights,
            cumulative,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn atoms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.points
            .iter()
            .copied()
            .zip(self.weights.iter().copied())
    }

    pub fn mass(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// `∫ φ dμ`, summed in atom order.
    pub fn integrate(&self, phi: impl Fn(f64) -> f64) -> f64 {
        self.atoms().map(|(x, w)| w * phi(x)).sum()
    }

    /// `μ([0, x])`, right-continuous.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_unit("x", x)?;
        Ok(self.cdf_unchecked(x))
    }

    fn cdf_unchecked(&self, x: f64) -> f64 {
        match self.points.last() {
            None => 0.0,
            Some(&last) if x >= last => 1.0,
            _ => {
                let k = self.points.partition_point(|&p| p <= x);
                if k == 0 {
                    0.0
                } else {
                    self.cumulative[k - 1]
                }
            }
        }
    }

    /// `μ([x, 1])`.
    pub fn upper_tail(&self, x: f64) -> f64 {
        let k = self.points.partition_point(|&p| p < x);
        if k == 0 {
            self.mass()
        } else {
            self.mass() - self.cumulative[k - 1]
        }
    }
}

/// `W₁(μ, ν) = ∫₀¹ |F_μ − F_ν| dx`, integrated exactly over the merged
/// breakpoints of the two step CDFs.
pub fn wasserstein1(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    if (mu.mass() - nu.mass()).abs() > 1e-9 {
        return Err(Error::Precondition(format!(
            "measures have different mass ({} vs {})",
            mu.mass(),
            nu.mass()
        )));
    }
    let (a, b) = (mu.points(), nu.points());
    let (wa, wb) = (mu.weights(), nu.weights());
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut prev: Option<f64> = None;
    let mut total = 0.0;
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        if let Some(p) = prev {
            total += (fa - fb).abs() * (next - p);
        }
        while i < a.len() && a[i] == next {
            fa += wa[i];
            i += 1;
        }
        while j < b.len() && b[j] == next {
            fb += wb[j];
            j += 1;
        }
        prev = Some(next);
    }
    Ok(total)
}

/// Membership of a measure in the tail classes `P⁻_{M,α}` (mass near 0) and
/// `P⁺_{M,α}` (mass near 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMembership {
    pub member_minus: bool,
    pub member_plus: bool,
    /// Atom maximizing `μ([0, x]) − M x^α`, with that excess.
    pub worst_minus: Option<(f64, f64)>,
    /// Atom `a` maximizing `μ([a, 1]) − M (1 − a)^α`, with that excess.
    pub worst_plus: Option<(f64, f64)>,
}

impl ClassMembership {
    pub fn member(&self) -> bool {
        self.member_minus && self.member_plus
    }
}

/// Checks `μ([0, x]) ≤ M x^α` and `μ([1 − x, 1]) ≤ M x^α` for all `x`.
///
/// For an atomic measure the left side only jumps at atoms while the right
/// side is increasing, so checking at the atoms is exact.
pub fn class_membership(mu: &EmpiricalMeasure, m: f64, alpha: f64) -> ClassMembership {
    let worst = |excesses: &mut dyn Iterator<Item = (f64, f64)>| {
        excesses.fold(None, |best: Option<(f64, f64)>, (x, e)| match best {
            Some((_, b)) if b >= e => best,
            _ => Some((x, e)),
        })
    };
    let worst_minus = worst(
        &mut mu
            .points()
            .iter()
            .map(|&x| (x, mu.cdf_unchecked(x) - m * x.powf(alpha))),
    );
    let worst_plus = worst(
        &mut mu
            .points()
            .iter()
            .map(|&a| (a, mu.upper_tail(a) - m * (1.0 - a).powf(alpha))),
    );
    ClassMembership {
        member_minus: worst_minus.is_none_or(|(_, e)| e <= 0.0),
        member_plus: worst_plus.is_none_or(|(_, e)| e <= 0.0),
        worst_minus,
        worst_plus,
    }
}

/// Fitted tail exponents near 0 and near 1.
///
/// Regresses `ln μ([0, x])` on `ln x` over the atoms in the lowest decile of
/// mass, and `ln μ([x, 1])` on `ln(1 − x)` over the highest decile.
pub fn tail_exponent_fit(mu: &EmpiricalMeasure) -> Result<(f64, f64)> {
    if mu.len() < 100 {
        return Err(Error::Precondition(format!(
            "tail fit needs at least 100 atoms, got {}",
            mu.len()
        )));
    }
    let pts = mu.points();

    let mut lo = (Vec::new(), Vec::new());
    for (k, &x) in pts.iter().enumerate() {
        let mass = mu.cumulative[k];
        if mass > 0.1 {
            break;
        }
        let last_of_run = pts.get(k + 1).is_none_or(|&next| next > x);
        if x > 0.0 && last_of_run {
            lo.0.push(x.ln());
            lo.1.push(mass.ln());
        }
    }

    let mut hi = (Vec::new(), Vec::new());
    for k in (0..pts.len()).rev() {
        let x = pts[k];
        let mass = mu.upper_tail(x);
        if mass > 0.1 {
            break;
        }
        let first_of_run = k == 0 || pts[k - 1] < x;
        if x < 1.0 && first_of_run {
            hi.0.push((1.0 - x).ln());
            hi.1.push(mass.ln());
        }
    }

    let fit = |(xs, ys): (Vec<f64>, Vec<f64>), side: &str| {
        least_squares(&xs, &ys).map(|f| f.slope).ok_or_else(|| {
            Error::Degenerate(format!("no spread of atoms in the {side} tail to fit"))
        })
    };
    Ok((fit(lo, "lower")?, fit(hi, "upper")?))
}
