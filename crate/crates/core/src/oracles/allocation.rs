//! Exhaustive search for the best non-negative mode weights under a power
//! budget, used to confirm or refute the proportional rule.

use crate::error::{Error, Result};

pub const MAX_MODES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// `sum lambda = P0`.
    Sum,
    /// `sum lambda^2 = P0^2`.
    SumOfSquares,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptimum {
    pub constraint: Constraint,
    pub lambda: Vec<f64>,
    /// `sum sigma lambda` at `lambda`.
    pub objective: f64,
    /// Feasible points examined.
    pub evaluated: usize,
}

/// Every composition of `total` into `parts` non-negative integers.
fn compositions(
    parts: usize,
    total: usize,
    prefix: &mut Vec<usize>,
    visit: &mut dyn FnMut(&[usize]),
) {
    if parts == 1 {
        prefix.push(total);
        visit(prefix);
        prefix.pop();
        return;
    }
    for first in 0..=total {
        prefix.push(first);
        compositions(parts - 1, total - first, prefix, visit);
        prefix.pop();
    }
}

/// Best feasible `lambda >= 0` for the linear objective `sum sigma lambda`.
///
/// The simplex `sum lambda = P0` is sampled at `lambda = P0 c / resolution`
/// for integer compositions `c`. The sphere `sum lambda^2 = P0^2` is sampled
/// through the same lattice of directions, each scaled onto the sphere, so
/// adjacent points are at most about `P0 / resolution` apart.
pub fn allocation_grid_oracle(
    sigma: &[f64],
    p0: f64,
    resolution: usize,
    constraint: Constraint,
) -> Result<GridOptimum> {
    if sigma.is_empty() || sigma.len() > MAX_MODES {
        return Err(Error::Unsupported(format!(
            "grid oracle handles 1 to {MAX_MODES} modes, got {}",
            sigma.len()
        )));
    }
    if !(p0 > 0.0 && p0.is_finite()) {
        return Err(Error::Domain(format!(
            "power budget must be positive, got {p0}"
        )));
    }
    if resolution == 0 {
        return Err(Error::Domain("grid resolution must be positive".into()));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut evaluated = 0;
    compositions(sigma.len(), resolution, &mut Vec::new(), &mut |c| {
        let raw: Vec<f64> = c.iter().map(|v| *v as f64).collect();
        let scale = match constraint {
            Constraint::Sum => p0 / resolution as f64,
            Constraint::SumOfSquares => p0 / raw.iter().map(|v| v * v).sum::<f64>().sqrt(),
        };
        let lambda: Vec<f64> = raw.iter().map(|v| v * scale).collect();
        let f: f64 = lambda.iter().zip(sigma).map(|(l, s)| l * s).sum();
        evaluated += 1;
        if best.as_ref().is_none_or(|(bf, _)| f > *bf) {
            best = Some((f, lambda));
        }
    });
    let (objective, lambda) = best.expect("at least one composition");
    Ok(GridOptimum {
        constraint,
        lambda,
        objective,
        evaluated,
    })
}
