//! The level sequence abstraction consumed by the estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::Stream;

/// How the work needed to reach a level grows with the level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostModel {
    /// Each level costs one unit (an iteration step).
    Linear,
    /// Level `n` lives on a grid of `2^n + 1` points and coarser grids are
    /// nested inside finer ones.
    Exponential,
}

impl CostModel {
    /// Cost `c(n)` of the level-`n` approximation on its own.
    pub fn level_cost(self, n: usize) -> f64 {
        match self {
            CostModel::Linear => 1.0,
            CostModel::Exponential => pow2(n) + 1.0,
        }
    }

    /// Total cost of producing levels `0..=n` from one realization.
    pub fn cumulative_cost(self, n: usize) -> f64 {
        match self {
            CostModel::Linear => n as f64 + 1.0,
            // Nested grids: the finest grid contains every coarser one.
            CostModel::Exponential => pow2(n) + 1.0,
        }
    }
}

fn pow2(n: usize) -> f64 {
    2f64.powi(i32::try_from(n).unwrap_or(i32::MAX))
}

/// A family of coupled approximations `X_0, X_1, ...` converging in mean to
/// an unknown limit.
///
/// Implementations must be reproducible: for a fixed stream state, asking for
/// the same range of levels twice returns identical values, and the marginal
/// law of `X_n` must not depend on the highest level requested.
pub trait LevelSequenceModel: Send + Sync {
    /// Lowest level the model can produce.
    fn min_level(&self) -> usize {
        0
    }

    fn cost_model(&self) -> CostModel;

    /// Values `X_from, ..., X_to` of a single coupled realization.
    fn levels(&self, stream: &mut Stream, from: usize, to: usize) -> Result<Vec<f64>>;

    /// Sequential access for stopping-time laws, positioned at level `from`.
    /// Models whose coupling requires knowing the top level in advance keep
    /// the default.
    fn walker<'a>(
        &'a self,
        _stream: &mut Stream,
        _from: usize,
    ) -> Result<Box<dyn LevelWalker + 'a>> {
        Err(Error::Unsupported(
            "this model cannot generate levels sequentially",
        ))
    }
}

/// Cursor over the levels of one realization.
pub trait LevelWalker {
    fn level(&self) -> usize;

    fn value(&self) -> f64;

    /// Moves to the next level and returns its value.
    fn advance(&mut self, stream: &mut Stream) -> Result<f64>;
}

/// Collects `X_from..=X_to` from a walker; the usual `levels` implementation
/// for models that are naturally sequential.
pub fn collect_levels(
    mut walker: Box<dyn LevelWalker + '_>,
    stream: &mut Stream,
    to: usize,
) -> Result<Vec<f64>> {
    let from = walker.level();
    if to < from {
        return Err(Error::invalid(
            "to",
            format!("top level {to} below starting level {from}"),
        ));
    }
    let mut values = Vec::with_capacity(to - from + 1);
    values.push(walker.value());
    while walker.level() < to {
        values.push(walker.advance(stream)?);
    }
    Ok(values)
}

impl<M: LevelSequenceModel + ?Sized> LevelSequenceModel for &M {
    fn min_level(&self) -> usize {
        (**self).min_level()
    }

    fn cost_model(&self) -> CostModel {
        (**self).cost_model()
    }

    fn levels(&self, stream: &mut Stream, from: usize, to: usize) -> Result<Vec<f64>> {
        (**self).levels(stream, from, to)
    }

    fn walker<'a>(&'a self, stream: &mut Stream, from: usize) -> Result<Box<dyn LevelWalker + 'a>> {
        (**self).walker(stream, from)
    }
}

impl<M: LevelSequenceModel + ?Sized> LevelSequenceModel for Box<M> {
    fn min_level(&self) -> usize {
        (**self).min_level()
    }

    fn cost_model(&self) -> CostModel {
        (**self).cost_model()
    }

    fn levels(&self, stream: &mut Stream, from: usize, to: usize) -> Result<Vec<f64>> {
        (**self).levels(stream, from, to)
    }

    fn walker<'a>(&'a self, stream: &mut Stream, from: usize) -> Result<Box<dyn LevelWalker + 'a>> {
        (**self).walker(stream, from)
    }
}
