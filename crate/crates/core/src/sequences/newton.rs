use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{collect_levels, CostModel, LevelSequenceModel, LevelWalker};
use crate::stream::Stream;

pub type ScalarFn = fn(f64) -> f64;

/// Newton iteration for `h(x) = target` with every step clamped to `[-1, 1]`,
/// started from a uniform draw on `[lo, hi]`.
#[derive(Debug, Clone, Copy)]
pub struct NewtonModel {
    h: ScalarFn,
    dh: ScalarFn,
    target: f64,
    lo: f64,
    hi: f64,
}

impl NewtonModel {
    pub fn new(h: ScalarFn, dh: ScalarFn, target: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(
                "lo",
                format!("start interval [{lo}, {hi}] is not a finite interval"),
            ));
        }
        if !target.is_finite() {
            return Err(Error::invalid("target", "target value must be finite"));
        }
        Ok(Self {
            h,
            dh,
            target,
            lo,
            hi,
        })
    }

    /// `X_{n+1}` from `X_n`; `level` is `n`, used for error reporting.
    pub fn step(&self, x: f64, level: usize) -> Result<f64> {
        let slope = (self.dh)(x);
        if slope == 0.0 {
            return Err(Error::level(
                level,
                format!("derivative vanishes at x = {x}"),
            ));
        }
        let raw = ((self.h)(x) - self.target) / slope;
        if !raw.is_finite() {
            return Err(Error::level(
                level,
                format!("non-finite Newton step at x = {x}"),
            ));
        }
        Ok(x - raw.clamp(-1.0, 1.0))
    }

    /// `X_0, ..., X_n` started from a given `X_0`.
    pub fn trajectory(&self, x0: f64, n: usize) -> Result<Vec<f64>> {
        let mut values = Vec::with_capacity(n + 1);
        values.push(x0);
        for k in 0..n {
            values.push(self.step(values[k], k)?);
        }
        Ok(values)
    }

    fn draw_start(&self, stream: &mut Stream) -> f64 {
        self.lo + (self.hi - self.lo) * stream.random::<f64>()
    }
}

/// Draws `X_0` and iterates up to level `n_max`.
pub fn newton_levels(m: &NewtonModel, n_max: usize, stream: &mut Stream) -> Result<Vec<f64>> {
    let x0 = m.draw_start(stream);
    m.trajectory(x0, n_max)
}

pub struct NewtonWalker<'a> {
    model: &'a NewtonModel,
    level: usize,
    x: f64,
}

impl LevelWalker for NewtonWalker<'_> {
    fn level(&self) -> usize {
        self.level
    }

    fn value(&self) -> f64 {
        self.x
    }

    fn advance(&mut self, _stream: &mut Stream) -> Result<f64> {
        self.x = self.model.step(self.x, self.level)?;
        self.level += 1;
        Ok(self.x)
    }
}

impl LevelSequenceModel for NewtonModel {
    fn cost_model(&self) -> CostModel {
        CostModel::Linear
    }

    fn levels(&self, stream: &mut Stream, from: usize, to: usize) -> Result<Vec<f64>> {
        collect_levels(self.walker(stream, from)?, stream, to)
    }

    fn walker<'a>(&'a self, stream: &mut Stream, from: usize) -> Result<Box<dyn LevelWalker + 'a>> {
        let mut walker = NewtonWalker {
            model: self,
            level: 0,
            x: self.draw_start(stream),
        };
        while walker.level < from {
            walker.advance(stream)?;
        }
        Ok(Box::new(walker))
    }
}
