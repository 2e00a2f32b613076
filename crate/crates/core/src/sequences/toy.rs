use crate::error::{Error, Result};
use crate::model::{collect_levels, CostModel, LevelSequenceModel, LevelWalker};
use crate::stream::Stream;

/// `X_n = b + a r^n`: deterministic, converging to `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyGeometricModel {
    b: f64,
    a: f64,
    r: f64,
}

impl ToyGeometricModel {
    pub fn new(b: f64, a: f64, r: f64) -> Result<Self> {
        if !(r.abs() < 1.0) {
            return Err(Error::invalid(
                "r",
                format!("ratio {r} must satisfy |r| < 1"),
            ));
        }
        if !b.is_finite() || !a.is_finite() {
            return Err(Error::invalid("a", "amplitude and limit must be finite"));
        }
        Ok(Self { b, a, r })
    }

    pub fn limit(&self) -> f64 {
        self.b
    }

    pub fn amplitude(&self) -> f64 {
        self.a
    }

    pub fn ratio(&self) -> f64 {
        self.r
    }

    pub fn level(&self, n: usize) -> f64 {
        toy_level(self, n)
    }
}

pub fn toy_level(m: &ToyGeometricModel, n: usize) -> f64 {
    m.b + m.a * m.r.powi(i32::try_from(n).unwrap_or(i32::MAX))
}

struct ToyWalker<'a> {
    model: &'a ToyGeometricModel,
    level: usize,
}

impl LevelWalker for ToyWalker<'_> {
    fn level(&self) -> usize {
        self.level
    }

    fn value(&self) -> f64 {
        self.model.level(self.level)
    }

    fn advance(&mut self, _stream: &mut Stream) -> Result<f64> {
        self.level += 1;
        Ok(self.value())
    }
}

impl LevelSequenceModel for ToyGeometricModel {
    fn cost_model(&self) -> CostModel {
        CostModel::Linear
    }

    fn levels(&self, stream: &mut Stream, from: usize, to: usize) -> Result<Vec<f64>> {
        collect_levels(self.walker(stream, from)?, stream, to)
    }

    fn walker<'a>(
        &'a self,
        _stream: &mut Stream,
        from: usize,
    ) -> Result<Box<dyn LevelWalker + 'a>> {
        Ok(Box::new(ToyWalker {
            model: self,
            level: from,
        }))
    }
}
