//! Truncation laws: distributions of the random top level `N`.
//!
//! A law is described by its survival function `Q(n) = P(N >= n)`. Every law
//! carries a guaranteed minimum level (the shift `s`) with `Q(n) = 1` for
//! `n <= s`, and `Q(n) > 0` for every finite `n` so that each increment of the
//! level sequence has a chance of being included.

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::Stream;

/// `N = s + K` with `K` geometric on `{0, 1, ...}`: `P(N = n) = p (1 - p)^(n - s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShiftedGeometric {
    p: f64,
    shift: usize,
}

impl ShiftedGeometric {
    /// `p` is the per-level stopping probability and must lie in `(0, 1)`.
    pub fn new(p: f64, shift: usize) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(
                "p",
                format!("stopping probability {p} not in (0, 1)"),
            ));
        }
        Ok(Self { p, shift })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    /// Ratio `Q(n + 1) / Q(n)` beyond the shift.
    pub fn tail_ratio(&self) -> f64 {
        1.0 - self.p
    }

    pub fn survival(&self, n: usize) -> f64 {
        if n <= self.shift {
            1.0
        } else {
            self.tail_ratio().powi(exponent(n - self.shift))
        }
    }

    pub fn pmf(&self, n: usize) -> f64 {
        if n < self.shift {
            0.0
        } else {
            self.p * self.tail_ratio().powi(exponent(n - self.shift))
        }
    }

    pub fn mean(&self) -> f64 {
        self.shift as f64 + self.tail_ratio() / self.p
    }

    pub fn sample(&self, stream: &mut Stream) -> usize {
        // P(floor(ln U / ln q) >= k) = P(U <= q^k) = q^k for U uniform on (0, 1).
        let u: f64 = stream.sample(Open01);
        let k = (u.ln() / self.tail_ratio().ln()).floor();
        self.shift.saturating_add(k as usize)
    }
}

/// Survival probabilities given explicitly for the levels just above the
/// shift, continued by a geometric tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableLaw {
    shift: usize,
    /// `table[k] = Q(shift + 1 + k)`.
    table: Vec<f64>,
    tail_ratio: f64,
}

impl TableLaw {
    pub fn new(shift: usize, table: Vec<f64>, tail_ratio: f64) -> Result<Self> {
        if !(tail_ratio > 0.0 && tail_ratio < 1.0) {
            return Err(Error::invalid(
                "tail_ratio",
                format!("{tail_ratio} not in (0, 1)"),
            ));
        }
        let mut previous = 1.0;
        for (k, &q) in table.iter().enumerate() {
            if !(q > 0.0 && q <= previous) {
                return Err(Error::invalid(
                    "table",
                    format!(
                        "entry {k} = {q} must lie in (0, {previous}] (positive, non-increasing)"
                    ),
                ));
            }
            previous = q;
        }
        Ok(Self {
            shift,
            table,
            tail_ratio,
        })
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    pub fn tail_ratio(&self) -> f64 {
        self.tail_ratio
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    fn last_tabulated(&self) -> (usize, f64) {
        (
            self.shift + self.table.len(),
            self.table.last().copied().unwrap_or(1.0),
        )
    }

    pub fn survival(&self, n: usize) -> f64 {
        if n <= self.shift {
            return 1.0;
        }
        let k = n - self.shift - 1;
        if let Some(&q) = self.table.get(k) {
            return q;
        }
        let (last, q_last) = self.last_tabulated();
        q_last * self.tail_ratio.powi(exponent(n - last))
    }

    pub fn sample(&self, stream: &mut Stream) -> usize {
        // N = max{n : U < Q(n)}, so P(N >= n) = P(U < Q(n)) = Q(n).
        let u: f64 = stream.sample(Open01);
        for (k, &q) in self.table.iter().enumerate() {
            if u >= q {
                return self.shift + k;
            }
        }
        let (last, q_last) = self.last_tabulated();
        // Largest k >= 0 with u < q_last * ratio^k.
        let k = ((u / q_last).ln() / self.tail_ratio.ln()).ceil() - 1.0;
        last.saturating_add(k.max(0.0) as usize)
    }
}

/// Survival realized along the observed sequence: the survival weight decays
/// by `decay` only at levels whose increment is at most `epsilon` in
/// magnitude, and is carried over unchanged otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveLaw {
    decay: f64,
    epsilon: f64,
    n_max: usize,
    shift: usize,
}

impl AdaptiveLaw {
    pub const DEFAULT_N_MAX: usize = 1_000_000;

    /// `epsilon` may be `+inf`, in which case every level decays.
    pub fn new(decay: f64, epsilon: f64, n_max: usize, shift: usize) -> Result<Self> {
        if !(decay > 0.0 && decay < 1.0) {
            return Err(Error::invalid("decay", format!("{decay} not in (0, 1)")));
        }
        if !(epsilon > 0.0) {
            return Err(Error::invalid(
                "epsilon",
                format!("threshold {epsilon} must be positive"),
            ));
        }
        if n_max == 0 || n_max <= shift {
            return Err(Error::invalid(
                "n_max",
                format!("guard {n_max} must exceed the shift {shift}"),
            ));
        }
        Ok(Self {
            decay,
            epsilon,
            n_max,
            shift,
        })
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn shift(&self) -> usize {
        self.shift
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TruncationLaw {
    ShiftedGeometric(ShiftedGeometric),
    Table(TableLaw),
    Adaptive(AdaptiveLaw),
}

impl TruncationLaw {
    pub fn geometric(p: f64, shift: usize) -> Result<Self> {
        ShiftedGeometric::new(p, shift).map(Self::ShiftedGeometric)
    }

    pub fn shift(&self) -> usize {
        match self {
            Self::ShiftedGeometric(law) => law.shift(),
            Self::Table(law) => law.shift(),
            Self::Adaptive(law) => law.shift(),
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, Self::Adaptive(_))
    }

    /// Asymptotic ratio `Q(n + 1) / Q(n)`. For the adaptive law this is the
    /// smallest possible ratio, reached once increments fall below the threshold.
    pub fn tail_ratio(&self) -> f64 {
        match self {
            Self::ShiftedGeometric(law) => law.tail_ratio(),
            Self::Table(law) => law.tail_ratio(),
            Self::Adaptive(law) => law.decay(),
        }
    }

    /// `Q(n) = P(N >= n)`.
    pub fn survival(&self, n: usize) -> Result<f64> {
        match self {
            Self::ShiftedGeometric(law) => Ok(law.survival(n)),
            Self::Table(law) => Ok(law.survival(n)),
            Self::Adaptive(_) => Err(Error::Unsupported(
                "adaptive survival is realized per replicate, not a fixed function of the level",
            )),
        }
    }

    /// Draws `N` independently of any sequence randomness.
    pub fn sample(&self, stream: &mut Stream) -> Result<usize> {
        match self {
            Self::ShiftedGeometric(law) => Ok(law.sample(stream)),
            Self::Table(law) => Ok(law.sample(stream)),
            Self::Adaptive(_) => Err(Error::Unsupported(
                "adaptive truncation levels are stopping times and cannot be drawn ahead of the sequence",
            )),
        }
    }
}

impl From<ShiftedGeometric> for TruncationLaw {
    fn from(law: ShiftedGeometric) -> Self {
        Self::ShiftedGeometric(law)
    }
}

impl From<TableLaw> for TruncationLaw {
    fn from(law: TableLaw) -> Self {
        Self::Table(law)
    }
}

impl From<AdaptiveLaw> for TruncationLaw {
    fn from(law: AdaptiveLaw) -> Self {
        Self::Adaptive(law)
    }
}

fn exponent(k: usize) -> i32 {
    i32::try_from(k).unwrap_or(i32::MAX)
}
