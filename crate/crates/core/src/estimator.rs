//! The debiasing estimator.
//!
//! A replicate draws a top level `N` from the truncation law, generates the
//! coupled levels `X_s, ..., X_N` and returns
//!
//! ```text
//! Y = X_s + sum_{n=s+1}^{N} (X_n - X_{n-1}) / Q(n)
//! ```
//!
//! Conditionally on the sequence each increment enters with weight
//! `I(n <= N) / Q(n)`, which has mean one, so `E[Y]` is the limit of `E[X_n]`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::law::{AdaptiveLaw, TruncationLaw};
use crate::model::{CostModel, LevelSequenceModel};
use crate::stream::{replicate_stream, Stream};

/// One realization of the debiased estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replicate {
    /// Realized top level `N`.
    pub level: usize,
    /// First level of the telescoping sum.
    pub shift: usize,
    /// `X_s, ..., X_N`.
    pub levels: Vec<f64>,
    /// Realized survival `Q(n)` for `n = s+1, ..., N`.
    pub survival: Vec<f64>,
    pub y: f64,
    pub cost: f64,
}

impl Replicate {
    /// Increments `X_n - X_{n-1}` for `n = s+1, ..., N`.
    pub fn increments(&self) -> impl DoubleEndedIterator<Item = f64> + ExactSizeIterator + '_ {
        self.levels.windows(2).map(|w| w[1] - w[0])
    }

    /// Realized weights `1 / Q(n)`.
    pub fn weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.survival.iter().map(|q| 1.0 / q)
    }
}

/// Aggregate of many independent replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    /// Accepted replicates `M`.
    pub replicates: usize,
    pub mean: f64,
    /// Sample standard deviation of `y` over `sqrt(M)`.
    pub stderr: f64,
    /// Sample variance of `y`.
    pub var_y: f64,
    /// Mean within-replicate variance estimate; `None` for adaptive laws.
    pub sigma2_hat_mean: Option<f64>,
    pub mean_n: f64,
    pub mean_cost: f64,
    pub seed: u64,
    /// Adaptive replicates rejected for exhausting their level guard.
    pub failures: usize,
}

/// A level sequence model paired with a truncation law.
#[derive(Debug, Clone)]
pub struct Estimator<M> {
    model: M,
    law: TruncationLaw,
    threads: Option<usize>,
}

const CHUNK: usize = 1024;

impl<M: LevelSequenceModel> Estimator<M> {
    /// Rejects pairings whose expected cost is infinite: a nested-grid model
    /// needs `E[2^N] < inf`, i.e. a survival tail ratio below one half.
    pub fn new(model: M, law: TruncationLaw) -> Result<Self> {
        if law.shift() < model.min_level() {
            return Err(Error::invalid(
                "shift",
                format!(
                    "shift {} below the model's minimum level {}",
                    law.shift(),
                    model.min_level()
                ),
            ));
        }
        if model.cost_model() == CostModel::Exponential && law.tail_ratio() >= 0.5 {
            return Err(Error::DivergentCost(format!(
                "survival tail ratio {} >= 1/2 makes E[2^N] infinite for a nested-grid model \
                 (geometric laws need p > 1/2)",
                law.tail_ratio()
            )));
        }
        Ok(Self {
            model,
            law,
            threads: None,
        })
    }

    /// Runs replicates on a dedicated pool of `threads` workers. Output does
    /// not depend on the thread count.
    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads.filter(|&t| t > 0);
        self
    }

    pub fn model(&self) -> &M {
        &self.model
    }

    pub fn law(&self) -> &TruncationLaw {
        &self.law
    }

    /// One replicate: adaptive laws grow the sequence until the stopping
    /// rule fires; other laws draw `N` first and then generate `X_s..X_N`.
    pub fn replicate(&self, stream: &mut Stream) -> Result<Replicate> {
        match &self.law {
            TruncationLaw::Adaptive(law) => self.adaptive_replicate_with(law, stream),
            _ => self.single_replicate(stream),
        }
    }

    pub fn single_replicate(&self, stream: &mut Stream) -> Result<Replicate> {
        let level = self.law.sample(stream)?;
        self.replicate_at(stream, level)
    }

    /// Replicate with the top level fixed to `level`, weights still taken
    /// from the law's survival function.
    pub fn replicate_at(&self, stream: &mut Stream, level: usize) -> Result<Replicate> {
        let shift = self.law.shift();
        if level < shift {
            return Err(Error::invalid(
                "level",
                format!("top level {level} below shift {shift}"),
            ));
        }
        let levels = self.model.levels(stream, shift, level)?;
        if levels.len() != level - shift + 1 {
            return Err(Error::InvalidState(format!(
                "model returned {} values for levels {shift}..={level}",
                levels.len()
            )));
        }
        let survival = ((shift + 1)..=level)
            .map(|n| self.law.survival(n))
            .collect::<Result<Vec<_>>>()?;
        let y = telescope(&levels, &survival);
        Ok(Replicate {
            level,
            shift,
            levels,
            survival,
            y,
            cost: self.model.cost_model().cumulative_cost(level),
        })
    }

    pub fn adaptive_replicate(&self, stream: &mut Stream) -> Result<Replicate> {
        match &self.law {
            TruncationLaw::Adaptive(law) => self.adaptive_replicate_with(law, stream),
            _ => Err(Error::Unsupported(
                "adaptive replicate requested with a non-adaptive law",
            )),
        }
    }

    fn adaptive_replicate_with(&self, law: &AdaptiveLaw, stream: &mut Stream) -> Result<Replicate> {
        let shift = law.shift();
        let mut walker = self.model.walker(stream, shift)?;
        let mut levels = vec![walker.value()];
        let mut survival = Vec::new();
        let mut q_prev = 1.0;
        let mut y = levels[0];
        loop {
            let n = walker.level();
            if n >= law.n_max() {
                return Err(Error::GuardExhausted(n));
            }
            let x = walker.advance(stream)?;
            let dx = x - levels[levels.len() - 1];
            // Survival may only depend on X_1..X_n, so X_n is generated before
            // deciding whether N >= n.
            let (q, continue_prob) = if dx.abs() > law.epsilon() {
                (q_prev, 1.0)
            } else {
                (law.decay() * q_prev, law.decay())
            };
            if continue_prob < 1.0 && stream.random::<f64>() >= continue_prob {
                return Ok(Replicate {
                    level: n,
                    shift,
                    levels,
                    survival,
                    y,
                    cost: self.model.cost_model().cumulative_cost(n + 1),
                });
            }
            y += dx / q;
            levels.push(x);
            survival.push(q);
            q_prev = q;
        }
    }

    /// `m` replicates on streams `(seed, 0), ..., (seed, m - 1)`. Adaptive
    /// replicates that exhaust their guard are dropped.
    pub fn replicates(&self, m: usize, seed: u64) -> Result<Vec<Replicate>> {
        let run = || {
            (0..m)
                .into_par_iter()
                .map(|i| self.replicate(&mut replicate_stream(seed, i as u64)))
                .filter(|r| !matches!(r, Err(Error::GuardExhausted(_))))
                .collect::<Result<Vec<_>>>()
        };
        self.in_pool(run)
    }

    pub fn run(&self, m: usize, seed: u64) -> Result<EstimateReport> {
        if m < 2 {
            return Err(Error::invalid(
                "replicates",
                format!("need at least 2 replicates, got {m}"),
            ));
        }
        let chunks = m.div_ceil(CHUNK);
        let summarize = || {
            (0..chunks)
                .into_par_iter()
                .map(|c| {
                    let mut acc = Accumulator::default();
                    for i in (c * CHUNK)..((c + 1) * CHUNK).min(m) {
                        match self.replicate(&mut replicate_stream(seed, i as u64)) {
                            Ok(rep) => {
                                let sigma2 = match &self.law {
                                    TruncationLaw::Adaptive(_) => None,
                                    law => Some(within_replicate_variance(&rep, law)?),
                                };
                                acc.push(&rep, sigma2);
                            }
                            Err(Error::GuardExhausted(_)) => acc.failures += 1,
                            Err(e) => return Err(e),
                        }
                    }
                    Ok(acc)
                })
                .collect::<Result<Vec<_>>>()
        };
        let total = self
            .in_pool(summarize)?
            .into_iter()
            .fold(Accumulator::default(), Accumulator::merge);
        total.report(seed, !self.law.is_adaptive())
    }

    fn in_pool<T: Send>(&self, job: impl FnOnce() -> T + Send) -> T {
        match self
            .threads
            .and_then(|t| rayon::ThreadPoolBuilder::new().num_threads(t).build().ok())
        {
            Some(pool) => pool.install(job),
            None => job(),
        }
    }
}

/// `X_s + sum (X_n - X_{n-1}) / Q(n)`, accumulated in level order.
fn telescope(levels: &[f64], survival: &[f64]) -> f64 {
    levels
        .windows(2)
        .zip(survival)
        .fold(levels[0], |y, (w, q)| y + (w[1] - w[0]) / q)
}

/// Running moments of one chunk of replicates (Welford), merged across
/// chunks in chunk order.
#[derive(Debug, Default, Clone)]
struct Accumulator {
    count: usize,
    mean: f64,
    m2: f64,
    sigma2_sum: f64,
    n_sum: f64,
    cost_sum: f64,
    failures: usize,
}

impl Accumulator {
    fn push(&mut self, rep: &Replicate, sigma2: Option<f64>) {
        self.count += 1;
        let delta = rep.y - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (rep.y - self.mean);
        self.sigma2_sum += sigma2.unwrap_or(0.0);
        self.n_sum += rep.level as f64;
        self.cost_sum += rep.cost;
    }

    fn merge(self, other: Accumulator) -> Accumulator {
        let count = self.count + other.count;
        if count == 0 {
            return Accumulator {
                failures: self.failures + other.failures,
                ..Default::default()
            };
        }
        let (na, nb) = (self.count as f64, other.count as f64);
        let delta = other.mean - self.mean;
        Accumulator {
            count,
            mean: self.mean + delta * nb / count as f64,
            m2: self.m2 + other.m2 + delta * delta * na * nb / count as f64,
            sigma2_sum: self.sigma2_sum + other.sigma2_sum,
            n_sum: self.n_sum + other.n_sum,
            cost_sum: self.cost_sum + other.cost_sum,
            failures: self.failures + other.failures,
        }
    }

    fn report(self, seed: u64, with_sigma2: bool) -> Result<EstimateReport> {
        if self.count < 2 {
            return Err(Error::InvalidState(format!(
                "only {} replicates accepted ({} guard failures)",
                self.count, self.failures
            )));
        }
        let m = self.count as f64;
        let var_y = self.m2 / (m - 1.0);
        Ok(EstimateReport {
            replicates: self.count,
            mean: self.mean,
            stderr: (var_y / m).sqrt(),
            var_y,
            sigma2_hat_mean: with_sigma2.then(|| self.sigma2_sum / m),
            mean_n: self.n_sum / m,
            mean_cost: self.cost_sum / m,
            seed,
            failures: self.failures,
        })
    }
}

/// Convenience wrapper: validate the pairing and run `m` replicates.
pub fn run_estimate<M: LevelSequenceModel>(
    model: M,
    law: TruncationLaw,
    m: usize,
    seed: u64,
) -> Result<EstimateReport> {
    Estimator::new(model, law)?.run(m, seed)
}

/// Unbiased estimate, from a single replicate, of the variance that the
/// random truncation adds given the sequence:
///
/// ```text
/// sum_{n} dX_n^2 (1 - Q_n) / Q_n^2 + 2 sum_{j < n} dX_n dX_j (1 - Q_j) / (Q_j Q_n)
/// ```
///
/// over `s < j < n <= N`. The cross terms can make individual estimates
/// negative; the value is not clipped since clipping would bias its mean.
pub fn within_replicate_variance(rep: &Replicate, law: &TruncationLaw) -> Result<f64> {
    if law.is_adaptive() {
        return Err(Error::Unsupported(
            "within-replicate variance needs a fixed survival function",
        ));
    }
    let mut diagonal = 0.0;
    let mut cross = 0.0;
    // Suffix sum of dX_n / Q_n over n > j, walking j downwards.
    let mut tail = 0.0;
    for (k, dx) in rep.increments().enumerate().rev() {
        let q = law.survival(rep.shift + 1 + k)?;
        diagonal += dx * dx * (1.0 - q) / (q * q);
        cross += dx * (1.0 - q) / q * tail;
        tail += dx / q;
    }
    Ok(diagonal + 2.0 * cross)
}

/// Frequency-weighted aggregate of many replicates:
///
/// ```text
/// mean(X_s) + sum_n mean{dX_n : N >= n} * freq(N >= n) / Q_n
/// ```
///
/// It coincides with the arithmetic mean of the replicates' `y`.
pub fn pooled_average(replicates: &[Replicate], law: &TruncationLaw) -> Result<f64> {
    if replicates.is_empty() {
        return Err(Error::invalid("replicates", "empty replicate list"));
    }
    let shift = law.shift();
    if let Some(bad) = replicates.iter().find(|r| r.shift != shift) {
        return Err(Error::invalid(
            "replicates",
            format!(
                "replicate shift {} differs from law shift {shift}",
                bad.shift
            ),
        ));
    }
    let m = replicates.len() as f64;
    let top = replicates.iter().map(|r| r.level).max().unwrap_or(shift);
    let mut increment_sums = vec![0.0; top - shift];
    let mut reached = vec![0usize; top - shift];
    for rep in replicates {
        for (k, dx) in rep.increments().enumerate() {
            increment_sums[k] += dx;
            reached[k] += 1;
        }
    }
    let base = replicates.iter().map(|r| r.levels[0]).sum::<f64>() / m;
    increment_sums
        .iter()
        .zip(&reached)
        .enumerate()
        .try_fold(base, |acc, (k, (&sum, &count))| {
            let q = law.survival(shift + 1 + k)?;
            let mean_increment = sum / count as f64;
            Ok(acc + mean_increment * (count as f64 / m) / q)
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequences::ToyGeometricModel;

    fn toy() -> ToyGeometricModel {
        ToyGeometricModel::new(1.0, 1.0, 0.5).unwrap()
    }

    fn toy_estimator(p: f64, shift: usize) -> Estimator<ToyGeometricModel> {
        Estimator::new(toy(), TruncationLaw::geometric(p, shift).unwrap()).unwrap()
    }

    #[test]
    fn hand_telescoped_replicates() {
        let est = toy_estimator(0.5, 0);
        let mut stream = replicate_stream(0, 0);
        let rep = est.replicate_at(&mut stream, 2).unwrap();
        assert_eq!(rep.levels, vec![2.0, 1.5, 1.25]);
        assert_eq!(rep.y, 0.0);
        assert_eq!(rep.weights().collect::<Vec<_>>(), vec![2.0, 4.0]);
        let rep = est.replicate_at(&mut stream, 0).unwrap();
        assert_eq!(rep.y, 2.0);
        assert!(rep.survival.is_empty());
    }

    #[test]
    fn expectation_over_the_law_is_the_limit() {
        // y(N) = 2 - N for this toy, so E[y] = 2 - E[N] = 1.
        let est = toy_estimator(0.5, 0);
        let law = crate::law::ShiftedGeometric::new(0.5, 0).unwrap();
        let mut stream = replicate_stream(0, 0);
        let mut expectation = 0.0;
        for n in 0..50 {
            let y = est.replicate_at(&mut stream, n).unwrap().y;
            assert!((y - (2.0 - n as f64)).abs() < 1e-9);
            expectation += law.pmf(n) * y;
        }
        assert!((expectation - 1.0).abs() < 1e-12);
    }

    #[test]
    fn variance_estimate_hand_value() {
        let est = toy_estimator(0.5, 0);
        let law = est.law().clone();
        let mut stream = replicate_stream(0, 0);
        let rep = est.replicate_at(&mut stream, 1).unwrap();
        assert!((within_replicate_variance(&rep, &law).unwrap() - 0.5).abs() < 1e-15);
        let rep = est.replicate_at(&mut stream, 0).unwrap();
        assert_eq!(within_replicate_variance(&rep, &law).unwrap(), 0.0);
    }

    #[test]
    fn variance_estimate_matches_double_sum() {
        let est = toy_estimator(0.3, 1);
        let law = est.law().clone();
        let mut stream = replicate_stream(0, 0);
        let rep = est.replicate_at(&mut stream, 7).unwrap();
        let d: Vec<f64> = rep.increments().collect();
        let q: Vec<f64> = (0..d.len())
            .map(|k| law.survival(rep.shift + 1 + k).unwrap())
            .collect();
        let mut naive = 0.0;
        for n in 0..d.len() {
            naive += d[n] * d[n] * (1.0 - q[n]) / (q[n] * q[n]);
            for j in 0..n {
                naive += 2.0 * d[n] * d[j] * (1.0 - q[j]) / (q[j] * q[n]);
            }
        }
        let fast = within_replicate_variance(&rep, &law).unwrap();
        assert!((fast - naive).abs() <= 1e-12 * naive.abs());
    }

    #[test]
    fn pooled_average_small_cases() {
        let est = toy_estimator(0.5, 0);
        let law = est.law().clone();
        let mut stream = replicate_stream(0, 0);
        let a = est.replicate_at(&mut stream, 2).unwrap();
        let b = est.replicate_at(&mut stream, 0).unwrap();
        assert_eq!(pooled_average(std::slice::from_ref(&a), &law).unwrap(), a.y);
        assert!((pooled_average(&[a, b], &law).unwrap() - 1.0).abs() < 1e-15);
        assert!(pooled_average(&[], &law).is_err());
    }

    #[test]
    fn telescoping_degeneracy() {
        // With N pinned at the shift, y is the shift level itself.
        let est = toy_estimator(0.5, 6);
        let rep = est.replicate_at(&mut replicate_stream(0, 0), 6).unwrap();
        assert_eq!(rep.y, 1.0 + 0.5f64.powi(6));
    }

    #[test]
    fn run_rejects_too_few_replicates() {
        assert!(matches!(
            toy_estimator(0.5, 0).run(1, 0),
            Err(Error::InvalidArgument { .. })
        ));
    }

    #[test]
    fn report_is_self_consistent_and_deterministic() {
        let est = toy_estimator(0.4, 1);
        let a = est.run(5000, 42).unwrap();
        let b = est.clone().with_threads(Some(3)).run(5000, 42).unwrap();
        assert_eq!(a, b);
        assert!((a.stderr * a.stderr * a.replicates as f64 - a.var_y).abs() <= 1e-12 * a.var_y);
        let reps = est.replicates(5000, 42).unwrap();
        let mean = reps.iter().map(|r| r.y).sum::<f64>() / reps.len() as f64;
        assert!((mean - a.mean).abs() < 1e-12);
    }
}
