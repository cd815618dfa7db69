//! Learning-rate estimation: Monte Carlo over independent trials, exact
//! enumeration over every signal vector for small graphs, and cascade
//! statistics.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::decision::{run_cascade, sample_signals, ActionVector, Decider, ModelConfig, SignalVector, DEFAULT_BAYES_CAP};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ordering::{Ordering, Strategy};
use crate::rng::{substream, trial_rng, ORDERING_STREAM};

/// Threshold used for the herding frequency attached to every report.
pub const DEFAULT_HERDING_THRESHOLD: f64 = 0.9;

/// Upper bound on the number of vertices handled by exact enumeration.
pub const EXACT_CAP: usize = 20;

const CHUNK: usize = 32;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub theta: bool,
    pub signals: SignalVector,
    /// Indexed by decision rank.
    pub actions: ActionVector,
    /// Indexed by vertex.
    pub correct: Vec<bool>,
    pub fraction_correct: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CascadeStats {
    pub threshold: f64,
    /// Trials where at least `threshold` of the agents agree (right or wrong).
    pub herding: f64,
    /// Trials where at least `threshold` of the agents are wrong.
    pub wrong_cascade: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MonteCarlo,
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LearningReport {
    pub method: Method,
    /// Estimated `P(action = theta)` per vertex.
    pub per_node_rate: Vec<f64>,
    /// Mean of `per_node_rate`.
    pub network_rate: f64,
    pub std_error: f64,
    pub distribution: Quantiles,
    pub cascades: CascadeStats,
    pub trials: usize,
    pub seed: u64,
    pub resample_ordering: bool,
    /// Per-trial fraction of correct agents, in trial order.
    #[serde(skip)]
    pub trial_fractions: Vec<f64>,
}

impl LearningReport {
    /// Mean rate of each group, where `group(v)` is in `0..groups`.
    pub fn group_means(&self, groups: usize, group: impl Fn(usize) -> usize) -> Vec<f64> {
        let mut sum = vec![0.0; groups];
        let mut count = vec![0usize; groups];
        for (v, &r) in self.per_node_rate.iter().enumerate() {
            let gi = group(v);
            sum[gi] += r;
            count[gi] += 1;
        }
        sum.iter().zip(&count).map(|(s, &c)| if c == 0 { f64::NAN } else { s / c as f64 }).collect()
    }
}

/// Monte Carlo settings. `resample_ordering = None` resamples exactly when
/// the strategy is stochastic; `workers = None` uses the global rayon pool.
#[derive(Clone, Debug)]
pub struct MonteCarlo {
    pub trials: usize,
    pub seed: u64,
    pub resample_ordering: Option<bool>,
    pub workers: Option<usize>,
    pub bayes_cap: usize,
}

impl MonteCarlo {
    pub fn new(trials: usize, seed: u64) -> Self {
        MonteCarlo {
            trials,
            seed,
            resample_ordering: None,
            workers: None,
            bayes_cap: DEFAULT_BAYES_CAP,
        }
    }

    pub fn resample_ordering(mut self, resample: bool) -> Self {
        self.resample_ordering = Some(resample);
        self
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn run(&self, g: &Graph, strategy: &Strategy, model: ModelConfig) -> Result<LearningReport> {
        if self.trials == 0 {
            return Err(Error::param("trials", "must be at least 1"));
        }
        match self.workers {
            Some(w) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(w.max(1))
                    .build()
                    .map_err(|e| Error::param("workers", e.to_string()))?;
                pool.install(|| self.run_inner(g, strategy, model))
            }
            None => self.run_inner(g, strategy, model),
        }
    }

    fn run_inner(&self, g: &Graph, strategy: &Strategy, model: ModelConfig) -> Result<LearningReport> {
        let n = g.n();
        let resample = self.resample_ordering.unwrap_or_else(|| strategy.is_stochastic());
        let fixed = if resample {
            None
        } else {
            let sigma = strategy.build(g, &mut substream(self.seed, ORDERING_STREAM))?;
            let decider = Decider::with_cap(g, &sigma, model, self.bayes_cap)?;
            Some((sigma, decider))
        };

        let chunks = self.trials.div_ceil(CHUNK);
        let partials: Vec<(Vec<u64>, Vec<f64>)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut counts = vec![0u64; n];
                let mut fractions = Vec::with_capacity(CHUNK);
                for t in c * CHUNK..((c + 1) * CHUNK).min(self.trials) {
                    let outcome = play_trial(g, strategy, model, self.seed, t as u64, fixed.as_ref(), self.bayes_cap)?;
                    for (v, &ok) in outcome.correct.iter().enumerate() {
                        counts[v] += ok as u64;
                    }
                    fractions.push(outcome.fraction_correct);
                }
                Ok((counts, fractions))
            })
            .collect::<Result<_>>()?;

        let mut counts = vec![0u64; n];
        let mut fractions = Vec::with_capacity(self.trials);
        for (c, f) in partials {
            for (acc, x) in counts.iter_mut().zip(c) {
                *acc += x;
            }
            fractions.extend(f);
        }
        let per_node_rate: Vec<f64> = counts.iter().map(|&c| c as f64 / self.trials as f64).collect();
        Ok(LearningReport {
            method: Method::MonteCarlo,
            network_rate: mean(&per_node_rate),
            std_error: standard_error(&fractions),
            distribution: quantiles(&fractions),
            cascades: cascade_stats_from_fractions(&fractions, DEFAULT_HERDING_THRESHOLD)?,
            per_node_rate,
            trials: self.trials,
            seed: self.seed,
            resample_ordering: resample,
            trial_fractions: fractions,
        })
    }

    /// Full outcomes of every trial, in trial order.
    pub fn outcomes(&self, g: &Graph, strategy: &Strategy, model: ModelConfig) -> Result<Vec<TrialOutcome>> {
        let resample = self.resample_ordering.unwrap_or_else(|| strategy.is_stochastic());
        let fixed = if resample {
            None
        } else {
            let sigma = strategy.build(g, &mut substream(self.seed, ORDERING_STREAM))?;
            let decider = Decider::with_cap(g, &sigma, model, self.bayes_cap)?;
            Some((sigma, decider))
        };
        (0..self.trials as u64)
            .into_par_iter()
            .map(|t| play_trial(g, strategy, model, self.seed, t, fixed.as_ref(), self.bayes_cap))
            .collect()
    }
}

/// Monte Carlo estimate of per-vertex and network learning rates.
pub fn estimate_learning(
    g: &Graph,
    strategy: &Strategy,
    model: ModelConfig,
    trials: usize,
    seed: u64,
    resample_ordering: Option<bool>,
) -> Result<LearningReport> {
    let mut mc = MonteCarlo::new(trials, seed);
    mc.resample_ordering = resample_ordering;
    mc.run(g, strategy, model)
}

/// Trial `t` under master `seed`: theta, then (if resampling) the ordering,
/// then the signals, all drawn from the trial's own substream.
fn play_trial(
    g: &Graph,
    strategy: &Strategy,
    model: ModelConfig,
    seed: u64,
    t: u64,
    fixed: Option<&(Ordering, Decider)>,
    bayes_cap: usize,
) -> Result<TrialOutcome> {
    let mut rng = trial_rng(seed, t);
    let theta = rng.gen_bool(0.5);
    let built;
    let (sigma, decider) = match fixed {
        Some((s, d)) => (s, d),
        None => {
            let s = strategy.build(g, &mut rng)?;
            let d = Decider::with_cap(g, &s, model, bayes_cap)?;
            built = (s, d);
            (&built.0, &built.1)
        }
    };
    let signals = sample_signals(g.n(), model.q, theta, &mut rng);
    let actions = run_cascade(g, sigma, model, decider, &signals)?;
    Ok(outcome(sigma, theta, signals, actions))
}

fn outcome(sigma: &Ordering, theta: bool, signals: SignalVector, actions: ActionVector) -> TrialOutcome {
    let correct: Vec<bool> = actions.by_vertex(sigma).into_iter().map(|a| a == theta).collect();
    let fraction_correct = correct.iter().filter(|&&c| c).count() as f64 / correct.len() as f64;
    TrialOutcome {
        theta,
        signals,
        actions,
        correct,
        fraction_correct,
    }
}

/// Exact learning rates for a fixed ordering, summing over both values of
/// theta and all `2^n` signal vectors.
pub fn exact_learning_rate(g: &Graph, sigma: &Ordering, model: ModelConfig) -> Result<LearningReport> {
    let n = g.n();
    if n > EXACT_CAP {
        return Err(Error::Capacity {
            what: "exact enumeration",
            n,
            max: EXACT_CAP,
        });
    }
    let decider = Decider::new(g, sigma, model)?;
    let q = model.q.get();
    let mut rate = vec![0.0; n];
    let mut fraction_mass: Vec<(f64, f64)> = Vec::with_capacity(1 << (n + 1));
    let mut signals = vec![false; n];

    for theta in [false, true] {
        for bits in 0u32..(1u32 << n) {
            let mut matches = 0;
            for (r, &v) in sigma.sequence().iter().enumerate() {
                let s = (bits >> r) & 1 == 1;
                signals[v] = s;
                matches += (s == theta) as i32;
            }
            let weight = 0.5 * q.powi(matches) * (1.0 - q).powi(n as i32 - matches);
            let sv = SignalVector {
                theta,
                signals: signals.clone(),
            };
            let acts = run_cascade(g, sigma, model, &decider, &sv)?;
            let mut right = 0usize;
            for (r, &a) in acts.actions.iter().enumerate() {
                if a == theta {
                    rate[sigma.vertex(r)] += weight;
                    right += 1;
                }
            }
            fraction_mass.push((right as f64 / n as f64, weight));
        }
    }

    fraction_mass.sort_by(|a, b| a.0.total_cmp(&b.0));
    let weighted_quantile = |p: f64| {
        let mut acc = 0.0;
        for &(x, w) in &fraction_mass {
            acc += w;
            if acc >= p - 1e-12 {
                return x;
            }
        }
        fraction_mass.last().map_or(0.0, |&(x, _)| x)
    };
    let mass_where = |pred: &dyn Fn(f64) -> bool| -> f64 { fraction_mass.iter().filter(|(x, _)| pred(*x)).map(|(_, w)| w).sum() };
    let t = DEFAULT_HERDING_THRESHOLD;
    let cascades = CascadeStats {
        threshold: t,
        herding: mass_where(&|x| x >= t || x <= 1.0 - t),
        wrong_cascade: mass_where(&|x| x <= 1.0 - t),
    };

    Ok(LearningReport {
        method: Method::Exact,
        network_rate: mean(&rate),
        std_error: 0.0,
        distribution: Quantiles {
            min: fraction_mass.iter().find(|(_, w)| *w > 0.0).map_or(0.0, |&(x, _)| x),
            q25: weighted_quantile(0.25),
            median: weighted_quantile(0.5),
            q75: weighted_quantile(0.75),
            max: fraction_mass.iter().rev().find(|(_, w)| *w > 0.0).map_or(0.0, |&(x, _)| x),
        },
        cascades,
        per_node_rate: rate,
        trials: 0,
        seed: 0,
        resample_ordering: false,
        trial_fractions: Vec::new(),
    })
}

pub fn cascade_stats(outcomes: &[TrialOutcome], threshold: f64) -> Result<CascadeStats> {
    let fractions: Vec<f64> = outcomes.iter().map(|o| o.fraction_correct).collect();
    cascade_stats_from_fractions(&fractions, threshold)
}

pub fn cascade_stats_from_fractions(fractions: &[f64], threshold: f64) -> Result<CascadeStats> {
    if fractions.is_empty() {
        return Err(Error::EmptyInput("no trial outcomes"));
    }
    if !(threshold > 0.5 && threshold <= 1.0) {
        return Err(Error::param("threshold", format!("{threshold} is outside (0.5, 1]")));
    }
    let total = fractions.len() as f64;
    let herding = fractions.iter().filter(|&&f| f >= threshold || f <= 1.0 - threshold).count();
    let wrong = fractions.iter().filter(|&&f| f <= 1.0 - threshold).count();
    Ok(CascadeStats {
        threshold,
        herding: herding as f64 / total,
        wrong_cascade: wrong as f64 / total,
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn standard_error(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}

/// Linear-interpolation quantiles of an unsorted sample.
pub fn quantiles(xs: &[f64]) -> Quantiles {
    if xs.is_empty() {
        return Quantiles::default();
    }
    let mut s = xs.to_vec();
    s.sort_by(f64::total_cmp);
    let at = |p: f64| {
        let pos = p * (s.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        s[lo] + (s[hi] - s[lo]) * (pos - lo as f64)
    };
    Quantiles {
        min: s[0],
        q25: at(0.25),
        median: at(0.5),
        q75: at(0.75),
        max: s[s.len() - 1],
    }
}
