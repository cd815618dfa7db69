//! Closed-form bounds and fixed points used to sanity-check simulation output.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::decision::Accuracy;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    UpperBound,
    LowerBound,
    Exact,
    FixedPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub value: f64,
    pub kind: BoundKind,
}

impl BoundReport {
    fn new(name: &str, inputs: &[(&str, f64)], value: f64, kind: BoundKind) -> Self {
        BoundReport {
            name: name.to_string(),
            inputs: inputs.iter().map(|&(k, v)| (k.to_string(), v)).collect(),
            value,
            kind,
        }
    }
}

fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::param(name, format!("{p} is not a probability")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChernoffTails {
    /// Bound on `P(X >= (1 + delta) mu)`.
    pub upper: BoundReport,
    /// Bound on `P(X <= (1 - delta) mu)`.
    pub lower: BoundReport,
}

/// Multiplicative Chernoff bounds for `X ~ Bin(n, p)`.
pub fn chernoff_tails(n: u64, p: f64, delta: f64) -> Result<ChernoffTails> {
    check_probability("p", p)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("{delta} is outside (0, 1)")));
    }
    let mu = n as f64 * p;
    let inputs = [("n", n as f64), ("p", p), ("delta", delta)];
    Ok(ChernoffTails {
        upper: BoundReport::new("chernoff-upper", &inputs, (-delta * delta * mu / 3.0).exp(), BoundKind::UpperBound),
        lower: BoundReport::new("chernoff-lower", &inputs, (-delta * delta * mu / 2.0).exp(), BoundKind::UpperBound),
    })
}

/// Lower bound on the probability that an aggregator watching `s`
/// independent guinea pigs (plus its own signal) gets the majority right.
pub fn aggregation_success_bound(s: u64, q: f64) -> Result<BoundReport> {
    let q = Accuracy::new(q)?.get();
    if s == 0 {
        return Err(Error::param("s", "must be at least 1"));
    }
    let value = 1.0 - (-(2.0 * q - 1.0).powi(2) * (s as f64 + 1.0) / (8.0 * q)).exp();
    Ok(BoundReport::new(
        "aggregation-success",
        &[("s", s as f64), ("q", q)],
        value,
        BoundKind::LowerBound,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ButterflyRates {
    /// `rates[i]` is the rate at depth `i + 1`; depth 1 is the signal layer.
    pub rates: Vec<f64>,
    pub mean: f64,
    pub lower_bound: BoundReport,
}

/// Per-depth rates of a bottom-up butterfly under majority voting. Each
/// vertex sees two independent copies of the previous depth, so
/// `q_i = q_{i-1}^2 + 2 q q_{i-1} (1 - q_{i-1})`.
pub fn butterfly_recurrence(q: f64, depth: usize) -> Result<ButterflyRates> {
    let q = Accuracy::new(q)?.get();
    if depth == 0 {
        return Err(Error::param("depth", "must be at least 1"));
    }
    let mut rates = Vec::with_capacity(depth);
    rates.push(q);
    for i in 1..depth {
        let p = rates[i - 1];
        rates.push(p * p + 2.0 * q * p * (1.0 - p));
    }
    let mean = rates.iter().sum::<f64>() / depth as f64;
    let k = (depth - 1) as f64;
    let c = (2.0 * q + 1.0) * (1.0 - q);
    let bound = 1.0 - (1.0 - q) / (1.0 + k) * (1.0 - c.powi(depth as i32)) / (1.0 - c);
    Ok(ButterflyRates {
        lower_bound: BoundReport::new(
            "butterfly-network-rate",
            &[("q", q), ("depth", depth as f64)],
            bound,
            BoundKind::LowerBound,
        ),
        rates,
        mean,
    })
}

/// Ceiling on the learning rate under a uniformly random ordering for a
/// graph with average degree `avg_degree`.
pub fn sparse_ceiling(avg_degree: f64, q: f64) -> Result<BoundReport> {
    let q = Accuracy::new(q)?.get();
    if avg_degree.is_nan() || avg_degree < 0.0 {
        return Err(Error::param("avg_degree", format!("{avg_degree} is negative")));
    }
    let value = 1.0 - (1.0 - q) / (2.0 * (2.0 * avg_degree + 1.0));
    Ok(BoundReport::new(
        "sparse-ceiling",
        &[("avg_degree", avg_degree), ("q", q)],
        value,
        BoundKind::UpperBound,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GiantComponent {
    /// Fraction of vertices outside the giant component.
    pub eta: f64,
    pub giant_fraction: f64,
    pub report: BoundReport,
}

const FIXED_POINT_TOL: f64 = 1e-12;

/// Solves `eta = exp(c (eta - 1))` for `c = p n > 1` on (0, 1).
pub fn giant_component_fraction(n: u64, p: f64) -> Result<GiantComponent> {
    check_probability("p", p)?;
    let c = p * n as f64;
    if c <= 1.0 {
        return Err(Error::param("p", format!("p*n = {c} must exceed 1")));
    }
    let f = |eta: f64| (c * (eta - 1.0)).exp();

    let mut eta = 0.5;
    let mut converged = false;
    for _ in 0..100_000 {
        let next = 0.5 * eta + 0.5 * f(eta);
        if (next - eta).abs() <= FIXED_POINT_TOL {
            eta = next;
            converged = true;
            break;
        }
        eta = next;
    }
    if !converged || !(eta > 0.0 && eta < 1.0) {
        // eta - f(eta) is negative at 0 and positive at 1/c.
        let (mut lo, mut hi) = (0.0f64, 1.0 / c);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid - f(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= FIXED_POINT_TOL {
                break;
            }
        }
        eta = 0.5 * (lo + hi);
    }
    Ok(GiantComponent {
        eta,
        giant_fraction: 1.0 - eta,
        report: BoundReport::new("giant-component", &[("n", n as f64), ("p", p)], 1.0 - eta, BoundKind::FixedPoint),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsolatedEstimate {
    pub value: f64,
    /// False when `p` lies outside `[1/(2n), 1/2]`, where the leading-term
    /// approximation is not claimed to hold.
    pub in_range: bool,
}

/// Leading-term expected number of isolated vertices in G(n, p).
pub fn expected_isolated(n: u64, p: f64) -> Result<IsolatedEstimate> {
    check_probability("p", p)?;
    if n == 0 {
        return Err(Error::param("n", "must be at least 1"));
    }
    let nf = n as f64;
    Ok(IsolatedEstimate {
        value: nf * (-p * nf).exp(),
        in_range: p >= 1.0 / (2.0 * nf) && p <= 0.5,
    })
}
