//! Agent decision rules: private signals, the majority rule, and the exact
//! Bayesian rule obtained by enumerating every signal vector.
//!
//! Both rules break ties by following the agent's own signal. That keeps the
//! Bayesian rule symmetric under flipping every signal together with the
//! ground truth.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ordering::Ordering;

/// Default vertex cap for exact Bayesian tables.
pub const DEFAULT_BAYES_CAP: usize = 20;
/// Hard ceiling regardless of the caller's cap; tables index signal vectors
/// with `u32` masks.
pub const MAX_BAYES_N: usize = 26;

/// Private-signal accuracy `q`, strictly between 1/2 and 1.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Accuracy(f64);

impl Accuracy {
    pub fn new(q: f64) -> Result<Self> {
        if q > 0.5 && q < 1.0 {
            Ok(Accuracy(q))
        } else {
            Err(Error::param("q", format!("{q} is outside (1/2, 1)")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Accuracy {
    type Error = Error;
    fn try_from(q: f64) -> Result<Self> {
        Accuracy::new(q)
    }
}

impl From<Accuracy> for f64 {
    fn from(q: Accuracy) -> f64 {
        q.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Majority,
    Bayesian,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Majority => "majority",
            Model::Bayesian => "bayesian",
        }
    }
}

impl std::str::FromStr for Model {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority" => Ok(Model::Majority),
            "bayesian" => Ok(Model::Bayesian),
            other => Err(Error::config("model", format!("unknown model `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model: Model,
    pub q: Accuracy,
}

impl ModelConfig {
    pub fn majority(q: f64) -> Result<Self> {
        Ok(ModelConfig {
            model: Model::Majority,
            q: Accuracy::new(q)?,
        })
    }

    pub fn bayesian(q: f64) -> Result<Self> {
        Ok(ModelConfig {
            model: Model::Bayesian,
            q: Accuracy::new(q)?,
        })
    }
}

/// Ground truth and one private signal per vertex (indexed by vertex).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SignalVector {
    pub theta: bool,
    pub signals: Vec<bool>,
}

impl SignalVector {
    /// Flips the ground truth and every signal.
    pub fn complement(&self) -> SignalVector {
        SignalVector {
            theta: !self.theta,
            signals: self.signals.iter().map(|s| !s).collect(),
        }
    }
}

/// Each signal equals `theta` independently with probability `q`.
pub fn sample_signals<R: Rng + ?Sized>(n: usize, q: Accuracy, theta: bool, rng: &mut R) -> SignalVector {
    let signals = (0..n).map(|_| if rng.gen_bool(q.get()) { theta } else { !theta }).collect();
    SignalVector { theta, signals }
}

/// Actions indexed by decision rank.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ActionVector {
    pub actions: Vec<bool>,
}

impl ActionVector {
    /// Actions re-indexed by vertex.
    pub fn by_vertex(&self, sigma: &Ordering) -> Vec<bool> {
        let mut out = vec![false; self.actions.len()];
        for (rank, &a) in self.actions.iter().enumerate() {
            out[sigma.vertex(rank)] = a;
        }
        out
    }
}

/// Majority over the own signal and the observed actions; a tie follows the
/// own signal.
pub fn majority_decide(own_signal: bool, neighbor_actions: &[bool]) -> bool {
    let ones = neighbor_actions.iter().filter(|&&a| a).count() + own_signal as usize;
    let zeros = neighbor_actions.len() + 1 - ones;
    match ones.cmp(&zeros) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => own_signal,
    }
}

/// Exact Bayesian decision rules for one `(graph, ordering, q)`.
///
/// The agent at rank `r` observes an evidence word: the actions of its
/// earlier neighbors (in rank order, most significant first) followed by its
/// own signal in the lowest bit. `rules[r][evidence]` is its action.
/// `joint[I]` holds the action of every rank (bit `r` = rank `r`) for the
/// rank-indexed signal vector `I`; restricted to the low `r + 1` bits it is
/// the prefix-to-action map for rank `r`.
#[derive(Clone, Debug)]
pub struct BayesTable {
    q: Accuracy,
    sequence: Vec<usize>,
    earlier: Vec<Vec<usize>>,
    rules: Vec<Vec<bool>>,
    joint: Vec<u32>,
}

impl BayesTable {
    pub fn n(&self) -> usize {
        self.sequence.len()
    }

    pub fn q(&self) -> Accuracy {
        self.q
    }

    /// Ranks of the earlier neighbors observed at `rank`.
    pub fn observed_ranks(&self, rank: usize) -> &[usize] {
        &self.earlier[rank]
    }

    pub fn decide(&self, rank: usize, evidence: usize) -> bool {
        self.rules[rank][evidence]
    }

    /// Action at `rank` for a rank-indexed signal prefix (bits above `rank`
    /// are ignored).
    pub fn action_for_prefix(&self, rank: usize, prefix: u32) -> bool {
        let mask = if rank + 1 >= 32 { u32::MAX } else { (1u32 << (rank + 1)) - 1 };
        (self.joint[(prefix & mask) as usize] >> rank) & 1 == 1
    }

    /// Actions of every rank for a rank-indexed signal vector.
    pub fn joint_actions(&self, signals: u32) -> u32 {
        self.joint[signals as usize]
    }

    /// Number of stored decision entries across all ranks.
    pub fn rule_entries(&self) -> usize {
        self.rules.iter().map(Vec::len).sum()
    }

    fn matches(&self, sigma: &Ordering, q: Accuracy) -> bool {
        self.q == q && self.sequence == sigma.sequence()
    }
}

/// Builds the Bayesian rules rank by rank. For each evidence word the rule
/// compares `P(evidence | theta = 1)` with `P(evidence | theta = 0)`, summing
/// over every prefix signal vector that produces the evidence under the
/// rules already built for earlier ranks. Exact ties follow the own signal.
pub fn build_bayes_table(g: &Graph, sigma: &Ordering, q: Accuracy, max_n: usize) -> Result<BayesTable> {
    let n = g.n();
    if sigma.len() != n {
        return Err(Error::ModelMismatch);
    }
    let cap = max_n.min(MAX_BAYES_N);
    if n > cap {
        return Err(Error::Capacity {
            what: "exact Bayesian table",
            n,
            max: cap,
        });
    }
    let qv = q.get();
    let earlier: Vec<Vec<usize>> = (0..n).map(|r| sigma.earlier_neighbor_ranks(g, r)).collect();
    let mut rules = Vec::with_capacity(n);
    let mut joint: Vec<u32> = vec![0];

    for (rank, observed) in earlier.iter().enumerate() {
        let len = rank + 1;
        let floor_half = len / 2;
        // Likelihood differences only depend on the number of ones k in the
        // prefix; terms k and len - k cancel antisymmetrically, so track
        // count(k) - count(len - k) for k > len / 2.
        let width = len - floor_half;
        let keys = 1usize << (observed.len() + 1);
        let mut diff = vec![0i32; keys * width];

        for (prefix, &acts) in joint.iter().enumerate() {
            let seen = gather(acts, observed);
            for s in 0..2usize {
                let ones = (prefix.count_ones() as usize) + s;
                let key = (seen << 1) | s;
                if 2 * ones > len {
                    diff[key * width + ones - floor_half - 1] += 1;
                } else if 2 * ones < len {
                    diff[key * width + (len - ones) - floor_half - 1] -= 1;
                }
            }
        }

        let weights: Vec<f64> = (floor_half + 1..=len)
            .map(|k| {
                let (k, rest) = (k as i32, (len - k) as i32);
                qv.powi(k) * (1.0 - qv).powi(rest) - (1.0 - qv).powi(k) * qv.powi(rest)
            })
            .collect();

        let rule: Vec<bool> = (0..keys)
            .map(|key| {
                let own = key & 1 == 1;
                let row = &diff[key * width..(key + 1) * width];
                let mut d = 0.0;
                let mut scale = 0.0;
                for (&c, &w) in row.iter().zip(&weights) {
                    d += c as f64 * w;
                    scale += (c as f64).abs() * w;
                }
                if d > 1e-12 * scale {
                    true
                } else if d < -1e-12 * scale {
                    false
                } else {
                    own
                }
            })
            .collect();

        let mut next = vec![0u32; joint.len() * 2];
        for (prefix, &acts) in joint.iter().enumerate() {
            let seen = gather(acts, observed);
            for s in 0..2usize {
                let act = rule[(seen << 1) | s] as u32;
                next[prefix | (s << rank)] = acts | (act << rank);
            }
        }
        joint = next;
        rules.push(rule);
    }

    Ok(BayesTable {
        q,
        sequence: sigma.sequence().to_vec(),
        earlier,
        rules,
        joint,
    })
}

/// Packs the bits of `acts` at `ranks` into a word, first rank most significant.
fn gather(acts: u32, ranks: &[usize]) -> usize {
    ranks
        .iter()
        .fold(0usize, |w, &r| (w << 1) | ((acts >> r) & 1) as usize)
}

/// Ready-to-run decision rule for a fixed `(graph, ordering, model)`.
#[derive(Clone, Debug)]
pub enum Decider {
    Majority { q: Accuracy },
    Bayesian(BayesTable),
}

impl Decider {
    pub fn new(g: &Graph, sigma: &Ordering, model: ModelConfig) -> Result<Self> {
        Self::with_cap(g, sigma, model, DEFAULT_BAYES_CAP)
    }

    pub fn with_cap(g: &Graph, sigma: &Ordering, model: ModelConfig, max_n: usize) -> Result<Self> {
        Ok(match model.model {
            Model::Majority => Decider::Majority { q: model.q },
            Model::Bayesian => Decider::Bayesian(build_bayes_table(g, sigma, model.q, max_n)?),
        })
    }

    pub fn model(&self) -> ModelConfig {
        match self {
            Decider::Majority { q } => ModelConfig {
                model: Model::Majority,
                q: *q,
            },
            Decider::Bayesian(t) => ModelConfig {
                model: Model::Bayesian,
                q: t.q,
            },
        }
    }
}

/// Plays one cascade: agents act in `sigma` order, each seeing only the
/// actions of its earlier neighbors plus its own signal.
pub fn run_cascade(g: &Graph, sigma: &Ordering, model: ModelConfig, decider: &Decider, sv: &SignalVector) -> Result<ActionVector> {
    let n = g.n();
    if sigma.len() != n || sv.signals.len() != n {
        return Err(Error::ModelMismatch);
    }
    if decider.model() != model {
        return Err(Error::ModelMismatch);
    }
    let mut actions = vec![false; n];
    match decider {
        Decider::Majority { .. } => {
            let mut by_vertex: Vec<Option<bool>> = vec![None; n];
            for (rank, slot) in actions.iter_mut().enumerate() {
                let v = sigma.vertex(rank);
                let (mut ones, mut total) = (0usize, 0usize);
                for &u in g.neighbors(v) {
                    if let Some(a) = by_vertex[u] {
                        ones += a as usize;
                        total += 1;
                    }
                }
                let own = sv.signals[v];
                let ones = ones + own as usize;
                let zeros = total + 1 - ones;
                let a = match ones.cmp(&zeros) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => own,
                };
                by_vertex[v] = Some(a);
                *slot = a;
            }
        }
        Decider::Bayesian(table) => {
            if !table.matches(sigma, model.q) {
                return Err(Error::ModelMismatch);
            }
            for rank in 0..n {
                let seen = table.earlier[rank]
                    .iter()
                    .fold(0usize, |w, &r| (w << 1) | actions[r] as usize);
                let own = sv.signals[sigma.vertex(rank)];
                actions[rank] = table.decide(rank, (seen << 1) | own as usize);
            }
        }
    }
    Ok(ActionVector { actions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_butterfly, gen_erdos_renyi};
    use crate::ordering::{bottom_up_ordering, random_ordering};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(v: f64) -> Accuracy {
        Accuracy::new(v).unwrap()
    }

    #[test]
    fn accuracy_bounds() {
        assert!(Accuracy::new(0.5).is_err());
        assert!(Accuracy::new(1.0).is_err());
        assert!(Accuracy::new(0.999).is_ok());
        assert!(Accuracy::new(0.7).is_ok());
    }

    #[test]
    fn signal_match_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sv = sample_signals(100_000, q(0.7), true, &mut rng);
        let frac = sv.signals.iter().filter(|&&s| s).count() as f64 / 1e5;
        assert!((frac - 0.7).abs() < 0.005, "{frac}");
        let sv = sample_signals(100_000, q(0.7), false, &mut rng);
        let frac = sv.signals.iter().filter(|&&s| !s).count() as f64 / 1e5;
        assert!((frac - 0.7).abs() < 0.005, "{frac}");
    }

    #[test]
    fn majority_examples() {
        assert!(majority_decide(true, &[]));
        assert!(!majority_decide(true, &[false, false]));
        assert!(!majority_decide(false, &[true, true, false]));
        assert!(majority_decide(true, &[false]));
    }

    #[test]
    fn complete_graph_herds() {
        let g = Graph::complete(3).unwrap();
        let sigma = Ordering::identity(3);
        let model = ModelConfig::majority(0.7).unwrap();
        let d = Decider::new(&g, &sigma, model).unwrap();
        let sv = SignalVector {
            theta: true,
            signals: vec![false, false, true],
        };
        let acts = run_cascade(&g, &sigma, model, &d, &sv).unwrap();
        assert_eq!(acts.actions, vec![false, false, false]);
    }

    #[test]
    fn empty_graph_copies_signals() {
        let g = Graph::empty(6).unwrap();
        let sigma = Ordering::from_sequence(vec![3, 1, 0, 5, 2, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for model in [ModelConfig::majority(0.7).unwrap(), ModelConfig::bayesian(0.7).unwrap()] {
            let d = Decider::new(&g, &sigma, model).unwrap();
            let sv = sample_signals(6, model.q, true, &mut rng);
            let acts = run_cascade(&g, &sigma, model, &d, &sv).unwrap();
            assert_eq!(acts.by_vertex(&sigma), sv.signals);
        }
    }

    #[test]
    fn butterfly_unanimity() {
        let g = gen_butterfly(2).unwrap();
        let sigma = bottom_up_ordering(&g).unwrap();
        let model = ModelConfig::majority(0.7).unwrap();
        let d = Decider::new(&g, &sigma, model).unwrap();
        for theta in [false, true] {
            let sv = SignalVector {
                theta,
                signals: vec![theta; g.n()],
            };
            let acts = run_cascade(&g, &sigma, model, &d, &sv).unwrap();
            assert!(acts.actions.iter().all(|&a| a == theta));
        }
    }

    #[test]
    fn bayes_star_hub_is_majority() {
        // Leaves 1..=4 first, hub 0 last.
        let g = Graph::star(5).unwrap();
        let sigma = Ordering::from_sequence(vec![1, 2, 3, 4, 0]).unwrap();
        let t = build_bayes_table(&g, &sigma, q(0.7), DEFAULT_BAYES_CAP).unwrap();
        for evidence in 0..32usize {
            let own = evidence & 1 == 1;
            let seen: Vec<bool> = (1..5).map(|b| (evidence >> b) & 1 == 1).collect();
            assert_eq!(t.decide(4, evidence), majority_decide(own, &seen), "evidence {evidence:05b}");
        }
    }

    #[test]
    fn bayes_path_follows_own_signal_on_disagreement() {
        let g = Graph::path(2).unwrap();
        let sigma = Ordering::identity(2);
        let t = build_bayes_table(&g, &sigma, q(0.7), DEFAULT_BAYES_CAP).unwrap();
        // evidence = (neighbor action, own signal)
        assert!(!t.decide(1, 0b00));
        assert!(t.decide(1, 0b01));
        assert!(!t.decide(1, 0b10));
        assert!(t.decide(1, 0b11));
    }

    #[test]
    fn bayes_single_vertex_copies_signal() {
        let g = Graph::empty(1).unwrap();
        let t = build_bayes_table(&g, &Ordering::identity(1), q(0.6), 20).unwrap();
        assert!(!t.decide(0, 0));
        assert!(t.decide(0, 1));
    }

    #[test]
    fn bayes_capacity_and_mismatch() {
        let g = Graph::empty(21).unwrap();
        let err = build_bayes_table(&g, &Ordering::identity(21), q(0.7), DEFAULT_BAYES_CAP).unwrap_err();
        assert!(matches!(err, Error::Capacity { n: 21, max: 20, .. }));
        let err = Decider::new(&g, &Ordering::identity(21), ModelConfig::bayesian(0.7).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }));

        let g = Graph::path(3).unwrap();
        let model = ModelConfig::bayesian(0.7).unwrap();
        let d = Decider::new(&g, &Ordering::identity(3), model).unwrap();
        let other = Ordering::from_sequence(vec![2, 1, 0]).unwrap();
        let sv = SignalVector {
            theta: true,
            signals: vec![true; 3],
        };
        assert!(matches!(run_cascade(&g, &other, model, &d, &sv), Err(Error::ModelMismatch)));
        let majority = ModelConfig::majority(0.7).unwrap();
        assert!(matches!(
            run_cascade(&g, &Ordering::identity(3), majority, &d, &sv),
            Err(Error::ModelMismatch)
        ));
    }

    #[test]
    fn joint_actions_agree_with_cascade() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = gen_erdos_renyi(8, 0.4, &mut rng).unwrap();
        let sigma = random_ordering(&g, &mut rng);
        let model = ModelConfig::bayesian(0.65).unwrap();
        let d = Decider::new(&g, &sigma, model).unwrap();
        let Decider::Bayesian(table) = &d else { unreachable!() };
        for bits in 0..256u32 {
            let mut signals = vec![false; 8];
            for r in 0..8 {
                signals[sigma.vertex(r)] = (bits >> r) & 1 == 1;
            }
            let sv = SignalVector { theta: true, signals };
            let acts = run_cascade(&g, &sigma, model, &d, &sv).unwrap();
            for r in 0..8 {
                assert_eq!(acts.actions[r], (table.joint_actions(bits) >> r) & 1 == 1);
                assert_eq!(acts.actions[r], table.action_for_prefix(r, bits));
            }
        }
    }

    fn graph_strategy() -> impl Strategy<Value = (Graph, Ordering)> {
        (2usize..=9, any::<u64>(), 0.1f64..0.9).prop_map(|(n, seed, p)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = gen_erdos_renyi(n, p, &mut rng).unwrap();
            let sigma = random_ordering(&g, &mut rng);
            (g, sigma)
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn complement_flip((g, sigma) in graph_strategy(), qv in 0.55f64..0.95, bits in any::<u32>()) {
            let n = g.n();
            for model in [ModelConfig::bayesian(qv).unwrap(), ModelConfig::majority(qv).unwrap()] {
                let d = Decider::new(&g, &sigma, model).unwrap();
                let sv = SignalVector { theta: true, signals: (0..n).map(|i| (bits >> i) & 1 == 1).collect() };
                let a = run_cascade(&g, &sigma, model, &d, &sv).unwrap();
                let b = run_cascade(&g, &sigma, model, &d, &sv.complement()).unwrap();
                for (x, y) in a.actions.iter().zip(&b.actions) {
                    prop_assert_eq!(*x, !*y);
                }
            }
        }

        #[test]
        fn causality((g, sigma) in graph_strategy(), bits in any::<u32>(), noise in any::<u32>(), cut in 0usize..9) {
            let n = g.n();
            let cut = cut.min(n - 1);
            let model = ModelConfig::bayesian(0.7).unwrap();
            let d = Decider::new(&g, &sigma, model).unwrap();
            let mut signals = vec![false; n];
            let mut shaken = vec![false; n];
            for r in 0..n {
                let v = sigma.vertex(r);
                signals[v] = (bits >> r) & 1 == 1;
                shaken[v] = if r > cut { (noise >> r) & 1 == 1 } else { signals[v] };
            }
            let a = run_cascade(&g, &sigma, model, &d, &SignalVector { theta: true, signals }).unwrap();
            let b = run_cascade(&g, &sigma, model, &d, &SignalVector { theta: true, signals: shaken }).unwrap();
            prop_assert_eq!(&a.actions[..=cut], &b.actions[..=cut]);
        }
    }
}
