//! Deep Gittins Network: a Q-network over `(state, reference)` pairs for the
//! continue action, a soft-updated target copy and retirement estimates `M`
//! relaxed towards the network's diagonal.

use std::fmt::Write as _;

use super::adam::AdamState;
use super::mlp::MlpParams;
use super::replay::{ExperienceTuple, ReplayBuffer};
use crate::env::rng::stream;
use crate::env::{epsilon_greedy_select, BanditInstance, EpsilonSchedule, RandomSource, RateRule};
use crate::error::{bad_config, invalid, Error, Result};
use crate::harness::metrics::{compute_bre, MetricsRow};
use crate::oracle::{BanditOracle, RetirementSolution, DEFAULT_TOL};

/// How `(s, x)` is presented to the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// Concatenated one-hot vectors, width `2N`.
    OneHot,
    /// `((s+1)/N, (x+1)/N)`, width 2.
    Scalar,
}

impl Encoding {
    pub fn name(self) -> &'static str {
        match self {
            Encoding::OneHot => "onehot",
            Encoding::Scalar => "scalar",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "onehot" => Some(Encoding::OneHot),
            "scalar" => Some(Encoding::Scalar),
            _ => None,
        }
    }

    pub fn width(self, num_states: usize) -> usize {
        match self {
            Encoding::OneHot => 2 * num_states,
            Encoding::Scalar => 2,
        }
    }

    pub fn encode(self, num_states: usize, s: usize, x: usize) -> Vec<f64> {
        match self {
            Encoding::OneHot => {
                let mut v = vec![0.0; 2 * num_states];
                v[s] = 1.0;
                v[num_states + x] = 1.0;
                v
            }
            Encoding::Scalar => {
                let n = num_states as f64;
                vec![(s as f64 + 1.0) / n, (x as f64 + 1.0) / n]
            }
        }
    }
}

/// A network together with the state space it encodes.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    pub params: MlpParams,
    pub num_states: usize,
    pub encoding: Encoding,
}

impl QNetwork {
    pub fn new(num_states: usize, encoding: Encoding, rng: &mut RandomSource) -> Result<Self> {
        let dims = MlpParams::q_network_dims(encoding.width(num_states));
        Ok(Self {
            params: MlpParams::init(&dims, rng)?,
            num_states,
            encoding,
        })
    }

    pub fn zeros(num_states: usize, encoding: Encoding) -> Result<Self> {
        let dims = MlpParams::q_network_dims(encoding.width(num_states));
        Ok(Self {
            params: MlpParams::zeros(&dims)?,
            num_states,
            encoding,
        })
    }

    pub fn input(&self, s: usize, x: usize) -> Vec<f64> {
        self.encoding.encode(self.num_states, s, x)
    }

    /// `Q^x(s, 1)`.
    pub fn forward(&self, s: usize, x: usize) -> Result<f64> {
        if s >= self.num_states || x >= self.num_states {
            return Err(invalid(format!(
                "state pair ({s}, {x}) outside 0..{}",
                self.num_states
            )));
        }
        self.params.forward(&self.input(s, x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DgnConfig {
    pub batch_size: usize,
    pub tau: f64,
    /// Learn and sync every `sync_period` steps.
    pub sync_period: u64,
    pub step_size: f64,
    pub beta: RateRule,
    pub encoding: Encoding,
    pub replay_capacity: usize,
    pub cadence: u64,
}

impl DgnConfig {
    /// Toy-problem hyperparameters.
    pub fn toy() -> Self {
        Self {
            batch_size: 32,
            tau: 1e-3,
            sync_period: 10,
            step_size: 5e-3,
            beta: RateRule::Constant { value: 1.0, phi: 5 },
            encoding: Encoding::OneHot,
            replay_capacity: ReplayBuffer::DEFAULT_CAPACITY,
            cadence: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.sync_period == 0 || self.cadence == 0 {
            return Err(bad_config("batch size, sync period and cadence must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(bad_config(format!("tau {} outside [0,1]", self.tau)));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(bad_config("optimizer step size must be positive"));
        }
        if self.replay_capacity == 0 {
            return Err(bad_config("replay capacity must be positive"));
        }
        self.beta.at(1).map(|_| ())
    }
}

/// `r + gamma * max{Q'^x(s', 1), M(x)}`.
pub fn dgn_target(t: &ExperienceTuple, x: usize, target: &QNetwork, m: &[f64], gamma: f64) -> Result<f64> {
    Ok(t.reward + gamma * target.forward(t.next_state, x)?.max(m[x]))
}

/// `theta' <- tau theta' + (1 - tau) theta`, elementwise.
pub fn soft_update(target: &mut MlpParams, online: &MlpParams, tau: f64) -> Result<()> {
    if target.num_params() != online.num_params() {
        return Err(Error::ShapeMismatch {
            expected: target.num_params(),
            got: online.num_params(),
        });
    }
    for (t, o) in target.as_mut_slice().iter_mut().zip(online.as_slice()) {
        *t = tau * *t + (1.0 - tau) * o;
    }
    Ok(())
}

/// `M(x) <- M(x) + beta (Q^x(x, 1) - M(x))` for every reference state.
pub fn dgn_m_update(m: &mut [f64], online: &QNetwork, beta: f64) -> Result<()> {
    if beta == 0.0 {
        return Ok(());
    }
    for (x, mx) in m.iter_mut().enumerate() {
        let q = online.forward(x, x)?;
        *mx += beta * (q - *mx);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DgnCounters {
    pub steps: u64,
    pub learn_steps: u64,
    /// `(tuple, reference state)` targets evaluated.
    pub target_evaluations: u64,
    pub index_updates: u64,
}

/// Per arm-table learner pieces.
#[derive(Debug, Clone)]
pub struct DgnTable {
    pub online: QNetwork,
    pub target: QNetwork,
    pub adam: AdamState,
    pub m: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DgnRun {
    pub tables: Vec<DgnTable>,
    pub counters: DgnCounters,
    pub log: Vec<MetricsRow>,
    pub reference: Vec<RetirementSolution>,
}

impl DgnRun {
    pub fn indices(&self, gamma: f64) -> Vec<f64> {
        self.tables
            .iter()
            .flat_map(|t| t.m.iter().map(move |m| (1.0 - gamma) * m))
            .collect()
    }

    pub fn reference_indices(&self) -> Vec<f64> {
        self.reference.iter().flat_map(|s| s.indices.iter().copied()).collect()
    }
}

/// Trains DGN for `steps` environment steps. Homogeneous environments share
/// one network; heterogeneous ones get a network per arm.
pub fn train_dgn(env: &BanditInstance, cfg: &DgnConfig, epsilon: &EpsilonSchedule, steps: u64, seed: u64) -> Result<DgnRun> {
    cfg.validate()?;
    epsilon.validate()?;
    let oracle = BanditOracle::new(env, DEFAULT_TOL)?;
    let reference: Vec<RetirementSolution> = oracle.solutions().to_vec();
    let n = env.num_states();
    let gamma = env.gamma();
    let k = env.num_arms();

    let mut init_rng = RandomSource::derive(seed, stream::INIT);
    let mut tables = Vec::with_capacity(reference.len());
    for _ in 0..reference.len() {
        let online = QNetwork::new(n, cfg.encoding, &mut init_rng)?;
        tables.push(DgnTable {
            target: online.clone(),
            adam: AdamState::new(online.params.num_params(), cfg.step_size),
            online,
            m: vec![0.0; n],
        });
    }

    let mut env = env.clone();
    env.reset();
    let available = vec![true; k];
    let mut policy_rng = RandomSource::derive(seed, stream::POLICY);
    let mut env_rng = RandomSource::derive(seed, stream::ENVIRONMENT);
    let mut replay_rng = RandomSource::derive(seed, stream::REPLAY);
    let mut buffer = ReplayBuffer::new(cfg.replay_capacity)?;
    let mut counters = DgnCounters::default();
    let mut log = Vec::new();
    let mut suboptimal = 0u64;
    let mut indices = vec![0.0; k];

    for step in 1..=steps {
        let states = env.states();
        for (i, slot) in indices.iter_mut().enumerate() {
            *slot = (1.0 - gamma) * tables[env.table_of(i)].m[states[i]];
        }
        let arm = epsilon_greedy_select(&indices, &available, epsilon.at(step - 1), &mut policy_rng)?;
        let optimal = oracle.is_optimal(arm, states, &available);
        if !optimal {
            suboptimal += 1;
        }
        let tr = env.step_arm(arm, &mut env_rng)?;
        buffer.push(ExperienceTuple {
            arm,
            state: tr.state,
            reward: tr.reward,
            next_state: tr.next_state,
        });
        counters.steps += 1;

        if buffer.len() > cfg.batch_size && step % cfg.sync_period == 0 {
            let batch = buffer.sample(cfg.batch_size, &mut replay_rng);
            let mut per_table: Vec<Vec<(Vec<f64>, f64)>> = vec![Vec::new(); tables.len()];
            for t in &batch {
                let ti = env.table_of(t.arm);
                let tab = &tables[ti];
                for x in 0..n {
                    let y = dgn_target(t, x, &tab.target, &tab.m, gamma)?;
                    per_table[ti].push((tab.online.input(t.state, x), y));
                }
            }
            counters.target_evaluations += (batch.len() * n) as u64;
            for (tab, items) in tables.iter_mut().zip(&per_table) {
                if items.is_empty() {
                    continue;
                }
                let (_, grad) = tab.online.params.gradient(items)?;
                tab.adam.apply(tab.online.params.as_mut_slice(), &grad)?;
                soft_update(&mut tab.target.params, &tab.online.params, cfg.tau)?;
            }
            counters.learn_steps += 1;
        }

        let beta = cfg.beta.at(step)?;
        if beta > 0.0 {
            for tab in tables.iter_mut() {
                dgn_m_update(&mut tab.m, &tab.online, beta)?;
            }
            counters.index_updates += (tables.len() * n) as u64;
        }

        if step % cfg.cadence == 0 {
            let values = tables
                .iter()
                .map(|t| (0..n).map(|x| Ok(t.online.forward(x, x)?.max(t.m[x]))).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            log.push(MetricsRow {
                step,
                arm,
                optimal,
                suboptimal_pct: 100.0 * suboptimal as f64 / step as f64,
                bre: compute_bre(&values, &reference)?,
                indices: tables.iter().flat_map(|t| t.m.iter().map(|m| (1.0 - gamma) * m)).collect(),
                q_updates: counters.target_evaluations,
                index_updates: counters.index_updates,
            });
        }
    }
    Ok(DgnRun {
        tables,
        counters,
        log,
        reference,
    })
}

const HEADER: &str = "gittins-mlp v1";

/// Text form: a header line, `dims`, `seed`, `encoding`, `params <count>`,
/// then one parameter per line in round-trip decimal.
pub fn write_params(net: &QNetwork, seed: u64) -> String {
    let mut out = String::new();
    let dims: Vec<String> = net.params.dims().iter().map(|d| d.to_string()).collect();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "dims {}", dims.join(" "));
    let _ = writeln!(out, "seed {seed}");
    let _ = writeln!(out, "encoding {}", net.encoding.name());
    let _ = writeln!(out, "params {}", net.params.num_params());
    for v in net.params.as_slice() {
        let _ = writeln!(out, "{v:?}");
    }
    out
}

/// Parses [`write_params`] output; returns the network and its seed.
pub fn read_params(text: &str) -> Result<(QNetwork, u64)> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let mut next = |what: &str| {
        lines.next().ok_or_else(|| Error::Parse {
            line: 0,
            message: format!("missing {what}"),
        })
    };
    let perr = |line: usize, m: String| Error::Parse { line, message: m };

    let (l, h) = next("header")?;
    if h != HEADER {
        return Err(perr(l, format!("expected header '{HEADER}'")));
    }
    let field = |(l, s): (usize, &str), key: &str| -> Result<String> {
        s.strip_prefix(key)
            .map(|r| r.trim().to_string())
            .ok_or_else(|| perr(l, format!("expected '{key}'")))
    };
    let d = next("dims")?;
    let dims = field(d, "dims")?
        .split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| perr(d.0, e.to_string())))
        .collect::<Result<Vec<_>>>()?;
    let s = next("seed")?;
    let seed = field(s, "seed")?.parse::<u64>().map_err(|e| perr(s.0, e.to_string()))?;
    let e = next("encoding")?;
    let enc_name = field(e, "encoding")?;
    let encoding = Encoding::parse(&enc_name).ok_or_else(|| perr(e.0, format!("unknown encoding '{enc_name}'")))?;
    let c = next("params")?;
    let count = field(c, "params")?.parse::<usize>().map_err(|e| perr(c.0, e.to_string()))?;
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        let (l, v) = next("parameter")?;
        params.push(v.parse::<f64>().map_err(|e| perr(l, e.to_string()))?);
    }
    let num_states = match encoding {
        Encoding::OneHot => dims[0] / 2,
        Encoding::Scalar => return Err(invalid("scalar-encoded networks do not record N; use OneHot")),
    };
    Ok((
        QNetwork {
            params: MlpParams::from_parts(dims, params)?,
            num_states,
            encoding,
        },
        seed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::ArmModel;

    fn tuple(r: f64, s2: usize) -> ExperienceTuple {
        ExperienceTuple {
            arm: 0,
            state: 0,
            reward: r,
            next_state: s2,
        }
    }

    /// Network whose output is the constant `c` (zero weights, output bias `c`).
    fn constant_net(n: usize, c: f64) -> QNetwork {
        let mut q = QNetwork::zeros(n, Encoding::OneHot).unwrap();
        let last = q.params.num_params() - 1;
        q.params.as_mut_slice()[last] = c;
        q
    }

    #[test]
    fn zero_network_is_zero() {
        let q = QNetwork::zeros(4, Encoding::OneHot).unwrap();
        assert_eq!(q.forward(2, 3).unwrap(), 0.0);
        assert!(q.forward(4, 0).is_err());
    }

    #[test]
    fn target_examples() {
        let net = constant_net(2, 2.0);
        let t = tuple(1.0, 1);
        assert!((dgn_target(&t, 0, &net, &[3.0, 0.0], 0.9).unwrap() - 3.7).abs() < 1e-12);
        assert!((dgn_target(&t, 0, &net, &[1.0, 0.0], 0.9).unwrap() - 2.8).abs() < 1e-12);
        assert_eq!(dgn_target(&t, 1, &net, &[5.0, 9.0], 0.0).unwrap(), 1.0);
    }

    #[test]
    fn soft_update_examples() {
        let online = MlpParams::from_parts(vec![1, 1], vec![2.0, 2.0]).unwrap();
        let mut t = MlpParams::zeros(&[1, 1]).unwrap();
        soft_update(&mut t, &online, 1.0).unwrap();
        assert_eq!(t.as_slice(), &[0.0, 0.0]);
        soft_update(&mut t, &online, 0.5).unwrap();
        assert_eq!(t.as_slice(), &[1.0, 1.0]);
        soft_update(&mut t, &online, 0.0).unwrap();
        assert_eq!(t.as_slice(), online.as_slice());
    }

    #[test]
    fn m_update_examples() {
        let net = constant_net(2, 4.0);
        let mut m = vec![0.0, 1.0];
        dgn_m_update(&mut m, &net, 0.0).unwrap();
        assert_eq!(m, vec![0.0, 1.0]);
        dgn_m_update(&mut m, &net, 0.5).unwrap();
        assert_eq!(m, vec![2.0, 2.5]);
        dgn_m_update(&mut m, &net, 1.0).unwrap();
        assert_eq!(m, vec![4.0, 4.0]);
    }

    #[test]
    fn no_learning_before_buffer_fills() {
        let env = BanditInstance::toy(0.9).unwrap();
        let run = train_dgn(&env, &DgnConfig::toy(), &EpsilonSchedule::constant(1.0), 30, 1).unwrap();
        let mut rng = RandomSource::derive(1, stream::INIT);
        let init = QNetwork::new(5, Encoding::OneHot, &mut rng).unwrap();
        assert_eq!(run.counters.learn_steps, 0);
        assert_eq!(run.tables[0].online, init);
    }

    #[test]
    fn learn_step_count_and_target_evaluations() {
        let env = BanditInstance::toy(0.9).unwrap();
        let cfg = DgnConfig::toy();
        for steps in [1u64, 33, 40, 41, 250] {
            let run = train_dgn(&env, &cfg, &EpsilonSchedule::constant(1.0), steps, 3).unwrap();
            let want = (1..=steps).filter(|&n| n % 10 == 0 && n.min(10_000) > 32).count() as u64;
            assert_eq!(run.counters.learn_steps, want);
            assert_eq!(run.counters.learn_steps, (steps / 10).saturating_sub(32 / 10));
            assert_eq!(run.counters.target_evaluations, want * 32 * 5);
        }
    }

    #[test]
    fn degenerate_sync_keeps_target_equal() {
        let env = BanditInstance::toy(0.9).unwrap();
        let mut cfg = DgnConfig::toy();
        cfg.tau = 0.0;
        cfg.sync_period = 1;
        cfg.batch_size = 4;
        let run = train_dgn(&env, &cfg, &EpsilonSchedule::constant(1.0), 50, 8).unwrap();
        assert_eq!(run.tables[0].online, run.tables[0].target);
    }

    #[test]
    fn overfits_a_fixed_batch() {
        for seed in 0..10 {
            let mut rng = RandomSource::new(seed);
            let mut net = QNetwork::new(5, Encoding::OneHot, &mut rng).unwrap();
            let batch: Vec<(Vec<f64>, f64)> = (0..4)
                .map(|i| (net.input(i, (i + 1) % 5), 1.0 + i as f64 / 4.0))
                .collect();
            let mut adam = AdamState::new(net.params.num_params(), 1e-3);
            let initial = net.params.gradient(&batch).unwrap().0;
            let mut last = initial;
            for _ in 0..100 {
                let (_, g) = net.params.gradient(&batch).unwrap();
                adam.apply(net.params.as_mut_slice(), &g).unwrap();
                last = net.params.gradient(&batch).unwrap().0;
                assert!(last <= initial);
            }
            assert!(last < 1e-3 * initial, "seed {seed}: {last} vs {initial}");
        }
    }

    #[test]
    fn params_round_trip() {
        let mut rng = RandomSource::new(4);
        let net = QNetwork::new(5, Encoding::OneHot, &mut rng).unwrap();
        let text = write_params(&net, 4);
        let (back, seed) = read_params(&text).unwrap();
        assert_eq!(seed, 4);
        assert_eq!(back, net);
        assert!(read_params("nope").is_err());
    }

    #[test]
    fn heterogeneous_gets_one_network_per_arm() {
        let [a, b] = ArmModel::elementary_pair();
        let env = BanditInstance::heterogeneous(vec![a, b], 0.9, vec![0, 0]).unwrap();
        let run = train_dgn(&env, &DgnConfig::toy(), &EpsilonSchedule::constant(1.0), 60, 2).unwrap();
        assert_eq!(run.tables.len(), 2);
        assert_eq!(run.log[0].indices.len(), 4);
    }
}
