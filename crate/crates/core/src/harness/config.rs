//! Experiment configuration.
//!
//! A config file is a list of `section.key = value` lines. Blank lines and
//! lines starting with `#` are ignored; unknown keys are rejected. Every key
//! has a default, so an empty file describes the toy QGI run. Lists are
//! comma separated; seed lists also accept `a..b` (end exclusive).
//!
//! | key | default |
//! |-----|---------|
//! | `env.kind` | `toy` (`toy`, `dirichlet`, `elementary`, `scheduling`) |
//! | `env.gamma` | 0.9, or 0.99 for constant-hazard and distribution batches |
//! | `env.arms` | 5 |
//! | `env.states` | 50 (dirichlet) |
//! | `env.concentration` | 1.0 |
//! | `env.heterogeneous` | false |
//! | `env.instance_seed` | 0 |
//! | `sched.kind` | `increasing` (`constant`, `decreasing`, `binomial`, `poisson`, `geometric`, `uniform`, `lognormal`) |
//! | `sched.jobs` | 9 for monotone hazards, 10 constant, 4 distributions |
//! | `sched.lambda` | 0.8 |
//! | `sched.n`, `sched.p` | 10, 0.5 |
//! | `sched.mean` | 5 |
//! | `sched.q` | 0.5 |
//! | `sched.lo`, `sched.hi` | 0, 10 |
//! | `sched.delta` | 0.1 uniform, 0.5 lognormal |
//! | `sched.mu`, `sched.sigma`, `sched.max` | ln 30, 0.6, 75 |
//! | `run.algo` | `qgi` (`restart`, `qwi`, `dgn`) |
//! | `run.steps` | 20000 |
//! | `run.episodes` | 2500 |
//! | `run.seeds` | `0` |
//! | `run.cadence` | 1 |
//! | `run.out` | `out` |
//! | `rates.kind` | `auto` (`two_timescale`, `constant`) |
//! | `rates.x`, `rates.y`, `rates.theta`, `rates.kappa`, `rates.phi`, `rates.log_base` | tuned values for the algorithm |
//! | `rates.alpha`, `rates.beta` | constant rates; `rates.phi` gates beta |
//! | `epsilon.initial`, `epsilon.decay`, `epsilon.floor` | per environment |
//! | `dgn.batch_size`, `dgn.tau`, `dgn.sync_period`, `dgn.step_size`, `dgn.beta`, `dgn.beta_phi`, `dgn.encoding`, `dgn.replay_capacity` | 32, 1e-3, 10, 5e-3, 1, 5, `onehot`, 10000 |
//! | `grid.x_axis`, `grid.y_axis` | `x`, `y` |
//! | `grid.x_values`, `grid.y_values` | `0.05..0.5` and `0.1..1.0` in ten steps |
//! | `grid.runs` | 10 |
//! | `grid.deltas` | 0.05 |
//! | `grid.window` | 200 |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use crate::deep::{DgnConfig, Encoding};
use crate::env::{EpsilonSchedule, LearningRateSchedule, LogBase, RateRule};
use crate::error::{bad_config, Error, Result};
use crate::scheduling::{HazardKind, ServiceDist};
use crate::tabular::Algorithm;

const KEYS: &[&str] = &[
    "env.kind",
    "env.gamma",
    "env.arms",
    "env.states",
    "env.concentration",
    "env.heterogeneous",
    "env.instance_seed",
    "sched.kind",
    "sched.jobs",
    "sched.lambda",
    "sched.n",
    "sched.p",
    "sched.mean",
    "sched.q",
    "sched.lo",
    "sched.hi",
    "sched.delta",
    "sched.mu",
    "sched.sigma",
    "sched.max",
    "run.algo",
    "run.steps",
    "run.episodes",
    "run.seeds",
    "run.cadence",
    "run.out",
    "rates.kind",
    "rates.x",
    "rates.y",
    "rates.theta",
    "rates.kappa",
    "rates.phi",
    "rates.log_base",
    "rates.alpha",
    "rates.beta",
    "epsilon.initial",
    "epsilon.decay",
    "epsilon.floor",
    "dgn.batch_size",
    "dgn.tau",
    "dgn.sync_period",
    "dgn.step_size",
    "dgn.beta",
    "dgn.beta_phi",
    "dgn.encoding",
    "dgn.replay_capacity",
    "grid.x_axis",
    "grid.y_axis",
    "grid.x_values",
    "grid.y_values",
    "grid.runs",
    "grid.deltas",
    "grid.window",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchedulingKind {
    Hazard(HazardKind),
    Service(ServiceDist),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EnvSpec {
    Toy {
        arms: usize,
    },
    Dirichlet {
        arms: usize,
        states: usize,
        concentration: f64,
        heterogeneous: bool,
        instance_seed: u64,
    },
    Elementary,
    Scheduling {
        kind: SchedulingKind,
        jobs: usize,
        /// Hazard decay; unused by distribution batches.
        lambda: f64,
        instance_seed: u64,
    },
}

impl EnvSpec {
    pub fn is_scheduling(&self) -> bool {
        matches!(self, EnvSpec::Scheduling { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgoChoice {
    Tabular(Algorithm),
    Dgn,
}

impl AlgoChoice {
    pub fn parse(s: &str) -> Option<Self> {
        if s == "dgn" {
            Some(AlgoChoice::Dgn)
        } else {
            Algorithm::parse(s).map(AlgoChoice::Tabular)
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AlgoChoice::Tabular(a) => a.name(),
            AlgoChoice::Dgn => "dgn",
        }
    }
}

/// Step-size family as written in the config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatesSpec {
    TwoTimescale {
        x: f64,
        y: f64,
        theta: u64,
        kappa: u64,
        phi: u64,
        base: LogBase,
    },
    Constant {
        alpha: f64,
        beta: f64,
        phi: u64,
    },
}

impl RatesSpec {
    pub fn schedule(&self) -> Result<LearningRateSchedule> {
        match *self {
            RatesSpec::TwoTimescale {
                x,
                y,
                theta,
                kappa,
                phi,
                base,
            } => LearningRateSchedule::two_timescale_with_base(x, y, theta, kappa, phi, base),
            RatesSpec::Constant { alpha, beta, phi } => LearningRateSchedule::constant(alpha, beta, phi),
        }
    }

    /// Value of a named two-timescale parameter.
    pub fn get(&self, name: &str) -> Option<f64> {
        match *self {
            RatesSpec::TwoTimescale {
                x,
                y,
                theta,
                kappa,
                phi,
                ..
            } => match name {
                "x" => Some(x),
                "y" => Some(y),
                "theta" => Some(theta as f64),
                "kappa" => Some(kappa as f64),
                "phi" => Some(phi as f64),
                _ => None,
            },
            RatesSpec::Constant { .. } => None,
        }
    }

    /// Copy with a named two-timescale parameter replaced.
    pub fn with(&self, name: &str, v: f64) -> Result<Self> {
        let RatesSpec::TwoTimescale {
            mut x,
            mut y,
            mut theta,
            mut kappa,
            mut phi,
            base,
        } = *self
        else {
            return Err(bad_config("grid axes need two-timescale rates"));
        };
        let int = |v: f64| -> Result<u64> {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as u64)
            } else {
                Err(bad_config(format!("{name} must be a positive integer, got {v}")))
            }
        };
        match name {
            "x" => x = v,
            "y" => y = v,
            "theta" => theta = int(v)?,
            "kappa" => kappa = int(v)?,
            "phi" => phi = int(v)?,
            _ => return Err(bad_config(format!("unknown grid axis {name}"))),
        }
        Ok(RatesSpec::TwoTimescale {
            x,
            y,
            theta,
            kappa,
            phi,
            base,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub x_axis: String,
    pub y_axis: String,
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    pub runs: usize,
    pub deltas: Vec<f64>,
    pub window: usize,
}

impl GridSpec {
    pub fn default_axes() -> Self {
        Self {
            x_axis: "x".into(),
            y_axis: "y".into(),
            x_values: (1..=10).map(|i| (5 * i) as f64 / 100.0).collect(),
            y_values: (1..=10).map(|i| i as f64 / 10.0).collect(),
            runs: 10,
            deltas: vec![0.05],
            window: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvSpec,
    pub gamma: f64,
    pub algo: AlgoChoice,
    pub rates: RatesSpec,
    pub epsilon: EpsilonSchedule,
    pub steps: u64,
    pub episodes: u64,
    pub seeds: Vec<u64>,
    pub cadence: u64,
    pub out: PathBuf,
    pub dgn: DgnConfig,
    pub grid: GridSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::parse("").expect("defaults are valid")
    }
}

struct Raw {
    map: BTreeMap<String, (usize, String)>,
}

impl Raw {
    fn str(&self, k: &str) -> Option<&str> {
        self.map.get(k).map(|(_, v)| v.as_str())
    }

    fn err(&self, k: &str, msg: impl std::fmt::Display) -> Error {
        match self.map.get(k) {
            Some((0, v)) => bad_config(format!("{k} = {v}: {msg}")),
            Some((line, v)) => Error::Parse {
                line: *line,
                message: format!("{k} = {v}: {msg}"),
            },
            None => bad_config(format!("{k}: {msg}")),
        }
    }

    fn num<T: std::str::FromStr>(&self, k: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.str(k) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| self.err(k, e)),
        }
    }

    fn list(&self, k: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        match self.str(k) {
            None => Ok(default),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| self.err(k, e)))
                .collect(),
        }
    }
}

/// Parses `0`, `0,3,5` or `0..10`.
pub fn parse_seeds(s: &str) -> Option<Vec<u64>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (a.trim().parse::<u64>().ok()?, b.trim().parse::<u64>().ok()?);
        return (a < b).then(|| (a..b).collect());
    }
    s.split(',').map(|p| p.trim().parse().ok()).collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_with(text, &[])
    }

    /// Parses `text`, then replaces or adds each `(key, value)` override.
    pub fn parse_with(text: &str, overrides: &[(&str, String)]) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("unknown key `{k}`"),
                });
            }
            if map.insert(k.to_string(), (i + 1, v.to_string())).is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("duplicate key `{k}`"),
                });
            }
        }
        for (k, v) in overrides {
            if !KEYS.contains(k) {
                return Err(bad_config(format!("unknown key `{k}`")));
            }
            map.insert(k.to_string(), (0, v.clone()));
        }
        let cfg = Self::resolve(&Raw { map })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Reads `path` when given, then applies `overrides`.
    pub fn load(path: Option<&std::path::Path>, overrides: &[(&str, String)]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)?,
            None => String::new(),
        };
        Self::parse_with(&text, overrides)
    }

    fn resolve(raw: &Raw) -> Result<Self> {
        let env_kind = raw.str("env.kind").unwrap_or("toy");
        let sched_kind = raw.str("sched.kind").unwrap_or("increasing");
        let algo_name = raw.str("run.algo").unwrap_or("qgi");
        let algo = AlgoChoice::parse(algo_name).ok_or_else(|| raw.err("run.algo", "expected qgi, restart, qwi or dgn"))?;

        let env = match env_kind {
            "toy" => EnvSpec::Toy {
                arms: raw.num("env.arms", 5)?,
            },
            "dirichlet" => EnvSpec::Dirichlet {
                arms: raw.num("env.arms", 5)?,
                states: raw.num("env.states", 50)?,
                concentration: raw.num("env.concentration", 1.0)?,
                heterogeneous: raw.num("env.heterogeneous", false)?,
                instance_seed: raw.num("env.instance_seed", 0)?,
            },
            "elementary" => EnvSpec::Elementary,
            "scheduling" => {
                let kind = match sched_kind {
                    "constant" | "increasing" | "decreasing" => {
                        SchedulingKind::Hazard(HazardKind::parse(sched_kind).expect("listed"))
                    }
                    "binomial" => SchedulingKind::Service(ServiceDist::Binomial {
                        n: raw.num("sched.n", 10)?,
                        p: raw.num("sched.p", 0.5)?,
                    }),
                    "poisson" => SchedulingKind::Service(ServiceDist::Poisson {
                        mean: raw.num("sched.mean", 5.0)?,
                    }),
                    "geometric" => SchedulingKind::Service(ServiceDist::Geometric {
                        q: raw.num("sched.q", 0.5)?,
                    }),
                    "uniform" => SchedulingKind::Service(ServiceDist::QuantizedUniform {
                        lo: raw.num("sched.lo", 0.0)?,
                        hi: raw.num("sched.hi", 10.0)?,
                        delta: raw.num("sched.delta", 0.1)?,
                    }),
                    "lognormal" => SchedulingKind::Service(ServiceDist::QuantizedLognormal {
                        mu: raw.num("sched.mu", 30f64.ln())?,
                        sigma: raw.num("sched.sigma", 0.6)?,
                        delta: raw.num("sched.delta", 0.5)?,
                        max: raw.num("sched.max", 75.0)?,
                    }),
                    _ => return Err(raw.err("sched.kind", "unknown scheduling kind")),
                };
                let default_jobs = match kind {
                    SchedulingKind::Hazard(HazardKind::Constant) => 10,
                    SchedulingKind::Hazard(_) => 9,
                    SchedulingKind::Service(_) => 4,
                };
                EnvSpec::Scheduling {
                    kind,
                    jobs: raw.num("sched.jobs", default_jobs)?,
                    lambda: raw.num("sched.lambda", 0.8)?,
                    instance_seed: raw.num("env.instance_seed", 0)?,
                }
            }
            _ => return Err(raw.err("env.kind", "expected toy, dirichlet, elementary or scheduling")),
        };

        let default_gamma = match env {
            EnvSpec::Scheduling {
                kind: SchedulingKind::Hazard(HazardKind::Constant) | SchedulingKind::Service(_),
                ..
            } => 0.99,
            _ => 0.9,
        };
        let gamma = raw.num("env.gamma", default_gamma)?;

        let rates = Self::resolve_rates(raw, &env, algo)?;
        let epsilon = Self::resolve_epsilon(raw, &env)?;

        let seeds = match raw.str("run.seeds") {
            None => vec![0],
            Some(s) => parse_seeds(s).ok_or_else(|| raw.err("run.seeds", "expected a list or a..b range"))?,
        };

        let toy = DgnConfig::toy();
        let encoding = match raw.str("dgn.encoding") {
            None => toy.encoding,
            Some(s) => Encoding::parse(s).ok_or_else(|| raw.err("dgn.encoding", "expected onehot or scalar"))?,
        };
        let cadence = raw.num("run.cadence", 1)?;
        let dgn = DgnConfig {
            batch_size: raw.num("dgn.batch_size", toy.batch_size)?,
            tau: raw.num("dgn.tau", toy.tau)?,
            sync_period: raw.num("dgn.sync_period", toy.sync_period)?,
            step_size: raw.num("dgn.step_size", toy.step_size)?,
            beta: RateRule::Constant {
                value: raw.num("dgn.beta", 1.0)?,
                phi: raw.num("dgn.beta_phi", 5)?,
            },
            encoding,
            replay_capacity: raw.num("dgn.replay_capacity", toy.replay_capacity)?,
            cadence,
        };

        let d = GridSpec::default_axes();
        let grid = GridSpec {
            x_axis: raw.str("grid.x_axis").unwrap_or(&d.x_axis).to_string(),
            y_axis: raw.str("grid.y_axis").unwrap_or(&d.y_axis).to_string(),
            x_values: raw.list("grid.x_values", d.x_values)?,
            y_values: raw.list("grid.y_values", d.y_values)?,
            runs: raw.num("grid.runs", d.runs)?,
            deltas: raw.list("grid.deltas", d.deltas)?,
            window: raw.num("grid.window", d.window)?,
        };

        Ok(Self {
            env,
            gamma,
            algo,
            rates,
            epsilon,
            steps: raw.num("run.steps", 20_000)?,
            episodes: raw.num("run.episodes", 2500)?,
            seeds,
            cadence,
            out: PathBuf::from(raw.str("run.out").unwrap_or("out")),
            dgn,
            grid,
        })
    }

    /// Tuned rates: the toy two-timescale schedules, and the scheduling
    /// table for batches.
    fn resolve_rates(raw: &Raw, env: &EnvSpec, algo: AlgoChoice) -> Result<RatesSpec> {
        let kind = raw.str("rates.kind").unwrap_or("auto");
        let default = match (env, algo) {
            (EnvSpec::Scheduling { kind, .. }, AlgoChoice::Tabular(a)) => {
                let distribution = matches!(kind, SchedulingKind::Service(_));
                let constant = matches!(kind, SchedulingKind::Hazard(HazardKind::Constant));
                match a {
                    Algorithm::Restart => RatesSpec::Constant {
                        alpha: if constant { 0.2 } else { 0.3 },
                        beta: 0.0,
                        phi: 1,
                    },
                    _ if distribution => RatesSpec::Constant {
                        alpha: 0.6,
                        beta: 0.3,
                        phi: 2,
                    },
                    _ => RatesSpec::Constant {
                        alpha: 0.6,
                        beta: 0.4,
                        phi: 5,
                    },
                }
            }
            (_, AlgoChoice::Tabular(Algorithm::Restart)) => RatesSpec::Constant {
                alpha: 0.2,
                beta: 0.0,
                phi: 1,
            },
            (_, AlgoChoice::Tabular(Algorithm::Qwi)) => RatesSpec::TwoTimescale {
                x: 0.1,
                y: 0.2,
                theta: 5000,
                kappa: 5000,
                phi: 10,
                base: LogBase::Natural,
            },
            _ => RatesSpec::TwoTimescale {
                x: 0.2,
                y: 0.6,
                theta: 5000,
                kappa: 5000,
                phi: 10,
                base: LogBase::Natural,
            },
        };
        let as_two = |d: &RatesSpec| -> Result<RatesSpec> {
            let (dx, dy, dt, dk, dp) = match *d {
                RatesSpec::TwoTimescale {
                    x,
                    y,
                    theta,
                    kappa,
                    phi,
                    ..
                } => (x, y, theta, kappa, phi),
                RatesSpec::Constant { .. } => (0.2, 0.6, 5000, 5000, 10),
            };
            let base = match raw.str("rates.log_base") {
                None => LogBase::Natural,
                Some(s) => LogBase::parse(s).ok_or_else(|| raw.err("rates.log_base", "expected e, 2 or 10"))?,
            };
            Ok(RatesSpec::TwoTimescale {
                x: raw.num("rates.x", dx)?,
                y: raw.num("rates.y", dy)?,
                theta: raw.num("rates.theta", dt)?,
                kappa: raw.num("rates.kappa", dk)?,
                phi: raw.num("rates.phi", dp)?,
                base,
            })
        };
        let as_const = |d: &RatesSpec| -> Result<RatesSpec> {
            let (da, db, dp) = match *d {
                RatesSpec::Constant { alpha, beta, phi } => (alpha, beta, phi),
                RatesSpec::TwoTimescale { .. } => (0.2, 0.0, 1),
            };
            Ok(RatesSpec::Constant {
                alpha: raw.num("rates.alpha", da)?,
                beta: raw.num("rates.beta", db)?,
                phi: raw.num("rates.phi", dp)?,
            })
        };
        match kind {
            "auto" => match default {
                RatesSpec::TwoTimescale { .. } => as_two(&default),
                RatesSpec::Constant { .. } => as_const(&default),
            },
            "two_timescale" => as_two(&default),
            "constant" => as_const(&default),
            _ => Err(raw.err("rates.kind", "expected auto, two_timescale or constant")),
        }
    }

    fn resolve_epsilon(raw: &Raw, env: &EnvSpec) -> Result<EpsilonSchedule> {
        let (i, d, f) = match env {
            EnvSpec::Scheduling { kind, .. } => match kind {
                SchedulingKind::Hazard(_) => (1.0, 0.9985, 0.0),
                SchedulingKind::Service(ServiceDist::QuantizedUniform { .. }) => (0.1, 1.0, 0.1),
                SchedulingKind::Service(ServiceDist::QuantizedLognormal { .. }) => (1.0, 0.999, 0.1),
                SchedulingKind::Service(_) => (1.0, 0.9995, 0.0),
            },
            _ => (1.0, 1.0, 1.0),
        };
        let initial = raw.num("epsilon.initial", i)?;
        let decay = raw.num("epsilon.decay", d)?;
        // a constant schedule keeps its floor at the initial value
        let floor = raw.num("epsilon.floor", if decay == 1.0 { initial } else { f })?;
        EpsilonSchedule::new(initial, decay, floor)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(bad_config(format!("env.gamma = {} outside (0,1)", self.gamma)));
        }
        if self.seeds.is_empty() {
            return Err(bad_config("run.seeds is empty"));
        }
        if self.cadence == 0 || self.steps == 0 || self.episodes == 0 {
            return Err(bad_config("run.cadence, run.steps and run.episodes must be >= 1"));
        }
        match self.env {
            EnvSpec::Toy { arms } | EnvSpec::Dirichlet { arms, .. } if arms == 0 => {
                return Err(bad_config("env.arms must be >= 1"));
            }
            EnvSpec::Dirichlet {
                states, concentration, ..
            } if states < 2 || concentration <= 0.0 => {
                return Err(bad_config("dirichlet needs env.states >= 2 and env.concentration > 0"));
            }
            EnvSpec::Scheduling { kind, jobs, lambda, .. } => {
                if jobs == 0 {
                    return Err(bad_config("sched.jobs must be >= 1"));
                }
                if let SchedulingKind::Service(d) = kind {
                    d.validate()?;
                }
                if !(lambda > 0.0 && lambda < 1.0) {
                    return Err(bad_config("sched.lambda outside (0,1)"));
                }
                if !matches!(self.algo, AlgoChoice::Tabular(Algorithm::Qgi | Algorithm::Restart)) {
                    return Err(bad_config("scheduling runs support qgi and restart"));
                }
            }
            _ => {}
        }
        self.rates.schedule()?;
        self.epsilon.validate()?;
        self.dgn.validate()?;
        let g = &self.grid;
        if g.runs == 0 || g.window == 0 || g.x_values.is_empty() || g.y_values.is_empty() || g.deltas.is_empty() {
            return Err(bad_config("grid needs runs, window, axis values and deltas"));
        }
        if g.x_axis == g.y_axis {
            return Err(bad_config("grid axes must differ"));
        }
        for (axis, vals) in [(&g.x_axis, &g.x_values), (&g.y_axis, &g.y_values)] {
            if !["x", "y", "theta", "kappa", "phi"].contains(&axis.as_str()) {
                return Err(bad_config(format!("unknown grid axis {axis}")));
            }
            if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(bad_config(format!("grid values for {axis} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// The fully resolved config in the input format; parsing it back gives
    /// the same config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        match &self.env {
            EnvSpec::Toy { arms } => {
                kv("env.kind", "toy".into());
                kv("env.arms", arms.to_string());
            }
            EnvSpec::Dirichlet {
                arms,
                states,
                concentration,
                heterogeneous,
                instance_seed,
            } => {
                kv("env.kind", "dirichlet".into());
                kv("env.arms", arms.to_string());
                kv("env.states", states.to_string());
                kv("env.concentration", format!("{concentration}"));
                kv("env.heterogeneous", heterogeneous.to_string());
                kv("env.instance_seed", instance_seed.to_string());
            }
            EnvSpec::Elementary => kv("env.kind", "elementary".into()),
            EnvSpec::Scheduling {
                kind,
                jobs,
                lambda,
                instance_seed,
            } => {
                kv("env.kind", "scheduling".into());
                kv("env.instance_seed", instance_seed.to_string());
                match *kind {
                    SchedulingKind::Hazard(h) => kv("sched.kind", h.name().into()),
                    SchedulingKind::Service(d) => match d {
                        ServiceDist::Binomial { n, p } => {
                            kv("sched.kind", "binomial".into());
                            kv("sched.n", n.to_string());
                            kv("sched.p", format!("{p}"));
                        }
                        ServiceDist::Poisson { mean } => {
                            kv("sched.kind", "poisson".into());
                            kv("sched.mean", format!("{mean}"));
                        }
                        ServiceDist::Geometric { q } => {
                            kv("sched.kind", "geometric".into());
                            kv("sched.q", format!("{q}"));
                        }
                        ServiceDist::QuantizedUniform { lo, hi, delta } => {
                            kv("sched.kind", "uniform".into());
                            kv("sched.lo", format!("{lo}"));
                            kv("sched.hi", format!("{hi}"));
                            kv("sched.delta", format!("{delta}"));
                        }
                        ServiceDist::QuantizedLognormal { mu, sigma, delta, max } => {
                            kv("sched.kind", "lognormal".into());
                            kv("sched.mu", format!("{mu}"));
                            kv("sched.sigma", format!("{sigma}"));
                            kv("sched.delta", format!("{delta}"));
                            kv("sched.max", format!("{max}"));
                        }
                    },
                }
                kv("sched.jobs", jobs.to_string());
                kv("sched.lambda", format!("{lambda}"));
            }
        }
        kv("env.gamma", format!("{}", self.gamma));
        kv("run.algo", self.algo.name().into());
        kv("run.steps", self.steps.to_string());
        kv("run.episodes", self.episodes.to_string());
        kv(
            "run.seeds",
            self.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(","),
        );
        kv("run.cadence", self.cadence.to_string());
        kv("run.out", self.out.display().to_string());
        match self.rates {
            RatesSpec::TwoTimescale {
                x,
                y,
                theta,
                kappa,
                phi,
                base,
            } => {
                kv("rates.kind", "two_timescale".into());
                kv("rates.x", format!("{x}"));
                kv("rates.y", format!("{y}"));
                kv("rates.theta", theta.to_string());
                kv("rates.kappa", kappa.to_string());
                kv("rates.phi", phi.to_string());
                kv("rates.log_base", base.name().into());
            }
            RatesSpec::Constant { alpha, beta, phi } => {
                kv("rates.kind", "constant".into());
                kv("rates.alpha", format!("{alpha}"));
                kv("rates.beta", format!("{beta}"));
                kv("rates.phi", phi.to_string());
            }
        }
        kv("epsilon.initial", format!("{}", self.epsilon.initial));
        kv("epsilon.decay", format!("{}", self.epsilon.decay));
        kv("epsilon.floor", format!("{}", self.epsilon.floor));
        let d = &self.dgn;
        kv("dgn.batch_size", d.batch_size.to_string());
        kv("dgn.tau", format!("{}", d.tau));
        kv("dgn.sync_period", d.sync_period.to_string());
        kv("dgn.step_size", format!("{}", d.step_size));
        if let RateRule::Constant { value, phi } = d.beta {
            kv("dgn.beta", format!("{value}"));
            kv("dgn.beta_phi", phi.to_string());
        }
        kv("dgn.encoding", d.encoding.name().into());
        kv("dgn.replay_capacity", d.replay_capacity.to_string());
        let g = &self.grid;
        kv("grid.x_axis", g.x_axis.clone());
        kv("grid.y_axis", g.y_axis.clone());
        kv("grid.x_values", fmt_list(&g.x_values));
        kv("grid.y_values", fmt_list(&g.y_values));
        kv("grid.runs", g.runs.to_string());
        kv("grid.deltas", fmt_list(&g.deltas));
        kv("grid.window", g.window.to_string());
        s
    }
}
