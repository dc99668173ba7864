//! Learner tables and their per-step updates.
//!
//! Every table is indexed by reference state `x` first, then state `s`
//! (then action, where stored). Action `1` is continue, action `0` is the
//! restart (restart-in-state) or passive (QWI) action.

use std::fmt;

use crate::error::{invalid, Result};

/// Cumulative update accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct UpdateCounters {
    pub q_updates: u64,
    pub index_updates: u64,
    pub steps: u64,
}

impl std::ops::AddAssign for UpdateCounters {
    fn add_assign(&mut self, o: Self) {
        self.q_updates += o.q_updates;
        self.index_updates += o.index_updates;
        self.steps += o.steps;
    }
}

/// One active pull as seen by a learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pull {
    pub table: usize,
    pub state: usize,
    pub reward: f64,
    pub next_state: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Qgi,
    Restart,
    Qwi,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Qgi => "qgi",
            Algorithm::Restart => "restart",
            Algorithm::Qwi => "qwi",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qgi" => Some(Algorithm::Qgi),
            "restart" | "restart-in-state" => Some(Algorithm::Restart),
            "qwi" => Some(Algorithm::Qwi),
            _ => None,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

fn check_shape(num_states: usize, tables: usize) -> Result<()> {
    if num_states == 0 || tables == 0 {
        return Err(invalid("learner needs at least one state and one table"));
    }
    Ok(())
}

/// QGI: continue-action Q-values and retirement estimates `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct QgiState {
    n: usize,
    tables: usize,
    q: Vec<f64>,
    m: Vec<f64>,
}

impl QgiState {
    pub fn new(num_states: usize, tables: usize) -> Result<Self> {
        check_shape(num_states, tables)?;
        Ok(Self {
            n: num_states,
            tables,
            q: vec![0.0; tables * num_states * num_states],
            m: vec![0.0; tables * num_states],
        })
    }

    fn qi(&self, t: usize, x: usize, s: usize) -> usize {
        (t * self.n + x) * self.n + s
    }

    /// `Q^x(s, 1)` of table `t`.
    pub fn q(&self, t: usize, x: usize, s: usize) -> f64 {
        self.q[self.qi(t, x, s)]
    }

    pub fn set_q(&mut self, t: usize, x: usize, s: usize, v: f64) {
        let i = self.qi(t, x, s);
        self.q[i] = v;
    }

    pub fn m(&self, t: usize, x: usize) -> f64 {
        self.m[t * self.n + x]
    }

    pub fn set_m(&mut self, t: usize, x: usize, v: f64) {
        self.m[t * self.n + x] = v;
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    pub fn num_tables(&self) -> usize {
        self.tables
    }

    pub fn tracked_entries(&self) -> usize {
        self.q.len() + self.m.len()
    }

    /// Q-learning on every reference state of the pulled table, then (when
    /// `beta > 0`) relaxation of `M` towards the fresh diagonal for every
    /// table.
    pub fn step(&mut self, p: &Pull, alpha: f64, beta: f64, gamma: f64) -> UpdateCounters {
        let n = self.n;
        let t = p.table;
        for x in 0..n {
            let boot = self.q(t, x, p.next_state).max(self.m(t, x));
            let i = self.qi(t, x, p.state);
            self.q[i] = (1.0 - alpha) * self.q[i] + alpha * (p.reward + gamma * boot);
        }
        let mut delta = UpdateCounters {
            q_updates: n as u64,
            index_updates: 0,
            steps: 1,
        };
        if beta > 0.0 {
            for t in 0..self.tables {
                for x in 0..n {
                    let diag = self.q(t, x, x);
                    let m = &mut self.m[t * n + x];
                    *m += beta * (diag - *m);
                }
            }
            delta.index_updates = (self.tables * n) as u64;
        }
        delta
    }

    pub fn index(&self, t: usize, x: usize, gamma: f64) -> f64 {
        (1.0 - gamma) * self.m(t, x)
    }

    /// `max{Q^x(x,1), M(x)}`.
    pub fn state_value(&self, t: usize, x: usize) -> f64 {
        self.q(t, x, x).max(self.m(t, x))
    }
}

/// Restart-in-state: Q-values for continue and restart.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartState {
    n: usize,
    tables: usize,
    q: Vec<f64>,
}

impl RestartState {
    pub fn new(num_states: usize, tables: usize) -> Result<Self> {
        check_shape(num_states, tables)?;
        Ok(Self {
            n: num_states,
            tables,
            q: vec![0.0; tables * num_states * num_states * 2],
        })
    }

    fn qi(&self, t: usize, x: usize, s: usize, a: usize) -> usize {
        ((t * self.n + x) * self.n + s) * 2 + a
    }

    pub fn q(&self, t: usize, x: usize, s: usize, a: usize) -> f64 {
        self.q[self.qi(t, x, s, a)]
    }

    pub fn set_q(&mut self, t: usize, x: usize, s: usize, a: usize, v: f64) {
        let i = self.qi(t, x, s, a);
        self.q[i] = v;
    }

    fn vmax(&self, t: usize, x: usize, s: usize) -> f64 {
        self.q(t, x, s, 0).max(self.q(t, x, s, 1))
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    pub fn num_tables(&self) -> usize {
        self.tables
    }

    pub fn tracked_entries(&self) -> usize {
        self.q.len()
    }

    /// One observed pull updates the continue value in every reference
    /// problem and, in the problem referenced at `s_n`, the restart value of
    /// every state. Targets are read before any write.
    pub fn step(&mut self, p: &Pull, alpha: f64, gamma: f64) -> UpdateCounters {
        let n = self.n;
        let t = p.table;
        let cont: Vec<f64> = (0..n)
            .map(|k| p.reward + gamma * self.vmax(t, k, p.next_state))
            .collect();
        let restart = p.reward + gamma * self.vmax(t, p.state, p.next_state);
        for (k, target) in cont.into_iter().enumerate() {
            let i = self.qi(t, k, p.state, 1);
            self.q[i] = (1.0 - alpha) * self.q[i] + alpha * target;
        }
        for k in 0..n {
            let i = self.qi(t, p.state, k, 0);
            self.q[i] = (1.0 - alpha) * self.q[i] + alpha * restart;
        }
        UpdateCounters {
            q_updates: 2 * n as u64,
            index_updates: 0,
            steps: 1,
        }
    }

    pub fn index(&self, t: usize, x: usize, gamma: f64) -> f64 {
        (1.0 - gamma) * self.q(t, x, x, 1)
    }

    pub fn state_value(&self, t: usize, x: usize) -> f64 {
        self.vmax(t, x, x)
    }
}

/// QWI: Q-values for both actions and Whittle subsidies `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct QwiState {
    n: usize,
    tables: usize,
    q: Vec<f64>,
    lambda: Vec<f64>,
}

impl QwiState {
    pub fn new(num_states: usize, tables: usize) -> Result<Self> {
        check_shape(num_states, tables)?;
        Ok(Self {
            n: num_states,
            tables,
            q: vec![0.0; tables * num_states * num_states * 2],
            lambda: vec![0.0; tables * num_states],
        })
    }

    fn qi(&self, t: usize, x: usize, s: usize, a: usize) -> usize {
        ((t * self.n + x) * self.n + s) * 2 + a
    }

    pub fn q(&self, t: usize, x: usize, s: usize, a: usize) -> f64 {
        self.q[self.qi(t, x, s, a)]
    }

    pub fn set_q(&mut self, t: usize, x: usize, s: usize, a: usize, v: f64) {
        let i = self.qi(t, x, s, a);
        self.q[i] = v;
    }

    pub fn lambda(&self, t: usize, x: usize) -> f64 {
        self.lambda[t * self.n + x]
    }

    pub fn set_lambda(&mut self, t: usize, x: usize, v: f64) {
        self.lambda[t * self.n + x] = v;
    }

    fn vmax(&self, t: usize, x: usize, s: usize) -> f64 {
        self.q(t, x, s, 0).max(self.q(t, x, s, 1))
    }

    pub fn num_states(&self) -> usize {
        self.n
    }

    pub fn num_tables(&self) -> usize {
        self.tables
    }

    pub fn tracked_entries(&self) -> usize {
        self.q.len() + self.lambda.len()
    }

    /// Active update for the pulled arm and one passive update per frozen
    /// arm `(table, state)`, for every reference state; then subsidy
    /// relaxation when `beta > 0`. All targets of a step are computed from
    /// the pre-step table.
    pub fn step(&mut self, p: &Pull, passive: &[(usize, usize)], alpha: f64, beta: f64, gamma: f64) -> UpdateCounters {
        let n = self.n;
        let mut writes: Vec<(usize, f64)> = Vec::with_capacity(n * (1 + passive.len()));
        for x in 0..n {
            let target = p.reward + gamma * self.vmax(p.table, x, p.next_state);
            writes.push((self.qi(p.table, x, p.state, 1), target));
            for &(t, s) in passive {
                let target = self.lambda(t, x) + gamma * self.vmax(t, x, s);
                writes.push((self.qi(t, x, s, 0), target));
            }
        }
        for (i, target) in writes {
            self.q[i] = (1.0 - alpha) * self.q[i] + alpha * target;
        }
        let mut delta = UpdateCounters {
            q_updates: (n * (1 + passive.len())) as u64,
            index_updates: 0,
            steps: 1,
        };
        if beta > 0.0 {
            for t in 0..self.tables {
                for x in 0..n {
                    let gap = self.q(t, x, x, 1) - self.q(t, x, x, 0);
                    self.lambda[t * n + x] += beta * gap;
                }
            }
            delta.index_updates = (self.tables * n) as u64;
        }
        delta
    }

    pub fn index(&self, t: usize, x: usize) -> f64 {
        self.lambda(t, x)
    }

    pub fn state_value(&self, t: usize, x: usize) -> f64 {
        self.vmax(t, x, x)
    }
}

/// Any of the three tabular learners.
#[derive(Debug, Clone, PartialEq)]
pub enum TabularLearner {
    Qgi(QgiState),
    Restart(RestartState),
    Qwi(QwiState),
}

impl TabularLearner {
    pub fn new(algo: Algorithm, num_states: usize, tables: usize) -> Result<Self> {
        Ok(match algo {
            Algorithm::Qgi => Self::Qgi(QgiState::new(num_states, tables)?),
            Algorithm::Restart => Self::Restart(RestartState::new(num_states, tables)?),
            Algorithm::Qwi => Self::Qwi(QwiState::new(num_states, tables)?),
        })
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Self::Qgi(_) => Algorithm::Qgi,
            Self::Restart(_) => Algorithm::Restart,
            Self::Qwi(_) => Algorithm::Qwi,
        }
    }

    pub fn num_states(&self) -> usize {
        match self {
            Self::Qgi(s) => s.num_states(),
            Self::Restart(s) => s.num_states(),
            Self::Qwi(s) => s.num_states(),
        }
    }

    pub fn num_tables(&self) -> usize {
        match self {
            Self::Qgi(s) => s.num_tables(),
            Self::Restart(s) => s.num_tables(),
            Self::Qwi(s) => s.num_tables(),
        }
    }

    pub fn tracked_entries(&self) -> usize {
        match self {
            Self::Qgi(s) => s.tracked_entries(),
            Self::Restart(s) => s.tracked_entries(),
            Self::Qwi(s) => s.tracked_entries(),
        }
    }

    /// `passive` lists the frozen arms as `(table, state)`; only QWI reads it.
    pub fn update(&mut self, p: &Pull, passive: &[(usize, usize)], alpha: f64, beta: f64, gamma: f64) -> UpdateCounters {
        match self {
            Self::Qgi(s) => s.step(p, alpha, beta, gamma),
            Self::Restart(s) => s.step(p, alpha, gamma),
            Self::Qwi(s) => s.step(p, passive, alpha, beta, gamma),
        }
    }

    /// Learned index of state `x` in table `t`, on the per-step reward scale.
    pub fn index(&self, t: usize, x: usize, gamma: f64) -> f64 {
        match self {
            Self::Qgi(s) => s.index(t, x, gamma),
            Self::Restart(s) => s.index(t, x, gamma),
            Self::Qwi(s) => s.index(t, x),
        }
    }

    /// All learned indices, one vector per table.
    pub fn extract_indices(&self, gamma: f64) -> Vec<Vec<f64>> {
        (0..self.num_tables())
            .map(|t| (0..self.num_states()).map(|x| self.index(t, x, gamma)).collect())
            .collect()
    }

    /// Diagonal state values `V_t(x)` used for the Bellman relative error.
    pub fn state_values(&self) -> Vec<Vec<f64>> {
        (0..self.num_tables())
            .map(|t| {
                (0..self.num_states())
                    .map(|x| match self {
                        Self::Qgi(s) => s.state_value(t, x),
                        Self::Restart(s) => s.state_value(t, x),
                        Self::Qwi(s) => s.state_value(t, x),
                    })
                    .collect()
            })
            .collect()
    }
}
