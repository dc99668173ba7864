//! Job service models: hazard-rate jobs and jobs with a service-time
//! distribution, and the single-arm Markov chains they induce.
//!
//! State conventions, per kind:
//!
//! * hazard jobs (increasing / decreasing): state `s` in `1..N` is a job that
//!   has received `s - 1` quanta; state `0` is done. Serving in `s`
//!   completes with probability `rho^s`; state `N - 1` completes surely.
//! * constant-hazard jobs: two states, `1` alive and `0` done.
//! * distribution jobs: state `a` in `0..s_max` is the age in quanta; state
//!   `s_max` is done. Serving at age `a` completes iff `tau = a + 1`.

use rand_distr::{Binomial, Distribution, Geometric, LogNormal, Poisson, Uniform};
use statrs::distribution::{ContinuousCDF, DiscreteCDF};

use crate::env::{ArmModel, RandomSource};
use crate::error::{invalid, Result};

/// Default number of hazard-job states (maximum state 49).
pub const HAZARD_STATES: usize = 50;

/// Tail mass left outside a discrete state cap.
const CAP_TAIL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HazardKind {
    Constant,
    Increasing,
    Decreasing,
}

impl HazardKind {
    pub fn name(self) -> &'static str {
        match self {
            HazardKind::Constant => "constant",
            HazardKind::Increasing => "increasing",
            HazardKind::Decreasing => "decreasing",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "constant" => Some(HazardKind::Constant),
            "increasing" => Some(HazardKind::Increasing),
            "decreasing" => Some(HazardKind::Decreasing),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HazardSpec {
    pub kind: HazardKind,
    /// Hazard at the first serve, in `[0, 1]`.
    pub rho1: f64,
    /// Decay parameter, in `(0, 1)`.
    pub lambda: f64,
}

impl HazardSpec {
    pub fn new(kind: HazardKind, rho1: f64, lambda: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho1) {
            return Err(invalid(format!("rho1 = {rho1} outside [0,1]")));
        }
        if kind != HazardKind::Constant && !(lambda > 0.0 && lambda < 1.0) {
            return Err(invalid(format!("hazard decay {lambda} outside (0,1)")));
        }
        Ok(Self { kind, rho1, lambda })
    }

    pub fn constant(rho: f64) -> Result<Self> {
        Self::new(HazardKind::Constant, rho, 0.5)
    }
}

/// Completion probability `rho^s` at state `s >= 1`.
pub fn hazard_rate(spec: &HazardSpec, s: usize) -> Result<f64> {
    if s == 0 {
        return Err(invalid("hazard states start at 1"));
    }
    let (r1, l) = (spec.rho1, spec.lambda);
    Ok(match spec.kind {
        HazardKind::Constant => r1,
        HazardKind::Increasing => 1.0 - (1.0 - r1) * l.powi(s as i32 - 1),
        HazardKind::Decreasing if s == 1 => r1,
        HazardKind::Decreasing => 1.0 - (1.0 - r1) * l.powf(1.0 / (s as f64 - 1.0)),
    })
}

/// Service-time families. Continuous families are served in quanta of
/// `delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ServiceDist {
    Binomial { n: u64, p: f64 },
    Poisson { mean: f64 },
    Geometric { q: f64 },
    QuantizedUniform { lo: f64, hi: f64, delta: f64 },
    QuantizedLognormal { mu: f64, sigma: f64, delta: f64, max: f64 },
}

impl ServiceDist {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ServiceDist::Binomial { n, p } => n >= 1 && (0.0..=1.0).contains(&p),
            ServiceDist::Poisson { mean } => mean > 0.0 && mean.is_finite(),
            ServiceDist::Geometric { q } => q > 0.0 && q <= 1.0,
            ServiceDist::QuantizedUniform { lo, hi, delta } => lo >= 0.0 && hi > lo && delta > 0.0,
            ServiceDist::QuantizedLognormal { sigma, delta, max, .. } => sigma > 0.0 && delta > 0.0 && max > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid service distribution {self:?}")))
        }
    }

    /// Largest service time in quanta; draws above it are clamped.
    pub fn s_max(&self) -> usize {
        match *self {
            ServiceDist::Binomial { n, .. } => n as usize,
            ServiceDist::Poisson { mean } => {
                let d = statrs::distribution::Poisson::new(mean).expect("validated");
                (1u64..).find(|&s| d.cdf(s) >= 1.0 - CAP_TAIL).unwrap_or(1) as usize
            }
            ServiceDist::Geometric { q } => {
                let d = statrs::distribution::Geometric::new(q).expect("validated");
                (1u64..).find(|&s| d.cdf(s) >= 1.0 - CAP_TAIL).unwrap_or(1) as usize
            }
            ServiceDist::QuantizedUniform { hi, delta, .. } => quanta(hi, delta),
            ServiceDist::QuantizedLognormal { delta, max, .. } => quanta(max, delta),
        }
    }

    fn clamp(&self, raw: u64) -> usize {
        (raw as usize).clamp(1, self.s_max())
    }

    /// One service time in whole quanta, in `[1, s_max]`.
    pub fn sample(&self, rng: &mut RandomSource) -> usize {
        let r = rng.inner();
        match *self {
            ServiceDist::Binomial { n, p } => self.clamp(Binomial::new(n, p).expect("validated").sample(r)),
            ServiceDist::Poisson { mean } => self.clamp(Poisson::new(mean).expect("validated").sample(r) as u64),
            ServiceDist::Geometric { q } => self.clamp(Geometric::new(q).expect("validated").sample(r) + 1),
            ServiceDist::QuantizedUniform { lo, hi, delta } => {
                let x: f64 = Uniform::new(lo, hi).expect("validated").sample(r);
                self.clamp(quanta(x, delta) as u64)
            }
            ServiceDist::QuantizedLognormal { mu, sigma, delta, .. } => {
                let x: f64 = LogNormal::new(mu, sigma).expect("validated").sample(r);
                self.clamp(quanta(x, delta) as u64)
            }
        }
    }

    /// `P(tau = k)` for `k` in `1..=s_max`, including the clamped mass.
    pub fn pmf(&self) -> Vec<f64> {
        let smax = self.s_max();
        // cdf at the end of quantum k, before clamping
        let cdf: Box<dyn Fn(usize) -> f64> = match *self {
            ServiceDist::Binomial { n, p } => {
                let d = statrs::distribution::Binomial::new(p, n).expect("validated");
                Box::new(move |k| d.cdf(k as u64))
            }
            ServiceDist::Poisson { mean } => {
                let d = statrs::distribution::Poisson::new(mean).expect("validated");
                Box::new(move |k| d.cdf(k as u64))
            }
            ServiceDist::Geometric { q } => {
                let d = statrs::distribution::Geometric::new(q).expect("validated");
                Box::new(move |k| d.cdf(k as u64))
            }
            ServiceDist::QuantizedUniform { lo, hi, delta } => {
                let d = statrs::distribution::Uniform::new(lo, hi).expect("validated");
                Box::new(move |k| d.cdf(k as f64 * delta))
            }
            ServiceDist::QuantizedLognormal { mu, sigma, delta, .. } => {
                let d = statrs::distribution::LogNormal::new(mu, sigma).expect("validated");
                Box::new(move |k| if k == 0 { 0.0 } else { d.cdf(k as f64 * delta) })
            }
        };
        let mut pmf = Vec::with_capacity(smax);
        let mut prev = 0.0;
        for k in 1..=smax {
            let c = if k == smax { 1.0 } else { cdf(k) };
            pmf.push((c - prev).max(0.0));
            prev = c;
        }
        pmf
    }

    pub fn mean(&self) -> f64 {
        self.pmf().iter().enumerate().map(|(i, p)| (i + 1) as f64 * p).sum()
    }
}

/// Whole quanta needed to cover `x` units of work: `ceil(x / delta)`, with a
/// small guard against representation error (`0.3 / 0.1` is `2.9999...`).
fn quanta(x: f64, delta: f64) -> usize {
    let q = x / delta;
    let r = q.round();
    if (q - r).abs() < 1e-9 {
        r as usize
    } else {
        q.ceil() as usize
    }
}

/// A single job's service model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JobSpec {
    Hazard(HazardSpec),
    Service(ServiceDist),
}

impl JobSpec {
    /// Number of arm states, done state included.
    pub fn num_states(&self) -> usize {
        match self {
            JobSpec::Hazard(h) if h.kind == HazardKind::Constant => 2,
            JobSpec::Hazard(_) => HAZARD_STATES,
            JobSpec::Service(d) => d.s_max() + 1,
        }
    }

    pub fn start_state(&self) -> usize {
        match self {
            JobSpec::Hazard(_) => 1,
            JobSpec::Service(_) => 0,
        }
    }

    pub fn done_state(&self) -> usize {
        match self {
            JobSpec::Hazard(_) => 0,
            JobSpec::Service(d) => d.s_max(),
        }
    }

    /// State after one more quantum without completion.
    pub fn advance(&self, state: usize) -> usize {
        match self {
            JobSpec::Hazard(h) if h.kind == HazardKind::Constant => 1,
            JobSpec::Hazard(_) => (state + 1).min(HAZARD_STATES - 1),
            JobSpec::Service(d) => (state + 1).min(d.s_max() - 1),
        }
    }

    /// Completion probability when served in `state`.
    pub fn completion_prob(&self, state: usize) -> Result<f64> {
        match self {
            JobSpec::Hazard(h) => {
                if h.kind != HazardKind::Constant && state == HAZARD_STATES - 1 {
                    Ok(1.0)
                } else {
                    hazard_rate(h, state)
                }
            }
            JobSpec::Service(d) => {
                let pmf = d.pmf();
                if state + 1 >= pmf.len() {
                    return Ok(1.0);
                }
                let surv: f64 = pmf[state..].iter().sum();
                Ok(if surv <= 0.0 { 1.0 } else { (pmf[state] / surv).min(1.0) })
            }
        }
    }

    /// Service time in quanta (number of serves to completion).
    pub fn sample_service(&self, rng: &mut RandomSource) -> Result<usize> {
        match self {
            JobSpec::Service(d) => Ok(d.sample(rng)),
            JobSpec::Hazard(_) => {
                let mut state = self.start_state();
                let mut serves = 1;
                loop {
                    if rng.uniform() < self.completion_prob(state)? {
                        return Ok(serves);
                    }
                    state = self.advance(state);
                    serves += 1;
                }
            }
        }
    }

    /// The job as an arm: expected reward `P(complete | state)` on each serve.
    pub fn arm_model(&self) -> Result<ArmModel> {
        let n = self.num_states();
        let done = self.done_state();
        let mut p = vec![vec![0.0; n]; n];
        let mut r = vec![0.0; n];
        p[done][done] = 1.0;
        for s in (0..n).filter(|&s| s != done) {
            let h = self.completion_prob(s)?;
            let next = self.advance(s);
            p[s][done] += h;
            p[s][next] += 1.0 - h;
            r[s] = h;
        }
        ArmModel::new(p, r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::Discrete;

    #[test]
    fn hazard_examples() {
        let inc = HazardSpec::new(HazardKind::Increasing, 0.5, 0.8).unwrap();
        let want = [0.5, 0.6, 0.68];
        for (s, w) in (1..=3).zip(want) {
            assert!((hazard_rate(&inc, s).unwrap() - w).abs() < 1e-12);
        }
        let dec = HazardSpec::new(HazardKind::Decreasing, 0.5, 0.8).unwrap();
        assert_eq!(hazard_rate(&dec, 1).unwrap(), 0.5);
        assert!((hazard_rate(&dec, 2).unwrap() - 0.6).abs() < 1e-12);
        assert!((hazard_rate(&dec, 3).unwrap() - (1.0 - 0.5 * 0.8f64.sqrt())).abs() < 1e-12);
        assert!((hazard_rate(&dec, 3).unwrap() - 0.5528).abs() < 1e-4);
        let c = HazardSpec::constant(0.37).unwrap();
        for s in [1, 2, 17, 49] {
            assert_eq!(hazard_rate(&c, s).unwrap(), 0.37);
        }
        assert!(hazard_rate(&c, 0).is_err());
    }

    #[test]
    fn hazard_monotonicity() {
        for rho in [0.0, 0.1, 0.5, 0.93] {
            let inc = HazardSpec::new(HazardKind::Increasing, rho, 0.8).unwrap();
            let dec = HazardSpec::new(HazardKind::Decreasing, rho, 0.8).unwrap();
            for s in 1..49 {
                assert!(hazard_rate(&inc, s + 1).unwrap() >= hazard_rate(&inc, s).unwrap());
                if s >= 2 {
                    assert!(hazard_rate(&dec, s + 1).unwrap() <= hazard_rate(&dec, s).unwrap());
                }
            }
        }
    }

    #[test]
    fn uniform_quantized_support_and_mean() {
        let d = ServiceDist::QuantizedUniform {
            lo: 0.0,
            hi: 10.0,
            delta: 0.1,
        };
        assert_eq!(d.s_max(), 100);
        let mut rng = RandomSource::new(1);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let t = d.sample(&mut rng);
            assert!((1..=100).contains(&t));
            sum += t as f64;
        }
        assert!((sum / n as f64 - 50.0).abs() < 1.0);
        // exact quantized mean is 50.5
        assert!((d.mean() - 50.5).abs() < 1e-9);
    }

    #[test]
    fn geometric_first_quantum() {
        let d = ServiceDist::Geometric { q: 0.5 };
        let mut rng = RandomSource::new(2);
        let n = 100_000;
        let ones = (0..n).filter(|_| d.sample(&mut rng) == 1).count();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.01);
        assert!((d.pmf()[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lognormal_cap() {
        let d = ServiceDist::QuantizedLognormal {
            mu: 30f64.ln(),
            sigma: 0.6,
            delta: 0.5,
            max: 75.0,
        };
        assert_eq!(d.s_max(), 150);
        let mut rng = RandomSource::new(3);
        assert!((0..20_000).all(|_| d.sample(&mut rng) <= 150));
        // clamped tail mass P(X > 75)
        assert!((d.pmf()[149] - 0.06336).abs() < 2e-3);
    }

    #[test]
    fn discrete_caps_and_zero_clamp() {
        let p = ServiceDist::Poisson { mean: 5.0 };
        let cap = p.s_max();
        let d = statrs::distribution::Poisson::new(5.0).unwrap();
        assert!(d.cdf(cap as u64) >= 1.0 - 1e-6 && d.cdf(cap as u64 - 1) < 1.0 - 1e-6);
        // P(0) folds into the first quantum
        assert!((p.pmf()[0] - (d.pmf(0) + d.pmf(1))).abs() < 1e-12);
        let b = ServiceDist::Binomial { n: 10, p: 0.5 };
        assert_eq!(b.s_max(), 10);
        assert!((b.pmf().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut rng = RandomSource::new(5);
        assert!((0..10_000).all(|_| (1..=10).contains(&b.sample(&mut rng))));
    }

    #[test]
    fn sampling_matches_pmf() {
        let mut rng = RandomSource::new(8);
        for d in [
            ServiceDist::Binomial { n: 10, p: 0.5 },
            ServiceDist::Poisson { mean: 5.0 },
            ServiceDist::Geometric { q: 0.5 },
        ] {
            let pmf = d.pmf();
            let n = 100_000;
            let mut counts = vec![0usize; pmf.len()];
            for _ in 0..n {
                counts[d.sample(&mut rng) - 1] += 1;
            }
            for (c, p) in counts.iter().zip(&pmf) {
                assert!((*c as f64 / n as f64 - p).abs() < 0.01, "{d:?}");
            }
        }
    }

    #[test]
    fn constant_hazard_service_is_geometric() {
        let job = JobSpec::Hazard(HazardSpec::constant(0.3).unwrap());
        let mut rng = RandomSource::new(9);
        let n = 100_000;
        let mut counts = [0usize; 12];
        for _ in 0..n {
            let t = job.sample_service(&mut rng).unwrap();
            if t <= 12 {
                counts[t - 1] += 1;
            }
        }
        // chi-square over the first 12 cells
        let mut chi = 0.0;
        for (k, c) in counts.iter().enumerate() {
            let e = n as f64 * 0.3 * 0.7f64.powi(k as i32);
            chi += (*c as f64 - e).powi(2) / e;
        }
        // 99.9% quantile of chi-square with 11 degrees of freedom is 31.3
        assert!(chi < 31.3, "{chi}");
    }

    #[test]
    fn arm_models_are_stochastic() {
        let jobs = [
            JobSpec::Hazard(HazardSpec::new(HazardKind::Increasing, 0.2, 0.8).unwrap()),
            JobSpec::Hazard(HazardSpec::new(HazardKind::Decreasing, 0.2, 0.8).unwrap()),
            JobSpec::Hazard(HazardSpec::constant(0.6).unwrap()),
            JobSpec::Service(ServiceDist::Poisson { mean: 5.0 }),
        ];
        for j in jobs {
            let arm = j.arm_model().unwrap();
            assert_eq!(arm.num_states(), j.num_states());
            assert_eq!(arm.reward(j.done_state()), 0.0);
        }
    }

    #[test]
    fn distribution_hazard_recovers_pmf() {
        let job = JobSpec::Service(ServiceDist::Binomial { n: 10, p: 0.5 });
        let d = ServiceDist::Binomial { n: 10, p: 0.5 };
        let pmf = d.pmf();
        let mut surv = 1.0;
        for (a, p) in pmf.iter().enumerate() {
            let h = job.completion_prob(a).unwrap();
            assert!((surv * h - p).abs() < 1e-12);
            surv *= 1.0 - h;
        }
    }
}
