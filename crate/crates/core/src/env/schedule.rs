//! Step-size and exploration schedules.
//!
//! Step counters start at 1. The two-timescale family used throughout is
//!
//! ```text
//! alpha(n) = x / ceil(n / theta)
//! beta(n)  = y / (1 + ceil(n log n / kappa)) * 1{n mod phi == 0}
//! ```

use crate::error::{invalid, Result};

/// Base of the logarithm inside the slow-rate ceiling term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    Ten,
}

impl LogBase {
    fn log(self, v: f64) -> f64 {
        match self {
            LogBase::Natural => v.ln(),
            LogBase::Two => v.log2(),
            LogBase::Ten => v.log10(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LogBase::Natural => "e",
            LogBase::Two => "2",
            LogBase::Ten => "10",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "e" | "ln" | "natural" => Some(LogBase::Natural),
            "2" => Some(LogBase::Two),
            "10" => Some(LogBase::Ten),
            _ => None,
        }
    }
}

/// One step-size sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateRule {
    /// `scale / ceil(n / period)`
    Stepped { scale: f64, period: u64 },
    /// `scale / (1 + ceil(n log n / kappa))` on steps where `n mod phi == 0`, else 0.
    LogStepped { scale: f64, kappa: u64, phi: u64, base: LogBase },
    /// `value` on steps where `n mod phi == 0`, else 0.
    Constant { value: f64, phi: u64 },
    /// `scale / n^exponent`
    Power { scale: f64, exponent: f64 },
}

impl RateRule {
    pub fn at(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(invalid("step counter starts at 1"));
        }
        Ok(match *self {
            RateRule::Stepped { scale, period } => scale / n.div_ceil(period) as f64,
            RateRule::LogStepped { scale, kappa, phi, base } => {
                if !n.is_multiple_of(phi) {
                    0.0
                } else {
                    let nf = n as f64;
                    let ceil = (nf * base.log(nf) / kappa as f64).ceil();
                    scale / (1.0 + ceil)
                }
            }
            RateRule::Constant { value, phi } => {
                if n.is_multiple_of(phi) {
                    value
                } else {
                    0.0
                }
            }
            RateRule::Power { scale, exponent } => scale / (n as f64).powf(exponent),
        })
    }

    fn validate(&self, what: &str) -> Result<()> {
        let (scale, periods_ok) = match *self {
            RateRule::Stepped { scale, period } => (scale, period >= 1),
            RateRule::LogStepped { scale, kappa, phi, .. } => (scale, kappa >= 1 && phi >= 1),
            RateRule::Constant { value, phi } => (value, phi >= 1),
            RateRule::Power { scale, exponent } => {
                if !exponent.is_finite() || exponent < 0.0 {
                    return Err(invalid(format!("{what}: exponent must be >= 0")));
                }
                (scale, true)
            }
        };
        if !(0.0..=1.0).contains(&scale) {
            return Err(invalid(format!("{what}: scale {scale} outside [0,1]")));
        }
        if !periods_ok {
            return Err(invalid(format!("{what}: periods must be >= 1")));
        }
        Ok(())
    }
}

/// Fast (`alpha`) and slow (`beta`) step sizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningRateSchedule {
    pub alpha: RateRule,
    pub beta: RateRule,
}

impl LearningRateSchedule {
    /// The `(x, y, theta, kappa, phi)` family with natural log.
    pub fn two_timescale(x: f64, y: f64, theta: u64, kappa: u64, phi: u64) -> Result<Self> {
        Self::two_timescale_with_base(x, y, theta, kappa, phi, LogBase::Natural)
    }

    pub fn two_timescale_with_base(
        x: f64,
        y: f64,
        theta: u64,
        kappa: u64,
        phi: u64,
        base: LogBase,
    ) -> Result<Self> {
        if !(x > 0.0 && x <= 1.0) {
            return Err(invalid(format!("x = {x} outside (0,1]")));
        }
        let s = Self {
            alpha: RateRule::Stepped { scale: x, period: theta },
            beta: RateRule::LogStepped { scale: y, kappa, phi, base },
        };
        s.validate()?;
        Ok(s)
    }

    /// Tuned QGI rates for the toy problem.
    pub fn qgi_toy() -> Self {
        Self::two_timescale(0.2, 0.6, 5000, 5000, 10).expect("valid")
    }

    /// Tuned QWI rates for the toy problem.
    pub fn qwi_toy() -> Self {
        Self::two_timescale(0.1, 0.2, 5000, 5000, 10).expect("valid")
    }

    pub fn constant(alpha: f64, beta: f64, phi: u64) -> Result<Self> {
        let s = Self {
            alpha: RateRule::Constant { value: alpha, phi: 1 },
            beta: RateRule::Constant { value: beta, phi },
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        self.alpha.validate("alpha")?;
        self.beta.validate("beta")
    }

    pub fn alpha_at(&self, n: u64) -> Result<f64> {
        self.alpha.at(n)
    }

    pub fn beta_at(&self, n: u64) -> Result<f64> {
        self.beta.at(n)
    }
}

/// Multiplicative exploration decay with a floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonSchedule {
    pub initial: f64,
    pub decay: f64,
    pub floor: f64,
}

impl EpsilonSchedule {
    pub fn new(initial: f64, decay: f64, floor: f64) -> Result<Self> {
        let s = Self { initial, decay, floor };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(eps: f64) -> Self {
        Self {
            initial: eps,
            decay: 1.0,
            floor: eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.initial) || !(0.0..=1.0).contains(&self.floor) {
            return Err(invalid("epsilon values must lie in [0,1]"));
        }
        if !(self.decay > 0.0 && self.decay <= 1.0) {
            return Err(invalid(format!("epsilon decay {} outside (0,1]", self.decay)));
        }
        if self.floor > self.initial {
            return Err(invalid("epsilon floor exceeds initial value"));
        }
        Ok(())
    }

    /// Value after `n` decay applications.
    pub fn at(&self, n: u64) -> f64 {
        if self.decay == 1.0 {
            return self.initial;
        }
        (self.initial * self.decay.powf(n as f64)).max(self.floor)
    }
}

/// Outcome of [`validate_two_timescale`].
#[derive(Debug, Clone, PartialEq)]
pub struct TimescaleReport {
    /// Both rates lie in `[0, 1]` everywhere, `alpha > 0` everywhere and `beta > 0` on its active steps.
    pub rates_bounded: bool,
    /// Per-decade maxima of `beta/alpha` over active steps never increase, and the last is below the first.
    pub ratio_decaying: bool,
    pub decade_maxima: Vec<f64>,
    pub initial_ratio: f64,
    pub final_ratio: f64,
    pub passed: bool,
}

/// Checks a schedule for timescale separation over `1..=horizon`.
///
/// The pointwise ratio `beta(n)/alpha(n)` of stepped schedules saw-tooths
/// (it jumps up each time `alpha` drops a level), so the decay test is run on
/// the envelope: the maximum of the ratio within each decade `[10^k, 10^(k+1))`.
pub fn validate_two_timescale(schedule: &LearningRateSchedule, horizon: u64) -> TimescaleReport {
    let mut rates_bounded = true;
    let mut maxima: Vec<f64> = Vec::new();
    let mut decade_end = 10u64;
    let mut current = f64::NEG_INFINITY;
    let mut initial_ratio = f64::NAN;
    let mut final_ratio = f64::NAN;
    for n in 1..=horizon {
        if n >= decade_end {
            if current.is_finite() {
                maxima.push(current);
            }
            current = f64::NEG_INFINITY;
            decade_end = decade_end.saturating_mul(10);
        }
        let (a, b) = match (schedule.alpha_at(n), schedule.beta_at(n)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => {
                rates_bounded = false;
                continue;
            }
        };
        if !(a > 0.0 && a <= 1.0) || !(0.0..=1.0).contains(&b) {
            rates_bounded = false;
        }
        if b > 0.0 {
            let r = b / a;
            if initial_ratio.is_nan() {
                initial_ratio = r;
            }
            final_ratio = r;
            current = current.max(r);
        }
    }
    if current.is_finite() {
        maxima.push(current);
    }
    let ratio_decaying = maxima.len() >= 2
        && maxima.windows(2).all(|w| w[1] <= w[0])
        && maxima[maxima.len() - 1] < maxima[0];
    TimescaleReport {
        rates_bounded,
        ratio_decaying,
        decade_maxima: maxima,
        initial_ratio,
        final_ratio,
        passed: rates_bounded && ratio_decaying,
    }
}
