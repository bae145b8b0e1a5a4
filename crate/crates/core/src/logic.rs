//! Log-space soft logic.
//!
//! Truth values are probabilities stored as their logarithm. Conjunction is
//! the product t-norm (a sum of logs) and disjunction is a log-mean-exp
//! relaxation of the max t-conorm with temperature `alpha`:
//!
//! ```text
//! or(x'_1..x'_m) = alpha * (C + ln(sum_i exp(x'_i / alpha - C) / m)),   C = max_i x'_i / alpha
//! ```
//!
//! which satisfies `ln max - alpha ln m <= or <= ln max`.
//!
//! `log(0)` is represented by the finite sentinel [`NEG_INF`]. Conjunction
//! saturates at the sentinel and disjunction drops sentinel inputs from the
//! sum while still counting them in `m`, so no `-inf - -inf` ever occurs and
//! the derivative with respect to a saturated operand is exactly zero.

use std::fmt;

use crate::error::{Error, Result};

/// Sentinel for `ln 0`.
pub const NEG_INF: f64 = -1e9;

/// Clamp applied to probabilities coming from a continuous parameterization.
pub const PROB_EPS: f64 = 1e-12;

/// A log-probability: a value in `[NEG_INF, 0]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogProb(f64);

impl LogProb {
    pub const ZERO: LogProb = LogProb(NEG_INF);
    pub const ONE: LogProb = LogProb(0.0);

    /// Wraps a log-value, saturating anything at or below [`NEG_INF`].
    ///
    /// Positive values up to `1e-12` are treated as rounding noise and
    /// clipped to zero; larger ones are rejected.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value > 1e-12 {
            return Err(Error::domain(format!("{value} is not a log-probability")));
        }
        Ok(LogProb(saturate(value.min(0.0))))
    }

    /// `ln p` with `ln 0` mapped to the sentinel.
    pub fn from_prob(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("{p} is not a probability")));
        }
        Ok(LogProb(ln_sat(p)))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        if self.is_zero() {
            0.0
        } else {
            self.0.exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.0 <= NEG_INF
    }
}

impl fmt::Display for LogProb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            f.write_str("log(0)")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Log-mean-exp temperature, `0 < alpha <= 1`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(alpha: f64) -> Result<Self> {
        if alpha > 0.0 && alpha <= 1.0 {
            Ok(Temperature(alpha))
        } else {
            Err(Error::domain(format!("temperature {alpha} outside (0, 1]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

#[inline]
pub(crate) fn saturate(x: f64) -> f64 {
    if x <= NEG_INF {
        NEG_INF
    } else {
        x
    }
}

/// `ln p` with `ln 0 = NEG_INF`.
#[inline]
pub(crate) fn ln_sat(p: f64) -> f64 {
    if p <= 0.0 {
        NEG_INF
    } else {
        saturate(p.ln())
    }
}

/// Saturating sum of log-values.
#[inline]
pub(crate) fn tnorm_raw(xs: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &x in xs {
        if x <= NEG_INF {
            return NEG_INF;
        }
        acc += x;
    }
    saturate(acc)
}

/// Log-mean-exp over the non-saturated `xs`, with `m` the full operand count
/// (saturated operands included). `weights`, when given, receives
/// `d out / d x_i` for each `xs[i]`.
///
/// Callers must pass only operands above `NEG_INF`; an empty `xs` yields
/// `NEG_INF`.
#[inline]
pub(crate) fn log_mean_exp_raw(xs: &[f64], m: usize, alpha: f64, weights: Option<&mut [f64]>) -> f64 {
    if xs.is_empty() {
        return NEG_INF;
    }
    let mut c = f64::NEG_INFINITY;
    for &x in xs {
        c = c.max(x / alpha);
    }
    let mut sum = 0.0;
    for &x in xs {
        sum += (x / alpha - c).exp();
    }
    if let Some(w) = weights {
        for (wi, &x) in w.iter_mut().zip(xs) {
            *wi = (x / alpha - c).exp() / sum;
        }
    }
    saturate(alpha * (c + (sum / m as f64).ln()))
}

/// Product t-norm in log space: the saturating sum of the operands.
pub fn log_tnorm(xs: &[LogProb]) -> Result<LogProb> {
    if xs.is_empty() {
        return Err(Error::domain("t-norm of an empty list"));
    }
    let mut acc = 0.0;
    for x in xs {
        if x.is_zero() {
            return Ok(LogProb::ZERO);
        }
        acc += x.0;
    }
    Ok(LogProb(saturate(acc)))
}

/// Log-mean-exp t-conorm in log space.
pub fn log_tconorm(xs: &[LogProb], alpha: Temperature) -> Result<LogProb> {
    if xs.is_empty() {
        return Err(Error::domain("t-conorm of an empty list"));
    }
    let live: Vec<f64> = xs.iter().filter(|x| !x.is_zero()).map(|x| x.0).collect();
    Ok(LogProb(log_mean_exp_raw(&live, xs.len(), alpha.0, None)))
}
