// SPDX-License-Identifier: Apache-2.0

//! Deterministic input currents `I(t)` and the delay line that carries the
//! population activity back into the input.

use std::collections::VecDeque;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input current generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DriveSpec {
    Constant {
        amplitude: f64,
    },
    Periodic {
        amplitude: f64,
        frequency: f64,
    },
    /// `A * n(t - delay)`, with `n` the supra-threshold fraction.
    Feedback {
        gain: f64,
        delay: f64,
    },
    Sum {
        terms: Vec<DriveSpec>,
    },
}

impl Default for DriveSpec {
    fn default() -> Self {
        DriveSpec::Constant { amplitude: 0.0 }
    }
}

impl DriveSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DriveSpec::Constant { amplitude } => finite("amplitude", *amplitude),
            DriveSpec::Periodic {
                amplitude,
                frequency,
            } => {
                finite("amplitude", *amplitude)?;
                if !(frequency.is_finite() && *frequency > 0.0) {
                    return Err(Error::Config(format!(
                        "periodic frequency must be positive, got {frequency}"
                    )));
                }
                Ok(())
            }
            DriveSpec::Feedback { gain, delay } => {
                finite("gain", *gain)?;
                if !(delay.is_finite() && *delay >= 0.0) {
                    return Err(Error::Config(format!(
                        "feedback delay must be non-negative, got {delay}"
                    )));
                }
                Ok(())
            }
            DriveSpec::Sum { terms } => {
                if terms.is_empty() {
                    return Err(Error::Config("sum drive needs at least one term".into()));
                }
                terms.iter().try_for_each(DriveSpec::validate)?;
                self.feedback_delay().map(|_| ())
            }
        }
    }

    /// The single feedback delay used anywhere in this drive, if any.
    ///
    /// One delay line serves the whole drive, so every feedback member must
    /// share the same delay.
    pub fn feedback_delay(&self) -> Result<Option<f64>> {
        let mut delays = Vec::new();
        self.collect_delays(&mut delays);
        match delays.split_first() {
            None => Ok(None),
            Some((&first, rest)) => {
                if rest.iter().any(|&d| (d - first).abs() > 1e-12) {
                    return Err(Error::Config(
                        "all feedback terms must share one delay".into(),
                    ));
                }
                Ok(Some(first))
            }
        }
    }

    fn collect_delays(&self, out: &mut Vec<f64>) {
        match self {
            DriveSpec::Feedback { delay, .. } => out.push(*delay),
            DriveSpec::Sum { terms } => terms.iter().for_each(|t| t.collect_delays(out)),
            _ => {}
        }
    }

    /// Frequency of the first periodic component, used for SNR analysis.
    pub fn signal_frequency(&self) -> Option<f64> {
        match self {
            DriveSpec::Periodic { frequency, .. } => Some(*frequency),
            DriveSpec::Sum { terms } => terms.iter().find_map(DriveSpec::signal_frequency),
            _ => None,
        }
    }

    pub fn has_feedback(&self) -> bool {
        match self {
            DriveSpec::Feedback { .. } => true,
            DriveSpec::Sum { terms } => terms.iter().any(DriveSpec::has_feedback),
            _ => false,
        }
    }

    /// Evaluate `I(t)`. Feedback members read the delayed activity from
    /// `buffer`.
    pub fn current(&self, t: f64, buffer: Option<&DelayBuffer>) -> Result<f64> {
        self.current_with(t, buffer.map(DelayBuffer::read))
    }

    /// Evaluate `I(t)` given the delayed activity already read from the
    /// delay line.
    pub fn current_with(&self, t: f64, delayed: Option<f64>) -> Result<f64> {
        match self {
            DriveSpec::Constant { amplitude } => Ok(*amplitude),
            DriveSpec::Periodic {
                amplitude,
                frequency,
            } => Ok(amplitude * (2.0 * PI * frequency * t).cos()),
            DriveSpec::Feedback { gain, .. } => {
                let n = delayed.ok_or(Error::MissingBuffer)?;
                Ok(gain * n)
            }
            DriveSpec::Sum { terms } => terms
                .iter()
                .try_fold(0.0, |acc, term| Ok(acc + term.current_with(t, delayed)?)),
        }
    }

    /// Visit every leaf term mutably.
    pub fn for_each_term_mut(&mut self, f: &mut impl FnMut(&mut DriveSpec)) {
        match self {
            DriveSpec::Sum { terms } => terms.iter_mut().for_each(|t| t.for_each_term_mut(f)),
            leaf => f(leaf),
        }
    }
}

fn finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must be finite")))
    }
}

/// Anything that can stand in for the delay line in a simulation loop.
pub trait DelayLine {
    fn read(&self) -> f64;
    fn push(&mut self, n_now: f64) -> Result<()>;
}

impl DelayLine for DelayBuffer {
    fn read(&self) -> f64 {
        DelayBuffer::read(self)
    }

    fn push(&mut self, n_now: f64) -> Result<()> {
        DelayBuffer::push(self, n_now)
    }
}

/// Fixed delay line for the population activity `n(t)`.
///
/// Samples are pushed once per time step. [`read`](Self::read) returns the
/// sample pushed `capacity` pushes before the most recent one, so with one
/// push per step of size `dt` the value read at step `k` is the one pushed at
/// step `k - capacity`, exactly `delay` earlier. Until that much history
/// exists the prefill value `n0` is returned. A zero-capacity buffer returns
/// the most recent push.
#[derive(Debug, Clone)]
pub struct DelayBuffer {
    capacity: usize,
    fill: f64,
    samples: VecDeque<f64>,
}

impl DelayBuffer {
    pub fn new(delay: f64, dt: f64, fill: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("dt must be positive, got {dt}")));
        }
        if !(delay.is_finite() && delay >= 0.0) {
            return Err(Error::Config(format!(
                "delay must be non-negative, got {delay}"
            )));
        }
        let ratio = delay / dt;
        let capacity = ratio.round();
        if (ratio - capacity).abs() > 1e-9 * capacity.max(1.0) {
            return Err(Error::Config(format!(
                "delay {delay} is not an integer multiple of dt {dt}"
            )));
        }
        Ok(Self::with_capacity(capacity as usize, fill))
    }

    pub fn with_capacity(capacity: usize, fill: f64) -> Self {
        Self {
            capacity,
            fill,
            samples: VecDeque::with_capacity(capacity + 1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn fill_value(&self) -> f64 {
        self.fill
    }

    pub fn read(&self) -> f64 {
        if self.samples.len() == self.capacity + 1 {
            self.samples[0]
        } else {
            self.fill
        }
    }

    /// Append the newest activity sample, evicting the oldest.
    pub fn push(&mut self, n_now: f64) -> Result<()> {
        if !(n_now.is_finite() && (-1e-9..=1.0 + 1e-9).contains(&n_now)) {
            return Err(Error::Range(format!(
                "activity sample {n_now} outside [0, 1]"
            )));
        }
        if self.samples.len() == self.capacity + 1 {
            self.samples.pop_front();
        }
        self.samples.push_back(n_now);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn buffer_holding(n: f64) -> DelayBuffer {
        let mut buf = DelayBuffer::new(0.2, 0.01, n).unwrap();
        for _ in 0..=buf.capacity() {
            buf.push(n).unwrap();
        }
        buf
    }

    #[test]
    fn current_examples() {
        let periodic = DriveSpec::Periodic {
            amplitude: 0.15,
            frequency: 0.55,
        };
        assert_abs_diff_eq!(periodic.current(0.0, None).unwrap(), 0.15, epsilon = 1e-15);

        let fb = DriveSpec::Feedback {
            gain: 0.9,
            delay: 0.2,
        };
        let buf = buffer_holding(0.5);
        assert_abs_diff_eq!(fb.current(3.0, Some(&buf)).unwrap(), 0.45, epsilon = 1e-15);

        let sum = DriveSpec::Sum {
            terms: vec![
                periodic,
                DriveSpec::Feedback {
                    gain: 0.5,
                    delay: 0.2,
                },
            ],
        };
        let buf = buffer_holding(0.0);
        assert_abs_diff_eq!(sum.current(0.0, Some(&buf)).unwrap(), 0.15, epsilon = 1e-15);
    }

    #[test]
    fn feedback_without_buffer_fails() {
        let fb = DriveSpec::Feedback {
            gain: 0.9,
            delay: 0.2,
        };
        assert!(matches!(fb.current(0.0, None), Err(Error::MissingBuffer)));
    }

    #[test]
    fn capacity_twenty_releases_value_after_twenty_steps() {
        let mut buf = DelayBuffer::new(0.2, 0.01, 0.0).unwrap();
        assert_eq!(buf.capacity(), 20);
        buf.push(0.7).unwrap();
        for _ in 0..19 {
            buf.push(0.0).unwrap();
            assert_eq!(buf.read(), 0.0);
        }
        // Twenty steps after the 0.7 was pushed it becomes visible.
        buf.push(0.0).unwrap();
        assert_eq!(buf.read(), 0.7);
        buf.push(0.0).unwrap();
        assert_eq!(buf.read(), 0.0);
    }

    #[test]
    fn zero_capacity_reads_latest() {
        let mut buf = DelayBuffer::new(0.0, 0.01, 0.25).unwrap();
        assert_eq!(buf.read(), 0.25);
        for x in [0.1, 0.9, 0.3] {
            buf.push(x).unwrap();
            assert_eq!(buf.read(), x);
        }
    }

    #[test]
    fn empty_buffer_returns_fill() {
        let buf = DelayBuffer::new(0.5, 0.01, 4e-6).unwrap();
        assert_eq!(buf.read(), 4e-6);
    }

    #[test]
    fn delay_must_be_multiple_of_dt() {
        assert!(matches!(
            DelayBuffer::new(0.205, 0.01, 0.0),
            Err(Error::Config(_))
        ));
        assert_eq!(DelayBuffer::new(1.36, 0.01, 0.0).unwrap().capacity(), 136);
    }

    #[test]
    fn out_of_range_push_rejected() {
        let mut buf = DelayBuffer::with_capacity(3, 0.0);
        assert!(matches!(buf.push(1.1), Err(Error::Range(_))));
        assert!(matches!(buf.push(-0.01), Err(Error::Range(_))));
        assert!(buf.push(1.0 + 5e-10).is_ok());
    }

    #[test]
    fn validation() {
        assert!(DriveSpec::Sum { terms: vec![] }.validate().is_err());
        assert!(DriveSpec::Periodic {
            amplitude: 1.0,
            frequency: 0.0
        }
        .validate()
        .is_err());
        assert!(DriveSpec::Feedback {
            gain: 1.0,
            delay: -0.1
        }
        .validate()
        .is_err());
        let mixed = DriveSpec::Sum {
            terms: vec![
                DriveSpec::Feedback {
                    gain: 1.0,
                    delay: 0.1,
                },
                DriveSpec::Feedback {
                    gain: 1.0,
                    delay: 0.2,
                },
            ],
        };
        assert!(mixed.validate().is_err());
    }

    fn arb_leaf() -> impl Strategy<Value = DriveSpec> {
        prop_oneof![
            (-2.0f64..2.0).prop_map(|amplitude| DriveSpec::Constant { amplitude }),
            (-2.0f64..2.0, 0.01f64..3.0).prop_map(|(amplitude, frequency)| {
                DriveSpec::Periodic {
                    amplitude,
                    frequency,
                }
            }),
            (-2.0f64..2.0).prop_map(|gain| DriveSpec::Feedback { gain, delay: 0.3 }),
        ]
    }

    proptest! {
        #[test]
        fn delay_is_exact(
            capacity in 1usize..=100,
            seq in proptest::collection::vec(0.0f64..=1.0, 1..400),
        ) {
            let fill = 0.123;
            let mut buf = DelayBuffer::with_capacity(capacity, fill);
            for (k, &x) in seq.iter().enumerate() {
                buf.push(x).unwrap();
                let expected = if k >= capacity { seq[k - capacity] } else { fill };
                prop_assert_eq!(buf.read(), expected);
            }
        }

        #[test]
        fn sum_is_linear(
            terms in proptest::collection::vec(arb_leaf(), 1..6),
            t in 0.0f64..50.0,
            n in 0.0f64..=1.0,
        ) {
            let mut buf = DelayBuffer::with_capacity(0, 0.0);
            buf.push(n).unwrap();
            let separate: f64 = terms.iter().map(|s| s.current(t, Some(&buf)).unwrap()).sum();
            let sum = DriveSpec::Sum { terms };
            let joint = sum.current(t, Some(&buf)).unwrap();
            prop_assert!((joint - separate).abs() < 1e-12);
        }
    }
}
