// SPDX-License-Identifier: Apache-2.0

//! Periodogram, dominant frequency and signal-to-noise ratio of uniformly
//! sampled series.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest series accepted by the estimators.
pub const MIN_SAMPLES: usize = 16;

/// Bins on either side of the signal bin searched for the peak.
pub const PEAK_HALF_WIDTH: usize = 1;
/// Bins on either side of the signal bin left out of the background.
pub const GUARD_HALF_WIDTH: usize = 2;
/// Bins in the background estimate.
pub const BACKGROUND_BINS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dt: f64,
    t_start: f64,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>, dt: f64, t_start: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::Config(format!("sample spacing must be positive, got {dt}")));
        }
        if values.len() < MIN_SAMPLES {
            return Err(Error::TooShort { len: values.len(), min: MIN_SAMPLES });
        }
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("series contains non-finite samples".into()));
        }
        Ok(Self { values, dt, t_start })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.t_start + k as f64 * self.dt
    }

    /// The samples at times `>= t` (with a little slack for roundoff).
    pub fn since(&self, t: f64) -> Result<Self> {
        let skip = ((t - self.t_start) / self.dt - 1e-9).ceil().max(0.0) as usize;
        let skip = skip.min(self.values.len());
        Self::new(self.values[skip..].to_vec(), self.dt, self.time_at(skip))
    }

    /// Frequency resolution `1 / (N dt)`.
    pub fn resolution(&self) -> f64 {
        1.0 / (self.values.len() as f64 * self.dt)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Periodogram {
    /// `k / (N dt)` for `k = 0 ..= N/2`.
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
}

impl Periodogram {
    pub fn bin_of(&self, f: f64) -> usize {
        let df = self.frequencies.get(1).copied().unwrap_or(f64::INFINITY);
        ((f / df).round() as usize).min(self.power.len() - 1)
    }

    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrResult {
    pub snr_db: f64,
    pub f_signal: f64,
    pub peak_power: f64,
    /// Zero only for a spectrum that is exactly flat zero around the signal,
    /// in which case `snr_db` is infinite.
    pub background_power: f64,
}

/// Hann window, periodic form.
fn hann(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| 0.5 - 0.5 * (std::f64::consts::TAU * k as f64 / n as f64).cos())
        .collect()
}

/// One-sided power spectrum of the mean-removed, Hann-windowed series,
/// scaled so that the bins sum to `sum (w x)^2 / sum w^2`, the windowed
/// estimate of the variance.
pub fn periodogram(series: &TimeSeries) -> Result<Periodogram> {
    let n = series.len();
    if n < MIN_SAMPLES {
        return Err(Error::TooShort { len: n, min: MIN_SAMPLES });
    }
    let mean = series.values.iter().sum::<f64>() / n as f64;
    let window = hann(n);
    let window_energy: f64 = window.iter().map(|w| w * w).sum();
    let mut buffer: Vec<Complex<f64>> = series
        .values
        .iter()
        .zip(&window)
        .map(|(x, w)| Complex::new((x - mean) * w, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buffer);

    let half = n / 2;
    let scale = 1.0 / (n as f64 * window_energy);
    let power = (0..=half)
        .map(|k| {
            let p = buffer[k].norm_sqr() * scale;
            // Interior bins stand for both signs of frequency.
            if k == 0 || (n % 2 == 0 && k == half) {
                p
            } else {
                2.0 * p
            }
        })
        .collect();
    let df = series.resolution();
    let frequencies = (0..=half).map(|k| k as f64 * df).collect();
    Ok(Periodogram { frequencies, power })
}

/// Frequency of the largest non-DC bin.
pub fn dominant_frequency(series: &TimeSeries) -> Result<f64> {
    let spec = periodogram(series)?;
    let (k, _) = spec
        .power
        .iter()
        .enumerate()
        .skip(1)
        .fold((0, f64::NEG_INFINITY), |best, (k, &p)| if p > best.1 { (k, p) } else { best });
    Ok(spec.frequencies[k])
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    if values.len() % 2 == 0 {
        0.5 * (values[m - 1] + values[m])
    } else {
        values[m]
    }
}

/// Peak power within one bin of `f_signal` over the median of the
/// `BACKGROUND_BINS` nearest bins outside the guard band, in decibels.
/// Near the ends of the spectrum the background takes more bins from the
/// other side; the DC bin is never used.
pub fn snr(series: &TimeSeries, f_signal: f64) -> Result<SnrResult> {
    if series.len() < MIN_SAMPLES {
        return Err(Error::TooShort { len: series.len(), min: MIN_SAMPLES });
    }
    let (lo, hi) = (series.resolution(), 0.5 / series.dt);
    if !(f_signal > lo && f_signal < hi) {
        return Err(Error::OutOfBand { f: f_signal, lo, hi });
    }
    let spec = periodogram(series)?;
    let top = spec.power.len() - 1;
    let centre = spec.bin_of(f_signal);
    let peak_power = spec.power[centre.saturating_sub(PEAK_HALF_WIDTH).max(1)
        ..=(centre + PEAK_HALF_WIDTH).min(top)]
        .iter()
        .fold(0.0_f64, |m, &p| m.max(p));

    let mut background = Vec::with_capacity(BACKGROUND_BINS);
    let mut offset = GUARD_HALF_WIDTH + 1;
    while background.len() < BACKGROUND_BINS {
        let below = centre.checked_sub(offset).filter(|&k| k >= 1);
        let above = Some(centre + offset).filter(|&k| k <= top);
        if below.is_none() && above.is_none() {
            break;
        }
        for k in [below, above].into_iter().flatten() {
            if background.len() < BACKGROUND_BINS {
                background.push(spec.power[k]);
            }
        }
        offset += 1;
    }
    if background.is_empty() {
        return Err(Error::TooShort { len: series.len(), min: MIN_SAMPLES });
    }
    let background_power = median(&mut background);
    let snr_db = if background_power > 0.0 {
        10.0 * (peak_power / background_power).log10()
    } else {
        f64::INFINITY
    };
    Ok(SnrResult { snr_db, f_signal, peak_power, background_power })
}
