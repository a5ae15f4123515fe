//! Periodogram band power and differential entropy over band-passed
//! windows. Band-pass is frequency-domain masking: zero the out-of-band
//! DFT bins and invert.

use crate::error::{CoreError, Result};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// One windowed signal segment.
#[derive(Debug, Clone)]
pub struct SignalWindow {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
    pub channel_id: String,
    pub window_span: f64,
}

impl SignalWindow {
    pub fn new(
        samples: Vec<f64>,
        sample_rate: f64,
        channel_id: impl Into<String>,
        window_span: f64,
    ) -> Result<Self> {
        if sample_rate <= 0.0 || window_span <= 0.0 {
            return Err(CoreError::InvalidArgument(
                "sample_rate and window_span must be positive".into(),
            ));
        }
        let expected = sample_rate * window_span;
        if (samples.len() as f64 - expected).abs() > 1.0 {
            return Err(CoreError::InvalidArgument(format!(
                "{} samples but sample_rate*span = {expected}",
                samples.len()
            )));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(CoreError::NonFinite("signal sample".into()));
        }
        Ok(SignalWindow {
            samples,
            sample_rate,
            channel_id: channel_id.into(),
            window_span,
        })
    }
}

/// Frequency band [lo, hi) in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct BandDef {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

impl BandDef {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        BandDef {
            name: name.into(),
            lo,
            hi,
        }
    }
}

/// The five canonical EEG bands: delta 1-4, theta 4-8, alpha 8-14,
/// beta 14-31, gamma 31-50 Hz. Adjacent bands share edges exactly.
pub fn eeg_bands() -> Vec<BandDef> {
    vec![
        BandDef::new("delta", 1.0, 4.0),
        BandDef::new("theta", 4.0, 8.0),
        BandDef::new("alpha", 8.0, 14.0),
        BandDef::new("beta", 14.0, 31.0),
        BandDef::new("gamma", 31.0, 50.0),
    ]
}

/// Pupil-diameter DE sub-bands from the eye feature table:
/// 0-0.2, 0.2-0.4, 0.4-0.6, 0.6-1 Hz.
pub fn pupil_bands() -> Vec<BandDef> {
    vec![
        BandDef::new("0-0.2Hz", 0.0, 0.2),
        BandDef::new("0.2-0.4Hz", 0.2, 0.4),
        BandDef::new("0.4-0.6Hz", 0.4, 0.6),
        BandDef::new("0.6-1Hz", 0.6, 1.0),
    ]
}

fn check_bands(w: &SignalWindow, bands: &[BandDef]) -> Result<()> {
    let max_hi = bands.iter().map(|b| b.hi).fold(0.0, f64::max);
    if w.sample_rate <= 2.0 * max_hi {
        return Err(CoreError::InvalidArgument(format!(
            "sample_rate {} too low for band edge {max_hi} Hz",
            w.sample_rate
        )));
    }
    let min_width = bands
        .iter()
        .map(|b| b.hi - b.lo)
        .fold(f64::INFINITY, f64::min);
    if min_width <= 0.0 {
        return Err(CoreError::InvalidArgument("empty band".into()));
    }
    if (w.samples.len() as f64) < 2.0 * w.sample_rate / min_width {
        return Err(CoreError::InvalidArgument(format!(
            "window of {} samples too short to resolve a {min_width} Hz band",
            w.samples.len()
        )));
    }
    Ok(())
}

fn fft_forward(samples: &[f64]) -> Vec<Complex<f64>> {
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new()
        .plan_fft_forward(buf.len())
        .process(&mut buf);
    buf
}

/// Hann-windowed periodogram, one-sided. Returns (freq, power) per bin;
/// powers are normalized so their sum equals the windowed mean-square
/// of the signal (Parseval within roundoff).
pub fn periodogram(samples: &[f64], sample_rate: f64) -> Vec<(f64, f64)> {
    let n = samples.len();
    // periodic Hann: a pure on-bin tone leaks into +-1 bins only
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 * (1.0 - (std::f64::consts::TAU * i as f64 / n as f64).cos()))
        .collect();
    let wss: f64 = window.iter().map(|w| w * w).sum();
    let tapered: Vec<f64> = samples.iter().zip(&window).map(|(s, w)| s * w).collect();
    let spec = fft_forward(&tapered);
    let half = n / 2;
    let mut out = Vec::with_capacity(half + 1);
    for (k, c) in spec.iter().enumerate().take(half + 1) {
        let mut p = c.norm_sqr() / (n as f64 * wss);
        // fold the negative-frequency half into all interior bins
        if k != 0 && !(n % 2 == 0 && k == half) {
            p *= 2.0;
        }
        out.push((k as f64 * sample_rate / n as f64, p));
    }
    out
}

/// Mean periodogram power inside each band.
pub fn psd_bands(w: &SignalWindow, bands: &[BandDef]) -> Result<Vec<f64>> {
    check_bands(w, bands)?;
    let pg = periodogram(&w.samples, w.sample_rate);
    let mut out = Vec::with_capacity(bands.len());
    for band in bands {
        let mut total = 0.0;
        let mut count = 0usize;
        for &(f, p) in &pg {
            if f >= band.lo && f < band.hi {
                total += p;
                count += 1;
            }
        }
        if count == 0 {
            return Err(CoreError::InvalidArgument(format!(
                "no frequency bins inside band {}",
                band.name
            )));
        }
        out.push(total / count as f64);
    }
    Ok(out)
}

/// Frequency-domain band-pass: zero every bin outside [lo, hi), invert.
pub fn bandpass(samples: &[f64], sample_rate: f64, lo: f64, hi: f64) -> Vec<f64> {
    let n = samples.len();
    let mut spec = fft_forward(samples);
    for (k, c) in spec.iter_mut().enumerate() {
        // physical frequency of bin k (mirror the upper half)
        let f = if k <= n / 2 {
            k as f64 * sample_rate / n as f64
        } else {
            (n - k) as f64 * sample_rate / n as f64
        };
        if f < lo || f >= hi {
            *c = Complex::new(0.0, 0.0);
        }
    }
    FftPlanner::new().plan_fft_inverse(n).process(&mut spec);
    spec.iter().map(|c| c.re / n as f64).collect()
}

/// Variance floor for degenerate (silent) bands; keeps DE finite.
pub const DE_VARIANCE_FLOOR: f64 = 1e-12;

/// Differential entropy per band under the Gaussian closed form:
/// DE = 0.5 * ln(2*pi*e*var) of the band-passed signal.
pub fn de_bands(w: &SignalWindow, bands: &[BandDef]) -> Result<Vec<f64>> {
    check_bands(w, bands)?;
    let mut out = Vec::with_capacity(bands.len());
    for band in bands {
        let x = bandpass(&w.samples, w.sample_rate, band.lo, band.hi);
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.len() as f64;
        let var = var.max(DE_VARIANCE_FLOOR);
        out.push(0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * var).ln());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::RngStream;

    fn sine(freq: f64, fs: f64, secs: f64, amp: f64) -> Vec<f64> {
        let n = (fs * secs) as usize;
        (0..n)
            .map(|i| amp * (std::f64::consts::TAU * freq * i as f64 / fs).sin())
            .collect()
    }

    fn window(samples: Vec<f64>, fs: f64, secs: f64) -> SignalWindow {
        SignalWindow::new(samples, fs, "ch1", secs).unwrap()
    }

    #[test]
    fn pure_tone_concentrates_in_alpha() {
        let w = window(sine(10.0, 200.0, 2.0, 1.0), 200.0, 2.0);
        let p = psd_bands(&w, &eeg_bands()).unwrap();
        let alpha = p[2];
        for (i, &other) in p.iter().enumerate() {
            if i != 2 {
                assert!(
                    alpha >= 10.0 * other.max(1e-300),
                    "alpha {alpha} vs band {i} = {other}"
                );
            }
        }
    }

    #[test]
    fn zero_signal_zero_power() {
        let w = window(vec![0.0; 400], 200.0, 2.0);
        for p in psd_bands(&w, &eeg_bands()).unwrap() {
            assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn periodogram_parseval() {
        let mut rng = RngStream::new(5);
        let samples: Vec<f64> = (0..10_000).map(|_| rng.next_gaussian()).collect();
        // exact Parseval identity for the windowed transform:
        // sum_k P_k == sum_n (w_n x_n)^2 / sum_n w_n^2
        let n = samples.len();
        let w: Vec<f64> = (0..n)
            .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / n as f64).cos()))
            .collect();
        let wsq: f64 = w.iter().map(|v| v * v).sum();
        let windowed: f64 = samples.iter().zip(&w).map(|(x, wi)| (x * wi).powi(2)).sum();
        let expected = windowed / wsq;
        let total: f64 = periodogram(&samples, 200.0).iter().map(|(_, p)| p).sum();
        assert!(
            (total - expected).abs() / expected < 1e-9,
            "total {total} vs windowed mean square {expected}"
        );
    }

    #[test]
    fn white_noise_is_flat_per_hz() {
        let mut rng = RngStream::new(17);
        let samples: Vec<f64> = (0..10_000).map(|_| rng.next_gaussian()).collect();
        let w = SignalWindow::new(samples, 200.0, "ch1", 50.0).unwrap();
        let p = psd_bands(&w, &eeg_bands()).unwrap();
        // mean periodogram power per bin is already per-Hz-flat
        let avg = p.iter().sum::<f64>() / p.len() as f64;
        for (i, &v) in p.iter().enumerate() {
            assert!(
                (v - avg).abs() / avg < 0.25,
                "band {i}: {v} vs average {avg}"
            );
        }
    }

    #[test]
    fn dc_offset_leaves_bands_untouched() {
        let base = sine(10.0, 200.0, 2.0, 1.0);
        let shifted: Vec<f64> = base.iter().map(|v| v + 5.0).collect();
        let p1 = psd_bands(&window(base, 200.0, 2.0), &eeg_bands()).unwrap();
        let p2 = psd_bands(&window(shifted, 200.0, 2.0), &eeg_bands()).unwrap();
        for (a, b) in p1.iter().zip(&p2) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn band_edges_partition_without_gaps() {
        let bands = eeg_bands();
        for pair in bands.windows(2) {
            assert_eq!(pair[0].hi, pair[1].lo);
        }
        assert_eq!(bands[0].lo, 1.0);
        assert_eq!(bands[4].hi, 50.0);
    }

    #[test]
    fn sample_rate_too_low_is_an_error() {
        let w = window(sine(10.0, 80.0, 2.0, 1.0), 80.0, 2.0);
        assert!(psd_bands(&w, &eeg_bands()).is_err());
    }

    fn unit_variance_band_noise(band: &BandDef, fs: f64, secs: f64, seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed);
        let n = (fs * secs) as usize;
        let white: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
        let mut x = bandpass(&white, fs, band.lo, band.hi);
        let mean = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let s = var.sqrt();
        x.iter_mut().for_each(|v| *v = (*v - mean) / s);
        x
    }

    #[test]
    fn de_gaussian_closed_form() {
        let band = BandDef::new("alpha", 8.0, 14.0);
        let x = unit_variance_band_noise(&band, 200.0, 50.0, 23);
        let w = SignalWindow::new(x, 200.0, "ch1", 50.0).unwrap();
        let de = de_bands(&w, std::slice::from_ref(&band)).unwrap()[0];
        let expected = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((de - expected).abs() < 0.05, "de {de} vs {expected}");
    }

    #[test]
    fn de_scaling_law() {
        // white noise keeps every band's variance well above the floor
        let mut rng = RngStream::new(29);
        let x: Vec<f64> = (0..10_000).map(|_| rng.next_gaussian()).collect();
        let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let w1 = SignalWindow::new(x, 200.0, "ch1", 50.0).unwrap();
        let w2 = SignalWindow::new(doubled, 200.0, "ch1", 50.0).unwrap();
        let bands = eeg_bands();
        let d1 = de_bands(&w1, &bands).unwrap();
        let d2 = de_bands(&w2, &bands).unwrap();
        for (a, b) in d1.iter().zip(&d2) {
            assert!((b - a - 2f64.ln()).abs() < 0.02, "shift {} vs ln2", b - a);
        }
    }

    #[test]
    fn de_zero_signal_is_floored() {
        let w = window(vec![0.0; 400], 200.0, 2.0);
        let de = de_bands(&w, &eeg_bands()).unwrap();
        let floor =
            0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * DE_VARIANCE_FLOOR).ln();
        for v in de {
            assert!((v - floor).abs() < 1e-9);
            assert!(v.is_finite());
        }
    }
}
