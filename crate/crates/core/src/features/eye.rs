//! Eye-movement feature vector: pupil-diameter statistics and
//! low-frequency DE, dispersion/fixation/blink/saccade statistics, and
//! the nine event statistics. The output order and length are fixed.

use super::spectral::{de_bands, pupil_bands, SignalWindow};
use crate::error::{CoreError, Result};

/// A regularly sampled scalar stream (pupil diameter traces).
#[derive(Debug, Clone)]
pub struct SampledStream {
    pub samples: Vec<f64>,
    pub sample_rate: f64,
}

/// One analysis window of eye-tracker output.
///
/// Duration-like values are in milliseconds, amplitudes in degrees;
/// event lists may be empty.
#[derive(Debug, Clone)]
pub struct EyeWindow {
    pub window_span: f64,
    pub pupil_x: SampledStream,
    pub pupil_y: SampledStream,
    pub dispersion_x: Vec<f64>,
    pub dispersion_y: Vec<f64>,
    pub fixation_durations: Vec<f64>,
    pub fixation_dispersions: Vec<f64>,
    pub blink_durations: Vec<f64>,
    pub saccade_durations: Vec<f64>,
    pub saccade_amplitudes: Vec<f64>,
    pub saccade_latencies: Vec<f64>,
}

/// Fixed length of the eye feature vector.
pub const EYE_FEATURE_COUNT: usize = 33;

pub fn eye_feature_names() -> Vec<String> {
    let mut names = Vec::with_capacity(EYE_FEATURE_COUNT);
    for axis in ["x", "y"] {
        names.push(format!("pupil_{axis}_mean"));
        names.push(format!("pupil_{axis}_std"));
        for band in ["0_0.2", "0.2_0.4", "0.4_0.6", "0.6_1"] {
            names.push(format!("pupil_{axis}_de_{band}hz"));
        }
    }
    for axis in ["x", "y"] {
        names.push(format!("dispersion_{axis}_mean"));
        names.push(format!("dispersion_{axis}_std"));
    }
    names.push("fixation_duration_mean".into());
    names.push("fixation_duration_std".into());
    names.push("blink_duration_mean".into());
    names.push("blink_duration_std".into());
    names.push("saccade_duration_mean".into());
    names.push("saccade_duration_std".into());
    names.push("saccade_amplitude_mean".into());
    names.push("saccade_amplitude_std".into());
    // the nine event statistics, in table order
    names.push("blink_frequency".into());
    names.push("fixation_frequency".into());
    names.push("fixation_duration_max".into());
    names.push("fixation_dispersion_total".into());
    names.push("fixation_dispersion_max".into());
    names.push("saccade_frequency".into());
    names.push("saccade_duration_avg".into());
    names.push("saccade_amplitude_avg".into());
    names.push("saccade_latency_avg".into());
    debug_assert_eq!(names.len(), EYE_FEATURE_COUNT);
    names
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

fn max_or_zero(xs: &[f64]) -> f64 {
    xs.iter().cloned().fold(0.0, f64::max)
}

fn pupil_stats(stream: &SampledStream, span: f64, out: &mut Vec<f64>) -> Result<()> {
    if stream.samples.is_empty() {
        return Err(CoreError::InvalidArgument(
            "pupil stream must have at least one sample".into(),
        ));
    }
    out.push(mean(&stream.samples));
    out.push(std_dev(&stream.samples));
    let w = SignalWindow::new(stream.samples.clone(), stream.sample_rate, "pupil", span)?;
    out.extend(de_bands(&w, &pupil_bands())?);
    Ok(())
}

/// Fixed-order feature vector covering the whole eye feature table;
/// counts become frequencies per second of window span.
pub fn eye_features(w: &EyeWindow) -> Result<Vec<f64>> {
    if w.window_span <= 0.0 {
        return Err(CoreError::InvalidArgument(
            "window_span must be positive".into(),
        ));
    }
    for (what, xs) in [
        ("fixation duration", &w.fixation_durations),
        ("blink duration", &w.blink_durations),
        ("saccade duration", &w.saccade_durations),
        ("saccade latency", &w.saccade_latencies),
    ] {
        if xs.iter().any(|&v| v < 0.0) {
            return Err(CoreError::InvalidArgument(format!("negative {what}")));
        }
    }

    let mut out = Vec::with_capacity(EYE_FEATURE_COUNT);
    pupil_stats(&w.pupil_x, w.window_span, &mut out)?;
    pupil_stats(&w.pupil_y, w.window_span, &mut out)?;
    for disp in [&w.dispersion_x, &w.dispersion_y] {
        out.push(mean(disp));
        out.push(std_dev(disp));
    }
    out.push(mean(&w.fixation_durations));
    out.push(std_dev(&w.fixation_durations));
    out.push(mean(&w.blink_durations));
    out.push(std_dev(&w.blink_durations));
    out.push(mean(&w.saccade_durations));
    out.push(std_dev(&w.saccade_durations));
    out.push(mean(&w.saccade_amplitudes));
    out.push(std_dev(&w.saccade_amplitudes));
    // event statistics
    out.push(w.blink_durations.len() as f64 / w.window_span);
    out.push(w.fixation_durations.len() as f64 / w.window_span);
    out.push(max_or_zero(&w.fixation_durations));
    out.push(w.fixation_dispersions.iter().sum());
    out.push(max_or_zero(&w.fixation_dispersions));
    out.push(w.saccade_durations.len() as f64 / w.window_span);
    out.push(mean(&w.saccade_durations));
    out.push(mean(&w.saccade_amplitudes));
    out.push(mean(&w.saccade_latencies));

    debug_assert_eq!(out.len(), EYE_FEATURE_COUNT);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::RngStream;

    fn base_window() -> EyeWindow {
        // 60 s of pupil data at 4 Hz: enough resolution for the 0.2 Hz bands
        let n = 240;
        let mut rng = RngStream::new(3);
        let noise: Vec<f64> = (0..n).map(|_| 3.0 + 0.1 * rng.next_gaussian()).collect();
        EyeWindow {
            window_span: 60.0,
            pupil_x: SampledStream {
                samples: noise.clone(),
                sample_rate: 4.0,
            },
            pupil_y: SampledStream {
                samples: noise,
                sample_rate: 4.0,
            },
            dispersion_x: vec![1.0, 2.0, 3.0],
            dispersion_y: vec![2.0, 2.0],
            fixation_durations: vec![200.0, 300.0, 250.0],
            fixation_dispersions: vec![0.4, 0.9],
            blink_durations: vec![100.0, 150.0, 120.0],
            saccade_durations: vec![30.0, 40.0],
            saccade_amplitudes: vec![2.0, 4.0],
            saccade_latencies: vec![180.0, 220.0],
        }
    }

    #[test]
    fn fixed_length_regardless_of_event_counts() {
        let mut w = base_window();
        assert_eq!(eye_features(&w).unwrap().len(), EYE_FEATURE_COUNT);
        w.fixation_durations.clear();
        w.blink_durations.clear();
        w.saccade_durations.clear();
        w.saccade_amplitudes.clear();
        w.saccade_latencies.clear();
        w.fixation_dispersions.clear();
        assert_eq!(eye_features(&w).unwrap().len(), EYE_FEATURE_COUNT);
        assert_eq!(eye_feature_names().len(), EYE_FEATURE_COUNT);
    }

    #[test]
    fn constant_pupil_stream_has_zero_std() {
        let mut w = base_window();
        w.pupil_x.samples = vec![3.5; 240];
        let names = eye_feature_names();
        let feats = eye_features(&w).unwrap();
        let idx = names.iter().position(|n| n == "pupil_x_std").unwrap();
        assert_eq!(feats[idx], 0.0);
    }

    #[test]
    fn blink_frequency_is_count_over_span() {
        let w = base_window();
        let names = eye_feature_names();
        let feats = eye_features(&w).unwrap();
        let idx = names.iter().position(|n| n == "blink_frequency").unwrap();
        assert!((feats[idx] - 3.0 / 60.0).abs() < 1e-12);
    }

    #[test]
    fn negative_duration_rejected() {
        let mut w = base_window();
        w.blink_durations.push(-1.0);
        assert!(eye_features(&w).is_err());
    }

    #[test]
    fn pupil_de_matches_gaussian_closed_form() {
        // band-limited unit-variance noise in 0.2-0.4 Hz
        let fs = 4.0;
        let span = 240.0;
        let n = (fs * span) as usize;
        let mut rng = RngStream::new(41);
        let white: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
        let mut x = crate::features::spectral::bandpass(&white, fs, 0.2, 0.4);
        let m = x.iter().sum::<f64>() / n as f64;
        let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n as f64;
        let s = var.sqrt();
        x.iter_mut().for_each(|v| *v = (*v - m) / s);

        let mut w = base_window();
        w.window_span = span;
        w.pupil_x = SampledStream {
            samples: x.clone(),
            sample_rate: fs,
        };
        w.pupil_y = SampledStream {
            samples: x,
            sample_rate: fs,
        };
        let names = eye_feature_names();
        let feats = eye_features(&w).unwrap();
        let idx = names
            .iter()
            .position(|n| n == "pupil_x_de_0.2_0.4hz")
            .unwrap();
        let expected = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!(
            (feats[idx] - expected).abs() < 0.1,
            "{} vs {expected}",
            feats[idx]
        );
    }
}
