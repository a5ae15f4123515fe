//! Raw-recording CSV readers for `extract`.
//!
//! EEG (wide format, one row per sample, rows grouped by window):
//! ```text
//! # sample_rate=200
//! window_id,subject,clip,label,ch_0,ch_1,...
//! w001,s01,1,2,0.118,-0.042,...
//! ```
//!
//! Eye tracker (long format, one value per row; `sample_rate` is only
//! meaningful for the pupil streams and may be left empty elsewhere):
//! ```text
//! window_id,subject,clip,label,window_span,kind,sample_rate,value
//! w001,s01,1,2,1.0,pupil_x,60,3.1
//! w001,s01,1,2,1.0,fixation_duration,,240
//! ```

use affect_core::error::{CoreError, Result};
use affect_core::features::{
    de_bands, eeg_bands, eye_feature_names, eye_features, psd_bands, EyeWindow, FeatureMatrix,
    RowMeta, SampledStream, SignalWindow,
};
use affect_core::numeric::Matrix;

fn parse_cell(raw: &str, lineno: usize, column: &str) -> Result<f64> {
    raw.trim().parse::<f64>().map_err(|_| {
        CoreError::Parse(format!(
            "row {lineno} column {column}: non-numeric cell '{raw}'"
        ))
    })
}

struct RawWindow {
    meta: RowMeta,
    label: f64,
}

/// Read a raw EEG CSV and emit one PSD and one DE feature per band per
/// channel for every window.
pub fn extract_eeg(text: &str) -> Result<FeatureMatrix> {
    let mut lines = text.lines().enumerate().peekable();
    let (_, first) = lines
        .next()
        .ok_or_else(|| CoreError::Parse("empty EEG CSV".into()))?;
    let sample_rate: f64 = first
        .strip_prefix("# sample_rate=")
        .ok_or_else(|| {
            CoreError::Parse("EEG CSV must start with a '# sample_rate=<hz>' line".into())
        })?
        .trim()
        .parse()
        .map_err(|_| CoreError::Parse(format!("unreadable sample rate in '{first}'")))?;
    if sample_rate <= 0.0 {
        return Err(CoreError::Parse("sample_rate must be positive".into()));
    }
    let (_, header) = lines
        .next()
        .ok_or_else(|| CoreError::Parse("EEG CSV has no header row".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < 5 || cols[..4] != ["window_id", "subject", "clip", "label"] {
        return Err(CoreError::Parse(
            "EEG header must be window_id,subject,clip,label,<channel names>".into(),
        ));
    }
    let channels: Vec<String> = cols[4..].iter().map(|s| s.to_string()).collect();

    // Collect samples window by window; windows are contiguous blocks of
    // rows sharing a window_id.
    let mut windows: Vec<(RawWindow, Vec<Vec<f64>>)> = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(CoreError::Parse(format!(
                "row {}: {} fields, expected {}",
                lineno + 1,
                fields.len(),
                cols.len()
            )));
        }
        let same_window = windows.last().is_some_and(|(w, _)| w.meta.id == fields[0]);
        if !same_window {
            let clip: u32 = fields[2].parse().map_err(|_| {
                CoreError::Parse(format!(
                    "row {} column clip: non-numeric cell '{}'",
                    lineno + 1,
                    fields[2]
                ))
            })?;
            let label = parse_cell(fields[3], lineno + 1, "label")?;
            windows.push((
                RawWindow {
                    meta: RowMeta {
                        id: fields[0].to_string(),
                        subject: fields[1].to_string(),
                        clip,
                    },
                    label,
                },
                vec![Vec::new(); channels.len()],
            ));
        }
        let (_, chans) = windows.last_mut().expect("window pushed above");
        for (ci, raw) in fields[4..].iter().enumerate() {
            chans[ci].push(parse_cell(raw, lineno + 1, &channels[ci])?);
        }
    }
    if windows.is_empty() {
        return Err(CoreError::Data("EEG CSV contains no sample rows".into()));
    }

    let bands = eeg_bands();
    let mut names = Vec::with_capacity(channels.len() * bands.len() * 2);
    for ch in &channels {
        for b in &bands {
            names.push(format!("eeg_{ch}_psd_{}", b.name));
        }
        for b in &bands {
            names.push(format!("eeg_{ch}_de_{}", b.name));
        }
    }

    let mut values = Vec::with_capacity(windows.len());
    let mut labels = Vec::with_capacity(windows.len());
    let mut meta = Vec::with_capacity(windows.len());
    for (w, chans) in windows {
        let span = chans[0].len() as f64 / sample_rate;
        let mut row = Vec::with_capacity(names.len());
        for (ci, samples) in chans.into_iter().enumerate() {
            let sw = SignalWindow::new(samples, sample_rate, channels[ci].clone(), span)?;
            row.extend(psd_bands(&sw, &bands)?);
            row.extend(de_bands(&sw, &bands)?);
        }
        values.push(row);
        labels.push(w.label);
        meta.push(w.meta);
    }
    FeatureMatrix::new(names, Matrix::from_rows(&values)?, labels, meta)
}

/// Read a long-format eye-tracker CSV and emit the fixed eye feature
/// vector for every window.
pub fn extract_eye(text: &str) -> Result<FeatureMatrix> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CoreError::Parse("empty eye CSV".into()))?;
    let expected = "window_id,subject,clip,label,window_span,kind,sample_rate,value";
    if header != expected {
        return Err(CoreError::Parse(format!(
            "eye header must be exactly '{expected}'"
        )));
    }

    struct EyeAcc {
        meta: RowMeta,
        label: f64,
        window: EyeWindow,
    }
    fn empty_window(span: f64) -> EyeWindow {
        let empty_stream = || SampledStream {
            samples: Vec::new(),
            sample_rate: 0.0,
        };
        EyeWindow {
            window_span: span,
            pupil_x: empty_stream(),
            pupil_y: empty_stream(),
            dispersion_x: Vec::new(),
            dispersion_y: Vec::new(),
            fixation_durations: Vec::new(),
            fixation_dispersions: Vec::new(),
            blink_durations: Vec::new(),
            saccade_durations: Vec::new(),
            saccade_amplitudes: Vec::new(),
            saccade_latencies: Vec::new(),
        }
    }

    let mut windows: Vec<EyeAcc> = Vec::new();
    for (lineno, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(CoreError::Parse(format!(
                "row {}: {} fields, expected 8",
                lineno + 1,
                fields.len()
            )));
        }
        let same_window = windows.last().is_some_and(|w| w.meta.id == fields[0]);
        if !same_window {
            let clip: u32 = fields[2].parse().map_err(|_| {
                CoreError::Parse(format!(
                    "row {} column clip: non-numeric cell '{}'",
                    lineno + 1,
                    fields[2]
                ))
            })?;
            windows.push(EyeAcc {
                meta: RowMeta {
                    id: fields[0].to_string(),
                    subject: fields[1].to_string(),
                    clip,
                },
                label: parse_cell(fields[3], lineno + 1, "label")?,
                window: empty_window(parse_cell(fields[4], lineno + 1, "window_span")?),
            });
        }
        let acc = windows.last_mut().expect("window pushed above");
        let value = parse_cell(fields[7], lineno + 1, "value")?;
        let kind = fields[5];
        match kind {
            "pupil_x" | "pupil_y" => {
                let rate = parse_cell(fields[6], lineno + 1, "sample_rate")?;
                let stream = if kind == "pupil_x" {
                    &mut acc.window.pupil_x
                } else {
                    &mut acc.window.pupil_y
                };
                if stream.samples.is_empty() {
                    stream.sample_rate = rate;
                } else if stream.sample_rate != rate {
                    return Err(CoreError::Parse(format!(
                        "row {}: sample_rate changed mid-window for {kind}",
                        lineno + 1
                    )));
                }
                stream.samples.push(value);
            }
            "dispersion_x" => acc.window.dispersion_x.push(value),
            "dispersion_y" => acc.window.dispersion_y.push(value),
            "fixation_duration" => acc.window.fixation_durations.push(value),
            "fixation_dispersion" => acc.window.fixation_dispersions.push(value),
            "blink_duration" => acc.window.blink_durations.push(value),
            "saccade_duration" => acc.window.saccade_durations.push(value),
            "saccade_amplitude" => acc.window.saccade_amplitudes.push(value),
            "saccade_latency" => acc.window.saccade_latencies.push(value),
            other => {
                return Err(CoreError::Parse(format!(
                    "row {}: unknown stream kind '{other}'",
                    lineno + 1
                )))
            }
        }
    }
    if windows.is_empty() {
        return Err(CoreError::Data("eye CSV contains no value rows".into()));
    }

    let mut values = Vec::with_capacity(windows.len());
    let mut labels = Vec::with_capacity(windows.len());
    let mut meta = Vec::with_capacity(windows.len());
    for acc in windows {
        values.push(eye_features(&acc.window)?);
        labels.push(acc.label);
        meta.push(acc.meta);
    }
    FeatureMatrix::new(
        eye_feature_names(),
        Matrix::from_rows(&values)?,
        labels,
        meta,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use affect_core::features::EYE_FEATURE_COUNT;
    use std::f64::consts::PI;
    use std::fmt::Write as _;

    fn eeg_csv(n_channels: usize, n_windows: usize, sample_rate: usize) -> String {
        let mut s = format!("# sample_rate={sample_rate}\nwindow_id,subject,clip,label");
        for c in 0..n_channels {
            let _ = write!(s, ",ch_{c}");
        }
        s.push('\n');
        for w in 0..n_windows {
            for t in 0..sample_rate {
                let _ = write!(s, "w{w:03},s01,{},1", w % 15 + 1);
                for c in 0..n_channels {
                    let x = (2.0 * PI * 10.0 * t as f64 / sample_rate as f64 + c as f64).sin();
                    let _ = write!(s, ",{x:?}");
                }
                s.push('\n');
            }
        }
        s
    }

    #[test]
    fn eeg_shape_is_two_features_per_band_per_channel() {
        let fm = extract_eeg(&eeg_csv(62, 3, 200)).unwrap();
        assert_eq!(fm.rows(), 3);
        assert_eq!(fm.dim(), 62 * 5 * 2);
        assert!(fm.names.contains(&"eeg_ch_0_psd_alpha".to_string()));
        assert!(fm.names.contains(&"eeg_ch_61_de_gamma".to_string()));
    }

    #[test]
    fn eeg_non_numeric_cell_names_row_and_column() {
        let mut text = eeg_csv(2, 1, 8);
        text = text.replace("w000,s01,1,1,", "w000,s01,1,oops,");
        let err = extract_eeg(&text).unwrap_err().to_string();
        assert!(err.contains("label") && err.contains("oops"), "{err}");
    }

    #[test]
    fn eeg_requires_sample_rate_header() {
        assert!(extract_eeg("window_id,subject,clip,label,ch_0\n").is_err());
    }

    fn eye_csv(n_windows: usize) -> String {
        let mut s =
            String::from("window_id,subject,clip,label,window_span,kind,sample_rate,value\n");
        for w in 0..n_windows {
            for t in 0..240 {
                let v = 3.0 + (t as f64 / 10.0).sin() * 0.2;
                let _ = writeln!(s, "w{w:03},s01,{},2,60.0,pupil_x,4,{v:?}", w % 15 + 1);
                let _ = writeln!(s, "w{w:03},s01,{},2,60.0,pupil_y,4,{v:?}", w % 15 + 1);
            }
            for kind in [
                "dispersion_x",
                "dispersion_y",
                "fixation_duration",
                "fixation_dispersion",
                "blink_duration",
                "saccade_duration",
                "saccade_amplitude",
                "saccade_latency",
            ] {
                let _ = writeln!(s, "w{w:03},s01,{},2,60.0,{kind},,0.5", w % 15 + 1);
            }
        }
        s
    }

    #[test]
    fn eye_produces_the_fixed_feature_vector() {
        let fm = extract_eye(&eye_csv(4)).unwrap();
        assert_eq!(fm.rows(), 4);
        assert_eq!(fm.dim(), EYE_FEATURE_COUNT);
        assert_eq!(fm.names, eye_feature_names());
    }

    #[test]
    fn eye_rejects_unknown_stream_kind() {
        let text = "window_id,subject,clip,label,window_span,kind,sample_rate,value\n\
                    w0,s01,1,2,1.0,eyebrow_angle,,0.5\n";
        let err = extract_eye(text).unwrap_err().to_string();
        assert!(err.contains("eyebrow_angle"), "{err}");
    }

    #[test]
    fn extraction_is_deterministic() {
        let text = eeg_csv(3, 2, 128);
        assert_eq!(
            extract_eeg(&text).unwrap().to_csv(),
            extract_eeg(&text).unwrap().to_csv()
        );
    }
}
