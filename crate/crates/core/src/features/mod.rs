//! Signal-to-feature extraction: band-limited PSD and differential
//! entropy over the five EEG bands, the eye-movement feature table, and
//! min-max scaling with a reusable scaler record.

mod eye;
mod matrix;
mod scale;
mod spectral;

pub use eye::{eye_feature_names, eye_features, EyeWindow, SampledStream, EYE_FEATURE_COUNT};
pub use matrix::{FeatureMatrix, RowMeta};
pub use scale::{minmax_scale, Scaler};
pub use spectral::{
    bandpass, de_bands, eeg_bands, periodogram, psd_bands, pupil_bands, BandDef, SignalWindow,
    DE_VARIANCE_FLOOR,
};
