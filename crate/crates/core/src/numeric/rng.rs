use crate::error::{CoreError, Result};
use crate::numeric::Matrix;

/// Deterministic seeded random stream (SplitMix64 core).
///
/// The same seed yields the same sample sequence on every platform and
/// every run; there is no global generator anywhere in the crate. Streams
/// are single-owner: derive sub-streams with [`RngStream::fork`] when
/// independent lanes need their own randomness.
#[derive(Debug, Clone)]
pub struct RngStream {
    state: u64,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = loop {
            let u = self.next_f64();
            if u > 0.0 {
                break u;
            }
        };
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Unbiased integer in [0, n).
    pub fn next_index(&mut self, n: usize) -> usize {
        assert!(n > 0);
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    pub fn shuffle<T>(&mut self, slice: &mut [T]) {
        for i in (1..slice.len()).rev() {
            let j = self.next_index(i + 1);
            slice.swap(i, j);
        }
    }

    /// Derives an independent sub-stream keyed by `label`.
    pub fn fork(&mut self, label: u64) -> RngStream {
        let a = self.next_u64();
        RngStream::new(a ^ label.wrapping_mul(0xD1B54A32D192ED03))
    }
}

/// Elementwise Bernoulli sampling: each output entry is 1 with the
/// corresponding input probability, 0 otherwise.
pub fn bernoulli_sample(p: &Matrix, rng: &mut RngStream) -> Result<Matrix> {
    if let Some(v) = p.data().iter().find(|v| **v < 0.0 || **v > 1.0) {
        return Err(CoreError::InvalidArgument(format!(
            "bernoulli_sample probability {v} outside [0,1]"
        )));
    }
    let data = p
        .data()
        .iter()
        .map(|&prob| if rng.next_f64() < prob { 1.0 } else { 0.0 })
        .collect();
    Matrix::from_vec(p.rows(), p.cols(), data)
}
