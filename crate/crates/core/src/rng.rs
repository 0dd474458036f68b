//! Seeded pseudo-random numbers.
//!
//! SplitMix64 with Box–Muller for Gaussians. The generator is fully
//! specified here so that identical seeds reproduce identical streams on
//! any platform (and in reimplementations outside this crate).

use crate::mat::Mat;
use crate::scalar::Scalar;

/// SplitMix64 generator (public-domain algorithm by Sebastiano Vigna).
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    gauss_spare: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed, gauss_spare: None }
    }

    /// Independent child stream for (seed, tag); used to decouple restarts,
    /// certification probes and dataset draws from one experiment seed.
    pub fn derive(seed: u64, tag: u64) -> Self {
        let mut base = Self::new(seed);
        let a = base.next_u64();
        let mut mixer = Self::new(a ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        Self::new(mixer.next_u64())
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in {0, 1, ..., n-1}.
    pub fn next_below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    /// Standard normal via Box–Muller; the paired draw is cached.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(v) = self.gauss_spare.take() {
            return v;
        }
        // u1 in (0, 1] so the log is finite.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let t = 2.0 * std::f64::consts::PI * u2;
        self.gauss_spare = Some(r * t.sin());
        r * t.cos()
    }

    pub fn gaussian_mat<T: Scalar>(&mut self, rows: usize, cols: usize, std_dev: f64) -> Mat<T> {
        Mat::from_fn(rows, cols, |_, _| T::from_f64(self.next_gaussian() * std_dev))
    }

    /// Gaussian vector normalized to unit Euclidean length.
    pub fn unit_vector<T: Scalar>(&mut self, len: usize) -> Vec<T> {
        loop {
            let v: Vec<f64> = (0..len).map(|_| self.next_gaussian()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-30 {
                return v.into_iter().map(|x| T::from_f64(x / norm)).collect();
            }
        }
    }
}
