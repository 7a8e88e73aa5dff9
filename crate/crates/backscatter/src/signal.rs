//! Measurement-side processing of far-field grids: uniform noise
//! injection, Fourier low-pass filtering, and detection of local maxima of
//! the phaseless data in the backscattering aperture.

use crate::forward::FarFieldGrid;
use crate::vec2::Vec2;
use num_complex::Complex64;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("noise level must be nonnegative and finite, got {0}")]
    BadNoiseLevel(f64),
    #[error("filter cutoff {cutoff} exceeds n_angles/2 = {half}")]
    CutoffTooLarge { cutoff: usize, half: usize },
    #[error("peak window must be at least 1")]
    BadWindow,
    #[error("backscattering aperture is empty")]
    EmptyAperture,
}

/// Multiplicative uniform noise u ↦ u + δ·r₁·|u|·e^{iπr₂} with
/// r₁, r₂ ~ Uniform[−1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Noise level δ.
    pub delta: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(delta: f64, seed: u64) -> Result<Self, SignalError> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(SignalError::BadNoiseLevel(delta));
        }
        Ok(NoiseSpec { delta, seed })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

/// Adds the uniform noise to every sample.
///
/// The two uniforms of sample i come from a counter-based stream keyed by
/// (seed, i), so the result does not depend on evaluation order and repeated
/// calls are bit-identical. δ = 0 returns the input unchanged, bit-exact.
pub fn add_noise(grid: &FarFieldGrid, spec: &NoiseSpec) -> FarFieldGrid {
    let delta = spec.delta();
    if delta == 0.0 {
        return grid.clone();
    }
    let uniform = Uniform::new_inclusive(-1.0f64, 1.0f64);
    let values = grid
        .values
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            let r1 = uniform.sample(&mut rng);
            let r2 = uniform.sample(&mut rng);
            u + Complex64::from_polar(delta * r1 * u.norm(), std::f64::consts::PI * r2)
        })
        .collect();
    FarFieldGrid { values, ..grid.clone() }
}

/// Low-pass filter in the angular Fourier domain: modes with frequency
/// index |f| > cutoff are zeroed.
///
/// `cutoff ≥ n/2` keeps every mode; that case returns the input unchanged,
/// bit-exact, so an identity filter composes exactly in pipelines.
pub fn fourier_filter(grid: &FarFieldGrid, cutoff: usize) -> Result<FarFieldGrid, SignalError> {
    let n = grid.n_angles();
    let half = n / 2;
    if cutoff > half {
        return Err(SignalError::CutoffTooLarge { cutoff, half });
    }
    if cutoff == half {
        return Ok(grid.clone());
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex64> = grid.values.clone();
    fft.process(&mut buf);
    for (i, v) in buf.iter_mut().enumerate() {
        let freq = i.min(n - i);
        if freq > cutoff {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    ifft.process(&mut buf);
    let scale = 1.0 / n as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
    Ok(FarFieldGrid { values: buf, ..grid.clone() })
}

/// One detected local maximum of |u∞|².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Grid index of the sample.
    pub index: usize,
    /// Observation angle in radians.
    pub angle: f64,
    /// Squared modulus |u∞|² at the sample.
    pub mag2: f64,
}

/// Local maxima of the phaseless data restricted to the backscattering
/// aperture {x̂ : x̂·d < 0}, sorted by decreasing squared modulus.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSet {
    /// Incident direction defining the aperture.
    pub incident: Vec2,
    pub peaks: Vec<Peak>,
    /// Grid indices belonging to the aperture.
    pub aperture: Vec<usize>,
}

/// Detects backscatter peaks: aperture samples whose squared modulus is at
/// least every sample within ±`window` grid steps (circularly) and at least
/// `prominence` times the aperture's median squared modulus.
pub fn detect_backscatter_peaks(
    grid: &FarFieldGrid,
    window: usize,
    prominence: f64,
) -> Result<PeakSet, SignalError> {
    if window == 0 {
        return Err(SignalError::BadWindow);
    }
    let n = grid.n_angles();
    let d = grid.d;
    let mag2: Vec<f64> = grid.values.iter().map(|v| v.norm_sqr()).collect();
    let aperture: Vec<usize> = (0..n).filter(|&i| grid.x_hat(i).dot(d) < 0.0).collect();
    if aperture.is_empty() {
        return Err(SignalError::EmptyAperture);
    }
    let mut sorted: Vec<f64> = aperture.iter().map(|&i| mag2[i]).collect();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let mut peaks: Vec<Peak> = aperture
        .iter()
        .copied()
        .filter(|&i| {
            let dominant = (1..=window).all(|off| {
                mag2[i] >= mag2[(i + off) % n] && mag2[i] >= mag2[(i + n - off) % n]
            });
            dominant && mag2[i] >= prominence * median
        })
        .map(|i| Peak { index: i, angle: grid.angle(i), mag2: mag2[i] })
        .collect();
    peaks.sort_by(|a, b| {
        b.mag2
            .total_cmp(&a.mag2)
            .then(a.index.cmp(&b.index))
    });
    Ok(PeakSet { incident: d, peaks, aperture })
}
