//! Pearson correlation between MFCC matrices and the six-method comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::melbank::{BankMethod, MelBankConfig};
use crate::mfcc::{mfcc_downsampled, mfcc_pipeline, MfccMatrix, DEFAULT_LOG_FLOOR};
use crate::signal::{decimate, FrameParams, Signal, Window};

/// Single-pass Pearson correlation,
/// `(Sxy - Sx Sy / n) / sqrt((Sxx - Sx^2 / n)(Syy - Sy^2 / n))`,
/// clamped to `[-1, 1]`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 || is_constant(x) || is_constant(y) {
        return Err(Error::DegenerateVector);
    }
    let n = x.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    let var = (sxx - sx * sx / n) * (syy - sy * sy / n);
    if !(var > 0.0) {
        return Err(Error::DegenerateVector);
    }
    let r = (sxy - sx * sy / n) / var.sqrt();
    if r.is_nan() {
        return Err(Error::DegenerateVector);
    }
    Ok(r.clamp(-1.0, 1.0))
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

fn check_rows(original: &MfccMatrix, down: &MfccMatrix) -> Result<usize> {
    if original.n_filters() != down.n_filters() {
        return Err(Error::DimensionMismatch {
            expected: original.n_filters(),
            found: down.n_filters(),
        });
    }
    Ok(original.n_frames().min(down.n_frames()))
}

/// Per-coefficient r over the first `min(P, P')` frames.
pub fn case1_correlation(original: &MfccMatrix, down: &MfccMatrix) -> Result<Vec<f64>> {
    let frames = check_rows(original, down)?;
    original
        .coeffs()
        .iter()
        .zip(down.coeffs())
        .map(|(a, b)| pearson(&a[..frames], &b[..frames]))
        .collect()
}

/// r between both matrices flattened row-major over the first
/// `min(P, P')` frames.
pub fn case2_correlation(original: &MfccMatrix, down: &MfccMatrix) -> Result<f64> {
    let frames = check_rows(original, down)?;
    let flat = |m: &MfccMatrix| -> Vec<f64> {
        m.coeffs()
            .iter()
            .flat_map(|row| row[..frames].iter().copied())
            .collect()
    };
    pearson(&flat(original), &flat(down))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub method: BankMethod,
    pub per_coefficient_r: Vec<f64>,
    pub per_coefficient_r2: Vec<f64>,
    pub concatenated_r: f64,
    pub frames_used: usize,
}

impl CorrelationReport {
    pub fn from_matrices(
        method: BankMethod,
        original: &MfccMatrix,
        down: &MfccMatrix,
    ) -> Result<Self> {
        let per_coefficient_r = case1_correlation(original, down)?;
        let per_coefficient_r2 = per_coefficient_r.iter().map(|r| r * r).collect();
        Ok(Self {
            method,
            per_coefficient_r,
            per_coefficient_r2,
            concatenated_r: case2_correlation(original, down)?,
            frames_used: original.n_frames().min(down.n_frames()),
        })
    }
}

/// Analysis settings shared by the original and the decimated pipelines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub frame: FrameParams,
    pub n_filters: usize,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    pub log_floor: f64,
    pub alpha: usize,
}

impl Default for PipelineConfig {
    /// 32 ms frames with 16 ms hop at 16 kHz, 30 filters over 130-6800 Hz.
    fn default() -> Self {
        Self {
            frame: FrameParams::new(512, 256, Window::PaperHamming)
                .expect("default frame parameters are valid"),
            n_filters: 30,
            f_min_hz: 130.0,
            f_max_hz: 6800.0,
            log_floor: DEFAULT_LOG_FLOOR,
            alpha: 2,
        }
    }
}

impl PipelineConfig {
    pub fn bank_config(&self, sample_rate_hz: f64) -> MelBankConfig {
        MelBankConfig::for_frames(
            sample_rate_hz,
            self.frame.frame_len(),
            self.n_filters,
            self.f_min_hz,
            self.f_max_hz,
        )
    }
}

/// One report per method in `methods`, in the given order.
pub fn compare_selected(
    signal: &Signal,
    config: &PipelineConfig,
    methods: &[BankMethod],
) -> Result<Vec<CorrelationReport>> {
    if config.alpha != 2 {
        return Err(Error::UnsupportedFactor(config.alpha));
    }
    let bank_config = config.bank_config(signal.sample_rate_hz());
    let original = mfcc_pipeline(signal, &config.frame, &bank_config, config.log_floor)?;
    let y = decimate(signal, config.alpha)?;
    let params_down = config.frame.scaled_down(config.alpha)?;
    methods
        .iter()
        .map(|&method| {
            let down = mfcc_downsampled(&y, method, &bank_config, &params_down, config.log_floor)?;
            CorrelationReport::from_matrices(method, &original, &down)
        })
        .collect()
}

/// Reports for all six methods, ordered A to F.
pub fn compare_methods(signal: &Signal, config: &PipelineConfig) -> Result<Vec<CorrelationReport>> {
    compare_selected(signal, config, &BankMethod::ALL)
}
