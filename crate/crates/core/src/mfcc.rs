//! MFCC pipeline: Mel spectrum, log compression and DCT, plus the
//! method-specific Mel spectra of decimated speech.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::melbank::{
    build_bank, reverse_bank, transform_bank, BankMethod, MelBankConfig, MelFilterBank,
};
use crate::signal::{stft, FrameParams, Signal, Spectrogram};

pub const DEFAULT_LOG_FLOOR: f64 = 1e-10;

/// Filter-bank outputs, `F` rows by `P` frames.
#[derive(Debug, Clone, PartialEq)]
pub struct MelSpectrum {
    values: Vec<Vec<f64>>,
    bank_tag: Option<BankMethod>,
    log_domain: bool,
}

impl MelSpectrum {
    pub fn new(values: Vec<Vec<f64>>, bank_tag: Option<BankMethod>) -> Self {
        Self {
            values,
            bank_tag,
            log_domain: false,
        }
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn n_filters(&self) -> usize {
        self.values.len()
    }

    pub fn n_frames(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    /// `None` for the standard bank.
    pub fn bank_tag(&self) -> Option<BankMethod> {
        self.bank_tag
    }

    pub fn is_log(&self) -> bool {
        self.log_domain
    }

    pub fn column(&self, p: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[p]).collect()
    }
}

/// Cepstral coefficients `r = 1..=F`, stored as `F` rows by `P` frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfccMatrix {
    coeffs: Vec<Vec<f64>>,
    source: String,
}

impl MfccMatrix {
    pub fn new(coeffs: Vec<Vec<f64>>, source: impl Into<String>) -> Result<Self> {
        let p = coeffs.first().map_or(0, Vec::len);
        if let Some(bad) = coeffs.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: bad.len(),
            });
        }
        Ok(Self {
            coeffs,
            source: source.into(),
        })
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    /// Coefficient `r` (0-based) across all frames.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.coeffs[r]
    }

    pub fn n_filters(&self) -> usize {
        self.coeffs.len()
    }

    pub fn n_frames(&self) -> usize {
        self.coeffs.first().map_or(0, Vec::len)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

fn apply_bank(weights: &[Vec<f64>], spec: &Spectrogram) -> Vec<Vec<f64>> {
    weights
        .iter()
        .map(|row| {
            spec.magnitude_columns()
                .iter()
                .map(|mags| row.iter().zip(mags).map(|(w, m)| w * m).sum())
                .collect()
        })
        .collect()
}

/// `values[m][p] = sum_k weights[m][k] |X_p(k)|`.
pub fn mel_spectrum(spec: &Spectrogram, bank: &MelFilterBank) -> Result<MelSpectrum> {
    if bank.n_bins() != spec.n_bins() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_bins(),
            found: bank.n_bins(),
        });
    }
    Ok(MelSpectrum::new(
        apply_bank(bank.weights(), spec),
        bank.method(),
    ))
}

/// Natural log of every entry, with values below `floor` clamped to it.
pub fn log_compress(ms: &MelSpectrum, floor: f64) -> Result<MelSpectrum> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "log floor must be positive, got {floor}"
        )));
    }
    let values = ms
        .values
        .iter()
        .map(|row| row.iter().map(|&v| v.max(floor).ln()).collect())
        .collect();
    Ok(MelSpectrum {
        values,
        bank_tag: ms.bank_tag,
        log_domain: true,
    })
}

/// `c[r][p] = sum_{m=1}^{F} L[m][p] cos(r (2m - 1) pi / 2F)` for `r = 1..=F`.
///
/// There is no `r = 0` term and no orthonormal scaling.
pub fn dct_mfcc(log_mel: &MelSpectrum) -> MfccMatrix {
    let f = log_mel.n_filters();
    let basis: Vec<Vec<f64>> = (1..=f)
        .map(|r| {
            (1..=f)
                .map(|m| (r as f64 * (2 * m - 1) as f64 * PI / (2 * f) as f64).cos())
                .collect()
        })
        .collect();
    let coeffs = basis
        .iter()
        .map(|cos_row| {
            (0..log_mel.n_frames())
                .map(|p| {
                    cos_row
                        .iter()
                        .zip(&log_mel.values)
                        .map(|(c, row)| c * row[p])
                        .sum()
                })
                .collect()
        })
        .collect();
    let source = match log_mel.bank_tag {
        Some(m) => format!("type {m}"),
        None => "standard".to_string(),
    };
    MfccMatrix { coeffs, source }
}

/// STFT, standard Mel bank, log, DCT.
pub fn mfcc_pipeline(
    signal: &Signal,
    params: &FrameParams,
    config: &MelBankConfig,
    floor: f64,
) -> Result<MfccMatrix> {
    let spec = stft(signal, params)?;
    let bank = build_bank(config)?;
    let log_mel = log_compress(&mel_spectrum(&spec, &bank)?, floor)?;
    Ok(dct_mfcc(&log_mel))
}

/// Type D Mel spectrum from the `F/2` filter outputs `g`:
/// `[g1, (g1+g2)/2, g2, ..., g_{F/2}, (g_{F/2}+g1)/2]`. The last mean wraps
/// around to `g1`.
pub fn interleave_means(g: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = g.len();
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        let next = &g[(i + 1) % n];
        out.push(g[i].clone());
        out.push(g[i].iter().zip(next).map(|(a, b)| (a + b) / 2.0).collect());
    }
    out
}

/// Average of the forward bank outputs and the outputs of the reversed bank
/// put back into forward order.
pub fn reverse_add_average(spec: &Spectrogram, bank: &MelFilterBank) -> Result<Vec<Vec<f64>>> {
    let forward = mel_spectrum(spec, bank)?;
    let reversed = mel_spectrum(spec, &reverse_bank(bank))?;
    let f = forward.n_filters();
    Ok(forward
        .values
        .iter()
        .enumerate()
        .map(|(m, o)| {
            o.iter()
                .zip(&reversed.values[f - 1 - m])
                .map(|(a, b)| (a + b) / 2.0)
                .collect()
        })
        .collect())
}

/// Pre-log Mel spectrum of decimated speech for one bank method. Always has
/// `F` rows, `F` being the filter count of the original bank.
pub fn downsampled_mel_spectrum(
    spec: &Spectrogram,
    method: BankMethod,
    original: &MelFilterBank,
) -> Result<MelSpectrum> {
    let bank = transform_bank(original, method, 2)?;
    let values = match method {
        BankMethod::A | BankMethod::B | BankMethod::C => return mel_spectrum(spec, &bank),
        BankMethod::D => interleave_means(mel_spectrum(spec, &bank)?.values()),
        BankMethod::E | BankMethod::FRev => reverse_add_average(spec, &bank)?,
    };
    Ok(MelSpectrum::new(values, Some(method)))
}

/// MFCCs of `y`, the 2x decimation of a signal whose standard bank is
/// described by `original_config`. `params_down` must use half the original
/// frame length.
pub fn mfcc_downsampled(
    y: &Signal,
    method: BankMethod,
    original_config: &MelBankConfig,
    params_down: &FrameParams,
    floor: f64,
) -> Result<MfccMatrix> {
    if params_down.frame_len() * 2 != original_config.n_bins {
        return Err(Error::DimensionMismatch {
            expected: original_config.n_bins / 2,
            found: params_down.frame_len(),
        });
    }
    let grid = y.sample_rate_hz() / params_down.frame_len() as f64;
    if (grid - original_config.bin_to_hz).abs() > 1e-9 * original_config.bin_to_hz {
        return Err(Error::InvalidParameter(format!(
            "decimated bin spacing {grid} Hz does not match the original {} Hz",
            original_config.bin_to_hz
        )));
    }
    let original = build_bank(original_config)?;
    let spec = stft(y, params_down)?;
    let mel = downsampled_mel_spectrum(&spec, method, &original)?;
    Ok(dct_mfcc(&log_compress(&mel, floor)?))
}
