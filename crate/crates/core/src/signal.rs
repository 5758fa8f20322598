//! Time-domain operations: framing, windowing, DFT, STFT and resampling.
//!
//! Decimation here is plain subsampling. No low-pass filter is applied unless
//! a [`ResampleSpec`] asks for one, so energy above the new Nyquist frequency
//! folds back into the retained band. [`alias_spectrum`] predicts that folded
//! spectrum from the DFT of the full-rate frame.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tap count of the optional anti-aliasing filter used by [`resample`].
pub const ANTI_ALIAS_TAPS: usize = 63;

#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if samples.is_empty() {
            return Err(Error::InvalidParameter("signal has no samples".into()));
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}

/// Analysis window applied to each frame before the DFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// `0.54 - 0.46 cos(n pi / N)`. Only half a cosine period spans the
    /// frame, so the window rises from 0.08 to about 1.0 and never tapers
    /// back down. Decimating this window by 2 gives exactly the same window
    /// at half the length.
    #[default]
    PaperHamming,
    /// The symmetric Hamming window `0.54 - 0.46 cos(2 pi n / (N - 1))`.
    StandardHamming,
    Rectangular,
}

impl Window {
    pub fn weight(self, n: usize, len: usize) -> f64 {
        match self {
            Window::PaperHamming => 0.54 - 0.46 * (n as f64 * PI / len as f64).cos(),
            Window::StandardHamming => {
                if len < 2 {
                    1.0
                } else {
                    0.54 - 0.46 * (2.0 * PI * n as f64 / (len - 1) as f64).cos()
                }
            }
            Window::Rectangular => 1.0,
        }
    }

    pub fn coefficients(self, len: usize) -> Vec<f64> {
        (0..len).map(|n| self.weight(n, len)).collect()
    }
}

/// Frame length, hop and window of a short-time analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameParams {
    frame_len: usize,
    hop: usize,
    window: Window,
}

impl FrameParams {
    /// Frame length must be even and `0 < hop <= frame_len`.
    pub fn new(frame_len: usize, hop: usize, window: Window) -> Result<Self> {
        if frame_len == 0 || !frame_len.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "frame length must be positive and even, got {frame_len}"
            )));
        }
        if hop == 0 || hop > frame_len {
            return Err(Error::InvalidParameter(format!(
                "hop must be in 1..={frame_len}, got {hop}"
            )));
        }
        Ok(Self {
            frame_len,
            hop,
            window,
        })
    }

    /// Frame length `N` with hop `N/2`.
    pub fn half_overlap(frame_len: usize, window: Window) -> Result<Self> {
        Self::new(frame_len, frame_len / 2, window)
    }

    pub fn frame_len(&self) -> usize {
        self.frame_len
    }

    pub fn hop(&self) -> usize {
        self.hop
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// Parameters for the same time span after decimation by `alpha`.
    pub fn scaled_down(&self, alpha: usize) -> Result<Self> {
        if alpha == 0 || !self.frame_len.is_multiple_of(alpha) || !self.hop.is_multiple_of(alpha) {
            return Err(Error::InvalidParameter(format!(
                "frame length {} and hop {} are not divisible by {alpha}",
                self.frame_len, self.hop
            )));
        }
        Self::new(self.frame_len / alpha, self.hop / alpha, self.window)
    }

    /// Number of whole frames in a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame_len {
            0
        } else {
            (len - self.frame_len) / self.hop + 1
        }
    }
}

/// Splits `signal` into overlapping frames; frame `p` starts at `p * hop`.
/// Trailing samples that do not fill a frame are dropped.
pub fn frame_signal<'a>(signal: &'a Signal, params: &FrameParams) -> Result<Vec<&'a [f64]>> {
    let n = params.frame_len;
    let count = params.frame_count(signal.len());
    if count == 0 {
        return Err(Error::SignalTooShort {
            len: signal.len(),
            frame_len: n,
        });
    }
    Ok((0..count)
        .map(|p| &signal.samples[p * params.hop..p * params.hop + n])
        .collect())
}

pub fn apply_window(frame: &[f64], window: Window) -> Vec<f64> {
    let len = frame.len();
    frame
        .iter()
        .enumerate()
        .map(|(n, x)| x * window.weight(n, len))
        .collect()
}

fn plan(len: usize) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft_forward(len)
}

fn run_fft(fft: &dyn Fft<f64>, frame: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = frame.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft.process(&mut buf);
    buf
}

/// Unnormalized forward DFT, `X(k) = sum_n x[n] exp(-j 2 pi k n / N)`.
///
/// Performs no windowing; see [`apply_window`].
pub fn dft(frame: &[f64]) -> Vec<Complex64> {
    if frame.is_empty() {
        return Vec::new();
    }
    run_fft(plan(frame.len()).as_ref(), frame)
}

/// Complex STFT with one column per frame and `K = frame_len` rows.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    bins: Vec<Vec<Complex64>>,
    magnitudes: Vec<Vec<f64>>,
    frame_params: FrameParams,
    sample_rate_hz: f64,
}

impl Spectrogram {
    /// Number of frequency bins `K`.
    pub fn n_bins(&self) -> usize {
        self.frame_params.frame_len
    }

    /// Number of frames `P`.
    pub fn n_frames(&self) -> usize {
        self.bins.len()
    }

    pub fn column(&self, p: usize) -> &[Complex64] {
        &self.bins[p]
    }

    pub fn magnitude_column(&self, p: usize) -> &[f64] {
        &self.magnitudes[p]
    }

    pub fn magnitude_columns(&self) -> &[Vec<f64>] {
        &self.magnitudes
    }

    pub fn magnitude(&self, k: usize, p: usize) -> f64 {
        self.magnitudes[p][k]
    }

    pub fn frame_params(&self) -> &FrameParams {
        &self.frame_params
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    /// Frequency of bin `k`, `k * fs / N`.
    pub fn bin_hz(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate_hz / self.frame_params.frame_len as f64
    }

    /// Builds a spectrogram from precomputed columns, e.g. for synthetic
    /// magnitude tests. Every column must have `frame_len` entries.
    pub fn from_columns(
        bins: Vec<Vec<Complex64>>,
        frame_params: FrameParams,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        for col in &bins {
            if col.len() != frame_params.frame_len {
                return Err(Error::DimensionMismatch {
                    expected: frame_params.frame_len,
                    found: col.len(),
                });
            }
        }
        let magnitudes = bins
            .iter()
            .map(|col| col.iter().map(|c| c.norm()).collect())
            .collect();
        Ok(Self {
            bins,
            magnitudes,
            frame_params,
            sample_rate_hz,
        })
    }
}

pub fn stft(signal: &Signal, params: &FrameParams) -> Result<Spectrogram> {
    let frames = frame_signal(signal, params)?;
    let window = params.window.coefficients(params.frame_len);
    let fft = plan(params.frame_len);
    let mut windowed = vec![0.0; params.frame_len];
    let bins = frames
        .iter()
        .map(|frame| {
            for ((dst, x), w) in windowed.iter_mut().zip(frame.iter()).zip(&window) {
                *dst = x * w;
            }
            run_fft(fft.as_ref(), &windowed)
        })
        .collect();
    Spectrogram::from_columns(bins, *params, signal.sample_rate_hz)
}

/// Keeps every `q`-th sample, `out[s] = in[q s]`, with no pre-filtering.
pub fn decimate(signal: &Signal, q: usize) -> Result<Signal> {
    if q == 0 {
        return Err(Error::InvalidParameter(
            "decimation factor must be >= 1".into(),
        ));
    }
    let samples = signal.samples.iter().step_by(q).copied().collect();
    Signal::new(samples, signal.sample_rate_hz / q as f64)
}

/// Inserts `p - 1` zeros after every sample, `out[p n] = in[n]`.
pub fn interpolate_zeros(signal: &Signal, p: usize) -> Result<Signal> {
    if p == 0 {
        return Err(Error::InvalidParameter(
            "interpolation factor must be >= 1".into(),
        ));
    }
    let mut samples = vec![0.0; signal.len() * p];
    for (n, &x) in signal.samples.iter().enumerate() {
        samples[n * p] = x;
    }
    Signal::new(samples, signal.sample_rate_hz * p as f64)
}

/// Rational resampling: interpolate by `up`, then decimate by `down`.
/// The time-scale factor is `down / up`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResampleSpec {
    pub up: usize,
    pub down: usize,
    pub anti_alias: bool,
}

impl ResampleSpec {
    pub fn new(up: usize, down: usize, anti_alias: bool) -> Result<Self> {
        if up == 0 || down == 0 {
            return Err(Error::InvalidParameter(format!(
                "resampling factors must be >= 1, got up={up} down={down}"
            )));
        }
        Ok(Self {
            up,
            down,
            anti_alias,
        })
    }

    pub fn tsm_factor(&self) -> f64 {
        self.down as f64 / self.up as f64
    }
}

/// Hamming-weighted windowed-sinc low-pass with cutoff `min(pi/p, pi/q)`,
/// scaled to unity DC gain.
pub fn anti_alias_taps(p: usize, q: usize) -> Vec<f64> {
    let cutoff = PI / p.max(q) as f64;
    let mid = (ANTI_ALIAS_TAPS - 1) as f64 / 2.0;
    let mut taps: Vec<f64> = (0..ANTI_ALIAS_TAPS)
        .map(|n| {
            let t = n as f64 - mid;
            let sinc = if t == 0.0 {
                cutoff / PI
            } else {
                (cutoff * t).sin() / (PI * t)
            };
            sinc * Window::StandardHamming.weight(n, ANTI_ALIAS_TAPS)
        })
        .collect();
    let gain: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|h| *h /= gain);
    taps
}

/// Zero-phase application of an odd-length FIR: output is aligned with the
/// input and has the same length, with zeros assumed beyond both ends.
fn filter_centered(samples: &[f64], taps: &[f64]) -> Vec<f64> {
    let half = taps.len() / 2;
    let len = samples.len() as isize;
    (0..samples.len())
        .map(|n| {
            taps.iter()
                .enumerate()
                .filter_map(|(i, h)| {
                    let idx = n as isize + half as isize - i as isize;
                    (0..len).contains(&idx).then(|| h * samples[idx as usize])
                })
                .sum()
        })
        .collect()
}

pub fn resample(signal: &Signal, spec: &ResampleSpec) -> Result<Signal> {
    let up = interpolate_zeros(signal, spec.up)?;
    let up = if spec.anti_alias {
        let taps = anti_alias_taps(spec.up, spec.down);
        Signal::new(filter_centered(up.samples(), &taps), up.sample_rate_hz)?
    } else {
        up
    };
    decimate(&up, spec.down)
}

/// Spectrum of a frame decimated by `alpha`, predicted from the DFT of the
/// full-rate frame: `Y(k') = (1/alpha) sum_l X(k' + l S)` with `S = N / alpha`.
pub fn alias_spectrum(spectrum: &[Complex64], alpha: usize) -> Result<Vec<Complex64>> {
    let n = spectrum.len();
    if alpha == 0 || !n.is_multiple_of(alpha) {
        return Err(Error::NotDivisible { len: n, alpha });
    }
    let s = n / alpha;
    let scale = 1.0 / alpha as f64;
    Ok((0..s)
        .map(|k| (0..alpha).map(|l| spectrum[k + l * s]).sum::<Complex64>() * scale)
        .collect())
}
