//! WAV ingestion, synthetic test signals and report serialization.
//!
//! Only uncompressed 16-bit PCM is read. Multi-channel files are averaged to
//! mono and samples are scaled by `1 / 32768`.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::CorrelationReport;
use crate::error::{Error, Result};
use crate::melbank::BankMethod;
use crate::mfcc::MfccMatrix;
use crate::signal::Signal;

const PCM_SCALE: f64 = 32768.0;
const FORMAT_PCM: u16 = 1;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WavInfo {
    pub sample_rate_hz: u32,
    pub bits_per_sample: u16,
    pub channels: u16,
    /// Samples per channel.
    pub n_samples: usize,
}

pub fn read_wav(path: impl AsRef<Path>) -> Result<(Signal, WavInfo)> {
    parse_wav(&fs::read(path)?)
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct Format {
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

fn parse_fmt(body: &[u8]) -> Result<Format> {
    if body.len() < 16 {
        return Err(Error::MalformedHeader(format!(
            "fmt chunk is {} bytes, need 16",
            body.len()
        )));
    }
    let mut tag = u16_at(body, 0);
    if tag == FORMAT_EXTENSIBLE && body.len() >= 26 {
        // the sub-format GUID starts with the actual format tag
        tag = u16_at(body, 24);
    }
    if tag != FORMAT_PCM {
        return Err(Error::UnsupportedCodec(tag));
    }
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let bits = u16_at(body, 14);
    if channels == 0 {
        return Err(Error::MalformedHeader("zero channels".into()));
    }
    if sample_rate == 0 {
        return Err(Error::MalformedHeader("zero sample rate".into()));
    }
    if bits != 16 {
        return Err(Error::UnsupportedBitDepth(bits));
    }
    Ok(Format {
        channels,
        sample_rate,
        bits,
    })
}

/// Parses an in-memory RIFF/WAVE file.
pub fn parse_wav(bytes: &[u8]) -> Result<(Signal, WavInfo)> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::MalformedHeader("missing RIFF/WAVE signature".into()));
    }
    let mut format = None;
    let mut data = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let start = pos + 8;
        // tolerate a data chunk whose declared size runs past the file end
        let end = start.saturating_add(size).min(bytes.len());
        match id {
            b"fmt " => format = Some(parse_fmt(&bytes[start..end])?),
            b"data" => data = Some(&bytes[start..end]),
            _ => {}
        }
        pos = start.saturating_add(size).saturating_add(size & 1);
    }
    let format = format.ok_or_else(|| Error::MalformedHeader("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| Error::MalformedHeader("no data chunk".into()))?;

    let channels = format.channels as usize;
    let frame_bytes = 2 * channels;
    let n_samples = data.len() / frame_bytes;
    if n_samples == 0 {
        return Err(Error::MalformedHeader("data chunk holds no samples".into()));
    }
    let samples = data
        .chunks_exact(frame_bytes)
        .map(|frame| {
            let sum: f64 = frame
                .chunks_exact(2)
                .map(|s| f64::from(i16::from_le_bytes([s[0], s[1]])))
                .sum();
            sum / channels as f64 / PCM_SCALE
        })
        .collect();
    let info = WavInfo {
        sample_rate_hz: format.sample_rate,
        bits_per_sample: format.bits,
        channels: format.channels,
        n_samples,
    };
    Ok((Signal::new(samples, f64::from(format.sample_rate))?, info))
}

/// Mono 16-bit PCM encoding; samples are scaled by 32768, rounded and
/// clipped. The sample rate is rounded to the nearest integer.
pub fn encode_wav(signal: &Signal) -> Vec<u8> {
    let rate = signal.sample_rate_hz().round() as u32;
    let data_len = (signal.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &x in signal.samples() {
        let q = (x * PCM_SCALE).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

pub fn write_wav(path: impl AsRef<Path>, signal: &Signal) -> Result<()> {
    fs::write(path, encode_wav(signal))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SynthKind {
    Tone {
        freq_hz: f64,
    },
    /// Linear frequency sweep over the whole duration.
    Chirp {
        start_hz: f64,
        end_hz: f64,
    },
    /// Uniform samples in `[-1, 1)` drawn from ChaCha8 seeded with `seed`.
    WhiteNoise {
        seed: u64,
    },
    /// Sum of unit sines divided by the number of tones.
    MultiTone {
        freqs_hz: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
}

impl SynthSpec {
    pub fn new(kind: SynthKind, duration_s: f64, sample_rate_hz: u32) -> Self {
        Self {
            kind,
            duration_s,
            sample_rate_hz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "duration must be positive, got {}",
                self.duration_s
            )));
        }
        if self.sample_rate_hz == 0 {
            return Err(Error::InvalidParameter(
                "sample rate must be positive".into(),
            ));
        }
        let nyquist = f64::from(self.sample_rate_hz) / 2.0;
        let freqs: Vec<f64> = match &self.kind {
            SynthKind::Tone { freq_hz } => vec![*freq_hz],
            SynthKind::Chirp { start_hz, end_hz } => vec![*start_hz, *end_hz],
            SynthKind::WhiteNoise { .. } => Vec::new(),
            SynthKind::MultiTone { freqs_hz } => {
                if freqs_hz.is_empty() {
                    return Err(Error::InvalidParameter(
                        "multi-tone needs a frequency".into(),
                    ));
                }
                freqs_hz.clone()
            }
        };
        for f in freqs {
            if f.is_nan() || f < 0.0 {
                return Err(Error::NegativeFrequency(f));
            }
            if f >= nyquist {
                return Err(Error::AboveNyquist { freq: f, nyquist });
            }
        }
        Ok(())
    }
}

pub fn synthesize(spec: &SynthSpec) -> Result<Signal> {
    spec.validate()?;
    let fs = f64::from(spec.sample_rate_hz);
    let n = ((spec.duration_s * fs).round() as usize).max(1);
    let t = |i: usize| i as f64 / fs;
    let samples: Vec<f64> = match &spec.kind {
        SynthKind::Tone { freq_hz } => (0..n).map(|i| (2.0 * PI * freq_hz * t(i)).sin()).collect(),
        SynthKind::Chirp { start_hz, end_hz } => {
            let rate = (end_hz - start_hz) / spec.duration_s;
            (0..n)
                .map(|i| {
                    let ti = t(i);
                    (2.0 * PI * (start_hz * ti + 0.5 * rate * ti * ti)).sin()
                })
                .collect()
        }
        SynthKind::WhiteNoise { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        }
        SynthKind::MultiTone { freqs_hz } => {
            let scale = 1.0 / freqs_hz.len() as f64;
            (0..n)
                .map(|i| {
                    freqs_hz
                        .iter()
                        .map(|f| (2.0 * PI * f * t(i)).sin())
                        .sum::<f64>()
                        * scale
                })
                .collect()
        }
    };
    Signal::new(samples, fs)
}

/// Formats with six significant digits, `%g` style.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { x.to_string() };
    }
    let exp = x.abs().log10().floor() as i32;
    let sci = format!("{x:.5e}");
    // rounding can bump the exponent, e.g. 9.999996 -> 1.00000e1
    let exp = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse::<i32>().ok())
        .unwrap_or(exp);
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let (mantissa, e) = sci.split_once('e').unwrap_or((&sci, "0"));
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{e}")
    }
}

/// Correlation reports of one input file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReports {
    pub sample: String,
    pub reports: Vec<CorrelationReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

/// Which per-coefficient value a Case I table holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoefficientValue {
    RSquared,
    R,
}

fn methods_of(reports: &[CorrelationReport]) -> Vec<BankMethod> {
    reports.iter().map(|r| r.method).collect()
}

/// Concatenated r: header `sample,<methods>`, one row per input.
pub fn write_case2_csv<W: Write>(out: W, samples: &[SampleReports]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let methods = samples
        .first()
        .map(|s| methods_of(&s.reports))
        .unwrap_or_default();
    let mut header = vec!["sample".to_string()];
    header.extend(methods.iter().map(|m| m.label().to_string()));
    w.write_record(&header)?;
    for s in samples {
        if methods_of(&s.reports) != methods {
            return Err(Error::InvalidParameter(format!(
                "sample '{}' was compared with a different method set",
                s.sample
            )));
        }
        let mut row = vec![s.sample.clone()];
        row.extend(s.reports.iter().map(|r| format_sig6(r.concatenated_r)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-coefficient table: header `coeff,<methods>`, one row per coefficient.
pub fn write_case1_csv<W: Write>(
    out: W,
    reports: &[CorrelationReport],
    value: CoefficientValue,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["coeff".to_string()];
    header.extend(reports.iter().map(|r| r.method.label().to_string()));
    w.write_record(&header)?;
    let n = reports.first().map_or(0, |r| r.per_coefficient_r.len());
    for i in 0..n {
        let mut row = vec![(i + 1).to_string()];
        row.extend(reports.iter().map(|r| {
            let v = match value {
                CoefficientValue::RSquared => r.per_coefficient_r2[i],
                CoefficientValue::R => r.per_coefficient_r[i],
            };
            format_sig6(v)
        }));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_reports_json<W: Write>(out: W, samples: &[SampleReports]) -> Result<()> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, samples)?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Writes the Case II table (CSV) or the full reports (JSON) to `path`.
pub fn write_report(
    path: impl AsRef<Path>,
    samples: &[SampleReports],
    format: ReportFormat,
) -> Result<()> {
    let file = fs::File::create(path)?;
    match format {
        ReportFormat::Csv => write_case2_csv(file, samples),
        ReportFormat::Json => write_reports_json(file, samples),
    }
}

/// One CSV row per coefficient, one column per frame, no header.
pub fn write_mfcc_csv<W: Write>(out: W, mfcc: &MfccMatrix) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for row in mfcc.coeffs() {
        w.write_record(row.iter().map(|&v| format_sig6(v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mfcc_json<W: Write>(out: W, mfcc: &MfccMatrix) -> Result<()> {
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, mfcc)?;
    out.write_all(b"\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wav_bytes(channels: u16, rate: u32, bits: u16, tag: u16, pcm: &[i16]) -> Vec<u8> {
        let data_len = (pcm.len() * 2) as u32;
        let mut b = Vec::new();
        b.extend_from_slice(b"RIFF");
        b.extend_from_slice(&(36 + data_len).to_le_bytes());
        b.extend_from_slice(b"WAVEfmt ");
        b.extend_from_slice(&16u32.to_le_bytes());
        b.extend_from_slice(&tag.to_le_bytes());
        b.extend_from_slice(&channels.to_le_bytes());
        b.extend_from_slice(&rate.to_le_bytes());
        b.extend_from_slice(&(rate * u32::from(channels) * 2).to_le_bytes());
        b.extend_from_slice(&(channels * 2).to_le_bytes());
        b.extend_from_slice(&bits.to_le_bytes());
        b.extend_from_slice(b"data");
        b.extend_from_slice(&data_len.to_le_bytes());
        for s in pcm {
            b.extend_from_slice(&s.to_le_bytes());
        }
        b
    }

    #[test]
    fn hand_built_wav() {
        let pcm = [0i16, 16384, -16384, 32767, -32768, 0, 0, 0];
        let (sig, info) = parse_wav(&wav_bytes(1, 16000, 16, 1, &pcm)).unwrap();
        assert_eq!(
            sig.samples(),
            &[0.0, 0.5, -0.5, 32767.0 / 32768.0, -1.0, 0.0, 0.0, 0.0][..]
        );
        assert_eq!(info.n_samples, 8);
        assert_eq!(info.sample_rate_hz, 16000);
        assert_eq!(sig.sample_rate_hz(), 16000.0);
    }

    #[test]
    fn silent_second() {
        let (sig, info) = parse_wav(&wav_bytes(1, 16000, 16, 1, &vec![0; 16000])).unwrap();
        assert_eq!(sig.len(), 16000);
        assert!(sig.samples().iter().all(|&v| v == 0.0));
        assert_eq!(info.channels, 1);
    }

    #[test]
    fn stereo_is_averaged() {
        let pcm: Vec<i16> = (0..50).flat_map(|i| [i * 100, -i * 100]).collect();
        let (sig, info) = parse_wav(&wav_bytes(2, 8000, 16, 1, &pcm)).unwrap();
        assert_eq!(info.channels, 2);
        assert_eq!(sig.len(), 50);
        assert!(sig.samples().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn wav_errors_are_distinct() {
        assert!(matches!(
            parse_wav(b"RIFX0000WAVE"),
            Err(Error::MalformedHeader(_))
        ));
        assert!(matches!(
            parse_wav(&wav_bytes(1, 16000, 16, 3, &[0, 1])),
            Err(Error::UnsupportedCodec(3))
        ));
        assert!(matches!(
            parse_wav(&wav_bytes(1, 16000, 24, 1, &[0, 1])),
            Err(Error::UnsupportedBitDepth(24))
        ));
        let mut no_data = wav_bytes(1, 16000, 16, 1, &[]);
        no_data.truncate(36);
        assert!(matches!(
            parse_wav(&no_data),
            Err(Error::MalformedHeader(_))
        ));
    }

    #[test]
    fn skips_unknown_chunks() {
        let plain = wav_bytes(1, 16000, 16, 1, &[5, -5, 7]);
        let mut b = plain[..12].to_vec();
        b.extend_from_slice(b"LIST");
        b.extend_from_slice(&3u32.to_le_bytes());
        b.extend_from_slice(&[1, 2, 3, 0]); // odd size plus pad byte
        b.extend_from_slice(&plain[12..]);
        let (sig, _) = parse_wav(&b).unwrap();
        assert_eq!(sig.len(), 3);
        assert_eq!(sig.samples()[2], 7.0 / 32768.0);
    }

    #[test]
    fn tone_definition() {
        let s = synthesize(&SynthSpec::new(
            SynthKind::Tone { freq_hz: 1000.0 },
            0.001,
            16000,
        ))
        .unwrap();
        assert_eq!(s.len(), 16);
        for (n, v) in s.samples().iter().enumerate() {
            assert_eq!(*v, (2.0 * PI * 1000.0 * (n as f64 / 16000.0)).sin());
        }
    }

    #[test]
    fn noise_is_seeded() {
        let spec = SynthSpec::new(SynthKind::WhiteNoise { seed: 7 }, 0.1, 16000);
        let a = synthesize(&spec).unwrap();
        assert_eq!(a, synthesize(&spec).unwrap());
        assert!(a.samples().iter().all(|v| (-1.0..1.0).contains(v)));
        let other = synthesize(&SynthSpec::new(
            SynthKind::WhiteNoise { seed: 8 },
            0.1,
            16000,
        ))
        .unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn multitone_peak_is_bounded() {
        let spec = SynthSpec::new(
            SynthKind::MultiTone {
                freqs_hz: vec![1000.0, 3000.0],
            },
            0.5,
            16000,
        );
        let s = synthesize(&spec).unwrap();
        let peak = s.samples().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(peak <= 1.0);
        assert!(peak > 0.5);
    }

    #[test]
    fn nyquist_guard() {
        let spec = SynthSpec::new(SynthKind::Tone { freq_hz: 9000.0 }, 1.0, 16000);
        assert!(matches!(synthesize(&spec), Err(Error::AboveNyquist { .. })));
        let spec = SynthSpec::new(
            SynthKind::Chirp {
                start_hz: 100.0,
                end_hz: 8000.0,
            },
            1.0,
            16000,
        );
        assert!(synthesize(&spec).is_err());
        let spec = SynthSpec::new(SynthKind::Tone { freq_hz: 100.0 }, 0.0, 16000);
        assert!(synthesize(&spec).is_err());
    }

    #[test]
    fn chirp_stays_bounded() {
        let spec = SynthSpec::new(
            SynthKind::Chirp {
                start_hz: 100.0,
                end_hz: 4000.0,
            },
            0.25,
            16000,
        );
        let s = synthesize(&spec).unwrap();
        assert_eq!(s.len(), 4000);
        assert_eq!(s.samples()[0], 0.0);
        assert!(s.samples().iter().all(|v| v.abs() <= 1.0));
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(0.978123456), "0.978123");
        assert_eq!(format_sig6(-1.0), "-1");
        assert_eq!(format_sig6(123456.7), "123457");
        assert_eq!(format_sig6(1234567.0), "1.23457e6");
        assert_eq!(format_sig6(0.000012345678), "1.23457e-5");
        assert_eq!(format_sig6(9.9999996), "10");
        assert_eq!(format_sig6(0.5), "0.5");
    }

    fn report(method: BankMethod, r: f64) -> CorrelationReport {
        let per: Vec<f64> = (0..30).map(|i| r - i as f64 * 0.01).collect();
        CorrelationReport {
            method,
            per_coefficient_r2: per.iter().map(|v| v * v).collect(),
            per_coefficient_r: per,
            concatenated_r: r,
            frames_used: 12,
        }
    }

    #[test]
    fn case2_csv_layout() {
        let samples = vec![SampleReports {
            sample: "s1".into(),
            reports: BankMethod::ALL.iter().map(|&m| report(m, 0.9)).collect(),
        }];
        let mut buf = Vec::new();
        write_case2_csv(&mut buf, &samples).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(
            lines,
            vec!["sample,A,B,C,D,E,F", "s1,0.9,0.9,0.9,0.9,0.9,0.9"]
        );
    }

    #[test]
    fn case1_csv_layout() {
        let reports: Vec<_> = BankMethod::ALL.iter().map(|&m| report(m, 0.95)).collect();
        let mut buf = Vec::new();
        write_case1_csv(&mut buf, &reports, CoefficientValue::RSquared).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 31);
        assert_eq!(text.lines().next().unwrap(), "coeff,A,B,C,D,E,F");
        assert!(text.lines().nth(1).unwrap().starts_with("1,0.9025,"));

        let single = vec![report(BankMethod::A, 0.5)];
        let mut buf = Vec::new();
        write_case1_csv(&mut buf, &single, CoefficientValue::R).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("coeff,A\n1,0.5\n"));
    }

    #[test]
    fn json_round_trip() {
        let samples = vec![SampleReports {
            sample: "x".into(),
            reports: vec![report(BankMethod::FRev, 0.123_456_789_012_345_67)],
        }];
        let mut buf = Vec::new();
        write_reports_json(&mut buf, &samples).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"method\": \"F\""));
        let back: Vec<SampleReports> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, samples);
    }

    #[test]
    fn mfcc_csv_has_one_row_per_coefficient() {
        let m =
            MfccMatrix::new(vec![vec![1.0, 2.5], vec![-0.125, 0.0], vec![3.0, 4.0]], "t").unwrap();
        let mut buf = Vec::new();
        write_mfcc_csv(&mut buf, &m).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "1,2.5\n-0.125,0\n3,4\n");
    }
}
