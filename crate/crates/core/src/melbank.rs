//! Mel scale conversion, triangular Mel filter banks and the six bank
//! transformations used for 2x-decimated speech.
//!
//! A bank row `m` is the triangle through the edge frequencies
//! `edges[m-1] <= edges[m] < edges[m+1]`, evaluated at the frequency of each
//! spectrum bin (`k * bin_to_hz`). Support is half open: a bin that falls
//! exactly on the upper edge gets weight zero. Peak weight is 1; rows are not
//! area-normalized.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn hz_to_mel(hz: f64) -> Result<f64> {
    if hz < 0.0 || hz.is_nan() {
        return Err(Error::NegativeFrequency(hz));
    }
    Ok(2595.0 * (1.0 + hz / 700.0).log10())
}

pub fn mel_to_hz(mel: f64) -> Result<f64> {
    if mel < 0.0 || mel.is_nan() {
        return Err(Error::NegativeFrequency(mel));
    }
    Ok(700.0 * (10f64.powf(mel / 2595.0) - 1.0))
}

/// Parameters of a Mel filter bank and the spectrum grid it multiplies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MelBankConfig {
    pub n_filters: usize,
    pub f_min_hz: f64,
    pub f_max_hz: f64,
    /// Length of the spectrum the bank is applied to.
    pub n_bins: usize,
    /// Frequency step between adjacent bins.
    pub bin_to_hz: f64,
}

impl MelBankConfig {
    /// Bank over the full `frame_len`-point DFT of a signal sampled at
    /// `sample_rate_hz`.
    pub fn for_frames(
        sample_rate_hz: f64,
        frame_len: usize,
        n_filters: usize,
        f_min_hz: f64,
        f_max_hz: f64,
    ) -> Self {
        Self {
            n_filters,
            f_min_hz,
            f_max_hz,
            n_bins: frame_len,
            bin_to_hz: sample_rate_hz / frame_len as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_min_hz >= 0.0 && self.f_min_hz < self.f_max_hz && self.f_max_hz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= f_min < f_max, got {} and {}",
                self.f_min_hz, self.f_max_hz
            )));
        }
        if self.n_filters < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 filters, got {}",
                self.n_filters
            )));
        }
        if self.n_bins < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 bins, got {}",
                self.n_bins
            )));
        }
        if !(self.bin_to_hz > 0.0 && self.bin_to_hz.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bin spacing must be positive, got {}",
                self.bin_to_hz
            )));
        }
        Ok(())
    }
}

/// The six bank constructions for decimated speech.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BankMethod {
    /// Original centers on the half-length bin grid.
    A,
    /// Halved centers.
    B,
    /// Fresh Mel bank over the halved band.
    C,
    /// Halved alternate centers; outputs interleaved with neighbor means.
    D,
    /// Forward and mirrored type A outputs averaged.
    E,
    /// Forward and mirrored type B outputs averaged.
    #[serde(rename = "F")]
    FRev,
}

impl BankMethod {
    pub const ALL: [BankMethod; 6] = [
        BankMethod::A,
        BankMethod::B,
        BankMethod::C,
        BankMethod::D,
        BankMethod::E,
        BankMethod::FRev,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BankMethod::A => "A",
            BankMethod::B => "B",
            BankMethod::C => "C",
            BankMethod::D => "D",
            BankMethod::E => "E",
            BankMethod::FRev => "F",
        }
    }
}

impl fmt::Display for BankMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for BankMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(BankMethod::A),
            "B" => Ok(BankMethod::B),
            "C" => Ok(BankMethod::C),
            "D" => Ok(BankMethod::D),
            "E" => Ok(BankMethod::E),
            "F" | "F_REV" | "FREV" => Ok(BankMethod::FRev),
            other => Err(Error::InvalidParameter(format!(
                "unknown bank method '{other}'"
            ))),
        }
    }
}

/// `F x K` matrix of triangular filter weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterBank {
    weights: Vec<Vec<f64>>,
    edges_hz: Vec<f64>,
    config: MelBankConfig,
    method: Option<BankMethod>,
}

impl MelFilterBank {
    /// Triangular bank through `edges_hz` (`F + 2` entries: lower boundary,
    /// the `F` centers, upper boundary). The edges must be strictly increasing.
    pub fn from_edges(edges_hz: Vec<f64>, n_bins: usize, bin_to_hz: f64) -> Result<Self> {
        if edges_hz.len() < 3 {
            return Err(Error::InvalidParameter(
                "a bank needs at least one center and two boundaries".into(),
            ));
        }
        if edges_hz.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidParameter(
                "bank edges must be strictly increasing".into(),
            ));
        }
        let n_filters = edges_hz.len() - 2;
        let weights = (1..=n_filters)
            .map(|m| {
                let (lo, c, hi) = (edges_hz[m - 1], edges_hz[m], edges_hz[m + 1]);
                (0..n_bins)
                    .map(|k| triangle(k as f64 * bin_to_hz, lo, c, hi))
                    .collect()
            })
            .collect();
        let config = MelBankConfig {
            n_filters,
            f_min_hz: edges_hz[0],
            f_max_hz: edges_hz[n_filters + 1],
            n_bins,
            bin_to_hz,
        };
        Ok(Self {
            weights,
            edges_hz,
            config,
            method: None,
        })
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn row(&self, m: usize) -> &[f64] {
        &self.weights[m]
    }

    pub fn n_filters(&self) -> usize {
        self.weights.len()
    }

    pub fn n_bins(&self) -> usize {
        self.config.n_bins
    }

    pub fn centers_hz(&self) -> &[f64] {
        &self.edges_hz[1..self.edges_hz.len() - 1]
    }

    /// Boundary and center frequencies, `F + 2` entries.
    pub fn edges_hz(&self) -> &[f64] {
        &self.edges_hz
    }

    pub fn config(&self) -> &MelBankConfig {
        &self.config
    }

    /// `None` for a standard bank.
    pub fn method(&self) -> Option<BankMethod> {
        self.method
    }

    fn tagged(mut self, method: BankMethod) -> Self {
        self.method = Some(method);
        self
    }
}

fn triangle(f: f64, lo: f64, c: f64, hi: f64) -> f64 {
    if f < lo || f >= hi {
        0.0
    } else if f < c {
        (f - lo) / (c - lo)
    } else {
        (f - hi) / (c - hi)
    }
}

/// Standard bank: `F` centers equally spaced in mel strictly between
/// `f_min` and `f_max`, with the band limits as boundary edges.
pub fn build_bank(config: &MelBankConfig) -> Result<MelFilterBank> {
    config.validate()?;
    let mel_min = hz_to_mel(config.f_min_hz)?;
    let mel_max = hz_to_mel(config.f_max_hz)?;
    let step = (mel_max - mel_min) / (config.n_filters + 1) as f64;
    let mut edges = Vec::with_capacity(config.n_filters + 2);
    edges.push(config.f_min_hz);
    for m in 1..=config.n_filters {
        edges.push(mel_to_hz(mel_min + m as f64 * step)?);
    }
    edges.push(config.f_max_hz);
    let mut bank = MelFilterBank::from_edges(edges, config.n_bins, config.bin_to_hz)?;
    bank.config = *config;
    Ok(bank)
}

/// Bank for the spectrum of the signal decimated by `alpha` (only 2 is
/// supported). `original` must be a standard bank over the full-rate DFT;
/// the result covers `original.n_bins() / 2` bins with the same Hz per bin.
///
/// Types E and F return the type A and type B banks; their reverse-and-average
/// step acts on filter outputs and lives in [`crate::mfcc`].
pub fn transform_bank(
    original: &MelFilterBank,
    method: BankMethod,
    alpha: usize,
) -> Result<MelFilterBank> {
    if alpha != 2 {
        return Err(Error::UnsupportedFactor(alpha));
    }
    let cfg = original.config();
    if !cfg.n_bins.is_multiple_of(alpha) {
        return Err(Error::NotDivisible {
            len: cfg.n_bins,
            alpha,
        });
    }
    let bins = cfg.n_bins / alpha;
    let scale = 1.0 / alpha as f64;
    let edges = original.edges_hz();
    let bank = match method {
        BankMethod::A | BankMethod::E => {
            MelFilterBank::from_edges(edges.to_vec(), bins, cfg.bin_to_hz)?
        }
        BankMethod::B | BankMethod::FRev => MelFilterBank::from_edges(
            edges.iter().map(|e| e * scale).collect(),
            bins,
            cfg.bin_to_hz,
        )?,
        BankMethod::C => build_bank(&MelBankConfig {
            n_filters: cfg.n_filters,
            f_min_hz: cfg.f_min_hz * scale,
            f_max_hz: cfg.f_max_hz * scale,
            n_bins: bins,
            bin_to_hz: cfg.bin_to_hz,
        })?,
        BankMethod::D => {
            let f = original.n_filters();
            if !f.is_multiple_of(2) {
                return Err(Error::OddFilterCount(f));
            }
            // edges[m] is center m (1-based); keep centers 1, 3, ..., F-1
            let mut halved = Vec::with_capacity(f / 2 + 2);
            halved.push(edges[0] * scale);
            halved.extend((1..f).step_by(2).map(|m| edges[m] * scale));
            halved.push(edges[f] * scale);
            MelFilterBank::from_edges(halved, bins, cfg.bin_to_hz)?
        }
    };
    Ok(bank.tagged(method))
}

/// Reverses filter order and mirrors every row along the bin axis, so the
/// widest (highest-frequency) filter comes first and covers the low bins.
pub fn reverse_bank(bank: &MelFilterBank) -> MelFilterBank {
    let top = (bank.n_bins() - 1) as f64 * bank.config.bin_to_hz;
    let weights = bank
        .weights
        .iter()
        .rev()
        .map(|row| row.iter().rev().copied().collect())
        .collect();
    let edges_hz: Vec<f64> = bank.edges_hz.iter().rev().map(|e| top - e).collect();
    let config = MelBankConfig {
        f_min_hz: edges_hz[0],
        f_max_hz: edges_hz[edges_hz.len() - 1],
        ..bank.config
    };
    MelFilterBank {
        weights,
        edges_hz,
        config,
        method: bank.method,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn paper_bank() -> MelFilterBank {
        build_bank(&MelBankConfig::for_frames(16000.0, 512, 30, 130.0, 6800.0)).unwrap()
    }

    fn is_unimodal(row: &[f64]) -> bool {
        let peak = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        row[..=peak].windows(2).all(|w| w[0] <= w[1])
            && row[peak..].windows(2).all(|w| w[0] >= w[1])
    }

    #[test]
    fn mel_scale_values() {
        assert_eq!(hz_to_mel(0.0).unwrap(), 0.0);
        // 30-digit evaluation of 2595 log10(1 + f/700)
        assert_relative_eq!(
            hz_to_mel(700.0).unwrap(),
            781.172_838_748_031_2,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            hz_to_mel(6800.0).unwrap(),
            2_672.754_564_664_465,
            epsilon = 1e-9
        );
        assert!(hz_to_mel(-1.0).is_err());
        assert_eq!(mel_to_hz(0.0).unwrap(), 0.0);
        assert_relative_eq!(mel_to_hz(2595.0).unwrap(), 6300.0, epsilon = 1e-9);
        assert!(mel_to_hz(-0.5).is_err());
        for f in [130.0, 1000.0, 6800.0] {
            assert!((mel_to_hz(hz_to_mel(f).unwrap()).unwrap() - f).abs() < 1e-6);
        }
    }

    #[test]
    fn paper_bank_spacing() {
        let bank = paper_bank();
        assert_eq!(bank.n_filters(), 30);
        assert_eq!(bank.n_bins(), 512);
        let mels: Vec<f64> = bank
            .edges_hz()
            .iter()
            .map(|&f| hz_to_mel(f).unwrap())
            .collect();
        for w in mels.windows(2) {
            // (hz_to_mel(6800) - hz_to_mel(130)) / 31 evaluated to 30 digits
            assert_relative_eq!(w[1] - w[0], 80.025_042_864_05, epsilon = 1e-9);
        }
        assert!(bank.centers_hz().windows(2).all(|w| w[0] < w[1]));
        // nothing above the Nyquist bin
        for row in bank.weights() {
            assert!(row[257..].iter().all(|&w| w == 0.0));
        }
    }

    #[test]
    fn toy_bank_matches_hand_evaluation() {
        // bins at 0, 100, 200, 300 Hz; edges 0 | 100 | 250 | 300
        let bank = MelFilterBank::from_edges(vec![0.0, 100.0, 250.0, 300.0], 4, 100.0).unwrap();
        let expected = [
            [0.0, 1.0, 50.0 / 150.0, 0.0],
            [0.0, 0.0, 100.0 / 150.0, 0.0],
        ];
        for (row, want) in bank.weights().iter().zip(expected) {
            for (w, e) in row.iter().zip(want) {
                assert_relative_eq!(*w, e, epsilon = 1e-15);
            }
        }
        // bin exactly at a center weighs 1, at the upper edge 0
        assert_eq!(bank.row(0)[1], 1.0);
        assert_eq!(bank.row(1)[3], 0.0);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = MelBankConfig::for_frames(16000.0, 512, 30, 130.0, 6800.0);
        cfg.n_filters = 1;
        assert!(build_bank(&cfg).is_err());
        let cfg = MelBankConfig::for_frames(16000.0, 512, 30, 7000.0, 6800.0);
        assert!(build_bank(&cfg).is_err());
        let cfg = MelBankConfig::for_frames(16000.0, 1, 30, 130.0, 6800.0);
        assert!(build_bank(&cfg).is_err());
    }

    #[test]
    fn type_b_halves_centers() {
        let toy = MelFilterBank::from_edges(vec![500.0, 1000.0, 2000.0, 3000.0], 64, 62.5).unwrap();
        let b = transform_bank(&toy, BankMethod::B, 2).unwrap();
        assert_eq!(b.centers_hz(), &[500.0, 1000.0][..]);
        assert_eq!(b.n_bins(), 32);
        assert_eq!(b.method(), Some(BankMethod::B));
    }

    #[test]
    fn type_b_is_a_direct_halved_build() {
        let orig = paper_bank();
        let b = transform_bank(&orig, BankMethod::B, 2).unwrap();
        let halved: Vec<f64> = orig.edges_hz().iter().map(|e| e * 0.5).collect();
        let direct = MelFilterBank::from_edges(halved, 256, orig.config().bin_to_hz).unwrap();
        assert_eq!(b.weights(), direct.weights());
    }

    #[test]
    fn type_a_truncates_original() {
        let orig = paper_bank();
        let a = transform_bank(&orig, BankMethod::A, 2).unwrap();
        assert_eq!(a.centers_hz(), orig.centers_hz());
        for (ra, ro) in a.weights().iter().zip(orig.weights()) {
            assert_eq!(ra.len(), 256);
            assert_eq!(&ra[..], &ro[..256]);
        }
        let e = transform_bank(&orig, BankMethod::E, 2).unwrap();
        assert_eq!(e.weights(), a.weights());
        assert_eq!(e.method(), Some(BankMethod::E));
    }

    #[test]
    fn type_c_rebuilds_halved_band() {
        let orig = paper_bank();
        let c = transform_bank(&orig, BankMethod::C, 2).unwrap();
        assert_eq!(c.n_filters(), 30);
        assert_eq!(c.edges_hz()[0], 65.0);
        assert_eq!(*c.edges_hz().last().unwrap(), 3400.0);
        let mels: Vec<f64> = c
            .edges_hz()
            .iter()
            .map(|&f| hz_to_mel(f).unwrap())
            .collect();
        for w in mels.windows(2) {
            // (hz_to_mel(3400) - hz_to_mel(65)) / 31 evaluated to 30 digits
            assert_relative_eq!(w[1] - w[0], 61.034_602_708_518_58, epsilon = 1e-9);
        }
    }

    #[test]
    fn type_d_alternate_centers() {
        let orig = paper_bank();
        let d = transform_bank(&orig, BankMethod::D, 2).unwrap();
        assert_eq!(d.n_filters(), 15);
        let expected: Vec<f64> = (0..30)
            .step_by(2)
            .map(|i| orig.centers_hz()[i] / 2.0)
            .collect();
        assert_eq!(d.centers_hz(), &expected[..]);
        assert_eq!(d.edges_hz()[0], 65.0);
        assert_eq!(*d.edges_hz().last().unwrap(), orig.centers_hz()[29] / 2.0);

        let odd = build_bank(&MelBankConfig::for_frames(16000.0, 512, 29, 130.0, 6800.0)).unwrap();
        assert!(matches!(
            transform_bank(&odd, BankMethod::D, 2),
            Err(Error::OddFilterCount(29))
        ));
    }

    #[test]
    fn only_factor_two() {
        let err = transform_bank(&paper_bank(), BankMethod::A, 3).unwrap_err();
        assert!(err.to_string().contains("unsupported factor"));
    }

    #[test]
    fn all_types_are_well_formed() {
        let orig = paper_bank();
        for method in BankMethod::ALL {
            let bank = transform_bank(&orig, method, 2).unwrap();
            for bank in [reverse_bank(&bank), bank] {
                assert!(
                    bank.centers_hz().windows(2).all(|w| w[0] < w[1]),
                    "{method}"
                );
                for row in bank.weights() {
                    assert!(row.iter().all(|&w| (0.0..=1.0).contains(&w)));
                    assert!(is_unimodal(row), "{method}");
                    let nz: Vec<usize> = (0..row.len()).filter(|&k| row[k] > 0.0).collect();
                    assert!(!nz.is_empty(), "{method}: empty filter");
                    assert_eq!(nz.len(), nz[nz.len() - 1] - nz[0] + 1, "{method}: gap");
                }
            }
        }
    }

    #[test]
    fn reverse_examples() {
        let one = MelFilterBank::from_edges(vec![0.0, 150.0, 300.0], 5, 100.0).unwrap();
        let r = reverse_bank(&one);
        let mirrored: Vec<f64> = one.row(0).iter().rev().copied().collect();
        assert_eq!(r.row(0), &mirrored[..]);

        let three =
            MelFilterBank::from_edges(vec![0.0, 100.0, 200.0, 400.0, 700.0], 8, 100.0).unwrap();
        let r = reverse_bank(&three);
        let mirrored: Vec<f64> = three.row(2).iter().rev().copied().collect();
        assert_eq!(r.row(0), &mirrored[..]);
        assert_eq!(reverse_bank(&r).weights(), three.weights());
        for (a, b) in reverse_bank(&r).edges_hz().iter().zip(three.edges_hz()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-9);
        }
    }

    #[test]
    fn reverse_puts_widest_filter_first() {
        let a = transform_bank(&paper_bank(), BankMethod::A, 2).unwrap();
        let r = reverse_bank(&a);
        let width = |row: &[f64]| row.iter().filter(|&&w| w > 0.0).count();
        assert_eq!(width(r.row(0)), width(a.row(29)));
        assert!(width(r.row(0)) > width(r.row(29)));
        assert!(r.row(0)[..60].iter().any(|&w| w > 0.0));
    }

    #[test]
    fn method_labels_parse() {
        for m in BankMethod::ALL {
            assert_eq!(m.label().parse::<BankMethod>().unwrap(), m);
        }
        assert!("G".parse::<BankMethod>().is_err());
    }

    proptest! {
        #[test]
        fn mel_round_trip(f in 0.0f64..20000.0) {
            let back = mel_to_hz(hz_to_mel(f).unwrap()).unwrap();
            prop_assert!((back - f).abs() < 1e-6);
        }

        #[test]
        fn reverse_preserves_row_sums(
            f_min in 0.0f64..500.0,
            span in 1000.0f64..7000.0,
            n_filters in 2usize..40,
        ) {
            let cfg = MelBankConfig::for_frames(16000.0, 512, n_filters, f_min, f_min + span);
            let bank = build_bank(&cfg).unwrap();
            let rev = reverse_bank(&bank);
            let mut a: Vec<f64> = bank.weights().iter().map(|r| r.iter().sum()).collect();
            let mut b: Vec<f64> = rev.weights().iter().map(|r| r.iter().rev().sum()).collect();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            prop_assert_eq!(a, b);
            let twice = reverse_bank(&rev);
            prop_assert_eq!(twice.weights(), bank.weights());
        }
    }
}
