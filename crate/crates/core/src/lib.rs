//! MFCC features for original and time-compressed speech.
//!
//! The crate computes Mel-frequency cepstral coefficients, resamples speech by
//! rational factors, and derives MFCCs of 2x-decimated speech through six
//! transformations of the original Mel filter bank (types A to F). The
//! [`analysis`] module scores each transformation by Pearson correlation
//! against the MFCCs of the original signal.
//!
//! ```
//! use tsm_mfcc::io::{synthesize, SynthKind, SynthSpec};
//! use tsm_mfcc::analysis::{compare_methods, PipelineConfig};
//!
//! let spec = SynthSpec::new(SynthKind::WhiteNoise { seed: 1 }, 0.5, 16000);
//! let signal = synthesize(&spec).unwrap();
//! let reports = compare_methods(&signal, &PipelineConfig::default()).unwrap();
//! assert_eq!(reports.len(), 6);
//! ```

pub mod analysis;
pub mod cli;
pub mod error;
pub mod io;
pub mod melbank;
pub mod mfcc;
pub mod signal;

pub use error::{Error, Result};
