//! What to run: benchmark, variants, sizes and output.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BenchName {
    /// `locally` versus a plain loop incrementing a counter.
    Counter,
    /// `comm` versus direct transport sends between two locations.
    Comm,
    /// The replicated key-value store, end to end.
    Kvs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Handwritten,
    Choreographic,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Handwritten, Variant::Choreographic];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum TransportKind {
    InProcess,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    #[default]
    Human,
    Json,
    Csv,
}

macro_rules! display_as_value {
    ($($ty:ty),*) => {$(
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let value = self.to_possible_value().expect("no skipped variants");
                f.write_str(value.get_name())
            }
        }
    )*};
}

display_as_value!(BenchName, Variant, TransportKind, OutputFormat);

pub const DEFAULT_SEED: u64 = 0x5eed_2024;
pub const DEFAULT_WARMUP: usize = 3;

/// A fully resolved benchmark request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSpec {
    pub bench: BenchName,
    /// Variants to measure, in order.
    pub variants: Vec<Variant>,
    /// Loop counts for counter and comm; one sweep point each.
    pub iterations: Vec<u64>,
    /// Requests per KVS run.
    pub requests: usize,
    pub get_ratio: f64,
    /// Always set for kvs; ignored by counter.
    pub transport: Option<TransportKind>,
    pub reps: usize,
    pub warmup: usize,
    pub seed: u64,
    pub output: OutputFormat,
    pub out_file: Option<PathBuf>,
}

/// Keys accepted in a TOML config file; every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct SpecFile {
    pub bench: Option<BenchName>,
    pub variant: Option<Variant>,
    pub iterations: Option<Vec<u64>>,
    pub requests: Option<usize>,
    pub get_ratio: Option<f64>,
    pub transport: Option<TransportKind>,
    pub reps: Option<usize>,
    pub warmup: Option<usize>,
    pub seed: Option<u64>,
    pub output: Option<OutputFormat>,
    pub out_file: Option<PathBuf>,
}

impl SpecFile {
    pub fn parse(text: &str) -> Result<Self, BenchError> {
        toml::from_str(text).map_err(|e| BenchError::Config(format!("bad config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Keys set in `overrides` win.
    pub fn overridden_by(self, overrides: SpecFile) -> SpecFile {
        SpecFile {
            bench: overrides.bench.or(self.bench),
            variant: overrides.variant.or(self.variant),
            iterations: overrides.iterations.or(self.iterations),
            requests: overrides.requests.or(self.requests),
            get_ratio: overrides.get_ratio.or(self.get_ratio),
            transport: overrides.transport.or(self.transport),
            reps: overrides.reps.or(self.reps),
            warmup: overrides.warmup.or(self.warmup),
            seed: overrides.seed.or(self.seed),
            output: overrides.output.or(self.output),
            out_file: overrides.out_file.or(self.out_file),
        }
    }

    /// Fills defaults and checks the combination.
    pub fn resolve(self) -> Result<BenchSpec, BenchError> {
        let bench = self
            .bench
            .ok_or_else(|| BenchError::Config("no benchmark named (counter, comm or kvs)".into()))?;
        let default_iterations = match bench {
            BenchName::Counter => 1_000_000,
            BenchName::Comm => 10_000,
            BenchName::Kvs => 1,
        };
        let transport = match bench {
            BenchName::Counter => None,
            BenchName::Comm => Some(self.transport.unwrap_or(TransportKind::InProcess)),
            BenchName::Kvs => Some(self.transport.ok_or_else(|| {
                BenchError::Config("kvs needs --transport in-process or --transport http".into())
            })?),
        };
        let spec = BenchSpec {
            bench,
            variants: self.variant.map_or_else(|| Variant::ALL.to_vec(), |v| vec![v]),
            iterations: self.iterations.unwrap_or_else(|| vec![default_iterations]),
            requests: self.requests.unwrap_or(100),
            get_ratio: self.get_ratio.unwrap_or(0.5),
            transport,
            reps: self.reps.unwrap_or(match bench {
                BenchName::Kvs => 100,
                _ => 10,
            }),
            warmup: self.warmup.unwrap_or(DEFAULT_WARMUP),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            output: self.output.unwrap_or_default(),
            out_file: self.out_file,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl BenchSpec {
    pub fn new(bench: BenchName) -> Self {
        SpecFile {
            bench: Some(bench),
            transport: Some(TransportKind::InProcess),
            ..SpecFile::default()
        }
        .resolve()
        .expect("defaults are valid")
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let fail = |m: &str| Err(BenchError::Config(m.to_owned()));
        if self.variants.is_empty() {
            return fail("no variant selected");
        }
        if self.reps == 0 {
            return fail("reps must be at least 1");
        }
        match self.bench {
            BenchName::Counter | BenchName::Comm => {
                if self.iterations.is_empty() || self.iterations.contains(&0) {
                    return fail("iterations must be at least 1");
                }
            }
            BenchName::Kvs => {
                if self.transport.is_none() {
                    return fail("kvs needs an explicit transport");
                }
                if !(0.0..=1.0).contains(&self.get_ratio) {
                    return fail("get-ratio must lie in [0, 1]");
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let file = SpecFile::parse("bench = \"kvs\"\ntransport = \"http\"\nreps = 7\nseed = 1\n").unwrap();
        let flags = SpecFile {
            reps: Some(2),
            ..SpecFile::default()
        };
        let spec = file.overridden_by(flags).resolve().unwrap();
        assert_eq!(spec.bench, BenchName::Kvs);
        assert_eq!(spec.transport, Some(TransportKind::Http));
        assert_eq!((spec.reps, spec.seed), (2, 1));
        assert_eq!(spec.variants, Variant::ALL);
    }

    #[test]
    fn kvs_requires_a_transport() {
        let file = SpecFile {
            bench: Some(BenchName::Kvs),
            ..SpecFile::default()
        };
        assert!(matches!(file.resolve(), Err(BenchError::Config(_))));
    }

    #[test]
    fn counter_ignores_transport() {
        let spec = SpecFile {
            bench: Some(BenchName::Counter),
            transport: Some(TransportKind::Http),
            ..SpecFile::default()
        }
        .resolve()
        .unwrap();
        assert_eq!(spec.transport, None);
    }

    #[test]
    fn zero_iterations_rejected() {
        let file = SpecFile {
            bench: Some(BenchName::Counter),
            iterations: Some(vec![1000, 0]),
            ..SpecFile::default()
        };
        assert!(file.resolve().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(SpecFile::parse("iteratons = [5]").is_err());
    }
}
