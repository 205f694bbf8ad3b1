use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{ChoreoError, Result};
use crate::location::{Location, LocationSet};

/// Exponential backoff for HTTP delivery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    pub attempts: u32,
    #[serde(rename = "initial_backoff_ms", with = "millis")]
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 5,
            initial_backoff: Duration::from_millis(100),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        self.initial_backoff.saturating_mul(1u32 << retry.min(16))
    }
}

/// Settings for one HTTP endpoint.
///
/// Loadable from a TOML file:
///
/// ```toml
/// location = "client"
/// listen = "127.0.0.1:9000"
/// timeout_ms = 10000
/// receive_timeout_ms = 30000
///
/// [retry]
/// attempts = 5
/// initial_backoff_ms = 100
///
/// [peers]
/// primary = "127.0.0.1:9001"
/// backup = "127.0.0.1:9002"
/// ```
///
/// or from `CHOREO_*` key-value pairs (see [`TransportConfig::apply_pairs`]).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportConfig {
    pub location: Location,
    pub listen: String,
    #[serde(default)]
    pub peers: BTreeMap<Location, String>,
    /// Connect and read timeout for outgoing requests.
    #[serde(rename = "timeout_ms", with = "millis", default = "default_timeout")]
    pub timeout: Duration,
    #[serde(
        rename = "receive_timeout_ms",
        with = "millis",
        default = "default_receive_timeout"
    )]
    pub receive_timeout: Duration,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_timeout() -> Duration {
    Duration::from_secs(10)
}

fn default_receive_timeout() -> Duration {
    super::DEFAULT_RECEIVE_TIMEOUT
}

impl TransportConfig {
    pub fn new(location: Location, listen: impl Into<String>) -> Self {
        Self {
            location,
            listen: listen.into(),
            peers: BTreeMap::new(),
            timeout: default_timeout(),
            receive_timeout: default_receive_timeout(),
            retry: RetryPolicy::default(),
        }
    }

    pub fn with_peer(mut self, peer: Location, address: impl Into<String>) -> Self {
        self.peers.insert(peer, address.into());
        self
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ChoreoError::Configuration(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ChoreoError::Configuration(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Builds a config from `CHOREO_*` pairs alone. `CHOREO_LOCATION` and
    /// `CHOREO_LISTEN` are required.
    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let pairs: Vec<(String, String)> = pairs
            .into_iter()
            .map(|(k, v)| (k.as_ref().to_owned(), v.as_ref().to_owned()))
            .collect();
        let lookup = |key: &str| {
            pairs
                .iter()
                .find(|(k, _)| k == key)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| ChoreoError::Configuration(format!("missing {key}")))
        };
        let mut config = Self::new(
            Location::new(&lookup("CHOREO_LOCATION")?)?,
            lookup("CHOREO_LISTEN")?,
        );
        config.apply_pairs(pairs)?;
        Ok(config)
    }

    /// Overrides settings from key-value pairs such as `std::env::vars()`.
    ///
    /// Recognized keys: `CHOREO_LOCATION`, `CHOREO_LISTEN`, `CHOREO_TIMEOUT_MS`,
    /// `CHOREO_RECEIVE_TIMEOUT_MS`, `CHOREO_RETRY_ATTEMPTS`,
    /// `CHOREO_RETRY_BACKOFF_MS` and `CHOREO_PEER_<name>` (the suffix is the
    /// peer's location name, case preserved). Other keys are ignored.
    pub fn apply_pairs<I, K, V>(&mut self, pairs: I) -> Result<()>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (key, value) in pairs {
            let (key, value) = (key.as_ref(), value.as_ref());
            match key {
                "CHOREO_LOCATION" => self.location = Location::new(value)?,
                "CHOREO_LISTEN" => self.listen = value.to_owned(),
                "CHOREO_TIMEOUT_MS" => self.timeout = parse_millis(key, value)?,
                "CHOREO_RECEIVE_TIMEOUT_MS" => self.receive_timeout = parse_millis(key, value)?,
                "CHOREO_RETRY_ATTEMPTS" => {
                    self.retry.attempts = value.parse().map_err(|_| bad_value(key, value))?
                }
                "CHOREO_RETRY_BACKOFF_MS" => {
                    self.retry.initial_backoff = parse_millis(key, value)?
                }
                _ => {
                    if let Some(peer) = key.strip_prefix("CHOREO_PEER_") {
                        self.peers.insert(Location::new(peer)?, value.to_owned());
                    }
                }
            }
        }
        Ok(())
    }

    /// Checks that every member of `locations` other than this endpoint has
    /// an address.
    pub fn validate_for(&self, locations: &LocationSet) -> Result<()> {
        if self.retry.attempts == 0 {
            return Err(ChoreoError::Configuration(
                "retry policy needs at least one attempt".into(),
            ));
        }
        match locations
            .without(&self.location)
            .find(|l| !self.peers.contains_key(l))
        {
            Some(missing) => Err(ChoreoError::Configuration(format!(
                "no address configured for peer `{missing}`"
            ))),
            None => Ok(()),
        }
    }
}

fn bad_value(key: &str, value: &str) -> ChoreoError {
    ChoreoError::Configuration(format!("invalid value `{value}` for {key}"))
}

fn parse_millis(key: &str, value: &str) -> Result<Duration> {
    value
        .parse()
        .map(Duration::from_millis)
        .map_err(|_| bad_value(key, value))
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}
