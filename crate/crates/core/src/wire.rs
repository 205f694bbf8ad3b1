//! Canonical payload encoding.
//!
//! Every value crossing a `comm` or `broadcast` is encoded as compact JSON
//! (UTF-8, no insignificant whitespace, struct fields in declaration order,
//! one value per envelope). Payload types that contain maps must use ordered
//! maps such as `BTreeMap` for the encoding to be canonical.

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{ChoreoError, Result};

/// Values that may cross a location boundary.
pub trait Portable: Serialize + DeserializeOwned {}

impl<T: Serialize + DeserializeOwned> Portable for T {}

pub fn encode<V: Serialize + ?Sized>(value: &V) -> Result<Vec<u8>> {
    serde_json::to_vec(value).map_err(|e| ChoreoError::WireFormat(format!("encode: {e}")))
}

pub fn decode<V: DeserializeOwned>(bytes: &[u8]) -> Result<V> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| ChoreoError::WireFormat(format!("payload is not UTF-8: {e}")))?;
    serde_json::from_str(text).map_err(|e| ChoreoError::WireFormat(format!("decode: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ErrorKind;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    #[test]
    fn encoding_is_compact_json() {
        assert_eq!(encode(&"TAPL").unwrap(), br#""TAPL""#);
        assert_eq!(encode(&Some(3u8)).unwrap(), b"3");
        assert_eq!(encode(&(1, true)).unwrap(), b"[1,true]");
    }

    #[test]
    fn malformed_payloads_are_wire_errors() {
        assert_eq!(decode::<u32>(b"\"x\"").unwrap_err().kind(), ErrorKind::WireFormat);
        assert_eq!(decode::<u32>(&[0xff, 0xfe]).unwrap_err().kind(), ErrorKind::WireFormat);
    }

    proptest! {
        #[test]
        fn round_trip_and_canonical(s in ".*", n in any::<i64>(), b in any::<bool>(),
                                    m in proptest::collection::btree_map("[a-z]{0,4}", "[a-z]{0,4}", 0..6)) {
            let value: (String, i64, bool, Option<BTreeMap<String, String>>) = (s, n, b, Some(m));
            let bytes = encode(&value).unwrap();
            let back: (String, i64, bool, Option<BTreeMap<String, String>>) = decode(&bytes).unwrap();
            prop_assert_eq!(&back, &value);
            prop_assert_eq!(encode(&back).unwrap(), bytes);
        }
    }
}
