//! Machine-readable vulnerability identifiers and their hashes.
//!
//! An identifier is the triple (CPE 2.3 platform, CWE weakness class, vulnerable
//! function). Parties that describe the same vulnerability must produce the same
//! bytes, so identifiers are canonicalized into a compact JSON object with
//! sorted keys before hashing with SHA3-512.

use std::fmt;

use serde::Serialize;
use serde_json::Value;
use sha3::{Digest, Sha3_512};
use unicode_normalization::UnicodeNormalization;

use crate::bits::Word;

/// Hash widths accepted by [`hash_identifier`].
pub const SUPPORTED_SIGMAS: [u32; 5] = [16, 32, 64, 128, 256];

const CPE_PREFIX: &str = "cpe:2.3:";
const CPE_COMPONENTS: usize = 11;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum VulnIdError {
    #[error("invalid CPE 2.3 string {0:?}: {1}")]
    InvalidCpe(String, &'static str),
    #[error("invalid CWE id {0:?}")]
    InvalidCwe(String),
    #[error("vulnerable function name is empty")]
    EmptyFunction,
    #[error("malformed identifier object: {0}")]
    Malformed(String),
    #[error("unsupported hash width {0}")]
    UnsupportedSigma(u32),
    #[error("identifier hashes to the all-zero sentinel at {0} bits")]
    SentinelCollision(u32),
}

/// One vulnerability on one platform.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct VulnIdentifier {
    pub cpe: String,
    pub cwe: u32,
    pub function: String,
}

/// A σ-bit identifier hash; never the all-zero word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HashedId(Word);

impl HashedId {
    /// Wraps a word as a hashed id, rejecting the reserved zero value.
    pub fn new(word: Word) -> Result<Self, VulnIdError> {
        if word.is_zero() {
            return Err(VulnIdError::SentinelCollision(word.bits()));
        }
        Ok(HashedId(word))
    }

    pub fn word(&self) -> &Word {
        &self.0
    }

    pub fn sigma(&self) -> u32 {
        self.0.bits()
    }

    pub fn to_hex(&self) -> String {
        self.0.to_hex()
    }
}

impl fmt::Display for HashedId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.to_hex())
    }
}

#[derive(Serialize)]
struct CanonicalForm<'a> {
    cpe: &'a str,
    cwe: u32,
    function: &'a str,
}

/// Splits a CPE formatted string on unescaped colons.
fn split_cpe(body: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let mut escaped = false;
    for (i, c) in body.char_indices() {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == ':' {
            parts.push(&body[start..i]);
            start = i + 1;
        }
    }
    parts.push(&body[start..]);
    parts
}

/// Validates a CPE 2.3 formatted string and returns its lowercase form.
pub fn normalize_cpe(cpe: &str) -> Result<String, VulnIdError> {
    let bad = |why| VulnIdError::InvalidCpe(cpe.to_string(), why);
    if !cpe.chars().all(|c| c.is_ascii_graphic()) {
        return Err(bad("non-printable or non-ASCII character"));
    }
    let lower = cpe.to_ascii_lowercase();
    let body = lower
        .strip_prefix(CPE_PREFIX)
        .ok_or_else(|| bad("missing cpe:2.3: prefix"))?;
    if body.ends_with('\\') && !body.ends_with("\\\\") {
        return Err(bad("dangling escape"));
    }
    let parts = split_cpe(body);
    if parts.len() != CPE_COMPONENTS {
        return Err(bad("expected 11 components"));
    }
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad("empty component"));
    }
    if !matches!(parts[0], "a" | "o" | "h") {
        return Err(bad("part must be a, o or h"));
    }
    Ok(lower)
}

/// NFC-normalized lowercase function name.
pub fn normalize_function(name: &str) -> Result<String, VulnIdError> {
    let nfc: String = name.nfc().collect();
    let out: String = nfc.to_lowercase().nfc().collect();
    if out.trim().is_empty() {
        return Err(VulnIdError::EmptyFunction);
    }
    Ok(out)
}

/// Canonical bytes: `{"cpe":..,"cwe":..,"function":..}` with no whitespace.
pub fn canonicalize(id: &VulnIdentifier) -> Result<Vec<u8>, VulnIdError> {
    let cpe = normalize_cpe(&id.cpe)?;
    if id.cwe == 0 {
        return Err(VulnIdError::InvalidCwe("0".into()));
    }
    let function = normalize_function(&id.function)?;
    let form = CanonicalForm {
        cpe: &cpe,
        cwe: id.cwe,
        function: &function,
    };
    Ok(serde_json::to_vec(&form).expect("plain struct serializes"))
}

/// First `sigma` bits of SHA3-512 over the canonical bytes.
pub fn hash_identifier(id: &VulnIdentifier, sigma: u32) -> Result<HashedId, VulnIdError> {
    if !SUPPORTED_SIGMAS.contains(&sigma) {
        return Err(VulnIdError::UnsupportedSigma(sigma));
    }
    let canonical = canonicalize(id)?;
    hash_canonical(&canonical, sigma)
}

pub(crate) fn hash_canonical(canonical: &[u8], sigma: u32) -> Result<HashedId, VulnIdError> {
    let digest = Sha3_512::digest(canonical);
    let word = Word::from_prefix_bits(&digest, sigma).expect("digest has 512 bits");
    HashedId::new(word)
}

/// Full SHA3-512 digest of the canonical bytes, lowercase hex.
pub fn full_digest_hex(id: &VulnIdentifier) -> Result<String, VulnIdError> {
    Ok(hex::encode(Sha3_512::digest(canonicalize(id)?)))
}

fn parse_cwe(v: &Value) -> Result<u32, VulnIdError> {
    let bad = || VulnIdError::InvalidCwe(v.to_string());
    let n = match v {
        Value::Number(n) => n.as_u64().ok_or_else(bad)?,
        Value::String(s) => {
            let t = s.trim();
            let digits = t
                .get(..4)
                .filter(|p| p.eq_ignore_ascii_case("cwe-"))
                .map_or(t, |_| &t[4..]);
            digits.parse::<u64>().map_err(|_| bad())?
        }
        _ => return Err(bad()),
    };
    match u32::try_from(n) {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(bad()),
    }
}

/// Parses one identifier object. Keys are matched case-insensitively and in any
/// order; `cwe` may be a number or a `"CWE-787"` string.
pub fn parse_identifier(json: &str) -> Result<VulnIdentifier, VulnIdError> {
    let value: Value =
        serde_json::from_str(json).map_err(|e| VulnIdError::Malformed(e.to_string()))?;
    let Value::Object(map) = value else {
        return Err(VulnIdError::Malformed("expected a JSON object".into()));
    };
    let (mut cpe, mut cwe, mut function) = (None, None, None);
    for (key, v) in &map {
        match key.to_ascii_lowercase().as_str() {
            "cpe" => cpe = Some(v),
            "cwe" => cwe = Some(v),
            "function" => function = Some(v),
            other => return Err(VulnIdError::Malformed(format!("unknown field {other:?}"))),
        }
    }
    let missing = |f: &str| VulnIdError::Malformed(format!("missing field {f:?}"));
    let as_str = |f: &str, v: &Value| {
        v.as_str()
            .map(str::to_string)
            .ok_or_else(|| VulnIdError::Malformed(format!("field {f:?} must be a string")))
    };
    let id = VulnIdentifier {
        cpe: as_str("cpe", cpe.ok_or_else(|| missing("cpe"))?)?,
        cwe: parse_cwe(cwe.ok_or_else(|| missing("cwe"))?)?,
        function: as_str("function", function.ok_or_else(|| missing("function"))?)?,
    };
    canonicalize(&id)?;
    Ok(id)
}

/// log2 of |CPE| * |CWE| * |FN|.
pub fn approx_id_space(cpe_count: u64, cwe_count: u64, fn_count: u64) -> f64 {
    assert!(cpe_count >= 1 && cwe_count >= 1 && fn_count >= 1);
    (cpe_count as f64).log2() + (cwe_count as f64).log2() + (fn_count as f64).log2()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> VulnIdentifier {
        VulnIdentifier {
            cpe: "cpe:2.3:a:v:p:1.0:*:*:*:*:*:*:*".into(),
            cwe: 787,
            function: "parse_header".into(),
        }
    }

    #[test]
    fn canonical_form_is_compact_and_sorted() {
        let bytes = canonicalize(&sample()).unwrap();
        assert_eq!(
            std::str::from_utf8(&bytes).unwrap(),
            r#"{"cpe":"cpe:2.3:a:v:p:1.0:*:*:*:*:*:*:*","cwe":787,"function":"parse_header"}"#
        );
    }

    // Digests computed with Python's hashlib.sha3_512 over the canonical bytes.
    #[test]
    fn pinned_digests() {
        let router = parse_identifier(
            r#"{"cwe":120,"function":"formSetFirewallCfg","cpe":"cpe:2.3:o:tenda:ac15_firmware:15.03.05.19:*:*:*:*:*:*:*"}"#,
        )
        .unwrap();
        assert_eq!(
            full_digest_hex(&router).unwrap(),
            "ffa2b853604314a9579bc4cf058d092cb8b373c87d758c4220f82d7a179fe8b3\
             62f9c52b9ef15c1d19843961a45a087e5d8d091f39f025acc39b1ec37b8e2aea"
        );
        assert_eq!(
            hash_identifier(&router, 256).unwrap().to_hex(),
            "ffa2b853604314a9579bc4cf058d092cb8b373c87d758c4220f82d7a179fe8b3"
        );
        assert_eq!(hash_identifier(&sample(), 16).unwrap().to_hex(), "a95c");
    }

    #[test]
    fn field_order_and_case_do_not_matter() {
        let a = parse_identifier(
            r#"{"function":"ParseHeader","cwe":787,"cpe":"CPE:2.3:A:V:P:1.0:*:*:*:*:*:*:*"}"#,
        )
        .unwrap();
        let b = parse_identifier(
            r#"{"cpe":"cpe:2.3:a:v:p:1.0:*:*:*:*:*:*:*","CWE":"CWE-787","function":"parseheader"}"#,
        )
        .unwrap();
        assert_eq!(canonicalize(&a).unwrap(), canonicalize(&b).unwrap());
    }

    #[test]
    fn errors() {
        let mut id = sample();
        id.cwe = 0;
        assert!(matches!(canonicalize(&id), Err(VulnIdError::InvalidCwe(_))));
        let mut id = sample();
        id.function = "  ".into();
        assert_eq!(canonicalize(&id), Err(VulnIdError::EmptyFunction));
        let mut id = sample();
        id.cpe = "cpe:2.3:a:v:p".into();
        assert!(matches!(canonicalize(&id), Err(VulnIdError::InvalidCpe(..))));
        id.cpe = "cpe:2.3:x:v:p:1.0:*:*:*:*:*:*:*".into();
        assert!(matches!(canonicalize(&id), Err(VulnIdError::InvalidCpe(..))));
        id.cpe = "cpe:2.2:a:v:p:1.0:*:*:*:*:*:*:*".into();
        assert!(matches!(canonicalize(&id), Err(VulnIdError::InvalidCpe(..))));
        assert_eq!(
            hash_identifier(&sample(), 24),
            Err(VulnIdError::UnsupportedSigma(24))
        );
    }

    #[test]
    fn escaped_colon_stays_in_component() {
        let cpe = r"cpe:2.3:a:vendor:prod\:uct:1.0:*:*:*:*:*:*:*";
        assert!(normalize_cpe(cpe).is_ok());
    }

    #[test]
    fn hashes_are_deterministic_and_prefixes_agree() {
        let h256 = hash_identifier(&sample(), 256).unwrap();
        assert_eq!(h256, hash_identifier(&sample(), 256).unwrap());
        let h64 = hash_identifier(&sample(), 64).unwrap();
        assert!(h256.to_hex().starts_with(&h64.to_hex()));
        let mut other = sample();
        other.cwe = 788;
        assert_ne!(h256, hash_identifier(&other, 256).unwrap());
    }

    #[test]
    fn id_space_estimates() {
        assert_eq!(approx_id_space(1 << 19, 1 << 9, 1 << 53), 81.0);
        assert_eq!(approx_id_space(1, 1, 1), 0.0);
        assert_eq!(approx_id_space(1 << 10, 1 << 5, 1 << 13), 28.0);
    }

    #[test]
    fn toy_enumeration_is_injective() {
        let mut seen = std::collections::HashSet::new();
        for v in ["a", "b", "c"] {
            for cwe in 1..=4 {
                for f in ["f", "g", "fg", "gf"] {
                    let id = VulnIdentifier {
                        cpe: format!("cpe:2.3:a:{v}:p:1:*:*:*:*:*:*:*"),
                        cwe,
                        function: f.into(),
                    };
                    assert!(seen.insert(canonicalize(&id).unwrap()));
                }
            }
        }
        assert_eq!(seen.len(), 48);
    }

    proptest! {
        #[test]
        fn canonicalize_is_idempotent(
            vendor in "[A-Za-z0-9_]{1,8}",
            cwe in 1u32..2000,
            function in "\\PC{1,12}",
        ) {
            let id = VulnIdentifier {
                cpe: format!("cpe:2.3:a:{vendor}:prod:1.0:*:*:*:*:*:*:*"),
                cwe,
                function,
            };
            if let Ok(bytes) = canonicalize(&id) {
                let reparsed = parse_identifier(std::str::from_utf8(&bytes).unwrap()).unwrap();
                prop_assert_eq!(canonicalize(&reparsed).unwrap(), bytes);
            }
        }
    }
}
