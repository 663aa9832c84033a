//! Session configuration, setup handshake, and the stockpile/report text files.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::thread;

use serde::{Deserialize, Serialize};
use sha3::{Digest, Sha3_256};

use super::{IntersectionReport, PartyId, SessionError, Status};
use crate::bits::Word;
use crate::mpc::frame::{range, Frame};
use crate::mpc::transport::{channel_mesh, Transport};
use crate::mpc::TransportKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Mode {
    /// Every input party also computes.
    Direct,
    /// Input parties share toward `servers` computing nodes.
    Outsourced { servers: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SessionVariant {
    AtLeastTwo,
    AtLeastM { m: u32 },
    FixedPlusM { fixed_parties: Vec<PartyId>, m: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartyEntry {
    pub id: PartyId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    /// Hash-per-line file; local to the party and excluded from the handshake.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stockpile: Option<PathBuf>,
    #[serde(default = "yes")]
    pub active: bool,
}

fn yes() -> bool {
    true
}

fn default_sigma() -> usize {
    256
}

fn default_count_bits() -> usize {
    20
}

fn default_mode() -> Mode {
    Mode::Direct
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    #[serde(default)]
    pub epoch: u32,
    #[serde(default = "default_sigma")]
    pub sigma: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key_bits: Option<usize>,
    #[serde(default = "default_count_bits")]
    pub count_bits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub transport: TransportChoice,
    pub variant: SessionVariant,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(rename = "party")]
    pub parties: Vec<PartyEntry>,
}

/// Serializable mirror of [`TransportKind`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportChoice {
    #[default]
    Channels,
    Tcp,
}

impl From<TransportChoice> for TransportKind {
    fn from(t: TransportChoice) -> Self {
        match t {
            TransportChoice::Channels => TransportKind::Channels,
            TransportChoice::Tcp => TransportKind::Tcp,
        }
    }
}

impl SessionConfig {
    pub fn from_toml(text: &str) -> Result<Self, SessionError> {
        let cfg: SessionConfig =
            toml::from_str(text).map_err(|e| SessionError::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn active_parties(&self) -> Vec<PartyId> {
        let mut ids: Vec<PartyId> = self.parties.iter().filter(|p| p.active).map(|p| p.id).collect();
        ids.sort_unstable();
        ids
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |m: String| Err(SessionError::ConfigInvalid(m));
        let mut ids: Vec<PartyId> = self.parties.iter().map(|p| p.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("party ids must be distinct".into());
        }
        let active = self.active_parties().len();
        if active < 2 {
            return bad(format!("need at least 2 active parties, got {active}"));
        }
        if !matches!(self.sigma, 8 | 16 | 32 | 64 | 128 | 256) {
            return bad(format!("sigma {} not one of 8, 16, 32, 64, 128, 256", self.sigma));
        }
        if self.count_bits == 0 || self.count_bits > 32 {
            return bad(format!("count_bits {} outside 1..=32", self.count_bits));
        }
        if let Mode::Outsourced { servers } = self.mode {
            if servers == 0 || servers >= active {
                return bad(format!("outsourcing needs 1 <= servers < {active}, got {servers}"));
            }
        }
        if let SessionVariant::FixedPlusM { fixed_parties, .. } = &self.variant {
            for p in fixed_parties {
                if !ids.contains(p) {
                    return bad(format!("fixed party {p} is not configured"));
                }
            }
        }
        Ok(())
    }

    /// Digest of everything the parties must agree on. Stockpile paths and
    /// the local seed are excluded.
    pub fn agreement_hash(&self) -> [u8; 32] {
        let mut public = self.clone();
        public.seed = None;
        for p in &mut public.parties {
            p.stockpile = None;
        }
        let json = serde_json::to_vec(&public).expect("config serializes");
        Sha3_256::digest(json).into()
    }
}

/// Every party broadcasts its config digest and checks the others against it.
/// Returns the agreed digest, or the first party whose digest differs from
/// party 0's.
pub fn handshake(configs: &[(PartyId, SessionConfig)]) -> Result<[u8; 32], SessionError> {
    let n = configs.len();
    let digests: Vec<[u8; 32]> = configs.iter().map(|(_, c)| c.agreement_hash()).collect();
    let mesh = channel_mesh(n);
    let results: Vec<Result<Vec<bool>, SessionError>> = thread::scope(|s| {
        let handles: Vec<_> = mesh
            .into_iter()
            .zip(&digests)
            .map(|(mut ep, digest)| {
                s.spawn(move || {
                    let me = ep.id();
                    let bits: Vec<bool> = (0..256).map(|i| digest[i / 8] >> (i % 8) & 1 == 1).collect();
                    for to in (0..n).filter(|&t| t != me) {
                        let f = Frame {
                            epoch: 0,
                            round: 0,
                            sender: me as u32,
                            range_id: range::HANDSHAKE,
                            bits: bits.clone(),
                        };
                        ep.send(to, f.encode())?;
                    }
                    let mut agree = vec![true; n];
                    for from in (0..n).filter(|&f| f != me) {
                        let f = Frame::decode(&ep.recv(from)?)
                            .map_err(|e| crate::mpc::MpcError::TransportFailure(e.to_string()))?;
                        agree[from] = f.range_id == range::HANDSHAKE && f.bits == bits;
                    }
                    Ok(agree)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("handshake thread")).collect()
    });
    let views = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    for (i, ok) in views[0].iter().enumerate() {
        if !ok {
            return Err(SessionError::ConfigMismatch(configs[i].0));
        }
    }
    Ok(digests[0])
}

/// Reads a hash-per-line stockpile. Blank lines and `#` comments are skipped.
pub fn read_stockpile(text: &str, sigma: usize) -> Result<Vec<Word>, SessionError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let w = Word::from_hex(line, sigma as u32).map_err(|e| SessionError::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?;
        if w.is_zero() {
            return Err(SessionError::Parse {
                line: i + 1,
                msg: "the all-zero value is reserved".into(),
            });
        }
        out.push(w);
    }
    Ok(out)
}

/// One `hex shared|exclusive` line per owned value, in ascending order.
pub fn write_report(r: &IntersectionReport) -> String {
    let mut s = String::new();
    for e in &r.entries {
        s.push_str(&e.v.to_hex());
        s.push(' ');
        s.push_str(&e.status.to_string());
        s.push('\n');
    }
    s
}

pub fn parse_report(text: &str, sigma: usize) -> Result<BTreeMap<Word, Status>, SessionError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| SessionError::Parse { line: i + 1, msg };
        let (hex, status) = line
            .trim()
            .split_once(' ')
            .ok_or_else(|| err("expected `<hex> <status>`".into()))?;
        let v = Word::from_hex(hex, sigma as u32).map_err(|e| err(e.to_string()))?;
        let status = match status.trim() {
            "shared" => Status::Shared,
            "exclusive" => Status::Exclusive,
            other => return Err(err(format!("unknown status {other:?}"))),
        };
        out.insert(v, status);
    }
    Ok(out)
}
