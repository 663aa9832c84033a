//! In-process simulator of a permissioned hash ledger for identifier hashes,
//! and the dictionary attack that breaks it.
//!
//! Ledger file layout (little-endian):
//!
//! ```text
//! magic "VMLEDGER" | version u8 | count u32 | { len u32 | block }*
//! block = index u64 | prev [32] | time u64 | submitter (u16 len + utf8)
//!       | kind u8 | body (u32 len + bytes) | digest [32]
//! ```
//!
//! `digest` is SHA3-256 over every preceding byte of the block.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use sha3::{Digest, Sha3_256};

use crate::vulnid::{full_digest_hex, VulnIdentifier};

const MAGIC: &[u8; 8] = b"VMLEDGER";
const VERSION: u8 = 1;

pub type Digest32 = [u8; 32];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LedgerError {
    #[error("{0} is not a registered writer")]
    UnauthorizedWriter(String),
    #[error("{0} is not a registered reader")]
    UnauthorizedReader(String),
    #[error("submission is not a SHA3-512 hex digest")]
    NotAHash,
    #[error("ledger file is corrupt near block {0}")]
    Corrupt(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Match {
    pub hash: String,
    /// Indices of the submission blocks carrying this hash.
    pub blocks: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    /// Membership of the ledger, fixed at creation.
    Genesis {
        writers: Vec<String>,
        readers: Vec<String>,
        /// When set, only readers may run intersection checks.
        role_split: bool,
    },
    /// Lowercase hex of a SHA3-512 digest.
    Submission { hash: String },
    /// Event recorded by a reader's intersection check.
    IntersectionCheck { matches: Vec<Match> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub index: u64,
    pub prev: Digest32,
    /// Logical clock tick at which the block was appended.
    pub time: u64,
    pub submitter: String,
    pub payload: Payload,
    pub digest: Digest32,
}

fn put_bytes32(out: &mut Vec<u8>, b: &[u8]) {
    out.extend_from_slice(&(b.len() as u32).to_le_bytes());
    out.extend_from_slice(b);
}

impl Payload {
    fn kind(&self) -> u8 {
        match self {
            Payload::Genesis { .. } => 0,
            Payload::Submission { .. } => 1,
            Payload::IntersectionCheck { .. } => 2,
        }
    }

    fn body(&self) -> Vec<u8> {
        match self {
            Payload::Genesis {
                writers,
                readers,
                role_split,
            } => {
                let mut out = vec![*role_split as u8];
                for list in [writers, readers] {
                    out.extend_from_slice(&(list.len() as u32).to_le_bytes());
                    for name in list {
                        put_bytes32(&mut out, name.as_bytes());
                    }
                }
                out
            }
            Payload::Submission { hash } => hash.as_bytes().to_vec(),
            Payload::IntersectionCheck { matches } => {
                let mut out = Vec::new();
                out.extend_from_slice(&(matches.len() as u32).to_le_bytes());
                for m in matches {
                    put_bytes32(&mut out, m.hash.as_bytes());
                    out.extend_from_slice(&(m.blocks.len() as u32).to_le_bytes());
                    for b in &m.blocks {
                        out.extend_from_slice(&b.to_le_bytes());
                    }
                }
                out
            }
        }
    }

    fn parse(kind: u8, body: &[u8]) -> Option<Payload> {
        let mut r = Reader(body);
        let p = match kind {
            0 => {
                let role_split = match r.u8()? {
                    0 => false,
                    1 => true,
                    _ => return None,
                };
                let mut lists = [Vec::new(), Vec::new()];
                for list in &mut lists {
                    let n = r.u32()?;
                    for _ in 0..n {
                        let len = r.u32()? as usize;
                        list.push(String::from_utf8(r.take(len)?.to_vec()).ok()?);
                    }
                }
                let [writers, readers] = lists;
                Payload::Genesis {
                    writers,
                    readers,
                    role_split,
                }
            }
            1 => Payload::Submission {
                hash: String::from_utf8(r.take(body.len())?.to_vec()).ok()?,
            },
            2 => {
                let n = r.u32()?;
                let mut matches = Vec::new();
                for _ in 0..n {
                    let len = r.u32()? as usize;
                    let hash = String::from_utf8(r.take(len)?.to_vec()).ok()?;
                    let k = r.u32()?;
                    let blocks = (0..k).map(|_| r.u64()).collect::<Option<Vec<_>>>()?;
                    matches.push(Match { hash, blocks });
                }
                Payload::IntersectionCheck { matches }
            }
            _ => return None,
        };
        r.0.is_empty().then_some(p)
    }
}

struct Reader<'a>(&'a [u8]);

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.0.len() < n {
            return None;
        }
        let (h, t) = self.0.split_at(n);
        self.0 = t;
        Some(h)
    }
    fn u8(&mut self) -> Option<u8> {
        Some(self.take(1)?[0])
    }
    fn u16(&mut self) -> Option<u16> {
        Some(u16::from_le_bytes(self.take(2)?.try_into().ok()?))
    }
    fn u32(&mut self) -> Option<u32> {
        Some(u32::from_le_bytes(self.take(4)?.try_into().ok()?))
    }
    fn u64(&mut self) -> Option<u64> {
        Some(u64::from_le_bytes(self.take(8)?.try_into().ok()?))
    }
    fn d32(&mut self) -> Option<Digest32> {
        self.take(32)?.try_into().ok()
    }
}

impl Block {
    fn unsigned_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.index.to_le_bytes());
        out.extend_from_slice(&self.prev);
        out.extend_from_slice(&self.time.to_le_bytes());
        out.extend_from_slice(&(self.submitter.len() as u16).to_le_bytes());
        out.extend_from_slice(self.submitter.as_bytes());
        out.push(self.payload.kind());
        put_bytes32(&mut out, &self.payload.body());
        out
    }

    pub fn compute_digest(&self) -> Digest32 {
        Sha3_256::digest(self.unsigned_bytes()).into()
    }

    fn encode(&self) -> Vec<u8> {
        let mut out = self.unsigned_bytes();
        out.extend_from_slice(&self.digest);
        out
    }

    fn decode(bytes: &[u8]) -> Option<Block> {
        let mut r = Reader(bytes);
        let index = r.u64()?;
        let prev = r.d32()?;
        let time = r.u64()?;
        let slen = r.u16()? as usize;
        let submitter = String::from_utf8(r.take(slen)?.to_vec()).ok()?;
        let kind = r.u8()?;
        let blen = r.u32()? as usize;
        let payload = Payload::parse(kind, r.take(blen)?)?;
        let digest = r.d32()?;
        r.0.is_empty().then_some(Block {
            index,
            prev,
            time,
            submitter,
            payload,
            digest,
        })
    }
}

/// The replicated ledger as one in-process object. Appends need `&mut`, so the
/// borrow checker provides the single-writer lock; readers share `&`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ledger {
    writers: BTreeSet<String>,
    readers: BTreeSet<String>,
    /// When set, only readers may run intersection checks.
    role_split: bool,
    blocks: Vec<Block>,
    clock: u64,
}

fn is_sha3_512_hex(s: &str) -> bool {
    s.len() == 128 && s.bytes().all(|b| b.is_ascii_digit() || (b'a'..=b'f').contains(&b))
}

impl Ledger {
    pub fn new(
        writers: impl IntoIterator<Item = String>,
        readers: impl IntoIterator<Item = String>,
        role_split: bool,
    ) -> Self {
        let writers: BTreeSet<String> = writers.into_iter().collect();
        let readers: BTreeSet<String> = readers.into_iter().collect();
        let mut genesis = Block {
            index: 0,
            prev: [0; 32],
            time: 0,
            submitter: String::new(),
            payload: Payload::Genesis {
                writers: writers.iter().cloned().collect(),
                readers: readers.iter().cloned().collect(),
                role_split,
            },
            digest: [0; 32],
        };
        genesis.digest = genesis.compute_digest();
        Ledger {
            writers,
            readers,
            role_split,
            blocks: vec![genesis],
            clock: 0,
        }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn writers(&self) -> &BTreeSet<String> {
        &self.writers
    }

    pub fn readers(&self) -> &BTreeSet<String> {
        &self.readers
    }

    pub fn role_split(&self) -> bool {
        self.role_split
    }

    fn append(&mut self, submitter: &str, payload: Payload) -> &Block {
        self.clock += 1;
        let prev = self.blocks.last().expect("genesis").digest;
        let mut b = Block {
            index: self.blocks.len() as u64,
            prev,
            time: self.clock,
            submitter: submitter.to_string(),
            payload,
            digest: [0; 32],
        };
        b.digest = b.compute_digest();
        self.blocks.push(b);
        self.blocks.last().unwrap()
    }

    pub fn submit(&mut self, writer: &str, hash: &str) -> Result<&Block, LedgerError> {
        if !self.writers.contains(writer) {
            return Err(LedgerError::UnauthorizedWriter(writer.into()));
        }
        if !is_sha3_512_hex(hash) {
            return Err(LedgerError::NotAHash);
        }
        Ok(self.append(
            writer,
            Payload::Submission {
                hash: hash.to_string(),
            },
        ))
    }

    /// Hashes submitted by at least two distinct writers, without logging.
    pub fn find_matches(&self) -> Vec<Match> {
        let mut by_hash: BTreeMap<&str, (BTreeSet<&str>, Vec<u64>)> = BTreeMap::new();
        for b in &self.blocks {
            if let Payload::Submission { hash } = &b.payload {
                let e = by_hash.entry(hash).or_default();
                e.0.insert(&b.submitter);
                e.1.push(b.index);
            }
        }
        by_hash
            .into_iter()
            .filter(|(_, (w, _))| w.len() >= 2)
            .map(|(h, (_, blocks))| Match {
                hash: h.to_string(),
                blocks,
            })
            .collect()
    }

    /// Runs the intersection check and records it as an event block.
    pub fn check_intersections(&mut self, reader: &str) -> Result<Vec<Match>, LedgerError> {
        let allowed = self.readers.contains(reader) || (!self.role_split && self.writers.contains(reader));
        if !allowed {
            return Err(LedgerError::UnauthorizedReader(reader.into()));
        }
        let matches = self.find_matches();
        self.append(
            reader,
            Payload::IntersectionCheck {
                matches: matches.clone(),
            },
        );
        Ok(matches)
    }

    /// Index of the first block whose digest or back link does not verify.
    pub fn verify_chain(&self) -> Result<(), usize> {
        for (i, b) in self.blocks.iter().enumerate() {
            let prev = if i == 0 { [0; 32] } else { self.blocks[i - 1].digest };
            if b.index != i as u64 || b.prev != prev || b.digest != b.compute_digest() {
                return Err(i);
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for b in &self.blocks {
            put_bytes32(&mut out, &b.encode());
        }
        out
    }

    /// Loads blocks without verifying them. Membership comes from the genesis block.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, LedgerError> {
        let mut r = Reader(bytes);
        if r.take(8) != Some(MAGIC.as_slice()) || r.u8() != Some(VERSION) {
            return Err(LedgerError::Corrupt(0));
        }
        let n = r.u32().ok_or(LedgerError::Corrupt(0))? as usize;
        let mut blocks = Vec::with_capacity(n.min(1 << 20));
        for i in 0..n {
            let len = r.u32().ok_or(LedgerError::Corrupt(i))? as usize;
            let raw = r.take(len).ok_or(LedgerError::Corrupt(i))?;
            blocks.push(Block::decode(raw).ok_or(LedgerError::Corrupt(i))?);
        }
        if !r.0.is_empty() || blocks.is_empty() {
            return Err(LedgerError::Corrupt(n));
        }
        let Payload::Genesis {
            writers,
            readers,
            role_split,
        } = blocks[0].payload.clone()
        else {
            return Err(LedgerError::Corrupt(0));
        };
        let clock = blocks.iter().map(|b| b.time).max().unwrap_or(0);
        Ok(Ledger {
            writers: writers.into_iter().collect(),
            readers: readers.into_iter().collect(),
            role_split,
            blocks,
            clock,
        })
    }
}

/// A small enumerable identifier space: `2^cpe_bits` products, `2^cwe_bits`
/// weakness classes and `2^fn_bits` function names.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ToySpace {
    pub cpe_bits: u32,
    pub cwe_bits: u32,
    pub fn_bits: u32,
}

impl ToySpace {
    pub fn size(&self) -> u64 {
        1u64 << (self.cpe_bits + self.cwe_bits + self.fn_bits)
    }

    pub fn identifier(&self, i: u64) -> VulnIdentifier {
        let f = i & ((1 << self.fn_bits) - 1);
        let w = (i >> self.fn_bits) & ((1 << self.cwe_bits) - 1);
        let c = i >> (self.fn_bits + self.cwe_bits);
        VulnIdentifier {
            cpe: format!("cpe:2.3:a:vendor{c}:product{c}:1.{c}:*:*:*:*:*:*:*"),
            cwe: 1 + w as u32,
            function: format!("handler_{f}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WriterActivity {
    pub submissions: usize,
    pub first_time: u64,
    pub last_time: u64,
}

#[derive(Debug, Clone)]
pub struct AttackReport {
    pub submissions: usize,
    /// Block index and recovered identifier.
    pub recovered: Vec<(u64, VulnIdentifier)>,
    pub candidates_tried: u64,
    pub elapsed: Duration,
    /// Public per-writer metadata: counts and submission time windows.
    pub writers: BTreeMap<String, WriterActivity>,
}

impl AttackReport {
    pub fn recovery_rate(&self) -> f64 {
        if self.submissions == 0 {
            return 1.0;
        }
        self.recovered.len() as f64 / self.submissions as f64
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "submissions {}\nrecovered {}\nrecovery_rate {:.4}\ncandidates {}\nelapsed_ms {}\n",
            self.submissions,
            self.recovered.len(),
            self.recovery_rate(),
            self.candidates_tried,
            self.elapsed.as_millis()
        );
        for (w, a) in &self.writers {
            s.push_str(&format!(
                "writer {w} submissions {} first {} last {}\n",
                a.submissions, a.first_time, a.last_time
            ));
        }
        for (b, id) in &self.recovered {
            s.push_str(&format!("block {b} cpe {} cwe {} function {}\n", id.cpe, id.cwe, id.function));
        }
        s
    }
}

/// Hashes every identifier of `space` and looks each digest up in the ledger.
/// Runs entirely on a local copy.
pub fn brute_force_attack(ledger: &Ledger, space: &ToySpace) -> AttackReport {
    let start = Instant::now();
    let mut wanted: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    let mut writers: BTreeMap<String, WriterActivity> = BTreeMap::new();
    let mut submissions = 0;
    for b in ledger.blocks() {
        if let Payload::Submission { hash } = &b.payload {
            submissions += 1;
            wanted.entry(hash).or_default().push(b.index);
            let a = writers.entry(b.submitter.clone()).or_insert(WriterActivity {
                submissions: 0,
                first_time: b.time,
                last_time: b.time,
            });
            a.submissions += 1;
            a.last_time = b.time;
        }
    }
    let mut recovered = Vec::new();
    for i in 0..space.size() {
        let id = space.identifier(i);
        let h = full_digest_hex(&id).expect("toy identifiers are valid");
        if let Some(blocks) = wanted.get(h.as_str()) {
            recovered.extend(blocks.iter().map(|&b| (b, id.clone())));
        }
    }
    recovered.sort_by_key(|(b, _)| *b);
    AttackReport {
        submissions,
        recovered,
        candidates_tried: space.size(),
        elapsed: start.elapsed(),
        writers,
    }
}
