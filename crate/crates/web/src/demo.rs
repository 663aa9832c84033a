//! Plain-Rust side of the browser demo. Every function returns JSON text.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use vulnmatch::bits::Word;
use vulnmatch::circuit::{count_gates, waksman_route, waksman_switch_count};
use vulnmatch::compiler::{build_matching_circuit, count_matching_circuit, stage_bound, CircuitConfig, Variant};
use vulnmatch::oracle::{brute_force_shared, OracleVariant};
use vulnmatch::session::{reference_pipeline, SessionVariant, Status, Stockpile};

/// Records above this are counted only; smaller circuits are built to report depth.
const BUILD_LIMIT: usize = 64;

fn variant(kind: &str, m: u32, fixed: u32) -> Result<SessionVariant, String> {
    Ok(match kind {
        "at-least-two" => SessionVariant::AtLeastTwo,
        "at-least-m" => SessionVariant::AtLeastM { m },
        "fixed-plus-m" => SessionVariant::FixedPlusM {
            fixed_parties: (0..fixed as usize).collect(),
            m,
        },
        other => return Err(format!("unknown variant {other:?}")),
    })
}

fn circuit_variant(v: &SessionVariant) -> Variant {
    vulnmatch::session::circuit_variant(v)
}

#[derive(Serialize)]
struct StageRow {
    stage: String,
    and_count: u64,
    and_bound: f64,
    xor_count: u64,
}

#[derive(Serialize)]
struct Counts {
    records: usize,
    key_bits: usize,
    stages: Vec<StageRow>,
    and_total: u64,
    xor_total: u64,
    /// Present when the circuit was small enough to build.
    depth_and: Option<u32>,
    rounds: Option<u32>,
}

fn counts_for(cfg: &CircuitConfig) -> Result<Counts, String> {
    let (stages, depth, opens) = if cfg.records() <= BUILD_LIMIT {
        let c = build_matching_circuit(cfg).map_err(|e| e.to_string())?;
        let total = count_gates(&c.circuit);
        (c.stages, Some(total.depth_and), c.circuit.reactive().len() as u32)
    } else {
        (count_matching_circuit(cfg).map_err(|e| e.to_string())?, None, 1)
    };
    let rows: Vec<StageRow> = stages
        .iter()
        .map(|s| StageRow {
            stage: format!("{:?}", s.name),
            and_count: s.counts.and_count,
            and_bound: stage_bound(cfg, s.name),
            xor_count: s.counts.xor_count,
        })
        .collect();
    Ok(Counts {
        records: cfg.records(),
        key_bits: cfg.key_bits,
        and_total: rows.iter().map(|r| r.and_count).sum(),
        xor_total: rows.iter().map(|r| r.xor_count).sum(),
        stages: rows,
        depth_and: depth,
        rounds: depth.map(|d| d + opens + 1),
    })
}

pub fn gate_counts(parties: usize, u: usize, sigma: usize, kind: &str, m: u32, fixed: u32) -> Result<String, String> {
    let v = variant(kind, m, fixed)?;
    let cfg = CircuitConfig::new(parties, u, sigma, circuit_variant(&v));
    cfg.validate().map_err(|e| e.to_string())?;
    serde_json::to_string(&counts_for(&cfg)?).map_err(|e| e.to_string())
}

#[derive(Serialize)]
struct PartyReport {
    party: usize,
    shared: Vec<String>,
    exclusive: Vec<String>,
}

#[derive(Serialize)]
struct SessionResult {
    u: usize,
    counts: Counts,
    reports: Vec<PartyReport>,
    matches_oracle: bool,
}

/// One party per non-empty line, hex values separated by commas or spaces.
fn parse_stockpiles(text: &str, sigma: usize) -> Result<Vec<Stockpile>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
        let mut values = BTreeSet::new();
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let w = Word::from_hex(tok, sigma as u32).map_err(|e| format!("party {i}: {tok}: {e}"))?;
            if w.is_zero() {
                return Err(format!("party {i}: the all-zero value is reserved"));
            }
            values.insert(w);
        }
        out.push(Stockpile { party: i, values });
    }
    if out.len() < 2 {
        return Err("enter at least two parties".into());
    }
    Ok(out)
}

/// Runs the compiled circuit in the clear on session-prepared inputs and
/// checks the reports against the brute-force oracle.
pub fn demo_session(stockpiles: &str, sigma: usize, kind: &str, m: u32, fixed: u32, seed: u64) -> Result<String, String> {
    let piles = parse_stockpiles(stockpiles, sigma)?;
    let v = variant(kind, m, fixed)?;
    let u = piles.iter().map(|p| p.values.len()).max().unwrap_or(0).max(1);
    let cfg = CircuitConfig::new(piles.len(), u, sigma, circuit_variant(&v));
    if cfg.records() > BUILD_LIMIT {
        return Err(format!("the demo is limited to {BUILD_LIMIT} records"));
    }
    let compiled = build_matching_circuit(&cfg).map_err(|e| e.to_string())?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let reports = reference_pipeline(&compiled, &piles, &v, &mut rng).map_err(|e| e.to_string())?;

    let oracle_variant = match &v {
        SessionVariant::AtLeastTwo => OracleVariant::AtLeastTwo,
        SessionVariant::AtLeastM { m } => OracleVariant::AtLeastM(*m as usize),
        SessionVariant::FixedPlusM { fixed_parties, m } => OracleVariant::FixedPlusM {
            fixed: fixed_parties.iter().copied().collect(),
            m: *m as usize,
        },
    };
    let sets = piles
        .iter()
        .map(|p| (p.party, p.values.iter().map(|w| w.as_bytes().to_vec()).collect()))
        .collect();
    let expected = brute_force_shared(&sets, &oracle_variant);

    let mut matches_oracle = true;
    let mut out = Vec::new();
    for (p, r) in piles.iter().zip(&reports) {
        let mut shared = Vec::new();
        let mut exclusive = Vec::new();
        for e in &r.entries {
            let is_shared = e.status == Status::Shared;
            matches_oracle &= is_shared == expected[&p.party].contains(e.v.as_bytes());
            if is_shared { &mut shared } else { &mut exclusive }.push(e.v.to_hex());
        }
        out.push(PartyReport {
            party: p.party,
            shared,
            exclusive,
        });
    }
    let result = SessionResult {
        u,
        counts: counts_for(&cfg)?,
        reports: out,
        matches_oracle,
    };
    serde_json::to_string(&result).map_err(|e| e.to_string())
}

#[derive(Serialize, Debug, PartialEq)]
pub struct Switch {
    /// Column in the drawn network: input switches of recursion level `l`
    /// sit in column `l`, output switches mirror them.
    pub column: usize,
    pub a: usize,
    pub b: usize,
    pub crossed: bool,
}

#[derive(Serialize)]
struct Routing {
    n: usize,
    switches: usize,
    controls: String,
    output: Vec<usize>,
    trace: Vec<Switch>,
}

fn depth(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        1 + depth(n - n / 2)
    }
}

/// Follows [`vulnmatch::circuit::waksman_apply`] on input labels and records
/// every switch with the labels passing through it.
fn trace(items: &[usize], controls: &[bool], level: usize, columns: usize, out: &mut Vec<Switch>) -> Vec<usize> {
    let n = items.len();
    if n <= 1 {
        return items.to_vec();
    }
    let h = n / 2;
    let (in_ctl, rest) = controls.split_at(h);
    let (top_ctl, rest) = rest.split_at(waksman_switch_count(h));
    let (bot_ctl, out_ctl) = rest.split_at(waksman_switch_count(n - h));
    let mut top = Vec::with_capacity(h);
    let mut bottom = Vec::with_capacity(n - h);
    for (k, &c) in in_ctl.iter().enumerate() {
        let (x, y) = (items[2 * k], items[2 * k + 1]);
        out.push(Switch { column: level, a: x, b: y, crossed: c });
        let (t, u) = if c { (y, x) } else { (x, y) };
        top.push(t);
        bottom.push(u);
    }
    if n % 2 == 1 {
        bottom.push(items[n - 1]);
    }
    let top = trace(&top, top_ctl, level + 1, columns, out);
    let bottom = trace(&bottom, bot_ctl, level + 1, columns, out);
    let mut result = Vec::with_capacity(n);
    for (j, &c) in out_ctl.iter().enumerate() {
        let (x, y) = (top[j], bottom[j]);
        out.push(Switch { column: columns - 1 - level, a: x, b: y, crossed: c });
        let (p, q) = if c { (y, x) } else { (x, y) };
        result.push(p);
        result.push(q);
    }
    result.extend_from_slice(&top[out_ctl.len()..]);
    result.extend_from_slice(&bottom[out_ctl.len()..]);
    result
}

/// Routes `dest` (input `i` goes to output `dest[i]`) through the network.
pub fn route(dest: &[usize]) -> Result<String, String> {
    let n = dest.len();
    let mut seen = vec![false; n];
    for &d in dest {
        if d >= n || std::mem::replace(&mut seen[d], true) {
            return Err(format!("{dest:?} is not a permutation of 0..{n}"));
        }
    }
    let controls = waksman_route(dest);
    let columns = 2 * depth(n);
    let mut switches = Vec::new();
    let labels: Vec<usize> = (0..n).collect();
    let output = trace(&labels, &controls, 0, columns.max(1), &mut switches);
    let r = Routing {
        n,
        switches: controls.len(),
        controls: controls.iter().map(|&c| if c { '1' } else { '0' }).collect(),
        output,
        trace: switches,
    };
    serde_json::to_string(&r).map_err(|e| e.to_string())
}

pub fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
    v
}
