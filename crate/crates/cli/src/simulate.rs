use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use vulnmatch::bits::Word;
use vulnmatch::mpc::Transcript;
use vulnmatch::oracle::{brute_force_shared, OracleVariant};
use vulnmatch::session::{
    check_accounting, handshake, read_stockpile, write_report, IntersectionReport, Mode, PartyId, ReportEntry,
    Session, SessionConfig, SessionVariant, Status,
};

use crate::Failed;

#[derive(clap::Args)]
pub struct Args {
    /// Session file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the session file.
    #[arg(long)]
    seed: Option<u64>,
    /// Make this party submit an unsorted list.
    #[arg(long, value_name = "PARTY")]
    inject_unsorted: Option<PartyId>,
    /// Directory for the per-party reports and `transcript.json`.
    #[arg(long, default_value = "reports")]
    out: PathBuf,
}

#[derive(clap::Args)]
pub struct OracleArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "expected")]
    out: PathBuf,
}

/// Session file plus every party's stockpile, with paths taken relative to the file.
fn load(path: &Path) -> Result<(SessionConfig, BTreeMap<PartyId, Vec<Word>>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = SessionConfig::from_toml(&text).with_context(|| format!("in {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut piles = BTreeMap::new();
    for p in &cfg.parties {
        let values = match &p.stockpile {
            Some(file) => {
                let file = base.join(file);
                let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
                read_stockpile(&text, cfg.sigma).with_context(|| format!("in {}", file.display()))?
            }
            None => Vec::new(),
        };
        piles.insert(p.id, values);
    }
    Ok((cfg, piles))
}

fn write_reports<'a>(dir: &Path, reports: impl IntoIterator<Item = (&'a PartyId, &'a IntersectionReport)>) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    for (p, r) in reports {
        let file = dir.join(format!("party-{p}.txt"));
        fs::write(&file, write_report(r)).with_context(|| format!("writing {}", file.display()))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    epoch: u32,
    u: usize,
    participants: &'a [PartyId],
    mode: Mode,
    agreement_hash: String,
    and_count: u64,
    and_layers: u32,
    reactive_opens: usize,
    shared: BTreeMap<PartyId, usize>,
    nodes: &'a [Transcript],
}

pub fn run(args: Args) -> Result<()> {
    let (mut cfg, piles) = load(&args.config)?;
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    let views: Vec<(PartyId, SessionConfig)> = cfg.active_parties().into_iter().map(|p| (p, cfg.clone())).collect();
    let agreed = handshake(&views)?;
    let mut session = Session::new(cfg, piles)?;
    session.inject_unsorted(args.inject_unsorted);
    let outcome = session.run_epoch()?;
    check_accounting(&outcome.round, &outcome.compiled).map_err(|e| Failed("accounting", e))?;

    write_reports(&args.out, &outcome.reports)?;
    let run = &outcome.round.run;
    let summary = Summary {
        epoch: outcome.epoch,
        u: outcome.u,
        participants: &outcome.participants,
        mode: session.config().mode,
        agreement_hash: agreed.iter().map(|b| format!("{b:02x}")).collect(),
        and_count: run.and_count,
        and_layers: run.and_layers,
        reactive_opens: run.open_count,
        shared: outcome
            .reports
            .iter()
            .map(|(p, r)| (*p, r.entries.iter().filter(|e| e.status == Status::Shared).count()))
            .collect(),
        nodes: &run.transcripts,
    };
    let file = args.out.join("transcript.json");
    fs::write(&file, serde_json::to_string_pretty(&summary)? + "\n")
        .with_context(|| format!("writing {}", file.display()))?;

    let compute = &run.transcripts[..outcome.round.compute_nodes];
    println!(
        "epoch {}: {} parties, u = {}, {} ANDs in {} layers, {} rounds, {} bytes sent by computing nodes",
        outcome.epoch,
        outcome.participants.len(),
        outcome.u,
        run.and_count,
        run.and_layers,
        compute[0].rounds,
        compute.iter().map(|t| t.bytes_sent).sum::<u64>()
    );
    for (p, n) in &summary.shared {
        println!("party {p}: {n} shared of {}", outcome.reports[p].entries.len());
    }
    println!("reports written to {}", args.out.display());
    Ok(())
}

fn oracle_variant(v: &SessionVariant) -> OracleVariant {
    match v {
        SessionVariant::AtLeastTwo => OracleVariant::AtLeastTwo,
        SessionVariant::AtLeastM { m } => OracleVariant::AtLeastM(*m as usize),
        SessionVariant::FixedPlusM { fixed_parties, m } => OracleVariant::FixedPlusM {
            fixed: fixed_parties.iter().copied().collect(),
            m: *m as usize,
        },
    }
}

pub fn oracle(args: OracleArgs) -> Result<()> {
    let (cfg, piles) = load(&args.config)?;
    let active: BTreeSet<PartyId> = cfg.active_parties().into_iter().collect();
    let sets = piles
        .iter()
        .filter(|(p, _)| active.contains(p))
        .map(|(p, vs)| (*p, vs.iter().map(|w| w.as_bytes().to_vec()).collect()))
        .collect();
    let shared = brute_force_shared(&sets, &oracle_variant(&cfg.variant));
    let reports: BTreeMap<PartyId, IntersectionReport> = active
        .iter()
        .map(|p| {
            let values: BTreeSet<&Word> = piles[p].iter().collect();
            let entries = values
                .into_iter()
                .map(|v| ReportEntry {
                    v: v.clone(),
                    status: if shared[p].contains(v.as_bytes()) { Status::Shared } else { Status::Exclusive },
                    k1_seen: 0,
                })
                .collect();
            (*p, IntersectionReport { epoch: cfg.epoch, entries })
        })
        .collect();
    write_reports(&args.out, &reports)?;
    println!("expected reports for {} parties written to {}", reports.len(), args.out.display());
    Ok(())
}
