use std::collections::BTreeSet;
use std::time::Instant;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use vulnmatch::bits::Word;
use vulnmatch::compiler::{build_matching_circuit, count_matching_circuit, CircuitConfig, Variant};
use vulnmatch::mpc::TransportKind;
use vulnmatch::session::{check_accounting, prepare_inputs, run_round, Mode, RoundOptions, Stockpile};

use crate::Failed;

#[derive(clap::Args)]
pub struct Args {
    #[arg(long, value_delimiter = ',', default_value = "2,5")]
    parties_list: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "100,500")]
    u_list: Vec<usize>,
    #[arg(long, default_value_t = 256)]
    sigma: usize,
    /// Grid points with more ANDs than this are counted, not executed.
    #[arg(long, default_value_t = 3_000_000)]
    max_ands: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

struct Row {
    n: usize,
    u: usize,
    ands: u64,
    depth: Option<u32>,
    rounds: Option<u32>,
    bytes: u64,
    measured: bool,
    wall_ms: Option<u128>,
}

/// Traffic of the AND layers alone: every node sends two masked bits per AND
/// to every other node.
fn estimated_bytes(n: usize, ands: u64) -> u64 {
    (n as u64) * (n as u64 - 1) * 2 * ands / 8
}

pub fn run(args: Args) -> Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(args.seed);
    let mut rows = Vec::new();
    for &n in &args.parties_list {
        for &u in &args.u_list {
            let cfg = CircuitConfig::new(n, u, args.sigma, Variant::AtLeastTwo);
            let ands: u64 = count_matching_circuit(&cfg)?.iter().map(|s| s.counts.and_count).sum();
            if ands > args.max_ands {
                rows.push(Row {
                    n,
                    u,
                    ands,
                    depth: None,
                    rounds: None,
                    bytes: estimated_bytes(n, ands),
                    measured: false,
                    wall_ms: None,
                });
                continue;
            }
            let compiled = build_matching_circuit(&cfg)?;
            let prepared = (0..n)
                .map(|party| {
                    let mut values = BTreeSet::new();
                    while values.len() < u {
                        values.insert(Word::random_nonzero(args.sigma as u32, &mut rng));
                    }
                    prepare_inputs(&Stockpile { party, values }, &cfg, 0, 0, &mut rng)
                })
                .collect::<Result<Vec<_>, _>>()?;
            let opts = RoundOptions {
                mode: Mode::Direct,
                transport: TransportKind::Channels,
                seed: rng.gen(),
                epoch: 0,
            };
            let start = Instant::now();
            let outcome = run_round(&compiled, &prepared, None, &opts)?;
            let wall = start.elapsed().as_millis();
            check_accounting(&outcome, &compiled).map_err(|e| Failed("accounting", e))?;
            let t = &outcome.run.transcripts;
            rows.push(Row {
                n,
                u,
                ands,
                depth: Some(outcome.run.and_layers),
                rounds: Some(t[0].rounds),
                bytes: t.iter().map(|t| t.bytes_sent).sum(),
                measured: true,
                wall_ms: Some(wall),
            });
        }
    }
    let dash = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    println!("# in-process simulator over channels; wall times are not comparable across MPC frameworks");
    println!(
        "{:>4} {:>6} {:>12} {:>7} {:>7} {:>14} {:>6} {:>10}",
        "N", "u", "and", "depth", "rounds", "bytes", "kind", "wall_ms"
    );
    for r in &rows {
        println!(
            "{:>4} {:>6} {:>12} {:>7} {:>7} {:>14} {:>6} {:>10}",
            r.n,
            r.u,
            r.ands,
            dash(r.depth.map(|d| d.to_string())),
            dash(r.rounds.map(|d| d.to_string())),
            r.bytes,
            if r.measured { "run" } else { "est" },
            dash(r.wall_ms.map(|d| d.to_string())),
        );
    }
    Ok(())
}
