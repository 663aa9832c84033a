use std::collections::HashMap;
use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use vulnmatch::vulnid::{canonicalize, full_digest_hex, hash_identifier, parse_identifier};

#[derive(clap::Args)]
pub struct Args {
    /// One identifier object per line; blank lines are skipped.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 256)]
    sigma: u32,
    /// Emit the full 512-bit digest, as submitted to the ledger, instead of σ bits.
    #[arg(long, conflicts_with = "sigma")]
    full: bool,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn run(args: Args) -> Result<()> {
    let text = fs::read_to_string(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let mut seen: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut out = String::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let id = parse_identifier(line).with_context(|| format!("line {line_no}"))?;
        let canonical = canonicalize(&id).with_context(|| format!("line {line_no}"))?;
        if let Some(first) = seen.get(&canonical) {
            eprintln!("warning: line {line_no} duplicates line {first}; skipped");
            continue;
        }
        seen.insert(canonical, line_no);
        let hex = if args.full {
            full_digest_hex(&id)?
        } else {
            hash_identifier(&id, args.sigma)
                .with_context(|| format!("line {line_no}"))?
                .to_hex()
        };
        out.push_str(&hex);
        out.push('\n');
    }
    match &args.out {
        Some(p) => fs::write(p, out).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{out}"),
    }
    Ok(())
}
