use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use vulnmatch::ledger::{brute_force_attack, Ledger, ToySpace};
use vulnmatch::vulnid::{full_digest_hex, parse_identifier};

use crate::Failed;

#[derive(clap::Subcommand)]
pub enum Command {
    /// Create a ledger with its writer and reader lists.
    Init {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        writers: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "")]
        readers: Vec<String>,
        /// Only readers may run intersection checks.
        #[arg(long)]
        role_split: bool,
    },
    /// Append submissions: a digest given directly, or identifiers hashed locally.
    Submit {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        writer: String,
        #[arg(long, conflicts_with = "identifiers")]
        hash: Option<String>,
        /// One identifier object per line.
        #[arg(long)]
        identifiers: Option<PathBuf>,
    },
    /// Submit random identifiers of a toy space from random writers.
    Populate {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[command(flatten)]
        space: SpaceArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run the intersection check and log it as an event block.
    Check {
        #[arg(long)]
        ledger: PathBuf,
        #[arg(long)]
        reader: String,
    },
    /// Verify the hash chain.
    Verify {
        #[arg(long)]
        ledger: PathBuf,
    },
    /// Recover submitted identifiers by hashing every member of a toy space.
    Attack {
        #[arg(long)]
        ledger: PathBuf,
        #[command(flatten)]
        space: SpaceArgs,
        /// Report file; defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
pub struct SpaceArgs {
    #[arg(long, default_value_t = 6)]
    cpe_bits: u32,
    #[arg(long, default_value_t = 4)]
    cwe_bits: u32,
    #[arg(long, default_value_t = 6)]
    fn_bits: u32,
}

impl SpaceArgs {
    fn space(&self) -> Result<ToySpace> {
        if self.cpe_bits + self.cwe_bits + self.fn_bits > 24 {
            bail!("toy spaces are limited to 2^24 identifiers");
        }
        Ok(ToySpace {
            cpe_bits: self.cpe_bits,
            cwe_bits: self.cwe_bits,
            fn_bits: self.fn_bits,
        })
    }
}

fn load(path: &Path) -> Result<Ledger> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Ledger::from_bytes(&bytes).with_context(|| format!("loading {}", path.display()))?)
}

fn save(path: &Path, l: &Ledger) -> Result<()> {
    fs::write(path, l.to_bytes()).with_context(|| format!("writing {}", path.display()))
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Init {
            ledger,
            writers,
            readers,
            role_split,
        } => {
            let readers: Vec<String> = readers.into_iter().filter(|r| !r.is_empty()).collect();
            let l = Ledger::new(writers, readers, role_split);
            save(&ledger, &l)?;
            println!("created {} with {} writers", ledger.display(), l.writers().len());
        }
        Command::Submit {
            ledger,
            writer,
            hash,
            identifiers,
        } => {
            let mut l = load(&ledger)?;
            let hashes = match (hash, identifiers) {
                (Some(h), None) => vec![h.to_lowercase()],
                (None, Some(file)) => {
                    let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
                    let mut out = Vec::new();
                    for (i, line) in text.lines().enumerate() {
                        if line.trim().is_empty() {
                            continue;
                        }
                        let id = parse_identifier(line).with_context(|| format!("line {}", i + 1))?;
                        out.push(full_digest_hex(&id).with_context(|| format!("line {}", i + 1))?);
                    }
                    out
                }
                _ => bail!("give exactly one of --hash and --identifiers"),
            };
            for h in &hashes {
                let b = l.submit(&writer, h)?;
                println!("block {}", b.index);
            }
            save(&ledger, &l)?;
        }
        Command::Populate {
            ledger,
            count,
            space,
            seed,
        } => {
            let space = space.space()?;
            let mut l = load(&ledger)?;
            let writers: Vec<String> = l.writers().iter().cloned().collect();
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            for _ in 0..count {
                let id = space.identifier(rng.gen_range(0..space.size()));
                let w = writers.choose(&mut rng).context("ledger has no writers")?;
                l.submit(w, &full_digest_hex(&id)?)?;
            }
            save(&ledger, &l)?;
            println!("{count} submissions from a space of {} identifiers", space.size());
        }
        Command::Check { ledger, reader } => {
            let mut l = load(&ledger)?;
            let matches = l.check_intersections(&reader)?;
            save(&ledger, &l)?;
            for m in &matches {
                let blocks: Vec<String> = m.blocks.iter().map(u64::to_string).collect();
                println!("match {} blocks {}", m.hash, blocks.join(","));
            }
            println!("{} matches; event block {}", matches.len(), l.blocks().len() - 1);
        }
        Command::Verify { ledger } => {
            let l = load(&ledger)?;
            if let Err(i) = l.verify_chain() {
                return Err(Failed("tampered", format!("block {i} does not verify")).into());
            }
            println!("ok: {} blocks", l.blocks().len());
        }
        Command::Attack { ledger, space, out } => {
            let l = load(&ledger)?;
            let report = brute_force_attack(&l, &space.space()?);
            match out {
                Some(p) => fs::write(&p, report.to_text()).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{}", report.to_text()),
            }
        }
    }
    Ok(())
}
