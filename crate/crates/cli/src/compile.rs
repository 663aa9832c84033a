use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use vulnmatch::circuit::{count_gates, write_circuit, GateCounts};
use vulnmatch::compiler::{build_matching_circuit, count_matching_circuit, manifest, CircuitConfig, StageManifest, Variant};

use crate::Failed;

#[derive(Clone, Copy, ValueEnum)]
pub enum VariantKind {
    AtLeastTwo,
    AtLeastM,
    FixedPlusM,
}

#[derive(clap::Args, Clone)]
pub struct CircuitArgs {
    #[arg(long)]
    pub parties: usize,
    #[arg(long)]
    pub u: usize,
    #[arg(long, default_value_t = 256)]
    pub sigma: usize,
    #[arg(long, value_enum, default_value = "at-least-two")]
    pub variant: VariantKind,
    /// Threshold for the at-least-m and fixed-plus-m variants.
    #[arg(long)]
    pub m: Option<u32>,
    /// Number of fixed parties (tags 0..z) for fixed-plus-m.
    #[arg(long)]
    pub fixed: Option<u64>,
    /// Key width κ; defaults to max(σ, 64).
    #[arg(long)]
    pub key_bits: Option<usize>,
    /// Shuffle layers; defaults to one per party.
    #[arg(long)]
    pub layers: Option<usize>,
}

impl CircuitArgs {
    pub fn config(&self) -> Result<CircuitConfig> {
        let variant = match self.variant {
            VariantKind::AtLeastTwo => Variant::AtLeastTwo,
            VariantKind::AtLeastM => Variant::AtLeastM {
                m: self.m.context("--m is required for at-least-m")?,
            },
            VariantKind::FixedPlusM => Variant::FixedPlusM {
                fixed_tags: (0..self.fixed.context("--fixed is required for fixed-plus-m")?).collect(),
                m: self.m.context("--m is required for fixed-plus-m")?,
            },
        };
        let mut cfg = CircuitConfig::new(self.parties, self.u, self.sigma, variant);
        if let Some(k) = self.key_bits {
            cfg.key_bits = k;
        }
        if let Some(l) = self.layers {
            cfg.shuffle_layers = l;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(clap::Args)]
pub struct Args {
    #[command(flatten)]
    circuit: CircuitArgs,
    /// Circuit text file. Required unless --count-only.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stage manifest (JSON).
    #[arg(long)]
    report: PathBuf,
    /// Count gates without building the circuit; depths are reported as 0.
    #[arg(long)]
    count_only: bool,
}

pub fn print_manifest(m: &StageManifest) {
    println!("{:<10} {:>14} {:>16} {:>14} {:>8}", "stage", "and", "and_bound", "xor", "depth");
    for s in &m.stages {
        println!(
            "{:<10} {:>14} {:>16.0} {:>14} {:>8}",
            format!("{:?}", s.name),
            s.and_count,
            s.and_bound,
            s.xor_count,
            s.depth_and
        );
    }
    println!(
        "{:<10} {:>14} {:>16} {:>14} {:>8}",
        "total", m.total.and_count, "", m.total.xor_count, m.total.depth_and
    );
}

pub fn run(args: Args) -> Result<()> {
    let cfg = args.circuit.config()?;
    let m = if args.count_only {
        let stages = count_matching_circuit(&cfg)?;
        let total = stages.iter().fold(GateCounts::default(), |acc, s| GateCounts {
            and_count: acc.and_count + s.counts.and_count,
            xor_count: acc.xor_count + s.counts.xor_count,
            depth_and: 0,
        });
        manifest(&cfg, &stages, total)
    } else {
        let Some(out) = &args.out else {
            bail!("--out is required unless --count-only is given");
        };
        let compiled = build_matching_circuit(&cfg)?;
        fs::write(out, write_circuit(&compiled.circuit)).with_context(|| format!("writing {}", out.display()))?;
        manifest(&cfg, &compiled.stages, count_gates(&compiled.circuit))
    };
    let json = serde_json::to_string_pretty(&m)?;
    fs::write(&args.report, json + "\n").with_context(|| format!("writing {}", args.report.display()))?;
    print_manifest(&m);
    if let Some(s) = m.stages.iter().find(|s| s.and_count as f64 > s.and_bound) {
        return Err(Failed(
            "bound",
            format!("{:?} uses {} ANDs, above its bound {:.0}", s.name, s.and_count, s.and_bound),
        )
        .into());
    }
    Ok(())
}
