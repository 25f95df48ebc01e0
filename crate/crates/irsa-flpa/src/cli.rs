//! Flag parsing and scenario-file resolution.
//!
//! A run is described either by command-line flags, by a TOML scenario file,
//! or both; flags win field by field. The three ways of choosing user counts
//! (`--k`, `--sweep-k`, `--sweep-g`) are mutually exclusive, and flags
//! replace the scenario's choice as a group so the two sources cannot mix
//! into an unintended sweep.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use irsa_core::rational::parse_rational;
use irsa_core::{DegreeDistribution, Rat};
use num_traits::{One, Signed, ToPrimitive};
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(
    name = "irsa-flpa",
    version,
    about = "Finite-length packet-loss analysis for irregular repetition slotted ALOHA"
)]
pub struct Args {
    /// Number of users (use exactly one of --k, --sweep-k, --sweep-g)
    #[arg(long)]
    pub k: Option<u32>,

    /// Number of slots per frame
    #[arg(long)]
    pub t: Option<u32>,

    /// Degree distribution as degree:probability pairs, e.g. "2:0.25,3:3/4"
    #[arg(long)]
    pub lambda: Option<String>,

    /// Analysis modes to run (comma-separable)
    #[arg(long, value_delimiter = ',')]
    pub mode: Vec<ModeArg>,

    /// Keep only degree vectors with probability >= this cutoff in mlv mode
    /// (exact rational, e.g. "1/1000" or "0.001")
    #[arg(long)]
    pub mlv_threshold: Option<String>,

    /// Number of frames to simulate per point in simulate mode
    #[arg(long)]
    pub trials: Option<u64>,

    /// Master seed for simulate mode; a rerun with the same seed is bit-identical
    #[arg(long)]
    pub seed: Option<u64>,

    /// Sweep the user count over the inclusive integer range a..b
    #[arg(long)]
    pub sweep_k: Option<String>,

    /// Sweep the offered load over comma-separated rationals G; each k = G*t
    /// must come out an integer
    #[arg(long, value_delimiter = ',')]
    pub sweep_g: Option<Vec<String>>,

    /// Enumeration-node budget for exact/mlv and matrix budget for oracle;
    /// exceeding it aborts the sweep with exit code 3
    #[arg(long)]
    pub budget: Option<u64>,

    /// Write result rows to this file (.csv or .json)
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Decimal places in the stdout table (output files always carry full precision)
    #[arg(long)]
    pub decimals: Option<usize>,

    /// Read defaults from this TOML scenario file; flags override its fields
    #[arg(long)]
    pub scenario: Option<PathBuf>,

    /// Write a per-load pivot table comparing the modes' loss rates to this CSV
    #[arg(long)]
    pub compare_out: Option<PathBuf>,
}

/// Variant order is the canonical column order of the comparison pivot.
#[derive(ValueEnum, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum ModeArg {
    Simulate,
    Asymptotic,
    Exact,
    Mlv,
    Oracle,
}

impl ModeArg {
    pub fn name(self) -> &'static str {
        match self {
            ModeArg::Simulate => "simulate",
            ModeArg::Asymptotic => "asymptotic",
            ModeArg::Exact => "exact",
            ModeArg::Mlv => "mlv",
            ModeArg::Oracle => "oracle",
        }
    }
}

/// Scenario file schema; every field optional, same meaning as the flag.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct Scenario {
    k: Option<u32>,
    t: Option<u32>,
    lambda: Option<String>,
    mode: Option<Vec<String>>,
    mlv_threshold: Option<String>,
    trials: Option<u64>,
    seed: Option<u64>,
    sweep_k: Option<String>,
    sweep_g: Option<Vec<String>>,
    budget: Option<u64>,
    out: Option<String>,
    decimals: Option<usize>,
    compare_out: Option<String>,
}

/// A fully validated run description.
#[derive(Debug)]
pub struct Resolved {
    pub t: u32,
    pub lambda: DegreeDistribution,
    pub ks: Vec<u32>,
    pub modes: Vec<ModeArg>,
    pub mlv_threshold: Rat,
    pub trials: u64,
    pub seed: u64,
    pub budget: Option<u64>,
    pub decimals: usize,
    pub out: Option<PathBuf>,
    pub compare_out: Option<PathBuf>,
}

pub fn resolve(args: Args) -> Result<Resolved> {
    let scenario = match &args.scenario {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading scenario file {}", path.display()))?;
            toml::from_str::<Scenario>(&text)
                .with_context(|| format!("parsing scenario file {}", path.display()))?
        }
        None => Scenario::default(),
    };

    let t = args
        .t
        .or(scenario.t)
        .context("--t is required (flag or scenario file)")?;

    let lambda_text = args
        .lambda
        .clone()
        .or(scenario.lambda)
        .context("--lambda is required (flag or scenario file)")?;
    let lambda = DegreeDistribution::parse(&lambda_text)?;
    lambda.validate_for_slots(t)?;

    let modes_raw: Vec<ModeArg> = if !args.mode.is_empty() {
        args.mode.clone()
    } else if let Some(names) = &scenario.mode {
        names
            .iter()
            .map(|name| {
                ModeArg::from_str(name, true)
                    .map_err(|err| anyhow::anyhow!("scenario mode {name:?}: {err}"))
            })
            .collect::<Result<_>>()?
    } else {
        bail!("--mode is required (flag or scenario file)");
    };
    let mut modes = Vec::new();
    for mode in modes_raw {
        if !modes.contains(&mode) {
            modes.push(mode);
        }
    }

    // Flags replace the scenario's user-count choice as a group.
    let (k_src, sweep_k_src, sweep_g_src) =
        if args.k.is_some() || args.sweep_k.is_some() || args.sweep_g.is_some() {
            (args.k, args.sweep_k.clone(), args.sweep_g.clone())
        } else {
            (scenario.k, scenario.sweep_k, scenario.sweep_g)
        };
    let sources =
        usize::from(k_src.is_some()) + usize::from(sweep_k_src.is_some()) + usize::from(sweep_g_src.is_some());
    if sources != 1 {
        bail!("specify exactly one of --k, --sweep-k, --sweep-g (flag or scenario file)");
    }
    let ks: Vec<u32> = if let Some(k) = k_src {
        vec![k]
    } else if let Some(range) = &sweep_k_src {
        parse_sweep_k(range)?
    } else {
        parse_sweep_g(sweep_g_src.as_deref().unwrap(), t)?
    };
    if ks.iter().any(|&k| k == 0) {
        bail!("user count k must be positive");
    }

    let mlv_threshold = match args.mlv_threshold.clone().or(scenario.mlv_threshold) {
        Some(text) => {
            let threshold =
                parse_rational(&text).with_context(|| format!("mlv threshold {text:?}"))?;
            if threshold.is_negative() || threshold > Rat::one() {
                bail!("mlv threshold {text:?} must lie in [0, 1]");
            }
            threshold
        }
        None => Rat::new(1.into(), 1000.into()),
    };

    let out = args.out.clone().or(scenario.out.map(PathBuf::from));
    if let Some(path) = &out {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") | Some("json") => {}
            _ => bail!("--out {} must end in .csv or .json", path.display()),
        }
    }
    let compare_out = args
        .compare_out
        .clone()
        .or(scenario.compare_out.map(PathBuf::from));
    if compare_out.is_some() && modes.len() < 2 {
        bail!("--compare-out needs at least two modes");
    }

    Ok(Resolved {
        t,
        lambda,
        ks,
        modes,
        mlv_threshold,
        trials: args.trials.or(scenario.trials).unwrap_or(1000),
        seed: args.seed.or(scenario.seed).unwrap_or(0),
        budget: args.budget.or(scenario.budget),
        decimals: args.decimals.or(scenario.decimals).unwrap_or(6),
        out,
        compare_out,
    })
}

fn parse_sweep_k(text: &str) -> Result<Vec<u32>> {
    let (a, b) = text
        .split_once("..")
        .with_context(|| format!("sweep range {text:?} is not of the form a..b"))?;
    let a: u32 = a
        .trim()
        .parse()
        .with_context(|| format!("sweep range start {a:?}"))?;
    let b: u32 = b
        .trim()
        .parse()
        .with_context(|| format!("sweep range end {b:?}"))?;
    if a > b {
        bail!("sweep range {text:?} is empty (start exceeds end)");
    }
    Ok((a..=b).collect())
}

fn parse_sweep_g(texts: &[String], t: u32) -> Result<Vec<u32>> {
    if texts.is_empty() {
        bail!("--sweep-g needs at least one load");
    }
    let mut ks = Vec::new();
    for text in texts {
        let g = parse_rational(text).with_context(|| format!("load {text:?}"))?;
        if !g.is_positive() {
            bail!("load {text:?} must be positive");
        }
        let k = g * Rat::from_integer(t.into());
        if !k.is_integer() {
            bail!("load {text:?} gives non-integer user count k = G*t = {k}");
        }
        let k = k
            .to_integer()
            .to_u32()
            .with_context(|| format!("user count for load {text:?} does not fit in u32"))?;
        ks.push(k);
    }
    Ok(ks)
}
