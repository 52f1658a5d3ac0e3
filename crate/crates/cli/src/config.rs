use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use macicmac::rational::{parse_fraction, Rational};

fn fraction(s: &str) -> Result<Rational, String> {
    parse_fraction(s).map_err(|e| e.to_string())
}

/// Exact-arithmetic toolkit for two-cell MAC-IC-MAC capacity and GDoF regions.
///
/// Exit codes: 0 success, 1 property violation, 2 malformed input, 3 infeasible configuration.
#[derive(Debug, Parser)]
#[command(name = "macicmac", version)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Directory for output files; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Log more (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the inner and outer regions of a Gaussian channel (or of a raw table) and export rows and vertices.
    Region(RegionArgs),
    /// One-bit gap report for a channel file or a random sweep.
    Gap(GapArgs),
    /// Symmetric GDoF curve as CSV.
    GdofCurve(CurveArgs),
    /// Time sharing versus superposition cell sums as CSV.
    TimeshareCurve(TimeshareArgs),
    /// Check that eliminating the split rates yields the nine-family region.
    FmeVerify(FmeArgs),
    /// Gap-shift containment on finite-alphabet semi-deterministic channels.
    DmVerify(DmArgs),
    /// Build a deterministic-model allocation and simulate it.
    DetSim(DetArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    Inner,
    Outer,
    Both,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    /// Gaussian channel JSON.
    #[arg(long, conflicts_with = "table", required_unless_present = "table")]
    pub channel: Option<PathBuf>,
    /// Set-function table JSON (exact values).
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    pub which: Which,
    /// Drop implied rows before export.
    #[arg(long)]
    pub pruned: bool,
    /// Skip vertex enumeration.
    #[arg(long)]
    pub no_vertices: bool,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    /// Gaussian channel JSON.
    #[arg(long, conflicts_with = "random", required_unless_present = "random")]
    pub channel: Option<PathBuf>,
    /// Number of random instances.
    #[arg(long)]
    pub random: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Largest user count per cell in random instances.
    #[arg(long = "max-K", default_value_t = 3)]
    pub max_k: usize,
    #[arg(long, default_value_t = -10.0, allow_hyphen_values = true)]
    pub db_lo: f64,
    #[arg(long, default_value_t = 60.0, allow_hyphen_values = true)]
    pub db_hi: f64,
    /// Slack on the per-mask bounds, bits.
    #[arg(long, default_value_t = 1e-9)]
    pub mask_tol: f64,
    /// Slack on shifted-vertex membership, bits.
    #[arg(long, default_value_t = 1e-6)]
    pub vertex_tol: f64,
    /// Largest Ka + Kb for the vertex check.
    #[arg(long, default_value_t = 4)]
    pub vertex_max_dim: usize,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// User counts per cell.
    #[arg(long = "K", value_delimiter = ',', default_value = "1,2,3,4")]
    pub k: Vec<usize>,
    #[arg(long, value_parser = fraction, default_value = "3")]
    pub alpha_max: Rational,
    #[arg(long, value_parser = fraction, default_value = "1/100")]
    pub step: Rational,
}

#[derive(Debug, Args)]
pub struct TimeshareArgs {
    #[arg(long, value_parser = fraction, default_value = "2")]
    pub alpha_max: Rational,
    #[arg(long, value_parser = fraction, default_value = "1/100")]
    pub step: Rational,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableKind {
    /// Tables with the cross-mask facts of mutual-information tables.
    Structured,
    /// Tables constrained only by A <= E and B <= G.
    ChainRule,
}

#[derive(Debug, Args)]
pub struct FmeArgs {
    /// Verify this table instead of random ones.
    #[arg(long, conflicts_with_all = ["trials", "ka", "kb"])]
    pub table: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long = "Ka", default_value_t = 2)]
    pub ka: usize,
    #[arg(long = "Kb", default_value_t = 2)]
    pub kb: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "structured")]
    pub tables: TableKind,
}

#[derive(Debug, Args)]
pub struct DmArgs {
    /// Verify this instance instead of random ones.
    #[arg(long, conflicts_with = "trials")]
    pub instance: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long = "max-K", default_value_t = 2)]
    pub max_k: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DetArgs {
    #[arg(long = "K", default_value_t = 2)]
    pub k: usize,
    #[arg(long, value_parser = fraction)]
    pub alpha: Rational,
    /// Levels per direct link.
    #[arg(long)]
    pub q: usize,
    #[arg(long, default_value_t = 10_000)]
    pub uses: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Simulate the time-shared schedule (K = 2) instead.
    #[arg(long)]
    pub timeshare: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use macicmac::rational::rat;

    #[test]
    fn fractions_and_defaults() {
        let cfg = RunConfig::try_parse_from(["macicmac", "gdof-curve", "--K", "2,3", "--step", "1/20"]).unwrap();
        match cfg.command {
            Command::GdofCurve(a) => {
                assert_eq!(a.k, vec![2, 3]);
                assert_eq!(a.step, rat(1, 20));
                assert_eq!(a.alpha_max, rat(3, 1));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn conflicting_sources_are_rejected() {
        assert!(RunConfig::try_parse_from(["macicmac", "gap"]).is_err());
        assert!(RunConfig::try_parse_from(["macicmac", "gap", "--channel", "c.json", "--random", "3"]).is_err());
        assert!(RunConfig::try_parse_from(["macicmac", "det-sim", "--alpha", "1"]).is_err());
    }

    #[test]
    fn negative_decibels_parse() {
        let cfg = RunConfig::try_parse_from(["macicmac", "gap", "--random", "2", "--db-lo", "-20", "-v"]).unwrap();
        assert_eq!(cfg.verbose, 1);
        match cfg.command {
            Command::Gap(a) => assert_eq!(a.db_lo, -20.0),
            other => panic!("{other:?}"),
        }
    }
}
