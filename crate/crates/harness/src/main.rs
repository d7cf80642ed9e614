use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ringsup::{reproduce_tables, run_preset, Preset};
use ringsup_core::bounds::{
    monte_carlo_typical, quadrature_joint_prob, quadrature_marginal_prob, relative_improvement, typical_joint_prob,
    typical_marginal_prob, DistributionKind, DistributionSpec,
};
use ringsup_core::queueing::{erlang_loss, fleet_capacity_estimate, min_supervisors};
use ringsup_sim::{run, write_summary_csv, SimConfig};

#[derive(Parser)]
#[command(name = "ringsup", version, about = "Reachability-triggered supervision of merging AVs on a ring road")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file; writes steps.csv and summary.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the file's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a preset sweep; writes per-run rows and a per-point report.
    Experiment {
        #[arg(long)]
        preset: Preset,
        /// Defaults to 20 for exp1, 10 for exp2 and 7 for exp3.
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Typical-case probabilities for one (distribution, d, S).
    Bounds(BoundsArgs),
    /// Recompute the published typical-case tables cell by cell.
    Tables,
    /// Erlang-B blocking for a supervisor pool, or the pool size needed.
    Supervisors(SupervisorArgs),
    /// Vehicles one supervisor can cover if each trip has a supervised merge.
    FleetEstimate {
        #[arg(long)]
        speed_mph: f64,
        #[arg(long)]
        trip_miles: f64,
        #[arg(long)]
        takeover_s: f64,
        /// Share of vehicle miles on limited-access highways.
        #[arg(long)]
        share: f64,
        #[arg(long, default_value_t = 1.0)]
        merges_per_trip: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Uniform,
    Truncexp,
    Appendix,
}

impl From<Kind> for DistributionKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Uniform => Self::Uniform,
            Kind::Truncexp => Self::TruncatedExponential,
            Kind::Appendix => Self::AppendixMixed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Closed,
    Quadrature,
    Mc,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    kind: Kind,
    /// Reach as a fraction of the ring.
    #[arg(long)]
    d: f64,
    /// Number of cooperative AVs.
    #[arg(long)]
    s: u32,
    #[arg(long, value_enum, default_value = "closed")]
    method: Method,
    #[arg(long, default_value_t = 1_000_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SupervisorArgs {
    /// Supervised-merge arrival rate, 1/s.
    #[arg(long)]
    lambda: f64,
    /// Per-supervisor completion rate, 1/s.
    #[arg(long)]
    mu: f64,
    /// Pool size to evaluate.
    #[arg(long, conflicts_with = "epsilon", required_unless_present = "epsilon")]
    m: Option<u32>,
    /// Acceptable blocking probability; prints the smallest pool meeting it.
    #[arg(long)]
    epsilon: Option<f64>,
}

type CmdResult = Result<ExitCode, Box<dyn std::error::Error>>;

fn simulate(config: PathBuf, seed: Option<u64>, out: PathBuf) -> CmdResult {
    let mut cfg: SimConfig = fs::read_to_string(&config)?.parse()?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let result = run(&cfg)?;
    fs::create_dir_all(&out)?;
    result.log.write_csv(BufWriter::new(File::create(out.join("steps.csv"))?))?;
    write_summary_csv(BufWriter::new(File::create(out.join("summary.csv"))?), [&result.summary])?;
    let s = &result.summary;
    println!(
        "active {:.4}  lemma1 {:.4}  lemma2 {:.4}  merges {}  collisions {}",
        s.active_fraction, s.lemma1_bound, s.lemma2_bound, s.merges, s.collisions
    );
    Ok(if s.collisions == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn experiment(preset: Preset, seeds: Option<u64>, out: PathBuf) -> CmdResult {
    let seeds = seeds.unwrap_or(preset.default_seeds());
    let outcome = run_preset(preset, seeds, &out)?;
    println!("{} runs -> {}", outcome.rows.len(), outcome.summary_path.display());
    println!("{} sweep points -> {}", outcome.points.len(), outcome.report_path.display());
    for r in &outcome.reductions {
        println!(
            "S={}  cooperative {:.4}  connected {:.4}  reduction {:.1}%",
            r.n_av, r.coop_mean, r.connected_mean, r.reduction_pct
        );
    }
    let invalid = outcome.invalid_runs();
    if invalid > 0 {
        eprintln!("{invalid} run(s) invalidated by collisions");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn bounds(a: BoundsArgs) -> CmdResult {
    let spec = DistributionSpec::new(a.kind.into(), a.d, a.s)?;
    let (joint, marginal) = match a.method {
        Method::Closed => {
            if spec.kind == DistributionKind::AppendixMixed {
                return Err("the appendix law has no closed form; use --method quadrature".into());
            }
            (typical_joint_prob(&spec)?, typical_marginal_prob(&spec)?)
        }
        Method::Quadrature => (quadrature_joint_prob(&spec)?, quadrature_marginal_prob(&spec)?),
        Method::Mc => {
            let mc = monte_carlo_typical(&spec, a.trials, a.seed)?;
            eprintln!("joint_se {:.2e}  marginal_se {:.2e}", mc.joint.std_err, mc.marginal.std_err);
            (mc.joint.p, mc.marginal.p)
        }
    };
    // Improvement is undefined at d = 0 and left empty.
    let improvement = if a.d > 0.0 { relative_improvement(joint, a.d)?.to_string() } else { String::new() };
    let kind = a.kind.to_possible_value().expect("no skipped variants");
    let method = match a.method {
        Method::Closed => "closed-form",
        Method::Quadrature => "quadrature",
        Method::Mc => "monte-carlo",
    };
    println!("kind,d,S,joint_prob,marginal_prob,relative_improvement,method");
    println!("{},{},{},{joint},{marginal},{improvement},{method}", kind.get_name(), a.d, a.s);
    Ok(ExitCode::SUCCESS)
}

fn tables() -> CmdResult {
    let report = reproduce_tables()?;
    print!("{report}");
    let failed = report.failures().count();
    eprintln!("{} of {} checks within tolerance", report.cells.len() - failed, report.cells.len());
    Ok(ExitCode::SUCCESS)
}

fn supervisors(a: SupervisorArgs) -> CmdResult {
    if !(a.lambda >= 0.0 && a.mu > 0.0) {
        return Err("need lambda >= 0 and mu > 0".into());
    }
    let load = a.lambda / a.mu;
    let min = a.epsilon.map(|eps| min_supervisors(a.lambda, a.mu, eps)).transpose()?;
    // Rows run from an empty pool up to the evaluated or minimal pool size.
    let top = a.m.or(min).unwrap_or(0);
    println!("M,offered_load,loss_prob");
    for m in 0..=top {
        println!("{m},{load:.6},{:.8}", erlang_loss(m, load));
    }
    if let Some(min) = min {
        println!("min_supervisors {min}");
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Simulate { config, seed, out } => simulate(config, seed, out),
        Command::Experiment { preset, seeds, out } => experiment(preset, seeds, out),
        Command::Bounds(a) => bounds(a),
        Command::Tables => tables(),
        Command::Supervisors(a) => supervisors(a),
        Command::FleetEstimate {
            speed_mph,
            trip_miles,
            takeover_s,
            share,
            merges_per_trip,
        } => fleet_capacity_estimate(speed_mph, trip_miles, takeover_s, merges_per_trip, share)
            .map(|f| {
                println!("per_highway_vehicle {}", f.per_highway_vehicle);
                println!("overall {}", f.overall);
                ExitCode::SUCCESS
            })
            .map_err(Into::into),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}
