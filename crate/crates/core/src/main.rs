use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mpmab::capest::WidthFn;
use mpmab::env::{ArmSpec, RewardDistribution, RewardModel};
use mpmab::harness::{
    builtin_scenario, ci_width_table, log_grid, run_experiment, sample_complexity_experiment, serialize_results,
    ExperimentConfig, SampleComplexityConfig, DEFAULT_REPS, SCENARIOS,
};
use mpmab::policies::{theoretical_curves, PolicyKind, PolicySpec};
use mpmab::Error;

#[derive(Parser)]
#[command(name = "mpmab", version, about = "Multiple-play bandits with shareable finite-capacity arms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a regret experiment and write CSV + JSON results.
    Run(RunArgs),
    /// List the built-in scenarios.
    Scenarios,
    /// Single-arm capacity-learning experiment.
    SampleComplexity(SampleArgs),
    /// Compare the uniform and Hoeffding confidence widths.
    CiCompare(CiArgs),
    /// Asymptotic regret bound coefficients of a scenario.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML experiment file; flags given alongside override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario (bernoulli9, gaussian9, bs20).
    #[arg(long)]
    scenario: Option<String>,
    /// Comma-separated policy names.
    #[arg(long, value_delimiter = ',')]
    policies: Option<Vec<String>>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Elimination gap scale for every policy.
    #[arg(long)]
    gamma: Option<f64>,
    /// Capacity-interval confidence scale for every policy.
    #[arg(long)]
    xi: Option<f64>,
    /// Capacity-interval width function.
    #[arg(long)]
    width: Option<WidthFn>,
    /// Log every n-th slot.
    #[arg(long)]
    stride: Option<u64>,
    /// CSV output path; the JSON sidecar goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for replications.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    mean: f64,
    #[arg(long)]
    capacity: u32,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    /// Plays of a united pull; defaults to max(10, capacity).
    #[arg(long)]
    plays: Option<u32>,
    /// Gaussian per-load variance; Bernoulli when absent.
    #[arg(long)]
    variance: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = mpmab::harness::sample_complexity::DEFAULT_MAX_SLOTS)]
    max_slots: u64,
    #[arg(long, default_value_t = WidthFn::Uci)]
    width: WidthFn,
    /// CSV of per-replication stopping records.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CiArgs {
    #[arg(long, default_value_t = 1_000_000)]
    horizon: u64,
    /// Grid size.
    #[arg(long, default_value_t = 61)]
    points: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long)]
    scenario: String,
    /// Per-load variance in the capacity terms; defaults to the scenario's.
    #[arg(long)]
    variance: Option<f64>,
    /// Largest horizon of the curve written with --out.
    #[arg(long, default_value_t = 100_000)]
    horizon: u64,
    #[arg(long, default_value_t = 41)]
    points: usize,
    /// CSV of both curves.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => {
            let scenario = args
                .scenario
                .clone()
                .ok_or_else(|| Error::Config("give --scenario or --config".into()))?;
            ExperimentConfig::for_scenario(&scenario, 100_000, DEFAULT_REPS, 0, Vec::new())
        }
    };
    if let Some(s) = &args.scenario {
        cfg.scenario = Some(s.clone());
        cfg.arms.clear();
        cfg.plays = None;
    }
    if let Some(names) = &args.policies {
        cfg.policies = names
            .iter()
            .filter(|n| !n.trim().is_empty())
            .map(|n| n.parse::<PolicyKind>().map(PolicySpec::new))
            .collect::<Result<_, _>>()?;
    }
    if cfg.policies.is_empty() {
        cfg.policies = [PolicyKind::Orchexplore, PolicyKind::Mpsesa, PolicyKind::Etcucb]
            .into_iter()
            .map(PolicySpec::new)
            .collect();
    }
    for p in &mut cfg.policies {
        if let Some(g) = args.gamma {
            p.gamma = g;
        }
        if let Some(x) = args.xi {
            p.xi = x;
        }
        if let Some(w) = args.width {
            p.width = w;
        }
    }
    if let Some(v) = args.horizon {
        cfg.horizon = v;
    }
    if let Some(v) = args.reps {
        cfg.reps = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.stride {
        cfg.stride = Some(v);
    }
    if let Some(v) = args.threads {
        cfg.threads = Some(v);
    }
    if let Some(v) = &args.out {
        cfg.out = Some(v.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> Result<(), Error> {
    let cfg = build_config(&args)?;
    let result = run_experiment(&cfg)?;
    for f in &result.failures {
        eprintln!("warning: skipping {}: {}", f.label, f.error);
    }
    println!("policy\tfinal_mean_regret\tfinal_std_regret\toptimal_action_freq");
    for t in &result.traces {
        println!(
            "{}\t{}\t{}\t{}",
            t.label,
            t.final_mean_regret(),
            t.final_std_regret(),
            t.final_optimal_freq
        );
    }
    if let Some(out) = &cfg.out {
        let side = serialize_results(&result, out)?;
        eprintln!("wrote {} and {}", out.display(), side.display());
    }
    Ok(())
}

fn cmd_scenarios() -> Result<(), Error> {
    println!("name\tarms\tplays\toptimal_reward\toptimal_arms");
    for name in SCENARIOS {
        let env = builtin_scenario(name)?;
        let (_, used) = env.optimal_action();
        println!(
            "{name}\t{}\t{}\t{}\t{used}",
            env.num_arms(),
            env.plays(),
            env.optimal_reward()
        );
    }
    Ok(())
}

fn cmd_sample_complexity(args: SampleArgs) -> Result<(), Error> {
    let arm = match args.variance {
        Some(v) => ArmSpec::gaussian(args.mean, args.capacity, v),
        None => ArmSpec::bernoulli(args.mean, args.capacity),
    };
    let mut cfg = SampleComplexityConfig::new(arm, args.delta, args.reps, args.seed);
    if let Some(p) = args.plays {
        cfg.plays = p;
    }
    cfg.max_slots = args.max_slots;
    cfg.width = args.width;
    let rep = sample_complexity_experiment(&cfg)?;
    println!("reps\tcensored\tcorrect_rate\tmedian_ie_samples\tmedian_ue_samples\tsample_bound\twithin_bound_rate");
    println!(
        "{}\t{}\t{}\t{}\t{}\t{}\t{}",
        cfg.reps,
        rep.censored,
        rep.correct_rate,
        rep.median_ie_samples,
        rep.median_ue_samples,
        rep.sample_bound,
        rep.within_bound_rate
    );
    if let Some(out) = args.out {
        let mut text = String::from("rep,slots,ie_samples,ue_samples,estimate,correct,censored\n");
        for (i, r) in rep.records.iter().enumerate() {
            let est = r.estimate.map(|m| m.to_string()).unwrap_or_default();
            text.push_str(&format!(
                "{i},{},{},{},{est},{},{}\n",
                r.slots, r.ie_samples, r.ue_samples, r.correct, r.censored
            ));
        }
        std::fs::write(out, text)?;
    }
    Ok(())
}

fn cmd_ci_compare(args: CiArgs) -> Result<(), Error> {
    let rows = ci_width_table(args.horizon, &log_grid(args.horizon, args.points))?;
    let mut csv = String::from("t,uci,hfd\n");
    println!("t\tuci\thfd");
    for r in &rows {
        println!("{}\t{}\t{}", r.t, r.uci, r.hfd);
        csv.push_str(&format!("{},{:?},{:?}\n", r.t, r.uci, r.hfd));
    }
    if let Some(out) = args.out {
        std::fs::write(out, csv)?;
    }
    Ok(())
}

fn cmd_bounds(args: BoundsArgs) -> Result<(), Error> {
    let env = builtin_scenario(&args.scenario)?;
    let variance = args.variance.unwrap_or_else(|| match env.reward_model() {
        RewardModel::Gaussian { variance } => variance,
        RewardModel::Bernoulli => env
            .arms()
            .iter()
            .map(|a| match a.distribution {
                RewardDistribution::Bernoulli => a.mean * (1.0 - a.mean),
                RewardDistribution::Gaussian { variance } => variance,
            })
            .fold(0.0, f64::max),
    });
    let horizons: Vec<f64> = log_grid(args.horizon, args.points).into_iter().map(|t| t as f64).collect();
    let curves = theoretical_curves(&env, variance, &horizons)?;
    let c = &curves.coefficients;
    println!("bound\tmean_term\tcapacity_term\tcoefficient");
    println!("lower\t{}\t{}\t{}", c.mean_term, c.lower_capacity_term, c.lower);
    println!("upper\t{}\t{}\t{}", c.mean_term, c.upper_capacity_term, c.upper);
    if let Some(out) = args.out {
        let mut csv = String::from("t,lower,upper\n");
        for ((t, lo), up) in horizons.iter().zip(&curves.lower).zip(&curves.upper) {
            csv.push_str(&format!("{t},{lo:?},{up:?}\n"));
        }
        std::fs::write(out, csv)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Scenarios => cmd_scenarios(),
        Command::SampleComplexity(a) => cmd_sample_complexity(a),
        Command::CiCompare(a) => cmd_ci_compare(a),
        Command::Bounds(a) => cmd_bounds(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
