use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ncms_core::harness::{self, compare_to_reference, ExperimentId, ExperimentSpec, ResultBundle};
use ncms_core::{
    minimize_alpha_bound, pe_th_total, simulate_attack, simulate_pe, solve_problem1, solve_problem2, CpdfModel,
    CrossoverProfile, EventWeighting, NcmsError, NetworkConfig, PeOptions, Substreams,
};

#[derive(Parser)]
#[command(name = "ncms", version, about = "Anti-jamming countermeasure link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo error rates at one operating point.
    Simulate {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, value_enum, default_value_t = Weighting::Average)]
        weighting: Weighting,
    },
    /// Closed-form error bound and its minimising alpha.
    Bound {
        #[command(flatten)]
        net: NetArgs,
    },
    /// Adversary entropy over observation frames.
    Attack {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long, default_value_t = 1000)]
        frames: u64,
        #[arg(long, value_enum, default_value_t = Model::Coherent)]
        model: Model,
    },
    /// Design of (alpha, L_C) for an entropy target.
    Optimize {
        #[command(flatten)]
        net: NetArgs,
        #[arg(long)]
        delta: f64,
        /// 1 = simulation based, 2 = bound based.
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
        problem: u8,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 1000)]
        frames: u64,
    },
    /// Regenerates a figure or table.
    Reproduce {
        /// fig3, fig4, fig5, fig6, table1 or table2.
        target: String,
        #[command(flatten)]
        net: NetArgs,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        frames: Option<u64>,
        /// Skip the simulation-based design in table1.
        #[arg(long)]
        bound_only: bool,
        #[arg(long, env = "NCMS_OUT_DIR")]
        out: Option<PathBuf>,
    },
    /// Checks a table summary against the reference values.
    Compare {
        /// `<table>_summary.json` written by `reproduce`.
        summary: PathBuf,
    },
}

#[derive(Args, Clone, Default)]
struct NetArgs {
    /// Key/value (TOML) configuration file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    mimic_users: Option<usize>,
    #[arg(long)]
    relay_antennas: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    psk_order: Option<usize>,
    #[arg(long)]
    snr_db: Option<f64>,
    #[arg(long)]
    loop_interference: Option<f64>,
    #[arg(long)]
    relay_channel_variance: Option<f64>,
    #[arg(long)]
    half_frame: Option<usize>,
    #[arg(long)]
    softmax_scale: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Use the bound-minimising alpha instead of `--alpha`.
    #[arg(long)]
    optimal_alpha: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weighting {
    Average,
    Sum,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Coherent,
    Marginal,
}

impl From<Weighting> for EventWeighting {
    fn from(w: Weighting) -> Self {
        match w {
            Weighting::Average => EventWeighting::Average,
            Weighting::Sum => EventWeighting::Sum,
        }
    }
}

impl From<Model> for CpdfModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Coherent => CpdfModel::Coherent,
            Model::Marginal => CpdfModel::Marginal,
        }
    }
}

impl NetArgs {
    fn load(&self) -> ncms_core::Result<NetworkConfig> {
        let mut cfg = match &self.config {
            Some(p) => NetworkConfig::from_file(p)?,
            None => NetworkConfig::default(),
        };
        let counts = [
            ("users", self.users),
            ("mimic_users", self.mimic_users),
            ("relay_antennas", self.relay_antennas),
            ("psk_order", self.psk_order),
            ("half_frame", self.half_frame),
        ];
        for (name, v) in counts {
            if let Some(v) = v {
                cfg.set_param(name, v as f64)?;
            }
        }
        let reals = [
            ("alpha", self.alpha),
            ("snr_db", self.snr_db),
            ("loop_interference", self.loop_interference),
            ("relay_channel_variance", self.relay_channel_variance),
            ("softmax_scale", self.softmax_scale),
        ];
        for (name, v) in reals {
            if let Some(v) = v {
                cfg.set_param(name, v)?;
            }
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let mut cfg = cfg.validate()?;
        if self.optimal_alpha {
            cfg.alpha = minimize_alpha_bound(&cfg)?.alpha;
        }
        Ok(cfg)
    }

    fn touched(&self) -> bool {
        self.config.is_some()
            || self.users.is_some()
            || self.mimic_users.is_some()
            || self.relay_antennas.is_some()
            || self.alpha.is_some()
            || self.psk_order.is_some()
            || self.snr_db.is_some()
            || self.loop_interference.is_some()
            || self.relay_channel_variance.is_some()
            || self.half_frame.is_some()
            || self.softmax_scale.is_some()
            || self.seed.is_some()
    }
}

fn json<T: serde::Serialize>(v: &T) -> ncms_core::Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

/// Outcome of a command: success, or a check that ran and did not pass.
enum Outcome {
    Ok,
    Failed,
}

fn execute(cmd: Command, workers: usize) -> ncms_core::Result<Outcome> {
    match cmd {
        Command::Simulate { net, trials, weighting } => {
            let cfg = net.load()?;
            let opts = PeOptions { weighting: weighting.into(), ..PeOptions::new(trials) };
            let stats = simulate_pe(&cfg, &opts, &Substreams::new(cfg.seed))?;
            for w in &stats.warnings {
                eprintln!("warning: {w}");
            }
            json(&stats)?;
        }
        Command::Bound { net } => {
            let cfg = net.load()?;
            let prof = CrossoverProfile::for_config(&cfg)?;
            let best = minimize_alpha_bound(&cfg)?;
            json(&serde_json::json!({
                "alpha": cfg.alpha,
                "pe_th": pe_th_total(&cfg, &prof),
                "p01": prof.p01,
                "p10": prof.p10,
                "tau": prof.tau,
                "alpha_opt": best.alpha,
                "pe_th_opt": best.value,
            }))?;
        }
        Command::Attack { net, frames, model } => {
            let cfg = net.load()?;
            json(&simulate_attack(&cfg, frames, &Substreams::new(cfg.seed), model.into())?)?;
        }
        Command::Optimize { net, delta, problem, trials, frames } => {
            let cfg = net.load()?;
            let sol = if problem == 1 {
                let opts =
                    ncms_core::optimizer::Problem1Options { trials, attack_frames: frames, ..Default::default() };
                solve_problem1(&cfg, delta, &opts, &Substreams::new(cfg.seed))?
            } else {
                solve_problem2(&cfg, delta)?
            };
            json(&sol)?;
        }
        Command::Reproduce { target, net, trials, frames, bound_only, out } => {
            let id: ExperimentId = target.parse()?;
            if id == ExperimentId::Custom {
                return Err(NcmsError::UnknownExperiment("custom sweeps are library-only".into()));
            }
            let base = if net.touched() { net.load()? } else { NetworkConfig::default() };
            let mut spec = ExperimentSpec::preset(id, &base);
            if let Some(t) = trials {
                spec.trials = t;
            }
            if let Some(f) = frames {
                spec.frames = f;
            }
            if bound_only {
                spec.problem1 = false;
            }
            spec.out_dir = out;
            spec.workers = Some(workers);
            let bundle = harness::run(&spec)?;
            print!("{}", harness::curve_text(&bundle));
            for f in &bundle.files {
                eprintln!("wrote {}", f.display());
            }
            for e in &bundle.failures {
                eprintln!("point failed: {e}");
            }
            if matches!(id, ExperimentId::Table1 | ExperimentId::Table2) {
                let report = compare_to_reference(&bundle, id)?;
                eprint!("{}", report.render());
                if !report.passed() {
                    return Ok(Outcome::Failed);
                }
            }
            if !bundle.succeeded() {
                return Ok(Outcome::Failed);
            }
        }
        Command::Compare { summary } => {
            let bundle: ResultBundle = serde_json::from_slice(&std::fs::read(&summary)?)?;
            let report = compare_to_reference(&bundle, bundle.spec.id)?;
            print!("{}", report.render());
            if !report.passed() {
                return Ok(Outcome::Failed);
            }
        }
    }
    Ok(Outcome::Ok)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.workers > 0 {
        // a second initialisation only fails if something already built the pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.workers).build_global();
    }
    match execute(cli.command, cli.workers) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::Failed) => ExitCode::from(1),
        Err(
            e @ (NcmsError::InvalidConfig(_)
            | NcmsError::InvalidArgument { .. }
            | NcmsError::UnknownExperiment(_)
            | NcmsError::ConfigParse(_)),
        ) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
