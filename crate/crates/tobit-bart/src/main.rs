use clap::{Args, Parser, Subcommand};
use tobit_bart::cli::{cmd_calibrate, cmd_fit, cmd_simulate, resolve, Command, RawConfig};

/// Bayesian two-equation selection models with sum-of-trees means.
#[derive(Parser)]
#[command(name = "tobit-bart", version, about)]
struct CliArgs {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit a selection model and write a reproducible output bundle
    Fit(CommonArgs),
    /// Run a simulation scenario and write the results table
    Simulate(CommonArgs),
    /// Print prior-calibration values and implied correlation CDFs
    Calibrate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// flat key = value configuration file; command-line flags win
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    /// input CSV with a header row
    #[arg(long)]
    data: Option<String>,
    /// outcome column (missing as empty cell or NA)
    #[arg(long)]
    outcome: Option<String>,
    /// selection indicator column (0/1)
    #[arg(long)]
    select: Option<String>,
    /// comma-separated outcome-equation covariate columns
    #[arg(long = "x-cols")]
    x_cols: Option<String>,
    /// comma-separated selection-equation covariate columns
    #[arg(long = "w-cols")]
    w_cols: Option<String>,
    /// treatment column (enables effects.csv)
    #[arg(long)]
    treat: Option<String>,
    /// linear | bart | bart-marginalized | bart-np
    #[arg(long)]
    model: Option<String>,
    /// vh | omori | ding
    #[arg(long)]
    prior: Option<String>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// output directory (fit/simulate) or file (calibrate)
    #[arg(long)]
    out: Option<String>,
    /// estimated outcome variance for calibrate
    #[arg(long)]
    sigma2: Option<f64>,
    /// remaining key=value overrides (e.g. dgp=brewer2 reps=5 tau=1.0)
    #[arg(trailing_var_arg = true)]
    overrides: Vec<String>,
}

fn build_raw(args: &CommonArgs) -> Result<RawConfig, String> {
    let mut raw = match &args.config {
        Some(path) => RawConfig::from_file(path).map_err(|e| e.to_string())?,
        None => RawConfig::default(),
    };
    macro_rules! put {
        ($key:literal, $field:expr) => {
            if let Some(v) = &$field {
                raw.set($key, v);
            }
        };
    }
    put!("data", args.data);
    put!("outcome", args.outcome);
    put!("select", args.select);
    put!("x_cols", args.x_cols);
    put!("w_cols", args.w_cols);
    put!("treat", args.treat);
    put!("model", args.model);
    put!("prior", args.prior);
    put!("iters", args.iters);
    put!("burnin", args.burnin);
    put!("thin", args.thin);
    put!("chains", args.chains);
    put!("seed", args.seed);
    put!("out", args.out);
    put!("sigma2", args.sigma2);
    for kv in &args.overrides {
        let Some((k, v)) = kv.split_once('=') else {
            return Err(format!("override '{kv}' is not key=value"));
        };
        raw.set(k.trim(), v.trim());
    }
    Ok(raw)
}

fn main() {
    // worker pool size for chains and simulation repetitions
    if let Ok(v) = std::env::var("TOBIT_BART_WORKERS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        }
    }
    let cli = CliArgs::parse();
    let (name, args) = match &cli.command {
        Cmd::Fit(a) => ("fit", a),
        Cmd::Simulate(a) => ("simulate", a),
        Cmd::Calibrate(a) => ("calibrate", a),
    };
    let run = || -> Result<(), String> {
        let raw = build_raw(args)?;
        let command = resolve(name, raw).map_err(|e| e.to_string())?;
        match command {
            Command::Fit(cfg) => cmd_fit(&cfg).map_err(|e| e.to_string()),
            Command::Simulate(cfg) => cmd_simulate(&cfg).map_err(|e| e.to_string()),
            Command::Calibrate(cfg) => cmd_calibrate(&cfg).map_err(|e| e.to_string()),
        }
    };
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
