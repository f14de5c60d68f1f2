use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use it2stc::cli::experiment;
use it2stc::cli::{ExperimentConfig, Overrides};
use it2stc::Result;

#[derive(Parser)]
#[command(
    name = "it2stc",
    version,
    about = "Adaptive interval type-2 fuzzy super-twisting control of chaotic plants"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Uncontrolled plant (default preset: duffing-free).
    FreeRun(Common),
    /// Closed-loop tracking run (default preset: duffing-track).
    Track(Common),
    /// Adaptive vs ideal super-twisting vs first-order SMC, RMSE-matched.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Keep measurement noise instead of comparing noise-free runs.
        #[arg(long)]
        keep_noise: bool,
    },
    /// Print the resolved configuration as TOML.
    Config(Common),
}

#[derive(Args)]
struct Common {
    /// Built-in preset (duffing-track, duffing-free).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    snr_db: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Record every k-th step.
    #[arg(long)]
    decimate: Option<usize>,
    /// Write CSVs in long `t,variable,value` format.
    #[arg(long)]
    long: bool,
}

impl Common {
    fn resolve(&self, default_preset: &str) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::parse(&std::fs::read_to_string(path)?)?,
            None => ExperimentConfig::preset(self.preset.as_deref().unwrap_or(default_preset))?,
        };
        cfg.apply(&Overrides {
            seed: self.seed,
            t_end: self.t_end,
            step: self.step,
            snr_db: self.snr_db,
            decimate: self.decimate,
            out: self.out.clone(),
        })?;
        Ok(cfg)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::FreeRun(common) => {
            let cfg = common.resolve("duffing-free")?;
            let (out, report) = experiment::run_free(&cfg)?;
            let path = experiment::write_artifacts(
                Path::new(&cfg.output.dir),
                "free_run",
                &out,
                Some(&report),
                common.long,
            )?;
            println!("wrote {}", path.display());
            println!("max |x|              {:.6}", report.max_abs_state);
            println!("min return distance  {:.3e}", report.min_return_distance);
        }
        Command::Track(common) => {
            let cfg = common.resolve("duffing-track")?;
            let out = experiment::run(&cfg)?;
            let path = experiment::write_artifacts(
                Path::new(&cfg.output.dir),
                "track",
                &out,
                None,
                common.long,
            )?;
            let m = &out.metrics;
            println!("wrote {}", path.display());
            println!("controller   {}", out.kind.name());
            println!("rmse_e1      {:.6e}", m.rmse_e1);
            println!("rmse_e2      {:.6e}", m.rmse_e2);
            println!("tv_u         {:.6e}", m.tv_u);
            println!("settle_time  {}", fmt_opt(m.settle_time));
            println!("s_band_time  {}", fmt_opt(m.s_band_time));
        }
        Command::Compare { common, keep_noise } => {
            let cfg = common.resolve("duffing-track")?;
            let cmp = experiment::run_compare(&cfg, keep_noise)?;
            let path = experiment::write_compare(Path::new(&cfg.output.dir), &cmp, common.long)?;
            print!("{}", experiment::compare_table(&cmp.rows));
            if !cmp.matched {
                eprintln!("warning: first-order gain did not reach the RMSE match band");
            }
            println!("wrote {}", path.display());
        }
        Command::Config(common) => {
            let cfg = common.resolve("duffing-track")?;
            print!("{}", cfg.to_toml()?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
