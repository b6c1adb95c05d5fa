//! `hercs` command line.
//!
//! ```text
//! hercs run             --env bitflip:10 --algo her --epochs 30 --seeds 1
//! hercs compare         --env push2d --algo her,her-cs --seeds 1,2,3,4,5
//! hercs validate-config --config exp.conf
//! ```
//!
//! Settings come from the defaults, then `--config <file>`, then flags.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::harness::{run_suite, ExperimentConfig, SuiteSummary};

#[derive(Debug, Parser)]
#[command(
    name = "hercs",
    version,
    about = "Hindsight experience replay with cluster-based sampling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one algorithm over the configured seeds.
    Run(Settings),
    /// Train several algorithms on shared seeds and chart them together.
    Compare(Settings),
    /// Check a configuration without running it.
    ValidateConfig(Settings),
}

#[derive(Debug, Args)]
struct Settings {
    /// Flat `key = value` file; keys are the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
    /// bitflip:<n>, reach2d or push2d
    #[arg(long)]
    env: Option<String>,
    /// vanilla, her, her-cs, her-ebp, her-ebp-cs (comma-separated for compare)
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    /// Comma-separated list of seeds.
    #[arg(long)]
    seeds: Option<String>,
    /// Number of clusters.
    #[arg(long)]
    k: Option<String>,
    /// Failed-goal buffer capacity.
    #[arg(long)]
    fgb_capacity: Option<String>,
    #[arg(long)]
    batch_size: Option<String>,
    /// Probability that a sampled step gets a hindsight goal.
    #[arg(long)]
    future_p: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    cycles: Option<String>,
    #[arg(long)]
    episodes_per_cycle: Option<String>,
    #[arg(long)]
    optimizer_steps: Option<String>,
    #[arg(long)]
    eval_episodes: Option<String>,
    #[arg(long)]
    buffer_capacity: Option<String>,
    #[arg(long)]
    energy_epsilon: Option<String>,
    #[arg(long)]
    kmeans_max_iters: Option<String>,
    #[arg(long)]
    kmeans_tol: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    lr_actor: Option<String>,
    #[arg(long)]
    lr_critic: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    #[arg(long)]
    exploration_eps: Option<String>,
    #[arg(long)]
    action_noise: Option<String>,
    #[arg(long)]
    action_l2: Option<String>,
    #[arg(long)]
    target_clip: Option<String>,
    /// Comma-separated hidden layer widths.
    #[arg(long)]
    hidden: Option<String>,
    /// Record per-epoch wall time in the CSVs (breaks byte reproducibility).
    #[arg(long)]
    wall_time: Option<String>,
    #[arg(long)]
    threads: Option<String>,
}

impl Settings {
    fn overrides(&self) -> Vec<(&'static str, &str)> {
        let pairs: [(&'static str, &Option<String>); 28] = [
            ("env", &self.env),
            ("algo", &self.algo),
            ("epochs", &self.epochs),
            ("seeds", &self.seeds),
            ("k", &self.k),
            ("fgb-capacity", &self.fgb_capacity),
            ("batch-size", &self.batch_size),
            ("future-p", &self.future_p),
            ("out", &self.out),
            ("cycles", &self.cycles),
            ("episodes-per-cycle", &self.episodes_per_cycle),
            ("optimizer-steps", &self.optimizer_steps),
            ("eval-episodes", &self.eval_episodes),
            ("buffer-capacity", &self.buffer_capacity),
            ("energy-epsilon", &self.energy_epsilon),
            ("kmeans-max-iters", &self.kmeans_max_iters),
            ("kmeans-tol", &self.kmeans_tol),
            ("gamma", &self.gamma),
            ("lr-actor", &self.lr_actor),
            ("lr-critic", &self.lr_critic),
            ("tau", &self.tau),
            ("exploration-eps", &self.exploration_eps),
            ("action-noise", &self.action_noise),
            ("action-l2", &self.action_l2),
            ("target-clip", &self.target_clip),
            ("hidden", &self.hidden),
            ("wall-time", &self.wall_time),
            ("threads", &self.threads),
        ];
        pairs
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }

    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        for (key, value) in self.overrides() {
            cfg.set(key, value)
                .map_err(|e| Error::Config(format!("--{key}: {e}")))?;
        }
        Ok(cfg)
    }
}

fn print_summary(summary: &SuiteSummary, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "{:<12} {:>8} {:>10} {:>10}",
        "algo", "auc", "final", "band10"
    )?;
    for s in &summary.algos {
        writeln!(
            out,
            "{:<12} {:>8.4} {:>10.4} {:>10.4}",
            s.algo.as_str(),
            s.auc,
            s.final_mean(),
            s.band_width_last10
        )?;
    }
    Ok(())
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<()> {
    let io = |e| Error::io("<stdout>", e);
    match command {
        Command::Run(settings) => {
            let cfg = settings.resolve()?;
            if cfg.algos.len() != 1 {
                return Err(Error::Config(
                    "run takes exactly one --algo; use compare for several".into(),
                ));
            }
            let summary = run_suite(&cfg)?;
            print_summary(&summary, stdout).map_err(io)?;
            writeln!(stdout, "results written to {}", cfg.out.display()).map_err(io)?;
        }
        Command::Compare(settings) => {
            let cfg = settings.resolve()?;
            let summary = run_suite(&cfg)?;
            print_summary(&summary, stdout).map_err(io)?;
            writeln!(stdout, "results written to {}", cfg.out.display()).map_err(io)?;
        }
        Command::ValidateConfig(settings) => {
            let cfg = settings.resolve()?;
            cfg.validate()?;
            write!(stdout, "{}", cfg.to_text()).map_err(io)?;
            writeln!(stdout, "# configuration is valid").map_err(io)?;
        }
    }
    Ok(())
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit status: 0 on success, 1 on a run or validation error,
/// 2 on a usage error.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut stdout = std::io::stdout().lock();
    match execute(cli.command, &mut stdout) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn settings(args: &[&str]) -> Settings {
        let mut argv = vec!["hercs", "run"];
        argv.extend_from_slice(args);
        match Cli::try_parse_from(argv).unwrap().command {
            Command::Run(s) => s,
            _ => unreachable!(),
        }
    }

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.conf");
        std::fs::write(&path, "env = push2d\nk = 3\nbatch-size = 30\n").unwrap();
        let p = path.to_str().unwrap();
        let cfg = settings(&["--config", p, "--k", "5", "--algo", "her-cs"])
            .resolve()
            .unwrap();
        assert_eq!(cfg.k, 5);
        assert_eq!(cfg.batch_size, 30);
        assert_eq!(cfg.env.to_string(), "push2d");
        assert_eq!(cfg.algos.len(), 1);
    }

    #[test]
    fn every_flag_maps_to_a_config_key() {
        let s = settings(&[]);
        let keys: Vec<&str> = s.overrides().iter().map(|(k, _)| *k).collect();
        assert!(keys.is_empty());
        let mut all: Vec<&str> = crate::harness::KEYS.to_vec();
        all.sort_unstable();
        let full = Settings {
            config: None,
            env: Some(String::new()),
            algo: Some(String::new()),
            epochs: Some(String::new()),
            seeds: Some(String::new()),
            k: Some(String::new()),
            fgb_capacity: Some(String::new()),
            batch_size: Some(String::new()),
            future_p: Some(String::new()),
            out: Some(String::new()),
            cycles: Some(String::new()),
            episodes_per_cycle: Some(String::new()),
            optimizer_steps: Some(String::new()),
            eval_episodes: Some(String::new()),
            buffer_capacity: Some(String::new()),
            energy_epsilon: Some(String::new()),
            kmeans_max_iters: Some(String::new()),
            kmeans_tol: Some(String::new()),
            gamma: Some(String::new()),
            lr_actor: Some(String::new()),
            lr_critic: Some(String::new()),
            tau: Some(String::new()),
            exploration_eps: Some(String::new()),
            action_noise: Some(String::new()),
            action_l2: Some(String::new()),
            target_clip: Some(String::new()),
            hidden: Some(String::new()),
            wall_time: Some(String::new()),
            threads: Some(String::new()),
        };
        let mut got: Vec<&str> = full.overrides().iter().map(|(k, _)| *k).collect();
        got.sort_unstable();
        assert_eq!(got, all);
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(cli_main(["hercs", "run", "--bogus", "1"]), 2);
        assert_eq!(cli_main(["hercs"]), 2);
    }

    #[test]
    fn bad_value_is_an_error() {
        assert_eq!(
            cli_main(["hercs", "validate-config", "--algo", "her-xx"]),
            1
        );
        assert_eq!(cli_main(["hercs", "validate-config", "--future-p", "2"]), 1);
        assert_eq!(cli_main(["hercs", "validate-config"]), 0);
    }
}
