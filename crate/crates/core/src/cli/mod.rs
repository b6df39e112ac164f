//! Command-line experiment runner.
//!
//! Every run reads one JSON config (optional; defaults otherwise), writes a
//! JSON report that embeds the fully resolved config, and for series
//! commands a CSV file. The output directory comes from `--out`, then the
//! `SUPERHEDGE_OUT` environment variable, then `./out`.

pub mod config;
pub mod emit;
pub mod run;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::json;

pub use config::{Command, ExperimentConfig, ResolvedConfig};
pub use emit::emit_convergence;
pub use run::{run, RunOutput};

use crate::error::{Error, Result};

pub const OUT_ENV: &str = "SUPERHEDGE_OUT";

#[derive(Debug, Parser)]
#[command(name = "superhedge", version, about = "Hedging prices in multinomial games")]
pub struct Cli {
    /// JSON experiment config.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Seed for sampling; overrides the config.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

impl Cli {
    pub fn execute(&self) -> Result<RunOutput> {
        let (cfg, base) = match &self.config {
            Some(path) => (
                ExperimentConfig::from_path(path)?,
                path.parent().map(Path::to_path_buf).unwrap_or_default(),
            ),
            None => (ExperimentConfig::default(), PathBuf::from(".")),
        };
        let resolved = cfg.resolve(self.command, self.seed)?;
        let out = self
            .out
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let pool = match self.threads {
            Some(0) => return Err(Error::Config("--threads must be positive".into())),
            Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
            None => rayon::ThreadPoolBuilder::new().build(),
        }
        .map_err(|e| Error::Config(e.to_string()))?;
        pool.install(|| run(&resolved, &base, &out))
    }
}

/// Parses `args`, runs, prints the summary or a JSON error, and returns the
/// process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            e.print().ok();
            return code;
        }
    };
    match cli.execute() {
        Ok(out) => {
            print!("{}", out.summary);
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            0
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": { "kind": e.kind(), "message": e.to_string() } }));
            1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exec(dir: &Path, config: Option<&str>, args: &[&str]) -> Result<RunOutput> {
        let mut argv = vec!["superhedge".to_string(), "--out".into(), dir.join("out").display().to_string()];
        if let Some(body) = config {
            let path = dir.join("config.json");
            std::fs::write(&path, body).unwrap();
            argv.extend(["--config".into(), path.display().to_string()]);
        }
        argv.extend(args.iter().map(|a| a.to_string()));
        Cli::try_parse_from(argv).unwrap().execute()
    }

    #[test]
    fn converge_and_boyle_endpoints_agree() {
        let dir = tempfile::tempdir().unwrap();
        let conv = exec(dir.path(), Some(r#"{"N_range": [1, 20]}"#), &["converge"]).unwrap();
        let series = conv.report["results"]["series"].as_array().unwrap();
        assert_eq!(series.len(), 20);
        let last = &series[19];
        let (upper, lower) = (last["upper"].as_f64().unwrap(), last["lower"].as_f64().unwrap());
        assert!((upper - 0.1666).abs() < 0.01 && (lower - 0.0833).abs() < 0.01);
        let csv = std::fs::read_to_string(dir.path().join("out/series.csv")).unwrap();
        assert_eq!(csv.lines().count(), 21);

        let boyle = exec(dir.path(), Some(r#"{"N": 20}"#), &["boyle-sweep"]).unwrap();
        let sweep = boyle.report["results"]["sweep"].as_array().unwrap();
        assert!((sweep[0]["price"].as_f64().unwrap() - upper).abs() < 1e-9);
        assert!((sweep[10]["price"].as_f64().unwrap() - lower).abs() < 1e-9);
    }

    #[test]
    fn census_summary_and_seeded_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let a = exec(dir.path(), None, &["--seed", "5", "census"]).unwrap();
        assert!(a.summary.contains("full-dimensional simplexes: 58"));
        assert!(a.summary.contains("count at the centre: 50"));
        let first = std::fs::read(dir.path().join("out/report.json")).unwrap();
        exec(dir.path(), None, &["--seed", "5", "census"]).unwrap();
        assert_eq!(first, std::fs::read(dir.path().join("out/report.json")).unwrap());
        assert_eq!(a.report["config"]["seed"], 5);
        assert_eq!(a.report["config"]["samples"], 1000);
    }

    #[test]
    fn limits_and_strategies() {
        let dir = tempfile::tempdir().unwrap();
        let pde = exec(dir.path(), Some(r#"{"move_set": {"preset": "chi2"}}"#), &["limit-pde"]).unwrap();
        let upper = pde.report["results"]["values"]["upper"].as_f64().unwrap();
        assert!((upper - 0.1105).abs() < 5e-3);
        let gauss = exec(dir.path(), None, &["limit-gaussian"]).unwrap();
        assert!((gauss.report["results"]["sides"][0]["value"].as_f64().unwrap() - 0.1666).abs() < 5e-4);
        let sv = exec(dir.path(), Some(r#"{"N": 3, "side": "upper"}"#), &["strategy-verify"]).unwrap();
        assert_eq!(sv.report["results"]["ok"], true);
    }

    #[test]
    fn error_kinds() {
        let dir = tempfile::tempdir().unwrap();
        let e = exec(dir.path(), Some(r#"{"command": "converge"}"#), &["price"]).unwrap_err();
        assert_eq!(e.kind(), "Config");
        let e = exec(dir.path(), Some(r#"{"move_set": [[1, 1], [2, 2], [3, 3]]}"#), &["price"]).unwrap_err();
        assert_eq!(e.kind(), "DimensionDeficient");
        let e = exec(dir.path(), Some(r#"{"payoff": {"kind": "linear", "weights": [1]}}"#), &["price"]).unwrap_err();
        assert_eq!(e.kind(), "DimensionMismatch");
        let e = exec(dir.path(), None, &["--threads", "0", "census"]).unwrap_err();
        assert_eq!(e.kind(), "Config");
    }
}
