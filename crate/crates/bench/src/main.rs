use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use tpais_bench::{emit_csv, emit_plots, emit_targets, run_experiments, BenchError, ExperimentSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Svg,
    Both,
}

/// Run the seeded sampler benchmark matrix.
#[derive(Debug, Parser)]
#[command(name = "tpais-bench", version)]
struct Cli {
    /// TOML file with experiment settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated method ids (tpais, tpais-nors, tpais-dm, tpais-mix, tpais-gauss, mh, pmc, dm-pmc).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Comma-separated target families (normal, gmm5, egg).
    #[arg(long, value_delimiter = ',')]
    families: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<usize>>,
    /// Comma-separated sample budgets.
    #[arg(long = "n-grid", value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "jsd-points")]
    jsd_points: Option<usize>,
    /// Write 0 instead of measured wall time (byte-reproducible output).
    #[arg(long = "no-timing")]
    no_timing: bool,
    #[arg(long = "out-dir", default_value = "results")]
    out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

impl Cli {
    fn spec(&self) -> Result<ExperimentSpec, BenchError> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_toml(&fs::read_to_string(path)?)?,
            None => ExperimentSpec::default(),
        };
        if let Some(v) = &self.methods {
            spec.methods = v.clone();
        }
        if let Some(v) = &self.families {
            spec.families = v.clone();
        }
        if let Some(v) = &self.dims {
            spec.dims = v.clone();
        }
        if let Some(v) = &self.n_grid {
            spec.sample_counts = v.clone();
        }
        if let Some(v) = self.trials {
            spec.trials = v;
        }
        if let Some(v) = self.seed {
            spec.base_seed = v;
        }
        if let Some(v) = self.jsd_points {
            spec.jsd_points = v;
        }
        if self.no_timing {
            spec.timing = false;
        }
        Ok(spec)
    }
}

fn run(cli: &Cli) -> Result<usize, BenchError> {
    let spec = cli.spec()?;
    let out = run_experiments(&spec)?;
    fs::create_dir_all(&cli.out_dir)?;
    if matches!(cli.format, Format::Csv | Format::Both) {
        emit_csv(&out.rows, &cli.out_dir.join("results.csv"))?;
        emit_targets(&out.targets, &cli.out_dir.join("targets.json"))?;
    }
    if matches!(cli.format, Format::Svg | Format::Both) && !out.rows.is_empty() {
        emit_plots(&out.rows, &cli.out_dir.join("plots"))?;
    }
    let mut failed = 0;
    for row in out.errors() {
        failed += 1;
        eprintln!(
            "error: {} {} dims={} N={} trial={}: {}",
            row.method,
            row.family,
            row.dims,
            row.n,
            row.trial,
            row.error.as_deref().unwrap_or_default()
        );
    }
    eprintln!("{} runs, {} failed, output in {}", out.rows.len(), failed, cli.out_dir.display());
    Ok(failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
