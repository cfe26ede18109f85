use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use vanlearn_bench::datasets::{self, HttpSource, Origin};
use vanlearn_bench::{
    render_csv, render_text, resolve_dataset, run, suite, BenchError, BenchRow, RunParams, SELF_GENERATED_NOISE,
    SELF_GENERATED_ROWS, SELF_GENERATED_SEED,
};
use vanlearn_core::{export, Algorithm, ExportFormat};

#[derive(Parser)]
#[command(name = "vanlearn-bench", about = "Times the vanlearn learners on the benchmark datasets")]
struct Cli {
    /// Directory holding fetched datasets.
    #[arg(long, env = "VANLEARN_DATA_DIR", default_value = "data", global = true)]
    data_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Download the UCI datasets as header-bearing CSVs.
    Fetch {
        /// Use verified local or bundled copies only.
        #[arg(long)]
        offline: bool,
    },
    /// Write the y = 2x + 1 dataset as CSV.
    Generate {
        #[arg(long, default_value_t = SELF_GENERATED_ROWS)]
        n: usize,
        #[arg(long, default_value_t = SELF_GENERATED_NOISE)]
        noise_sd: f64,
        #[arg(long, default_value_t = SELF_GENERATED_SEED)]
        seed: u64,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time one algorithm on one dataset.
    Run {
        /// seeds, haberman, iris, self-generated, or a CSV path.
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        algo: Algorithm,
        #[arg(long)]
        k: Option<usize>,
        /// Target column name or index (regressions).
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        csv: bool,
    },
    /// Run the four table rows.
    Report {
        #[arg(long)]
        csv: bool,
    },
}

fn print(rows: &[BenchRow], csv: bool) {
    if csv {
        print!("{}", render_csv(rows));
    } else {
        print!("{}", render_text(rows));
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn real_main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Fetch { offline } => {
            let source = HttpSource::new()?;
            let mut failed = 0;
            for spec in datasets::ALL {
                match datasets::fetch(&spec, &cli.data_dir, offline, &source) {
                    Ok(f) => {
                        let how = match f.origin {
                            Origin::Cached => "cached",
                            Origin::Downloaded => "downloaded",
                            Origin::Bundled => "bundled",
                        };
                        println!("{:<9} {:>4} rows  {how:<10}  {}  {}", f.name, f.rows, f.fingerprint, f.path.display());
                    }
                    Err(e) => {
                        failed += 1;
                        eprintln!("{:<9} {e}", spec.name);
                    }
                }
            }
            if failed > 0 {
                bail!("{failed} dataset(s) could not be fetched");
            }
        }
        Command::Generate { n, noise_sd, seed, out } => {
            let d = vanlearn_bench::generate_linear_data(n, noise_sd, seed)?;
            let bytes = export(&d, ExportFormat::Csv);
            match out {
                Some(p) => std::fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{}", String::from_utf8_lossy(&bytes)),
            }
        }
        Command::Run { dataset, algo, k, target, csv } => {
            let (label, d) = resolve_dataset(&dataset, &cli.data_dir, algo)?;
            let row = run(&d, &label, algo, &RunParams { k, target }).map_err(report)?;
            print(&[row], csv);
        }
        Command::Report { csv } => {
            let mut rows = Vec::new();
            let mut failed = 0;
            for (name, algo, row) in suite(&cli.data_dir) {
                match row {
                    Ok(r) => rows.push(r),
                    Err(e) => {
                        failed += 1;
                        eprintln!("{name}/{algo}: {e}");
                    }
                }
            }
            print(&rows, csv);
            if failed > 0 {
                bail!("{failed} of 4 rows failed");
            }
        }
    }
    Ok(())
}

/// Validation failures print the whole report before exiting.
fn report(e: BenchError) -> anyhow::Error {
    if let BenchError::Invalid(r) = &e {
        for v in &r.violations {
            eprintln!("{}: {}", v.code.as_str(), v.message);
        }
    }
    e.into()
}
