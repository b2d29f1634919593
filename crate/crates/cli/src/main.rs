use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hgbench_core::bench::{
    emit_report, parse_config, read_records, run_experiment, ReportFormat, RunOptions,
};
use hgbench_core::data::{
    generate_rhg_corpus, load_graph_dataset, load_node_dataset, save_graph_dataset, Dataset, RhgKind,
};

#[derive(Parser)]
#[command(name = "hgbench", version, about = "Benchmark hypergraph neural networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write its reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated seeds replacing those in the config.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Report directory; defaults to the config's `output` or `results`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for independent (grid point, seed) cells.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Generate a synthetic hypergraph-classification corpus.
    GenRhg {
        /// `rhg3`, `rhg10`, or a comma-separated list of families.
        #[arg(long, default_value = "rhg3")]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the shape of a dataset directory or hypergraph collection.
    DatasetInfo { path: PathBuf },
    /// Re-emit reports from a directory of records.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "csv,json,plot")]
        format: Vec<ReportFormat>,
        /// Output directory; defaults to the input directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn families(kind: &str) -> Result<Vec<RhgKind>, String> {
    match kind {
        "rhg3" => Ok(RhgKind::RHG3.to_vec()),
        "rhg10" => Ok(RhgKind::RHG10.to_vec()),
        list => list.split(',').map(str::parse).collect(),
    }
}

fn load_any(path: &Path) -> Result<Dataset, String> {
    let ds = if path.is_dir() { load_node_dataset(path) } else { load_graph_dataset(path) };
    ds.map_err(|e| e.to_string())
}

fn execute(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Run { config, seeds, out, jobs } => {
            let cfg = parse_config(&config).map_err(|e| e.to_string())?;
            let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("results"));
            let records = run_experiment(&cfg, &RunOptions { jobs, seeds }).map_err(|e| e.to_string())?;
            let all = [ReportFormat::Json, ReportFormat::Csv, ReportFormat::Plot];
            for path in emit_report(&records, &dir, &all).map_err(|e| e.to_string())? {
                println!("{}", path.display());
            }
            let failed = records.iter().filter(|r| r.failure.is_some()).count();
            if failed > 0 {
                log::warn!("{failed} of {} records failed", records.len());
            }
        }
        Command::GenRhg { kind, n, seed, out } => {
            let ds = generate_rhg_corpus(&families(&kind)?, n, seed);
            save_graph_dataset(&ds, &out).map_err(|e| e.to_string())?;
            println!("{} hypergraphs, {} classes -> {}", ds.hypergraphs.len(), ds.num_classes, out.display());
        }
        Command::DatasetInfo { path } => {
            let s = load_any(&path)?.summary();
            println!("name         {}", s.name);
            println!("level        {}", s.level);
            println!("hypergraphs  {}", s.hypergraphs);
            println!("nodes        {}", s.nodes);
            println!("hyperedges   {}", s.edges);
            println!("features     {}", s.features);
            println!("classes      {}", s.classes);
            println!("sensitive    {}", if s.sensitive { "yes" } else { "no" });
        }
        Command::Report { input, format, out } => {
            let records = read_records(&input).map_err(|e| e.to_string())?;
            let dir = out.unwrap_or_else(|| {
                if input.is_dir() {
                    input.clone()
                } else {
                    input.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)
                }
            });
            for path in emit_report(&records, &dir, &format).map_err(|e| e.to_string())? {
                println!("{}", path.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
