use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use geodec::cli::{cmd_analyze, cmd_gdi, cmd_netem_export, cmd_simulate, cmd_sweep, SweepSpec};
use geodec::config::DATA_DIR_ENV;
use geodec::geodata::load_cities;
use geodec::{Dataset, Distribution, ScenarioConfig, VoteRace};

#[derive(Parser)]
#[command(name = "geodec", version, about = "Geo-distributed HotStuff liveliness simulator")]
struct Cli {
    /// Directory holding cities.csv and pings.csv.
    #[arg(long, global = true, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write report.csv, report.json and epochs.csv.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Run a parameter grid and write sweep.csv plus per-run reports.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// JSON sweep spec.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Correlations and per-count liveliness summaries for a sweep.csv.
    Analyze {
        input: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// GDI report for a `validator_id,city` CSV.
    Gdi {
        input: PathBuf,
        #[arg(long)]
        cities: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Print or write the netem delay script for a scenario.
    NetemExport {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// `validator_id,ip` CSV.
        #[arg(long)]
        ip_map: PathBuf,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// JSON scenario config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Validators per city, e.g. "san jose=8,helsinki=7,singapore=1".
    #[arg(long)]
    distribution: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    delta_ms: Option<f64>,
    #[arg(long)]
    epoch_count: Option<usize>,
    #[arg(long)]
    pi: Option<f64>,
    #[arg(long)]
    timeout_ms: Option<f64>,
    #[arg(long)]
    processing_delay_ms: Option<f64>,
    #[arg(long)]
    jitter_ms: Option<f64>,
    #[arg(long)]
    solution_enabled: Option<bool>,
    #[arg(long)]
    jail_duration: Option<u32>,
    /// ascending | random
    #[arg(long)]
    vote_race: Option<VoteRace>,
    #[arg(long)]
    cities_path: Option<PathBuf>,
    #[arg(long)]
    pings_path: Option<PathBuf>,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn parse_distribution(s: &str) -> geodec::Result<Distribution> {
    let mut entries = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (city, n) = part
            .split_once('=')
            .ok_or_else(|| geodec::Error::Config(format!("expected city=count, got `{part}`")))?;
        let n: usize = n
            .trim()
            .parse()
            .map_err(|_| geodec::Error::Config(format!("bad count in `{part}`")))?;
        entries.push((city.trim().to_string(), n));
    }
    Ok(Distribution::new(entries))
}

impl ScenarioArgs {
    fn resolve(&self, data_dir: Option<&PathBuf>) -> geodec::Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(p) => ScenarioConfig::load(p)?,
            None => ScenarioConfig::default(),
        };
        if let Some(d) = &self.distribution {
            cfg.distribution = parse_distribution(d)?;
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = self.$f.clone() { cfg.$f = v; } )* };
        }
        set!(
            seed,
            delta_ms,
            epoch_count,
            pi,
            timeout_ms,
            processing_delay_ms,
            jitter_ms,
            solution_enabled,
            jail_duration,
            vote_race
        );
        if let Some(p) = &self.cities_path {
            cfg.cities_path = Some(p.clone());
        }
        if let Some(p) = &self.pings_path {
            cfg.pings_path = Some(p.clone());
        }
        if let Some(dir) = data_dir {
            cfg.cities_path.get_or_insert_with(|| dir.join("cities.csv"));
            cfg.pings_path.get_or_insert_with(|| dir.join("pings.csv"));
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> geodec::Result<()> {
    let data_dir = cli.data_dir.as_ref();
    match cli.command {
        Command::Simulate { scenario, out_dir } => {
            let cfg = scenario.resolve(data_dir)?;
            let report = cmd_simulate(&cfg, &Dataset::for_config(&cfg)?, &out_dir)?;
            print!("{}", report.summary_table());
            eprintln!("wrote {}", out_dir.display());
        }
        Command::Sweep {
            scenario,
            spec,
            workers,
            out_dir,
        } => {
            let cfg = scenario.resolve(data_dir)?;
            let spec = SweepSpec::load(&spec)?;
            let result = cmd_sweep(&cfg, &spec, &Dataset::for_config(&cfg)?, workers, &out_dir)?;
            println!("{} runs, {} rows", result.points.len(), result.rows().len());
            eprintln!("wrote {}", out_dir.join("sweep.csv").display());
        }
        Command::Analyze { input, out_dir } => {
            print!("{}", cmd_analyze(&input, &out_dir)?.summary());
        }
        Command::Gdi { input, cities, out_dir } => {
            let cities = cities
                .or_else(|| data_dir.map(|d| d.join("cities.csv")))
                .unwrap_or_else(|| geodec::config::default_data_dir().join("cities.csv"));
            let report = cmd_gdi(&input, &load_cities(cities)?, &out_dir)?;
            println!(
                "blockchain GDI {:.1} km, minority {:?}, majority {}",
                report.blockchain_gdi,
                report.minority_cities,
                report.majority_city.as_deref().unwrap_or("-")
            );
        }
        Command::NetemExport { scenario, ip_map, out } => {
            let cfg = scenario.resolve(data_dir)?;
            let script = cmd_netem_export(&cfg, &Dataset::for_config(&cfg)?, &ip_map)?;
            match out {
                Some(path) => std::fs::write(&path, script)
                    .map_err(|e| geodec::Error::Config(format!("{}: {e}", path.display())))?,
                None => print!("{script}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
