use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use covex::harness::{
    emit_csv_to, experiment_group, fit_slope, identity_suite, run_convergence, ExperimentGroup,
    ExperimentSeries, ExperimentSpec, SlopeBand,
};
use covex::smoothfields::builtins::{builtin, BUILTIN_NAMES};

#[derive(Parser)]
#[command(
    name = "covex",
    about = "Discrete bundle-valued exterior calculus: convergence experiments and exact-identity checks"
)]
struct Cli {
    /// Cap on worker threads (also: COVEX_THREADS)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence experiment and write its error table as CSV
    Converge(ConvergeArgs),
    /// Run the randomized exact-identity suite
    Identities(IdentitiesArgs),
    /// Print a builtin field's registry entry
    DumpBuiltin { name: String },
}

#[derive(Args)]
struct ConvergeArgs {
    /// Registry name or path to an experiment-spec JSON file
    #[arg(long)]
    experiment: String,
    /// Override the number of refinement levels
    #[arg(long)]
    levels: Option<usize>,
    /// Override the per-level scale factor
    #[arg(long)]
    factor: Option<f64>,
    /// Override the path-ordered product subinterval count
    #[arg(long)]
    path_steps: Option<usize>,
    /// Output CSV path
    #[arg(long, default_value = "convergence.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct IdentitiesArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

const EXIT_OK: u8 = 0;
const EXIT_ASSERTION: u8 = 1;
const EXIT_USAGE: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli
        .threads
        .or_else(|| std::env::var("COVEX_THREADS").ok()?.parse().ok());
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let code = match cli.command {
        Command::Converge(args) => converge(args),
        Command::Identities(args) => identities(args),
        Command::DumpBuiltin { name } => dump_builtin(&name),
    };
    ExitCode::from(code)
}

fn load_group(name_or_path: &str) -> Result<ExperimentGroup, String> {
    if name_or_path.ends_with(".json") || std::path::Path::new(name_or_path).exists() {
        let text = std::fs::read_to_string(name_or_path)
            .map_err(|e| format!("cannot read '{name_or_path}': {e}"))?;
        let spec: ExperimentSpec =
            serde_json::from_str(&text).map_err(|e| format!("bad experiment spec: {e}"))?;
        return Ok(ExperimentGroup {
            name: "custom",
            series: vec![ExperimentSeries {
                label: "custom",
                spec,
                band: SlopeBand::Within(f64::NEG_INFINITY, f64::INFINITY),
            }],
        });
    }
    experiment_group(name_or_path).map_err(|e| format!("{e}"))
}

fn converge(args: ConvergeArgs) -> u8 {
    let mut group = match load_group(&args.experiment) {
        Ok(g) => g,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    for series in &mut group.series {
        if let Some(levels) = args.levels {
            series.spec.levels = levels;
        }
        if let Some(factor) = args.factor {
            series.spec.factor = factor;
        }
        if let Some(steps) = args.path_steps {
            series.spec.path_steps = steps;
        }
    }
    let file = match File::create(&args.out) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: cannot create '{}': {e}", args.out.display());
            return EXIT_USAGE;
        }
    };
    let mut out = BufWriter::new(file);
    let mut all_in_band = true;
    for series in &group.series {
        let rows = match run_convergence(&series.spec) {
            Ok(rows) => rows,
            Err(e) => {
                eprintln!("error: experiment '{}' failed: {e}", series.label);
                return EXIT_USAGE;
            }
        };
        let fit = fit_slope(&rows).ok();
        let spec = &series.spec;
        let header = format!(
            "# experiment={} series={} connection={} form={} operator={:?} gauge={:?}\n\
             # shift=({},{},{}) euler_deg=({},{},{}) rotation=intrinsic-XYZ\n\
             # levels={} factor={} base_scale={} path_steps={}",
            spec.name,
            series.label,
            spec.connection,
            if spec.form.is_empty() { "-" } else { &spec.form },
            spec.operator,
            spec.gauge,
            spec.shift[0],
            spec.shift[1],
            spec.shift[2],
            spec.euler_deg[0],
            spec.euler_deg[1],
            spec.euler_deg[2],
            spec.levels,
            spec.factor,
            spec.base_scale,
            spec.path_steps,
        );
        if writeln!(out, "{header}").is_err() {
            eprintln!("error: write failed");
            return EXIT_USAGE;
        }
        if let Err(e) = emit_csv_to(&rows, fit.as_ref(), &mut out) {
            eprintln!("error: write failed: {e}");
            return EXIT_USAGE;
        }
        match &fit {
            Some(fit) => {
                let ok = series.band.contains(fit.slope);
                all_in_band &= ok;
                println!(
                    "{:<22} {:<18} slope {:>7.3}  r2 {:>6.4}  band {}  {}",
                    group.name,
                    series.label,
                    fit.slope,
                    fit.r_squared,
                    series.band,
                    if ok { "ok" } else { "OUT OF BAND" }
                );
            }
            None => {
                // all rows at the rounding floor: flat error, counts as slope 0
                let ok = series.band.contains(0.0);
                all_in_band &= ok;
                println!(
                    "{:<22} {:<18} errors at rounding floor; band {}  {}",
                    group.name,
                    series.label,
                    series.band,
                    if ok { "ok" } else { "OUT OF BAND" }
                );
            }
        }
    }
    if out.flush().is_err() {
        return EXIT_USAGE;
    }
    println!("wrote {}", args.out.display());
    if all_in_band {
        EXIT_OK
    } else {
        EXIT_ASSERTION
    }
}

fn identities(args: IdentitiesArgs) -> u8 {
    match identity_suite(args.seed, args.trials) {
        Ok(report) => {
            print!("{}", report.summary());
            if report.passed() {
                println!("all identities within tolerance");
                EXIT_OK
            } else {
                EXIT_ASSERTION
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

fn dump_builtin(name: &str) -> u8 {
    match builtin(name) {
        Ok(field) => {
            let description = BUILTIN_NAMES
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, d)| *d)
                .unwrap_or("");
            println!(
                "{{\"name\":\"{}\",\"kind\":\"{}\",\"degree\":{},\"rank\":{},\"description\":\"{}\"}}",
                name,
                field.kind(),
                field
                    .degree()
                    .map(|d| d.to_string())
                    .unwrap_or_else(|| "null".into()),
                field.rank(),
                description
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
