use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use prc_core::error::Error;
use prc_core::harness::{backend_for, run_matrix, BenchConfig, BenchmarkMatrix, CellStatus};
use prc_core::metrics::delta_matrix;
use prc_core::optimizer::OptimizerConfig;
use prc_core::qasm::{emit_qasm, gate_count, qasm_file_name};
use prc_core::report::{
    delta_csv, heatmap_csv, histogram_csv, render_delta_heatmap, render_histogram, render_matrix_heatmap, with_target,
    Style,
};
use prc_core::suite::{generate_suite, write_suite, GenerateConfig, Suite, TargetMode};

/// Environment variable naming the default output directory.
const OUT_DIR_ENV: &str = "PRC_OUT_DIR";

#[derive(Parser)]
#[command(name = "prc", version, about = "Peaked random circuit benchmark")]
struct Cli {
    /// Worker threads (defaults to all cores). Output does not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, optimize and save a suite of peaked circuits.
    Generate(GenerateArgs),
    /// Run a benchmark matrix over a suite.
    Bench(BenchArgs),
    /// Render SVG figures with CSV companions.
    Report(ReportArgs),
    /// Export suite circuits as OpenQASM 2.0.
    ExportQasm(ExportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Qubit counts, e.g. `2..6` (inclusive), `4`, or `2,4,8`.
    #[arg(long, value_parser = parse_grid)]
    qubits: Grid,
    /// Depths, same syntax as --qubits; every depth must be at least 2.
    #[arg(long, value_parser = parse_grid)]
    depths: Grid,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory (default: $PRC_OUT_DIR or ./suite).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TargetArg::Random)]
    target: TargetArg,
    #[arg(long)]
    stage1_iters: Option<usize>,
    #[arg(long)]
    stage2_iters: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    Zero,
    Random,
}

#[derive(Args)]
struct BenchArgs {
    /// Suite manifest written by `generate`.
    #[arg(long)]
    suite: PathBuf,
    /// Benchmark configuration (TOML or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Matrix JSON path; a CSV is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Heatmap,
    Delta,
    Histogram,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    /// Matrix JSON files; delta takes exactly two and plots first minus second.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// SVG path; the CSV companion shares its stem.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Cell for histogram mode, as `n,d`.
    #[arg(long, value_parser = parse_cell)]
    cell: Option<(usize, usize)>,
    /// Repetition for histogram mode.
    #[arg(long, default_value_t = 0)]
    rep: usize,
    #[arg(long)]
    title: Option<String>,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    suite: PathBuf,
    /// Output directory (default: $PRC_OUT_DIR or ./qasm).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure with its exit code: 1 runtime, 2 usage or configuration.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config { .. } | Error::InvalidArgument(_) | Error::InvalidDimension(_) | Error::Capacity { .. } => 2,
            _ => 1,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Axis values given on the command line.
#[derive(Clone)]
struct Grid(Vec<usize>);

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.trim_start_matches('='))?);
        if a > b {
            return Err(format!("empty range {s}"));
        }
        return Ok(Grid((a..=b).collect()));
    }
    s.split(',').map(num).collect::<std::result::Result<_, _>>().map(Grid)
}

fn parse_cell(s: &str) -> std::result::Result<(usize, usize), String> {
    let (n, d) = s.split_once(',').ok_or("expected n,d")?;
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| e.to_string());
    Ok((num(n)?, num(d)?))
}

fn default_dir(name: &str) -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(name))
}

fn write(path: &Path, text: &str) -> CmdResult {
    if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Failure {
            code: 1,
            message: format!("{}: {e}", dir.display()),
        })?;
    }
    std::fs::write(path, text).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", path.display()),
    })
}

fn generate(args: GenerateArgs) -> CmdResult {
    let (qubits, depths) = (args.qubits.0, args.depths.0);
    if let Some(d) = depths.iter().find(|&&d| d < 2) {
        return Err(Failure::usage(format!("depth {d} is below the minimum of 2")));
    }
    if let Some(n) = qubits.iter().find(|&&n| n < 2) {
        return Err(Failure::usage(format!("qubit count {n} is below the minimum of 2")));
    }
    let mut optimizer = OptimizerConfig::default();
    if let Some(it) = args.stage1_iters {
        optimizer.stage1_iters = it;
    }
    if let Some(it) = args.stage2_iters {
        optimizer.stage2_iters = it;
    }
    let config = GenerateConfig {
        qubits,
        depths,
        seed: args.seed,
        target: match args.target {
            TargetArg::Zero => TargetMode::Zero,
            TargetArg::Random => TargetMode::Random,
        },
        optimizer,
    };
    config.validate()?;
    let out = args.out.unwrap_or_else(|| default_dir("suite"));
    let cells = generate_suite(&config)?;
    let manifest = write_suite(&out, &config, &cells)?;
    let worst = manifest.entries.iter().map(|e| e.p_peak).fold(f64::INFINITY, f64::min);
    let mismatches = manifest.entries.iter().filter(|e| e.target_mismatch).count();
    println!(
        "wrote {} circuits to {} (min P_peak {worst:.4}, {mismatches} target mismatches)",
        manifest.entries.len(),
        out.display()
    );
    Ok(())
}

fn bench(args: BenchArgs) -> CmdResult {
    let config = BenchConfig::from_path(&args.config).map_err(|e| Failure::usage(e.to_string()))?;
    config.validate().map_err(|e| Failure::usage(format!("{}: {e}", args.config.display())))?;
    let suite = Suite::load(&args.suite)?;
    let backend = backend_for(&config);
    let matrix = run_matrix(&suite, &config, backend.as_ref())?;
    let out = args
        .out
        .or_else(|| config.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| default_dir(".").join("matrix.json"));
    write(&out, &matrix.to_json()?)?;
    write(&out.with_extension("csv"), &matrix.to_csv()?)?;
    for n in matrix.qubits() {
        let row: Vec<_> = matrix.cells.iter().filter(|c| c.n == n).collect();
        let count = |s: CellStatus| row.iter().filter(|c| c.status == s).count();
        let last = row
            .iter()
            .filter(|c| c.status == CellStatus::Identified)
            .map(|c| c.d)
            .max()
            .map_or("-".to_string(), |d| d.to_string());
        println!(
            "n={n:>2}: {} identified, {} non-identified, {} skipped, deepest identified d={last}",
            count(CellStatus::Identified),
            count(CellStatus::NonIdentified),
            count(CellStatus::Skipped)
        );
    }
    println!("matrix written to {}", out.display());
    Ok(())
}

fn stem(p: &Path) -> String {
    p.file_stem().map_or("matrix".into(), |s| s.to_string_lossy().into_owned())
}

fn report(args: ReportArgs) -> CmdResult {
    let style = Style {
        title: args.title.clone(),
        ..Style::default()
    };
    let first = &args.inputs[0];
    let sibling = |name: String| first.with_file_name(name);
    let (svg, csv, default_out) = match args.mode {
        Mode::Heatmap => {
            if args.inputs.len() != 1 {
                return Err(Failure::usage("heatmap mode takes exactly one matrix"));
            }
            let m = BenchmarkMatrix::load(first)?;
            (
                render_matrix_heatmap(&m, &style)?,
                heatmap_csv(&m)?,
                sibling(format!("{}_heatmap.svg", stem(first))),
            )
        }
        Mode::Delta => {
            let [a, b] = args.inputs.as_slice() else {
                return Err(Failure::usage(format!(
                    "delta mode takes exactly two matrices, got {}",
                    args.inputs.len()
                )));
            };
            let grid = delta_matrix(&BenchmarkMatrix::load(a)?, &BenchmarkMatrix::load(b)?)?;
            (
                render_delta_heatmap(&grid, &style)?,
                delta_csv(&grid)?,
                sibling(format!("delta_{}_minus_{}.svg", stem(a), stem(b))),
            )
        }
        Mode::Histogram => {
            if args.inputs.len() != 1 {
                return Err(Failure::usage("histogram mode takes exactly one matrix"));
            }
            let (n, d) = args.cell.ok_or_else(|| Failure::usage("histogram mode needs --cell n,d"))?;
            let m = BenchmarkMatrix::load(first)?;
            let cell = m.get(n, d).ok_or_else(|| Failure::usage(format!("no cell (n={n}, d={d}) in matrix")))?;
            let run = cell.reps.get(args.rep).ok_or_else(|| {
                Failure::usage(format!(
                    "cell (n={n}, d={d}) has {} recorded reps; --rep {} is out of range",
                    cell.reps.len(),
                    args.rep
                ))
            })?;
            let target = cell
                .target
                .ok_or_else(|| Failure::usage(format!("cell (n={n}, d={d}) has no recorded target")))?;
            let entries = with_target(run.top_k.clone(), &target, run.metrics.p_hat_peak);
            (
                render_histogram(&entries, &target)?,
                histogram_csv(&entries, &target)?,
                sibling(format!("{}_hist_n{n}_d{d}_r{}.svg", stem(first), args.rep)),
            )
        }
    };
    let out = args.out.unwrap_or(default_out);
    write(&out, &svg)?;
    write(&out.with_extension("csv"), &csv)?;
    println!("wrote {}", out.display());
    Ok(())
}

fn export_qasm(args: ExportArgs) -> CmdResult {
    let suite = Suite::load(&args.suite)?;
    let out = args.out.unwrap_or_else(|| default_dir("qasm"));
    let mut table = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure {
        code: 1,
        message: e.to_string(),
    };
    table
        .write_record(["n", "d", "file", "two_qubit", "single_qubit", "generic_placements"])
        .map_err(csv_err)?;
    std::fs::create_dir_all(&out).map_err(|e| Failure {
        code: 1,
        message: format!("{}: {e}", out.display()),
    })?;
    for entry in suite.iter() {
        let c = &entry.circuit;
        let name = qasm_file_name(c);
        write(&out.join(&name), &emit_qasm(c))?;
        let count = gate_count(c);
        table
            .write_record([
                c.n().to_string(),
                c.d().to_string(),
                name,
                count.two_qubit.to_string(),
                count.single_qubit.to_string(),
                c.generic_gate_count().to_string(),
            ])
            .map_err(csv_err)?;
    }
    let bytes = table.into_inner().map_err(|e| Failure {
        code: 1,
        message: e.to_string(),
    })?;
    write(&out.join("gate_counts.csv"), &String::from_utf8_lossy(&bytes))?;
    println!("exported {} circuits to {}", suite.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = move || match cli.command {
        Command::Generate(a) => generate(a),
        Command::Bench(a) => bench(a),
        Command::Report(a) => report(a),
        Command::ExportQasm(a) => export_qasm(a),
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cli.jobs {
        if j == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(j);
    }
    let result = match pool.build() {
        Ok(pool) => pool.install(run),
        Err(e) => Err(Failure {
            code: 1,
            message: e.to_string(),
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_syntax() {
        assert_eq!(parse_grid("2..6").unwrap().0, vec![2, 3, 4, 5, 6]);
        assert_eq!(parse_grid("2..=4").unwrap().0, vec![2, 3, 4]);
        assert_eq!(parse_grid("5").unwrap().0, vec![5]);
        assert_eq!(parse_grid("2, 4,8").unwrap().0, vec![2, 4, 8]);
        assert!(parse_grid("6..2").is_err());
        assert!(parse_grid("a..3").is_err());
        assert_eq!(parse_cell("4,10").unwrap(), (4, 10));
        assert!(parse_cell("4").is_err());
    }

    #[test]
    fn config_errors_map_to_usage() {
        let f = Failure::from(Error::InvalidArgument("x".into()));
        assert_eq!(f.code, 2);
        assert_eq!(Failure::from(Error::MissingCell { n: 2, d: 3 }).code, 1);
    }
}
