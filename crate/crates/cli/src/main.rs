//! Command-line front end: run experiments, export models, verify external
//! solutions and emit figure data.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use greensplit::exact::{build_milp, evaluate_objective, export_lp_file, read_solution_values, solution_from_values, solution_values};
use greensplit::harness::{
    day_scenario, run_scenario, write_figure, write_report, emit_figure_data, FigureId, MethodRegistry, RunOptions,
    ScenarioConfig, TrafficLevel,
};
use greensplit::heuristic::run_heuristic;
use greensplit::validate::validate_solution;

#[derive(Parser)]
#[command(name = "greensplit", version, about = "Green-aware function split placement and dispatch")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML scenario configuration; built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured root seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DaySelect {
    /// City of the scenario; the first configured city by default.
    #[arg(long)]
    city: Option<String>,
    /// Traffic level (low, medium, high); the first configured level by default.
    #[arg(long)]
    level: Option<String>,
    /// Day of year; the first configured day by default.
    #[arg(long)]
    day: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured method over the configured grid and days.
    Run {
        /// Also write the traffic traces and solar series for replay.
        #[arg(long)]
        write_inputs: bool,
        /// Also write all figure CSVs.
        #[arg(long)]
        figures: bool,
    },
    /// Write the MILP of one day as an LP file.
    ExportLp {
        #[command(flatten)]
        select: DaySelect,
        /// Also write the heuristic's solution as `name=value` lines.
        #[arg(long)]
        with_heuristic: bool,
    },
    /// Check a `name=value` solution file against one day's model.
    Verify {
        solution: PathBuf,
        #[command(flatten)]
        select: DaySelect,
    },
    /// Run the configuration and write one figure's CSV.
    Emit { figure: String },
}

fn load_config(common: &Common) -> Result<ScenarioConfig> {
    let mut cfg = match &common.config {
        Some(path) => ScenarioConfig::load(path).with_context(|| format!("loading {}", path.display()))?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn parse_level(s: &str) -> Result<TrafficLevel> {
    TrafficLevel::ALL
        .into_iter()
        .find(|l| l.name() == s)
        .with_context(|| format!("unknown traffic level {s:?}"))
}

fn select_day(cfg: &ScenarioConfig, sel: &DaySelect) -> Result<(String, TrafficLevel, usize)> {
    let city = sel.city.clone().unwrap_or_else(|| cfg.cities[0].clone());
    let level = match &sel.level {
        Some(s) => parse_level(s)?,
        None => cfg.traffic_levels[0],
    };
    Ok((city, level, sel.day.unwrap_or(cfg.first_day)))
}

fn out_dir(common: &Common) -> PathBuf {
    common.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn cmd_run(common: &Common, write_inputs: bool, figures: bool) -> Result<bool> {
    let cfg = load_config(common)?;
    let dir = out_dir(common);
    let opts = RunOptions {
        out_dir: Some(dir.clone()),
        write_inputs,
    };
    let report = run_scenario(&cfg, &MethodRegistry::standard(), &opts)?;
    write_report(&report, &dir)?;
    for (key, cell) in &report.cells {
        for (method, total) in &cell.totals {
            println!("{} {} {method}: opex {total:.4}", key.city, key.level);
        }
    }
    for path in &report.exports {
        println!("exported {}", path.display());
    }
    if figures {
        for fig in FigureId::ALL {
            println!("wrote {}", write_figure(&report, fig, &dir)?.display());
        }
    }
    let problems = report.violations();
    for (key, day, method, msg) in &problems {
        eprintln!("INVALID {} {} day {day} {method}: {msg}", key.city, key.level);
    }
    Ok(problems.is_empty())
}

fn cmd_export(common: &Common, sel: &DaySelect, with_heuristic: bool) -> Result<bool> {
    let cfg = load_config(common)?;
    let (city, level, day) = select_day(&cfg, sel)?;
    let scenario = day_scenario(&cfg, &city, level, day)?;
    let model = build_milp(&scenario)?;
    let dir = out_dir(common);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(format!("model_{city}_{level}_d{day}.lp"));
    export_lp_file(&model, &path)?;
    println!(
        "wrote {} ({} binary, {} continuous variables, {} rows)",
        path.display(),
        model.binary_count(),
        model.continuous_count(),
        model.rows.len()
    );
    if with_heuristic {
        let sol = run_heuristic(&scenario)?;
        let values = solution_values(&model, &sol)?;
        let text: String = values.iter().map(|(k, v)| format!("{k}={v}\n")).collect();
        let sol_path = dir.join(format!("heuristic_{city}_{level}_d{day}.sol"));
        std::fs::write(&sol_path, text).with_context(|| format!("writing {}", sol_path.display()))?;
        println!("wrote {} (opex {:.6})", sol_path.display(), sol.opex);
    }
    Ok(true)
}

fn cmd_verify(common: &Common, solution: &Path, sel: &DaySelect) -> Result<bool> {
    let cfg = load_config(common)?;
    let (city, level, day) = select_day(&cfg, sel)?;
    let scenario = day_scenario(&cfg, &city, level, day)?;
    let model = build_milp(&scenario)?;
    let file = File::open(solution).with_context(|| format!("opening {}", solution.display()))?;
    let values = read_solution_values(BufReader::new(file))?;
    let sol = solution_from_values(&scenario, &model, &values)?;
    let violations = validate_solution(&scenario, &sol);
    let eval = evaluate_objective(&model, &sol)?;
    for v in &violations {
        println!("violation: {v}");
    }
    for r in &eval.residuals {
        println!("model residual: {} lhs {} rhs {} excess {}", r.name, r.lhs, r.rhs, r.excess);
    }
    let agree = (eval.objective - sol.opex).abs() <= 1e-9 * sol.opex.abs().max(1.0);
    if !agree {
        println!("objective mismatch: model {} vs opex {}", eval.objective, sol.opex);
    }
    let ok = violations.is_empty() && eval.is_feasible() && agree;
    println!("opex {:.6} {}", sol.opex, if ok { "VALID" } else { "INVALID" });
    Ok(ok)
}

fn cmd_emit(common: &Common, figure: &str) -> Result<bool> {
    let fig: FigureId = figure.parse()?;
    let cfg = load_config(common)?;
    let opts = RunOptions {
        out_dir: common.out.clone(),
        write_inputs: false,
    };
    let report = run_scenario(&cfg, &MethodRegistry::standard(), &opts)?;
    match &common.out {
        Some(dir) => println!("wrote {}", write_figure(&report, fig, dir)?.display()),
        None => print!("{}", emit_figure_data(&report, fig)?),
    }
    Ok(report.all_valid())
}

fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Run { write_inputs, figures } => cmd_run(&cli.common, *write_inputs, *figures),
        Command::ExportLp { select, with_heuristic } => cmd_export(&cli.common, select, *with_heuristic),
        Command::Verify { solution, select } => cmd_verify(&cli.common, solution, select),
        Command::Emit { figure } => cmd_emit(&cli.common, figure),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
