//! Subcommand definitions and handlers.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use jtload::scenario::{parse_generator_params, parse_pattern, parse_scenario, parse_two_cell, serialize_pattern, serialize_scenario};
use jtload::twocell::{self, TwoCellInstance, BRUTE_FORCE_MAX_PAIRS};
use jtload::{
    best_signal_association, generate, jt_minmax, solve, FixedPointResult, GeneratorParams, JTPattern,
    NetworkScenario, OptimizerConfig, SolverConfig,
};

use crate::format::{sig9, Format, Table};
use crate::sweep::{gnuplot_script, run_sweep, SweepSpec};
use crate::CliError;

/// Objectives closer than this count as equal when comparing methods.
pub const AGREEMENT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(name = "jtloadsim", version, about = "Load coupling with joint transmission in HetNets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a hexagonal HetNet scenario document.
    Generate(GenerateArgs),
    /// Solve the load fixed point for one JT pattern.
    Solve(SolveArgs),
    /// Run JT-MinMax from the best-signal association.
    Optimize(OptimizeArgs),
    /// Symmetric two-cell analysis: greedy rule, exhaustive search or both.
    Twocell(TwocellArgs),
    /// Compare the baseline with JT-MinMax over a demand grid.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the main result here instead of stdout.
    #[arg(long, short, env = "JTLOADSIM_OUTPUT")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv, env = "JTLOADSIM_FORMAT")]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Bound on the max-norm step and on the estimated distance to the fixed point.
    #[arg(long, default_value_t = 1e-9, env = "JTLOADSIM_TOLERANCE")]
    pub tolerance: f64,
    #[arg(long = "max-iters", default_value_t = 10_000, env = "JTLOADSIM_MAX_ITERS")]
    pub max_iters: usize,
}

impl SolverArgs {
    pub fn config(&self) -> Result<SolverConfig, CliError> {
        let ceiling = SolverConfig::default().divergence_ceiling;
        Ok(SolverConfig::new(self.tolerance, self.max_iters, ceiling)?)
    }
}

#[derive(Debug, Clone, Args)]
pub struct OptimizerArgs {
    /// Sweeps over all candidate links.
    #[arg(long, default_value_t = 5, env = "JTLOADSIM_GAMMA")]
    pub gamma: usize,
    /// Iterations of each sufficient-condition test.
    #[arg(long, default_value_t = 20, env = "JTLOADSIM_TAU")]
    pub tau: usize,
    /// Most cells allowed to serve one UE.
    #[arg(long = "k-max", default_value_t = 2, env = "JTLOADSIM_K_MAX")]
    pub k_max: usize,
    #[command(flatten)]
    pub solver: SolverArgs,
}

impl OptimizerArgs {
    pub fn config(&self) -> Result<OptimizerConfig, CliError> {
        Ok(OptimizerConfig {
            sweeps: self.gamma,
            condition_iters: self.tau,
            max_serving: self.k_max,
            solver: self.solver.config()?,
            ..OptimizerConfig::default()
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    /// JSON file with generator parameters; flags below override it.
    #[arg(long, env = "JTLOADSIM_PARAMS")]
    pub params: Option<PathBuf>,
    #[arg(long, env = "JTLOADSIM_SEED")]
    pub seed: Option<u64>,
    #[arg(long, env = "JTLOADSIM_HEX_COUNT")]
    pub hex_count: Option<usize>,
    #[arg(long, env = "JTLOADSIM_SC_PER_HEX")]
    pub sc_per_hex: Option<usize>,
    #[arg(long, env = "JTLOADSIM_UE_PER_HEX")]
    pub ue_per_hex: Option<usize>,
    /// Per-UE demand in bits per second.
    #[arg(long, env = "JTLOADSIM_DEMAND")]
    pub demand: Option<f64>,
}

impl GeneratorArgs {
    pub fn params(&self) -> Result<GeneratorParams, CliError> {
        let mut p = match &self.params {
            Some(path) => parse_generator_params(&read_input(path)?)
                .with_context(|| format!("invalid generator parameters {}", path.display()))
                .map_err(CliError::Input)?,
            None => GeneratorParams::default(),
        };
        if let Some(v) = self.seed {
            p.seed = v;
        }
        if let Some(v) = self.hex_count {
            p.hex_count = v;
        }
        if let Some(v) = self.sc_per_hex {
            p.sc_per_hex = v;
        }
        if let Some(v) = self.ue_per_hex {
            p.ue_per_hex = v;
        }
        if let Some(v) = self.demand {
            p.ue_demand_bps = v;
        }
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Write the scenario here instead of stdout.
    #[arg(long, short, env = "JTLOADSIM_OUTPUT")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Scenario document.
    #[arg(long, env = "JTLOADSIM_SCENARIO")]
    pub scenario: PathBuf,
    /// Pattern document; best-signal association when absent.
    #[arg(long, env = "JTLOADSIM_PATTERN")]
    pub pattern: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[arg(long, env = "JTLOADSIM_SCENARIO")]
    pub scenario: PathBuf,
    /// Starting pattern; best-signal association when absent.
    #[arg(long, env = "JTLOADSIM_PATTERN")]
    pub pattern: Option<PathBuf>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Write the optimized pattern document here.
    #[arg(long)]
    pub pattern_output: Option<PathBuf>,
    /// Write the accepted-moves log here.
    #[arg(long)]
    pub moves_output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TwocellMode {
    Greedy,
    Brute,
    Both,
}

#[derive(Debug, Args)]
pub struct TwocellArgs {
    /// Two-cell instance document.
    #[arg(long, env = "JTLOADSIM_INSTANCE")]
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = TwocellMode::Both, env = "JTLOADSIM_MODE")]
    pub mode: TwocellMode,
    /// Also write the instance as a 2-cell scenario document.
    #[arg(long)]
    pub expand_output: Option<PathBuf>,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Scenario document; generated from the generator flags when absent.
    #[arg(long, env = "JTLOADSIM_SCENARIO")]
    pub scenario: Option<PathBuf>,
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long, default_value_t = 50_000.0, env = "JTLOADSIM_DEMAND_MIN")]
    pub demand_min: f64,
    #[arg(long, default_value_t = 500_000.0, env = "JTLOADSIM_DEMAND_MAX")]
    pub demand_max: f64,
    #[arg(long, default_value_t = 10, env = "JTLOADSIM_DEMAND_STEPS")]
    pub demand_steps: usize,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[command(flatten)]
    pub out: OutputArgs,
    /// Write the per-cell table at the max achievable demand here.
    #[arg(long)]
    pub cells_output: Option<PathBuf>,
    /// Write a gnuplot script plotting the sweep CSV here (needs --output).
    #[arg(long)]
    pub plot_script: Option<PathBuf>,
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(CliError::Input)
}

fn write_file(path: &Path, text: &[u8]) -> Result<(), CliError> {
    fs::write(path, text)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(CliError::Runtime)
}

/// Sends `body` to `path`, or stdout when there is none.
fn emit(path: Option<&Path>, body: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => write_file(p, body),
        None => io::stdout()
            .write_all(body)
            .context("cannot write to stdout")
            .map_err(CliError::Runtime),
    }
}

fn render(table: &Table, format: Format) -> Vec<u8> {
    let mut buf = Vec::new();
    table.write(&mut buf, format).expect("writing to memory cannot fail");
    buf
}

fn load_scenario(path: &Path) -> Result<NetworkScenario, CliError> {
    parse_scenario(&read_input(path)?)
        .with_context(|| format!("invalid scenario {}", path.display()))
        .map_err(CliError::Input)
}

fn load_pattern(path: Option<&Path>, scenario: &NetworkScenario) -> Result<JTPattern, CliError> {
    let Some(path) = path else {
        return Ok(best_signal_association(scenario));
    };
    let pattern = parse_pattern(&read_input(path)?)
        .with_context(|| format!("invalid pattern {}", path.display()))
        .map_err(CliError::Input)?;
    if pattern.num_cells() != scenario.num_cells() || pattern.num_ues() != scenario.num_ues() {
        return Err(CliError::Input(anyhow::anyhow!(
            "pattern {} is {}x{} but the scenario has {} cells and {} UEs",
            path.display(),
            pattern.num_cells(),
            pattern.num_ues(),
            scenario.num_cells(),
            scenario.num_ues()
        )));
    }
    Ok(pattern)
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a),
        Command::Solve(a) => cmd_solve(&a),
        Command::Optimize(a) => cmd_optimize(&a),
        Command::Twocell(a) => cmd_twocell(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    }
}

pub fn cmd_generate(a: &GenerateArgs) -> Result<(), CliError> {
    let scenario = generate(&a.generator.params()?)?;
    emit(a.output.as_deref(), serialize_scenario(&scenario).as_bytes())
}

fn load_table(scenario: &NetworkScenario, r: &FixedPointResult) -> Table {
    let mut t = Table::new(&["cell", "kind", "load", "max_load", "status", "iterations", "residual"]);
    for (i, c) in scenario.cells().iter().enumerate() {
        t.push(vec![
            (i + 1).to_string(),
            c.kind.as_str().into(),
            sig9(r.load[i]),
            sig9(r.max_load()),
            r.status.as_str().into(),
            r.iterations.to_string(),
            sig9(r.residual),
        ]);
    }
    t
}

pub fn cmd_solve(a: &SolveArgs) -> Result<(), CliError> {
    let scenario = load_scenario(&a.scenario)?;
    let pattern = load_pattern(a.pattern.as_deref(), &scenario)?;
    let r = solve(&scenario, &pattern, &a.solver.config()?)?;
    if !r.converged() {
        log::warn!("fixed point not found: {}", r.status.as_str());
    }
    let mut body = render(&load_table(&scenario, &r), a.out.format);
    if a.out.format == Format::Pretty {
        writeln!(body, "max load {} ({}, {} iterations)", sig9(r.max_load()), r.status.as_str(), r.iterations)
            .expect("in-memory write");
    }
    emit(a.out.output.as_deref(), &body)
}

pub fn cmd_optimize(a: &OptimizeArgs) -> Result<(), CliError> {
    let scenario = load_scenario(&a.scenario)?;
    let start = load_pattern(a.pattern.as_deref(), &scenario)?;
    let cfg = a.optimizer.config()?;
    cfg.validate(scenario.num_cells())?;
    let r = jt_minmax(&scenario, &start, &cfg)?;

    let mut loads = Table::new(&["cell", "kind", "initial_load", "final_load"]);
    for (i, c) in scenario.cells().iter().enumerate() {
        loads.push(vec![
            (i + 1).to_string(),
            c.kind.as_str().into(),
            sig9(r.initial.load[i]),
            sig9(r.load.load[i]),
        ]);
    }
    let mut moves = Table::new(&[
        "sweep",
        "cell",
        "ue",
        "condition_iteration",
        "max_load_before",
        "max_load_after",
        "max_increase",
    ]);
    for m in &r.accepted_moves {
        moves.push(vec![
            (m.sweep + 1).to_string(),
            (m.cell + 1).to_string(),
            (m.ue + 1).to_string(),
            m.condition_iteration.to_string(),
            sig9(m.max_load_before),
            sig9(m.max_load_after),
            sig9(m.max_increase),
        ]);
    }

    let mut body = render(&loads, a.out.format);
    if a.out.format == Format::Pretty {
        let trace: Vec<String> = r.trace.iter().map(|&v| sig9(v)).collect();
        let mut w = |s: String| body.extend_from_slice(s.as_bytes());
        w(format!(
            "max load {} -> {}, {} links added\n",
            sig9(r.initial.max_load()),
            sig9(r.max_load()),
            r.accepted_moves.len()
        ));
        w(format!("trace {}\n", trace.join(" ")));
        if a.moves_output.is_none() && !r.accepted_moves.is_empty() {
            body.extend(render(&moves, Format::Pretty));
        }
    }
    emit(a.out.output.as_deref(), &body)?;
    if let Some(p) = &a.pattern_output {
        write_file(p, serialize_pattern(&r.pattern).as_bytes())?;
    }
    if let Some(p) = &a.moves_output {
        write_file(p, &render(&moves, Format::Csv))?;
    }
    Ok(())
}

struct TwocellOutcome {
    method: &'static str,
    pattern: String,
    objective: f64,
    x: [f64; 2],
    status: &'static str,
}

pub fn cmd_twocell(a: &TwocellArgs) -> Result<(), CliError> {
    let text = read_input(&a.instance)?;
    let inst: TwoCellInstance = parse_two_cell(&text)
        .with_context(|| format!("invalid instance {}", a.instance.display()))
        .map_err(CliError::Input)?;
    let cfg = a.solver.config()?;
    if a.mode != TwocellMode::Greedy && inst.num_pairs() > BRUTE_FORCE_MAX_PAIRS {
        return Err(CliError::Input(anyhow::anyhow!(
            "exhaustive search supports at most {BRUTE_FORCE_MAX_PAIRS} pairs, instance has {}",
            inst.num_pairs()
        )));
    }
    if let Some(p) = &a.expand_output {
        write_file(p, serialize_scenario(&inst.expand()).as_bytes())?;
    }

    let mut outcomes = Vec::new();
    let mut gains = None;
    if a.mode != TwocellMode::Brute {
        let base = twocell::baseline(&inst, &cfg)?;
        gains = Some(twocell::gain_of_load(&inst, &base)?);
        let (pattern, r) = twocell::greedy_optimal(&inst, &cfg)?;
        outcomes.push(TwocellOutcome {
            method: "greedy",
            pattern: pattern.to_string(),
            objective: r.max_load(),
            x: [r.load[0], r.load[1]],
            status: r.status.as_str(),
        });
    }
    if a.mode != TwocellMode::Greedy {
        let best = twocell::brute_force_minmax(&inst, &cfg)?;
        let r = twocell::solve_expanded(&inst, &best.pattern.expand(), &cfg)?;
        outcomes.push(TwocellOutcome {
            method: "brute",
            pattern: best.pattern.to_string(),
            objective: best.objective,
            x: [r.load[0], r.load[1]],
            status: r.status.as_str(),
        });
    }
    let agreement = match outcomes.as_slice() {
        [g, b] => {
            let agree = g.status == "converged" && (g.objective - b.objective).abs() <= AGREEMENT_TOLERANCE;
            if agree { "AGREE" } else { "DISAGREE" }
        }
        _ => "",
    };

    let mut t = Table::new(&["method", "pattern", "objective", "x1", "x2", "status", "agreement"]);
    for o in &outcomes {
        t.push(vec![
            o.method.into(),
            o.pattern.clone(),
            sig9(o.objective),
            sig9(o.x[0]),
            sig9(o.x[1]),
            o.status.into(),
            agreement.into(),
        ]);
    }
    let mut body = render(&t, a.out.format);
    if a.out.format == Format::Pretty {
        if let Some(g) = gains {
            let g: Vec<String> = g[..inst.num_pairs()].iter().map(|&v| sig9(v)).collect();
            body.extend_from_slice(format!("gain of load {}\n", g.join(" ")).as_bytes());
        }
        if !agreement.is_empty() {
            body.extend_from_slice(format!("{agreement}\n").as_bytes());
        }
    }
    emit(a.out.output.as_deref(), &body)
}

pub fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let scenario = match &a.scenario {
        Some(p) => load_scenario(p)?,
        None => generate(&a.generator.params()?)?,
    };
    let spec = SweepSpec {
        demand_min: a.demand_min,
        demand_max: a.demand_max,
        steps: a.demand_steps,
        optimizer: a.optimizer.config()?,
    };
    let report = run_sweep(&scenario, &spec)?;

    let headline = match report.max_achievable_row() {
        Some(r) => format!(
            "max achievable demand (largest point with a converged baseline and all loads <= 1): {} bps, max-load reduction {} %, spread reduction {} %",
            sig9(r.demand),
            crate::format::opt9(r.reduction_percent),
            crate::format::opt9(r.spread_reduction_percent)
        ),
        None => "max achievable demand: none on this grid".into(),
    };
    let average = format!(
        "mean max-load reduction over feasible grid points: {} %",
        crate::format::opt9(report.mean_reduction_percent())
    );

    let mut body = render(&report.table(), a.out.format);
    if a.out.format == Format::Pretty {
        body.extend_from_slice(format!("{headline}\n{average}\n").as_bytes());
        if a.cells_output.is_none() && !report.cells.is_empty() {
            body.extend(render(&report.cell_table(), Format::Pretty));
        }
    } else {
        log::info!("{headline}");
        log::info!("{average}");
    }
    emit(a.out.output.as_deref(), &body)?;
    if let Some(p) = &a.cells_output {
        write_file(p, &render(&report.cell_table(), a.out.format))?;
    }
    if let Some(p) = &a.plot_script {
        let Some(csv) = &a.out.output else {
            return Err(CliError::Input(anyhow::anyhow!("--plot-script needs --output")));
        };
        write_file(p, gnuplot_script(&csv.display().to_string()).as_bytes())?;
    }
    Ok(())
}
