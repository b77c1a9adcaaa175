//! `stpack` command-line driver: instance generation, solving, validation and
//! benchmark sweeps.
//!
//! Exit codes: 0 when a feasible solution was produced (or the checked
//! solution is feasible), 2 when none was, 1 on usage or IO errors.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use stpack::heuristics::{greedy_solve, CommOrder, HeuristicConfig, PruneMode, Scheme};
use stpack::instance::{
    gen_complete, gen_grid, gen_regular, parse_instance, serialize_instance, Formalism, GridTerminals, GridWeights,
    Instance, LayerType, Variant, Weighting,
};
use stpack::kernel::{KernelKind, DEFAULT_DEGREE_CAP, DEFAULT_ENUM_CAP};
use stpack::solver::{
    energy, gap, parse_solution, run, serialize_solution, validate, Energy, RunReport, Schedule, Solution,
    SolverConfig,
};
use stpack::Error;

const GAMMA0_COMPLETE: f64 = 1e-5;
const GAMMA0_REGULAR: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "stpack", version, about = "Steiner tree packing by Max-Sum message passing")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a seeded random instance.
    Gen(GenArgs),
    /// Solve one instance file.
    Solve(SolveArgs),
    /// Sweep generated instances and write a CSV table.
    Bench(BenchArgs),
    /// Check a solution file against an instance.
    Validate(ValidateArgs),
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::from_name(s).ok_or_else(|| format!("unknown variant `{s}` (vdstp, edstp)"))
}

fn parse_formalism(s: &str) -> Result<Formalism, String> {
    Formalism::from_name(s).ok_or_else(|| format!("unknown formalism `{s}` (branching, flat)"))
}

fn parse_kernel(s: &str) -> Result<KernelKind, String> {
    KernelKind::from_name(s).ok_or_else(|| format!("unknown kernel `{s}` (vdstp, neighocc, matching)"))
}

fn parse_schedule(s: &str) -> Result<Schedule, String> {
    Schedule::from_name(s).ok_or_else(|| format!("unknown schedule `{s}` (sequential, synchronous)"))
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    Scheme::from_name(s).ok_or_else(|| format!("unknown heuristic `{s}` (spt, mst)"))
}

fn parse_prune(s: &str) -> Result<PruneMode, String> {
    PruneMode::from_name(s).ok_or_else(|| format!("unknown prune mode `{s}` (leaves, prize, keep)"))
}

fn parse_weighting(s: &str) -> Result<Weighting, String> {
    match s {
        "uniform" => Ok(Weighting::Uniform),
        "correlated" => Ok(Weighting::Correlated),
        _ => Err(format!("unknown weighting `{s}` (uniform, correlated)")),
    }
}

fn parse_layer(s: &str) -> Result<LayerType, String> {
    match s {
        "aligned" => Ok(LayerType::MultiAligned),
        "crossed" => Ok(LayerType::MultiCrossed),
        _ => Err(format!("unknown layer type `{s}` (aligned, crossed)")),
    }
}

/// Options shared by every command that runs the solver.
#[derive(Args, Clone)]
struct SolverFlags {
    #[arg(long, value_parser = parse_kernel)]
    kernel: Option<KernelKind>,
    /// Depth bound; defaults to the instance file's bound or the automatic choice.
    #[arg(long)]
    depth: Option<usize>,
    /// Reinforcement factor; defaults to 1e-5 on complete graphs and 1e-4 otherwise.
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    #[arg(long, default_value_t = 20)]
    conv_window: usize,
    #[arg(long, env = "STPACK_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    noise_eps: f64,
    #[arg(long, value_parser = parse_schedule, default_value = "sequential")]
    schedule: Schedule,
    /// Restart the reinforcement clock every this many sweeps.
    #[arg(long)]
    reinforcement_reset: Option<usize>,
    /// Heuristics run on the Max-Sum state, e.g. `spt,mst`.
    #[arg(long, value_parser = parse_scheme, value_delimiter = ',')]
    heuristics: Vec<Scheme>,
    /// Communication order for heuristics and greedy: `natural`, `shuffled` or a 1-based list like `3,1,2`.
    #[arg(long, default_value = "natural")]
    order: String,
    #[arg(long, value_parser = parse_prune, default_value = "leaves")]
    prune: PruneMode,
    #[arg(long, default_value_t = 1)]
    heuristic_every: usize,
    #[arg(long, default_value_t = DEFAULT_DEGREE_CAP)]
    degree_cap: usize,
    #[arg(long, default_value_t = DEFAULT_ENUM_CAP)]
    enum_cap: usize,
}

impl SolverFlags {
    fn order(&self) -> Result<CommOrder, Error> {
        match self.order.as_str() {
            "natural" => Ok(CommOrder::Natural),
            "shuffled" => Ok(CommOrder::Shuffled),
            list => list
                .split(',')
                .map(|t| match t.trim().parse::<usize>() {
                    Ok(k) if k >= 1 => Ok(k - 1),
                    _ => Err(Error::Argument(format!("bad communication order `{list}`"))),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(CommOrder::Fixed),
        }
    }

    fn config(&self, gamma0: f64) -> Result<SolverConfig, Error> {
        let heuristics = if self.heuristics.is_empty() {
            None
        } else {
            Some(HeuristicConfig {
                schemes: self.heuristics.clone(),
                order: self.order()?,
                prune: self.prune,
                every: self.heuristic_every,
            })
        };
        Ok(SolverConfig {
            kernel: self.kernel,
            depth: self.depth,
            gamma0: self.gamma0.unwrap_or(gamma0),
            max_iters: self.max_iters,
            conv_window: self.conv_window,
            seed: self.seed,
            noise_eps: self.noise_eps,
            schedule: self.schedule,
            heuristics,
            reinforcement_reset: self.reinforcement_reset,
            degree_cap: self.degree_cap,
            enum_cap: self.enum_cap,
        })
    }

    /// Concrete 0-based order for greedy runs.
    fn greedy_order(&self, m: usize) -> Result<Vec<usize>, Error> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let order = self.order()?.resolve(m, &mut rng);
        let mut seen = vec![false; m];
        for &k in &order {
            if k >= m || std::mem::replace(&mut seen[k], true) {
                return Err(Error::Argument(format!("communication order must be a permutation of 1..={m}")));
            }
        }
        if order.len() != m {
            return Err(Error::Argument(format!("communication order must list all {m} communications")));
        }
        Ok(order)
    }
}

/// Rejects flag combinations no kernel can serve before any work starts.
fn check_flags(kernel: Option<KernelKind>, formalism: Option<Formalism>) -> Result<(), Error> {
    if kernel == Some(KernelKind::Matching) && formalism == Some(Formalism::Flat) {
        return Err(Error::Argument("--formalism flat cannot be combined with --kernel matching".into()));
    }
    Ok(())
}

#[derive(Args)]
struct InstanceFlags {
    #[arg(long, value_parser = parse_variant, global = true)]
    variant: Option<Variant>,
    #[arg(long, value_parser = parse_formalism, global = true)]
    formalism: Option<Formalism>,
}

impl InstanceFlags {
    fn apply(&self, mut inst: Instance) -> Instance {
        if let Some(v) = self.variant {
            inst = inst.with_variant(v);
        }
        if let Some(f) = self.formalism {
            inst = inst.with_formalism(f);
        }
        inst
    }
}

#[derive(Args)]
struct GenArgs {
    #[command(subcommand)]
    kind: GenKind,
    #[command(flatten)]
    inst: InstanceFlags,
    /// Depth bound written into the file.
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, env = "STPACK_SEED", default_value_t = 0, global = true)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenKind {
    /// Complete graph with random weights.
    Complete {
        #[arg(short, long)]
        n: usize,
        #[arg(short, long, default_value_t = 3)]
        m: usize,
        #[arg(short, long)]
        t: usize,
        #[arg(long, value_parser = parse_weighting, default_value = "uniform")]
        weighting: Weighting,
    },
    /// Random regular graph with unit weights.
    Regular {
        #[arg(short, long)]
        n: usize,
        #[arg(short, long)]
        degree: usize,
        #[arg(short, long, default_value_t = 3)]
        m: usize,
        #[arg(short, long)]
        t: usize,
    },
    /// Layered 3D grid with random terminals.
    Grid {
        #[arg(long)]
        nx: usize,
        #[arg(long)]
        ny: usize,
        #[arg(long, default_value_t = 2)]
        nz: usize,
        #[arg(long, value_parser = parse_layer, default_value = "aligned")]
        layer: LayerType,
        #[arg(short, long, default_value_t = 2)]
        m: usize,
        /// Terminals per communication, root included.
        #[arg(long, default_value_t = 3)]
        per_comm: usize,
        #[arg(long)]
        uniform_weights: bool,
    },
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file.
    instance: PathBuf,
    #[command(flatten)]
    inst: InstanceFlags,
    #[command(flatten)]
    solver: SolverFlags,
    /// Also run the sequential greedy baseline.
    #[arg(long)]
    greedy: bool,
    /// Where to write the best solution.
    #[arg(long)]
    solution: Option<PathBuf>,
    /// Where to write the run report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Report format: `kv` (one key=value per line) or `csv`.
    #[arg(long, default_value = "kv")]
    format: String,
}

#[derive(Args)]
struct ValidateArgs {
    instance: PathBuf,
    solution: PathBuf,
    #[command(flatten)]
    inst: InstanceFlags,
}

#[derive(Args)]
struct BenchArgs {
    /// `complete` or `regular`.
    #[arg(long, default_value = "complete")]
    graph: String,
    #[arg(short, long, value_delimiter = ',', required = true)]
    n: Vec<usize>,
    #[arg(short, long, value_delimiter = ',', default_value = "3")]
    m: Vec<usize>,
    /// Terminals per communication.
    #[arg(short, long, value_delimiter = ',')]
    t: Vec<usize>,
    /// Terminals per communication as a fraction of N (overrides --t).
    #[arg(long)]
    alpha: Option<f64>,
    /// Degrees for regular graphs.
    #[arg(long, value_delimiter = ',', default_value = "4")]
    degree: Vec<usize>,
    /// Depth bounds; the automatic choice when absent.
    #[arg(long, value_delimiter = ',')]
    depths: Vec<usize>,
    /// Kernels to compare; the variant's default when absent.
    #[arg(long, value_parser = parse_kernel, value_delimiter = ',')]
    kernels: Vec<KernelKind>,
    #[arg(long, value_parser = parse_weighting, default_value = "uniform")]
    weighting: Weighting,
    #[arg(long, value_parser = parse_variant, default_value = "vdstp")]
    variant: Variant,
    #[arg(long, value_parser = parse_formalism, default_value = "branching")]
    formalism: Formalism,
    /// Methods: `ms`, `spt`, `mst`, `greedy`.
    #[arg(long, value_delimiter = ',', default_value = "ms,greedy")]
    methods: Vec<String>,
    /// Number of seeds per parameter cell.
    #[arg(long, default_value_t = 5)]
    seeds: u64,
    #[command(flatten)]
    solver: SolverFlags,
    /// Output CSV file; standard output when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Omit the median/quartile rows.
    #[arg(long)]
    no_aggregate: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.cmd {
        Cmd::Gen(a) => cmd_gen(a),
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::Validate(a) => cmd_validate(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("stpack: {e}");
            ExitCode::from(1)
        }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(Error::from),
    }
}

fn is_complete(inst: &Instance) -> bool {
    let n = inst.num_nodes();
    inst.num_edges() == n * (n - 1) / 2
}

fn default_gamma0(inst: &Instance) -> f64 {
    if is_complete(inst) {
        GAMMA0_COMPLETE
    } else {
        GAMMA0_REGULAR
    }
}

fn cmd_gen(a: GenArgs) -> Result<bool, Error> {
    let inst = match a.kind {
        GenKind::Complete { n, m, t, weighting } => gen_complete(n, m, t, weighting, a.seed)?,
        GenKind::Regular { n, degree, m, t } => gen_regular(n, degree, m, t, a.seed)?,
        GenKind::Grid { nx, ny, nz, layer, m, per_comm, uniform_weights } => {
            let weights = if uniform_weights { GridWeights::Uniform } else { GridWeights::Unit };
            gen_grid(nx, ny, nz, layer, m, &GridTerminals::Random { per_comm }, weights, a.seed)?
        }
    };
    let inst = a.inst.apply(inst).with_depth(a.depth);
    write_out(a.out.as_deref(), &serialize_instance(&inst))?;
    Ok(true)
}

struct SolveSummary {
    report: RunReport,
    best: Option<Solution>,
    best_energy: Energy,
    greedy: Option<Energy>,
}

fn solve_instance(inst: &Instance, flags: &SolverFlags, with_greedy: bool) -> Result<SolveSummary, Error> {
    let cfg = flags.config(default_gamma0(inst))?;
    cfg.check(inst)?;
    let order = flags.greedy_order(inst.num_comms())?;
    let out = run(inst, &cfg)?;
    let mut best = out.best.clone();
    let mut best_energy = best.as_ref().map_or(Energy::Infeasible, |s| energy(s, inst));
    let mut greedy = None;
    if with_greedy {
        let g = match greedy_solve(inst, &order, &cfg) {
            Ok(g) => g,
            Err(Error::Infeasible(_)) => {
                greedy = Some(Energy::Infeasible);
                return Ok(SolveSummary { report: out.report, best, best_energy, greedy });
            }
            Err(e) => return Err(e),
        };
        greedy = Some(g.energy);
        if g.energy.better_than(best_energy) {
            best_energy = g.energy;
            best = Some(g.solution);
        }
    }
    Ok(SolveSummary { report: out.report, best, best_energy, greedy })
}

fn report_text(s: &SolveSummary, format: &str) -> Result<String, Error> {
    let mut pairs: Vec<(String, String)> = s
        .report
        .to_kv()
        .lines()
        .filter_map(|l| l.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect();
    if let Some(g) = s.greedy {
        pairs.push(("greedy_energy".into(), g.to_string()));
        let gp = match (g.value(), s.report.best_ms_energy.value()) {
            (Some(eg), Some(ems)) => gap(eg, ems).map(|x| x.to_string()).unwrap_or_default(),
            _ => String::new(),
        };
        pairs.push(("gap_vs_greedy".into(), gp));
    }
    pairs.push(("overall_energy".into(), s.best_energy.to_string()));
    match format {
        "kv" => Ok(pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()),
        "csv" => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(pairs.iter().map(|(k, _)| k)).map_err(csv_err)?;
            w.write_record(pairs.iter().map(|(_, v)| v)).map_err(csv_err)?;
            String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.to_string()))?).map_err(|e| Error::Io(e.to_string()))
        }
        other => Err(Error::Argument(format!("unknown report format `{other}` (kv, csv)"))),
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn cmd_solve(a: SolveArgs) -> Result<bool, Error> {
    check_flags(a.solver.kernel, a.inst.formalism)?;
    if a.format != "kv" && a.format != "csv" {
        return Err(Error::Argument(format!("unknown report format `{}` (kv, csv)", a.format)));
    }
    let inst = a.inst.apply(parse_instance(&read(&a.instance)?)?);
    let summary = match solve_instance(&inst, &a.solver, a.greedy) {
        Ok(s) => s,
        Err(Error::Infeasible(msg)) => {
            eprintln!("stpack: no feasible solution: {msg}");
            println!("energy=INFEASIBLE");
            return Ok(false);
        }
        Err(e) => return Err(e),
    };
    if let Some(path) = &a.report {
        write_out(Some(path), &report_text(&summary, &a.format)?)?;
    }
    if let (Some(path), Some(sol)) = (&a.solution, &summary.best) {
        write_out(Some(path), &serialize_solution(sol, &inst))?;
    }
    let r = &summary.report;
    println!(
        "energy={} ms_energy={} iterations={} converged={} wall_ms={:.1}",
        summary.best_energy,
        r.best_ms_energy,
        r.iterations,
        r.converged,
        r.wall_ms()
    );
    Ok(summary.best_energy.is_finite())
}

fn cmd_validate(a: ValidateArgs) -> Result<bool, Error> {
    let inst = a.inst.apply(parse_instance(&read(&a.instance)?)?);
    let (sol, recorded) = parse_solution(&read(&a.solution)?, &inst)?;
    let rep = validate(&sol, &inst);
    for v in &rep.violations {
        println!("violation: {v}");
    }
    let e = energy(&sol, &inst);
    let mut ok = rep.is_feasible();
    if let (Some(Energy::Finite(rec)), Energy::Finite(got)) = (recorded, e) {
        if (rec - got).abs() > 1e-9 * got.abs().max(1.0) {
            println!("violation: recorded energy {rec} differs from recomputed {got}");
            ok = false;
        }
    }
    println!("feasible={ok} energy={e} trees={}", sol.packed_trees(&inst));
    Ok(ok)
}

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Method {
    Ms,
    Spt,
    Mst,
    Greedy,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Ms => "ms",
            Method::Spt => "spt",
            Method::Mst => "mst",
            Method::Greedy => "greedy",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        match s {
            "ms" => Some(Method::Ms),
            "spt" => Some(Method::Spt),
            "mst" => Some(Method::Mst),
            "greedy" => Some(Method::Greedy),
            _ => None,
        }
    }
}

/// One point of the parameter grid; its field order is the CSV sort key.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Params {
    n: usize,
    degree: Option<usize>,
    m: usize,
    t: usize,
    depth: Option<usize>,
    kernel: Option<KernelKind>,
}

struct Row {
    params: Params,
    seed: String,
    method: Method,
    energy: String,
    gap: String,
    iterations: String,
    converged: String,
    wall_ms: String,
}

struct Measured {
    energy: Energy,
    gap: Option<f64>,
    iterations: Option<usize>,
    converged: Option<bool>,
    wall_ms: f64,
}

const HEADER: [&str; 14] = [
    "graph",
    "n",
    "degree",
    "m",
    "t",
    "depth",
    "variant",
    "formalism",
    "kernel",
    "weighting",
    "seed",
    "method",
    "energy",
    "gap_vs_baseline",
];
const TAIL: [&str; 3] = ["iterations", "converged", "wall_ms"];

fn run_cell(a: &BenchArgs, methods: &[Method], p: Params, seed: u64) -> Result<Vec<(Method, Measured)>, Error> {
    let regular = a.graph == "regular";
    let inst = if regular {
        gen_regular(p.n, p.degree.unwrap_or(0), p.m, p.t, seed)?
    } else {
        gen_complete(p.n, p.m, p.t, a.weighting, seed)?
    };
    let inst = inst.with_variant(a.variant).with_formalism(a.formalism).with_depth(p.depth);
    let mut flags = a.solver.clone();
    flags.seed = seed;
    flags.kernel = p.kernel.or(flags.kernel);
    flags.heuristics = methods
        .iter()
        .filter_map(|m| match m {
            Method::Spt => Some(Scheme::Spt),
            Method::Mst => Some(Scheme::Mst),
            _ => None,
        })
        .collect();
    let gamma0 = if regular { GAMMA0_REGULAR } else { GAMMA0_COMPLETE };
    let cfg = flags.config(gamma0)?;
    cfg.check(&inst)?;

    let mut out = Vec::new();
    let wants_ms = methods.iter().any(|m| *m != Method::Greedy);
    if wants_ms {
        let t0 = Instant::now();
        let res = run(&inst, &cfg);
        let wall = t0.elapsed().as_secs_f64() * 1e3;
        let (report, ok) = match res {
            Ok(o) => (Some(o.report), true),
            Err(Error::Infeasible(_) | Error::Contradiction(_)) => (None, false),
            Err(e) => return Err(e),
        };
        for &m in methods {
            let e = match (&report, m) {
                (Some(r), Method::Ms) => r.best_ms_energy,
                (Some(r), Method::Spt) => r.heuristic(Scheme::Spt),
                (Some(r), Method::Mst) => r.heuristic(Scheme::Mst),
                _ => continue,
            };
            out.push((
                m,
                Measured {
                    energy: if ok { e } else { Energy::Infeasible },
                    gap: None,
                    iterations: report.as_ref().map(|r| r.iterations),
                    converged: report.as_ref().map(|r| r.converged),
                    wall_ms: wall,
                },
            ));
        }
        if !ok {
            for &m in methods.iter().filter(|m| **m != Method::Greedy) {
                out.push((m, Measured { energy: Energy::Infeasible, gap: None, iterations: None, converged: None, wall_ms: wall }));
            }
        }
    }
    if methods.contains(&Method::Greedy) {
        let order = flags.greedy_order(inst.num_comms())?;
        let t0 = Instant::now();
        let e = match greedy_solve(&inst, &order, &cfg) {
            Ok(g) => g.energy,
            Err(Error::Infeasible(_) | Error::Contradiction(_)) => Energy::Infeasible,
            Err(e) => return Err(e),
        };
        let wall = t0.elapsed().as_secs_f64() * 1e3;
        out.push((Method::Greedy, Measured { energy: e, gap: None, iterations: None, converged: None, wall_ms: wall }));
        // Gap of the baseline over each method, positive when the method wins.
        if let Some(eg) = e.value() {
            for (_, meas) in out.iter_mut() {
                meas.gap = meas.energy.value().and_then(|em| gap(eg, em).ok());
            }
        }
    }
    out.sort_by_key(|(m, _)| *m);
    Ok(out)
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn cmd_bench(a: BenchArgs) -> Result<bool, Error> {
    check_flags(a.solver.kernel, Some(a.formalism))?;
    for k in &a.kernels {
        check_flags(Some(*k), Some(a.formalism))?;
    }
    let regular = match a.graph.as_str() {
        "complete" => false,
        "regular" => true,
        g => return Err(Error::Argument(format!("unknown graph family `{g}` (complete, regular)"))),
    };
    let mut methods = Vec::new();
    for s in &a.methods {
        let m = Method::from_name(s).ok_or_else(|| Error::Argument(format!("unknown method `{s}` (ms, spt, mst, greedy)")))?;
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    methods.sort();
    if a.alpha.is_none() && a.t.is_empty() {
        return Err(Error::Argument("give --t or --alpha".into()));
    }
    if let Some(alpha) = a.alpha {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Argument(format!("--alpha must lie in (0, 1], got {alpha}")));
        }
    }
    a.solver.order()?;

    let degrees: Vec<Option<usize>> = if regular { a.degree.iter().map(|&d| Some(d)).collect() } else { vec![None] };
    let depths: Vec<Option<usize>> = if a.depths.is_empty() { vec![None] } else { a.depths.iter().map(|&d| Some(d)).collect() };
    let kernels: Vec<Option<KernelKind>> =
        if a.kernels.is_empty() { vec![None] } else { a.kernels.iter().map(|&k| Some(k)).collect() };
    let mut cells = Vec::new();
    for &n in &a.n {
        let ts: Vec<usize> = match a.alpha {
            Some(alpha) => vec![((alpha * n as f64).round() as usize).max(1)],
            None => a.t.clone(),
        };
        for &degree in &degrees {
            for &m in &a.m {
                for &t in &ts {
                    for &depth in &depths {
                        for &kernel in &kernels {
                            let p = Params { n, degree, m, t, depth, kernel };
                            for i in 0..a.seeds {
                                cells.push((p, a.solver.seed.wrapping_add(i)));
                            }
                        }
                    }
                }
            }
        }
    }
    cells.sort_by_key(|c| (c.0, c.1));

    let results: Vec<Result<Vec<(Method, Measured)>, Error>> =
        cells.par_iter().map(|&(p, seed)| run_cell(&a, &methods, p, seed)).collect();

    let mut rows = Vec::new();
    let mut groups: Vec<(Params, Method, Vec<Measured>)> = Vec::new();
    for (&(p, seed), res) in cells.iter().zip(results) {
        let measured = match res {
            Ok(v) => v,
            Err(e) => {
                eprintln!("stpack: cell n={} m={} t={} seed={seed}: {e}", p.n, p.m, p.t);
                methods
                    .iter()
                    .map(|&m| (m, Measured { energy: Energy::Infeasible, gap: None, iterations: None, converged: None, wall_ms: 0.0 }))
                    .collect()
            }
        };
        for (method, meas) in measured {
            rows.push(Row {
                params: p,
                seed: seed.to_string(),
                method,
                energy: meas.energy.to_string(),
                gap: fmt_opt(meas.gap),
                iterations: fmt_opt(meas.iterations),
                converged: fmt_opt(meas.converged),
                wall_ms: format!("{:.3}", meas.wall_ms),
            });
            match groups.iter_mut().find(|g| g.0 == p && g.1 == method) {
                Some(g) => g.2.push(meas),
                None => groups.push((p, method, vec![meas])),
            }
        }
    }
    if !a.no_aggregate {
        for (p, method, ms) in &groups {
            let sorted = |f: &dyn Fn(&Measured) -> Option<f64>| {
                let mut v: Vec<f64> = ms.iter().filter_map(f).collect();
                v.sort_by(f64::total_cmp);
                v
            };
            let energies = sorted(&|m| m.energy.value());
            let gaps = sorted(&|m| m.gap);
            let iters = sorted(&|m| m.iterations.map(|i| i as f64));
            let walls = sorted(&|m| Some(m.wall_ms));
            let conv: Vec<bool> = ms.iter().filter_map(|m| m.converged).collect();
            let conv_frac = (!conv.is_empty())
                .then(|| conv.iter().filter(|&&c| c).count() as f64 / conv.len() as f64);
            for (label, q) in [("q1", 0.25), ("median", 0.5), ("q3", 0.75)] {
                let pick = |v: &[f64]| (!v.is_empty()).then(|| quantile(v, q));
                rows.push(Row {
                    params: *p,
                    seed: label.to_string(),
                    method: *method,
                    energy: pick(&energies).map_or("INFEASIBLE".to_string(), |x| x.to_string()),
                    gap: fmt_opt(pick(&gaps)),
                    iterations: fmt_opt(pick(&iters)),
                    converged: fmt_opt(conv_frac),
                    wall_ms: pick(&walls).map(|x| format!("{x:.3}")).unwrap_or_default(),
                });
            }
        }
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER.iter().chain(TAIL.iter())).map_err(csv_err)?;
    let weighting = if regular {
        String::new()
    } else {
        match a.weighting {
            Weighting::Uniform => "uniform".into(),
            Weighting::Correlated => "correlated".into(),
        }
    };
    for r in &rows {
        let p = r.params;
        w.write_record([
            a.graph.clone(),
            p.n.to_string(),
            fmt_opt(p.degree),
            p.m.to_string(),
            p.t.to_string(),
            fmt_opt(p.depth),
            a.variant.name().to_string(),
            a.formalism.name().to_string(),
            p.kernel.map(|k| k.name()).unwrap_or("default").to_string(),
            weighting.clone(),
            r.seed.clone(),
            r.method.name().to_string(),
            r.energy.clone(),
            r.gap.clone(),
            r.iterations.clone(),
            r.converged.clone(),
            r.wall_ms.clone(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    write_out(a.out.as_deref(), &String::from_utf8_lossy(&bytes))?;
    Ok(true)
}
