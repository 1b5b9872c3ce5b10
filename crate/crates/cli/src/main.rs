use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use torus_oblivious::bounds::{cut_lower_bound, llb_load_upper, oblivious_lower_bound};
use torus_oblivious::eval::{edge_loads, run_trials, worst_case_load, LoadReport};
use torus_oblivious::lpexport::{export_opt_lp, export_reduced_oblivious_lp, ObliviousLpOptions};
use torus_oblivious::schemes::{build_ecmp, build_gllb, build_llb, build_ring_lb, build_vlb, gllb_params, llb_radius};
use torus_oblivious::traffic::{gen_hotspot, gen_random_sparse, gen_split_diamond};
use torus_oblivious::{Node, OriginPolicy, TorusSpec, TrafficMatrix, VERSION};

/// Seed used when `--seed` is not given.
const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Parser, Debug)]
#[command(
    name = "torus-lb",
    version,
    about = "Oblivious routing on 2-D tori under sparse traffic"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Maximum link load of ECMP, VLB and LLB on the three traffic kinds.
    Table1(Opts),
    /// Average hop count of ECMP, VLB and LLB on the three traffic kinds.
    Table2(Opts),
    /// Sweep k = 1..=K: lower bounds, measured LLB worst case, LLB upper bound.
    Bounds(Opts),
    /// Exact worst-case load of a scheme over k-limited traffic.
    WorstCase(Opts),
    /// Per-edge loads of a scheme on one traffic matrix, or a trial summary
    /// for random traffic.
    Evaluate(Opts),
    /// Write the reduced oblivious-routing LP.
    ExportLp(Opts),
    /// Write the min-congestion LP for one traffic matrix.
    ExportOpt(Opts),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum SchemeKind {
    Ecmp,
    Vlb,
    Llb,
    Gllb,
    Ring,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum TrafficKind {
    SplitDiamond,
    Hotspot,
    Random,
}

#[derive(Args, Debug, Clone)]
struct Opts {
    /// Rows (vertical extent).
    #[arg(long)]
    n: Option<usize>,
    /// Columns; defaults to the row count.
    #[arg(long)]
    m: Option<usize>,
    /// Capacity of vertical links.
    #[arg(long)]
    c1: Option<f64>,
    /// Capacity of horizontal links.
    #[arg(long)]
    c2: Option<f64>,
    /// Sparsity level (largest k for `bounds`).
    #[arg(long)]
    k: Option<usize>,
    /// Stem radius for LLB/GLLB, or split-diamond radius for traffic.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, value_enum)]
    scheme: Option<SchemeKind>,
    #[arg(long, value_enum)]
    traffic: Option<TrafficKind>,
    /// Read traffic from a CSV file instead of generating it.
    #[arg(long, conflicts_with = "traffic")]
    traffic_file: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output file (default: stdout; required for LP exports).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep one LP variable per (t, e) and emit reflection ties as rows.
    #[arg(long)]
    no_dedupe: bool,
    /// Load settings from a JSON file written by `--print-config`.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Print the resolved settings as JSON and exit.
    #[arg(long)]
    print_config: bool,
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    n: usize,
    m: usize,
    c1: f64,
    c2: f64,
    k: usize,
    r: Option<usize>,
    scheme: SchemeKind,
    traffic: TrafficKind,
    traffic_file: Option<PathBuf>,
    trials: usize,
    seed: u64,
    jobs: Option<usize>,
    out: Option<PathBuf>,
    dedupe: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 10,
            m: 10,
            c1: 1.0,
            c2: 1.0,
            k: 18,
            r: None,
            scheme: SchemeKind::Llb,
            traffic: TrafficKind::SplitDiamond,
            traffic_file: None,
            trials: 1000,
            seed: DEFAULT_SEED,
            jobs: None,
            out: None,
            dedupe: true,
        }
    }
}

impl RunConfig {
    fn resolve(o: &Opts) -> anyhow::Result<RunConfig> {
        let mut c = match &o.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(n) = o.n {
            c.n = n;
            if o.m.is_none() && o.config.is_none() {
                c.m = n;
            }
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = o.$f.clone() { c.$f = v; } )* };
        }
        take!(m, c1, c2, k, scheme, traffic, trials, seed);
        if o.r.is_some() {
            c.r = o.r;
        }
        if o.traffic_file.is_some() {
            c.traffic_file = o.traffic_file.clone();
        }
        if o.jobs.is_some() {
            c.jobs = o.jobs;
        }
        if o.out.is_some() {
            c.out = o.out.clone();
        }
        if o.no_dedupe {
            c.dedupe = false;
        }
        Ok(c)
    }

    fn spec(&self) -> anyhow::Result<TorusSpec> {
        Ok(TorusSpec::new(self.n, self.m, self.c1, self.c2)?)
    }

    /// Largest split-diamond radius with `2 r^2 <= k`, unless given.
    fn diamond_radius(&self) -> usize {
        self.r.unwrap_or_else(|| {
            let mut r = 1;
            while 2 * (r + 1) * (r + 1) <= self.k {
                r += 1;
            }
            r
        })
    }

    fn llb_radius(&self) -> usize {
        self.r.unwrap_or_else(|| llb_radius(self.k))
    }

    fn trailer(&self) -> String {
        format!("# seed={},version={}", self.seed, VERSION)
    }
}

fn build_scheme(spec: &TorusSpec, cfg: &RunConfig, kind: SchemeKind) -> anyhow::Result<OriginPolicy> {
    let policy = match kind {
        SchemeKind::Ecmp => build_ecmp(spec)?,
        SchemeKind::Vlb => build_vlb(spec)?,
        SchemeKind::Llb => build_llb(spec, cfg.llb_radius())?,
        SchemeKind::Gllb => {
            let (r1, r2) = match cfg.r {
                Some(r) => (r, r),
                None => gllb_params(spec, cfg.k),
            };
            build_gllb(spec, r1, r2)?
        }
        SchemeKind::Ring => build_ring_lb(spec)?,
    };
    Ok(policy)
}

fn fixed_traffic(spec: &TorusSpec, cfg: &RunConfig, kind: TrafficKind) -> anyhow::Result<TrafficMatrix> {
    if let Some(path) = &cfg.traffic_file {
        let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        return Ok(TrafficMatrix::read_csv(*spec, f)?);
    }
    Ok(match kind {
        TrafficKind::SplitDiamond => gen_split_diamond(spec, cfg.diamond_radius())?,
        TrafficKind::Hotspot => gen_hotspot(spec, cfg.k, Node::ORIGIN)?,
        TrafficKind::Random => gen_random_sparse(spec, cfg.k, cfg.seed)?,
    })
}

fn output(cfg: &RunConfig) -> anyhow::Result<Box<dyn Write>> {
    Ok(match &cfg.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn fmt(x: f64) -> String {
    format!("{x:.6}")
}

const TABLE_SCHEMES: [SchemeKind; 3] = [SchemeKind::Ecmp, SchemeKind::Vlb, SchemeKind::Llb];

/// One row per traffic kind; `metric` picks max load or hops.
fn cmd_table(cfg: &RunConfig, hops: bool) -> anyhow::Result<()> {
    let spec = cfg.spec()?;
    let policies = TABLE_SCHEMES
        .iter()
        .map(|&s| build_scheme(&spec, cfg, s))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut w = output(cfg)?;
    if hops {
        writeln!(w, "traffic,ecmp,vlb,llb")?;
    } else {
        writeln!(w, "traffic,ecmp,vlb,llb,o_opt,opt")?;
    }
    for kind in [TrafficKind::SplitDiamond, TrafficKind::Hotspot, TrafficKind::Random] {
        let mut cells = Vec::new();
        for p in &policies {
            let value = if kind == TrafficKind::Random {
                let s = run_trials(p, |seed| gen_random_sparse(&spec, cfg.k, seed), cfg.trials, cfg.seed)?;
                if hops {
                    s.avg_hops.mean
                } else {
                    s.max_load.mean
                }
            } else {
                let r = edge_loads(
                    p,
                    &fixed_traffic(
                        &spec,
                        &RunConfig {
                            traffic_file: None,
                            ..cfg.clone()
                        },
                        kind,
                    )?,
                )?;
                if hops {
                    r.avg_hops
                } else {
                    r.max_load
                }
            };
            cells.push(fmt(value));
        }
        let label = match kind {
            TrafficKind::SplitDiamond => "split-diamond".to_string(),
            TrafficKind::Hotspot => "hotspot".to_string(),
            TrafficKind::Random => format!("random-mean-{}", cfg.trials),
        };
        if hops {
            writeln!(w, "{label},{}", cells.join(","))?;
        } else {
            let traffic = match kind {
                TrafficKind::SplitDiamond => "split-diamond",
                TrafficKind::Hotspot => "hotspot",
                TrafficKind::Random => "random",
            };
            writeln!(
                w,
                "{label},{},external:export-lp,external:export-opt --traffic {traffic}",
                cells.join(",")
            )?;
        }
    }
    writeln!(w, "{}", cfg.trailer())?;
    w.flush()?;
    Ok(())
}

fn cmd_bounds(cfg: &RunConfig) -> anyhow::Result<()> {
    let spec = cfg.spec()?;
    let mut w = output(cfg)?;
    writeln!(w, "k,r,cut_lb,oblivious_lb,llb_worst_case,llb_ub")?;
    for k in 1..=cfg.k {
        let r = llb_radius(k);
        let policy = build_llb(&spec, r)?;
        let measured = worst_case_load(&policy, k)?.value;
        writeln!(
            w,
            "{k},{r},{},{},{},{}",
            fmt(cut_lower_bound(k)),
            fmt(oblivious_lower_bound(k)),
            fmt(measured),
            fmt(llb_load_upper(r, k))
        )?;
    }
    writeln!(w, "{}", cfg.trailer())?;
    w.flush()?;
    Ok(())
}

fn scheme_name(kind: SchemeKind) -> &'static str {
    match kind {
        SchemeKind::Ecmp => "ecmp",
        SchemeKind::Vlb => "vlb",
        SchemeKind::Llb => "llb",
        SchemeKind::Gllb => "gllb",
        SchemeKind::Ring => "ring",
    }
}

fn cmd_worst_case(cfg: &RunConfig) -> anyhow::Result<()> {
    let spec = cfg.spec()?;
    let policy = build_scheme(&spec, cfg, cfg.scheme)?;
    let wc = worst_case_load(&policy, cfg.k)?;
    let mut w = output(cfg)?;
    writeln!(w, "scheme,k,worst_case,edge_tail_x,edge_tail_y,dir,witness_pairs")?;
    writeln!(
        w,
        "{},{},{},{},{},{},{}",
        scheme_name(cfg.scheme),
        cfg.k,
        fmt(wc.value),
        wc.edge.tail.x,
        wc.edge.tail.y,
        wc.edge.dir.label(),
        wc.witness.len()
    )?;
    writeln!(w, "{}", cfg.trailer())?;
    w.flush()?;
    Ok(())
}

fn cmd_evaluate(cfg: &RunConfig) -> anyhow::Result<()> {
    let spec = cfg.spec()?;
    let policy = build_scheme(&spec, cfg, cfg.scheme)?;
    let mut w = output(cfg)?;
    if cfg.traffic == TrafficKind::Random && cfg.traffic_file.is_none() {
        let summary = run_trials(
            &policy,
            |seed| gen_random_sparse(&spec, cfg.k, seed),
            cfg.trials,
            cfg.seed,
        )?;
        summary.write_csv(&mut w)?;
    } else {
        let report: LoadReport = edge_loads(&policy, &fixed_traffic(&spec, cfg, cfg.traffic)?)?;
        report.write_csv(&mut w)?;
    }
    writeln!(w, "{}", cfg.trailer())?;
    w.flush()?;
    Ok(())
}

fn lp_target(cfg: &RunConfig) -> anyhow::Result<Box<dyn Write>> {
    if cfg.out.is_none() {
        bail!("--out is required for LP export");
    }
    output(cfg)
}

fn print_counts(cfg: &RunConfig, counts: torus_oblivious::lpexport::LpCounts) -> anyhow::Result<()> {
    let mut w = io::stdout().lock();
    writeln!(w, "variables,constraints,nonzeros")?;
    writeln!(w, "{},{},{}", counts.variables, counts.constraints, counts.nonzeros)?;
    writeln!(w, "{}", cfg.trailer())?;
    Ok(())
}

fn cmd_export_lp(cfg: &RunConfig) -> anyhow::Result<()> {
    let spec = cfg.spec()?;
    let opts = ObliviousLpOptions {
        dedupe_orbits: cfg.dedupe,
    };
    let counts = export_reduced_oblivious_lp(&spec, cfg.k, opts, lp_target(cfg)?)?;
    print_counts(cfg, counts)
}

fn cmd_export_opt(cfg: &RunConfig) -> anyhow::Result<()> {
    let spec = cfg.spec()?;
    let d = fixed_traffic(&spec, cfg, cfg.traffic)?;
    let counts = export_opt_lp(&d, lp_target(cfg)?)?;
    print_counts(cfg, counts)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let (opts, action): (&Opts, fn(&RunConfig) -> anyhow::Result<()>) = match &cli.command {
        Command::Table1(o) => (o, |c| cmd_table(c, false)),
        Command::Table2(o) => (o, |c| cmd_table(c, true)),
        Command::Bounds(o) => (o, cmd_bounds),
        Command::WorstCase(o) => (o, cmd_worst_case),
        Command::Evaluate(o) => (o, cmd_evaluate),
        Command::ExportLp(o) => (o, cmd_export_lp),
        Command::ExportOpt(o) => (o, cmd_export_opt),
    };
    let cfg = RunConfig::resolve(opts)?;
    if opts.print_config {
        println!("{}", serde_json::to_string_pretty(&cfg)?);
        return Ok(());
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        pool = pool.num_threads(j);
    }
    pool.build()?.install(|| action(&cfg))
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
