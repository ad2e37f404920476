//! The `dfl` command line.
//!
//! Standard output carries data only (reports and CSV); diagnostics go to
//! standard error under `DFL_LOG`. Every CSV written with `--out` gets a
//! `<csv>.manifest.json` beside it.

mod error;
mod manifest;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use dfl_core::analysis::{
    composed_single_passing_audit, derivative_surface, estimate_nonvanishing_fraction, gradient_quality,
    implication_aggregator_interaction, single_passing_audit, surface_header,
};
use dfl_core::logic::{parse_kb, KnowledgeBase};
use dfl_core::operators::{parse_operator_spec, Operator, OperatorConfig};
use dfl_core::oracle::GroundedKb;
use dfl_core::trainer::{
    config_sweep, parse_seeds, semi_supervised_train_with, split_values, SweepAxis, SweepSpec, SyntheticTask,
    TrainConfig, METRICS_HEADER, SWEEP_HEADER,
};
use dfl_core::valuation::{evaluate_kb, parse_grounding, sample_batch, LookupTable, MODEL_EPSILON};

pub use error::{CliError, CliResult};
use manifest::Provenance;

#[derive(Debug, Parser)]
#[command(name = "dfl", version, about = "Differentiable fuzzy logic toolkit")]
pub struct Cli {
    /// Worker threads for Monte Carlo estimates and sweeps.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Valuate a knowledge base on a grounding and report atom gradients.
    Eval(EvalArgs),
    /// Operator and gradient analyses.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Train the semi-supervised model from a config file.
    Train(TrainArgs),
    /// Run one training per (value, seed) along a sweep axis.
    Sweep(SweepArgs),
    /// Exact probabilistic reference computations.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Args)]
pub struct OpsArgs {
    /// Operator preset: product, dpfl, godel or lukasiewicz.
    #[arg(long, default_value = "product")]
    ops: String,
    /// File of operator `key=value` lines applied after the preset.
    #[arg(long = "ops-config")]
    ops_config: Option<PathBuf>,
    #[arg(long)]
    tnorm: Option<String>,
    #[arg(long)]
    tconorm: Option<String>,
    #[arg(long)]
    implication: Option<String>,
    #[arg(long)]
    aggregator: Option<String>,
}

#[derive(Debug, Args)]
pub struct GroundArgs {
    /// Knowledge base file (`.dfl`).
    #[arg(long)]
    kb: PathBuf,
    /// Grounding file of `pred(o1,o2)=value` lines.
    #[arg(long)]
    grounding: PathBuf,
    /// Ground over a random batch of this many objects instead of all.
    #[arg(long, requires = "seed")]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    ground: GroundArgs,
    #[command(flatten)]
    ops: OpsArgs,
    /// Write the gradient table here instead of standard output.
    #[arg(long, visible_alias = "csv")]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum AnalyzeCommand {
    /// Monte Carlo fraction of the cube with a nonvanishing derivative.
    Fractions {
        #[arg(long)]
        op: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, visible_alias = "csv")]
        out: Option<PathBuf>,
    },
    /// Check that at most one input receives a nonzero partial.
    SinglePassing {
        #[arg(long)]
        op: String,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Compose with this inner operator over groups of `--group-size`.
        #[arg(long, requires = "group_size")]
        inner: Option<String>,
        #[arg(long)]
        group_size: Option<usize>,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, visible_alias = "csv")]
        out: Option<PathBuf>,
    },
    /// Value and partials of a binary operator on a grid over the unit square.
    Surface {
        #[arg(long)]
        op: String,
        #[arg(long, default_value_t = 0.05)]
        step: f64,
        /// Aggregate each implication value with a fixed second instance.
        #[arg(long = "with-aggregator")]
        with_aggregator: Option<String>,
        #[arg(long, visible_alias = "csv")]
        out: Option<PathBuf>,
    },
    /// Consequent and antecedent gradient magnitudes of implications.
    Quality {
        #[command(flatten)]
        ground: GroundArgs,
        #[command(flatten)]
        ops: OpsArgs,
        /// Grounding file whose values at or above `--threshold` mark true
        /// atoms; defaults to the grounding itself.
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long, visible_alias = "csv")]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum OracleCommand {
    /// Compare the exact Semantic Loss with the DPFL valuation.
    Compare {
        #[command(flatten)]
        ground: GroundArgs,
        #[arg(long, visible_alias = "csv")]
        out: Option<PathBuf>,
        /// Also write every Boolean world with its probability.
        #[arg(long)]
        worlds: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Config file of `key=value` lines; defaults apply without one.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Extra `key=value` settings applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, visible_alias = "csv")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sweep axis: tnorm, aggregator, implication, s, b0, w_dfl or formulas.
    #[arg(long)]
    axis: Option<String>,
    /// Values along the axis, separated by `;` or `,`.
    #[arg(long)]
    values: Option<String>,
    /// Seeds as `1,2,3` or `1..5`.
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long, visible_alias = "csv")]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {}", path.display(), e)))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// CSV destination: a file (with a manifest once finished) or stdout.
struct Sink {
    out: Box<dyn Write>,
    path: Option<PathBuf>,
}

impl Sink {
    fn open(path: Option<&Path>) -> CliResult<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(
                File::create(p).map_err(|e| CliError::input(format!("cannot create {}: {}", p.display(), e)))?,
            )),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(Sink { out, path: path.map(Path::to_path_buf) })
    }

    fn line(&mut self, text: &str) -> CliResult<()> {
        writeln!(self.out, "{}", text).map_err(|e| CliError::input(format!("write failed: {}", e)))
    }

    fn flush(&mut self) -> CliResult<()> {
        self.out.flush().map_err(|e| CliError::input(format!("write failed: {}", e)))
    }

    fn to_file(&self) -> bool {
        self.path.is_some()
    }

    fn finish(mut self, prov: &Provenance) -> CliResult<()> {
        self.flush()?;
        if let Some(p) = &self.path {
            let m = prov.finish(p)?;
            log::info!("wrote {} and {}", p.display(), m.display());
        }
        Ok(())
    }
}

impl OpsArgs {
    fn resolve(&self, prov: &mut Provenance) -> CliResult<OperatorConfig> {
        let mut ops = OperatorConfig::preset(&self.ops)
            .ok_or_else(|| CliError::input(format!("unknown preset `{}`", self.ops)))?;
        if let Some(path) = &self.ops_config {
            let text = read(path)?;
            for (i, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let at = |m: String| CliError::semantic(format!("{}:{}: {}", path.display(), i + 1, m));
                let (k, v) = line.split_once('=').ok_or_else(|| at(format!("expected key=value, got `{}`", line)))?;
                if !ops.apply(k.trim(), v.trim()).map_err(|e| at(e.to_string()))? {
                    return Err(at(format!("unknown operator key `{}`", k.trim())));
                }
            }
        }
        for (key, value) in [
            ("tnorm", &self.tnorm),
            ("tconorm", &self.tconorm),
            ("implication", &self.implication),
            ("aggregator", &self.aggregator),
        ] {
            if let Some(v) = value {
                ops.apply(key, v)?;
            }
        }
        prov.add(
            "ops",
            &format!("{}\n{}\n{}\n{}", ops.tnorm, ops.tconorm, ops.implication, ops.aggregator),
        );
        Ok(ops)
    }
}

struct Grounded {
    kb: KnowledgeBase,
    table: LookupTable,
    batch: Vec<usize>,
}

impl GroundArgs {
    fn load(&self, prov: &mut Provenance) -> CliResult<Grounded> {
        let kb_text = read(&self.kb)?;
        let kb = parse_kb(&kb_text).map_err(|e| CliError::from(e).in_file(&self.kb))?;
        let g_text = read(&self.grounding)?;
        let table = parse_grounding(&g_text).map_err(|e| CliError::from(e).in_file(&self.grounding))?;
        prov.add("kb", &kb_text);
        prov.add("grounding", &g_text);
        let batch = match self.batch {
            Some(b) => {
                let seed = self.seed.ok_or_else(|| CliError::input("--batch needs --seed"))?;
                prov.seed(seed);
                prov.add("batch", &b.to_string());
                sample_batch(&table.domain, b, seed)?
            }
            None => table.domain.all(),
        };
        Ok(Grounded { kb, table, batch })
    }
}

fn parse_op(text: &str) -> CliResult<Operator> {
    parse_operator_spec(text)
        .and_then(|s| s.to_operator())
        .map_err(|e| CliError { message: format!("--op: {}", e), ..e.into() })
}

pub fn run(cli: Cli) -> CliResult<()> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::input("--jobs must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::input(e.to_string()))?;
    }
    match cli.command {
        Command::Eval(a) => eval(a),
        Command::Analyze(a) => analyze(a),
        Command::Train(a) => train(a),
        Command::Sweep(a) => sweep(a),
        Command::Oracle(OracleCommand::Compare { ground, out, worlds }) => oracle_compare(ground, out, worlds),
    }
}

fn eval(a: EvalArgs) -> CliResult<()> {
    let mut prov = Provenance::start("eval");
    let g = a.ground.load(&mut prov)?;
    let ops = a.ops.resolve(&mut prov)?;
    let ev = evaluate_kb(&g.kb, &g.table, &g.batch, &ops, None)?;
    let mut stdout = io::stdout().lock();
    let mut say = |s: String| writeln!(stdout, "{}", s).map_err(|e| CliError::input(e.to_string()));
    for (wf, v) in g.kb.formulas.iter().zip(&ev.valuations) {
        say(format!("formula line {} weight {}: {}", wf.line, wf.weight, v))?;
    }
    say(format!("valuation {}", ev.total_valuation()))?;
    say(format!("loss {}", ev.loss))?;
    drop(stdout);
    let mut sink = Sink::open(a.out.as_deref())?;
    sink.line("atom,value,dL_datom,dVal_datom")?;
    for gr in &ev.gradients {
        sink.line(&format!(
            "{},{},{},{}",
            csv_field(&ev.describe(&g.table.domain, gr)),
            gr.value,
            gr.d_loss,
            gr.d_valuation
        ))?;
    }
    sink.finish(&prov)
}

fn analyze(cmd: AnalyzeCommand) -> CliResult<()> {
    match cmd {
        AnalyzeCommand::Fractions { op, n, samples, seed, out } => {
            let mut prov = Provenance::start("analyze fractions");
            prov.add("op", &op);
            prov.add("n", &n.to_string());
            prov.add("samples", &samples.to_string());
            prov.seed(seed);
            let operator = parse_op(&op)?;
            let est = estimate_nonvanishing_fraction(&operator, n, samples, seed)?;
            let mut sink = Sink::open(out.as_deref())?;
            sink.line("operator,n,samples,hits,estimate,std_error,closed_form,closed_form_value,z_score,agreement")?;
            let (label, value, z) = match &est.closed_form {
                Some(cf) => (cf.label.clone(), cf.value.to_string(), est.z_score(cf.value).to_string()),
                None => (String::new(), String::new(), String::new()),
            };
            sink.line(&format!(
                "{},{},{},{},{},{},{},{},{},{:?}",
                csv_field(&operator.name()),
                n,
                samples,
                est.hits,
                est.estimate,
                est.std_error,
                csv_field(&label),
                value,
                z,
                est.agreement()
            ))?;
            for alt in &est.alternatives {
                log::info!("alternative closed form {} = {} (z = {})", alt.label, alt.value, est.z_score(alt.value));
            }
            sink.finish(&prov)
        }
        AnalyzeCommand::SinglePassing { op, n, inner, group_size, samples, seed, out } => {
            let mut prov = Provenance::start("analyze single-passing");
            prov.add("op", &op);
            prov.add("n", &n.to_string());
            prov.add("inner", inner.as_deref().unwrap_or(""));
            prov.add("group_size", &group_size.map(|g| g.to_string()).unwrap_or_default());
            prov.add("samples", &samples.to_string());
            prov.seed(seed);
            let outer = parse_op(&op)?;
            let audit = match (&inner, group_size) {
                (Some(i), Some(k)) => composed_single_passing_audit(&outer, &parse_op(i)?, n, k, samples, seed)?,
                _ => single_passing_audit(&outer, n, samples, seed)?,
            };
            let join = |v: &Option<Vec<f64>>| {
                v.as_ref()
                    .map(|v| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"))
                    .unwrap_or_default()
            };
            let mut sink = Sink::open(out.as_deref())?;
            sink.line("operator,n,samples,single_passing,violations,witness,witness_partials")?;
            sink.line(&format!(
                "{},{},{},{},{},{},{}",
                csv_field(&outer.name()),
                n,
                audit.samples,
                audit.single_passing,
                audit.violations,
                join(&audit.witness),
                join(&audit.witness_partials)
            ))?;
            sink.finish(&prov)
        }
        AnalyzeCommand::Surface { op, step, with_aggregator, out } => {
            let mut prov = Provenance::start("analyze surface");
            prov.add("op", &op);
            prov.add("step", &step.to_string());
            prov.add("aggregator", with_aggregator.as_deref().unwrap_or(""));
            let operator = parse_op(&op)?;
            let mut sink = Sink::open(out.as_deref())?;
            match with_aggregator {
                Some(agg) => {
                    let Operator::Implication(imp) = &operator else {
                        return Err(CliError::input("--with-aggregator needs an implication --op"));
                    };
                    let agg = parse_operator_spec(&agg)
                        .and_then(|s| s.to_aggregator())
                        .map_err(|e| CliError::input(format!("--with-aggregator: {}", e)))?;
                    sink.line("a,c,value,d_neg_a,d_c")?;
                    for r in implication_aggregator_interaction(&agg, imp, step)? {
                        sink.line(&format!("{},{},{},{},{}", r.a, r.c, r.value, r.d_neg_a, r.d_c))?;
                    }
                }
                None => {
                    sink.line(&surface_header(&operator).join(","))?;
                    for r in derivative_surface(&operator, step)? {
                        sink.line(&format!("{},{},{},{},{}", r.x, r.y, r.value, r.d_x, r.d_y))?;
                    }
                }
            }
            sink.finish(&prov)
        }
        AnalyzeCommand::Quality { ground, ops, labels, threshold, out } => {
            let mut prov = Provenance::start("analyze quality");
            let g = ground.load(&mut prov)?;
            let ops = ops.resolve(&mut prov)?;
            prov.add("threshold", &threshold.to_string());
            let truth = match &labels {
                Some(path) => {
                    let text = read(path)?;
                    prov.add("labels", &text);
                    let t = parse_grounding(&text).map_err(|e| CliError::from(e).in_file(path))?;
                    relabel(&t, &g.table)
                }
                None => g.table.clone(),
            };
            let ev = evaluate_kb(&g.kb, &g.table, &g.batch, &ops, Some(MODEL_EPSILON))?;
            let label = |p: &str, objs: &[usize]| truth.get(p, objs).is_some_and(|v| v >= threshold);
            let q = gradient_quality(&g.kb, &ev, &label);
            let mut sink = Sink::open(out.as_deref())?;
            sink.line("cons,ant,cons_pct,cu_cons_pct,cu_ant_pct,formulas,skipped")?;
            sink.line(&format!(
                "{},{},{},{},{},{},{}",
                q.cons, q.ant, q.cons_pct, q.cu_cons_pct, q.cu_ant_pct, q.formulas, q.skipped
            ))?;
            sink.finish(&prov)
        }
    }
}

/// Re-keys a label table onto the object numbering of `target`, matching
/// objects by name.
fn relabel(labels: &LookupTable, target: &LookupTable) -> LookupTable {
    let mut out = LookupTable::new(target.domain.clone());
    for (p, args, v) in &labels.entries {
        let names: Vec<&str> = args.iter().map(|&i| labels.domain.names[i].as_str()).collect();
        if names.iter().all(|n| target.domain.names.iter().any(|t| t == n)) {
            let _ = out.insert(p, &names, *v);
        }
    }
    out
}

fn oracle_compare(ground: GroundArgs, out: Option<PathBuf>, worlds: Option<PathBuf>) -> CliResult<()> {
    let mut prov = Provenance::start("oracle compare");
    let g = ground.load(&mut prov)?;
    let grounded = GroundedKb::new(&g.kb, &g.table, &g.batch)?;
    let report = dfl_core::oracle::equivalence_report(&g.kb, &g.table, &g.batch)?;
    println!("{}", report);
    println!("atoms={} instances={}", grounded.atom_count(), grounded.instance_count());
    if let Some(path) = out {
        let mut sink = Sink::open(Some(&path))?;
        sink.line("exact,dpfl,gap,single_occurrence,atoms,instances")?;
        sink.line(&format!(
            "{},{},{},{},{},{}",
            report.exact,
            report.dpfl,
            report.gap,
            report.single_occurrence,
            grounded.atom_count(),
            grounded.instance_count()
        ))?;
        sink.finish(&prov)?;
    }
    if let Some(path) = worlds {
        let mut sink = Sink::open(Some(&path))?;
        let names: Vec<String> = grounded.atoms.iter().map(|a| csv_field(&a.describe(&g.table.domain))).collect();
        sink.line(&format!("world,probability,satisfied,{}", names.join(",")))?;
        for (w, p, sat) in grounded.worlds()? {
            let bits: Vec<&str> = (0..names.len()).map(|i| if w >> i & 1 == 1 { "1" } else { "0" }).collect();
            sink.line(&format!("{},{},{},{}", w, p, sat, bits.join(",")))?;
        }
        sink.finish(&prov)?;
    }
    Ok(())
}

fn load_config(path: Option<&Path>, sets: &[String], prov: &mut Provenance) -> CliResult<TrainConfig> {
    let mut cfg = match path {
        Some(p) => TrainConfig::parse(&read(p)?).map_err(|e| CliError::from(e).in_file(p))?,
        None => TrainConfig::default(),
    };
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| CliError::input(format!("--set expects KEY=VALUE, got `{}`", s)))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    prov.add("config", &cfg.canonical());
    Ok(cfg)
}

fn train(a: TrainArgs) -> CliResult<()> {
    let mut prov = Provenance::start("train");
    let mut cfg = load_config(a.config.as_deref(), &a.set, &mut prov)?;
    if a.seed.is_some() {
        cfg.seed = a.seed;
    }
    let seed = cfg
        .seed
        .ok_or_else(|| CliError::input("train needs a seed: pass --seed or set `seed` in the config"))?;
    prov.seed(seed);
    let task = SyntheticTask::from_config(&cfg, seed);
    let mut sink = Sink::open(a.out.as_deref())?;
    sink.line(METRICS_HEADER)?;
    let mut write_err = None;
    let run = semi_supervised_train_with(&task, &cfg, |m| {
        if write_err.is_none() {
            write_err = sink.line(&m.csv_row()).and_then(|_| sink.flush()).err();
        }
    })?;
    if let Some(e) = write_err {
        return Err(e);
    }
    let summary = format!(
        "final step={} accuracy={} steps={} w_dfl={}",
        cfg.steps, run.accuracy, cfg.steps, cfg.w_dfl
    );
    let to_file = sink.to_file();
    sink.finish(&prov)?;
    if to_file {
        println!("{}", summary);
    } else {
        eprintln!("{}", summary);
    }
    Ok(())
}

fn sweep(a: SweepArgs) -> CliResult<()> {
    let mut prov = Provenance::start("sweep");
    let mut cfg = load_config(a.config.as_deref(), &a.set, &mut prov)?;
    let spec = match (&a.axis, &a.values) {
        (Some(axis), Some(values)) => SweepSpec { axis: SweepAxis::parse(axis)?, values: split_values(values) },
        (None, None) => cfg
            .sweep
            .clone()
            .ok_or_else(|| CliError::input("sweep needs --axis and --values or a `sweep` entry in the config"))?,
        _ => return Err(CliError::input("--axis and --values go together")),
    };
    if spec.values.is_empty() {
        return Err(CliError::input("no sweep values given"));
    }
    let seeds = match (&a.seeds, a.seed) {
        (Some(s), _) => parse_seeds(s)?,
        (None, Some(s)) => vec![s],
        (None, None) if !cfg.seeds.is_empty() => cfg.seeds.clone(),
        (None, None) => cfg.seed.map(|s| vec![s]).ok_or_else(|| {
            CliError::input("sweep needs seeds: pass --seeds/--seed or set `seeds` in the config")
        })?,
    };
    cfg.seeds = seeds.clone();
    prov.add("axis", spec.axis.as_str());
    prov.add("values", &spec.values.join(";"));
    for &s in &seeds {
        prov.seed(s);
    }
    let rows = config_sweep(&cfg, &spec, &seeds);
    let mut sink = Sink::open(a.out.as_deref())?;
    sink.line(SWEEP_HEADER)?;
    let mut ok = 0;
    for r in &rows {
        match (&r.result, r.seed) {
            (Ok(_), Some(_)) => ok += 1,
            (Err(e), Some(seed)) => log::warn!("run {}={} seed {} failed: {}", r.axis, r.value, seed, e),
            _ => {}
        }
        sink.line(&r.csv_row())?;
    }
    let to_file = sink.to_file();
    sink.finish(&prov)?;
    let summary = format!("{} of {} runs succeeded", ok, spec.values.len() * seeds.len());
    if to_file {
        println!("{}", summary);
    } else {
        eprintln!("{}", summary);
    }
    if ok == 0 {
        return Err(CliError::semantic("every sweep run failed"));
    }
    Ok(())
}
