use ndarray::{Array2, Axis};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::gradient_quality;
use crate::logic::{parse_kb, KnowledgeBase};
use crate::valuation::{evaluate_kb, Interpretation, KbEvaluation, ValuationError};

use super::config::{FormulaId, SweepSpec, TrainConfig};
use super::model::{softmax_backward, Forward, Params, TinyModel};
use super::task::{SyntheticTask, CLASSES};
use super::TrainError;

pub const METRICS_HEADER: &str = "step,loss_sup,loss_dfl,accuracy,cons_pct,cu_cons_pct,cu_ant_pct";

const SAME: &str = "same";
const INIT_STREAM: u64 = u64::MAX;

fn class_predicate(k: usize) -> String {
    format!("class{}", k)
}

/// The knowledge base for a formula subset, one formula per class for
/// schemas (1) and (2).
pub fn schema_kb(formulas: &[FormulaId]) -> Result<KnowledgeBase, TrainError> {
    let mut lines = Vec::new();
    for f in formulas {
        match f.0 {
            1 => lines.extend((0..CLASSES).map(|k| {
                let c = class_predicate(k);
                format!("forall x, y: {c}(x) & {c}(y) -> same(x, y)")
            })),
            2 => lines.extend((0..CLASSES).map(|k| {
                let c = class_predicate(k);
                format!("forall x, y: {c}(x) & same(x, y) -> {c}(y)")
            })),
            3 => lines.push("forall x, y: same(x, y) -> same(y, x)".to_string()),
            other => return Err(TrainError::UnknownFormula(other.to_string())),
        }
    }
    Ok(parse_kb(&lines.join("\n"))?)
}

/// Model outputs over a DFL batch, addressed by batch position.
struct ModelView<'a> {
    probs: &'a Array2<f64>,
    same: &'a Array2<f64>,
}

impl Interpretation for ModelView<'_> {
    fn truth(&self, predicate: &str, args: &[usize]) -> Result<f64, ValuationError> {
        match (predicate, args) {
            (SAME, [i, j]) => Ok(self.same[[*i, *j]]),
            (p, [i]) => p
                .strip_prefix("class")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k < self.probs.ncols())
                .map(|k| self.probs[[*i, k]])
                .ok_or_else(|| ValuationError::MissingAtom(format!("{}({})", p, i))),
            (p, _) => Err(ValuationError::MissingAtom(format!("{}{:?}", p, args))),
        }
    }
}

/// Examples used by one optimisation step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepBatch {
    /// Training indices of the supervised examples.
    pub sup: Vec<usize>,
    /// Training indices of the unlabelled DFL objects.
    pub dfl: Vec<usize>,
    /// Same-label pairs as positions into `sup`, diagonal included.
    pub positives: Vec<(usize, usize)>,
    /// Different-label pairs, undersampled to at most `positives.len()`.
    pub negatives: Vec<(usize, usize)>,
}

impl StepBatch {
    /// The batches of `step` depend only on the seed and the step number.
    pub fn draw(task: &SyntheticTask, cfg: &TrainConfig, seed: u64, step: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(step as u64);
        let sup: Vec<usize> = if cfg.batch_sup == 0 || cfg.batch_sup >= task.labeled.len() {
            task.labeled.clone()
        } else {
            sample(&mut rng, task.labeled.len(), cfg.batch_sup)
                .into_iter()
                .map(|i| task.labeled[i])
                .collect()
        };
        let dfl = sample(&mut rng, task.unlabeled.len(), cfg.batch_dfl.min(task.unlabeled.len()))
            .into_iter()
            .map(|i| task.unlabeled[i])
            .collect();
        let mut positives = Vec::new();
        let mut all_neg = Vec::new();
        for i in 0..sup.len() {
            for j in 0..sup.len() {
                if task.train_y[sup[i]] == task.train_y[sup[j]] {
                    positives.push((i, j));
                } else {
                    all_neg.push((i, j));
                }
            }
        }
        let mut picks = sample(&mut rng, all_neg.len(), positives.len().min(all_neg.len())).into_vec();
        picks.sort_unstable();
        let negatives = picks.into_iter().map(|k| all_neg[k]).collect();
        StepBatch { sup, dfl, positives, negatives }
    }
}

/// Per-term parameter gradients of one step, with the loss values.
#[derive(Debug, Clone, PartialEq)]
pub struct TermGradients {
    /// Supervised cross-entropy.
    pub sup: Params,
    /// Normalised DFL loss, before weighting by `w_dfl`.
    pub dfl: Params,
    /// Binary cross-entropy on labelled `same` pairs.
    pub same: Params,
    pub loss_ce: f64,
    pub loss_same: f64,
    pub loss_dfl: f64,
}

impl TermGradients {
    /// `sup + w_dfl * dfl + same`.
    pub fn combined(&self, w_dfl: f64) -> Params {
        let mut g = self.sup.clone();
        g.scaled_add(1.0, &self.same);
        if w_dfl != 0.0 {
            g.scaled_add(w_dfl, &self.dfl);
        }
        g
    }
}

fn rows(x: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    x.select(Axis(0), idx)
}

fn clamped(v: f64, eps: f64) -> bool {
    v < eps || v > 1.0 - eps
}

fn supervised_terms(
    model: &TinyModel,
    task: &SyntheticTask,
    cfg: &TrainConfig,
    batch: &StepBatch,
) -> (Params, Params, f64, f64) {
    let x = rows(&task.train_x, &batch.sup);
    let f = model.forward(&x);
    let n = batch.sup.len() as f64;
    let mut g_logits = f.probs.clone();
    let mut ce = 0.0;
    for (i, &t) in batch.sup.iter().enumerate() {
        let y = task.train_y[t];
        ce -= f.probs[[i, y]].max(f64::MIN_POSITIVE).ln();
        g_logits[[i, y]] -= 1.0;
    }
    g_logits /= n;
    let sup = model.backward(&x, &f, Some(&g_logits), None);

    let s = model.same(&f.hidden, &f.hidden);
    let eps = cfg.clamp;
    let denom = 2.0 * batch.positives.len() as f64;
    let mut g_z = Array2::zeros(s.raw_dim());
    let mut bce = 0.0;
    for &(i, j) in &batch.positives {
        let v = s[[i, j]];
        bce -= v.clamp(eps, 1.0 - eps).ln();
        if !clamped(v, eps) {
            g_z[[i, j]] -= (1.0 - v) / denom;
        }
    }
    for &(i, j) in &batch.negatives {
        let v = s[[i, j]];
        bce -= (1.0 - v.clamp(eps, 1.0 - eps)).ln();
        if !clamped(v, eps) {
            g_z[[i, j]] += v / denom;
        }
    }
    let same = model.backward(&x, &f, None, Some(&g_z));
    (sup, same, ce / n, bce / denom)
}

struct DflPass {
    eval: KbEvaluation,
    forward: Forward,
    same: Array2<f64>,
    x: Array2<f64>,
    norm: f64,
}

fn dfl_pass(
    model: &TinyModel,
    task: &SyntheticTask,
    cfg: &TrainConfig,
    kb: &KnowledgeBase,
    dfl: &[usize],
) -> Result<DflPass, TrainError> {
    let x = rows(&task.train_x, dfl);
    let forward = model.forward(&x);
    let same = model.same(&forward.hidden, &forward.hidden);
    let view = ModelView { probs: &forward.probs, same: &same };
    let positions: Vec<usize> = (0..dfl.len()).collect();
    let eval = evaluate_kb(kb, &view, &positions, &cfg.ops, Some(cfg.clamp))?;
    // Log-domain aggregators sum over instances, the others average.
    let norm = if cfg.ops.aggregator.is_log_domain() {
        eval.nodes.instances.iter().sum::<usize>().max(1) as f64
    } else {
        kb.len().max(1) as f64
    };
    Ok(DflPass { eval, forward, same, x, norm })
}

fn dfl_gradient(model: &TinyModel, cfg: &TrainConfig, pass: &DflPass) -> Params {
    let eps = cfg.clamp;
    let mut g_probs = Array2::zeros(pass.forward.probs.raw_dim());
    let mut g_same = Array2::zeros(pass.same.raw_dim());
    for g in &pass.eval.gradients {
        let d = g.d_loss / pass.norm;
        if g.predicate == SAME {
            let (i, j) = (g.objects[0], g.objects[1]);
            if !clamped(pass.same[[i, j]], eps) {
                g_same[[i, j]] += d;
            }
        } else if let Some(k) = g.predicate.strip_prefix("class").and_then(|k| k.parse::<usize>().ok()) {
            let i = g.objects[0];
            if !clamped(pass.forward.probs[[i, k]], eps) {
                g_probs[[i, k]] += d;
            }
        }
    }
    let g_logits = softmax_backward(&pass.forward.probs, &g_probs);
    let g_z = g_same * &pass.same.mapv(|v| v * (1.0 - v));
    model.backward(&pass.x, &pass.forward, Some(&g_logits), Some(&g_z))
}

/// Gradients of every loss term at `model` for one step's batches.
pub fn step_gradients(
    model: &TinyModel,
    task: &SyntheticTask,
    cfg: &TrainConfig,
    kb: &KnowledgeBase,
    batch: &StepBatch,
) -> Result<TermGradients, TrainError> {
    let (sup, same, loss_ce, loss_same) = supervised_terms(model, task, cfg, batch);
    let pass = dfl_pass(model, task, cfg, kb, &batch.dfl)?;
    Ok(TermGradients {
        sup,
        dfl: dfl_gradient(model, cfg, &pass),
        same,
        loss_ce,
        loss_same,
        loss_dfl: pass.eval.loss / pass.norm,
    })
}

/// One row of the metrics CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRecord {
    pub step: usize,
    /// Cross-entropy plus `same` binary cross-entropy on the labelled batch.
    pub loss_sup: f64,
    /// Normalised DFL loss on the step's unlabelled batch.
    pub loss_dfl: f64,
    /// Test accuracy.
    pub accuracy: f64,
    pub cons_pct: f64,
    pub cu_cons_pct: f64,
    pub cu_ant_pct: f64,
}

impl MetricsRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.step, self.loss_sup, self.loss_dfl, self.accuracy, self.cons_pct, self.cu_cons_pct, self.cu_ant_pct
        )
    }
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub model: TinyModel,
    pub metrics: Vec<MetricsRecord>,
    /// Test accuracy of the final model.
    pub accuracy: f64,
}

/// Fraction of `x` rows whose predicted class equals `y`.
pub fn evaluate(model: &TinyModel, x: &Array2<f64>, y: &[usize]) -> f64 {
    if y.is_empty() {
        return 0.0;
    }
    let hits = model.predict(x).iter().zip(y).filter(|(p, t)| p == t).count();
    hits as f64 / y.len() as f64
}

impl SyntheticTask {
    /// The task a configuration describes, for one seed.
    pub fn from_config(cfg: &TrainConfig, seed: u64) -> Self {
        SyntheticTask::generate(cfg.dim, cfg.train_size, cfg.test_size, cfg.labeled_fraction, cfg.separation, seed)
    }
}

/// The freshly initialised model of a run.
pub fn initial_model(cfg: &TrainConfig, seed: u64) -> TinyModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(INIT_STREAM);
    TinyModel::new(cfg.dim, cfg.hidden, CLASSES, &mut rng)
}

pub fn semi_supervised_train(task: &SyntheticTask, cfg: &TrainConfig) -> Result<TrainRun, TrainError> {
    semi_supervised_train_with(task, cfg, |_| {})
}

/// Trains with plain gradient descent (optionally with momentum), calling
/// `observe` with each metrics record as it is produced. Records are taken
/// at step 0, every `eval_every` steps and after the last step.
pub fn semi_supervised_train_with<F>(
    task: &SyntheticTask,
    cfg: &TrainConfig,
    mut observe: F,
) -> Result<TrainRun, TrainError>
where
    F: FnMut(&MetricsRecord),
{
    let seed = cfg.seed.ok_or(TrainError::MissingSeed)?;
    cfg.validate()?;
    if task.dim() != cfg.dim {
        return Err(TrainError::config(0, format!("task has dimension {}, config says {}", task.dim(), cfg.dim)));
    }
    let kb = schema_kb(&cfg.formulas)?;
    let mut model = initial_model(cfg, seed);
    let mut velocity = model.params.zeros_like();
    let mut metrics = Vec::new();
    for step in 0..=cfg.steps {
        let batch = StepBatch::draw(task, cfg, seed, step);
        let record = step % cfg.eval_every == 0 || step == cfg.steps;
        let learn = step < cfg.steps;
        if !record && !learn {
            continue;
        }
        let (sup, same, loss_ce, loss_same) = supervised_terms(&model, task, cfg, &batch);
        let pass = dfl_pass(&model, task, cfg, &kb, &batch.dfl)?;
        if record {
            let labels = |p: &str, objs: &[usize]| -> bool {
                let y = |i: usize| task.train_y[batch.dfl[i]];
                match p {
                    SAME => y(objs[0]) == y(objs[1]),
                    _ => p.strip_prefix("class").and_then(|k| k.parse::<usize>().ok()) == Some(y(objs[0])),
                }
            };
            let q = gradient_quality(&kb, &pass.eval, &labels);
            let m = MetricsRecord {
                step,
                loss_sup: loss_ce + loss_same,
                loss_dfl: pass.eval.loss / pass.norm,
                accuracy: evaluate(&model, &task.test_x, &task.test_y),
                cons_pct: q.cons_pct,
                cu_cons_pct: q.cu_cons_pct,
                cu_ant_pct: q.cu_ant_pct,
            };
            log::debug!("{}", m.csv_row());
            observe(&m);
            metrics.push(m);
        }
        if learn {
            let mut g = sup;
            g.scaled_add(1.0, &same);
            if cfg.w_dfl != 0.0 {
                g.scaled_add(cfg.w_dfl, &dfl_gradient(&model, cfg, &pass));
            }
            if cfg.momentum > 0.0 {
                velocity.scale(cfg.momentum);
                velocity.scaled_add(1.0, &g);
                model.params.scaled_add(-cfg.lr, &velocity);
            } else {
                model.params.scaled_add(-cfg.lr, &g);
            }
        }
    }
    let accuracy = evaluate(&model, &task.test_x, &task.test_y);
    Ok(TrainRun { model, metrics, accuracy })
}

/// Generates the task for `seed` and trains on it.
pub fn train_seed(cfg: &TrainConfig, seed: u64) -> Result<TrainRun, TrainError> {
    let mut c = cfg.clone();
    c.seed = Some(seed);
    semi_supervised_train(&SyntheticTask::from_config(&c, seed), &c)
}

/// The final metrics of one sweep run, or the mean over seeds when `seed`
/// is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis: String,
    pub value: String,
    pub seed: Option<u64>,
    pub result: Result<MetricsRecord, String>,
}

pub const SWEEP_HEADER: &str = "axis,value,seed,step,loss_sup,loss_dfl,accuracy,cons_pct,cu_cons_pct,cu_ant_pct,error";

impl SweepRow {
    pub fn csv_row(&self) -> String {
        let seed = self.seed.map_or_else(|| "mean".to_string(), |s| s.to_string());
        let value = if self.value.contains(',') { format!("\"{}\"", self.value) } else { self.value.clone() };
        match &self.result {
            Ok(m) => format!("{},{},{},{},", self.axis, value, seed, m.csv_row()),
            Err(e) => format!("{},{},{},,,,,,,,\"{}\"", self.axis, value, seed, e.replace('"', "'")),
        }
    }
}

fn mean_of(xs: impl Iterator<Item = f64>) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs.filter(|x| !x.is_nan()) {
        s += x;
        n += 1;
    }
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// One full run per `(value, seed)`, in parallel, followed by a mean row
/// per value. A failing run yields an error row and the sweep carries on.
pub fn config_sweep(base: &TrainConfig, spec: &SweepSpec, seeds: &[u64]) -> Vec<SweepRow> {
    let jobs: Vec<(usize, u64)> = (0..spec.values.len())
        .flat_map(|v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let results: Vec<Result<MetricsRecord, String>> = jobs
        .par_iter()
        .map(|&(v, seed)| {
            let cfg = base.with_axis(spec.axis, &spec.values[v]).map_err(|e| e.to_string())?;
            let run = train_seed(&cfg, seed).map_err(|e| e.to_string())?;
            run.metrics.last().copied().ok_or_else(|| "run produced no metrics".to_string())
        })
        .collect();
    let axis = spec.axis.as_str().to_string();
    let mut rows = Vec::new();
    for (v, value) in spec.values.iter().enumerate() {
        let runs: Vec<&Result<MetricsRecord, String>> =
            jobs.iter().zip(&results).filter(|((jv, _), _)| *jv == v).map(|(_, r)| r).collect();
        for ((_, seed), r) in jobs.iter().filter(|(jv, _)| *jv == v).zip(&runs) {
            rows.push(SweepRow { axis: axis.clone(), value: value.clone(), seed: Some(*seed), result: (*r).clone() });
        }
        let ok: Vec<&MetricsRecord> = runs.iter().filter_map(|r| r.as_ref().ok()).collect();
        let result = if ok.is_empty() {
            Err("no run succeeded".to_string())
        } else {
            Ok(MetricsRecord {
                step: ok[0].step,
                loss_sup: mean_of(ok.iter().map(|m| m.loss_sup)),
                loss_dfl: mean_of(ok.iter().map(|m| m.loss_dfl)),
                accuracy: mean_of(ok.iter().map(|m| m.accuracy)),
                cons_pct: mean_of(ok.iter().map(|m| m.cons_pct)),
                cu_cons_pct: mean_of(ok.iter().map(|m| m.cu_cons_pct)),
                cu_ant_pct: mean_of(ok.iter().map(|m| m.cu_ant_pct)),
            })
        };
        rows.push(SweepRow { axis: axis.clone(), value: value.clone(), seed: None, result });
    }
    rows
}
