use std::fmt;

use crate::operators::{Implication, OperatorConfig};

use super::TrainError;

/// Which member of the three-formula schema a run uses.
///
/// 1. `forall x, y: k(x) & k(y) -> same(x, y)` for each class `k`
/// 2. `forall x, y: k(x) & same(x, y) -> k(y)` for each class `k`
/// 3. `forall x, y: same(x, y) -> same(y, x)`
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FormulaId(pub u8);

/// Parses a formula subset written `1,2,3`, `1+3` or `13`.
pub fn parse_formula_subset(text: &str) -> Result<Vec<FormulaId>, TrainError> {
    let mut out = Vec::new();
    for c in text.chars() {
        match c {
            '1'..='3' => {
                let id = FormulaId(c as u8 - b'0');
                if !out.contains(&id) {
                    out.push(id);
                }
            }
            ',' | '+' | ' ' => {}
            _ => return Err(TrainError::UnknownFormula(text.trim().to_string())),
        }
    }
    if out.is_empty() {
        return Err(TrainError::UnknownFormula(text.trim().to_string()));
    }
    out.sort();
    Ok(out)
}

fn subset_string(ids: &[FormulaId]) -> String {
    ids.iter().map(|f| f.0.to_string()).collect::<Vec<_>>().join(",")
}

/// What a sweep varies between runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    TNorm,
    Aggregator,
    Implication,
    S,
    B0,
    WDfl,
    FormulaSubset,
}

impl SweepAxis {
    pub fn parse(name: &str) -> Result<Self, TrainError> {
        Ok(match name.trim() {
            "tnorm" => SweepAxis::TNorm,
            "aggregator" => SweepAxis::Aggregator,
            "implication" => SweepAxis::Implication,
            "s" => SweepAxis::S,
            "b0" => SweepAxis::B0,
            "w_dfl" => SweepAxis::WDfl,
            "formulas" | "formula_subset" | "formula-subset" => SweepAxis::FormulaSubset,
            other => return Err(TrainError::config(0, format!("unknown sweep axis `{}`", other))),
        })
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SweepAxis::TNorm => "tnorm",
            SweepAxis::Aggregator => "aggregator",
            SweepAxis::Implication => "implication",
            SweepAxis::S => "s",
            SweepAxis::B0 => "b0",
            SweepAxis::WDfl => "w_dfl",
            SweepAxis::FormulaSubset => "formulas",
        }
    }
}

/// Splits a sweep value list. Lists containing `;` split on it, so that
/// operator specs with commas can be swept; otherwise commas separate.
pub fn split_values(text: &str) -> Vec<String> {
    let sep = if text.contains(';') { ';' } else { ',' };
    text.split(sep).map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect()
}

/// Parses `1,2,3` or a range `1..5` (inclusive).
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, TrainError> {
    let bad = || TrainError::config(0, format!("bad seed list `{}`", text.trim()));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    let seeds: Vec<u64> = text
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    if seeds.is_empty() {
        return Err(bad());
    }
    Ok(seeds)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub values: Vec<String>,
}

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub ops: OperatorConfig,
    pub w_dfl: f64,
    pub labeled_fraction: f64,
    /// Labelled examples per supervised step; 0 uses all of them.
    pub batch_sup: usize,
    /// Objects sampled for each DFL grounding.
    pub batch_dfl: usize,
    pub lr: f64,
    pub momentum: f64,
    pub steps: usize,
    pub eval_every: usize,
    pub seed: Option<u64>,
    pub formulas: Vec<FormulaId>,
    pub hidden: usize,
    pub dim: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub separation: f64,
    /// Model outputs are clamped into `[clamp, 1 - clamp]` before valuation.
    pub clamp: f64,
    /// Seeds for sweeps; a single run uses `seed`.
    pub seeds: Vec<u64>,
    pub sweep: Option<SweepSpec>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            ops: OperatorConfig::dpfl(),
            w_dfl: 0.0,
            labeled_fraction: 0.01,
            batch_sup: 0,
            batch_dfl: 16,
            lr: 0.05,
            momentum: 0.0,
            steps: 1500,
            eval_every: 100,
            seed: None,
            formulas: vec![FormulaId(1), FormulaId(2), FormulaId(3)],
            hidden: 32,
            dim: 16,
            train_size: 5000,
            test_size: 1000,
            separation: 1.0,
            clamp: crate::valuation::MODEL_EPSILON,
            seeds: Vec::new(),
            sweep: None,
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, TrainError> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| TrainError::config(0, format!("`{}` expects a number, got `{}`", key, value.trim())))
}

fn parse_usize(key: &str, value: &str) -> Result<usize, TrainError> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| TrainError::config(0, format!("`{}` expects a non-negative integer, got `{}`", key, value.trim())))
}

impl TrainConfig {
    /// Parses flat `key=value` text; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, TrainError> {
        let mut cfg = TrainConfig::default();
        let mut axis = None;
        let mut values = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| TrainError::config(i + 1, format!("expected key=value, got `{}`", line)))?;
            let (k, v) = (k.trim(), v.trim());
            let at_line = |e: TrainError| e.at_line(i + 1);
            match k {
                "sweep" | "axis" => axis = Some(SweepAxis::parse(v).map_err(at_line)?),
                "values" => values = Some(split_values(v)),
                _ => cfg.set(k, v).map_err(at_line)?,
            }
        }
        match (axis, values) {
            (Some(axis), Some(values)) => cfg.sweep = Some(SweepSpec { axis, values }),
            (None, None) => {}
            _ => return Err(TrainError::config(0, "a sweep needs both `sweep` and `values`")),
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key. Operator keys follow the operator grammar.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), TrainError> {
        if self.ops.apply(key, value)? {
            return Ok(());
        }
        match key {
            "w_dfl" => self.w_dfl = parse_f64(key, value)?,
            "lr" => self.lr = parse_f64(key, value)?,
            "momentum" => self.momentum = parse_f64(key, value)?,
            "labeled_fraction" => self.labeled_fraction = parse_f64(key, value)?,
            "batch_sup" => self.batch_sup = parse_usize(key, value)?,
            "batch_dfl" | "batch" => self.batch_dfl = parse_usize(key, value)?,
            "steps" => self.steps = parse_usize(key, value)?,
            "eval_every" => self.eval_every = parse_usize(key, value)?,
            "seed" => {
                self.seed = Some(
                    value
                        .trim()
                        .parse()
                        .map_err(|_| TrainError::config(0, format!("bad seed `{}`", value.trim())))?,
                )
            }
            "seeds" => self.seeds = parse_seeds(value)?,
            "formulas" => self.formulas = parse_formula_subset(value)?,
            "hidden" => self.hidden = parse_usize(key, value)?,
            "dim" => self.dim = parse_usize(key, value)?,
            "train_size" => self.train_size = parse_usize(key, value)?,
            "test_size" => self.test_size = parse_usize(key, value)?,
            "separation" => self.separation = parse_f64(key, value)?,
            "clamp" => self.clamp = parse_f64(key, value)?,
            "s" | "b0" => self.set_sigmoid_param(key, parse_f64(key, value)?)?,
            _ => return Err(TrainError::config(0, format!("unknown key `{}`", key))),
        }
        Ok(())
    }

    fn set_sigmoid_param(&mut self, key: &str, v: f64) -> Result<(), TrainError> {
        let Implication::Sigmoidal { base, s, b0 } = &self.ops.implication else {
            return Err(TrainError::config(
                0,
                format!("`{}` needs a sigmoidal implication, have `{}`", key, self.ops.implication),
            ));
        };
        let (s, b0) = if key == "s" { (v, *b0) } else { (*s, v) };
        self.ops.implication = Implication::sigmoidal((**base).clone(), s, b0)?;
        Ok(())
    }

    /// Applies one sweep value along `axis`.
    pub fn with_axis(&self, axis: SweepAxis, value: &str) -> Result<Self, TrainError> {
        let mut c = self.clone();
        match axis {
            SweepAxis::TNorm => c.set("tnorm", value)?,
            SweepAxis::Aggregator => c.set("aggregator", value)?,
            SweepAxis::Implication => c.set("implication", value)?,
            SweepAxis::S => c.set("s", value)?,
            SweepAxis::B0 => c.set("b0", value)?,
            SweepAxis::WDfl => c.set("w_dfl", value)?,
            SweepAxis::FormulaSubset => c.set("formulas", value)?,
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), TrainError> {
        let fail = |m: &str| Err(TrainError::config(0, m.to_string()));
        if !(self.w_dfl >= 0.0) {
            return fail("w_dfl must be >= 0");
        }
        if !(self.lr > 0.0) {
            return fail("lr must be > 0");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return fail("momentum must lie in [0, 1)");
        }
        if !(self.labeled_fraction > 0.0 && self.labeled_fraction <= 1.0) {
            return fail("labeled_fraction must lie in (0, 1]");
        }
        if self.batch_dfl < 1 || self.hidden < 1 || self.dim < 1 || self.test_size < 1 {
            return fail("batch_dfl, hidden, dim and test_size must be positive");
        }
        if self.eval_every < 1 {
            return fail("eval_every must be positive");
        }
        if !(self.clamp >= 0.0 && self.clamp < 0.5) {
            return fail("clamp must lie in [0, 0.5)");
        }
        if !(self.separation >= 0.0) {
            return fail("separation must be >= 0");
        }
        let labeled = (self.labeled_fraction * self.train_size as f64).round() as usize;
        if labeled < 1 {
            return fail("labeled_fraction leaves no labelled examples");
        }
        if self.train_size < labeled + self.batch_dfl {
            return fail("train_size is too small for the labelled split and the DFL batch");
        }
        Ok(())
    }

    /// Canonical `key=value` text; identical configurations give identical
    /// text, which is what the run manifest hashes.
    pub fn canonical(&self) -> String {
        let mut lines = vec![
            format!("tnorm={}", self.ops.tnorm),
            format!("tconorm={}", self.ops.tconorm),
            format!("implication={}", self.ops.implication),
            format!("aggregator={}", self.ops.aggregator),
            format!("w_dfl={}", self.w_dfl),
            format!("labeled_fraction={}", self.labeled_fraction),
            format!("batch_sup={}", self.batch_sup),
            format!("batch_dfl={}", self.batch_dfl),
            format!("lr={}", self.lr),
            format!("momentum={}", self.momentum),
            format!("steps={}", self.steps),
            format!("eval_every={}", self.eval_every),
            format!("formulas={}", subset_string(&self.formulas)),
            format!("hidden={}", self.hidden),
            format!("dim={}", self.dim),
            format!("train_size={}", self.train_size),
            format!("test_size={}", self.test_size),
            format!("separation={}", self.separation),
            format!("clamp={}", self.clamp),
        ];
        if let Some(seed) = self.seed {
            lines.push(format!("seed={}", seed));
        }
        if !self.seeds.is_empty() {
            let s: Vec<String> = self.seeds.iter().map(|s| s.to_string()).collect();
            lines.push(format!("seeds={}", s.join(",")));
        }
        if let Some(sw) = &self.sweep {
            lines.push(format!("sweep={}", sw.axis.as_str()));
            lines.push(format!("values={};", sw.values.join(";")));
        }
        lines.join("\n") + "\n"
    }
}

impl fmt::Display for TrainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}
