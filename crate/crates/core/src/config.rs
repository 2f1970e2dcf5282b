//! Training configuration and its flat `key = value` file format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HrcfError, Result};
use crate::objective::{ObjectiveParams, Reduction};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub layers: usize,
    pub margin: f64,
    pub lambda: f64,
    pub lr: f64,
    pub weight_decay: f64,
    pub epochs: usize,
    /// Triplets per optimizer step.
    pub batch_size: usize,
    pub init_sigma: f64,
    pub include_layer0: bool,
    pub seed: u64,
    pub eval_ks: Vec<usize>,
    pub eval_every: usize,
    pub head_fraction: f64,
    pub train_fraction: f64,
    pub rating_threshold: f64,
    pub loss_reduction: Reduction,
    /// Exponential-map updates at each point instead of the tangent shortcut.
    pub full_rsgd: bool,
    /// Keep wall-clock timings out of the metrics log so runs compare byte for byte.
    pub reproducible: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 50,
            layers: 3,
            margin: 0.15,
            lambda: 20.0,
            lr: 0.001,
            weight_decay: 5e-4,
            epochs: 500,
            batch_size: 4096,
            init_sigma: 0.1,
            include_layer0: false,
            seed: 42,
            eval_ks: vec![10, 20],
            eval_every: 10,
            head_fraction: 0.2,
            train_fraction: 0.8,
            rating_threshold: 4.0,
            loss_reduction: Reduction::Mean,
            full_rsgd: false,
            reproducible: false,
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

impl TrainConfig {
    /// Sets one field from its textual form. Keys match the field names;
    /// `wd` is accepted for `weight_decay`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let bad = || HrcfError::Config(format!("bad value for {key}: {value:?}"));
        macro_rules! num {
            ($field:expr) => {
                $field = value.parse().map_err(|_| bad())?
            };
        }
        match key.trim() {
            "dim" => num!(self.dim),
            "layers" => num!(self.layers),
            "margin" => num!(self.margin),
            "lambda" => num!(self.lambda),
            "lr" => num!(self.lr),
            "weight_decay" | "wd" => num!(self.weight_decay),
            "epochs" => num!(self.epochs),
            "batch_size" => num!(self.batch_size),
            "init_sigma" => num!(self.init_sigma),
            "seed" => num!(self.seed),
            "eval_every" => num!(self.eval_every),
            "head_fraction" => num!(self.head_fraction),
            "train_fraction" => num!(self.train_fraction),
            "rating_threshold" => num!(self.rating_threshold),
            "include_layer0" => self.include_layer0 = parse_bool(value).ok_or_else(bad)?,
            "full_rsgd" => self.full_rsgd = parse_bool(value).ok_or_else(bad)?,
            "reproducible" => self.reproducible = parse_bool(value).ok_or_else(bad)?,
            "loss_reduction" => self.loss_reduction = value.parse()?,
            "eval_ks" => {
                self.eval_ks = value
                    .split(',')
                    .map(|k| k.trim().parse::<usize>().map_err(|_| bad()))
                    .collect::<Result<_>>()?
            }
            other => return Err(HrcfError::Config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| HrcfError::Config(format!("line {}: expected key = value", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HrcfError::Config(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn to_text(&self) -> String {
        let ks: Vec<String> = self.eval_ks.iter().map(|k| k.to_string()).collect();
        let reduction = match self.loss_reduction {
            Reduction::Mean => "mean",
            Reduction::Sum => "sum",
        };
        format!(
            "dim = {}\nlayers = {}\nmargin = {}\nlambda = {}\nlr = {}\nweight_decay = {}\n\
             epochs = {}\nbatch_size = {}\ninit_sigma = {}\ninclude_layer0 = {}\nseed = {}\n\
             eval_ks = {}\neval_every = {}\nhead_fraction = {}\ntrain_fraction = {}\n\
             rating_threshold = {}\nloss_reduction = {}\nfull_rsgd = {}\nreproducible = {}\n",
            self.dim,
            self.layers,
            self.margin,
            self.lambda,
            self.lr,
            self.weight_decay,
            self.epochs,
            self.batch_size,
            self.init_sigma,
            self.include_layer0,
            self.seed,
            ks.join(","),
            self.eval_every,
            self.head_fraction,
            self.train_fraction,
            self.rating_threshold,
            reduction,
            self.full_rsgd,
            self.reproducible,
        )
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(HrcfError::Config(msg));
        if self.dim < 2 {
            return fail(format!("dim must be >= 2, got {}", self.dim));
        }
        if self.layers == 0 {
            return fail("layers must be >= 1".into());
        }
        if !(self.margin > 0.0) {
            return fail(format!("margin must be > 0, got {}", self.margin));
        }
        if !(self.lambda >= 0.0) {
            return fail(format!("lambda must be >= 0, got {}", self.lambda));
        }
        if !(self.lr > 0.0) {
            return fail(format!("lr must be > 0, got {}", self.lr));
        }
        if !(self.weight_decay >= 0.0) {
            return fail(format!("weight_decay must be >= 0, got {}", self.weight_decay));
        }
        if self.batch_size == 0 || self.eval_every == 0 {
            return fail("batch_size and eval_every must be >= 1".into());
        }
        if !(self.init_sigma > 0.0) {
            return fail(format!("init_sigma must be > 0, got {}", self.init_sigma));
        }
        if self.eval_ks.is_empty() || self.eval_ks.contains(&0) {
            return fail("eval_ks must be non-empty positive cutoffs".into());
        }
        if !(self.head_fraction > 0.0 && self.head_fraction < 1.0) {
            return fail(format!("head_fraction must lie in (0, 1), got {}", self.head_fraction));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return fail(format!("train_fraction must lie in (0, 1), got {}", self.train_fraction));
        }
        Ok(())
    }

    pub fn objective(&self) -> ObjectiveParams {
        ObjectiveParams {
            margin: self.margin,
            lambda: self.lambda,
            layers: self.layers,
            include_layer0: self.include_layer0,
            reduction: self.loss_reduction,
        }
    }
}
