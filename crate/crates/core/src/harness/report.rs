//! Experiment configuration and reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bqf::Form;
use crate::composition::CompositionContext;
use crate::error::{Error, Result};
use crate::harness::lambda::LambdaSpec;
use crate::numtheory::{gcd, totient};

fn one_u() -> u64 {
    1
}

fn one_i() -> i64 {
    1
}

fn default_lambda() -> LambdaSpec {
    LambdaSpec::constant_one()
}

fn default_p_max() -> u64 {
    1_000_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub form: Form,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ctx: Option<CompositionContext>,
    pub x: u64,
    #[serde(default = "one_u")]
    pub q: u64,
    #[serde(default = "one_i")]
    pub a: i64,
    #[serde(default = "one_i")]
    pub b: i64,
    #[serde(default = "default_lambda")]
    pub lambda: LambdaSpec,
    /// Distribution level; `⌊√X⌋` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    /// Index into `characters_mod(q)`; 0 is the principal character.
    #[serde(default)]
    pub character: usize,
    #[serde(default = "default_p_max")]
    pub p_max: u64,
}

impl ExperimentConfig {
    pub fn new(form: Form, x: u64) -> Self {
        ExperimentConfig {
            form,
            ctx: None,
            x,
            q: 1,
            a: 1,
            b: 1,
            lambda: default_lambda(),
            d: None,
            y: None,
            z: None,
            character: 0,
            p_max: default_p_max(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.form.require_primitive_definite()?;
        let bad = |m: String| Err(Error::Precondition(m));
        if self.q == 0 {
            return bad("q must be at least 1".into());
        }
        if self.q > 1_000_000 {
            return bad(format!("q = {} is above 10^6", self.q));
        }
        if self.x < self.q {
            return bad(format!("X = {} must be at least q = {}", self.x, self.q));
        }
        if self.x > crate::arithmetic::sieve::MAX_LIMIT {
            return bad(format!("X = {} is above 2^34", self.x));
        }
        if self.character as u64 >= totient(self.q) {
            return bad(format!("character index {} out of range for q = {}", self.character, self.q));
        }
        if let Some(ctx) = &self.ctx {
            if ctx.form != self.form {
                return bad(format!("context is for {:?}, config form is {:?}", ctx.form, self.form));
            }
        }
        if let Some(d) = self.d {
            if d == 0 || d > self.x {
                return bad(format!("D = {d} must lie in [1, X]"));
            }
        }
        self.lambda.validate()
    }

    pub fn require_coprime_a(&self) -> Result<()> {
        if gcd(self.a, self.q as i64) != 1 {
            return Err(Error::Precondition(format!("gcd(a, q) = gcd({}, {}) ≠ 1", self.a, self.q)));
        }
        Ok(())
    }

    pub fn require_coprime_b(&self) -> Result<()> {
        if gcd(self.b, self.q as i64) != 1 {
            return Err(Error::Precondition(format!("gcd(b, q) = gcd({}, {}) ≠ 1", self.b, self.q)));
        }
        Ok(())
    }

    pub fn level(&self) -> u64 {
        self.d.unwrap_or_else(|| self.x.isqrt())
    }
}

/// A named set of numbers; `None` stands for an undefined ratio.
pub type Row = BTreeMap<String, Option<f64>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub quantities: Row,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<Row>,
    /// Wall-clock seconds per phase; only filled when asked for, so that
    /// reports stay byte-identical otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtimes: Option<BTreeMap<String, f64>>,
}

pub fn version_stamp() -> String {
    format!("qform-core {}", env!("CARGO_PKG_VERSION"))
}

fn cell(v: &Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: &ExperimentConfig) -> Self {
        ExperimentReport {
            experiment: experiment.to_string(),
            version: version_stamp(),
            config: config.clone(),
            quantities: Row::new(),
            rows: Vec::new(),
            runtimes: None,
        }
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.quantities.insert(name.to_string(), value.is_finite().then_some(value));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.quantities.get(name).copied().flatten()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `quantity,value` lines, followed by the rows as a table when present.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,value\n");
        for (k, v) in &self.quantities {
            let _ = writeln!(out, "{k},{}", cell(v));
        }
        if let Some(first) = self.rows.first() {
            out.push('\n');
            let keys: Vec<&String> = first.keys().collect();
            let _ = writeln!(out, "{}", keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(","));
            for row in &self.rows {
                let line: Vec<String> = keys.iter().map(|k| row.get(*k).map(cell).unwrap_or_default()).collect();
                let _ = writeln!(out, "{}", line.join(","));
            }
        }
        out
    }
}

pub fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 { f64::NAN } else { num / den }
}
