//! Decaying potentials on the half-line.
//!
//! A [`PotentialSpec`] is a plain description (family tag, parameters,
//! support start) that round-trips through the JSON document format
//! `{"family": ..., "params": {...}, "support_start": s}`. A [`Potential`]
//! is the evaluable object built from it; it also owns the lazily grown
//! table of cumulative masses `I(n) = ∫_0^n |V|` at integer checkpoints.

use std::sync::RwLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_split, QuadTolerance};

/// Rule generating the cell values of a `step_sequence` potential.
#[derive(Debug, Clone, PartialEq)]
pub enum SequenceRule {
    /// `v_n = c * (n + 1)^(-exponent)`.
    Power { c: f64, exponent: f64 },
    /// Explicit values `v_0, v_1, ...`; zero past the end of the list.
    Values(Vec<f64>),
}

impl SequenceRule {
    fn value(&self, n: usize) -> f64 {
        match self {
            SequenceRule::Power { c, exponent } => c * ((n + 1) as f64).powf(-exponent),
            SequenceRule::Values(v) => v.get(n).copied().unwrap_or(0.0),
        }
    }
}

/// A constant plateau `height` on `[start, start + width)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub start: f64,
    pub width: f64,
    pub height: f64,
}

impl Bump {
    fn end(&self) -> f64 {
        self.start + self.width
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Zero,
    /// `c * exp(-lambda * x)`
    Exponential {
        c: f64,
        lambda: f64,
    },
    /// `c * (1 + x)^(-gamma)`
    Power {
        c: f64,
        gamma: f64,
    },
    /// `c * sin(omega * x) / (1 + x)^gamma`
    WignerVonNeumann {
        c: f64,
        omega: f64,
        gamma: f64,
    },
    /// `V(x) = v_floor(x)`
    StepSequence {
        rule: SequenceRule,
    },
    /// Sum of non-overlapping plateaus.
    BumpTrain {
        bumps: Vec<Bump>,
    },
    /// Step potential with `v_n = c * (n + 1)^(-eta) * u_n`, `u_n` uniform on
    /// `[0, 1)` drawn from a ChaCha stream keyed by `seed`.
    RandomDecaying {
        c: f64,
        eta: f64,
        seed: u64,
    },
}

impl Family {
    pub fn tag(&self) -> &'static str {
        match self {
            Family::Zero => "zero",
            Family::Exponential { .. } => "exponential",
            Family::Power { .. } => "power",
            Family::WignerVonNeumann { .. } => "wigner_von_neumann",
            Family::StepSequence { .. } => "step_sequence",
            Family::BumpTrain { .. } => "bump_train",
            Family::RandomDecaying { .. } => "random_decaying",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Value", into = "Value")]
pub struct PotentialSpec {
    pub family: Family,
    /// The potential vanishes on `(0, support_start)`.
    pub support_start: f64,
}

impl PotentialSpec {
    pub fn new(family: Family) -> Self {
        Self {
            family,
            support_start: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self::new(Family::Zero)
    }

    pub fn exponential(c: f64, lambda: f64) -> Self {
        Self::new(Family::Exponential { c, lambda })
    }

    pub fn power(c: f64, gamma: f64) -> Self {
        Self::new(Family::Power { c, gamma })
    }

    pub fn wigner_von_neumann(c: f64, omega: f64, gamma: f64) -> Self {
        Self::new(Family::WignerVonNeumann { c, omega, gamma })
    }

    pub fn step_power(c: f64, exponent: f64) -> Self {
        Self::new(Family::StepSequence {
            rule: SequenceRule::Power { c, exponent },
        })
    }

    pub fn step_values(values: Vec<f64>) -> Self {
        Self::new(Family::StepSequence {
            rule: SequenceRule::Values(values),
        })
    }

    pub fn bumps(bumps: Vec<Bump>) -> Self {
        Self::new(Family::BumpTrain { bumps })
    }

    /// A single plateau of height `c` on `[0, width)`.
    pub fn constant_on(c: f64, width: f64) -> Self {
        Self::bumps(vec![Bump {
            start: 0.0,
            width,
            height: c,
        }])
    }

    pub fn random_decaying(c: f64, eta: f64, seed: u64) -> Self {
        Self::new(Family::RandomDecaying { c, eta, seed })
    }

    pub fn with_support_start(mut self, s: f64) -> Self {
        self.support_start = s;
        self
    }

    /// Checks family-specific constraints, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        fn finite(field: &str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::spec(field, format!("must be finite, got {v}")))
            }
        }
        fn positive(field: &str, v: f64) -> Result<()> {
            finite(field, v)?;
            if v > 0.0 {
                Ok(())
            } else {
                Err(Error::spec(field, format!("must be > 0, got {v}")))
            }
        }
        fn nonnegative(field: &str, v: f64) -> Result<()> {
            finite(field, v)?;
            if v >= 0.0 {
                Ok(())
            } else {
                Err(Error::spec(field, format!("must be >= 0, got {v}")))
            }
        }

        nonnegative("support_start", self.support_start)?;
        match &self.family {
            Family::Zero => Ok(()),
            Family::Exponential { c, lambda } => {
                finite("params.c", *c)?;
                positive("params.lambda", *lambda)
            }
            Family::Power { c, gamma } => {
                finite("params.c", *c)?;
                positive("params.gamma", *gamma)
            }
            Family::WignerVonNeumann { c, omega, gamma } => {
                finite("params.c", *c)?;
                positive("params.omega", *omega)?;
                positive("params.gamma", *gamma)
            }
            Family::StepSequence { rule } => match rule {
                SequenceRule::Power { c, exponent } => {
                    finite("params.rule.c", *c)?;
                    nonnegative("params.rule.exponent", *exponent)
                }
                SequenceRule::Values(values) => {
                    for (i, v) in values.iter().enumerate() {
                        finite(&format!("params.rule.values[{i}]"), *v)?;
                    }
                    Ok(())
                }
            },
            Family::BumpTrain { bumps } => {
                let mut sorted = bumps.clone();
                for (i, b) in bumps.iter().enumerate() {
                    nonnegative(&format!("params.bumps[{i}].start"), b.start)?;
                    positive(&format!("params.bumps[{i}].width"), b.width)?;
                    finite(&format!("params.bumps[{i}].height"), b.height)?;
                }
                sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
                for pair in sorted.windows(2) {
                    if pair[1].start < pair[0].end() {
                        return Err(Error::spec(
                            "params.bumps",
                            format!("bumps starting at {} and {} overlap", pair[0].start, pair[1].start),
                        ));
                    }
                }
                Ok(())
            }
            Family::RandomDecaying { c, eta, .. } => {
                finite("params.c", *c)?;
                nonnegative("params.eta", *eta)
            }
        }
    }

    pub fn to_json(&self) -> Value {
        let params = match &self.family {
            Family::Zero => json!({}),
            Family::Exponential { c, lambda } => json!({ "c": c, "lambda": lambda }),
            Family::Power { c, gamma } => json!({ "c": c, "gamma": gamma }),
            Family::WignerVonNeumann { c, omega, gamma } => {
                json!({ "c": c, "omega": omega, "gamma": gamma })
            }
            Family::StepSequence { rule } => match rule {
                SequenceRule::Power { c, exponent } => {
                    json!({ "rule": { "kind": "power", "c": c, "exponent": exponent } })
                }
                SequenceRule::Values(v) => json!({ "rule": { "kind": "values", "values": v } }),
            },
            Family::BumpTrain { bumps } => json!({ "bumps": bumps }),
            Family::RandomDecaying { c, eta, seed } => {
                json!({ "c": c, "eta": eta, "seed": seed })
            }
        };
        json!({
            "family": self.family.tag(),
            "params": params,
            "support_start": self.support_start,
        })
    }

    pub fn from_json(doc: &Value) -> Result<Self> {
        let obj = doc
            .as_object()
            .ok_or_else(|| Error::spec("<root>", "expected an object"))?;
        for key in obj.keys() {
            if !matches!(key.as_str(), "family" | "params" | "support_start") {
                return Err(Error::spec(key.as_str(), "unknown field"));
            }
        }
        let tag = obj
            .get("family")
            .ok_or_else(|| Error::spec("family", "missing"))?
            .as_str()
            .ok_or_else(|| Error::spec("family", "expected a string"))?;
        let empty = Map::new();
        let params = match obj.get("params") {
            None | Some(Value::Null) => &empty,
            Some(Value::Object(m)) => m,
            Some(_) => return Err(Error::spec("params", "expected an object")),
        };
        let support_start = match obj.get("support_start") {
            None | Some(Value::Null) => 0.0,
            Some(v) => v
                .as_f64()
                .ok_or_else(|| Error::spec("support_start", "expected a number"))?,
        };

        let num = |name: &str| -> Result<f64> {
            params
                .get(name)
                .ok_or_else(|| Error::spec(format!("params.{name}"), "missing"))?
                .as_f64()
                .ok_or_else(|| Error::spec(format!("params.{name}"), "expected a number"))
        };

        let family = match tag {
            "zero" => Family::Zero,
            "exponential" => Family::Exponential {
                c: num("c")?,
                lambda: num("lambda")?,
            },
            "power" => Family::Power {
                c: num("c")?,
                gamma: num("gamma")?,
            },
            "wigner_von_neumann" => Family::WignerVonNeumann {
                c: num("c")?,
                omega: num("omega")?,
                gamma: num("gamma")?,
            },
            "step_sequence" => Family::StepSequence {
                rule: parse_rule(params.get("rule"))?,
            },
            "bump_train" => {
                let raw = params
                    .get("bumps")
                    .ok_or_else(|| Error::spec("params.bumps", "missing"))?;
                let bumps: Vec<Bump> =
                    serde_json::from_value(raw.clone()).map_err(|e| Error::spec("params.bumps", e.to_string()))?;
                Family::BumpTrain { bumps }
            }
            "random_decaying" => Family::RandomDecaying {
                c: num("c")?,
                eta: num("eta")?,
                seed: params
                    .get("seed")
                    .ok_or_else(|| Error::spec("params.seed", "missing"))?
                    .as_u64()
                    .ok_or_else(|| Error::spec("params.seed", "expected a nonnegative integer"))?,
            },
            other => {
                return Err(Error::spec(
                    "family",
                    format!(
                        "unknown family `{other}` (expected zero, exponential, power, \
                         wigner_von_neumann, step_sequence, bump_train or random_decaying)"
                    ),
                ))
            }
        };
        let spec = PotentialSpec { family, support_start };
        spec.validate()?;
        Ok(spec)
    }
}

fn parse_rule(raw: Option<&Value>) -> Result<SequenceRule> {
    let rule = raw
        .ok_or_else(|| Error::spec("params.rule", "missing"))?
        .as_object()
        .ok_or_else(|| Error::spec("params.rule", "expected an object"))?;
    let kind = rule
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::spec("params.rule.kind", "missing or not a string"))?;
    let num = |name: &str| -> Result<f64> {
        rule.get(name)
            .and_then(Value::as_f64)
            .ok_or_else(|| Error::spec(format!("params.rule.{name}"), "missing or not a number"))
    };
    match kind {
        "power" => Ok(SequenceRule::Power {
            c: num("c")?,
            exponent: num("exponent")?,
        }),
        "values" => {
            let values = rule
                .get("values")
                .and_then(Value::as_array)
                .ok_or_else(|| Error::spec("params.rule.values", "missing or not an array"))?
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    v.as_f64()
                        .ok_or_else(|| Error::spec(format!("params.rule.values[{i}]"), "expected a number"))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SequenceRule::Values(values))
        }
        other => Err(Error::spec(
            "params.rule.kind",
            format!("unknown rule `{other}` (expected power or values)"),
        )),
    }
}

impl TryFrom<Value> for PotentialSpec {
    type Error = Error;

    fn try_from(v: Value) -> Result<Self> {
        PotentialSpec::from_json(&v)
    }
}

impl From<PotentialSpec> for Value {
    fn from(spec: PotentialSpec) -> Value {
        spec.to_json()
    }
}

impl std::str::FromStr for PotentialSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(s).map_err(|e| Error::spec("<document>", e.to_string()))?;
        PotentialSpec::from_json(&v)
    }
}

/// Evaluable potential built from a validated [`PotentialSpec`].
#[derive(Debug)]
pub struct Potential {
    spec: PotentialSpec,
    /// `prefix[n] = I(n)`; append-only.
    prefix: RwLock<Vec<f64>>,
    /// Drawn cell values for `random_decaying`; append-only.
    random_cells: RwLock<Vec<f64>>,
    quad: QuadTolerance,
}

impl Clone for Potential {
    fn clone(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            prefix: RwLock::new(self.prefix.read().unwrap().clone()),
            random_cells: RwLock::new(self.random_cells.read().unwrap().clone()),
            quad: self.quad,
        }
    }
}

pub fn build_potential(spec: PotentialSpec) -> Result<Potential> {
    Potential::new(spec)
}

impl Potential {
    pub fn new(spec: PotentialSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            prefix: RwLock::new(vec![0.0]),
            random_cells: RwLock::new(Vec::new()),
            quad: QuadTolerance::default(),
        })
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn is_zero(&self) -> bool {
        match &self.spec.family {
            Family::Zero => true,
            Family::Exponential { c, .. }
            | Family::Power { c, .. }
            | Family::WignerVonNeumann { c, .. }
            | Family::RandomDecaying { c, .. } => *c == 0.0,
            Family::StepSequence { rule } => match rule {
                SequenceRule::Power { c, .. } => *c == 0.0,
                SequenceRule::Values(v) => v.iter().all(|&x| x == 0.0),
            },
            Family::BumpTrain { bumps } => bumps.iter().all(|b| b.height == 0.0),
        }
    }

    /// True when every cell `[n, n+1)` carries a constant value.
    fn is_cellwise_constant(&self) -> bool {
        matches!(
            self.spec.family,
            Family::StepSequence { .. } | Family::RandomDecaying { .. }
        )
    }

    /// `V(x)` for `x > 0`.
    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Domain { x });
        }
        Ok(self.value(x))
    }

    /// Unchecked evaluation; `x >= 0` assumed.
    pub(crate) fn value(&self, x: f64) -> f64 {
        if x < self.spec.support_start {
            return 0.0;
        }
        match &self.spec.family {
            Family::Zero => 0.0,
            Family::Exponential { c, lambda } => c * (-lambda * x).exp(),
            Family::Power { c, gamma } => c * (1.0 + x).powf(-gamma),
            Family::WignerVonNeumann { c, omega, gamma } => c * (omega * x).sin() * (1.0 + x).powf(-gamma),
            Family::StepSequence { rule } => rule.value(x.floor() as usize),
            Family::BumpTrain { bumps } => bumps
                .iter()
                .find(|b| b.start <= x && x < b.end())
                .map_or(0.0, |b| b.height),
            Family::RandomDecaying { .. } => self.random_cell(x.floor() as usize),
        }
    }

    fn random_cell(&self, n: usize) -> f64 {
        if let Some(&v) = self.random_cells.read().unwrap().get(n) {
            return v;
        }
        let Family::RandomDecaying { c, eta, seed } = self.spec.family else {
            unreachable!("random_cell on non-random family");
        };
        let mut cells = self.random_cells.write().unwrap();
        if cells.len() <= n {
            let start = cells.len();
            let target = (n + 1).max(2 * start).max(64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // Two 32-bit words per f64 draw, so cell m always uses words 2m, 2m+1.
            rng.set_word_pos(2 * start as u128);
            for m in start..target {
                let u: f64 = rng.gen();
                cells.push(c * ((m + 1) as f64).powf(-eta) * u);
            }
        }
        cells[n]
    }

    /// Points in the open interval `(a, b)` where `V` may jump, ascending.
    pub fn breakpoints_in(&self, a: f64, b: f64) -> Vec<f64> {
        let mut pts = Vec::new();
        let s = self.spec.support_start;
        if s > 0.0 {
            pts.push(s);
        }
        match &self.spec.family {
            Family::StepSequence { .. } | Family::RandomDecaying { .. } => {
                let last = match &self.spec.family {
                    Family::StepSequence {
                        rule: SequenceRule::Values(v),
                    } => (v.len() as f64).min(b.ceil()),
                    _ => b.ceil(),
                };
                let mut n = a.floor().max(1.0);
                while n <= last {
                    pts.push(n);
                    n += 1.0;
                }
            }
            Family::BumpTrain { bumps } => {
                for bump in bumps {
                    pts.push(bump.start);
                    pts.push(bump.end());
                }
            }
            _ => {}
        }
        pts.retain(|&p| p > a && p < b);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        pts
    }

    /// Breakpoints plus sign changes of `V` in `(a, b)`: where `|V|` is not smooth.
    pub fn abs_kinks_in(&self, a: f64, b: f64) -> Vec<f64> {
        let mut pts = self.breakpoints_in(a, b);
        if let Family::WignerVonNeumann { omega, .. } = self.spec.family {
            let step = std::f64::consts::PI / omega;
            let mut m = (a / step).floor() + 1.0;
            while m * step < b {
                pts.push(m * step);
                m += 1.0;
            }
            pts.sort_by(f64::total_cmp);
            pts.dedup();
        }
        pts
    }

    /// The constant value of `V` on `[a, b)` when the family guarantees one.
    pub(crate) fn constant_on(&self, a: f64, b: f64) -> Option<f64> {
        if self.is_zero() || b <= self.spec.support_start {
            return Some(0.0);
        }
        if !self.breakpoints_in(a, b).is_empty() {
            return None;
        }
        match &self.spec.family {
            Family::StepSequence { .. } | Family::RandomDecaying { .. } | Family::BumpTrain { .. } => {
                Some(self.value(0.5 * (a + b)))
            }
            _ => None,
        }
    }

    /// `I(x) = ∫_0^x |V(t)| dt`.
    pub fn cumulative_abs(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(Error::arg("x", format!("cumulative_abs needs finite x >= 0, got {x}")));
        }
        let s = self.spec.support_start;
        if x <= s || self.is_zero() {
            return Ok(0.0);
        }
        match &self.spec.family {
            Family::Zero => Ok(0.0),
            Family::Exponential { c, lambda } => Ok(c.abs() * ((-lambda * s).exp() - (-lambda * x).exp()) / lambda),
            Family::Power { c, gamma } => Ok(c.abs() * power_antiderivative(*gamma, s, x)),
            Family::BumpTrain { bumps } => Ok(bumps
                .iter()
                .map(|b| {
                    let lo = b.start.max(s);
                    let hi = b.end().min(x);
                    b.height.abs() * (hi - lo).max(0.0)
                })
                .sum()),
            _ => {
                let n = x.floor() as usize;
                let base = self.prefix_at(n)?;
                Ok(base + self.partial_cell(n, x)?)
            }
        }
    }

    /// `I(x)` by adaptive quadrature, bypassing closed forms and the cache.
    pub fn cumulative_abs_quadrature(&self, x: f64) -> Result<f64> {
        self.abs_integral_quadrature(0.0, x)
    }

    fn abs_integral_quadrature(&self, a: f64, b: f64) -> Result<f64> {
        let kinks = self.abs_kinks_in(a, b);
        Ok(integrate_split(|t| self.value(t).abs(), a, b, &kinks, self.quad)?.value)
    }

    /// `∫_a^b V(t) dt` (signed), by quadrature split at breakpoints.
    pub fn signed_integral(&self, a: f64, b: f64) -> Result<f64> {
        let kinks = self.breakpoints_in(a, b);
        Ok(integrate_split(|t| self.value(t), a, b, &kinks, self.quad)?.value)
    }

    /// `∫_a^b |V(t)|^p dt`.
    pub fn abs_pow_integral(&self, a: f64, b: f64, p: f64) -> Result<f64> {
        let a = a.max(self.spec.support_start);
        if b <= a {
            return Ok(0.0);
        }
        match &self.spec.family {
            Family::Zero => Ok(0.0),
            Family::Exponential { c, lambda } => {
                let r = lambda * p;
                Ok(c.abs().powf(p) * ((-r * a).exp() - (-r * b).exp()) / r)
            }
            Family::Power { c, gamma } => Ok(c.abs().powf(p) * power_antiderivative(gamma * p, a, b)),
            _ => {
                let kinks = self.abs_kinks_in(a, b);
                Ok(integrate_split(|t| self.value(t).abs().powf(p), a, b, &kinks, self.quad)?.value)
            }
        }
    }

    /// `v_n = ∫_n^{n+1} |V|`, computed directly for the cell.
    pub fn cell_mass(&self, n: usize) -> Result<f64> {
        let lo = n as f64;
        let hi = lo + 1.0;
        let s = self.spec.support_start;
        if hi <= s {
            return Ok(0.0);
        }
        if self.is_cellwise_constant() {
            return Ok(self.value(lo.max(s)).abs() * (hi - lo.max(s)));
        }
        match &self.spec.family {
            Family::WignerVonNeumann { .. } => self.abs_integral_quadrature(lo.max(s), hi),
            _ => Ok(self.cumulative_abs(hi)? - self.cumulative_abs(lo)?),
        }
    }

    /// `∫_n^x |V|` for `n <= x < n + 1`.
    fn partial_cell(&self, n: usize, x: f64) -> Result<f64> {
        let lo = (n as f64).max(self.spec.support_start);
        if x <= lo {
            return Ok(0.0);
        }
        if self.is_cellwise_constant() {
            return Ok(self.value(lo).abs() * (x - lo));
        }
        self.abs_integral_quadrature(lo, x)
    }

    fn prefix_at(&self, n: usize) -> Result<f64> {
        if let Some(&v) = self.prefix.read().unwrap().get(n) {
            return Ok(v);
        }
        let mut prefix = self.prefix.write().unwrap();
        while prefix.len() <= n {
            let m = prefix.len() - 1;
            let next = prefix[m] + self.cell_mass(m)?;
            prefix.push(next);
        }
        Ok(prefix[n])
    }

    /// Number of integer checkpoints currently cached.
    pub fn cached_checkpoints(&self) -> usize {
        self.prefix.read().unwrap().len()
    }

    /// `(v_0, ..., v_{n-1})`.
    pub fn unit_cell_masses(&self, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::arg("n", "need at least one cell"));
        }
        (0..n).map(|i| self.cell_mass(i)).collect()
    }
}

/// `∫_a^b (1 + t)^(-gamma) dt`.
fn power_antiderivative(gamma: f64, a: f64, b: f64) -> f64 {
    if (gamma - 1.0).abs() < 1e-12 {
        ((1.0 + b) / (1.0 + a)).ln()
    } else {
        let e = 1.0 - gamma;
        ((1.0 + b).powf(e) - (1.0 + a).powf(e)) / e
    }
}
