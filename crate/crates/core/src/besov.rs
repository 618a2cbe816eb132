//! Truncated Besov norms built from per-level oscillations, and their pointwise analogues.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::grid::{GridFunction, GridSpace};
use crate::localapprox::{self, Boundary};
use crate::stats::{log_slope, lq_sum};

/// Levels below this are excluded from reported slopes.
pub const SLOPE_FROM: usize = 4;

pub fn serialize_index<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

pub fn deserialize_index<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }
    match Raw::deserialize(d)? {
        Raw::Num(v) => Ok(v),
        Raw::Str(s) if s == "inf" || s == "infinity" => Ok(f64::INFINITY),
        Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormParams {
    pub s: f64,
    #[serde(serialize_with = "serialize_index", deserialize_with = "deserialize_index")]
    pub p: f64,
    #[serde(serialize_with = "serialize_index", deserialize_with = "deserialize_index")]
    pub q: f64,
    /// Polynomial degree cap; `ceil(s)` when absent.
    pub k: Option<usize>,
    pub lmax: usize,
    pub boundary: Boundary,
}

impl NormParams {
    pub fn new(s: f64, p: f64, q: f64, lmax: usize) -> Self {
        Self { s, p, q, k: None, lmax, boundary: Boundary::Periodic }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = Some(k);
        self
    }

    pub fn with_boundary(mut self, b: Boundary) -> Self {
        self.boundary = b;
        self
    }

    pub fn degree(&self) -> usize {
        self.k.unwrap_or(self.s.ceil().max(0.0) as usize)
    }

    pub fn validate(&self, grid: &GridSpace) -> Result<()> {
        if !(self.s > 0.0 && self.s.is_finite()) {
            return Err(Error::BadParameters(format!("s = {} must be positive and finite", self.s)));
        }
        if !(self.p >= 1.0) || !(self.q >= 1.0) {
            return Err(Error::BadParameters(format!("p = {}, q = {} must lie in [1, inf]", self.p, self.q)));
        }
        let k = self.degree();
        if (k as f64) + 1.0 <= self.s {
            return Err(Error::BadParameters(format!("k + 1 = {} must exceed s = {}", k + 1, self.s)));
        }
        if self.lmax >= grid.level() {
            return Err(Error::LevelTooFine { level: self.lmax, grid_level: grid.level() });
        }
        Ok(())
    }
}

/// One norm variant: `base + (sum_l (lambda^{ls} raw_l)^q)^{1/q}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariantValue {
    pub value: f64,
    pub base: f64,
    pub levels: Vec<usize>,
    pub raw: Vec<f64>,
    pub weighted: Vec<f64>,
    pub last_term: f64,
    /// Least-squares slope of `log_lambda(raw_l)` in `l`, from level `SLOPE_FROM` on.
    pub slope: Option<f64>,
}

impl VariantValue {
    pub fn new(base: f64, levels: Vec<usize>, raw: Vec<f64>, lambda: f64, s: f64, q: f64) -> Self {
        let weighted: Vec<f64> = levels.iter().zip(&raw).map(|(&l, r)| lambda.powf(l as f64 * s) * r).collect();
        let value = base + lq_sum(&weighted, q);
        let last_term = weighted.last().copied().unwrap_or(0.0);
        let (ls, rs): (Vec<usize>, Vec<f64>) =
            levels.iter().zip(&raw).filter(|(l, _)| **l >= SLOPE_FROM).map(|(l, r)| (*l, *r)).unzip();
        let slope = log_slope(&ls, &rs, lambda).map(|f| f.slope);
        Self { value, base, levels, raw, weighted, last_term, slope }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct NormReport {
    pub params: NormParams,
    pub k: usize,
    pub lambda0: f64,
    pub lp_norm: f64,
    pub variants: BTreeMap<String, VariantValue>,
    /// `ln(a / b)` keyed `"a/b"` for every ordered pair of variants.
    pub log_ratios: BTreeMap<String, f64>,
}

impl NormReport {
    pub fn new(params: NormParams, lambda0: f64, lp_norm: f64, variants: BTreeMap<String, VariantValue>) -> Self {
        let mut log_ratios = BTreeMap::new();
        for (a, va) in &variants {
            for (b, vb) in &variants {
                if a < b && va.value > 0.0 && vb.value > 0.0 {
                    log_ratios.insert(format!("{a}/{b}"), (va.value / vb.value).ln());
                }
            }
        }
        Self { params, k: params.degree(), lambda0, lp_norm, variants, log_ratios }
    }

    pub fn value(&self, variant: &str) -> Option<f64> {
        self.variants.get(variant).map(|v| v.value)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct LevelData {
    levels: Vec<usize>,
    osc: Vec<f64>,
    omega: Vec<f64>,
}

fn level_data(f: &GridFunction, params: &NormParams) -> Result<LevelData> {
    let k = params.degree();
    let mut d = LevelData { levels: vec![], osc: vec![], omega: vec![] };
    for l in 0..=params.lmax {
        let lo = localapprox::level_oscillation(f, l, k, params.p, params.boundary)?;
        let (o, w) = lo.norms(f.grid(), params.p);
        d.levels.push(l);
        d.osc.push(o);
        d.omega.push(w);
    }
    Ok(d)
}

/// Truncated oscillation norm `||f||_p + (sum (lambda0^{ls} ||osc(., l)||_p)^q)^{1/q}`.
pub fn besov_norm(f: &GridFunction, params: &NormParams) -> Result<NormReport> {
    params.validate(f.grid())?;
    let lambda = f.grid().spec().lambda0();
    let base = f.norm(params.p);
    let d = level_data(f, params)?;
    let mut variants = BTreeMap::new();
    variants.insert("osc".to_string(), VariantValue::new(base, d.levels, d.osc, lambda, params.s, params.q));
    Ok(NormReport::new(*params, lambda, base, variants))
}

/// The oscillation, projection-error and difference forms of the norm from one set of level data.
pub fn norm_variants(f: &GridFunction, params: &NormParams) -> Result<NormReport> {
    params.validate(f.grid())?;
    let grid = f.grid();
    let lambda = grid.spec().lambda0();
    let base = f.norm(params.p);
    let k = params.degree();
    let d = level_data(f, params)?;
    let mut variants = BTreeMap::new();
    variants.insert("osc".to_string(), VariantValue::new(base, d.levels.clone(), d.osc, lambda, params.s, params.q));
    variants.insert("omega".to_string(), VariantValue::new(base, d.levels, d.omega, lambda, params.s, params.q));
    let mut levels = vec![];
    let mut raw = vec![];
    for l in 0..=params.lmax {
        match localapprox::difference_norm(f, l, k, params.p, params.boundary) {
            Ok(dn) => {
                levels.push(l);
                raw.push(dn.value);
            }
            Err(Error::EmptyStepSet(_)) => break,
            Err(e) => return Err(e),
        }
    }
    if !levels.is_empty() {
        variants.insert("diff".to_string(), VariantValue::new(base, levels, raw, lambda, params.s, params.q));
    }
    Ok(NormReport::new(*params, lambda, base, variants))
}

#[derive(Debug, Clone, Serialize)]
pub struct TspqReport {
    pub x: Vec<f64>,
    pub params: NormParams,
    pub variants: BTreeMap<String, VariantValue>,
    /// Set when the weighted terms of a variant grow with the level.
    pub divergent: BTreeMap<String, bool>,
}

/// Truncated pointwise functional `(sum (lambda0^{ls} osc(x, l))^q)^{1/q}` and its two equivalents.
pub fn tspq_value(f: &GridFunction, x: &[f64], params: &NormParams) -> Result<TspqReport> {
    params.validate(f.grid())?;
    let lambda = f.grid().spec().lambda0();
    let rows = localapprox::pointwise_sequences(f, x, params.degree(), params.p, params.lmax)?;
    let levels: Vec<usize> = rows.iter().map(|r| r.level).collect();
    let mut variants = BTreeMap::new();
    variants.insert(
        "osc".to_string(),
        VariantValue::new(0.0, levels.clone(), rows.iter().map(|r| r.osc).collect(), lambda, params.s, params.q),
    );
    variants.insert(
        "omega".to_string(),
        VariantValue::new(0.0, levels, rows.iter().map(|r| r.omega).collect(), lambda, params.s, params.q),
    );
    let (dl, dv): (Vec<usize>, Vec<f64>) = rows.iter().filter_map(|r| r.diff.map(|d| (r.level, d))).unzip();
    if !dl.is_empty() {
        variants.insert("diff".to_string(), VariantValue::new(0.0, dl, dv, lambda, params.s, params.q));
    }
    let divergent = variants
        .iter()
        .map(|(name, v)| (name.clone(), v.slope.is_some_and(|sl| sl + params.s > 0.0)))
        .collect();
    Ok(TspqReport { x: x.to_vec(), params: *params, variants, divergent })
}
