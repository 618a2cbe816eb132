//! Batch front end: TOML run configs, `--set` overrides and the report commands.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::besov::{self, deserialize_index, serialize_index, NormParams};
use crate::error::{Error, ErrorClass, Result};
use crate::exponents::{self, BatteryRow, ExponentOptions, Route};
use crate::funcrep::{self, Builtin};
use crate::grid::{GridFunction, GridSpace};
use crate::littlewood_paley;
use crate::localapprox::Boundary;
use crate::mra::{self, GeneratorSet};
use crate::stats::log_slope;
use crate::tiling::{TilingConfig, TilingSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Config | ErrorClass::Io => EXIT_CONFIG,
        ErrorClass::Validation => EXIT_VALIDATION,
        ErrorClass::Numerical => EXIT_NUMERICAL,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FunctionConfig {
    pub builtin: Option<Builtin>,
    /// Rows `nu_0, .., nu_{n-1}, value` on the configured grid.
    pub csv: Option<PathBuf>,
    /// Grid level `L`.
    pub level: usize,
    /// Periodic window, in tiles per axis.
    pub window: Vec<i64>,
}

impl Default for FunctionConfig {
    fn default() -> Self {
        Self { builtin: Some(Builtin::Takagi { mu: 0.5f64.sqrt() }), csv: None, level: 16, window: vec![] }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Haar,
    Monomials,
    Bspline,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub s: f64,
    #[serde(serialize_with = "serialize_index", deserialize_with = "deserialize_index")]
    pub p: f64,
    #[serde(serialize_with = "serialize_index", deserialize_with = "deserialize_index")]
    pub q: f64,
    pub k: Option<usize>,
    /// Regression window for exponents; its upper end is the finest level analysed.
    pub levels: [usize; 2],
    pub routes: Vec<Route>,
    /// Pointwise probe locations.
    pub points: Vec<Vec<f64>>,
    pub generators: GeneratorKind,
    /// Generator order: monomial degree plus one, or B-spline order.
    pub order: usize,
    pub boundary: Boundary,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            s: 0.4,
            p: f64::INFINITY,
            q: f64::INFINITY,
            k: None,
            levels: [4, 14],
            routes: vec![Route::Osc, Route::Diff, Route::Sigma],
            points: vec![vec![1.0 / 3.0]],
            generators: GeneratorKind::Haar,
            order: 1,
            boundary: Boundary::Periodic,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub json: bool,
    pub csv: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), json: true, csv: true }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub tiling: TilingConfig,
    pub function: FunctionConfig,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    /// Parse TOML text, then apply `key.path=value` overrides in order.
    pub fn load(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn from_path(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::load(&text, overrides)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}

fn apply_override(table: &mut toml::Table, o: &str) -> Result<()> {
    let (key, raw) = o.split_once('=').ok_or_else(|| Error::Config(format!("override `{o}` is not key=value")))?;
    let value = parse_value(raw.trim());
    let parts: Vec<&str> = key.trim().split('.').collect();
    let (last, head) = parts.split_last().expect("split yields one part");
    let mut cur = table;
    for p in head {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| Error::Config(format!("`{key}`: `{p}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Tiling, grid and sampled function resolved from a config.
pub struct Prepared {
    pub spec: Arc<TilingSpec>,
    pub grid: Arc<GridSpace>,
    pub function: GridFunction,
    pub label: String,
    pub builtin: Option<Builtin>,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let spec = Arc::new(TilingSpec::from_config(&cfg.tiling)?);
    let window = if cfg.function.window.is_empty() { vec![1; spec.n()] } else { cfg.function.window.clone() };
    let grid = Arc::new(GridSpace::new(spec.clone(), cfg.function.level, &window)?);
    let (function, label, builtin) = match (&cfg.function.builtin, &cfg.function.csv) {
        (_, Some(path)) => (funcrep::ingest_csv(path, &grid)?, path.display().to_string(), None),
        (Some(b), None) => (b.sample(&grid)?.function, b.label(), Some(b.clone())),
        (None, None) => return Err(Error::Config("function needs `builtin` or `csv`".into())),
    };
    Ok(Prepared { spec, grid, function, label, builtin })
}

pub fn generators(cfg: &AnalysisConfig, spec: &Arc<TilingSpec>) -> Result<GeneratorSet> {
    match cfg.generators {
        GeneratorKind::Haar => Ok(GeneratorSet::haar(spec.clone())),
        GeneratorKind::Monomials => {
            if cfg.order == 0 {
                return Err(Error::BadParameters("monomial order must be at least 1".into()));
            }
            Ok(GeneratorSet::monomials(spec.clone(), cfg.order - 1))
        }
        GeneratorKind::Bspline => GeneratorSet::bspline(spec.clone(), cfg.order),
    }
}

fn out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    let d = cfg.output.directory.clone();
    fs::create_dir_all(&d)?;
    Ok(d)
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

fn index_json(v: f64) -> serde_json::Value {
    if v.is_infinite() {
        json!("inf")
    } else {
        json!(v)
    }
}

/// Tile point cloud and geometry; returns the geometry summary.
pub fn cmd_tile(cfg: &RunConfig) -> Result<serde_json::Value> {
    let spec = TilingSpec::from_config(&cfg.tiling)?;
    let approx = spec.tile_points(cfg.tiling.depth)?;
    let geom = spec.geometry();
    let report = json!({
        "n": spec.n(),
        "m": spec.m(),
        "lambda0": spec.lambda0(),
        "anchor": spec.anchor(),
        "probe": spec.probe(),
        "depth": approx.depth,
        "points": approx.count,
        "r": geom.inradius,
        "circumradius": geom.circumradius,
        "ratio": geom.ratio,
        "diameter": geom.diameter,
        "measure": approx.measure,
    });
    let dir = out_dir(cfg)?;
    if cfg.output.csv {
        approx.write_csv(&dir.join("tile_points.csv"))?;
    }
    if cfg.output.json {
        write_json(&dir.join("tile.json"), &report)?;
    }
    Ok(report)
}

/// Besov norm variants with their per-level table and cross-variant slopes.
pub fn cmd_norm(cfg: &RunConfig) -> Result<serde_json::Value> {
    let pre = prepare(cfg)?;
    let a = &cfg.analysis;
    let lmax = a.levels[1];
    let mut params = NormParams::new(a.s, a.p, a.q, lmax).with_boundary(a.boundary);
    if let Some(k) = a.k {
        params = params.with_k(k);
    }
    params.validate(&pre.grid)?;
    let local = besov::norm_variants(&pre.function, &params)?;
    let mut columns: BTreeMap<String, (Vec<usize>, Vec<f64>)> = local
        .variants
        .iter()
        .map(|(k, v)| (k.clone(), (v.levels.clone(), v.raw.clone())))
        .collect();
    let mut values: BTreeMap<String, f64> = local.variants.iter().map(|(k, v)| (k.clone(), v.value)).collect();
    let lambda = pre.spec.lambda0();
    let mut extra = serde_json::Map::new();
    if littlewood_paley::scalar_dilation(&pre.grid).is_ok() && lmax < pre.grid.level() {
        let lp = littlewood_paley::lp_besov_norm(&pre.function, a.s, a.p, a.q, lmax)?;
        columns.insert("lp_band".into(), (lp.band.levels.clone(), lp.band.raw.clone()));
        columns.insert("lp_partial".into(), (lp.partial.levels.clone(), lp.partial.raw.clone()));
        values.insert("lp_band".into(), lp.band.value);
        values.insert("lp_partial".into(), lp.partial.value);
        extra.insert("littlewood_paley".into(), serde_json::to_value(&lp)?);
    }
    let gens = generators(a, &pre.spec)?;
    match mra::mra_norm_variants(&pre.function, &params, &gens) {
        Ok(r) => {
            for (k, v) in &r.variants {
                columns.insert(format!("mra_{k}"), (v.levels.clone(), v.raw.clone()));
                values.insert(format!("mra_{k}"), v.value);
            }
            extra.insert("mra".into(), serde_json::to_value(&r)?);
        }
        Err(e @ (Error::LevelTooFine { .. } | Error::WrongGenerator(_))) => {
            extra.insert("mra_skipped".into(), json!(e.to_string()));
        }
        Err(e) => return Err(e),
    }
    let slopes: BTreeMap<String, Option<f64>> = columns
        .iter()
        .map(|(k, (lv, raw))| {
            let (l, r): (Vec<usize>, Vec<f64>) =
                lv.iter().zip(raw).filter(|(l, _)| **l >= besov::SLOPE_FROM).map(|(l, r)| (*l, *r)).unzip();
            (k.clone(), log_slope(&l, &r, lambda).map(|f| f.slope))
        })
        .collect();
    let report = json!({
        "function": pre.label,
        "s": a.s,
        "p": index_json(a.p),
        "q": index_json(a.q),
        "lmax": lmax,
        "values": values,
        "slopes": slopes,
        "local": serde_json::to_value(&local)?,
        "extra": extra,
    });
    let dir = out_dir(cfg)?;
    if cfg.output.json {
        write_json(&dir.join("norm.json"), &report)?;
    }
    if cfg.output.csv {
        let mut w = csv::Writer::from_path(dir.join("norm_levels.csv"))?;
        let names: Vec<&String> = columns.keys().collect();
        let mut header = vec!["level".to_string()];
        header.extend(names.iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for l in 0..=lmax + 1 {
            let row: Vec<String> = names
                .iter()
                .map(|n| {
                    let (lv, raw) = &columns[*n];
                    lv.iter().position(|x| *x == l).map(|i| format!("{:e}", raw[i])).unwrap_or_default()
                })
                .collect();
            if row.iter().all(String::is_empty) {
                continue;
            }
            let mut rec = vec![l.to_string()];
            rec.extend(row);
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    Ok(report)
}

/// Global and pointwise exponents along the configured routes.
pub fn cmd_exponent(cfg: &RunConfig) -> Result<serde_json::Value> {
    let pre = prepare(cfg)?;
    let a = &cfg.analysis;
    let k = a.k.unwrap_or(1);
    let opts = ExponentOptions { p: a.p, k, window: a.levels, boundary: a.boundary };
    let lambda = pre.spec.lambda0();
    let gref = pre.builtin.as_ref().and_then(|b| b.reference_global(lambda));
    let pref = pre.builtin.as_ref().and_then(|b| b.reference_pointwise(lambda));
    let needs_gens = a.routes.iter().any(|r| r.needs_generators());
    let gens = if needs_gens { Some(generators(a, &pre.spec)?) } else { None };
    let mut global = vec![];
    let mut pointwise = vec![];
    let mut rows = vec![];
    for &r in &a.routes {
        if r == Route::DoubleLimit {
            continue;
        }
        let rep = exponents::global_exponent(&pre.function, r, &opts, gens.as_ref())?.with_reference(gref);
        rows.push(BatteryRow { function: pre.label.clone(), route: r.name().into(), x: None, estimate: rep.estimate, reference: gref });
        global.push(rep);
    }
    for x in &a.points {
        for &r in &a.routes {
            if !matches!(r, Route::Osc | Route::Diff | Route::DoubleLimit) {
                continue;
            }
            let rep = exponents::pointwise_exponent(&pre.function, x, r, &opts)?.with_reference(pref);
            let xs = x.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(" ");
            rows.push(BatteryRow { function: pre.label.clone(), route: r.name().into(), x: Some(xs.clone()), estimate: rep.estimate, reference: pref });
            pointwise.push(json!({ "x": x, "report": rep }));
        }
    }
    let report = json!({
        "function": pre.label,
        "p": index_json(a.p),
        "k": k,
        "global": global,
        "pointwise": pointwise,
    });
    let dir = out_dir(cfg)?;
    if cfg.output.json {
        write_json(&dir.join("exponent.json"), &report)?;
    }
    if cfg.output.csv {
        exponents::write_battery_csv(&dir.join("battery.csv"), &rows)?;
    }
    Ok(report)
}

/// Stability, duals, refinement, polynomial reproduction and the coefficient pyramid.
pub fn cmd_mra_report(cfg: &RunConfig) -> Result<serde_json::Value> {
    let pre = prepare(cfg)?;
    let a = &cfg.analysis;
    let gens = generators(a, &pre.spec)?;
    let stability = mra::check_stability(&gens)?;
    let duals = mra::dual_set(&gens)?;
    let mask = mra::refinement_mask(&gens)?;
    let sf = mra::strang_fix_check(&gens, gens.order())?;
    let lmax = a.levels[1];
    let py = mra::pyramid(&pre.function, &gens, lmax, a.p)?;
    let wavelets = if gens.is_haar() { Some(mra::wavelet_coeffs(&pre.function, &mra::haar_wavelets(&gens)?, lmax)?) } else { None };
    let report = json!({
        "function": pre.label,
        "generators": gens.name(),
        "order": gens.order(),
        "stability": stability,
        "biorthogonality_residual": duals.biorthogonality_residual,
        "refinement": { "entries": mask.entries.len(), "residual": mask.residual, "closed_form_gap": mask.closed_form_gap },
        "strang_fix": sf,
        "telescoping_error": py.telescoping_error,
        "sigma": py.sigma,
        "residue_norms": py.residue_norms,
        "coeff_norms": py.coeff_norms,
        "wavelet_energy": wavelets.as_ref().map(|w| w.energy()),
    });
    let dir = out_dir(cfg)?;
    if cfg.output.json {
        write_json(&dir.join("mra.json"), &report)?;
    }
    if cfg.output.csv {
        py.write_csv(&dir.join("pyramid.csv"), wavelets.as_ref())?;
    }
    Ok(report)
}

#[derive(Debug, Parser)]
#[command(name = "tilebesov", version, about = "Besov norms and scaling exponents on self-affine tilings")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// TOML run configuration; defaults are used when absent.
    #[arg(short, long)]
    pub config: Option<PathBuf>,
    /// Override a config key, e.g. `--set analysis.s=0.6`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Output directory; overrides `output.directory`.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tile point cloud and geometry.
    Tile(Common),
    /// Besov norm variants.
    Norm(Common),
    /// Scaling exponents.
    Exponent(Common),
    /// Generator-set checks and coefficient pyramid.
    MraReport(Common),
    /// Print the resolved configuration.
    PrintConfig(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Tile(c) | Command::Norm(c) | Command::Exponent(c) | Command::MraReport(c) | Command::PrintConfig(c) => c,
        }
    }
}

pub fn run(cli: &Cli) -> Result<String> {
    let c = cli.command.common();
    let mut cfg = RunConfig::from_path(c.config.as_deref(), &c.set)?;
    if let Some(o) = &c.out {
        cfg.output.directory = o.clone();
    }
    let report = match &cli.command {
        Command::PrintConfig(_) => return cfg.to_toml(),
        Command::Tile(_) => cmd_tile(&cfg)?,
        Command::Norm(_) => cmd_norm(&cfg)?,
        Command::Exponent(_) => cmd_exponent(&cfg)?,
        Command::MraReport(_) => cmd_mra_report(&cfg)?,
    };
    Ok(serde_json::to_string_pretty(&report)?)
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(s) => {
            use std::io::Write;
            let _ = writeln!(std::io::stdout(), "{s}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let cfg = RunConfig::default();
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::load(&text, &[]).unwrap(), cfg);
        assert!(text.contains("p = \"inf\""));
    }

    #[test]
    fn overrides_apply() {
        let cfg = RunConfig::load(
            "",
            &[
                "analysis.s=0.6".into(),
                "analysis.routes=[\"lp-band\"]".into(),
                "function.builtin={name=\"weierstrass\", mu=0.5}".into(),
                "tiling.matrix=[[3]]".into(),
                "tiling.digits=[[0],[1],[2]]".into(),
                "analysis.p=2".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.analysis.s, 0.6);
        assert_eq!(cfg.analysis.routes, vec![Route::LpBand]);
        assert_eq!(cfg.function.builtin, Some(Builtin::Weierstrass { mu: 0.5 }));
        assert_eq!(cfg.tiling.matrix, vec![vec![3]]);
        assert_eq!(cfg.analysis.p, 2.0);
    }

    #[test]
    fn config_errors_are_classified() {
        let e = RunConfig::load("[analysis]\nbogus = 1\n", &[]).unwrap_err();
        assert_eq!(exit_code(&e), EXIT_CONFIG);
        let e = RunConfig::load("", &["novalue".into()]).unwrap_err();
        assert_eq!(exit_code(&e), EXIT_CONFIG);
        let cfg = RunConfig::load("", &["tiling.digits=[[0],[2]]".into()]).unwrap();
        let e = cmd_tile(&cfg).unwrap_err();
        assert!(matches!(e, Error::DuplicateResidue(..)));
        assert_eq!(exit_code(&e), EXIT_VALIDATION);
    }

    #[test]
    fn bare_strings_become_values() {
        assert_eq!(parse_value("haar"), toml::Value::String("haar".into()));
        assert_eq!(parse_value("inf"), toml::Value::Float(f64::INFINITY));
        assert_eq!(parse_value("3"), toml::Value::Integer(3));
    }
}
