//! Batch front end: JSON experiment configs in, `summary.json` and CSV series out.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::brownian::{harmonic_estimate, WosConfig};
use crate::chain::{clt_experiment, ChainModel, UpsilonFamily};
use crate::cts::{cts_classify, cts_variance, half_plane_window_mass};
use crate::error::{Error, Result};
use crate::measures::{Domain, MeasureSpec, SpectralMeasure};
use crate::spectral::{
    arc_mass, covariance_sequence, sigma_squared, spectral_cdf, spectral_density, CdfRoute,
};
use crate::variance_class::{
    check_nsc, classify_growth, karamata_check, tail_oscillation, tauberian_reversible,
    variance_of_partial_sum, GrowthReport, GrowthVerdict, KaramataKind, NscVerdict,
    PowerTransformPair, VarianceMethod,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[value(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Variance,
    Classify,
    Nsc,
    Tauberian,
    ChainClt,
    Harmonic,
    Cts,
    Karamata,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Variance => "variance",
            Command::Classify => "classify",
            Command::Nsc => "nsc",
            Command::Tauberian => "tauberian",
            Command::ChainClt => "chain-clt",
            Command::Harmonic => "harmonic",
            Command::Cts => "cts",
            Command::Karamata => "karamata",
        }
    }

    fn stochastic(&self) -> bool {
        matches!(self, Command::ChainClt | Command::Harmonic)
    }
}

#[derive(Debug, Parser)]
#[command(name = "specvar", version, about = "Spectral variance experiments")]
pub struct Args {
    pub command: Command,
    #[arg(long)]
    pub config: PathBuf,
    /// Exit with status 3 when the experiment's check fails.
    #[arg(long = "assert")]
    pub assert_mode: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

impl ChainSpec {
    pub fn to_family(&self) -> Result<UpsilonFamily> {
        let get = |k: &str| {
            self.params
                .get(k)
                .copied()
                .ok_or_else(|| Error::Config(format!("chain.params: missing parameter '{k}'")))
        };
        let only = |allowed: &[&str]| -> Result<()> {
            match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
                Some(k) => Err(Error::Config(format!(
                    "chain.params.{k}: unknown parameter"
                ))),
                None => Ok(()),
            }
        };
        match self.family.as_str() {
            "triangular" => only(&[]).map(|_| UpsilonFamily::Triangular),
            "uniform" => only(&[]).map(|_| UpsilonFamily::Uniform),
            "def-niu" => {
                only(&["a"])?;
                Ok(UpsilonFamily::DefNiu { a: get("a")? })
            }
            "exp-sqrt-log" => only(&[]).map(|_| UpsilonFamily::ExpSqrtLog),
            "power" => {
                only(&["k"])?;
                Ok(UpsilonFamily::Power { k: get("k")? })
            }
            other => Err(Error::Config(format!(
                "chain.family: unknown family '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KaramataSpec {
    pub coef: f64,
    pub rho: f64,
    pub l: f64,
    pub kind: KaramataKind,
}

/// One experiment. Each command reads the fields it needs; unknown fields
/// fail to parse.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ns: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<VarianceMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// x values: CDF points, arc half-widths, Tauberian grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<f64>>,
    /// Time grid for `cts`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paths: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<KaramataSpec>,
    /// Expected verdict for `classify` and `cts` under `--assert`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ks_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de)
            .map_err(|e| Error::Config(format!("{}: {}", e.path(), e.inner())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    fn measure(&self) -> Result<SpectralMeasure> {
        self.measure
            .as_ref()
            .ok_or_else(|| Error::Config("measure: required for this command".into()))?
            .to_measure()
            .map_err(|e| match e {
                Error::Config(m) => Error::Config(format!("measure.{m}")),
                other => other,
            })
    }

    fn need<T: Clone>(v: &Option<T>, field: &str) -> Result<T> {
        v.clone()
            .ok_or_else(|| Error::Config(format!("{field}: required for this command")))
    }
}

/// Summary values; floats print with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub enum Val {
    F(f64),
    U(u64),
    I(i64),
    B(bool),
    S(String),
    L(Vec<Val>),
}

impl Serialize for Val {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            // JSON has no non-finite numbers
            Val::F(v) if v.is_nan() => s.serialize_str("NaN"),
            Val::F(v) if v.is_infinite() => {
                s.serialize_str(if *v > 0.0 { "Infinity" } else { "-Infinity" })
            }
            Val::F(v) => s.serialize_f64(*v),
            Val::U(v) => s.serialize_u64(*v),
            Val::I(v) => s.serialize_i64(*v),
            Val::B(v) => s.serialize_bool(*v),
            Val::S(v) => s.serialize_str(v),
            Val::L(v) => v.serialize(s),
        }
    }
}

impl From<f64> for Val {
    fn from(v: f64) -> Self {
        Val::F(v)
    }
}
impl From<u64> for Val {
    fn from(v: u64) -> Self {
        Val::U(v)
    }
}
impl From<bool> for Val {
    fn from(v: bool) -> Self {
        Val::B(v)
    }
}
impl From<&str> for Val {
    fn from(v: &str) -> Self {
        Val::S(v.to_string())
    }
}
impl From<String> for Val {
    fn from(v: String) -> Self {
        Val::S(v)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub command: &'static str,
    pub seed: Option<u64>,
    pub passed: bool,
    pub results: BTreeMap<String, Val>,
}

/// `{:.16e}` floats.
struct FixedFloats;

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> std::io::Result<()> {
        write!(w, "{v:.16e}")
    }
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn summary_json(s: &Summary) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats);
    s.serialize(&mut ser).expect("summary serializes");
    buf.push(b'\n');
    String::from_utf8(buf).expect("utf-8")
}

/// A CSV series: header plus rows of preformatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Series {
    fn new(name: &str, header: &[&'static str]) -> Self {
        Series {
            name: name.to_string(),
            header: header.to_vec(),
            rows: vec![],
        }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(vec![]);
        w.write_record(&self.header)
            .map_err(|e| Error::Io(e.to_string()))?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("utf-8"))
    }
}

/// Everything a run produces, before it touches the filesystem.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: Summary,
    pub series: Vec<Series>,
}

fn f(v: f64) -> String {
    fmt_f64(v)
}

fn verdict_name(v: &GrowthVerdict) -> &'static str {
    match v {
        GrowthVerdict::Linear { .. } => "linear",
        GrowthVerdict::Regular { .. } => "regular",
        GrowthVerdict::SlowlyVaryingMultiple => "slowly-varying-multiple",
        GrowthVerdict::Degenerate => "degenerate",
    }
}

fn growth_results(r: &GrowthReport, out: &mut BTreeMap<String, Val>) {
    out.insert("alpha_hat".into(), r.alpha_hat.into());
    out.insert("alpha_limit".into(), r.alpha_limit.into());
    out.insert("verdict".into(), verdict_name(&r.verdict).into());
    match r.verdict {
        GrowthVerdict::Linear { k } => {
            out.insert("K".into(), k.into());
        }
        GrowthVerdict::Regular { alpha } => {
            out.insert("alpha".into(), alpha.into());
        }
        _ => {}
    }
    for (k, v) in &r.diagnostics {
        out.insert(k.clone(), (*v).into());
    }
}

fn expect_ok(cfg: &ExperimentConfig, verdict: &GrowthVerdict) -> bool {
    cfg.expect
        .as_deref()
        .is_none_or(|e| e == verdict_name(verdict))
}

fn default_grid(lo: f64, hi: f64, k: usize) -> Vec<f64> {
    (0..=k)
        .map(|i| lo + (hi - lo) * i as f64 / k as f64)
        .collect()
}

/// Run one experiment in memory.
pub fn execute(command: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    if let Some(c) = cfg.command {
        if c != command {
            return Err(Error::Config(format!(
                "command: config is for '{}', invoked as '{}'",
                c.name(),
                command.name()
            )));
        }
    }
    if command.stochastic() && cfg.seed.is_none() {
        return Err(Error::Config(format!(
            "seed: required for the stochastic command '{}'",
            command.name()
        )));
    }
    let mut res = BTreeMap::new();
    let mut series = Vec::new();
    let mut passed = true;
    match command {
        Command::Spectrum => {
            let m = cfg.measure()?;
            let k = cfg.n.unwrap_or(64) as usize;
            res.insert("total_mass".into(), m.total_mass().into());
            res.insert("circle_mass".into(), m.circle_mass().into());
            res.insert("sigma2".into(), sigma_squared(&m)?.into());
            let mut cov = Series::new("covariance", &["n", "cov"]);
            for (i, c) in covariance_sequence(&m, k)?.iter().enumerate() {
                cov.push(vec![i.to_string(), f(*c)]);
            }
            series.push(cov);
            let xs = cfg
                .x
                .clone()
                .unwrap_or_else(|| default_grid(0.0, std::f64::consts::PI, 16));
            let mut cdf = Series::new(
                "cdf",
                &["x", "cdf_harmonic", "cdf_density", "arc_mass", "density"],
            );
            for &x in &xs {
                cdf.push(vec![
                    f(x),
                    f(spectral_cdf(&m, x, CdfRoute::Harmonic)?),
                    f(spectral_cdf(&m, x, CdfRoute::Density)?),
                    f(arc_mass(&m, x, CdfRoute::Harmonic)?),
                    f(spectral_density(&m, x)?),
                ]);
            }
            series.push(cdf);
        }
        Command::Variance => {
            let m = cfg.measure()?;
            let ns = ExperimentConfig::need(&cfg.ns, "ns")?;
            let method = cfg.method.unwrap_or(VarianceMethod::All);
            let mut s = Series::new("variance", &["n", "var", "var_over_n"]);
            for &n in &ns {
                let v = variance_of_partial_sum(&m, n, method)?;
                s.push(vec![n.to_string(), f(v.value), f(v.value / n as f64)]);
            }
            res.insert("points".into(), (ns.len() as u64).into());
            series.push(s);
        }
        Command::Classify => {
            let m = cfg.measure()?;
            let n_max = ExperimentConfig::need(&cfg.n, "n")?;
            let r = classify_growth(&m, n_max)?;
            res.insert("sigma2".into(), sigma_squared(&m)?.into());
            growth_results(&r, &mut res);
            let mut s = Series::new("classify", &["n", "var", "var_over_n", "h_hat"]);
            let a = match r.verdict {
                GrowthVerdict::Regular { alpha } => alpha,
                _ => 1.0,
            };
            for &(n, h) in &r.h_samples {
                let var = h * n.powf(a);
                s.push(vec![f(n), f(var), f(var / n), f(h)]);
            }
            series.push(s);
            passed = expect_ok(cfg, &r.verdict);
        }
        Command::Nsc => {
            let m = cfg.measure()?;
            let n = cfg.n.unwrap_or(1 << 14);
            let r = check_nsc(&m, n)?;
            for (k, v) in [
                ("sigma2", r.sigma2),
                ("c_wedge", r.c_wedge),
                ("c_box", r.c_box),
                ("C", r.c_hat),
                ("K_pred", r.k_pred),
                ("K_obs", r.k_obs),
                ("K_tolerance", r.k_tolerance),
            ] {
                res.insert(k.into(), v.into());
            }
            let name = match r.verdict {
                NscVerdict::Consistent => "consistent",
                NscVerdict::Inconsistent => "inconsistent",
                NscVerdict::Inconclusive => "inconclusive",
            };
            res.insert("verdict".into(), name.into());
            passed = r.verdict == NscVerdict::Consistent;
        }
        Command::Tauberian => {
            let m = cfg.measure()?;
            let alpha = ExperimentConfig::need(&cfg.alpha, "alpha")?;
            let xs = ExperimentConfig::need(&cfg.x, "x")?;
            let r = tauberian_reversible(&m, alpha, &xs)?;
            let mut s = Series::new("tauberian", &["x", "v_ratio", "tail_ratio"]);
            for (i, &(x, v)) in r.v_ratio.iter().enumerate() {
                let t = r.tail_ratio.get(i).map_or(String::new(), |p| f(p.1));
                s.push(vec![f(x), f(v), t]);
            }
            series.push(s);
            res.insert("pass".into(), r.pass.into());
            passed = r.pass;
            if let Some(k) = cfg.k_max {
                let o = tail_oscillation(&m, k)?;
                res.insert("peak_to_trough".into(), o.peak_to_trough.into());
                res.insert("dense_peak_to_trough".into(), o.dense_peak_to_trough.into());
                let mut s = Series::new("oscillation", &["y", "tail_over_y", "subsequence"]);
                for &(y, v) in &o.troughs {
                    s.push(vec![f(y), f(v), "trough".into()]);
                }
                for &(y, v) in &o.peaks {
                    s.push(vec![f(y), f(v), "peak".into()]);
                }
                series.push(s);
            }
        }
        Command::ChainClt => {
            let spec = ExperimentConfig::need(&cfg.chain, "chain")?;
            let model = ChainModel::build(spec.to_family()?)?;
            let n = ExperimentConfig::need(&cfg.n, "n")?;
            let reps = cfg.replications.unwrap_or(1000);
            let seed = cfg.seed.expect("checked above");
            let r = clt_experiment(&model, n, reps, seed)?;
            for (k, v) in [
                ("theta", model.theta),
                ("b", r.b),
                ("ks", r.ks),
                ("mean", r.mean),
                ("normalized_variance", r.variance),
                ("var_sn_empirical", r.variance * r.b * r.b),
                ("var_sn_spectral", r.spectral_variance),
                ("b2_over_var", r.b2_over_var),
            ] {
                res.insert(k.into(), v.into());
            }
            res.insert("replications".into(), (reps as u64).into());
            let mut s = Series::new("clt", &["n", "replication", "s_n", "normalized"]);
            for (i, &sn) in r.sums.iter().enumerate() {
                s.push(vec![
                    n.to_string(),
                    i.to_string(),
                    sn.to_string(),
                    f(sn as f64 / r.b),
                ]);
            }
            series.push(s);
            passed = r.ks < cfg.ks_max.unwrap_or(0.05);
        }
        Command::Harmonic => {
            let m = cfg.measure()?;
            let xs = ExperimentConfig::need(&cfg.x, "x")?;
            let wos = WosConfig {
                epsilon: cfg.epsilon.unwrap_or(1e-6),
                seed: cfg.seed.expect("checked above"),
                ..Default::default()
            };
            let paths = cfg.paths.unwrap_or(100_000);
            let est = harmonic_estimate(&m, &xs, paths, &wos)?;
            let mass = m.total_mass();
            let mut s = Series::new("harmonic", &["x", "estimate", "stderr", "quadrature_value"]);
            let mut worst = 0.0f64;
            for e in &est {
                let q = match m.domain() {
                    Domain::Disk => arc_mass(&m, e.x, CdfRoute::Harmonic)? / mass,
                    Domain::LeftHalfPlane => half_plane_window_mass(&m, e.x)? / mass,
                };
                let z = (e.value - q).abs() / e.se.max(1.0 / paths as f64);
                worst = worst.max(z);
                s.push(vec![f(e.x), f(e.value), f(e.se), f(q)]);
            }
            series.push(s);
            res.insert("paths".into(), paths.into());
            res.insert("max_z".into(), worst.into());
            passed = worst <= 3.5;
        }
        Command::Cts => {
            let m = cfg.measure()?;
            let ts = ExperimentConfig::need(&cfg.t, "t")?;
            let r = cts_classify(&m, &ts)?;
            growth_results(&r, &mut res);
            let mut s = Series::new("cts", &["t", "var", "var_over_t"]);
            for &t in &ts {
                let v = cts_variance(&m, t)?;
                s.push(vec![f(t), f(v), f(v / t)]);
            }
            series.push(s);
            passed = expect_ok(cfg, &r.verdict);
        }
        Command::Karamata => {
            let p = ExperimentConfig::need(&cfg.pair, "pair")?;
            let xs = ExperimentConfig::need(&cfg.x, "x")?;
            let pair = PowerTransformPair {
                coef: p.coef,
                rho: p.rho,
                l: p.l,
            };
            let r = karamata_check(&pair, p.kind, &xs)?;
            let mut s = Series::new("karamata", &["x", "ratio", "quantity"]);
            for (name, rows) in [
                ("transform", &r.transform_ratio),
                ("function", &r.function_ratio),
                ("density", &r.density_ratio),
            ] {
                for &(x, v) in rows {
                    s.push(vec![f(x), f(v), name.into()]);
                }
            }
            series.push(s);
            res.insert("pass".into(), r.pass.into());
            passed = r.pass;
        }
    }
    Ok(Outcome {
        summary: Summary {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.name(),
            seed: cfg.seed,
            passed,
            results: res,
        },
        series,
    })
}

/// Write `summary.json` and one CSV per series into `dir`.
pub fn write_outcome(o: &Outcome, dir: &Path) -> Result<Vec<PathBuf>> {
    let io = |e: std::io::Error| Error::Io(e.to_string());
    fs::create_dir_all(dir).map_err(io)?;
    let mut written = Vec::new();
    let p = dir.join("summary.json");
    fs::write(&p, summary_json(&o.summary)).map_err(io)?;
    written.push(p);
    for s in &o.series {
        let p = dir.join(format!("{}.csv", s.name));
        fs::write(&p, s.to_csv()?).map_err(io)?;
        written.push(p);
    }
    Ok(written)
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_)
        | Error::Io(_)
        | Error::InvalidMeasure(_)
        | Error::InvalidRegion(_)
        | Error::OutOfRange(_)
        | Error::DomainMismatch { .. }
        | Error::EmptyMeasure => 1,
        _ => 2,
    }
}

/// Full CLI run: read config, apply overrides, execute, write outputs.
/// Returns the exit status.
pub fn run(args: &Args) -> i32 {
    match run_inner(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("specvar: {e}");
            if matches!(e, Error::SigmaInfinite) {
                eprintln!(
                    "specvar: the measure puts too much mass near 1 for a linear variance limit"
                );
            }
            exit_code(&e)
        }
    }
}

fn run_inner(args: &Args) -> Result<i32> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
    let mut cfg = ExperimentConfig::parse(&text)?;
    if args.seed.is_some() {
        cfg.seed = args.seed;
    }
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("specvar-out"));
    let outcome = execute(args.command, &cfg)?;
    for p in write_outcome(&outcome, &dir)? {
        println!("{}", p.display());
    }
    if args.assert_mode && !outcome.summary.passed {
        eprintln!("specvar: check failed for '{}'", args.command.name());
        return Ok(3);
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIRAC: &str =
        r#"{"domain":"disk","components":[{"kind":"atom","params":{"re":0.0},"mass":1.0}]}"#;

    fn cfg(extra: &str) -> ExperimentConfig {
        ExperimentConfig::parse(&format!(r#"{{"measure":{DIRAC}{extra}}}"#)).unwrap()
    }

    #[test]
    fn classify_dirac() {
        let o = execute(Command::Classify, &cfg(r#","n":4096,"expect":"linear""#)).unwrap();
        assert_eq!(o.summary.results["verdict"], Val::from("linear"));
        assert_eq!(o.summary.results["K"], Val::F(1.0));
        assert!(o.summary.passed);
        let json = summary_json(&o.summary);
        assert!(json.contains("\"schema_version\":1"));
        assert!(json.contains("\"K\":1.0000000000000000e0"), "{json}");
        assert_eq!(o.series[0].header, vec!["n", "var", "var_over_n", "h_hat"]);
    }

    #[test]
    fn config_errors_name_fields() {
        let e = ExperimentConfig::parse(
            r#"{"measure":{"domain":"disk","components":[{"kind":"blob","mass":1.0}]}}"#,
        )
        .unwrap();
        let err = execute(Command::Spectrum, &e).unwrap_err();
        assert_eq!(exit_code(&err), 1);
        assert!(err.to_string().contains("components[0].kind"), "{err}");
        let err = ExperimentConfig::parse(r#"{"n":"many"}"#).unwrap_err();
        assert!(err.to_string().contains("n:"), "{err}");
        let err = ExperimentConfig::parse(r#"{"bogus":1}"#).unwrap_err();
        assert_eq!(exit_code(&err), 1);
        let c = ExperimentConfig::parse(r#"{"chain":{"family":"triangular"},"n":1000}"#).unwrap();
        let err = execute(Command::ChainClt, &c).unwrap_err();
        assert!(err.to_string().contains("seed"), "{err}");
        let c = ExperimentConfig::parse(r#"{"command":"nsc"}"#).unwrap();
        assert!(execute(Command::Classify, &c).is_err());
    }

    #[test]
    fn divergence_exit_code() {
        let c = ExperimentConfig::parse(
            r#"{"measure":{"domain":"disk","components":[{"kind":"uniform","params":{"a":0.0,"b":1.0},"mass":1.0}]},"n":16384}"#,
        )
        .unwrap();
        let err = execute(Command::Nsc, &c).unwrap_err();
        assert!(matches!(err, Error::SigmaInfinite));
        assert_eq!(exit_code(&err), 2);
    }

    #[test]
    fn round_trip() {
        let c = cfg(r#","command":"variance","ns":[1,2,3],"method":"kernel","seed":4"#);
        let text = c.to_json();
        let again = ExperimentConfig::parse(&text).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_json(), text);
    }

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(f64::INFINITY), "inf");
        let s = Summary {
            schema_version: 1,
            tool_version: "x",
            command: "nsc",
            seed: None,
            passed: true,
            results: BTreeMap::from([("s".to_string(), Val::F(f64::INFINITY))]),
        };
        assert!(summary_json(&s).contains("\"s\":\"Infinity\""));
    }
}
