//! Experiment runner: seeded benchmark matrices over instances, algorithms,
//! and noise levels, with CSV / JSON / SVG reporters.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::aco::{aco_solve, AcoConfig};
use crate::cluster::{hierarchical_solve, SubSolver};
use crate::error::{QacoError, Result};
use crate::pheromone::{qaco_solve, QacoConfig};
use crate::qsim::{NoiseModel, NoisePlacement, NoiseSpec};
use crate::tspio::{is_permutation, parse_tsplib, random_instance, Metric, TspInstance, Tour};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Algorithm {
    Aco,
    Qaco,
    AcoKmeans,
    QacoKmeans,
}

impl Algorithm {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "aco" => Ok(Algorithm::Aco),
            "qaco" => Ok(Algorithm::Qaco),
            "aco-kmeans" => Ok(Algorithm::AcoKmeans),
            "qaco-kmeans" => Ok(Algorithm::QacoKmeans),
            other => Err(QacoError::Config(format!("unknown algorithm {other}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Aco => "aco",
            Algorithm::Qaco => "qaco",
            Algorithm::AcoKmeans => "aco-kmeans",
            Algorithm::QacoKmeans => "qaco-kmeans",
        }
    }
}

/// Where the instance comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    TsplibPath(PathBuf),
    Random { n: usize, seed: u64, size: f64 },
}

impl InstanceSource {
    /// `random:N:SEED` or a TSPLIB file path.
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(rest) = s.strip_prefix("random:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 2 {
                return Err(QacoError::Config(format!(
                    "random instance spec must be random:N:SEED, got {s}"
                )));
            }
            let n = parts[0]
                .parse()
                .map_err(|_| QacoError::Config(format!("bad city count in {s}")))?;
            let seed = parts[1]
                .parse()
                .map_err(|_| QacoError::Config(format!("bad seed in {s}")))?;
            Ok(InstanceSource::Random {
                n,
                seed,
                size: 1000.0,
            })
        } else {
            Ok(InstanceSource::TsplibPath(PathBuf::from(s)))
        }
    }

    pub fn load(&self) -> Result<TspInstance> {
        match self {
            InstanceSource::TsplibPath(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    QacoError::Config(format!("cannot read {}: {e}", p.display()))
                })?;
                parse_tsplib(&text)
            }
            InstanceSource::Random { n, seed, size } => random_instance(*n, *seed, (*size, *size)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: InstanceSource,
    pub metric_override: Option<Metric>,
    pub algorithm: Algorithm,
    pub aco: AcoConfig,
    pub qaco: QacoConfig,
    /// Cities per decomposition leaf for the K-means variants.
    pub cap: usize,
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    pub fn new(source: InstanceSource, algorithm: Algorithm, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            source,
            metric_override: None,
            algorithm,
            aco: AcoConfig::default(),
            qaco: QacoConfig::default(),
            cap: 4,
            seeds,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(QacoError::Config("empty seed list".into()));
        }
        self.aco.validate()?;
        if self.qaco.max_iterations == 0 {
            return Err(QacoError::Config("need at least 1 iteration".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub best_length: f64,
    pub best_tour: Tour,
    pub trace: Vec<(usize, f64)>,
    pub wall_ms: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct RunReport {
    pub algorithm: String,
    pub instance: String,
    pub records: Vec<SeedRecord>,
    pub min: f64,
    pub mean: f64,
    pub std: f64,
}

impl RunReport {
    fn from_records(algorithm: &str, instance: &str, records: Vec<SeedRecord>) -> Self {
        let lengths: Vec<f64> = records.iter().map(|r| r.best_length).collect();
        let min = lengths.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
        let var = lengths.iter().map(|l| (l - mean).powi(2)).sum::<f64>() / lengths.len() as f64;
        RunReport {
            algorithm: algorithm.to_string(),
            instance: instance.to_string(),
            records,
            min,
            mean,
            std: var.sqrt(),
        }
    }
}

struct QacoSub {
    cfg: QacoConfig,
}

impl SubSolver for QacoSub {
    fn solve(&self, instance: &TspInstance, rng: &mut ChaCha8Rng) -> Result<Tour> {
        Ok(qaco_solve(instance, &self.cfg, rng)?.best_tour)
    }
    fn city_cap(&self) -> usize {
        self.cfg.city_cap
    }
}

struct AcoSub {
    cfg: AcoConfig,
    cap: usize,
}

impl SubSolver for AcoSub {
    fn solve(&self, instance: &TspInstance, rng: &mut ChaCha8Rng) -> Result<Tour> {
        Ok(aco_solve(instance, &self.cfg, rng)?.best_tour)
    }
    fn city_cap(&self) -> usize {
        self.cap
    }
}

/// Run one seed of the configured algorithm.
fn run_seed(cfg: &ExperimentConfig, instance: &TspInstance, seed: u64) -> Result<SeedRecord> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (best_tour, best_length, trace) = match cfg.algorithm {
        Algorithm::Aco => {
            let out = aco_solve(instance, &cfg.aco, &mut rng)?;
            (out.best_tour, out.best_length, out.trace)
        }
        Algorithm::Qaco => {
            let out = qaco_solve(instance, &cfg.qaco, &mut rng)?;
            (out.best_tour, out.best_length, out.trace)
        }
        Algorithm::QacoKmeans => {
            let solver = QacoSub {
                cfg: cfg.qaco.clone(),
            };
            let (tour, len) = hierarchical_solve(instance, &solver, cfg.cap, &mut rng)?;
            (tour, len, Vec::new())
        }
        Algorithm::AcoKmeans => {
            let solver = AcoSub {
                cfg: cfg.aco.clone(),
                cap: cfg.cap,
            };
            let (tour, len) = hierarchical_solve(instance, &solver, cfg.cap, &mut rng)?;
            (tour, len, Vec::new())
        }
    };
    let feasible = is_permutation(&best_tour, instance.dimension);
    Ok(SeedRecord {
        seed,
        best_length,
        best_tour,
        trace,
        wall_ms: start.elapsed().as_secs_f64() * 1000.0,
        feasible,
    })
}

/// Execute every seed independently; the report is deterministic given the
/// config (wall times aside).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let mut instance = cfg.source.load()?;
    if let Some(metric) = cfg.metric_override {
        instance = instance.with_metric(metric)?;
    }
    let mut records = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        records.push(run_seed(cfg, &instance, seed)?);
    }
    Ok(RunReport::from_records(
        cfg.algorithm.name(),
        &instance.name,
        records,
    ))
}

/// One experiment per (noise model, rate) pair over both channel types, with
/// the same seed list in every cell.
pub fn noise_sweep(
    cfg: &ExperimentConfig,
    rates: &[f64],
) -> Result<Vec<((NoiseModel, f64), RunReport)>> {
    let mut table = Vec::new();
    for model in [NoiseModel::BitFlip, NoiseModel::ThermalRelaxation] {
        for &rate in rates {
            let mut cell = cfg.clone();
            cell.qaco.noise = NoiseSpec::new(model, rate, NoisePlacement::AfterMultiQubitGates)?;
            table.push(((model, rate), run_experiment(&cell)?));
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    SvgTrace,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "svg" => Ok(ReportFormat::SvgTrace),
            other => Err(QacoError::Config(format!("unknown format {other}"))),
        }
    }
}

/// Serialize one report. CSV carries per-seed rows with wall time; JSON
/// mirrors the whole report; SVG renders one best-length-vs-iteration
/// polyline per seed.
pub fn emit_report(report: &RunReport, format: ReportFormat) -> Result<String> {
    match format {
        ReportFormat::Csv => Ok(to_csv(std::slice::from_ref(report), true)),
        ReportFormat::Json => {
            Ok(serde_json::to_string_pretty(report).expect("report serializes"))
        }
        ReportFormat::SvgTrace => Ok(to_svg(report)),
    }
}

/// CSV over one or more reports. Wall-time is nondeterministic, so callers
/// that need byte-stable output (the `compare` reporter) drop that column.
pub fn to_csv(reports: &[RunReport], include_wall: bool) -> String {
    let mut out = String::new();
    if include_wall {
        out.push_str("algorithm,instance,seed,best_length,wall_ms\n");
    } else {
        out.push_str("algorithm,instance,seed,best_length\n");
    }
    for report in reports {
        for r in &report.records {
            if include_wall {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{:.3}",
                    report.algorithm, report.instance, r.seed, r.best_length, r.wall_ms
                );
            } else {
                let _ = writeln!(
                    out,
                    "{},{},{},{}",
                    report.algorithm, report.instance, r.seed, r.best_length
                );
            }
        }
    }
    out
}

fn to_svg(report: &RunReport) -> String {
    const W: f64 = 800.0;
    const H: f64 = 400.0;
    const MARGIN: f64 = 40.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="20" font-size="14">{} on {}</text>"#,
        MARGIN, report.algorithm, report.instance
    );
    let max_iter = report
        .records
        .iter()
        .flat_map(|r| r.trace.iter().map(|t| t.0))
        .max()
        .unwrap_or(1) as f64;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for r in &report.records {
        for &(_, l) in &r.trace {
            lo = lo.min(l);
            hi = hi.max(l);
        }
    }
    if !lo.is_finite() {
        lo = 0.0;
        hi = 1.0;
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    for (i, r) in report.records.iter().enumerate() {
        let hue = (i * 360 / report.records.len().max(1)) % 360;
        let pts: Vec<String> = r
            .trace
            .iter()
            .map(|&(it, l)| {
                let x = MARGIN + (it as f64 / max_iter) * (W - 2.0 * MARGIN);
                let y = H - MARGIN - ((l - lo) / (hi - lo)) * (H - 2.0 * MARGIN);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="hsl({hue},70%,45%)" points="{}"/>"#,
            pts.join(" ")
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Flat `key = value` config text; `#` starts a comment.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| QacoError::Parse {
            line: i + 1,
            message: "expected key = value".into(),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Apply a config-file key to an experiment config.
pub fn apply_config_key(cfg: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    let bad = |what: &str| QacoError::Config(format!("bad value {value} for {what}"));
    match key {
        "instance" => cfg.source = InstanceSource::parse(value)?,
        "algo" => cfg.algorithm = Algorithm::parse(value)?,
        "seeds" => {
            cfg.seeds = value
                .split(',')
                .map(|s| s.trim().parse().map_err(|_| bad("seeds")))
                .collect::<Result<Vec<u64>>>()?;
        }
        "iters" => {
            let n: usize = value.parse().map_err(|_| bad("iters"))?;
            cfg.aco.iterations = n;
            cfg.qaco.max_iterations = n;
        }
        "cap" => {
            cfg.cap = value.parse().map_err(|_| bad("cap"))?;
            cfg.qaco.city_cap = cfg.cap;
        }
        "metric" => {
            cfg.metric_override = Some(match value {
                "euc2d" => Metric::Euc2d,
                "geo" => Metric::Geo,
                "raw" => Metric::RawEuclidean,
                "explicit" => Metric::Explicit,
                _ => return Err(bad("metric")),
            });
        }
        "noise" => cfg.qaco.noise = parse_noise(value)?,
        "alpha" => cfg.aco.alpha = value.parse().map_err(|_| bad("alpha"))?,
        "beta" => cfg.aco.beta = value.parse().map_err(|_| bad("beta"))?,
        "rho" => cfg.aco.rho = value.parse().map_err(|_| bad("rho"))?,
        "q0" => cfg.aco.q0 = value.parse().map_err(|_| bad("q0"))?,
        "ants" => cfg.aco.num_ants = value.parse().map_err(|_| bad("ants"))?,
        "pool" => cfg.qaco.pool_capacity = value.parse().map_err(|_| bad("pool"))?,
        "shots" => cfg.qaco.shots_per_iteration = value.parse().map_err(|_| bad("shots"))?,
        other => return Err(QacoError::Config(format!("unknown config key {other}"))),
    }
    Ok(())
}

/// `bitflip:RATE` or `thermal:RATE`.
pub fn parse_noise(s: &str) -> Result<NoiseSpec> {
    let (model, rate) = s
        .split_once(':')
        .ok_or_else(|| QacoError::Config(format!("noise spec must be MODEL:RATE, got {s}")))?;
    let model = match model {
        "bitflip" => NoiseModel::BitFlip,
        "thermal" => NoiseModel::ThermalRelaxation,
        other => return Err(QacoError::Config(format!("unknown noise model {other}"))),
    };
    let rate: f64 = rate
        .parse()
        .map_err(|_| QacoError::Config(format!("bad noise rate in {s}")))?;
    NoiseSpec::new(model, rate, NoisePlacement::AfterMultiQubitGates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn small_cfg(algorithm: Algorithm) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(
            InstanceSource::Random {
                n: 8,
                seed: 42,
                size: 100.0,
            },
            algorithm,
            vec![1, 2],
        );
        cfg.aco.iterations = 30;
        cfg.qaco.max_iterations = 60;
        cfg
    }

    #[test]
    fn empty_seed_list_is_config_error() {
        let mut cfg = small_cfg(Algorithm::Aco);
        cfg.seeds.clear();
        assert!(matches!(run_experiment(&cfg), Err(QacoError::Config(_))));
    }

    #[test]
    fn report_aggregates_consistent() {
        let cfg = small_cfg(Algorithm::AcoKmeans);
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.records.len(), 2);
        assert!(report.records.iter().all(|r| r.feasible));
        let mean = report.records.iter().map(|r| r.best_length).sum::<f64>() / 2.0;
        assert_abs_diff_eq!(report.mean, mean, epsilon = 1e-9);
        assert!(report.min <= report.mean);
    }

    #[test]
    fn qaco_kmeans_runs_feasible() {
        let cfg = small_cfg(Algorithm::QacoKmeans);
        let report = run_experiment(&cfg).unwrap();
        assert!(report.records.iter().all(|r| r.feasible));
    }

    #[test]
    fn reports_deterministic_without_noise() {
        let cfg = small_cfg(Algorithm::QacoKmeans);
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(to_csv(&[a], false), to_csv(&[b], false));
    }

    #[test]
    fn noise_sweep_rate_zero_matches_baseline() {
        let cfg = small_cfg(Algorithm::QacoKmeans);
        let baseline = run_experiment(&cfg).unwrap();
        let table = noise_sweep(&cfg, &[0.0]).unwrap();
        assert_eq!(table.len(), 2);
        for (_, report) in table {
            assert_eq!(to_csv(&[report], false), to_csv(&[baseline.clone()], false));
        }
    }

    #[test]
    fn noise_sweep_shape() {
        let mut cfg = small_cfg(Algorithm::QacoKmeans);
        cfg.seeds = vec![7];
        cfg.qaco.max_iterations = 20;
        let table = noise_sweep(&cfg, &[0.01]).unwrap();
        assert_eq!(table.len(), 2);
        let models: Vec<NoiseModel> = table.iter().map(|((m, _), _)| *m).collect();
        assert!(models.contains(&NoiseModel::BitFlip));
        assert!(models.contains(&NoiseModel::ThermalRelaxation));
    }

    #[test]
    fn csv_shape() {
        let cfg = small_cfg(Algorithm::Aco);
        let report = run_experiment(&cfg).unwrap();
        let csv = emit_report(&report, ReportFormat::Csv).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "algorithm,instance,seed,best_length,wall_ms");
    }

    #[test]
    fn json_roundtrip() {
        let cfg = small_cfg(Algorithm::Aco);
        let report = run_experiment(&cfg).unwrap();
        let json = emit_report(&report, ReportFormat::Json).unwrap();
        let back: RunReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.mean, report.mean);
        assert_eq!(back.records.len(), report.records.len());
        for (a, b) in back.records.iter().zip(&report.records) {
            assert_eq!(a.best_length, b.best_length);
            assert_eq!(a.best_tour, b.best_tour);
        }
    }

    #[test]
    fn svg_has_one_polyline_per_seed() {
        let cfg = small_cfg(Algorithm::Aco);
        let report = run_experiment(&cfg).unwrap();
        let svg = emit_report(&report, ReportFormat::SvgTrace).unwrap();
        assert_eq!(svg.matches("<polyline").count(), report.records.len());
    }

    #[test]
    fn config_file_parsing() {
        let text = "\n# comment\nalgo = qaco-kmeans\niters = 50\nseeds = 1, 2, 3\nnoise = bitflip:0.01\n";
        let kv = parse_config_file(text).unwrap();
        let mut cfg = small_cfg(Algorithm::Aco);
        for (k, v) in kv {
            apply_config_key(&mut cfg, &k, &v).unwrap();
        }
        assert_eq!(cfg.algorithm, Algorithm::QacoKmeans);
        assert_eq!(cfg.qaco.max_iterations, 50);
        assert_eq!(cfg.seeds, vec![1, 2, 3]);
        assert_eq!(cfg.qaco.noise.model, NoiseModel::BitFlip);
    }

    #[test]
    fn bad_config_values_rejected() {
        let mut cfg = small_cfg(Algorithm::Aco);
        assert!(apply_config_key(&mut cfg, "algo", "annealing").is_err());
        assert!(apply_config_key(&mut cfg, "noise", "bitflip").is_err());
        assert!(apply_config_key(&mut cfg, "nonsense", "1").is_err());
        assert!(parse_noise("bitflip:1.5").is_err());
    }
}
