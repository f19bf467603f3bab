//! Command-line front end.
//!
//! Exit codes: 0 success, 2 negative result, 3 inconclusive, 64 bad input.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certify::{certify_no_real_points, check_hypotheses, CertVerdict, HypothesisFlags, RealnessCertificate};
use crate::line::{
    construct_line_detailed, line_relative_residual, line_residuals, solve_lambda, solve_mu, ComplexLine, MuCandidate,
    MuRoute, StageReport,
};
use crate::numerics::C64;
use crate::quadrics::QuadricParams;
use crate::scan::{
    parameter_search, scan_intersecting_lines, Filters, Integrability, IntersectionReport, SearchError, SearchHit,
    SearchSpec, SearchStats, Strategy,
};
use crate::smoothness::{smoothness_report, SmoothnessReport, Verdict};
use crate::tolerances::Tolerances;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "quadline", version, about = "Smoothness and real-point-free lines on three quadrics in six variables")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub global: GlobalArgs,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML file with keys c1..c6, d1..d3 and optional seed, tol_<name>, [search]
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the machine-readable report here (`-` for stdout)
    #[arg(long, global = true)]
    pub json: Option<PathBuf>,
    /// c1..c6 inline (repeat six times)
    #[arg(long = "c", global = true, allow_negative_numbers = true)]
    pub c: Vec<f64>,
    /// d1..d3 inline (repeat three times)
    #[arg(long = "d", global = true, allow_negative_numbers = true)]
    pub d: Vec<f64>,
    #[arg(long, global = true)]
    pub tol_b: Option<f64>,
    #[arg(long, global = true)]
    pub tol_mu: Option<f64>,
    #[arg(long, global = true)]
    pub tol_r: Option<f64>,
    #[arg(long, global = true)]
    pub tol_eq: Option<f64>,
    #[arg(long, global = true)]
    pub tol_line: Option<f64>,
    #[arg(long, global = true)]
    pub tol_direction: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Real, complex and projective smoothness
    Check {
        /// Samples per projective chart (0 skips the projective check)
        #[arg(long, default_value_t = 8)]
        chart_samples: usize,
    },
    /// Construct the complex lines of the ansatz
    Line,
    /// Certify absence of real points on each constructed line
    Certify,
    /// Search parameter space for fully certified instances
    Scan(ScanArgs),
    /// Hunt for lines meeting a certified line (heuristic)
    Intersect {
        #[arg(long, default_value_t = 64)]
        base_points: usize,
        #[arg(long, default_value_t = 200)]
        starts: usize,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Grid,
    UniformRandom,
    CoordinateRefine,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum IntegrabilityArg {
    Either,
    Integrable,
    NonIntegrable,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyArg>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub max_hits: Option<usize>,
    #[arg(long)]
    pub parallel: bool,
    #[arg(long, value_enum)]
    pub integrability: Option<IntegrabilityArg>,
    /// Do not require real smoothness
    #[arg(long)]
    pub allow_real_singular: bool,
    /// Do not require complex smoothness
    #[arg(long)]
    pub allow_complex_singular: bool,
}

/// Optional `[search]` table of the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub c_ranges: Option<[[f64; 2]; 6]>,
    pub d_ranges: Option<[[f64; 2]; 3]>,
    pub strategy: Option<Strategy>,
    pub budget: Option<usize>,
    pub max_hits: Option<usize>,
    pub parallel: Option<bool>,
    pub require_real_smooth: Option<bool>,
    pub require_complex_smooth: Option<bool>,
    pub integrability: Option<Integrability>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub c5: Option<f64>,
    pub c6: Option<f64>,
    pub d1: Option<f64>,
    pub d2: Option<f64>,
    pub d3: Option<f64>,
    pub seed: Option<u64>,
    pub tol_b: Option<f64>,
    pub tol_mu: Option<f64>,
    pub tol_r: Option<f64>,
    pub tol_eq: Option<f64>,
    pub tol_line: Option<f64>,
    pub tol_direction: Option<f64>,
    pub search: Option<SearchSection>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    /// `None` when no coefficient is present; an error when only some are.
    pub fn params(&self) -> Result<Option<QuadricParams>, String> {
        let c = [self.c1, self.c2, self.c3, self.c4, self.c5, self.c6];
        let d = [self.d1, self.d2, self.d3];
        let present = c.iter().chain(&d).filter(|x| x.is_some()).count();
        if present == 0 {
            return Ok(None);
        }
        let missing: Vec<String> = c
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_none())
            .map(|(i, _)| format!("c{}", i + 1))
            .chain(d.iter().enumerate().filter(|(_, v)| v.is_none()).map(|(i, _)| format!("d{}", i + 1)))
            .collect();
        if !missing.is_empty() {
            return Err(format!("missing keys: {}", missing.join(", ")));
        }
        Ok(Some(QuadricParams::new(c.map(Option::unwrap), d.map(Option::unwrap))))
    }

    fn tolerance_overrides(&self) -> [(&'static str, Option<f64>); 6] {
        [
            ("b", self.tol_b),
            ("mu", self.tol_mu),
            ("r", self.tol_r),
            ("eq", self.tol_eq),
            ("line", self.tol_line),
            ("direction", self.tol_direction),
        ]
    }
}

/// Everything a command needs, after merging file and flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: Option<QuadricParams>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub search: SearchSection,
}

impl RunConfig {
    pub fn from_args(global: &GlobalArgs) -> Result<Self, String> {
        let file = match &global.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
                ConfigFile::parse(&text).map_err(|e| format!("{}: {e}", path.display()))?
            }
            None => ConfigFile::default(),
        };
        let mut params = file.params()?;
        if !global.c.is_empty() || !global.d.is_empty() {
            if global.c.len() != 6 || global.d.len() != 3 {
                return Err(format!(
                    "inline parameters need six --c and three --d values, got {} and {}",
                    global.c.len(),
                    global.d.len()
                ));
            }
            params = Some(QuadricParams::new(
                std::array::from_fn(|i| global.c[i]),
                std::array::from_fn(|i| global.d[i]),
            ));
        }
        if let Some(p) = &params {
            if !p.is_finite() {
                return Err("parameters must be finite".into());
            }
        }
        let mut tolerances = Tolerances::default();
        let flags = [
            ("b", global.tol_b),
            ("mu", global.tol_mu),
            ("r", global.tol_r),
            ("eq", global.tol_eq),
            ("line", global.tol_line),
            ("direction", global.tol_direction),
        ];
        for (name, value) in file.tolerance_overrides().into_iter().chain(flags) {
            if let Some(v) = value {
                tolerances.set(name, v)?;
            }
        }
        Ok(RunConfig {
            params,
            tolerances,
            seed: global.seed.or(file.seed).unwrap_or(0),
            output_path: global.json.clone(),
            search: file.search.unwrap_or_default(),
        })
    }

    fn require_params(&self) -> Result<QuadricParams, String> {
        self.params.ok_or_else(|| "no parameters: pass --config or six --c and three --d".to_string())
    }
}

/// Top-level JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonDoc<T> {
    pub schema: u32,
    pub command: String,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub report: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineEntry {
    pub line: ComplexLine,
    #[serde(with = "crate::cx::array")]
    pub residuals: [C64; 9],
    pub relative_residual: f64,
    pub flags: HypothesisFlags,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuRoutes {
    #[serde(with = "crate::cx")]
    pub lambda: C64,
    pub compatibility: Vec<MuCandidate>,
    pub radical: Vec<MuCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineReport {
    pub params: QuadricParams,
    pub lines: Vec<LineEntry>,
    pub stages: StageReport,
    pub mu_routes: Vec<MuRoutes>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyEntry {
    pub line: ComplexLine,
    pub certificate: RealnessCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub params: QuadricParams,
    pub entries: Vec<CertifyEntry>,
    pub certified: usize,
    pub stages: StageReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub spec: SearchSpec,
    pub exhausted: bool,
    pub hits: Vec<SearchHit>,
    pub stats: SearchStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntersectReport {
    pub params: QuadricParams,
    pub base_line: Option<ComplexLine>,
    pub report: Option<IntersectionReport>,
}

fn write_json<T: Serialize>(
    cfg: &RunConfig,
    command: &str,
    report: &T,
    out: &mut dyn Write,
) -> Result<(), String> {
    let Some(path) = &cfg.output_path else { return Ok(()) };
    let doc = JsonDoc { schema: SCHEMA_VERSION, command: command.to_string(), seed: cfg.seed, tolerances: cfg.tolerances, report };
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| e.to_string())?;
    text.push('\n');
    if path == Path::new("-") {
        out.write_all(text.as_bytes()).map_err(|e| e.to_string())
    } else {
        std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn fmt_c(z: C64) -> String {
    format!("{:+.6e}{:+.6e}i", z.re, z.im)
}

fn line_report(params: &QuadricParams, tol: &Tolerances) -> LineReport {
    let built = construct_line_detailed(params, tol);
    let lines = built
        .lines
        .iter()
        .map(|l| LineEntry {
            line: *l,
            residuals: line_residuals(params, l),
            relative_residual: line_relative_residual(params, l),
            flags: check_hypotheses(params, l, tol),
        })
        .collect();
    let mu_routes = solve_lambda(params.d)
        .map(|ls| {
            ls.iter()
                .map(|&lambda| MuRoutes {
                    lambda,
                    compatibility: solve_mu(params, lambda, MuRoute::Compatibility, tol)
                        .map(|s| s.candidates)
                        .unwrap_or_default(),
                    radical: solve_mu(params, lambda, MuRoute::Radical, tol).map(|s| s.candidates).unwrap_or_default(),
                })
                .collect()
        })
        .unwrap_or_default();
    LineReport { params: *params, lines, stages: built.stages, mu_routes }
}

fn cmd_check(cfg: &RunConfig, chart_samples: usize, out: &mut dyn Write) -> Result<i32, String> {
    let params = cfg.require_params()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let report: SmoothnessReport = smoothness_report(&params, chart_samples, &mut rng, &cfg.tolerances);
    let w = |out: &mut dyn Write, s: String| writeln!(out, "{s}").map_err(|e| e.to_string());
    for v in [&report.real, &report.complex] {
        w(out, format!("{:?}: {:?} ({:?}), {} witness(es)", v.field, v.verdict, v.reason, v.witnesses.len()))?;
        for s in &v.witnesses {
            w(out, format!("  b = {}, a = {}, residual {:.3e}", fmt_c(s.b), fmt_c(s.a), s.max_residual()))?;
        }
    }
    if let Some(p) = &report.projective {
        for c in &p.charts {
            w(out, format!("chart {}: {:?} via {:?}, {} samples", c.chart, c.status, c.method, c.samples))?;
        }
    }
    write_json(cfg, "check", &report, out)?;
    let verdicts = [report.real.verdict, report.complex.verdict];
    Ok(if verdicts.contains(&Verdict::Inconclusive) {
        EXIT_INCONCLUSIVE
    } else if verdicts.iter().all(|v| *v == Verdict::Smooth) {
        EXIT_OK
    } else {
        EXIT_NEGATIVE
    })
}

fn cmd_line(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, String> {
    let params = cfg.require_params()?;
    let report = line_report(&params, &cfg.tolerances);
    let io = |e: std::io::Error| e.to_string();
    for (i, e) in report.lines.iter().enumerate() {
        let l = &e.line;
        writeln!(
            out,
            "line {i}: lambda {} mu {} branch {:?} relative residual {:.3e}",
            fmt_c(l.lambda),
            fmt_c(l.mu),
            l.branch,
            e.relative_residual
        )
        .map_err(io)?;
        for (j, row) in e.residuals.chunks(3).enumerate() {
            writeln!(out, "  f{}: t^2 {:.3e}  t {:.3e}  1 {:.3e}", j + 1, row[0].norm(), row[1].norm(), row[2].norm())
                .map_err(io)?;
        }
    }
    if report.lines.is_empty() {
        writeln!(out, "no line found; stage report: {:?}", report.stages).map_err(io)?;
    }
    write_json(cfg, "line", &report, out)?;
    Ok(if report.lines.is_empty() { EXIT_NEGATIVE } else { EXIT_OK })
}

fn cmd_certify(cfg: &RunConfig, out: &mut dyn Write) -> Result<i32, String> {
    let params = cfg.require_params()?;
    let built = construct_line_detailed(&params, &cfg.tolerances);
    let entries: Vec<CertifyEntry> = built
        .lines
        .iter()
        .map(|l| CertifyEntry { line: *l, certificate: certify_no_real_points(&params, l, &cfg.tolerances) })
        .collect();
    let certified = entries.iter().filter(|e| e.certificate.verdict == CertVerdict::Certified).count();
    let io = |e: std::io::Error| e.to_string();
    for (i, e) in entries.iter().enumerate() {
        let c = &e.certificate;
        writeln!(
            out,
            "line {i}: {:?}, oracle min {:.6e} at t = {}, threshold {:.3e}{}",
            c.verdict,
            c.oracle_min,
            fmt_c(c.oracle_argmin),
            c.threshold,
            c.note.as_deref().map(|n| format!(" ({n})")).unwrap_or_default()
        )
        .map_err(io)?;
    }
    writeln!(out, "{certified} of {} line(s) certified", entries.len()).map_err(io)?;
    let report = CertifyReport { params, entries, certified, stages: built.stages };
    write_json(cfg, "certify", &report, out)?;
    Ok(if certified > 0 { EXIT_OK } else { EXIT_NEGATIVE })
}

fn search_spec(cfg: &RunConfig, args: &ScanArgs) -> SearchSpec {
    let s = &cfg.search;
    let base = SearchSpec::default();
    let mut spec = SearchSpec {
        c_ranges: s.c_ranges.unwrap_or(base.c_ranges),
        d_ranges: s.d_ranges.unwrap_or(base.d_ranges),
        strategy: s.strategy.unwrap_or(base.strategy),
        budget: s.budget.unwrap_or(base.budget),
        seed: cfg.seed,
        filters: Filters {
            require_real_smooth: s.require_real_smooth.unwrap_or(base.filters.require_real_smooth),
            require_complex_smooth: s.require_complex_smooth.unwrap_or(base.filters.require_complex_smooth),
            integrability: s.integrability.unwrap_or(base.filters.integrability),
        },
        max_hits: s.max_hits.or(base.max_hits),
        parallel: s.parallel.unwrap_or(base.parallel),
    };
    if let Some(st) = args.strategy {
        spec.strategy = match st {
            StrategyArg::Grid => Strategy::Grid,
            StrategyArg::UniformRandom => Strategy::UniformRandom,
            StrategyArg::CoordinateRefine => Strategy::CoordinateRefine,
        };
    }
    if let Some(b) = args.budget {
        spec.budget = b;
    }
    if args.max_hits.is_some() {
        spec.max_hits = args.max_hits;
    }
    spec.parallel |= args.parallel;
    if let Some(i) = args.integrability {
        spec.filters.integrability = match i {
            IntegrabilityArg::Either => Integrability::Either,
            IntegrabilityArg::Integrable => Integrability::Integrable,
            IntegrabilityArg::NonIntegrable => Integrability::NonIntegrable,
        };
    }
    if args.allow_real_singular {
        spec.filters.require_real_smooth = false;
    }
    if args.allow_complex_singular {
        spec.filters.require_complex_smooth = false;
    }
    spec
}

fn cmd_scan(cfg: &RunConfig, args: &ScanArgs, out: &mut dyn Write) -> Result<i32, String> {
    let spec = search_spec(cfg, args);
    let io = |e: std::io::Error| e.to_string();
    let report = match parameter_search(&spec, &cfg.tolerances) {
        Ok(o) => ScanReport { spec, exhausted: false, hits: o.hits, stats: o.stats },
        Err(SearchError::BudgetExhausted(stats)) => ScanReport { spec, exhausted: true, hits: Vec::new(), stats },
        Err(e) => return Err(e.to_string()),
    };
    for h in &report.hits {
        let p = &h.params;
        writeln!(
            out,
            "hit at evaluation {}: c = {:?}, d = {:?}, oracle min {:.6e}",
            h.index, p.c, p.d, h.certificate.oracle_min
        )
        .map_err(io)?;
    }
    writeln!(out, "{:?}", report.stats).map_err(io)?;
    write_json(cfg, "scan", &report, out)?;
    Ok(if report.exhausted { EXIT_NEGATIVE } else { EXIT_OK })
}

fn cmd_intersect(cfg: &RunConfig, base_points: usize, starts: usize, out: &mut dyn Write) -> Result<i32, String> {
    let params = cfg.require_params()?;
    let tol = &cfg.tolerances;
    let io = |e: std::io::Error| e.to_string();
    let built = construct_line_detailed(&params, tol);
    let base = built
        .lines
        .iter()
        .find(|l| certify_no_real_points(&params, l, tol).verdict == CertVerdict::Certified)
        .copied();
    let Some(line) = base else {
        writeln!(out, "no certified base line").map_err(io)?;
        write_json(cfg, "intersect", &IntersectReport { params, base_line: None, report: None }, out)?;
        return Ok(EXIT_INCONCLUSIVE);
    };
    let rep = scan_intersecting_lines(&params, &line, base_points, starts, cfg.seed, tol);
    writeln!(out, "HEURISTIC: sampled {} base points (window radius {:.3})", rep.coverage, rep.window_radius)
        .map_err(io)?;
    for s in &rep.samples {
        writeln!(
            out,
            "  t = {}: {} direction(s), base recovered: {}",
            fmt_c(s.base_point_t),
            s.directions_found.len(),
            s.base_recovered
        )
        .map_err(io)?;
    }
    writeln!(out, "intersecting lines with a real point: {}", rep.flagged).map_err(io)?;
    let code = if rep.flagged > 0 { EXIT_NEGATIVE } else { EXIT_OK };
    write_json(cfg, "intersect", &IntersectReport { params, base_line: Some(line), report: Some(rep) }, out)?;
    Ok(code)
}

/// Parses `args` and runs the command; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    let cfg = match RunConfig::from_args(&cli.global) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "config error: {e}");
            return EXIT_USAGE;
        }
    };
    let result = match &cli.command {
        Command::Check { chart_samples } => cmd_check(&cfg, *chart_samples, out),
        Command::Line => cmd_line(&cfg, out),
        Command::Certify => cmd_certify(&cfg, out),
        Command::Scan(args) => cmd_scan(&cfg, args, out),
        Command::Intersect { base_points, starts } => cmd_intersect(&cfg, *base_points, *starts, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
