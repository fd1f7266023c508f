//! End-to-end run: generate, sieve, extract kernel relations, classify,
//! optionally verify, and render a report.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::PathBuf;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ffpoly::{is_prime, ModFrac};
use crate::funclib::parse_expr;
use crate::generator::{self, FactorSpec, GenConfig, GenError, Label};
use crate::relations::{
    classify, relation_from_kernel, Class, Relation, RelationJson, RelationTemplate, RenderError,
};
use crate::sieve::{self, HoldingBasis, SieveError};
use crate::verifier::{Verifier, VerifyReport, VerifyStatus, DEFAULT_CUTOFF, DEFAULT_TOL};

pub const DEFAULT_PRIME: u32 = 997;
const SPOT_CHECKS: usize = 10;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}, column {column}: {msg}")]
    Json {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("factor {index}: {msg}")]
    Factor { index: usize, msg: String },
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error("modulus {0} is not a prime")]
    NotPrime(u32),
    #[error("thread count must be at least 1")]
    Threads,
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sieve(#[from] SieveError),
    #[error("debug dump: {0}")]
    Dump(#[from] std::io::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorFile {
    expr: String,
    #[serde(default)]
    min: u32,
    max: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    factors: Vec<FactorFile>,
    #[serde(default)]
    min_s: i64,
    #[serde(default)]
    max_s: i64,
    max_score: Option<u32>,
    prime: Option<u32>,
    threads: Option<usize>,
    zeta_max: Option<i64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Shell,
    Latex,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifySettings {
    pub cutoff: u64,
    pub tol: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            cutoff: DEFAULT_CUTOFF,
            tol: DEFAULT_TOL,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub gen: GenConfig,
    pub p: u32,
    pub threads: usize,
    /// Largest ζ shift added to the rows; derived from fraction degrees if unset.
    pub zeta_max: Option<i64>,
    pub catalog: Vec<RelationTemplate>,
    pub verify: Option<VerifySettings>,
    pub show_trivial: bool,
    pub dump_debug: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(gen: GenConfig) -> RunConfig {
        RunConfig {
            gen,
            p: DEFAULT_PRIME,
            threads: default_threads(),
            zeta_max: None,
            catalog: crate::relations::known(),
            verify: None,
            show_trivial: false,
            dump_debug: None,
        }
    }

    /// Parse a JSON config file. Factor expressions use the function grammar.
    pub fn from_json(text: &str) -> Result<RunConfig, ConfigError> {
        let raw: ConfigFile = serde_json::from_str(text).map_err(|e| ConfigError::Json {
            line: e.line(),
            column: e.column(),
            msg: e.to_string(),
        })?;
        let mut factors = Vec::with_capacity(raw.factors.len());
        for (index, f) in raw.factors.into_iter().enumerate() {
            let pat = parse_expr(&f.expr).map_err(|e| ConfigError::Factor {
                index,
                msg: e.to_string(),
            })?;
            let expr = pat
                .instantiate(&Default::default())
                .map_err(|msg| ConfigError::Factor { index, msg })?;
            factors.push(FactorSpec {
                expr,
                min: f.min,
                max: f.max,
            });
        }
        let max_score = raw
            .max_score
            .unwrap_or_else(|| factors.iter().map(|f| f.max).sum());
        let gen = GenConfig {
            factors,
            min_s: raw.min_s,
            max_s: raw.max_s,
            max_score,
        };
        gen.validate()?;
        let mut cfg = RunConfig::new(gen);
        if let Some(p) = raw.prime {
            cfg.p = p;
        }
        if let Some(t) = raw.threads {
            cfg.threads = t;
        }
        cfg.zeta_max = raw.zeta_max;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.gen.validate()?;
        if !is_prime(self.p) {
            return Err(ConfigError::NotPrime(self.p));
        }
        if self.threads == 0 {
            return Err(ConfigError::Threads);
        }
        Ok(())
    }
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// One emitted relation.
#[derive(Clone, Debug)]
pub struct Found {
    pub relation: Relation,
    pub class: Class,
    pub verification: Option<VerifyReport>,
}

impl Found {
    pub fn render(&self, format: OutputFormat) -> Result<String, RenderError> {
        let suffix = self
            .verification
            .as_ref()
            .map_or(String::new(), |v| format!("  {v}"));
        Ok(match format {
            OutputFormat::Shell => {
                format!(
                    "[{}] {}{suffix}",
                    self.class.tag(),
                    self.relation.render_shell()?
                )
            }
            OutputFormat::Latex => format!(
                "\\texttt{{[{}]}} & ${}$ \\\\{}",
                self.class.tag(),
                self.relation.render_latex()?,
                if suffix.is_empty() {
                    String::new()
                } else {
                    format!(" %{suffix}")
                }
            ),
            OutputFormat::Json => serde_json::to_string(&self.to_json()).expect("serializable"),
        })
    }

    pub fn to_json(&self) -> RelationJson {
        let id = match &self.class {
            Class::Known(m) => Some(m.id.as_str()),
            Class::Unknown => None,
        };
        let verified = self.verification.as_ref().and_then(|v| match v.status {
            VerifyStatus::DivergentTerm => None,
            _ => Some(v.passed()),
        });
        self.relation.to_json(id, verified)
    }

    pub fn verification_failed(&self) -> bool {
        self.verification.as_ref().is_some_and(|v| {
            matches!(
                v.status,
                VerifyStatus::Fail | VerifyStatus::ConstantMismatch { .. }
            )
        })
    }
}

#[derive(Clone, Debug, Default, Serialize, PartialEq, Eq)]
pub struct Summary {
    pub r_fractions: usize,
    pub skipped: usize,
    pub zeta_rows: usize,
    pub basis_size: usize,
    pub kernel_dim: usize,
    pub relations: usize,
    pub known: usize,
    pub new: usize,
    pub unclassified: usize,
    pub trivial_suppressed: usize,
    pub verify_failed: usize,
    /// Relations per template id, in catalog order.
    pub by_id: Vec<(String, usize)>,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub found: Vec<Found>,
    pub summary: Summary,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    summary: &'a Summary,
    relations: Vec<RelationJson>,
}

impl Report {
    pub fn any_verification_failed(&self) -> bool {
        self.found.iter().any(Found::verification_failed)
    }

    pub fn relation_lines(&self, format: OutputFormat) -> Vec<String> {
        self.found
            .iter()
            .map(|f| f.render(format).expect("emitted relations are nonempty"))
            .collect()
    }

    fn summary_lines(&self) -> Vec<String> {
        let s = &self.summary;
        let mut out = vec![
            format!("R-fractions: {} ({} skipped)", s.r_fractions, s.skipped),
            format!("zeta rows: {}", s.zeta_rows),
            format!("basis size: {}", s.basis_size),
            format!("kernel dimension: {}", s.kernel_dim),
            format!("relations: {}", s.relations),
            format!("  known: {}", s.known),
            format!("  new: {}", s.new),
            format!("  unclassified: {}", s.unclassified),
        ];
        out.extend(s.by_id.iter().map(|(id, n)| format!("  [{id}]: {n}")));
        if s.trivial_suppressed > 0 {
            out.push(format!(
                "trivial relations suppressed: {}",
                s.trivial_suppressed
            ));
        }
        if s.verify_failed > 0 {
            out.push(format!("verification failures: {}", s.verify_failed));
        }
        out
    }

    pub fn render(&self, format: OutputFormat) -> String {
        let mut out = String::new();
        match format {
            OutputFormat::Json => {
                let doc = JsonReport {
                    summary: &self.summary,
                    relations: self.found.iter().map(Found::to_json).collect(),
                };
                out = serde_json::to_string_pretty(&doc).expect("serializable");
                out.push('\n');
            }
            OutputFormat::Shell | OutputFormat::Latex => {
                let comment = if format == OutputFormat::Shell {
                    "#"
                } else {
                    "%"
                };
                for line in self.relation_lines(format) {
                    writeln!(out, "{line}").unwrap();
                }
                for line in self.summary_lines() {
                    writeln!(out, "{comment} {line}").unwrap();
                }
            }
        }
        out
    }
}

fn row_order(a: &Label, b: &Label) -> Ordering {
    (!a.is_zeta(), a.expr.score(), a.shift, a.expr.to_grammar()).cmp(&(
        !b.is_zeta(),
        b.expr.score(),
        b.shift,
        b.expr.to_grammar(),
    ))
}

/// Labels and monic fractions of every row: the ζ closure first, then the
/// generated entries by score, shift and name.
fn build_rows(
    gen: &generator::Generation,
    p: u32,
    zeta_max: Option<i64>,
) -> (Vec<Label>, Vec<ModFrac>, usize) {
    let z = zeta_max.unwrap_or_else(|| {
        let d = gen
            .entries
            .iter()
            .map(|e| {
                let f = e.fraction.monic();
                f.num().deg_i64().max(f.den().deg_i64())
            })
            .max()
            .unwrap_or(0);
        zeta_bound(d)
    });
    let mut rows: Vec<(Label, ModFrac)> = Vec::new();
    let mut seen: HashSet<(crate::funclib::FuncExpr, i64)> = HashSet::new();
    let mut zeta_rows = 0;
    let one = crate::funclib::FuncExpr::one();
    let unit = one.rep(p).expect("unit representation");
    for m in 2..=z {
        let frac = unit.rfraction_at(m).expect("ζ fraction");
        seen.insert((one.canonical(), m));
        rows.push((Label::zeta(m), frac.monic()));
        zeta_rows += 1;
    }
    let mut entries: Vec<(Label, ModFrac)> = Vec::new();
    for e in &gen.entries {
        if seen.insert((e.label.expr.canonical(), e.label.shift)) {
            entries.push((e.label.clone(), e.fraction.monic()));
        }
    }
    entries.sort_by(|a, b| row_order(&a.0, &b.0));
    rows.extend(entries);
    let (labels, fracs) = rows.into_iter().unzip();
    (labels, fracs, zeta_rows)
}

fn totient(mut n: i64) -> i64 {
    let mut out = n;
    let mut q = 2;
    while q * q <= n {
        if n % q == 0 {
            while n % q == 0 {
                n /= q;
            }
            out -= out / q;
        }
        q += 1;
    }
    if n > 1 {
        out -= out / n;
    }
    out
}

/// Largest `m` whose cyclotomic factor `Φ_m` fits in degree `d`. A ζ(m)
/// with larger `m` cannot appear in a relation: its `Φ_m` would occur in no
/// other row.
pub fn zeta_bound(d: i64) -> i64 {
    (1..=2 * d * d + 6)
        .filter(|&m| totient(m) <= d)
        .max()
        .unwrap_or(1)
}

fn group_key(found: &Found, order: &BTreeMap<&str, usize>) -> (usize, u32, String, i64, String) {
    let lead = &found.relation.terms()[0].label;
    let g = match &found.class {
        Class::Known(m) => order.get(m.id.as_str()).copied().unwrap_or(usize::MAX - 1),
        Class::Unknown => usize::MAX,
    };
    (
        g,
        lead.expr.score(),
        lead.expr.to_grammar(),
        lead.shift,
        found.relation.render_shell().unwrap_or_default(),
    )
}

/// Run the whole pipeline.
pub fn run(cfg: &RunConfig) -> Result<Report, RunError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    pool.install(|| run_in_pool(cfg))
}

fn run_in_pool(cfg: &RunConfig) -> Result<Report, RunError> {
    let p = cfg.p;
    let gen = generator::enumerate(&cfg.gen, p).map_err(ConfigError::from)?;
    for s in &gen.skipped {
        warn!("skipped {}: {}", s.expr, s.reason);
    }
    for l in generator::spot_check(&gen.entries, p, SPOT_CHECKS) {
        warn!("incremental and direct fractions differ for {l}");
    }
    let (labels, fractions, zeta_rows) = build_rows(&gen, p, cfg.zeta_max);
    info!("{} rows ({} ζ)", labels.len(), zeta_rows);

    let polys = sieve::fraction_polys(&fractions);
    let basis = HoldingBasis::build_parallel(&polys, cfg.threads)?.sorted();
    let matrix = sieve::composition_matrix(&fractions, &basis)?;
    if let Some(path) = &cfg.dump_debug {
        let names: Vec<String> = labels.iter().map(ToString::to_string).collect();
        sieve::dump_debug(path, p, &basis, &matrix, &names)?;
    }
    let function_rows: Vec<usize> = (zeta_rows..labels.len()).rev().collect();
    let kernel = sieve::echelon(sieve::kernel_relations(&matrix), &function_rows);
    info!(
        "basis {} elements, kernel dimension {}",
        basis.len(),
        kernel.len()
    );

    let mut seen = HashSet::new();
    let mut trivial = 0;
    let mut relations = Vec::new();
    for v in &kernel {
        let Some(r) = relation_from_kernel(v, &labels) else {
            continue;
        };
        if !seen.insert(r.key()) {
            continue;
        }
        if r.is_trivial() && !cfg.show_trivial {
            trivial += 1;
            continue;
        }
        relations.push(r);
    }

    let classes: Vec<Class> = relations
        .par_iter()
        .map(|r| classify(r, &cfg.catalog).map_or(Class::Unknown, Class::Known))
        .collect();
    let reports: Vec<Option<VerifyReport>> = match cfg.verify {
        Some(v) => {
            let verifier = Verifier::new(v.cutoff, v.tol, p);
            verifier
                .verify_all(&relations)
                .into_iter()
                .map(Some)
                .collect()
        }
        None => vec![None; relations.len()],
    };
    let mut found: Vec<Found> = relations
        .into_iter()
        .zip(classes)
        .zip(reports)
        .map(|((relation, class), verification)| Found {
            relation,
            class,
            verification,
        })
        .collect();

    let order: BTreeMap<&str, usize> = cfg
        .catalog
        .iter()
        .enumerate()
        .rev()
        .map(|(i, t)| (t.id.as_str(), i))
        .collect();
    found.sort_by_cached_key(|f| group_key(f, &order));

    let mut by_id: Vec<(String, usize)> = Vec::new();
    for f in &found {
        if let Class::Known(m) = &f.class {
            match by_id.last_mut() {
                Some((id, n)) if *id == m.id => *n += 1,
                _ => by_id.push((m.id.clone(), 1)),
            }
        }
    }
    let known = found
        .iter()
        .filter(|f| matches!(&f.class, Class::Known(m) if !m.id.starts_with("C-")))
        .count();
    let unclassified = found.iter().filter(|f| f.class == Class::Unknown).count();
    let summary = Summary {
        r_fractions: gen.entries.len(),
        skipped: gen.skipped.len(),
        zeta_rows,
        basis_size: basis.len(),
        kernel_dim: kernel.len(),
        relations: found.len(),
        known,
        new: found.len() - known - unclassified,
        unclassified,
        trivial_suppressed: trivial,
        verify_failed: found.iter().filter(|f| f.verification_failed()).count(),
        by_id,
    };
    Ok(Report { found, summary })
}
