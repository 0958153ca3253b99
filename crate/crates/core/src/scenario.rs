//! Scenario files: a metric, a plot region and a list of tasks whose
//! artifacts (CSV reports, traces, manifests, SVG portraits) are written to
//! an output directory.
//!
//! ```toml
//! name = "saddle"
//! out = "out/saddle"            # relative to the scenario file
//!
//! [metric]
//! omega = "-1"                  # normal form; or a = "...", b = "...", c = "..."
//! eps = -1.0
//!
//! [region]
//! x = [-0.6, 0.6]
//! y = [-0.4, 0.4]
//!
//! [tolerances]                  # optional; same keys as `--tol`
//! rtol = 1e-11
//!
//! [[task]]
//! kind = "family"
//! at = [0.0, 0.0]
//! leaves = [-1.0, 0.0, 1.0]
//! file = "family.csv"
//! ```
//!
//! Task kinds and their keys (all but `kind` optional unless noted):
//!
//! | kind             | keys |
//! |------------------|------|
//! | `classify-curve` | `at` (required), `half_length`, `step`, `file` |
//! | `trace`          | `at` (required), `slope` or `vertical = true`, `sense`, `t_max`, `file` |
//! | `family`         | `at` (required), `leaves`, `phases`, `phase_radius`, `cusps`, `delta`, `radius`, `admissible`, `fit`, `window`, `file` |
//! | `portrait`       | family keys, `seeds`, `discriminant`, `style`, `file` |
//! | `verify`         | `suite` (required), `seed`, `file` |
//!
//! A portrait launches the family at `at` when given, traces the regular
//! geodesics listed in `seeds` as `[x, y, slope]`, and draws the discriminant
//! through the point `discriminant` (default `at`). `style = "causal"` draws
//! each geodesic in the style of its causal character, `style = "plain"`
//! draws every geodesic solid.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Component, Path, PathBuf};

use serde::Deserialize;

use crate::families::{fit_exponent, fit_family_z, fit_member_quadratic, launch_family, manifest_csv, FitResult, LaunchParams};
use crate::flow::{trace_csv, trace_geodesic, Bounds, GeodesicTrace, IntegratorConfig, MemberKind, Sense};
use crate::metric::{CausalType, Direction, Metric, Point, Tolerances};
use crate::singular::{classify, classify_curve, report_csv, ClassTag};
use crate::{verify, Error, Result};

/// Output directory used when neither the command line, the scenario nor
/// the environment names one.
pub const DEFAULT_OUT: &str = "sigflow-out";

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SIGFLOW_OUT";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    out: Option<PathBuf>,
    metric: RawMetric,
    region: RawRegion,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    task: Vec<RawTask>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetric {
    a: Option<String>,
    b: Option<String>,
    c: Option<String>,
    omega: Option<String>,
    eps: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    x: [f64; 2],
    y: [f64; 2],
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    kind: String,
    file: Option<String>,
    at: Option<[f64; 2]>,
    half_length: Option<f64>,
    step: Option<f64>,
    slope: Option<f64>,
    vertical: Option<bool>,
    sense: Option<String>,
    t_max: Option<f64>,
    leaves: Option<Vec<f64>>,
    phases: Option<usize>,
    phase_radius: Option<f64>,
    cusps: Option<Vec<f64>>,
    delta: Option<f64>,
    radius: Option<f64>,
    admissible: Option<bool>,
    fit: Option<String>,
    window: Option<[f64; 2]>,
    seeds: Option<Vec<[f64; 3]>>,
    discriminant: Option<[f64; 2]>,
    style: Option<String>,
    suite: Option<String>,
    seed: Option<u64>,
}

impl RawTask {
    /// Names of the keys that are set.
    fn present(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        macro_rules! check {
            ($($f:ident),*) => { $( if self.$f.is_some() { v.push(stringify!($f)); } )* };
        }
        check!(
            file, at, half_length, step, slope, vertical, sense, t_max, leaves, phases, phase_radius, cusps, delta, radius,
            admissible, fit, window, seeds, discriminant, style, suite, seed
        );
        v
    }
}

const FAMILY_KEYS: &[&str] = &[
    "at", "leaves", "phases", "phase_radius", "cusps", "delta", "radius", "admissible", "fit", "window",
];

/// How family members are fitted for the manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitChoice {
    /// By class of the base point: Z quartic, Ds and Dn quadratic, C
    /// classes exponent, Df none.
    Auto,
    Quadratic,
    Quartic,
    Exponent,
    None,
}

/// Portrait styling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PortraitStyle {
    /// Timelike solid, spacelike dashed, isotropic bold.
    Causal,
    /// Every geodesic solid.
    Plain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub at: Point,
    pub params: LaunchParams,
    pub fit: FitChoice,
    pub window: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskKind {
    ClassifyCurve {
        at: Point,
        half_length: f64,
        step: f64,
    },
    Trace {
        at: Point,
        dir: Direction,
        sense: Sense,
        t_max: f64,
    },
    Family(FamilySpec),
    Portrait {
        family: Option<FamilySpec>,
        seeds: Vec<(Point, Direction)>,
        discriminant: Option<Point>,
        style: PortraitStyle,
    },
    Verify {
        suite: String,
        seed: Option<u64>,
    },
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::ClassifyCurve { .. } => "classify-curve",
            TaskKind::Trace { .. } => "trace",
            TaskKind::Family(_) => "family",
            TaskKind::Portrait { .. } => "portrait",
            TaskKind::Verify { .. } => "verify",
        }
    }

    fn extension(&self) -> &'static str {
        match self {
            TaskKind::Portrait { .. } => "svg",
            TaskKind::Verify { .. } => "txt",
            _ => "csv",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub kind: TaskKind,
    /// Artifact path relative to the output directory.
    pub file: PathBuf,
}

/// Numeric overrides from a `[tolerances]` block or `--tol key=value`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub metric: Tolerances,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub tol_iso: Option<f64>,
}

/// Keys accepted by [`Overrides::set`].
pub const TOLERANCE_KEYS: &[&str] = &[
    "on_discriminant",
    "iso",
    "root_merge",
    "k1",
    "tangency",
    "criminant_samples",
    "criminant_spacing",
    "zero_eigen",
    "node_focus",
    "saddle_node",
    "resonance",
    "resonance_order",
    "rtol",
    "atol",
    "tol_iso",
];

impl Overrides {
    pub fn set(&mut self, key: &str, value: f64) -> Result<()> {
        if !value.is_finite() || value < 0.0 {
            return Err(Error::Scenario(format!("tolerance `{key}` must be finite and non-negative, got {value}")));
        }
        let count = |v: f64| -> Result<u32> {
            if v.fract() == 0.0 && v <= f64::from(u32::MAX) {
                Ok(v as u32)
            } else {
                Err(Error::Scenario(format!("tolerance `{key}` must be an integer, got {v}")))
            }
        };
        let t = &mut self.metric;
        match key {
            "on_discriminant" => t.on_discriminant = value,
            "iso" => t.iso = value,
            "root_merge" => t.root_merge = value,
            "k1" => t.k1 = value,
            "tangency" => t.tangency = value,
            "criminant_samples" => t.criminant_samples = count(value)? as usize,
            "criminant_spacing" => t.criminant_spacing = value,
            "zero_eigen" => t.zero_eigen = value,
            "node_focus" => t.node_focus = value,
            "saddle_node" => t.saddle_node = value,
            "resonance" => t.resonance = value,
            "resonance_order" => t.resonance_order = count(value)?,
            "rtol" => self.rtol = Some(value),
            "atol" => self.atol = Some(value),
            "tol_iso" => self.tol_iso = Some(value),
            _ => {
                return Err(Error::Scenario(format!(
                    "unknown tolerance `{key}` (known: {})",
                    TOLERANCE_KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Parses `key=value`.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Error::Scenario(format!("expected key=value, got `{pair}`")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::Scenario(format!("tolerance `{}`: `{}` is not a number", k.trim(), v.trim())))?;
        self.set(k.trim(), v)
    }

    fn apply(&self, cfg: &mut IntegratorConfig) {
        if let Some(v) = self.rtol {
            cfg.rk.rtol = v;
        }
        if let Some(v) = self.atol {
            cfg.rk.atol = v;
        }
        if let Some(v) = self.tol_iso {
            cfg.tol_iso = v;
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub metric: Metric,
    pub region: Bounds,
    /// Output directory from the file, resolved against its location.
    pub out: Option<PathBuf>,
    pub overrides: Overrides,
    pub tasks: Vec<Task>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Scenario(msg.into())
}

fn positive(what: &str, v: Option<f64>, default: f64) -> Result<f64> {
    let v = v.unwrap_or(default);
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(bad(format!("`{what}` must be positive, got {v}")))
    }
}

fn point(v: [f64; 2]) -> Result<Point> {
    if v.iter().all(|c| c.is_finite()) {
        Ok(Point::new(v[0], v[1]))
    } else {
        Err(bad(format!("non-finite point {v:?}")))
    }
}

fn parse_metric(raw: &RawMetric) -> Result<Metric> {
    let ctx = |which: &str, e: Error| bad(format!("metric.{which}: {e}"));
    match (raw, &raw.omega) {
        (RawMetric { a: None, b: None, c: None, eps: Some(eps), .. }, Some(omega)) => {
            if !eps.is_finite() {
                return Err(bad("metric.eps must be finite"));
            }
            let om = crate::expr::parse(omega).map_err(|e| ctx("omega", e.into()))?;
            Ok(Metric::normal_form(om, *eps))
        }
        (RawMetric { a: Some(a), b: Some(b), c: Some(c), eps: None, .. }, None) => {
            let p = |w: &str, s: &str| crate::expr::parse(s).map_err(|e| ctx(w, e.into()));
            Ok(Metric::new(p("a", a)?, p("b", b)?, p("c", c)?))
        }
        _ => Err(bad("metric needs either `a`, `b`, `c` or `omega` and `eps`")),
    }
}

fn family_spec(t: &RawTask, at: Point) -> Result<FamilySpec> {
    let mut p = LaunchParams::default();
    if let Some(l) = &t.leaves {
        if l.is_empty() || l.iter().any(|v| !v.is_finite()) {
            return Err(bad("`leaves` must be a non-empty list of finite numbers"));
        }
        p.leaves = l.clone();
    }
    if let Some(c) = &t.cusps {
        if c.is_empty() || c.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(bad("`cusps` must be a non-empty list of positive numbers"));
        }
        p.cusps = c.clone();
    }
    if let Some(n) = t.phases {
        if n == 0 {
            return Err(bad("`phases` must be at least 1"));
        }
        p.phases = n;
    }
    p.phase_radius = positive("phase_radius", t.phase_radius, p.phase_radius)?;
    p.delta = positive("delta", t.delta, p.delta)?;
    p.radius = positive("radius", t.radius, p.radius)?;
    if p.radius <= 2.0 * p.delta {
        return Err(bad("`radius` must exceed twice `delta`"));
    }
    p.admissible = t.admissible.unwrap_or(p.admissible);
    let fit = match t.fit.as_deref().unwrap_or("auto") {
        "auto" => FitChoice::Auto,
        "quadratic" => FitChoice::Quadratic,
        "quartic" => FitChoice::Quartic,
        "exponent" => FitChoice::Exponent,
        "none" => FitChoice::None,
        other => return Err(bad(format!("unknown fit `{other}` (auto, quadratic, quartic, exponent, none)"))),
    };
    let window = match t.window {
        Some([lo, hi]) if lo > 0.0 && hi > lo && hi.is_finite() => Some((lo, hi)),
        Some(w) => return Err(bad(format!("`window` must satisfy 0 < lo < hi, got {w:?}"))),
        None => None,
    };
    Ok(FamilySpec { at, params: p, fit, window })
}

fn task_from_raw(t: &RawTask) -> Result<TaskKind> {
    let allowed: Vec<&str> = match t.kind.as_str() {
        "classify-curve" => vec!["file", "at", "half_length", "step"],
        "trace" => vec!["file", "at", "slope", "vertical", "sense", "t_max"],
        "family" => [&["file"][..], FAMILY_KEYS].concat(),
        "portrait" => [&["file", "seeds", "discriminant", "style"][..], FAMILY_KEYS].concat(),
        "verify" => vec!["file", "suite", "seed"],
        other => {
            return Err(bad(format!(
                "unknown task kind `{other}` (classify-curve, trace, family, portrait, verify)"
            )))
        }
    };
    if let Some(k) = t.present().into_iter().find(|k| !allowed.contains(k)) {
        return Err(bad(format!("key `{k}` does not apply to {} tasks", t.kind)));
    }
    let need_at = || t.at.ok_or_else(|| bad(format!("{} task needs `at`", t.kind))).and_then(point);
    Ok(match t.kind.as_str() {
        "classify-curve" => TaskKind::ClassifyCurve {
            at: need_at()?,
            half_length: positive("half_length", t.half_length, 1.0)?,
            step: positive("step", t.step, 0.05)?,
        },
        "trace" => {
            let dir = match (t.slope, t.vertical) {
                (Some(s), None | Some(false)) if s.is_finite() => Direction::Affine(s),
                (None, Some(true)) => Direction::Infinity,
                _ => return Err(bad("trace task needs exactly one of `slope` or `vertical = true`")),
            };
            let sense = match t.sense.as_deref().unwrap_or("both") {
                "forward" => Sense::Forward,
                "backward" => Sense::Backward,
                "both" => Sense::Both,
                other => return Err(bad(format!("unknown sense `{other}` (forward, backward, both)"))),
            };
            TaskKind::Trace {
                at: need_at()?,
                dir,
                sense,
                t_max: positive("t_max", t.t_max, 10.0)?,
            }
        }
        "family" => TaskKind::Family(family_spec(t, need_at()?)?),
        "portrait" => {
            let family = t.at.map(point).transpose()?.map(|at| family_spec(t, at)).transpose()?;
            if family.is_none() && FAMILY_KEYS.iter().any(|k| t.present().contains(k)) {
                return Err(bad("family keys in a portrait need `at`"));
            }
            let seeds = t
                .seeds
                .iter()
                .flatten()
                .map(|s| Ok((point([s[0], s[1]])?, Direction::Affine(s[2]))))
                .collect::<Result<Vec<_>>>()?;
            let discriminant = t.discriminant.map(point).transpose()?.or(family.as_ref().map(|f| f.at));
            if family.is_none() && seeds.is_empty() && discriminant.is_none() {
                return Err(bad("portrait needs `at`, `seeds` or `discriminant`"));
            }
            let style = match t.style.as_deref().unwrap_or("causal") {
                "causal" => PortraitStyle::Causal,
                "plain" => PortraitStyle::Plain,
                other => return Err(bad(format!("unknown style `{other}` (causal, plain)"))),
            };
            TaskKind::Portrait {
                family,
                seeds,
                discriminant,
                style,
            }
        }
        _ => {
            let suite = t.suite.clone().ok_or_else(|| bad("verify task needs `suite`"))?;
            if !verify::SUITES.iter().any(|(n, _)| *n == suite) {
                return Err(bad(format!("unknown suite `{suite}`")));
            }
            TaskKind::Verify { suite, seed: t.seed }
        }
    })
}

fn relative_file(s: &str) -> Result<PathBuf> {
    let p = PathBuf::from(s);
    if s.is_empty() || !p.components().all(|c| matches!(c, Component::Normal(_))) {
        return Err(bad(format!("`file = \"{s}\"` must be a relative path inside the output directory")));
    }
    Ok(p)
}

impl Scenario {
    /// Parses and validates scenario text; `base` resolves a relative `out`.
    pub fn parse(text: &str, base: &Path) -> Result<Scenario> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| bad(e.to_string().trim_end().to_string()))?;
        let mut overrides = Overrides::default();
        for (k, v) in &raw.tolerances {
            overrides.set(k, *v)?;
        }
        let metric = parse_metric(&raw.metric)?.with_tolerances(overrides.metric);
        let [x0, x1] = raw.region.x;
        let [y0, y1] = raw.region.y;
        if !(x0 < x1 && y0 < y1) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(bad(format!("degenerate region x = {:?}, y = {:?}", raw.region.x, raw.region.y)));
        }
        if raw.task.is_empty() {
            return Err(bad("scenario has no [[task]]"));
        }
        let mut tasks = Vec::with_capacity(raw.task.len());
        for (i, t) in raw.task.iter().enumerate() {
            let kind = task_from_raw(t).map_err(|e| bad(format!("task {}: {}", i + 1, strip(&e))))?;
            let file = match &t.file {
                Some(f) => relative_file(f).map_err(|e| bad(format!("task {}: {}", i + 1, strip(&e))))?,
                None => PathBuf::from(format!("task{:02}-{}.{}", i + 1, kind.name(), kind.extension())),
            };
            if tasks.iter().any(|o: &Task| o.file == file) {
                return Err(bad(format!("task {}: file `{}` is written by an earlier task", i + 1, file.display())));
            }
            tasks.push(Task { kind, file });
        }
        Ok(Scenario {
            name: raw.name.unwrap_or_else(|| "scenario".to_string()),
            metric,
            region: Bounds { x: [x0, x1], y: [y0, y1] },
            out: raw.out.map(|o| base.join(o)),
            overrides,
            tasks,
        })
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Scenario::parse(&text, base).map_err(|e| bad(format!("{}: {}", path.display(), strip(&e))))
    }

    /// Applies command-line overrides on top of those of the file.
    pub fn override_tolerances(&mut self, pairs: &[(String, f64)]) -> Result<()> {
        for (k, v) in pairs {
            self.overrides.set(k, *v)?;
        }
        self.metric = self.metric.clone().with_tolerances(self.overrides.metric);
        Ok(())
    }

    fn config(&self) -> IntegratorConfig {
        let mut cfg = IntegratorConfig {
            bounds: Some(self.region),
            ..IntegratorConfig::default()
        };
        cfg.rk.rtol = 1e-10;
        cfg.rk.atol = 1e-12;
        self.overrides.apply(&mut cfg);
        cfg
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::Scenario(s) => s.clone(),
        other => other.to_string(),
    }
}

#[derive(Debug, Deserialize)]
struct MetricFile {
    metric: RawMetric,
    #[serde(default)]
    tolerances: BTreeMap<String, f64>,
}

/// Reads the `[metric]` and optional `[tolerances]` blocks of a TOML file,
/// a scenario file included; other keys are ignored.
pub fn load_metric(path: &Path, extra: &[(String, f64)]) -> Result<Metric> {
    let text = fs::read_to_string(path).map_err(|e| bad(format!("cannot read {}: {e}", path.display())))?;
    let f: MetricFile =
        toml::from_str(&text).map_err(|e| bad(format!("{}: {}", path.display(), e.to_string().trim_end())))?;
    let mut o = Overrides::default();
    for (k, v) in f.tolerances.iter().map(|(k, v)| (k.as_str(), *v)).chain(extra.iter().map(|(k, v)| (k.as_str(), *v))) {
        o.set(k, v)?;
    }
    Ok(parse_metric(&f.metric)?.with_tolerances(o.metric))
}

/// Where artifacts go: `--out`, then the scenario's `out`, then the
/// environment, then [`DEFAULT_OUT`].
pub fn resolve_out(cli: Option<&Path>, scenario: &Scenario, env: Option<&Path>) -> PathBuf {
    cli.map(Path::to_path_buf)
        .or_else(|| scenario.out.clone())
        .or_else(|| env.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

/// Writes `contents` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

/// Result of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskOutcome {
    pub index: usize,
    pub kind: &'static str,
    pub file: PathBuf,
    /// Whether the artifact was written.
    pub written: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub out: PathBuf,
    pub tasks: Vec<TaskOutcome>,
}

impl RunReport {
    pub fn failed(&self) -> bool {
        self.tasks.iter().any(|t| t.error.is_some())
    }

    /// 0 when every task succeeded, 3 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.failed() {
            3
        } else {
            0
        }
    }
}

/// Runs every task in order, writing artifacts under `out`. A failing task
/// is recorded and the remaining tasks still run.
pub fn run(s: &Scenario, out: &Path, seed: Option<u64>) -> RunReport {
    let mut tasks = Vec::with_capacity(s.tasks.len());
    for (i, t) in s.tasks.iter().enumerate() {
        let path = out.join(&t.file);
        let (written, error) = match execute(s, &t.kind, seed) {
            Ok((bytes, failure)) => match write_atomic(&path, &bytes) {
                Ok(()) => (true, failure),
                Err(e) => (false, Some(e.to_string())),
            },
            Err(e) => (false, Some(e.to_string())),
        };
        tasks.push(TaskOutcome {
            index: i + 1,
            kind: t.kind.name(),
            file: path,
            written,
            error,
        });
    }
    RunReport {
        out: out.to_path_buf(),
        tasks,
    }
}

/// Artifact bytes, plus a failure to report even though the artifact is
/// written (a verify report with failing checks).
fn execute(s: &Scenario, kind: &TaskKind, seed: Option<u64>) -> Result<(Vec<u8>, Option<String>)> {
    let m = &s.metric;
    match kind {
        TaskKind::ClassifyCurve { at, half_length, step } => {
            let region = s.region;
            let rows = classify_curve(m, *at, *half_length, *step, move |p| region.contains(p))?;
            Ok((report_csv(&rows).into_bytes(), None))
        }
        TaskKind::Trace { at, dir, sense, t_max } => {
            let cfg = IntegratorConfig {
                t_max: *t_max,
                ..s.config()
            };
            let g = trace_geodesic(m, *at, *dir, *sense, &cfg)?;
            Ok((trace_csv(&g.trace).into_bytes(), None))
        }
        TaskKind::Family(spec) => {
            let (fam, class) = launch(s, spec)?;
            let fits = fits(&fam, class, spec);
            Ok((manifest_csv(&fam, &fits, 2.0 * spec.params.delta).into_bytes(), None))
        }
        TaskKind::Portrait {
            family,
            seeds,
            discriminant,
            style,
        } => {
            let fam = match family {
                Some(spec) => launch(s, spec)?.0,
                None => Vec::new(),
            };
            let cfg = IntegratorConfig {
                t_max: 50.0,
                ..s.config()
            };
            let mut extra = Vec::with_capacity(seeds.len());
            for (q, d) in seeds {
                extra.push(trace_geodesic(m, *q, *d, Sense::Both, &cfg)?);
            }
            let disc = match discriminant {
                Some(q) => discriminant_polyline(m, *q, s.region)?,
                None => Vec::new(),
            };
            let svg = render_svg(&s.name, s.region, &fam, &extra, &disc, *style);
            Ok((svg.into_bytes(), None))
        }
        TaskKind::Verify { suite, seed: own } => {
            let checks = verify::suite(suite, own.or(seed).unwrap_or(0))?;
            let failed = checks.iter().filter(|c| !c.pass()).count();
            let failure = (failed > 0).then(|| format!("{failed} of {} checks failed", checks.len()));
            Ok((verify::render(&checks).into_bytes(), failure))
        }
    }
}

fn launch(s: &Scenario, spec: &FamilySpec) -> Result<(Vec<GeodesicTrace>, ClassTag)> {
    let pc = classify(&s.metric, spec.at)?;
    let mut params = spec.params.clone();
    s.overrides.apply(&mut params.cfg);
    Ok((launch_family(&s.metric, &pc, &params)?, pc.class))
}

fn fits(fam: &[GeodesicTrace], class: ClassTag, spec: &FamilySpec) -> Vec<Option<FitResult>> {
    let delta = spec.params.delta;
    let (choice, window) = match (spec.fit, class) {
        (FitChoice::Auto, ClassTag::Z) => (FitChoice::Quartic, (delta, 10.0 * delta)),
        (FitChoice::Auto, ClassTag::Ds) => (FitChoice::Quadratic, (0.01, 0.1)),
        (FitChoice::Auto, ClassTag::Dn) => (FitChoice::Quadratic, (0.1, 0.4)),
        (FitChoice::Auto, ClassTag::C1 | ClassTag::C2 | ClassTag::C3) => (FitChoice::Exponent, (1e-5, 1e-3)),
        (FitChoice::Auto, _) => (FitChoice::None, (0.0, 0.0)),
        (FitChoice::Quartic, _) => (FitChoice::Quartic, (delta, 10.0 * delta)),
        (FitChoice::Quadratic, _) => (FitChoice::Quadratic, (0.01, 0.1)),
        (FitChoice::Exponent, _) => (FitChoice::Exponent, (1e-5, 1e-3)),
        (FitChoice::None, _) => (FitChoice::None, (0.0, 0.0)),
    };
    let window = spec.window.unwrap_or(window);
    fam.iter()
        .map(|g| {
            if g.kind == MemberKind::Admissible {
                return None;
            }
            match choice {
                FitChoice::Quartic => fit_family_z(g, window).ok(),
                FitChoice::Quadratic => fit_member_quadratic(g, window).ok(),
                FitChoice::Exponent => fit_exponent(g, window).ok(),
                _ => None,
            }
        })
        .collect()
}

/// The discriminant through (the projection of) `seed`, clipped to the
/// region, as one polyline per connected piece met from the seed.
pub fn discriminant_polyline(m: &Metric, seed: Point, region: Bounds) -> Result<Vec<Point>> {
    let diag = (region.x[1] - region.x[0]).hypot(region.y[1] - region.y[0]);
    let step = diag / 400.0;
    let keep = move |p: Point| region.contains(p);
    let mut back = m.trace_discriminant_within(seed, -2.0 * diag, step, keep)?;
    let fwd = m.trace_discriminant_within(seed, 2.0 * diag, step, keep)?;
    back.reverse();
    back.pop();
    back.extend(fwd);
    back.retain(|&p| keep(p));
    Ok(back)
}

/// Drawing layers of a portrait.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Timelike,
    Spacelike,
    Isotropic,
    /// Isotropic member that does not separate timelike from spacelike
    /// members.
    IsotropicDouble,
    Geodesic,
    Discriminant,
}

/// Stroke of one layer in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stroke {
    pub class: &'static str,
    pub width: f64,
    pub dash: Option<&'static str>,
    /// Drawn as two parallel lines.
    pub double: bool,
}

/// Every style used in portraits.
pub const STYLES: [(Layer, Stroke); 6] = [
    (Layer::Timelike, Stroke { class: "timelike", width: 1.0, dash: None, double: false }),
    (Layer::Spacelike, Stroke { class: "spacelike", width: 1.0, dash: Some("6 4"), double: false }),
    (Layer::Isotropic, Stroke { class: "isotropic", width: 2.6, dash: None, double: false }),
    (Layer::IsotropicDouble, Stroke { class: "isotropic double", width: 3.0, dash: None, double: true }),
    (Layer::Geodesic, Stroke { class: "geodesic", width: 1.0, dash: None, double: false }),
    (Layer::Discriminant, Stroke { class: "discriminant", width: 1.2, dash: Some("1 3"), double: false }),
];

pub fn stroke(layer: Layer) -> Stroke {
    STYLES.iter().find(|(l, _)| *l == layer).map(|(_, s)| *s).expect("every layer has a style")
}

const WIDTH: f64 = 600.0;

fn svg_points(pts: &[Point], region: Bounds, scale: f64) -> String {
    let mut s = String::with_capacity(16 * pts.len());
    for (i, p) in pts.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let px = (p.x - region.x[0]) * scale;
        let py = (region.y[1] - p.y) * scale;
        let _ = write!(s, "{px:.2},{py:.2}");
    }
    s
}

fn polyline(out: &mut String, pts: &[Point], region: Bounds, scale: f64, layer: Layer) {
    if pts.len() < 2 {
        return;
    }
    let st = stroke(layer);
    let coords = svg_points(pts, region, scale);
    let dash = st.dash.map(|d| format!(" stroke-dasharray=\"{d}\"")).unwrap_or_default();
    let _ = writeln!(
        out,
        "    <polyline class=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"{}\"{dash} stroke-linecap=\"round\" points=\"{coords}\"/>",
        st.class, st.width
    );
    if st.double {
        let _ = writeln!(
            out,
            "    <polyline class=\"{}-inner\" fill=\"none\" stroke=\"white\" stroke-width=\"{}\" points=\"{coords}\"/>",
            st.class,
            st.width / 3.0
        );
    }
}

/// Pieces of `g` inside `region`, each split into runs of one causal label.
fn runs(g: &GeodesicTrace, region: Bounds, causal: bool) -> Vec<(Option<CausalType>, Vec<Point>)> {
    let mut out: Vec<(Option<CausalType>, Vec<Point>)> = Vec::new();
    let mut open = false;
    for (i, p) in g.points.iter().enumerate() {
        if !region.contains(*p) {
            open = false;
            continue;
        }
        let label = causal.then(|| g.labels[i]);
        match out.last_mut() {
            Some((l, pts)) if open && *l == label => pts.push(*p),
            Some((_, pts)) if open => {
                let last = *pts.last().expect("runs are non-empty");
                out.push((label, vec![last, *p]));
            }
            _ => out.push((label, vec![*p])),
        }
        open = true;
    }
    out
}

fn layer_of(label: Option<CausalType>, kind: MemberKind) -> Layer {
    match label {
        None => Layer::Geodesic,
        Some(CausalType::Timelike) => Layer::Timelike,
        Some(CausalType::Spacelike) => Layer::Spacelike,
        Some(CausalType::Isotropic) if kind == MemberKind::Exceptional => Layer::IsotropicDouble,
        Some(CausalType::Isotropic) => Layer::Isotropic,
    }
}

fn member_group(out: &mut String, g: &GeodesicTrace, region: Bounds, scale: f64, style: PortraitStyle, role: &str) {
    let causal = style == PortraitStyle::Causal;
    let label = g.majority_label(0.0).map_or("none", CausalType::name);
    let kind = match g.kind {
        MemberKind::Generic => "generic",
        MemberKind::Exceptional => "exceptional",
        MemberKind::Isotropic => "isotropic",
        MemberKind::Admissible => "admissible",
        MemberKind::Free => "free",
    };
    let _ = writeln!(
        out,
        "  <g class=\"{role}\" data-id=\"{}\" data-kind=\"{kind}\" data-label=\"{label}\">",
        g.id
    );
    for (l, pts) in runs(g, region, causal) {
        polyline(out, &pts, region, scale, layer_of(l, g.kind));
    }
    out.push_str("  </g>\n");
}

/// Standalone SVG of a portrait. The region maps to a 600 px wide canvas
/// with `y` pointing up.
pub fn render_svg(
    title: &str,
    region: Bounds,
    family: &[GeodesicTrace],
    extra: &[GeodesicTrace],
    discriminant: &[Point],
    style: PortraitStyle,
) -> String {
    let scale = WIDTH / (region.x[1] - region.x[0]);
    let height = (region.y[1] - region.y[0]) * scale;
    let esc = title.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {WIDTH:.2} {height:.2}\" data-x=\"{} {}\" data-y=\"{} {}\">",
        region.x[0], region.x[1], region.y[0], region.y[1]
    );
    let _ = writeln!(s, "  <title>{esc}</title>");
    let _ = writeln!(s, "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    if discriminant.len() >= 2 {
        s.push_str("  <g class=\"discriminant-curve\">\n");
        polyline(&mut s, discriminant, region, scale, Layer::Discriminant);
        s.push_str("  </g>\n");
    }
    for g in family {
        member_group(&mut s, g, region, scale, style, "member");
    }
    for g in extra {
        member_group(&mut s, g, region, scale, style, "seed");
    }
    s.push_str("</svg>\n");
    s
}
