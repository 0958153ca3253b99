//! Fields on the projectivized tangent bundle and their integration.

use std::fmt;

use crate::metric::{causal_of, CausalType, Direction, Metric, MetricJet, Point};
use crate::singular::{classify, ClassTag, CubicM};
use crate::{Error, Result};

use super::blowup::{blowdown, BlowUpState};
use super::rk::{DenseStep, Dopri5, RkConfig};

/// Chart of ℝP¹: `w = p = dy/dx` or `w = q = dx/dy`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Chart {
    Affine,
    Inverted,
}

impl Chart {
    pub fn name(self) -> &'static str {
        match self {
            Chart::Affine => "affine",
            Chart::Inverted => "inverted",
        }
    }

    fn other(self) -> Chart {
        match self {
            Chart::Affine => Chart::Inverted,
            Chart::Inverted => Chart::Affine,
        }
    }
}

impl fmt::Display for Chart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A contact element `(x, y, [dx : dy])`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiftedState {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub chart: Chart,
}

impl LiftedState {
    pub fn affine(x: f64, y: f64, p: f64) -> LiftedState {
        LiftedState {
            x,
            y,
            w: p,
            chart: Chart::Affine,
        }
    }

    pub fn inverted(x: f64, y: f64, q: f64) -> LiftedState {
        LiftedState {
            x,
            y,
            w: q,
            chart: Chart::Inverted,
        }
    }

    pub fn from_direction(q: Point, d: Direction) -> LiftedState {
        match d {
            Direction::Affine(p) => LiftedState::affine(q.x, q.y, p),
            Direction::Infinity => LiftedState::inverted(q.x, q.y, 0.0),
        }
    }

    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }

    pub fn direction(&self) -> Direction {
        match self.chart {
            Chart::Affine => Direction::Affine(self.w),
            Chart::Inverted => Direction::from_inverted(self.w),
        }
    }

    /// Slope `p`, infinite for the vertical direction.
    pub fn p(&self) -> f64 {
        match self.chart {
            Chart::Affine => self.w,
            Chart::Inverted => 1.0 / self.w,
        }
    }

    /// The same element in the other chart. Fails at `w = 0`.
    pub fn switched(&self) -> Option<LiftedState> {
        (self.w != 0.0).then(|| LiftedState {
            x: self.x,
            y: self.y,
            w: 1.0 / self.w,
            chart: self.chart.other(),
        })
    }

    fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.w]
    }

    fn from_array(a: [f64; 3], chart: Chart) -> LiftedState {
        LiftedState {
            x: a[0],
            y: a[1],
            w: a[2],
            chart,
        }
    }
}

/// Which lifted field to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// `(½F_p, ½pF_p, −½(F_x + pF_y))`, tangent to the isotropic surface.
    Isotropic,
    /// `(2Δ, 2pΔ, M)`, whose integral curves project to geodesics.
    Geodesic,
    /// The geodesic field divided by `½F_p = cp + b`. On the leaves
    /// `F ∝ (p − p₀)²` it stays regular where they meet the criminant, so
    /// its trajectories pass through the points where the projection
    /// touches `𝒟`; on `F = 0` it equals `−2` times the isotropic field.
    Divided,
}

fn iso_velocity(j: &MetricJet, s: &LiftedState) -> [f64; 3] {
    match s.chart {
        Chart::Affine => j.iso_field(s.w),
        Chart::Inverted => j.iso_field_inverted(s.w),
    }
}

fn geo_velocity(j: &MetricJet, s: &LiftedState) -> [f64; 3] {
    let d = j.delta();
    let cubic = CubicM { mu: j.mu() };
    match s.chart {
        Chart::Affine => [2.0 * d, 2.0 * s.w * d, cubic.eval(s.w)],
        // multiplied by q: (2Δq, 2Δ, −M̃(q))
        Chart::Inverted => [2.0 * d * s.w, 2.0 * d, -cubic.inverted().eval(s.w)],
    }
}

fn divided_velocity(j: &MetricJet, s: &LiftedState) -> [f64; 3] {
    let v = geo_velocity(j, s);
    let k = match s.chart {
        Chart::Affine => j.c.v * s.w + j.b.v,
        Chart::Inverted => j.c.v + j.b.v * s.w,
    };
    v.map(|x| x / k)
}

/// Field on the isotropic surface, in the state's chart.
pub fn field_isotropic(m: &Metric, s: &LiftedState) -> Result<[f64; 3]> {
    Ok(iso_velocity(&m.jet1(s.point())?, s))
}

/// Geodesic field divided by `½F_p`, in the state's chart.
pub fn field_divided(m: &Metric, s: &LiftedState) -> Result<[f64; 3]> {
    Ok(divided_velocity(&m.jet1(s.point())?, s))
}

/// Lifted geodesic field, in the state's chart.
pub fn field_lifted(m: &Metric, s: &LiftedState) -> Result<[f64; 3]> {
    Ok(geo_velocity(&m.jet1(s.point())?, s))
}

fn velocity(m: &Metric, kind: FieldKind, s: &LiftedState) -> Result<[f64; 3]> {
    let j = m.jet1(s.point())?;
    Ok(match kind {
        FieldKind::Isotropic => iso_velocity(&j, s),
        FieldKind::Geodesic => geo_velocity(&j, s),
        FieldKind::Divided => divided_velocity(&j, s),
    })
}

/// Axis-aligned box in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl Bounds {
    pub fn contains(&self, q: Point) -> bool {
        q.x >= self.x[0] && q.x <= self.x[1] && q.y >= self.y[0] && q.y <= self.y[1]
    }

    /// Positive inside, negative outside.
    fn margin(&self, x: f64, y: f64) -> f64 {
        (x - self.x[0])
            .min(self.x[1] - x)
            .min(y - self.y[0])
            .min(self.y[1] - y)
    }
}

/// Integration settings for lifted traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rk: RkConfig,
    /// Flow-parameter budget.
    pub t_max: f64,
    /// Arrest when the velocity norm drops below this.
    pub arrest_band: f64,
    /// Switch to the inverted chart when `|p|` exceeds this.
    pub chart_threshold: f64,
    /// Return to the affine chart when `|p| < chart_threshold / chart_hysteresis`.
    pub chart_hysteresis: f64,
    pub bounds: Option<Bounds>,
    /// Extra samples from the continuous extension at this parameter spacing.
    pub sample_dt: Option<f64>,
    pub tol_iso: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rk: RkConfig::default(),
            t_max: 1e7,
            arrest_band: 1e-10,
            chart_threshold: 1.0,
            chart_hysteresis: 1.1,
            bounds: None,
            sample_dt: None,
            tol_iso: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EventKind {
    ChartSwitch(Chart),
    /// `Δ` changed sign inside a step.
    DiscriminantCrossing,
    /// Arrest at a singular point of the field.
    Arrest,
    Stop,
    BoundsExit,
    Budget,
}

impl EventKind {
    pub fn name(&self) -> &'static str {
        match self {
            EventKind::ChartSwitch(_) => "chart_switch",
            EventKind::DiscriminantCrossing => "discriminant_crossing",
            EventKind::Arrest => "arrest",
            EventKind::Stop => "stop",
            EventKind::BoundsExit => "bounds_exit",
            EventKind::Budget => "budget",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    /// Index of the sample at which the event is recorded.
    pub sample: usize,
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub state: LiftedState,
    pub delta: f64,
    /// `F` in the state's chart (`F̃ = aq² + 2bq + c` in the inverted one).
    pub f: f64,
    pub causal: CausalType,
}

/// One accepted step in the chart it was taken in. `sign` is the factor
/// applied to the chart's field. Steps taken in blown-up `(x, p, u)`
/// coordinates carry the `ε` of the blow-up.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub step: DenseStep<3>,
    pub chart: Chart,
    pub sign: f64,
    pub blowup: Option<f64>,
}

impl Segment {
    pub fn at(&self, theta: f64) -> LiftedState {
        self.state_of(self.step.at(theta))
    }

    fn state_of(&self, y: [f64; 3]) -> LiftedState {
        match self.blowup {
            Some(eps) => {
                let (x, yy, p) = blowdown(eps, &BlowUpState::new(y[0], y[2], y[1]));
                LiftedState::affine(x, yy, p)
            }
            None => LiftedState::from_array(y, self.chart),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Arrest,
    Stop,
    BoundsExit,
    Budget,
}

/// Arrest location and the class of the discriminant point nearby.
#[derive(Debug, Clone, PartialEq)]
pub struct Arrest {
    pub point: Point,
    pub class: Option<ClassTag>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub samples: Vec<TraceSample>,
    pub events: Vec<Event>,
    pub segments: Vec<Segment>,
    pub termination: Termination,
    pub arrest: Option<Arrest>,
}

impl Trace {
    pub fn last(&self) -> &TraceSample {
        self.samples.last().expect("trace has at least one sample")
    }

    pub fn has_event(&self, pred: impl Fn(&EventKind) -> bool) -> bool {
        self.events.iter().any(|e| pred(&e.kind))
    }

    /// States where `g` crosses each value of `targets` (in order of the
    /// trace), located on the continuous extension.
    pub fn crossings(&self, targets: &[f64], g: impl Fn(&LiftedState) -> f64) -> Vec<LiftedState> {
        let mut out = Vec::new();
        for seg in &self.segments {
            let g0 = g(&seg.at(0.0));
            let g1 = g(&seg.at(1.0));
            let (lo, hi) = if g0 <= g1 { (g0, g1) } else { (g1, g0) };
            for &v in targets {
                if v < lo || v > hi || lo == hi {
                    continue;
                }
                let th = seg.step.locate(|y| g(&seg.state_of(*y)) - v);
                let th = th.unwrap_or(if (g0 - v).abs() < (g1 - v).abs() { 0.0 } else { 1.0 });
                out.push(seg.at(th));
            }
        }
        out
    }
}

fn sample(j: &MetricJet, t: f64, s: LiftedState, tol_iso: f64) -> TraceSample {
    let f = match s.chart {
        Chart::Affine => j.f(s.w),
        Chart::Inverted => (j.a.v * s.w + 2.0 * j.b.v) * s.w + j.c.v,
    };
    TraceSample {
        t,
        state: s,
        delta: j.delta(),
        f,
        causal: causal_of(j, s.direction(), tol_iso),
    }
}

pub(crate) fn make_sample(m: &Metric, t: f64, s: LiftedState, tol_iso: f64) -> Result<TraceSample> {
    Ok(sample(&m.jet1(s.point())?, t, s, tol_iso))
}

/// Integrates `kind` from `init`. `sense = ±1` orients the flow; `stop`
/// ends the trace where it changes sign.
pub fn integrate(
    m: &Metric,
    kind: FieldKind,
    init: LiftedState,
    sense: f64,
    cfg: &IntegratorConfig,
    stop: Option<&dyn Fn(&LiftedState) -> f64>,
) -> Result<Trace> {
    let thr = cfg.chart_threshold;
    let back = thr / cfg.chart_hysteresis;
    let mut state = init;
    if state.chart == Chart::Affine && state.w.abs() > thr {
        state = state.switched().expect("nonzero slope");
    }
    let mut sign = if sense < 0.0 { -1.0 } else { 1.0 };
    if state.chart != init.chart {
        // keep the orientation of the projected motion
        let v0 = velocity(m, kind, &init)?;
        let v1 = velocity(m, kind, &state)?;
        if v0[0] * v1[0] + v0[1] * v1[1] < 0.0 {
            sign = -sign;
        }
    }

    let mut samples = vec![make_sample(m, 0.0, state, cfg.tol_iso)?];
    let mut events = Vec::new();
    let mut segments = Vec::new();
    let mut solver = Dopri5::new(cfg.rk, 0.0, state.to_array(), 1.0);
    if let Some(b) = cfg.bounds {
        if !b.contains(state.point()) {
            return Err(Error::Invalid(format!(
                "start ({}, {}) lies outside the bounds",
                state.x, state.y
            )));
        }
    }

    let termination = loop {
        if solver.t >= cfg.t_max {
            events.push(Event {
                sample: samples.len() - 1,
                kind: EventKind::Budget,
            });
            break Termination::Budget;
        }
        solver.limit_step(cfg.t_max - solver.t);
        let chart = state.chart;
        let s = sign;
        let mut f = |_t: f64, y: &[f64; 3]| -> Result<[f64; 3]> {
            let v = velocity(m, kind, &LiftedState::from_array(*y, chart))?;
            Ok([s * v[0], s * v[1], s * v[2]])
        };
        let step = solver.advance(&mut f)?;
        let seg_state = |th: f64| LiftedState::from_array(step.at(th), chart);

        // earliest terminating event inside the step
        let mut cut: Option<(f64, EventKind)> = None;
        if let Some(g) = stop {
            if let Some(th) = step.locate(|y| g(&LiftedState::from_array(*y, chart))) {
                cut = Some((th, EventKind::Stop));
            }
        }
        if let Some(b) = cfg.bounds {
            if let Some(th) = step.locate(|y| b.margin(y[0], y[1])) {
                if cut.is_none_or(|(c, _)| th < c) {
                    cut = Some((th, EventKind::BoundsExit));
                }
            }
        }
        let end = cut.map_or(1.0, |(th, _)| th);

        // Δ sign changes before the cut are recorded and passed through
        let delta_of = |y: &[f64; 3]| m.discriminant(Point::new(y[0], y[1])).map_or(0.0, |d| d.0);
        let crossing = step.locate(delta_of).filter(|&th| th < end);

        let mut thetas: Vec<(f64, Option<EventKind>)> = Vec::new();
        if let Some(dt) = cfg.sample_dt {
            let n = (step.h * end / dt).floor() as usize;
            for k in 1..=n {
                let th = k as f64 * dt / step.h;
                if th < end {
                    thetas.push((th, None));
                }
            }
        }
        if let Some(th) = crossing {
            thetas.push((th, Some(EventKind::DiscriminantCrossing)));
        }
        thetas.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (th, ev) in thetas {
            samples.push(make_sample(m, step.t0 + th * step.h, seg_state(th), cfg.tol_iso)?);
            if let Some(kind) = ev {
                events.push(Event {
                    sample: samples.len() - 1,
                    kind,
                });
            }
        }
        let end_state = seg_state(end);
        samples.push(make_sample(m, step.t0 + end * step.h, end_state, cfg.tol_iso)?);
        segments.push(Segment {
            step: step.clone(),
            chart,
            sign,
            blowup: None,
        });
        if let Some((_, kind)) = cut {
            events.push(Event {
                sample: samples.len() - 1,
                kind,
            });
            break if kind == EventKind::Stop {
                Termination::Stop
            } else {
                Termination::BoundsExit
            };
        }

        state = end_state;
        let speed = step.f1.iter().map(|v| v * v).sum::<f64>().sqrt();
        if speed < cfg.arrest_band {
            events.push(Event {
                sample: samples.len() - 1,
                kind: EventKind::Arrest,
            });
            break Termination::Arrest;
        }

        let switch = match state.chart {
            Chart::Affine => state.w.abs() > thr,
            Chart::Inverted => state.w != 0.0 && state.w.abs() > 1.0 / back,
        };
        if switch {
            let new = state.switched().expect("nonzero chart coordinate");
            let v_old = velocity(m, kind, &state)?;
            let v_new = velocity(m, kind, &new)?;
            if v_old[0] * v_new[0] + v_old[1] * v_new[1] < 0.0 {
                sign = -sign;
            }
            state = new;
            solver.reset(solver.t, state.to_array());
            let last = samples.len() - 1;
            samples[last].state = new;
            let j = m.jet1(new.point())?;
            samples[last] = sample(&j, samples[last].t, new, cfg.tol_iso);
            events.push(Event {
                sample: last,
                kind: EventKind::ChartSwitch(new.chart),
            });
        }
    };

    Ok(Trace {
        samples,
        events,
        segments,
        termination,
        arrest: None,
    })
}

/// Integration direction for [`trace_geodesic`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Forward,
    Backward,
    Both,
}

/// Parameters of a family member.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyParam {
    /// Leaf parameter.
    pub leaf: f64,
    /// Phase on the node or focus; `None` for one-parameter families.
    pub phase: Option<f64>,
    /// Branch, `±1`.
    pub side: i8,
}

/// How a family member was launched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MemberKind {
    /// Member of the one- or two-parameter family in the isotropic direction.
    Generic,
    /// The isotropic member (separatrix, or leaf parameter zero).
    Isotropic,
    /// Weak-axis member of a node.
    Exceptional,
    /// Smooth geodesic through a non-isotropic admissible direction.
    Admissible,
    /// Plain trace, not a family member.
    Free,
}

impl MemberKind {
    pub fn name(self) -> &'static str {
        match self {
            MemberKind::Generic => "generic",
            MemberKind::Isotropic => "isotropic",
            MemberKind::Exceptional => "exceptional",
            MemberKind::Admissible => "admissible",
            MemberKind::Free => "free",
        }
    }
}

/// Planar projection of a lifted trace with causal labels.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicTrace {
    pub id: usize,
    pub points: Vec<Point>,
    pub labels: Vec<CausalType>,
    pub trace: Trace,
    pub param: Option<FamilyParam>,
    pub kind: MemberKind,
    pub origin: Option<ClassTag>,
    pub base: Option<Point>,
    /// Isotropic slope at the base point.
    pub p0: f64,
    /// Indices into `points` of discriminant events.
    pub crossings: Vec<usize>,
}

impl GeodesicTrace {
    pub fn from_trace(trace: Trace) -> GeodesicTrace {
        let points = trace.samples.iter().map(|s| s.state.point()).collect();
        let labels = trace.samples.iter().map(|s| s.causal).collect();
        let crossings = trace
            .events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::DiscriminantCrossing | EventKind::Arrest))
            .map(|e| e.sample)
            .collect();
        GeodesicTrace {
            id: 0,
            points,
            labels,
            trace,
            param: None,
            kind: MemberKind::Free,
            origin: None,
            base: None,
            p0: 0.0,
            crossings,
        }
    }

    /// Most frequent label among samples farther than `exclude` from the base.
    pub fn majority_label(&self, exclude: f64) -> Option<CausalType> {
        let mut counts = [0usize; 3];
        for (p, l) in self.points.iter().zip(&self.labels) {
            if let Some(b) = self.base {
                if p.dist(b) <= exclude {
                    continue;
                }
            }
            counts[*l as usize] += 1;
        }
        let total: usize = counts.iter().sum();
        if total == 0 {
            return None;
        }
        let best = (0..3).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap();
        Some([CausalType::Timelike, CausalType::Spacelike, CausalType::Isotropic][best])
    }
}

/// Attaches the class of the discriminant point next to an arrest.
pub fn annotate_arrest(m: &Metric, trace: &mut Trace) {
    if trace.termination != Termination::Arrest {
        return;
    }
    let q = trace.last().state.point();
    let class = m
        .project_to_discriminant(q)
        .ok()
        .filter(|p| p.dist(q) <= 1e-6)
        .and_then(|p| classify(m, p).ok())
        .map(|c| c.class);
    trace.arrest = Some(Arrest { point: q, class });
}

fn is_singular(m: &Metric, q: Point, d: Direction) -> Result<bool> {
    let j = m.jet1(q)?;
    if !m.jet_on_discriminant(&j) {
        return Ok(false);
    }
    let cubic = CubicM { mu: j.mu() };
    let scale: f64 = cubic.mu.iter().map(|v| v.abs()).sum::<f64>().max(j.scale());
    Ok(cubic.eval_dir(d).abs() <= m.tolerances().on_discriminant * scale)
}

/// `back` reversed, then `fwd`; drops the first sample of `fwd` when both
/// start from the same state.
pub(crate) fn reverse_join(back: Trace, fwd: Trace, shared_start: bool) -> Trace {
    let nb = back.samples.len();
    let mut samples: Vec<TraceSample> = back
        .samples
        .into_iter()
        .rev()
        .map(|mut s| {
            s.t = -s.t;
            s
        })
        .collect();
    let mut events: Vec<Event> = back
        .events
        .into_iter()
        .map(|e| Event {
            sample: nb - 1 - e.sample,
            kind: e.kind,
        })
        .collect();
    events.reverse();
    let skip = usize::from(shared_start);
    samples.extend(fwd.samples.into_iter().skip(skip));
    events.extend(fwd.events.into_iter().map(|e| Event {
        sample: e.sample + nb - skip,
        kind: e.kind,
    }));
    let mut segments = back.segments;
    segments.reverse();
    segments.extend(fwd.segments);
    Trace {
        samples,
        events,
        segments,
        termination: fwd.termination,
        arrest: fwd.arrest.or(back.arrest),
    }
}

/// Integrates the lifted geodesic field from a regular contact element and
/// returns its planar projection. Singular starts belong to
/// `families::launch_family`.
pub fn trace_geodesic(
    m: &Metric,
    q0: Point,
    dir: Direction,
    sense: Sense,
    cfg: &IntegratorConfig,
) -> Result<GeodesicTrace> {
    if is_singular(m, q0, dir)? {
        return Err(Error::SingularStart {
            x: q0.x,
            y: q0.y,
            p: dir.slope().unwrap_or(f64::INFINITY),
        });
    }
    let init = LiftedState::from_direction(q0, dir);
    let run = |s: f64| -> Result<Trace> {
        let mut t = integrate(m, FieldKind::Geodesic, init, s, cfg, None)?;
        annotate_arrest(m, &mut t);
        Ok(t)
    };
    let trace = match sense {
        Sense::Forward => run(1.0)?,
        Sense::Backward => run(-1.0)?,
        Sense::Both => reverse_join(run(-1.0)?, run(1.0)?, true),
    };
    Ok(GeodesicTrace::from_trace(trace))
}

/// Trace CSV header.
pub const TRACE_HEADER: &str = "t,x,y,p_or_q,chart,Delta,F,causal,event";

/// Renders a trace as CSV: one row per sample, `event` holding the names of
/// events recorded at that sample joined by `;`.
pub fn trace_csv(trace: &Trace) -> String {
    use std::fmt::Write;
    let mut s = String::with_capacity(96 * (trace.samples.len() + 1));
    s.push_str(TRACE_HEADER);
    s.push('\n');
    let mut ev = trace.events.iter().peekable();
    for (i, smp) in trace.samples.iter().enumerate() {
        let mut names = Vec::new();
        while let Some(e) = ev.peek() {
            if e.sample != i {
                break;
            }
            names.push(e.kind.name());
            ev.next();
        }
        let _ = writeln!(
            s,
            "{:.12e},{:.12e},{:.12e},{:.12e},{},{:.6e},{:.6e},{},{}",
            smp.t,
            smp.state.x,
            smp.state.y,
            smp.state.w,
            smp.state.chart,
            smp.delta,
            smp.f,
            smp.causal,
            names.join(";")
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1() -> Metric {
        Metric::parse("-y", "0", "1").unwrap()
    }

    fn close(a: [f64; 3], b: [f64; 3], tol: f64) -> bool {
        a.iter().zip(&b).all(|(u, v)| (u - v).abs() <= tol)
    }

    fn tight() -> IntegratorConfig {
        IntegratorConfig {
            rk: RkConfig {
                rtol: 1e-12,
                atol: 1e-14,
                ..RkConfig::default()
            },
            ..IntegratorConfig::default()
        }
    }

    #[test]
    fn isotropic_field_examples() {
        let m = e1();
        let v = field_isotropic(&m, &LiftedState::affine(0.0, 0.0, 0.0)).unwrap();
        assert!(close(v, [0.0; 3], 0.0));
        let v = field_isotropic(&m, &LiftedState::affine(1.0, 0.25, 0.5)).unwrap();
        assert!(close(v, [0.5, 0.25, 0.25], 1e-15));
    }

    #[test]
    fn normal_form_linearization() {
        // on F = 0 the reduced field is ẋ = −p, ṗ = εx − p/2 up to the factor ω = −1
        let m = Metric::normal_form(Expr::Const(-1.0), -1.0);
        let h = 1e-6;
        let at = |x: f64, p: f64| {
            let y = -x * x + p * p;
            field_isotropic(&m, &LiftedState::affine(x, y, p)).unwrap()
        };
        let jx = [(at(h, 0.0)[0] - at(-h, 0.0)[0]) / (2.0 * h), (at(h, 0.0)[2] - at(-h, 0.0)[2]) / (2.0 * h)];
        let jp = [(at(0.0, h)[0] - at(0.0, -h)[0]) / (2.0 * h), (at(0.0, h)[2] - at(0.0, -h)[2]) / (2.0 * h)];
        let (tr, det) = (jx[0] + jp[1], jx[0] * jp[1] - jp[0] * jx[1]);
        let disc = (tr * tr - 4.0 * det).sqrt();
        let (l1, l2) = ((tr + disc) / 2.0, (tr - disc) / 2.0);
        assert!((l1 - 1.2808).abs() < 1e-4 && (l2 + 0.7808).abs() < 1e-4, "{l1} {l2}");
    }

    use crate::expr::Expr;

    #[test]
    fn lifted_field_examples() {
        let m = e1();
        let v = field_lifted(&m, &LiftedState::affine(0.0, 1.0, 0.0)).unwrap();
        assert!(close(v, [-2.0, 0.0, 1.0], 1e-15));
        for x in [-1.0, 0.0, 2.5] {
            let v = field_lifted(&m, &LiftedState::affine(x, 0.0, 0.0)).unwrap();
            assert!(close(v, [0.0; 3], 0.0));
        }
        let c3 = Metric::parse("x", "0", "1 + x").unwrap();
        let v = field_lifted(&c3, &LiftedState::affine(0.0, 0.0, 1.0)).unwrap();
        assert!(close(v, [0.0; 3], 1e-15));
    }

    #[test]
    fn inverted_chart_is_proportional() {
        let m = Metric::parse("x - y^2", "0.3*x", "1 + x*y").unwrap();
        // the isotropic field only transforms consistently on F = 0
        let iso: Vec<(f64, f64, f64, FieldKind)> = [(-0.2, 0.1), (0.1, 0.5)]
            .iter()
            .flat_map(|&(x, y)| {
                m.isotropic_directions(Point::new(x, y))
                    .unwrap()
                    .into_iter()
                    .map(move |(d, _)| (x, y, d.slope().unwrap(), FieldKind::Isotropic))
            })
            .collect();
        assert_eq!(iso.len(), 4);
        let geo = [(0.2, 0.1, 2.0), (-0.3, 0.4, -3.5), (0.5, -0.2, 0.7)].map(|(x, y, p)| (x, y, p, FieldKind::Geodesic));
        for (x, y, p, kind) in iso.into_iter().chain(geo) {
            let q = 1.0 / p;
            {
                let va = velocity(&m, kind, &LiftedState::affine(x, y, p)).unwrap();
                let vi = velocity(&m, kind, &LiftedState::inverted(x, y, q)).unwrap();
                // same planar direction, and dq = −q² dp
                let k = if vi[0].abs() > vi[1].abs() { vi[0] / va[0] } else { vi[1] / va[1] };
                assert!((vi[0] - k * va[0]).abs() < 1e-12);
                assert!((vi[1] - k * va[1]).abs() < 1e-12);
                assert!((vi[2] + q * q * k * va[2]).abs() < 1e-12, "{kind:?}");
            }
        }
    }

    #[test]
    fn isotropic_parabola_endpoint() {
        let m = e1();
        let stop = |s: &LiftedState| s.x - 2.0;
        let tr = integrate(
            &m,
            FieldKind::Geodesic,
            LiftedState::affine(1.0, 0.25, 0.5),
            -1.0,
            &IntegratorConfig::default(),
            Some(&stop),
        )
        .unwrap();
        assert_eq!(tr.termination, Termination::Stop);
        let s = tr.last().state;
        assert!((s.x - 2.0).abs() < 1e-7 && (s.y - 1.0).abs() < 1e-7 && (s.p() - 1.0).abs() < 1e-7, "{s:?}");
    }

    fn cos_trace(cfg: &IntegratorConfig) -> Trace {
        let stop = |s: &LiftedState| s.y - 1e-4;
        integrate(&e1(), FieldKind::Geodesic, LiftedState::affine(0.0, 1.0, 0.0), -1.0, cfg, Some(&stop)).unwrap()
    }

    #[test]
    fn geodesic_reaches_discriminant_near_pi() {
        let tr = cos_trace(&IntegratorConfig::default());
        assert_eq!(tr.termination, Termination::Stop);
        let s = tr.last().state;
        assert!(s.y <= 1e-4 + 1e-12);
        assert!((s.x - std::f64::consts::PI).abs() < 0.05, "{s:?}");
        assert!(s.p().abs() < 0.02);
        let want = (s.x / 2.0).cos().powi(2);
        assert!((s.y - want).abs() < 1e-7);
    }

    #[test]
    fn first_integral_is_conserved() {
        let tr = cos_trace(&tight());
        let q = |s: &LiftedState| (s.p() * s.p() - s.y) / (s.y * s.y);
        let q0 = q(&tr.samples[0].state);
        let drift = tr.samples.iter().map(|s| (q(&s.state) - q0).abs()).fold(0.0, f64::max);
        assert!(drift <= 1e-7, "{drift}");
    }

    #[test]
    fn energy_is_conserved_off_the_isotropic_surface() {
        let stop = |s: &LiftedState| s.y - 0.05;
        let cfg = IntegratorConfig {
            sample_dt: Some(0.01),
            ..tight()
        };
        for init in [LiftedState::affine(0.0, 1.0, 2.0), LiftedState::affine(0.0, 0.5, 0.3)] {
            let tr = integrate(&e1(), FieldKind::Geodesic, init, 1.0, &cfg, Some(&stop)).unwrap();
            let h = |s: &LiftedState| s.y * s.y / (s.p() * s.p() - s.y).abs();
            let h0 = h(&tr.samples[0].state);
            for s in &tr.samples {
                assert!((h(&s.state) - h0).abs() <= 1e-6 * h0);
            }
        }
    }

    #[test]
    fn isotropic_surface_is_invariant() {
        let m = Metric::parse("x - y^2", "0.3*x", "1 + x*y").unwrap();
        let cfg = IntegratorConfig {
            bounds: Some(Bounds {
                x: [-0.9, 0.9],
                y: [-0.9, 0.9],
            }),
            t_max: 50.0,
            ..IntegratorConfig::default()
        };
        for (x, y) in [(0.4, 0.3), (-0.5, 0.2), (0.1, -0.6)] {
            let q = Point::new(x, y);
            for (d, _) in m.isotropic_directions(q).unwrap() {
                for sense in [1.0, -1.0] {
                    let tr = integrate(&m, FieldKind::Geodesic, LiftedState::from_direction(q, d), sense, &cfg, None)
                        .unwrap();
                    for s in &tr.samples {
                        let st = s.state;
                        let n2 = st.x * st.x + st.y * st.y + st.w * st.w;
                        assert!(s.f.abs() <= 1e-8 * (1.0 + n2), "{s:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn chart_switch_consistency() {
        let stop = |s: &LiftedState| s.y - 0.1;
        let run = |thr: f64| {
            let cfg = IntegratorConfig {
                chart_threshold: thr,
                ..IntegratorConfig::default()
            };
            integrate(&e1(), FieldKind::Geodesic, LiftedState::affine(0.0, 1.0, 2.0), 1.0, &cfg, Some(&stop)).unwrap()
        };
        let (a, b) = (run(0.5), run(2.0));
        assert!(a.has_event(|e| matches!(e, EventKind::ChartSwitch(_))));
        let (sa, sb) = (a.last().state, b.last().state);
        assert!((sa.x - sb.x).abs() < 1e-7 && (sa.y - sb.y).abs() < 1e-7, "{sa:?} {sb:?}");
        assert!((sa.p() - sb.p()).abs() < 1e-7 * (1.0 + sa.p().abs()));
    }

    fn seg_dist(q: Point, a: Point, b: Point) -> f64 {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let l2 = dx * dx + dy * dy;
        let t = if l2 == 0.0 { 0.0 } else { (((q.x - a.x) * dx + (q.y - a.y) * dy) / l2).clamp(0.0, 1.0) };
        q.dist(Point::new(a.x + t * dx, a.y + t * dy))
    }

    fn one_sided(p: &[Point], q: &[Point]) -> f64 {
        p.iter()
            .map(|&v| q.windows(2).map(|w| seg_dist(v, w[0], w[1])).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    }

    #[test]
    fn isotropic_and_lifted_traces_agree() {
        let m = Metric::parse("x - y + 0.2*x*y", "0.1", "1 + 0.3*x").unwrap();
        let q0 = Point::new(-0.5, 0.2);
        let (d, _) = m.isotropic_directions(q0).unwrap()[0];
        let init = LiftedState::from_direction(q0, d);
        // unit arclength along the common curve, measured on the lifted trace
        let cfg = IntegratorConfig {
            sample_dt: Some(1e-3),
            ..tight()
        };
        let arc = |tr: &Trace| {
            let mut s = 0.0;
            let mut out = vec![tr.samples[0].state.point()];
            for w in tr.samples.windows(2) {
                s += w[0].state.point().dist(w[1].state.point());
                out.push(w[1].state.point());
                if s >= 1.0 {
                    break;
                }
            }
            (s, out)
        };
        let stop_far = |s: &LiftedState| s.point().dist(q0) - 0.9;
        let a = integrate(&m, FieldKind::Geodesic, init, 1.0, &cfg, Some(&stop_far)).unwrap();
        let v_geo = velocity(&m, FieldKind::Geodesic, &init).unwrap();
        let v_iso = velocity(&m, FieldKind::Isotropic, &init).unwrap();
        let sense = if v_geo[0] * v_iso[0] + v_geo[1] * v_iso[1] < 0.0 { -1.0 } else { 1.0 };
        let b = integrate(&m, FieldKind::Isotropic, init, sense, &cfg, Some(&stop_far)).unwrap();
        let (la, pa) = arc(&a);
        let (_, pb) = arc(&b);
        assert!(la > 0.5);
        let h = one_sided(&pa, &pb).max(one_sided(&pb[..pb.len().min(pa.len() * 4)], &pa));
        assert!(h <= 1e-6, "{h}");
    }

    #[test]
    fn trace_labels() {
        let m = e1();
        let cfg = IntegratorConfig {
            bounds: Some(Bounds {
                x: [-3.0, 3.0],
                y: [1e-3, 3.0],
            }),
            ..IntegratorConfig::default()
        };
        let g = trace_geodesic(&m, Point::new(0.0, 1.0), Direction::Affine(2.0), Sense::Both, &cfg).unwrap();
        assert!(g.points.len() > 10);
        assert!(g.labels.iter().all(|l| *l == CausalType::Timelike));
        assert!(g.trace.samples.windows(2).all(|w| w[1].t > w[0].t));

        let cfg = IntegratorConfig::default();
        let g = trace_geodesic(&m, Point::new(1.0, 0.25), Direction::Affine(0.5), Sense::Forward, &cfg).unwrap();
        for s in &g.trace.samples {
            assert_eq!(s.causal, CausalType::Isotropic, "{s:?}");
        }
        assert!(g.trace.samples.iter().all(|s| s.f.abs() <= 1e-8));
        assert_eq!(g.trace.termination, Termination::Arrest);
        let arrest = g.trace.arrest.as_ref().unwrap();
        assert_eq!(arrest.class, Some(ClassTag::Z));
        assert!(arrest.point.x.abs() < 1e-3);
    }

    #[test]
    fn singular_start_is_rejected() {
        let m = e1();
        let err = trace_geodesic(&m, Point::new(0.3, 0.0), Direction::Affine(0.0), Sense::Forward, &IntegratorConfig::default());
        assert!(matches!(err, Err(Error::SingularStart { .. })));
    }

    #[test]
    fn arrival_at_the_discriminant() {
        let m = Metric::parse("x", "0", "1 + x").unwrap();
        let g = trace_geodesic(
            &m,
            Point::new(-0.5, 0.0),
            Direction::Affine(0.3),
            Sense::Backward,
            &IntegratorConfig::default(),
        )
        .unwrap();
        assert_eq!(g.trace.termination, Termination::Arrest);
        let last = g.trace.last();
        assert!(last.state.x.abs() <= 1e-9, "{last:?}");
        assert!(last.state.p().abs() <= 1e-4);
        assert!(!g.crossings.is_empty());
    }

    #[test]
    fn csv_layout() {
        let stop = |s: &LiftedState| s.x - 2.0;
        let tr = integrate(
            &e1(),
            FieldKind::Geodesic,
            LiftedState::affine(1.0, 0.25, 0.5),
            -1.0,
            &IntegratorConfig {
                chart_threshold: 0.6,
                ..IntegratorConfig::default()
            },
            Some(&stop),
        )
        .unwrap();
        let csv = trace_csv(&tr);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TRACE_HEADER);
        assert_eq!(lines.len(), tr.samples.len() + 1);
        assert!(lines.iter().all(|l| l.split(',').count() == 9));
        assert!(lines.last().unwrap().ends_with(",stop"));
        assert!(csv.contains(",inverted,"));
    }
}
