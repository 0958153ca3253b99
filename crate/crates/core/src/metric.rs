//! The metric `ds² = a dx² + 2b dxdy + c dy²` and its pointwise invariants.

use std::f64::consts::PI;
use std::fmt;

use crate::expr::{Expr, Var};
use crate::linalg::det3;
use crate::{Error, Result};

/// A point of the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Point {
        Point { x, y }
    }

    pub fn dist(self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Point {
        Point { x, y }
    }
}

/// An element of ℝP¹: a slope `p = dy/dx` or the vertical direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Direction {
    Affine(f64),
    Infinity,
}

impl Direction {
    /// Direction of the vector `(dx, dy)`.
    pub fn from_vector(dx: f64, dy: f64) -> Direction {
        if dx == 0.0 {
            Direction::Infinity
        } else {
            Direction::Affine(dy / dx)
        }
    }

    /// Direction with inverted-chart coordinate `q = 1/p`.
    pub fn from_inverted(q: f64) -> Direction {
        if q == 0.0 {
            Direction::Infinity
        } else {
            Direction::Affine(1.0 / q)
        }
    }

    /// Unit representative `(cos θ, sin θ)` with θ ∈ (−π/2, π/2].
    pub fn unit(self) -> [f64; 2] {
        match self {
            Direction::Affine(p) => {
                let n = p.hypot(1.0);
                [1.0 / n, p / n]
            }
            Direction::Infinity => [0.0, 1.0],
        }
    }

    /// Angle in [0, π).
    pub fn angle(self) -> f64 {
        match self {
            Direction::Affine(p) => p.atan().rem_euclid(PI),
            Direction::Infinity => 0.5 * PI,
        }
    }

    /// Angular distance on ℝP¹, in [0, π/2].
    pub fn distance(self, other: Direction) -> f64 {
        let d = (self.angle() - other.angle()).abs();
        d.min(PI - d)
    }

    pub fn slope(self) -> Option<f64> {
        match self {
            Direction::Affine(p) => Some(p),
            Direction::Infinity => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Direction::Infinity)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Affine(p) => write!(f, "{p}"),
            Direction::Infinity => f.write_str("inf"),
        }
    }
}

/// Sign of `ds²` along a direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CausalType {
    Timelike,
    Spacelike,
    Isotropic,
}

impl CausalType {
    pub fn name(self) -> &'static str {
        match self {
            CausalType::Timelike => "timelike",
            CausalType::Spacelike => "spacelike",
            CausalType::Isotropic => "isotropic",
        }
    }
}

impl fmt::Display for CausalType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Numerical bands replacing the exact zeros of the theory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `|Δ| ≤ on_discriminant · s²` puts a point on 𝒟, `s = max(|a|,|b|,|c|)`.
    pub on_discriminant: f64,
    /// Band of `|F|` on the unit vector for the isotropic label.
    pub iso: f64,
    /// Roots of `M` closer than this (radians on ℝP¹) are merged.
    pub root_merge: f64,
    /// `|K₁| ≤ k1 · s³` counts as zero.
    pub k1: f64,
    /// Relative band on `F_x + p₀F_y` for tangency, and on the p-component
    /// of the isotropic field along the criminant.
    pub tangency: f64,
    /// Criminant samples used to detect identical tangency.
    pub criminant_samples: usize,
    /// Spacing of those samples along 𝒟.
    pub criminant_spacing: f64,
    /// `|ε_i| ≤ zero_eigen · |ε₁ + ε₂|` counts as a zero eigenvalue.
    pub zero_eigen: f64,
    /// `|tr² − 4 det| ≤ node_focus · tr²` is the undecidable node/focus boundary.
    pub node_focus: f64,
    /// `|ε₁ε₂| ≤ saddle_node · tr²` is the undecidable saddle/node boundary.
    pub saddle_node: f64,
    pub resonance: f64,
    pub resonance_order: u32,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            on_discriminant: 1e-9,
            iso: 1e-9,
            root_merge: 1e-6,
            k1: 1e-9,
            tangency: 1e-9,
            criminant_samples: 9,
            criminant_spacing: 0.01,
            zero_eigen: 1e-6,
            node_focus: 1e-2,
            saddle_node: 1e-6,
            resonance: 1e-8,
            resonance_order: 4,
        }
    }
}

/// Value and partials up to order two of one coefficient at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub x: f64,
    pub y: f64,
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

/// Jets of `a`, `b`, `c` at a point.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricJet {
    pub a: Jet,
    pub b: Jet,
    pub c: Jet,
}

impl MetricJet {
    pub fn delta(&self) -> f64 {
        self.a.v * self.c.v - self.b.v * self.b.v
    }

    pub fn delta_grad(&self) -> [f64; 2] {
        let (a, b, c) = (&self.a, &self.b, &self.c);
        [
            a.x * c.v + a.v * c.x - 2.0 * b.v * b.x,
            a.y * c.v + a.v * c.y - 2.0 * b.v * b.y,
        ]
    }

    /// `max(|a|, |b|, |c|)`.
    pub fn scale(&self) -> f64 {
        self.a.v.abs().max(self.b.v.abs()).max(self.c.v.abs())
    }

    /// `F = cp² + 2bp + a`.
    pub fn f(&self, p: f64) -> f64 {
        (self.c.v * p + 2.0 * self.b.v) * p + self.a.v
    }

    /// `(F_x, F_y, F_p)`.
    pub fn f_grad(&self, p: f64) -> [f64; 3] {
        let (a, b, c) = (&self.a, &self.b, &self.c);
        [
            c.x * p * p + 2.0 * b.x * p + a.x,
            c.y * p * p + 2.0 * b.y * p + a.y,
            2.0 * (c.v * p + b.v),
        ]
    }

    /// Coefficients `μ₀..μ₃` of the cubic `M(q, p) = Σ μᵢ pⁱ`.
    pub fn mu(&self) -> [f64; 4] {
        let (a, b, c) = (&self.a, &self.b, &self.c);
        [
            a.v * (a.y - 2.0 * b.x) + a.x * b.v,
            b.v * (3.0 * a.y - 2.0 * b.x) + a.x * c.v - 2.0 * a.v * c.x,
            b.v * (2.0 * b.y - 3.0 * c.x) + 2.0 * a.y * c.v - a.v * c.y,
            c.v * (2.0 * b.y - c.x) - b.v * c.y,
        ]
    }

    /// Field on the isotropic surface in the affine chart,
    /// `(½F_p, ½pF_p, −½(F_x + pF_y))`.
    pub fn iso_field(&self, p: f64) -> [f64; 3] {
        let [fx, fy, fp] = self.f_grad(p);
        [0.5 * fp, 0.5 * p * fp, -0.5 * (fx + p * fy)]
    }

    /// The same field in the chart `q = dx/dy`, with `F̃ = aq² + 2bq + c`:
    /// `(½qF̃_q, ½F̃_q, −½(F̃_y + qF̃_x))`.
    pub fn iso_field_inverted(&self, q: f64) -> [f64; 3] {
        let (a, b, c) = (&self.a, &self.b, &self.c);
        let fq = 2.0 * (a.v * q + b.v);
        let fx = a.x * q * q + 2.0 * b.x * q + c.x;
        let fy = a.y * q * q + 2.0 * b.y * q + c.y;
        [0.5 * q * fq, 0.5 * fq, -0.5 * (fy + q * fx)]
    }

    /// Homogeneous `F` on a unit vector and the matching absolute scale.
    fn f_homogeneous(&self, d: Direction) -> (f64, f64) {
        let [u, w] = d.unit();
        let (a, b, c) = (self.a.v, self.b.v, self.c.v);
        let val = a * u * u + 2.0 * b * u * w + c * w * w;
        let scale = a.abs() * u * u + 2.0 * (b * u * w).abs() + c.abs() * w * w;
        (val, scale)
    }
}

#[derive(Debug, Clone)]
struct Coeff {
    e: Expr,
    dx: Expr,
    dy: Expr,
    dxx: Expr,
    dxy: Expr,
    dyy: Expr,
}

impl Coeff {
    fn new(e: Expr) -> Coeff {
        let dx = e.diff(Var::X);
        let dy = e.diff(Var::Y);
        let dxx = dx.diff(Var::X);
        let dxy = dx.diff(Var::Y);
        let dyy = dy.diff(Var::Y);
        Coeff {
            e,
            dx,
            dy,
            dxx,
            dxy,
            dyy,
        }
    }

    fn jet(&self, name: &'static str, q: Point, second: bool) -> Result<Jet> {
        let ev = |e: &Expr| e.eval(q.x, q.y).map_err(|s| Error::eval(name, q.x, q.y, s));
        let mut j = Jet {
            v: ev(&self.e)?,
            x: ev(&self.dx)?,
            y: ev(&self.dy)?,
            ..Jet::default()
        };
        if second {
            j.xx = ev(&self.dxx)?;
            j.xy = ev(&self.dxy)?;
            j.yy = ev(&self.dyy)?;
        }
        Ok(j)
    }
}

/// Parameters of the normal form `ds² = ω(y − εx²)dx² − ω dy²`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    pub omega: Expr,
    pub eps: f64,
}

/// A metric given by three coefficient expressions.
#[derive(Debug, Clone)]
pub struct Metric {
    a: Coeff,
    b: Coeff,
    c: Coeff,
    normal_form: Option<NormalForm>,
    tol: Tolerances,
}

impl Metric {
    pub fn new(a: Expr, b: Expr, c: Expr) -> Metric {
        Metric {
            a: Coeff::new(a),
            b: Coeff::new(b),
            c: Coeff::new(c),
            normal_form: None,
            tol: Tolerances::default(),
        }
    }

    pub fn parse(a: &str, b: &str, c: &str) -> Result<Metric> {
        Ok(Metric::new(
            crate::expr::parse(a)?,
            crate::expr::parse(b)?,
            crate::expr::parse(c)?,
        ))
    }

    /// `a = ω(y − εx²)`, `b = 0`, `c = −ω`.
    pub fn normal_form(omega: Expr, eps: f64) -> Metric {
        let r = Expr::Sub(
            Box::new(Expr::y()),
            Box::new(Expr::Mul(
                Box::new(Expr::Const(eps)),
                Box::new(Expr::Pow(Box::new(Expr::x()), 2)),
            )),
        );
        let a = Expr::Mul(Box::new(omega.clone()), Box::new(r));
        let c = Expr::Neg(Box::new(omega.clone()));
        let mut m = Metric::new(a, Expr::Const(0.0), c);
        m.normal_form = Some(NormalForm { omega, eps });
        m
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Metric {
        self.tol = tol;
        self
    }

    /// The same metric multiplied by a constant.
    pub fn scaled(&self, k: f64) -> Metric {
        let s = |e: &Expr| Expr::Mul(Box::new(Expr::Const(k)), Box::new(e.clone()));
        Metric::new(s(&self.a.e), s(&self.b.e), s(&self.c.e)).with_tolerances(self.tol)
    }

    pub fn a(&self) -> &Expr {
        &self.a.e
    }

    pub fn b(&self) -> &Expr {
        &self.b.e
    }

    pub fn c(&self) -> &Expr {
        &self.c.e
    }

    pub fn normal_form_params(&self) -> Option<&NormalForm> {
        self.normal_form.as_ref()
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    /// Values and first partials of the coefficients.
    pub fn jet1(&self, q: Point) -> Result<MetricJet> {
        self.jet_impl(q, false)
    }

    /// Values and partials up to order two.
    pub fn jet2(&self, q: Point) -> Result<MetricJet> {
        self.jet_impl(q, true)
    }

    fn jet_impl(&self, q: Point, second: bool) -> Result<MetricJet> {
        let j = MetricJet {
            a: self.a.jet("a", q, second)?,
            b: self.b.jet("b", q, second)?,
            c: self.c.jet("c", q, second)?,
        };
        if j.scale() == 0.0 {
            return Err(Error::DegenerateMetric { x: q.x, y: q.y });
        }
        Ok(j)
    }

    /// `Δ(q)` and `(Δ_x, Δ_y)`.
    pub fn discriminant(&self, q: Point) -> Result<(f64, [f64; 2])> {
        let j = self.jet1(q)?;
        Ok((j.delta(), j.delta_grad()))
    }

    /// Whether `q` lies in the on-discriminant band.
    pub fn on_discriminant(&self, q: Point) -> Result<bool> {
        let j = self.jet1(q)?;
        Ok(self.jet_on_discriminant(&j))
    }

    pub(crate) fn jet_on_discriminant(&self, j: &MetricJet) -> bool {
        let s = j.scale();
        j.delta().abs() <= self.tol.on_discriminant * s * s
    }

    pub(crate) fn require_on_discriminant(&self, q: Point) -> Result<MetricJet> {
        let j = self.jet2(q)?;
        if !self.jet_on_discriminant(&j) {
            return Err(Error::OffDiscriminant {
                x: q.x,
                y: q.y,
                delta: j.delta(),
            });
        }
        Ok(j)
    }

    /// `F(q, p)`; the leading coefficient `c` at infinity.
    pub fn f_value(&self, q: Point, p: Direction) -> Result<f64> {
        let j = self.jet1(q)?;
        Ok(match p {
            Direction::Affine(p) => j.f(p),
            Direction::Infinity => j.c.v,
        })
    }

    /// Causal type of direction `p` at `q`, isotropic when
    /// `|au² + 2buw + cw²| ≤ iso` on the unit vector `(u, w)`.
    pub fn causal_type(&self, q: Point, p: Direction) -> Result<CausalType> {
        let j = self.jet1(q)?;
        Ok(causal_of(&j, p, self.tol.iso))
    }

    /// Real roots of `F(q, ·)` over ℝP¹ with multiplicity.
    pub fn isotropic_directions(&self, q: Point) -> Result<Vec<(Direction, usize)>> {
        let j = self.jet1(q)?;
        Ok(isotropic_roots(&j, self.jet_on_discriminant(&j)))
    }

    /// `K₁ = det A − det B`, the Brioschi numerator, equal to `Δ²K` off 𝒟.
    pub fn brioschi_k1(&self, q: Point) -> Result<f64> {
        Ok(brioschi(&self.jet2(q)?))
    }

    /// Gaussian curvature `K₁ / Δ²`; infinite on 𝒟.
    pub fn gauss_curvature(&self, q: Point) -> Result<f64> {
        let j = self.jet2(q)?;
        let d = j.delta();
        Ok(brioschi(&j) / (d * d))
    }

    /// Newton projection of `seed` onto `Δ = 0` along the gradient.
    pub fn project_to_discriminant(&self, seed: Point) -> Result<Point> {
        let mut q = seed;
        for _ in 0..60 {
            let (d, g) = self.discriminant(q)?;
            let g2 = g[0] * g[0] + g[1] * g[1];
            if g2.sqrt() <= 1e-12 {
                return Err(Error::DegenerateDiscriminant { x: q.x, y: q.y });
            }
            let step = [d * g[0] / g2, d * g[1] / g2];
            q = Point::new(q.x - step[0], q.y - step[1]);
            if step[0].hypot(step[1]) <= 1e-15 * (1.0 + q.x.abs().max(q.y.abs())) {
                break;
            }
        }
        let (d, _) = self.discriminant(q)?;
        if d.abs() > 1e-10 || !q.x.is_finite() || !q.y.is_finite() {
            return Err(Error::OffDiscriminant {
                x: q.x,
                y: q.y,
                delta: d,
            });
        }
        Ok(q)
    }

    /// Marches along `Δ = 0` from `seed` by predictor (tangent step) and
    /// corrector (Newton projection). The sign of `arclength` picks the
    /// orientation: positive follows `(−Δ_y, Δ_x)`. The seed's projection is
    /// the first point; every point satisfies `|Δ| ≤ 1e-10`.
    pub fn trace_discriminant(&self, seed: Point, arclength: f64, step: f64) -> Result<Vec<Point>> {
        self.trace_discriminant_within(seed, arclength, step, |_| true)
    }

    /// As [`Metric::trace_discriminant`], stopping before the first point
    /// for which `keep` is false.
    pub fn trace_discriminant_within(
        &self,
        seed: Point,
        arclength: f64,
        step: f64,
        keep: impl Fn(Point) -> bool,
    ) -> Result<Vec<Point>> {
        if !(step > 0.0) || !arclength.is_finite() {
            return Err(Error::Invalid(format!(
                "trace_discriminant needs step > 0 and finite arclength, got {step}, {arclength}"
            )));
        }
        let mut q = self.project_to_discriminant(seed)?;
        let mut pts = vec![q];
        let n = (arclength.abs() / step).round() as usize;
        let orient = if arclength >= 0.0 { 1.0 } else { -1.0 };
        let mut prev_t: Option<[f64; 2]> = None;
        for _ in 0..n {
            let (_, g) = self.discriminant(q)?;
            let gn = g[0].hypot(g[1]);
            if gn <= 1e-12 {
                return Err(Error::DegenerateDiscriminant { x: q.x, y: q.y });
            }
            let mut t = [-g[1] / gn * orient, g[0] / gn * orient];
            if let Some(pt) = prev_t {
                if t[0] * pt[0] + t[1] * pt[1] < 0.0 {
                    t = [-t[0], -t[1]];
                }
            }
            let next = self.project_to_discriminant(Point::new(q.x + step * t[0], q.y + step * t[1]))?;
            if !keep(next) {
                break;
            }
            prev_t = Some(t);
            q = next;
            pts.push(q);
        }
        Ok(pts)
    }
}

pub(crate) fn causal_of(j: &MetricJet, p: Direction, iso: f64) -> CausalType {
    let (val, _) = j.f_homogeneous(p);
    if val.abs() <= iso {
        CausalType::Isotropic
    } else if val > 0.0 {
        CausalType::Timelike
    } else {
        CausalType::Spacelike
    }
}

/// Roots of `a u² + 2b uw + c w² = 0` on ℝP¹.
fn isotropic_roots(j: &MetricJet, on_d: bool) -> Vec<(Direction, usize)> {
    let (a, b, c) = (j.a.v, j.b.v, j.c.v);
    let affine = c.abs() >= a.abs();
    // In the chosen chart the equation reads A t² + 2B t + C = 0 with |A| ≥ |C|.
    let (ca, cc) = if affine { (c, a) } else { (a, c) };
    let to_dir = |t: f64| {
        if affine {
            Direction::Affine(t)
        } else {
            Direction::from_inverted(t)
        }
    };
    if on_d {
        return vec![(to_dir(-b / ca), 2)];
    }
    let disc = b * b - ca * cc;
    if disc < 0.0 {
        return Vec::new();
    }
    if ca == 0.0 {
        // then cc = 0 as well: 2B t = 0, roots t = 0 and t = ∞
        let other = if affine {
            Direction::Infinity
        } else {
            Direction::Affine(0.0)
        };
        return vec![(to_dir(0.0), 1), (other, 1)];
    }
    let s = disc.sqrt();
    let qq = -(b + b.signum() * s);
    let (mut r1, mut r2) = (qq / ca, if qq != 0.0 { cc / qq } else { 0.0 });
    if r1 > r2 {
        std::mem::swap(&mut r1, &mut r2);
    }
    vec![(to_dir(r1), 1), (to_dir(r2), 1)]
}

pub(crate) fn brioschi(j: &MetricJet) -> f64 {
    let (e, f, g) = (&j.a, &j.b, &j.c);
    let a = [
        [
            -0.5 * e.yy + f.xy - 0.5 * g.xx,
            0.5 * e.x,
            f.x - 0.5 * e.y,
        ],
        [f.y - 0.5 * g.x, e.v, f.v],
        [0.5 * g.y, f.v, g.v],
    ];
    let b = [
        [0.0, 0.5 * e.y, 0.5 * g.x],
        [0.5 * e.y, e.v, f.v],
        [0.5 * g.x, f.v, g.v],
    ];
    det3(&a) - det3(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e1() -> Metric {
        Metric::parse("-y", "0", "1").unwrap()
    }

    #[test]
    fn discriminant_examples() {
        let (d, g) = e1().discriminant(Point::new(2.0, 3.0)).unwrap();
        assert_eq!(d, -3.0);
        assert_eq!(g, [0.0, -1.0]);
        let e2 = Metric::parse("-(y + x^2)", "0", "1").unwrap();
        assert_eq!(e2.discriminant(Point::new(1.0, 1.0)).unwrap().0, -2.0);
        let flat = Metric::parse("1", "0", "1").unwrap();
        for (x, y) in [(0.0, 0.0), (3.0, -2.0)] {
            assert_eq!(flat.discriminant(Point::new(x, y)).unwrap().0, 1.0);
        }
    }

    #[test]
    fn degenerate_metric_is_rejected() {
        let m = Metric::parse("x", "0", "x").unwrap();
        assert!(matches!(
            m.jet1(Point::new(0.0, 1.0)),
            Err(Error::DegenerateMetric { .. })
        ));
    }

    #[test]
    fn f_value_examples() {
        let m = e1();
        let q = Point::new(0.0, 1.0);
        assert_eq!(m.f_value(q, Direction::Affine(0.0)).unwrap(), -1.0);
        assert_eq!(m.f_value(q, Direction::Affine(1.0)).unwrap(), 0.0);
        assert_eq!(m.f_value(Point::new(1.0, 0.25), Direction::Affine(0.5)).unwrap(), 0.0);
        assert_eq!(m.f_value(q, Direction::Infinity).unwrap(), 1.0);
    }

    #[test]
    fn causal_type_examples() {
        let m = e1();
        let q = Point::new(0.0, 1.0);
        assert_eq!(m.causal_type(q, Direction::Affine(2.0)).unwrap(), CausalType::Timelike);
        assert_eq!(m.causal_type(q, Direction::Affine(0.0)).unwrap(), CausalType::Spacelike);
        assert_eq!(m.causal_type(q, Direction::Affine(1.0)).unwrap(), CausalType::Isotropic);
        assert_eq!(m.causal_type(q, Direction::Infinity).unwrap(), CausalType::Timelike);
    }

    #[test]
    fn isotropic_direction_examples() {
        let m = e1();
        let two = m.isotropic_directions(Point::new(0.0, 1.0)).unwrap();
        assert_eq!(two, vec![(Direction::Affine(-1.0), 1), (Direction::Affine(1.0), 1)]);
        let double = m.isotropic_directions(Point::new(0.0, 0.0)).unwrap();
        assert_eq!(double.len(), 1);
        assert_eq!(double[0].1, 2);
        assert_eq!(double[0].0.slope().unwrap(), 0.0);
        assert!(m.isotropic_directions(Point::new(0.0, -1.0)).unwrap().is_empty());
    }

    #[test]
    fn isotropic_root_at_infinity_when_c_vanishes() {
        // ds² = 2dxdy: isotropic directions dx = 0 and dy = 0
        let m = Metric::parse("0", "1", "0").unwrap();
        let r = m.isotropic_directions(Point::new(0.3, 0.4)).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().any(|(d, _)| d.is_infinite()));
        assert!(r.iter().any(|(d, _)| *d == Direction::Affine(0.0)));
    }

    #[test]
    fn brioschi_examples() {
        let m = e1();
        assert_eq!(m.brioschi_k1(Point::new(0.0, 0.0)).unwrap(), 0.25);
        for (x, y) in [(1.0, 2.0), (-0.3, -0.7), (5.0, 0.1)] {
            assert_eq!(m.brioschi_k1(Point::new(x, y)).unwrap(), 0.25);
        }
        let flat = Metric::parse("1", "0", "1").unwrap();
        assert_eq!(flat.brioschi_k1(Point::new(0.4, -0.2)).unwrap(), 0.0);
    }

    #[test]
    fn sphere_has_unit_curvature() {
        let m = Metric::parse("1", "0", "sin(x)^2").unwrap();
        let k = m.gauss_curvature(Point::new(0.7, 0.0)).unwrap();
        assert!((k - 1.0).abs() < 1e-12, "{k}");
    }

    #[test]
    fn trace_discriminant_examples() {
        let m = e1();
        let pts = m.trace_discriminant(Point::new(0.0, 1e-3), 1.0, 0.1).unwrap();
        assert_eq!(pts.len(), 11);
        for (k, p) in pts.iter().enumerate() {
            assert!(p.y.abs() <= 1e-10);
            assert!((p.x - 0.1 * k as f64).abs() <= 1e-9);
        }
        let e2 = Metric::parse("-(y + x^2)", "0", "1").unwrap();
        for p in e2.trace_discriminant(Point::new(0.0, 1e-3), -1.5, 0.05).unwrap() {
            assert!((p.y + p.x * p.x).abs() <= 1e-8, "{p:?}");
        }
        let c3 = Metric::parse("x", "0", "1 + x").unwrap();
        let pts = c3.trace_discriminant(Point::new(1e-3, 0.0), 0.5, 0.05).unwrap();
        assert!(pts.len() > 5);
        for p in pts {
            assert!(p.x.abs() <= 1e-10);
        }
    }

    #[test]
    fn trace_discriminant_fails_on_critical_delta() {
        let m = Metric::parse("-(x^2 + y^2)", "0", "1").unwrap();
        assert!(matches!(
            m.trace_discriminant(Point::new(0.0, 0.0), 1.0, 0.1),
            Err(Error::DegenerateDiscriminant { .. })
        ));
    }

    #[test]
    fn normal_form_coefficients() {
        let m = Metric::normal_form(Expr::Const(-1.0), -1.0);
        let j = m.jet1(Point::new(0.5, 0.2)).unwrap();
        assert_eq!(j.a.v, -(0.2 + 0.25));
        assert_eq!(j.b.v, 0.0);
        assert_eq!(j.c.v, 1.0);
    }

    #[test]
    fn k1_constant_along_e1_discriminant() {
        let m = e1();
        for p in m.trace_discriminant(Point::new(-1.0, 1e-4), 2.0, 0.05).unwrap() {
            assert!((m.brioschi_k1(p).unwrap() - 0.25).abs() <= 1e-9);
        }
    }

    // Independent curvature oracle: Christoffel symbols from finite
    // differences of the metric, then R_1212 / det g.
    fn poly_metric(co: &[f64]) -> Metric {
        let p = |k: usize| {
            format!(
                "{:?} + {:?}*x + {:?}*y + {:?}*x^2 + {:?}*x*y + {:?}*y^2",
                co[k], co[k + 1], co[k + 2], co[k + 3], co[k + 4], co[k + 5]
            )
        };
        Metric::parse(&p(0), &p(6), &p(12)).unwrap()
    }

    fn g_at(m: &Metric, x: f64, y: f64) -> [[f64; 2]; 2] {
        let a = m.a().eval(x, y).unwrap();
        let b = m.b().eval(x, y).unwrap();
        let c = m.c().eval(x, y).unwrap();
        [[a, b], [b, c]]
    }

    // fourth-order central difference, Richardson-extrapolated once more
    fn d4<T: Fn(f64) -> f64>(f: T, h: f64) -> f64 {
        let s = |h: f64| (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h);
        (16.0 * s(0.5 * h) - s(h)) / 15.0
    }

    fn christoffel(m: &Metric, x: f64, y: f64) -> [[[f64; 2]; 2]; 2] {
        let h = 4e-4;
        let mut dg = [[[0.0; 2]; 2]; 2]; // dg[k][i][j] = ∂_k g_ij
        for i in 0..2 {
            for jj in 0..2 {
                dg[0][i][jj] = d4(|s| g_at(m, x + s, y)[i][jj], h);
                dg[1][i][jj] = d4(|s| g_at(m, x, y + s)[i][jj], h);
            }
        }
        let g = g_at(m, x, y);
        let det = g[0][0] * g[1][1] - g[0][1] * g[1][0];
        let inv = [[g[1][1] / det, -g[0][1] / det], [-g[1][0] / det, g[0][0] / det]];
        let mut gam = [[[0.0; 2]; 2]; 2];
        for l in 0..2 {
            for i in 0..2 {
                for jj in 0..2 {
                    let mut s = 0.0;
                    for k in 0..2 {
                        s += 0.5 * inv[l][k] * (dg[i][k][jj] + dg[jj][k][i] - dg[k][i][jj]);
                    }
                    gam[l][i][jj] = s;
                }
            }
        }
        gam
    }

    fn oracle_curvature(m: &Metric, x: f64, y: f64) -> f64 {
        let h = 2e-3;
        let gam = christoffel(m, x, y);
        let d1_g122 = d4(|s| christoffel(m, x + s, y)[0][1][1], h);
        let d2_g121 = d4(|s| christoffel(m, x, y + s)[0][1][0], h);
        let mut r = [0.0; 2]; // R^m_212
        for mm in 0..2 {
            let mut v = if mm == 0 {
                d1_g122 - d2_g121
            } else {
                d4(|s| christoffel(m, x + s, y)[1][1][1], h)
                    - d4(|s| christoffel(m, x, y + s)[1][1][0], h)
            };
            for k in 0..2 {
                v += gam[mm][0][k] * gam[k][1][1] - gam[mm][1][k] * gam[k][1][0];
            }
            r[mm] = v;
        }
        let g = g_at(m, x, y);
        let r1212 = g[0][0] * r[0] + g[0][1] * r[1];
        r1212 / (g[0][0] * g[1][1] - g[0][1] * g[1][0])
    }

    #[test]
    fn oracle_matches_sphere() {
        let m = Metric::parse("1", "0", "sin(x)^2").unwrap();
        assert!((oracle_curvature(&m, 0.7, 0.1) - 1.0).abs() < 1e-7);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn brioschi_matches_christoffel_oracle(
            co in proptest::collection::vec(-1.0f64..1.0, 18),
            x in -1.0f64..1.0,
            y in -1.0f64..1.0,
        ) {
            let m = poly_metric(&co);
            let q = Point::new(x, y);
            let (d, _) = m.discriminant(q).unwrap();
            prop_assume!(d.abs() > 0.1);
            let k = m.brioschi_k1(q).unwrap() / (d * d);
            let o = oracle_curvature(&m, x, y);
            prop_assert!((k - o).abs() <= 1e-6 * (1.0 + o.abs()), "{} vs {}", k, o);
        }

        #[test]
        fn isotropic_roots_zero_f(
            a in -2.0f64..2.0, b in -2.0f64..2.0, c in -2.0f64..2.0,
        ) {
            let m = Metric::new(Expr::Const(a), Expr::Const(b), Expr::Const(c));
            let q = Point::new(0.0, 0.0);
            prop_assume!(a.abs().max(b.abs()).max(c.abs()) > 1e-3);
            for (d, _) in m.isotropic_directions(q).unwrap() {
                let j = m.jet1(q).unwrap();
                let (v, s) = j.f_homogeneous(d);
                prop_assert!(v.abs() <= 1e-10 * s.max(j.scale()), "{:?} {}", d, v);
            }
        }
    }
}
