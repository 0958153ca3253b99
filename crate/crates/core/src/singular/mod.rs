//! Singular points of the lifted geodesic field on the discriminant curve.
//!
//! At `q ∈ 𝒟` the lifted field vanishes exactly in the admissible
//! directions, the roots of the cubic `M(q, ·)`. The isotropic direction
//! `p₀ = −b/c` is always one of them. Whether `p₀` is transverse or tangent
//! to `𝒟`, the sign of `K₁` and the spectrum of the isotropic field at
//! `(q, p₀)` decide the class.

mod report;
mod resonance;

use std::fmt;

use num_complex::Complex64;

use crate::linalg::{eig2, eigvec2};
use crate::metric::{Direction, Metric, MetricJet, Point};
use crate::{Error, Result};

pub use report::{report_csv, ReportRow, REPORT_HEADER};
pub use resonance::{
    lambda_resonances, resonance_scan, LambdaRelation, Relation, ResonanceReport, Target,
};

/// Coefficients of `M(q, p) = μ₀ + μ₁p + μ₂p² + μ₃p³` at a fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicM {
    pub mu: [f64; 4],
}

impl CubicM {
    pub fn eval(&self, p: f64) -> f64 {
        let m = &self.mu;
        ((m[3] * p + m[2]) * p + m[1]) * p + m[0]
    }

    pub fn deriv(&self, p: f64) -> f64 {
        let m = &self.mu;
        (3.0 * m[3] * p + 2.0 * m[2]) * p + m[1]
    }

    /// `M̃(t) = t³M(1/t) = μ₃ + μ₂t + μ₁t² + μ₀t³` in the chart `t = 1/p`.
    pub fn inverted(&self) -> CubicM {
        let m = self.mu;
        CubicM {
            mu: [m[3], m[2], m[1], m[0]],
        }
    }

    /// Homogeneous value on the unit representative of `d`.
    pub fn eval_dir(&self, d: Direction) -> f64 {
        let [u, w] = d.unit();
        let m = &self.mu;
        m[0] * u * u * u + m[1] * u * u * w + m[2] * u * w * w + m[3] * w * w * w
    }

    pub fn scale(&self) -> f64 {
        self.mu.iter().fold(0.0f64, |s, v| s.max(v.abs()))
    }
}

/// Eigenvalues of the isotropic field restricted to the isotropic surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPair {
    pub eps1: Complex64,
    pub eps2: Complex64,
}

impl SpectrumPair {
    pub fn new(eps1: Complex64, eps2: Complex64) -> SpectrumPair {
        SpectrumPair { eps1, eps2 }
    }

    pub fn sum(&self) -> f64 {
        (self.eps1 + self.eps2).re
    }

    pub fn product(&self) -> f64 {
        (self.eps1 * self.eps2).re
    }

    pub fn is_complex(&self) -> bool {
        self.eps1.im != 0.0
    }

    /// Rescaled so that `ε₁ + ε₂ = ½`, the normalization in which the third
    /// eigenvalue of the blown-up field equals 1.
    pub fn normalized(&self) -> SpectrumPair {
        let k = 1.0 / (2.0 * self.sum());
        SpectrumPair::new(self.eps1 * k, self.eps2 * k)
    }
}

impl fmt::Display for SpectrumPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_complex() {
            write!(f, "{} ± {}i", self.eps1.re, self.eps1.im.abs())
        } else {
            write!(f, "{}, {}", self.eps1.re, self.eps2.re)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tangency {
    Transverse,
    Order1,
    Higher,
    Identical,
}

impl Tangency {
    pub fn name(self) -> &'static str {
        match self {
            Tangency::Transverse => "transverse",
            Tangency::Order1 => "order1",
            Tangency::Higher => "higher",
            Tangency::Identical => "identical",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassTag {
    C1,
    C2,
    C3,
    Ds,
    Dn,
    Df,
    Z,
    NonGeneric,
}

impl ClassTag {
    pub fn name(self) -> &'static str {
        match self {
            ClassTag::C1 => "C1",
            ClassTag::C2 => "C2",
            ClassTag::C3 => "C3",
            ClassTag::Ds => "Ds",
            ClassTag::Dn => "Dn",
            ClassTag::Df => "Df",
            ClassTag::Z => "Z",
            ClassTag::NonGeneric => "NonGeneric",
        }
    }

    pub fn from_name(s: &str) -> Option<ClassTag> {
        Some(match s {
            "C1" => ClassTag::C1,
            "C2" => ClassTag::C2,
            "C3" => ClassTag::C3,
            "Ds" => ClassTag::Ds,
            "Dn" => ClassTag::Dn,
            "Df" => ClassTag::Df,
            "Z" => ClassTag::Z,
            "NonGeneric" => ClassTag::NonGeneric,
            _ => return None,
        })
    }

    pub fn is_c(self) -> bool {
        matches!(self, ClassTag::C1 | ClassTag::C2 | ClassTag::C3)
    }

    pub fn is_d(self) -> bool {
        matches!(self, ClassTag::Ds | ClassTag::Dn | ClassTag::Df)
    }
}

impl fmt::Display for ClassTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Verdict at a discriminant point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointClassification {
    pub point: Point,
    pub class: ClassTag,
    /// `K₁` multiplied by `sign c`, so that the convention `c > 0` holds.
    pub k1: f64,
    pub p0: f64,
    pub directions: Vec<(Direction, usize)>,
    pub tangency: Tangency,
    /// Raw eigenvalues of the isotropic field on the isotropic surface;
    /// present at tangency points.
    pub epsilon: Option<SpectrumPair>,
    /// `(λ₁, λ₂)` of the lifted field at `(q, p₀)`.
    pub lambda: (f64, f64),
    /// Scan of the normalized spectrum; present when `epsilon` is.
    pub resonance: Option<ResonanceReport>,
    pub diagnostics: Vec<String>,
}

impl PointClassification {
    /// Multiplicity of `p₀` among the admissible directions.
    pub fn p0_multiplicity(&self) -> usize {
        let d0 = Direction::Affine(self.p0);
        self.directions
            .iter()
            .filter(|(d, _)| d.distance(d0) <= 1e-6)
            .map(|(_, k)| *k)
            .sum()
    }

    /// Admissible directions other than `p₀`.
    pub fn other_directions(&self) -> Vec<(Direction, usize)> {
        let d0 = Direction::Affine(self.p0);
        self.directions
            .iter()
            .copied()
            .filter(|(d, _)| d.distance(d0) > 1e-6)
            .collect()
    }
}

/// Evaluates `μ₀..μ₃` at `q`.
pub fn cubic_m(m: &Metric, q: Point) -> Result<CubicM> {
    Ok(CubicM {
        mu: m.jet1(q)?.mu(),
    })
}

fn require_c(j: &MetricJet, q: Point) -> Result<f64> {
    if j.c.v.abs() <= 1e-9 * j.scale() {
        return Err(Error::ConventionViolated { x: q.x, y: q.y });
    }
    Ok(-j.b.v / j.c.v)
}

/// Roots of `A t² + B t + C` in one chart; `None` stands for `t = ∞`.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<Option<f64>> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-12 * scale {
        if b.abs() <= 1e-12 * scale {
            return vec![None, None];
        }
        return vec![None, Some(-c / b)];
    }
    let disc = b * b - 4.0 * a * c;
    if disc.abs() <= 1e-12 * (b * b).max((4.0 * a * c).abs()) {
        let r = -b / (2.0 * a);
        return vec![Some(r), Some(r)];
    }
    if disc < 0.0 {
        return Vec::new();
    }
    let s = disc.sqrt();
    let qq = -0.5 * (b + b.signum() * s);
    let r2 = if qq != 0.0 { Some(c / qq) } else { Some(0.0) };
    vec![Some(qq / a), r2]
}

fn merge_roots(mut roots: Vec<Direction>, band: f64) -> Vec<(Direction, usize)> {
    roots.sort_by(|a, b| a.angle().total_cmp(&b.angle()));
    let mut out: Vec<(Direction, usize)> = Vec::new();
    for r in roots {
        match out.last_mut() {
            Some((d, k)) if d.distance(r) <= band => *k += 1,
            _ => out.push((r, 1)),
        }
    }
    // ℝP¹ is a circle: the first and last cluster may touch
    if out.len() > 1 && out[0].0.distance(out[out.len() - 1].0) <= band {
        let (_, k) = out.pop().unwrap();
        out[0].1 += k;
    }
    out
}

fn admissible_from(j: &MetricJet, p0: f64, band: f64) -> Vec<(Direction, usize)> {
    let cubic = CubicM { mu: j.mu() };
    let mut roots = vec![Direction::Affine(p0)];
    // deflate by the known root in the chart where it has modulus ≤ 1
    if p0.abs() <= 1.0 {
        let m = cubic.mu;
        let qa = m[3];
        let qb = m[2] + p0 * qa;
        let qc = m[1] + p0 * qb;
        for r in quadratic_roots(qa, qb, qc) {
            roots.push(r.map_or(Direction::Infinity, Direction::Affine));
        }
    } else {
        let m = cubic.inverted().mu;
        let t0 = 1.0 / p0;
        let qa = m[3];
        let qb = m[2] + t0 * qa;
        let qc = m[1] + t0 * qb;
        for r in quadratic_roots(qa, qb, qc) {
            roots.push(r.map_or(Direction::Affine(0.0), Direction::from_inverted));
        }
    }
    merge_roots(roots, band)
}

/// Real roots of `M(q, ·)` over ℝP¹ with multiplicities, `p₀` included.
pub fn admissible_directions(m: &Metric, q: Point) -> Result<Vec<(Direction, usize)>> {
    let j = m.require_on_discriminant(q)?;
    let p0 = require_c(&j, q)?;
    Ok(admissible_from(&j, p0, m.tolerances().root_merge))
}

/// Largest residual of `M = ⅓(p − p₀)(2(Δ_x + pΔ_y) + M_p)` over the samples.
pub fn check_factorization(m: &Metric, q: Point, p_samples: &[f64]) -> Result<f64> {
    let j = m.require_on_discriminant(q)?;
    let p0 = require_c(&j, q)?;
    let cubic = CubicM { mu: j.mu() };
    let [dx, dy] = j.delta_grad();
    Ok(p_samples
        .iter()
        .map(|&p| {
            let rhs = (p - p0) * (2.0 * (dx + p * dy) + cubic.deriv(p)) / 3.0;
            (cubic.eval(p) - rhs).abs()
        })
        .fold(0.0, f64::max))
}

/// `(λ₁, λ₂)` of the lifted field at the singular point `(q, p)`. For the
/// vertical direction the inverted chart is used, where
/// `λ₁ = 2(tΔ_x + Δ_y)` and `λ₂ = −M̃'(t)` at `t = 0`.
pub fn lambda_spectrum(m: &Metric, q: Point, p: Direction) -> Result<(f64, f64)> {
    let j = m.require_on_discriminant(q)?;
    lambda_from(&j, q, p, m.tolerances().on_discriminant)
}

fn lambda_from(j: &MetricJet, q: Point, p: Direction, band: f64) -> Result<(f64, f64)> {
    let cubic = CubicM { mu: j.mu() };
    let mscale: f64 = cubic.mu.iter().map(|v| v.abs()).sum::<f64>().max(j.scale());
    if cubic.eval_dir(p).abs() > band * mscale {
        return Err(Error::NotSingular {
            x: q.x,
            y: q.y,
            p: p.slope().unwrap_or(f64::INFINITY),
        });
    }
    let [dx, dy] = j.delta_grad();
    Ok(match p {
        Direction::Affine(p) => (2.0 * (dx + p * dy), cubic.deriv(p)),
        Direction::Infinity => (2.0 * dy, -cubic.inverted().deriv(0.0)),
    })
}

/// Which coordinate is eliminated when restricting to `F = const`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducedCoords {
    /// Coordinates `(x, p)`, `y` solved from `F`.
    XP,
    /// Coordinates `(y, p)`, `x` solved from `F`.
    YP,
}

/// Linearization of the isotropic field restricted to the isotropic
/// surface at a tangency point.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedLinearization {
    pub base: Point,
    pub p0: f64,
    pub coords: ReducedCoords,
    pub jac: [[f64; 2]; 2],
    pub spectrum: SpectrumPair,
}

impl ReducedLinearization {
    /// Real eigenvector in reduced coordinates `(u, p)` for eigenvalue `l`.
    pub fn eigvec(&self, l: f64) -> [f64; 2] {
        let v = eigvec2(&self.jac, l);
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    }

    /// Real Jordan basis `(re v, im v)` for the complex eigenvalue `ε₁`.
    pub fn complex_basis(&self) -> [[f64; 2]; 2] {
        let l = self.spectrum.eps1;
        // (J − λ) v = 0 with v = (j01, λ − j00)
        let v0 = Complex64::new(self.jac[0][1], 0.0);
        let v1 = l - self.jac[0][0];
        [[v0.re, v1.re], [v0.im, v1.im]]
    }

    /// Point `(x, y)` with reduced coordinates `(u, p)` and `F = rhs`.
    pub fn lift(&self, m: &Metric, u: f64, p: f64, rhs: f64) -> Result<Point> {
        solve_surface(m, self.coords, self.base, u, p, rhs)
    }

    pub fn unreduce(&self, pt: Point) -> f64 {
        match self.coords {
            ReducedCoords::XP => pt.x,
            ReducedCoords::YP => pt.y,
        }
    }

    pub fn base_u(&self) -> f64 {
        self.unreduce(self.base)
    }
}

/// Solves `F(x, y, p) = rhs` for the eliminated coordinate by Newton,
/// starting from `start`.
pub(crate) fn solve_surface(
    m: &Metric,
    coords: ReducedCoords,
    start: Point,
    u: f64,
    p: f64,
    rhs: f64,
) -> Result<Point> {
    let mut pt = match coords {
        ReducedCoords::XP => Point::new(u, start.y),
        ReducedCoords::YP => Point::new(start.x, u),
    };
    for _ in 0..60 {
        let j = m.jet1(pt)?;
        let g = j.f(p) - rhs;
        let [fx, fy, _] = j.f_grad(p);
        let d = match coords {
            ReducedCoords::XP => fy,
            ReducedCoords::YP => fx,
        };
        if d == 0.0 {
            return Err(Error::Invalid("isotropic surface is not a graph here".into()));
        }
        let step = g / d;
        match coords {
            ReducedCoords::XP => pt.y -= step,
            ReducedCoords::YP => pt.x -= step,
        }
        if step.abs() <= 1e-16 * (1.0 + pt.x.abs().max(pt.y.abs())) {
            return Ok(pt);
        }
    }
    let j = m.jet1(pt)?;
    let scale = j.scale() * (1.0 + p * p);
    if (j.f(p) - rhs).abs() <= 1e-12 * scale {
        Ok(pt)
    } else {
        Err(Error::Invalid(format!(
            "no point of F = {rhs} near ({}, {}) at p = {p}",
            start.x, start.y
        )))
    }
}

fn tangency_measure(j: &MetricJet, p0: f64) -> (f64, f64) {
    let [fx, fy, _] = j.f_grad(p0);
    (fx + p0 * fy, (fx.abs() + fy.abs()) * (1.0 + p0.abs()))
}

/// Linearizes the isotropic field on the isotropic surface at `(q, p₀)`.
pub fn reduced_linearization(m: &Metric, q: Point) -> Result<ReducedLinearization> {
    let j = m.require_on_discriminant(q)?;
    let p0 = require_c(&j, q)?;
    let (t, scale) = tangency_measure(&j, p0);
    if scale <= 1e-12 * j.scale() {
        return Err(Error::Invalid(format!(
            "gradient of F vanishes at ({}, {}, {p0})",
            q.x, q.y
        )));
    }
    if t.abs() > m.tolerances().tangency * scale {
        return Err(Error::TransversePoint { x: q.x, y: q.y });
    }
    let [fx, fy, _] = j.f_grad(p0);
    let coords = if fy.abs() >= fx.abs() {
        ReducedCoords::XP
    } else {
        ReducedCoords::YP
    };
    let base_u = match coords {
        ReducedCoords::XP => q.x,
        ReducedCoords::YP => q.y,
    };
    let field = |u: f64, p: f64| -> Result<[f64; 2]> {
        let pt = solve_surface(m, coords, q, u, p, 0.0)?;
        let v = m.jet1(pt)?.iso_field(p);
        Ok(match coords {
            ReducedCoords::XP => [v[0], v[2]],
            ReducedCoords::YP => [v[1], v[2]],
        })
    };
    let jac_at = |h: f64| -> Result<[[f64; 2]; 2]> {
        let up = field(base_u + h, p0)?;
        let um = field(base_u - h, p0)?;
        let pp = field(base_u, p0 + h)?;
        let pm = field(base_u, p0 - h)?;
        Ok([
            [(up[0] - um[0]) / (2.0 * h), (pp[0] - pm[0]) / (2.0 * h)],
            [(up[1] - um[1]) / (2.0 * h), (pp[1] - pm[1]) / (2.0 * h)],
        ])
    };
    let j1 = jac_at(1e-4)?;
    let j2 = jac_at(5e-5)?;
    let mut jac = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            jac[r][c] = (4.0 * j2[r][c] - j1[r][c]) / 3.0;
        }
    }
    let (e1, e2) = eig2(&jac);
    Ok(ReducedLinearization {
        base: q,
        p0,
        coords,
        jac,
        spectrum: SpectrumPair::new(e1, e2),
    })
}

/// Eigenvalues of the isotropic field restricted to the isotropic surface
/// at `(q, p₀)`; `ε₁` has the larger real part (positive imaginary part for
/// a complex pair).
pub fn epsilon_spectrum(m: &Metric, q: Point) -> Result<SpectrumPair> {
    Ok(reduced_linearization(m, q)?.spectrum)
}

fn criminant_identical(m: &Metric, q: Point) -> bool {
    let tol = m.tolerances();
    let half = tol.criminant_samples.saturating_sub(1) / 2;
    let span = half as f64 * tol.criminant_spacing;
    let mut pts = Vec::new();
    for sign in [1.0, -1.0] {
        match m.trace_discriminant(q, sign * span, tol.criminant_spacing) {
            Ok(mut v) => pts.append(&mut v),
            Err(_) => pts.push(q),
        }
    }
    pts.iter().all(|&pt| {
        let Ok(j) = m.jet1(pt) else { return false };
        let Ok(p0) = require_c(&j, pt) else { return false };
        let (t, scale) = tangency_measure(&j, p0);
        t.abs() <= tol.tangency * scale
    })
}

fn verdict_and_spectrum(
    m: &Metric,
    q: Point,
    j: &MetricJet,
    p0: f64,
) -> Result<(Tangency, Option<SpectrumPair>)> {
    let (t, scale) = tangency_measure(j, p0);
    if t.abs() > m.tolerances().tangency * scale {
        return Ok((Tangency::Transverse, None));
    }
    let sp = epsilon_spectrum(m, q)?;
    if criminant_identical(m, q) {
        return Ok((Tangency::Identical, Some(sp)));
    }
    let ref_scale = sp.eps1.norm().max(sp.eps2.norm());
    let zero = m.tolerances().zero_eigen * ref_scale;
    if ref_scale == 0.0 || sp.eps1.norm() <= zero || sp.eps2.norm() <= zero {
        return Ok((Tangency::Higher, Some(sp)));
    }
    Ok((Tangency::Order1, Some(sp)))
}

/// Transverse, first-order, higher-order or identical tangency of the
/// isotropic direction with `𝒟` at `q`.
pub fn tangency_verdict(m: &Metric, q: Point) -> Result<Tangency> {
    let j = m.require_on_discriminant(q)?;
    let p0 = require_c(&j, q)?;
    Ok(verdict_and_spectrum(m, q, &j, p0)?.0)
}

/// Classifies `q ∈ 𝒟`.
pub fn classify(m: &Metric, q: Point) -> Result<PointClassification> {
    let tol = *m.tolerances();
    let j = m.require_on_discriminant(q)?;
    let [gx, gy] = j.delta_grad();
    if gx.hypot(gy) <= 1e-12 * j.scale() * j.scale() {
        return Err(Error::DegenerateDiscriminant { x: q.x, y: q.y });
    }
    let p0 = require_c(&j, q)?;
    let s = j.scale();
    let k1 = crate::metric::brioschi(&j) * j.c.v.signum();
    let k1_zero = k1.abs() <= tol.k1 * s * s * s;
    let directions = admissible_from(&j, p0, tol.root_merge);
    let lambda = lambda_from(&j, q, Direction::Affine(p0), tol.on_discriminant)?;
    let (tangency, epsilon) = verdict_and_spectrum(m, q, &j, p0)?;

    let d0 = Direction::Affine(p0);
    let p0_mult: usize = directions
        .iter()
        .filter(|(d, _)| d.distance(d0) <= tol.root_merge)
        .map(|(_, k)| *k)
        .sum();
    let others: Vec<usize> = directions
        .iter()
        .filter(|(d, _)| d.distance(d0) > tol.root_merge)
        .map(|(_, k)| *k)
        .collect();

    let mut diagnostics = Vec::new();
    let mut resonance = None;
    if let Some(sp) = epsilon {
        if sp.sum().abs() <= tol.zero_eigen * sp.eps1.norm().max(sp.eps2.norm()) {
            diagnostics.push("eps1 + eps2 vanishes; spectrum cannot be normalized".to_string());
        } else {
            resonance = Some(resonance_scan(
                &sp.normalized(),
                tol.resonance_order,
                tol.resonance,
            ));
        }
    }

    let mut refuse = |why: String| {
        diagnostics.push(why);
        ClassTag::NonGeneric
    };
    let class = match tangency {
        Tangency::Transverse => {
            if k1_zero {
                if p0_mult == 1 && others == [2] {
                    ClassTag::C2
                } else {
                    refuse(format!(
                        "K1 ≈ 0 but roots are {p0_mult} at p0 plus {others:?}; expected a double root"
                    ))
                }
            } else if k1 < 0.0 {
                if p0_mult == 1 && others.is_empty() {
                    ClassTag::C1
                } else {
                    refuse(format!("K1 < 0 but M has roots {p0_mult} at p0 plus {others:?}"))
                }
            } else if p0_mult == 1 && others == [1, 1] {
                ClassTag::C3
            } else {
                refuse(format!("K1 > 0 but M has roots {p0_mult} at p0 plus {others:?}"))
            }
        }
        Tangency::Identical | Tangency::Order1 if k1_zero || k1 < 0.0 => {
            refuse(format!("tangent isotropic direction with K1 = {k1:e} not positive"))
        }
        Tangency::Identical | Tangency::Order1 if !(p0_mult == 2 && others == [1]) => refuse(
            format!("tangent isotropic direction but roots are {p0_mult} at p0 plus {others:?}"),
        ),
        Tangency::Identical => ClassTag::Z,
        Tangency::Order1 => {
            let sp = epsilon.expect("tangent points carry a spectrum");
            let tr = sp.sum();
            let det = sp.product();
            let tr2 = tr * tr;
            if (tr2 - 4.0 * det).abs() <= tol.node_focus * tr2 {
                refuse(format!("node/focus boundary: tr² − 4det = {:e}", tr2 - 4.0 * det))
            } else if det.abs() <= tol.saddle_node * tr2 {
                refuse(format!("saddle/node boundary: eps1*eps2 = {det:e}"))
            } else if sp.is_complex() {
                ClassTag::Df
            } else if det < 0.0 {
                ClassTag::Ds
            } else {
                ClassTag::Dn
            }
        }
        Tangency::Higher => refuse("tangency of order higher than one".to_string()),
    };

    Ok(PointClassification {
        point: q,
        class,
        k1,
        p0,
        directions,
        tangency,
        epsilon,
        lambda,
        resonance,
        diagnostics,
    })
}

/// Classifies points sampled along `𝒟` from `seed` in both directions,
/// staying within `keep`. Rows are ordered along the curve.
pub fn classify_curve(
    m: &Metric,
    seed: Point,
    half_length: f64,
    step: f64,
    keep: impl Fn(Point) -> bool + Copy,
) -> Result<Vec<PointClassification>> {
    let mut back = m.trace_discriminant_within(seed, -half_length, step, keep)?;
    let fwd = m.trace_discriminant_within(seed, half_length, step, keep)?;
    back.reverse();
    back.pop();
    back.extend(fwd);
    back.retain(|&p| keep(p));
    back.into_iter().map(|p| classify(m, p)).collect()
}
