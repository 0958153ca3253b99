//! Geodesic families leaving classified discriminant points, and the fits
//! of their asymptotic laws.

mod fit;
mod pl2;

use std::f64::consts::TAU;
use std::fmt::Write;

pub use fit::{fit_power_law, fit_quadratic, fit_quartic, log_space, FitModel, FitResult};
pub use pl2::{lemma_pl2_check, Pl2Case};

pub use crate::flow::{FamilyParam, GeodesicTrace, MemberKind};

use crate::expr::Expr;
use crate::flow::lifted::reverse_join;
use crate::flow::{blowdown, blowup};
use crate::flow::{
    annotate_arrest, blowup::BlowUpEnd, field_divided, field_isotropic, field_lifted, integrate, integrate_blowup, BlowUpField, BlowUpState,
    Chart, FieldKind, IntegratorConfig, LiftedState, RkConfig, Trace,
};
use crate::metric::{CausalType, Metric, Point};
use crate::singular::{lambda_spectrum, reduced_linearization, ClassTag, PointClassification, ReducedCoords, ReducedLinearization};
use crate::{Error, Result};

/// Settings for [`launch_family`].
#[derive(Debug, Clone, PartialEq)]
pub struct LaunchParams {
    /// Launch offset from the base point.
    pub delta: f64,
    /// Leaf parameters `α`.
    pub leaves: Vec<f64>,
    /// Number of phases of a node or focus. For a node a phase names the
    /// orbit of the linear part through that angle on the eigen-circle of
    /// radius `phase_radius`.
    pub phases: usize,
    pub phase_radius: f64,
    /// Magnitudes of the cusp parameter for transverse classes.
    pub cusps: Vec<f64>,
    /// Members stop at this distance from the base point.
    pub radius: f64,
    /// Also launch the smooth geodesics through the other admissible directions.
    pub admissible: bool,
    pub cfg: IntegratorConfig,
}

impl Default for LaunchParams {
    fn default() -> Self {
        LaunchParams {
            delta: 1e-3,
            leaves: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            phases: 8,
            phase_radius: 1e-3,
            cusps: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            radius: 0.5,
            admissible: true,
            cfg: IntegratorConfig {
                rk: RkConfig {
                    rtol: 1e-11,
                    atol: 1e-20,
                    ..RkConfig::default()
                },
                ..IntegratorConfig::default()
            },
        }
    }
}

/// Reduced coordinates of the isotropic surface with the columns of a real
/// eigen (or Jordan) basis.
struct EigenFrame {
    coords: ReducedCoords,
    base: [f64; 2],
    basis: [[f64; 2]; 2],
}

impl EigenFrame {
    fn new(rl: &ReducedLinearization, b1: [f64; 2], b2: [f64; 2]) -> EigenFrame {
        EigenFrame {
            coords: rl.coords,
            base: [rl.base_u(), rl.p0],
            basis: [b1, b2],
        }
    }

    fn components(&self, v: [f64; 2]) -> [f64; 2] {
        let [b1, b2] = self.basis;
        let det = b1[0] * b2[1] - b2[0] * b1[1];
        [(v[0] * b2[1] - b2[0] * v[1]) / det, (b1[0] * v[1] - v[0] * b1[1]) / det]
    }

    fn reduce(&self, v: [f64; 3]) -> [f64; 2] {
        match self.coords {
            ReducedCoords::XP => [v[0], v[2]],
            ReducedCoords::YP => [v[1], v[2]],
        }
    }
}

struct Launcher<'a> {
    m: &'a Metric,
    pc: &'a PointClassification,
    params: &'a LaunchParams,
    frame: Option<EigenFrame>,
    out: Vec<GeodesicTrace>,
}

impl Launcher<'_> {
    fn q(&self) -> Point {
        self.pc.point
    }

    /// Orientation of the lifted field moving the seed away from `q`.
    /// With an eigenframe, "away" means growth of the eigen-coordinate
    /// radius under the isotropic field.
    fn outward(&self, seed: &LiftedState, kind: FieldKind) -> Result<f64> {
        let v = match kind {
            FieldKind::Isotropic => field_isotropic(self.m, seed)?,
            FieldKind::Geodesic => field_lifted(self.m, seed)?,
            FieldKind::Divided => field_divided(self.m, seed)?,
        };
        if let Some(fr) = &self.frame {
            let w = field_isotropic(self.m, seed)?;
            let pos = fr.reduce([seed.x, seed.y, seed.p()]);
            let c = fr.components([pos[0] - fr.base[0], pos[1] - fr.base[1]]);
            let cd = fr.components(fr.reduce(w));
            let rate = c[0] * cd[0] + c[1] * cd[1];
            let align = v[0] * w[0] + v[1] * w[1] + v[2] * w[2];
            if rate != 0.0 && align != 0.0 {
                return Ok(rate.signum() * align.signum());
            }
        }
        let d = [seed.x - self.q().x, seed.y - self.q().y];
        let dot = d[0] * v[0] + d[1] * v[1];
        if dot != 0.0 {
            return Ok(dot.signum());
        }
        let dp = seed.p() - self.pc.p0;
        Ok(if dp * v[2] >= 0.0 { 1.0 } else { -1.0 })
    }

    fn run(&self, seed: LiftedState, kind: FieldKind) -> Result<Trace> {
        let q = self.q();
        let r = self.params.radius;
        let m = self.m;
        // on the divided field the leaf is lost to cancellation as p → p₀,
        // so such members end there
        let floor = if kind == FieldKind::Divided { 1e-3 * self.params.delta } else { 0.0 };
        let stop = move |s: &LiftedState| {
            let out = s.point().dist(q) - r;
            if floor == 0.0 || s.chart != Chart::Affine {
                return out;
            }
            match m.jet1(s.point()) {
                Ok(j) if j.c.v != 0.0 => out.max(floor - (s.w + j.b.v / j.c.v).abs()),
                _ => out,
            }
        };
        let sense = self.outward(&seed, kind)?;
        let mut tr = integrate(self.m, kind, seed, sense, &self.params.cfg, Some(&stop))?;
        annotate_arrest(self.m, &mut tr);
        Ok(tr)
    }

    fn push(&mut self, trace: Trace, param: Option<FamilyParam>, kind: MemberKind) {
        let mut g = GeodesicTrace::from_trace(trace);
        g.id = self.out.len();
        g.param = param;
        g.kind = kind;
        g.origin = Some(self.pc.class);
        g.base = Some(self.q());
        g.p0 = self.pc.p0;
        self.out.push(g);
    }

    /// Launches one member. Isotropic leaves follow the isotropic field,
    /// which keeps `F` constant. Other leaves of tangency classes follow the
    /// divided field, in blown-up coordinates when the metric is a normal
    /// form centred at the base point: there the leaf is `u` itself, while
    /// near the criminant `(x, y, p)` only resolve it up to cancellation.
    fn member(&mut self, seed: LiftedState, param: FamilyParam, kind: MemberKind) -> Result<()> {
        let field = if self.pc.class.is_c() {
            FieldKind::Geodesic
        } else if param.leaf == 0.0 {
            FieldKind::Isotropic
        } else {
            FieldKind::Divided
        };
        let blown = match self.m.normal_form_params() {
            Some(nf) if field == FieldKind::Divided && self.q().x == 0.0 && self.q().y == 0.0 && seed.p() != 0.0 => {
                Some((nf.omega.clone(), nf.eps))
            }
            _ => None,
        };
        let tr = match blown {
            Some((omega, eps)) => self.run_blown(seed, omega, eps)?,
            None => self.run(seed, field)?,
        };
        self.push(tr, Some(param), kind);
        Ok(())
    }

    fn run_blown(&self, seed: LiftedState, omega: Expr, eps: f64) -> Result<Trace> {
        // with c = −ω and b = 0 the blown-up field is the divided one
        let sense = self.outward(&seed, FieldKind::Divided)?;
        let q = self.q();
        let r = self.params.radius;
        let stop = move |s: &BlowUpState| {
            let (x, y, _) = blowdown(eps, s);
            Point::new(x, y).dist(q) - r
        };
        let cfg = &self.params.cfg;
        let field = BlowUpField::new(omega, eps);
        let init = blowup(eps, seed.x, seed.y, seed.p())?;
        let bt = integrate_blowup(&field, init, sense, cfg.rk, cfg.t_max, cfg.arrest_band, cfg.sample_dt, Some(&stop))?;
        let mut tr = bt.blown_down(self.m, eps, sense, cfg.tol_iso)?;
        annotate_arrest(self.m, &mut tr);
        Ok(tr)
    }

    /// Seed on the leaf `F = −v·c·(p − p₀)²` over the reduced point
    /// `base + d`.
    fn leaf_seed(&self, rl: &ReducedLinearization, d: [f64; 2], rhs: f64) -> Result<LiftedState> {
        let p = rl.p0 + d[1];
        let pt = rl.lift(self.m, rl.base_u() + d[0], p, rhs)?;
        Ok(LiftedState::affine(pt.x, pt.y, p))
    }

    fn c_at_base(&self) -> Result<f64> {
        Ok(self.m.jet1(self.q())?.c.v)
    }

    fn launch_z(&mut self, rl: &ReducedLinearization) -> Result<()> {
        let sp = rl.spectrum;
        let (l, l2) = if sp.eps1.norm() >= sp.eps2.norm() {
            (sp.eps1.re, sp.eps2.re)
        } else {
            (sp.eps2.re, sp.eps1.re)
        };
        let e = rl.eigvec(l);
        self.frame = Some(EigenFrame::new(rl, e, rl.eigvec(l2)));
        let c = self.c_at_base()?;
        let delta = self.params.delta;
        for &alpha in &self.params.leaves.clone() {
            for side in [1i8, -1] {
                let d = [f64::from(side) * delta * e[0], f64::from(side) * delta * e[1]];
                let rhs = 48.0 * alpha * c * d[1].powi(4);
                let seed = self.leaf_seed(rl, d, rhs)?;
                let kind = if alpha == 0.0 { MemberKind::Isotropic } else { MemberKind::Generic };
                self.member(seed, FamilyParam { leaf: alpha, phase: None, side }, kind)?;
            }
        }
        Ok(())
    }

    fn launch_ds(&mut self, rl: &ReducedLinearization) -> Result<()> {
        let sp = rl.spectrum;
        let nsp = sp.normalized();
        let (e1, e2) = (rl.eigvec(sp.eps1.re), rl.eigvec(sp.eps2.re));
        self.frame = Some(EigenFrame::new(rl, e1, e2));
        let c = self.c_at_base()?;
        let delta = self.params.delta;
        for &alpha in &self.params.leaves.clone() {
            for side in [1i8, -1] {
                let eta = f64::from(side) * delta;
                let d = [eta * e1[0], eta * e1[1]];
                let v = alpha * eta.abs().powf(1.0 / nsp.eps1.re);
                let seed = self.leaf_seed(rl, d, -v * c * d[1] * d[1])?;
                let kind = if alpha == 0.0 { MemberKind::Isotropic } else { MemberKind::Generic };
                self.member(seed, FamilyParam { leaf: alpha, phase: None, side }, kind)?;
            }
        }
        for side in [1i8, -1] {
            let zeta = f64::from(side) * delta;
            let seed = self.leaf_seed(rl, [zeta * e2[0], zeta * e2[1]], 0.0)?;
            let param = FamilyParam {
                leaf: 0.0,
                phase: Some(std::f64::consts::FRAC_PI_2),
                side,
            };
            self.member(seed, param, MemberKind::Exceptional)?;
        }
        Ok(())
    }

    fn launch_node_focus(&mut self, rl: &ReducedLinearization) -> Result<()> {
        let sp = rl.spectrum;
        let nsp = sp.normalized();
        let (b1, b2, law): ([f64; 2], [f64; 2], Box<dyn Fn(f64, f64) -> f64>) = if sp.is_complex() {
            let [re, im] = rl.complex_basis();
            let n = (re[0] * re[0] + re[1] * re[1] + im[0] * im[0] + im[1] * im[1]).sqrt() / std::f64::consts::SQRT_2;
            let k = 1.0 / (2.0 * nsp.eps1.re);
            (
                [re[0] / n, re[1] / n],
                [im[0] / n, im[1] / n],
                Box::new(move |a: f64, b: f64| (a * a + b * b).powf(k)),
            )
        } else {
            let (k1, k2) = (1.0 / nsp.eps1.re, 1.0 / nsp.eps2.re);
            (
                rl.eigvec(sp.eps1.re),
                rl.eigvec(sp.eps2.re),
                Box::new(move |a: f64, b: f64| a.abs().powf(k1) + b.abs().powf(k2)),
            )
        };
        self.frame = Some(EigenFrame::new(rl, b1, b2));
        let ratio = (!sp.is_complex()).then(|| nsp.eps2.re / nsp.eps1.re);
        let c = self.c_at_base()?;
        let delta = self.params.delta;
        let n = self.params.phases.max(1);
        // on the weak axis of a node the leaves differ only at order
        // δ^(1/ε̂₂), so a single isotropic member is launched there
        let mut leaves: Vec<Option<f64>> = self.params.leaves.iter().map(|&a| Some(a)).collect();
        leaves.push(None);
        for alpha in leaves {
            for k in 0..n {
                let beta = TAU * k as f64 / n as f64;
                let (cb, sb) = (beta.cos(), beta.sin());
                let weak_axis = !sp.is_complex() && cb.abs() < 1e-12;
                let alpha = match (alpha, weak_axis) {
                    (Some(a), false) => a,
                    (None, true) => 0.0,
                    _ => continue,
                };
                let side = if weak_axis { sb.signum() } else { cb.signum() } as i8;
                if weak_axis {
                    let param = FamilyParam {
                        leaf: 0.0,
                        phase: Some(beta),
                        side,
                    };
                    self.weak_axis_member(rl, b2, sb.signum(), param)?;
                    continue;
                }
                let (eta, zeta) = match ratio {
                    Some(r) => node_point(cb, sb, r, delta / self.params.phase_radius, delta),
                    None => (delta * cb, delta * sb),
                };
                let d = [eta * b1[0] + zeta * b2[0], eta * b1[1] + zeta * b2[1]];
                let v = alpha * law(eta, zeta);
                let seed = self.leaf_seed(rl, d, -v * c * d[1] * d[1])?;
                let kind = if weak_axis {
                    MemberKind::Exceptional
                } else if alpha == 0.0 {
                    MemberKind::Isotropic
                } else {
                    MemberKind::Generic
                };
                self.member(
                    seed,
                    FamilyParam {
                        leaf: alpha,
                        phase: Some(beta),
                        side,
                    },
                    kind,
                )?;
            }
        }
        Ok(())
    }

    /// The isotropic member along the weak axis of a node. Launched outward
    /// it is unstable (the strong component grows faster than the weak one),
    /// so it is seeded on the eigenline at the launch radius, integrated
    /// toward `q` where it is attracting, and reversed.
    fn weak_axis_member(&mut self, rl: &ReducedLinearization, b: [f64; 2], sign: f64, param: FamilyParam) -> Result<()> {
        let q = self.q();
        let (r, delta) = (self.params.radius, self.params.delta);
        let target = r * (1.0 - 1e-3);
        let mut rho = target;
        let mut seed = self.leaf_seed(rl, [sign * rho * b[0], sign * rho * b[1]], 0.0)?;
        for _ in 0..20 {
            let d = seed.point().dist(q);
            if (d - target).abs() <= 1e-12 * target {
                break;
            }
            rho *= target / d;
            seed = self.leaf_seed(rl, [sign * rho * b[0], sign * rho * b[1]], 0.0)?;
        }
        let sense = -self.outward(&seed, FieldKind::Isotropic)?;
        let stop = move |s: &LiftedState| delta - s.point().dist(q);
        let mut tr = integrate(self.m, FieldKind::Isotropic, seed, sense, &self.params.cfg, Some(&stop))?;
        annotate_arrest(self.m, &mut tr);
        let termination = tr.termination;
        let empty = Trace {
            samples: Vec::new(),
            events: Vec::new(),
            segments: Vec::new(),
            termination,
            arrest: None,
        };
        let tr = reverse_join(tr, empty, false);
        self.push(tr, Some(param), MemberKind::Exceptional);
        Ok(())
    }

    /// Transverse classes: cusps `z₀ + s·∂_p + κs²·v₁` with `v₁` the
    /// eigenvector of `λ₁`, on the Lorentzian side.
    fn launch_cusps(&mut self) -> Result<()> {
        self.frame = None;
        let q = self.q();
        let z0 = LiftedState::affine(q.x, q.y, self.pc.p0);
        let jac = jacobian3(self.m, &z0)?;
        let v1 = eigvec3(&jac, self.pc.lambda.0);
        let n = v1[0].hypot(v1[1]);
        if n == 0.0 {
            return Err(Error::NoFamily(format!("{} (degenerate λ₁ eigenvector)", self.pc.class)));
        }
        let v1 = [v1[0] / n, v1[1] / n, v1[2] / n];
        let probe = 1e-3;
        let delta_at = |k: f64| -> Result<f64> {
            Ok(self
                .m
                .discriminant(Point::new(q.x + k * probe * v1[0], q.y + k * probe * v1[1]))?
                .0)
        };
        let sign = if delta_at(1.0)? < delta_at(-1.0)? { 1.0 } else { -1.0 };
        let delta = self.params.delta;
        for &kappa in &self.params.cusps.clone() {
            let kappa = sign * kappa.abs();
            for side in [1i8, -1] {
                let s = f64::from(side) * delta;
                let w = kappa * s * s;
                let seed = LiftedState::affine(q.x + w * v1[0], q.y + w * v1[1], self.pc.p0 + s + w * v1[2]);
                self.member(
                    seed,
                    FamilyParam {
                        leaf: kappa,
                        phase: None,
                        side,
                    },
                    MemberKind::Generic,
                )?;
            }
        }
        Ok(())
    }

    /// Smooth geodesics through the simple admissible directions other
    /// than `p₀`, both sides joined.
    fn launch_admissible(&mut self) -> Result<()> {
        self.frame = None;
        let q = self.q();
        for (d, mult) in self.pc.other_directions() {
            if mult != 1 {
                continue;
            }
            let z0 = LiftedState::from_direction(q, d);
            let jac = jacobian3(self.m, &z0)?;
            let (l1, _) = lambda_spectrum(self.m, q, d)?;
            let mut v = eigvec3(&jac, l1);
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n == 0.0 {
                continue;
            }
            v = [v[0] / n, v[1] / n, v[2] / n];
            let h = self.params.delta;
            let seed = |k: f64| LiftedState {
                x: z0.x + k * h * v[0],
                y: z0.y + k * h * v[1],
                w: z0.w + k * h * v[2],
                chart: z0.chart,
            };
            let back = self.run(seed(-1.0), FieldKind::Geodesic)?;
            let fwd = self.run(seed(1.0), FieldKind::Geodesic)?;
            let leaf = d.slope().unwrap_or(f64::INFINITY);
            self.push(
                reverse_join(back, fwd, false),
                Some(FamilyParam {
                    leaf,
                    phase: None,
                    side: 0,
                }),
                MemberKind::Admissible,
            );
        }
        Ok(())
    }
}

/// Jacobian of the lifted field at `z` in its chart, by central differences
/// with Richardson extrapolation.
fn jacobian3(m: &Metric, z: &LiftedState) -> Result<[[f64; 3]; 3]> {
    let at = |h: f64| -> Result<[[f64; 3]; 3]> {
        let mut j = [[0.0; 3]; 3];
        for k in 0..3 {
            let shift = |s: f64| {
                let mut w = *z;
                match k {
                    0 => w.x += s,
                    1 => w.y += s,
                    _ => w.w += s,
                }
                w
            };
            let fp = field_lifted(m, &shift(h))?;
            let fm = field_lifted(m, &shift(-h))?;
            for r in 0..3 {
                j[r][k] = (fp[r] - fm[r]) / (2.0 * h);
            }
        }
        Ok(j)
    };
    let (a, b) = (at(1e-4)?, at(5e-5)?);
    let mut j = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            j[r][c] = (4.0 * b[r][c] - a[r][c]) / 3.0;
        }
    }
    Ok(j)
}

/// Null vector of `J − λI` from the best-conditioned cross product of rows.
fn eigvec3(j: &[[f64; 3]; 3], l: f64) -> [f64; 3] {
    let mut a = *j;
    for (i, row) in a.iter_mut().enumerate() {
        row[i] -= l;
    }
    let cross = |u: &[f64; 3], v: &[f64; 3]| {
        [
            u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0],
        ]
    };
    let mut best = [0.0; 3];
    let mut best_n = -1.0;
    for (r, s) in [(0, 1), (0, 2), (1, 2)] {
        let c = cross(&a[r], &a[s]);
        let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        if n > best_n {
            best_n = n;
            best = c;
        }
    }
    best
}

/// Point at radius `ρ` on the orbit of the linear node `η̇ = η, ζ̇ = rζ`
/// through `(cos β, sin β)·ρ/scale`, so that a phase names the same orbit
/// for every launch offset.
fn node_point(cb: f64, sb: f64, r: f64, scale: f64, rho: f64) -> (f64, f64) {
    if sb == 0.0 || cb.abs() < 1e-12 {
        return (rho * cb, rho * sb);
    }
    let target = sb / cb.abs().powf(r);
    let g = |phi: f64| scale.powf(1.0 - r) * phi.sin() / phi.cos().powf(r) - target;
    let (mut lo, mut hi) = (-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let phi = 0.5 * (lo + hi);
    (rho * phi.cos() * cb.signum(), rho * phi.sin())
}

/// Launches the family `Γ₀` of geodesics leaving a classified point in the
/// isotropic direction, plus (optionally) the smooth geodesics through the
/// other simple admissible directions.
pub fn launch_family(m: &Metric, pc: &PointClassification, params: &LaunchParams) -> Result<Vec<GeodesicTrace>> {
    if params.delta <= 0.0 || params.radius <= params.delta {
        return Err(Error::Invalid("launch needs 0 < delta < radius".into()));
    }
    let mut l = Launcher {
        m,
        pc,
        params,
        frame: None,
        out: Vec::new(),
    };
    match pc.class {
        ClassTag::NonGeneric => return Err(Error::NoFamily(format!("non-generic point ({}, {})", pc.point.x, pc.point.y))),
        ClassTag::C1 | ClassTag::C2 | ClassTag::C3 => l.launch_cusps()?,
        ClassTag::Z => l.launch_z(&reduced_linearization(m, pc.point)?)?,
        ClassTag::Ds => l.launch_ds(&reduced_linearization(m, pc.point)?)?,
        ClassTag::Dn | ClassTag::Df => l.launch_node_focus(&reduced_linearization(m, pc.point)?)?,
    }
    if params.admissible {
        l.launch_admissible()?;
    }
    Ok(l.out)
}

/// Orthonormal frame at the base point: `s` along the isotropic direction,
/// `h` across it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub base: Point,
    pub p0: f64,
}

impl Frame {
    pub fn of(trace: &GeodesicTrace) -> Frame {
        Frame {
            base: trace.base.unwrap_or_else(|| trace.points[0]),
            p0: trace.p0,
        }
    }

    /// `(s, h)` coordinates of `q`.
    pub fn coords(&self, q: Point) -> (f64, f64) {
        let n = self.p0.hypot(1.0);
        let (tx, ty) = (1.0 / n, self.p0 / n);
        let (dx, dy) = (q.x - self.base.x, q.y - self.base.y);
        (dx * tx + dy * ty, -dx * ty + dy * tx)
    }
}

/// Samples `(s, h)` of a member where `|s|` takes log-spaced values in
/// `window`, read off the continuous extension.
pub fn resample(trace: &GeodesicTrace, window: (f64, f64), n: usize) -> Vec<(f64, f64)> {
    let fr = Frame::of(trace);
    let targets = log_space(window.0, window.1, n);
    let g = |s: &LiftedState| fr.coords(s.point()).0.abs();
    let mut found: Vec<(f64, f64)> = trace
        .trace
        .crossings(&targets, g)
        .into_iter()
        .map(|s| fr.coords(s.point()))
        .collect();
    found.sort_by(|a, b| a.0.abs().total_cmp(&b.0.abs()));
    found.dedup_by(|a, b| (a.0.abs() - b.0.abs()).abs() <= 1e-14 * a.0.abs());
    found
}

/// Slope of `log|h|` against `log|s|` over `|s| ∈ window`.
pub fn fit_exponent(trace: &GeodesicTrace, window: (f64, f64)) -> Result<FitResult> {
    let pts = resample(trace, window, 60);
    let (s, h): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    fit_power_law(&s, &h)
}

/// `h − s²/4 = α̂s⁴` over `|s| ∈ window`, in the normal-form coordinates of
/// a class-Z point.
pub fn fit_family_z(trace: &GeodesicTrace, window: (f64, f64)) -> Result<FitResult> {
    let pts = resample(trace, window, 60);
    if pts.len() < 20 {
        return Err(Error::InsufficientSamples {
            found: pts.len(),
            needed: 20,
        });
    }
    let (s, h): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    fit_quartic(&s, &h, 0.25)
}

/// `h = k₂s² + k₃|s|³` over `|s| ∈ window`.
pub fn fit_member_quadratic(trace: &GeodesicTrace, window: (f64, f64)) -> Result<FitResult> {
    let pts = resample(trace, window, 60);
    if pts.len() < 20 {
        return Err(Error::InsufficientSamples {
            found: pts.len(),
            needed: 20,
        });
    }
    let (s, h): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    fit_quadratic(&s, &h)
}

/// Fitted coefficient of one member at the launch offsets `δ` and `δ/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct OffsetCheck {
    pub id: usize,
    pub coarse: FitResult,
    pub fine: FitResult,
}

impl OffsetCheck {
    pub fn shift(&self) -> f64 {
        (self.coarse.value() - self.fine.value()).abs()
    }

    /// Shift in units of the larger standard error.
    pub fn sigmas(&self) -> f64 {
        let e = self.coarse.error().max(self.fine.error());
        if self.shift() == 0.0 {
            0.0
        } else {
            self.shift() / e
        }
    }

    pub fn converged(&self) -> bool {
        self.sigmas() < 3.0
    }
}

/// Launches the family at `δ` and `δ/2` and fits each member with `fit`.
/// Members whose fit fails at either offset are skipped.
pub fn offset_convergence(
    m: &Metric,
    pc: &PointClassification,
    params: &LaunchParams,
    fit: impl Fn(&GeodesicTrace) -> Result<FitResult>,
) -> Result<Vec<OffsetCheck>> {
    let coarse = launch_family(m, pc, params)?;
    let half = LaunchParams {
        delta: params.delta / 2.0,
        ..params.clone()
    };
    let fine = launch_family(m, pc, &half)?;
    if coarse.len() != fine.len() {
        return Err(Error::Integration("family size depends on the launch offset".into()));
    }
    Ok(coarse
        .iter()
        .zip(&fine)
        .filter_map(|(a, b)| {
            Some(OffsetCheck {
                id: a.id,
                coarse: fit(a).ok()?,
                fine: fit(b).ok()?,
            })
        })
        .collect())
}

/// Majority causal labels of family members.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Census {
    pub timelike: usize,
    pub spacelike: usize,
    pub isotropic: usize,
    /// Members without samples outside the launch zone.
    pub unlabeled: usize,
    pub labels: Vec<Option<CausalType>>,
}

/// Counts majority labels, ignoring samples within `exclude` of the base.
pub fn causal_census(family: &[GeodesicTrace], exclude: f64) -> Census {
    let mut c = Census::default();
    for g in family {
        let l = g.majority_label(exclude);
        match l {
            Some(CausalType::Timelike) => c.timelike += 1,
            Some(CausalType::Spacelike) => c.spacelike += 1,
            Some(CausalType::Isotropic) => c.isotropic += 1,
            None => c.unlabeled += 1,
        }
        c.labels.push(l);
    }
    c
}

/// Largest `Δ` over samples farther than `exclude` from the base point.
pub fn max_delta_outside(trace: &GeodesicTrace, exclude: f64) -> f64 {
    let base = trace.base.unwrap_or(trace.points[0]);
    trace
        .trace
        .samples
        .iter()
        .filter(|s| s.state.point().dist(base) > exclude)
        .map(|s| s.delta)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Manifest header.
pub const MANIFEST_HEADER: &str = "id,kind,leaf,phase,side,coef,coef_err,fit,label";

/// One row per member: parameters, the supplied fit (or empty) and the
/// majority causal label outside `exclude`.
pub fn manifest_csv(family: &[GeodesicTrace], fits: &[Option<FitResult>], exclude: f64) -> String {
    let mut s = String::from(MANIFEST_HEADER);
    s.push('\n');
    for (i, g) in family.iter().enumerate() {
        let (leaf, phase, side) = match g.param {
            Some(p) => (
                format!("{:.12e}", p.leaf),
                p.phase.map(|v| format!("{v:.12e}")).unwrap_or_default(),
                p.side.to_string(),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        let (coef, err, model) = match fits.get(i).and_then(|f| f.as_ref()) {
            Some(f) => (format!("{:.12e}", f.value()), format!("{:.3e}", f.error()), f.model.name()),
            None => (String::new(), String::new(), ""),
        };
        let label = g.majority_label(exclude).map_or("", |l| l.name());
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            g.id,
            g.kind.name(),
            leaf,
            phase,
            side,
            coef,
            err,
            model,
            label
        );
    }
    s
}

/// Winding of the `(x, p)` projection of the blown-up normal form around
/// the origin, from `(δ, u = 1, 0)` until radius `r_out`, in turns.
pub fn focus_winding(omega: &crate::expr::Expr, eps: f64, delta: f64, r_out: f64) -> Result<f64> {
    let field = BlowUpField::new(omega.clone(), eps);
    let init = BlowUpState::new(delta, 1.0, 0.0);
    // the sign of the trace of the linear part at the origin picks the
    // orientation in which the spiral opens
    let h = 1e-6;
    let fx = |x: f64| field.velocity(&BlowUpState::new(x, 1.0, 0.0));
    let fp = |p: f64| field.velocity(&BlowUpState::new(0.0, 1.0, p));
    let trace = (fx(h)?[0] - fx(-h)?[0] + fp(h)?[1] - fp(-h)?[1]) / (2.0 * h);
    if trace == 0.0 {
        return Err(Error::Invalid("blown-up focus has zero trace".into()));
    }
    let sense = trace.signum();
    let stop = |s: &BlowUpState| s.x.hypot(s.p) - r_out;
    let rk = RkConfig {
        rtol: 1e-10,
        atol: 1e-14,
        ..RkConfig::default()
    };
    let tr = integrate_blowup(&field, init, sense, rk, 1e6, 1e-16, Some(0.01), Some(&stop))?;
    if tr.end != BlowUpEnd::Stop {
        return Err(Error::Integration("blown-up trace did not leave the launch disc".into()));
    }
    Ok(tr.winding())
}

/// Largest planar distance from the origin reached by the blown-up trace
/// seeded at `(0, u = δ′, p = δ′)`, run in the orientation along which `u`
/// decreases, until it leaves the box `|x|, |u|, |p| ≤ 1` or stalls.
pub fn u_zero_escape(omega: &crate::expr::Expr, eps: f64, delta: f64) -> Result<f64> {
    let field = BlowUpField::new(omega.clone(), eps);
    let init = BlowUpState::new(0.0, delta, delta);
    let du = field.velocity(&init)?[2];
    let sense = if du > 0.0 { -1.0 } else { 1.0 };
    let stop = |s: &BlowUpState| s.x.abs().max(s.u.abs()).max(s.p.abs()) - 1.0;
    let tr = integrate_blowup(&field, init, sense, RkConfig::default(), 1e4, 1e-14, Some(0.01), Some(&stop))?;
    let mut worst: f64 = 0.0;
    for (_, s) in &tr.samples {
        let (x, y, _) = blowdown(eps, s);
        worst = worst.max(x.hypot(y));
    }
    Ok(worst)
}
