//! Numerical verification suites: each check measures one quantity on an
//! exactly solvable or randomly generated metric and compares it with a
//! bound.

use std::fmt;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::Expr;
use crate::families::{
    causal_census, fit_exponent, fit_family_z, fit_member_quadratic, fit_power_law, focus_winding, launch_family,
    lemma_pl2_check, log_space, max_delta_outside, u_zero_escape, GeodesicTrace, LaunchParams, MemberKind, Pl2Case,
};
use crate::flow::{el_integrate, integrate, line_restriction, FieldKind, IntegratorConfig, LiftedState, NaturalState, RkConfig, Termination};
use crate::metric::{CausalType, Direction, Metric, Point};
use crate::singular::{check_factorization, classify, epsilon_spectrum, resonance_scan, ClassTag, SpectrumPair, Target};
use crate::{Error, Result};

const O: Point = Point::new(0.0, 0.0);

/// One measured quantity against its bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    /// The check passes when `measured ≥ bound` instead of `≤`.
    pub at_least: bool,
}

impl Check {
    fn at_most(criterion: u8, name: impl Into<String>, measured: f64, bound: f64) -> Check {
        Check {
            criterion,
            name: name.into(),
            measured,
            bound,
            at_least: false,
        }
    }

    fn at_least(criterion: u8, name: impl Into<String>, measured: f64, bound: f64) -> Check {
        Check {
            criterion,
            name: name.into(),
            measured,
            bound,
            at_least: true,
        }
    }

    pub fn pass(&self) -> bool {
        if self.at_least {
            self.measured >= self.bound
        } else {
            self.measured <= self.bound
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {:>2} {}: {:.6e} {} {:.3e}",
            if self.pass() { "PASS" } else { "FAIL" },
            self.criterion,
            self.name,
            self.measured,
            if self.at_least { ">=" } else { "<=" },
            self.bound
        )
    }
}

/// Names accepted by [`suite`].
pub const SUITES: &[(&str, &[u8])] = &[
    ("factorization", &[1]),
    ("brioschi", &[2]),
    ("z", &[3]),
    ("spectra", &[4]),
    ("saddle", &[5]),
    ("node-focus", &[6]),
    ("confinement", &[7]),
    ("transverse", &[8]),
    ("natural", &[9]),
    ("normal-forms", &[10]),
    ("all", &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10]),
];

/// Runs the named suite; `seed` drives the random metrics and spectra.
pub fn suite(name: &str, seed: u64) -> Result<Vec<Check>> {
    let Some((_, ids)) = SUITES.iter().find(|(n, _)| *n == name) else {
        let known: Vec<&str> = SUITES.iter().map(|s| s.0).collect();
        return Err(Error::Invalid(format!("unknown suite `{name}` (known: {})", known.join(", "))));
    };
    let mut out = Vec::new();
    for &id in *ids {
        out.extend(criterion(id, seed)?);
    }
    Ok(out)
}

/// Checks of one numbered criterion.
pub fn criterion(id: u8, seed: u64) -> Result<Vec<Check>> {
    match id {
        1 => factorization(seed),
        2 => brioschi(seed),
        3 => z_oracle(),
        4 => spectra(),
        5 => saddle(),
        6 => node_focus(),
        7 => confinement(),
        8 => transverse(),
        9 => natural(),
        10 => normal_forms(seed),
        _ => Err(Error::Invalid(format!("no criterion {id}"))),
    }
}

/// One line per check.
pub fn render(checks: &[Check]) -> String {
    let mut s = String::new();
    for c in checks {
        s.push_str(&c.to_string());
        s.push('\n');
    }
    s
}

fn quadratic(rng: &mut ChaCha8Rng, scale: f64) -> String {
    let mut k = || scale * rng.gen_range(-1.0..1.0);
    format!("{:?}*x^2 + {:?}*x*y + {:?}*y^2", k(), k(), k())
}

fn unit_pair(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let r: f64 = rng.gen_range(0.5..1.5);
    (r * t.cos(), r * t.sin())
}

/// Random metric with degree-two coefficients whose discriminant passes
/// regularly through the origin.
fn random_metric(rng: &mut ChaCha8Rng, diagonal: bool) -> Result<(Metric, [f64; 4])> {
    let (a1, a2) = unit_pair(rng);
    let (c1, c2) = (rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
    let a = format!("{a1:?}*x + {a2:?}*y + {}", quadratic(rng, 1.0));
    let b = if diagonal { "0".to_string() } else { quadratic(rng, 0.5) };
    let c = format!("1 + {c1:?}*x + {c2:?}*y + {}", quadratic(rng, 0.3));
    Ok((Metric::parse(&a, &b, &c)?, [a1, a2, c1, c2]))
}

fn factorization(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ps: Vec<f64> = (0..10).map(|k| -2.0 + 4.0 * k as f64 / 9.0).collect();
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for _ in 0..50 {
        let (m, _) = random_metric(&mut rng, false)?;
        let pts = m.trace_discriminant(O, 0.09, 0.01)?;
        for q in pts.iter().take(10) {
            worst = worst.max(check_factorization(&m, *q, &ps)?);
            points += 1;
        }
    }
    Ok(vec![
        Check::at_most(1, "factorization residual, 50 metrics", worst, 1e-9),
        Check::at_least(1, "discriminant points sampled", points as f64, 500.0),
    ])
}

fn brioschi(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let (m, [ax, ay, cx, _]) = random_metric(&mut rng, true)?;
        let k1 = m.brioschi_k1(O)?;
        worst = worst.max((k1 - (ax * cx + ay * ay) / 4.0).abs());
    }
    Ok(vec![Check::at_most(2, "|K1(0) - c(a_x c_x + a_y^2)/4|, 20 metrics", worst, 1e-9)])
}

fn e1() -> Metric {
    Metric::parse("-y", "0", "1").expect("static metric")
}

fn normal_form(eps: f64) -> Metric {
    Metric::normal_form(Expr::Const(-1.0), eps)
}

fn z_params() -> LaunchParams {
    let mut p = LaunchParams {
        radius: 1.5,
        delta: 3e-3,
        leaves: vec![-1.0 / 48.0, 0.0, 1.0 / 48.0],
        admissible: false,
        ..Default::default()
    };
    p.cfg.rk.rtol = 1e-13;
    p
}

fn z_oracle() -> Result<Vec<Check>> {
    let m = e1();
    let pc = classify(&m, O)?;
    let dirs_ok = pc.class == ClassTag::Z
        && pc.directions.len() == 2
        && pc.directions.contains(&(Direction::Affine(0.0), 2))
        && pc.directions.contains(&(Direction::Infinity, 1));
    let params = z_params();
    let fam = launch_family(&m, &pc, &params)?;
    let mut curve_err: f64 = 0.0;
    let mut quartic_err: f64 = 0.0;
    for g in &fam {
        let a = g.param.map_or(0.0, |p| p.leaf);
        if a == 0.0 {
            continue;
        }
        for s in g.trace.samples.iter().filter(|s| s.state.x.abs() <= 1.0) {
            let x = s.state.x;
            let exact = if a < 0.0 { (x / 2.0).sin().powi(2) } else { (x / 2.0).sinh().powi(2) };
            curve_err = curve_err.max((s.state.y - exact).abs());
        }
        let f = fit_family_z(g, (params.delta, 10.0 * params.delta))?;
        quartic_err = quartic_err.max((f.value() - a).abs());
        if g.trace.termination != Termination::Stop {
            curve_err = f64::INFINITY;
        }
    }
    // Q = (p² − y)/y² along a non-isotropic trace of the lifted field
    let mut cfg = IntegratorConfig {
        rk: RkConfig {
            rtol: 1e-12,
            atol: 1e-14,
            ..RkConfig::default()
        },
        t_max: 4.0,
        ..IntegratorConfig::default()
    };
    cfg.sample_dt = Some(0.05);
    let tr = integrate(&m, FieldKind::Geodesic, LiftedState::affine(0.2, 0.5, 0.3), 1.0, &cfg, None)?;
    let q = |s: &LiftedState| (s.p() * s.p() - s.y) / (s.y * s.y);
    let q0 = q(&tr.samples[0].state);
    let span = tr.last().t.abs();
    let drift = tr.samples.iter().map(|s| (q(&s.state) - q0).abs()).fold(0.0, f64::max) / span;
    Ok(vec![
        Check::at_most(3, "class Z with directions {0 (x2), inf}", if dirs_ok { 0.0 } else { 1.0 }, 0.0),
        Check::at_most(3, "|K1 - 1/4|", (pc.k1 - 0.25).abs(), 1e-9),
        Check::at_most(3, "max |y - sin^2(x/2)|, |y - sinh^2(x/2)| on |x| <= 1", curve_err, 1e-6),
        Check::at_most(3, "quartic coefficient error", quartic_err, 1e-3),
        Check::at_most(3, "Q drift per unit parameter", drift, 1e-6),
    ])
}

/// `¼ ± √(1 − 16ε)/4`, complex when `ε > 1/16`.
pub fn normal_form_spectrum(eps: f64) -> (Complex64, Complex64) {
    let d = Complex64::new(1.0 - 16.0 * eps, 0.0).sqrt() / 4.0;
    (0.25 + d, 0.25 - d)
}

fn spectrum_error(sp: &SpectrumPair, want: (Complex64, Complex64)) -> f64 {
    let direct = (sp.eps1 - want.0).norm().max((sp.eps2 - want.1).norm());
    let swapped = (sp.eps1 - want.1).norm().max((sp.eps2 - want.0).norm());
    direct.min(swapped)
}

fn spectra() -> Result<Vec<Check>> {
    let mut err: f64 = 0.0;
    let mut wrong = 0;
    for (eps, class) in [(-1.0, ClassTag::Ds), (1.0 / 32.0, ClassTag::Dn), (1.0, ClassTag::Df)] {
        let m = normal_form(eps);
        err = err.max(spectrum_error(&epsilon_spectrum(&m, O)?, normal_form_spectrum(eps)));
        if classify(&m, O)?.class != class {
            wrong += 1;
        }
    }
    for (eps, class) in [
        (1e-4, ClassTag::Dn),
        (1.0 / 16.0 - 1e-4, ClassTag::NonGeneric),
        (1.0 / 16.0 + 1e-4, ClassTag::NonGeneric),
    ] {
        let c = classify(&normal_form(eps), O)?;
        if c.class != class || (class == ClassTag::NonGeneric && c.diagnostics.is_empty()) {
            wrong += 1;
        }
    }
    Ok(vec![
        Check::at_most(4, "epsilon spectrum error", err, 1e-5),
        Check::at_most(4, "misclassified points", f64::from(wrong), 0.0),
    ])
}

fn relative(value: f64, target: f64) -> f64 {
    (value / target - 1.0).abs()
}

fn saddle() -> Result<Vec<Check>> {
    let m = normal_form(-1.0);
    let params = LaunchParams {
        radius: 0.6,
        admissible: false,
        ..Default::default()
    };
    let fam = launch_family(&m, &classify(&m, O)?, &params)?;
    let (e1, e2) = normal_form_spectrum(-1.0);
    let (mut generic, mut sep): (f64, f64) = (0.0, 0.0);
    let mut n_sep = 0;
    for g in &fam {
        let k = fit_member_quadratic(g, (0.01, 0.1))?.value();
        if g.kind == MemberKind::Exceptional {
            sep = sep.max(relative(k, e2.re / 2.0));
            n_sep += 1;
        } else {
            generic = generic.max(relative(k, e1.re / 2.0));
        }
    }
    Ok(vec![
        Check::at_most(5, "generic members vs eps1/2 (relative)", generic, 0.02),
        Check::at_most(5, "separatrix vs eps2/2 (relative)", sep, 0.02),
        Check::at_least(5, "separatrix members", f64::from(n_sep), 1.0),
    ])
}

/// Launch settings of the node family used by the checks.
pub fn node_params() -> LaunchParams {
    LaunchParams {
        radius: 0.6,
        delta: 1e-4,
        phase_radius: 1e-4,
        leaves: vec![-0.5, -0.25, 0.0, 0.25, 0.5],
        admissible: false,
        ..Default::default()
    }
}

fn node_focus() -> Result<Vec<Check>> {
    let m = normal_form(1.0 / 32.0);
    let fam = launch_family(&m, &classify(&m, O)?, &node_params())?;
    let (e1, e2) = normal_form_spectrum(1.0 / 32.0);
    let (mut generic, mut exc): (f64, f64) = (0.0, 0.0);
    let mut n_exc = 0;
    for g in &fam {
        let k = fit_member_quadratic(g, (0.1, 0.4))?.value();
        if g.kind == MemberKind::Exceptional {
            exc = exc.max(relative(k, e2.re / 2.0));
            n_exc += 1;
        } else {
            generic = generic.max(relative(k, e1.re / 2.0));
        }
    }
    let w = focus_winding(&Expr::Const(-1.0), 1.0, 1e-3, 0.1)?;
    Ok(vec![
        Check::at_most(6, "node members vs eps1/2 (relative)", generic, 0.02),
        Check::at_most(6, "exceptional member vs eps2/2 (relative)", exc, 0.02),
        Check::at_least(6, "exceptional members", f64::from(n_exc), 1.0),
        Check::at_least(6, "focus winding |turns| before radius 0.1", w.abs(), 2.0),
    ])
}

/// Γ₀ members of the tangency classes used by the confinement check.
pub fn tangency_families() -> Result<Vec<(ClassTag, f64, Vec<GeodesicTrace>)>> {
    let mut out = Vec::new();
    let z = e1();
    let zp = z_params();
    out.push((ClassTag::Z, zp.delta, launch_family(&z, &classify(&z, O)?, &zp)?));
    for (eps, params) in [
        (-1.0, LaunchParams::default()),
        (1.0 / 32.0, node_params()),
        (1.0, LaunchParams::default()),
    ] {
        let m = normal_form(eps);
        let pc = classify(&m, O)?;
        let params = LaunchParams {
            radius: 0.6,
            admissible: false,
            ..params
        };
        out.push((pc.class, params.delta, launch_family(&m, &pc, &params)?));
    }
    Ok(out)
}

fn confinement() -> Result<Vec<Check>> {
    let mut worst = f64::NEG_INFINITY;
    let mut escapes = 0;
    let mut members = 0;
    for (_, delta, fam) in tangency_families()? {
        for g in fam.iter().filter(|g| g.kind != MemberKind::Admissible) {
            let d = max_delta_outside(g, 2.0 * delta);
            worst = worst.max(d);
            if d > 1e-6 {
                escapes += 1;
            }
            members += 1;
        }
    }
    let mut u_zero: f64 = 0.0;
    for eps in [-1.0, 1.0 / 32.0, 1.0] {
        for d in [1e-3, 1e-5] {
            u_zero = u_zero.max(u_zero_escape(&Expr::Const(-1.0), eps, d)? / d);
        }
    }
    Ok(vec![
        Check::at_most(7, "max Delta beyond 2 delta", worst, 1e-6),
        Check::at_most(7, "members escaping into Delta > 0", f64::from(escapes), 0.0),
        Check::at_least(7, "members checked", f64::from(members), 1.0),
        Check::at_most(7, "u -> 0 traces: reach / offset", u_zero, 1.0),
    ])
}

/// Largest discrete curvature of the projection within `r` of `q`.
fn curvature_near(g: &GeodesicTrace, q: Point, r: f64) -> f64 {
    let pts: Vec<Point> = g.points.iter().copied().filter(|p| p.dist(q) <= r).collect();
    pts.windows(3)
        .filter_map(|w| {
            let (a, b, c) = (w[0].dist(w[1]), w[1].dist(w[2]), w[0].dist(w[2]));
            let cross = (w[1].x - w[0].x) * (w[2].y - w[0].y) - (w[1].y - w[0].y) * (w[2].x - w[0].x);
            (a > 1e-9 && b > 1e-9 && c > 1e-9).then(|| 2.0 * cross.abs() / (a * b * c))
        })
        .fold(0.0, f64::max)
}

fn transverse() -> Result<Vec<Check>> {
    let m = Metric::parse("x", "0", "1 + x")?;
    let pc = classify(&m, O)?;
    let mut slopes: Vec<f64> = pc.directions.iter().filter_map(|(d, _)| d.slope()).collect();
    slopes.sort_by(f64::total_cmp);
    let dir_err = if slopes.len() == 3 && pc.directions.iter().all(|d| d.1 == 1) {
        slopes.iter().zip([-1.0, 0.0, 1.0]).map(|(s, w)| (s - w).abs()).fold(0.0, f64::max)
    } else {
        f64::INFINITY
    };
    let params = LaunchParams {
        radius: 0.3,
        cusps: vec![0.25, 0.5, 1.0, 2.0],
        ..Default::default()
    };
    let fam = launch_family(&m, &pc, &params)?;
    let mut exp_err: f64 = 0.0;
    let mut curvature: f64 = 0.0;
    let mut smooth = 0;
    for g in &fam {
        if g.kind == MemberKind::Admissible {
            let (a, b) = (g.points[0], g.points[g.points.len() - 1]);
            let near = g.points.iter().any(|p| p.dist(O) <= 2.0 * params.delta);
            if g.trace.termination == Termination::Stop && near && a.x * b.x + a.y * b.y < 0.0 {
                smooth += 1;
            }
            curvature = curvature.max(curvature_near(g, O, 0.05));
        } else {
            exp_err = exp_err.max((fit_exponent(g, (1e-5, 1e-3))?.value() - 1.5).abs());
        }
    }
    Ok(vec![
        Check::at_most(8, "admissible directions vs {-1, 0, 1}", dir_err, 1e-9),
        Check::at_least(8, "two-sided admissible geodesics through q", f64::from(smooth), 2.0),
        Check::at_most(8, "their curvature within 0.05 of q", curvature, 10.0),
        Check::at_most(8, "|exponent - 3/2| of the isotropic family", exp_err, 0.05),
    ])
}

fn natural() -> Result<Vec<Check>> {
    let m = e1();
    let init = NaturalState::new(1.0, 0.25, 1.0 / 3.0, 1.0 / 6.0);
    let times: Vec<f64> = {
        let mut t = log_space(1e-6, 1.0, 121);
        t.reverse();
        t
    };
    let rk = RkConfig {
        rtol: 1e-12,
        atol: 1e-14,
        ..RkConfig::default()
    };
    let tr = el_integrate(&m, 1.0, init, &times, rk, 1e-14)?;
    let (t, x): (Vec<f64>, Vec<f64>) = tr
        .samples
        .iter()
        .filter(|(t, _)| (1e-6..=1e-2).contains(t))
        .map(|(t, s)| (*t, s.x))
        .unzip();
    let e = fit_power_law(&t, &x)?.value();
    let mut xdot: f64 = 0.0;
    for k in -10..=10 {
        let r = line_restriction(&m, 0.0, 0.1 * f64::from(k), 1e-12)?;
        xdot = xdot.max(if r.rank == 0 { 1.0 } else { r.xdot_sq.sqrt() });
    }
    Ok(vec![
        Check::at_most(9, "|exponent - 1/3| of x(t)", (e - 1.0 / 3.0).abs(), 1e-3),
        Check::at_most(9, "forced |xdot| on y = 0", xdot, 1e-12),
    ])
}

fn normal_forms(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa11);
    let sign = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    let mut defect: f64 = 0.0;
    for _ in 0..10 {
        let lambda = [sign(&mut rng) * rng.gen_range(0.2..3.0), sign(&mut rng) * rng.gen_range(0.2..3.0)];
        let c = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let case = Pl2Case::Real { lambda, c };
        let pts = case.sample_surface(100, &mut rng);
        defect = defect.max(lemma_pl2_check(&case, &pts)?);
    }
    for _ in 0..5 {
        let case = Pl2Case::Complex {
            a: sign(&mut rng) * rng.gen_range(0.2..2.0),
            b: rng.gen_range(-3.0..3.0),
            c: [rng.gen_range(-1.0..1.0), sign(&mut rng) * rng.gen_range(0.2..1.0)],
        };
        let pts = case.sample_surface(100, &mut rng);
        defect = defect.max(lemma_pl2_check(&case, &pts)?);
    }
    // planted s₁ε₁ + s₂ε₂ = 1 with 2 ≤ s₁ + s₂ ≤ 4
    let mut missed = 0;
    for _ in 0..20 {
        let s1 = rng.gen_range(1..=3u32);
        let s2 = rng.gen_range(if s1 == 1 { 1 } else { 0 }..=4 - s1);
        let e2: f64 = rng.gen_range(-2.0..2.0);
        let e1 = (1.0 - f64::from(s2) * e2) / f64::from(s1);
        let sp = SpectrumPair::new(Complex64::new(e1, 0.0), Complex64::new(e2, 0.0));
        if !resonance_scan(&sp, 4, 1e-10).has([s1, s2, 0], Target::One) {
            missed += 1;
        }
    }
    let mut focus_missed = 0;
    for eps in [0.07, 0.1, 0.25, 0.5, 1.0, 2.0] {
        let pc = classify(&normal_form(eps), O)?;
        let found = pc.class == ClassTag::Df
            && pc.resonance.as_ref().is_some_and(|r| {
                r.relations
                    .iter()
                    .any(|rel| rel.order() == 4 && rel.s[2] == 0 && rel.target == Target::One && rel.real_part)
            });
        if !found {
            focus_missed += 1;
        }
    }
    Ok(vec![
        Check::at_most(10, "invariant-surface defect, 10 real + 5 complex", defect, 1e-10),
        Check::at_most(10, "planted resonances missed of 20", f64::from(missed), 0.0),
        Check::at_most(10, "focus spectra without the |s| = 4 real-part relation", f64::from(focus_missed), 0.0),
    ])
}

/// Majority labels of a family outside `2δ`, for reports.
pub fn labels(family: &[GeodesicTrace], delta: f64) -> Vec<Option<CausalType>> {
    causal_census(family, 2.0 * delta).labels
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_suite() {
        assert!(suite("nope", 0).is_err());
        assert!(criterion(11, 0).is_err());
    }

    #[test]
    fn spectrum_formula() {
        let (a, b) = normal_form_spectrum(-1.0);
        assert!((a.re - 0.25 - 17f64.sqrt() / 4.0).abs() < 1e-15 && b.im == 0.0);
        let (a, b) = normal_form_spectrum(1.0);
        assert!((a.im - 15f64.sqrt() / 4.0).abs() < 1e-15 && (b.im + a.im).abs() < 1e-15);
    }

    #[test]
    fn check_direction() {
        assert!(Check::at_most(1, "a", 1.0, 1.0).pass());
        assert!(!Check::at_most(1, "a", 1.1, 1.0).pass());
        assert!(Check::at_least(1, "a", 2.0, 2.0).pass());
        assert!(!Check::at_least(1, "a", f64::NAN, 2.0).pass());
        assert!(Check::at_most(1, "a", 0.5, 1.0).to_string().starts_with("[PASS]"));
    }

    #[test]
    fn cheap_suites_pass() {
        for name in ["factorization", "brioschi", "spectra", "natural", "normal-forms"] {
            for c in suite(name, 7).unwrap() {
                assert!(c.pass(), "{c}");
            }
        }
    }
}
