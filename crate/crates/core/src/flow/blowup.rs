//! Blow-up `y = εx² + up²` of the normal form and its desingularized field.

use crate::expr::{Expr, Var};
use crate::{Error, Result};

use super::lifted::{make_sample, Chart, Event, EventKind, LiftedState, Segment, Termination, Trace};
use super::rk::{DenseStep, Dopri5, RkConfig};
use crate::metric::Metric;

/// Point `(x, u, p)` of the blown-up space, `u` in the affine chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowUpState {
    pub x: f64,
    pub u: f64,
    pub p: f64,
}

impl BlowUpState {
    pub fn new(x: f64, u: f64, p: f64) -> BlowUpState {
        BlowUpState { x, u, p }
    }

    /// `v = u − 1`, zero on the image of the isotropic surface.
    pub fn v(&self) -> f64 {
        self.u - 1.0
    }

    fn to_array(self) -> [f64; 3] {
        [self.x, self.p, self.u]
    }

    fn from_array(a: [f64; 3]) -> BlowUpState {
        BlowUpState {
            x: a[0],
            u: a[2],
            p: a[1],
        }
    }
}

/// `(x, y, p) ↦ (x, u, p)` with `u = (y − εx²)/p²`. Fails on the plane `p = 0`.
pub fn blowup(eps: f64, x: f64, y: f64, p: f64) -> Result<BlowUpState> {
    if p == 0.0 {
        return Err(Error::Invalid(format!("blow-up undefined at p = 0 (x = {x}, y = {y})")));
    }
    Ok(BlowUpState {
        x,
        u: (y - eps * x * x) / (p * p),
        p,
    })
}

/// Inverse of [`blowup`]: `(x, εx² + up², p)`.
pub fn blowdown(eps: f64, s: &BlowUpState) -> (f64, f64, f64) {
    (s.x, eps * s.x * s.x + s.u * s.p * s.p, s.p)
}

/// The blown-up field of the normal form with conformal factor `ω`.
#[derive(Debug, Clone)]
pub struct BlowUpField {
    omega: Expr,
    wx: Expr,
    wy: Expr,
    pub eps: f64,
}

impl BlowUpField {
    pub fn new(omega: Expr, eps: f64) -> BlowUpField {
        BlowUpField {
            wx: omega.diff(Var::X),
            wy: omega.diff(Var::Y),
            omega,
            eps,
        }
    }

    /// Velocity in `(x, p, u)` order:
    /// `(2ωup, pM₁ − 2εxω, (u−1)·2uN₁)` with
    /// `M₁ = p(upω_y + ω_x)(1−u) + ω(2−u)` and `N₁ = up²ω_y + pω_x + ω`.
    pub fn velocity(&self, s: &BlowUpState) -> Result<[f64; 3]> {
        let (x, u, p) = (s.x, s.u, s.p);
        let y = self.eps * x * x + u * p * p;
        let ev = |e: &Expr, what| e.eval(x, y).map_err(|err| Error::eval(what, x, y, err));
        let w = ev(&self.omega, "omega")?;
        let wx = ev(&self.wx, "omega_x")?;
        let wy = ev(&self.wy, "omega_y")?;
        let m1 = p * (u * p * wy + wx) * (1.0 - u) + w * (2.0 - u);
        let n1 = u * p * p * wy + p * wx + w;
        Ok([
            2.0 * w * u * p,
            p * m1 - 2.0 * self.eps * x * w,
            (u - 1.0) * 2.0 * u * n1,
        ])
    }
}

/// One-shot evaluation of the blown-up field, `(x, p, u)` order.
pub fn field_blowup(omega: &Expr, eps: f64, s: &BlowUpState) -> Result<[f64; 3]> {
    BlowUpField::new(omega.clone(), eps).velocity(s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlowUpEnd {
    Stop,
    Arrest,
    Budget,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowUpTrace {
    pub samples: Vec<(f64, BlowUpState)>,
    /// Accepted steps in `(x, p, u)` coordinates.
    pub segments: Vec<DenseStep<3>>,
    pub end: BlowUpEnd,
}

impl BlowUpTrace {
    pub fn last(&self) -> BlowUpState {
        self.samples.last().expect("non-empty trace").1
    }

    /// Accumulated angle of the `(x, p)` projection around the origin, in turns.
    pub fn winding(&self) -> f64 {
        let mut total = 0.0;
        for w in self.samples.windows(2) {
            let a0 = w[0].1.p.atan2(w[0].1.x);
            let a1 = w[1].1.p.atan2(w[1].1.x);
            let mut d = a1 - a0;
            while d > std::f64::consts::PI {
                d -= std::f64::consts::TAU;
            }
            while d < -std::f64::consts::PI {
                d += std::f64::consts::TAU;
            }
            total += d;
        }
        total / std::f64::consts::TAU
    }
}

impl BlowUpTrace {
    /// The trace in `(x, y, p)` coordinates of the affine chart.
    pub fn blown_down(&self, m: &Metric, eps: f64, sign: f64, tol_iso: f64) -> Result<Trace> {
        let state = |s: &BlowUpState| {
            let (x, y, p) = blowdown(eps, s);
            LiftedState::affine(x, y, p)
        };
        let samples = self
            .samples
            .iter()
            .map(|(t, s)| make_sample(m, *t, state(s), tol_iso))
            .collect::<Result<Vec<_>>>()?;
        let segments = self
            .segments
            .iter()
            .map(|step| Segment {
                step: step.clone(),
                chart: Chart::Affine,
                sign,
                blowup: Some(eps),
            })
            .collect();
        let last = samples.len() - 1;
        let (termination, kind) = match self.end {
            BlowUpEnd::Stop => (Termination::Stop, EventKind::Stop),
            BlowUpEnd::Arrest => (Termination::Arrest, EventKind::Arrest),
            BlowUpEnd::Budget => (Termination::Budget, EventKind::Budget),
        };
        Ok(Trace {
            samples,
            events: vec![Event { sample: last, kind }],
            segments,
            termination,
            arrest: None,
        })
    }
}

/// Integrates the blown-up field from `init` with orientation `sense`,
/// until `stop` changes sign, the speed drops below `arrest_band` or the
/// parameter reaches `t_max`. `sample_dt` adds samples of the continuous
/// extension.
#[allow(clippy::too_many_arguments)]
pub fn integrate_blowup(
    field: &BlowUpField,
    init: BlowUpState,
    sense: f64,
    rk: RkConfig,
    t_max: f64,
    arrest_band: f64,
    sample_dt: Option<f64>,
    stop: Option<&dyn Fn(&BlowUpState) -> f64>,
) -> Result<BlowUpTrace> {
    let sign = if sense < 0.0 { -1.0 } else { 1.0 };
    let mut f = |_t: f64, y: &[f64; 3]| -> Result<[f64; 3]> {
        let v = field.velocity(&BlowUpState::from_array(*y))?;
        Ok([sign * v[0], sign * v[1], sign * v[2]])
    };
    let mut solver = Dopri5::new(rk, 0.0, init.to_array(), 1.0);
    let mut samples = vec![(0.0, init)];
    let mut segments = Vec::new();
    let end = loop {
        if solver.t >= t_max {
            break BlowUpEnd::Budget;
        }
        solver.limit_step(t_max - solver.t);
        let step = solver.advance(&mut f)?;
        let cut = stop.and_then(|g| step.locate(|y| g(&BlowUpState::from_array(*y))));
        let end = cut.unwrap_or(1.0);
        if let Some(dt) = sample_dt {
            let n = (step.h * end / dt).floor() as usize;
            for k in 1..=n {
                let th = k as f64 * dt / step.h;
                if th < end {
                    samples.push((step.t0 + th * step.h, BlowUpState::from_array(step.at(th))));
                }
            }
        }
        samples.push((step.t0 + end * step.h, BlowUpState::from_array(step.at(end))));
        let speed = step.f1.iter().map(|v| v * v).sum::<f64>().sqrt();
        segments.push(step);
        if cut.is_some() {
            break BlowUpEnd::Stop;
        }
        if speed < arrest_band {
            break BlowUpEnd::Arrest;
        }
    };
    Ok(BlowUpTrace { samples, segments, end })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::lifted::field_lifted;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn blowup_examples() {
        let s = blowup(0.0, 1.0, 0.02, 0.2).unwrap();
        assert!((s.u - 0.5).abs() < 1e-14);
        let s = blowup(-1.0, 1.0, -0.96, 0.2).unwrap();
        assert!((s.u - 1.0).abs() < 1e-12);
        assert!(blowup(1.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let eps = rng.gen_range(-2.0..2.0);
            let x = rng.gen_range(-1.0..1.0);
            let y = rng.gen_range(-1.0..1.0);
            let mut p: f64 = rng.gen_range(-1.0..1.0);
            if p.abs() < 1e-3 {
                p = 1e-3f64.copysign(p);
            }
            let s = blowup(eps, x, y, p).unwrap();
            let (x1, y1, p1) = blowdown(eps, &s);
            worst = worst.max((x1 - x).abs()).max((y1 - y).abs()).max((p1 - p).abs());
        }
        assert!(worst <= 1e-12, "{worst}");
    }

    #[test]
    fn isotropic_surface_is_invariant() {
        let f = BlowUpField::new(Expr::Const(-1.0), 0.3);
        for &(x, p) in &[(0.1, 0.2), (-0.4, 0.05), (0.0, 0.7)] {
            let v = f.velocity(&BlowUpState::new(x, 1.0, p)).unwrap();
            assert_eq!(v[2], 0.0);
            // M₁ = −1 on u = 1, so ṗ = −p + 2εx
            assert!((v[1] - (-p + 0.6 * x)).abs() < 1e-15);
        }
    }

    #[test]
    fn u_axis_is_invariant() {
        let f = BlowUpField::new(Expr::Const(-1.0), 0.0);
        for &u in &[0.3, 2.0, -1.5] {
            let v = f.velocity(&BlowUpState::new(0.0, u, 0.0)).unwrap();
            assert_eq!(v[0], 0.0);
            assert_eq!(v[1], 0.0);
            assert!((v[2] - 2.0 * u * (u - 1.0) * -1.0).abs() < 1e-15);
        }
    }

    fn pushforward(m: &Metric, eps: f64, s: &BlowUpState) -> [f64; 3] {
        // chain rule applied to the lifted field, then divided by −ωp
        let (x, y, p) = blowdown(eps, s);
        let w = m.c().eval(x, y).unwrap();
        let v = field_lifted(m, &LiftedState::affine(x, y, p)).unwrap().map(|c| c / w);
        let du = (v[1] - 2.0 * eps * x * v[0]) / (p * p) - 2.0 * s.u * v[2] / p;
        [v[0] / p, v[2] / p, du / p]
    }

    #[test]
    fn matches_pushforward_of_lifted_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let omegas = ["-1", "-1 - x + 0.5*y", "-exp(0.3*x - 0.2*y)"];
        for text in omegas {
            let omega = crate::expr::parse(text).unwrap();
            for _ in 0..100 {
                let eps = rng.gen_range(-1.5..1.5);
                let m = Metric::normal_form(omega.clone(), eps);
                let f = BlowUpField::new(omega.clone(), eps);
                let mut p: f64 = rng.gen_range(0.01..0.5);
                if rng.gen_bool(0.5) {
                    p = -p;
                }
                let s = BlowUpState::new(rng.gen_range(-0.5..0.5), rng.gen_range(-2.0..2.0), p);
                let a = f.velocity(&s).unwrap();
                let b = pushforward(&m, eps, &s);
                for i in 0..3 {
                    assert!((a[i] - b[i]).abs() <= 1e-8 * (1.0 + b[i].abs()), "{text} {s:?} {a:?} {b:?}");
                }
            }
        }
    }

    #[test]
    fn blowdown_of_isotropic_trace_stays_isotropic() {
        let eps = 0.4;
        let omega = crate::expr::parse("-1 - 0.5*x").unwrap();
        let m = Metric::normal_form(omega.clone(), eps);
        let f = BlowUpField::new(omega, eps);
        let cfg = RkConfig::default();
        let stop = |s: &BlowUpState| s.p.abs() - 1.0;
        let tr = integrate_blowup(&f, BlowUpState::new(0.3, 1.0, 0.1), 1.0, cfg, 20.0, 1e-12, Some(0.05), Some(&stop))
            .unwrap();
        assert!(tr.samples.len() > 10);
        for (_, s) in &tr.samples {
            let (x, y, p) = blowdown(eps, s);
            let fv = m.jet1(crate::metric::Point::new(x, y)).unwrap().f(p);
            assert!(fv.abs() <= 1e-8, "{fv}");
        }
    }

    #[test]
    fn focus_winds() {
        let f = BlowUpField::new(Expr::Const(-1.0), 1.0);
        let stop = |s: &BlowUpState| s.x.hypot(s.p) - 0.1;
        let tr = integrate_blowup(
            &f,
            BlowUpState::new(1e-8, 1.0, 0.0),
            -1.0,
            RkConfig::default(),
            1e4,
            1e-14,
            Some(0.05),
            Some(&stop),
        )
        .unwrap();
        assert_eq!(tr.end, BlowUpEnd::Stop);
        assert!(tr.winding().abs() >= 2.0, "{}", tr.winding());
    }
}
