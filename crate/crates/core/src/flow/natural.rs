//! Naturally parametrized geodesics: extremals of the action
//! `∫ (aẋ² + 2bẋẏ + cẏ²) dt`.

use crate::metric::{Metric, Point};
use crate::{Error, Result};

use super::rk::{Dopri5, RkConfig};

/// Phase point `(x, y, ẋ, ẏ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NaturalState {
    pub x: f64,
    pub y: f64,
    pub xd: f64,
    pub yd: f64,
}

impl NaturalState {
    pub fn new(x: f64, y: f64, xd: f64, yd: f64) -> NaturalState {
        NaturalState { x, y, xd, yd }
    }

    fn to_array(self) -> [f64; 4] {
        [self.x, self.y, self.xd, self.yd]
    }

    fn from_array(a: [f64; 4]) -> NaturalState {
        NaturalState::new(a[0], a[1], a[2], a[3])
    }
}

/// `(ẋ, ẏ, ẍ, ÿ)` from
/// `2(aẍ + bÿ) = (c_x − 2b_y)ẏ² − 2a_yẋẏ − a_xẋ²`,
/// `2(bẍ + cÿ) = (a_y − 2b_x)ẋ² − 2c_xẋẏ − c_yẏ²`.
/// Fails when `|Δ| ≤ floor·s²`, `s = max(|a|, |b|, |c|)`.
pub fn el_field(m: &Metric, s: &NaturalState, floor: f64) -> Result<[f64; 4]> {
    let j = m.jet1(Point::new(s.x, s.y))?;
    let (a, b, c) = (&j.a, &j.b, &j.c);
    let d = j.delta();
    let sc = j.scale();
    if d.abs() <= floor * sc * sc {
        return Err(Error::Integration(format!(
            "system degenerate at ({}, {}), |Δ| = {:e}",
            s.x,
            s.y,
            d.abs()
        )));
    }
    let (u, w) = (s.xd, s.yd);
    let r1 = 0.5 * ((c.x - 2.0 * b.y) * w * w - 2.0 * a.y * u * w - a.x * u * u);
    let r2 = 0.5 * ((a.y - 2.0 * b.x) * u * u - 2.0 * c.x * u * w - c.y * w * w);
    let xdd = (c.v * r1 - b.v * r2) / d;
    let ydd = (a.v * r2 - b.v * r1) / d;
    Ok([u, w, xdd, ydd])
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaturalTrace {
    /// Samples at the requested times, in the order requested.
    pub samples: Vec<(f64, NaturalState)>,
    /// Final parameter reached.
    pub t_end: f64,
    /// Integration stopped at the `|Δ|` floor before the last requested time.
    pub arrested: bool,
}

/// Integrates from `(t0, init)` through the `times` (monotone in one
/// direction away from `t0`), sampling the continuous extension there.
pub fn el_integrate(
    m: &Metric,
    t0: f64,
    init: NaturalState,
    times: &[f64],
    rk: RkConfig,
    floor: f64,
) -> Result<NaturalTrace> {
    let Some(&t_last) = times.last() else {
        return Ok(NaturalTrace {
            samples: Vec::new(),
            t_end: t0,
            arrested: false,
        });
    };
    let dir = if t_last < t0 { -1.0 } else { 1.0 };
    if times.windows(2).any(|w| (w[1] - w[0]) * dir < 0.0) || (times[0] - t0) * dir < 0.0 {
        return Err(Error::Invalid("sample times must be monotone away from t0".into()));
    }
    // stop before the floor is reached so that every stage stays evaluable
    let guard = |y: &[f64; 4]| -> f64 {
        match m.jet1(Point::new(y[0], y[1])) {
            Ok(j) => {
                let sc = j.scale();
                j.delta().abs() - 2.0 * floor * sc * sc
            }
            Err(_) => -1.0,
        }
    };
    let mut f = |_t: f64, y: &[f64; 4]| el_field(m, &NaturalState::from_array(*y), floor);
    let mut solver = Dopri5::new(rk, t0, init.to_array(), dir);
    let mut samples = Vec::with_capacity(times.len());
    let mut next = 0;
    while next < times.len() && times[next] == t0 {
        samples.push((t0, init));
        next += 1;
    }
    while next < times.len() {
        solver.limit_step((t_last - solver.t).abs());
        let step = solver.advance(&mut f)?;
        let cut = step.locate(guard);
        let t_stop = cut.map_or(step.t1(), |th| step.t0 + th * step.h);
        while next < times.len() && (t_stop - times[next]) * dir >= 0.0 {
            samples.push((times[next], NaturalState::from_array(step.at_time(times[next]))));
            next += 1;
        }
        if cut.is_some() {
            return Ok(NaturalTrace {
                samples,
                t_end: t_stop,
                arrested: next < times.len(),
            });
        }
    }
    Ok(NaturalTrace {
        samples,
        t_end: solver.t,
        arrested: false,
    })
}

/// Restriction of the extremal equations to the horizontal line `y = y0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineRestriction {
    pub x: f64,
    /// Rank of `[[2a, a_x], [2b, −(a_y − 2b_x)]]` acting on `(ẍ, ẋ²)`.
    pub rank: usize,
    /// Largest `|ẋ²|` component of a unit solution `(ẍ, ẋ²)`; zero means
    /// motion along the line is forced to stop.
    pub xdot_sq: f64,
}

/// With `ẏ = ÿ = 0` the system reads `2aẍ + a_xẋ² = 0`,
/// `2bẍ − (a_y − 2b_x)ẋ² = 0`; returns its solution space at `(x, y0)`.
pub fn line_restriction(m: &Metric, y0: f64, x: f64, tol: f64) -> Result<LineRestriction> {
    let j = m.jet1(Point::new(x, y0))?;
    let (a, b) = (&j.a, &j.b);
    let rows = [[2.0 * a.v, a.x], [2.0 * b.v, -(a.y - 2.0 * b.x)]];
    let norms = rows.map(|r| r[0].hypot(r[1]));
    let big = if norms[0] >= norms[1] { 0 } else { 1 };
    if norms[big] == 0.0 {
        return Ok(LineRestriction {
            x,
            rank: 0,
            xdot_sq: 1.0,
        });
    }
    let det = rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0];
    let (rank, xdot_sq) = if det.abs() > tol * norms[big] * norms[big] {
        (2, 0.0)
    } else {
        // null vector (−B, A) of the dominant row
        (1, rows[big][0].abs() / norms[big])
    };
    Ok(LineRestriction { x, rank, xdot_sq })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1() -> Metric {
        Metric::parse("-y", "0", "1").unwrap()
    }

    #[test]
    fn e1_system() {
        let m = e1();
        let s = NaturalState::new(0.3, 0.7, 1.1, -0.4);
        let v = el_field(&m, &s, 1e-12).unwrap();
        // yẍ = −ẋẏ, 2ÿ = −ẋ²
        assert!((s.y * v[2] + s.xd * s.yd).abs() < 1e-14);
        assert!((2.0 * v[3] + s.xd * s.xd).abs() < 1e-14);
    }

    #[test]
    fn degenerate_on_discriminant() {
        assert!(el_field(&e1(), &NaturalState::new(0.0, 0.0, 1.0, 0.0), 1e-12).is_err());
    }

    #[test]
    fn cube_root_law() {
        let m = e1();
        let init = NaturalState::new(1.0, 0.25, 1.0 / 3.0, 1.0 / 6.0);
        let times: Vec<f64> = (0..=40).map(|k| 10f64.powf(-6.0 * k as f64 / 40.0)).collect();
        let cfg = RkConfig {
            rtol: 1e-12,
            atol: 1e-14,
            ..RkConfig::default()
        };
        let tr = el_integrate(&m, 1.0, init, &times, cfg, 1e-14).unwrap();
        assert!(!tr.arrested);
        assert_eq!(tr.samples.len(), times.len());
        for (t, s) in &tr.samples {
            let x = t.cbrt();
            assert!((s.x - x).abs() <= 1e-7 * x, "t={t} x={} want {x}", s.x);
            assert!((s.y - x * x / 4.0).abs() <= 1e-7 * x * x);
        }
    }

    #[test]
    fn arrest_at_floor() {
        let m = e1();
        let init = NaturalState::new(1.0, 0.25, 1.0 / 3.0, 1.0 / 6.0);
        let tr = el_integrate(&m, 1.0, init, &[0.5, 1e-9, 0.0], RkConfig::default(), 1e-4).unwrap();
        assert!(tr.arrested);
        assert_eq!(tr.samples.len(), 1);
    }

    #[test]
    fn horizontal_axis_is_not_a_geodesic() {
        let m = e1();
        for k in -5..=5 {
            let r = line_restriction(&m, 0.0, 0.2 * k as f64, 1e-12).unwrap();
            assert_eq!(r.rank, 1);
            assert!(r.xdot_sq.sqrt() <= 1e-12);
        }
        // a horizontal line of a flat metric carries uniform motion
        let flat = Metric::parse("1", "0", "1").unwrap();
        let r = line_restriction(&flat, 0.0, 0.0, 1e-12).unwrap();
        assert!(r.xdot_sq > 0.5);
    }
}
