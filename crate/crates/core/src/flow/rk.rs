//! Dormand–Prince 5(4) with step-size control and continuous extension.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RkConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; estimated from the field when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
    /// Step attempts (accepted and rejected) before giving up.
    pub max_steps: usize,
}

impl Default for RkConfig {
    fn default() -> Self {
        RkConfig {
            rtol: 1e-9,
            atol: 1e-12,
            h0: None,
            h_max: f64::INFINITY,
            max_steps: 200_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with its continuous extension.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    pub y0: [f64; N],
    pub y1: [f64; N],
    /// `f(y1)`, the first stage of the next step.
    pub f1: [f64; N],
    r: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// State at `t0 + θh`, `θ ∈ [0, 1]`, fourth-order accurate.
    pub fn at(&self, theta: f64) -> [f64; N] {
        let t1 = 1.0 - theta;
        let r = &self.r;
        std::array::from_fn(|i| {
            r[0][i] + theta * (r[1][i] + t1 * (r[2][i] + theta * (r[3][i] + t1 * r[4][i])))
        })
    }

    pub fn at_time(&self, t: f64) -> [f64; N] {
        self.at(((t - self.t0) / self.h).clamp(0.0, 1.0))
    }

    /// Largest `θ` with `g` of the same sign as at `θ = 0`, refined by
    /// bisection; `None` when `g` has no sign change over the step.
    pub fn locate(&self, mut g: impl FnMut(&[f64; N]) -> f64) -> Option<f64> {
        let g0 = g(&self.y0);
        let g1 = g(&self.y1);
        if g0 == 0.0 || g0.signum() == g1.signum() {
            return None;
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if g(&self.at(mid)).signum() == g0.signum() {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 {
                break;
            }
        }
        Some(hi)
    }
}

/// Adaptive integrator state.
#[derive(Debug, Clone)]
pub struct Dopri5<const N: usize> {
    pub cfg: RkConfig,
    pub t: f64,
    pub y: [f64; N],
    dir: f64,
    h: Option<f64>,
    fsal: Option<[f64; N]>,
    attempts: usize,
}

fn norm<const N: usize>(v: &[f64; N], sk: &[f64; N]) -> f64 {
    (v.iter().zip(sk).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / N as f64).sqrt()
}

impl<const N: usize> Dopri5<N> {
    /// Integrates forward in `t` when `dir > 0`, backward otherwise.
    pub fn new(cfg: RkConfig, t: f64, y: [f64; N], dir: f64) -> Self {
        Dopri5 {
            cfg,
            t,
            y,
            dir: if dir < 0.0 { -1.0 } else { 1.0 },
            h: cfg.h0.map(f64::abs),
            fsal: None,
            attempts: 0,
        }
    }

    /// Replaces the state, e.g. after a change of chart; keeps the step size.
    pub fn reset(&mut self, t: f64, y: [f64; N]) {
        self.t = t;
        self.y = y;
        self.fsal = None;
    }

    pub fn attempts(&self) -> usize {
        self.attempts
    }

    /// Cap for the magnitude of the next step.
    pub fn limit_step(&mut self, h: f64) {
        if let Some(cur) = self.h.as_mut() {
            *cur = cur.min(h.abs());
        } else {
            self.h = Some(h.abs());
        }
    }

    fn sk(&self, a: &[f64; N], b: &[f64; N]) -> [f64; N] {
        std::array::from_fn(|i| self.cfg.atol + self.cfg.rtol * a[i].abs().max(b[i].abs()))
    }

    fn initial_step<F>(&self, f: &mut F, f0: &[f64; N]) -> Result<f64>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    {
        let sk = self.sk(&self.y, &self.y);
        let d0 = norm(&self.y, &sk);
        let d1 = norm(f0, &sk);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(self.cfg.h_max);
        let y1: [f64; N] = std::array::from_fn(|i| self.y[i] + self.dir * h0 * f0[i]);
        let d2 = match f(self.t + self.dir * h0, &y1) {
            Ok(f1) => {
                let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
                norm(&diff, &sk) / h0
            }
            Err(_) => return Ok(h0 * 0.1),
        };
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        Ok((100.0 * h0).min(h1).min(self.cfg.h_max))
    }

    /// Takes one accepted step.
    pub fn advance<F>(&mut self, f: &mut F) -> Result<DenseStep<N>>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    {
        let f0 = match self.fsal {
            Some(v) => v,
            None => f(self.t, &self.y)?,
        };
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(f, &f0)?,
        }
        .min(self.cfg.h_max);
        let mut rejected = false;
        loop {
            self.attempts += 1;
            if self.attempts > self.cfg.max_steps {
                return Err(Error::MaxSteps(self.cfg.max_steps));
            }
            if h <= 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t: self.t });
            }
            let hs = self.dir * h;
            match self.try_step(f, &f0, hs) {
                Ok((y1, k, err)) => {
                    if err <= 1.0 {
                        let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
                        fac = fac.clamp(0.2, 10.0);
                        if rejected {
                            fac = fac.min(1.0);
                        }
                        self.h = Some((h * fac).min(self.cfg.h_max));
                        let step = self.dense(hs, &y1, &k);
                        self.t += hs;
                        self.y = y1;
                        self.fsal = Some(k[6]);
                        return Ok(step);
                    }
                    rejected = true;
                    h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                }
                Err(_) => {
                    // a stage left the field's domain
                    rejected = true;
                    h *= 0.25;
                }
            }
        }
    }

    #[allow(clippy::type_complexity)]
    fn try_step<F>(&self, f: &mut F, f0: &[f64; N], h: f64) -> Result<([f64; N], [[f64; N]; 7], f64)>
    where
        F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
    {
        let mut k = [[0.0; N]; 7];
        k[0] = *f0;
        for s in 1..7 {
            let ys: [f64; N] = std::array::from_fn(|i| {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                self.y[i] + h * acc
            });
            k[s] = f(self.t + C[s] * h, &ys)?;
            if k[s].iter().any(|v| !v.is_finite()) {
                return Err(Error::Integration("non-finite stage".into()));
            }
        }
        // the seventh stage is evaluated at y1 itself
        let y1: [f64; N] = std::array::from_fn(|i| {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(6) {
                acc += A[6][j] * kj[i];
            }
            self.y[i] + h * acc
        });
        let errv: [f64; N] = std::array::from_fn(|i| {
            h * k.iter().zip(E.iter()).map(|(kj, e)| e * kj[i]).sum::<f64>()
        });
        let sk = self.sk(&self.y, &y1);
        Ok((y1, k, norm(&errv, &sk)))
    }

    fn dense(&self, h: f64, y1: &[f64; N], k: &[[f64; N]; 7]) -> DenseStep<N> {
        let y0 = self.y;
        let mut r = [[0.0; N]; 5];
        for i in 0..N {
            let dy = y1[i] - y0[i];
            let bspl = h * k[0][i] - dy;
            r[0][i] = y0[i];
            r[1][i] = dy;
            r[2][i] = bspl;
            r[3][i] = dy - h * k[6][i] - bspl;
            r[4][i] = h * D.iter().zip(k.iter()).map(|(d, kj)| d * kj[i]).sum::<f64>();
        }
        DenseStep {
            t0: self.t,
            h,
            y0,
            y1: *y1,
            f1: k[6],
            r,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run<const N: usize>(
        f: &mut impl FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
        y0: [f64; N],
        t_end: f64,
        cfg: RkConfig,
    ) -> (Vec<DenseStep<N>>, [f64; N]) {
        let mut s = Dopri5::new(cfg, 0.0, y0, t_end.signum());
        let mut steps = Vec::new();
        while (t_end - s.t) * t_end.signum() > 0.0 {
            s.limit_step((t_end - s.t).abs());
            let st = s.advance(f).unwrap();
            steps.push(st);
        }
        (steps, s.y)
    }

    #[test]
    fn exponential_decay() {
        let mut f = |_t: f64, y: &[f64; 1]| Ok([-y[0]]);
        let (_, y) = run(&mut f, [1.0], 5.0, RkConfig::default());
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let mut f = |_t: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let (_, y) = run(&mut f, [1.0, 0.0], -3.0, RkConfig::default());
        assert!((y[0] - 3.0f64.cos()).abs() < 1e-8);
        assert!((y[1] - 3.0f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn dense_output_is_accurate() {
        let mut f = |_t: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let cfg = RkConfig {
            rtol: 1e-11,
            atol: 1e-13,
            ..RkConfig::default()
        };
        let (steps, _) = run(&mut f, [1.0, 0.0], 6.0, cfg);
        for st in &steps {
            for k in 0..=10 {
                let th = k as f64 / 10.0;
                let t = st.t0 + th * st.h;
                let y = st.at(th);
                assert!((y[0] - t.cos()).abs() < 1e-9, "t={t}");
            }
        }
    }

    #[test]
    fn locate_finds_root() {
        let mut f = |_t: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let (steps, _) = run(&mut f, [1.0, 0.0], 2.0, RkConfig::default());
        let st = steps
            .iter()
            .find(|s| s.y0[0] > 0.0 && s.y1[0] <= 0.0)
            .unwrap();
        let th = st.locate(|y| y[0]).unwrap();
        let t = st.t0 + th * st.h;
        assert!((t - std::f64::consts::FRAC_PI_2).abs() < 1e-8);
    }

    #[test]
    fn step_budget() {
        let mut f = |_t: f64, y: &[f64; 1]| Ok([y[0]]);
        let cfg = RkConfig {
            max_steps: 3,
            h0: Some(1e-3),
            h_max: 1e-3,
            ..RkConfig::default()
        };
        let mut s = Dopri5::new(cfg, 0.0, [1.0], 1.0);
        let mut last = Ok(());
        for _ in 0..10 {
            if let Err(e) = s.advance(&mut f) {
                last = Err(e);
                break;
            }
        }
        assert!(matches!(last, Err(Error::MaxSteps(3))));
    }

    #[test]
    fn blow_up_underflows() {
        // y' = y², y(0) = 1 blows up at t = 1
        let mut f = |_t: f64, y: &[f64; 1]| Ok([y[0] * y[0]]);
        let mut s = Dopri5::new(RkConfig::default(), 0.0, [1.0], 1.0);
        let err = loop {
            match s.advance(&mut f) {
                Ok(_) => {}
                Err(e) => break e,
            }
        };
        assert!(matches!(err, Error::StepUnderflow { .. } | Error::MaxSteps(_)));
    }
}
