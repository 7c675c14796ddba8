//! Fixed-step Runge-Kutta reference for periodic steady states.

use std::f64::consts::PI;

use super::{block_len, OscillatorSystem};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Rk4Options {
    pub periods: usize,
    pub steps_per_period: usize,
    /// Fourier state used as initial condition at `t = 0`.
    pub initial: Option<Vec<f64>>,
}

impl Default for Rk4Options {
    fn default() -> Self {
        Rk4Options { periods: 2000, steps_per_period: 512, initial: None }
    }
}

fn initial_state(x: &[f64], n: usize, h: usize, big_omega: f64) -> (Vec<f64>, Vec<f64>) {
    let l = x.len() / n;
    let mut q = vec![0.0; n];
    let mut v = vec![0.0; n];
    for r in 0..n {
        q[r] = x[r * l];
        for k in 1..=h.min((l - 1) / 2) {
            q[r] += x[r * l + 2 * k - 1];
            v[r] += big_omega * k as f64 * x[r * l + 2 * k];
        }
    }
    (q, v)
}

/// Integrate `periods` forcing periods and return the `H`-harmonic Fourier
/// coefficients of the last one.
pub fn rk4_steady_state(sys: &OscillatorSystem, big_omega: f64, h: usize, opts: &Rk4Options) -> Result<Vec<f64>> {
    sys.validate()?;
    if h == 0 || opts.periods == 0 || opts.steps_per_period < 4 * h + 2 {
        return Err(Error::InvalidArgument("invalid time integration settings".into()));
    }
    let n = sys.dofs();
    let (mut q, mut v) = match &opts.initial {
        Some(x) => {
            if x.len() % n != 0 {
                return Err(Error::DimensionMismatch { expected: n * block_len(h), got: x.len() });
            }
            initial_state(x, n, h, big_omega)
        }
        None => (vec![0.0; n], vec![0.0; n]),
    };
    let ns = opts.steps_per_period;
    let dt = 2.0 * PI / big_omega / ns as f64;
    let l = block_len(h);
    let mut coeffs = vec![0.0; n * l];
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + s * y).collect() };
    for period in 0..opts.periods {
        let last = period + 1 == opts.periods;
        for step in 0..ns {
            if last {
                let tau = 2.0 * PI * step as f64 / ns as f64;
                for r in 0..n {
                    coeffs[r * l] += q[r] / ns as f64;
                    for k in 1..=h {
                        let (s, c) = (k as f64 * tau).sin_cos();
                        coeffs[r * l + 2 * k - 1] += 2.0 * q[r] * c / ns as f64;
                        coeffs[r * l + 2 * k] += 2.0 * q[r] * s / ns as f64;
                    }
                }
            }
            let t = (period * ns + step) as f64 * dt;
            let k1v = sys.acceleration(t, big_omega, &q, &v);
            let k1q = v.clone();
            let q2 = axpy(&q, 0.5 * dt, &k1q);
            let v2 = axpy(&v, 0.5 * dt, &k1v);
            let k2v = sys.acceleration(t + 0.5 * dt, big_omega, &q2, &v2);
            let q3 = axpy(&q, 0.5 * dt, &v2);
            let v3 = axpy(&v, 0.5 * dt, &k2v);
            let k3v = sys.acceleration(t + 0.5 * dt, big_omega, &q3, &v3);
            let q4 = axpy(&q, dt, &v3);
            let v4 = axpy(&v, dt, &k3v);
            let k4v = sys.acceleration(t + dt, big_omega, &q4, &v4);
            for r in 0..n {
                q[r] += dt / 6.0 * (k1q[r] + 2.0 * v2[r] + 2.0 * v3[r] + v4[r]);
                v[r] += dt / 6.0 * (k1v[r] + 2.0 * k2v[r] + 2.0 * k3v[r] + k4v[r]);
            }
            if !q.iter().chain(&v).all(|x| x.is_finite()) {
                return Err(Error::InvalidArgument("time integration diverged".into()));
            }
        }
    }
    Ok(coeffs)
}
