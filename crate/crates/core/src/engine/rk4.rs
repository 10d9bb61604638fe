//! Classical fixed-step fourth-order Runge-Kutta.

use crate::error::{Error, Result};
use crate::plants::Plant;

/// Scratch buffers reused across steps.
#[derive(Debug, Clone, Default)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        Self {
            k1: vec![0.0; n],
            k2: vec![0.0; n],
            k3: vec![0.0; n],
            k4: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }

    /// Advances `x` from `t` to `t + dt` for `dx/dt = f(t, x)`.
    #[allow(clippy::needless_range_loop)]
    pub fn step<F>(&mut self, mut f: F, t: f64, x: &mut [f64], dt: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]) -> Result<()>,
    {
        let n = x.len();
        if self.k1.len() != n {
            *self = Self::new(n);
        }
        let half = 0.5 * dt;

        f(t, x, &mut self.k1)?;
        for i in 0..n {
            self.tmp[i] = x[i] + half * self.k1[i];
        }
        f(t + half, &self.tmp, &mut self.k2)?;
        for i in 0..n {
            self.tmp[i] = x[i] + half * self.k2[i];
        }
        f(t + half, &self.tmp, &mut self.k3)?;
        for i in 0..n {
            self.tmp[i] = x[i] + dt * self.k3[i];
        }
        f(t + dt, &self.tmp, &mut self.k4)?;
        for i in 0..n {
            x[i] += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        Ok(())
    }
}

/// One RK4 step of `plant` with the inputs `u` held constant.
pub fn integrate_interval(plant: &Plant, x: &[f64], u: &[f64], t0: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::param("dt", format!("must be positive, got {dt}")));
    }
    let mut next = x.to_vec();
    Rk4::new(x.len()).step(|t, x, dx| plant.derivatives(x, u, t, dx), t0, &mut next, dt)?;
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::Diverged { t: t0 + dt });
    }
    Ok(next)
}
