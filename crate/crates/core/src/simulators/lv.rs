use serde::{Deserialize, Serialize};

use super::{OutputMeta, ShapeTag, SimError, SimulationOutput};

pub const SPECIES: usize = 4;
/// Growth rates followed by the row-major interaction matrix.
pub const LV_PARAM_COUNT: usize = SPECIES + SPECIES * SPECIES;

/// Four-species competitive Lotka-Volterra parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LvParams {
    pub r: [f64; SPECIES],
    pub a: [[f64; SPECIES]; SPECIES],
    pub x0: [f64; SPECIES],
}

/// Default initial abundances.
pub const DEFAULT_X0: [f64; SPECIES] = [0.3, 0.3, 0.3, 0.3];

impl LvParams {
    /// Chaotic four-species set of Vano et al. (2006), with the three zero
    /// interaction entries raised to 0.01.
    pub fn chaotic_base() -> Self {
        Self {
            r: [1.0, 0.72, 1.53, 1.27],
            a: [
                [1.0, 1.09, 1.52, 0.01],
                [0.01, 1.0, 0.44, 1.36],
                [2.33, 0.01, 1.0, 0.47],
                [1.21, 0.51, 0.35, 1.0],
            ],
            x0: DEFAULT_X0,
        }
    }

    pub fn param_names() -> Vec<String> {
        let mut names: Vec<String> = (1..=SPECIES).map(|i| format!("r{i}")).collect();
        for i in 1..=SPECIES {
            for j in 1..=SPECIES {
                names.push(format!("a{i}{j}"));
            }
        }
        names
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = self.r.to_vec();
        for row in &self.a {
            v.extend_from_slice(row);
        }
        v
    }

    pub fn from_vector(v: &[f64], x0: [f64; SPECIES]) -> Result<Self, SimError> {
        if v.len() != LV_PARAM_COUNT {
            return Err(SimError::Params(format!("expected {LV_PARAM_COUNT} parameters, got {}", v.len())));
        }
        let mut r = [0.0; SPECIES];
        r.copy_from_slice(&v[..SPECIES]);
        let mut a = [[0.0; SPECIES]; SPECIES];
        for (i, row) in a.iter_mut().enumerate() {
            row.copy_from_slice(&v[SPECIES + i * SPECIES..SPECIES + (i + 1) * SPECIES]);
        }
        let p = Self { r, a, x0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let all = self.r.iter().chain(self.x0.iter()).chain(self.a.iter().flatten());
        if all.clone().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(SimError::Params("Lotka-Volterra parameters must be finite and nonnegative".into()));
        }
        if (0..SPECIES).any(|i| self.a[i][i] <= 0.0) {
            return Err(SimError::Params("interaction diagonal must be positive".into()));
        }
        Ok(())
    }

    fn rhs(&self, x: &[f64; SPECIES]) -> [f64; SPECIES] {
        let mut dx = [0.0; SPECIES];
        for i in 0..SPECIES {
            let crowding: f64 = (0..SPECIES).map(|j| self.a[i][j] * x[j]).sum();
            dx[i] = self.r[i] * x[i] * (1.0 - crowding);
        }
        dx
    }
}

/// One classic fourth-order Runge-Kutta step of an autonomous system.
pub fn rk4_step<const N: usize>(f: impl Fn(&[f64; N]) -> [f64; N], y: &[f64; N], h: f64) -> [f64; N] {
    let shift = |base: &[f64; N], k: &[f64; N], s: f64| {
        let mut out = *base;
        for i in 0..N {
            out[i] += s * k[i];
        }
        out
    };
    let k1 = f(y);
    let k2 = f(&shift(y, &k1, h / 2.0));
    let k3 = f(&shift(y, &k2, h / 2.0));
    let k4 = f(&shift(y, &k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates from 0 to `t_end` and records the state at the `n_out` times
/// `t_end * (k + 1) / n_out`. Each output interval is split into equal steps
/// no longer than `dt`.
pub fn lv_trajectory(p: &LvParams, t_end: f64, dt: f64, n_out: usize) -> Result<Vec<[f64; SPECIES]>, SimError> {
    if !(t_end > 0.0) || !(dt > 0.0) || n_out == 0 {
        return Err(SimError::Params(format!("need t_end > 0, dt > 0, n_out > 0 (got {t_end}, {dt}, {n_out})")));
    }
    p.validate()?;
    let mut x = p.x0;
    let mut t = 0.0;
    let mut out = Vec::with_capacity(n_out);
    for k in 0..n_out {
        let target = t_end * (k + 1) as f64 / n_out as f64;
        let steps = ((target - t) / dt - 1e-9).ceil().max(1.0) as usize;
        let h = (target - t) / steps as f64;
        for s in 0..steps {
            x = rk4_step(|y| p.rhs(y), &x, h);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(SimError::Diverged { time: t + (s + 1) as f64 * h });
            }
        }
        t = target;
        out.push(x);
    }
    Ok(out)
}

/// Timeseries output `[n_out, 4]`.
pub fn lv_simulate(p: &LvParams, t_end: f64, dt: f64, n_out: usize) -> Result<SimulationOutput, SimError> {
    let traj = lv_trajectory(p, t_end, dt, n_out)?;
    let data = traj.iter().flatten().copied().collect();
    Ok(SimulationOutput {
        shape_tag: ShapeTag::Timeseries,
        dims: vec![n_out, SPECIES],
        data,
        meta: OutputMeta { params: p.to_vector(), seed: 0 },
    })
}

/// Integration settings of the Lotka-Volterra family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LvSettings {
    pub t_end: f64,
    pub dt: f64,
    pub n_out: usize,
    pub x0: [f64; SPECIES],
}

impl Default for LvSettings {
    fn default() -> Self {
        Self { t_end: 500.0, dt: 0.01, n_out: 200, x0: DEFAULT_X0 }
    }
}
