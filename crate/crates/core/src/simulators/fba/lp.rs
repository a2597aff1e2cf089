//! Dense bounded-variable primal simplex with Bland's rule.
//!
//! Solves `max c·x` subject to `A x = b`, `lower <= x <= upper`. Bounds may be
//! infinite. Phase I starts from one signed artificial per row.

use thiserror::Error;

const TOL: f64 = 1e-9;
const TIE: f64 = 1e-12;
const FEASIBILITY: f64 = 1e-8;
const MAX_ITERATIONS: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("infeasible: residual {residual:.3e} after phase I")]
    Infeasible { residual: f64 },
    #[error("unbounded along variable {variable}")]
    Unbounded { variable: usize },
    #[error("invalid program: {0}")]
    Invalid(String),
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    /// Constraint rows, each of length `objective.len()`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub objective: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LinearProgram {
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Invalid(format!("{n} variables but {} / {} bounds", self.lower.len(), self.upper.len())));
        }
        if self.a.len() != self.b.len() {
            return Err(LpError::Invalid(format!("{} rows but {} right-hand sides", self.a.len(), self.b.len())));
        }
        if let Some(i) = self.a.iter().position(|row| row.len() != n) {
            return Err(LpError::Invalid(format!("row {i} has {} entries, expected {n}", self.a[i].len())));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] > self.upper[j] {
                return Err(LpError::Invalid(format!("variable {j} has bounds [{}, {}]", self.lower[j], self.upper[j])));
            }
            if self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(LpError::Invalid(format!("variable {j} has an empty bound interval")));
            }
        }
        let finite = self.a.iter().flatten().chain(&self.b).chain(&self.objective).all(|v| v.is_finite());
        if !finite {
            return Err(LpError::Invalid("non-finite coefficient".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    AtLower,
    AtUpper,
    FreeZero,
}

struct Tableau {
    m: usize,
    n: usize,
    /// `B^-1 [A | D]`, row-major `m x (n + m)`.
    t: Vec<f64>,
    /// `D b`, with `D` the artificial sign matrix.
    db: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    x: Vec<f64>,
    state: Vec<State>,
    basis: Vec<usize>,
    iterations: usize,
}

enum Outcome {
    Optimal,
    Unbounded(usize),
}

impl Tableau {
    fn width(&self) -> usize {
        self.n + self.m
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width() + j]
    }

    fn recompute_basic(&mut self) {
        let w = self.width();
        for i in 0..self.m {
            let row = &self.t[i * w..(i + 1) * w];
            let mut v: f64 = (0..self.m).map(|k| row[self.n + k] * self.db[k]).sum();
            for j in 0..w {
                if self.state[j] != State::Basic && self.x[j] != 0.0 {
                    v -= row[j] * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let w = self.width();
        let p = self.at(r, j);
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * w + j];
            if f == 0.0 {
                continue;
            }
            for (v, &pv) in self.t[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            self.t[i * w + j] = 0.0;
        }
    }

    fn run(&mut self, cost: &[f64]) -> Result<Outcome, LpError> {
        let w = self.width();
        loop {
            self.iterations += 1;
            if self.iterations > MAX_ITERATIONS {
                return Err(LpError::IterationLimit(MAX_ITERATIONS));
            }
            let cb: Vec<f64> = self.basis.iter().map(|&b| cost[b]).collect();
            let mut entering = None;
            for j in 0..w {
                if self.state[j] == State::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let d = cost[j] - (0..self.m).map(|i| cb[i] * self.at(i, j)).sum::<f64>();
                let dir = if d > TOL && self.state[j] != State::AtUpper {
                    1.0
                } else if d < -TOL && self.state[j] != State::AtLower {
                    -1.0
                } else {
                    continue;
                };
                entering = Some((j, dir));
                break;
            }
            let Some((j, dir)) = entering else { return Ok(Outcome::Optimal) };

            let mut best = self.upper[j] - self.lower[j];
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..self.m {
                let alpha = dir * self.at(i, j);
                let bv = self.basis[i];
                let (limit, to_lower) = if alpha > TOL && self.lower[bv].is_finite() {
                    ((self.x[bv] - self.lower[bv]).max(0.0) / alpha, true)
                } else if alpha < -TOL && self.upper[bv].is_finite() {
                    ((self.upper[bv] - self.x[bv]).max(0.0) / -alpha, false)
                } else {
                    continue;
                };
                let better = limit < best - TIE
                    || matches!(leave, Some((r, _)) if limit <= best + TIE && bv < self.basis[r]);
                if better {
                    best = limit;
                    leave = Some((i, to_lower));
                }
            }
            if best.is_infinite() {
                return Ok(Outcome::Unbounded(j));
            }
            match leave {
                None => {
                    self.x[j] = if dir > 0.0 { self.upper[j] } else { self.lower[j] };
                    self.state[j] = if dir > 0.0 { State::AtUpper } else { State::AtLower };
                }
                Some((r, to_lower)) => {
                    let bv = self.basis[r];
                    self.x[j] += dir * best;
                    if to_lower {
                        self.x[bv] = self.lower[bv];
                        self.state[bv] = State::AtLower;
                    } else {
                        self.x[bv] = self.upper[bv];
                        self.state[bv] = State::AtUpper;
                    }
                    self.pivot(r, j);
                    self.basis[r] = j;
                    self.state[j] = State::Basic;
                }
            }
            self.recompute_basic();
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    lp.validate()?;
    let m = lp.a.len();
    let n = lp.objective.len();
    let w = n + m;
    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    lower.extend(std::iter::repeat_n(0.0, m));
    upper.extend(std::iter::repeat_n(f64::INFINITY, m));
    let mut x = vec![0.0; w];
    let mut state = vec![State::Basic; w];
    for j in 0..n {
        (x[j], state[j]) = if lower[j].is_finite() {
            (lower[j], State::AtLower)
        } else if upper[j].is_finite() {
            (upper[j], State::AtUpper)
        } else {
            (0.0, State::FreeZero)
        };
    }
    let mut t = vec![0.0; m * w];
    let mut db = vec![0.0; m];
    for i in 0..m {
        let r = lp.b[i] - lp.a[i].iter().zip(&x[..n]).map(|(a, v)| a * v).sum::<f64>();
        let sign = if r >= 0.0 { 1.0 } else { -1.0 };
        for j in 0..n {
            t[i * w + j] = sign * lp.a[i][j];
        }
        t[i * w + n + i] = 1.0;
        db[i] = sign * lp.b[i];
    }
    let mut tab = Tableau { m, n, t, db, lower, upper, x, state, basis: (n..w).collect(), iterations: 0 };
    tab.recompute_basic();

    let phase1: Vec<f64> = (0..w).map(|j| if j < n { 0.0 } else { -1.0 }).collect();
    tab.run(&phase1)?;
    let residual: f64 = tab.x[n..].iter().sum();
    let scale = 1.0 + lp.b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    if residual > FEASIBILITY * scale {
        return Err(LpError::Infeasible { residual });
    }
    for k in n..w {
        tab.upper[k] = 0.0;
        if tab.state[k] != State::Basic {
            tab.x[k] = 0.0;
            tab.state[k] = State::AtLower;
        }
    }
    tab.recompute_basic();

    let phase2: Vec<f64> = (0..w).map(|j| if j < n { lp.objective[j] } else { 0.0 }).collect();
    if let Outcome::Unbounded(variable) = tab.run(&phase2)? {
        return Err(LpError::Unbounded { variable });
    }
    let x = tab.x[..n].to_vec();
    let objective = x.iter().zip(&lp.objective).map(|(v, c)| v * c).sum();
    Ok(LpSolution { x, objective, iterations: tab.iterations })
}
