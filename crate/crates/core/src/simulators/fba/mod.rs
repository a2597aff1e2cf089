//! Flux balance analysis on small constraint-based networks.

pub mod lp;
mod network;

use thiserror::Error;

pub use network::{parse_bound_param, BoundSide, FluxNetwork, Reaction};

use self::lp::{LinearProgram, LpError};
use super::{OutputMeta, ShapeTag, SimulationOutput};

/// Values within this distance of a bound are placed on it.
const SNAP: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FbaError {
    #[error("flux problem is infeasible (residual {residual:.3e})")]
    Infeasible { residual: f64 },
    #[error("flux problem is unbounded along reaction {reaction}")]
    Unbounded { reaction: String },
    #[error("network: {0}")]
    Network(String),
    #[error("reaction index {index} out of range for {count} reactions")]
    Index { index: usize, count: usize },
    #[error("solver: {0}")]
    Solver(LpError),
}

/// Optimal fluxes, one per reaction, and the value of `c·v`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxSolution {
    pub fluxes: Vec<f64>,
    pub objective: f64,
}

impl FluxSolution {
    pub fn to_output(&self, params: Vec<f64>, seed: u64) -> SimulationOutput {
        SimulationOutput {
            shape_tag: ShapeTag::Vector,
            dims: vec![self.fluxes.len()],
            data: self.fluxes.clone(),
            meta: OutputMeta { params, seed },
        }
    }
}

pub fn fba_solve(net: &FluxNetwork) -> Result<FluxSolution, FbaError> {
    net.validate()?;
    let program = net.to_lp();
    let solution = lp::solve(&program).map_err(|e| match e {
        LpError::Infeasible { residual } => FbaError::Infeasible { residual },
        LpError::Unbounded { variable } => FbaError::Unbounded { reaction: net.reactions[variable].id.clone() },
        other => FbaError::Solver(other),
    })?;
    let fluxes = canonicalize(&program, solution.x);
    let objective = fluxes.iter().zip(net.objective()).map(|(v, c)| v * c).sum();
    Ok(FluxSolution { fluxes, objective })
}

/// Solves a copy of `net` with reaction `index` fixed at zero flux.
pub fn fba_knockout(net: &FluxNetwork, index: usize) -> Result<FluxSolution, FbaError> {
    let mut copy = net.clone();
    copy.set_bounds(index, 0.0, 0.0)?;
    fba_solve(&copy)
}

/// Snaps near-bound fluxes onto their bounds and recomputes the rest from
/// `S v = 0` by a fixed elimination order. The same optimal vertex then
/// yields the same bits no matter which pivot path reached it.
fn canonicalize(program: &LinearProgram, mut x: Vec<f64>) -> Vec<f64> {
    let n = x.len();
    let mut free = Vec::new();
    for j in 0..n {
        if (x[j] - program.lower[j]).abs() <= SNAP {
            x[j] = program.lower[j];
        } else if (x[j] - program.upper[j]).abs() <= SNAP {
            x[j] = program.upper[j];
        } else {
            free.push(j);
        }
    }
    if !free.is_empty() {
        if let Some(values) = solve_free(program, &x, &free) {
            for (&j, v) in free.iter().zip(values) {
                x[j] = v;
            }
        }
    }
    for v in &mut x {
        if *v == 0.0 {
            *v = 0.0;
        }
    }
    x
}

/// Gaussian elimination with partial pivoting on `A_F v_F = b - A_N v_N`.
/// Returns `None` when the free columns are not independent.
fn solve_free(program: &LinearProgram, x: &[f64], free: &[usize]) -> Option<Vec<f64>> {
    let m = program.a.len();
    let k = free.len();
    let mut rows: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let a = &program.a[i];
            let mut rhs = program.b[i];
            for (j, &v) in x.iter().enumerate() {
                if !free.contains(&j) {
                    rhs -= a[j] * v;
                }
            }
            let mut row: Vec<f64> = free.iter().map(|&j| a[j]).collect();
            row.push(rhs);
            row
        })
        .collect();
    let mut pivot_rows = Vec::with_capacity(k);
    let mut next = 0;
    for c in 0..k {
        let (best, mag) = (next..m)
            .map(|r| (r, rows[r][c].abs()))
            .fold((usize::MAX, 0.0), |acc, (r, v)| if v > acc.1 { (r, v) } else { acc });
        if mag < 1e-12 {
            return None;
        }
        rows.swap(next, best);
        let pivot = rows[next].clone();
        for r in 0..m {
            if r != next {
                let f = rows[r][c] / pivot[c];
                if f != 0.0 {
                    for (v, p) in rows[r].iter_mut().zip(&pivot) {
                        *v -= f * p;
                    }
                }
            }
        }
        pivot_rows.push(next);
        next += 1;
    }
    if rows[next..].iter().any(|r| r[k].abs() > 1e-7) {
        return None;
    }
    Some((0..k).map(|c| rows[pivot_rows[c]][k] / rows[pivot_rows[c]][c]).collect())
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;

    fn reaction(id: &str, lb: f64, ub: f64, obj: f64, st: &[(&str, f64)]) -> Reaction {
        Reaction {
            id: id.into(),
            subsystem: "s".into(),
            lower_bound: lb,
            upper_bound: ub,
            objective: obj,
            cost: 0.0,
            stoichiometry: st.iter().map(|(m, v)| (m.to_string(), *v)).collect::<BTreeMap<_, _>>(),
        }
    }

    #[test]
    fn single_reaction() {
        let net = FluxNetwork { name: String::new(), metabolites: vec![], reactions: vec![reaction("R", 0.0, 10.0, 1.0, &[])] };
        assert_eq!(fba_solve(&net).unwrap().fluxes, vec![10.0]);
    }

    fn chain() -> FluxNetwork {
        FluxNetwork {
            name: "chain".into(),
            metabolites: vec!["a".into(), "b".into()],
            reactions: vec![
                reaction("EX_a", -5.0, 0.0, 0.0, &[("a", -1.0)]),
                reaction("R1", 0.0, 1000.0, 0.0, &[("a", -1.0), ("b", 1.0)]),
                reaction("EX_b", 0.0, 1000.0, 1.0, &[("b", -1.0)]),
            ],
        }
    }

    #[test]
    fn uptake_chain_throughput() {
        let s = fba_solve(&chain()).unwrap();
        assert_eq!(s.fluxes, vec![-5.0, 5.0, 5.0]);
        assert_eq!(s.objective, 5.0);
    }

    #[test]
    fn knocking_out_the_objective() {
        let s = fba_knockout(&chain(), 2).unwrap();
        assert_eq!(s.objective, 0.0);
        assert!(matches!(fba_knockout(&chain(), 3), Err(FbaError::Index { .. })));
    }

    #[test]
    fn forced_flux_can_be_infeasible() {
        let mut net = chain();
        net.set_bounds(2, 1.0, 1000.0).unwrap();
        net.set_bounds(0, 0.0, 0.0).unwrap();
        assert!(matches!(fba_solve(&net), Err(FbaError::Infeasible { .. })));
    }

    #[test]
    fn toy_network_is_feasible_and_balanced() {
        let net = FluxNetwork::toy();
        assert_eq!(net.len(), 20);
        assert_eq!(net.metabolites.len(), 12);
        assert_eq!(net.subsystems().len(), 4);
        let s = fba_solve(&net).unwrap();
        assert!(s.objective > 0.0);
        for row in net.stoichiometry() {
            let r: f64 = row.iter().zip(&s.fluxes).map(|(a, v)| a * v).sum();
            assert!(r.abs() <= 1e-8, "{r}");
        }
        for (r, v) in net.reactions.iter().zip(&s.fluxes) {
            assert!(*v >= r.lower_bound - 1e-10 && *v <= r.upper_bound + 1e-10);
        }
    }

    #[test]
    fn bound_params() {
        let mut net = chain();
        net.set_bound_param("lb:EX_a", -2.0).unwrap();
        assert_eq!(net.bound_param("lb:EX_a"), Some(-2.0));
        assert!(net.set_bound_param("lb:EX_a", 1.0).is_err());
        assert!(net.set_bound_param("xx:EX_a", 1.0).is_err());
        assert!(net.set_bound_param("ub:nope", 1.0).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let net = FluxNetwork::toy();
        let text = serde_json::to_string(&net).unwrap();
        assert_eq!(FluxNetwork::from_json_str(&text).unwrap(), net);
        let mut bad = chain();
        bad.reactions[1].stoichiometry.insert("zzz".into(), 1.0);
        assert!(bad.validate().is_err());
        let mut flat = chain();
        flat.reactions[2].objective = 0.0;
        assert!(flat.validate().is_err());
    }
}
