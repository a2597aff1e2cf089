use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::lp::LinearProgram;
use super::FbaError;

const TOY_NETWORK: &str = include_str!("../../../data/toy_network.json");

/// One reaction. Negative exchange flux means uptake into the cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reaction {
    pub id: String,
    pub subsystem: String,
    pub lower_bound: f64,
    pub upper_bound: f64,
    #[serde(default)]
    pub objective: f64,
    /// Small per-unit flux cost added to the solver objective so that the
    /// optimal flux vector is unique. Not part of the reported objective.
    #[serde(default)]
    pub cost: f64,
    /// Metabolite id to stoichiometric coefficient.
    pub stoichiometry: BTreeMap<String, f64>,
}

/// A constraint-based metabolic network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxNetwork {
    #[serde(default)]
    pub name: String,
    pub metabolites: Vec<String>,
    pub reactions: Vec<Reaction>,
}

/// Which side of a reaction's flux interval a parameter controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundSide {
    Lower,
    Upper,
}

/// Splits `"lb:EX_glc"` / `"ub:EX_glc"` into side and reaction id.
pub fn parse_bound_param(name: &str) -> Option<(BoundSide, &str)> {
    if let Some(id) = name.strip_prefix("lb:") {
        Some((BoundSide::Lower, id))
    } else {
        name.strip_prefix("ub:").map(|id| (BoundSide::Upper, id))
    }
}

impl FluxNetwork {
    /// The bundled 20-reaction, 12-metabolite example network.
    pub fn toy() -> Self {
        Self::from_json_str(TOY_NETWORK).expect("bundled network is valid")
    }

    pub fn from_json_str(text: &str) -> Result<Self, FbaError> {
        let net: Self = serde_json::from_str(text).map_err(|e| FbaError::Network(e.to_string()))?;
        net.validate()?;
        Ok(net)
    }

    pub fn load(path: &Path) -> Result<Self, FbaError> {
        let text = std::fs::read_to_string(path).map_err(|e| FbaError::Network(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<(), FbaError> {
        if self.reactions.is_empty() {
            return Err(FbaError::Network("no reactions".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for m in &self.metabolites {
            if !seen.insert(m.as_str()) {
                return Err(FbaError::Network(format!("duplicate metabolite {m}")));
            }
        }
        let mut ids = std::collections::HashSet::new();
        for r in &self.reactions {
            if !ids.insert(r.id.as_str()) {
                return Err(FbaError::Network(format!("duplicate reaction {}", r.id)));
            }
            if !(r.lower_bound <= r.upper_bound) || !r.lower_bound.is_finite() || !r.upper_bound.is_finite() {
                return Err(FbaError::Network(format!(
                    "reaction {} has bounds [{}, {}]",
                    r.id, r.lower_bound, r.upper_bound
                )));
            }
            if !r.objective.is_finite() || !r.cost.is_finite() || r.cost < 0.0 {
                return Err(FbaError::Network(format!("reaction {} has an invalid objective or cost", r.id)));
            }
            for (m, v) in &r.stoichiometry {
                if !seen.contains(m.as_str()) {
                    return Err(FbaError::Network(format!("reaction {} uses unknown metabolite {m}", r.id)));
                }
                if !v.is_finite() {
                    return Err(FbaError::Network(format!("reaction {} has a non-finite coefficient", r.id)));
                }
            }
        }
        if self.reactions.iter().all(|r| r.objective == 0.0) {
            return Err(FbaError::Network("no reaction carries an objective coefficient".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.reactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reactions.is_empty()
    }

    pub fn reaction_index(&self, id: &str) -> Option<usize> {
        self.reactions.iter().position(|r| r.id == id)
    }

    pub fn reaction_ids(&self) -> Vec<String> {
        self.reactions.iter().map(|r| r.id.clone()).collect()
    }

    /// Subsystem labels in order of first appearance.
    pub fn subsystems(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.reactions {
            if !out.contains(&r.subsystem) {
                out.push(r.subsystem.clone());
            }
        }
        out
    }

    /// Dense `metabolites x reactions` matrix.
    pub fn stoichiometry(&self) -> Vec<Vec<f64>> {
        let index: BTreeMap<&str, usize> =
            self.metabolites.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
        let mut s = vec![vec![0.0; self.reactions.len()]; self.metabolites.len()];
        for (j, r) in self.reactions.iter().enumerate() {
            for (m, v) in &r.stoichiometry {
                s[index[m.as_str()]][j] += v;
            }
        }
        s
    }

    pub fn objective(&self) -> Vec<f64> {
        self.reactions.iter().map(|r| r.objective).collect()
    }

    pub fn set_bounds(&mut self, index: usize, lower: f64, upper: f64) -> Result<(), FbaError> {
        let n = self.reactions.len();
        let r = self.reactions.get_mut(index).ok_or(FbaError::Index { index, count: n })?;
        if !(lower <= upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(FbaError::Network(format!("reaction {} cannot take bounds [{lower}, {upper}]", r.id)));
        }
        r.lower_bound = lower;
        r.upper_bound = upper;
        Ok(())
    }

    /// Applies a named bound parameter such as `"lb:EX_glc"`.
    pub fn set_bound_param(&mut self, name: &str, value: f64) -> Result<(), FbaError> {
        let (side, id) =
            parse_bound_param(name).ok_or_else(|| FbaError::Network(format!("{name} is not lb:ID or ub:ID")))?;
        let index = self.reaction_index(id).ok_or_else(|| FbaError::Network(format!("unknown reaction {id}")))?;
        let r = &self.reactions[index];
        match side {
            BoundSide::Lower => self.set_bounds(index, value, r.upper_bound),
            BoundSide::Upper => self.set_bounds(index, r.lower_bound, value),
        }
    }

    pub fn bound_param(&self, name: &str) -> Option<f64> {
        let (side, id) = parse_bound_param(name)?;
        let r = &self.reactions[self.reaction_index(id)?];
        Some(match side {
            BoundSide::Lower => r.lower_bound,
            BoundSide::Upper => r.upper_bound,
        })
    }

    /// The solver's program: `S v = 0`, flux bounds, and the objective minus
    /// the parsimony cost in the direction each reaction can run.
    pub fn to_lp(&self) -> LinearProgram {
        let objective = self
            .reactions
            .iter()
            .map(|r| {
                let direction = if r.lower_bound >= 0.0 {
                    1.0
                } else if r.upper_bound <= 0.0 {
                    -1.0
                } else {
                    0.0
                };
                r.objective - r.cost * direction
            })
            .collect();
        LinearProgram {
            a: self.stoichiometry(),
            b: vec![0.0; self.metabolites.len()],
            lower: self.reactions.iter().map(|r| r.lower_bound).collect(),
            upper: self.reactions.iter().map(|r| r.upper_bound).collect(),
            objective,
        }
    }
}
