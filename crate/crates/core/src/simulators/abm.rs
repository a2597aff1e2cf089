//! Toy tumor-immune lattice model.
//!
//! Each step scans all sites in a freshly shuffled order four times:
//! death, kill, proliferation, recruitment. Neighbourhoods are Moore
//! (8 sites) without wrap-around.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{OutputMeta, ShapeTag, SimError, SimulationOutput};
use crate::rng::{rng_from_seed, SimRng};

pub const MIN_SIDE: usize = 8;
/// Output channels, in order.
pub const CHANNELS: [Cell; 3] = [Cell::Cancer, Cell::TCell, Cell::Macrophage];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Cell {
    Empty,
    Cancer,
    TCell,
    Macrophage,
}

/// Per-step event probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbmRates {
    pub cancer_proliferation: f64,
    pub cancer_death: f64,
    pub tcell_recruitment: f64,
    pub tcell_kill: f64,
    pub macrophage_recruitment: f64,
    pub macrophage_suppression: f64,
}

impl AbmRates {
    pub const NAMES: [&'static str; 6] = [
        "cancer_proliferation",
        "cancer_death",
        "tcell_recruitment",
        "tcell_kill",
        "macrophage_recruitment",
        "macrophage_suppression",
    ];

    pub fn zero() -> Self {
        Self::from_vector(&[0.0; 6]).expect("six values")
    }

    pub fn to_vector(&self) -> Vec<f64> {
        vec![
            self.cancer_proliferation,
            self.cancer_death,
            self.tcell_recruitment,
            self.tcell_kill,
            self.macrophage_recruitment,
            self.macrophage_suppression,
        ]
    }

    pub fn from_vector(v: &[f64]) -> Result<Self, SimError> {
        let [a, b, c, d, e, f] = v else {
            return Err(SimError::Params(format!("expected 6 rates, got {}", v.len())));
        };
        let rates = Self {
            cancer_proliferation: *a,
            cancer_death: *b,
            tcell_recruitment: *c,
            tcell_kill: *d,
            macrophage_recruitment: *e,
            macrophage_suppression: *f,
        };
        rates.validate()?;
        Ok(rates)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        for (name, v) in Self::NAMES.iter().zip(self.to_vector()) {
            if !(0.0..=1.0).contains(&v) {
                return Err(SimError::Params(format!("{name} = {v} is not a probability")));
            }
        }
        Ok(())
    }
}

impl Default for AbmRates {
    fn default() -> Self {
        Self {
            cancer_proliferation: 0.3,
            cancer_death: 0.02,
            tcell_recruitment: 0.5,
            tcell_kill: 0.5,
            macrophage_recruitment: 0.3,
            macrophage_suppression: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbmParams {
    pub side: usize,
    pub steps: usize,
    pub rates: AbmRates,
}

impl Default for AbmParams {
    fn default() -> Self {
        Self { side: 50, steps: 200, rates: AbmRates::default() }
    }
}

impl AbmParams {
    pub fn validate(&self) -> Result<(), SimError> {
        if self.side < MIN_SIDE {
            return Err(SimError::Params(format!("lattice side {} is below {MIN_SIDE}", self.side)));
        }
        self.rates.validate()
    }
}

fn chance(rng: &mut SimRng, p: f64) -> bool {
    if p <= 0.0 {
        false
    } else if p >= 1.0 {
        true
    } else {
        rng.random::<f64>() < p
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    side: usize,
    cells: Vec<Cell>,
}

impl Lattice {
    /// Any side length is accepted here, which lets small hand-built cases run.
    pub fn from_cells(side: usize, cells: Vec<Cell>) -> Result<Self, SimError> {
        if side == 0 || cells.len() != side * side {
            return Err(SimError::Shape(format!("{} cells do not fill a {side}x{side} lattice", cells.len())));
        }
        Ok(Self { side, cells })
    }

    /// Cancer disk of radius `side / 10` (at least 1) at the centre, plus
    /// `side^2 / 100` (at least 1) T cells and macrophages on random empty
    /// sites.
    pub fn seeded(side: usize, rng: &mut SimRng) -> Self {
        let mut cells = vec![Cell::Empty; side * side];
        let c = (side as f64 - 1.0) / 2.0;
        let radius = (side / 10).max(1) as f64;
        for i in 0..side {
            for j in 0..side {
                if (i as f64 - c).hypot(j as f64 - c) <= radius {
                    cells[i * side + j] = Cell::Cancer;
                }
            }
        }
        let immune = (side * side / 100).max(1);
        for kind in [Cell::TCell, Cell::Macrophage] {
            let mut placed = 0;
            while placed < immune {
                let s = rng.random_range(0..side * side);
                if cells[s] == Cell::Empty {
                    cells[s] = kind;
                    placed += 1;
                }
            }
        }
        Self { side, cells }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn get(&self, i: usize, j: usize) -> Cell {
        self.cells[i * self.side + j]
    }

    pub fn count(&self, kind: Cell) -> usize {
        self.cells.iter().filter(|&&c| c == kind).count()
    }

    /// Moore neighbours of site `s` in row-major order.
    fn neighbours(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        let (i, j) = ((s / self.side) as isize, (s % self.side) as isize);
        let n = self.side as isize;
        (-1..=1isize)
            .flat_map(move |di| (-1..=1isize).map(move |dj| (i + di, j + dj)))
            .filter(move |&(a, b)| (a, b) != (i, j) && a >= 0 && b >= 0 && a < n && b < n)
            .map(move |(a, b)| (a * n + b) as usize)
    }

    fn neighbours_of_kind(&self, s: usize, kind: Cell) -> Vec<usize> {
        self.neighbours(s).filter(|&t| self.cells[t] == kind).collect()
    }

    pub fn step(&mut self, rates: &AbmRates, rng: &mut SimRng) {
        let mut order: Vec<usize> = (0..self.cells.len()).collect();
        order.shuffle(rng);

        for &s in &order {
            if self.cells[s] == Cell::Cancer && chance(rng, rates.cancer_death) {
                self.cells[s] = Cell::Empty;
            }
        }

        for &s in &order {
            if self.cells[s] != Cell::TCell {
                continue;
            }
            let targets = self.neighbours_of_kind(s, Cell::Cancer);
            if targets.is_empty() {
                continue;
            }
            let suppressed = self.neighbours(s).any(|t| self.cells[t] == Cell::Macrophage);
            let p = if suppressed { rates.tcell_kill * (1.0 - rates.macrophage_suppression) } else { rates.tcell_kill };
            if chance(rng, p) {
                let victim = targets[rng.random_range(0..targets.len())];
                self.cells[victim] = Cell::Empty;
            }
        }

        let dividing: Vec<usize> = order.iter().copied().filter(|&s| self.cells[s] == Cell::Cancer).collect();
        for s in dividing {
            if self.cells[s] != Cell::Cancer || !chance(rng, rates.cancer_proliferation) {
                continue;
            }
            let free = self.neighbours_of_kind(s, Cell::Empty);
            if !free.is_empty() {
                let t = free[rng.random_range(0..free.len())];
                self.cells[t] = Cell::Cancer;
            }
        }

        let load = self.count(Cell::Cancer) as f64 / self.cells.len() as f64;
        let boundary: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&s| self.cells[s] == Cell::Empty && self.neighbours(s).any(|t| self.cells[t] == Cell::Cancer))
            .collect();
        for s in boundary {
            if self.cells[s] != Cell::Empty {
                continue;
            }
            if chance(rng, rates.tcell_recruitment * load) {
                self.cells[s] = Cell::TCell;
            } else if chance(rng, rates.macrophage_recruitment * load) {
                self.cells[s] = Cell::Macrophage;
            }
        }
    }

    /// One-hot `[side, side, 3]` grid over cancer, T cell, macrophage.
    pub fn to_output(&self, meta: OutputMeta) -> SimulationOutput {
        let mut data = vec![0.0; self.cells.len() * CHANNELS.len()];
        for (s, cell) in self.cells.iter().enumerate() {
            if let Some(ch) = CHANNELS.iter().position(|c| c == cell) {
                data[s * CHANNELS.len() + ch] = 1.0;
            }
        }
        SimulationOutput { shape_tag: ShapeTag::Grid, dims: vec![self.side, self.side, CHANNELS.len()], data, meta }
    }
}

/// Runs the model from its seeded initial configuration.
pub fn abm_run(p: &AbmParams, seed: u64) -> Result<Lattice, SimError> {
    p.validate()?;
    let mut rng = rng_from_seed(seed);
    let mut lattice = Lattice::seeded(p.side, &mut rng);
    for _ in 0..p.steps {
        lattice.step(&p.rates, &mut rng);
    }
    Ok(lattice)
}

pub fn abm_simulate(p: &AbmParams, seed: u64) -> Result<SimulationOutput, SimError> {
    let lattice = abm_run(p, seed)?;
    Ok(lattice.to_output(OutputMeta { params: p.rates.to_vector(), seed }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(rates: AbmRates) -> AbmParams {
        AbmParams { side: 16, steps: 25, rates }
    }

    #[test]
    fn zero_rates_keep_the_initial_grid() {
        let p = params(AbmRates::zero());
        let initial = Lattice::seeded(16, &mut rng_from_seed(4));
        assert_eq!(abm_run(&p, 4).unwrap(), initial);
    }

    #[test]
    fn deterministic_under_seed() {
        let p = params(AbmRates::default());
        assert_eq!(abm_simulate(&p, 9).unwrap(), abm_simulate(&p, 9).unwrap());
        assert_ne!(abm_simulate(&p, 9).unwrap().data, abm_simulate(&p, 10).unwrap().data);
    }

    #[test]
    fn hand_stepped_three_by_three() {
        let mut cells = vec![Cell::Empty; 9];
        cells[4] = Cell::Cancer;
        let mut rates = AbmRates::zero();
        rates.cancer_proliferation = 1.0;
        for seed in 0..20 {
            let mut lattice = Lattice::from_cells(3, cells.clone()).unwrap();
            lattice.step(&rates, &mut rng_from_seed(seed));
            assert_eq!(lattice.count(Cell::Cancer), 2);
            assert_eq!(lattice.count(Cell::Empty), 7);
            assert_eq!(lattice.cells()[4], Cell::Cancer);
        }
    }

    #[test]
    fn certain_kill_without_macrophages() {
        let mut cells = vec![Cell::Empty; 9];
        cells[0] = Cell::TCell;
        cells[4] = Cell::Cancer;
        let mut rates = AbmRates::zero();
        rates.tcell_kill = 1.0;
        let mut lattice = Lattice::from_cells(3, cells.clone()).unwrap();
        lattice.step(&rates, &mut rng_from_seed(0));
        assert_eq!(lattice.count(Cell::Cancer), 0);

        cells[8] = Cell::Macrophage;
        cells[1] = Cell::Macrophage;
        rates.macrophage_suppression = 1.0;
        let mut lattice = Lattice::from_cells(3, cells).unwrap();
        lattice.step(&rates, &mut rng_from_seed(0));
        assert_eq!(lattice.count(Cell::Cancer), 1);
    }

    #[test]
    fn output_is_one_hot_and_disjoint() {
        let out = abm_simulate(&params(AbmRates::default()), 2).unwrap();
        assert_eq!(out.dims, vec![16, 16, 3]);
        for cell in out.data.chunks(3) {
            assert!(cell.iter().sum::<f64>() <= 1.0);
        }
        let occupied: f64 = out.channel_totals().unwrap().iter().sum();
        assert!(occupied <= 256.0);
    }

    #[test]
    fn validation() {
        let mut p = params(AbmRates::default());
        p.side = 7;
        assert!(abm_simulate(&p, 0).is_err());
        assert!(AbmRates::from_vector(&[0.5, 0.5, 0.5, 0.5, 0.5, 1.5]).is_err());
        assert!(AbmRates::from_vector(&[0.5; 5]).is_err());
    }
}
