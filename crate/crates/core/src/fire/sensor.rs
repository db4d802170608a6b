use super::field::FireField;
use crate::scalar::Scalar;
use crate::sets::{Bitmask, CellState};

/// Downward thermal camera: reports which nodes burn inside a square window
/// of half-width `range` around the vehicle, every `period` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalSensor<S> {
    pub range: S,
    pub period: S,
}

impl<S: Scalar> ThermalSensor<S> {
    pub fn new(range: S, period: S) -> Self {
        Self { range, period }
    }

    pub fn in_range(&self, vehicle: [S; 2], p: [S; 2]) -> bool {
        (p[0] - vehicle[0]).abs() <= self.range && (p[1] - vehicle[1]).abs() <= self.range
    }

    pub fn sense(&self, field: &FireField<S>, vehicle: [S; 2], t: S) -> Bitmask<S> {
        let g = *field.grid();
        let phi = field.phi();
        let cells = (0..g.len())
            .map(|k| {
                if !self.in_range(vehicle, g.node_of(k)) {
                    CellState::Unknown
                } else if phi[k] <= S::zero() {
                    CellState::Burning
                } else {
                    CellState::Free
                }
            })
            .collect();
        Bitmask::new(g, cells, t).expect("mask matches field grid")
    }
}
