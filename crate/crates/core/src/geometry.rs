//! Molecules and electron configurations, in atomic units (Bohr).

use alloc::string::ToString;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::math;

const ELEMENTS: [&str; 18] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar",
];

/// Nuclear charge for an element symbol (H through Ar).
pub fn atomic_number(symbol: &str) -> Result<u32, GeometryError> {
    ELEMENTS
        .iter()
        .position(|e| e.eq_ignore_ascii_case(symbol))
        .map(|i| i as u32 + 1)
        .ok_or_else(|| GeometryError::UnknownElement(symbol.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nucleus {
    pub position: [f64; 3],
    pub charge: u32,
}

/// Which external potential the Hamiltonian uses.
///
/// `Harmonic` replaces the Coulomb attraction by `|r|^2 / 2` per electron and
/// exists for the analytic oscillator check only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    #[default]
    Coulomb,
    Harmonic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    /// `+1` for up, `-1` for down; this is the spin feature fed to the network.
    pub fn tag(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }
}

/// The fixed molecule: nuclei plus the spin split of the electrons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    nuclei: Vec<Nucleus>,
    n_up: usize,
    n_down: usize,
    #[serde(default)]
    potential: PotentialKind,
}

impl SystemSpec {
    pub fn new(
        nuclei: Vec<Nucleus>,
        n_up: usize,
        n_down: usize,
        potential: PotentialKind,
    ) -> Result<Self, GeometryError> {
        if nuclei.is_empty() {
            return Err(GeometryError::NoNuclei);
        }
        for (index, nuc) in nuclei.iter().enumerate() {
            if nuc.charge == 0 {
                return Err(GeometryError::BadCharge { index, charge: 0 });
            }
            if nuc.position.iter().any(|x| !x.is_finite()) {
                return Err(GeometryError::NonFinite(alloc::format!("nucleus {index}")));
            }
        }
        for first in 0..nuclei.len() {
            for second in first + 1..nuclei.len() {
                if nuclei[first].position == nuclei[second].position {
                    return Err(GeometryError::DuplicateNuclei { first, second });
                }
            }
        }
        if n_up + n_down == 0 {
            return Err(GeometryError::NoElectrons);
        }
        Ok(Self { nuclei, n_up, n_down, potential })
    }

    /// Neutral system with the aufbau split `n_up = ceil(N / 2)`.
    pub fn neutral(nuclei: Vec<Nucleus>) -> Result<Self, GeometryError> {
        let total: usize = nuclei.iter().map(|n| n.charge as usize).sum();
        let n_up = total.div_ceil(2);
        Self::new(nuclei, n_up, total - n_up, PotentialKind::Coulomb)
    }

    /// Single atom at the origin.
    pub fn atom(charge: u32) -> Result<Self, GeometryError> {
        Self::neutral(alloc::vec![Nucleus { position: [0.0; 3], charge }])
    }

    /// Four hydrogens on a circle of `radius`, forming a rectangle whose two
    /// short sides subtend `theta_deg` at the centre. `theta_deg = 90` is the
    /// square.
    pub fn h4_rectangle(theta_deg: f64, radius: f64) -> Result<Self, GeometryError> {
        let half = theta_deg.to_radians() / 2.0;
        let (s, c) = (math::sin(half), math::cos(half));
        let p = |x: f64, y: f64| Nucleus { position: [radius * x, radius * y, 0.0], charge: 1 };
        Self::neutral(alloc::vec![p(-s, -c), p(s, -c), p(-s, c), p(s, c)])
    }

    pub fn with_potential(mut self, potential: PotentialKind) -> Self {
        self.potential = potential;
        self
    }

    pub fn nuclei(&self) -> &[Nucleus] {
        &self.nuclei
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn n_down(&self) -> usize {
        self.n_down
    }

    pub fn n_electrons(&self) -> usize {
        self.n_up + self.n_down
    }

    pub fn potential(&self) -> PotentialKind {
        self.potential
    }

    pub fn total_charge(&self) -> u32 {
        self.nuclei.iter().map(|n| n.charge).sum()
    }

    pub fn spin(&self, electron: usize) -> Spin {
        if electron < self.n_up {
            Spin::Up
        } else {
            Spin::Down
        }
    }

    /// Spin tags in slot order: the first `n_up` are up.
    pub fn spins(&self) -> Vec<Spin> {
        (0..self.n_electrons()).map(|i| self.spin(i)).collect()
    }

    /// Wrap a flat `3N` coordinate vector as a configuration of this system.
    pub fn configuration(&self, coords: Vec<f64>) -> Result<ElectronConfiguration, GeometryError> {
        ElectronConfiguration::new(coords, self.spins())
    }
}

/// One point of `R^{3N}` together with the (run-constant) spin of each slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectronConfiguration {
    coords: Vec<f64>,
    spins: Vec<Spin>,
}

impl ElectronConfiguration {
    pub fn new(coords: Vec<f64>, spins: Vec<Spin>) -> Result<Self, GeometryError> {
        if coords.len() != 3 * spins.len() {
            return Err(GeometryError::CoordinateCount { expected: 3 * spins.len(), got: coords.len() });
        }
        if coords.iter().any(|x| !x.is_finite()) {
            return Err(GeometryError::NonFinite("electron configuration".to_string()));
        }
        Ok(Self { coords, spins })
    }

    pub fn n_electrons(&self) -> usize {
        self.spins.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub fn position(&self, i: usize) -> [f64; 3] {
        [self.coords[3 * i], self.coords[3 * i + 1], self.coords[3 * i + 2]]
    }

    fn check_index(&self, i: usize) -> Result<(), GeometryError> {
        if i >= self.n_electrons() {
            return Err(GeometryError::IndexOutOfRange { index: i, n: self.n_electrons() });
        }
        Ok(())
    }

    /// Swap the positions of electrons `i` and `j`; spins stay in place.
    pub fn transpose_electrons(&self, i: usize, j: usize) -> Result<Self, GeometryError> {
        self.check_index(i)?;
        self.check_index(j)?;
        let mut out = self.clone();
        for d in 0..3 {
            out.coords.swap(3 * i + d, 3 * j + d);
        }
        Ok(out)
    }

    /// Point `t` of the straight path from this configuration to the one with
    /// same-spin electrons `i` and `j` exchanged.
    pub fn exchange_path(&self, i: usize, j: usize, t: f64) -> Result<Self, GeometryError> {
        self.check_index(i)?;
        self.check_index(j)?;
        if self.spins[i] != self.spins[j] {
            return Err(GeometryError::MixedSpin { i, j });
        }
        let mut out = self.clone();
        for d in 0..3 {
            let a = self.coords[3 * i + d];
            let b = self.coords[3 * j + d];
            out.coords[3 * i + d] = (1.0 - t) * a + t * b;
            out.coords[3 * j + d] = (1.0 - t) * b + t * a;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn li() -> SystemSpec {
        SystemSpec::atom(3).unwrap()
    }

    #[test]
    fn neutral_split_rounds_up() {
        let s = li();
        assert_eq!((s.n_up(), s.n_down()), (2, 1));
        let h = SystemSpec::atom(1).unwrap();
        assert_eq!((h.n_up(), h.n_down()), (1, 0));
        assert_eq!(s.spins(), vec![Spin::Up, Spin::Up, Spin::Down]);
    }

    #[test]
    fn rejects_bad_systems() {
        assert_eq!(SystemSpec::new(vec![], 1, 0, PotentialKind::Coulomb), Err(GeometryError::NoNuclei));
        let n = Nucleus { position: [0.0; 3], charge: 1 };
        assert!(matches!(
            SystemSpec::new(vec![n, n], 1, 1, PotentialKind::Coulomb),
            Err(GeometryError::DuplicateNuclei { first: 0, second: 1 })
        ));
        let z = Nucleus { position: [0.0; 3], charge: 0 };
        assert!(matches!(SystemSpec::neutral(vec![z]), Err(GeometryError::BadCharge { .. })));
        assert_eq!(SystemSpec::new(vec![n], 0, 0, PotentialKind::Coulomb), Err(GeometryError::NoElectrons));
    }

    #[test]
    fn h4_square_sits_on_circle() {
        let s = SystemSpec::h4_rectangle(90.0, 2.0).unwrap();
        assert_eq!(s.nuclei().len(), 4);
        assert_eq!((s.n_up(), s.n_down()), (2, 2));
        for n in s.nuclei() {
            let r = (n.position[0].powi(2) + n.position[1].powi(2)).sqrt();
            assert!((r - 2.0).abs() < 1e-12);
        }
        let a = s.nuclei()[0].position;
        let b = s.nuclei()[1].position;
        let c = s.nuclei()[2].position;
        // square: bottom side equals left side
        let bottom = (b[0] - a[0]).hypot(b[1] - a[1]);
        let left = (c[0] - a[0]).hypot(c[1] - a[1]);
        assert!((bottom - left).abs() < 1e-12);
    }

    #[test]
    fn element_lookup() {
        assert_eq!(atomic_number("Li"), Ok(3));
        assert_eq!(atomic_number("be"), Ok(4));
        assert!(atomic_number("Xx").is_err());
    }

    #[test]
    fn transpose_examples() {
        let s = SystemSpec::new(vec![Nucleus { position: [0.0; 3], charge: 2 }], 2, 0, PotentialKind::Coulomb)
            .unwrap();
        let c = s.configuration(vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(c.transpose_electrons(0, 0).unwrap(), c);
        let t = c.transpose_electrons(0, 1).unwrap();
        assert_eq!(t.coords(), &[4.0, 5.0, 6.0, 1.0, 2.0, 3.0]);
        assert_eq!(t.spins(), c.spins());
        assert!(c.transpose_electrons(0, 2).is_err());
    }

    #[test]
    fn exchange_path_endpoints_and_midpoint() {
        let c = li().configuration(vec![0.1, -0.4, 0.9, 1.3, 0.2, -0.7, 0.5, 0.5, 0.5]).unwrap();
        assert_eq!(c.exchange_path(0, 1, 0.0).unwrap(), c);
        assert_eq!(c.exchange_path(0, 1, 1.0).unwrap(), c.transpose_electrons(0, 1).unwrap());
        let mid = c.exchange_path(0, 1, 0.5).unwrap();
        assert_eq!(mid.position(0), mid.position(1));
        assert!(matches!(c.exchange_path(0, 2, 0.5), Err(GeometryError::MixedSpin { .. })));
        assert!(c.exchange_path(0, 7, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn transpose_is_involution(coords in proptest::collection::vec(-5.0f64..5.0, 9), i in 0usize..3, j in 0usize..3) {
            let c = li().configuration(coords).unwrap();
            let back = c.transpose_electrons(i, j).unwrap().transpose_electrons(i, j).unwrap();
            prop_assert_eq!(back, c);
        }

        #[test]
        fn exchange_path_symmetric_in_indices(coords in proptest::collection::vec(-5.0f64..5.0, 9), t in 0.0f64..1.0) {
            let c = li().configuration(coords).unwrap();
            prop_assert_eq!(c.exchange_path(0, 1, t).unwrap(), c.exchange_path(1, 0, t).unwrap());
        }
    }
}
