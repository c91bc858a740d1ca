use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::grid::csv_err;
use crate::error::{Error, Result};

/// A finite positive measure on the half line made of point masses, kept
/// sorted by position.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AtomicMeasure {
    atoms: Vec<(f64, f64)>,
}

impl AtomicMeasure {
    pub fn new(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(x, m) in &atoms {
            if !(x.is_finite() && x >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "atom position {x} must be >= 0"
                )));
            }
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "atom mass {m} must be >= 0"
                )));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { atoms })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn dirac(x: f64, mass: f64) -> Result<Self> {
        Self::new(vec![(x, mass)])
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Sum of the masses in position order.
    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// `int phi d mu`.
    pub fn integrate(&self, phi: impl Fn(f64) -> f64) -> f64 {
        self.atoms.iter().map(|&(x, m)| m * phi(x)).sum()
    }

    /// Largest minus smallest position; zero for fewer than two atoms.
    pub fn diameter(&self) -> f64 {
        match (self.atoms.first(), self.atoms.last()) {
            (Some(a), Some(b)) => b.0 - a.0,
            _ => 0.0,
        }
    }

    /// Concatenates two measures without merging coincident atoms.
    pub fn union(&self, other: &Self) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.extend_from_slice(&other.atoms);
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { atoms }
    }

    /// Merges runs of atoms lying within `eps` of the first atom of the run
    /// into one atom at their mass-weighted mean position. Runs with zero
    /// mass collapse to their first position. Zero-mass atoms are dropped.
    pub fn merge(&self, eps: f64) -> Self {
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(self.atoms.len());
        let mut k = 0;
        while k < self.atoms.len() {
            let start = self.atoms[k].0;
            let mut mass = 0.0;
            let mut moment = 0.0;
            let mut end = k;
            while end < self.atoms.len() && self.atoms[end].0 - start <= eps {
                mass += self.atoms[end].1;
                moment += self.atoms[end].1 * self.atoms[end].0;
                end += 1;
            }
            if mass > 0.0 {
                let x = if end - k == 1 {
                    start
                } else {
                    (moment / mass).clamp(start, self.atoms[end - 1].0)
                };
                out.push((x, mass));
            }
            k = end;
        }
        Self { atoms: out }
    }

    /// CSV with header `position,mass`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["position", "mass"]).map_err(csv_err)?;
        for (x, m) in &self.atoms {
            w.write_record([x.to_string(), m.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut atoms = Vec::new();
        for rec in r.deserialize::<(f64, f64)>() {
            atoms.push(rec.map_err(csv_err)?);
        }
        Self::new(atoms)
    }
}
