//! Phase-space states for the four spaces of the Toda/Volterra diagram.
//!
//! | kind        | layout                       | dimension |
//! |-------------|------------------------------|-----------|
//! | `TodaQp`    | `q_1..q_N, p_1..p_N`         | `2N`      |
//! | `TodaAb`    | `a_1..a_{N-1}, b_1..b_N`     | `2N - 1`  |
//! | `VolterraA` | `a_1..a_m`, `m` odd          | `m`       |
//! | `VolterraQ` | `q_1..q_N`, `N` even         | `N`       |

use serde::{Deserialize, Serialize};

use crate::error::{LatticeError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    TodaQp,
    TodaAb,
    VolterraA,
    VolterraQ,
}

impl Kind {
    /// True when the kind carries `a` coordinates that must stay positive.
    pub fn has_positive_coords(self) -> bool {
        matches!(self, Kind::TodaAb | Kind::VolterraA)
    }

    /// Indices of the coordinates constrained to be positive, for a state of
    /// dimension `dim`.
    pub fn positive_range(self, dim: usize) -> std::ops::Range<usize> {
        match self {
            Kind::TodaAb => 0..dim / 2,
            Kind::VolterraA => 0..dim,
            Kind::TodaQp | Kind::VolterraQ => 0..0,
        }
    }

    pub fn check_dim(self, dim: usize) -> Result<()> {
        let ok = match self {
            Kind::TodaQp => dim >= 2 && dim.is_multiple_of(2),
            Kind::TodaAb => dim >= 1 && dim % 2 == 1,
            Kind::VolterraA => dim % 2 == 1,
            Kind::VolterraQ => dim >= 2 && dim.is_multiple_of(2),
        };
        if ok {
            Ok(())
        } else {
            Err(LatticeError::Domain(format!("{dim} coordinates is not a valid {self:?} layout")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawState")]
pub struct LatticeState {
    kind: Kind,
    coords: Vec<f64>,
}

#[derive(Deserialize)]
struct RawState {
    kind: Kind,
    coords: Vec<f64>,
}

impl TryFrom<RawState> for LatticeState {
    type Error = LatticeError;

    fn try_from(raw: RawState) -> Result<Self> {
        Self::new(raw.kind, raw.coords)
    }
}

impl LatticeState {
    /// Validates the layout and positivity invariants.
    pub fn new(kind: Kind, coords: Vec<f64>) -> Result<Self> {
        kind.check_dim(coords.len())?;
        if let Some(bad) = coords.iter().find(|x| !x.is_finite()) {
            return Err(LatticeError::Domain(format!("non-finite coordinate {bad}")));
        }
        for i in kind.positive_range(coords.len()) {
            if coords[i] <= 0.0 {
                return Err(LatticeError::Domain(format!(
                    "a_{} = {} must be positive",
                    i + 1,
                    coords[i]
                )));
            }
        }
        Ok(Self { kind, coords })
    }

    pub fn toda_qp(q: &[f64], p: &[f64]) -> Result<Self> {
        if q.len() != p.len() {
            return Err(LatticeError::Dimension { expected: q.len(), got: p.len() });
        }
        Self::new(Kind::TodaQp, q.iter().chain(p).copied().collect())
    }

    pub fn toda_ab(a: &[f64], b: &[f64]) -> Result<Self> {
        if a.len() + 1 != b.len() {
            return Err(LatticeError::Dimension { expected: b.len().saturating_sub(1), got: a.len() });
        }
        Self::new(Kind::TodaAb, a.iter().chain(b).copied().collect())
    }

    pub fn volterra_a(a: &[f64]) -> Result<Self> {
        Self::new(Kind::VolterraA, a.to_vec())
    }

    pub fn volterra_q(q: &[f64]) -> Result<Self> {
        Self::new(Kind::VolterraQ, q.to_vec())
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Number of lattice particles: `N` for both Toda kinds and `VolterraQ`,
    /// `m` for `VolterraA`.
    pub fn sites(&self) -> usize {
        match self.kind {
            Kind::TodaQp => self.coords.len() / 2,
            Kind::TodaAb => self.coords.len().div_ceil(2),
            Kind::VolterraA | Kind::VolterraQ => self.coords.len(),
        }
    }

    pub fn expect(&self, kind: Kind) -> Result<&Self> {
        if self.kind == kind {
            Ok(self)
        } else {
            Err(LatticeError::Kind { expected: kind, got: self.kind })
        }
    }

    /// `(a, b)` halves of a `TodaAb` state.
    pub fn ab(&self) -> Result<(&[f64], &[f64])> {
        self.expect(Kind::TodaAb)?;
        Ok(self.coords.split_at(self.coords.len() / 2))
    }

    /// `(q, p)` halves of a `TodaQp` state.
    pub fn qp(&self) -> Result<(&[f64], &[f64])> {
        self.expect(Kind::TodaQp)?;
        Ok(self.coords.split_at(self.coords.len() / 2))
    }
}

/// Splits a raw `TodaAb` coordinate slice into `(a, b)`.
pub(crate) fn split_ab(x: &[f64]) -> (&[f64], &[f64]) {
    x.split_at(x.len() / 2)
}

/// Splits a raw `TodaQp` coordinate slice into `(q, p)`.
pub(crate) fn split_qp(x: &[f64]) -> (&[f64], &[f64]) {
    x.split_at(x.len() / 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layouts() {
        let s = LatticeState::toda_ab(&[1.0, 2.0], &[0.0, 0.5, -1.0]).unwrap();
        assert_eq!(s.sites(), 3);
        assert_eq!(s.ab().unwrap().0, &[1.0, 2.0]);
        let s = LatticeState::toda_qp(&[0.0, 1.0], &[2.0, 3.0]).unwrap();
        assert_eq!(s.sites(), 2);
        assert_eq!(s.qp().unwrap().1, &[2.0, 3.0]);
    }

    #[test]
    fn rejects_invalid() {
        assert!(LatticeState::volterra_a(&[1.0, 1.0]).is_err());
        assert!(LatticeState::volterra_a(&[1.0, 0.0, 1.0]).is_err());
        assert!(LatticeState::volterra_q(&[0.0, 1.0, 2.0]).is_err());
        assert!(LatticeState::toda_ab(&[-1.0], &[0.0, 0.0]).is_err());
        assert!(LatticeState::toda_ab(&[1.0, 1.0], &[0.0, 0.0]).is_err());
        assert!(LatticeState::new(Kind::TodaQp, vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn kind_mismatch() {
        let s = LatticeState::volterra_a(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(
            s.ab().unwrap_err(),
            LatticeError::Kind { expected: Kind::TodaAb, got: Kind::VolterraA }
        );
    }

    #[test]
    fn serde_round_trip() {
        let s = LatticeState::volterra_q(&[0.25, -1.0]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"kind":"volterra_q","coords":[0.25,-1.0]}"#);
        assert_eq!(serde_json::from_str::<LatticeState>(&json).unwrap(), s);
        assert!(serde_json::from_str::<LatticeState>(r#"{"kind":"volterra_a","coords":[1.0,-1.0,1.0]}"#).is_err());
    }
}
