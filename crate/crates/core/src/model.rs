//! Coupling-space and momentum-space data model.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flags::Flags;

/// The three dimensionless couplings `(lambda_x, lambda_y, h)` of the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingPoint {
    pub lambda_x: f64,
    pub lambda_y: f64,
    pub h: f64,
}

impl CouplingPoint {
    pub fn new(lambda_x: f64, lambda_y: f64, h: f64) -> Result<Self> {
        for (name, value) in [("lambda_x", lambda_x), ("lambda_y", lambda_y), ("h", h)] {
            if !value.is_finite() {
                return Err(Error::NonFinite { name, value });
            }
        }
        Ok(Self { lambda_x, lambda_y, h })
    }

    /// Chart coordinates in the order `(lambda_x, lambda_y, h)`.
    pub fn coords(&self) -> [f64; 3] {
        [self.lambda_x, self.lambda_y, self.h]
    }

    pub fn from_coords(c: [f64; 3]) -> Result<Self> {
        Self::new(c[0], c[1], c[2])
    }

    pub fn get(&self, axis: Axis) -> f64 {
        self.coords()[axis.index()]
    }

    /// Copy with one coordinate replaced.
    pub fn with(&self, axis: Axis, value: f64) -> Self {
        let mut c = self.coords();
        c[axis.index()] = value;
        Self { lambda_x: c[0], lambda_y: c[1], h: c[2] }
    }

    /// `self + t * direction` in chart coordinates.
    pub fn displaced(&self, direction: [f64; 3], t: f64) -> Self {
        let c = self.coords();
        Self {
            lambda_x: c[0] + t * direction[0],
            lambda_y: c[1] + t * direction[1],
            h: c[2] + t * direction[2],
        }
    }

    pub fn lambda_sum(&self) -> f64 {
        self.lambda_x + self.lambda_y
    }

    pub fn lambda_diff(&self) -> f64 {
        self.lambda_x - self.lambda_y
    }
}

impl fmt::Display for CouplingPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(lx={}, ly={}, h={})", self.lambda_x, self.lambda_y, self.h)
    }
}

/// One coordinate axis of coupling space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    LambdaX,
    LambdaY,
    H,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::LambdaX, Axis::LambdaY, Axis::H];

    pub fn index(self) -> usize {
        match self {
            Axis::LambdaX => 0,
            Axis::LambdaY => 1,
            Axis::H => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::LambdaX => "lx",
            Axis::LambdaY => "ly",
            Axis::H => "h",
        }
    }

    pub fn unit(self) -> [f64; 3] {
        let mut e = [0.0; 3];
        e[self.index()] = 1.0;
        e
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lx" | "lambda_x" | "x" => Ok(Axis::LambdaX),
            "ly" | "lambda_y" | "y" => Ok(Axis::LambdaY),
            "h" | "z" => Ok(Axis::H),
            other => Err(Error::invalid(format!("unknown coupling axis '{other}'"))),
        }
    }
}

/// Eigenspace of the parity `Q = prod sigma^z`, labelled by `q` with `Q = (-1)^q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParitySector {
    Even,
    Odd,
}

impl ParitySector {
    pub fn from_q(q: i64) -> Result<Self> {
        match q {
            0 => Ok(ParitySector::Even),
            1 => Ok(ParitySector::Odd),
            other => Err(Error::Sector(other)),
        }
    }

    pub fn q(self) -> usize {
        match self {
            ParitySector::Even => 0,
            ParitySector::Odd => 1,
        }
    }

    /// Eigenvalue of `Q` on this sector.
    pub fn parity(self) -> i32 {
        match self {
            ParitySector::Even => 1,
            ParitySector::Odd => -1,
        }
    }
}

impl fmt::Display for ParitySector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.q())
    }
}

/// A lattice momentum `k = pi * numerator / n` with `0 <= numerator <= n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Momentum {
    pub numerator: usize,
    pub k: f64,
}

/// Allowed momenta of one parity sector, split into `(k, -k)` pairs
/// represented by `k in (0, pi)` and the self-conjugate modes `k in {0, pi}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    n: usize,
    sector: ParitySector,
    paired: Vec<Momentum>,
    unpaired: Vec<Momentum>,
}

/// Builds the momentum grid `k = pi (2m + 1 - q) / n`, `m = 0..n-1`, folded
/// onto `[0, pi]`.
pub fn momentum_grid(n: usize, sector: ParitySector) -> Result<MomentumGrid> {
    if n % 2 != 0 {
        return Err(Error::Size { n, reason: "chain length must be even" });
    }
    if n < 4 {
        return Err(Error::Size { n, reason: "chain length must be at least 4" });
    }
    let q = sector.q();
    let mut paired = Vec::with_capacity(n / 2);
    let mut unpaired = Vec::new();
    // Numerators 2m+1-q run over one parity class of 0..2n; folding k -> 2pi - k
    // maps numerator j to 2n - j, so those in [0, n] cover every orbit once.
    for numerator in (0..=n).filter(|j| (j + q) % 2 == 1) {
        let momentum = Momentum { numerator, k: PI * numerator as f64 / n as f64 };
        if numerator == 0 || numerator == n {
            unpaired.push(momentum);
        } else {
            paired.push(momentum);
        }
    }
    Ok(MomentumGrid { n, sector, paired, unpaired })
}

impl MomentumGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sector(&self) -> ParitySector {
        self.sector
    }

    pub fn paired(&self) -> &[Momentum] {
        &self.paired
    }

    pub fn unpaired(&self) -> &[Momentum] {
        &self.unpaired
    }

    pub fn paired_k(&self) -> impl Iterator<Item = f64> + '_ {
        self.paired.iter().map(|m| m.k)
    }

    /// Index of the paired momentum `pi - k` for paired index `i`.
    pub fn reflected_index(&self, i: usize) -> usize {
        self.paired.len() - 1 - i
    }
}

/// Closed-form single-mode quantities at one paired momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub k: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub energy: f64,
    pub theta: f64,
    pub gapless: bool,
}

/// A self-conjugate mode (`k = 0` or `k = pi`), which carries no pairing
/// term; only its occupation in the sector ground state matters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnpairedMode {
    pub k: f64,
    pub epsilon: f64,
    pub occupied: bool,
}

/// Per-momentum solution of the chain at one coupling point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTable {
    pub grid: MomentumGrid,
    pub point: CouplingPoint,
    pub rows: Vec<ModeRow>,
    pub unpaired: Vec<UnpairedMode>,
    pub flags: Flags,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ks(ms: &[Momentum]) -> Vec<f64> {
        ms.iter().map(|m| m.k).collect()
    }

    #[test]
    fn small_grids() {
        let g = momentum_grid(4, ParitySector::Even).unwrap();
        assert_eq!(ks(g.paired()), vec![PI / 4.0, 3.0 * PI / 4.0]);
        assert!(g.unpaired().is_empty());

        let g = momentum_grid(4, ParitySector::Odd).unwrap();
        assert_eq!(ks(g.paired()), vec![PI / 2.0]);
        assert_eq!(ks(g.unpaired()), vec![0.0, PI]);
    }

    #[test]
    fn large_grid() {
        let g = momentum_grid(400, ParitySector::Even).unwrap();
        assert_eq!(g.paired().len(), 200);
        assert_eq!(g.paired()[0].k, PI / 400.0);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(momentum_grid(5, ParitySector::Even), Err(Error::Size { n: 5, .. })));
        assert!(matches!(momentum_grid(2, ParitySector::Odd), Err(Error::Size { n: 2, .. })));
        assert!(matches!(ParitySector::from_q(2), Err(Error::Sector(2))));
    }

    #[test]
    fn grid_shape_and_full_zone_cover() {
        for n in (4..=40).step_by(2) {
            for sector in [ParitySector::Even, ParitySector::Odd] {
                let g = momentum_grid(n, sector).unwrap();
                let expected_paired = if sector == ParitySector::Even { n / 2 } else { n / 2 - 1 };
                assert_eq!(g.paired().len(), expected_paired);
                assert!(g.paired().windows(2).all(|w| w[0].k < w[1].k));
                // k and -k for paired, plus unpaired, make up the whole zone.
                assert_eq!(2 * g.paired().len() + g.unpaired().len(), n);
                // Every numerator is congruent to 2m+1-q.
                for m in g.paired().iter().chain(g.unpaired()) {
                    assert_eq!((m.numerator + sector.q()) % 2, 1);
                }
            }
        }
    }

    #[test]
    fn construction_is_reproducible() {
        let a = momentum_grid(128, ParitySector::Odd).unwrap();
        let b = momentum_grid(128, ParitySector::Odd).unwrap();
        assert!(a.paired().iter().zip(b.paired()).all(|(x, y)| x.k.to_bits() == y.k.to_bits()));
    }

    #[test]
    fn coupling_point_rejects_nan() {
        assert!(CouplingPoint::new(f64::NAN, 0.0, 0.0).is_err());
        assert!(CouplingPoint::new(0.0, 0.0, f64::INFINITY).is_err());
    }
}
