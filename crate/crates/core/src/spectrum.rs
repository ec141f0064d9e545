//! Closed-form single-mode quantities, the gap, group velocities and the
//! analytic criticality classifier.
//!
//! After the Jordan-Wigner and Fourier transforms every pair `(k, -k)` with
//! `0 < k < pi` decouples into a two-level problem with diagonal weight
//! `epsilon_k` and pairing amplitude `delta_k`; the Bogoliubov rotation by
//! `theta_k` diagonalises it with quasiparticle energy
//! `Delta_k = sqrt(epsilon_k^2 + delta_k^2)`.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::flags::{Flagged, Flags};
use crate::model::{CouplingPoint, ModeRow, ModeTable, MomentumGrid, ParitySector, UnpairedMode};
use crate::optimize::scan_minimum;

/// Quasiparticle energies at or below this are treated as gapless modes.
pub const GAPLESS_TOL: f64 = 1e-12;

/// Energy splitting (in units of the Hamiltonian) below which two sector
/// ground-state candidates are considered degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

/// Modes with `Delta_k` below this are excluded from velocity maximisation;
/// closer to a node the ratio `(eps eps' + delta delta') / Delta` loses digits.
const VELOCITY_EXCLUSION: f64 = 1e-8;

/// Golden-section bracket width used by the extremum searches.
const K_TOL: f64 = 1e-12;

/// Number of sampled local extrema refined per search.
const MAX_REFINEMENTS: usize = 8;

pub fn epsilon(k: f64, p: &CouplingPoint) -> f64 {
    (2.0 * k).cos() - p.lambda_sum() * k.cos() - p.h
}

pub fn delta_coefficient(k: f64, p: &CouplingPoint) -> f64 {
    (2.0 * k).sin() - p.lambda_diff() * k.sin()
}

fn epsilon_dk(k: f64, p: &CouplingPoint) -> f64 {
    -2.0 * (2.0 * k).sin() + p.lambda_sum() * k.sin()
}

fn delta_dk(k: f64, p: &CouplingPoint) -> f64 {
    2.0 * (2.0 * k).cos() - p.lambda_diff() * k.cos()
}

pub fn quasiparticle_energy(k: f64, p: &CouplingPoint) -> f64 {
    epsilon(k, p).hypot(delta_coefficient(k, p))
}

fn angle_from(eps: f64, delta: f64) -> Flagged<f64> {
    if eps.hypot(delta) <= GAPLESS_TOL {
        return Flagged::new(0.0, Flags::GAPLESS);
    }
    let theta = (-delta).atan2(eps);
    // atan2 returns -pi for (-0.0, negative); keep the half-open range (-pi, pi].
    Flagged::clean(if theta <= -PI { theta + 2.0 * PI } else { theta })
}

/// Bogoliubov angle on the ground-state branch: the unique `theta` with
/// `eps sin(theta) + delta cos(theta) = 0` and
/// `eps cos(theta) - delta sin(theta) = Delta >= 0`.
pub fn bogoliubov_angle(k: f64, p: &CouplingPoint) -> Flagged<f64> {
    angle_from(epsilon(k, p), delta_coefficient(k, p))
}

pub fn mode_row(k: f64, p: &CouplingPoint) -> ModeRow {
    let eps = epsilon(k, p);
    let delta = delta_coefficient(k, p);
    let theta = angle_from(eps, delta);
    ModeRow {
        k,
        epsilon: eps,
        delta,
        energy: eps.hypot(delta),
        theta: theta.value,
        gapless: !theta.is_clean(),
    }
}

/// Occupations of the self-conjugate modes `k = 0, pi` in the sector ground
/// state, in grid order.
///
/// The even sector has none. In the odd sector the fermion number is odd and
/// paired modes contribute an even count, so exactly one of `k = 0`, `k = pi`
/// is filled. When the energetically preferred filling has the wrong parity,
/// the cheaper of flipping one self-conjugate mode or creating one
/// quasiparticle wins; the latter is two-fold degenerate (`k` and `-k`) and is
/// flagged.
pub fn unpaired_occupations(grid: &MomentumGrid, p: &CouplingPoint) -> Flagged<Vec<bool>> {
    unpaired_ground(grid, p).map(|(occ, _)| occ)
}

fn unpaired_ground(grid: &MomentumGrid, p: &CouplingPoint) -> Flagged<(Vec<bool>, f64)> {
    if grid.sector() == ParitySector::Even {
        return Flagged::clean((Vec::new(), 0.0));
    }
    let eps: Vec<f64> = grid.unpaired().iter().map(|m| epsilon(m.k, p)).collect();
    debug_assert_eq!(eps.len(), 2);
    let odd = [(true, false), (false, true)].map(|(a, b)| {
        let energy = 2.0 * eps[0] * f64::from(u8::from(a)) + 2.0 * eps[1] * f64::from(u8::from(b));
        (vec![a, b], energy)
    });
    let (best, other) = if odd[0].1 <= odd[1].1 { (&odd[0], &odd[1]) } else { (&odd[1], &odd[0]) };

    let min_pair_gap = grid.paired_k().map(|k| quasiparticle_energy(k, p)).fold(f64::INFINITY, f64::min);
    let single_quasiparticle = 2.0 * min_pair_gap + (2.0 * (eps[0] + eps[1])).min(0.0);

    let mut flags = Flags::empty();
    if other.1 - best.1 < DEGENERACY_TOL || single_quasiparticle - best.1 < DEGENERACY_TOL {
        flags |= Flags::DEGENERATE;
    }
    let energy = best.1.min(single_quasiparticle);
    Flagged::new((best.0.clone(), energy), flags)
}

/// Ground energy of the sector from the free-fermion solution, including the
/// constant `h N` left over from the transverse field.
pub fn free_fermion_ground_energy(grid: &MomentumGrid, p: &CouplingPoint) -> Flagged<f64> {
    let mut flags = Flags::empty();
    let mut energy = p.h * grid.n() as f64;
    for k in grid.paired_k() {
        let row = mode_row(k, p);
        if row.gapless {
            flags |= Flags::GAPLESS;
        }
        energy += 2.0 * (row.epsilon - row.energy);
    }
    let unpaired = unpaired_ground(grid, p);
    flags |= unpaired.flags;
    Flagged::new(energy + unpaired.value.1, flags)
}

pub fn mode_table(grid: &MomentumGrid, p: &CouplingPoint) -> ModeTable {
    let rows: Vec<ModeRow> = grid.paired_k().map(|k| mode_row(k, p)).collect();
    let occupations = unpaired_occupations(grid, p);
    let mut flags = occupations.flags;
    if rows.iter().any(|r| r.gapless) {
        flags |= Flags::GAPLESS;
    }
    let unpaired = grid
        .unpaired()
        .iter()
        .zip(&occupations.value)
        .map(|(m, &occupied)| UnpairedMode { k: m.k, epsilon: epsilon(m.k, p), occupied })
        .collect();
    ModeTable { grid: grid.clone(), point: *p, rows, unpaired, flags }
}

/// Momentum and value of `min_k Delta_k` over the continuous zone `[0, pi]`.
pub fn gap_minimum(p: &CouplingPoint, resolution: usize) -> (f64, f64) {
    scan_minimum(|k| quasiparticle_energy(k, p), 0.0, PI, resolution.max(3), MAX_REFINEMENTS, K_TOL)
}

/// `min_k Delta_k` over `k in [0, pi]` in the thermodynamic limit.
pub fn gap(p: &CouplingPoint, resolution: usize) -> f64 {
    gap_minimum(p, resolution).1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum CriticalSurface {
    /// `h = -(lambda_x + lambda_y) + 1`: `epsilon_0 = 0`.
    PlaneMinus,
    /// `h = (lambda_x + lambda_y) + 1`: `epsilon_pi = 0`.
    PlanePlus,
    /// `h = lambda_y^2 - lambda_x lambda_y - 1` with `|lambda_x - lambda_y| <= 2`.
    Parabola,
    /// `(lambda_x, lambda_y) = s ((h - 3) / 2, (h + 1) / 2)`, `s = +-1`.
    MulticriticalLine,
}

impl CriticalSurface {
    pub fn name(self) -> &'static str {
        match self {
            CriticalSurface::PlaneMinus => "plane_minus",
            CriticalSurface::PlanePlus => "plane_plus",
            CriticalSurface::Parabola => "parabola",
            CriticalSurface::MulticriticalLine => "multicritical",
        }
    }
}

impl fmt::Display for CriticalSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifyOptions {
    /// Tolerance on the closed-form surface relations.
    pub tol: f64,
    /// Gap below which a point is reported gapless.
    pub gap_tol: f64,
    pub resolution: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self { tol: 1e-9, gap_tol: 1e-6, resolution: 4096 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub surfaces: Vec<CriticalSurface>,
    pub gap_estimate: f64,
    pub is_gapless: bool,
}

/// Critical surfaces containing `p` (within `tol`), in declaration order.
pub fn critical_surfaces(p: &CouplingPoint, tol: f64) -> Vec<CriticalSurface> {
    let s = p.lambda_sum();
    let d = p.lambda_diff();
    let mut out = Vec::new();
    if (p.h - (1.0 - s)).abs() <= tol {
        out.push(CriticalSurface::PlaneMinus);
    }
    if (p.h - (1.0 + s)).abs() <= tol {
        out.push(CriticalSurface::PlanePlus);
    }
    let parabola = p.lambda_y * p.lambda_y - p.lambda_x * p.lambda_y - 1.0;
    if (p.h - parabola).abs() <= tol && d.abs() <= 2.0 + tol {
        out.push(CriticalSurface::Parabola);
    }
    let on_line = |sign: f64| {
        (p.lambda_x - sign * (p.h - 3.0) / 2.0).abs() <= tol && (p.lambda_y - sign * (p.h + 1.0) / 2.0).abs() <= tol
    };
    if on_line(1.0) || on_line(-1.0) {
        out.push(CriticalSurface::MulticriticalLine);
    }
    out
}

pub fn classify(p: &CouplingPoint, tol: f64) -> CriticalityReport {
    classify_with(p, &ClassifyOptions { tol, ..ClassifyOptions::default() })
}

pub fn classify_with(p: &CouplingPoint, opts: &ClassifyOptions) -> CriticalityReport {
    let gap_estimate = gap(p, opts.resolution);
    CriticalityReport {
        surfaces: critical_surfaces(p, opts.tol),
        gap_estimate,
        is_gapless: gap_estimate <= opts.gap_tol,
    }
}

fn velocity_unchecked(k: f64, p: &CouplingPoint) -> (f64, f64) {
    let eps = epsilon(k, p);
    let delta = delta_coefficient(k, p);
    let energy = eps.hypot(delta);
    (2.0 * (eps * epsilon_dk(k, p) + delta * delta_dk(k, p)) / energy, energy)
}

/// Group velocity `2 dDelta_k/dk`.
pub fn group_velocity(k: f64, p: &CouplingPoint) -> Flagged<f64> {
    let (v, energy) = velocity_unchecked(k, p);
    if energy <= GAPLESS_TOL {
        Flagged::new(0.0, Flags::GAPLESS)
    } else {
        Flagged::clean(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityPeak {
    pub k: f64,
    /// `max |2 dDelta_k/dk|` over non-gapless momenta.
    pub velocity: f64,
}

pub fn max_group_velocity(p: &CouplingPoint, resolution: usize) -> VelocityPeak {
    let objective = |k: f64| {
        let (v, energy) = velocity_unchecked(k, p);
        if energy <= VELOCITY_EXCLUSION {
            f64::NAN
        } else {
            -v.abs()
        }
    };
    let (k, neg) = scan_minimum(objective, 0.0, PI, resolution.max(3), MAX_REFINEMENTS, K_TOL);
    VelocityPeak { k, velocity: if neg.is_finite() { -neg } else { 0.0 } }
}

/// Image of `p` under the sublattice spin flips, `(lx, ly, h) -> (-lx, -ly, h)`.
pub fn symmetry_partner(p: &CouplingPoint) -> CouplingPoint {
    CouplingPoint { lambda_x: -p.lambda_x, lambda_y: -p.lambda_y, h: p.h }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::momentum_grid;

    fn pt(lx: f64, ly: f64, h: f64) -> CouplingPoint {
        CouplingPoint::new(lx, ly, h).unwrap()
    }

    #[test]
    fn epsilon_examples() {
        assert_eq!(epsilon(0.0, &pt(0.0, 0.0, 0.0)), 1.0);
        assert!((epsilon(PI / 2.0, &pt(1.0, 1.0, 0.0)) + 1.0).abs() < 1e-15);
        assert!(epsilon(2.0 * PI / 3.0, &pt(0.0, 1.0, 0.0)).abs() < 1e-15);
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta_coefficient(0.0, &pt(0.7, -1.3, 2.0)), 0.0);
        assert!(delta_coefficient(PI / 2.0, &pt(1.0, 1.0, 0.0)).abs() < 1e-15);
        let v = delta_coefficient(PI / 4.0, &pt(1.0, 0.0, 0.0));
        assert!((v - (1.0 - 2f64.sqrt() / 2.0)).abs() < 1e-15);
        assert!((v - 0.2928932).abs() < 1e-7);
    }

    #[test]
    fn energy_examples() {
        for i in 0..50 {
            let k = i as f64 * 0.13;
            assert!((quasiparticle_energy(k, &pt(0.0, 0.0, 0.0)) - 1.0).abs() < 1e-15);
        }
        assert!(quasiparticle_energy(2.0 * PI / 3.0, &pt(0.0, 1.0, 0.0)) < 1e-15);
        assert!((quasiparticle_energy(PI / 3.0, &pt(0.0, 1.0, 0.0)) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn energy_at_cluster_xy_point_is_sine_of_three_halves_k() {
        // Brute-force check of Delta_k = 2 |sin(3k/2)| at (0, 1, 0) by
        // evaluating eps^2 + delta^2 directly.
        let p = pt(0.0, 1.0, 0.0);
        for i in 0..=1000 {
            let k = PI * i as f64 / 1000.0;
            let e = (2.0 * k).cos() - k.cos();
            let d = (2.0 * k).sin() + k.sin();
            let oracle = 2.0 * (1.5 * k).sin().abs();
            assert!(((e * e + d * d).sqrt() - oracle).abs() < 1e-12);
            assert!((quasiparticle_energy(k, &p) - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn angle_branch() {
        let p = pt(0.0, 0.0, 0.0);
        for i in 1..20 {
            let k = (PI / 2.0) * i as f64 / 20.0;
            let theta = bogoliubov_angle(k, &p);
            assert!(theta.is_clean());
            assert!((theta.value + 2.0 * k).abs() < 1e-14);
        }
        // delta = 0 at k = 0: aligned and anti-aligned cases.
        assert_eq!(bogoliubov_angle(0.0, &pt(0.0, 0.0, -1.0)).value, 0.0);
        assert_eq!(bogoliubov_angle(0.0, &pt(0.0, 0.0, 3.0)).value, PI);
        assert_eq!(bogoliubov_angle(PI, &pt(0.5, 0.0, 3.0)).value, PI);
    }

    #[test]
    fn gapless_angle_is_flagged() {
        let theta = bogoliubov_angle(2.0 * PI / 3.0, &pt(0.0, 1.0, 0.0));
        assert_eq!(theta.value, 0.0);
        assert!(theta.flags.contains(Flags::GAPLESS));
    }

    #[test]
    fn angle_is_odd_in_k() {
        let p = pt(0.3, -0.7, 0.4);
        for i in 1..30 {
            let k = 0.1 * i as f64;
            let a = bogoliubov_angle(k, &p).value;
            let b = bogoliubov_angle(-k, &p).value;
            assert!((a + b).abs() < 1e-14);
        }
    }

    #[test]
    fn mode_table_shapes() {
        let t = mode_table(&momentum_grid(4, ParitySector::Even).unwrap(), &pt(0.0, 0.0, 0.0));
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows.iter().all(|r| (r.energy - 1.0).abs() < 1e-15));
        assert!(t.unpaired.is_empty());

        let t = mode_table(&momentum_grid(4, ParitySector::Odd).unwrap(), &pt(0.2, 0.3, 0.1));
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.unpaired.len(), 2);
        assert_eq!(t.unpaired.iter().filter(|u| u.occupied).count(), 1);
    }

    #[test]
    fn mode_table_large_grid_minimum_row() {
        let t = mode_table(&momentum_grid(400, ParitySector::Even).unwrap(), &pt(0.0, 1.0, 0.0));
        let min = t.rows.iter().min_by(|a, b| a.energy.total_cmp(&b.energy)).unwrap();
        // Delta_k = 2|sin(3k/2)| vanishes at 2 pi / 3; 267 pi / 400 is the nearest odd numerator.
        assert_eq!(min.k, 267.0 * PI / 400.0);
        assert!((min.energy - 2.0 * (1.5 * min.k).sin().abs()).abs() < 1e-14);
    }

    #[test]
    fn mode_rows_satisfy_rotation_conditions() {
        let p = pt(-0.8, 1.4, 0.3);
        let t = mode_table(&momentum_grid(64, ParitySector::Odd).unwrap(), &p);
        for r in &t.rows {
            let rel = (r.energy * r.energy - r.epsilon * r.epsilon - r.delta * r.delta).abs();
            assert!(rel <= 1e-12 * r.energy * r.energy.max(1.0));
            assert!((r.epsilon * r.theta.sin() + r.delta * r.theta.cos()).abs() < 1e-12);
            assert!((r.epsilon * r.theta.cos() - r.delta * r.theta.sin() - r.energy).abs() < 1e-12);
        }
    }

    #[test]
    fn gap_examples() {
        assert!((gap(&pt(0.0, 0.0, 0.0), 64) - 1.0).abs() < 1e-12);
        assert!(gap(&pt(0.0, 1.0, 0.0), 64) < 1e-10);
        assert!(gap(&pt(-1.5, 0.5, 0.0), 64) < 1e-10);
    }

    #[test]
    fn gap_locates_interior_node() {
        // On the parabola the node sits at cos k = (lx - ly) / 2.
        let (lx, h): (f64, f64) = (0.4, 0.2);
        // Solve ly^2 - lx ly - 1 = h for the positive root.
        let ly = (lx + (lx * lx + 4.0 * (1.0 + h)).sqrt()) / 2.0;
        let p = pt(lx, ly, h);
        let (k, g) = gap_minimum(&p, 4096);
        assert!(g < 1e-10);
        assert!((k - ((lx - ly) / 2.0).acos()).abs() < 1e-9);
    }

    #[test]
    fn classify_examples() {
        let r = classify(&pt(0.0, 1.0, 0.0), 1e-9);
        assert_eq!(r.surfaces, vec![CriticalSurface::PlaneMinus, CriticalSurface::Parabola]);
        assert!(r.is_gapless);

        let r = classify(&pt(-1.5, 0.5, 0.0), 1e-9);
        assert_eq!(
            r.surfaces,
            vec![CriticalSurface::PlanePlus, CriticalSurface::Parabola, CriticalSurface::MulticriticalLine]
        );
        assert!(r.is_gapless);

        let r = classify(&pt(0.0, 0.0, 0.0), 1e-9);
        assert!(r.surfaces.is_empty());
        assert!(!r.is_gapless);
        assert!((r.gap_estimate - 1.0).abs() < 1e-12);
    }

    #[test]
    fn multicritical_line_lies_on_other_surfaces() {
        for i in -20..=20 {
            let h = 0.37 * i as f64;
            for s in [1.0, -1.0] {
                let p = pt(s * (h - 3.0) / 2.0, s * (h + 1.0) / 2.0, h);
                let surfaces = critical_surfaces(&p, 1e-9);
                assert!(surfaces.contains(&CriticalSurface::MulticriticalLine));
                assert!(surfaces.len() >= 2, "{p}: {surfaces:?}");
            }
        }
    }

    #[test]
    fn velocity_examples() {
        let p = pt(0.0, 1.0, 0.0);
        assert!(group_velocity(PI / 3.0, &p).value.abs() < 1e-12);
        assert!((group_velocity(1e-6, &p).value - 6.0).abs() < 1e-6);
        for i in 1..10 {
            assert!(group_velocity(0.3 * i as f64, &pt(0.0, 0.0, 0.0)).value.abs() < 1e-14);
        }
        assert!(group_velocity(0.0, &p).flags.contains(Flags::GAPLESS));
    }

    #[test]
    fn max_velocity_examples() {
        let peak = max_group_velocity(&pt(0.0, 1.0, 0.0), 4096);
        assert!((peak.velocity - 6.0).abs() < 1e-6, "{peak:?}");
        assert_eq!(max_group_velocity(&pt(0.0, 0.0, 0.0), 256).velocity, 0.0);
    }

    #[test]
    fn max_velocity_matches_finite_difference_scan() {
        // Brute-force oracle: maximise the centred difference of Delta on a
        // fine grid.
        let p = pt(0.0, 0.0, 2.0);
        let step = 1e-6;
        let oracle = (1..200_000)
            .map(|i| PI * i as f64 / 200_000.0)
            .map(|k| {
                let d = (quasiparticle_energy(k + step, &p) - quasiparticle_energy(k - step, &p)) / (2.0 * step);
                (2.0 * d).abs()
            })
            .fold(0.0, f64::max);
        let peak = max_group_velocity(&p, 1024);
        assert!((peak.velocity - oracle).abs() < 1e-6, "{} vs {oracle}", peak.velocity);
    }

    #[test]
    fn velocity_matches_centered_difference() {
        let p = pt(0.6, -0.2, 0.5);
        let step = 1e-6;
        for i in 1..100 {
            let k = PI * i as f64 / 100.0;
            let fd = 2.0 * (quasiparticle_energy(k + step, &p) - quasiparticle_energy(k - step, &p)) / (2.0 * step);
            assert!((group_velocity(k, &p).value - fd).abs() < 1e-5);
        }
    }

    #[test]
    fn partner_examples() {
        assert_eq!(symmetry_partner(&pt(1.0, 2.0, 3.0)), pt(-1.0, -2.0, 3.0));
        let fixed = pt(0.0, 0.0, 0.7);
        assert_eq!(symmetry_partner(&fixed), fixed);
    }

    #[test]
    fn odd_sector_occupation_follows_cheapest_flip() {
        let grid = momentum_grid(8, ParitySector::Odd).unwrap();
        // eps_0 = 1 - s - h, eps_pi = 1 + s - h. Both negative: natural filling
        // has even parity, so the smaller |eps| mode (k = pi) is emptied.
        let p = pt(0.1, 0.0, 3.0);
        let occ = unpaired_occupations(&grid, &p);
        assert!(occ.is_clean());
        assert_eq!(occ.value, vec![true, false]);
        // One negative, one positive: natural filling already odd.
        let p = pt(1.0, 0.5, 0.0);
        assert_eq!(unpaired_occupations(&grid, &p).value, vec![true, false]);
    }
}
