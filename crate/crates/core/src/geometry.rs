//! Ground-state fidelity, the quantum geometric tensor and few-excitation
//! overlaps.
//!
//! Ground states are products over momentum pairs of rotated two-level
//! states, so every overlap factorises over `k` and depends only on the
//! Bogoliubov angle differences `theta_k(p1) - theta_k(p2)`. Reductions over
//! `k` run in ascending momentum order.

use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flags::{Flagged, Flags};
use crate::model::{Axis, CouplingPoint, MomentumGrid};
use crate::spectrum::{bogoliubov_angle, delta_coefficient, epsilon, unpaired_occupations, GAPLESS_TOL};

/// Gradient of `theta_k` with respect to `(lambda_x, lambda_y, h)`.
pub fn theta_gradient(k: f64, p: &CouplingPoint) -> Flagged<[f64; 3]> {
    let eps = epsilon(k, p);
    let delta = delta_coefficient(k, p);
    let energy_sq = eps * eps + delta * delta;
    if energy_sq.sqrt() <= GAPLESS_TOL {
        return Flagged::new([0.0; 3], Flags::GAPLESS);
    }
    let (s, c) = k.sin_cos();
    Flagged::clean([
        -(c * delta - s * eps) / energy_sq,
        -(c * delta + s * eps) / energy_sq,
        -delta / energy_sq,
    ])
}

/// `theta_k(p1) - theta_k(p2)` for every paired momentum.
pub(crate) fn angle_differences(p1: &CouplingPoint, p2: &CouplingPoint, grid: &MomentumGrid) -> Flagged<Vec<f64>> {
    let mut flags = Flags::empty();
    let diffs = grid
        .paired_k()
        .map(|k| {
            let a = bogoliubov_angle(k, p1);
            let b = bogoliubov_angle(k, p2);
            flags |= a.flags | b.flags;
            a.value - b.value
        })
        .collect();
    Flagged::new(diffs, flags)
}

/// Compares the self-conjugate mode occupations of both sector ground states.
/// Returns `false` when they differ, in which case the states are orthogonal.
fn unpaired_match(p1: &CouplingPoint, p2: &CouplingPoint, grid: &MomentumGrid) -> Flagged<bool> {
    let a = unpaired_occupations(grid, p1);
    let b = unpaired_occupations(grid, p2);
    let same = a.value == b.value;
    let mut flags = a.flags | b.flags;
    if !same {
        flags |= Flags::UNPAIRED_MISMATCH;
    }
    Flagged::new(same, flags)
}

/// Ground-state fidelity `|<Omega(p1)|Omega(p2)>|` in the sector of `grid`.
pub fn fidelity(p1: &CouplingPoint, p2: &CouplingPoint, grid: &MomentumGrid) -> Flagged<f64> {
    let diffs = angle_differences(p1, p2, grid);
    let matched = unpaired_match(p1, p2, grid);
    let flags = diffs.flags | matched.flags;
    if !matched.value {
        return Flagged::new(0.0, flags);
    }
    let value = diffs.value.iter().fold(1.0, |acc, d| acc * (0.5 * d).cos().abs());
    Flagged::new(value, flags)
}

/// Real quantum geometric tensor in the chart `(lambda_x, lambda_y, h)`.
///
/// The ground states admit a real gauge, so the Berry curvature (imaginary
/// part) vanishes identically and only the metric is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QgtMatrix {
    pub entries: [[f64; 3]; 3],
    pub grid: MomentumGrid,
    pub point: CouplingPoint,
    pub flags: Flags,
}

impl QgtMatrix {
    pub fn get(&self, a: Axis, b: Axis) -> f64 {
        self.entries[a.index()][b.index()]
    }

    /// Fidelity metric `g_ab = Re T_ab`.
    pub fn metric(&self) -> [[f64; 3]; 3] {
        self.entries
    }

    pub fn berry_curvature(&self) -> [[f64; 3]; 3] {
        [[0.0; 3]; 3]
    }

    pub fn eigenvalues(&self) -> [f64; 3] {
        let m = Matrix3::from_fn(|i, j| self.entries[i][j]);
        let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2]]
    }

    pub fn quadratic_form(&self, v: [f64; 3]) -> f64 {
        let mut acc = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                acc += v[a] * self.entries[a][b] * v[b];
            }
        }
        acc
    }
}

/// `T_ab = sum_k (1/4) d_a theta_k d_b theta_k` over paired momenta; gapless
/// modes are skipped and flagged.
pub fn quantum_geometric_tensor(p: &CouplingPoint, grid: &MomentumGrid) -> QgtMatrix {
    let mut entries = [[0.0; 3]; 3];
    let mut flags = Flags::empty();
    for k in grid.paired_k() {
        let g = theta_gradient(k, p);
        if !g.is_clean() {
            flags |= g.flags;
            continue;
        }
        for a in 0..3 {
            for b in a..3 {
                entries[a][b] += 0.25 * g.value[a] * g.value[b];
            }
        }
    }
    for a in 0..3 {
        for b in 0..a {
            entries[a][b] = entries[b][a];
        }
    }
    QgtMatrix { entries, grid: grid.clone(), point: *p, flags }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Susceptibility {
    pub total: f64,
    pub per_site: f64,
}

/// Fidelity susceptibility along a unit direction in coupling space.
pub fn fidelity_susceptibility(
    p: &CouplingPoint,
    direction: [f64; 3],
    grid: &MomentumGrid,
) -> Result<Flagged<Susceptibility>> {
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("direction must be a unit vector, |d| = {norm}")));
    }
    let qgt = quantum_geometric_tensor(p, grid);
    let total = qgt.quadratic_form(direction);
    Ok(Flagged::new(Susceptibility { total, per_site: total / grid.n() as f64 }, qgt.flags))
}

/// Weight of `|Omega(p_prime)>` on the pair-excitation subspace
/// `{ gamma_k^dag gamma_-k^dag |Omega(p_c)> }` of `p_c`:
/// `sum_k sin^2(chi_k/2) prod_{k' != k} cos^2(chi_k'/2)` with
/// `chi_k = theta_k(p_c) - theta_k(p_prime)`.
pub fn pair_excitation_overlap(p_c: &CouplingPoint, p_prime: &CouplingPoint, grid: &MomentumGrid) -> Flagged<f64> {
    let diffs = angle_differences(p_c, p_prime, grid);
    let matched = unpaired_match(p_c, p_prime, grid);
    let flags = diffs.flags | matched.flags;
    if !matched.value {
        return Flagged::new(0.0, flags);
    }
    let cos_sq: Vec<f64> = diffs.value.iter().map(|d| (0.5 * d).cos().powi(2)).collect();
    let sin_sq: Vec<f64> = diffs.value.iter().map(|d| (0.5 * d).sin().powi(2)).collect();
    // prefix[i] = prod_{j<i} cos^2, suffix[i] = prod_{j>=i} cos^2; avoids
    // dividing by vanishing factors.
    let m = cos_sq.len();
    let mut prefix = vec![1.0; m + 1];
    for i in 0..m {
        prefix[i + 1] = prefix[i] * cos_sq[i];
    }
    let mut suffix = vec![1.0; m + 1];
    for i in (0..m).rev() {
        suffix[i] = suffix[i + 1] * cos_sq[i];
    }
    let value = (0..m).map(|i| sin_sq[i] * prefix[i] * suffix[i + 1]).sum();
    Flagged::new(value, flags)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverlapRow {
    pub point: CouplingPoint,
    pub fidelity: f64,
    pub pair_overlap: f64,
    pub flags: Flags,
}

/// Fidelity and pair-excitation overlap between `center` and every point of
/// a `steps x steps` square of side `2 radius` in the plane spanned by
/// `plane`, in row-major order (first axis outer).
pub fn overlap_scan(
    center: &CouplingPoint,
    plane: (Axis, Axis),
    radius: f64,
    steps: usize,
    grid: &MomentumGrid,
) -> Result<Vec<OverlapRow>> {
    if steps < 2 {
        return Err(Error::invalid("overlap scan needs at least 2 steps per axis"));
    }
    if plane.0 == plane.1 {
        return Err(Error::invalid("overlap scan axes must differ"));
    }
    if !(radius.is_finite() && radius >= 0.0) {
        return Err(Error::invalid(format!("invalid scan radius {radius}")));
    }
    let offsets: Vec<f64> =
        (0..steps).map(|i| -radius + 2.0 * radius * i as f64 / (steps - 1) as f64).collect();
    let points: Vec<CouplingPoint> = offsets
        .iter()
        .flat_map(|&a| {
            offsets.iter().map(move |&b| {
                center.with(plane.0, center.get(plane.0) + a).with(plane.1, center.get(plane.1) + b)
            })
        })
        .collect();
    Ok(points
        .par_iter()
        .map(|p| {
            let f = fidelity(center, p, grid);
            let f1 = pair_excitation_overlap(center, p, grid);
            OverlapRow { point: *p, fidelity: f.value, pair_overlap: f1.value, flags: f.flags | f1.flags }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::model::{momentum_grid, ParitySector};
    use crate::spectrum::symmetry_partner;

    fn pt(lx: f64, ly: f64, h: f64) -> CouplingPoint {
        CouplingPoint::new(lx, ly, h).unwrap()
    }

    #[test]
    fn gradient_at_origin() {
        let p = pt(0.0, 0.0, 0.0);
        for i in 1..20 {
            let k = PI * i as f64 / 20.0;
            let g = theta_gradient(k, &p).value;
            assert!((g[0] + k.sin()).abs() < 1e-14);
            assert!((g[1] + (3.0 * k).sin()).abs() < 1e-14);
            assert!((g[2] + (2.0 * k).sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn gradient_h_component_vanishes_at_half_pi_on_diagonal() {
        let g = theta_gradient(PI / 2.0, &pt(0.7, 0.7, 0.3)).value;
        assert!(g[2].abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let step = 1e-6;
        for p in [pt(0.3, -0.4, 0.9), pt(-1.2, 0.8, -0.5), pt(2.0, 1.0, 0.1)] {
            for i in 1..40 {
                let k = PI * i as f64 / 40.0;
                let g = theta_gradient(k, &p);
                if !g.is_clean() {
                    continue;
                }
                for axis in Axis::ALL {
                    let up = p.with(axis, p.get(axis) + step);
                    let dn = p.with(axis, p.get(axis) - step);
                    let mut d = bogoliubov_angle(k, &up).value - bogoliubov_angle(k, &dn).value;
                    // Unwrap across the branch cut at +-pi.
                    if d > PI {
                        d -= 2.0 * PI;
                    } else if d < -PI {
                        d += 2.0 * PI;
                    }
                    let fd = d / (2.0 * step);
                    assert!((g.value[axis.index()] - fd).abs() < 1e-5 * (1.0 + fd.abs()), "{p} k={k} {axis}");
                }
            }
        }
    }

    #[test]
    fn self_fidelity_is_one() {
        let grid = momentum_grid(50, ParitySector::Odd).unwrap();
        let p = pt(0.3, 1.7, -0.2);
        assert_eq!(fidelity(&p, &p, &grid).value, 1.0);
        assert_eq!(pair_excitation_overlap(&p, &p, &grid).value, 0.0);
    }

    #[test]
    fn qgt_at_origin_on_eight_sites() {
        let grid = momentum_grid(8, ParitySector::Even).unwrap();
        let t = quantum_geometric_tensor(&pt(0.0, 0.0, 0.0), &grid);
        // Brute-force sums over k in {pi/8, 3pi/8, 5pi/8, 7pi/8}.
        let ks = [1.0, 3.0, 5.0, 7.0].map(|j| j * PI / 8.0);
        let t_hh: f64 = ks.iter().map(|k| (2.0 * k).sin().powi(2) / 4.0).sum();
        let t_xh: f64 = ks.iter().map(|k| k.sin() * (2.0 * k).sin() / 4.0).sum();
        assert!((t_hh - 0.5).abs() < 1e-15);
        assert!((t.get(Axis::H, Axis::H) - t_hh).abs() < 1e-15);
        assert!(t_xh.abs() < 1e-15);
        assert!(t.get(Axis::LambdaX, Axis::H).abs() < 1e-15);
        assert!(t.flags.is_empty());
    }

    #[test]
    fn susceptibility_along_field() {
        let grid = momentum_grid(8, ParitySector::Even).unwrap();
        let chi = fidelity_susceptibility(&pt(0.0, 0.0, 0.0), Axis::H.unit(), &grid).unwrap();
        assert!((chi.value.total - 0.5).abs() < 1e-15);
        assert!((chi.value.per_site - 0.5 / 8.0).abs() < 1e-15);
        assert!(fidelity_susceptibility(&pt(0.0, 0.0, 0.0), [1.0, 1.0, 0.0], &grid).is_err());
    }

    #[test]
    fn susceptibility_symmetric_under_partner_map() {
        let grid = momentum_grid(40, ParitySector::Even).unwrap();
        let p = pt(0.4, -1.1, 0.6);
        let d = [0.6, 0.0, 0.8];
        let a = fidelity_susceptibility(&p, d, &grid).unwrap().value.total;
        let b = fidelity_susceptibility(&symmetry_partner(&p), [-0.6, 0.0, 0.8], &grid).unwrap().value.total;
        assert!((a - b).abs() < 1e-10 * a.max(1.0));
    }

    #[test]
    fn susceptibility_is_second_order_fidelity_loss() {
        let grid = momentum_grid(20, ParitySector::Even).unwrap();
        let p = pt(0.2, 0.3, -0.4);
        let d = [0.0, 0.6, 0.8];
        let step = 1e-3;
        let chi = fidelity_susceptibility(&p.displaced(d, step / 2.0), d, &grid).unwrap().value.total;
        let loss = 1.0 - fidelity(&p, &p.displaced(d, step), &grid).value;
        assert!((loss - 0.5 * step * step * chi).abs() < 1e-9);
    }

    #[test]
    fn critical_window_self_overlap() {
        let grid = momentum_grid(500, ParitySector::Odd).unwrap();
        let p1 = pt(-1.5, 0.5, 0.0);
        let rows = overlap_scan(&p1, (Axis::LambdaX, Axis::LambdaY), 0.5, 3, &grid).unwrap();
        assert_eq!(rows.len(), 9);
        assert_eq!(rows[4].point, p1);
        assert_eq!(rows[4].fidelity, 1.0);
        assert_eq!(rows[0].point, pt(-2.0, 0.0, 0.0));
        assert_eq!(rows[1].point, pt(-2.0, 0.5, 0.0));
    }

    #[test]
    fn scan_rejects_degenerate_windows() {
        let grid = momentum_grid(8, ParitySector::Even).unwrap();
        let p = pt(0.0, 0.0, 0.0);
        assert!(overlap_scan(&p, (Axis::H, Axis::H), 0.1, 3, &grid).is_err());
        assert!(overlap_scan(&p, (Axis::LambdaX, Axis::H), 0.1, 1, &grid).is_err());
    }

    #[test]
    fn pair_overlap_bounded_by_completeness() {
        let grid = momentum_grid(30, ParitySector::Even).unwrap();
        let a = pt(0.5, 0.2, 0.3);
        for b in [pt(0.6, 0.2, 0.3), pt(1.5, -0.8, 0.9), pt(-2.0, 2.0, -1.0)] {
            let f = fidelity(&a, &b, &grid).value;
            let f1 = pair_excitation_overlap(&a, &b, &grid).value;
            assert!(f1 >= 0.0 && f * f + f1 <= 1.0 + 1e-12);
        }
    }
}
