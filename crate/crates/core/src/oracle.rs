//! Brute-force exact diagonalization for small chains.
//!
//! Basis state `s` has site 1 on the most significant of `N` bits; a clear bit
//! is spin up (`sigma^z = +1`). Every term of the Hamiltonian is real in this
//! basis (`sigma^y sigma^y` included), so matrices are stored as `f64`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flags::{Flagged, Flags};
use crate::geometry::{fidelity, pair_excitation_overlap};
use crate::model::{momentum_grid, CouplingPoint, MomentumGrid, ParitySector};
use crate::quench::{default_coalesce_window, loschmidt_echo, EchoSeries, QuenchProtocol};
use crate::spectrum::{
    bogoliubov_angle, free_fermion_ground_energy, quasiparticle_energy, symmetry_partner, unpaired_occupations,
    DEGENERACY_TOL,
};

pub const MAX_SITES: usize = 12;

/// Eigenvalues closer than this are treated as one level.
const LEVEL_TOL: f64 = 1e-8;

fn check_size(n: usize) -> Result<()> {
    if n % 2 != 0 {
        return Err(Error::Size { n, reason: "chain length must be even" });
    }
    if !(4..=MAX_SITES).contains(&n) {
        return Err(Error::Size { n, reason: "exact diagonalization needs 4 <= N <= 12" });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct DenseHamiltonian {
    pub n: usize,
    pub matrix: DMatrix<f64>,
    pub point: CouplingPoint,
}

/// `sigma^z` eigenvalue of 0-based site `i` in basis state `s`.
fn z(n: usize, s: usize, i: usize) -> f64 {
    if (s >> (n - 1 - i)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn flip(n: usize, s: usize, i: usize) -> usize {
    s ^ (1 << (n - 1 - i))
}

pub fn build_hamiltonian(n: usize, point: &CouplingPoint) -> Result<DenseHamiltonian> {
    check_size(n)?;
    let dim = 1usize << n;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for s in 0..dim {
        for i in 0..n {
            let left = (i + n - 1) % n;
            let right = (i + 1) % n;
            // -X_{i-1} Z_i X_{i+1}
            let t = flip(n, flip(n, s, left), right);
            m[(t, s)] -= z(n, s, i);
            // -h Z_i
            m[(s, s)] -= point.h * z(n, s, i);
            let t = flip(n, flip(n, s, i), right);
            // Y|b> = i (-1)^b |1-b>, so Y_i Y_{i+1} picks up -(-1)^(b_i + b_{i+1}).
            m[(t, s)] += point.lambda_y * (-z(n, s, i) * z(n, s, right));
            m[(t, s)] += point.lambda_x;
        }
    }
    let h = DenseHamiltonian { n, matrix: m, point: *point };
    let asym = (&h.matrix - h.matrix.transpose()).amax();
    if asym > 1e-13 {
        return Err(Error::Oracle(format!("Hamiltonian not Hermitian: {asym:e}")));
    }
    let q = parity_operator(n);
    let comm = h.matrix.iter().enumerate().map(|(idx, v)| (v * (q[idx % dim] - q[idx / dim])).abs()).fold(0.0, f64::max);
    if comm > 1e-12 {
        return Err(Error::Oracle(format!("Hamiltonian breaks parity: {comm:e}")));
    }
    Ok(h)
}

/// Diagonal of `Q = prod_i sigma^z_i`.
pub fn parity_operator(n: usize) -> Vec<f64> {
    (0..1usize << n).map(|s| if s.count_ones() % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

/// Basis indices of the `Q = (-1)^q` eigenspace and `H` restricted to it.
pub fn sector_block(h: &DenseHamiltonian, sector: ParitySector) -> (Vec<usize>, DMatrix<f64>) {
    let want = f64::from(sector.parity());
    let idx: Vec<usize> = parity_operator(h.n).iter().enumerate().filter(|(_, &q)| q == want).map(|(i, _)| i).collect();
    let block = DMatrix::from_fn(idx.len(), idx.len(), |a, b| h.matrix[(idx[a], idx[b])]);
    (idx, block)
}

/// Eigenpairs of one sector block, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SectorEigen {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    /// Columns are eigenvectors in the sector basis.
    pub vectors: DMatrix<f64>,
}

impl SectorEigen {
    /// Lifts a sector-basis vector to the full `2^N` space.
    pub fn embed(&self, v: &DVector<f64>, n: usize) -> DVector<f64> {
        let mut full = DVector::zeros(1 << n);
        for (a, &i) in self.indices.iter().enumerate() {
            full[i] = v[a];
        }
        full
    }
}

pub fn sector_eigen(h: &DenseHamiltonian, sector: ParitySector) -> SectorEigen {
    let (indices, block) = sector_block(h, sector);
    let eig = SymmetricEigen::new(block);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(order.len(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    SectorEigen { indices, values, vectors }
}

pub fn sector_spectrum(h: &DenseHamiltonian, sector: ParitySector) -> Vec<f64> {
    sector_eigen(h, sector).values
}

#[derive(Debug, Clone)]
pub struct SectorGroundState {
    pub energy: f64,
    /// Normalized, in the full `2^N` basis, largest amplitude positive.
    pub state: DVector<f64>,
    pub flags: Flags,
}

fn ground_from(eigen: &SectorEigen, n: usize) -> SectorGroundState {
    let mut v = eigen.embed(&eigen.vectors.column(0).into_owned(), n);
    let imax = v.iamax();
    if v[imax] < 0.0 {
        v.neg_mut();
    }
    let flags = if eigen.values.len() > 1 && eigen.values[1] - eigen.values[0] < DEGENERACY_TOL {
        Flags::DEGENERATE
    } else {
        Flags::empty()
    };
    SectorGroundState { energy: eigen.values[0], state: v, flags }
}

pub fn sector_ground_state(h: &DenseHamiltonian, sector: ParitySector) -> SectorGroundState {
    ground_from(&sector_eigen(h, sector), h.n)
}

/// ED sector ground energy minus the free-fermion ground energy at `point`.
pub fn energy_offset(n: usize, sector: ParitySector, point: &CouplingPoint) -> Result<Flagged<f64>> {
    let grid = momentum_grid(n, sector)?;
    let ed = sector_ground_state(&build_hamiltonian(n, point)?, sector);
    let ff = free_fermion_ground_energy(&grid, point);
    Ok(Flagged::new(ed.energy - ff.value, ed.flags | ff.flags))
}

/// `|<Omega(p1)|Omega(p2)>|` from ED sector ground states.
pub fn exact_overlap(n: usize, p1: &CouplingPoint, p2: &CouplingPoint, sector: ParitySector) -> Result<Flagged<f64>> {
    let a = sector_ground_state(&build_hamiltonian(n, p1)?, sector);
    let b = sector_ground_state(&build_hamiltonian(n, p2)?, sector);
    Ok(Flagged::new(a.state.dot(&b.state).abs(), a.flags | b.flags))
}

/// `|<psi0| exp(-i H2 t) |psi0>|^2` with `psi0` the sector ground state of `H1`.
pub fn exact_loschmidt(protocol: &QuenchProtocol, times: &[f64]) -> Result<EchoSeries> {
    if times.is_empty() {
        return Err(Error::EmptyTimes);
    }
    let n = protocol.grid.n();
    let sector = protocol.grid.sector();
    let psi0 = sector_ground_state(&build_hamiltonian(n, &protocol.initial)?, sector);
    let eig = sector_eigen(&build_hamiltonian(n, &protocol.final_point)?, sector);
    let local = DVector::from_iterator(eig.indices.len(), eig.indices.iter().map(|&i| psi0.state[i]));
    let weights: Vec<f64> = (eig.vectors.transpose() * local).iter().map(|c| c * c).collect();
    let values = times
        .iter()
        .map(|&t| {
            let amp: Complex64 =
                weights.iter().zip(&eig.values).map(|(w, e)| Complex64::from_polar(*w, -e * t)).sum();
            amp.norm_sqr()
        })
        .collect();
    let mut flags = psi0.flags;
    if protocol.is_trivial() {
        flags |= Flags::TRIVIAL;
    }
    Ok(EchoSeries {
        times: times.to_vec(),
        values,
        stats: None,
        revivals: Vec::new(),
        coalesce_window: default_coalesce_window(protocol),
        flags,
    })
}

/// Whether some sum of two or more entries of `levels` equals `target`.
fn multi_sum_hits(levels: &[f64], target: f64, tol: f64) -> bool {
    fn go(levels: &[f64], start: usize, sum: f64, count: usize, target: f64, tol: f64) -> bool {
        if count >= 2 && (sum - target).abs() < tol {
            return true;
        }
        (start..levels.len())
            .any(|i| sum + levels[i] <= target + tol && go(levels, i + 1, sum + levels[i], count + 1, target, tol))
    }
    go(levels, 0, 0.0, 0, target, tol)
}

/// Weight of `|Omega(p')>` on the one-pair excitations of `H(p_c)`.
///
/// A pair `(k, -k)` costs `4 Delta_k`; the eigenspace of `H(p_c)` at
/// `E_0 + 4 Delta_k` is located in the ED spectrum and `|Omega(p')>` is
/// projected onto it. Equal `Delta_k` share one eigenspace and are counted
/// once. Levels also reachable by several pairs are flagged unresolved.
pub fn exact_pair_overlap(
    n: usize,
    p_c: &CouplingPoint,
    p_prime: &CouplingPoint,
    sector: ParitySector,
) -> Result<Flagged<f64>> {
    let grid = momentum_grid(n, sector)?;
    let eig = sector_eigen(&build_hamiltonian(n, p_c)?, sector);
    let ground = ground_from(&eig, n);
    let other = sector_ground_state(&build_hamiltonian(n, p_prime)?, sector);
    let mut flags = ground.flags | other.flags;
    let occ_c = unpaired_occupations(&grid, p_c);
    let occ_p = unpaired_occupations(&grid, p_prime);
    if occ_c.value != occ_p.value {
        flags |= Flags::UNPAIRED_MISMATCH;
    }

    let pair_levels: Vec<f64> = grid.paired_k().map(|k| 4.0 * quasiparticle_energy(k, p_c)).collect();
    let mut distinct: Vec<f64> = Vec::new();
    for &e in &pair_levels {
        if !distinct.iter().any(|d| (d - e).abs() < LEVEL_TOL) {
            distinct.push(e);
        }
    }

    let local = DVector::from_iterator(eig.indices.len(), eig.indices.iter().map(|&i| other.state[i]));
    let mut total = 0.0;
    for &e in &distinct {
        if e < LEVEL_TOL || multi_sum_hits(&pair_levels, e, 1e-6) {
            flags |= Flags::UNRESOLVED;
        }
        let target = eig.values[0] + e;
        for (j, _) in eig.values.iter().enumerate().filter(|(_, v)| (*v - target).abs() < LEVEL_TOL) {
            let c = eig.vectors.column(j).dot(&local);
            total += c * c;
        }
    }
    Ok(Flagged::new(total, flags))
}

/// `c_n^dagger` (site `n` in `1..=N`) with the Jordan-Wigner string
/// `prod_{m<n} sigma^z_m`, creating spin up.
fn site_creation(n_sites: usize, site: usize, v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    let i = site - 1;
    for (s, &amp) in v.iter().enumerate() {
        if amp == Complex64::new(0.0, 0.0) || (s >> (n_sites - 1 - i)) & 1 == 0 {
            continue;
        }
        let string: f64 = (0..i).map(|m| z(n_sites, s, m)).product();
        out[flip(n_sites, s, i)] += amp * string;
    }
    out
}

/// `c_k^dagger = N^{-1/2} sum_n e^{-ikn} c_n^dagger`.
fn momentum_creation(n_sites: usize, k: f64, v: &[Complex64]) -> Vec<Complex64> {
    let norm = (n_sites as f64).sqrt();
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for site in 1..=n_sites {
        let phase = Complex64::from_polar(1.0 / norm, -k * site as f64);
        for (o, x) in out.iter_mut().zip(site_creation(n_sites, site, v)) {
            *o += phase * x;
        }
    }
    out
}

/// Free-fermion sector ground state built explicitly in the spin basis:
/// `prod_k (cos(theta_k/2) + i sin(theta_k/2) c_{-k}^dagger c_k^dagger)`
/// on the all-down vacuum, with the self-conjugate modes filled as in the
/// sector ground state.
pub fn bcs_state_vector(grid: &MomentumGrid, p: &CouplingPoint) -> Result<DVector<Complex64>> {
    let n = grid.n();
    check_size(n)?;
    let dim = 1usize << n;
    let mut v = vec![Complex64::new(0.0, 0.0); dim];
    v[dim - 1] = Complex64::new(1.0, 0.0);
    for k in grid.paired_k() {
        let theta = bogoliubov_angle(k, p).value;
        let pair = momentum_creation(n, -k, &momentum_creation(n, k, &v));
        let (s, c) = (0.5 * theta).sin_cos();
        for (x, y) in v.iter_mut().zip(pair) {
            *x = *x * c + Complex64::new(0.0, s) * y;
        }
    }
    let occupied = unpaired_occupations(grid, p).value;
    for (m, occ) in grid.unpaired().iter().zip(occupied) {
        if occ {
            v = momentum_creation(n, m.k, &v);
        }
    }
    Ok(DVector::from_vec(v))
}

/// One comparison between a closed form and the oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleCheck {
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub flags: Flags,
}

impl OracleCheck {
    fn new(name: &str, error: f64, tolerance: f64, flags: Flags) -> Self {
        Self { name: name.to_string(), error, tolerance, passed: error <= tolerance, flags }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n: usize,
    pub sector: ParitySector,
    pub point: CouplingPoint,
    pub other: CouplingPoint,
    pub checks: Vec<OracleCheck>,
}

impl OracleReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Compares every closed form against ED at `point` (and `other` for
/// two-point quantities).
pub fn oracle_suite(n: usize, sector: ParitySector, point: &CouplingPoint, other: &CouplingPoint) -> Result<OracleReport> {
    let grid = momentum_grid(n, sector)?;
    let h1 = build_hamiltonian(n, point)?;
    let mut checks = Vec::new();

    let ground = sector_ground_state(&h1, sector);
    let ff = free_fermion_ground_energy(&grid, point);
    checks.push(OracleCheck::new("ground_energy", (ground.energy - ff.value).abs(), 1e-9, ground.flags | ff.flags));

    let bcs = bcs_state_vector(&grid, point)?;
    let overlap: Complex64 = bcs.iter().zip(ground.state.iter()).map(|(a, &b)| a.conj() * b).sum();
    checks.push(OracleCheck::new("bcs_state", (1.0 - overlap.norm()).abs(), 1e-10, ground.flags));

    let partner = build_hamiltonian(n, &symmetry_partner(point))?;
    let spread = sector_spectrum(&h1, sector)
        .iter()
        .zip(sector_spectrum(&partner, sector))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    checks.push(OracleCheck::new("partner_spectrum", spread, 1e-10, Flags::empty()));

    let f_ed = exact_overlap(n, point, other, sector)?;
    let f_cf = fidelity(point, other, &grid);
    checks.push(OracleCheck::new("fidelity", (f_ed.value - f_cf.value).abs(), 1e-10, f_ed.flags | f_cf.flags));

    let f1_ed = exact_pair_overlap(n, point, other, sector)?;
    let f1_cf = pair_excitation_overlap(point, other, &grid);
    checks.push(OracleCheck::new("pair_overlap", (f1_ed.value - f1_cf.value).abs(), 1e-8, f1_ed.flags | f1_cf.flags));

    let protocol = QuenchProtocol::new(*point, *other, grid);
    let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.05).collect();
    let le_ed = exact_loschmidt(&protocol, &times)?;
    let le_cf = loschmidt_echo(&protocol, &times)?;
    let err = le_ed.values.iter().zip(&le_cf.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    checks.push(OracleCheck::new("loschmidt_echo", err, 1e-8, le_ed.flags | le_cf.flags));

    Ok(OracleReport { n, sector, point: *point, other: *other, checks })
}
