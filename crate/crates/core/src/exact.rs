//! Exact diagonalization, resolved by the global parity `Z = Z_1 ... Z_N`.
//!
//! Every operator accepted here must conserve parity, so the Hilbert space
//! splits into the even (`Z = +1`, even number of `1` bits) and odd blocks
//! which are diagonalized independently. Parity of every returned vector is
//! therefore exact rather than thresholded.

use std::io::Write;

use faer::{Mat, Side};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::format::csv_num;
use crate::pauli::{build_hamiltonian, ModelParams, PauliSum};
use crate::state::{CompiledOperator, EntropyBase, StateVector, C64};
use crate::{Error, Result};

pub const DEFAULT_ED_CEILING: usize = 14;
const HERMITIAN_TOL: f64 = 1e-12;
const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn value(self) -> i8 {
        match self {
            Parity::Even => 1,
            Parity::Odd => -1,
        }
    }

    pub fn from_value(v: i8) -> Result<Self> {
        match v {
            1 => Ok(Parity::Even),
            -1 => Ok(Parity::Odd),
            _ => Err(Error::EmptySector(v)),
        }
    }

    pub fn of_index(b: usize) -> Self {
        if b.count_ones() % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// Dense `2^N x 2^N` matrix of `op`, refusing sizes above `ceiling` qubits.
pub fn to_dense_with_ceiling(op: &PauliSum, ceiling: usize) -> Result<Mat<C64>> {
    let n = op.n_qubits();
    if n > ceiling {
        return Err(Error::OverCeiling { n_qubits: n, ceiling });
    }
    let compiled = CompiledOperator::new(op)?;
    let dim = 1usize << n;
    let mut m = Mat::<C64>::zeros(dim, dim);
    for (flip, diag) in compiled.blocks() {
        for (b, d) in diag.iter().enumerate() {
            m[(b ^ flip, b)] += *d;
        }
    }
    let mut residual = 0.0f64;
    for i in 0..dim {
        for j in 0..=i {
            residual = residual.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    if residual > HERMITIAN_TOL {
        return Err(Error::NonHermitian(residual));
    }
    Ok(m)
}

pub fn to_dense(op: &PauliSum) -> Result<Mat<C64>> {
    to_dense_with_ceiling(op, DEFAULT_ED_CEILING)
}

#[derive(Debug, Clone)]
enum Vectors {
    Real(Mat<f64>),
    Complex(Mat<C64>),
}

/// Full eigendecomposition of one parity block.
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    n_qubits: usize,
    parity: Parity,
    basis: Vec<usize>,
    energies: Vec<f64>,
    vectors: Vectors,
}

/// Basis indices of a parity block, ascending.
pub fn sector_basis(n_qubits: usize, parity: Parity) -> Vec<usize> {
    (0..1usize << n_qubits).filter(|&b| Parity::of_index(b) == parity).collect()
}

enum Block {
    Real(Mat<f64>),
    Complex(Mat<C64>),
}

fn sector_block(op: &PauliSum, parity: Parity) -> Result<(Vec<usize>, Block)> {
    let n = op.n_qubits();
    if n > DEFAULT_ED_CEILING {
        return Err(Error::OverCeiling { n_qubits: n, ceiling: DEFAULT_ED_CEILING });
    }
    let compiled = CompiledOperator::new(op)?;
    if compiled.blocks().iter().any(|(f, _)| f.count_ones() % 2 == 1) {
        return Err(Error::BrokenParity);
    }
    let basis = sector_basis(n, parity);
    let mut pos = vec![usize::MAX; 1 << n];
    for (i, &b) in basis.iter().enumerate() {
        pos[b] = i;
    }
    let d = basis.len();
    let real = compiled.blocks().iter().all(|(_, diag)| diag.iter().all(|z| z.im == 0.0));
    let block = if real {
        let mut m = Mat::<f64>::zeros(d, d);
        for (flip, diag) in compiled.blocks() {
            for (col, &b) in basis.iter().enumerate() {
                m[(pos[b ^ flip], col)] += diag[b].re;
            }
        }
        Block::Real(m)
    } else {
        let mut m = Mat::<C64>::zeros(d, d);
        for (flip, diag) in compiled.blocks() {
            for (col, &b) in basis.iter().enumerate() {
                m[(pos[b ^ flip], col)] += diag[b];
            }
        }
        Block::Complex(m)
    };
    Ok((basis, block))
}

fn eig_err(e: impl std::fmt::Debug) -> Error {
    Error::Eigen(format!("{e:?}"))
}

/// Diagonalizes `h` restricted to one parity block.
pub fn diagonalize_sector(h: &PauliSum, parity: Parity) -> Result<SectorSpectrum> {
    let (basis, block) = sector_block(h, parity)?;
    let (energies, vectors) = match block {
        Block::Real(m) => {
            let eig = m.self_adjoint_eigen(Side::Lower).map_err(eig_err)?;
            let s = eig.S().column_vector();
            ((0..s.nrows()).map(|i| s[i]).collect(), Vectors::Real(eig.U().to_owned()))
        }
        Block::Complex(m) => {
            let eig = m.self_adjoint_eigen(Side::Lower).map_err(eig_err)?;
            let s = eig.S().column_vector();
            ((0..s.nrows()).map(|i| s[i].re).collect(), Vectors::Complex(eig.U().to_owned()))
        }
    };
    Ok(SectorSpectrum { n_qubits: h.n_qubits(), parity, basis, energies, vectors })
}

/// Eigenvalues of one parity block, ascending, without eigenvectors.
pub fn sector_energies(h: &PauliSum, parity: Parity) -> Result<Vec<f64>> {
    let (_, block) = sector_block(h, parity)?;
    match block {
        Block::Real(m) => m.self_adjoint_eigenvalues(Side::Lower).map_err(eig_err),
        Block::Complex(m) => m.self_adjoint_eigenvalues(Side::Lower).map_err(eig_err),
    }
}

impl SectorSpectrum {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn basis(&self) -> &[usize] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Sector-local amplitudes of eigenvector `i`.
    fn local_vector(&self, i: usize) -> Vec<C64> {
        match &self.vectors {
            Vectors::Real(u) => (0..self.dim()).map(|r| C64::new(u[(r, i)], 0.0)).collect(),
            Vectors::Complex(u) => (0..self.dim()).map(|r| u[(r, i)]).collect(),
        }
    }

    /// Eigenvector `i` embedded in the full Hilbert space.
    pub fn eigenvector(&self, i: usize) -> StateVector {
        let mut amps = vec![C64::new(0.0, 0.0); 1 << self.n_qubits];
        for (a, &b) in self.local_vector(i).into_iter().zip(&self.basis) {
            amps[b] = a;
        }
        StateVector::from_raw(self.n_qubits, amps)
    }

    /// `V^dagger psi` restricted to this sector.
    fn project(&self, psi: &[C64]) -> Vec<C64> {
        let d = self.dim();
        let local: Vec<C64> = self.basis.iter().map(|&b| psi[b]).collect();
        match &self.vectors {
            Vectors::Real(u) => (0..d)
                .map(|i| (0..d).map(|r| local[r] * u[(r, i)]).sum())
                .collect(),
            Vectors::Complex(u) => (0..d)
                .map(|i| (0..d).map(|r| u[(r, i)].conj() * local[r]).sum())
                .collect(),
        }
    }

    /// Writes `sum_i V[:, i] coeffs[i, t]` for every column `t` into the
    /// matching full-space amplitude vectors.
    fn expand(&self, coeffs: &Mat<C64>, out: &mut [Vec<C64>]) {
        let columns = match &self.vectors {
            Vectors::Real(u) => {
                let re = Mat::<f64>::from_fn(coeffs.nrows(), coeffs.ncols(), |i, j| coeffs[(i, j)].re);
                let im = Mat::<f64>::from_fn(coeffs.nrows(), coeffs.ncols(), |i, j| coeffs[(i, j)].im);
                let (pr, pi) = (u * &re, u * &im);
                Mat::<C64>::from_fn(pr.nrows(), pr.ncols(), |i, j| C64::new(pr[(i, j)], pi[(i, j)]))
            }
            Vectors::Complex(u) => u * coeffs,
        };
        for (t, amps) in out.iter_mut().enumerate() {
            for (r, &b) in self.basis.iter().enumerate() {
                amps[b] = columns[(r, t)];
            }
        }
    }
}

/// Lowest eigenpair of one parity block.
#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    pub state: StateVector,
    pub parity: Parity,
    /// First excitation within the same sector.
    pub sector_gap: f64,
    /// Set when the sector ground state is degenerate below 1e-10.
    pub degenerate: bool,
}

pub fn ground_state_in_sector(h: &PauliSum, parity: Parity) -> Result<GroundState> {
    ground_state_from(&diagonalize_sector(h, parity)?)
}

pub fn ground_state_from(spec: &SectorSpectrum) -> Result<GroundState> {
    let energy = *spec.energies.first().ok_or(Error::EmptySector(spec.parity.value()))?;
    let sector_gap = spec.energies.get(1).map_or(f64::INFINITY, |e| e - energy);
    let degenerate = sector_gap < DEGENERACY_TOL;
    if degenerate {
        log::warn!("degenerate ground state in parity {} sector (gap {sector_gap:e})", spec.parity.value());
    }
    Ok(GroundState { energy, state: spec.eigenvector(0), parity: spec.parity, sector_gap, degenerate })
}

/// Even-sector ground state of the model Hamiltonian.
pub fn model_ground_state(params: &ModelParams) -> Result<GroundState> {
    ground_state_in_sector(&build_hamiltonian(params)?, Parity::Even)
}

/// Full spectrum, ascending.
pub fn spectrum(h: &PauliSum) -> Result<Vec<f64>> {
    let mut all = sector_energies(h, Parity::Even)?;
    all.extend(sector_energies(h, Parity::Odd)?);
    all.sort_by(f64::total_cmp);
    Ok(all)
}

/// `lambda_2 - lambda_1` of the full spectrum.
pub fn energy_gap(h: &PauliSum) -> Result<f64> {
    let s = spectrum(h)?;
    Ok(s.get(1).map_or(0.0, |e| (e - s[0]).max(0.0)))
}

/// Both parity blocks of `h`, with eigenpairs addressable in global ascending order.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    sectors: [SectorSpectrum; 2],
    order: Vec<(usize, usize)>,
    eigenvalues: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn new(h: &PauliSum) -> Result<Self> {
        let sectors = [diagonalize_sector(h, Parity::Even)?, diagonalize_sector(h, Parity::Odd)?];
        let mut order: Vec<(usize, usize)> = (0..2)
            .flat_map(|s| (0..sectors[s].dim()).map(move |i| (s, i)))
            .collect();
        order.sort_by(|a, b| sectors[a.0].energies[a.1].total_cmp(&sectors[b.0].energies[b.1]));
        let eigenvalues = order.iter().map(|&(s, i)| sectors[s].energies[i]).collect();
        Ok(Self { sectors, order, eigenvalues })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn eigenvector(&self, i: usize) -> StateVector {
        let (s, j) = self.order[i];
        self.sectors[s].eigenvector(j)
    }

    pub fn parity_of(&self, i: usize) -> Parity {
        self.sectors[self.order[i].0].parity
    }

    pub fn sector(&self, parity: Parity) -> &SectorSpectrum {
        &self.sectors[if parity == Parity::Even { 0 } else { 1 }]
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Spectral-basis coefficients of `psi`, ready for repeated evolution.
    pub fn trajectory(&self, psi: &StateVector) -> Result<Trajectory<'_>> {
        if psi.n_qubits() != self.sectors[0].n_qubits {
            return Err(Error::QubitMismatch { expected: self.sectors[0].n_qubits, found: psi.n_qubits() });
        }
        let coeffs = [self.sectors[0].project(psi.amplitudes()), self.sectors[1].project(psi.amplitudes())];
        Ok(Trajectory { decomposition: self, coeffs })
    }

    /// `exp(-i h t) psi`.
    pub fn evolve(&self, psi: &StateVector, t: f64) -> Result<StateVector> {
        Ok(self.trajectory(psi)?.at(t))
    }
}

/// A fixed initial state expressed in the eigenbasis.
#[derive(Debug, Clone)]
pub struct Trajectory<'a> {
    decomposition: &'a SpectralDecomposition,
    coeffs: [Vec<C64>; 2],
}

impl Trajectory<'_> {
    pub fn at(&self, t: f64) -> StateVector {
        self.at_times(&[t]).pop().expect("one time")
    }

    /// States at all times, evaluated with one matrix product per sector.
    pub fn at_times(&self, times: &[f64]) -> Vec<StateVector> {
        let n = self.decomposition.sectors[0].n_qubits;
        let mut out = vec![vec![C64::new(0.0, 0.0); 1 << n]; times.len()];
        for (sector, c) in self.decomposition.sectors.iter().zip(&self.coeffs) {
            if c.iter().all(|z| z.norm_sqr() == 0.0) {
                continue;
            }
            let phased = Mat::<C64>::from_fn(c.len(), times.len(), |i, j| {
                c[i] * C64::from_polar(1.0, -sector.energies[i] * times[j])
            });
            sector.expand(&phased, &mut out);
        }
        out.into_iter().map(|amps| StateVector::from_raw(n, amps)).collect()
    }
}

/// `exp(-i h t) initial` by spectral decomposition.
pub fn evolve(h: &PauliSum, initial: &StateVector, t: f64) -> Result<StateVector> {
    if h.n_qubits() != initial.n_qubits() {
        return Err(Error::QubitMismatch { expected: h.n_qubits(), found: initial.n_qubits() });
    }
    SpectralDecomposition::new(h)?.evolve(initial, t)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyPoint {
    pub theta: f64,
    pub alpha: f64,
    pub entropy: f64,
    pub is_ridge: bool,
}

/// Half-chain entropy of the even-sector ground state over a `(theta, alpha)` lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyTable {
    pub n_qubits: usize,
    pub gamma: f64,
    /// Alpha-major, theta-minor.
    pub points: Vec<EntropyPoint>,
}

impl EntropyTable {
    /// Theta of maximal entropy at each alpha, in grid order.
    pub fn ridge(&self) -> Vec<EntropyPoint> {
        self.points.iter().filter(|p| p.is_ridge).copied().collect()
    }

    pub fn ridge_at(&self, alpha: f64) -> Option<EntropyPoint> {
        self.points.iter().find(|p| p.is_ridge && p.alpha == alpha).copied()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "theta,alpha,entropy,is_ridge")?;
        for p in &self.points {
            writeln!(w, "{},{},{},{}", csv_num(p.theta), csv_num(p.alpha), csv_num(p.entropy), p.is_ridge as u8)?;
        }
        Ok(())
    }

    pub fn write_ridge_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "alpha,theta,entropy")?;
        for p in self.ridge() {
            writeln!(w, "{},{},{}", csv_num(p.alpha), csv_num(p.theta), csv_num(p.entropy))?;
        }
        Ok(())
    }
}

pub fn entropy_sweep(
    n_qubits: usize,
    gamma: f64,
    thetas: &[f64],
    alphas: &[f64],
    base: EntropyBase,
) -> Result<EntropyTable> {
    if thetas.is_empty() || alphas.is_empty() {
        return Err(Error::InvalidModel { field: "grid", reason: "empty grid".into() });
    }
    let cells: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| thetas.iter().map(move |&t| (t, a))).collect();
    let entropies = cells
        .par_iter()
        .map(|&(theta, alpha)| {
            let gs = model_ground_state(&ModelParams::new(n_qubits, gamma, alpha, theta)?)?;
            gs.state.half_chain_entropy(base)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut points: Vec<EntropyPoint> = cells
        .iter()
        .zip(&entropies)
        .map(|(&(theta, alpha), &entropy)| EntropyPoint { theta, alpha, entropy, is_ridge: false })
        .collect();
    for row in points.chunks_mut(thetas.len()) {
        let best = (0..row.len()).fold(0, |b, i| if row[i].entropy > row[b].entropy { i } else { b });
        row[best].is_ridge = true;
    }
    Ok(EntropyTable { n_qubits, gamma, points })
}
