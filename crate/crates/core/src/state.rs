//! Dense statevector simulation.
//!
//! Amplitudes are indexed so that qubit 1 (index 0 in code) is the most
//! significant bit of the basis index: `|q_1 q_2 ... q_N>` sits at
//! `sum_i q_i 2^(N - i)`.

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::pauli::{PauliString, PauliSum};
use crate::{Error, Result};

pub type C64 = Complex64;

/// Amplitude count above which the simulator refuses to allocate.
pub const MAX_DENSE_QUBITS: usize = 24;
const NORM_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-12;

/// Logarithm used for entanglement entropies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntropyBase {
    #[default]
    Natural,
    Two,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero_state(n_qubits: usize) -> Result<Self> {
        Self::basis_index(n_qubits, 0)
    }

    /// Computational basis state from a bit sequence, qubit 1 first.
    pub fn basis_state(n_qubits: usize, bits: &[bool]) -> Result<Self> {
        if bits.len() != n_qubits {
            return Err(Error::LengthMismatch { expected: n_qubits, found: bits.len() });
        }
        let index = bits.iter().fold(0usize, |acc, &b| (acc << 1) | b as usize);
        Self::basis_index(n_qubits, index)
    }

    /// Parses a string such as `"0101"` into a basis state.
    pub fn from_bitstring(bits: &str) -> Result<Self> {
        let bits = bits
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse(format!("bad bit `{c}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::basis_state(bits.len(), &bits)
    }

    pub fn basis_index(n_qubits: usize, index: usize) -> Result<Self> {
        check_size(n_qubits)?;
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::LengthMismatch { expected: dim, found: index });
        }
        let mut amps = vec![C64::new(0.0, 0.0); dim];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wraps amplitudes, checking length `2^n` and unit norm within 1e-10.
    pub fn from_amplitudes(n_qubits: usize, amps: Vec<C64>) -> Result<Self> {
        check_size(n_qubits)?;
        if amps.len() != 1 << n_qubits {
            return Err(Error::LengthMismatch { expected: 1 << n_qubits, found: amps.len() });
        }
        let norm_sqr = norm_sqr(&amps);
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { n_qubits, amps })
    }

    /// Normalizes arbitrary nonzero amplitudes.
    pub fn normalized(n_qubits: usize, mut amps: Vec<C64>) -> Result<Self> {
        let n = norm_sqr(&amps).sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotNormalized { norm_sqr: n * n });
        }
        amps.iter_mut().for_each(|a| *a /= n);
        Self::from_amplitudes(n_qubits, amps)
    }

    /// Haar-random pure state (normalized complex Gaussian vector).
    pub fn random<R: Rng + ?Sized>(n_qubits: usize, rng: &mut R) -> Result<Self> {
        check_size(n_qubits)?;
        let amps = (0..1usize << n_qubits)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        Self::normalized(n_qubits, amps)
    }

    pub(crate) fn from_raw(n_qubits: usize, amps: Vec<C64>) -> Self {
        debug_assert_eq!(amps.len(), 1 << n_qubits);
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        self.same_size(other)?;
        Ok(inner(&self.amps, &other.amps))
    }

    /// `|<a|b>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr().min(1.0))
    }

    fn same_size(&self, other: &StateVector) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch { expected: self.n_qubits, found: other.n_qubits });
        }
        Ok(())
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::QubitOutOfRange { index: q, n_qubits: self.n_qubits });
        }
        Ok(())
    }

    pub(crate) fn bit(&self, q: usize) -> usize {
        PauliString::qubit_bit(self.n_qubits, q)
    }

    /// Applies a 2x2 unitary to qubit `q` (0-based).
    pub fn apply_one_qubit(&mut self, q: usize, u: &Matrix2<C64>) -> Result<()> {
        self.check_qubit(q)?;
        let deviation = (u.adjoint() * u - Matrix2::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        self.apply_one_qubit_unchecked(q, u);
        Ok(())
    }

    pub(crate) fn apply_one_qubit_unchecked(&mut self, q: usize, u: &Matrix2<C64>) {
        let bit = self.bit(q);
        let (u00, u01, u10, u11) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
        for r in 0..self.amps.len() / 2 {
            let base = crate::ansatz::insert_zero(r, bit);
            let a0 = self.amps[base];
            let a1 = self.amps[base | bit];
            self.amps[base] = u00 * a0 + u01 * a1;
            self.amps[base | bit] = u10 * a0 + u11 * a1;
        }
    }

    /// Applies a 4x4 unitary to qubits `(q1, q2)`; row/column index is `2 b(q1) + b(q2)`.
    pub fn apply_two_qubit(&mut self, q1: usize, q2: usize, u: &Matrix4<C64>) -> Result<()> {
        self.check_qubit(q1)?;
        self.check_qubit(q2)?;
        if q1 == q2 {
            return Err(Error::SameQubit(q1));
        }
        let deviation = (u.adjoint() * u - Matrix4::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        self.apply_two_qubit_unchecked(q1, q2, u);
        Ok(())
    }

    pub(crate) fn apply_two_qubit_unchecked(&mut self, q1: usize, q2: usize, u: &Matrix4<C64>) {
        let (b1, b2) = (self.bit(q1), self.bit(q2));
        let offsets = [0, b2, b1, b1 | b2];
        for r in 0..self.amps.len() / 4 {
            let base = crate::ansatz::insert_zero(crate::ansatz::insert_zero(r, b1.min(b2)), b1.max(b2));
            let a = offsets.map(|o| self.amps[base | o]);
            for (r, o) in offsets.iter().enumerate() {
                self.amps[base | o] = (0..4).map(|c| u[(r, c)] * a[c]).sum();
            }
        }
    }

    /// `<psi|op|psi>` for a Hermitian Pauli sum.
    pub fn expectation(&self, op: &PauliSum) -> Result<f64> {
        if op.n_qubits() != self.n_qubits {
            return Err(Error::QubitMismatch { expected: self.n_qubits, found: op.n_qubits() });
        }
        let mut total = C64::new(0.0, 0.0);
        let mut scale = 0.0;
        for term in op.terms() {
            let (flip, sign, n_y) = term.masks();
            let phase = i_pow(n_y);
            let mut acc = C64::new(0.0, 0.0);
            for (b, a) in self.amps.iter().enumerate() {
                let s = if (b & sign).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                acc += self.amps[b ^ flip].conj() * a * s;
            }
            total += acc * phase * term.coefficient();
            scale += term.coefficient().abs();
        }
        if total.im.abs() > NORM_TOL * scale.max(1.0) {
            return Err(Error::NonHermitian(total.im));
        }
        Ok(total.re)
    }

    /// Von Neumann entropy of the leftmost `n_left` qubits.
    ///
    /// Eigenvalues of the reduced density matrix below 1e-14 are skipped.
    pub fn entanglement_entropy(&self, n_left: usize, base: EntropyBase) -> Result<f64> {
        if n_left > self.n_qubits {
            return Err(Error::QubitOutOfRange { index: n_left, n_qubits: self.n_qubits });
        }
        let dim_l = 1usize << n_left;
        let dim_r = 1usize << (self.n_qubits - n_left);
        // rho_L = M M^dagger with M[l, r] = psi[l * dim_r + r]
        let rho = faer::Mat::<C64>::from_fn(dim_l, dim_l, |i, j| {
            let row_i = &self.amps[i * dim_r..(i + 1) * dim_r];
            let row_j = &self.amps[j * dim_r..(j + 1) * dim_r];
            row_i.iter().zip(row_j).map(|(a, b)| a * b.conj()).sum()
        });
        let eig = rho
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let log = |p: f64| match base {
            EntropyBase::Natural => p.ln(),
            EntropyBase::Two => p.log2(),
        };
        let s: f64 = eig.iter().filter(|&&p| p > 1e-14).map(|&p| -p * log(p)).sum();
        Ok(s.max(0.0))
    }

    /// Entropy of the left `ceil(N/2)` qubits.
    pub fn half_chain_entropy(&self, base: EntropyBase) -> Result<f64> {
        self.entanglement_entropy(self.n_qubits.div_ceil(2), base)
    }

    /// Marginal probability that qubit `q` reads 0.
    pub fn marginal_zero(&self, q: usize) -> Result<f64> {
        self.check_qubit(q)?;
        let bit = self.bit(q);
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit == 0)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }
}

fn check_size(n_qubits: usize) -> Result<()> {
    if n_qubits == 0 || n_qubits > MAX_DENSE_QUBITS {
        return Err(Error::OverCeiling { n_qubits, ceiling: MAX_DENSE_QUBITS });
    }
    Ok(())
}

pub(crate) fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}

/// `sum_i conj(a_i) b_i`.
pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn i_pow(n: u32) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// A Pauli sum compiled into flip masks with precomputed diagonal weights,
/// so `op |psi>` costs one pass over the amplitudes per distinct flip mask.
///
/// Terms sharing a flip mask (e.g. `X_j X_k` and `Y_j Y_k`) are fused.
#[derive(Debug, Clone)]
pub struct CompiledOperator {
    n_qubits: usize,
    blocks: Vec<(usize, Vec<C64>)>,
    /// Same blocks with real weights, when every weight is real.
    real: Option<Vec<(usize, Vec<f64>)>>,
}

impl CompiledOperator {
    pub fn new(op: &PauliSum) -> Result<Self> {
        check_size(op.n_qubits())?;
        let n = op.n_qubits();
        let dim = 1usize << n;
        let mut blocks: Vec<(usize, Vec<C64>)> = Vec::new();
        for term in op.terms() {
            let (flip, sign, n_y) = term.masks();
            let w = i_pow(n_y) * term.coefficient();
            let idx = match blocks.iter().position(|(f, _)| *f == flip) {
                Some(i) => i,
                None => {
                    blocks.push((flip, vec![C64::new(0.0, 0.0); dim]));
                    blocks.len() - 1
                }
            };
            for (b, d) in blocks[idx].1.iter_mut().enumerate() {
                if (b & sign).count_ones() % 2 == 0 {
                    *d += w;
                } else {
                    *d -= w;
                }
            }
        }
        let real = blocks
            .iter()
            .all(|(_, d)| d.iter().all(|z| z.im == 0.0))
            .then(|| blocks.iter().map(|(f, d)| (*f, d.iter().map(|z| z.re).collect())).collect());
        Ok(Self { n_qubits: n, blocks, real })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// `(flip mask, diagonal weights)` pairs: `op |b> = sum_f D_f[b] |b ^ f>`.
    pub(crate) fn blocks(&self) -> &[(usize, Vec<C64>)] {
        &self.blocks
    }

    /// Writes `op |psi>` into `out`.
    pub fn apply_into(&self, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        if let Some(real) = &self.real {
            for (flip, diag) in real {
                for (b, (a, d)) in psi.iter().zip(diag).enumerate() {
                    out[b ^ flip] += a * d;
                }
            }
            return;
        }
        for (flip, diag) in &self.blocks {
            for (b, (a, d)) in psi.iter().zip(diag).enumerate() {
                out[b ^ flip] += d * a;
            }
        }
    }

    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        self.apply_into(psi, &mut out);
        out
    }

    /// `<psi|op|psi>` (real part; the operator is Hermitian by construction).
    pub fn expectation(&self, psi: &[C64]) -> f64 {
        let Some(real) = &self.real else {
            let mut total = 0.0;
            for (flip, diag) in &self.blocks {
                for (b, (a, d)) in psi.iter().zip(diag).enumerate() {
                    total += (psi[b ^ flip].conj() * d * a).re;
                }
            }
            return total;
        };
        let mut total = 0.0;
        for (flip, diag) in real {
            if *flip == 0 {
                total += psi.iter().zip(diag).map(|(a, d)| a.norm_sqr() * d).sum::<f64>();
                continue;
            }
            // real Hermitian: D[b] = D[b ^ flip], so pair each b with its partner once
            let top = 1usize << (usize::BITS - 1 - flip.leading_zeros());
            let low = flip ^ top;
            let mut acc = 0.0;
            for (chunk, dchunk) in psi.chunks_exact(2 * top).zip(diag.chunks_exact(2 * top)) {
                let (lo, hi) = chunk.split_at(top);
                for (j, (a, d)) in lo.iter().zip(&dchunk[..top]).enumerate() {
                    let p = hi[j ^ low];
                    acc += d * (a.re * p.re + a.im * p.im);
                }
            }
            total += 2.0 * acc;
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{build_collective_spin, build_hamiltonian, Axis, ModelParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn x_gate() -> Matrix2<C64> {
        Matrix2::new(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.))
    }

    fn hadamard() -> Matrix2<C64> {
        Matrix2::new(c(1., 0.), c(1., 0.), c(1., 0.), c(-1., 0.)) * c(FRAC_1_SQRT_2, 0.0)
    }

    fn cnot() -> Matrix4<C64> {
        let mut m = Matrix4::zeros();
        m[(0, 0)] = c(1., 0.);
        m[(1, 1)] = c(1., 0.);
        m[(2, 3)] = c(1., 0.);
        m[(3, 2)] = c(1., 0.);
        m
    }

    /// Random 4x4 unitary via Gram-Schmidt on a complex Gaussian matrix.
    fn random_unitary4(rng: &mut ChaCha8Rng) -> Matrix4<C64> {
        let m = Matrix4::from_fn(|_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        m.qr().q()
    }

    #[test]
    fn basis_states() {
        let s = StateVector::from_bitstring("00").unwrap();
        assert_eq!(s.amplitudes(), &[c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.)]);
        let s = StateVector::basis_state(1, &[true]).unwrap();
        assert_eq!(s.amplitudes(), &[c(0., 0.), c(1., 0.)]);
        assert_eq!(s.norm_sqr(), 1.0);
        assert!(StateVector::basis_state(3, &[true]).is_err());
        assert!(StateVector::from_amplitudes(1, vec![c(1., 0.), c(1., 0.)]).is_err());
    }

    #[test]
    fn one_qubit_gates() {
        let mut s = StateVector::zero_state(1).unwrap();
        s.apply_one_qubit(0, &Matrix2::identity()).unwrap();
        assert_eq!(s, StateVector::zero_state(1).unwrap());
        s.apply_one_qubit(0, &x_gate()).unwrap();
        assert_eq!(s, StateVector::from_bitstring("1").unwrap());

        let phi = 0.7;
        let rz = Matrix2::new(c(0., -phi / 2.).exp(), c(0., 0.), c(0., 0.), c(0., phi / 2.).exp());
        let mut s = StateVector::zero_state(1).unwrap();
        s.apply_one_qubit(0, &rz).unwrap();
        assert!((s.amplitudes()[0] - c(0., -phi / 2.).exp()).norm() < 1e-15);
        assert!((s.probabilities()[0] - 1.0).abs() < 1e-15);

        assert!(matches!(s.apply_one_qubit(1, &x_gate()), Err(Error::QubitOutOfRange { .. })));
        let not_unitary = Matrix2::new(c(1., 0.), c(1., 0.), c(0., 0.), c(1., 0.));
        assert!(matches!(s.apply_one_qubit(0, &not_unitary), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn two_qubit_gates() {
        let mut s = StateVector::from_bitstring("10").unwrap();
        s.apply_two_qubit(0, 1, &cnot()).unwrap();
        assert_eq!(s, StateVector::from_bitstring("11").unwrap());
        // control on the second qubit, target far away
        let mut s = StateVector::from_bitstring("0101").unwrap();
        s.apply_two_qubit(3, 0, &cnot()).unwrap();
        assert_eq!(s, StateVector::from_bitstring("1101").unwrap());

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary4(&mut rng);
        let start = StateVector::random(4, &mut rng).unwrap();
        let mut s = start.clone();
        s.apply_two_qubit(2, 0, &u).unwrap();
        s.apply_two_qubit(2, 0, &u.adjoint()).unwrap();
        let dev = s.amplitudes().iter().zip(start.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(dev < 1e-12);

        assert!(matches!(s.apply_two_qubit(1, 1, &u), Err(Error::SameQubit(1))));
        assert!(matches!(s.apply_two_qubit(1, 1, &(u * c(2., 0.))), Err(Error::SameQubit(1))));
        assert!(matches!(s.apply_two_qubit(0, 1, &(u * c(2., 0.))), Err(Error::NotUnitary { .. })));
    }

    #[test]
    fn expectation_values() {
        let n = 5;
        let zero = StateVector::zero_state(n).unwrap();
        let z = build_collective_spin(n, Axis::Z).unwrap().scaled(2.0);
        assert!((zero.expectation(&z).unwrap() - n as f64).abs() < 1e-14);
        let xx: PauliSum = "1 XXIII".parse().unwrap();
        assert_eq!(zero.expectation(&xx).unwrap(), 0.0);
        let sz10 = build_collective_spin(10, Axis::Z).unwrap();
        assert!((StateVector::zero_state(10).unwrap().expectation(&sz10).unwrap() - 5.0).abs() < 1e-13);
        assert!(zero.expectation(&build_collective_spin(4, Axis::Z).unwrap()).is_err());
    }

    #[test]
    fn two_qubit_ground_energy() {
        // cos t (Z1 + Z2) + sin t X1X2 with t = pi/4: lowest eigenvalue -sqrt(2.5) ... in units of 1/sqrt(2)
        // even block {|00>,|11>}: [[2c, s],[s, -2c]] -> -sqrt(4c^2 + s^2)
        let t = PI / 4.0;
        let h = build_hamiltonian(&ModelParams::new(2, 1.0, 1.0, t).unwrap()).unwrap();
        let (cs, sn) = (t.cos(), t.sin());
        let e0 = -(4.0 * cs * cs + sn * sn).sqrt();
        assert!((e0 + 2.5f64.sqrt()).abs() < 1e-15);
        // eigenvector of [[2c, s],[s,-2c]] for e0
        let v = [sn, e0 - 2.0 * cs];
        let nrm = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let gs = StateVector::from_amplitudes(2, vec![c(v[0] / nrm, 0.), c(0., 0.), c(0., 0.), c(v[1] / nrm, 0.)]).unwrap();
        assert!((gs.expectation(&h).unwrap() - e0).abs() < 1e-12);
    }

    #[test]
    fn fidelities() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let s = StateVector::random(3, &mut rng).unwrap();
        assert!((s.fidelity(&s).unwrap() - 1.0).abs() < 1e-14);
        let a = StateVector::from_bitstring("00").unwrap();
        let b = StateVector::from_bitstring("11").unwrap();
        assert_eq!(a.fidelity(&b).unwrap(), 0.0);
        let mut plus = StateVector::zero_state(1).unwrap();
        plus.apply_one_qubit(0, &hadamard()).unwrap();
        assert!((StateVector::zero_state(1).unwrap().fidelity(&plus).unwrap() - 0.5).abs() < 1e-15);
        assert!(a.fidelity(&plus).is_err());
    }

    #[test]
    fn entropies() {
        let prod = StateVector::from_bitstring("0101").unwrap();
        assert!(prod.half_chain_entropy(EntropyBase::Natural).unwrap().abs() < 1e-12);

        let bell = StateVector::normalized(2, vec![c(1., 0.), c(0., 0.), c(0., 0.), c(1., 0.)]).unwrap();
        assert!((bell.half_chain_entropy(EntropyBase::Natural).unwrap() - LN_2).abs() < 1e-12);
        assert!((bell.half_chain_entropy(EntropyBase::Two).unwrap() - 1.0).abs() < 1e-12);

        let mut ghz = vec![c(0., 0.); 16];
        ghz[0] = c(1., 0.);
        ghz[15] = c(1., 0.);
        let ghz = StateVector::normalized(4, ghz).unwrap();
        assert!((ghz.half_chain_entropy(EntropyBase::Natural).unwrap() - LN_2).abs() < 1e-12);
    }

    #[test]
    fn compiled_operator_matches_term_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = build_hamiltonian(&ModelParams::new(5, 0.3, 1.2, 0.9).unwrap()).unwrap();
        let op = CompiledOperator::new(&h).unwrap();
        let s = StateVector::random(5, &mut rng).unwrap();
        assert!((op.expectation(s.amplitudes()) - s.expectation(&h).unwrap()).abs() < 1e-12);
        // XX and YY on the same pair share one flip mask
        assert_eq!(op.blocks.len(), 1 + 10);
        let y: PauliSum = "0.5 YIIIZ\n0.25 IXZII".parse().unwrap();
        let op = CompiledOperator::new(&y).unwrap();
        let hy = op.apply(s.amplitudes());
        assert!((inner(s.amplitudes(), &hy).re - s.expectation(&y).unwrap()).abs() < 1e-12);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_state(n: usize, seed: u64) -> StateVector {
            StateVector::random(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn gates_preserve_norm_and_distant_marginals(
                n in 3usize..7, seed in any::<u64>(), q1 in 0usize..7, q2 in 0usize..7,
            ) {
                let (q1, q2) = (q1 % n, q2 % n);
                prop_assume!(q1 != q2);
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
                let mut s = random_state(n, seed);
                let before: Vec<f64> = (0..n).map(|q| s.marginal_zero(q).unwrap()).collect();
                s.apply_two_qubit(q1, q2, &random_unitary4(&mut rng)).unwrap();
                prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
                for q in (0..n).filter(|&q| q != q1 && q != q2) {
                    prop_assert!((s.marginal_zero(q).unwrap() - before[q]).abs() < 1e-12);
                }
            }

            #[test]
            fn expectation_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
                let s = random_state(4, seed);
                let p: PauliSum = "1 XYZI".parse().unwrap();
                let q: PauliSum = "1 ZIZX\n0.5 IYYI".parse().unwrap();
                let combo = p.scaled(a).plus(&q.scaled(b)).unwrap();
                let lhs = s.expectation(&combo).unwrap();
                let rhs = a * s.expectation(&p).unwrap() + b * s.expectation(&q).unwrap();
                prop_assert!((lhs - rhs).abs() < 1e-12);
            }

            #[test]
            fn entropy_invariant_under_local_unitaries(seed in any::<u64>()) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
                let mut s = random_state(6, seed);
                let before = s.half_chain_entropy(EntropyBase::Natural).unwrap();
                s.apply_two_qubit(0, 2, &random_unitary4(&mut rng)).unwrap();
                s.apply_two_qubit(4, 3, &random_unitary4(&mut rng)).unwrap();
                let after = s.half_chain_entropy(EntropyBase::Natural).unwrap();
                prop_assert!((before - after).abs() < 1e-10);
            }
        }
    }
}
