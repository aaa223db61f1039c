//! k-distance layered ansatz.
//!
//! A layer `U_k` applies the entanglers `N_{j,j+k}(phi_j)` for `j = 1..N-k`
//! followed by a z-rotation on every qubit. Circuit strings such as
//! `"332211"` list layers in application order: the first digit acts on
//! the input state first, so the operator is `U_1 U_1 U_2 U_2 U_3 U_3`.

use std::fmt;

use nalgebra::{Matrix2, Matrix4};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::state::{StateVector, C64};
use crate::{Error, Result};

/// Order in which the entanglers of one layer are applied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntanglerOrder {
    #[default]
    Ascending,
    Descending,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitSpec {
    n_qubits: usize,
    gamma: f64,
    layer_distances: Vec<usize>,
    #[serde(default)]
    order: EntanglerOrder,
}

impl CircuitSpec {
    /// `layer_distances` in application order.
    pub fn new(n_qubits: usize, gamma: f64, layer_distances: Vec<usize>) -> Result<Self> {
        if n_qubits < 2 {
            return Err(Error::InvalidCircuit(format!("need at least 2 qubits, got {n_qubits}")));
        }
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidCircuit(format!("gamma {gamma} outside [0, 1]")));
        }
        if layer_distances.is_empty() {
            return Err(Error::InvalidCircuit("circuit has no layers".into()));
        }
        if let Some(&k) = layer_distances.iter().find(|&&k| k == 0 || k >= n_qubits) {
            return Err(Error::InvalidCircuit(format!("distance {k} outside 1..={} for N={n_qubits}", n_qubits - 1)));
        }
        Ok(Self { n_qubits, gamma, layer_distances, order: EntanglerOrder::Ascending })
    }

    /// Parses circuit notation; digits are taken in application order.
    pub fn parse(text: &str, n_qubits: usize, gamma: f64) -> Result<Self> {
        let text = text.trim();
        let distances = text
            .chars()
            .map(|c| match c.to_digit(10) {
                Some(d) if d > 0 => Ok(d as usize),
                _ => Err(Error::Parse(format!("bad layer `{c}` in circuit `{text}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n_qubits, gamma, distances)
    }

    /// Descending-grouped circuit with `m` layers and largest distance `k`.
    ///
    /// Layers are split as evenly as possible over distances `k, ..., 1`,
    /// larger distances taking the remainder, and applied largest first.
    pub fn descending(n_qubits: usize, gamma: f64, k: usize, m: usize) -> Result<Self> {
        if k == 0 || m < k {
            return Err(Error::InvalidCircuit(format!("{m} layers cannot hold distances 1..={k}")));
        }
        let (base, extra) = (m / k, m % k);
        let distances = (1..=k)
            .rev()
            .flat_map(|d| std::iter::repeat_n(d, base + usize::from(k - d < extra)))
            .collect();
        Self::new(n_qubits, gamma, distances)
    }

    pub fn with_order(mut self, order: EntanglerOrder) -> Self {
        self.order = order;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidCircuit(format!("gamma {gamma} outside [0, 1]")));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn order(&self) -> EntanglerOrder {
        self.order
    }

    pub fn layer_distances(&self) -> &[usize] {
        &self.layer_distances
    }

    pub fn n_layers(&self) -> usize {
        self.layer_distances.len()
    }

    /// Circuit string, first-applied layer first.
    pub fn notation(&self) -> String {
        self.layer_distances.iter().map(|k| k.to_string()).collect()
    }

    /// `L_k = 2N - k`.
    pub fn layer_len(&self, k: usize) -> usize {
        2 * self.n_qubits - k
    }

    /// Parameter offset of every layer, plus the total at the end.
    pub fn layer_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.n_layers() + 1);
        let mut acc = 0;
        offsets.push(0);
        for &k in &self.layer_distances {
            acc += self.layer_len(k);
            offsets.push(acc);
        }
        offsets
    }

    pub fn count_parameters(&self) -> usize {
        self.layer_distances.iter().map(|&k| self.layer_len(k)).sum()
    }

    /// Two-qubit gate cost of the CNOT decomposition: `2(N-k)` per layer at
    /// `gamma = 1`, `3(N-k)` otherwise.
    pub fn count_two_qubit_gates(&self) -> usize {
        let per_entangler = if self.gamma == 1.0 { 2 } else { 3 };
        self.layer_distances.iter().map(|&k| per_entangler * (self.n_qubits - k)).sum()
    }

    /// The first `m` layers.
    pub fn prefix(&self, m: usize) -> Result<Self> {
        let spec = Self::new(self.n_qubits, self.gamma, self.layer_distances[..m.min(self.n_layers())].to_vec())?;
        Ok(spec.with_order(self.order))
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &CircuitSpec) -> Result<Self> {
        if next.n_qubits != self.n_qubits {
            return Err(Error::QubitMismatch { expected: self.n_qubits, found: next.n_qubits });
        }
        let mut distances = self.layer_distances.clone();
        distances.extend(&next.layer_distances);
        Ok(Self::new(self.n_qubits, self.gamma, distances)?.with_order(self.order))
    }

    fn check_params(&self, params: &[f64]) -> Result<()> {
        let expected = self.count_parameters();
        if params.len() != expected {
            return Err(Error::LengthMismatch { expected, found: params.len() });
        }
        Ok(())
    }

    /// Flattened gate list for `params`, in application order.
    pub fn gates(&self, params: &[f64]) -> Result<Vec<Gate>> {
        self.check_params(params)?;
        let mut gates = Vec::with_capacity(params.len());
        for (l, &k) in self.layer_distances.iter().enumerate() {
            let offset = self.layer_offsets()[l];
            push_layer(&mut gates, self.n_qubits, k, self.gamma, self.order, offset, &params[offset..offset + self.layer_len(k)]);
        }
        Ok(gates)
    }
}

impl fmt::Display for CircuitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.notation())
    }
}

pub fn parse_spec(text: &str, n_qubits: usize, gamma: f64) -> Result<CircuitSpec> {
    CircuitSpec::parse(text, n_qubits, gamma)
}

pub fn count_two_qubit_gates(spec: &CircuitSpec) -> usize {
    spec.count_two_qubit_gates()
}

pub fn count_parameters(spec: &CircuitSpec) -> usize {
    spec.count_parameters()
}

/// Flat circuit parameters, layer blocks in application order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParameterVector(pub Vec<f64>);

impl ParameterVector {
    pub fn zeros(spec: &CircuitSpec) -> Self {
        Self(vec![0.0; spec.count_parameters()])
    }

    /// Independent draws from `N(0, sigma)`.
    pub fn random<R: Rng + ?Sized>(spec: &CircuitSpec, sigma: f64, rng: &mut R) -> Result<Self> {
        Ok(Self(sample_normal(spec.count_parameters(), sigma, rng)?))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn layer<'a>(&'a self, spec: &CircuitSpec, l: usize) -> &'a [f64] {
        let offsets = spec.layer_offsets();
        &self.0[offsets[l]..offsets[l + 1]]
    }
}

impl std::ops::Deref for ParameterVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn sample_normal<R: Rng + ?Sized>(n: usize, sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
    let dist = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidCircuit(format!("initialization sigma {sigma}: {e}")))?;
    Ok((0..n).map(|_| dist.sample(rng)).collect())
}

/// One parameterized gate of the ansatz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// `exp(-i (xx X_a X_b + yy Y_a Y_b))`, driven by parameter `param`
    /// through `xx = (1+gamma) phi`, `yy = (1-gamma) phi`.
    Entangler { a: usize, b: usize, xx: f64, yy: f64, param: usize, gamma: f64 },
    /// `diag(e^{-i phi/2}, e^{i phi/2})` on qubit `q`.
    Rz { q: usize, phi: f64, param: usize },
}

fn push_layer(
    gates: &mut Vec<Gate>,
    n: usize,
    k: usize,
    gamma: f64,
    order: EntanglerOrder,
    offset: usize,
    block: &[f64],
) {
    let pairs = n - k;
    let mut js: Vec<usize> = (0..pairs).collect();
    if order == EntanglerOrder::Descending {
        js.reverse();
    }
    for j in js {
        let phi = block[j];
        gates.push(Gate::Entangler {
            a: j,
            b: j + k,
            xx: (1.0 + gamma) * phi,
            yy: (1.0 - gamma) * phi,
            param: offset + j,
            gamma,
        });
    }
    for q in 0..n {
        gates.push(Gate::Rz { q, phi: block[pairs + q], param: offset + pairs + q });
    }
}

impl Gate {
    pub fn param(&self) -> usize {
        match *self {
            Gate::Entangler { param, .. } | Gate::Rz { param, .. } => param,
        }
    }

    pub fn apply(&self, psi: &mut StateVector) {
        match *self {
            Gate::Entangler { a, b, xx, yy, .. } => apply_entangler(psi, a, b, xx, yy),
            Gate::Rz { q, phi, .. } => apply_rz(psi, q, phi),
        }
    }

    pub fn apply_inverse(&self, psi: &mut StateVector) {
        match *self {
            Gate::Entangler { a, b, xx, yy, .. } => apply_entangler(psi, a, b, -xx, -yy),
            Gate::Rz { q, phi, .. } => apply_rz(psi, q, -phi),
        }
    }
}

/// Closed-form `exp(-i (xx XX + yy YY))`; basis order `|00>, |01>, |10>, |11>`.
///
/// The generator acts as `(xx - yy) sigma_x` on `{|00>, |11>}` and
/// `(xx + yy) sigma_x` on `{|01>, |10>}`.
pub fn entangler_from_angles(xx: f64, yy: f64) -> Matrix4<C64> {
    let (even, odd) = (xx - yy, xx + yy);
    let (ce, se) = (C64::new(even.cos(), 0.0), C64::new(0.0, -even.sin()));
    let (co, so) = (C64::new(odd.cos(), 0.0), C64::new(0.0, -odd.sin()));
    let z = C64::new(0.0, 0.0);
    #[rustfmt::skip]
    let m = Matrix4::new(
        ce, z,  z,  se,
        z,  co, so, z,
        z,  so, co, z,
        se, z,  z,  ce,
    );
    m
}

/// `exp(-i phi [(1+gamma) XX + (1-gamma) YY])`.
pub fn entangler_matrix(phi: f64, gamma: f64) -> Matrix4<C64> {
    entangler_from_angles((1.0 + gamma) * phi, (1.0 - gamma) * phi)
}

pub fn rz_matrix(phi: f64) -> Matrix2<C64> {
    let z = C64::new(0.0, 0.0);
    Matrix2::new(C64::from_polar(1.0, -phi / 2.0), z, z, C64::from_polar(1.0, phi / 2.0))
}

pub(crate) fn apply_entangler(psi: &mut StateVector, a: usize, b: usize, xx: f64, yy: f64) {
    let (ba, bb) = (psi.bit(a), psi.bit(b));
    let (even, odd) = (xx - yy, xx + yy);
    let (ce, se) = (even.cos(), C64::new(0.0, -even.sin()));
    let (co, so) = (odd.cos(), C64::new(0.0, -odd.sin()));
    // both 2x2 blocks are symmetric, so which bit is `a` does not matter
    let rotate = |x: &mut [C64], y: &mut [C64], c: f64, s: C64| {
        for (u, v) in x.iter_mut().zip(y.iter_mut()) {
            let (p, q) = (*u, *v);
            *u = p * c + q * s;
            *v = q * c + p * s;
        }
    };
    let (lo, hi) = (ba.min(bb), ba.max(bb));
    let amps = psi.amplitudes_mut();
    if lo >= MIN_RUN {
        for_each_quad(amps, lo, hi, |s00, s01, s10, s11| {
            rotate(s00, s11, ce, se);
            rotate(s01, s10, co, so);
        });
        return;
    }
    for r in 0..amps.len() / 4 {
        let i00 = insert_zero(insert_zero(r, lo), hi);
        let (i01, i10, i11) = (i00 | lo, i00 | hi, i00 | lo | hi);
        let (p, q) = (amps[i00], amps[i11]);
        amps[i00] = p * ce + q * se;
        amps[i11] = q * ce + p * se;
        let (p, q) = (amps[i01], amps[i10]);
        amps[i01] = p * co + q * so;
        amps[i10] = q * co + p * so;
    }
}

/// Shortest contiguous run worth slicing; below this, index arithmetic wins.
const MIN_RUN: usize = 8;

/// Visits the runs `(s00, s01, s10, s11)` of amplitudes whose bits
/// `(hi, lo)` take each value; `lo < hi` are single-bit masks.
pub(crate) fn for_each_quad(
    amps: &mut [C64],
    lo: usize,
    hi: usize,
    mut f: impl FnMut(&mut [C64], &mut [C64], &mut [C64], &mut [C64]),
) {
    for block in amps.chunks_exact_mut(2 * hi) {
        let (h0, h1) = block.split_at_mut(hi);
        for (c0, c1) in h0.chunks_exact_mut(2 * lo).zip(h1.chunks_exact_mut(2 * lo)) {
            let (s00, s01) = c0.split_at_mut(lo);
            let (s10, s11) = c1.split_at_mut(lo);
            f(s00, s01, s10, s11);
        }
    }
}

/// Offsets of the `s00` runs (length `lo`) visited by [`for_each_quad`].
fn quad_bases(len: usize, lo: usize, hi: usize) -> impl Iterator<Item = usize> {
    (0..len).step_by(2 * hi).flat_map(move |block| (block..block + hi).step_by(2 * lo))
}

/// Spreads `r` around a zero at the position of `bit` (a power of two).
#[inline]
pub(crate) fn insert_zero(r: usize, bit: usize) -> usize {
    ((r & !(bit - 1)) << 1) | (r & (bit - 1))
}

pub(crate) fn apply_rz(psi: &mut StateVector, q: usize, phi: f64) {
    let bit = psi.bit(q);
    let (p0, p1) = (C64::from_polar(1.0, -phi / 2.0), C64::from_polar(1.0, phi / 2.0));
    for (i, a) in psi.amplitudes_mut().iter_mut().enumerate() {
        *a *= if i & bit == 0 { p0 } else { p1 };
    }
}

/// `Im sum conj(l_i) p_{i ^ f}` over the pairings `00 <-> 11` and `01 <-> 10`.
fn im_pairs(lambda: &[C64], psi: &[C64], ba: usize, bb: usize) -> (f64, f64) {
    let (lo, hi) = (ba.min(bb), ba.max(bb));
    let cross = |x: &[C64], y: &[C64]| -> f64 { x.iter().zip(y).map(|(l, p)| l.re * p.im - l.im * p.re).sum() };
    let (mut same, mut differ) = (0.0, 0.0);
    if lo < MIN_RUN {
        let f = lo | hi;
        for (i, l) in lambda.iter().enumerate() {
            let p = psi[i ^ f];
            let v = l.re * p.im - l.im * p.re;
            if ((i & lo) == 0) == ((i & hi) == 0) {
                same += v;
            } else {
                differ += v;
            }
        }
        return (same, differ);
    }
    for base in quad_bases(psi.len(), lo, hi) {
        let run = |off: usize| base + off..base + off + lo;
        let (l00, l01, l10, l11) = (&lambda[run(0)], &lambda[run(lo)], &lambda[run(hi)], &lambda[run(hi + lo)]);
        let (p00, p01, p10, p11) = (&psi[run(0)], &psi[run(lo)], &psi[run(hi)], &psi[run(hi + lo)]);
        same += cross(l00, p11) + cross(l11, p00);
        differ += cross(l01, p10) + cross(l10, p01);
    }
    (same, differ)
}

/// `Im <lambda| X_a X_b |psi>`.
pub(crate) fn im_xx(lambda: &[C64], psi: &[C64], ba: usize, bb: usize) -> f64 {
    let (same, differ) = im_pairs(lambda, psi, ba, bb);
    same + differ
}

/// `(Im <lambda| X_a X_b |psi>, Im <lambda| Y_a Y_b |psi>)`.
pub(crate) fn im_xx_yy(lambda: &[C64], psi: &[C64], ba: usize, bb: usize) -> (f64, f64) {
    let (same, differ) = im_pairs(lambda, psi, ba, bb);
    (same + differ, differ - same)
}

pub fn rotation_layer(state: &mut StateVector, angles: &[f64]) -> Result<()> {
    if angles.len() != state.n_qubits() {
        return Err(Error::LengthMismatch { expected: state.n_qubits(), found: angles.len() });
    }
    for (q, &phi) in angles.iter().enumerate() {
        apply_rz(state, q, phi);
    }
    Ok(())
}

/// One `U_k` layer with block `(phi_1..phi_{N-k}, rotation angles)`.
pub fn apply_layer(state: &mut StateVector, k: usize, block: &[f64], gamma: f64, order: EntanglerOrder) -> Result<()> {
    let n = state.n_qubits();
    if k == 0 || k >= n {
        return Err(Error::InvalidCircuit(format!("distance {k} outside 1..={}", n - 1)));
    }
    if block.len() != 2 * n - k {
        return Err(Error::LengthMismatch { expected: 2 * n - k, found: block.len() });
    }
    let mut gates = Vec::with_capacity(block.len());
    push_layer(&mut gates, n, k, gamma, order, 0, block);
    gates.iter().for_each(|g| g.apply(state));
    Ok(())
}

pub fn apply_circuit(spec: &CircuitSpec, params: &[f64], initial: &StateVector) -> Result<StateVector> {
    if initial.n_qubits() != spec.n_qubits() {
        return Err(Error::QubitMismatch { expected: spec.n_qubits(), found: initial.n_qubits() });
    }
    let mut psi = initial.clone();
    for g in spec.gates(params)? {
        g.apply(&mut psi);
    }
    Ok(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::build_parity_operator;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn brute_entangler(phi: f64, gamma: f64) -> Matrix4<C64> {
        let x = Matrix2::new(c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.));
        let y = Matrix2::new(c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.));
        let xx = x.kronecker(&x);
        let yy = y.kronecker(&y);
        let gen = (xx * c(1.0 + gamma, 0.0) + yy * c(1.0 - gamma, 0.0)) * c(0.0, -phi);
        let m = DMatrix::from_fn(4, 4, |i, j| gen[(i, j)]).exp();
        Matrix4::from_fn(|i, j| m[(i, j)])
    }

    fn max_dev(a: &Matrix4<C64>, b: &Matrix4<C64>) -> f64 {
        (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn entangler_closed_form() {
        assert_eq!(entangler_matrix(0.0, 0.3), Matrix4::identity());
        let m = entangler_matrix(FRAC_PI_4, 1.0);
        assert!((m[(3, 0)] - c(0., -1.)).norm() < 1e-15 && m[(0, 0)].norm() < 1e-15);
        let m = entangler_matrix(0.77, 0.0);
        assert!((m[(0, 0)] - c(1., 0.)).norm() < 1e-15 && m[(3, 0)].norm() < 1e-15);
        assert!(max_dev(&m, &brute_entangler(0.77, 0.0)) < 1e-12);
        for (phi, gamma) in [(0.3, 0.5), (-1.2, 0.9), (2.5, 0.1)] {
            assert!(max_dev(&entangler_matrix(phi, gamma), &brute_entangler(phi, gamma)) < 1e-12);
        }
    }

    #[test]
    fn fast_kernel_matches_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = StateVector::random(5, &mut rng).unwrap();
        for (a, b) in [(0, 1), (3, 1), (0, 4)] {
            let (phi, gamma) = (0.4 + a as f64, 0.35);
            let mut fast = psi.clone();
            apply_entangler(&mut fast, a, b, (1.0 + gamma) * phi, (1.0 - gamma) * phi);
            let mut slow = psi.clone();
            slow.apply_two_qubit(a, b, &entangler_matrix(phi, gamma)).unwrap();
            assert!((fast.inner(&slow).unwrap() - 1.0).norm() < 1e-12);
        }
        let mut fast = psi.clone();
        apply_rz(&mut fast, 2, 0.9);
        let mut slow = psi.clone();
        slow.apply_one_qubit(2, &rz_matrix(0.9)).unwrap();
        assert!((fast.inner(&slow).unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn rotations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let psi = StateVector::random(3, &mut rng).unwrap();
        let mut s = psi.clone();
        rotation_layer(&mut s, &[0.0; 3]).unwrap();
        assert_eq!(s, psi);
        rotation_layer(&mut s, &[0.3, -2.0, 5.0]).unwrap();
        for (p, q) in s.probabilities().iter().zip(psi.probabilities()) {
            assert!((p - q).abs() < 1e-14);
        }
        let plus = StateVector::normalized(1, vec![c(1., 0.), c(1., 0.)]).unwrap();
        let mut flipped = plus.clone();
        rotation_layer(&mut flipped, &[PI]).unwrap();
        assert!(plus.fidelity(&flipped).unwrap() < 1e-15);
        assert!(rotation_layer(&mut s, &[0.0; 2]).is_err());
    }

    #[test]
    fn layer_structure() {
        let spec = CircuitSpec::parse("1", 4, 1.0).unwrap();
        let gates = spec.gates(&[0.1; 7]).unwrap();
        let pairs: Vec<(usize, usize)> = gates
            .iter()
            .filter_map(|g| match *g {
                Gate::Entangler { a, b, .. } => Some((a, b)),
                _ => None,
            })
            .collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2), (2, 3)]);
        assert!(matches!(gates[3], Gate::Rz { q: 0, .. }));
        assert_eq!(gates.len(), 7);

        let spec = CircuitSpec::parse("2", 4, 1.0).unwrap();
        let gates = spec.gates(&[0.1; 6]).unwrap();
        assert!(matches!(gates[0], Gate::Entangler { a: 0, b: 2, .. }));
        assert!(matches!(gates[1], Gate::Entangler { a: 1, b: 3, .. }));
        assert_eq!(gates.iter().filter(|g| matches!(g, Gate::Rz { .. })).count(), 4);

        let spec = spec.with_order(EntanglerOrder::Descending);
        assert!(matches!(spec.gates(&[0.1; 6]).unwrap()[0], Gate::Entangler { a: 1, b: 3, param: 1, .. }));

        let mut s = StateVector::zero_state(4).unwrap();
        apply_layer(&mut s, 2, &[0.0; 6], 1.0, EntanglerOrder::Ascending).unwrap();
        assert_eq!(s, StateVector::zero_state(4).unwrap());
        assert!(apply_layer(&mut s, 2, &[0.0; 7], 1.0, EntanglerOrder::Ascending).is_err());
    }

    #[test]
    fn circuits() {
        let spec = CircuitSpec::parse("1", 2, 1.0).unwrap();
        let zero = StateVector::zero_state(2).unwrap();
        let out = apply_circuit(&spec, &[FRAC_PI_4, 0.0, 0.0], &zero).unwrap();
        assert!((out.fidelity(&StateVector::from_bitstring("11").unwrap()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(apply_circuit(&spec, &[0.0; 3], &zero).unwrap(), zero);
        assert!(apply_circuit(&spec, &[0.0; 4], &zero).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = CircuitSpec::parse("21", 5, 0.4).unwrap();
        let b = CircuitSpec::parse("3", 5, 0.4).unwrap();
        let pa = ParameterVector::random(&a, 1.0, &mut rng).unwrap();
        let pb = ParameterVector::random(&b, 1.0, &mut rng).unwrap();
        let psi = StateVector::random(5, &mut rng).unwrap();
        let joint: Vec<f64> = pa.iter().chain(pb.iter()).copied().collect();
        let lhs = apply_circuit(&a.then(&b).unwrap(), &joint, &psi).unwrap();
        let rhs = apply_circuit(&b, &pb, &apply_circuit(&a, &pa, &psi).unwrap()).unwrap();
        assert!((lhs.inner(&rhs).unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn notation_and_counts() {
        let spec = CircuitSpec::parse("332211", 10, 1.0).unwrap();
        assert_eq!(spec.layer_distances(), &[3, 3, 2, 2, 1, 1]);
        assert_eq!(spec.notation(), "332211");
        assert_eq!(spec.count_parameters(), 108);
        assert_eq!(spec.count_two_qubit_gates(), 96);
        assert_eq!(CircuitSpec::parse("11", 10, 1.0).unwrap().count_parameters(), 38);
        assert_eq!(CircuitSpec::parse("212121", 10, 0.5).unwrap().count_two_qubit_gates(), 153);
        assert_eq!(spec.layer_offsets()[..3], [0, 17, 34]);
        assert!(CircuitSpec::parse("911", 8, 1.0).is_err());
        assert!(CircuitSpec::parse("1a", 8, 1.0).is_err());
        assert!(CircuitSpec::parse("", 8, 1.0).is_err());
        assert!(CircuitSpec::parse("10", 8, 1.0).is_err());
        assert_eq!(CircuitSpec::parse("1", 4, 1.0).unwrap().n_layers(), 1);
    }

    #[test]
    fn descending_groups() {
        let d = |k, m| CircuitSpec::descending(10, 1.0, k, m).unwrap().notation();
        assert_eq!(d(3, 5), "33221");
        assert_eq!(d(3, 6), "332211");
        assert_eq!(d(2, 5), "22211");
        assert_eq!(d(1, 4), "1111");
        assert_eq!(d(3, 3), "321");
        assert!(CircuitSpec::descending(10, 1.0, 3, 2).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(100))]

            #[test]
            fn entangler_matches_matrix_exponential(phi in -PI..PI, gamma in 0.0f64..=1.0) {
                prop_assert!(max_dev(&entangler_matrix(phi, gamma), &brute_entangler(phi, gamma)) < 1e-12);
            }

            #[test]
            fn circuits_preserve_norm_and_parity(
                seed in any::<u64>(), n in 2usize..8, layers in proptest::collection::vec(1usize..7, 1..4),
                gamma in 0.0f64..=1.0,
            ) {
                let layers: Vec<usize> = layers.iter().map(|k| 1 + (k - 1) % (n - 1)).collect();
                let spec = CircuitSpec::new(n, gamma, layers).unwrap();
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let params = ParameterVector::random(&spec, 1.5, &mut rng).unwrap();
                let z = build_parity_operator(n).unwrap();
                let out = apply_circuit(&spec, &params, &StateVector::zero_state(n).unwrap()).unwrap();
                prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-10);
                prop_assert!((out.expectation(&z).unwrap() - 1.0).abs() < 1e-10);

                let psi = StateVector::random(n, &mut rng).unwrap();
                let before = psi.expectation(&z).unwrap();
                let after = apply_circuit(&spec, &params, &psi).unwrap().expectation(&z).unwrap();
                prop_assert!((before - after).abs() < 1e-10);
            }
        }
    }
}
