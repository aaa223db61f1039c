//! Pauli-string algebra and the long-range transverse-field XY model.
//!
//! Qubits are 1-based in prose (`Z_1` is the leftmost factor of a string)
//! and 0-based in code: factor `i` of a [`PauliString`] acts on qubit `i + 1`.
//! The computational basis follows `Z|0> = +|0>`, `Z|1> = -|1>`.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Single-qubit Pauli factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    /// True when the two single-site factors anticommute.
    fn anticommutes(self, other: Pauli) -> bool {
        self != Pauli::I && other != Pauli::I && self != other
    }
}

/// Collective spin direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    fn pauli(self) -> Pauli {
        match self {
            Axis::X => Pauli::X,
            Axis::Y => Pauli::Y,
            Axis::Z => Pauli::Z,
        }
    }
}

/// A real-weighted tensor product of Pauli factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    coefficient: f64,
    factors: Vec<Pauli>,
}

impl PauliString {
    pub fn new(coefficient: f64, factors: Vec<Pauli>) -> Result<Self> {
        if !coefficient.is_finite() {
            return Err(Error::Parse(format!("non-finite coefficient {coefficient}")));
        }
        if factors.is_empty() {
            return Err(Error::Parse("empty factor sequence".into()));
        }
        Ok(Self { coefficient, factors })
    }

    /// Builds a string that is the identity except on the listed `(qubit, factor)` sites.
    pub fn sparse(n_qubits: usize, coefficient: f64, sites: &[(usize, Pauli)]) -> Result<Self> {
        let mut factors = vec![Pauli::I; n_qubits];
        for &(q, p) in sites {
            if q >= n_qubits {
                return Err(Error::QubitOutOfRange { index: q, n_qubits });
            }
            factors[q] = p;
        }
        Self::new(coefficient, factors)
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.factors
    }

    pub fn n_qubits(&self) -> usize {
        self.factors.len()
    }

    /// Number of X or Y factors.
    pub fn xy_weight(&self) -> usize {
        self.factors
            .iter()
            .filter(|p| matches!(p, Pauli::X | Pauli::Y))
            .count()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        let anti = self
            .factors
            .iter()
            .zip(&other.factors)
            .filter(|(a, b)| a.anticommutes(**b))
            .count();
        anti % 2 == 0
    }

    /// Bit of basis index owned by qubit `q`; qubit 0 is the most significant bit.
    pub(crate) fn qubit_bit(n_qubits: usize, q: usize) -> usize {
        1 << (n_qubits - 1 - q)
    }

    /// `(flip, sign, n_y)` with `P|b> = i^{n_y} (-1)^{popcount(b & sign)} |b ^ flip>`.
    pub(crate) fn masks(&self) -> (usize, usize, u32) {
        let n = self.factors.len();
        let mut flip = 0;
        let mut sign = 0;
        let mut n_y = 0;
        for (q, p) in self.factors.iter().enumerate() {
            let bit = Self::qubit_bit(n, q);
            match p {
                Pauli::I => {}
                Pauli::X => flip |= bit,
                Pauli::Y => {
                    flip |= bit;
                    sign |= bit;
                    n_y += 1;
                }
                Pauli::Z => sign |= bit,
            }
        }
        (flip, sign, n_y)
    }

    fn label(&self) -> String {
        self.factors.iter().map(|p| p.as_char()).collect()
    }
}

/// Weighted sum of Pauli strings on a fixed number of qubits.
///
/// Terms with identical factor sequences are merged on construction, so the
/// term list never holds duplicates. Coefficients are real, which makes every
/// `PauliSum` Hermitian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliSum {
    n_qubits: usize,
    terms: Vec<PauliString>,
}

impl PauliSum {
    pub fn new(n_qubits: usize) -> Self {
        Self { n_qubits, terms: Vec::new() }
    }

    pub fn from_terms(n_qubits: usize, terms: impl IntoIterator<Item = PauliString>) -> Result<Self> {
        let mut sum = Self::new(n_qubits);
        for t in terms {
            sum.push(t)?;
        }
        Ok(sum)
    }

    /// Adds a term, merging it into an existing one with the same factors.
    pub fn push(&mut self, term: PauliString) -> Result<()> {
        if term.n_qubits() != self.n_qubits {
            return Err(Error::QubitMismatch { expected: self.n_qubits, found: term.n_qubits() });
        }
        if let Some(existing) = self.terms.iter_mut().find(|t| t.factors == term.factors) {
            existing.coefficient += term.coefficient;
        } else {
            self.terms.push(term);
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Coefficient of the term with the given factor label, e.g. `"XIX"`.
    pub fn coefficient_of(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.label() == label).map(|t| t.coefficient)
    }

    /// Drops terms whose coefficient magnitude is at most `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().filter(|t| t.coefficient.abs() > tol).cloned().collect(),
        }
    }

    /// Returns `self * factor` term by term.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| PauliString { coefficient: t.coefficient * factor, factors: t.factors.clone() })
                .collect(),
        }
    }

    /// Sum of two operators (merging shared terms).
    pub fn plus(&self, other: &PauliSum) -> Result<Self> {
        let mut out = self.clone();
        for t in &other.terms {
            out.push(t.clone())?;
        }
        Ok(out)
    }

    /// Sufficient commutation test: every pair of terms commutes.
    pub fn commutes_with(&self, other: &PauliSum) -> bool {
        self.terms
            .iter()
            .all(|a| other.terms.iter().all(|b| a.commutes_with(b)))
    }

    /// Equality of the underlying operators up to `tol` per coefficient,
    /// ignoring term order and treating absent terms as zero.
    pub fn approx_eq(&self, other: &PauliSum, tol: f64) -> bool {
        if self.n_qubits != other.n_qubits {
            return false;
        }
        let mut map: HashMap<&[Pauli], f64> = HashMap::new();
        for t in &self.terms {
            *map.entry(&t.factors).or_default() += t.coefficient;
        }
        for t in &other.terms {
            *map.entry(&t.factors).or_default() -= t.coefficient;
        }
        map.values().all(|d| d.abs() <= tol)
    }
}

impl fmt::Display for PauliSum {
    /// One term per line as `<coefficient> <factors>`; coefficients carry
    /// 17 significant digits so parsing the output reproduces them exactly.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(f, "{:.16e} {}", t.coefficient, t.label())?;
        }
        Ok(())
    }
}

impl FromStr for PauliSum {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut sum: Option<PauliSum> = None;
        for (lineno, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(c), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::Parse(format!("line {}: expected `<coefficient> <factors>`", lineno + 1)));
            };
            let coefficient: f64 = c
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad coefficient `{c}`", lineno + 1)))?;
            let factors = label
                .chars()
                .map(|ch| {
                    Pauli::from_char(ch)
                        .ok_or_else(|| Error::Parse(format!("line {}: bad Pauli factor `{ch}`", lineno + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            let term = PauliString::new(coefficient, factors)?;
            sum.get_or_insert_with(|| PauliSum::new(term.n_qubits())).push(term)?;
        }
        sum.ok_or_else(|| Error::Parse("no terms".into()))
    }
}

/// One point of the model family: chain length, anisotropy, decay exponent, field angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n_qubits: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub theta: f64,
}

impl ModelParams {
    pub fn new(n_qubits: usize, gamma: f64, alpha: f64, theta: f64) -> Result<Self> {
        let p = Self { n_qubits, gamma, alpha, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field, reason: String| Err(Error::InvalidModel { field, reason });
        if self.n_qubits < 2 {
            return bad("n_qubits", format!("{} < 2", self.n_qubits));
        }
        for (field, v) in [("gamma", self.gamma), ("alpha", self.alpha), ("theta", self.theta)] {
            if !v.is_finite() {
                return bad(field, format!("{v} is not finite"));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return bad("gamma", format!("{} outside [0, 1]", self.gamma));
        }
        if self.alpha < 0.0 {
            return bad("alpha", format!("{} < 0", self.alpha));
        }
        // a few ulps of slack so that grids built as `k * (pi/2) / n` stay valid
        if self.theta < 0.0 || self.theta > FRAC_PI_2 * (1.0 + 4.0 * f64::EPSILON) {
            return bad("theta", format!("{} outside [0, pi/2]", self.theta));
        }
        Ok(())
    }
}

/// Builds `cos(theta) sum_j Z_j + sin(theta) sum_k sum_j [(1+g) X_j X_{j+k} + (1-g) Y_j Y_{j+k}] / (2 k^alpha)`
/// with open boundaries.
///
/// Every Z and XX term is emitted even when its coefficient is zero; YY terms are
/// omitted only when `gamma == 1`, where they vanish identically.
pub fn build_hamiltonian(params: &ModelParams) -> Result<PauliSum> {
    params.validate()?;
    let n = params.n_qubits;
    let (field, exchange) = (params.theta.cos(), params.theta.sin());
    let mut h = PauliSum::new(n);
    for j in 0..n {
        h.push(PauliString::sparse(n, field, &[(j, Pauli::Z)])?)?;
    }
    for k in 1..n {
        let coupling = exchange / (2.0 * (k as f64).powf(params.alpha));
        for j in 0..n - k {
            let xx = coupling * (1.0 + params.gamma);
            h.push(PauliString::sparse(n, xx, &[(j, Pauli::X), (j + k, Pauli::X)])?)?;
            if params.gamma != 1.0 {
                let yy = coupling * (1.0 - params.gamma);
                h.push(PauliString::sparse(n, yy, &[(j, Pauli::Y), (j + k, Pauli::Y)])?)?;
            }
        }
    }
    Ok(h)
}

/// The global parity `Z_1 Z_2 ... Z_N`.
pub fn build_parity_operator(n_qubits: usize) -> Result<PauliSum> {
    if n_qubits == 0 {
        return Err(Error::InvalidModel { field: "n_qubits", reason: "0 qubits".into() });
    }
    PauliSum::from_terms(n_qubits, [PauliString::new(1.0, vec![Pauli::Z; n_qubits])?])
}

/// `S^axis = 1/2 sum_k sigma^axis_k`.
pub fn build_collective_spin(n_qubits: usize, axis: Axis) -> Result<PauliSum> {
    if n_qubits == 0 {
        return Err(Error::InvalidModel { field: "n_qubits", reason: "0 qubits".into() });
    }
    let p = axis.pauli();
    let terms = (0..n_qubits)
        .map(|q| PauliString::sparse(n_qubits, 0.5, &[(q, p)]))
        .collect::<Result<Vec<_>>>()?;
    PauliSum::from_terms(n_qubits, terms)
}
