//! Spin squeezing `xi^2 = N Var[cos(b) S_x + sin(b) S_y] / <S_z>^2` and the
//! three ways of producing it: exact ground states, quench dynamics from
//! `|0...0>`, and circuits trained to minimize `xi^2` at `b = 0`.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::CircuitSpec;
use crate::exact::{model_ground_state, SpectralDecomposition};
use crate::format::csv_num;
use crate::lbfgs::OptimizerOptions;
use crate::pauli::{build_collective_spin, build_hamiltonian, Axis, ModelParams, Pauli, PauliString, PauliSum};
use crate::seed::extend_seed;
use crate::state::{inner, CompiledOperator, StateVector};
use crate::vqe::{train, Objective, TrainingMode};
use crate::{Error, Result};

/// Below this `|<S_z>|^2` the squeezing parameter is undefined.
pub const DEGENERATE_POLARIZATION: f64 = 1e-12;
/// Quench times with `|<S_z>|^2 < QUENCH_FLAG * (N/2)^2` are excluded.
pub const QUENCH_FLAG: f64 = 1e-6;

/// `r = max(-10 log10 xi^2, 0)` in decibels.
pub fn r_db(xi_squared: f64) -> f64 {
    (-10.0 * xi_squared.log10()).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    Ground,
    Quench,
    Variational,
}

impl Protocol {
    pub fn as_str(self) -> &'static str {
        match self {
            Protocol::Ground => "ground",
            Protocol::Quench => "quench",
            Protocol::Variational => "variational",
        }
    }
}

/// First and second moments of the collective spin needed for `xi^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinMoments {
    pub n_qubits: usize,
    pub sx: f64,
    pub sy: f64,
    pub sz: f64,
    pub var_x: f64,
    pub var_y: f64,
    /// `1/2 <{S_x, S_y}> - <S_x><S_y>`.
    pub cov_xy: f64,
}

/// Collective spin operators for one system size.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    n_qubits: usize,
    x: CompiledOperator,
    y: CompiledOperator,
    z: CompiledOperator,
}

impl SpinOperators {
    pub fn new(n_qubits: usize) -> Result<Self> {
        Ok(Self {
            n_qubits,
            x: CompiledOperator::new(&build_collective_spin(n_qubits, Axis::X)?)?,
            y: CompiledOperator::new(&build_collective_spin(n_qubits, Axis::Y)?)?,
            z: CompiledOperator::new(&build_collective_spin(n_qubits, Axis::Z)?)?,
        })
    }

    pub fn moments(&self, psi: &StateVector) -> Result<SpinMoments> {
        if psi.n_qubits() != self.n_qubits {
            return Err(Error::QubitMismatch { expected: self.n_qubits, found: psi.n_qubits() });
        }
        let amps = psi.amplitudes();
        let (xpsi, ypsi) = (self.x.apply(amps), self.y.apply(amps));
        let sx = inner(amps, &xpsi).re;
        let sy = inner(amps, &ypsi).re;
        let sz = self.z.expectation(amps);
        let x2: f64 = xpsi.iter().map(|a| a.norm_sqr()).sum();
        let y2: f64 = ypsi.iter().map(|a| a.norm_sqr()).sum();
        // 1/2 <{Sx, Sy}> = Re <Sx psi | Sy psi>
        let anti = inner(&xpsi, &ypsi).re;
        Ok(SpinMoments {
            n_qubits: self.n_qubits,
            sx,
            sy,
            sz,
            var_x: x2 - sx * sx,
            var_y: y2 - sy * sy,
            cov_xy: anti - sx * sy,
        })
    }
}

impl SpinMoments {
    fn check_polarization(&self) -> Result<f64> {
        let sz2 = self.sz * self.sz;
        if sz2 < DEGENERATE_POLARIZATION {
            return Err(Error::DegeneratePolarization(sz2));
        }
        Ok(sz2)
    }

    /// `Var[cos(b) S_x + sin(b) S_y]`.
    pub fn transverse_variance(&self, beta: f64) -> f64 {
        let (s, c) = beta.sin_cos();
        c * c * self.var_x + s * s * self.var_y + 2.0 * s * c * self.cov_xy
    }

    pub fn xi_squared(&self, beta: f64) -> Result<f64> {
        Ok(self.n_qubits as f64 * self.transverse_variance(beta) / self.check_polarization()?)
    }

    /// Minimum over `b` from the smaller eigenvalue of the transverse
    /// covariance matrix, with the minimizing angle in `[0, pi)`.
    ///
    /// Writing the variance as `m + R cos(2b - phi)`, the minimum sits at
    /// `2b = phi + pi`. An isotropic covariance returns `b = 0`.
    pub fn min_xi_squared(&self) -> Result<(f64, f64)> {
        let sz2 = self.check_polarization()?;
        let mean = 0.5 * (self.var_x + self.var_y);
        let half_diff = 0.5 * (self.var_x - self.var_y);
        let radius = half_diff.hypot(self.cov_xy);
        let beta = if radius <= 1e-14 * mean.abs().max(1.0) {
            0.0
        } else {
            (0.5 * (self.cov_xy.atan2(half_diff) + PI)).rem_euclid(PI)
        };
        // det / lambda_max avoids cancellation when one variance dominates
        let lambda_max = mean + radius;
        let det = self.var_x * self.var_y - self.cov_xy * self.cov_xy;
        let lambda_min = if lambda_max > 0.0 { det / lambda_max } else { 0.0 };
        Ok((self.n_qubits as f64 * lambda_min / sz2, beta))
    }
}

pub fn xi_squared(state: &StateVector, beta: f64) -> Result<f64> {
    SpinOperators::new(state.n_qubits())?.moments(state)?.xi_squared(beta)
}

pub fn min_xi_squared(state: &StateVector) -> Result<(f64, f64)> {
    SpinOperators::new(state.n_qubits())?.moments(state)?.min_xi_squared()
}

/// Golden-section minimizer of a unimodal `f` on `[a, b]`.
pub fn golden_section<F: FnMut(f64) -> Result<f64>>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// `min_b xi^2` by scanning `n_grid` angles in `[0, pi)` and refining the
/// best cell by golden section. Independent of the closed form.
pub fn scan_min_xi_squared(moments: &SpinMoments, n_grid: usize) -> Result<(f64, f64)> {
    let step = PI / n_grid as f64;
    let mut best = (0.0, f64::INFINITY);
    for i in 0..n_grid {
        let b = i as f64 * step;
        let v = moments.xi_squared(b)?;
        if v < best.1 {
            best = (b, v);
        }
    }
    let (b, v) = golden_section(|b| moments.xi_squared(b), best.0 - step, best.0 + step, 1e-12)?;
    Ok(if v < best.1 { (b.rem_euclid(PI), v) } else { best })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SqueezingReport {
    pub protocol: Protocol,
    pub xi_squared: f64,
    pub r_db: f64,
    pub beta_star: f64,
    pub t_star: Option<f64>,
    pub theta: Option<f64>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    /// Quench grid times excluded for weak polarization.
    pub flagged_times: usize,
}

impl SqueezingReport {
    fn new(protocol: Protocol, xi_squared: f64, beta_star: f64) -> Self {
        Self {
            protocol,
            xi_squared,
            r_db: r_db(xi_squared),
            beta_star,
            t_star: None,
            theta: None,
            alpha: None,
            seed: None,
            flagged_times: 0,
        }
    }

    fn at(mut self, model: &ModelParams) -> Self {
        self.theta = Some(model.theta);
        self.alpha = Some(model.alpha);
        self
    }

    pub const CSV_HEADER: &'static str = "protocol,theta,alpha,r,xi2,beta_star,t_star,seed";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(csv_num).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.protocol.as_str(),
            opt(self.theta),
            opt(self.alpha),
            csv_num(self.r_db),
            csv_num(self.xi_squared),
            csv_num(self.beta_star),
            opt(self.t_star),
            self.seed.map(|s| s.to_string()).unwrap_or_default()
        )
    }
}

pub fn write_reports_csv<W: Write>(mut w: W, reports: &[SqueezingReport]) -> Result<()> {
    writeln!(w, "{}", SqueezingReport::CSV_HEADER)?;
    for r in reports {
        writeln!(w, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Squeezing of the even-sector ground state.
pub fn ground_state_squeezing(model: &ModelParams) -> Result<SqueezingReport> {
    let gs = model_ground_state(model)?;
    let (xi2, beta) = SpinOperators::new(model.n_qubits)?.moments(&gs.state)?.min_xi_squared()?;
    Ok(SqueezingReport::new(Protocol::Ground, xi2, beta).at(model))
}

/// One time point of a quench.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchSample {
    pub t: f64,
    /// `NaN` when flagged.
    pub xi_squared: f64,
    pub r_db: f64,
    pub beta_star: f64,
    pub sz: f64,
    pub flagged: bool,
}

/// Exact dynamics of `|0...0>` under one model, decomposed once.
pub struct Quench {
    model: ModelParams,
    decomposition: SpectralDecomposition,
    spins: SpinOperators,
}

const TIME_CHUNK: usize = 128;

impl Quench {
    pub fn new(model: &ModelParams) -> Result<Self> {
        model.validate()?;
        let decomposition = SpectralDecomposition::new(&build_hamiltonian(model)?)?;
        Ok(Self { model: *model, decomposition, spins: SpinOperators::new(model.n_qubits)? })
    }

    fn sample(&self, t: f64, psi: &StateVector) -> Result<QuenchSample> {
        let m = self.spins.moments(psi)?;
        let half = self.model.n_qubits as f64 / 2.0;
        let flagged = m.sz * m.sz < QUENCH_FLAG * half * half;
        let (xi2, beta) = if flagged { (f64::NAN, f64::NAN) } else { m.min_xi_squared()? };
        Ok(QuenchSample { t, xi_squared: xi2, r_db: if flagged { f64::NAN } else { r_db(xi2) }, beta_star: beta, sz: m.sz, flagged })
    }

    /// Samples at every time in `times`.
    pub fn curve(&self, times: &[f64]) -> Result<Vec<QuenchSample>> {
        let zero = StateVector::zero_state(self.model.n_qubits)?;
        let traj = self.decomposition.trajectory(&zero)?;
        let mut out = Vec::with_capacity(times.len());
        for chunk in times.chunks(TIME_CHUNK) {
            for (t, psi) in chunk.iter().zip(traj.at_times(chunk)) {
                out.push(self.sample(*t, &psi)?);
            }
        }
        Ok(out)
    }

    /// Best squeezing over `t = i t_max / n_steps`, refined by golden section
    /// between the neighbours of the best grid time.
    pub fn optimize(&self, t_max: f64, n_steps: usize) -> Result<SqueezingReport> {
        if n_steps < 2 || !(t_max > 0.0) {
            return Err(Error::Config { field: "quench".into(), reason: "need n_steps >= 2 and t_max > 0".into() });
        }
        let dt = t_max / n_steps as f64;
        let times: Vec<f64> = (0..=n_steps).map(|i| i as f64 * dt).collect();
        let curve = self.curve(&times)?;
        let flagged = curve.iter().filter(|s| s.flagged).count();
        if flagged > 0 {
            log::debug!("quench at theta={} alpha={}: {flagged} weakly polarized times excluded", self.model.theta, self.model.alpha);
        }
        // t* is the first squeezing peak; later revivals of a finite chain are not counted.
        let usable = |i: usize| !curve[i].flagged;
        let first_peak = (1..n_steps).find(|&i| {
            usable(i)
                && curve[i].xi_squared < 1.0 - 1e-9
                && (!usable(i - 1) || curve[i].xi_squared <= curve[i - 1].xi_squared)
                && (!usable(i + 1) || curve[i].xi_squared < curve[i + 1].xi_squared)
        });
        let best = match first_peak {
            Some(i) => i,
            None => curve
                .iter()
                .enumerate()
                .filter(|(_, s)| !s.flagged)
                .min_by(|a, b| a.1.xi_squared.total_cmp(&b.1.xi_squared))
                .map(|(i, _)| i)
                .ok_or(Error::DegeneratePolarization(0.0))?,
        };

        let zero = StateVector::zero_state(self.model.n_qubits)?;
        let traj = self.decomposition.trajectory(&zero)?;
        let lo = times[best.saturating_sub(1)];
        let hi = times[(best + 1).min(n_steps)];
        let objective = |t: f64| {
            let s = self.sample(t, &traj.at(t))?;
            Ok(if s.flagged { f64::INFINITY } else { s.xi_squared })
        };
        let (mut t_star, mut xi2) = (times[best], curve[best].xi_squared);
        if hi > lo {
            let (t, v) = golden_section(objective, lo, hi, 1e-10 * t_max.max(1.0))?;
            if v < xi2 {
                (t_star, xi2) = (t, v);
            }
        }
        let beta = self.sample(t_star, &traj.at(t_star))?.beta_star;
        let mut report = SqueezingReport::new(Protocol::Quench, xi2, beta).at(&self.model);
        report.t_star = Some(t_star);
        report.flagged_times = flagged;
        Ok(report)
    }
}

pub fn quench_squeezing(model: &ModelParams, t_max: f64, n_steps: usize) -> Result<SqueezingReport> {
    Quench::new(model)?.optimize(t_max, n_steps)
}

/// `S_x^2 = N/4 + 1/2 sum_{i<j} X_i X_j`.
pub fn collective_spin_squared(n_qubits: usize, axis: Axis) -> Result<PauliSum> {
    let p = match axis {
        Axis::X => Pauli::X,
        Axis::Y => Pauli::Y,
        Axis::Z => Pauli::Z,
    };
    let mut terms = vec![PauliString::sparse(n_qubits, n_qubits as f64 / 4.0, &[])?];
    for i in 0..n_qubits {
        for j in i + 1..n_qubits {
            terms.push(PauliString::sparse(n_qubits, 0.5, &[(i, p), (j, p)])?);
        }
    }
    PauliSum::from_terms(n_qubits, terms)
}

/// `xi^2` at `b = 0` from the moments `<S_x^2>`, `<S_x>`, `<S_z>`.
#[derive(Debug, Clone)]
pub struct XiSquaredCost {
    n_qubits: usize,
    ops: [CompiledOperator; 3],
}

impl XiSquaredCost {
    pub fn new(n_qubits: usize) -> Result<Self> {
        Ok(Self {
            n_qubits,
            ops: [
                CompiledOperator::new(&collective_spin_squared(n_qubits, Axis::X)?)?,
                CompiledOperator::new(&build_collective_spin(n_qubits, Axis::X)?)?,
                CompiledOperator::new(&build_collective_spin(n_qubits, Axis::Z)?)?,
            ],
        })
    }
}

impl Objective for XiSquaredCost {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn observables(&self) -> &[CompiledOperator] {
        &self.ops
    }

    fn combine(&self, v: &[f64]) -> Result<f64> {
        let sz2 = v[2] * v[2];
        if sz2 < DEGENERATE_POLARIZATION {
            return Err(Error::DegeneratePolarization(sz2));
        }
        Ok(self.n_qubits as f64 * (v[0] - v[1] * v[1]) / sz2)
    }

    fn partials(&self, v: &[f64]) -> Result<Vec<f64>> {
        let sz2 = v[2] * v[2];
        if sz2 < DEGENERATE_POLARIZATION {
            return Err(Error::DegeneratePolarization(sz2));
        }
        let n = self.n_qubits as f64;
        let var = v[0] - v[1] * v[1];
        Ok(vec![n / sz2, -2.0 * n * v[1] / sz2, -2.0 * n * var / (sz2 * v[2])])
    }
}

/// One trained squeezing circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalRun {
    pub report: SqueezingReport,
    /// `min_b xi^2` of the same output state.
    pub free_xi_squared: f64,
    pub free_beta: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationalSqueezing {
    pub circuit: String,
    pub mean_r: f64,
    /// Sample standard deviation.
    pub std_r: f64,
    pub runs: Vec<VariationalRun>,
    pub attempts: usize,
    pub degenerate_restarts: usize,
}

/// Trains `n_repetitions` circuits minimizing `xi^2(b = 0)` from `|0...0>`.
///
/// Attempt `i` is seeded by `extend_seed(opts.seed, i)`. Attempts that hit a
/// degenerate polarization are replaced by fresh ones, up to `3 n` in total.
pub fn variational_squeezing(
    spec: &CircuitSpec,
    n_repetitions: usize,
    opts: &OptimizerOptions,
    mode: TrainingMode,
) -> Result<VariationalSqueezing> {
    if n_repetitions == 0 {
        return Err(Error::Config { field: "repetitions".into(), reason: "must be at least 1".into() });
    }
    let n = spec.n_qubits();
    let cost = XiSquaredCost::new(n)?;
    let spins = SpinOperators::new(n)?;
    let zero = StateVector::zero_state(n)?;
    let cap = 3 * n_repetitions;
    let attempt = |i: usize| -> Result<Option<VariationalRun>> {
        let seed = extend_seed(opts.seed, i as u64);
        let outcome = match train(&cost, spec, &zero, &OptimizerOptions { seed, ..opts.clone() }, mode) {
            Ok(o) => o,
            Err(Error::DegeneratePolarization(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let moments = spins.moments(&outcome.state)?;
        let (free_xi_squared, free_beta) = moments.min_xi_squared()?;
        let mut report = SqueezingReport::new(Protocol::Variational, moments.xi_squared(0.0)?, 0.0);
        report.seed = Some(seed);
        Ok(Some(VariationalRun { report, free_xi_squared, free_beta, iterations: outcome.iterations }))
    };

    let mut runs = Vec::with_capacity(n_repetitions);
    let mut next = 0;
    while runs.len() < n_repetitions && next < cap {
        let batch: Vec<usize> = (next..(next + n_repetitions - runs.len()).min(cap)).collect();
        next += batch.len();
        let results = batch.into_par_iter().map(attempt).collect::<Result<Vec<_>>>()?;
        runs.extend(results.into_iter().flatten());
    }
    if runs.len() < n_repetitions {
        return Err(Error::DegeneratePolarization(0.0));
    }
    let rs: Vec<f64> = runs.iter().map(|r| r.report.r_db).collect();
    let mean_r = rs.iter().sum::<f64>() / rs.len() as f64;
    let std_r = if rs.len() > 1 {
        (rs.iter().map(|r| (r - mean_r).powi(2)).sum::<f64>() / (rs.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(VariationalSqueezing {
        circuit: spec.notation(),
        mean_r,
        std_r,
        degenerate_restarts: next - runs.len(),
        attempts: next,
        runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use crate::state::C64;
    use crate::vqe::{gradient_parameter_shift, value_and_gradient};
    use nalgebra::Matrix2;

    fn one_axis_twisted(n: usize, chi: f64) -> StateVector {
        // e^{-i chi S_z^2} |+...+>, then rotated so the mean spin points along z
        let amps = (0..1usize << n)
            .map(|b| {
                let m = (n as f64 - 2.0 * b.count_ones() as f64) / 2.0;
                C64::from_polar(1.0, -chi * m * m)
            })
            .collect();
        let mut psi = StateVector::normalized(n, amps).unwrap();
        let (c, s) = ((PI / 4.0).cos(), (PI / 4.0).sin());
        let ry = Matrix2::new(C64::new(c, 0.0), C64::new(-s, 0.0), C64::new(s, 0.0), C64::new(c, 0.0));
        for q in 0..n {
            psi.apply_one_qubit(q, &ry).unwrap();
        }
        psi
    }

    #[test]
    fn coherent_state() {
        let zero = StateVector::zero_state(10).unwrap();
        for beta in [0.0, 0.4, 2.0] {
            assert!((xi_squared(&zero, beta).unwrap() - 1.0).abs() < 1e-12);
        }
        let (xi2, beta) = min_xi_squared(&zero).unwrap();
        assert!((xi2 - 1.0).abs() < 1e-12);
        assert_eq!(beta, 0.0);
        assert_eq!(r_db(xi2), 0.0);
    }

    #[test]
    fn ghz_is_degenerate() {
        let mut amps = vec![C64::new(0.0, 0.0); 16];
        amps[0] = C64::new(1.0, 0.0);
        amps[15] = C64::new(1.0, 0.0);
        let ghz = StateVector::normalized(4, amps).unwrap();
        assert!(matches!(min_xi_squared(&ghz), Err(Error::DegeneratePolarization(_))));
    }

    #[test]
    fn twisted_state_is_squeezed() {
        let psi = one_axis_twisted(10, 0.1);
        let (xi2, _) = min_xi_squared(&psi).unwrap();
        assert!(xi2 < 1.0 && xi2 > 0.0, "{xi2}");
        let m = SpinOperators::new(10).unwrap().moments(&psi).unwrap();
        let (b, v) = scan_min_xi_squared(&m, 4096).unwrap();
        let (closed, beta) = m.min_xi_squared().unwrap();
        assert!((v - closed).abs() < 1e-9 * closed);
        assert!((b - beta).abs() < 1e-5 || (PI - (b - beta).abs()).abs() < 1e-5);
    }

    #[test]
    fn sx_squared_matches_moments() {
        let mut rng = rng_from_seed(8);
        let psi = StateVector::random(5, &mut rng).unwrap();
        let m = SpinOperators::new(5).unwrap().moments(&psi).unwrap();
        let sx2 = psi.expectation(&collective_spin_squared(5, Axis::X).unwrap()).unwrap();
        assert!((sx2 - m.sx * m.sx - m.var_x).abs() < 1e-12);
        let sy2 = psi.expectation(&collective_spin_squared(5, Axis::Y).unwrap()).unwrap();
        assert!((sy2 - m.sy * m.sy - m.var_y).abs() < 1e-12);
    }

    #[test]
    fn product_states_are_coherent() {
        let mut psi = StateVector::zero_state(6).unwrap();
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let u = Matrix2::new(C64::new(c, 0.0), C64::new(0.0, -s), C64::new(0.0, -s), C64::new(c, 0.0));
        for q in 0..6 {
            psi.apply_one_qubit(q, &u).unwrap();
        }
        // a tilted coherent state has no squeezing below the shot-noise limit
        let (xi2, _) = min_xi_squared(&psi).unwrap();
        assert!(xi2 >= 1.0 - 1e-10, "{xi2}");
    }

    #[test]
    fn ground_state_examples() {
        let r = ground_state_squeezing(&ModelParams::new(6, 1.0, 1.0, 0.0).unwrap()).unwrap();
        assert!((r.xi_squared - 1.0).abs() < 1e-10 && r.r_db == 0.0);
        let r = ground_state_squeezing(&ModelParams::new(8, 1.0, 1.0, 0.3 * PI).unwrap()).unwrap();
        assert!(r.r_db > 0.5);
        assert!(r.beta_star.abs() < 1e-6 || (r.beta_star - PI).abs() < 1e-6);
        assert!(ground_state_squeezing(&ModelParams::new(6, 1.0, 1.0, PI / 2.0).unwrap()).is_err());
    }

    #[test]
    fn quench_examples() {
        let model = ModelParams::new(8, 1.0, 1.0, PI / 8.0).unwrap();
        let q = Quench::new(&model).unwrap();
        let curve = q.curve(&[0.0, 0.5, 1.0]).unwrap();
        assert!(curve[0].r_db.abs() < 1e-10);
        let report = q.optimize(10.0, 200).unwrap();
        let t = report.t_star.unwrap();
        assert!(t > 0.0 && t < 10.0);
        assert!(report.r_db > 0.0);
        let coarse = curve.iter().map(|s| s.xi_squared).fold(f64::INFINITY, f64::min);
        assert!(report.xi_squared <= coarse + 1e-12);
    }

    #[test]
    fn quench_ignores_late_revivals() {
        // all-to-all chain: a deeper revival near t = 4.7 follows the first peak near t = 0.17
        let model = ModelParams::new(10, 1.0, 0.0, 0.175 * PI).unwrap();
        let q = Quench::new(&model).unwrap();
        let report = q.optimize(10.0, 1000).unwrap();
        let t = report.t_star.unwrap();
        assert!(t < 0.5, "{t}");
        let late = q.curve(&[4.68]).unwrap()[0].r_db;
        assert!(late > report.r_db + 0.3, "{late} {}", report.r_db);
    }

    #[test]
    fn xi_cost_gradients() {
        let n = 5;
        let cost = XiSquaredCost::new(n).unwrap();
        let spec = CircuitSpec::parse("12", n, 1.0).unwrap();
        let mut rng = rng_from_seed(3);
        let params = crate::ansatz::ParameterVector::random(&spec, 0.3, &mut rng).unwrap();
        let zero = StateVector::zero_state(n).unwrap();
        let (v, adj) = value_and_gradient(&cost, &spec, &params, &zero).unwrap();
        let shift = gradient_parameter_shift(&cost, &spec, &params, &zero).unwrap();
        let psi = crate::ansatz::apply_circuit(&spec, &params, &zero).unwrap();
        assert!((v - xi_squared(&psi, 0.0).unwrap()).abs() < 1e-12 * v);
        for (a, s) in adj.iter().zip(&shift) {
            assert!((a - s).abs() < 1e-10 * a.abs().max(1.0), "{a} {s}");
        }
    }

    #[test]
    fn variational_runs() {
        let spec = CircuitSpec::parse("11", 4, 1.0).unwrap();
        let opts = OptimizerOptions { seed: 5, ..Default::default() };
        let v = variational_squeezing(&spec, 3, &opts, TrainingMode::LayerRecursive).unwrap();
        assert_eq!(v.runs.len(), 3);
        assert!(v.mean_r > 0.0);
        for run in &v.runs {
            assert!(run.report.xi_squared >= run.free_xi_squared * (1.0 - 1e-9), "{:?}", run);
        }
        assert_eq!(v, variational_squeezing(&spec, 3, &opts, TrainingMode::LayerRecursive).unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(200))]

            #[test]
            fn closed_form_matches_scan(seed in any::<u64>(), n in 2usize..7) {
                let psi = StateVector::random(n, &mut rng_from_seed(seed)).unwrap();
                let m = SpinOperators::new(n).unwrap().moments(&psi).unwrap();
                prop_assume!(m.sz * m.sz > 1e-6);
                let (closed, _) = m.min_xi_squared().unwrap();
                let (_, scanned) = scan_min_xi_squared(&m, 4096).unwrap();
                prop_assert!((closed - scanned).abs() < 1e-9 * closed.max(1.0), "{closed} {scanned}");
                prop_assert!(r_db(closed) >= 0.0);
                prop_assert!(m.xi_squared(0.0).unwrap() >= closed * (1.0 - 1e-12));
            }

            #[test]
            fn tilted_coherent_states(n in 2usize..8, tilt in 0.0f64..1.3, phase in 0.0f64..6.28) {
                // identical qubits with Bloch vector at polar angle `tilt`
                let a = C64::new((tilt / 2.0).cos(), 0.0);
                let b = C64::from_polar((tilt / 2.0).sin(), phase);
                let amps = (0..1usize << n)
                    .map(|i| {
                        let ones = i.count_ones() as i32;
                        a.powi(n as i32 - ones) * b.powi(ones)
                    })
                    .collect();
                let psi = StateVector::normalized(n, amps).unwrap();
                let (xi2, _) = min_xi_squared(&psi).unwrap();
                prop_assert!((xi2 - 1.0).abs() < 1e-10, "{xi2}");
                prop_assert!(r_db(xi2) < 1e-9);
            }
        }
    }
}
