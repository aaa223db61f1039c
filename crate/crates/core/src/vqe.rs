//! Variational ground-state search over the layered ansatz.
//!
//! Costs are smooth functions of a few expectation values, `f(<A_1>, ..., <A_m>)`.
//! That form gives both gradient methods: the adjoint sweep uses the costate
//! `sum_i (df/da_i) A_i psi`, and the parameter-shift rule differentiates each
//! expectation separately before applying the chain rule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{im_xx, im_xx_yy, sample_normal, CircuitSpec, Gate, ParameterVector};
use crate::exact::{ground_state_in_sector, GroundState, Parity};
use crate::lbfgs::{lbfgs_minimize, OptimizerOptions, StopReason};
use crate::pauli::{build_hamiltonian, build_parity_operator, ModelParams, PauliSum};
use crate::seed::{extend_seed, rng_from_seed};
use crate::state::{CompiledOperator, StateVector, C64};
use crate::{Error, Result};

/// Cost `f(<A_1>, ..., <A_m>)` of the circuit output state.
pub trait Objective: Sync {
    fn n_qubits(&self) -> usize;
    fn observables(&self) -> &[CompiledOperator];
    fn combine(&self, values: &[f64]) -> Result<f64>;
    /// `df / d<A_i>` at `values`.
    fn partials(&self, values: &[f64]) -> Result<Vec<f64>>;
}

fn expectations<O: Objective + ?Sized>(obj: &O, psi: &[C64]) -> Vec<f64> {
    obj.observables().iter().map(|a| a.expectation(psi)).collect()
}

/// `<H> + (<Z> - 1)^2`.
#[derive(Debug, Clone)]
pub struct EnergyPenalty {
    n_qubits: usize,
    ops: [CompiledOperator; 2],
}

impl EnergyPenalty {
    pub fn new(h: &PauliSum, z: &PauliSum) -> Result<Self> {
        if h.n_qubits() != z.n_qubits() {
            return Err(Error::QubitMismatch { expected: h.n_qubits(), found: z.n_qubits() });
        }
        Ok(Self { n_qubits: h.n_qubits(), ops: [CompiledOperator::new(h)?, CompiledOperator::new(z)?] })
    }

    pub fn for_model(params: &ModelParams) -> Result<Self> {
        Self::new(&build_hamiltonian(params)?, &build_parity_operator(params.n_qubits)?)
    }

    pub fn energy(&self, psi: &StateVector) -> f64 {
        self.ops[0].expectation(psi.amplitudes())
    }
}

impl Objective for EnergyPenalty {
    fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn observables(&self) -> &[CompiledOperator] {
        &self.ops
    }

    fn combine(&self, v: &[f64]) -> Result<f64> {
        Ok(v[0] + (v[1] - 1.0).powi(2))
    }

    fn partials(&self, v: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![1.0, 2.0 * (v[1] - 1.0)])
    }
}

fn check_sizes<O: Objective + ?Sized>(obj: &O, spec: &CircuitSpec, initial: &StateVector) -> Result<()> {
    for n in [spec.n_qubits(), initial.n_qubits()] {
        if n != obj.n_qubits() {
            return Err(Error::QubitMismatch { expected: obj.n_qubits(), found: n });
        }
    }
    Ok(())
}

/// Gates grouped so that runs of rotations act as one diagonal.
enum Segment<'a> {
    Entangler(&'a Gate),
    Rotations(&'a [Gate]),
}

fn segments(gates: &[Gate]) -> Vec<Segment<'_>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < gates.len() {
        if let Gate::Rz { .. } = gates[i] {
            let start = i;
            while i < gates.len() && matches!(gates[i], Gate::Rz { .. }) {
                i += 1;
            }
            out.push(Segment::Rotations(&gates[start..i]));
        } else {
            out.push(Segment::Entangler(&gates[i]));
            i += 1;
        }
    }
    out
}

/// Diagonal of the product of `rotations`, built by doubling one qubit at a time.
fn rotation_phases(n: usize, rotations: &[Gate]) -> Vec<C64> {
    let mut angle = vec![0.0; n];
    for g in rotations {
        if let Gate::Rz { q, phi, .. } = *g {
            angle[q] += phi;
        }
    }
    let mut table = vec![C64::new(1.0, 0.0)];
    for &phi in &angle {
        let (p0, p1) = (C64::from_polar(1.0, -phi / 2.0), C64::from_polar(1.0, phi / 2.0));
        table = table.iter().flat_map(|&t| [t * p0, t * p1]).collect();
    }
    table
}

fn multiply_diagonal(psi: &mut StateVector, diag: &[C64], conjugate: bool) {
    for (a, d) in psi.amplitudes_mut().iter_mut().zip(diag) {
        *a *= if conjugate { d.conj() } else { *d };
    }
}

fn run_gates(gates: &[Gate], initial: &StateVector) -> StateVector {
    let mut psi = initial.clone();
    let n = psi.n_qubits();
    for seg in segments(gates) {
        match seg {
            Segment::Entangler(g) => g.apply(&mut psi),
            Segment::Rotations(rs) => multiply_diagonal(&mut psi, &rotation_phases(n, rs), false),
        }
    }
    psi
}

/// Cost of the circuit output.
pub fn evaluate<O: Objective + ?Sized>(obj: &O, spec: &CircuitSpec, params: &[f64], initial: &StateVector) -> Result<f64> {
    check_sizes(obj, spec, initial)?;
    let psi = run_gates(&spec.gates(params)?, initial);
    obj.combine(&expectations(obj, psi.amplitudes()))
}

/// Cost and exact gradient from one forward and one reverse sweep.
pub fn value_and_gradient<O: Objective + ?Sized>(
    obj: &O,
    spec: &CircuitSpec,
    params: &[f64],
    initial: &StateVector,
) -> Result<(f64, Vec<f64>)> {
    check_sizes(obj, spec, initial)?;
    let gates = spec.gates(params)?;
    let mut psi = run_gates(&gates, initial);
    let values = expectations(obj, psi.amplitudes());
    let cost = obj.combine(&values)?;
    let weights = obj.partials(&values)?;

    // costate: df = 2 Re <lambda | d psi>
    let dim = psi.dim();
    let mut lambda = vec![C64::new(0.0, 0.0); dim];
    let mut scratch = vec![C64::new(0.0, 0.0); dim];
    for (op, w) in obj.observables().iter().zip(&weights) {
        op.apply_into(psi.amplitudes(), &mut scratch);
        lambda.iter_mut().zip(&scratch).for_each(|(l, s)| *l += s * w);
    }
    let mut lambda = StateVector::from_raw(psi.n_qubits(), lambda);

    let n = psi.n_qubits();
    let mut grad = vec![0.0; params.len()];
    let mut by_bit = vec![0.0; n];
    for seg in segments(&gates).iter().rev() {
        // for a factor exp(-i a P): d cost / d a = 2 Im <lambda | P psi>
        match *seg {
            Segment::Entangler(g) => {
                if let Gate::Entangler { a, b, param, gamma, .. } = *g {
                    let (ba, bb) = (psi.bit(a), psi.bit(b));
                    grad[param] += if gamma == 1.0 {
                        4.0 * im_xx(lambda.amplitudes(), psi.amplitudes(), ba, bb)
                    } else {
                        let (x, y) = im_xx_yy(lambda.amplitudes(), psi.amplitudes(), ba, bb);
                        2.0 * ((1.0 + gamma) * x + (1.0 - gamma) * y)
                    };
                }
                g.apply_inverse(&mut psi);
                g.apply_inverse(&mut lambda);
            }
            Segment::Rotations(rs) => {
                // d/dphi_q = Im <lambda| Z_q |psi> = total - 2 * (part with bit q set)
                by_bit.iter_mut().for_each(|v| *v = 0.0);
                let mut total = 0.0;
                for (i, (l, p)) in lambda.amplitudes().iter().zip(psi.amplitudes()).enumerate() {
                    let v = (l.conj() * p).im;
                    total += v;
                    for (q, acc) in by_bit.iter_mut().enumerate() {
                        if i & (1 << (n - 1 - q)) != 0 {
                            *acc += v;
                        }
                    }
                }
                for g in rs {
                    if let Gate::Rz { q, param, .. } = *g {
                        grad[param] += total - 2.0 * by_bit[q];
                    }
                }
                let phases = rotation_phases(n, rs);
                multiply_diagonal(&mut psi, &phases, true);
                multiply_diagonal(&mut lambda, &phases, true);
            }
        }
    }
    Ok((cost, grad))
}

/// Gradient from shifted circuit evaluations only.
///
/// Each `exp(-i a P)` factor with `P^2 = 1` obeys
/// `d<A>/da = <A>(a + pi/4) - <A>(a - pi/4)`. A rotation `Rz(phi)` is such a
/// factor with `a = phi / 2`, and an entangler angle enters as
/// `a_xx = (1+gamma) phi` and `a_yy = (1-gamma) phi`.
pub fn gradient_parameter_shift<O: Objective + ?Sized>(
    obj: &O,
    spec: &CircuitSpec,
    params: &[f64],
    initial: &StateVector,
) -> Result<Vec<f64>> {
    check_sizes(obj, spec, initial)?;
    let gates = spec.gates(params)?;
    let weights = obj.partials(&expectations(obj, run_gates(&gates, initial).amplitudes()))?;
    let shifted = |index: usize, shift: fn(Gate, f64) -> Gate, s: f64| {
        let mut gs = gates.clone();
        gs[index] = shift(gs[index], s);
        expectations(obj, run_gates(&gs, initial).amplitudes())
    };
    let difference = |index: usize, shift: fn(Gate, f64) -> Gate, s: f64| -> Vec<f64> {
        let plus = shifted(index, shift, s);
        let minus = shifted(index, shift, -s);
        plus.iter().zip(&minus).map(|(p, m)| p - m).collect()
    };
    let shift_xx: fn(Gate, f64) -> Gate = |g, s| match g {
        Gate::Entangler { a, b, xx, yy, param, gamma } => Gate::Entangler { a, b, xx: xx + s, yy, param, gamma },
        other => other,
    };
    let shift_yy: fn(Gate, f64) -> Gate = |g, s| match g {
        Gate::Entangler { a, b, xx, yy, param, gamma } => Gate::Entangler { a, b, xx, yy: yy + s, param, gamma },
        other => other,
    };
    let shift_rz: fn(Gate, f64) -> Gate = |g, s| match g {
        Gate::Rz { q, phi, param } => Gate::Rz { q, phi: phi + s, param },
        other => other,
    };
    let quarter = std::f64::consts::FRAC_PI_4;
    let per_gate: Vec<(usize, f64)> = (0..gates.len())
        .into_par_iter()
        .map(|i| {
            let d_values: Vec<f64> = match gates[i] {
                Gate::Entangler { gamma, .. } => {
                    let dx = difference(i, shift_xx, quarter);
                    if gamma == 1.0 {
                        dx.iter().map(|v| 2.0 * v).collect()
                    } else {
                        let dy = difference(i, shift_yy, quarter);
                        dx.iter().zip(&dy).map(|(x, y)| (1.0 + gamma) * x + (1.0 - gamma) * y).collect()
                    }
                }
                Gate::Rz { .. } => difference(i, shift_rz, 2.0 * quarter).iter().map(|v| 0.5 * v).collect(),
            };
            (gates[i].param(), d_values.iter().zip(&weights).map(|(d, w)| d * w).sum())
        })
        .collect();
    let mut grad = vec![0.0; params.len()];
    for (p, d) in per_gate {
        grad[p] += d;
    }
    Ok(grad)
}

/// `<H> + (<Z> - 1)^2` from `|0...0>`.
pub fn cost_energy_penalty(spec: &CircuitSpec, params: &[f64], h: &PauliSum, z: &PauliSum) -> Result<f64> {
    evaluate(&EnergyPenalty::new(h, z)?, spec, params, &StateVector::zero_state(spec.n_qubits())?)
}

pub fn gradient_adjoint(spec: &CircuitSpec, params: &[f64], h: &PauliSum, z: &PauliSum) -> Result<Vec<f64>> {
    let obj = EnergyPenalty::new(h, z)?;
    Ok(value_and_gradient(&obj, spec, params, &StateVector::zero_state(spec.n_qubits())?)?.1)
}

pub fn gradient_parameter_shift_energy(spec: &CircuitSpec, params: &[f64], h: &PauliSum, z: &PauliSum) -> Result<Vec<f64>> {
    let obj = EnergyPenalty::new(h, z)?;
    gradient_parameter_shift(&obj, spec, params, &StateVector::zero_state(spec.n_qubits())?)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingMode {
    /// Grow the circuit one layer at a time, re-optimizing everything after each addition.
    #[default]
    LayerRecursive,
    /// Optimize the full circuit from one random start.
    Direct,
}

/// Everything one training run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: Vec<f64>,
    pub final_cost: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Costs at each stage start and after every accepted step, stages concatenated.
    pub cost_trace: Vec<f64>,
    pub stage_costs: Vec<f64>,
    pub stage_iterations: Vec<usize>,
    /// Stages whose warm start regressed and were rerun from an identity layer.
    pub identity_restarts: usize,
    pub fallback_steps: usize,
    pub hit_iteration_cap: bool,
    pub state: StateVector,
}

struct Stage {
    params: Vec<f64>,
    cost: f64,
    iterations: usize,
    evaluations: usize,
    trace: Vec<f64>,
    fallback_steps: usize,
    capped: bool,
}

fn optimize<O: Objective + ?Sized>(
    obj: &O,
    spec: &CircuitSpec,
    x0: &[f64],
    initial: &StateVector,
    opts: &OptimizerOptions,
) -> Result<Stage> {
    // A degenerate start is an error; a degenerate probe is only a rejected step.
    evaluate(obj, spec, x0, initial)?;
    let eval = |x: &[f64]| match value_and_gradient(obj, spec, x, initial) {
        Err(Error::DegeneratePolarization(_)) => Ok((f64::INFINITY, vec![0.0; x.len()])),
        other => other,
    };
    let r = lbfgs_minimize(eval, x0, opts)?;
    Ok(Stage {
        params: r.x,
        cost: r.f,
        iterations: r.iterations,
        evaluations: r.evaluations,
        trace: r.trace,
        fallback_steps: r.fallback_steps,
        capped: r.stop == StopReason::MaxIterations,
    })
}

/// Initial block for an appended layer of distance `k`, taken from the last
/// optimized layer (distance `k_prev`). Entangler angles are copied
/// index-wise where both layers have them and drawn fresh otherwise;
/// rotation angles are copied.
fn warm_start_block<R: rand::Rng + ?Sized>(
    n: usize,
    k_prev: usize,
    prev: &[f64],
    k: usize,
    sigma: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let (pairs_prev, pairs) = (n - k_prev, n - k);
    let shared = pairs.min(pairs_prev);
    let mut block = prev[..shared].to_vec();
    block.extend(sample_normal(pairs - shared, sigma, rng)?);
    block.extend_from_slice(&prev[pairs_prev..]);
    Ok(block)
}

/// Trains `spec` against `obj`, starting the circuit from `initial`.
pub fn train<O: Objective + ?Sized>(
    obj: &O,
    spec: &CircuitSpec,
    initial: &StateVector,
    opts: &OptimizerOptions,
    mode: TrainingMode,
) -> Result<TrainOutcome> {
    opts.validate()?;
    check_sizes(obj, spec, initial)?;
    let mut rng = rng_from_seed(opts.seed);
    let n = spec.n_qubits();
    let sigma = opts.init_sigma;
    let mut out = TrainOutcome {
        params: Vec::new(),
        final_cost: f64::INFINITY,
        iterations: 0,
        evaluations: 0,
        cost_trace: Vec::new(),
        stage_costs: Vec::new(),
        stage_iterations: Vec::new(),
        identity_restarts: 0,
        fallback_steps: 0,
        hit_iteration_cap: false,
        state: initial.clone(),
    };
    let record = |out: &mut TrainOutcome, s: &Stage| {
        out.iterations += s.iterations;
        out.evaluations += s.evaluations;
        out.cost_trace.extend(&s.trace);
        out.fallback_steps += s.fallback_steps;
        out.hit_iteration_cap |= s.capped;
    };

    let first_stage = match mode {
        TrainingMode::Direct => spec.n_layers(),
        TrainingMode::LayerRecursive => 1,
    };
    let prefix = spec.prefix(first_stage)?;
    let stage = optimize(obj, &prefix, &sample_normal(prefix.count_parameters(), sigma, &mut rng)?, initial, opts)?;
    record(&mut out, &stage);
    out.stage_costs.push(stage.cost);
    out.stage_iterations.push(stage.iterations);
    let mut params = stage.params;
    let mut cost = stage.cost;

    for m in first_stage + 1..=spec.n_layers() {
        let prefix = spec.prefix(m)?;
        let (k_prev, k) = (spec.layer_distances()[m - 2], spec.layer_distances()[m - 1]);
        let last = &params[params.len() - (2 * n - k_prev)..];
        let mut x0 = params.clone();
        x0.extend(warm_start_block(n, k_prev, last, k, sigma, &mut rng)?);
        let warm = match optimize(obj, &prefix, &x0, initial, opts) {
            Err(Error::DegeneratePolarization(_)) => None,
            other => Some(other?),
        };
        let mut iterations = 0;
        if let Some(stage) = &warm {
            iterations += stage.iterations;
            record(&mut out, stage);
        }
        let stage = match warm {
            Some(stage) if stage.cost <= cost + 1e-9 => stage,
            _ => {
                // a zero block is the identity layer, so this start reproduces `cost`
                log::debug!("stage {m} regressed from its warm start; retrying from identity layer");
            let mut x0 = params.clone();
            x0.extend(vec![0.0; 2 * n - k]);
                let stage = optimize(obj, &prefix, &x0, initial, opts)?;
                iterations += stage.iterations;
                record(&mut out, &stage);
                out.identity_restarts += 1;
                stage
            }
        };
        out.stage_costs.push(stage.cost);
        out.stage_iterations.push(iterations);
        params = stage.params;
        cost = stage.cost;
    }

    out.state = run_gates(&spec.gates(&params)?, initial);
    out.params = params;
    out.final_cost = cost;
    Ok(out)
}

/// One optimized ground-state circuit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeResult {
    pub circuit: String,
    pub n_qubits: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub theta: f64,
    pub optimal_parameters: ParameterVector,
    pub final_cost: f64,
    pub energy: f64,
    pub exact_energy: f64,
    pub iterations: usize,
    pub line_search_probes: usize,
    pub n_parameters: usize,
    pub cr: usize,
    pub rq: usize,
    pub fidelity_vs_exact: f64,
    pub stage_iterations: Vec<usize>,
    pub identity_restarts: usize,
    pub fallback_steps: usize,
    pub hit_iteration_cap: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cost_trace: Vec<f64>,
    pub seed: u64,
}

impl VqeResult {
    pub fn without_trace(mut self) -> Self {
        self.cost_trace.clear();
        self
    }

    pub fn to_json(&self, include_trace: bool) -> Result<String> {
        if include_trace {
            Ok(serde_json::to_string(self)?)
        } else {
            Ok(serde_json::to_string(&self.clone().without_trace())?)
        }
    }
}

/// A ground-state problem with its exact reference solution.
#[derive(Debug, Clone)]
pub struct VqeProblem {
    pub spec: CircuitSpec,
    pub model: ModelParams,
    pub objective: EnergyPenalty,
    pub ground: GroundState,
    pub mode: TrainingMode,
}

impl VqeProblem {
    pub fn new(spec: &CircuitSpec, model: &ModelParams) -> Result<Self> {
        model.validate()?;
        if spec.n_qubits() != model.n_qubits {
            return Err(Error::QubitMismatch { expected: model.n_qubits, found: spec.n_qubits() });
        }
        let h = build_hamiltonian(model)?;
        let objective = EnergyPenalty::new(&h, &build_parity_operator(model.n_qubits)?)?;
        let ground = ground_state_in_sector(&h, Parity::Even)?;
        Ok(Self { spec: spec.clone(), model: *model, objective, ground, mode: TrainingMode::LayerRecursive })
    }

    pub fn with_mode(mut self, mode: TrainingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn train(&self, opts: &OptimizerOptions) -> Result<VqeResult> {
        let zero = StateVector::zero_state(self.model.n_qubits)?;
        let t = train(&self.objective, &self.spec, &zero, opts, self.mode)?;
        let n_parameters = self.spec.count_parameters();
        Ok(VqeResult {
            circuit: self.spec.notation(),
            n_qubits: self.model.n_qubits,
            gamma: self.model.gamma,
            alpha: self.model.alpha,
            theta: self.model.theta,
            energy: self.objective.energy(&t.state),
            exact_energy: self.ground.energy,
            fidelity_vs_exact: t.state.fidelity(&self.ground.state)?,
            optimal_parameters: ParameterVector(t.params),
            final_cost: t.final_cost,
            iterations: t.iterations,
            line_search_probes: t.evaluations,
            n_parameters,
            cr: t.iterations * n_parameters,
            rq: self.spec.count_two_qubit_gates(),
            stage_iterations: t.stage_iterations,
            identity_restarts: t.identity_restarts,
            fallback_steps: t.fallback_steps,
            hit_iteration_cap: t.hit_iteration_cap,
            cost_trace: t.cost_trace,
            seed: opts.seed,
        })
    }

    /// `n_restarts` independent trainings seeded by `extend_seed(opts.seed, r)`.
    pub fn run_restarts(&self, n_restarts: usize, opts: &OptimizerOptions) -> Result<RestartSummary> {
        if n_restarts == 0 {
            return Err(Error::Config { field: "n_restarts".into(), reason: "must be at least 1".into() });
        }
        let runs = (0..n_restarts as u64)
            .into_par_iter()
            .map(|r| self.train(&OptimizerOptions { seed: extend_seed(opts.seed, r), ..opts.clone() }))
            .collect::<Result<Vec<_>>>()?;
        Ok(RestartSummary::new(runs))
    }
}

pub fn train_layer_recursive(spec: &CircuitSpec, model: &ModelParams, opts: &OptimizerOptions) -> Result<VqeResult> {
    VqeProblem::new(spec, model)?.train(opts)
}

pub fn run_restarts(
    spec: &CircuitSpec,
    model: &ModelParams,
    n_restarts: usize,
    opts: &OptimizerOptions,
) -> Result<RestartSummary> {
    VqeProblem::new(spec, model)?.run_restarts(n_restarts, opts)
}

/// Fidelity above which a restart counts as a success.
pub const SUCCESS_FIDELITY: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartSummary {
    pub runs: Vec<VqeResult>,
    pub best_fidelity: f64,
    pub mean_fidelity: f64,
    /// Fidelity of the run with the lowest final cost.
    pub lowest_cost_fidelity: f64,
    pub mean_iterations: f64,
    /// `mean_iterations * L`.
    pub cr: f64,
    pub success_fraction: f64,
}

impl RestartSummary {
    pub fn new(runs: Vec<VqeResult>) -> Self {
        let count = runs.len() as f64;
        let best_fidelity = runs.iter().map(|r| r.fidelity_vs_exact).fold(f64::NEG_INFINITY, f64::max);
        let mean_fidelity = runs.iter().map(|r| r.fidelity_vs_exact).sum::<f64>() / count;
        let lowest_cost_fidelity = runs
            .iter()
            .min_by(|a, b| a.final_cost.total_cmp(&b.final_cost))
            .map_or(f64::NAN, |r| r.fidelity_vs_exact);
        let mean_iterations = runs.iter().map(|r| r.iterations as f64).sum::<f64>() / count;
        let n_parameters = runs.first().map_or(0, |r| r.n_parameters) as f64;
        let success_fraction = runs.iter().filter(|r| r.fidelity_vs_exact >= SUCCESS_FIDELITY).count() as f64 / count;
        Self {
            best_fidelity,
            mean_fidelity,
            lowest_cost_fidelity,
            mean_iterations,
            cr: mean_iterations * n_parameters,
            success_fraction,
            runs,
        }
    }
}
