//! Numeric layer: random instantiation of a pattern, the sensor network,
//! distributed observability of `(W ⊗ A, D_H)`, gain synthesis and the
//! two-step (prediction fusion, measurement fusion) estimator.

use std::cell::Cell;

use nalgebra::{Complex, DMatrix, DVector, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::analysis::{scc_partition, SensorClassification, SensorKind};
use crate::digraph::SystemPattern;

/// Standard deviation of both process and measurement noise by default.
pub const DEFAULT_NOISE: f64 = 0.25;

/// Largest `m * n` accepted by [`distributed_observability`].
pub const MAX_OBSERVABILITY_DIM: usize = 400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EstimatorError {
    #[error("target spectral radius must be positive and finite, got {0}")]
    BadTarget(f64),
    #[error("pattern has no cycle, so every instantiation is nilpotent and cannot be rescaled")]
    Nilpotent,
    #[error("no sensor is alive")]
    NoSensors,
    #[error("sensor {0:?} has no measurement matrix")]
    UnknownSensor(String),
    #[error("invalid network weights: {0}")]
    BadWeights(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("eigenvalue iteration did not converge")]
    EigenFailure,
    #[error("pair dimension {0} exceeds {MAX_OBSERVABILITY_DIM}; use the structural test instead")]
    TooLarge(usize),
    #[error("rank test ({rank_observable}) and PBH test ({pbh_observable}) disagree")]
    Inconclusive {
        rank_observable: bool,
        pbh_observable: bool,
    },
    #[error("(W ⊗ A, D_H) is not observable; no stabilizing gain exists")]
    NotObservable,
    #[error("gain search exhausted {evaluations} evaluations; best spectral radius {best_rho:.6}")]
    SynthesisFailed { best_rho: f64, evaluations: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NumericSensor {
    pub id: String,
    /// One indicator row per measured state.
    pub h: DMatrix<f64>,
}

/// `x_{k+1} = A x_k + v_k`, `y^j_k = H_j x_k + r^j_k` with isotropic noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericSystem {
    pub a: DMatrix<f64>,
    pub sensors: Vec<NumericSensor>,
    pub sigma_v: f64,
    pub sigma_r: f64,
}

impl NumericSystem {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn sensor(&self, id: &str) -> Option<&NumericSensor> {
        self.sensors.iter().find(|s| s.id == id)
    }

    /// Same dynamics, with measurement matrices for the sensors of `pattern`.
    pub fn with_sensors_of(&self, pattern: &SystemPattern) -> Self {
        Self {
            a: self.a.clone(),
            sensors: sensors_of(pattern),
            sigma_v: self.sigma_v,
            sigma_r: self.sigma_r,
        }
    }

    pub fn with_noise(mut self, sigma_v: f64, sigma_r: f64) -> Self {
        self.sigma_v = sigma_v;
        self.sigma_r = sigma_r;
        self
    }
}

pub fn indicator_rows(n: usize, states: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(
        states.len(),
        n,
        |r, c| if states[r] == c { 1.0 } else { 0.0 },
    )
}

fn sensors_of(pattern: &SystemPattern) -> Vec<NumericSensor> {
    pattern
        .sensors()
        .iter()
        .map(|s| NumericSensor {
            id: s.id.clone(),
            h: indicator_rows(pattern.n(), &s.states),
        })
        .collect()
}

/// Draws every structural nonzero of `A` uniformly from `±[0.1, 1]` and
/// rescales so that `ρ(A) = target_rho`.
pub fn instantiate(
    pattern: &SystemPattern,
    target_rho: f64,
    seed: u64,
) -> Result<NumericSystem, EstimatorError> {
    if !(target_rho.is_finite() && target_rho > 0.0) {
        return Err(EstimatorError::BadTarget(target_rho));
    }
    // Without a cycle A is nilpotent whatever the values.
    let has_cycle = pattern.edges().iter().any(|&(j, i)| i == j)
        || scc_partition(pattern)
            .components()
            .iter()
            .any(|c| c.len() > 1);
    if !has_cycle {
        return Err(EstimatorError::Nilpotent);
    }
    let n = pattern.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = DMatrix::zeros(n, n);
    for &(j, i) in pattern.edges() {
        let magnitude: f64 = rng.random_range(0.1..=1.0);
        a[(i, j)] = if rng.random_bool(0.5) {
            magnitude
        } else {
            -magnitude
        };
    }
    let rho = spectral_radius(&a)?;
    if rho <= f64::EPSILON {
        return Err(EstimatorError::Nilpotent);
    }
    a *= target_rho / rho;
    Ok(NumericSystem {
        a,
        sensors: sensors_of(pattern),
        sigma_v: DEFAULT_NOISE,
        sigma_r: DEFAULT_NOISE,
    })
}

pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>, EstimatorError> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    // The shifted QR iteration occasionally stalls; similar matrices (the
    // transpose, the index-reversed matrix) have the same spectrum and
    // usually converge where the original did not.
    let n = m.nrows();
    let reversed = DMatrix::from_fn(n, n, |r, c| m[(n - 1 - r, n - 1 - c)]);
    for candidate in [m.clone(), m.transpose(), reversed] {
        if let Some(schur) = Schur::try_new(candidate, f64::EPSILON, 1000 * n.max(10)) {
            return Ok(schur.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(EstimatorError::EigenFailure)
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64, EstimatorError> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Sensors sharing predictions through a row-stochastic `W`, plus the hub
/// neighbourhoods through which every α measurement reaches everyone.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorNetwork {
    ids: Vec<String>,
    alpha: Vec<bool>,
    w: DMatrix<f64>,
    hubs: Vec<Vec<usize>>,
}

impl EstimatorNetwork {
    /// Directed ring `i -> i+1` plus self-loops with random positive weights,
    /// rows normalized. Self-loop weights are drawn from `[0.55, 1]` and
    /// ring weights from `[0.1, 0.45]`, so every diagonal entry exceeds one
    /// half and by Gershgorin every eigenvalue of `W` has modulus at least
    /// 0.1. A nearly singular `W` would shrink one Kronecker copy of `A`
    /// towards zero and make the rank test numerically meaningless.
    pub fn ring(members: &[(String, SensorKind)], seed: u64) -> Result<Self, EstimatorError> {
        let m = members.len();
        if m == 0 {
            return Err(EstimatorError::NoSensors);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = DMatrix::zeros(m, m);
        for i in 0..m {
            w[(i, i)] = rng.random_range(0.55..=1.0);
            if m > 1 {
                w[(i, (i + 1) % m)] = rng.random_range(0.1..=0.45);
            }
            let sum: f64 = w.row(i).sum();
            w.row_mut(i).unscale_mut(sum);
        }
        Self::with_weights(members, w)
    }

    /// Accepts any non-negative, row-stochastic `W` whose support is
    /// strongly connected.
    pub fn with_weights(
        members: &[(String, SensorKind)],
        w: DMatrix<f64>,
    ) -> Result<Self, EstimatorError> {
        let m = members.len();
        if m == 0 {
            return Err(EstimatorError::NoSensors);
        }
        if w.shape() != (m, m) {
            return Err(EstimatorError::Dimension(format!(
                "W is {}x{} for {m} sensors",
                w.nrows(),
                w.ncols()
            )));
        }
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(EstimatorError::BadWeights(
                "entries must be finite and non-negative".into(),
            ));
        }
        for i in 0..m {
            let sum: f64 = w.row(i).sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(EstimatorError::BadWeights(format!(
                    "row {} sums to {sum}",
                    i + 1
                )));
            }
        }
        if !strongly_connected(&w) {
            return Err(EstimatorError::BadWeights(
                "support is not strongly connected".into(),
            ));
        }
        let alpha: Vec<bool> = members
            .iter()
            .map(|(_, k)| *k == SensorKind::Alpha)
            .collect();
        let hubs = (0..m)
            .map(|i| (0..m).filter(|&j| j == i || alpha[j]).collect())
            .collect();
        Ok(Self {
            ids: members.iter().map(|(id, _)| id.clone()).collect(),
            alpha,
            w,
            hubs,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn is_alpha(&self, i: usize) -> bool {
        self.alpha[i]
    }

    /// `{i} ∪ {alive α sensors}`.
    pub fn hub(&self, i: usize) -> &[usize] {
        &self.hubs[i]
    }

    /// Sensors whose predictions sensor `i` fuses (`w_ij > 0`).
    pub fn prediction_neighbours(&self, i: usize) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.w[(i, j)] > 0.0).collect()
    }
}

fn strongly_connected(w: &DMatrix<f64>) -> bool {
    let m = w.nrows();
    let reach = |forward: bool| {
        let mut seen = vec![false; m];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for u in 0..m {
                let linked = if forward { w[(v, u)] } else { w[(u, v)] } > 0.0;
                if linked && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(true) && reach(false)
}

/// Ring network over the classified sensors, in classification order.
pub fn build_network(
    classification: &SensorClassification,
    seed: u64,
) -> Result<EstimatorNetwork, EstimatorError> {
    let members: Vec<(String, SensorKind)> = classification
        .roles
        .iter()
        .map(|r| (r.id.clone(), r.kind))
        .collect();
    EstimatorNetwork::ring(&members, seed)
}

/// Diagonal blocks of `D_H`: block `i` is `Σ_{j ∈ N_α(i)} H_jᵀ H_j`.
pub fn dh_blocks(
    system: &NumericSystem,
    network: &EstimatorNetwork,
) -> Result<Vec<DMatrix<f64>>, EstimatorError> {
    let n = system.n();
    let grams = network
        .ids()
        .iter()
        .map(|id| {
            let s = system
                .sensor(id)
                .ok_or_else(|| EstimatorError::UnknownSensor(id.clone()))?;
            Ok(s.h.transpose() * &s.h)
        })
        .collect::<Result<Vec<_>, EstimatorError>>()?;
    Ok((0..network.len())
        .map(|i| {
            network
                .hub(i)
                .iter()
                .fold(DMatrix::zeros(n, n), |acc, &j| acc + &grams[j])
        })
        .collect())
}

pub fn block_diagonal(blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let size: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = DMatrix::zeros(size, size);
    let mut at = 0;
    for b in blocks {
        out.view_mut((at, at), b.shape()).copy_from(b);
        at += b.nrows();
    }
    out
}

pub fn build_dh(
    system: &NumericSystem,
    network: &EstimatorNetwork,
) -> Result<DMatrix<f64>, EstimatorError> {
    Ok(block_diagonal(&dh_blocks(system, network)?))
}

/// Outcome of the distributed observability test.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservabilityReport {
    pub observable: bool,
    pub rank: usize,
    pub dimension: usize,
    /// Eigenvalue-cluster centres at which the PBH matrix drops rank.
    pub unobservable_modes: Vec<Complex<f64>>,
}

fn stack(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

/// Triangular factor with the same singular values as `m`.
fn compress(m: DMatrix<f64>) -> DMatrix<f64> {
    if m.nrows() <= m.ncols() {
        m
    } else {
        m.qr().r()
    }
}

fn numeric_rank(m: &DMatrix<f64>, dimension: usize) -> usize {
    let sv = m.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0;
    }
    let tol = dimension as f64 * f64::EPSILON * max;
    sv.iter().filter(|&&s| s > tol).count()
}

/// Rank of `[D; D M; ...; D M^{N-1}]`. Blocks are folded into a triangular
/// factor as they are produced (this keeps the singular values exact), and
/// the loop stops once a block adds no rank, since no later block can.
pub fn observability_rank(m: &DMatrix<f64>, d: &DMatrix<f64>) -> usize {
    let size = m.nrows();
    let rows: Vec<usize> = (0..d.nrows())
        .filter(|&r| d.row(r).iter().any(|&x| x != 0.0))
        .collect();
    if rows.is_empty() {
        return 0;
    }
    let mut block = d.select_rows(rows.iter());
    let mut factor = compress(block.clone());
    let mut rank = numeric_rank(&factor, size);
    for _ in 1..size {
        if rank == size {
            break;
        }
        block = &block * m;
        factor = compress(stack(&factor, &block));
        let next = numeric_rank(&factor, size);
        if next == rank {
            break;
        }
        rank = next;
    }
    rank
}

/// Groups eigenvalues closer than `radius` and returns the cluster means.
/// Kronecker products repeat every eigenvalue of `A`, and rounding splits
/// the copies slightly, so tests are run at the cluster centre.
fn eigen_clusters(eigs: &[Complex<f64>], radius: f64) -> Vec<Complex<f64>> {
    let mut used = vec![false; eigs.len()];
    let mut centres = Vec::new();
    for start in 0..eigs.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let mut group = vec![start];
        let mut k = 0;
        while k < group.len() {
            for j in 0..eigs.len() {
                if !used[j] && (eigs[j] - eigs[group[k]]).norm() < radius {
                    used[j] = true;
                    group.push(j);
                }
            }
            k += 1;
        }
        let sum: Complex<f64> = group.iter().map(|&g| eigs[g]).sum();
        centres.push(sum / group.len() as f64);
    }
    centres
}

fn pbh_drops_rank(m: &DMatrix<f64>, d: &DMatrix<f64>, lambda: Complex<f64>) -> bool {
    let size = m.nrows();
    let mut pbh = DMatrix::<Complex<f64>>::zeros(size + d.nrows(), size);
    for r in 0..size {
        for c in 0..size {
            let diag = if r == c {
                lambda
            } else {
                Complex::new(0.0, 0.0)
            };
            pbh[(r, c)] = diag - Complex::new(m[(r, c)], 0.0);
        }
    }
    for r in 0..d.nrows() {
        for c in 0..size {
            pbh[(size + r, c)] = Complex::new(d[(r, c)], 0.0);
        }
    }
    let sv = pbh.singular_values();
    sv.min() <= f64::EPSILON.sqrt() * sv.max()
}

/// Observability of the pair `(M, D)` with `M = W ⊗ A`, `D = D_H`.
///
/// Rank is judged on the observability matrix with threshold
/// `N·ε·σ_max`; the PBH test at every eigenvalue cluster (and at zero)
/// must agree, otherwise the result is reported as inconclusive.
pub fn distributed_observability(
    m: &DMatrix<f64>,
    d: &DMatrix<f64>,
) -> Result<ObservabilityReport, EstimatorError> {
    let size = m.nrows();
    if size > MAX_OBSERVABILITY_DIM {
        return Err(EstimatorError::TooLarge(size));
    }
    if m.ncols() != size || d.ncols() != size {
        return Err(EstimatorError::Dimension(format!(
            "M is {}x{}, D is {}x{}",
            m.nrows(),
            m.ncols(),
            d.nrows(),
            d.ncols()
        )));
    }
    let rank = observability_rank(m, d);
    let norm = m.norm().max(1.0);
    // Zero is always tested: structurally singular `A` gives a defective
    // zero eigenvalue whose computed copies can scatter beyond the radius.
    let mut centres = eigen_clusters(&eigenvalues(m)?, 1e-3 * norm);
    centres.push(Complex::new(0.0, 0.0));
    let unobservable_modes: Vec<Complex<f64>> = centres
        .into_iter()
        .filter(|&z| pbh_drops_rank(m, d, z))
        .collect();
    let rank_observable = rank == size;
    let pbh_observable = unobservable_modes.is_empty();
    if rank_observable != pbh_observable {
        return Err(EstimatorError::Inconclusive {
            rank_observable,
            pbh_observable,
        });
    }
    Ok(ObservabilityReport {
        observable: rank_observable,
        rank,
        dimension: size,
        unobservable_modes,
    })
}

/// Convenience: `(W ⊗ A, D_H)` for a system and network.
pub fn distributed_pair(
    system: &NumericSystem,
    network: &EstimatorNetwork,
) -> Result<(DMatrix<f64>, DMatrix<f64>), EstimatorError> {
    Ok((
        network.weights().kronecker(&system.a),
        build_dh(system, network)?,
    ))
}

/// Block-diagonal gain, one `n×n` block per sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    pub blocks: Vec<DMatrix<f64>>,
}

impl GainMatrix {
    pub fn assemble(&self) -> DMatrix<f64> {
        block_diagonal(&self.blocks)
    }
}

/// `W ⊗ A − K D_H (W ⊗ A)`, built block by block as
/// `w_ij (I − K_i D_i) A`.
pub fn closed_loop(
    a: &DMatrix<f64>,
    w: &DMatrix<f64>,
    d_blocks: &[DMatrix<f64>],
    k_blocks: &[DMatrix<f64>],
) -> DMatrix<f64> {
    let n = a.nrows();
    let m = w.nrows();
    let mut out = DMatrix::zeros(m * n, m * n);
    for i in 0..m {
        let left = (DMatrix::identity(n, n) - &k_blocks[i] * &d_blocks[i]) * a;
        for j in 0..m {
            if w[(i, j)] != 0.0 {
                out.view_mut((i * n, j * n), (n, n))
                    .copy_from(&(&left * w[(i, j)]));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorDynamics {
    pub closed_loop: DMatrix<f64>,
    pub spectral_radius: f64,
}

pub fn error_dynamics(
    system: &NumericSystem,
    network: &EstimatorNetwork,
    gain: &GainMatrix,
) -> Result<ErrorDynamics, EstimatorError> {
    let d = dh_blocks(system, network)?;
    if gain.blocks.len() != d.len() {
        return Err(EstimatorError::Dimension(format!(
            "{} gain blocks for {} sensors",
            gain.blocks.len(),
            d.len()
        )));
    }
    let closed_loop = closed_loop(&system.a, network.weights(), &d, &gain.blocks);
    let spectral_radius = spectral_radius(&closed_loop)?;
    Ok(ErrorDynamics {
        closed_loop,
        spectral_radius,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainOptions {
    /// Required stability margin: the certificate is `ρ < 1 − margin`.
    pub margin: f64,
    /// Maximum number of spectral-radius evaluations.
    pub budget: usize,
    pub seed: u64,
}

impl Default for GainOptions {
    fn default() -> Self {
        Self {
            margin: 0.02,
            budget: 5000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainDesign {
    pub gain: GainMatrix,
    pub spectral_radius: f64,
    pub evaluations: usize,
}

/// Steady-state Kalman gain of the centralized filter measuring `states`,
/// from the Riccati recursion run to convergence.
fn centralized_gain(
    a: &DMatrix<f64>,
    states: &[usize],
    sigma_v: f64,
    sigma_r: f64,
) -> DMatrix<f64> {
    let n = a.nrows();
    let c = indicator_rows(n, states);
    let q = DMatrix::identity(n, n) * sigma_v.powi(2).max(1e-12);
    let r = DMatrix::identity(states.len(), states.len()) * sigma_r.powi(2).max(1e-12);
    let mut p = q.clone();
    let mut gain = DMatrix::zeros(n, states.len());
    for _ in 0..10_000 {
        let s = &c * &p * c.transpose() + &r;
        let Some(s_inv) = s.try_inverse() else { break };
        gain = &p * c.transpose() * s_inv;
        let filtered = (DMatrix::identity(n, n) - &gain * &c) * &p;
        let next = a * filtered * a.transpose() + &q;
        let change = (&next - &p).norm() / next.norm().max(1.0);
        p = next;
        if !change.is_finite() || change < 1e-13 {
            break;
        }
    }
    gain
}

/// Searches for a block-diagonal gain with `ρ(closed loop) < 1 − margin`.
///
/// Each block starts from the centralized Kalman gain, keeping only the
/// columns of states the sensor sees in `D_i` (divided by the diagonal of
/// `D_i`). Stage one scales each block by a scalar, found by coordinate
/// descent over a log grid, retrying with shapes from smaller measurement
/// noise while the target is missed. If that is not enough, stage two perturbs all
/// free entries at random with an adaptive step, keeping improvements.
pub fn design_gain(
    system: &NumericSystem,
    network: &EstimatorNetwork,
    options: GainOptions,
) -> Result<GainDesign, EstimatorError> {
    let (wa, dh) = distributed_pair(system, network)?;
    if !distributed_observability(&wa, &dh)?.observable {
        return Err(EstimatorError::NotObservable);
    }
    let n = system.n();
    let d = dh_blocks(system, network)?;
    let seen: Vec<Vec<usize>> = d
        .iter()
        .map(|b| (0..n).filter(|&s| b[(s, s)] > 0.0).collect())
        .collect();
    let mut union: Vec<usize> = seen.iter().flatten().copied().collect();
    union.sort_unstable();
    union.dedup();
    let shape = |r_scale: f64| -> Vec<DMatrix<f64>> {
        let central = centralized_gain(&system.a, &union, system.sigma_v, system.sigma_r * r_scale);
        (0..network.len())
            .map(|i| {
                let mut k = DMatrix::zeros(n, n);
                for &s in &seen[i] {
                    let col = union.binary_search(&s).expect("state is in the union");
                    k.set_column(s, &(central.column(col) / d[i][(s, s)]));
                }
                k
            })
            .collect()
    };

    let target = 1.0 - options.margin;
    let evaluations = Cell::new(0);
    let evaluate = |blocks: &[DMatrix<f64>]| -> Result<f64, EstimatorError> {
        evaluations.set(evaluations.get() + 1);
        match spectral_radius(&closed_loop(&system.a, network.weights(), &d, blocks)) {
            Err(EstimatorError::EigenFailure) => Ok(f64::INFINITY),
            other => other,
        }
    };

    let grid: Vec<f64> = (0..41).map(|k| 10f64.powf(-2.0 + 0.1 * k as f64)).collect();
    let mut blocks = Vec::new();
    let mut best = f64::INFINITY;
    // Smaller measurement noise in the Riccati shape gives a stiffer filter,
    // which helps when the variance-optimal one sits close to the unit circle.
    for r_scale in [1.0, 1e-2, 1e-4] {
        let shapes = shape(r_scale);
        let scaled = |c: &[f64]| -> Vec<DMatrix<f64>> {
            shapes.iter().zip(c).map(|(s, &c)| s * c).collect()
        };
        let mut scales = vec![1.0; shapes.len()];
        let mut local = evaluate(&scaled(&scales))?;
        'sweeps: for _ in 0..20 {
            let mut improved = false;
            for i in 0..scales.len() {
                for &g in &grid {
                    if evaluations.get() >= options.budget {
                        break 'sweeps;
                    }
                    let mut trial = scales.clone();
                    trial[i] = g;
                    let rho = evaluate(&scaled(&trial))?;
                    if rho < local - 1e-12 {
                        local = rho;
                        scales = trial;
                        improved = true;
                    }
                }
            }
            if !improved {
                break;
            }
        }
        if local < best {
            best = local;
            blocks = scaled(&scales);
        }
        if best < target || evaluations.get() >= options.budget {
            break;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let normal = rand_distr::StandardNormal;
    let mut step = 0.1;
    while best >= target && evaluations.get() < options.budget {
        let trial: Vec<DMatrix<f64>> = blocks
            .iter()
            .zip(&seen)
            .map(|(k, cols)| {
                let scale = k.norm().max(0.1) / (n as f64).sqrt();
                let mut k = k.clone();
                for &c in cols {
                    for r in 0..n {
                        let z: f64 = rng.sample(normal);
                        k[(r, c)] += step * scale * z;
                    }
                }
                k
            })
            .collect();
        let rho = evaluate(&trial)?;
        if rho < best {
            best = rho;
            blocks = trial;
            step = (step * 1.5).min(1.0);
        } else {
            step = (step * 0.8).max(1e-4);
        }
    }

    if best < target {
        Ok(GainDesign {
            gain: GainMatrix { blocks },
            spectral_radius: best,
            evaluations: evaluations.get(),
        })
    } else {
        Err(EstimatorError::SynthesisFailed {
            best_rho: best,
            evaluations: evaluations.get(),
        })
    }
}

/// The running estimator: one estimate per network sensor.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributedEstimator {
    a: DMatrix<f64>,
    network: EstimatorNetwork,
    h: Vec<DMatrix<f64>>,
    gain: GainMatrix,
}

impl DistributedEstimator {
    pub fn new(
        system: &NumericSystem,
        network: EstimatorNetwork,
        gain: GainMatrix,
    ) -> Result<Self, EstimatorError> {
        let h = network
            .ids()
            .iter()
            .map(|id| {
                system
                    .sensor(id)
                    .map(|s| s.h.clone())
                    .ok_or_else(|| EstimatorError::UnknownSensor(id.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let n = system.n();
        if gain.blocks.len() != network.len() || gain.blocks.iter().any(|k| k.shape() != (n, n)) {
            return Err(EstimatorError::Dimension(format!(
                "gain must have {} blocks of {n}x{n}",
                network.len()
            )));
        }
        Ok(Self {
            a: system.a.clone(),
            network,
            h,
            gain,
        })
    }

    pub fn gain(&self) -> &GainMatrix {
        &self.gain
    }

    pub fn network(&self) -> &EstimatorNetwork {
        &self.network
    }

    pub fn h(&self, i: usize) -> &DMatrix<f64> {
        &self.h[i]
    }

    /// Prediction fusion `Σ_j w_ij A x̂^j`, then measurement fusion
    /// `x̂^i += K_i Σ_{j∈N_α(i)} H_jᵀ (y^j − H_j x̂^i)`.
    pub fn step(
        &self,
        estimates: &[DVector<f64>],
        measurements: &[DVector<f64>],
    ) -> Result<Vec<DVector<f64>>, EstimatorError> {
        let m = self.network.len();
        let n = self.a.nrows();
        if estimates.len() != m || measurements.len() != m {
            return Err(EstimatorError::Dimension(format!(
                "{} estimates and {} measurements for {m} sensors",
                estimates.len(),
                measurements.len()
            )));
        }
        for (i, (e, y)) in estimates.iter().zip(measurements).enumerate() {
            if e.len() != n || y.len() != self.h[i].nrows() {
                return Err(EstimatorError::Dimension(format!(
                    "sensor {} expects an estimate of length {n} and {} measurements",
                    self.network.ids()[i],
                    self.h[i].nrows()
                )));
            }
        }
        let propagated: Vec<DVector<f64>> = estimates.iter().map(|e| &self.a * e).collect();
        let w = self.network.weights();
        Ok((0..m)
            .map(|i| {
                let mut prior = DVector::zeros(n);
                for j in 0..m {
                    if w[(i, j)] != 0.0 {
                        prior.axpy(w[(i, j)], &propagated[j], 1.0);
                    }
                }
                let mut innovation = DVector::zeros(n);
                for &j in self.network.hub(i) {
                    let residual = &measurements[j] - &self.h[j] * &prior;
                    innovation += self.h[j].transpose() * residual;
                }
                prior + &self.gain.blocks[i] * innovation
            })
            .collect())
    }
}
