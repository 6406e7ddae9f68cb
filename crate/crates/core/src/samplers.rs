//! Step kernels, chain runners and synchronous coupling.
//!
//! Stream convention: every kernel draws its Gaussian noise from the chain's
//! own [`RandomStream`]. SLMC first consumes one uniform variate to pick a
//! block (skipped when the partition has a single block), then `r` normals
//! which are mapped through `W D^{1/2}`. PLMC maps `d` normals through
//! `Q D^{1/2}`, the eigenbasis factor of `A`, so a single full-rank block
//! and PLMC see the same noise.

use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{BlockDraw, Matrix, SpdMatrix, Vector};
use crate::preconditioners::{Preconditioner, PreconditionerSchedule, ScheduleSpec};
use crate::rng::RandomStream;
use crate::targets::{OracleCounter, Potential};

#[derive(Clone, Debug)]
pub struct ChainState {
    pub position: Vector,
    pub step: usize,
    /// Directional derivatives consumed by the step kernel.
    pub oracle_calls: OracleCounter,
    /// Gradients consumed by adaptive schedules, kept apart from the kernel
    /// cost.
    pub schedule_calls: OracleCounter,
    pub rng: RandomStream,
}

impl ChainState {
    pub fn new(position: Vector, rng: RandomStream) -> Self {
        Self {
            position,
            step: 0,
            oracle_calls: OracleCounter::new(),
            schedule_calls: OracleCounter::new(),
            rng,
        }
    }

    fn commit(&mut self, next: Vector) -> Result<()> {
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::Diverged {
                step: self.step,
                last_finite: self.position.as_slice().to_vec(),
            });
        }
        self.position = next;
        self.step += 1;
        Ok(())
    }

    fn check_gradient(&self, g: &Vector) -> Result<()> {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient {
                step: self.step,
                position: self.position.as_slice().to_vec(),
            });
        }
        Ok(())
    }
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidStepSize(h));
    }
    Ok(())
}

/// `X ← X − h ∇V(X) + √(2h) ξ`.
pub fn lmc_step(state: &mut ChainState, pot: &dyn Potential, h: f64) -> Result<()> {
    check_step(h)?;
    let g = pot.gradient(&state.position, &mut state.oracle_calls);
    state.check_gradient(&g)?;
    let d = g.len();
    let mut xi = Vector::zeros(d);
    state.rng.fill_standard_normal(xi.as_mut_slice());
    let next = &state.position - g * h + xi * (2.0 * h).sqrt();
    state.commit(next)
}

/// `X ← X − h A ∇V(X) + √(2h) L ξ` with `L Lᵀ = A`.
pub fn plmc_step(
    state: &mut ChainState,
    pot: &dyn Potential,
    a: &SpdMatrix,
    noise_factor: &Matrix,
    h: f64,
) -> Result<()> {
    check_step(h)?;
    let g = pot.gradient(&state.position, &mut state.oracle_calls);
    state.check_gradient(&g)?;
    let d = g.len();
    let mut xi = Vector::zeros(d);
    state.rng.fill_standard_normal(xi.as_mut_slice());
    let next = &state.position - (a.matrix() * g) * h + (noise_factor * xi) * (2.0 * h).sqrt();
    state.commit(next)
}

/// `X ← X − h_k W D (Wᵀ∇V(X)) + √(2h_k) W D^{1/2} ξ_r`.
pub fn slmc_step(state: &mut ChainState, pot: &dyn Potential, draw: &BlockDraw<'_>) -> Result<()> {
    let h = draw.effective_step;
    check_step(h)?;
    let block = draw.block;
    let mut gr = pot.directional_gradient(&state.position, &block.basis, &mut state.oracle_calls);
    state.check_gradient(&gr)?;
    let r = gr.len();
    let mut xi = Vector::zeros(r);
    state.rng.fill_standard_normal(xi.as_mut_slice());
    let noise_scale = (2.0 * h).sqrt();
    for j in 0..r {
        gr[j] = -h * block.eigenvalues[j] * gr[j] + noise_scale * block.sqrt_eigenvalues()[j] * xi[j];
    }
    let next = &state.position + &block.basis * gr;
    state.commit(next)
}

/// Random-coordinate LMC: one coordinate `i` drawn uniformly, then
/// `x_i ← x_i − h_k ∂_i V(x) + √(2h_k) ξ` with `h_k = h d`.
pub fn rclmc_step(state: &mut ChainState, pot: &dyn Potential, h: f64) -> Result<()> {
    check_step(h)?;
    let d = state.position.len();
    let phi = 1.0 / d as f64;
    let i = if d == 1 {
        0
    } else {
        let u = state.rng.uniform();
        let mut acc = 0.0;
        let mut index = d - 1;
        for k in 0..d {
            acc += phi;
            if u < acc {
                index = k;
                break;
            }
        }
        index
    };
    let hk = h / phi;
    let gi = pot.partial(&state.position, i, &mut state.oracle_calls);
    if !gi.is_finite() {
        return Err(Error::NonFiniteGradient {
            step: state.step,
            position: state.position.as_slice().to_vec(),
        });
    }
    let xi = state.rng.standard_normal();
    let mut next = state.position.clone();
    next[i] += -hk * gi + (2.0 * hk).sqrt() * xi;
    state.commit(next)
}

/// `x ← x − h (d/r) W Wᵀ ∇f(x)`; charges `r` calls.
pub fn subspace_gd_step(
    x: &Vector,
    pot: &dyn Potential,
    basis: &Matrix,
    h: f64,
    counter: &mut OracleCounter,
) -> Result<Vector> {
    check_step(h)?;
    let d = basis.nrows() as f64;
    let r = basis.ncols() as f64;
    let gr = pot.directional_gradient(x, basis, counter);
    if gr.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteGradient {
            step: 0,
            position: x.as_slice().to_vec(),
        });
    }
    Ok(x - basis * gr * (h * d / r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplerKind {
    Lmc,
    Plmc,
    Slmc,
    Rclmc,
}

/// How the configured step size maps to the per-block steps of SLMC.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum StepReference {
    /// `h` is the base step: block `i` moves with `h / φ_i`.
    #[default]
    Base,
    /// `h` is the largest per-block step: the base step is `h · min_i φ_i`.
    /// With uniform probabilities every block moves with exactly `h`.
    MaxBlock,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub step_size: f64,
    pub step_reference: StepReference,
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind, step_size: f64) -> Self {
        Self {
            kind,
            step_size,
            step_reference: StepReference::Base,
        }
    }

    pub fn with_reference(mut self, step_reference: StepReference) -> Self {
        self.step_reference = step_reference;
        self
    }

    /// Directional derivatives per step.
    pub fn cost_per_step(&self, d: usize, rank: usize) -> usize {
        match self.kind {
            SamplerKind::Lmc | SamplerKind::Plmc => d,
            SamplerKind::Slmc => rank,
            SamplerKind::Rclmc => 1,
        }
    }

    fn base_step(&self, min_phi: f64) -> f64 {
        match self.step_reference {
            StepReference::Base => self.step_size,
            StepReference::MaxBlock => self.step_size * min_phi,
        }
    }

    /// Advances `state` by one step under preconditioner `pre`.
    pub fn step(&self, state: &mut ChainState, pot: &dyn Potential, pre: &Preconditioner) -> Result<()> {
        match self.kind {
            SamplerKind::Lmc => lmc_step(state, pot, self.step_size),
            SamplerKind::Plmc => plmc_step(state, pot, pre.matrix(), pre.noise_factor(), self.step_size),
            SamplerKind::Slmc => {
                let partition = pre.partition();
                let h = self.base_step(partition.min_probability());
                let draw = partition.sample_block(h, &mut state.rng)?;
                slmc_step(state, pot, &draw)
            }
            SamplerKind::Rclmc => {
                let d = state.position.len();
                rclmc_step(state, pot, self.base_step(1.0 / d as f64))
            }
        }
    }
}

/// One schedule query followed by one kernel step.
fn advance_one(
    sampler: &SamplerConfig,
    state: &mut ChainState,
    pot: &dyn Potential,
    schedule: &mut dyn PreconditionerSchedule,
) -> Result<()> {
    let gradient = if schedule.uses_gradient() {
        let g = pot.gradient(&state.position, &mut state.schedule_calls);
        state.check_gradient(&g)?;
        Some(g)
    } else {
        None
    };
    let single;
    let ensemble = if schedule.uses_ensemble() {
        single = [state.position.clone()];
        Some(&single[..])
    } else {
        None
    };
    // A per-chain preconditioner that can no longer be represented as SPD
    // (typically after gradients of 1e20 and more) ends the chain like a
    // non-finite state would.
    let pre = match schedule.next(state.step, ensemble, gradient.as_ref()) {
        Err(Error::NotPositiveDefinite { eigenvalue, largest }) => {
            log::debug!(
                "chain preconditioner at step {} has eigenvalue {eigenvalue:e} against {largest:e}",
                state.step
            );
            return Err(Error::Diverged {
                step: state.step,
                last_finite: state.position.as_slice().to_vec(),
            });
        }
        other => other?,
    };
    sampler.step(state, pot, &pre)
}

/// Recorded states of one chain.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<usize>,
    pub oracle_calls: Vec<u64>,
    pub positions: Vec<Vector>,
    /// Step at which the chain left the finite range, if it did. The last
    /// record is then the last finite state.
    pub diverged_at: Option<usize>,
}

impl Trajectory {
    fn record(&mut self, state: &ChainState) {
        self.steps.push(state.step);
        self.oracle_calls.push(state.oracle_calls.calls());
        self.positions.push(state.position.clone());
    }

    /// Columns `step, oracle_calls, x_1..x_d`.
    pub fn to_csv(&self) -> String {
        let d = self.positions.first().map_or(0, |p| p.len());
        let mut out = String::from("step,oracle_calls");
        for j in 1..=d {
            let _ = write!(out, ",x_{j}");
        }
        out.push('\n');
        for ((s, c), x) in self.steps.iter().zip(&self.oracle_calls).zip(&self.positions) {
            let _ = write!(out, "{s},{c}");
            for v in x.iter() {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

/// Runs `steps` iterations from `initial`, recording every `thin` steps
/// (and always the first and last state).
pub fn run_chain(
    initial: Vector,
    pot: &dyn Potential,
    sampler: &SamplerConfig,
    schedule: &mut dyn PreconditionerSchedule,
    steps: usize,
    thin: usize,
    seed: u64,
) -> Result<Trajectory> {
    if thin == 0 {
        return Err(Error::InvalidParameter("thinning interval must be ≥ 1".into()));
    }
    if initial.len() != pot.dim() {
        return Err(Error::DimensionMismatch {
            expected: pot.dim(),
            got: initial.len(),
        });
    }
    let mut state = ChainState::new(initial, RandomStream::new(seed));
    let mut traj = Trajectory::default();
    traj.record(&state);
    for _ in 0..steps {
        match advance_one(sampler, &mut state, pot, schedule) {
            Ok(()) => {}
            Err(Error::Diverged { step, .. }) | Err(Error::NonFiniteGradient { step, .. }) => {
                log::warn!("chain diverged at step {step}");
                traj.diverged_at = Some(step);
                if traj.steps.last() != Some(&state.step) {
                    traj.record(&state);
                }
                return Ok(traj);
            }
            Err(e) => return Err(e),
        }
        if state.step % thin == 0 || state.step == steps {
            traj.record(&state);
        }
    }
    Ok(traj)
}

struct Chain {
    state: ChainState,
    schedule: Option<Box<dyn PreconditionerSchedule>>,
    diverged_at: Option<usize>,
}

impl Chain {
    fn advance(&mut self, sampler: &SamplerConfig, pot: &dyn Potential, n: usize) -> Result<()> {
        let schedule = self.schedule.as_deref_mut().expect("per-chain schedule");
        for _ in 0..n {
            if self.diverged_at.is_some() {
                return Ok(());
            }
            match advance_one(sampler, &mut self.state, pot, schedule) {
                Ok(()) => {}
                Err(Error::Diverged { step, .. }) | Err(Error::NonFiniteGradient { step, .. }) => {
                    self.diverged_at = Some(step);
                }
                Err(e) => return Err(e),
            }
        }
        Ok(())
    }
}

/// Independent chains advanced together. Chain `i` draws from
/// `streams.split(i)`, so results do not depend on thread count.
///
/// Ensemble-dependent schedules are queried once per step with the positions
/// of all live chains; other schedules are instantiated per chain.
pub struct Ensemble {
    potential: Arc<dyn Potential>,
    sampler: SamplerConfig,
    chains: Vec<Chain>,
    shared: Option<Box<dyn PreconditionerSchedule>>,
    step: usize,
}

impl Ensemble {
    pub fn new(
        potential: Arc<dyn Potential>,
        sampler: SamplerConfig,
        schedule: &ScheduleSpec,
        initial: Vec<Vector>,
        streams: &RandomStream,
    ) -> Result<Self> {
        let d = potential.dim();
        if initial.is_empty() {
            return Err(Error::EnsembleMissing);
        }
        if let Some(bad) = initial.iter().find(|x| x.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: bad.len(),
            });
        }
        let shared = schedule.uses_ensemble().then(|| schedule.build());
        let chains = initial
            .into_iter()
            .enumerate()
            .map(|(i, x)| Chain {
                state: ChainState::new(x, streams.split(i as u64)),
                schedule: (!schedule.uses_ensemble()).then(|| schedule.build()),
                diverged_at: None,
            })
            .collect();
        Ok(Self {
            potential,
            sampler,
            chains,
            shared,
            step: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn advance(&mut self, n: usize) -> Result<()> {
        let pot = self.potential.as_ref();
        let sampler = self.sampler;
        match self.shared.as_deref_mut() {
            None => {
                self.chains
                    .par_iter_mut()
                    .map(|c| c.advance(&sampler, pot, n))
                    .collect::<Result<Vec<()>>>()?;
            }
            Some(schedule) => {
                for _ in 0..n {
                    let positions: Vec<Vector> = self
                        .chains
                        .iter()
                        .filter(|c| c.diverged_at.is_none())
                        .map(|c| c.state.position.clone())
                        .collect();
                    if positions.is_empty() {
                        break;
                    }
                    let pre = schedule.next(self.step, Some(&positions), None)?;
                    self.chains
                        .par_iter_mut()
                        .filter(|c| c.diverged_at.is_none())
                        .map(|c| match sampler.step(&mut c.state, pot, &pre) {
                            Ok(()) => Ok(()),
                            Err(Error::Diverged { step, .. })
                            | Err(Error::NonFiniteGradient { step, .. }) => {
                                c.diverged_at = Some(step);
                                Ok(())
                            }
                            Err(e) => Err(e),
                        })
                        .collect::<Result<Vec<()>>>()?;
                    self.step += 1;
                }
                return Ok(());
            }
        }
        self.step += n;
        Ok(())
    }

    /// Positions of chains that have not diverged.
    pub fn positions(&self) -> Vec<Vector> {
        self.chains
            .iter()
            .filter(|c| c.diverged_at.is_none())
            .map(|c| c.state.position.clone())
            .collect()
    }

    pub fn states(&self) -> impl Iterator<Item = &ChainState> {
        self.chains.iter().map(|c| &c.state)
    }

    /// States of chains that have not diverged.
    pub fn live_states(&self) -> impl Iterator<Item = &ChainState> {
        self.chains
            .iter()
            .filter(|c| c.diverged_at.is_none())
            .map(|c| &c.state)
    }

    pub fn diverged(&self) -> usize {
        self.chains.iter().filter(|c| c.diverged_at.is_some()).count()
    }

    /// Kernel oracle calls of the chains still running (all equal).
    pub fn oracle_calls(&self) -> u64 {
        self.chains
            .iter()
            .map(|c| c.state.oracle_calls.calls())
            .max()
            .unwrap_or(0)
    }

    pub fn schedule_calls(&self) -> u64 {
        self.chains
            .iter()
            .map(|c| c.state.schedule_calls.calls())
            .max()
            .unwrap_or(0)
    }
}

/// Two PLMC chains driven by the same noise; returns
/// `‖Z_k − Z'_k‖²_{A⁻¹}` for `k = 0..=steps`.
pub fn run_coupled_pair(
    z0: Vector,
    z0p: Vector,
    pot: &dyn Potential,
    a: &SpdMatrix,
    h: f64,
    steps: usize,
    rng: &RandomStream,
) -> Result<Vec<f64>> {
    let a_inv = a.inverse();
    let factor = a.eigen_factor();
    let mut first = ChainState::new(z0, rng.clone());
    let mut second = ChainState::new(z0p, rng.clone());
    let gap = |x: &ChainState, y: &ChainState| {
        let diff = &x.position - &y.position;
        diff.dot(&(a_inv.matrix() * &diff))
    };
    let mut out = Vec::with_capacity(steps + 1);
    out.push(gap(&first, &second));
    for _ in 0..steps {
        plmc_step(&mut first, pot, a, &factor, h)?;
        plmc_step(&mut second, pot, a, &factor, h)?;
        out.push(gap(&first, &second));
    }
    Ok(out)
}
