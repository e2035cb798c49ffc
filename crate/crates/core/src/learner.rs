//! Effective temperature of the Gibbs distribution that tracks the GA.
//!
//! Minimising the KL divergence from the GA's empirical distribution to a
//! Gibbs distribution gives the learning flow
//! `dT/dt = -T^2 (U(T) - U_GA)`: the temperature falls while the population
//! is colder than equilibrium at `T` and rises while it is hotter. It is
//! integrated by forward Euler with one step per generation, scaled by a
//! learning rate. Both energies are totals (extensive), never densities.

use std::io::Write;

use crate::analytic::{
    chain_internal_energy, sk_internal_energy_density, sk_rs_fixed_point_from, FixedPointOptions, QuadratureRule,
};
use crate::error::{Error, Result};
use crate::mcmc::{estimate_internal_energy, gibbs_from_energies, mean_and_stderr, McmcOptions};
use crate::rng;
use crate::spins::{enumerate_landscape, Disorder, DisorderParams, EnergyModel};

pub const DEFAULT_T_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerState {
    pub temperature: f64,
    pub generation: u64,
    pub learning_rate: f64,
    pub t_floor: f64,
}

impl LearnerState {
    pub fn new(temperature: f64, learning_rate: f64, t_floor: f64) -> Result<Self> {
        if !(t_floor > 0.0) || !(temperature >= t_floor) || !temperature.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need temperature >= t_floor > 0 (T = {temperature}, floor = {t_floor})"
            )));
        }
        if !(learning_rate >= 0.0) {
            return Err(Error::InvalidParameter(format!("learning rate {learning_rate} must be >= 0")));
        }
        Ok(Self {
            temperature,
            generation: 0,
            learning_rate,
            t_floor,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    AnalyticChain,
    AnalyticSk,
    Mcmc,
    Enumeration,
}

/// Total Gibbs internal energy `U(T)` of one instance (or its
/// thermodynamic-limit stand-in).
pub trait EnergyOracle {
    fn kind(&self) -> OracleKind;
    fn internal_energy(&mut self, temperature: f64) -> Result<f64>;
}

/// `N` times the chain's analytic energy density.
#[derive(Debug, Clone)]
pub struct AnalyticChainOracle {
    params: DisorderParams,
    n: usize,
    rule: QuadratureRule,
}

impl AnalyticChainOracle {
    pub fn new(params: DisorderParams, n: usize, rule: QuadratureRule) -> Self {
        Self { params, n, rule }
    }
}

impl EnergyOracle for AnalyticChainOracle {
    fn kind(&self) -> OracleKind {
        OracleKind::AnalyticChain
    }

    fn internal_energy(&mut self, temperature: f64) -> Result<f64> {
        Ok(self.n as f64 * chain_internal_energy(temperature, &self.params, &self.rule)?)
    }
}

/// `N` times the replica-symmetric SK energy density. Each solve starts from
/// the previous solution.
#[derive(Debug, Clone)]
pub struct AnalyticSkOracle {
    params: DisorderParams,
    n: usize,
    rule: QuadratureRule,
    opts: FixedPointOptions,
    warm: Option<(f64, f64)>,
}

impl AnalyticSkOracle {
    /// Non-converged iterates with a defect below this are still accepted;
    /// near `T = J` the RS map contracts only algebraically.
    pub const ACCEPTABLE_DEFECT: f64 = 1e-8;

    pub fn new(params: DisorderParams, n: usize, rule: QuadratureRule, opts: FixedPointOptions) -> Self {
        Self {
            params,
            n,
            rule,
            opts,
            warm: None,
        }
    }
}

impl EnergyOracle for AnalyticSkOracle {
    fn kind(&self) -> OracleKind {
        OracleKind::AnalyticSk
    }

    fn internal_energy(&mut self, temperature: f64) -> Result<f64> {
        let start = self.warm.unwrap_or_else(|| {
            let m0 = if self.params.mean == 0.0 { 0.0 } else { 0.5 * self.params.mean.signum() };
            (m0, 0.5)
        });
        // With J0 = 0 and T > J the paramagnetic point is the unique fixed
        // point; elsewhere keep q off it so a nontrivial root is found.
        let start = if self.params.mean == 0.0 && temperature > self.params.std {
            (0.0, 0.0)
        } else {
            (start.0, start.1.max(1e-3))
        };
        let rs = match sk_rs_fixed_point_from(temperature, &self.params, &self.rule, &self.opts, start) {
            Ok(rs) => rs,
            Err(Error::Convergence {
                iterations,
                m,
                q,
                residual,
            }) if residual <= Self::ACCEPTABLE_DEFECT => crate::analytic::RsOrderParams {
                m,
                q,
                temperature,
                residual,
                iterations,
            },
            Err(e) => return Err(e),
        };
        self.warm = Some((rs.m, rs.q));
        Ok(self.n as f64 * sk_internal_energy_density(temperature, &self.params, &rs)?)
    }
}

/// Metropolis estimate on a concrete instance.
#[derive(Debug, Clone)]
pub struct McmcOracle {
    disorder: Disorder,
    opts: McmcOptions,
    seed: u64,
}

impl McmcOracle {
    pub fn new(disorder: Disorder, opts: McmcOptions, seed: u64) -> Self {
        Self { disorder, opts, seed }
    }
}

impl EnergyOracle for McmcOracle {
    fn kind(&self) -> OracleKind {
        OracleKind::Mcmc
    }

    fn internal_energy(&mut self, temperature: f64) -> Result<f64> {
        let seed = rng::derive_seed(self.seed, &[temperature.to_bits()]);
        Ok(estimate_internal_energy(&self.disorder, temperature, &self.opts, seed)?.mean)
    }
}

/// Exact Gibbs energy of a small instance from its cached landscape.
#[derive(Debug, Clone)]
pub struct EnumerationOracle {
    energies: Vec<f64>,
}

impl EnumerationOracle {
    pub fn new<M: EnergyModel + ?Sized>(model: &M) -> Result<Self> {
        Ok(Self {
            energies: enumerate_landscape(model)?.into_iter().map(|(_, e)| e).collect(),
        })
    }
}

impl EnergyOracle for EnumerationOracle {
    fn kind(&self) -> OracleKind {
        OracleKind::Enumeration
    }

    fn internal_energy(&mut self, temperature: f64) -> Result<f64> {
        if !(temperature > 0.0) {
            return Err(Error::Domain(format!("temperature must be positive, got {temperature}")));
        }
        Ok(gibbs_from_energies(&self.energies, temperature).internal_energy)
    }
}

impl<T: EnergyOracle + ?Sized> EnergyOracle for Box<T> {
    fn kind(&self) -> OracleKind {
        (**self).kind()
    }

    fn internal_energy(&mut self, temperature: f64) -> Result<f64> {
        (**self).internal_energy(temperature)
    }
}

/// One forward-Euler step, `T <- max(floor, T - eta T^2 (U(T) - U_GA))`.
pub fn learner_step<O: EnergyOracle + ?Sized>(state: &LearnerState, u_ga: f64, oracle: &mut O) -> Result<LearnerState> {
    learner_step_with_energy(state, u_ga, oracle).map(|(s, _)| s)
}

/// As [`learner_step`], also returning the `U(T)` evaluated at the old
/// temperature.
pub fn learner_step_with_energy<O: EnergyOracle + ?Sized>(
    state: &LearnerState,
    u_ga: f64,
    oracle: &mut O,
) -> Result<(LearnerState, f64)> {
    if !u_ga.is_finite() {
        return Err(Error::InvalidParameter(format!("U_GA must be finite, got {u_ga}")));
    }
    let t = state.temperature;
    let u = oracle.internal_energy(t)?;
    let next = (t - state.learning_rate * t * t * (u - u_ga)).max(state.t_floor);
    Ok((
        LearnerState {
            temperature: next,
            generation: state.generation + 1,
            ..*state
        },
        u,
    ))
}

/// Solves `U(T*) = u_ga` by bisection on a bracket over which `U` increases.
pub fn match_temperature<O: EnergyOracle + ?Sized>(u_ga: f64, oracle: &mut O, bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Precondition(format!("invalid bracket ({lo}, {hi})")));
    }
    let u_lo = oracle.internal_energy(lo)?;
    let u_hi = oracle.internal_energy(hi)?;
    if u_lo > u_hi {
        return Err(Error::Precondition(format!(
            "U is not increasing over the bracket: U({lo}) = {u_lo} > U({hi}) = {u_hi}"
        )));
    }
    if u_ga < u_lo || u_ga > u_hi {
        return Err(Error::Unbracketable {
            target: u_ga,
            lo: u_lo,
            hi: u_hi,
        });
    }
    let (mut f_lo, mut f_hi) = (u_lo, u_hi);
    let tol = 1e-9 * u_ga.abs();
    loop {
        let mid = 0.5 * (lo + hi);
        let u = oracle.internal_energy(mid)?;
        if u < f_lo || u > f_hi {
            return Err(Error::Precondition(format!("U is not monotone near T = {mid}")));
        }
        if (u - u_ga).abs() <= tol || hi - lo <= 1e-9 {
            return Ok(mid);
        }
        if u < u_ga {
            lo = mid;
            f_lo = u;
        } else {
            hi = mid;
            f_hi = u;
        }
    }
}

/// Pointwise mean and standard error over disorder realisations.
#[derive(Debug, Clone, PartialEq)]
pub struct AveragedTrajectory {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub replicas: usize,
}

pub fn disorder_averaged_trajectory(runs: &[Vec<f64>]) -> Result<AveragedTrajectory> {
    let Some(first) = runs.first() else {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    };
    let len = first.len();
    if let Some(bad) = runs.iter().find(|r| r.len() != len) {
        return Err(Error::Dimension {
            expected: len,
            got: bad.len(),
        });
    }
    // sorting each column makes the result independent of replica order
    let (mean, std_error) = (0..len)
        .map(|t| {
            let mut col: Vec<f64> = runs.iter().map(|r| r[t]).collect();
            col.sort_by(f64::total_cmp);
            mean_and_stderr(&col)
        })
        .unzip();
    Ok(AveragedTrajectory {
        mean,
        std_error,
        replicas: runs.len(),
    })
}

/// One row of a per-run trajectory stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub generation: u64,
    pub temperature: f64,
    pub u_ga: f64,
    /// `U(T)` at this row's temperature.
    pub u_gibbs: f64,
    pub best_energy: f64,
}

pub fn write_trajectory<W: Write>(mut w: W, rows: &[TrajectoryRow]) -> Result<()> {
    writeln!(w, "t,T,U_GA,U_gibbs,best_energy")?;
    for r in rows {
        writeln!(
            w,
            "{},{:?},{:?},{:?},{:?}",
            r.generation, r.temperature, r.u_ga, r.u_gibbs, r.best_energy
        )?;
    }
    Ok(())
}
