//! Seeded campaigns of GA runs with the effective-temperature learner, the
//! named presets that regenerate every figure's data, and the output writers.
//!
//! A campaign runs `replicas` independent (disorder, GA, learner) triples in
//! parallel. Replica `r` draws its disorder from `derive_seed(seed, [r])`, its
//! initial population from `derive_seed(seed, [r, 1])` and generation `t`
//! from `derive_seed(seed, [r, 2, t])`, so every output byte is a function of
//! the configuration alone.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    detect_crossover, fit_power_law, residual_energy_series, Crossover, PowerLawFit, TimeSeries,
};
use crate::analytic::{chain_internal_energy, FixedPointOptions, QuadratureRule};
use crate::error::{Error, Result};
use crate::ga::{empirical_energy, init_population, step_generation_detailed, GaParams, SelectionMode};
use crate::learner::{
    disorder_averaged_trajectory, learner_step_with_energy, write_trajectory, AnalyticChainOracle,
    AnalyticSkOracle, AveragedTrajectory, EnergyOracle, EnumerationOracle, LearnerState, McmcOracle, OracleKind,
    TrajectoryRow, DEFAULT_T_FLOOR,
};
use crate::mcmc::{estimate_internal_energy, exact_gibbs_expectation, mean_and_stderr, McmcOptions};
use crate::rng::derive_seed;
use crate::spins::{
    chain_ground_state, enumerate_landscape, sample_chain_disorder, Disorder, DisorderParams, EnergyModel, Model,
    PairConvention, ENUMERATION_CAP,
};

/// Initial temperature used by every preset. A random initial population has
/// `U_GA ~ 0`, so the learner starts close to equilibrium only at high `T`.
pub const DEFAULT_T0: f64 = 50.0;
/// `eta N`; presets use `learning_rate = DEFAULT_ETA_N / N`. Under random
/// selection the flow drifts upward by at most `eta N` per generation in
/// relative terms, so this keeps the drift over 2000 generations near 4%.
pub const DEFAULT_ETA_N: f64 = 2e-5;
/// Environment variable that overrides the output directory.
pub const OUTPUT_DIR_ENV: &str = "GA_THERMO_OUT";

/// Which population's mean energy feeds the learner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SnapshotPolicy {
    PostSelection,
    #[default]
    PostMutation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSection {
    pub model: Model,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    #[serde(default)]
    pub sk_pair_convention: PairConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaSection {
    pub population_size: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Switches to Boltzmann-weighted selection at this inverse temperature.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boltzmann_beta: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerSection {
    pub t0: f64,
    pub learning_rate: f64,
    #[serde(default = "default_t_floor")]
    pub t_floor: f64,
    pub oracle: OracleKind,
    #[serde(default)]
    pub snapshot_policy: SnapshotPolicy,
}

fn default_t_floor() -> f64 {
    DEFAULT_T_FLOOR
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcSection {
    pub sweeps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub chains: usize,
}

impl Default for McmcSection {
    fn default() -> Self {
        McmcOptions::default().into()
    }
}

impl From<McmcOptions> for McmcSection {
    fn from(o: McmcOptions) -> Self {
        Self {
            sweeps: o.sweeps,
            burn_in: o.burn_in,
            thinning: o.thinning,
            chains: o.chains,
        }
    }
}

impl From<McmcSection> for McmcOptions {
    fn from(s: McmcSection) -> Self {
        Self {
            sweeps: s.sweeps,
            burn_in: s.burn_in,
            thinning: s.thinning,
            chains: s.chains,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    /// Power-law fits use the last `fit_decades` decades of generations.
    pub fit_decades: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self { fit_decades: 2.0 }
    }
}

/// One campaign, serialised as TOML with one section per module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub generations: u64,
    pub replicas: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub disorder: DisorderSection,
    pub ga: GaSection,
    pub learner: LearnerSection,
    #[serde(default)]
    pub mcmc: McmcSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
}

impl ExperimentConfig {
    /// Full-scale defaults for one model: `M = 100`, `sigma = 2`, 2000
    /// generations, 10 replicas, `(J0, J) = (0, 1)`, analytic oracle.
    pub fn standard(name: &str, model: Model, n: usize) -> Self {
        let (crossover_rate, mutation_rate, oracle) = match model {
            Model::Chain => (0.1, 0.001, OracleKind::AnalyticChain),
            Model::Sk => (0.05, 0.005, OracleKind::AnalyticSk),
        };
        Self {
            name: name.to_string(),
            seed: 20_000_713,
            generations: 2000,
            replicas: 10,
            output_dir: None,
            disorder: DisorderSection {
                model,
                n,
                mean: 0.0,
                std: 1.0,
                sk_pair_convention: PairConvention::default(),
            },
            ga: GaSection {
                population_size: 100,
                tournament_size: 2,
                crossover_rate,
                mutation_rate,
                boltzmann_beta: None,
            },
            learner: LearnerSection {
                t0: DEFAULT_T0,
                learning_rate: DEFAULT_ETA_N / n as f64,
                t_floor: DEFAULT_T_FLOOR,
                oracle,
                snapshot_policy: SnapshotPolicy::default(),
            },
            mcmc: McmcSection::default(),
            analysis: AnalysisSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn disorder_params(&self) -> Result<DisorderParams> {
        DisorderParams::new(self.disorder.mean, self.disorder.std, self.disorder.model)
    }

    pub fn ga_params(&self) -> GaParams {
        GaParams {
            population_size: self.ga.population_size,
            genome_length: self.disorder.n,
            tournament_size: self.ga.tournament_size,
            crossover_rate: self.ga.crossover_rate,
            mutation_rate: self.ga.mutation_rate,
            selection_mode: match self.ga.boltzmann_beta {
                Some(beta) => SelectionMode::Boltzmann { beta },
                None => SelectionMode::Tournament,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.generations < 1 {
            return Err(Error::Config("generations must be at least 1".into()));
        }
        if self.replicas < 1 {
            return Err(Error::Config("replicas must be at least 1".into()));
        }
        self.disorder_params()?;
        self.ga_params().validate()?;
        LearnerState::new(self.learner.t0, self.learner.learning_rate, self.learner.t_floor)?;
        if !(self.analysis.fit_decades > 0.0) {
            return Err(Error::Config("fit_decades must be positive".into()));
        }
        let model = self.disorder.model;
        match self.learner.oracle {
            OracleKind::AnalyticChain if model != Model::Chain => {
                return Err(Error::Config("the analytic-chain oracle needs the chain model".into()))
            }
            OracleKind::AnalyticSk if model != Model::Sk => {
                return Err(Error::Config("the analytic-sk oracle needs the SK model".into()))
            }
            OracleKind::Enumeration if self.disorder.n > ENUMERATION_CAP => {
                return Err(Error::SizeCap {
                    n: self.disorder.n,
                    cap: ENUMERATION_CAP,
                })
            }
            OracleKind::Mcmc => McmcOptions::from(self.mcmc).validate()?,
            _ => {}
        }
        Ok(())
    }

    /// Output directory after the environment override.
    pub fn resolved_output_dir(&self) -> PathBuf {
        match std::env::var_os(OUTPUT_DIR_ENV) {
            Some(dir) => PathBuf::from(dir).join(&self.name),
            None => self
                .output_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("out").join(&self.name)),
        }
    }
}

/// Memoises the last evaluation so each temperature is solved once even
/// though it is reported in one row and consumed by the next step.
struct Cached<O> {
    inner: O,
    last: Option<(f64, f64)>,
}

impl<O: EnergyOracle> EnergyOracle for Cached<O> {
    fn kind(&self) -> OracleKind {
        self.inner.kind()
    }

    fn internal_energy(&mut self, temperature: f64) -> Result<f64> {
        if let Some((t, u)) = self.last {
            if t.to_bits() == temperature.to_bits() {
                return Ok(u);
            }
        }
        let u = self.inner.internal_energy(temperature)?;
        self.last = Some((temperature, u));
        Ok(u)
    }
}

fn build_oracle(cfg: &ExperimentConfig, disorder: &Disorder, seed: u64) -> Result<Box<dyn EnergyOracle>> {
    let params = cfg.disorder_params()?;
    let n = cfg.disorder.n;
    Ok(match cfg.learner.oracle {
        OracleKind::AnalyticChain => Box::new(AnalyticChainOracle::new(params, n, QuadratureRule::standard())),
        OracleKind::AnalyticSk => Box::new(AnalyticSkOracle::new(
            params,
            n,
            QuadratureRule::standard(),
            FixedPointOptions::default(),
        )),
        OracleKind::Mcmc => Box::new(McmcOracle::new(disorder.clone(), cfg.mcmc.into(), seed)),
        OracleKind::Enumeration => Box::new(EnumerationOracle::new(disorder)?),
    })
}

/// Trajectory of one replica; row `t` holds the state after generation `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaRun {
    pub index: usize,
    /// Exact ground-state energy (chain only).
    pub ground_energy: Option<f64>,
    pub rows: Vec<TrajectoryRow>,
}

/// Runs one replica without touching the file system.
pub fn run_replica(cfg: &ExperimentConfig, index: usize) -> Result<ReplicaRun> {
    cfg.validate()?;
    let r = index as u64;
    let disorder = Disorder::sample(
        cfg.disorder.n,
        cfg.disorder_params()?,
        derive_seed(cfg.seed, &[r]),
        cfg.disorder.sk_pair_convention,
    )?;
    let ground_energy = match &disorder {
        Disorder::Chain(d) => Some(chain_ground_state(d).0),
        Disorder::Sk(_) => None,
    };
    let params = cfg.ga_params();
    let mut oracle = Cached {
        inner: build_oracle(cfg, &disorder, derive_seed(cfg.seed, &[r, 3]))?,
        last: None,
    };
    let mut pop = init_population(&params, &disorder, derive_seed(cfg.seed, &[r, 1]))?;
    let mut state = LearnerState::new(cfg.learner.t0, cfg.learner.learning_rate, cfg.learner.t_floor)?;
    let mut rows = Vec::with_capacity(cfg.generations as usize + 1);
    rows.push(TrajectoryRow {
        generation: 0,
        temperature: state.temperature,
        u_ga: empirical_energy(&pop),
        u_gibbs: oracle.internal_energy(state.temperature)?,
        best_energy: pop.best_energy(),
    });
    for t in 1..=cfg.generations {
        let outcome = step_generation_detailed(&pop, &params, &disorder, derive_seed(cfg.seed, &[r, 2, t]))?;
        pop = outcome.population;
        let u_ga = match cfg.learner.snapshot_policy {
            SnapshotPolicy::PostSelection => outcome.post_selection_energy,
            SnapshotPolicy::PostMutation => empirical_energy(&pop),
        };
        state = learner_step_with_energy(&state, u_ga, &mut oracle)?.0;
        rows.push(TrajectoryRow {
            generation: t,
            temperature: state.temperature,
            u_ga,
            u_gibbs: oracle.internal_energy(state.temperature)?,
            best_energy: pop.best_energy(),
        });
    }
    Ok(ReplicaRun {
        index,
        ground_energy,
        rows,
    })
}

/// Disorder-averaged results of a campaign.
#[derive(Debug)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub replicas: Vec<std::result::Result<ReplicaRun, String>>,
    pub temperature: AveragedTrajectory,
    /// `epsilon(t)` against the exact ground state (chain only).
    pub residual: Option<AveragedTrajectory>,
    /// Best fitness per spin, `-min_alpha E_alpha / N` (SK only).
    pub fitness: Option<AveragedTrajectory>,
    pub temperature_fit: std::result::Result<PowerLawFit, String>,
    pub residual_fit: Option<std::result::Result<PowerLawFit, String>>,
    pub temperature_crossover: std::result::Result<Option<Crossover>, String>,
}

impl RunSummary {
    pub fn successful(&self) -> impl Iterator<Item = &ReplicaRun> {
        self.replicas.iter().filter_map(|r| r.as_ref().ok())
    }
}

fn column(runs: &[&ReplicaRun], f: impl Fn(&ReplicaRun, &TrajectoryRow) -> f64) -> Vec<Vec<f64>> {
    runs.iter().map(|r| r.rows.iter().map(|row| f(r, row)).collect()).collect()
}

fn fit_window(cfg: &ExperimentConfig) -> (f64, f64) {
    let t_max = cfg.generations as f64;
    (t_max / 10f64.powf(cfg.analysis.fit_decades), t_max)
}

/// Runs every replica in parallel and averages over the successful ones.
/// Fails only if no replica succeeds.
pub fn simulate_campaign(cfg: &ExperimentConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let outcomes: Vec<Result<ReplicaRun>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|r| run_replica(cfg, r))
        .collect();
    summarize(cfg, outcomes)
}

/// Averages and fits over the successful replicas, keeping the failures'
/// messages in replica order.
pub fn summarize(cfg: &ExperimentConfig, mut outcomes: Vec<Result<ReplicaRun>>) -> Result<RunSummary> {
    if outcomes.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if outcomes.iter().all(|o| o.is_err()) {
        return Err(outcomes.swap_remove(0).unwrap_err());
    }
    let replicas: Vec<std::result::Result<ReplicaRun, String>> =
        outcomes.into_iter().map(|o| o.map_err(|e| e.to_string())).collect();
    let ok: Vec<&ReplicaRun> = replicas.iter().filter_map(|r| r.as_ref().ok()).collect();
    let temperature = disorder_averaged_trajectory(&column(&ok, |_, row| row.temperature))?;
    let n = cfg.disorder.n as f64;
    let (residual, fitness) = match cfg.disorder.model {
        Model::Chain => {
            let per_run = ok
                .iter()
                .map(|r| {
                    let best = r.rows.iter().map(|row| row.best_energy).collect::<Vec<_>>();
                    let ground = r.ground_energy.expect("chain replicas carry a ground state");
                    let times = (0..best.len()).map(|t| (t + 1) as f64).collect();
                    residual_energy_series(&TimeSeries::new(times, best)?, ground).map(|s| s.values().to_vec())
                })
                .collect::<Result<Vec<_>>>()?;
            (Some(disorder_averaged_trajectory(&per_run)?), None)
        }
        Model::Sk => (
            None,
            Some(disorder_averaged_trajectory(&column(&ok, |_, row| -row.best_energy / n))?),
        ),
    };
    let window = fit_window(cfg);
    let temperature_series = TimeSeries::from_generations(&temperature.mean)?;
    let temperature_fit = fit_power_law(&temperature_series, window).map_err(|e| e.to_string());
    let residual_fit = residual.as_ref().map(|res| {
        TimeSeries::from_generations(&res.mean)
            .and_then(|s| fit_power_law(&s, window))
            .map_err(|e| e.to_string())
    });
    let temperature_crossover = detect_crossover(&temperature_series).map_err(|e| e.to_string());
    Ok(RunSummary {
        config: cfg.clone(),
        replicas,
        temperature,
        residual,
        fitness,
        temperature_fit,
        residual_fit,
        temperature_crossover,
    })
}

fn create_file(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(fs::File::create(path)?))
}

fn write_averaged(path: &Path, header: &str, avg: &AveragedTrajectory) -> Result<()> {
    let mut w = create_file(path)?;
    writeln!(w, "{header}")?;
    for (t, (m, se)) in avg.mean.iter().zip(&avg.std_error).enumerate() {
        writeln!(w, "{t},{m:?},{se:?}")?;
    }
    w.flush()?;
    Ok(())
}

fn fit_block(label: &str, fit: &std::result::Result<PowerLawFit, String>) -> String {
    match fit {
        Ok(f) => f.report(label),
        Err(e) => format!("[{label}]\nunavailable = {e:?}\n"),
    }
}

/// Writes the averaged series and the fit report into `dir`:
/// `temperature.csv` always, `residual.csv` (chain) or `fitness.csv` (SK),
/// and `fits.txt`. Returns the written paths.
pub fn emit_plot_data(summary: &RunSummary, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join("temperature.csv");
    write_averaged(&path, "t,T,stderr", &summary.temperature)?;
    written.push(path);
    if let Some(res) = &summary.residual {
        let path = dir.join("residual.csv");
        write_averaged(&path, "t,epsilon,stderr", res)?;
        written.push(path);
    }
    if let Some(fit) = &summary.fitness {
        let path = dir.join("fitness.csv");
        write_averaged(&path, "t,fitness,stderr", fit)?;
        written.push(path);
    }
    let mut report = String::new();
    let ok = summary.successful().count();
    report.push_str(&format!(
        "[campaign]\nname = {:?}\nreplicas = {}\nsucceeded = {ok}\n\n",
        summary.config.name, summary.config.replicas
    ));
    report.push_str(&fit_block("temperature", &summary.temperature_fit));
    report.push('\n');
    match &summary.temperature_crossover {
        Ok(Some(c)) => report.push_str(&format!(
            "[temperature_crossover]\nbreakpoint = {:?}\nearly_exponent = {:?}\nlate_exponent = {:?}\nimprovement = {:?}\n",
            c.t_break, c.early_exponent, c.late_exponent, c.improvement
        )),
        Ok(None) => report.push_str("[temperature_crossover]\nbreakpoint = \"none\"\n"),
        Err(e) => report.push_str(&format!("[temperature_crossover]\nunavailable = {e:?}\n")),
    }
    if let Some(fit) = &summary.residual_fit {
        report.push('\n');
        report.push_str(&fit_block("residual", fit));
    }
    let path = dir.join("fits.txt");
    let mut w = create_file(&path)?;
    w.write_all(report.as_bytes())?;
    w.flush()?;
    written.push(path);
    Ok(written)
}

/// Runs a campaign and writes its whole output tree into `dir`:
/// `config.toml`, `replicas/replica_NNN.csv`, `errors.txt` when some replica
/// failed, and the files of [`emit_plot_data`].
pub fn run_experiment(cfg: &ExperimentConfig, dir: &Path) -> Result<RunSummary> {
    let summary = simulate_campaign(cfg)?;
    fs::create_dir_all(dir)?;
    let snapshot = ExperimentConfig {
        output_dir: None,
        ..cfg.clone()
    };
    fs::write(dir.join("config.toml"), snapshot.to_toml()?)?;
    let mut errors = String::new();
    for (r, outcome) in summary.replicas.iter().enumerate() {
        match outcome {
            Ok(run) => {
                let mut w = create_file(&dir.join("replicas").join(format!("replica_{r:03}.csv")))?;
                write_trajectory(&mut w, &run.rows)?;
                w.flush()?;
            }
            Err(e) => errors.push_str(&format!("replica {r}: {e}\n")),
        }
    }
    if !errors.is_empty() {
        fs::write(dir.join("errors.txt"), errors)?;
    }
    emit_plot_data(&summary, dir)?;
    Ok(summary)
}

/// Equilibrium energy curve of the chain: Metropolis on sampled instances
/// against `N` times the analytic density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcCurveConfig {
    pub n: usize,
    pub realizations: usize,
    pub temperatures: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub seed: u64,
    pub mcmc: McmcSection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveRow {
    pub temperature: f64,
    pub exact: f64,
    pub mcmc_mean: f64,
    /// Between-realisation standard error.
    pub mcmc_std_error: f64,
}

pub fn mcmc_energy_curve(cfg: &McmcCurveConfig) -> Result<Vec<CurveRow>> {
    let params = DisorderParams::new(cfg.mean, cfg.std, Model::Chain)?;
    if cfg.realizations < 1 {
        return Err(Error::Config("realizations must be at least 1".into()));
    }
    let opts: McmcOptions = cfg.mcmc.into();
    let rule = QuadratureRule::standard();
    let instances = (0..cfg.realizations)
        .map(|r| sample_chain_disorder(cfg.n, params, derive_seed(cfg.seed, &[r as u64])).map(Disorder::Chain))
        .collect::<Result<Vec<_>>>()?;
    cfg.temperatures
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let estimates = instances
                .par_iter()
                .enumerate()
                .map(|(r, d)| {
                    estimate_internal_energy(d, t, &opts, derive_seed(cfg.seed, &[r as u64, 1, k as u64]))
                        .map(|e| e.mean)
                })
                .collect::<Result<Vec<_>>>()?;
            let (mcmc_mean, mcmc_std_error) = mean_and_stderr(&estimates);
            Ok(CurveRow {
                temperature: t,
                exact: cfg.n as f64 * chain_internal_energy(t, &params, &rule)?,
                mcmc_mean,
                mcmc_std_error,
            })
        })
        .collect()
}

pub fn write_curve_rows<W: Write>(mut w: W, rows: &[CurveRow]) -> Result<()> {
    writeln!(w, "T,U_exact,U_mcmc,U_mcmc_stderr")?;
    for r in rows {
        writeln!(
            w,
            "{:?},{:?},{:?},{:?}",
            r.temperature, r.exact, r.mcmc_mean, r.mcmc_std_error
        )?;
    }
    Ok(())
}

/// Small-instance cross-checks of the samplers and ground-state oracles
/// against exhaustive enumeration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSuiteConfig {
    /// Instances per model.
    pub instances: usize,
    pub sizes: Vec<usize>,
    pub temperatures: Vec<f64>,
    pub seed: u64,
    /// Allowed deviation in standard errors.
    pub z_max: f64,
    pub mcmc: McmcSection,
}

impl Default for OracleSuiteConfig {
    fn default() -> Self {
        Self {
            instances: 20,
            sizes: vec![8, 10, 12],
            temperatures: vec![0.5, 1.0, 2.0],
            seed: 4,
            z_max: 3.0,
            mcmc: McmcSection {
                sweeps: 4000,
                burn_in: 400,
                thinning: 2,
                chains: 32,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleCheck {
    pub model: Model,
    pub n: usize,
    pub instance: usize,
    /// `NaN` for ground-state checks.
    pub temperature: f64,
    pub exact: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub passed: bool,
}

pub fn oracle_suite(cfg: &OracleSuiteConfig) -> Result<Vec<OracleCheck>> {
    if cfg.sizes.is_empty() || cfg.sizes.iter().any(|&n| n < 2 || n > ENUMERATION_CAP) {
        return Err(Error::Config(format!("suite sizes must lie in 2..={ENUMERATION_CAP}")));
    }
    let opts: McmcOptions = cfg.mcmc.into();
    opts.validate()?;
    let jobs: Vec<(Model, usize)> = [Model::Chain, Model::Sk]
        .into_iter()
        .flat_map(|m| (0..cfg.instances).map(move |i| (m, i)))
        .collect();
    let per_job = jobs
        .par_iter()
        .map(|&(model, i)| -> Result<Vec<OracleCheck>> {
            let n = cfg.sizes[i % cfg.sizes.len()];
            let tag = model as u64;
            let params = DisorderParams::new(0.0, 1.0, model)?;
            let d = Disorder::sample(n, params, derive_seed(cfg.seed, &[tag, i as u64]), PairConvention::default())?;
            let mut checks = Vec::new();
            if let Disorder::Chain(c) = &d {
                let exact = enumerate_landscape(&d)?
                    .into_iter()
                    .map(|(_, e)| e)
                    .fold(f64::INFINITY, f64::min);
                let (found, config) = chain_ground_state(c);
                checks.push(OracleCheck {
                    model,
                    n,
                    instance: i,
                    temperature: f64::NAN,
                    exact,
                    estimate: found,
                    std_error: 0.0,
                    passed: found == exact && d.energy(&config)? == found,
                });
            }
            for (k, &t) in cfg.temperatures.iter().enumerate() {
                let exact = exact_gibbs_expectation(&d, t)?.internal_energy;
                let est = estimate_internal_energy(&d, t, &opts, derive_seed(cfg.seed, &[tag, i as u64, k as u64 + 1]))?;
                checks.push(OracleCheck {
                    model,
                    n,
                    instance: i,
                    temperature: t,
                    exact,
                    estimate: est.mean,
                    std_error: est.std_error,
                    passed: (est.mean - exact).abs() <= cfg.z_max * est.std_error,
                });
            }
            Ok(checks)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_job.into_iter().flatten().collect())
}

pub fn write_oracle_checks<W: Write>(mut w: W, checks: &[OracleCheck]) -> Result<()> {
    writeln!(w, "model,n,instance,T,exact,estimate,stderr,passed")?;
    for c in checks {
        let model = match c.model {
            Model::Chain => "chain",
            Model::Sk => "sk",
        };
        let t = if c.temperature.is_nan() { "ground".to_string() } else { format!("{:?}", c.temperature) };
        writeln!(
            w,
            "{model},{},{},{t},{:?},{:?},{:?},{}",
            c.n, c.instance, c.exact, c.estimate, c.std_error, c.passed
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum PresetTask {
    /// Campaigns keyed by a variant label (empty for single-run presets).
    Campaigns(Vec<(String, ExperimentConfig)>),
    McmcCurve(McmcCurveConfig),
    OracleSuite(OracleSuiteConfig),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub task: PresetTask,
}

pub const PRESET_NAMES: [&str; 10] = [
    "fg1", "fg1D", "fgNo", "fgS", "fgM", "fgC", "fgSSK", "fgMSK", "fgCSK", "oracle-suite",
];

pub fn list_presets() -> Vec<&'static str> {
    PRESET_NAMES.to_vec()
}

fn sweep(
    name: &str,
    base: &ExperimentConfig,
    label: &str,
    values: &[f64],
    apply: impl Fn(&mut ExperimentConfig, f64),
) -> PresetTask {
    PresetTask::Campaigns(
        values
            .iter()
            .map(|&v| {
                let mut cfg = base.clone();
                apply(&mut cfg, v);
                let variant = format!("{label}{v}");
                cfg.name = format!("{name}-{variant}");
                (variant, cfg)
            })
            .collect(),
    )
}

/// Looks up a preset. `desk` shrinks the systems to chain `N = 200` and SK
/// `N = 100` (and the equilibrium curve's budget) for quick runs.
pub fn preset(name: &str, desk: bool) -> Result<Preset> {
    let chain_n = if desk { 200 } else { 2000 };
    let sk_n = if desk { 100 } else { 500 };
    let chain = ExperimentConfig::standard(name, Model::Chain, chain_n);
    let sk = ExperimentConfig::standard(name, Model::Sk, sk_n);
    let single = |cfg: ExperimentConfig| PresetTask::Campaigns(vec![(String::new(), cfg)]);
    let (description, task) = match name {
        "fg1" => (
            "chain equilibrium energy, Metropolis against the exact result",
            PresetTask::McmcCurve(McmcCurveConfig {
                n: if desk { 300 } else { 3000 },
                realizations: 10,
                temperatures: vec![0.2, 0.5, 1.0, 1.5, 2.0, 3.0],
                mean: 0.0,
                std: 1.0,
                seed: 11,
                mcmc: if desk {
                    McmcSection {
                        sweeps: 2000,
                        burn_in: 500,
                        thinning: 5,
                        chains: 2,
                    }
                } else {
                    McmcSection {
                        sweeps: 5000,
                        burn_in: 1000,
                        thinning: 5,
                        chains: 4,
                    }
                },
            }),
        ),
        "fg1D" => ("chain, sigma = 2, p_c = 0.1, p_m = 0.001", single(chain)),
        "fgNo" => (
            "chain null control, sigma = 1",
            single(ExperimentConfig {
                ga: GaSection {
                    tournament_size: 1,
                    ..chain.ga
                },
                ..chain
            }),
        ),
        "fgS" => (
            "chain, sigma in {2, 3, 4}",
            sweep(name, &chain, "sigma", &[2.0, 3.0, 4.0], |c, v| c.ga.tournament_size = v as usize),
        ),
        "fgM" => (
            "chain, p_m in {0.0001, 0.0005, 0.001, 0.005}",
            sweep(name, &chain, "pm", &[0.0001, 0.0005, 0.001, 0.005], |c, v| c.ga.mutation_rate = v),
        ),
        "fgC" => (
            "chain, p_c in {1.0, 0.5, 0.1}",
            sweep(name, &chain, "pc", &[1.0, 0.5, 0.1], |c, v| c.ga.crossover_rate = v),
        ),
        "fgSSK" => (
            "SK, sigma in {2, 3, 4}, p_c = 0.05, p_m = 0.005",
            sweep(name, &sk, "sigma", &[2.0, 3.0, 4.0], |c, v| c.ga.tournament_size = v as usize),
        ),
        "fgMSK" => (
            "SK, p_m in {0.005, 0.001}",
            sweep(name, &sk, "pm", &[0.005, 0.001], |c, v| c.ga.mutation_rate = v),
        ),
        "fgCSK" => (
            "SK, p_c in {0.1, 0.05, 0.01}",
            sweep(name, &sk, "pc", &[0.1, 0.05, 0.01], |c, v| c.ga.crossover_rate = v),
        ),
        "oracle-suite" => (
            "small-N Metropolis and ground-state checks against enumeration",
            PresetTask::OracleSuite(OracleSuiteConfig::default()),
        ),
        _ => return Err(Error::Config(format!("unknown preset {name:?}"))),
    };
    let name = PRESET_NAMES.iter().copied().find(|p| *p == name).expect("matched above");
    Ok(Preset {
        name,
        description,
        task,
    })
}

/// What a preset run produced.
#[derive(Debug)]
pub enum PresetOutcome {
    Campaigns(Vec<(String, RunSummary)>),
    McmcCurve(Vec<CurveRow>),
    OracleSuite(Vec<OracleCheck>),
}

/// Runs a preset into `out/<preset name>[/<variant>]`.
pub fn run_preset(p: &Preset, out: &Path) -> Result<PresetOutcome> {
    let dir = out.join(p.name);
    match &p.task {
        PresetTask::Campaigns(runs) => {
            let mut done = Vec::with_capacity(runs.len());
            for (variant, cfg) in runs {
                let run_dir = if variant.is_empty() { dir.clone() } else { dir.join(variant) };
                done.push((variant.clone(), run_experiment(cfg, &run_dir)?));
            }
            Ok(PresetOutcome::Campaigns(done))
        }
        PresetTask::McmcCurve(cfg) => {
            let rows = mcmc_energy_curve(cfg)?;
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("config.toml"), toml::to_string(cfg).map_err(|e| Error::Config(e.to_string()))?)?;
            let mut w = create_file(&dir.join("energy.csv"))?;
            write_curve_rows(&mut w, &rows)?;
            w.flush()?;
            Ok(PresetOutcome::McmcCurve(rows))
        }
        PresetTask::OracleSuite(cfg) => {
            let checks = oracle_suite(cfg)?;
            fs::create_dir_all(&dir)?;
            let mut w = create_file(&dir.join("checks.csv"))?;
            write_oracle_checks(&mut w, &checks)?;
            w.flush()?;
            Ok(PresetOutcome::OracleSuite(checks))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(model: Model) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::standard("tiny", model, 16);
        cfg.generations = 30;
        cfg.replicas = 3;
        cfg.ga.population_size = 20;
        cfg
    }

    fn read_tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
        let mut out = Vec::new();
        let mut stack = vec![dir.to_path_buf()];
        while let Some(d) = stack.pop() {
            for entry in fs::read_dir(&d).unwrap() {
                let p = entry.unwrap().path();
                if p.is_dir() {
                    stack.push(p);
                } else {
                    out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn presets_listed_and_round_trip() {
        let names = list_presets();
        assert!(names.contains(&"fg1D") && names.contains(&"fgCSK"));
        for name in names {
            for desk in [false, true] {
                let p = preset(name, desk).unwrap();
                match &p.task {
                    PresetTask::Campaigns(runs) => {
                        for (_, cfg) in runs {
                            cfg.validate().unwrap();
                            assert_eq!(&ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap(), cfg);
                        }
                    }
                    PresetTask::McmcCurve(c) => {
                        let back: McmcCurveConfig = toml::from_str(&toml::to_string(c).unwrap()).unwrap();
                        assert_eq!(&back, c);
                    }
                    PresetTask::OracleSuite(c) => {
                        let back: OracleSuiteConfig = toml::from_str(&toml::to_string(c).unwrap()).unwrap();
                        assert_eq!(&back, c);
                    }
                }
            }
        }
        assert!(preset("fgX", false).is_err());
    }

    #[test]
    fn sigma_sweep_preset() {
        let PresetTask::Campaigns(runs) = preset("fgS", false).unwrap().task else {
            panic!("campaign preset expected")
        };
        let sigmas: Vec<usize> = runs.iter().map(|(_, c)| c.ga.tournament_size).collect();
        assert_eq!(sigmas, [2, 3, 4]);
        assert!(runs.iter().all(|(_, c)| c.ga.crossover_rate == 0.1 && c.ga.mutation_rate == 0.001));
        let PresetTask::Campaigns(runs) = preset("fg1D", true).unwrap().task else {
            panic!("campaign preset expected")
        };
        assert_eq!(runs[0].1.disorder.n, 200);
    }

    #[test]
    fn config_validation() {
        let mut cfg = tiny(Model::Chain);
        cfg.generations = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = tiny(Model::Chain);
        cfg.replicas = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = tiny(Model::Chain);
        cfg.learner.oracle = OracleKind::AnalyticSk;
        assert!(cfg.validate().is_err());
        let mut cfg = tiny(Model::Sk);
        cfg.disorder.n = 40;
        cfg.learner.oracle = OracleKind::Enumeration;
        assert!(matches!(cfg.validate(), Err(Error::SizeCap { .. })));
        assert!(matches!(
            ExperimentConfig::from_toml("name = \"x\"\nbogus = 1\n"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn config_text_format() {
        let text = tiny(Model::Chain).to_toml().unwrap();
        for section in ["[disorder]", "[ga]", "[learner]", "[mcmc]", "[analysis]"] {
            assert!(text.contains(section), "{text}");
        }
        assert!(text.contains("oracle = \"analytic-chain\""));
        assert!(text.contains("snapshot_policy = \"post-mutation\""));
    }

    #[test]
    fn single_generation_has_two_rows() {
        let mut cfg = tiny(Model::Chain);
        cfg.generations = 1;
        cfg.replicas = 1;
        let run = run_replica(&cfg, 0).unwrap();
        assert_eq!(run.rows.len(), 2);
        assert_eq!(run.rows[0].generation, 0);
        assert_eq!(run.rows[0].temperature, cfg.learner.t0);
        assert_eq!(run.rows[1].generation, 1);
    }

    #[test]
    fn rows_are_consistent() {
        let cfg = tiny(Model::Chain);
        let run = run_replica(&cfg, 1).unwrap();
        let mut oracle = AnalyticChainOracle::new(cfg.disorder_params().unwrap(), 16, QuadratureRule::standard());
        for w in run.rows.windows(2) {
            let (prev, row) = (w[0], w[1]);
            assert_eq!(prev.u_gibbs, oracle.internal_energy(prev.temperature).unwrap());
            let expected = prev.temperature
                - cfg.learner.learning_rate * prev.temperature.powi(2) * (prev.u_gibbs - row.u_ga);
            assert_eq!(row.temperature, expected.max(cfg.learner.t_floor));
            assert!(row.best_energy >= run.ground_energy.unwrap() - 1e-9);
            assert!(row.best_energy <= row.u_ga + 1e-9);
        }
    }

    #[test]
    fn snapshot_policies_differ() {
        let mut cfg = tiny(Model::Chain);
        cfg.learner.learning_rate = 1e-3;
        let a = run_replica(&cfg, 0).unwrap();
        cfg.learner.snapshot_policy = SnapshotPolicy::PostSelection;
        let b = run_replica(&cfg, 0).unwrap();
        assert_eq!(a.rows.iter().map(|r| r.best_energy).collect::<Vec<_>>(), b.rows.iter().map(|r| r.best_energy).collect::<Vec<_>>());
        assert_ne!(a.rows.last().unwrap().temperature, b.rows.last().unwrap().temperature);
    }

    #[test]
    fn campaign_outputs_and_determinism() {
        let cfg = tiny(Model::Chain);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let summary = run_experiment(&cfg, a.path()).unwrap();
        run_experiment(&cfg, b.path()).unwrap();
        let ta = read_tree(a.path());
        assert_eq!(ta, read_tree(b.path()));
        let names: Vec<String> = ta.iter().map(|(p, _)| p.to_string_lossy().into_owned()).collect();
        for f in ["config.toml", "temperature.csv", "residual.csv", "fits.txt", "replicas/replica_000.csv", "replicas/replica_002.csv"] {
            assert!(names.iter().any(|n| n == f), "{f} missing from {names:?}");
        }
        assert!(!names.iter().any(|n| n == "fitness.csv"));
        assert_eq!(summary.temperature.mean.len(), 31);
        let snapshot = ExperimentConfig::load(&a.path().join("config.toml")).unwrap();
        assert_eq!(snapshot, cfg);
        // columns parse back as finite numbers
        let temp = fs::read_to_string(a.path().join("temperature.csv")).unwrap();
        let mut lines = temp.lines();
        assert_eq!(lines.next(), Some("t,T,stderr"));
        for line in lines {
            let fields: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
            assert_eq!(fields.len(), 3);
            assert!(fields.iter().all(|f| f.is_finite()));
        }
    }

    #[test]
    fn sk_campaign_writes_fitness() {
        let mut cfg = tiny(Model::Sk);
        cfg.replicas = 2;
        let dir = tempfile::tempdir().unwrap();
        let summary = run_experiment(&cfg, dir.path()).unwrap();
        assert!(summary.residual.is_none());
        assert!(dir.path().join("fitness.csv").exists());
        assert!(!dir.path().join("residual.csv").exists());
    }

    #[test]
    fn replica_permutation_leaves_average() {
        let cfg = tiny(Model::Chain);
        let runs: Vec<ReplicaRun> = (0..3).map(|r| run_replica(&cfg, r).unwrap()).collect();
        let col = |order: &[usize]| {
            let refs: Vec<&ReplicaRun> = order.iter().map(|&i| &runs[i]).collect();
            disorder_averaged_trajectory(&column(&refs, |_, row| row.temperature)).unwrap()
        };
        assert_eq!(col(&[0, 1, 2]), col(&[2, 0, 1]));
    }

    #[test]
    fn failed_replicas_are_isolated() {
        let cfg = tiny(Model::Chain);
        let outcomes = vec![
            run_replica(&cfg, 0),
            Err(Error::Domain("forced".into())),
            run_replica(&cfg, 2),
        ];
        let summary = summarize(&cfg, outcomes).unwrap();
        assert_eq!(summary.successful().count(), 2);
        assert_eq!(summary.temperature.replicas, 2);
        let dir = tempfile::tempdir().unwrap();
        emit_plot_data(&summary, dir.path()).unwrap();
        assert!(fs::read_to_string(dir.path().join("fits.txt")).unwrap().contains("succeeded = 2"));
        let all_failed = vec![Err(Error::Domain("a".into())), Err(Error::Domain("b".into()))];
        assert!(matches!(summarize(&cfg, all_failed), Err(Error::Domain(m)) if m == "a"));
    }

    #[test]
    fn oracle_suite_small() {
        let cfg = OracleSuiteConfig {
            instances: 2,
            sizes: vec![6],
            temperatures: vec![1.0],
            ..OracleSuiteConfig::default()
        };
        let checks = oracle_suite(&cfg).unwrap();
        assert_eq!(checks.len(), 2 * 2 + 2);
        assert!(checks.iter().filter(|c| c.temperature.is_nan()).all(|c| c.passed));
        let mut out = Vec::new();
        write_oracle_checks(&mut out, &checks).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("model,n,instance,T,exact,estimate,stderr,passed\n"));
    }

    #[test]
    fn curve_rows() {
        let cfg = McmcCurveConfig {
            n: 50,
            realizations: 3,
            temperatures: vec![1.0, 2.0],
            mean: 0.0,
            std: 1.0,
            seed: 1,
            mcmc: McmcSection {
                sweeps: 300,
                burn_in: 100,
                thinning: 1,
                chains: 2,
            },
        };
        let rows = mcmc_energy_curve(&cfg).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.exact < 0.0 && r.mcmc_std_error > 0.0));
        assert_eq!(rows, mcmc_energy_curve(&cfg).unwrap());
    }
}
