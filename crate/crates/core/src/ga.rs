//! The simple GA over spin-string genes: tournament (or Boltzmann) selection,
//! single-point crossover and per-site mutation, in that order each
//! generation. Fitness is `-H`; there is no elitism.
//!
//! Every operator takes an explicit seed and draws each member's (or pair's)
//! randomness from its own stream, so a generation is a pure function of
//! `(population, params, seed)`.

use rand::distr::weighted::WeightedIndex;
use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::spins::{EnergyModel, SpinConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SelectionMode {
    Tournament,
    /// Draws with probability `exp(-beta E) / sum exp(-beta E)`.
    Boltzmann { beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    pub population_size: usize,
    pub genome_length: usize,
    pub tournament_size: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub selection_mode: SelectionMode,
}

impl GaParams {
    pub fn validate(&self) -> Result<()> {
        let m = self.population_size;
        if m < 2 || m % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "population size must be even and at least 2, got {m}"
            )));
        }
        if self.genome_length < 2 {
            return Err(Error::InvalidParameter(format!(
                "genome length must be at least 2, got {}",
                self.genome_length
            )));
        }
        if self.tournament_size < 1 || self.tournament_size > m {
            return Err(Error::InvalidParameter(format!(
                "tournament size {} outside 1..={m}",
                self.tournament_size
            )));
        }
        for (name, r) in [("crossover", self.crossover_rate), ("mutation", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidParameter(format!("{name} rate {r} outside [0, 1]")));
            }
        }
        if let SelectionMode::Boltzmann { beta } = self.selection_mode {
            if !(beta >= 0.0) {
                return Err(Error::InvalidParameter(format!("selection beta {beta} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// A generation's ensemble with cached energies.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    members: Vec<SpinConfig>,
    energies: Vec<f64>,
    generation: u64,
}

impl Population {
    /// Builds a population, computing every energy from scratch.
    pub fn from_members<M: EnergyModel + ?Sized>(members: Vec<SpinConfig>, model: &M, generation: u64) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidSize("population must be nonempty".into()));
        }
        let energies = members.iter().map(|s| model.energy(s)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            members,
            energies,
            generation,
        })
    }

    pub fn members(&self) -> &[SpinConfig] {
        &self.members
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best_energy(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest deviation between cached and recomputed energies.
    pub fn cache_error<M: EnergyModel + ?Sized>(&self, model: &M) -> f64 {
        self.members
            .iter()
            .zip(&self.energies)
            .map(|(s, &e)| (model.energy_of(s.as_slice()) - e).abs())
            .fold(0.0, f64::max)
    }

    fn with(&self, members: Vec<SpinConfig>, energies: Vec<f64>) -> Self {
        Self {
            members,
            energies,
            generation: self.generation,
        }
    }
}

/// Population-average energy `U_GA = (1/M) sum_l H(s_l)`.
pub fn empirical_energy(pop: &Population) -> f64 {
    pop.energies.iter().sum::<f64>() / pop.energies.len() as f64
}

pub fn init_population<M: EnergyModel + ?Sized>(params: &GaParams, model: &M, seed: u64) -> Result<Population> {
    params.validate()?;
    if model.size() != params.genome_length {
        return Err(Error::Dimension {
            expected: params.genome_length,
            got: model.size(),
        });
    }
    let members = (0..params.population_size)
        .map(|k| SpinConfig::random(params.genome_length, &mut rng::stream(seed, k as u64)))
        .collect();
    Population::from_members(members, model, 0)
}

/// Each slot receives the lowest-energy member of `sigma` distinct members
/// drawn uniformly; slots are filled independently.
pub fn tournament_select(pop: &Population, params: &GaParams, seed: u64) -> Population {
    let m = pop.len();
    let sigma = params.tournament_size.clamp(1, m);
    let picks: Vec<usize> = (0..m)
        .map(|k| {
            let mut r = rng::stream(seed, k as u64);
            index::sample(&mut r, m, sigma)
                .into_iter()
                .min_by(|&a, &b| pop.energies[a].total_cmp(&pop.energies[b]).then(a.cmp(&b)))
                .expect("sigma >= 1")
        })
        .collect();
    gather(pop, &picks)
}

/// Selection weights `exp(-beta E) / Z`, shifted by the minimum energy.
pub fn boltzmann_weights(energies: &[f64], beta: f64) -> Vec<f64> {
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let raw: Vec<f64> = energies.iter().map(|&e| (-beta * (e - e_min)).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / z).collect()
}

pub fn boltzmann_select(pop: &Population, beta: f64, seed: u64) -> Result<Population> {
    if !(beta >= 0.0) {
        return Err(Error::InvalidParameter(format!("selection beta {beta} must be >= 0")));
    }
    let weights = boltzmann_weights(&pop.energies, beta);
    let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let picks: Vec<usize> = (0..pop.len())
        .map(|k| dist.sample(&mut rng::stream(seed, k as u64)))
        .collect();
    Ok(gather(pop, &picks))
}

fn gather(pop: &Population, picks: &[usize]) -> Population {
    pop.with(
        picks.iter().map(|&i| pop.members[i].clone()).collect(),
        picks.iter().map(|&i| pop.energies[i]).collect(),
    )
}

/// Exchanges the tails of `a` and `b` from site `cut` on.
pub fn single_point_crossover(a: &mut SpinConfig, b: &mut SpinConfig, cut: usize) {
    let mut va = std::mem::replace(a, SpinConfig::all_up(0)).into_inner();
    let mut vb = std::mem::replace(b, SpinConfig::all_up(0)).into_inner();
    va[cut..].swap_with_slice(&mut vb[cut..]);
    *a = SpinConfig::new(va).expect("spins preserved");
    *b = SpinConfig::new(vb).expect("spins preserved");
}

/// Pairs members by a uniform random perfect matching; each pair crosses with
/// probability `p_c` at a cut drawn from `1..N`. Members keep their slots.
pub fn crossover<M: EnergyModel + ?Sized>(pop: &Population, p_c: f64, model: &M, seed: u64) -> Result<Population> {
    let m = pop.len();
    if m % 2 != 0 {
        return Err(Error::InvalidParameter(format!("crossover needs an even population, got {m}")));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut rng::stream(seed, 0));
    let mut members = pop.members.clone();
    let mut energies = pop.energies.clone();
    let n = model.size();
    for (p, pair) in order.chunks_exact(2).enumerate() {
        let mut r = rng::stream(seed, p as u64 + 1);
        if !r.random_bool(p_c) {
            continue;
        }
        let cut = r.random_range(1..n);
        let (i, j) = (pair[0], pair[1]);
        let mut a = members[i].clone();
        let mut b = members[j].clone();
        single_point_crossover(&mut a, &mut b, cut);
        energies[i] = model.energy_of(a.as_slice());
        energies[j] = model.energy_of(b.as_slice());
        members[i] = a;
        members[j] = b;
    }
    Ok(pop.with(members, energies))
}

/// Sites flipped in one member, by geometric gaps between successes.
fn mutation_sites<R: Rng + ?Sized>(n: usize, p_m: f64, r: &mut R) -> Vec<usize> {
    if p_m <= 0.0 {
        return Vec::new();
    }
    if p_m >= 1.0 {
        return (0..n).collect();
    }
    let gap = Geometric::new(p_m).expect("0 < p < 1");
    let mut sites = Vec::new();
    let mut pos = gap.sample(r);
    while pos < n as u64 {
        sites.push(pos as usize);
        pos += 1 + gap.sample(r);
    }
    sites
}

/// Flips every site independently with probability `p_m`, updating energies
/// by local differences (or from scratch when many sites flip).
pub fn mutate<M: EnergyModel + ?Sized>(pop: &Population, p_m: f64, model: &M, seed: u64) -> Population {
    let n = model.size();
    let mut members = pop.members.clone();
    let mut energies = pop.energies.clone();
    for (k, (member, energy)) in members.iter_mut().zip(energies.iter_mut()).enumerate() {
        let sites = mutation_sites(n, p_m, &mut rng::stream(seed, k as u64));
        if sites.is_empty() {
            continue;
        }
        let mut spins = std::mem::replace(member, SpinConfig::all_up(0)).into_inner();
        if sites.len() * 8 < n {
            for &site in &sites {
                *energy += model.flip_delta(&spins, site);
                spins[site] = -spins[site];
            }
        } else {
            for &site in &sites {
                spins[site] = -spins[site];
            }
            *energy = model.energy_of(&spins);
        }
        *member = SpinConfig::new(spins).expect("spins preserved");
    }
    pop.with(members, energies)
}

/// Result of one generation, with the intermediate post-selection mean kept
/// for the snapshot policy.
#[derive(Debug, Clone)]
pub struct GenerationOutcome {
    pub population: Population,
    pub post_selection_energy: f64,
}

/// Selection, then crossover, then mutation; the generation counter advances
/// by one.
pub fn step_generation<M: EnergyModel + ?Sized>(
    pop: &Population,
    params: &GaParams,
    model: &M,
    seed: u64,
) -> Result<Population> {
    step_generation_detailed(pop, params, model, seed).map(|o| o.population)
}

pub fn step_generation_detailed<M: EnergyModel + ?Sized>(
    pop: &Population,
    params: &GaParams,
    model: &M,
    seed: u64,
) -> Result<GenerationOutcome> {
    params.validate()?;
    let selected = match params.selection_mode {
        SelectionMode::Tournament => tournament_select(pop, params, rng::derive_seed(seed, &[1])),
        SelectionMode::Boltzmann { beta } => boltzmann_select(pop, beta, rng::derive_seed(seed, &[1]))?,
    };
    let post_selection_energy = empirical_energy(&selected);
    let crossed = crossover(&selected, params.crossover_rate, model, rng::derive_seed(seed, &[2]))?;
    let mut population = mutate(&crossed, params.mutation_rate, model, rng::derive_seed(seed, &[3]));
    population.generation = pop.generation + 1;
    Ok(GenerationOutcome {
        population,
        post_selection_energy,
    })
}
