//! Equilibrium reference machinery: a single-spin-flip Metropolis sampler and
//! exact enumeration of Gibbs expectations for small systems.

use std::io::Write;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;
use crate::spins::{enumerate_landscape, Disorder, EnergyModel, SpinConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McmcOptions {
    /// Total sweeps per chain, burn-in included.
    pub sweeps: usize,
    pub burn_in: usize,
    /// Sweeps between recorded samples.
    pub thinning: usize,
    pub chains: usize,
}

impl Default for McmcOptions {
    fn default() -> Self {
        Self {
            sweeps: 10_000,
            burn_in: 1_000,
            thinning: 10,
            chains: 10,
        }
    }
}

impl McmcOptions {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.burn_in == 0 || self.thinning == 0 || self.chains == 0 {
            return Err(Error::InvalidParameter("MCMC options must be positive".into()));
        }
        if self.burn_in >= self.sweeps {
            return Err(Error::InvalidParameter(format!(
                "burn_in ({}) must be below sweeps ({})",
                self.burn_in, self.sweeps
            )));
        }
        Ok(())
    }
}

/// One Metropolis chain. For SK instances the local fields
/// `h_i = sum_j K_ij s_j` are cached and updated after each accepted flip.
pub struct Metropolis<'a> {
    model: &'a Disorder,
    spins: Vec<i8>,
    energy: f64,
    fields: Vec<f64>,
    rng: ChaCha8Rng,
}

impl<'a> Metropolis<'a> {
    pub fn new(model: &'a Disorder, start: SpinConfig, seed: u64) -> Result<Self> {
        model.check_len(&start)?;
        let spins = start.into_inner();
        let energy = model.energy_of(&spins);
        let fields = match model {
            Disorder::Sk(d) => (0..spins.len()).map(|k| d.local_field(&spins, k)).collect(),
            Disorder::Chain(_) => Vec::new(),
        };
        Ok(Self {
            model,
            spins,
            energy,
            fields,
            rng: rng::rng_from(seed),
        })
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    fn delta(&self, k: usize) -> f64 {
        match self.model {
            Disorder::Chain(d) => d.flip_delta(&self.spins, k),
            Disorder::Sk(_) => 2.0 * f64::from(self.spins[k]) * self.fields[k],
        }
    }

    fn flip(&mut self, k: usize, delta: f64) {
        let old = f64::from(self.spins[k]);
        self.spins[k] = -self.spins[k];
        self.energy += delta;
        if let Disorder::Sk(d) = self.model {
            let change = -2.0 * old;
            // K is symmetric, so column k equals row k
            for (h, &kk) in self.fields.iter_mut().zip(d.effective_row(k)) {
                *h += kk * change;
            }
        }
    }

    /// One typewriter sweep over all sites; returns the number of accepted flips.
    pub fn sweep(&mut self, temperature: f64) -> usize {
        let mut accepted = 0;
        for k in 0..self.spins.len() {
            let delta = self.delta(k);
            let accept = delta <= 0.0 || self.rng.random::<f64>() < (-delta / temperature).exp();
            if accept {
                self.flip(k, delta);
                accepted += 1;
            }
        }
        accepted
    }

    pub fn into_config(self) -> SpinConfig {
        SpinConfig::new(self.spins).expect("sampler keeps spins in {-1, +1}")
    }
}

fn check_temperature(t: f64) -> Result<()> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("temperature must be positive, got {t}")));
    }
    Ok(())
}

/// A single sequential Metropolis sweep starting from `s`.
pub fn metropolis_sweep(s: &SpinConfig, model: &Disorder, temperature: f64, seed: u64) -> Result<SpinConfig> {
    check_temperature(temperature)?;
    let mut chain = Metropolis::new(model, s.clone(), seed)?;
    chain.sweep(temperature);
    Ok(chain.into_config())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Mean and standard error (between independent samples) of `values`.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Gibbs internal energy of one instance by independent Metropolis chains
/// started from random configurations. The standard error is the
/// between-chain spread of the per-chain time averages.
pub fn estimate_internal_energy(
    model: &Disorder,
    temperature: f64,
    opts: &McmcOptions,
    seed: u64,
) -> Result<EnergyEstimate> {
    check_temperature(temperature)?;
    opts.validate()?;
    let n = model.size();
    let chain_means: Vec<f64> = (0..opts.chains)
        .into_par_iter()
        .map(|c| {
            let mut init_rng = rng::stream(seed, 2 * c as u64);
            let start = SpinConfig::random(n, &mut init_rng);
            let mut chain = Metropolis::new(model, start, rng::derive_seed(seed, &[2 * c as u64 + 1]))
                .expect("size checked");
            for _ in 0..opts.burn_in {
                chain.sweep(temperature);
            }
            let mut total = 0.0;
            let mut count = 0usize;
            for sweep in 1..=opts.sweeps - opts.burn_in {
                chain.sweep(temperature);
                if sweep % opts.thinning == 0 {
                    total += chain.energy();
                    count += 1;
                }
            }
            if count == 0 {
                chain.energy()
            } else {
                total / count as f64
            }
        })
        .collect();
    let (mean, std_error) = mean_and_stderr(&chain_means);
    Ok(EnergyEstimate { mean, std_error })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GibbsExact {
    pub internal_energy: f64,
    pub log_partition: f64,
}

impl GibbsExact {
    pub fn partition_function(&self) -> f64 {
        self.log_partition.exp()
    }
}

/// Exact `U` and `Z` by enumerating all `2^n` states (log-sum-exp stabilised).
pub fn exact_gibbs_expectation<M: EnergyModel + ?Sized>(model: &M, temperature: f64) -> Result<GibbsExact> {
    check_temperature(temperature)?;
    let energies: Vec<f64> = enumerate_landscape(model)?.into_iter().map(|(_, e)| e).collect();
    Ok(gibbs_from_energies(&energies, temperature))
}

pub(crate) fn gibbs_from_energies(energies: &[f64], temperature: f64) -> GibbsExact {
    let beta = 1.0 / temperature;
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut z = 0.0;
    let mut ez = 0.0;
    for &e in energies {
        let w = (-beta * (e - e_min)).exp();
        z += w;
        ez += w * e;
    }
    GibbsExact {
        internal_energy: ez / z,
        log_partition: -beta * e_min + z.ln(),
    }
}

/// Writes `T,U_mean,U_stderr` rows.
pub fn write_energy_curve<W: Write>(mut w: W, rows: &[(f64, EnergyEstimate)]) -> Result<()> {
    writeln!(w, "T,U_mean,U_stderr")?;
    for (t, est) in rows {
        writeln!(w, "{t:?},{:?},{:?}", est.mean, est.std_error)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spins::{
        chain_ground_state, sample_chain_disorder, sample_sk_disorder, ChainDisorder, DisorderParams, Model,
        PairConvention,
    };

    fn chain(n: usize, seed: u64) -> Disorder {
        Disorder::Chain(sample_chain_disorder(n, DisorderParams::new(0.0, 1.0, Model::Chain).unwrap(), seed).unwrap())
    }

    fn sk(n: usize, seed: u64) -> Disorder {
        Disorder::Sk(
            sample_sk_disorder(n, DisorderParams::new(0.3, 1.0, Model::Sk).unwrap(), seed, PairConvention::MeanField)
                .unwrap(),
        )
    }

    #[test]
    fn options_validated() {
        let bad = McmcOptions {
            burn_in: 10,
            sweeps: 10,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(McmcOptions::default().validate().is_ok());
    }

    #[test]
    fn infinite_temperature_accepts_everything() {
        for d in [chain(50, 1), sk(30, 2)] {
            let start = SpinConfig::random(d.size(), &mut rng::rng_from(3));
            let mut m = Metropolis::new(&d, start, 4).unwrap();
            let acc: usize = (0..20).map(|_| m.sweep(1e9)).sum();
            assert!(acc as f64 / (20 * d.size()) as f64 > 0.999);
        }
    }

    #[test]
    fn cached_energy_and_fields_track_recomputation() {
        for d in [chain(40, 5), sk(25, 6)] {
            let start = SpinConfig::random(d.size(), &mut rng::rng_from(7));
            let mut m = Metropolis::new(&d, start, 8).unwrap();
            for _ in 0..50 {
                m.sweep(0.8);
                for k in 0..d.size() {
                    assert!((m.delta(k) - d.flip_delta(m.spins(), k)).abs() < 1e-10);
                }
                assert!((m.energy() - d.energy_of(m.spins())).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn ground_state_is_frozen_at_zero_temperature() {
        let Disorder::Chain(c) = chain(30, 9) else { unreachable!() };
        let (_, gs) = chain_ground_state(&c);
        let d = Disorder::Chain(c);
        let mut s = gs.clone();
        for seed in 0..20 {
            s = metropolis_sweep(&s, &d, 1e-12, seed).unwrap();
        }
        assert_eq!(s, gs);
        assert!(metropolis_sweep(&gs, &d, 0.0, 0).is_err());
    }

    #[test]
    fn two_spin_exact_expectation() {
        let c = ChainDisorder::from_bonds(vec![1.0], DisorderParams::new(0.0, 1.0, Model::Chain).unwrap()).unwrap();
        let g = exact_gibbs_expectation(&c, 1.0).unwrap();
        assert!((g.internal_energy + 1f64.tanh()).abs() < 1e-14);
        assert!((g.partition_function() - 4.0 * 1f64.cosh()).abs() < 1e-12);
    }

    #[test]
    fn infinite_temperature_enumeration_limits() {
        let d = chain(10, 11);
        let g = exact_gibbs_expectation(&d, 1e12).unwrap();
        let energies: Vec<f64> = enumerate_landscape(&d).unwrap().into_iter().map(|x| x.1).collect();
        let avg = energies.iter().sum::<f64>() / energies.len() as f64;
        assert!((g.internal_energy - avg).abs() < 1e-9);
        assert!((g.partition_function() - 1024.0).abs() < 1e-6);
        assert!(matches!(exact_gibbs_expectation(&chain(21, 0), 1.0), Err(Error::SizeCap { .. })));
    }

    #[test]
    fn estimate_matches_enumeration_small_chain() {
        let d = chain(10, 12);
        let exact = exact_gibbs_expectation(&d, 1.0).unwrap().internal_energy;
        let est = estimate_internal_energy(&d, 1.0, &McmcOptions::default(), 13).unwrap();
        assert!((est.mean - exact).abs() < 3.0 * est.std_error, "{est:?} vs {exact}");
        assert!(est.std_error > 0.0);
    }

    #[test]
    fn estimate_is_deterministic() {
        let d = sk(12, 14);
        let opts = McmcOptions {
            sweeps: 300,
            burn_in: 50,
            thinning: 2,
            chains: 4,
        };
        assert_eq!(
            estimate_internal_energy(&d, 1.0, &opts, 15).unwrap(),
            estimate_internal_energy(&d, 1.0, &opts, 15).unwrap()
        );
    }

    #[test]
    fn paramagnetic_limit() {
        let d = chain(200, 16);
        let opts = McmcOptions {
            sweeps: 400,
            burn_in: 20,
            thinning: 2,
            chains: 8,
        };
        let est = estimate_internal_energy(&d, 1e6, &opts, 17).unwrap();
        assert!(est.mean.abs() < 4.0 * est.std_error.max(0.05), "{est:?}");
    }

    #[test]
    fn detailed_balance_two_spins() {
        let c = ChainDisorder::from_bonds(vec![0.7], DisorderParams::new(0.0, 1.0, Model::Chain).unwrap()).unwrap();
        let d = Disorder::Chain(c.clone());
        let t = 1.0;
        let energies: Vec<f64> = enumerate_landscape(&c).unwrap().into_iter().map(|x| x.1).collect();
        let z: f64 = energies.iter().map(|e| (-e / t).exp()).sum();
        let mut counts = [0usize; 4];
        let mut m = Metropolis::new(&d, SpinConfig::all_up(2), 18).unwrap();
        let samples = 1_000_000;
        for _ in 0..samples {
            m.sweep(t);
            let s = m.spins();
            let idx = usize::from(s[0] < 0) * 2 + usize::from(s[1] < 0);
            counts[idx] += 1;
        }
        for (k, &c) in counts.iter().enumerate() {
            let p = (-energies[k] / t).exp() / z;
            let sigma = (p * (1.0 - p) / samples as f64).sqrt();
            let freq = c as f64 / samples as f64;
            assert!((freq - p).abs() < 3.0 * sigma, "state {k}: {freq} vs {p}");
        }
    }

    #[test]
    fn curve_export_header() {
        let mut buf = Vec::new();
        write_energy_curve(&mut buf, &[(0.5, EnergyEstimate { mean: -1.5, std_error: 0.25 })]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "T,U_mean,U_stderr\n0.5,-1.5,0.25\n");
    }
}
