//! Spin configurations, quenched Gaussian disorder and the two benchmark
//! Hamiltonians: the open spin glass chain and the fully connected SK model.

use std::io::Write;

use rand::seq::IndexedRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Largest `n` accepted by exhaustive enumeration.
pub const ENUMERATION_CAP: usize = 20;

/// A string of `N` Ising spins, each exactly `-1` or `+1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter(format!(
                "spin value {bad} is not +1 or -1"
            )));
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn random<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| *[-1i8, 1].choose(rng).unwrap()).collect())
    }

    /// Configuration with zero-based landscape index `index`: binary digits of
    /// the index with the most significant digit on site 1, `0 -> +1` and
    /// `1 -> -1`. Index 0 is the all-up state.
    pub fn from_index(n: usize, index: u64) -> Self {
        Self(
            (0..n)
                .map(|i| {
                    if (index >> (n - 1 - i)) & 1 == 0 {
                        1
                    } else {
                        -1
                    }
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Chain,
    Sk,
}

/// Gaussian coupling distribution `N(mean, std^2)` for one model family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderParams {
    pub mean: f64,
    pub std: f64,
    pub model: Model,
}

impl DisorderParams {
    pub fn new(mean: f64, std: f64, model: Model) -> Result<Self> {
        let p = Self { mean, std, model };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() || !self.std.is_finite() || self.std < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "disorder parameters must be finite with std >= 0 (mean = {}, std = {})",
                self.mean, self.std
            )));
        }
        if self.std == 0.0 && self.mean == 0.0 {
            return Err(Error::DegenerateDisorder);
        }
        Ok(())
    }

    /// `a = sqrt(2/pi) J0 / J`, the control parameter of the zero-temperature
    /// SK phase diagram.
    pub fn ferromagnetic_ratio(&self) -> f64 {
        (2.0 / std::f64::consts::PI).sqrt() * self.mean / self.std
    }

    fn normal(&self) -> Normal<f64> {
        Normal::new(self.mean, self.std).expect("validated parameters")
    }
}

/// Anything that assigns an energy to a spin string.
pub trait EnergyModel: Sync {
    /// Number of spins.
    fn size(&self) -> usize;

    /// Total energy. Callers guarantee `s.len() == self.size()`.
    fn energy_of(&self, s: &[i8]) -> f64;

    /// `H(s with spin k flipped) - H(s)`, computed locally.
    fn flip_delta(&self, s: &[i8], k: usize) -> f64;

    fn check_len(&self, s: &SpinConfig) -> Result<()> {
        if s.len() != self.size() {
            return Err(Error::Dimension {
                expected: self.size(),
                got: s.len(),
            });
        }
        Ok(())
    }

    fn energy(&self, s: &SpinConfig) -> Result<f64> {
        self.check_len(s)?;
        Ok(self.energy_of(s.as_slice()))
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidSize(format!("need at least 2 spins, got {n}")));
    }
    Ok(())
}

fn check_model(params: &DisorderParams, want: Model) -> Result<()> {
    params.validate()?;
    if params.model != want {
        return Err(Error::InvalidParameter(format!(
            "disorder parameters are for {:?}, expected {:?}",
            params.model, want
        )));
    }
    Ok(())
}

/// Open chain with `N - 1` nearest-neighbour bonds; bond `i` couples spins
/// `i` and `i + 1` (zero based).
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDisorder {
    bonds: Vec<f64>,
    params: DisorderParams,
}

impl ChainDisorder {
    pub fn from_bonds(bonds: Vec<f64>, params: DisorderParams) -> Result<Self> {
        check_n(bonds.len() + 1)?;
        params.validate()?;
        Ok(Self { bonds, params })
    }

    pub fn bonds(&self) -> &[f64] {
        &self.bonds
    }

    pub fn params(&self) -> &DisorderParams {
        &self.params
    }
}

pub fn sample_chain_disorder(n: usize, params: DisorderParams, seed: u64) -> Result<ChainDisorder> {
    check_n(n)?;
    check_model(&params, Model::Chain)?;
    let mut rng = rng::rng_from(seed);
    let dist = params.normal();
    let bonds = (0..n - 1).map(|_| dist.sample(&mut rng)).collect();
    Ok(ChainDisorder { bonds, params })
}

/// `-sum_i J_i s_i s_{i+1}`.
pub fn energy_chain(s: &SpinConfig, d: &ChainDisorder) -> Result<f64> {
    d.energy(s)
}

impl EnergyModel for ChainDisorder {
    fn size(&self) -> usize {
        self.bonds.len() + 1
    }

    fn energy_of(&self, s: &[i8]) -> f64 {
        let sum: f64 = self
            .bonds
            .iter()
            .zip(s.windows(2))
            .map(|(&j, w)| j * f64::from(w[0] * w[1]))
            .sum();
        -sum
    }

    fn flip_delta(&self, s: &[i8], k: usize) -> f64 {
        let mut local = 0.0;
        if k > 0 {
            local += self.bonds[k - 1] * f64::from(s[k - 1]);
        }
        if k < self.bonds.len() {
            local += self.bonds[k] * f64::from(s[k + 1]);
        }
        2.0 * f64::from(s[k]) * local
    }
}

/// Exact ground state of the open chain: gauge-unwinding `s_{i+1} = s_i sgn(J_i)`
/// from `s_1 = +1`, with `sgn(0) = +1`.
pub fn chain_ground_state(d: &ChainDisorder) -> (f64, SpinConfig) {
    let mut spins = Vec::with_capacity(d.size());
    spins.push(1i8);
    for &j in &d.bonds {
        let prev = *spins.last().unwrap();
        spins.push(if j >= 0.0 { prev } else { -prev });
    }
    let energy = -d.bonds.iter().map(|j| j.abs()).sum::<f64>();
    (energy, SpinConfig(spins))
}

/// How the SK double sum and coupling scale are read.
///
/// All three variants share the same raw draws `J_ij ~ N(J0, J^2)` and write
/// the energy as `-sum_{i<j} K_ij s_i s_j`:
/// * `OrderedPairs`: `K = 2 J / N` (the sum over `i != j` with `1/N`).
/// * `UnorderedPairs`: `K = J / N`.
/// * `MeanField`: `K = J0 / N + (J - J0) / sqrt(N)`, the scaling under which the
///   replica-symmetric equations of state hold with intensive `(J0, J)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairConvention {
    OrderedPairs,
    UnorderedPairs,
    #[default]
    MeanField,
}

impl PairConvention {
    pub const ALL: [PairConvention; 3] = [
        PairConvention::OrderedPairs,
        PairConvention::UnorderedPairs,
        PairConvention::MeanField,
    ];

    fn effective(self, raw: f64, mean: f64, n: usize) -> f64 {
        let nf = n as f64;
        match self {
            PairConvention::OrderedPairs => 2.0 * raw / nf,
            PairConvention::UnorderedPairs => raw / nf,
            PairConvention::MeanField => mean / nf + (raw - mean) / nf.sqrt(),
        }
    }
}

/// Symmetric SK couplings with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SkDisorder {
    n: usize,
    couplings: Vec<f64>,
    effective: Vec<f64>,
    params: DisorderParams,
    convention: PairConvention,
}

impl SkDisorder {
    /// Builds from a row-major `n x n` matrix, checking symmetry and the zero
    /// diagonal.
    pub fn from_matrix(
        n: usize,
        couplings: Vec<f64>,
        params: DisorderParams,
        convention: PairConvention,
    ) -> Result<Self> {
        check_n(n)?;
        params.validate()?;
        if couplings.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: couplings.len(),
            });
        }
        for i in 0..n {
            if couplings[i * n + i] != 0.0 {
                return Err(Error::InvalidParameter(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                if couplings[i * n + j] != couplings[j * n + i] {
                    return Err(Error::InvalidParameter(format!(
                        "couplings not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let mut d = Self {
            n,
            couplings,
            effective: Vec::new(),
            params,
            convention,
        };
        d.rebuild_effective();
        Ok(d)
    }

    fn rebuild_effective(&mut self) {
        let n = self.n;
        self.effective = self
            .couplings
            .iter()
            .enumerate()
            .map(|(idx, &j)| {
                if idx / n == idx % n {
                    0.0
                } else {
                    self.convention.effective(j, self.params.mean, n)
                }
            })
            .collect();
    }

    /// Same raw couplings read under another convention.
    pub fn with_convention(&self, convention: PairConvention) -> Self {
        let mut d = self.clone();
        d.convention = convention;
        d.rebuild_effective();
        d
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.couplings[i * self.n + j]
    }

    /// Raw row-major coupling matrix.
    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    /// Row `i` of the effective matrix `K`.
    pub fn effective_row(&self, i: usize) -> &[f64] {
        &self.effective[i * self.n..(i + 1) * self.n]
    }

    pub fn params(&self) -> &DisorderParams {
        &self.params
    }

    pub fn convention(&self) -> PairConvention {
        self.convention
    }

    /// Local field `h_k = sum_j K_kj s_j`.
    pub fn local_field(&self, s: &[i8], k: usize) -> f64 {
        self.effective_row(k)
            .iter()
            .zip(s)
            .map(|(&kk, &sj)| kk * f64::from(sj))
            .sum()
    }
}

pub fn sample_sk_disorder(
    n: usize,
    params: DisorderParams,
    seed: u64,
    convention: PairConvention,
) -> Result<SkDisorder> {
    check_n(n)?;
    check_model(&params, Model::Sk)?;
    let mut rng = rng::rng_from(seed);
    let dist = params.normal();
    let mut couplings = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = dist.sample(&mut rng);
            couplings[i * n + j] = v;
            couplings[j * n + i] = v;
        }
    }
    let mut d = SkDisorder {
        n,
        couplings,
        effective: Vec::new(),
        params,
        convention,
    };
    d.rebuild_effective();
    Ok(d)
}

pub fn energy_sk(s: &SpinConfig, d: &SkDisorder) -> Result<f64> {
    d.energy(s)
}

impl EnergyModel for SkDisorder {
    fn size(&self) -> usize {
        self.n
    }

    fn energy_of(&self, s: &[i8]) -> f64 {
        let n = self.n;
        let mut sum = 0.0;
        for i in 0..n {
            let row = &self.effective[i * n..(i + 1) * n];
            let partial: f64 = row[i + 1..]
                .iter()
                .zip(&s[i + 1..])
                .map(|(&k, &sj)| k * f64::from(sj))
                .sum();
            sum += f64::from(s[i]) * partial;
        }
        -sum
    }

    fn flip_delta(&self, s: &[i8], k: usize) -> f64 {
        2.0 * f64::from(s[k]) * self.local_field(s, k)
    }
}

/// Either benchmark instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Disorder {
    Chain(ChainDisorder),
    Sk(SkDisorder),
}

impl Disorder {
    pub fn sample(
        n: usize,
        params: DisorderParams,
        seed: u64,
        convention: PairConvention,
    ) -> Result<Self> {
        match params.model {
            Model::Chain => sample_chain_disorder(n, params, seed).map(Disorder::Chain),
            Model::Sk => sample_sk_disorder(n, params, seed, convention).map(Disorder::Sk),
        }
    }

    pub fn params(&self) -> &DisorderParams {
        match self {
            Disorder::Chain(d) => d.params(),
            Disorder::Sk(d) => d.params(),
        }
    }
}

impl EnergyModel for Disorder {
    fn size(&self) -> usize {
        match self {
            Disorder::Chain(d) => d.size(),
            Disorder::Sk(d) => d.size(),
        }
    }

    fn energy_of(&self, s: &[i8]) -> f64 {
        match self {
            Disorder::Chain(d) => d.energy_of(s),
            Disorder::Sk(d) => d.energy_of(s),
        }
    }

    fn flip_delta(&self, s: &[i8], k: usize) -> f64 {
        match self {
            Disorder::Chain(d) => d.flip_delta(s, k),
            Disorder::Sk(d) => d.flip_delta(s, k),
        }
    }
}

/// Energies of all `2^n` states in landscape-index order (see
/// [`SpinConfig::from_index`]). Entry `k` carries the one-based label `k + 1`.
pub fn enumerate_landscape<M: EnergyModel + ?Sized>(model: &M) -> Result<Vec<(u64, f64)>> {
    let n = model.size();
    if n > ENUMERATION_CAP {
        return Err(Error::SizeCap {
            n,
            cap: ENUMERATION_CAP,
        });
    }
    Ok((0..1u64 << n)
        .map(|k| {
            let s = SpinConfig::from_index(n, k);
            (k + 1, model.energy_of(s.as_slice()))
        })
        .collect())
}

/// Number of states within `tol` of the landscape minimum.
pub fn ground_state_degeneracy(landscape: &[(u64, f64)], tol: f64) -> usize {
    let min = landscape
        .iter()
        .map(|&(_, e)| e)
        .fold(f64::INFINITY, f64::min);
    landscape.iter().filter(|&&(_, e)| e - min <= tol).count()
}

/// Writes `state,energy` rows with a header line.
pub fn write_landscape<W: Write>(mut w: W, landscape: &[(u64, f64)]) -> Result<()> {
    writeln!(w, "state,energy")?;
    for (label, e) in landscape {
        writeln!(w, "{label},{e:?}")?;
    }
    Ok(())
}
