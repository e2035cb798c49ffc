//! Post-processing of temperature and energy schedules: residual energy,
//! log-log power-law fits, two-segment crossover detection, and a numerical
//! check of Holland's schema-growth identity for Gibbs distributions.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Slack allowed below the ground energy before a residual is treated as an
/// oracle bug.
pub const GROUND_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Dimension {
                expected: times.len(),
                got: values.len(),
            });
        }
        if times.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::Domain("times must be positive and finite".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("times must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("values must be finite".into()));
        }
        Ok(Self { times, values })
    }

    /// Series over `t = 1, 2, ...` from values indexed by generation, dropping
    /// generation 0 (which has no logarithm).
    pub fn from_generations(values: &[f64]) -> Result<Self> {
        let values = values.get(1..).unwrap_or(&[]).to_vec();
        let times = (1..=values.len()).map(|t| t as f64).collect();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `(t_max / 10^decades, t_max)`.
    pub fn last_decades(&self, decades: f64) -> (f64, f64) {
        let t_max = self.times.last().copied().unwrap_or(1.0);
        (t_max / 10f64.powf(decades), t_max)
    }
}

/// `epsilon(t) = H_best(t) - min H`.
pub fn residual_energy_series(best_energy: &TimeSeries, ground_energy: f64) -> Result<TimeSeries> {
    let mut values = Vec::with_capacity(best_energy.len());
    for &v in &best_energy.values {
        let r = v - ground_energy;
        if r < -GROUND_SLACK {
            return Err(Error::OracleInconsistency {
                value: v,
                ground: ground_energy,
            });
        }
        values.push(r.max(0.0));
    }
    Ok(TimeSeries {
        times: best_energy.times.clone(),
        values,
    })
}

/// `value ~ amplitude * t^(-exponent)` over a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub amplitude: f64,
    pub window: (f64, f64),
    pub r_squared: f64,
    pub points: usize,
}

impl PowerLawFit {
    /// `key = value` block for run summaries.
    pub fn report(&self, label: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[{label}]");
        let _ = writeln!(s, "exponent = {:?}", self.exponent);
        let _ = writeln!(s, "amplitude = {:?}", self.amplitude);
        let _ = writeln!(s, "window = [{:?}, {:?}]", self.window.0, self.window.1);
        let _ = writeln!(s, "r_squared = {:?}", self.r_squared);
        let _ = writeln!(s, "points = {}", self.points);
        s
    }
}

/// Running sums for ordinary least squares on `(x, y)`.
#[derive(Debug, Clone, Copy, Default)]
struct Sums {
    n: f64,
    x: f64,
    y: f64,
    xx: f64,
    xy: f64,
    yy: f64,
}

impl Sums {
    fn push(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        self.x += x;
        self.y += y;
        self.xx += x * x;
        self.xy += x * y;
        self.yy += y * y;
    }

    fn minus(&self, o: &Sums) -> Sums {
        Sums {
            n: self.n - o.n,
            x: self.x - o.x,
            y: self.y - o.y,
            xx: self.xx - o.xx,
            xy: self.xy - o.xy,
            yy: self.yy - o.yy,
        }
    }

    /// `(slope, intercept, residual sum of squares, total sum of squares)`.
    fn line(&self) -> (f64, f64, f64, f64) {
        let sxx = self.xx - self.x * self.x / self.n;
        let sxy = self.xy - self.x * self.y / self.n;
        let syy = (self.yy - self.y * self.y / self.n).max(0.0);
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        let intercept = (self.y - slope * self.x) / self.n;
        let ssr = (syy - slope * sxy).max(0.0);
        (slope, intercept, ssr, syy)
    }
}

fn log_points(series: &TimeSeries, window: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let mut pts = Vec::new();
    for (&t, &v) in series.times.iter().zip(&series.values) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::Domain(format!("nonpositive value {v} at t = {t} inside fit window")));
        }
        pts.push((t.ln(), v.ln()));
    }
    Ok(pts)
}

/// Least-squares line through `(ln t, ln value)` for `t` in `window`
/// (inclusive); the exponent is minus the slope.
pub fn fit_power_law(series: &TimeSeries, window: (f64, f64)) -> Result<PowerLawFit> {
    let pts = log_points(series, window)?;
    if pts.len() < 10 {
        return Err(Error::InsufficientData {
            needed: 10,
            got: pts.len(),
        });
    }
    // centre before summing to keep the normal equations well conditioned
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (mx / pts.len() as f64, my / pts.len() as f64);
    let mut sums = Sums::default();
    for &(x, y) in &pts {
        sums.push(x - mx, y - my);
    }
    let (slope, _, ssr, sst) = sums.line();
    let r_squared = if sst > 0.0 { (1.0 - ssr / sst).clamp(0.0, 1.0) } else { 1.0 };
    Ok(PowerLawFit {
        exponent: -slope,
        amplitude: (my - slope * mx).exp(),
        window,
        r_squared,
        points: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossover {
    pub t_break: f64,
    pub early_exponent: f64,
    pub late_exponent: f64,
    /// Fractional reduction of the squared residual against one segment.
    pub improvement: f64,
}

pub const CROSSOVER_MIN_POINTS: usize = 40;
pub const CROSSOVER_MIN_SEGMENT: usize = 10;
pub const CROSSOVER_MIN_IMPROVEMENT: f64 = 0.2;
pub const CROSSOVER_MIN_EXPONENT_GAP: f64 = 0.05;

/// Best two-segment log-log fit over interior breakpoints. Reported only when
/// it cuts the squared residual by at least 20% and the exponents differ by at
/// least 0.05.
pub fn detect_crossover(series: &TimeSeries) -> Result<Option<Crossover>> {
    let n = series.len();
    if n < CROSSOVER_MIN_POINTS {
        return Err(Error::InsufficientData {
            needed: CROSSOVER_MIN_POINTS,
            got: n,
        });
    }
    let pts = log_points(series, (f64::NEG_INFINITY, f64::INFINITY))?;
    let (mx, my) = pts.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
    let (mx, my) = (mx / n as f64, my / n as f64);
    let mut prefix = Vec::with_capacity(n + 1);
    let mut acc = Sums::default();
    prefix.push(acc);
    for &(x, y) in &pts {
        acc.push(x - mx, y - my);
        prefix.push(acc);
    }
    let total = prefix[n];
    let (_, _, ssr_single, _) = total.line();
    if ssr_single <= 1e-14 * total.yy.max(1.0) {
        return Ok(None);
    }
    let mut best: Option<(f64, usize, f64, f64)> = None;
    for b in CROSSOVER_MIN_SEGMENT..=n - CROSSOVER_MIN_SEGMENT {
        let early = prefix[b];
        let late = total.minus(&early);
        let (s1, _, r1, _) = early.line();
        let (s2, _, r2, _) = late.line();
        let ssr = r1 + r2;
        if best.is_none_or(|(bs, ..)| ssr < bs) {
            best = Some((ssr, b, -s1, -s2));
        }
    }
    let Some((ssr, b, early_exponent, late_exponent)) = best else {
        return Ok(None);
    };
    let improvement = 1.0 - ssr / ssr_single;
    if improvement < CROSSOVER_MIN_IMPROVEMENT || (late_exponent - early_exponent).abs() < CROSSOVER_MIN_EXPONENT_GAP {
        return Ok(None);
    }
    Ok(Some(Crossover {
        t_break: (series.times[b - 1] * series.times[b]).sqrt(),
        early_exponent,
        late_exponent,
        improvement,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// `beta_t = t`.
    Linear,
    /// `beta_t = t^xi`.
    Power(f64),
}

impl Schedule {
    pub fn beta(&self, t: f64) -> f64 {
        match *self {
            Schedule::Linear => t,
            Schedule::Power(xi) => t.powf(xi),
        }
    }

    /// `d beta_t / dt`.
    pub fn beta_rate(&self, t: f64) -> f64 {
        match *self {
            Schedule::Linear => 1.0,
            Schedule::Power(xi) => xi * t.powf(xi - 1.0),
        }
    }
}

pub const HOLLAND_MAX_STATES: usize = 1 << 15;

/// Fitness `g(i)` over a finite configuration space and a schema `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct HollandSystem {
    fitness: Vec<f64>,
    schema: Vec<usize>,
}

impl HollandSystem {
    pub fn new(fitness: Vec<f64>, mut schema: Vec<usize>) -> Result<Self> {
        let k = fitness.len();
        if k > HOLLAND_MAX_STATES {
            return Err(Error::SizeCap {
                n: k,
                cap: HOLLAND_MAX_STATES,
            });
        }
        if fitness.iter().any(|g| !g.is_finite()) {
            return Err(Error::Domain("fitness values must be finite".into()));
        }
        schema.sort_unstable();
        schema.dedup();
        if schema.is_empty() || schema.len() >= k || schema.last().is_some_and(|&i| i >= k) {
            return Err(Error::InvalidParameter(
                "schema must be a nonempty strict subset of the configurations".into(),
            ));
        }
        Ok(Self { fitness, schema })
    }

    pub fn fitness(&self) -> &[f64] {
        &self.fitness
    }

    pub fn schema(&self) -> &[usize] {
        &self.schema
    }
}

/// Softmax `exp(beta g_i) / sum_j exp(beta g_j)` with a max shift.
pub fn gibbs_probabilities(fitness: &[f64], beta: f64) -> Vec<f64> {
    let g_max = fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = fitness.iter().map(|&g| (beta * (g - g_max)).exp()).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / z).collect()
}

/// The quantities entering Holland's condition at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HollandTerms {
    /// `P(H, t)`.
    pub schema_probability: f64,
    /// `f(H, t) = sum_{i in H} g(i) p_i`.
    pub schema_fitness: f64,
    /// `f(J, t)` over all configurations.
    pub mean_fitness: f64,
    /// `dP(H, t)/dt` summed from the per-state derivative
    /// `dp_i/dt = beta'(t) p_i (g(i) - f(J, t))`.
    pub schema_rate: f64,
    /// `beta'(t)`.
    pub rate_factor: f64,
}

pub fn holland_terms(sys: &HollandSystem, t: f64, schedule: Schedule) -> Result<HollandTerms> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("time must be positive, got {t}")));
    }
    let p = gibbs_probabilities(&sys.fitness, schedule.beta(t));
    let mean_fitness: f64 = p.iter().zip(&sys.fitness).map(|(pi, g)| pi * g).sum();
    let rate_factor = schedule.beta_rate(t);
    let mut schema_probability = 0.0;
    let mut schema_fitness = 0.0;
    let mut schema_rate = 0.0;
    for &i in &sys.schema {
        let (pi, gi) = (p[i], sys.fitness[i]);
        schema_probability += pi;
        schema_fitness += gi * pi;
        schema_rate += rate_factor * (pi * gi - pi * mean_fitness);
    }
    Ok(HollandTerms {
        schema_probability,
        schema_fitness,
        mean_fitness,
        schema_rate,
        rate_factor,
    })
}

/// `|dP(H,t)/dt - C (f(H,t) - P(H,t) f(J,t))|` with `C = d beta_t / dt`.
pub fn holland_residual(sys: &HollandSystem, t: f64, schedule: Schedule) -> Result<f64> {
    let h = holland_terms(sys, t, schedule)?;
    Ok((h.schema_rate - h.rate_factor * (h.schema_fitness - h.schema_probability * h.mean_fitness)).abs())
}

/// `P(H, t)` alone, for finite-difference checks.
pub fn schema_probability(sys: &HollandSystem, t: f64, schedule: Schedule) -> f64 {
    let p = gibbs_probabilities(&sys.fitness, schedule.beta(t));
    sys.schema.iter().map(|&i| p[i]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::{Distribution, Normal};

    fn series(mut f: impl FnMut(f64) -> f64, times: &[f64]) -> TimeSeries {
        TimeSeries::new(times.to_vec(), times.iter().map(|&t| f(t)).collect()).unwrap()
    }

    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn series_validation() {
        assert!(TimeSeries::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(TimeSeries::new(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(TimeSeries::new(vec![1.0, 2.0], vec![0.0, f64::NAN]).is_err());
        assert!(TimeSeries::new(vec![1.0], vec![0.0, 1.0]).is_err());
        let s = TimeSeries::from_generations(&[5.0, 4.0, 3.0]).unwrap();
        assert_eq!(s.times(), &[1.0, 2.0]);
        assert_eq!(s.values(), &[4.0, 3.0]);
    }

    #[test]
    fn residuals() {
        let best = TimeSeries::new(vec![1.0, 2.0], vec![-5.0, -5.0]).unwrap();
        assert_eq!(residual_energy_series(&best, -5.0).unwrap().values(), &[0.0, 0.0]);
        let best = TimeSeries::new(vec![1.0, 2.0], vec![-3.0, -4.5]).unwrap();
        assert_eq!(residual_energy_series(&best, -5.0).unwrap().values(), &[2.0, 0.5]);
        assert!(matches!(
            residual_energy_series(&best, -4.0),
            Err(Error::OracleInconsistency { .. })
        ));
    }

    #[test]
    fn exact_power_law() {
        let times: Vec<f64> = (1..=10_000).map(|t| t as f64).collect();
        let fit = fit_power_law(&series(|t| t.powf(-0.5), &times), (1.0, 1e4)).unwrap();
        assert!((fit.exponent - 0.5).abs() < 1e-6);
        assert!(fit.r_squared > 1.0 - 1e-9);
        assert!((fit.amplitude - 1.0).abs() < 1e-6);
        assert_eq!(fit.points, 10_000);
    }

    #[test]
    fn noisy_power_law() {
        let mut r = rng::rng_from(5);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let times: Vec<f64> = (1..=2000).map(|t| t as f64).collect();
        let s = series(|t| 3.0 * t.powf(-1.2) * (1.0 + noise.sample(&mut r)), &times);
        let fit = fit_power_law(&s, (1.0, 2000.0)).unwrap();
        assert!((fit.exponent - 1.2).abs() < 0.02, "{}", fit.exponent);
    }

    #[test]
    fn constant_series_has_zero_exponent() {
        let times: Vec<f64> = (1..=100).map(|t| t as f64).collect();
        let fit = fit_power_law(&series(|_| 2.0, &times), (1.0, 100.0)).unwrap();
        assert!(fit.exponent.abs() < 1e-6);
    }

    #[test]
    fn fit_errors() {
        let times: Vec<f64> = (1..=20).map(|t| t as f64).collect();
        let s = series(|t| t - 5.0, &times);
        assert!(matches!(fit_power_law(&s, (1.0, 20.0)), Err(Error::Domain(_))));
        assert!(fit_power_law(&s, (6.0, 20.0)).is_ok());
        assert!(matches!(
            fit_power_law(&s, (15.0, 20.0)),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn fit_report_block() {
        let fit = PowerLawFit {
            exponent: 0.5,
            amplitude: 2.0,
            window: (10.0, 100.0),
            r_squared: 0.99,
            points: 91,
        };
        assert_eq!(
            fit.report("temperature"),
            "[temperature]\nexponent = 0.5\namplitude = 2.0\nwindow = [10.0, 100.0]\nr_squared = 0.99\npoints = 91\n"
        );
    }

    #[test]
    fn no_crossover_in_single_power_law() {
        let s = series(|t| t.powf(-0.7), &log_grid(1.0, 1e4, 200));
        assert_eq!(detect_crossover(&s).unwrap(), None);
        let short = series(|t| t.powf(-0.7), &log_grid(1.0, 1e4, 39));
        assert!(matches!(detect_crossover(&short), Err(Error::InsufficientData { .. })));
    }

    fn piecewise(t: f64) -> f64 {
        if t <= 100.0 {
            t.powf(-0.3)
        } else {
            100f64.powf(-0.3) * (t / 100.0).powf(-0.9)
        }
    }

    #[test]
    fn piecewise_crossover_recovered() {
        let mut r = rng::rng_from(8);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let s = series(|t| piecewise(t) * (1.0 + noise.sample(&mut r)), &log_grid(1.0, 1e4, 200));
        let c = detect_crossover(&s).unwrap().expect("crossover present");
        assert!(c.t_break > 100.0 / 1.5 && c.t_break < 150.0, "{c:?}");
        assert!((c.early_exponent - 0.3).abs() < 0.05 && (c.late_exponent - 0.9).abs() < 0.05, "{c:?}");
    }

    #[test]
    fn crossover_false_positive_rate() {
        let mut r = rng::rng_from(9);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let grid = log_grid(1.0, 1e4, 100);
        let mut hits = 0;
        for _ in 0..200 {
            let xi = r.random_range(0.2..1.5);
            let s = series(|t| t.powf(-xi) * (1.0 + noise.sample(&mut r)), &grid);
            if detect_crossover(&s).unwrap().is_some() {
                hits += 1;
            }
        }
        assert!(hits < 10, "{hits} false positives out of 200");
    }

    fn random_system(r: &mut impl Rng, k: usize) -> HollandSystem {
        let fitness = (0..k).map(|_| r.random_range(-1.0..1.0)).collect();
        let size = r.random_range(1..k);
        let schema = rand::seq::index::sample(r, k, size).into_vec();
        HollandSystem::new(fitness, schema).unwrap()
    }

    #[test]
    fn holland_system_validation() {
        assert!(HollandSystem::new(vec![0.0, 1.0], vec![]).is_err());
        assert!(HollandSystem::new(vec![0.0, 1.0], vec![0, 1]).is_err());
        assert!(HollandSystem::new(vec![0.0, 1.0], vec![2]).is_err());
        assert!(HollandSystem::new(vec![0.0; (1 << 15) + 1], vec![0]).is_err());
    }

    #[test]
    fn equal_fitness_is_stationary() {
        let sys = HollandSystem::new(vec![0.3, 0.3], vec![0]).unwrap();
        for t in [0.1, 1.0, 10.0] {
            let h = holland_terms(&sys, t, Schedule::Linear).unwrap();
            assert_eq!(h.schema_rate, 0.0);
            assert_eq!(holland_residual(&sys, t, Schedule::Linear).unwrap(), 0.0);
        }
    }

    #[test]
    fn holland_identity_and_finite_differences() {
        let mut r = rng::rng_from(10);
        for schedule in [Schedule::Linear, Schedule::Power(0.7)] {
            let sys = random_system(&mut r, 8);
            for t in [0.5, 1.0, 5.0] {
                assert!(holland_residual(&sys, t, schedule).unwrap() <= 1e-12);
                let h = 1e-6;
                let fd = (schema_probability(&sys, t + h, schedule) - schema_probability(&sys, t - h, schedule)) / (2.0 * h);
                let analytic = holland_terms(&sys, t, schedule).unwrap().schema_rate;
                assert!((fd - analytic).abs() <= 1e-6, "{fd} vs {analytic}");
            }
        }
        let h = holland_terms(&random_system(&mut r, 8), 2.0, Schedule::Power(0.7)).unwrap();
        assert!((h.rate_factor - 0.7 * 2f64.powf(-0.3)).abs() < 1e-15);
    }

    #[test]
    fn softmax_survives_large_beta() {
        let p = gibbs_probabilities(&[1000.0, 999.0, -1000.0], 50.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|x| x.is_finite()));
    }

    proptest! {
        #[test]
        fn scale_equivariance(c in 0.01f64..100.0, xi in -1.0f64..2.0) {
            let s = series(|t| 1.5 * t.powf(-xi) * (1.0 + 0.1 * (t.ln()).sin()), &log_grid(1.0, 1e3, 50));
            let a = fit_power_law(&s, (1.0, 1e3)).unwrap();
            let b = fit_power_law(&s.scaled(c), (1.0, 1e3)).unwrap();
            prop_assert!((a.exponent - b.exponent).abs() < 1e-9);
            prop_assert!((b.amplitude / a.amplitude - c).abs() < 1e-9 * c);
        }

        #[test]
        fn linear_equals_unit_power(seed in any::<u64>(), t in 0.01f64..10.0) {
            let sys = random_system(&mut rng::rng_from(seed), 16);
            prop_assert_eq!(
                holland_residual(&sys, t, Schedule::Linear).unwrap(),
                holland_residual(&sys, t, Schedule::Power(1.0)).unwrap()
            );
        }

        #[test]
        fn probabilities_normalised(seed in any::<u64>(), beta in 0.0f64..100.0) {
            let mut r = rng::rng_from(seed);
            let g: Vec<f64> = (0..64).map(|_| r.random_range(-5.0..5.0)).collect();
            prop_assert!((gibbs_probabilities(&g, beta).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
