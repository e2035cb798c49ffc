//! Closed-form and self-consistent thermodynamics of the two benchmark models
//! in the thermodynamic limit.
//!
//! All Gaussian averages are taken against the standard normal measure
//! `Dx = dx exp(-x^2/2) / sqrt(2 pi)` through a [`QuadratureRule`].

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use crate::error::{Error, Result};
use crate::spins::DisorderParams;

/// Nodes and weights integrating against the standard normal measure.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    degree: usize,
}

impl QuadratureRule {
    /// `n`-point Gauss-Hermite rule mapped onto `Dx`; exact for polynomials of
    /// degree `2n - 1`.
    pub fn gauss_hermite(n: usize) -> Self {
        assert!(n >= 1, "rule needs at least one node");
        // Physicists' Hermite roots by Newton iteration on the orthonormal
        // recurrence, starting from the usual asymptotic guesses.
        const PIM4: f64 = 0.751_125_544_464_942_5; // pi^(-1/4)
        let nf = n as f64;
        let half = (n + 1) / 2;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let mut z = 0.0f64;
        for i in 0..half {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..200 {
                let mut p1 = PIM4;
                let mut p2 = 0.0;
                for j in 1..=n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let step = p1 / pp;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        if n % 2 == 1 {
            x[n / 2] = 0.0;
        }
        let scale = PI.sqrt();
        let mut pairs: Vec<(f64, f64)> = x
            .iter()
            .zip(&w)
            .map(|(&xi, &wi)| (SQRT_2 * xi, wi / scale))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut rule = Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
            degree: 2 * n - 1,
        };
        rule.normalize();
        rule
    }

    /// Composite Gauss-Legendre rule on `[-half_width, half_width]` with
    /// `panels` equal panels of `order` points each, weighted by the normal
    /// density. Resolves integrands with structure much finer than a global
    /// Hermite rule can (e.g. `sech^2(x / T) / T` at small `T`).
    pub fn composite_gauss_legendre(half_width: f64, panels: usize, order: usize) -> Self {
        assert!(half_width > 0.0 && panels >= 1 && order >= 1);
        let (gx, gw) = gauss_legendre(order);
        let h = 2.0 * half_width / panels as f64;
        let norm = 1.0 / (2.0 * PI).sqrt();
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = -half_width + (p as f64 + 0.5) * h;
            for (&t, &wt) in gx.iter().zip(&gw) {
                let x = mid + 0.5 * h * t;
                nodes.push(x);
                weights.push(0.5 * h * wt * norm * (-0.5 * x * x).exp());
            }
        }
        let mut rule = Self {
            nodes,
            weights,
            degree: 2 * order - 1,
        };
        rule.normalize();
        rule
    }

    /// Default rule for the thermodynamic integrals: 9600 nodes on
    /// `[-12, 12]`, panel width 0.02.
    pub fn standard() -> Self {
        Self::composite_gauss_legendre(12.0, 1200, 8)
    }

    fn normalize(&mut self) {
        let total: f64 = self.weights.iter().sum();
        for w in &mut self.weights {
            *w /= total;
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Polynomial degree integrated exactly (per panel for composite rules).
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `int Dx f(x)`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self::standard()
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf - 1.0) * z * p2 - (jf - 1.0) * p3) / jf;
            }
            dp = nf * (z * p1 - p2) / (z * z - 1.0);
            let step = p1 / dp;
            z -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn check_temperature(t: f64) -> Result<f64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("temperature must be positive and finite, got {t}")));
    }
    Ok(1.0 / t)
}

/// Numerically stable `log(2 cosh y)`.
fn log_2cosh(y: f64) -> f64 {
    let a = y.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// Upper tail of the standard normal, `int_x^inf dz exp(-z^2/2) / sqrt(2 pi)`,
/// as `erfc(x / sqrt 2) / 2`.
pub fn erfcc(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Complementary error function. Below `z = 2` it uses the positive-term
/// series `erf z = 2/sqrt(pi) e^{-z^2} sum 2^n z^{2n+1} / (2n+1)!!`, which has
/// no cancellation; above, the Laplace continued fraction (modified Lentz).
pub fn erfc(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z < 0.0 {
        return 2.0 - erfc(-z);
    }
    let inv_sqrt_pi = 1.0 / PI.sqrt();
    if z < 2.0 {
        let z2 = z * z;
        let mut term = z;
        let mut sum = z;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= 2.0 * z2 / (2.0 * k + 1.0);
            sum += term;
            if term <= 1e-17 * sum {
                break;
            }
        }
        return 1.0 - 2.0 * inv_sqrt_pi * (-z2).exp() * sum;
    }
    // erfc z = e^{-z^2}/sqrt(pi) * 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...))))
    let tiny = 1e-300;
    let mut f = z;
    let mut c = z;
    let mut d = 0.0;
    for k in 1..500 {
        let a = 0.5 * k as f64;
        d = z + a * d;
        d = if d.abs() < tiny { tiny } else { d };
        c = z + a / c;
        c = if c.abs() < tiny { tiny } else { c };
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    inv_sqrt_pi * (-z * z).exp() / f
}

/// Chain log-partition function per bond, `int Dx log 2 cosh(beta (J0 + J x))`.
///
/// This is `-beta F / N`; the internal energy is `-d/d(beta)` of it.
pub fn chain_free_energy_density(t: f64, params: &DisorderParams, rule: &QuadratureRule) -> Result<f64> {
    let beta = check_temperature(t)?;
    let (j0, j) = (params.mean, params.std);
    Ok(rule.integrate(|x| log_2cosh(beta * (j0 + j * x))))
}

/// Chain internal energy per bond,
/// `-J0 int Dx tanh beta(J0 + Jx) - beta J^2 int Dx sech^2 beta(J0 + Jx)`.
///
/// Evaluated in the equivalent form `-int Dx y tanh(beta y)` with
/// `y = J0 + J x` (Gaussian integration by parts on the second term), whose
/// integrand stays bounded as `T -> 0`.
pub fn chain_internal_energy(t: f64, params: &DisorderParams, rule: &QuadratureRule) -> Result<f64> {
    let beta = check_temperature(t)?;
    let (j0, j) = (params.mean, params.std);
    Ok(-rule.integrate(|x| {
        let y = j0 + j * x;
        y * (beta * y).tanh()
    }))
}

/// Ground-state energy per bond of the chain, `-E|J_i|`.
pub fn chain_ground_state_density(params: &DisorderParams) -> Result<f64> {
    params.validate()?;
    let (j0, j) = (params.mean, params.std);
    if j == 0.0 {
        return Ok(-j0.abs());
    }
    let r = j0 / j;
    let mean_abs = j * (2.0 / PI).sqrt() * (-0.5 * r * r).exp() + j0 * (1.0 - 2.0 * erfcc(r));
    Ok(-mean_abs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Weight `lambda` of the new iterate in `x <- (1 - lambda) x + lambda F(x)`.
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-12,
            max_iterations: 100_000,
        }
    }
}

/// Replica-symmetric magnetization and overlap at one temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RsOrderParams {
    pub m: f64,
    pub q: f64,
    pub temperature: f64,
    /// Largest self-consistency defect at the returned point.
    pub residual: f64,
    pub iterations: usize,
}

/// Right-hand sides of the RS equations of state at `(m, q)`.
pub fn rs_map(beta: f64, params: &DisorderParams, rule: &QuadratureRule, m: f64, q: f64) -> (f64, f64) {
    let (j0, j) = (params.mean, params.std);
    let sq = q.max(0.0).sqrt();
    let mut mm = 0.0;
    let mut qq = 0.0;
    for (&z, &w) in rule.nodes().iter().zip(rule.weights()) {
        let th = (beta * (j * z * sq + j0 * m)).tanh();
        mm += w * th;
        qq += w * th * th;
    }
    if j0 == 0.0 {
        mm = 0.0;
    }
    (mm, qq)
}

/// Solves the SK equations of state by damped fixed-point iteration from
/// `(0.5 sign(J0), 0.5)`.
pub fn sk_rs_fixed_point(
    t: f64,
    params: &DisorderParams,
    rule: &QuadratureRule,
    opts: &FixedPointOptions,
) -> Result<RsOrderParams> {
    let m0 = if params.mean == 0.0 { 0.0 } else { 0.5 * params.mean.signum() };
    sk_rs_fixed_point_from(t, params, rule, opts, (m0, 0.5))
}

/// As [`sk_rs_fixed_point`] with an explicit starting point.
pub fn sk_rs_fixed_point_from(
    t: f64,
    params: &DisorderParams,
    rule: &QuadratureRule,
    opts: &FixedPointOptions,
    start: (f64, f64),
) -> Result<RsOrderParams> {
    let beta = check_temperature(t)?;
    params.validate()?;
    let (mut m, mut q) = start;
    if params.mean == 0.0 {
        m = 0.0;
    }
    let lambda = opts.damping;
    let mut residual = f64::INFINITY;
    for it in 0..=opts.max_iterations {
        let (fm, fq) = rs_map(beta, params, rule, m, q);
        residual = (fm - m).abs().max((fq - q).abs());
        if residual <= opts.tolerance {
            return Ok(RsOrderParams {
                m,
                q,
                temperature: t,
                residual,
                iterations: it,
            });
        }
        m = (1.0 - lambda) * m + lambda * fm;
        q = ((1.0 - lambda) * q + lambda * fq).clamp(0.0, 1.0);
    }
    Err(Error::Convergence {
        iterations: opts.max_iterations,
        m,
        q,
        residual,
    })
}

/// `U/N = -(J0/2) m^2 - (beta J^2 / 2)(1 - q^2)`.
pub fn sk_internal_energy_density(t: f64, params: &DisorderParams, rs: &RsOrderParams) -> Result<f64> {
    let beta = check_temperature(t)?;
    if (rs.temperature - t).abs() > 1e-12 * t.max(1.0) {
        return Err(Error::Consistency {
            solved: rs.temperature,
            requested: t,
        });
    }
    let (j0, j) = (params.mean, params.std);
    Ok(-0.5 * j0 * rs.m * rs.m - 0.5 * beta * j * j * (1.0 - rs.q * rs.q))
}

/// Largest nonnegative root of `m = 1 - 2 erfcc((J0/J) m)` with
/// `a = sqrt(2/pi) J0/J`; zero for `a <= 1`.
pub fn sk_zero_temperature_magnetization(a: f64) -> f64 {
    if !(a > 1.0) {
        return 0.0;
    }
    if a.is_infinite() {
        return 1.0;
    }
    let ratio = a * (PI / 2.0).sqrt();
    let g = |m: f64| 1.0 - 2.0 * erfcc(ratio * m) - m;
    let mut lo = 0.5;
    while g(lo) <= 0.0 {
        lo *= 0.5;
        if lo < 1e-300 {
            return 0.0;
        }
    }
    let mut hi = 1.0;
    if g(hi) >= 0.0 {
        return 1.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Zero-temperature SK energy per spin, `-J0 m^2 / 2` with `q = 1`.
pub fn sk_ground_energy_density(params: &DisorderParams) -> Result<f64> {
    params.validate()?;
    let a = if params.std == 0.0 {
        f64::INFINITY
    } else {
        params.ferromagnetic_ratio()
    };
    let m = sk_zero_temperature_magnetization(a.max(0.0));
    Ok(-0.5 * params.mean * m * m)
}

/// Rows `(a, m, -a m^2 / 2, -m^2 / 2)` of the zero-temperature SK curves.
pub fn sk_zero_temperature_curve(a_values: &[f64]) -> Vec<[f64; 4]> {
    a_values
        .iter()
        .map(|&a| {
            let m = sk_zero_temperature_magnetization(a);
            [a, m, -0.5 * a * m * m, -0.5 * m * m]
        })
        .collect()
}

/// Writes a header line and comma-separated rows.
pub fn write_curve<W: Write, const K: usize>(mut w: W, header: [&str; K], rows: &[[f64; K]]) -> Result<()> {
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}
