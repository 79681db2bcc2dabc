//! Metropolis-Hastings chain with kernel `Q(x, .) = |x| delta_x + (1 - |x|) upsilon`
//! and observable `sgn`: construction, regenerative simulation and CLT experiments.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::quad::QuadratureSpec;
use crate::measures::{
    integrate_with, region_mass, IntegrateOptions, IntervalFamily, LineTable, MeasureComponent,
    Region, SpectralMeasure, SpectralPoint,
};
use crate::rng::stream_rng;
use crate::spectral::{sigma_squared, v_tail};
use crate::stats::{ks_statistic, mean_var, normal_cdf};
use crate::variance_class::{variance_of_partial_sum, VarianceMethod};

/// Sites this close to `+-1` are clamped so the holding time stays finite.
const MIN_GAP: f64 = 1e-15;

/// Symmetric proposal law on `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum UpsilonFamily {
    /// Density `1 - |x|`.
    Triangular,
    /// Density `1/2`; `theta = inf`.
    Uniform,
    /// Invariant law `(1 + a sin ln(1-|x|) + a cos ln(1-|x|))/2`.
    DefNiu { a: f64 },
    /// Spectral measure with `V(x) = (e^{sqrt(ln 1/x)} - 1)/M`.
    ExpSqrtLog,
    /// Density proportional to `(1 - |x|)^k`.
    Power { k: f64 },
}

impl UpsilonFamily {
    /// Family of `nu = 2 mu` on `[0, 1]`, or `ThetaInfinite`.
    pub fn nu_family(&self) -> Result<IntervalFamily> {
        match *self {
            UpsilonFamily::Triangular => Ok(IntervalFamily::Uniform { a: 0.0, b: 1.0 }),
            UpsilonFamily::Uniform => Err(Error::ThetaInfinite),
            UpsilonFamily::DefNiu { a } => Ok(IntervalFamily::DefNiu { a }),
            UpsilonFamily::ExpSqrtLog => Ok(IntervalFamily::ExpSqrtLog),
            UpsilonFamily::Power { k } if k > 0.0 && k.is_finite() => {
                Ok(IntervalFamily::PowerLaw { gamma: 1.0 - k })
            }
            UpsilonFamily::Power { k } if k <= 0.0 => Err(Error::ThetaInfinite),
            UpsilonFamily::Power { k } => Err(Error::InvalidMeasure(format!(
                "power exponent k = {k} must be finite"
            ))),
        }
    }
}

/// The chain with its derived objects.
#[derive(Debug, Clone)]
pub struct ChainModel {
    pub family: UpsilonFamily,
    pub theta: f64,
    /// Spectral measure of `sgn`: `2 mu` restricted to `[0, 1]`.
    pub nu: SpectralMeasure,
    nu_family: IntervalFamily,
    /// `|site|` law in the gap variable `g = 1 - |x|`: weight `g nu(dg)`.
    upsilon_table: LineTable,
    /// `|xi_0|` law under `mu`, in the gap variable.
    mu_table: LineTable,
}

/// `(t, gap)` at a table node on `g in [0, 1]`.
fn node_point(from_lo: f64, from_hi: f64) -> (f64, f64) {
    let t = if from_hi < from_lo {
        from_hi
    } else {
        1.0 - from_lo
    };
    (t, from_lo)
}

fn quad_opts() -> IntegrateOptions<'static> {
    IntegrateOptions {
        spec: QuadratureSpec::default().with_rel_tol(1e-11),
        guard_factor: None,
        ..Default::default()
    }
}

/// `phi(w) = (2 - 2e^{-w}(1 + w) - w^2 e^{-w}) / w^2`, so that
/// `2 int_0^u s e^{-ls} ds - u^2 e^{-lu} = u^2 phi(lu)`.
pub fn phi(w: f64) -> f64 {
    if w == f64::INFINITY {
        return 0.0;
    }
    if w < 0.5 {
        // sum_{k>=3} (-1)^k (k-1)(2-k) w^{k-2} / k!
        let mut s = 0.0;
        let mut fact = 2.0;
        let mut wp = 1.0;
        for k in 3..40 {
            let kf = k as f64;
            fact *= kf;
            wp *= w;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * (kf - 1.0) * (2.0 - kf) * wp / fact;
        }
        return s;
    }
    let e = (-w).exp();
    (2.0 - 2.0 * e * (1.0 + w) - w * w * e) / (w * w)
}

/// `P(tau_1 > u)` and `H(u) = E[tau_1^2 1(tau_1 <= u)]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoldingTail {
    pub tail: f64,
    pub h: f64,
}

/// One regeneration block: the site drawn from `upsilon` and its holding time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegenerationBlock {
    pub tau: u64,
    pub site: f64,
}

impl RegenerationBlock {
    /// `Y = tau sgn(site)`.
    pub fn contribution(&self) -> f64 {
        self.tau as f64 * sgn(self.site)
    }
}

fn sgn(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Geometric holding time with `P(tau > k) = (1 - g)^k` by inversion.
pub fn holding_time<R: Rng + ?Sized>(gap: f64, rng: &mut R) -> u64 {
    if gap >= 1.0 {
        return 1;
    }
    let g = gap.max(MIN_GAP);
    let u: f64 = 1.0 - rng.gen::<f64>();
    let tau = (u.ln() / (-g).ln_1p()).ceil();
    if tau < 1.0 {
        1
    } else {
        tau as u64
    }
}

/// Histogram of visited states and the chain partial sum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathResult {
    pub s_n: i64,
    /// Counts over equal bins of `[-1, 1]`.
    pub histogram: Vec<u64>,
}

pub const PATH_BINS: usize = 20;

impl ChainModel {
    pub fn build(family: UpsilonFamily) -> Result<Self> {
        let nu_family = family.nu_family()?;
        nu_family.validate()?;
        let nu = SpectralMeasure::disk(vec![MeasureComponent::interval(nu_family, 1.0)])?;
        let inv_theta: f64 = integrate_with(&nu, |p: &SpectralPoint| p.gap, &quad_opts())?;
        if !(inv_theta > 0.0) {
            return Err(Error::ThetaInfinite);
        }
        let theta = 1.0 / inv_theta;
        let singular_t0 = nu_family.singular_lo();
        let upsilon_table = LineTable::build(0.0, 1.0, true, singular_t0, |n| {
            let (t, g) = node_point(n.from_lo, n.from_hi);
            g * nu_family.density(t, g)
        })?;
        let mu_table = LineTable::build(0.0, 1.0, true, singular_t0, |n| {
            let (t, g) = node_point(n.from_lo, n.from_hi);
            nu_family.density(t, g)
        })?;
        Ok(ChainModel {
            family,
            theta,
            nu,
            nu_family,
            upsilon_table,
            mu_table,
        })
    }

    /// Density of `upsilon` at `x`.
    pub fn upsilon_density(&self, x: f64) -> f64 {
        let g = 1.0 - x.abs();
        0.5 * self.theta * g * self.nu_family.density(x.abs(), g)
    }

    /// Density of the invariant law `mu` at `x`.
    pub fn mu_density(&self, x: f64) -> f64 {
        0.5 * self.nu_family.density(x.abs(), 1.0 - x.abs())
    }

    /// `mu` mass of the equal bins of `[-1, 1]`.
    pub fn mu_bin_probs(&self, bins: usize) -> Result<Vec<f64>> {
        (0..bins)
            .map(|i| {
                let a = -1.0 + 2.0 * i as f64 / bins as f64;
                let b = -1.0 + 2.0 * (i + 1) as f64 / bins as f64;
                // |x| in [lo, hi], half the nu mass
                let (lo, hi) = if b <= 0.0 { (-b, -a) } else { (a, b) };
                let m = if lo <= 0.0 {
                    1.0 - region_mass(&self.nu, Region::Interval(hi, 1.0))?
                } else {
                    region_mass(&self.nu, Region::Interval(lo, hi))?
                };
                Ok(0.5 * m)
            })
            .collect()
    }

    /// Site drawn from `upsilon`, returned as `(x, gap)`.
    pub fn sample_site<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let n = self.upsilon_table.sample(rng);
        let (t, g) = node_point(n.from_lo, n.from_hi);
        let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        (s * t, g)
    }

    /// State drawn from `mu`, returned as `(x, gap)`.
    pub fn sample_stationary<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let n = self.mu_table.sample(rng);
        let (t, g) = node_point(n.from_lo, n.from_hi);
        let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        (s * t, g)
    }

    /// `P(tau_1 > u)` and `H(u)`, both by quadrature over `upsilon`.
    pub fn holding_tail(&self, u: f64) -> Result<HoldingTail> {
        if !(u >= 0.0) {
            return Err(Error::OutOfRange(format!(
                "holding tail needs u >= 0, got {u}"
            )));
        }
        if u == 0.0 {
            return Ok(HoldingTail { tail: 1.0, h: 0.0 });
        }
        let th = self.theta;
        let tail: f64 = integrate_with(
            &self.nu,
            |p: &SpectralPoint| th * p.gap * p.modulus_pow(u),
            &quad_opts(),
        )?;
        let h: f64 = integrate_with(
            &self.nu,
            |p: &SpectralPoint| {
                let lambda = -(-p.gap).ln_1p();
                th * p.gap * u * u * phi(lambda * u)
            },
            &quad_opts(),
        )?;
        Ok(HoldingTail { tail, h })
    }

    pub fn h(&self, u: f64) -> Result<f64> {
        Ok(self.holding_tail(u)?.h)
    }

    /// `m` i.i.d. regeneration blocks.
    pub fn simulate_blocks(&self, m: usize, seed: u64) -> Vec<RegenerationBlock> {
        let mut rng = stream_rng(seed, 0);
        (0..m)
            .map(|_| {
                let (site, g) = self.sample_site(&mut rng);
                RegenerationBlock {
                    tau: holding_time(g, &mut rng),
                    site,
                }
            })
            .collect()
    }

    /// Step-by-step stationary trajectory of `n` steps.
    pub fn simulate_path(&self, n: u64, seed: u64) -> PathResult {
        let mut rng = stream_rng(seed, 0);
        let (mut x, mut g) = self.sample_stationary(&mut rng);
        let mut s = 0i64;
        let mut hist = vec![0u64; PATH_BINS];
        for _ in 0..n {
            let bin = (((x + 1.0) / 2.0 * PATH_BINS as f64) as usize).min(PATH_BINS - 1);
            hist[bin] += 1;
            s += sgn(x) as i64;
            // stay with probability |x|
            if rng.gen::<f64>() >= 1.0 - g {
                let (nx, ng) = self.sample_site(&mut rng);
                x = nx;
                g = ng;
            }
        }
        PathResult {
            s_n: s,
            histogram: hist,
        }
    }

    /// `S_n` built from i.i.d. blocks truncated at `n`, starting at a
    /// regeneration (the stationary boundary block is dropped).
    pub fn block_sum<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> i64 {
        let mut left = n;
        let mut s = 0i64;
        while left > 0 {
            let (x, g) = self.sample_site(rng);
            let tau = holding_time(g, rng).min(left);
            s += tau as i64 * sgn(x) as i64;
            left -= tau;
        }
        s
    }

    /// `S_n` of the stationary chain built from blocks: the initial state and
    /// its residual holding time, then i.i.d. blocks truncated at `n`.
    pub fn stationary_sum<R: Rng + ?Sized>(&self, n: u64, rng: &mut R) -> i64 {
        let (x0, g0) = self.sample_stationary(rng);
        let mut left = n;
        let first = holding_time(g0, rng).min(left);
        let mut s = first as i64 * sgn(x0) as i64;
        left -= first;
        while left > 0 {
            let (x, g) = self.sample_site(rng);
            let tau = holding_time(g, rng).min(left);
            s += tau as i64 * sgn(x) as i64;
            left -= tau;
        }
        s
    }

    /// `var(S_n)` from the spectral measure.
    pub fn variance(&self, n: u64) -> Result<f64> {
        let method = if n <= 1 << 16 {
            VarianceMethod::CovarianceSum
        } else {
            VarianceMethod::Kernel
        };
        Ok(variance_of_partial_sum(&self.nu, n, method)?.value)
    }
}

/// Solve `b^2 = n H(b)` by bisection on `b -> n H(b)/b^2` over
/// `[1, 10 sqrt(n H(n))]`, relative tolerance `1e-6`.
pub fn solve_bn_with<H>(h: H, n: u64) -> Result<f64>
where
    H: Fn(f64) -> Result<f64>,
{
    if n == 0 {
        return Err(Error::OutOfRange("b_n needs n >= 1".into()));
    }
    let nf = n as f64;
    let f = |b: f64| -> Result<f64> { Ok(nf * h(b)? / (b * b) - 1.0) };
    let mut lo = 1.0;
    let mut hi = 10.0 * (nf * h(nf)?).sqrt();
    let (flo, fhi) = (f(lo)?, f(hi)?);
    if !(hi > lo) || flo < 0.0 || fhi > 0.0 {
        return Err(Error::BracketFailure { lo, hi });
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn solve_bn(model: &ChainModel, n: u64) -> Result<f64> {
    solve_bn_with(|u| model.h(u), n)
}

/// Normalization `b_m` used by the CLT experiment: the closed form for the
/// exp-sqrt-log model, the solved fixed point otherwise.
pub fn clt_normalization(model: &ChainModel, m: u64) -> Result<f64> {
    match model.family {
        UpsilonFamily::ExpSqrtLog => Ok(exp_sqrt_log_bn(model.theta, m as f64)),
        _ => solve_bn(model, m),
    }
}

/// `[2 n theta exp(sqrt(ln(n) / 2))]^{1/2}`, the closed-form normalization for
/// the exp-sqrt-log model.
pub fn exp_sqrt_log_bn(theta: f64, n: f64) -> f64 {
    (2.0 * n * theta * (0.5 * n.ln()).sqrt().exp()).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CltReport {
    pub n: u64,
    pub replications: usize,
    pub seed: u64,
    /// `b_{floor(n/theta)}`.
    pub b: f64,
    pub ks: f64,
    pub mean: f64,
    pub variance: f64,
    /// `var(S_n)` from the spectral measure.
    pub spectral_variance: f64,
    /// `b^2 / var(S_n)`.
    pub b2_over_var: f64,
    /// `S_n` per replication, in replication order.
    pub sums: Vec<i64>,
}

/// `replications` block-built stationary sums of length `n`, normalized by
/// `b_{floor(n/theta)}` from [`clt_normalization`]; replication `r` uses stream `r` of `seed`.
///
/// The initial residual block is kept: with heavy holding times it is not
/// negligible, and dropping it biases the empirical variance low.
pub fn clt_experiment(
    model: &ChainModel,
    n: u64,
    replications: usize,
    seed: u64,
) -> Result<CltReport> {
    if replications < 100 {
        return Err(Error::OutOfRange(format!(
            "CLT experiment needs >= 100 replications, got {replications}"
        )));
    }
    let m = ((n as f64 / model.theta).floor() as u64).max(1);
    let b = clt_normalization(model, m)?;
    let sums: Vec<i64> = (0..replications as u64)
        .into_par_iter()
        .map(|r| model.stationary_sum(n, &mut stream_rng(seed, r)))
        .collect();
    let z: Vec<f64> = sums.iter().map(|&s| s as f64 / b).collect();
    let ks = ks_statistic(&z, normal_cdf);
    let (mean, variance) = mean_var(&z);
    let spectral_variance = model.variance(n)?;
    Ok(CltReport {
        n,
        replications,
        seed,
        b,
        ks,
        mean,
        variance,
        spectral_variance,
        b2_over_var: b * b / spectral_variance,
        sums,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaAuxReport {
    /// `(x, H(1/x) / (2 theta V(x)))`
    pub ratios: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Profile of `H(1/x) / (2 theta V(x))`; passes when the finest point is
/// within 5% of 1. Needs `V(x) -> inf`.
pub fn lemma_aux_check(model: &ChainModel, x_grid: &[f64]) -> Result<LemmaAuxReport> {
    if sigma_squared(&model.nu)?.is_finite() {
        return Err(Error::PreconditionFailed(
            "V(x) stays bounded as x -> 0 for this model".into(),
        ));
    }
    if x_grid.is_empty() {
        return Err(Error::OutOfRange("empty x grid".into()));
    }
    let ratios = x_grid
        .iter()
        .map(|&x| {
            let h = model.h(1.0 / x)?;
            let v = v_tail(&model.nu, x)?;
            Ok((x, h / (2.0 * model.theta * v)))
        })
        .collect::<Result<Vec<_>>>()?;
    let finest = ratios
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|p| (p.1 - 1.0).abs() <= 0.05)
        .unwrap_or(false);
    Ok(LemmaAuxReport {
        ratios,
        pass: finest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::covariance;
    use approx::assert_relative_eq;

    fn tri() -> ChainModel {
        ChainModel::build(UpsilonFamily::Triangular).unwrap()
    }

    #[test]
    fn triangular_model() {
        let m = tri();
        assert_relative_eq!(m.theta, 2.0, max_relative = 1e-12);
        assert_relative_eq!(m.upsilon_density(0.3), 0.7, max_relative = 1e-12);
        assert_relative_eq!(m.mu_density(-0.9), 0.5, max_relative = 1e-12);
        for p in m.mu_bin_probs(10).unwrap() {
            assert_relative_eq!(p, 0.1, max_relative = 1e-10);
        }
        assert!(matches!(
            ChainModel::build(UpsilonFamily::Uniform),
            Err(Error::ThetaInfinite)
        ));
    }

    #[test]
    fn def_niu_invariant_law() {
        let a = 0.25;
        let m = ChainModel::build(UpsilonFamily::DefNiu { a }).unwrap();
        for &x in &[-0.99, -0.2, 0.0, 0.5, 0.999] {
            let l = (1.0f64 - f64::abs(x)).ln();
            let want = 0.5 * (1.0 + a * l.sin() + a * l.cos());
            assert_relative_eq!(m.mu_density(x), want, max_relative = 1e-12);
        }
        // upsilon is a probability law
        let mass: f64 =
            integrate_with(&m.nu, |p: &SpectralPoint| m.theta * p.gap, &quad_opts()).unwrap();
        assert_relative_eq!(mass, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn phi_branches_agree() {
        for &w in &[0.49f64, 0.5, 0.51] {
            let e = (-w).exp();
            let direct = (2.0 - 2.0 * e * (1.0 + w) - w * w * e) / (w * w);
            assert_relative_eq!(phi(w), direct, max_relative = 1e-9);
        }
        assert_relative_eq!(phi(1e-6), 1e-6 / 3.0, max_relative = 1e-5);
        assert_relative_eq!(phi(1e4), 2e-8, max_relative = 1e-9);
        assert_eq!(phi(f64::INFINITY), 0.0);
    }

    #[test]
    fn holding_tail_examples() {
        let m = tri();
        assert_eq!(m.holding_tail(0.0).unwrap().tail, 1.0);
        for &u in &[1.0, 4.0, 16.0, 1000.0] {
            let t = m.holding_tail(u).unwrap().tail;
            assert_relative_eq!(t, 2.0 / ((u + 1.0) * (u + 2.0)), max_relative = 1e-9);
        }
        // H from its definition: 2 int_0^u s P(tau > s) ds - u^2 P(tau > u)
        let u = 50.0;
        let integral: f64 = (0..50_000)
            .map(|i| {
                let s = (i as f64 + 0.5) * u / 50_000.0;
                2.0 * s * 2.0 / ((s + 1.0) * (s + 2.0)) * u / 50_000.0
            })
            .sum();
        let want = integral - u * u * 2.0 / ((u + 1.0) * (u + 2.0));
        assert_relative_eq!(m.h(u).unwrap(), want, max_relative = 1e-6);
    }

    #[test]
    fn bn_examples() {
        let b = solve_bn_with(|_| Ok(3.0), 400).unwrap();
        assert_relative_eq!(b, (1200.0f64).sqrt(), max_relative = 1e-6);
        let m = tri();
        let n = 1_000_000u64;
        let b = solve_bn(&m, n).unwrap();
        let r = b * b / (2.0 * n as f64 * (n as f64).ln());
        assert!((r - 1.0).abs() < 0.1, "{r}");
        assert!(matches!(
            solve_bn_with(|u| Ok(u * u), 10),
            Err(Error::BracketFailure { .. })
        ));
    }

    #[test]
    fn blocks_are_deterministic() {
        let m = tri();
        let a = m.simulate_blocks(1000, 7);
        assert_eq!(a, m.simulate_blocks(1000, 7));
        assert_ne!(a, m.simulate_blocks(1000, 8));
        assert!(a.iter().all(|b| b.tau >= 1 && b.site.abs() <= 1.0));
        let mut rng = stream_rng(1, 1);
        assert!((0..100).all(|_| holding_time(1.0, &mut rng) == 1));
    }

    #[test]
    fn covariance_is_moment_of_mu() {
        let m = ChainModel::build(UpsilonFamily::DefNiu { a: 0.25 }).unwrap();
        let mu = SpectralMeasure::disk(vec![MeasureComponent::interval(
            IntervalFamily::DefNiu { a: 0.25 },
            0.5,
        )])
        .unwrap();
        for n in [1u64, 2, 7, 30] {
            // both halves of mu contribute |x|^n
            let half: f64 =
                integrate_with(&mu, |p: &SpectralPoint| p.pow(n).re, &quad_opts()).unwrap();
            assert_relative_eq!(
                covariance(&m.nu, n).unwrap(),
                2.0 * half,
                max_relative = 1e-10
            );
        }
        assert_eq!(
            region_mass(&m.nu, Region::Interval(-1.0, 0.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn lemma_precondition() {
        let m = ChainModel::build(UpsilonFamily::Power { k: 2.0 }).unwrap();
        assert!(matches!(
            lemma_aux_check(&m, &[1e-3]),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn small_clt_is_reproducible() {
        let m = tri();
        let a = clt_experiment(&m, 2000, 200, 11).unwrap();
        let b = clt_experiment(&m, 2000, 200, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.ks >= 0.0 && a.ks <= 1.0);
        assert!(clt_experiment(&m, 2000, 50, 11).is_err());
    }
}
