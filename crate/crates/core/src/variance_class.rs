//! Variance of partial sums by three routes, growth classification and the
//! linear-variance, Tauberian and Karamata checks.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::measures::quad::{integrate_line, QuadratureSpec};
use crate::measures::{
    integrate_with, region_mass, Domain, IntegrateOptions, MomentRule, Region, SpectralMeasure,
    SpectralPoint,
};
use crate::spectral::{fejer_functional, sigma_squared, v_tail, FEJER_DIRECT_MAX};

/// Lags up to this use direct sums inside the kernel route.
const KERNEL_DIRECT_MAX: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VarianceMethod {
    CovarianceSum,
    Kernel,
    Martingale,
    All,
}

/// Value of `var(S_n)` and the per-route values that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialSumVariance {
    pub value: f64,
    pub routes: Vec<(VarianceMethod, f64)>,
}

/// `var(S_n)` for every `n` in `ns` from one moment table, by prefix sums of
/// `n c_0 + 2 sum_{k<n} (n - k) c_k`.
pub fn variance_sequence(measure: &SpectralMeasure, ns: &[u64]) -> Result<Vec<f64>> {
    let n_max = ns.iter().copied().max().unwrap_or(0) as usize;
    let c = MomentRule::new(measure)?.moments(n_max.max(1));
    Ok(variance_from_covariances(&c, ns))
}

/// Same as [`variance_sequence`] for an explicit covariance sequence.
pub fn variance_from_covariances(c: &[f64], ns: &[u64]) -> Vec<f64> {
    // running sums A = sum_{1<=k<n} c_k and B = sum k c_k, compensated
    let mut order: Vec<usize> = (0..ns.len()).collect();
    order.sort_by_key(|&i| ns[i]);
    let mut out = vec![0.0; ns.len()];
    let (mut a, mut ca, mut b, mut cb) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut k = 1u64;
    for &i in &order {
        let n = ns[i];
        while k < n {
            let ck = c[k as usize];
            let y = ck - ca;
            let t = a + y;
            ca = (t - a) - y;
            a = t;
            let y = k as f64 * ck - cb;
            let t = b + y;
            cb = (t - b) - y;
            b = t;
            k += 1;
        }
        let nf = n as f64;
        out[i] = nf * c[0] + 2.0 * (nf * a - b);
    }
    out
}

/// `n + 2 Re sum_{k=1}^{n-1} (n - k) z^k`.
pub fn variance_kernel(p: &SpectralPoint, n: u64) -> f64 {
    let nf = n as f64;
    if p.z.im == 0.0 {
        let t = p.z.re;
        if n <= KERNEL_DIRECT_MAX {
            let mut s = 0.0;
            let mut w = t;
            for k in 1..n {
                s += (n - k) as f64 * w;
                w *= t;
            }
            return nf + 2.0 * s;
        }
        // sum_{k<n} (n-k) t^k = (psi + g E)/g^2 with g = 1 - t, E = 1 - t^n, psi = n g - E
        let g = if t >= 0.0 { p.gap } else { 1.0 - t };
        if g == 0.0 {
            return nf * nf;
        }
        let e = if t >= 0.0 {
            -(nf * (-g).ln_1p()).exp_m1()
        } else {
            1.0 - p.pow(n).re
        };
        let psi = if nf * g < 0.1 {
            // psi = sum_{j>=2} (-1)^j C(n, j) g^j
            let mut term = nf * (nf - 1.0) / 2.0 * g * g;
            let mut s = 0.0f64;
            let mut j = 2.0;
            while term.abs() > 1e-18 * s.abs() && j <= nf {
                s += term;
                term *= -(nf - j) / (j + 1.0) * g;
                j += 1.0;
            }
            s
        } else {
            nf * g - e
        };
        return 2.0 * (psi + g * e) / (g * g) - nf;
    }
    let z = p.z;
    let one = Complex64::new(1.0, 0.0);
    let w = one - z;
    if n <= KERNEL_DIRECT_MAX || nf * w.norm() < 1.0 {
        let mut s = Complex64::new(0.0, 0.0);
        let mut zk = z;
        for k in 1..n {
            s += (n - k) as f64 * zk;
            zk *= z;
        }
        return nf + 2.0 * s.re;
    }
    let zn = p.pow(n);
    let s = (nf * w - z * (one - zn)) / (w * w);
    2.0 * s.re - nf
}

/// `|z|^2 F_n(z) + (1 - |z|^2) sum_{j=1}^n F_j(z)` with `F_j = |sum_{i<j} z^i|^2`.
pub fn martingale_kernel(p: &SpectralPoint, n: u64) -> f64 {
    let abs_sq = (1.0 - p.gap) * (1.0 - p.gap);
    let defect = p.one_minus_abs_sq();
    if p.z.im == 0.0 {
        let t = p.z.re;
        let (mut s, mut w, mut acc) = (0.0, 1.0, 0.0);
        for _ in 0..n {
            s += w;
            w *= t;
            acc += s * s;
        }
        return abs_sq * s * s + defect * acc;
    }
    let mut s = Complex64::new(0.0, 0.0);
    let mut w = Complex64::new(1.0, 0.0);
    let mut acc = 0.0;
    for _ in 0..n {
        s += w;
        w *= p.z;
        acc += s.norm_sqr();
    }
    abs_sq * s.norm_sqr() + defect * acc
}

/// [`variance_kernel`] and [`martingale_kernel`] for every `n` in a sorted
/// grid, one pass of the direct sums up to the largest `n`.
fn kernels_on_grid(p: &SpectralPoint, ns: &[u64]) -> (Vec<f64>, Vec<f64>) {
    let n_max = ns.last().copied().unwrap_or(0);
    if n_max > KERNEL_DIRECT_MAX {
        return (
            ns.iter().map(|&n| variance_kernel(p, n)).collect(),
            ns.iter().map(|&n| martingale_kernel(p, n)).collect(),
        );
    }
    let abs_sq = (1.0 - p.gap) * (1.0 - p.gap);
    let defect = p.one_minus_abs_sq();
    let (mut var, mut mart) = (Vec::with_capacity(ns.len()), Vec::with_capacity(ns.len()));
    // a = sum_{1<=k<j} z^k, b = sum_{1<=k<j} k z^k, s = sum_{0<=k<j} z^k
    let (mut a, mut b) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    let mut s = Complex64::new(0.0, 0.0);
    let mut zk = Complex64::new(1.0, 0.0);
    let mut acc = 0.0;
    let mut next = ns.iter().peekable();
    for j in 1..=n_max {
        if j > 1 {
            a += zk;
            b += (j - 1) as f64 * zk;
        }
        s += zk;
        acc += s.norm_sqr();
        zk *= p.z;
        while next.peek() == Some(&&j) {
            let jf = j as f64;
            var.push(jf + 2.0 * (jf * a - b).re);
            mart.push(abs_sq * s.norm_sqr() + defect * acc);
            next.next();
        }
    }
    (var, mart)
}

// only the variance kernels use these, and they are analytic off the circle
fn quad_opts() -> IntegrateOptions<'static> {
    IntegrateOptions {
        spec: QuadratureSpec::default().with_rel_tol(1e-12),
        guard_factor: None,
        analytic_angle: true,
        ..Default::default()
    }
}

/// Pairwise agreement required by [`VarianceMethod::All`].
pub fn route_tolerance(n: u64) -> f64 {
    if n <= 64 {
        1e-9
    } else {
        1e-7
    }
}

/// `var(S_n)` by the chosen route; `All` runs every route, checks pairwise
/// agreement and returns the covariance-sum value.
pub fn variance_of_partial_sum(
    measure: &SpectralMeasure,
    n: u64,
    method: VarianceMethod,
) -> Result<PartialSumVariance> {
    measure.require_domain(Domain::Disk)?;
    if n == 0 {
        return Err(Error::OutOfRange("partial sums need n >= 1".into()));
    }
    let cov = || -> Result<f64> { Ok(variance_sequence(measure, &[n])?[0]) };
    let ker = || -> Result<f64> {
        integrate_with(
            measure,
            |p: &SpectralPoint| variance_kernel(p, n),
            &quad_opts(),
        )
    };
    let mart = || -> Result<f64> {
        integrate_with(
            measure,
            |p: &SpectralPoint| martingale_kernel(p, n),
            &quad_opts(),
        )
    };
    let routes = match method {
        VarianceMethod::CovarianceSum => vec![(method, cov()?)],
        VarianceMethod::Kernel => vec![(method, ker()?)],
        VarianceMethod::Martingale => vec![(method, mart()?)],
        VarianceMethod::All => {
            let r = vec![
                (VarianceMethod::CovarianceSum, cov()?),
                (VarianceMethod::Kernel, ker()?),
                (VarianceMethod::Martingale, mart()?),
            ];
            check_routes(n, &r, measure.total_mass())?;
            r
        }
    };
    Ok(PartialSumVariance {
        value: routes[0].1,
        routes,
    })
}

fn check_routes(n: u64, r: &[(VarianceMethod, f64)], scale: f64) -> Result<()> {
    let tol = route_tolerance(n);
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            let (a, b) = (r[i].1, r[j].1);
            let den = a.abs().max(b.abs()).max(scale);
            if (a - b).abs() > tol * den {
                return Err(Error::MethodDisagreement {
                    n,
                    detail: format!("{:?} = {a:.17e} vs {:?} = {b:.17e}", r[i].0, r[j].0),
                });
            }
        }
    }
    Ok(())
}

/// All three routes for every `n` in `ns`, one quadrature pass per route.
/// Each kernel is scaled by the covariance-sum value so the shared vector
/// tolerance is relative per entry.
pub fn variance_routes(measure: &SpectralMeasure, ns: &[u64]) -> Result<Vec<PartialSumVariance>> {
    measure.require_domain(Domain::Disk)?;
    if ns.contains(&0) {
        return Err(Error::OutOfRange("partial sums need n >= 1".into()));
    }
    let scale = measure.total_mass();
    let cov = variance_sequence(measure, ns)?;
    let w: Vec<f64> = cov.iter().map(|v| 1.0 / v.abs().max(scale)).collect();
    let mut order: Vec<usize> = (0..ns.len()).collect();
    order.sort_by_key(|&i| ns[i]);
    let sorted: Vec<u64> = order.iter().map(|&i| ns[i]).collect();
    let ws: Vec<f64> = order.iter().map(|&i| w[i]).collect();
    let k = sorted.len();
    // [kernel route ..., martingale route ...] in sorted order
    let v: Vec<f64> = integrate_with(
        measure,
        |p: &SpectralPoint| {
            let (kv, mv) = kernels_on_grid(p, &sorted);
            kv.iter()
                .chain(&mv)
                .zip(ws.iter().chain(&ws))
                .map(|(x, wn)| x * wn)
                .collect()
        },
        &quad_opts(),
    )?;
    let mut ker = vec![0.0; k];
    let mut mart = vec![0.0; k];
    for (pos, &i) in order.iter().enumerate() {
        ker[i] = v[pos] / ws[pos];
        mart[i] = v[k + pos] / ws[pos];
    }
    ns.iter()
        .enumerate()
        .map(|(i, &n)| {
            let routes = vec![
                (VarianceMethod::CovarianceSum, cov[i]),
                (VarianceMethod::Kernel, ker[i]),
                (VarianceMethod::Martingale, mart[i]),
            ];
            check_routes(n, &routes, scale)?;
            Ok(PartialSumVariance {
                value: cov[i],
                routes,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GrowthVerdict {
    Linear { k: f64 },
    Regular { alpha: f64 },
    SlowlyVaryingMultiple,
    Degenerate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    pub alpha_hat: f64,
    /// `(n, var / n^a)` with `a = 1` for linear and slowly varying verdicts
    /// and `a = alpha_hat` otherwise.
    pub h_samples: Vec<(f64, f64)>,
    pub verdict: GrowthVerdict,
    /// Residuals of the log-log fit over the top half of the grid.
    pub residuals: Vec<f64>,
    /// Intercept of local slopes regressed on `1 / ln n`.
    pub alpha_limit: f64,
    /// Extra named scalars (used by the continuous-time classifier).
    pub diagnostics: Vec<(String, f64)>,
}

/// `(slope, intercept)` of the least-squares line.
fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

fn monotone(v: &[f64], increasing: bool) -> bool {
    v.windows(2).all(|w| {
        let slack = 1e-9 * w[0].abs().max(w[1].abs());
        if increasing {
            w[1] >= w[0] - slack
        } else {
            w[1] <= w[0] + slack
        }
    })
}

/// Classify `var(S_n)` samples `(n, var)` on an increasing geometric grid.
/// `scale` is `var(S_1)` or the lag-0 covariance and sets what counts as zero.
pub fn classify_sequence(points: &[(f64, f64)], scale: f64) -> Result<GrowthReport> {
    if points.len() < 4 {
        return Err(Error::OutOfRange(
            "classification needs at least 4 grid points".into(),
        ));
    }
    let top = &points[points.len() / 2..];
    let ratio: Vec<f64> = top.iter().map(|&(n, v)| v / n).collect();
    let positive = top.iter().all(|&(_, v)| v > 0.0);
    let (alpha_hat, residuals) = if positive {
        let xs: Vec<f64> = top.iter().map(|p| p.0.ln()).collect();
        let ys: Vec<f64> = top.iter().map(|p| p.1.ln()).collect();
        let (s, c) = least_squares(&xs, &ys);
        let res = xs.iter().zip(&ys).map(|(x, y)| y - (s * x + c)).collect();
        (s.clamp(0.0, 2.0), res)
    } else {
        (0.0, vec![])
    };
    let alpha_limit = if positive && top.len() >= 3 {
        let mut inv = Vec::new();
        let mut slope = Vec::new();
        for w in top.windows(2) {
            inv.push(1.0 / (w[0].0 * w[1].0).sqrt().ln());
            slope.push((w[1].1 / w[0].1).ln() / (w[1].0 / w[0].0).ln());
        }
        least_squares(&inv, &slope).1
    } else {
        alpha_hat
    };
    let last = *ratio.last().unwrap();
    let r_max = ratio.iter().copied().fold(0.0, f64::max);
    let tiny = 1e-9 * scale.abs().max(f64::MIN_POSITIVE);
    let report = |verdict: GrowthVerdict, a: f64| GrowthReport {
        alpha_hat,
        h_samples: top.iter().map(|&(n, v)| (n, v / n.powf(a))).collect(),
        verdict,
        residuals: residuals.clone(),
        alpha_limit,
        diagnostics: vec![],
    };
    if last <= tiny || (monotone(&ratio, false) && last <= 0.05 * r_max) {
        return Ok(report(GrowthVerdict::Degenerate, 1.0));
    }
    let mean = ratio.iter().sum::<f64>() / ratio.len() as f64;
    let spread = (r_max - ratio.iter().copied().fold(f64::INFINITY, f64::min)) / mean;
    if (0.98..=1.02).contains(&alpha_hat) && spread <= 0.02 {
        return Ok(report(GrowthVerdict::Linear { k: last }, 1.0));
    }
    if monotone(&ratio, true) {
        if (alpha_limit - 1.0).abs() <= 0.05 {
            return Ok(report(GrowthVerdict::SlowlyVaryingMultiple, 1.0));
        }
        return Ok(report(
            GrowthVerdict::Regular { alpha: alpha_hat },
            alpha_hat,
        ));
    }
    if monotone(&ratio, false) {
        return Ok(report(
            GrowthVerdict::Regular { alpha: alpha_hat },
            alpha_hat,
        ));
    }
    Err(Error::Inconclusive(format!(
        "var/n is neither flat nor monotone over the top half of the grid: {ratio:?}"
    )))
}

/// Dyadic grid `2^4, ..., n_max`.
pub fn dyadic_grid(n_max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut n = 16u64;
    while n <= n_max {
        out.push(n);
        n *= 2;
    }
    out
}

/// Growth classification of `var(S_n)` on the dyadic grid up to `n_max >= 2^10`.
pub fn classify_growth(measure: &SpectralMeasure, n_max: u64) -> Result<GrowthReport> {
    if n_max < 1 << 10 {
        return Err(Error::PreconditionFailed(format!(
            "growth classification needs N >= 1024, got {n_max}"
        )));
    }
    let grid = dyadic_grid(n_max);
    let vars = variance_sequence(measure, &grid)?;
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .zip(&vars)
        .map(|(&n, &v)| (n as f64, v))
        .collect();
    classify_sequence(&pts, measure.total_mass())
}

/// Limit of a convergent sequence: the last value once it has settled,
/// otherwise an Aitken step on the last three.
pub fn extrapolate(v: &[f64]) -> f64 {
    let k = v.len();
    if k < 3 {
        return *v.last().unwrap_or(&f64::NAN);
    }
    let (a, b, c) = (v[k - 3], v[k - 2], v[k - 1]);
    if (c - b).abs() <= 1e-9 * c.abs().max(1e-300) {
        return c;
    }
    let den = (c - b) - (b - a);
    if den == 0.0 || (c - b).signum() != (b - a).signum() {
        return c;
    }
    let x = c - (c - b) * (c - b) / den;
    // a jump beyond the observed step signals a non-geometric tail
    if (x - c).abs() > 10.0 * (c - b).abs() {
        c
    } else {
        x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NscVerdict {
    Consistent,
    Inconsistent,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NscReport {
    pub sigma2: f64,
    pub c_wedge: f64,
    pub c_box: f64,
    pub c_hat: f64,
    pub k_pred: f64,
    pub k_obs: f64,
    pub k_tolerance: f64,
    pub verdict: NscVerdict,
}

/// Extrapolated `lim nu(U_x)/x` over `x = 2^-k`, `k = 4..=20`.
pub fn wedge_constant(measure: &SpectralMeasure) -> Result<f64> {
    let v = (4..=20)
        .map(|k| {
            let x = (-(k as f64)).exp2();
            Ok(region_mass(measure, Region::WedgeU(x))? / x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(extrapolate(&v))
}

/// Extrapolated `lim n nu(D_n)` over `n = 2^k`, `k = 4..=20`.
pub fn box_constant(measure: &SpectralMeasure) -> Result<f64> {
    let v = (4..=20)
        .map(|k| {
            let n = (k as f64).exp2();
            Ok(n * region_mass(measure, Region::BoxD(n))?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(extrapolate(&v))
}

/// Linear-variance check: `K = sigma^2 + pi C` against `var(S_N)/N`.
pub fn check_nsc(measure: &SpectralMeasure, n: u64) -> Result<NscReport> {
    measure.require_domain(Domain::Disk)?;
    if n < 1 << 14 {
        return Err(Error::PreconditionFailed(format!(
            "NSC check needs N >= 16384, got {n}"
        )));
    }
    let sigma2 = sigma_squared(measure)?;
    if !sigma2.is_finite() {
        return Err(Error::SigmaInfinite);
    }
    let c_wedge = wedge_constant(measure)?;
    let c_box = box_constant(measure)?;
    let c_hat = 0.5 * (c_wedge + c_box);
    let zero = 1e-9 * measure.total_mass();
    let agree = (c_wedge - c_box).abs() <= 0.05 * c_wedge.max(c_box) || c_wedge.max(c_box) <= zero;
    let k_pred = sigma2 + PI * c_hat;
    let vars = variance_sequence(measure, &[n / 2, n])?;
    let k_obs = vars[1] / n as f64;
    let k_half = vars[0] / (n / 2) as f64;
    let k_tolerance = (0.02 * k_pred).max((k_obs - k_half).abs());
    let verdict = if !agree {
        NscVerdict::Inconclusive
    } else if (k_pred - k_obs).abs() <= k_tolerance {
        NscVerdict::Consistent
    } else {
        NscVerdict::Inconsistent
    };
    Ok(NscReport {
        sigma2,
        c_wedge,
        c_box,
        c_hat,
        k_pred,
        k_obs,
        k_tolerance,
        verdict,
    })
}

/// `C(alpha) = Gamma(1 + alpha) sin(alpha pi / 2) / (pi (2 - alpha))`, `alpha` in `(0, 2)`.
pub fn big_c(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(Error::OutOfRange(format!(
            "C(alpha) needs 0 < alpha < 2, got {alpha}"
        )));
    }
    Ok(gamma(1.0 + alpha) * (alpha * PI / 2.0).sin() / (PI * (2.0 - alpha)))
}

/// `c_alpha = alpha (2 - alpha) / (2 Gamma(3 - alpha))`, `alpha` in `[1, 2)`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    if !(1.0..2.0).contains(&alpha) {
        return Err(Error::OutOfRange(format!(
            "c_alpha needs 1 <= alpha < 2, got {alpha}"
        )));
    }
    Ok(alpha * (2.0 - alpha) / (2.0 * gamma(3.0 - alpha)))
}

/// `d_alpha = alpha (alpha - 1) / (2 Gamma(3 - alpha))`, `alpha` in `(1, 2)`.
pub fn d_alpha(alpha: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::OutOfRange(format!(
            "d_alpha needs 1 < alpha < 2, got {alpha}"
        )));
    }
    Ok(alpha * (alpha - 1.0) / (2.0 * gamma(3.0 - alpha)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauberianConstants {
    pub alpha: f64,
    pub big_c: f64,
    pub c_alpha: Option<f64>,
    pub d_alpha: Option<f64>,
}

/// Every constant defined at `alpha`; `OutOfRange` when none is.
pub fn growth_constants(alpha: f64) -> Result<TauberianConstants> {
    Ok(TauberianConstants {
        alpha,
        big_c: big_c(alpha)?,
        c_alpha: c_alpha(alpha).ok(),
        d_alpha: d_alpha(alpha).ok(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauberianReport {
    pub alpha: f64,
    /// `(x, V(x) / (c_alpha x^{1-alpha} h(1/x)))`
    pub v_ratio: Vec<(f64, f64)>,
    /// `(x, nu(1-x, 1] / (d_alpha x^{2-alpha} h(1/x)))`, only for `alpha > 1`.
    pub tail_ratio: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Matches `V(x)` and `nu(1-x, 1]` against the variance side on `x = 1/n`.
pub fn tauberian_reversible(
    measure: &SpectralMeasure,
    alpha: f64,
    x_grid: &[f64],
) -> Result<TauberianReport> {
    measure.require_domain(Domain::Disk)?;
    if !measure.is_reversible() {
        return Err(Error::DomainMismatch {
            expected: "real support",
            found: "non-real support",
        });
    }
    let ca = c_alpha(alpha)?;
    // var/n unbounded needs sigma^2 = inf (the wedge carries no real mass)
    if sigma_squared(measure)?.is_finite() {
        return Err(Error::PreconditionFailed(
            "var(S_n)/n stays bounded (sigma^2 < inf)".into(),
        ));
    }
    if x_grid.is_empty() {
        return Err(Error::OutOfRange("empty x grid".into()));
    }
    let ns: Vec<u64> = x_grid
        .iter()
        .map(|&x| (1.0 / x).round().max(1.0) as u64)
        .collect();
    let vars = variance_sequence(measure, &ns)?;
    let da = if alpha > 1.0 {
        Some(d_alpha(alpha)?)
    } else {
        None
    };
    let mut v_ratio = Vec::new();
    let mut tail_ratio = Vec::new();
    for ((&n, &var), &x0) in ns.iter().zip(&vars).zip(x_grid) {
        let nf = n as f64;
        let x = 1.0 / nf;
        let h = var / nf.powf(alpha);
        let v = v_tail(measure, x)?;
        v_ratio.push((x0, v / (ca * x.powf(1.0 - alpha) * h)));
        if let Some(d) = da {
            let tail = region_mass(measure, Region::TopTail(x))?;
            tail_ratio.push((x0, tail / (d * x.powf(2.0 - alpha) * h)));
        }
    }
    let finest = |r: &[(f64, f64)]| {
        r.iter()
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|p| (p.1 - 1.0).abs() <= 0.1)
            .unwrap_or(true)
    };
    let pass = finest(&v_ratio) && finest(&tail_ratio);
    Ok(TauberianReport {
        alpha,
        v_ratio,
        tail_ratio,
        pass,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailOscillation {
    /// `(y_k, nu(1 - y_k, 1]/y_k)` at `y_k = e^{-2 pi k}`.
    pub troughs: Vec<(f64, f64)>,
    /// Same at `z_k = e^{pi/2 - 2 pi k}`.
    pub peaks: Vec<(f64, f64)>,
    /// Largest over smallest ratio across both subsequences.
    pub peak_to_trough: f64,
    /// Largest over smallest ratio on a dense log grid over the same range.
    pub dense_peak_to_trough: f64,
}

/// `nu(1 - y, 1]/y` along the two subsequences `k = 1..=k_max`.
pub fn tail_oscillation(measure: &SpectralMeasure, k_max: u32) -> Result<TailOscillation> {
    measure.require_domain(Domain::Disk)?;
    if k_max == 0 {
        return Err(Error::OutOfRange("need k_max >= 1".into()));
    }
    let ratio = |y: f64| -> Result<f64> { Ok(region_mass(measure, Region::TopTail(y))? / y) };
    let two_pi = 2.0 * PI;
    let mut troughs = Vec::new();
    let mut peaks = Vec::new();
    for k in 1..=k_max {
        let y = (-two_pi * k as f64).exp();
        let z = (PI / 2.0 - two_pi * k as f64).exp();
        troughs.push((y, ratio(y)?));
        peaks.push((z, ratio(z)?));
    }
    let all: Vec<f64> = troughs.iter().chain(&peaks).map(|p| p.1).collect();
    let spread = |v: &[f64]| {
        v.iter().copied().fold(f64::MIN, f64::max) / v.iter().copied().fold(f64::MAX, f64::min)
    };
    let lo = -two_pi * k_max as f64;
    let hi = PI / 2.0 - two_pi;
    let dense = (0..=400)
        .map(|i| ratio((lo + (hi - lo) * i as f64 / 400.0).exp()))
        .collect::<Result<Vec<_>>>()?;
    Ok(TailOscillation {
        peak_to_trough: spread(&all),
        dense_peak_to_trough: spread(&dense),
        troughs,
        peaks,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CunyLinBounds {
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
    pub holds: bool,
}

/// `n nu(D_n)/36 <= M_n/n <= (4/n) sum_{j<n} j nu(D_j)`, reported rather than asserted.
pub fn cuny_lin_bounds(measure: &SpectralMeasure, n: u64) -> Result<CunyLinBounds> {
    measure.require_domain(Domain::Disk)?;
    if n == 0 {
        return Err(Error::OutOfRange("n must be >= 1".into()));
    }
    let nf = n as f64;
    let lower = nf * region_mass(measure, Region::BoxD(nf))? / 36.0;
    let (_, m) = fejer_functional(measure, n)?;
    let middle = m / nf;
    let mut s = 0.0;
    for j in 1..n {
        s += j as f64 * region_mass(measure, Region::BoxD(j as f64))?;
    }
    let upper = 4.0 * s / nf;
    Ok(CunyLinBounds {
        lower,
        middle,
        upper,
        holds: lower <= middle && middle <= upper,
    })
}

/// `U(x) = coef x^rho` with `L` constant, `rho > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerTransformPair {
    pub coef: f64,
    pub rho: f64,
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KaramataKind {
    /// Laplace-Stieltjes transform against `U`.
    Laplace,
    /// Monotone density `u = U'`.
    Density,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KaramataReport {
    pub kind: KaramataKind,
    /// `(x, w(x) / (x^{-rho} L))` at large `x`.
    pub transform_ratio: Vec<(f64, f64)>,
    /// `(y, U(y) / (y^rho L / Gamma(rho + 1)))` at small `y = 1/x`.
    pub function_ratio: Vec<(f64, f64)>,
    /// `(x, u(x) / (rho x^{rho-1} L))`.
    pub density_ratio: Vec<(f64, f64)>,
    pub pass: bool,
}

impl PowerTransformPair {
    pub fn value(&self, x: f64) -> f64 {
        self.coef * x.powf(self.rho)
    }

    /// `w(s) = int e^{-s u} dU(u)` by quadrature in `v = s u`.
    pub fn laplace(&self, s: f64) -> Result<f64> {
        let (c, r) = (self.coef, self.rho);
        // dU = c r u^{r-1} du; with u = v/s the integrand is c r (v/s)^{r-1} e^{-v} / s
        integrate_line(
            |n| Ok(c * r * (n.x / s).powf(r - 1.0) * (-n.x).exp() / s),
            0.0,
            80.0,
            r < 1.0,
            false,
            &QuadratureSpec::default(),
            None,
        )
    }
}

/// Ratio profiles for the Karamata pair on `grid` (large `x` values).
pub fn karamata_check(
    pair: &PowerTransformPair,
    kind: KaramataKind,
    grid: &[f64],
) -> Result<KaramataReport> {
    if !(pair.rho > 0.0 && pair.coef > 0.0 && pair.l > 0.0) {
        return Err(Error::OutOfRange(
            "Karamata pair needs rho, coef, L > 0".into(),
        ));
    }
    let mut transform_ratio = Vec::new();
    let mut function_ratio = Vec::new();
    let mut density_ratio = Vec::new();
    let g = gamma(pair.rho + 1.0);
    for &x in grid {
        match kind {
            KaramataKind::Laplace => {
                let w = pair.laplace(x)?;
                transform_ratio.push((x, w / (x.powf(-pair.rho) * pair.l)));
                let y = 1.0 / x;
                function_ratio.push((y, pair.value(y) / (y.powf(pair.rho) * pair.l / g)));
            }
            KaramataKind::Density => {
                let h = 1e-5 * x;
                let u = (pair.value(x + h) - pair.value(x - h)) / (2.0 * h);
                density_ratio.push((x, u / (pair.rho * x.powf(pair.rho - 1.0) * pair.l)));
            }
        }
    }
    let last_ok = |r: &[(f64, f64)]| r.last().map(|p| (p.1 - 1.0).abs() <= 0.05).unwrap_or(true);
    let pass = last_ok(&transform_ratio) && last_ok(&function_ratio) && last_ok(&density_ratio);
    Ok(KaramataReport {
        kind,
        transform_ratio,
        function_ratio,
        density_ratio,
        pass,
    })
}

/// `var(S_n)/n - I_n`, which tends to `sigma^2` when the linear limit exists.
pub fn martingale_excess(measure: &SpectralMeasure, n: u64) -> Result<f64> {
    let var = variance_sequence(measure, &[n])?[0];
    let (i_n, _) = fejer_functional(measure, n)?;
    Ok(var / n as f64 - i_n)
}

// keep the public direct-sum threshold of the Fejer kernel in sync
const _: () = assert!(FEJER_DIRECT_MAX == KERNEL_DIRECT_MAX);
