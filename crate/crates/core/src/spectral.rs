//! Discrete-time spectral functionals of a disk measure.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measures::family::RadialDensity;
use crate::measures::integrate::integrate_family;
use crate::measures::quad::{integrate_line, integrate_pieces, QuadratureSpec};
use crate::measures::{
    atom_point, integrate, integrate_real, integrate_with, ComponentKind, Domain, GapSpan,
    IntegrateOptions, MomentRule, SpectralMeasure, SpectralPoint,
};

/// Lags up to this use the explicit geometric sum in the Fejer kernel.
pub const FEJER_DIRECT_MAX: u64 = 4096;

fn default_spec() -> QuadratureSpec {
    QuadratureSpec::default()
}

/// `Re int z^n nu(dz)`.
pub fn covariance(measure: &SpectralMeasure, n: u64) -> Result<f64> {
    measure.require_domain(Domain::Disk)?;
    let v: Complex64 = integrate_with(
        measure,
        |p: &SpectralPoint| p.pow(n),
        &IntegrateOptions {
            guard_factor: None,
            ..Default::default()
        },
    )?;
    let scale = measure.total_mass().max(v.re.abs());
    if v.im.abs() > 1e-8 * scale {
        return Err(Error::InvalidMeasure(format!(
            "lag-{n} covariance has imaginary part {:e}; the measure is not conjugation symmetric",
            v.im
        )));
    }
    Ok(v.re)
}

/// `cov(0..=n_max)` from one precomputed moment rule.
pub fn covariance_sequence(measure: &SpectralMeasure, n_max: usize) -> Result<Vec<f64>> {
    Ok(MomentRule::new(measure)?.moments(n_max))
}

/// `(1 - |z|^2) / |1 - z|^2`; zero on the circle.
pub(crate) fn sigma_kernel(p: &SpectralPoint) -> f64 {
    if p.on_circle() {
        return 0.0;
    }
    p.one_minus_abs_sq() / p.abs_one_minus_sq()
}

/// `int (1 - |z|^2)/|1 - z|^2 nu(dz)`, or `+inf` when the integral diverges.
pub fn sigma_squared(measure: &SpectralMeasure) -> Result<f64> {
    measure.require_domain(Domain::Disk)?;
    match integrate(measure, sigma_kernel, &default_spec()) {
        Ok(v) => Ok(v),
        Err(Error::Divergent(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// `|1 - z e^{it}|^2`, accurate near the circle.
fn rotated_den(p: &SpectralPoint, t: f64) -> f64 {
    let s = (0.5 * (p.arg() + t)).sin();
    p.gap * p.gap + 4.0 * (1.0 - p.gap) * s * s
}

/// `int r^m` against a radial law.
fn radial_moment(r: &RadialDensity, m: u32, spec: &QuadratureSpec) -> Result<f64> {
    if m == 0 {
        return Ok(1.0);
    }
    let rho = r.rho;
    integrate_line(
        |n| {
            let (x, d) = if n.from_hi <= n.from_lo {
                (rho - n.from_hi, r.density_at_offset(n.from_hi))
            } else {
                (n.x, r.density(n.x))
            };
            Ok(x.powi(m as i32) * d)
        },
        0.0,
        rho,
        false,
        r.grade_outer(),
        spec,
        None,
    )
}

fn density_with(
    measure: &SpectralMeasure,
    t: f64,
    spec: &QuadratureSpec,
    guard: Option<f64>,
) -> Result<f64> {
    measure.require_domain(Domain::Disk)?;
    let mut total = 0.0;
    for c in measure.components() {
        if c.mass == 0.0 {
            continue;
        }
        let v = match c.kind {
            ComponentKind::Atom { z } => {
                let p = atom_point(Domain::Disk, z);
                if p.on_circle() {
                    continue;
                }
                p.one_minus_abs_sq() / rotated_den(&p, t)
            }
            ComponentKind::Interval(fam) => {
                let r: Result<f64> = integrate_family(
                    &fam,
                    &GapSpan::support(&fam),
                    |tt, _, pgap| {
                        let p = SpectralPoint::real(tt, pgap);
                        p.one_minus_abs_sq() / rotated_den(&p, t)
                    },
                    spec,
                    guard,
                );
                match r {
                    Ok(v) => v,
                    Err(Error::Divergent(_)) => return Ok(f64::INFINITY),
                    Err(e) => return Err(e),
                }
            }
            ComponentKind::Arc(_) => continue,
            ComponentKind::Polar { radial, angular } => {
                // the angular average of the Poisson kernel is 1 + kappa r^m cos(m t)
                let mut v = 1.0;
                if angular.kappa != 0.0 {
                    let m = angular.m;
                    v += angular.kappa * (m as f64 * t).cos() * radial_moment(&radial, m, spec)?;
                }
                v
            }
            _ => unreachable!("disk measure holds only disk components"),
        };
        total += c.mass * v;
    }
    Ok(total / (2.0 * PI))
}

/// Poisson-kernel density `f(t)` of the interior part; `+inf` where it blows up.
pub fn spectral_density(measure: &SpectralMeasure, t: f64) -> Result<f64> {
    density_with(measure, t, &default_spec().with_rel_tol(1e-8), Some(1e12))
}

/// How [`spectral_cdf`] and [`arc_mass`] evaluate the absolutely continuous part.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdfRoute {
    /// Closed-form harmonic measure of the arc, integrated against the interior part.
    Harmonic,
    /// Numerical integral of [`spectral_density`].
    Density,
}

/// `2 atan(k tan(psi/2))` continued across multiples of `2 pi`.
fn arc_primitive(k: f64, psi: f64) -> f64 {
    let m = (psi / (2.0 * PI)).round();
    let r = psi - 2.0 * PI * m;
    2.0 * (k * (0.5 * r).tan()).atan() + 2.0 * PI * m
}

/// Harmonic measure at `p` of the boundary arc of angles `[a, b]`.
pub fn arc_harmonic_measure(p: &SpectralPoint, a: f64, b: f64) -> f64 {
    if p.on_circle() {
        let u = p.arg();
        return if u >= a && u <= b { 1.0 } else { 0.0 };
    }
    let k = (2.0 - p.gap) / p.gap;
    let phi = p.arg();
    ((arc_primitive(k, b - phi) - arc_primitive(k, a - phi)) / (2.0 * PI)).clamp(0.0, 1.0)
}

/// Circle part on angles `[a, b]`, `-pi <= a <= b <= pi`.
fn circle_part(measure: &SpectralMeasure, a: f64, b: f64) -> f64 {
    measure
        .components()
        .iter()
        .map(|c| match c.kind {
            ComponentKind::Arc(ang) => c.mass * ang.mass_between(a, b),
            ComponentKind::Atom { z } => {
                let p = atom_point(Domain::Disk, z);
                let u = p.arg();
                if p.on_circle() && u >= a && u <= b {
                    c.mass
                } else {
                    0.0
                }
            }
            _ => 0.0,
        })
        .sum()
}

/// Interior-atom angles in `(a, b)`: quadrature break points for the density route.
fn atom_angles(measure: &SpectralMeasure, a: f64, b: f64) -> Vec<f64> {
    let mut out = Vec::new();
    for c in measure.components() {
        if let ComponentKind::Atom { z } = c.kind {
            let p = atom_point(Domain::Disk, z);
            if !p.on_circle() && p.z.norm() > 0.0 {
                // the density peaks at t = -arg z
                let u = -p.arg();
                if u > a && u < b {
                    out.push(u);
                }
            }
        }
    }
    out
}

fn window(measure: &SpectralMeasure, a: f64, b: f64, route: CdfRoute) -> Result<f64> {
    measure.require_domain(Domain::Disk)?;
    let circle = circle_part(measure, a, b);
    let ac = match route {
        CdfRoute::Harmonic => {
            let focus = [a, b];
            integrate_with(
                measure,
                |p: &SpectralPoint| arc_harmonic_measure(p, a, b),
                &IntegrateOptions {
                    spec: default_spec(),
                    focus: &focus,
                    guard_factor: None,
                    interior_only: true,
                    analytic_angle: false,
                },
            )?
        }
        CdfRoute::Density => {
            if b <= a {
                0.0
            } else {
                let mut breaks = vec![a, b];
                if a < 0.0 && b > 0.0 {
                    breaks.push(0.0);
                }
                breaks.extend(atom_angles(measure, a, b));
                breaks.sort_by(f64::total_cmp);
                breaks.dedup();
                let inner = default_spec().with_rel_tol(1e-11);
                integrate_pieces(
                    // no guard: the density is integrable even where it is huge
                    |n| density_with(measure, n.x, &inner, None),
                    &breaks,
                    &breaks.clone(),
                    &default_spec().with_rel_tol(1e-9),
                    None,
                )?
            }
        }
    };
    Ok(ac + circle)
}

fn check_angle(x: f64) -> Result<()> {
    if !(0.0..=PI).contains(&x) {
        return Err(Error::OutOfRange(format!(
            "angle x = {x} must lie in [0, pi]"
        )));
    }
    Ok(())
}

/// `F(x)`: spectral distribution of the angles `[0, x]`.
pub fn spectral_cdf(measure: &SpectralMeasure, x: f64, route: CdfRoute) -> Result<f64> {
    check_angle(x)?;
    window(measure, 0.0, x, route)
}

/// `G(x)`: spectral distribution of the symmetric arc `|t| <= x`.
pub fn arc_mass(measure: &SpectralMeasure, x: f64, route: CdfRoute) -> Result<f64> {
    check_angle(x)?;
    window(measure, -x, x, route)
}

/// `Re int e^{ikt} F(dt)` for `k = 0..=k_max`, through the density route.
pub fn fourier_coefficients(measure: &SpectralMeasure, k_max: usize) -> Result<Vec<f64>> {
    measure.require_domain(Domain::Disk)?;
    let mut breaks = vec![-PI, 0.0, PI];
    breaks.extend(atom_angles(measure, -PI, PI));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let inner = default_spec().with_rel_tol(1e-12);
    let mut out: Vec<f64> = integrate_pieces(
        |n| {
            let f = density_with(measure, n.x, &inner, None)?;
            Ok((0..=k_max)
                .map(|k| f * (k as f64 * n.x).cos())
                .collect::<Vec<f64>>())
        },
        &breaks,
        &breaks.clone(),
        &default_spec().with_rel_tol(1e-11),
        None,
    )?;
    for c in measure.components() {
        match c.kind {
            ComponentKind::Arc(ang) => {
                for (k, o) in out.iter_mut().enumerate() {
                    *o += c.mass * ang.fourier(k as u64);
                }
            }
            ComponentKind::Atom { z } => {
                let p = atom_point(Domain::Disk, z);
                if p.on_circle() {
                    let u = p.arg();
                    for (k, o) in out.iter_mut().enumerate() {
                        *o += c.mass * (k as f64 * u).cos();
                    }
                }
            }
            _ => {}
        }
    }
    Ok(out)
}

/// `V(x) = int_{[-1, 1-x]} nu(dt) / (1 - t)` for a reversible measure.
pub fn v_tail(measure: &SpectralMeasure, x: f64) -> Result<f64> {
    measure.require_domain(Domain::Disk)?;
    if !measure.is_reversible() {
        return Err(Error::DomainMismatch {
            expected: "real support",
            found: "non-real support",
        });
    }
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::OutOfRange(format!("V(x) needs 0 < x < 1, got {x}")));
    }
    integrate_real(
        measure,
        &GapSpan::below(x),
        |_, g| 1.0 / g,
        &default_spec(),
        None,
    )
}

/// `|sum_{j<n} z^j|^2`.
pub fn fejer_kernel(p: &SpectralPoint, n: u64) -> f64 {
    if n <= FEJER_DIRECT_MAX {
        if p.z.im == 0.0 {
            let mut s = 0.0;
            let mut w = 1.0;
            for _ in 0..n {
                s += w;
                w *= p.z.re;
            }
            return s * s;
        }
        let mut s = Complex64::new(0.0, 0.0);
        let mut w = Complex64::new(1.0, 0.0);
        for _ in 0..n {
            s += w;
            w *= p.z;
        }
        return s.norm_sqr();
    }
    fejer_closed(p, n)
}

/// `|1 - z^n|^2 / |1 - z|^2` from `1 - |z|^n` and half-angle sines.
fn fejer_closed(p: &SpectralPoint, n: u64) -> f64 {
    let nf = n as f64;
    let phi = p.arg();
    let den = p.abs_one_minus_sq();
    if den == 0.0 {
        return nf * nf;
    }
    let rho = p.modulus_pow(nf);
    let one_minus_rho = if p.gap > 0.0 {
        -(nf * (-p.gap).ln_1p()).exp_m1()
    } else {
        0.0
    };
    let s = (0.5 * nf * phi).sin();
    (one_minus_rho * one_minus_rho + 4.0 * rho * s * s) / den
}

/// `(I_n, M_n)` with `M_n = int |sum_{j<n} z^j|^2 nu(dz)` and `I_n = M_n / n`.
pub fn fejer_functional(measure: &SpectralMeasure, n: u64) -> Result<(f64, f64)> {
    measure.require_domain(Domain::Disk)?;
    if n == 0 {
        return Err(Error::OutOfRange("Fejer functional needs n >= 1".into()));
    }
    let m: f64 = integrate_with(
        measure,
        |p: &SpectralPoint| fejer_kernel(p, n),
        &IntegrateOptions {
            guard_factor: None,
            ..Default::default()
        },
    )?;
    Ok((m / n as f64, m))
}

/// `sum_n var(S_n) lambda^n` in closed form, `|lambda| < 1`.
pub fn variance_generating(measure: &SpectralMeasure, lambda: Complex64) -> Result<Complex64> {
    measure.require_domain(Domain::Disk)?;
    if !(lambda.norm() < 1.0) {
        return Err(Error::OutOfRange(format!(
            "|lambda| = {} must be < 1",
            lambda.norm()
        )));
    }
    let one = Complex64::new(1.0, 0.0);
    let h = |z: Complex64| (one + lambda * z) / (one - lambda * z);
    let v: Complex64 = integrate_with(
        measure,
        |p: &SpectralPoint| 0.5 * (h(p.z) + h(p.z.conj())),
        &IntegrateOptions {
            guard_factor: None,
            ..Default::default()
        },
    )?;
    Ok(lambda / ((one - lambda) * (one - lambda)) * v)
}

/// Lebesgue decomposition of the spectral distribution with a cached CDF grid.
#[derive(Debug)]
pub struct SpectralDistribution {
    measure: SpectralMeasure,
    grid: OnceLock<Vec<(f64, f64)>>,
}

/// Points of the cached `F` grid on `[0, pi]`.
pub const CDF_GRID_POINTS: usize = 129;

impl SpectralDistribution {
    pub fn new(measure: &SpectralMeasure) -> Result<Self> {
        measure.require_domain(Domain::Disk)?;
        Ok(SpectralDistribution {
            measure: measure.clone(),
            grid: OnceLock::new(),
        })
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        spectral_density(&self.measure, t)
    }

    /// `nu_Gamma(Gamma)`.
    pub fn singular_mass(&self) -> f64 {
        self.measure.circle_mass()
    }

    /// `nu_0(D_0)`: the mass the density integrates to over a full turn.
    pub fn interior_mass(&self) -> f64 {
        self.measure.total_mass() - self.measure.circle_mass()
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        spectral_cdf(&self.measure, x, CdfRoute::Harmonic)
    }

    pub fn arc_mass(&self, x: f64) -> Result<f64> {
        arc_mass(&self.measure, x, CdfRoute::Harmonic)
    }

    /// `(x, F(x))` on an even grid of `[0, pi]`, built once.
    pub fn cdf_grid(&self) -> Result<&[(f64, f64)]> {
        if let Some(g) = self.grid.get() {
            return Ok(g);
        }
        let n = CDF_GRID_POINTS - 1;
        let g = (0..=n)
            .map(|i| {
                let x = PI * i as f64 / n as f64;
                Ok((x, self.cdf(x)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.grid.get_or_init(|| g))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{AngularDensity, IntervalFamily, MeasureComponent};
    use approx::assert_relative_eq;

    fn dirac(re: f64) -> SpectralMeasure {
        SpectralMeasure::dirac(Domain::Disk, re, 0.0, 1.0).unwrap()
    }

    fn unit_density() -> SpectralMeasure {
        SpectralMeasure::disk(vec![MeasureComponent::interval(
            IntervalFamily::Uniform { a: 0.0, b: 1.0 },
            1.0,
        )])
        .unwrap()
    }

    fn arc() -> SpectralMeasure {
        SpectralMeasure::disk(vec![MeasureComponent::uniform_arc(1.0)]).unwrap()
    }

    #[test]
    fn covariance_examples() {
        assert_eq!(covariance(&dirac(0.0), 3).unwrap(), 0.0);
        assert_eq!(covariance(&dirac(-1.0), 5).unwrap(), -1.0);
        assert_relative_eq!(
            covariance(&unit_density(), 4).unwrap(),
            0.2,
            max_relative = 1e-12
        );
        let seq = covariance_sequence(&unit_density(), 10).unwrap();
        assert_relative_eq!(seq[4], 0.2, max_relative = 1e-12);
    }

    #[test]
    fn sigma_examples() {
        assert_eq!(sigma_squared(&dirac(0.0)).unwrap(), 1.0);
        assert_eq!(sigma_squared(&dirac(-1.0)).unwrap(), 0.0);
        // density 2(1 - t) on [0, 1] is the power law with gamma = -1
        let m = SpectralMeasure::disk(vec![MeasureComponent::interval(
            IntervalFamily::PowerLaw { gamma: -1.0 },
            1.0,
        )])
        .unwrap();
        assert_relative_eq!(sigma_squared(&m).unwrap(), 3.0, max_relative = 1e-10);
        assert_eq!(sigma_squared(&unit_density()).unwrap(), f64::INFINITY);
        assert_eq!(sigma_squared(&arc()).unwrap(), 0.0);
    }

    #[test]
    fn density_examples() {
        assert_relative_eq!(
            spectral_density(&dirac(0.0), 1.3).unwrap(),
            1.0 / (2.0 * PI)
        );
        assert_relative_eq!(
            spectral_density(&dirac(0.5), 0.0).unwrap(),
            3.0 / (2.0 * PI),
            max_relative = 1e-14
        );
        let total = arc_mass(&dirac(0.5), PI, CdfRoute::Density).unwrap();
        assert_relative_eq!(total, 1.0, max_relative = 1e-9);
        assert_eq!(spectral_density(&arc(), 0.4).unwrap(), 0.0);
    }

    #[test]
    fn sigma_is_two_pi_f0() {
        let m = SpectralMeasure::disk(vec![
            MeasureComponent::interval(IntervalFamily::PowerLaw { gamma: -0.5 }, 0.5),
            MeasureComponent::atom(0.3, 0.0, 0.25),
            MeasureComponent::atom(-0.2, 0.4, 0.125),
            MeasureComponent::atom(-0.2, -0.4, 0.125),
        ])
        .unwrap();
        let s = sigma_squared(&m).unwrap();
        let f0 = spectral_density(&m, 0.0).unwrap();
        assert_relative_eq!(2.0 * PI * f0, s, max_relative = 1e-8);
    }

    #[test]
    fn arc_mass_examples() {
        for &x in &[0.1, 1.0, 2.5] {
            for route in [CdfRoute::Harmonic, CdfRoute::Density] {
                assert_relative_eq!(
                    arc_mass(&dirac(0.0), x, route).unwrap(),
                    x / PI,
                    max_relative = 1e-9
                );
                assert_relative_eq!(
                    arc_mass(&arc(), x, route).unwrap(),
                    x / PI,
                    max_relative = 1e-12
                );
            }
        }
        let m = SpectralMeasure::disk(vec![
            MeasureComponent::interval(IntervalFamily::PowerLaw { gamma: 0.5 }, 0.5),
            MeasureComponent::new(
                ComponentKind::Polar {
                    radial: RadialDensity {
                        rho: 0.9,
                        beta: 1.0,
                    },
                    angular: AngularDensity { kappa: 0.5, m: 3 },
                },
                0.5,
            ),
        ])
        .unwrap();
        assert_relative_eq!(
            arc_mass(&m, PI, CdfRoute::Harmonic).unwrap(),
            1.0,
            max_relative = 1e-9
        );
        for &x in &[0.05, 0.7, 2.0] {
            let a = arc_mass(&m, x, CdfRoute::Harmonic).unwrap();
            let b = arc_mass(&m, x, CdfRoute::Density).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-7);
            let fa = spectral_cdf(&m, x, CdfRoute::Harmonic).unwrap();
            assert_relative_eq!(2.0 * fa, a, max_relative = 1e-9);
        }
    }

    #[test]
    fn harmonic_measure_primitive() {
        // full circle from any interior point
        let p = SpectralPoint::polar(1e-6, 2.0);
        assert_relative_eq!(arc_harmonic_measure(&p, -PI, PI), 1.0, max_relative = 1e-12);
        // an arc centred on a point close to the circle is almost certain
        let q = SpectralPoint::polar(1e-6, 0.0);
        assert!(arc_harmonic_measure(&q, -0.01, 0.01) > 0.9999);
    }

    #[test]
    fn v_tail_examples() {
        assert_relative_eq!(v_tail(&dirac(0.0), 0.3).unwrap(), 1.0);
        for &x in &[1e-9, 1e-3, 0.5] {
            assert_relative_eq!(
                v_tail(&unit_density(), x).unwrap(),
                -x.ln(),
                max_relative = 1e-9
            );
        }
        assert!(matches!(
            v_tail(&arc(), 0.1),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn fejer_examples() {
        for n in [1u64, 2, 7, 64] {
            let (i, _) = fejer_functional(&dirac(0.0), n).unwrap();
            assert_relative_eq!(i, 1.0 / n as f64);
            let (i, _) = fejer_functional(&dirac(-1.0), n).unwrap();
            assert_relative_eq!(i, if n % 2 == 1 { 1.0 / n as f64 } else { 0.0 });
            let (i, _) = fejer_functional(&arc(), n).unwrap();
            assert_relative_eq!(i, 1.0, max_relative = 1e-9);
        }
        let (i, _) = fejer_functional(&arc(), 10_000).unwrap();
        assert_relative_eq!(i, 1.0, max_relative = 1e-8);
    }

    #[test]
    fn fejer_closed_matches_sum() {
        for &(g, phi) in &[
            (1e-7, 1e-5),
            (0.01, 0.3),
            (0.0, 0.2),
            (0.5, 3.0),
            (1e-9, 0.0),
        ] {
            let p = SpectralPoint::polar(g, phi);
            for n in [5u64, 100, 4000] {
                let direct = fejer_kernel(&p, n);
                assert_relative_eq!(fejer_closed(&p, n), direct, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn generating_function_examples() {
        let l = Complex64::new(0.5, 0.0);
        assert_relative_eq!(variance_generating(&dirac(0.0), l).unwrap().re, 2.0);
        let l = Complex64::new(0.3, 0.2);
        let v = variance_generating(&dirac(-1.0), l).unwrap();
        let want = l / (1.0 - l * l);
        assert_relative_eq!(v.re, want.re, max_relative = 1e-12);
        assert_relative_eq!(v.im, want.im, max_relative = 1e-12);
    }

    #[test]
    fn cdf_grid_is_cached_and_monotone() {
        let d = SpectralDistribution::new(&unit_density()).unwrap();
        let g = d.cdf_grid().unwrap();
        assert_eq!(g.len(), CDF_GRID_POINTS);
        assert!(g.windows(2).all(|w| w[1].1 >= w[0].1 - 1e-12));
        assert_relative_eq!(g[CDF_GRID_POINTS - 1].1, 0.5, max_relative = 1e-9);
        assert!(std::ptr::eq(g.as_ptr(), d.cdf_grid().unwrap().as_ptr()));
        assert_relative_eq!(d.interior_mass(), 1.0);
    }
}
