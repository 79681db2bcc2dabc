//! Continuous-time functionals of a left-half-plane measure.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measures::quad::{integrate_line, QuadratureSpec};
use crate::measures::{
    integrate_with, region_mass, ComponentKind, Domain, IntegrateOptions, Region, SpectralMeasure,
    SpectralPoint,
};
use crate::variance_class::{classify_sequence, extrapolate, GrowthReport, GrowthVerdict};

fn opts(rel: f64) -> IntegrateOptions<'static> {
    IntegrateOptions {
        spec: QuadratureSpec::default().with_rel_tol(rel),
        guard_factor: None,
        ..Default::default()
    }
}

fn real_part(measure: &SpectralMeasure, v: Complex64, what: &str) -> Result<f64> {
    let scale = measure.total_mass().max(v.re.abs());
    if v.im.abs() > 1e-8 * scale {
        return Err(Error::InvalidMeasure(format!(
            "{what} has imaginary part {:e}; the measure is not conjugation symmetric",
            v.im
        )));
    }
    Ok(v.re)
}

fn cov_at(measure: &SpectralMeasure, t: f64, rel: f64) -> Result<f64> {
    let v: Complex64 = integrate_with(measure, |p: &SpectralPoint| (p.z * t).exp(), &opts(rel))?;
    real_part(measure, v, "covariance")
}

/// `Re int e^{zt} nu(dz)`.
pub fn cts_covariance(measure: &SpectralMeasure, t: f64) -> Result<f64> {
    measure.require_domain(Domain::LeftHalfPlane)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::OutOfRange(format!(
            "covariance needs t >= 0, got {t}"
        )));
    }
    cov_at(measure, t, 1e-10)
}

fn has_origin_atom(measure: &SpectralMeasure) -> bool {
    measure.components().iter().any(|c| {
        c.mass > 0.0 && matches!(c.kind, ComponentKind::Atom { z } if z == Complex64::new(0.0, 0.0))
    })
}

/// `-2 int Re(1/z) nu(dz)`; `+inf` when divergent or with an atom at 0.
pub fn varsigma_squared(measure: &SpectralMeasure) -> Result<f64> {
    measure.require_domain(Domain::LeftHalfPlane)?;
    if has_origin_atom(measure) {
        return Ok(f64::INFINITY);
    }
    let f = |p: &SpectralPoint| {
        if p.gap == 0.0 {
            0.0
        } else {
            2.0 * p.gap / p.z.norm_sqr()
        }
    };
    let o = IntegrateOptions {
        guard_factor: Some(1e12),
        ..opts(1e-10)
    };
    match integrate_with(measure, f, &o) {
        Ok(v) => Ok(v),
        Err(Error::Divergent(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// `2 Re[(e^{zT} - zT - 1)/z^2]`, equal to `T^2` at `z = 0`.
pub fn cts_variance_kernel(z: Complex64, t: f64) -> f64 {
    let w = z * t;
    if w.norm() < 0.5 {
        // (e^w - w - 1)/w^2 = sum w^k/(k+2)!
        let mut term = Complex64::new(0.5, 0.0);
        let mut s = Complex64::new(0.0, 0.0);
        let mut k = 0.0;
        while term.norm() > 1e-18 {
            s += term;
            term *= w / (k + 3.0);
            k += 1.0;
        }
        return 2.0 * t * t * s.re;
    }
    2.0 * ((w.exp() - w - 1.0) / (z * z)).re
}

/// `var(S_T) = int 2 Re[(e^{zT} - zT - 1)/z^2] nu(dz)`.
pub fn cts_variance(measure: &SpectralMeasure, t: f64) -> Result<f64> {
    measure.require_domain(Domain::LeftHalfPlane)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::OutOfRange(format!("variance needs T >= 0, got {t}")));
    }
    integrate_with(
        measure,
        |p: &SpectralPoint| cts_variance_kernel(p.z, t),
        &opts(1e-12),
    )
}

/// `2 int_0^T (T - s) cov(s) ds` with the covariance integrated at every node.
pub fn cts_variance_time_integral(measure: &SpectralMeasure, t: f64) -> Result<f64> {
    measure.require_domain(Domain::LeftHalfPlane)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    integrate_line(
        |n| Ok(2.0 * n.from_hi * cov_at(measure, n.x, 1e-12)?),
        0.0,
        t,
        false,
        false,
        &QuadratureSpec::default().with_rel_tol(1e-11),
        None,
    )
}

/// Per-point integrand of the martingale part divided by `T`:
/// `Re[2(e^{zT} - zT - 1)/z^2 - |1 - e^{zT}|^2/|z|^2] / T`.
/// Tends to `-2 Re(1/z)` and stays below `C|x|/(x^2 + y^2)`.
pub fn martingale_part_integrand(z: Complex64, t: f64) -> f64 {
    let d = if (z * t).norm() < 1e-3 {
        // |1 - e^w|^2/|z|^2 = T^2 |1 + w/2 + w^2/6|^2 near 0
        let w = z * t;
        t * t * (1.0 + w / 2.0 + w * w / 6.0).norm_sqr()
    } else {
        (1.0 - (z * t).exp()).norm_sqr() / z.norm_sqr()
    };
    (cts_variance_kernel(z, t) - d) / t
}

/// Harmonic measure of the window `(-ix, ix)` seen from `z` in the closed
/// left half-plane; boundary points count by membership.
pub fn half_plane_window_measure(p: &SpectralPoint, x: f64) -> f64 {
    let b = p.z.im;
    if p.gap <= 0.0 {
        return if b.abs() < x {
            1.0
        } else if b.abs() == x {
            0.5
        } else {
            0.0
        };
    }
    (((x - b) / p.gap).atan() + ((x + b) / p.gap).atan()) / PI
}

/// `int omega(z, (-ix, ix)) nu(dz)`: the mass Brownian motion started from
/// `nu` carries out through the window.
pub fn half_plane_window_mass(measure: &SpectralMeasure, x: f64) -> Result<f64> {
    measure.require_domain(Domain::LeftHalfPlane)?;
    if !(x > 0.0) {
        return Err(Error::OutOfRange(format!(
            "window half-width must be > 0, got {x}"
        )));
    }
    let focus = [-x, x];
    integrate_with(
        measure,
        |p: &SpectralPoint| half_plane_window_measure(p, x),
        &IntegrateOptions {
            focus: &focus,
            ..opts(1e-11)
        },
    )
}

/// Extrapolated `lim nu(U_x)/x` over `x = 2^-k`, `k = 4..=20`, with the
/// last raw ratio.
pub fn cts_wedge_constant(measure: &SpectralMeasure) -> Result<(f64, f64)> {
    measure.require_domain(Domain::LeftHalfPlane)?;
    let v = (4..=20)
        .map(|k| {
            let x = (-(k as f64)).exp2();
            Ok(region_mass(measure, Region::CtsWedgeU(x))? / x)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((extrapolate(&v), *v.last().unwrap()))
}

fn geometric(grid: &[f64]) -> bool {
    if grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return false;
    }
    let q = grid[1] / grid[0];
    q > 1.0
        && grid
            .windows(2)
            .all(|w| ((w[1] / w[0]) / q - 1.0).abs() <= 1e-6)
}

/// Linear growth `var(S_T)/T -> L = varsigma^2 + pi C` against the sampled
/// variance; otherwise the regular-variation classification.
pub fn cts_classify(measure: &SpectralMeasure, t_grid: &[f64]) -> Result<GrowthReport> {
    measure.require_domain(Domain::LeftHalfPlane)?;
    if t_grid.len() < 8 || !geometric(t_grid) {
        return Err(Error::OutOfRange(
            "T grid must be geometric with at least 8 points".into(),
        ));
    }
    let vs2 = varsigma_squared(measure)?;
    let (c_fit, c_last) = cts_wedge_constant(measure)?;
    let zero = 1e-9 * measure.total_mass();
    if (c_fit - c_last).abs() > 0.05 * c_fit.abs().max(c_last.abs()).max(zero) {
        return Err(Error::Inconclusive(format!(
            "wedge constant not settled: extrapolated {c_fit:e}, last {c_last:e}"
        )));
    }
    let l = vs2 + PI * c_fit;
    let vars = t_grid
        .iter()
        .map(|&t| cts_variance(measure, t))
        .collect::<Result<Vec<_>>>()?;
    let obs: Vec<f64> = vars.iter().zip(t_grid).map(|(v, t)| v / t).collect();
    let t_last = *t_grid.last().unwrap();
    let o_last = *obs.last().unwrap();
    let linear = if l.is_finite() {
        // finite-horizon deviation scale, err * T, from the first half
        let a = obs[..obs.len() / 2]
            .iter()
            .zip(t_grid)
            .map(|(o, t)| (o - l).abs() * t)
            .fold(0.0, f64::max);
        let peak = obs.iter().copied().fold(0.0, f64::max);
        let err = (o_last - l).abs();
        err <= (0.02 * l).max(2.0 * a / t_last) || (l <= zero && o_last <= 1e-2 * peak)
    } else {
        false
    };
    let mut report = if linear {
        GrowthReport {
            alpha_hat: 1.0,
            h_samples: t_grid.iter().zip(&obs).map(|(&t, &o)| (t, o)).collect(),
            verdict: GrowthVerdict::Linear { k: l },
            residuals: obs.iter().map(|o| o - l).collect(),
            alpha_limit: 1.0,
            diagnostics: vec![],
        }
    } else {
        let pts: Vec<(f64, f64)> = t_grid.iter().copied().zip(vars.iter().copied()).collect();
        classify_sequence(&pts, measure.total_mass())?
    };
    report.diagnostics = vec![
        ("varsigma2".into(), vs2),
        ("C".into(), c_fit),
        ("L".into(), l),
    ];
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::MeasureComponent;
    use approx::assert_relative_eq;

    // mass 1 at re + i im, split over the conjugate pair when off-axis
    fn atom(re: f64, im: f64) -> SpectralMeasure {
        if im == 0.0 {
            return SpectralMeasure::dirac(Domain::LeftHalfPlane, re, 0.0, 1.0).unwrap();
        }
        SpectralMeasure::half_plane(vec![
            MeasureComponent::atom(re, im, 0.5),
            MeasureComponent::atom(re, -im, 0.5),
        ])
        .unwrap()
    }

    fn pair() -> SpectralMeasure {
        SpectralMeasure::half_plane(vec![
            MeasureComponent::atom(-1.0, 1.0, 0.5),
            MeasureComponent::atom(-1.0, -1.0, 0.5),
        ])
        .unwrap()
    }

    fn segment(h: f64) -> SpectralMeasure {
        SpectralMeasure::half_plane(vec![MeasureComponent::new(
            ComponentKind::ImaginarySegment { half_width: h },
            1.0,
        )])
        .unwrap()
    }

    fn grid() -> Vec<f64> {
        (0..12).map(|k| 2f64.powi(k + 2)).collect()
    }

    #[test]
    fn covariance_examples() {
        for t in [0.0f64, 0.3, 2.0, 7.5] {
            assert_relative_eq!(
                cts_covariance(&atom(-1.0, 0.0), t).unwrap(),
                (-t).exp(),
                max_relative = 1e-12
            );
            let want = (-t).exp() * t.cos();
            assert!((cts_covariance(&pair(), t).unwrap() - want).abs() < 1e-12);
        }
        assert_relative_eq!(
            cts_covariance(&segment(1.0), 0.0).unwrap(),
            1.0,
            max_relative = 1e-12
        );
        let disk = SpectralMeasure::dirac(Domain::Disk, 0.5, 0.0, 1.0).unwrap();
        assert!(matches!(
            cts_covariance(&disk, 1.0),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn varsigma_examples() {
        assert_relative_eq!(
            varsigma_squared(&atom(-2.0, 0.0)).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        assert_eq!(varsigma_squared(&atom(0.0, 3.0)).unwrap(), 0.0);
        assert_relative_eq!(
            varsigma_squared(&pair()).unwrap(),
            1.0,
            max_relative = 1e-14
        );
        assert_eq!(varsigma_squared(&atom(0.0, 0.0)).unwrap(), f64::INFINITY);
        assert_eq!(varsigma_squared(&segment(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn variance_examples() {
        for t in [0.01f64, 0.3, 1.0, 10.0, 100.0] {
            let want = 2.0 * ((-t).exp() + t - 1.0);
            assert_relative_eq!(
                cts_variance(&atom(-1.0, 0.0), t).unwrap(),
                want,
                max_relative = 1e-12
            );
            let b = 1.7;
            let want = 2.0 * (1.0 - (b * t).cos()) / (b * b);
            assert_relative_eq!(
                cts_variance(&atom(0.0, b), t).unwrap(),
                want,
                max_relative = 1e-10
            );
        }
        let t = 1e-4;
        assert_relative_eq!(
            cts_variance(&pair(), t).unwrap(),
            t * t,
            max_relative = 1e-3
        );
    }

    #[test]
    fn spectral_formula_matches_time_integral() {
        for m in [pair(), segment(1.0), atom(-0.5, 0.0)] {
            for t in [0.1, 1.0, 10.0, 100.0] {
                let a = cts_variance(&m, t).unwrap();
                let b = cts_variance_time_integral(&m, t).unwrap();
                assert_relative_eq!(a, b, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn martingale_part_bound() {
        for &x in &[-1e-3, -0.1, -1.0, -10.0] {
            for &y in &[0.0, 1e-3, 0.5, 3.0, 50.0] {
                let z = Complex64::new(x, y);
                // the ratio peaks near 4.87 as x -> 0 (at yT ~ 4.49)
                let bound = 5.0 * x.abs() / z.norm_sqr();
                for &t in &[1e-3, 0.1, 1.0, 10.0, 1e3, 1e5] {
                    let v = martingale_part_integrand(z, t);
                    assert!(v <= bound * (1.0 + 1e-9), "z={z} T={t}: {v} > {bound}");
                }
                let lim = -2.0 * (1.0 / z).re;
                assert_relative_eq!(martingale_part_integrand(z, 1e9), lim, max_relative = 1e-3);
            }
        }
    }

    #[test]
    fn window_mass() {
        // Cauchy(+-1, 1) mixture: (1/2pi)[2 atan(x-1) + 2 atan(x+1)]
        for x in [0.5f64, 1.0, 2.0] {
            let want = ((x - 1.0).atan() + (x + 1.0).atan()) / PI;
            assert_relative_eq!(
                half_plane_window_mass(&pair(), x).unwrap(),
                want,
                max_relative = 1e-12
            );
        }
        assert_relative_eq!(
            half_plane_window_mass(&segment(1.0), 0.25).unwrap(),
            0.25,
            max_relative = 1e-10
        );
        let w =
            half_plane_window_measure(&SpectralPoint::half_plane(Complex64::new(-1.0, 0.0)), 1.0);
        assert_relative_eq!(w, 0.5, max_relative = 1e-15);
    }

    #[test]
    fn classify_examples() {
        let r = cts_classify(&atom(-1.0, 0.0), &grid()).unwrap();
        assert_eq!(r.verdict, GrowthVerdict::Linear { k: 2.0 });
        assert_eq!(r.diagnostics[1].1, 0.0);
        let r = cts_classify(&atom(0.0, 1.0), &grid()).unwrap();
        assert_eq!(r.verdict, GrowthVerdict::Linear { k: 0.0 });
        let r = cts_classify(&segment(1.0), &grid()).unwrap();
        assert_relative_eq!(r.diagnostics[1].1, 1.0, max_relative = 1e-9);
        match r.verdict {
            GrowthVerdict::Linear { k } => assert_relative_eq!(k, PI, max_relative = 1e-9),
            v => panic!("{v:?}"),
        }
        assert!(cts_classify(&segment(1.0), &grid()[..6]).is_err());
    }
}
