use std::f64::consts::PI;

use num_complex::Complex64;

use super::family::IntervalFamily;
use super::quad::{integrate_line, integrate_pieces, Node, QuadValue, QuadratureSpec};
use super::{atom_point, ComponentKind, Domain, SpectralMeasure, SpectralPoint};
use crate::error::{Error, Result};

/// Knobs for [`integrate_with`].
#[derive(Debug, Clone)]
pub struct IntegrateOptions<'a> {
    pub spec: QuadratureSpec,
    /// Extra angles (disk) or imaginary coordinates (half-plane) where the
    /// integrand peaks; panels are graded toward them.
    pub focus: &'a [f64],
    /// `Divergent` once the estimate exceeds this multiple of the mass.
    pub guard_factor: Option<f64>,
    /// Skip everything carried by the unit circle.
    pub interior_only: bool,
    /// The integrand is analytic in the angle at interior disk points, with
    /// singularities no closer than the gap. Polar angular integrals then use
    /// the periodic trapezoid rule away from the circle.
    pub analytic_angle: bool,
}

impl Default for IntegrateOptions<'_> {
    fn default() -> Self {
        IntegrateOptions {
            spec: QuadratureSpec::default(),
            focus: &[],
            guard_factor: Some(1e12),
            interior_only: false,
            analytic_angle: false,
        }
    }
}

const TRAPEZOID_MIN_GAP: f64 = 0.01;

/// Points for an error near `exp(-40)`: singularities sit about `gap` off
/// the real angle axis.
fn trapezoid_points(gap: f64, m: u32) -> usize {
    let a = -(-gap).ln_1p();
    let need = (40.0 / a).max(64.0 + 4.0 * m as f64);
    (need.ceil() as usize).next_power_of_two()
}

fn periodic_trapezoid<V: QuadValue, G: Fn(f64) -> V>(g: G, n: usize) -> V {
    let h = 2.0 * PI / n as f64;
    let mut acc = g(-PI);
    for k in 1..n {
        acc.axpy(1.0, &g(-PI + k as f64 * h));
    }
    scaled(&acc, h)
}

/// Integral of `f` against the measure.
pub fn integrate<V, F>(measure: &SpectralMeasure, f: F, spec: &QuadratureSpec) -> Result<V>
where
    V: QuadValue,
    F: Fn(&SpectralPoint) -> V,
{
    integrate_with(
        measure,
        f,
        &IntegrateOptions {
            spec: *spec,
            ..Default::default()
        },
    )
}

fn scaled<V: QuadValue>(v: &V, w: f64) -> V {
    let mut out = v.zero_like();
    out.axpy(w, v);
    out
}

pub(crate) fn wrap_angle(t: f64) -> f64 {
    let w = t - 2.0 * PI * (t / (2.0 * PI)).round();
    if w <= -PI {
        w + 2.0 * PI
    } else {
        w
    }
}

/// Break points `-pi, ..., pi` containing 0 and the wrapped focus angles.
pub(crate) fn angle_breaks(focus: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut graded = vec![0.0];
    for &a in focus {
        let w = wrap_angle(a);
        if w > -PI && w < PI {
            graded.push(w);
        }
    }
    graded.sort_by(f64::total_cmp);
    graded.dedup();
    let mut breaks = vec![-PI];
    breaks.extend(graded.iter().copied());
    breaks.push(PI);
    (breaks, graded)
}

pub fn integrate_with<V, F>(measure: &SpectralMeasure, f: F, opts: &IntegrateOptions) -> Result<V>
where
    V: QuadValue,
    F: Fn(&SpectralPoint) -> V,
{
    opts.spec.validate()?;
    let probe = match measure.domain() {
        Domain::Disk => SpectralPoint::real(0.0, 1.0),
        Domain::LeftHalfPlane => SpectralPoint::half_plane(Complex64::new(-1.0, 0.0)),
    };
    let mut total = f(&probe).zero_like();
    let guard = opts.guard_factor;
    for c in measure.components() {
        if c.mass == 0.0 {
            continue;
        }
        let part = component_integral(measure.domain(), &c.kind, &f, opts, guard)?;
        total.axpy(c.mass, &part);
    }
    if let Some(g) = guard {
        let limit = g * measure.total_mass();
        if total.norm() > limit {
            return Err(Error::Divergent(format!(
                "estimate {:e} exceeds {g:e} x total mass",
                total.norm()
            )));
        }
    }
    Ok(total)
}

fn component_integral<V, F>(
    domain: Domain,
    kind: &ComponentKind,
    f: &F,
    opts: &IntegrateOptions,
    guard: Option<f64>,
) -> Result<V>
where
    V: QuadValue,
    F: Fn(&SpectralPoint) -> V,
{
    let spec = &opts.spec;
    match *kind {
        ComponentKind::Atom { z } => {
            let p = atom_point(domain, z);
            let v = f(&p);
            if opts.interior_only && domain == Domain::Disk && p.on_circle() {
                return Ok(v.zero_like());
            }
            if v.has_nan() {
                return Err(Error::InvalidIntegrand(format!("atom at {z}")));
            }
            if !v.norm().is_finite() {
                return Err(Error::Divergent(format!("integrand infinite at atom {z}")));
            }
            Ok(v)
        }
        ComponentKind::Interval(fam) => integrate_family(
            &fam,
            &GapSpan::support(&fam),
            |t, _, pgap| f(&SpectralPoint::real(t, pgap)),
            spec,
            guard,
        ),
        ComponentKind::Arc(ang) => {
            let (breaks, graded) = angle_breaks(opts.focus);
            if opts.interior_only {
                let v = f(&SpectralPoint::polar(0.0, 0.0));
                return Ok(v.zero_like());
            }
            integrate_pieces(
                |n: Node| {
                    Ok(scaled(
                        &f(&SpectralPoint::polar(0.0, n.x)),
                        ang.density(n.x),
                    ))
                },
                &breaks,
                &graded,
                spec,
                guard,
            )
        }
        ComponentKind::Polar { radial, angular } => {
            let (breaks, graded) = angle_breaks(opts.focus);
            let inner_spec = QuadratureSpec {
                rel_tol: spec.rel_tol * 0.1,
                ..*spec
            };
            let rho = radial.rho;
            // panel s near rho carries about exp(-(beta + 1) s) of the mass
            let outer_spec = QuadratureSpec {
                grading_depth: (36.0 / (radial.beta + 1.0)).clamp(8.0, spec.grading_depth),
                ..*spec
            };
            integrate_line(
                |n: Node| {
                    // offset form near rho avoids cancellation in 1 - r/rho
                    let (gap, dens) = if n.from_hi <= n.from_lo {
                        ((1.0 - rho) + n.from_hi, radial.density_at_offset(n.from_hi))
                    } else {
                        (1.0 - n.x, radial.density(n.x))
                    };
                    if opts.analytic_angle && gap >= TRAPEZOID_MIN_GAP {
                        let inner = periodic_trapezoid(
                            |t| scaled(&f(&SpectralPoint::polar(gap, t)), angular.density(t)),
                            trapezoid_points(gap, angular.m),
                        );
                        return Ok(scaled(&inner, dens));
                    }
                    let focus: &[f64] = if gap < 0.05 { &graded } else { &[] };
                    let inner: V = integrate_pieces(
                        |m: Node| {
                            Ok(scaled(
                                &f(&SpectralPoint::polar(gap, m.x)),
                                angular.density(m.x),
                            ))
                        },
                        &breaks,
                        focus,
                        &inner_spec,
                        None,
                    )?;
                    Ok(scaled(&inner, dens))
                },
                0.0,
                rho,
                false,
                radial.grade_outer(),
                &outer_spec,
                guard,
            )
        }
        ComponentKind::ImaginarySegment { half_width } => {
            let h = half_width;
            let mut breaks = vec![-h, 0.0, h];
            let mut graded = vec![0.0];
            for &b in opts.focus {
                if b > -h && b < h && b != 0.0 {
                    breaks.push(b);
                    graded.push(b);
                }
            }
            breaks.sort_by(f64::total_cmp);
            let dens = 0.5 / h;
            integrate_pieces(
                |n: Node| {
                    Ok(scaled(
                        &f(&SpectralPoint {
                            z: Complex64::new(0.0, n.x),
                            gap: 0.0,
                        }),
                        dens,
                    ))
                },
                &breaks,
                &graded,
                spec,
                guard,
            )
        }
        ComponentKind::RealSegment { lo, hi } => {
            let dens = 1.0 / (hi - lo);
            integrate_line(
                |n: Node| {
                    let a = if n.from_hi <= n.from_lo {
                        hi - n.from_hi
                    } else {
                        n.x
                    };
                    let gap = if n.from_hi <= n.from_lo {
                        -hi + n.from_hi
                    } else {
                        -n.x
                    };
                    Ok(scaled(
                        &f(&SpectralPoint {
                            z: Complex64::new(a, 0.0),
                            gap,
                        }),
                        dens,
                    ))
                },
                lo,
                hi,
                false,
                hi == 0.0,
                spec,
                guard,
            )
        }
        ComponentKind::HalfPlaneBox {
            re_lo,
            re_hi,
            im_half_width,
        } => {
            let h = im_half_width;
            let dens = 1.0 / ((re_hi - re_lo) * 2.0 * h);
            let inner_spec = QuadratureSpec {
                rel_tol: spec.rel_tol * 0.1,
                ..*spec
            };
            let mut breaks = vec![-h, 0.0, h];
            for &b in opts.focus {
                if b > -h && b < h && b != 0.0 {
                    breaks.push(b);
                }
            }
            breaks.sort_by(f64::total_cmp);
            integrate_line(
                |n: Node| {
                    let (a, gap) = if n.from_hi <= n.from_lo {
                        (re_hi - n.from_hi, -re_hi + n.from_hi)
                    } else {
                        (n.x, -n.x)
                    };
                    let graded: Vec<f64> = if gap < 0.05 { breaks.clone() } else { vec![] };
                    let inner: V = integrate_pieces(
                        |m: Node| {
                            Ok(f(&SpectralPoint {
                                z: Complex64::new(a, m.x),
                                gap,
                            }))
                        },
                        &breaks,
                        &graded,
                        &inner_spec,
                        None,
                    )?;
                    Ok(scaled(&inner, dens))
                },
                re_lo,
                re_hi,
                false,
                re_hi == 0.0,
                spec,
                guard,
            )
        }
    }
}

/// A window of the real axis written in gap coordinates `g = 1 - t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSpan {
    pub g_lo: f64,
    pub g_hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl GapSpan {
    /// `t` in `[lo, hi]`.
    pub fn closed_t(lo: f64, hi: f64) -> Self {
        GapSpan {
            g_lo: 1.0 - hi,
            g_hi: 1.0 - lo,
            lo_closed: true,
            hi_closed: true,
        }
    }

    /// `t` in `(a, b]`.
    pub fn half_open_t(a: f64, b: f64) -> Self {
        GapSpan {
            g_lo: 1.0 - b,
            g_hi: 1.0 - a,
            lo_closed: true,
            hi_closed: false,
        }
    }

    /// `t` in `(1 - x, 1]`, exact for tiny `x`.
    pub fn top(x: f64) -> Self {
        GapSpan {
            g_lo: 0.0,
            g_hi: x,
            lo_closed: true,
            hi_closed: false,
        }
    }

    /// `t` in `[-1, 1 - x]`, exact for tiny `x`.
    pub fn below(x: f64) -> Self {
        GapSpan {
            g_lo: x,
            g_hi: 2.0,
            lo_closed: true,
            hi_closed: true,
        }
    }

    pub fn support(fam: &IntervalFamily) -> Self {
        let (lo, hi) = fam.support();
        Self::closed_t(lo, hi)
    }

    pub fn contains_gap(&self, g: f64) -> bool {
        let lo_ok = if self.lo_closed {
            g >= self.g_lo
        } else {
            g > self.g_lo
        };
        let hi_ok = if self.hi_closed {
            g <= self.g_hi
        } else {
            g < self.g_hi
        };
        lo_ok && hi_ok
    }

    fn intersect(&self, other: &GapSpan) -> GapSpan {
        GapSpan {
            g_lo: self.g_lo.max(other.g_lo),
            g_hi: self.g_hi.min(other.g_hi),
            lo_closed: true,
            hi_closed: true,
        }
    }
}

/// Integral of `f(t, 1 - t, 1 - |t|) * density` over the part of a family's
/// support inside `span`; both gaps are accurate near their zeros.
pub(crate) fn integrate_family<V, F>(
    fam: &IntervalFamily,
    span: &GapSpan,
    f: F,
    spec: &QuadratureSpec,
    guard: Option<f64>,
) -> Result<V>
where
    V: QuadValue,
    F: Fn(f64, f64, f64) -> V,
{
    let sup = GapSpan::support(fam);
    let s = sup.intersect(span);
    let g_lo = s.g_lo;
    let g_hi = s.g_hi;
    let t_lo = 1.0 - g_hi;
    let grade_near_one = g_lo < 0.5;
    let grade_far = g_hi > 1.5 || (fam.singular_lo() && g_hi == sup.g_hi);
    let eval = |n: Node| -> Result<V> {
        let gap = if n.from_lo <= n.from_hi {
            g_lo + n.from_lo
        } else {
            g_hi - n.from_hi
        };
        let t = if n.from_hi < n.from_lo {
            t_lo + n.from_hi
        } else {
            1.0 - gap
        };
        let pgap = if t >= 0.0 {
            gap
        } else if n.from_hi < n.from_lo && g_hi == 2.0 {
            n.from_hi
        } else {
            1.0 + t
        };
        Ok(scaled(&f(t, gap, pgap), fam.density(t, gap)))
    };
    if !(g_hi > g_lo) {
        return Ok(f(1.0 - g_lo, g_lo, g_lo).zero_like());
    }
    integrate_line(eval, g_lo, g_hi, grade_near_one, grade_far, spec, guard)
}

/// Integral of `f(t, gap)` over the real points of a disk measure whose gap
/// lies in `span`. Atoms are included per the span's closedness flags;
/// non-real components carry no mass on the real line and are skipped.
pub fn integrate_real<F>(
    measure: &SpectralMeasure,
    span: &GapSpan,
    f: F,
    spec: &QuadratureSpec,
    guard_factor: Option<f64>,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64,
{
    measure.require_domain(Domain::Disk)?;
    let mut total = 0.0;
    for c in measure.components() {
        if c.mass == 0.0 {
            continue;
        }
        match c.kind {
            ComponentKind::Atom { z } if z.im == 0.0 => {
                let p = atom_point(Domain::Disk, z);
                // gap in t-coordinates: 1 - t (2 at t = -1)
                let g = 1.0 - z.re;
                let g = if z.re > 0.0 { p.gap } else { g };
                if span.contains_gap(g) {
                    let v = f(z.re, g);
                    if v.is_nan() {
                        return Err(Error::InvalidIntegrand(format!("atom at {z}")));
                    }
                    if !v.is_finite() {
                        return Err(Error::Divergent(format!("integrand infinite at atom {z}")));
                    }
                    total += c.mass * v;
                }
            }
            ComponentKind::Interval(fam) => {
                let v: f64 = integrate_family(&fam, span, |t, g, _| f(t, g), spec, guard_factor)?;
                total += c.mass * v;
            }
            _ => {}
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{AngularDensity, MeasureComponent, RadialDensity};
    use approx::assert_relative_eq;

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn atom_at_zero() {
        let m = SpectralMeasure::dirac(Domain::Disk, 0.0, 0.0, 1.0).unwrap();
        let v: Complex64 = integrate(&m, |p| p.z.powu(3), &spec()).unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
        let w: Complex64 = integrate(&m, |p| 1.0 / (1.0 - p.z), &spec()).unwrap();
        assert_eq!(w, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn density_one_fourth_power() {
        let m = SpectralMeasure::disk(vec![MeasureComponent::interval(
            IntervalFamily::Uniform { a: 0.0, b: 1.0 },
            1.0,
        )])
        .unwrap();
        let v: f64 = integrate(&m, |p| p.z.re.powi(4), &spec()).unwrap();
        assert_relative_eq!(v, 0.2, max_relative = 1e-12);
    }

    #[test]
    fn polar_and_arc_masses() {
        let m = SpectralMeasure::disk(vec![
            MeasureComponent::new(
                ComponentKind::Polar {
                    radial: RadialDensity {
                        rho: 0.9,
                        beta: 1.5,
                    },
                    angular: AngularDensity { kappa: 0.4, m: 3 },
                },
                0.7,
            ),
            MeasureComponent::new(ComponentKind::Arc(AngularDensity { kappa: 0.5, m: 1 }), 0.3),
        ])
        .unwrap();
        let v: f64 = integrate(&m, |_| 1.0, &spec()).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-11);
        // first moment of the arc: kappa/2 * mass
        let z1: Complex64 = integrate(&m, |p| p.z, &spec()).unwrap();
        assert!(z1.im.abs() < 1e-13);
    }

    #[test]
    fn half_plane_components() {
        let m = SpectralMeasure::half_plane(vec![
            MeasureComponent::new(ComponentKind::ImaginarySegment { half_width: 2.0 }, 0.5),
            MeasureComponent::new(ComponentKind::RealSegment { lo: -3.0, hi: -1.0 }, 0.25),
            MeasureComponent::new(
                ComponentKind::HalfPlaneBox {
                    re_lo: -1.0,
                    re_hi: 0.0,
                    im_half_width: 1.0,
                },
                0.25,
            ),
        ])
        .unwrap();
        let v: f64 = integrate(&m, |_| 1.0, &spec()).unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-12);
        // E[b^2] on the segment = h^2/3
        let b2: f64 = integrate(
            &SpectralMeasure::half_plane(vec![MeasureComponent::new(
                ComponentKind::ImaginarySegment { half_width: 2.0 },
                1.0,
            )])
            .unwrap(),
            |p| p.z.im * p.z.im,
            &spec(),
        )
        .unwrap();
        assert_relative_eq!(b2, 4.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn divergence_detected() {
        let m = SpectralMeasure::disk(vec![MeasureComponent::interval(
            IntervalFamily::Uniform { a: 0.0, b: 1.0 },
            1.0,
        )])
        .unwrap();
        let r: Result<f64> = integrate(&m, |p| 1.0 / p.gap, &spec());
        assert!(matches!(r, Err(Error::Divergent(_))));
    }

    #[test]
    fn real_window() {
        let m = SpectralMeasure::disk(vec![
            MeasureComponent::interval(IntervalFamily::Uniform { a: 0.0, b: 1.0 }, 1.0),
            MeasureComponent::atom(-1.0, 0.0, 0.5),
        ])
        .unwrap();
        let x = 1e-9;
        let v = integrate_real(&m, &GapSpan::below(x), |_, g| 1.0 / g, &spec(), None).unwrap();
        assert_relative_eq!(v, -x.ln() + 0.25, max_relative = 1e-10);
        let top = integrate_real(&m, &GapSpan::top(1e-12), |_, _| 1.0, &spec(), None).unwrap();
        assert_relative_eq!(top, 1e-12, max_relative = 1e-12);
    }
}
