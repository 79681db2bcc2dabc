use std::f64::consts::PI;

use super::integrate::{integrate_family, GapSpan};
use super::quad::{integrate_pieces, QuadratureSpec};
use super::{atom_point, ComponentKind, Domain, SpectralMeasure};
use crate::error::{Error, Result};

/// Canonical integration regions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// `{ r e^{iu} : 0 <= 1 - r <= |u| <= x }`, `x` in `(0, pi]`.
    WedgeU(f64),
    /// `{ r e^{iu} : 1 - r <= 1/n, |u| <= 1/n }`, `n >= 1`.
    BoxD(f64),
    /// `{ a + ib : 0 <= -a <= |b| <= x }` in the left half-plane.
    CtsWedgeU(f64),
    /// Open arc `{ e^{iu} : |u| < x }`.
    ArcGamma(f64),
    /// Real points `t` with `a < t <= b`.
    Interval(f64, f64),
    /// Real points in `(1 - x, 1]`; exact for tiny `x`.
    TopTail(f64),
    WholeDomain,
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidRegion(m));
        match *self {
            Region::WedgeU(x) if !(x > 0.0 && x <= PI) => {
                bad(format!("WedgeU({x}): need 0 < x <= pi"))
            }
            Region::BoxD(n) if !(n >= 1.0 && n.is_finite()) => {
                bad(format!("BoxD({n}): need n >= 1"))
            }
            Region::CtsWedgeU(x) if !(x > 0.0 && x.is_finite()) => {
                bad(format!("CtsWedgeU({x}): need x > 0"))
            }
            Region::ArcGamma(x) if !(x > 0.0 && x <= PI) => {
                bad(format!("ArcGamma({x}): need 0 < x <= pi"))
            }
            Region::Interval(a, b) if !(-1.0 <= a && a < b && b <= 1.0) => {
                bad(format!("Interval({a}, {b}]: need -1 <= a < b <= 1"))
            }
            Region::TopTail(x) if !(x > 0.0 && x <= 2.0) => {
                bad(format!("TopTail({x}): need 0 < x <= 2"))
            }
            _ => Ok(()),
        }
    }

    fn domain(&self) -> Option<Domain> {
        match self {
            Region::CtsWedgeU(_) => Some(Domain::LeftHalfPlane),
            Region::WholeDomain => None,
            _ => Some(Domain::Disk),
        }
    }
}

/// `nu(region)`.
pub fn region_mass(measure: &SpectralMeasure, region: Region) -> Result<f64> {
    region.validate()?;
    if let Some(d) = region.domain() {
        measure.require_domain(d)?;
    }
    let spec = QuadratureSpec::default().with_rel_tol(1e-12);
    let mut total = 0.0;
    for c in measure.components() {
        if c.mass == 0.0 {
            continue;
        }
        total += c.mass * component_mass(measure.domain(), &c.kind, region, &spec)?;
    }
    Ok(total)
}

fn component_mass(
    domain: Domain,
    kind: &ComponentKind,
    region: Region,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if region == Region::WholeDomain {
        return Ok(1.0);
    }
    let one = |_: f64, _: f64, _: f64| 1.0;
    match *kind {
        ComponentKind::Atom { z } => {
            let p = atom_point(domain, z);
            let u = p.arg().abs();
            let inside = match region {
                Region::WedgeU(x) => p.gap <= u && u <= x,
                Region::BoxD(n) => p.gap <= 1.0 / n && u <= 1.0 / n,
                Region::ArcGamma(x) => p.on_circle() && u < x,
                Region::Interval(a, b) => z.im == 0.0 && a < z.re && z.re <= b,
                Region::TopTail(x) => {
                    z.im == 0.0 && (if z.re > 0.0 { p.gap } else { 1.0 - z.re }) < x
                }
                Region::CtsWedgeU(x) => {
                    let b = z.im.abs();
                    -z.re <= b && b <= x
                }
                Region::WholeDomain => true,
            };
            Ok(if inside { 1.0 } else { 0.0 })
        }
        ComponentKind::Interval(fam) => match region {
            Region::WedgeU(x) => {
                // only t < 0 sits at angle pi
                if x >= PI {
                    integrate_family(&fam, &GapSpan::closed_t(-1.0, 0.0), one, spec, None)
                } else {
                    Ok(0.0)
                }
            }
            Region::BoxD(n) => family_top(&fam, 1.0 / n, spec),
            Region::TopTail(x) => family_top(&fam, x, spec),
            Region::Interval(a, b) => {
                integrate_family(&fam, &GapSpan::half_open_t(a, b), one, spec, None)
            }
            _ => Ok(0.0),
        },
        ComponentKind::Arc(ang) => match region {
            Region::WedgeU(x) | Region::ArcGamma(x) => Ok(ang.symmetric_mass(x)),
            Region::BoxD(n) => Ok(ang.symmetric_mass(1.0 / n)),
            _ => Ok(0.0),
        },
        ComponentKind::Polar { radial, angular } => match region {
            Region::WedgeU(x) => {
                let start = (1.0 - radial.rho).min(x);
                if start >= x {
                    return Ok(0.0);
                }
                let v: f64 = integrate_pieces(
                    |n| Ok(2.0 * angular.density(n.x) * radial.gap_cdf(n.x)),
                    &[start, x],
                    &[],
                    spec,
                    None,
                )?;
                Ok(v)
            }
            Region::BoxD(n) => Ok(radial.gap_cdf(1.0 / n) * angular.symmetric_mass(1.0 / n)),
            _ => Ok(0.0),
        },
        ComponentKind::ImaginarySegment { half_width } => match region {
            Region::CtsWedgeU(x) => Ok(x.min(half_width) / half_width),
            _ => Ok(0.0),
        },
        ComponentKind::RealSegment { .. } => Ok(0.0),
        ComponentKind::HalfPlaneBox {
            re_lo,
            re_hi,
            im_half_width,
        } => match region {
            Region::CtsWedgeU(x) => {
                let top = x.min(im_half_width);
                // length of {a in [re_lo, re_hi] : a >= -b}
                let len = |b: f64| (re_hi - re_lo.max(-b)).max(0.0);
                let mut breaks = vec![0.0, top];
                for c in [-re_hi, -re_lo] {
                    if c > 0.0 && c < top {
                        breaks.push(c);
                    }
                }
                breaks.sort_by(f64::total_cmp);
                let v: f64 = integrate_pieces(|n| Ok(len(n.x)), &breaks, &[], spec, None)?;
                Ok(2.0 * v / (2.0 * im_half_width * (re_hi - re_lo)))
            }
            _ => Ok(0.0),
        },
    }
}

fn family_top(fam: &super::IntervalFamily, y: f64, spec: &QuadratureSpec) -> Result<f64> {
    if let Some(v) = fam.top_tail(y.min(1.0)) {
        return Ok(v);
    }
    integrate_family(fam, &GapSpan::top(y), |_, _, _| 1.0, spec, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{AngularDensity, IntervalFamily, MeasureComponent, RadialDensity};
    use approx::assert_relative_eq;

    fn uniform_arc() -> SpectralMeasure {
        SpectralMeasure::disk(vec![MeasureComponent::uniform_arc(1.0)]).unwrap()
    }

    #[test]
    fn arc_wedge_is_x_over_pi() {
        for &x in &[0.01, 0.5, 2.0] {
            assert_relative_eq!(
                region_mass(&uniform_arc(), Region::WedgeU(x)).unwrap(),
                x / PI,
                max_relative = 1e-14
            );
        }
        // n nu(D_n) = 1/pi with the 1/n angle bound
        assert_relative_eq!(
            1000.0 * region_mass(&uniform_arc(), Region::BoxD(1000.0)).unwrap(),
            1.0 / PI,
            max_relative = 1e-14
        );
    }

    #[test]
    fn atom_conventions() {
        let m = SpectralMeasure::dirac(Domain::Disk, -1.0, 0.0, 1.0).unwrap();
        assert_eq!(region_mass(&m, Region::WedgeU(0.1)).unwrap(), 0.0);
        assert_eq!(region_mass(&m, Region::WedgeU(PI)).unwrap(), 1.0);
        let one = SpectralMeasure::dirac(Domain::Disk, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(region_mass(&one, Region::WedgeU(0.1)).unwrap(), 1.0);
        assert_eq!(region_mass(&one, Region::ArcGamma(0.1)).unwrap(), 1.0);
        assert_eq!(region_mass(&one, Region::Interval(0.5, 1.0)).unwrap(), 1.0);
        assert_eq!(region_mass(&one, Region::Interval(0.0, 0.5)).unwrap(), 0.0);
    }

    #[test]
    fn interval_lengths() {
        let m = SpectralMeasure::disk(vec![MeasureComponent::interval(
            IntervalFamily::Uniform { a: 0.0, b: 1.0 },
            1.0,
        )])
        .unwrap();
        for &x in &[1e-12, 1e-3, 0.4] {
            assert_relative_eq!(
                region_mass(&m, Region::Interval(1.0 - x, 1.0)).unwrap(),
                x,
                max_relative = 1e-3
            );
            assert_relative_eq!(
                region_mass(&m, Region::TopTail(x)).unwrap(),
                x,
                max_relative = 1e-12
            );
        }
        assert_eq!(region_mass(&m, Region::Interval(-1.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn wedge_monotone_in_x() {
        let m = SpectralMeasure::disk(vec![
            MeasureComponent::new(
                ComponentKind::Polar {
                    radial: RadialDensity {
                        rho: 1.0,
                        beta: 0.5,
                    },
                    angular: AngularDensity { kappa: 0.3, m: 2 },
                },
                0.5,
            ),
            MeasureComponent::uniform_arc(0.5),
        ])
        .unwrap();
        let mut prev = 0.0;
        for k in 1..=30 {
            let x = PI * (k as f64) / 30.0;
            let v = region_mass(&m, Region::WedgeU(x)).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        assert!(prev <= 1.0 + 1e-12);
    }

    #[test]
    fn half_plane_wedge() {
        let m = SpectralMeasure::half_plane(vec![MeasureComponent::new(
            ComponentKind::ImaginarySegment { half_width: 1.0 },
            1.0,
        )])
        .unwrap();
        assert_relative_eq!(region_mass(&m, Region::CtsWedgeU(0.25)).unwrap(), 0.25);
        // box [-1,0] x [-1,1]: area of {-a <= |b| <= x} is x^2 for x <= 1
        let b = SpectralMeasure::half_plane(vec![MeasureComponent::new(
            ComponentKind::HalfPlaneBox {
                re_lo: -1.0,
                re_hi: 0.0,
                im_half_width: 1.0,
            },
            1.0,
        )])
        .unwrap();
        assert_relative_eq!(
            region_mass(&b, Region::CtsWedgeU(0.5)).unwrap(),
            0.25 / 2.0,
            max_relative = 1e-12
        );
        assert!(matches!(
            region_mass(&m, Region::WedgeU(0.1)),
            Err(Error::DomainMismatch { .. })
        ));
    }

    #[test]
    fn region_validation() {
        assert!(Region::WedgeU(4.0).validate().is_err());
        assert!(Region::BoxD(0.5).validate().is_err());
        assert!(Region::Interval(0.5, 0.2).validate().is_err());
    }
}
