//! Spectral measures on the closed unit disk or the closed left half-plane,
//! and integration against them.

pub mod family;
pub(crate) mod integrate;
mod moments;
pub mod quad;
mod region;
mod sample;
mod schema;

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub use family::{AngularDensity, IntervalFamily, RadialDensity};
pub use integrate::{integrate, integrate_real, integrate_with, GapSpan, IntegrateOptions};
pub use moments::MomentRule;
pub use quad::QuadratureSpec;
pub use region::{region_mass, Region};
pub use sample::{sample_point, LineTable, Sampler};
pub use schema::{ComponentSpec, MeasureSpec};

/// Where the measure lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Disk,
    LeftHalfPlane,
}

impl Domain {
    pub fn name(&self) -> &'static str {
        match self {
            Domain::Disk => "disk",
            Domain::LeftHalfPlane => "left-half-plane",
        }
    }
}

/// A point of the domain together with its distance to the boundary, kept
/// separately so that `1 - |z|` (disk) or `-Re z` (half-plane) stays exact
/// for points crowding the boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    pub z: Complex64,
    pub gap: f64,
}

impl SpectralPoint {
    /// Disk point `(1 - gap) e^{i theta}`.
    pub fn polar(gap: f64, theta: f64) -> Self {
        SpectralPoint {
            z: Complex64::from_polar(1.0 - gap, theta),
            gap,
        }
    }

    /// Real disk point with known `gap = 1 - t`.
    pub fn real(t: f64, gap: f64) -> Self {
        SpectralPoint {
            z: Complex64::new(t, 0.0),
            gap,
        }
    }

    /// Disk point from coordinates (gap computed as `1 - |z|`).
    pub fn disk(z: Complex64) -> Self {
        SpectralPoint {
            z,
            gap: 1.0 - z.norm(),
        }
    }

    /// Half-plane point; the gap is `-Re z`.
    pub fn half_plane(z: Complex64) -> Self {
        SpectralPoint { z, gap: -z.re }
    }

    pub fn arg(&self) -> f64 {
        self.z.im.atan2(self.z.re)
    }

    /// `1 - |z|^2` for disk points.
    pub fn one_minus_abs_sq(&self) -> f64 {
        self.gap * (2.0 - self.gap)
    }

    /// `|1 - z|^2` for disk points, accurate near `z = 1`.
    pub fn abs_one_minus_sq(&self) -> f64 {
        let s = (0.5 * self.arg()).sin();
        self.gap * self.gap + 4.0 * (1.0 - self.gap) * s * s
    }

    /// `|z|^n` for disk points.
    pub fn modulus_pow(&self, n: f64) -> f64 {
        if n == 0.0 {
            1.0
        } else if self.gap >= 1.0 {
            0.0
        } else {
            (n * (-self.gap).ln_1p()).exp()
        }
    }

    /// `z^n` for disk points.
    pub fn pow(&self, n: u64) -> Complex64 {
        if n == 0 {
            return Complex64::new(1.0, 0.0);
        }
        let r = self.modulus_pow(n as f64);
        if self.z.im == 0.0 {
            // keep real points exactly real
            let sign = if self.z.re < 0.0 && n % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            return Complex64::new(sign * r, 0.0);
        }
        Complex64::from_polar(r, (n as f64) * self.arg())
    }

    pub fn on_circle(&self) -> bool {
        self.gap == 0.0
    }
}

// atoms written as (cos t, sin t) may miss |z| = 1 by a few ulps
const CIRCLE_SLACK: f64 = 4.0 * f64::EPSILON;

/// The point carried by an atom at `z`.
pub fn atom_point(domain: Domain, z: Complex64) -> SpectralPoint {
    match domain {
        Domain::Disk => {
            let r = z.norm();
            if (r - 1.0).abs() <= CIRCLE_SLACK {
                SpectralPoint { z: z / r, gap: 0.0 }
            } else {
                SpectralPoint { z, gap: 1.0 - r }
            }
        }
        Domain::LeftHalfPlane => SpectralPoint::half_plane(z),
    }
}

/// One ingredient of a mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ComponentKind {
    Atom {
        z: Complex64,
    },
    Interval(IntervalFamily),
    /// Density on the unit circle.
    Arc(AngularDensity),
    /// Product density over radius and angle in the open disk.
    Polar {
        radial: RadialDensity,
        angular: AngularDensity,
    },
    /// Uniform on `{ i b : |b| <= half_width }`.
    ImaginarySegment {
        half_width: f64,
    },
    /// Uniform on the real segment `[lo, hi]` inside `(-inf, 0]`.
    RealSegment {
        lo: f64,
        hi: f64,
    },
    /// Uniform on `[re_lo, re_hi] x [-im_half_width, im_half_width]`.
    HalfPlaneBox {
        re_lo: f64,
        re_hi: f64,
        im_half_width: f64,
    },
}

impl ComponentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ComponentKind::Atom { .. } => "atom",
            ComponentKind::Interval(IntervalFamily::Uniform { .. }) => "uniform",
            ComponentKind::Interval(IntervalFamily::PowerLaw { .. }) => "power-law",
            ComponentKind::Interval(IntervalFamily::DefNiu { .. }) => "def-niu",
            ComponentKind::Interval(IntervalFamily::ExpSqrtLog) => "exp-sqrt-log",
            ComponentKind::Arc(_) => "arc",
            ComponentKind::Polar { .. } => "polar",
            ComponentKind::ImaginarySegment { .. } => "imaginary-segment",
            ComponentKind::RealSegment { .. } => "real-segment",
            ComponentKind::HalfPlaneBox { .. } => "half-plane-box",
        }
    }

    fn domain(&self) -> Option<Domain> {
        match self {
            ComponentKind::Atom { .. } => None,
            ComponentKind::Interval(_) | ComponentKind::Arc(_) | ComponentKind::Polar { .. } => {
                Some(Domain::Disk)
            }
            _ => Some(Domain::LeftHalfPlane),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureComponent {
    pub kind: ComponentKind,
    pub mass: f64,
}

impl MeasureComponent {
    pub fn new(kind: ComponentKind, mass: f64) -> Self {
        MeasureComponent { kind, mass }
    }

    pub fn atom(re: f64, im: f64, mass: f64) -> Self {
        Self::new(
            ComponentKind::Atom {
                z: Complex64::new(re, im),
            },
            mass,
        )
    }

    pub fn interval(family: IntervalFamily, mass: f64) -> Self {
        Self::new(ComponentKind::Interval(family), mass)
    }

    pub fn uniform_arc(mass: f64) -> Self {
        Self::new(ComponentKind::Arc(AngularDensity::UNIFORM), mass)
    }

    /// Real-valued support, i.e. the component lives on `[-1, 1]` or on the
    /// real half-line.
    pub fn is_real(&self) -> bool {
        match self.kind {
            ComponentKind::Atom { z } => z.im == 0.0,
            ComponentKind::Interval(_) | ComponentKind::RealSegment { .. } => true,
            _ => false,
        }
    }

    fn validate(&self, domain: Domain) -> Result<()> {
        if !(self.mass >= 0.0 && self.mass.is_finite()) {
            return Err(Error::InvalidMeasure(format!(
                "component mass {} must be finite and >= 0",
                self.mass
            )));
        }
        if let Some(d) = self.kind.domain() {
            if d != domain {
                return Err(Error::InvalidMeasure(format!(
                    "component '{}' does not live on the {} domain",
                    self.kind.name(),
                    domain.name()
                )));
            }
        }
        match self.kind {
            ComponentKind::Atom { z } => {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::InvalidMeasure("atom location must be finite".into()));
                }
                let inside = match domain {
                    Domain::Disk => z.norm() <= 1.0 + CIRCLE_SLACK,
                    Domain::LeftHalfPlane => z.re <= 0.0,
                };
                if !inside {
                    return Err(Error::InvalidMeasure(format!(
                        "atom at {z} lies outside the {} domain",
                        domain.name()
                    )));
                }
            }
            ComponentKind::Interval(f) => f.validate()?,
            ComponentKind::Arc(a) => a.validate()?,
            ComponentKind::Polar { radial, angular } => {
                radial.validate()?;
                angular.validate()?;
            }
            ComponentKind::ImaginarySegment { half_width } => {
                if !(half_width > 0.0 && half_width.is_finite()) {
                    return Err(Error::InvalidMeasure(
                        "imaginary segment half width must be finite and > 0".into(),
                    ));
                }
            }
            ComponentKind::RealSegment { lo, hi } => {
                if !(lo.is_finite() && lo < hi && hi <= 0.0) {
                    return Err(Error::InvalidMeasure(format!(
                        "real segment [{lo}, {hi}] must satisfy lo < hi <= 0"
                    )));
                }
            }
            ComponentKind::HalfPlaneBox {
                re_lo,
                re_hi,
                im_half_width,
            } => {
                if !(re_lo.is_finite() && re_lo < re_hi && re_hi <= 0.0) {
                    return Err(Error::InvalidMeasure(format!(
                        "box real range [{re_lo}, {re_hi}] must satisfy lo < hi <= 0"
                    )));
                }
                if !(im_half_width > 0.0 && im_half_width.is_finite()) {
                    return Err(Error::InvalidMeasure(
                        "box imaginary half width must be finite and > 0".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A finite mixture of atoms and named densities.
#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    domain: Domain,
    components: Vec<MeasureComponent>,
    sampler: OnceLock<Arc<Sampler>>,
}

impl PartialEq for SpectralMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.domain == other.domain && self.components == other.components
    }
}

impl SpectralMeasure {
    pub fn new(domain: Domain, components: Vec<MeasureComponent>) -> Result<Self> {
        for (i, c) in components.iter().enumerate() {
            c.validate(domain)
                .map_err(|e| prefix_error(e, &format!("components[{i}]")))?;
        }
        check_conjugate_pairs(&components)?;
        Ok(SpectralMeasure {
            domain,
            components,
            sampler: OnceLock::new(),
        })
    }

    pub fn disk(components: Vec<MeasureComponent>) -> Result<Self> {
        Self::new(Domain::Disk, components)
    }

    pub fn half_plane(components: Vec<MeasureComponent>) -> Result<Self> {
        Self::new(Domain::LeftHalfPlane, components)
    }

    /// Single atom of the given mass.
    pub fn dirac(domain: Domain, re: f64, im: f64, mass: f64) -> Result<Self> {
        Self::new(domain, vec![MeasureComponent::atom(re, im, mass)])
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn components(&self) -> &[MeasureComponent] {
        &self.components
    }

    pub fn total_mass(&self) -> f64 {
        self.components.iter().map(|c| c.mass).sum()
    }

    /// Mass carried by the unit circle.
    pub fn circle_mass(&self) -> f64 {
        if self.domain != Domain::Disk {
            return 0.0;
        }
        self.components
            .iter()
            .map(|c| match c.kind {
                ComponentKind::Arc(_) => c.mass,
                ComponentKind::Atom { z } if atom_point(Domain::Disk, z).on_circle() => c.mass,
                _ => 0.0,
            })
            .sum()
    }

    /// All mass on the real line (a reversible process).
    pub fn is_reversible(&self) -> bool {
        self.components.iter().all(|c| c.mass == 0.0 || c.is_real())
    }

    pub fn require_domain(&self, expected: Domain) -> Result<()> {
        if self.domain != expected {
            return Err(Error::DomainMismatch {
                expected: expected.name(),
                found: self.domain.name(),
            });
        }
        Ok(())
    }

    /// Cached sampling tables.
    pub fn sampler(&self) -> Result<Arc<Sampler>> {
        if let Some(s) = self.sampler.get() {
            return Ok(s.clone());
        }
        let s = Arc::new(Sampler::new(self)?);
        Ok(self.sampler.get_or_init(|| s).clone())
    }
}

fn prefix_error(e: Error, path: &str) -> Error {
    match e {
        Error::InvalidMeasure(m) => Error::InvalidMeasure(format!("{path}: {m}")),
        other => other,
    }
}

fn check_conjugate_pairs(components: &[MeasureComponent]) -> Result<()> {
    for (i, c) in components.iter().enumerate() {
        if let ComponentKind::Atom { z } = c.kind {
            if z.im == 0.0 || c.mass == 0.0 {
                continue;
            }
            let paired = components.iter().enumerate().any(|(j, d)| {
                j != i
                    && matches!(d.kind, ComponentKind::Atom { z: w }
                        if w.re == z.re && w.im == -z.im)
                    && (d.mass - c.mass).abs() <= 1e-12 * c.mass
            });
            if !paired {
                return Err(Error::InvalidMeasure(format!(
                    "components[{i}]: atom at {z} needs a conjugate partner of equal mass"
                )));
            }
        }
    }
    Ok(())
}
