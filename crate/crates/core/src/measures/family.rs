//! Named density families.

use std::f64::consts::PI;

use statrs::function::erf::erf;

use crate::error::{Error, Result};

/// Probability densities supported in `[-1, 1]`. A component's mass scales them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalFamily {
    /// Uniform on `[a, b]`.
    Uniform { a: f64, b: f64 },
    /// `(1 - gamma) (1 - t)^(-gamma)` on `[0, 1)`, `gamma < 1`.
    PowerLaw { gamma: f64 },
    /// `1 + a sin(ln(1-t)) + a cos(ln(1-t))` on `[0, 1)`.
    DefNiu { a: f64 },
    /// `exp(sqrt(L)) / (2 sqrt(L) M)` with `L = -ln(1-t)` on `(0, 1)`.
    ExpSqrtLog,
}

/// `M = int_0^inf exp(u - u^2) du`, the normalizer of [`IntervalFamily::ExpSqrtLog`].
pub fn exp_sqrt_log_norm() -> f64 {
    0.25f64.exp() * (PI.sqrt() / 2.0) * (1.0 + erf(0.5))
}

impl IntervalFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            IntervalFamily::Uniform { a, b } => {
                if !(a.is_finite() && b.is_finite() && -1.0 <= a && a < b && b <= 1.0) {
                    return Err(Error::InvalidMeasure(format!(
                        "uniform support [{a}, {b}] must satisfy -1 <= a < b <= 1"
                    )));
                }
            }
            IntervalFamily::PowerLaw { gamma } => {
                if !(gamma.is_finite() && gamma < 1.0) {
                    return Err(Error::InvalidMeasure(format!(
                        "power-law exponent gamma = {gamma} must be < 1"
                    )));
                }
            }
            IntervalFamily::DefNiu { a } => {
                if !(a.is_finite() && a.abs() <= std::f64::consts::FRAC_1_SQRT_2) {
                    return Err(Error::InvalidMeasure(format!(
                        "def-niu amplitude a = {a} must satisfy |a| <= 1/sqrt(2)"
                    )));
                }
            }
            IntervalFamily::ExpSqrtLog => {}
        }
        Ok(())
    }

    /// Support `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            IntervalFamily::Uniform { a, b } => (a, b),
            _ => (0.0, 1.0),
        }
    }

    /// Whether the density is unbounded at the lower end of the support.
    pub fn singular_lo(&self) -> bool {
        matches!(self, IntervalFamily::ExpSqrtLog)
    }

    /// Probability density at `t`, given the accurate `gap = 1 - t`.
    pub fn density(&self, t: f64, gap: f64) -> f64 {
        match *self {
            IntervalFamily::Uniform { a, b } => {
                if t >= a && t <= b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            IntervalFamily::PowerLaw { gamma } => {
                if !(0.0..=1.0).contains(&t) || gap <= 0.0 {
                    return 0.0;
                }
                (1.0 - gamma) * gap.powf(-gamma)
            }
            IntervalFamily::DefNiu { a } => {
                if !(0.0..=1.0).contains(&t) || gap <= 0.0 {
                    return 0.0;
                }
                let l = gap.ln();
                1.0 + a * (l.sin() + l.cos())
            }
            IntervalFamily::ExpSqrtLog => {
                if !(0.0..=1.0).contains(&t) || gap <= 0.0 || t <= 0.0 {
                    return 0.0;
                }
                let l = if gap < 0.5 { -gap.ln() } else { -(-t).ln_1p() };
                let r = l.sqrt();
                r.exp() / (2.0 * r) / exp_sqrt_log_norm()
            }
        }
    }

    /// `nu((1 - y, 1])` for `y` in `(0, 1]` per unit mass, where available in closed form.
    pub fn top_tail(&self, y: f64) -> Option<f64> {
        let y = y.clamp(0.0, 1.0);
        match *self {
            IntervalFamily::PowerLaw { gamma } => Some(y.powf(1.0 - gamma)),
            IntervalFamily::DefNiu { a } => {
                if y == 0.0 {
                    Some(0.0)
                } else {
                    Some(y * (1.0 + a * y.ln().sin()))
                }
            }
            _ => None,
        }
    }
}

/// Angle density `(1 + kappa cos(m theta)) / (2 pi)` on `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularDensity {
    pub kappa: f64,
    pub m: u32,
}

impl AngularDensity {
    pub const UNIFORM: AngularDensity = AngularDensity { kappa: 0.0, m: 0 };

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa.is_finite() && self.kappa.abs() <= 1.0) {
            return Err(Error::InvalidMeasure(format!(
                "angular modulation kappa = {} must satisfy |kappa| <= 1",
                self.kappa
            )));
        }
        if self.m == 0 && self.kappa != 0.0 {
            return Err(Error::InvalidMeasure(
                "angular modulation with m = 0 must have kappa = 0".into(),
            ));
        }
        Ok(())
    }

    pub fn density(&self, theta: f64) -> f64 {
        (1.0 + self.kappa * (self.m as f64 * theta).cos()) / (2.0 * PI)
    }

    /// Mass of `[-x, x]`, `0 <= x <= pi`.
    pub fn symmetric_mass(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, PI);
        let mut v = 2.0 * x;
        if self.m > 0 {
            let m = self.m as f64;
            v += 2.0 * self.kappa * (m * x).sin() / m;
        }
        v / (2.0 * PI)
    }

    /// Mass of `[a, b]` with `-pi <= a <= b <= pi`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let prim = |t: f64| {
            let mut v = t;
            if self.m > 0 {
                let m = self.m as f64;
                v += self.kappa * (m * t).sin() / m;
            }
            v / (2.0 * PI)
        };
        (prim(b) - prim(a)).max(0.0)
    }

    /// `int cos(k theta) density(theta) d theta`.
    pub fn fourier(&self, k: u64) -> f64 {
        let mut c = if k == 0 { 1.0 } else { 0.0 };
        if self.m > 0 && k == self.m as u64 {
            c += 0.5 * self.kappa;
        }
        c
    }
}

/// Radial density `(beta + 1)/rho (1 - r/rho)^beta` on `[0, rho)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialDensity {
    pub rho: f64,
    pub beta: f64,
}

impl RadialDensity {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::InvalidMeasure(format!(
                "polar radius bound rho = {} must lie in (0, 1]",
                self.rho
            )));
        }
        if !(self.beta > -1.0 && self.beta.is_finite()) {
            return Err(Error::InvalidMeasure(format!(
                "polar exponent beta = {} must be > -1",
                self.beta
            )));
        }
        Ok(())
    }

    pub fn density(&self, r: f64) -> f64 {
        if !(0.0..self.rho).contains(&r) {
            return 0.0;
        }
        (self.beta + 1.0) / self.rho * (1.0 - r / self.rho).powf(self.beta)
    }

    /// Density at `r = rho - d`.
    pub fn density_at_offset(&self, d: f64) -> f64 {
        if !(d > 0.0 && d <= self.rho) {
            return 0.0;
        }
        (self.beta + 1.0) / self.rho * (d / self.rho).powf(self.beta)
    }

    /// Probability that the distance to the unit circle is at most `g`.
    pub fn gap_cdf(&self, g: f64) -> f64 {
        let r0 = 1.0 - g;
        if r0 >= self.rho {
            0.0
        } else if r0 <= 0.0 {
            1.0
        } else {
            (1.0 - r0 / self.rho).powf(self.beta + 1.0)
        }
    }

    /// Whether quadrature should grade toward `r = rho`.
    pub fn grade_outer(&self) -> bool {
        // non-integer beta leaves a derivative singularity at rho
        self.beta < 0.0 || self.beta.fract() != 0.0 || self.rho > 0.9
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::quad::{integrate_line, QuadratureSpec};
    use approx::assert_relative_eq;

    fn mass(f: IntervalFamily) -> f64 {
        let (lo, hi) = f.support();
        integrate_line(
            |n| Ok(f.density(n.x, (1.0 - hi) + n.from_hi)),
            lo,
            hi,
            f.singular_lo(),
            true,
            &QuadratureSpec::default(),
            None,
        )
        .unwrap()
    }

    #[test]
    fn families_are_probabilities() {
        for f in [
            IntervalFamily::Uniform { a: -0.3, b: 0.8 },
            IntervalFamily::PowerLaw { gamma: 0.5 },
            IntervalFamily::PowerLaw { gamma: -1.0 },
            IntervalFamily::DefNiu { a: 0.25 },
            IntervalFamily::ExpSqrtLog,
        ] {
            assert_relative_eq!(mass(f), 1.0, max_relative = 1e-9);
        }
    }

    #[test]
    fn exp_sqrt_log_density_matches_numerical_derivative() {
        // V(x) = (exp(sqrt(ln 1/x)) - 1)/M, density(1-x) = -x V'(x)
        let m = exp_sqrt_log_norm();
        let v = |x: f64| ((-x.ln()).sqrt().exp() - 1.0) / m;
        for &x in &[1e-8, 1e-4, 1e-2, 0.3] {
            let h = x * 1e-5;
            let dv = (v(x + h) - v(x - h)) / (2.0 * h);
            let d = IntervalFamily::ExpSqrtLog.density(1.0 - x, x);
            assert_relative_eq!(d, -x * dv, max_relative = 1e-6);
        }
    }

    #[test]
    fn top_tail_closed_forms() {
        let f = IntervalFamily::DefNiu { a: 0.25 };
        for &y in &[1e-3, 0.1, 0.7] {
            let direct: f64 = integrate_line(
                |n| Ok(f.density(1.0 - n.from_hi, n.from_hi)),
                1.0 - y,
                1.0,
                false,
                true,
                &QuadratureSpec::default(),
                None,
            )
            .unwrap();
            assert_relative_eq!(direct, f.top_tail(y).unwrap(), max_relative = 1e-6);
        }
        let p = IntervalFamily::PowerLaw { gamma: 0.5 };
        assert_relative_eq!(p.top_tail(0.04).unwrap(), 0.2, max_relative = 1e-15);
    }

    #[test]
    fn angular_masses() {
        let a = AngularDensity { kappa: 0.5, m: 2 };
        assert_relative_eq!(a.symmetric_mass(PI), 1.0, max_relative = 1e-14);
        assert_relative_eq!(
            a.mass_between(-0.4, 0.4),
            a.symmetric_mass(0.4),
            max_relative = 1e-14
        );
        assert_eq!(AngularDensity::UNIFORM.fourier(3), 0.0);
        assert_eq!(a.fourier(2), 0.25);
    }

    #[test]
    fn validation() {
        assert!(IntervalFamily::PowerLaw { gamma: 1.0 }.validate().is_err());
        assert!(IntervalFamily::DefNiu { a: 0.8 }.validate().is_err());
        assert!(AngularDensity { kappa: 0.3, m: 0 }.validate().is_err());
        assert!(RadialDensity {
            rho: 1.2,
            beta: 0.0
        }
        .validate()
        .is_err());
    }
}
