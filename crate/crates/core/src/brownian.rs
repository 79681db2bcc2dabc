//! Walk-on-spheres exit sampling for the unit disk and the left half-plane,
//! and Monte Carlo harmonic-measure estimates for spectral measures.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::measures::{Domain, SpectralMeasure, SpectralPoint};
use crate::rng::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WosConfig {
    /// Capture distance to the boundary.
    pub epsilon: f64,
    pub max_steps: u64,
    pub seed: u64,
}

impl Default for WosConfig {
    fn default() -> Self {
        WosConfig {
            epsilon: 1e-6,
            max_steps: 1_000_000,
            seed: 0,
        }
    }
}

impl WosConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 0.1) {
            return Err(Error::OutOfRange(format!(
                "epsilon = {} must lie in (0, 0.1)",
                self.epsilon
            )));
        }
        if self.max_steps < 1000 {
            return Err(Error::OutOfRange(format!(
                "max_steps = {} must be >= 1000",
                self.max_steps
            )));
        }
        Ok(())
    }
}

/// Exit point of Brownian motion started at `start`. Points on the boundary
/// exit at themselves.
pub fn wos_exit<R: Rng + ?Sized>(
    domain: Domain,
    start: &SpectralPoint,
    config: &WosConfig,
    rng: &mut R,
) -> Result<Complex64> {
    let mut z = start.z;
    let mut d = start.gap;
    for _ in 0..config.max_steps {
        if d < config.epsilon {
            // nearest boundary point
            return Ok(match domain {
                Domain::Disk => {
                    let r = z.norm();
                    if r > 0.0 {
                        z / r
                    } else {
                        Complex64::new(1.0, 0.0)
                    }
                }
                Domain::LeftHalfPlane => Complex64::new(0.0, z.im),
            });
        }
        let u: f64 = rng.gen::<f64>() * 2.0 * PI;
        z += Complex64::from_polar(d, u);
        d = match domain {
            Domain::Disk => 1.0 - z.norm(),
            Domain::LeftHalfPlane => -z.re,
        };
    }
    Err(Error::StepLimit(config.max_steps))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub x: f64,
    pub value: f64,
    /// Binomial standard error.
    pub se: f64,
    pub paths: u64,
    pub seed: u64,
}

/// Exit points of `paths` walks started from `nu / nu(domain)`; path `i`
/// uses stream `i` of the seed.
pub fn exit_points(
    measure: &SpectralMeasure,
    paths: u64,
    config: &WosConfig,
) -> Result<Vec<Complex64>> {
    config.validate()?;
    if !(measure.total_mass() > 0.0) {
        return Err(Error::EmptyMeasure);
    }
    let sampler = measure.sampler()?;
    let domain = measure.domain();
    (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(config.seed, i);
            let p = sampler.sample(&mut rng);
            wos_exit(domain, &p, config, &mut rng)
        })
        .collect()
}

/// Hit frequency of the arc `{e^{iu}: |u| < x}` (disk) or the window
/// `(-ix, ix)` (half-plane) for each `x`.
pub fn harmonic_estimate(
    measure: &SpectralMeasure,
    xs: &[f64],
    paths: u64,
    config: &WosConfig,
) -> Result<Vec<MonteCarloEstimate>> {
    if paths < 1000 {
        return Err(Error::OutOfRange(format!(
            "need >= 1000 paths, got {paths}"
        )));
    }
    let exits = exit_points(measure, paths, config)?;
    let domain = measure.domain();
    Ok(xs
        .iter()
        .map(|&x| {
            let hits = exits
                .iter()
                .filter(|w| match domain {
                    Domain::Disk => w.im.atan2(w.re).abs() < x,
                    Domain::LeftHalfPlane => w.im.abs() < x,
                })
                .count() as f64;
            let n = paths as f64;
            let p = hits / n;
            MonteCarloEstimate {
                x,
                value: p,
                se: (p * (1.0 - p) / n).sqrt(),
                paths,
                seed: config.seed,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::MeasureComponent;
    use crate::stats::ks_statistic;

    fn cfg(seed: u64) -> WosConfig {
        WosConfig {
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn config_checks() {
        assert!(WosConfig {
            epsilon: 0.2,
            ..cfg(0)
        }
        .validate()
        .is_err());
        assert!(WosConfig {
            max_steps: 10,
            ..cfg(0)
        }
        .validate()
        .is_err());
        // the guard itself, below the validated range
        let short = WosConfig {
            max_steps: 3,
            ..cfg(1)
        };
        let mut rng = stream_rng(1, 0);
        let start = SpectralPoint::half_plane(Complex64::new(-1.0, 0.0));
        let r = wos_exit(Domain::LeftHalfPlane, &start, &short, &mut rng);
        assert!(matches!(r, Err(Error::StepLimit(3))));
    }

    #[test]
    fn disk_center_exit_is_uniform() {
        let m = SpectralMeasure::dirac(Domain::Disk, 0.0, 0.0, 1.0).unwrap();
        let exits = exit_points(&m, 20_000, &cfg(3)).unwrap();
        let ang: Vec<f64> = exits.iter().map(|w| w.im.atan2(w.re)).collect();
        let ks = ks_statistic(&ang, |t| (t + PI) / (2.0 * PI));
        assert!(ks < 0.015, "{ks}");
        assert!(exits.iter().all(|w| (w.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn boundary_starts_exit_in_place() {
        let m = SpectralMeasure::disk(vec![MeasureComponent::uniform_arc(1.0)]).unwrap();
        let est = harmonic_estimate(&m, &[0.3], 4000, &cfg(5)).unwrap();
        assert!((est[0].value - 0.3 / PI).abs() < 4.0 * est[0].se);
        let mut rng = stream_rng(0, 0);
        let p = SpectralPoint::half_plane(Complex64::new(0.0, 2.5));
        let w = wos_exit(Domain::LeftHalfPlane, &p, &cfg(0), &mut rng).unwrap();
        assert_eq!(w, Complex64::new(0.0, 2.5));
    }

    #[test]
    fn reproducible() {
        let m = SpectralMeasure::dirac(Domain::LeftHalfPlane, -1.0, 0.0, 1.0).unwrap();
        let a = harmonic_estimate(&m, &[0.5, 1.0], 2000, &cfg(9)).unwrap();
        let b = harmonic_estimate(&m, &[0.5, 1.0], 2000, &cfg(9)).unwrap();
        assert_eq!(a, b);
    }
}
