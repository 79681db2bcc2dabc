#![allow(dead_code)]

use rand::Rng;
use specvar::measures::family::{AngularDensity, IntervalFamily, RadialDensity};
use specvar::measures::{ComponentKind, MeasureComponent, SpectralMeasure};

/// A disk mixture of two to four pieces: real atoms, conjugate atom pairs,
/// circle arcs, interval densities and polar densities.
pub fn random_mixture<R: Rng>(rng: &mut R) -> SpectralMeasure {
    let k = rng.gen_range(2..=4);
    let mut comps = Vec::new();
    for _ in 0..k {
        let w = rng.gen_range(0.1..1.0);
        match rng.gen_range(0..5) {
            0 => comps.push(MeasureComponent::atom(rng.gen_range(-1.0..1.0), 0.0, w)),
            1 => {
                let r: f64 = rng.gen_range(0.0..1.0);
                let r = if rng.gen_bool(0.3) { 1.0 } else { r };
                let a: f64 = rng.gen_range(0.1..3.0);
                comps.push(MeasureComponent::atom(r * a.cos(), r * a.sin(), 0.5 * w));
                comps.push(MeasureComponent::atom(r * a.cos(), -r * a.sin(), 0.5 * w));
            }
            2 => {
                let m = rng.gen_range(1..4);
                let kappa = rng.gen_range(-1.0..1.0);
                comps.push(MeasureComponent::new(
                    ComponentKind::Arc(AngularDensity { kappa, m }),
                    w,
                ));
            }
            3 => {
                let a = rng.gen_range(-1.0..0.5);
                let b = rng.gen_range(a + 0.1..1.0);
                comps.push(MeasureComponent::interval(
                    IntervalFamily::Uniform { a, b },
                    w,
                ));
            }
            _ => {
                let radial = RadialDensity {
                    rho: rng.gen_range(0.3..0.95),
                    beta: rng.gen_range(-0.5..2.0),
                };
                let m = rng.gen_range(0..3);
                let kappa = if m == 0 {
                    0.0
                } else {
                    rng.gen_range(-1.0..1.0)
                };
                comps.push(MeasureComponent::new(
                    ComponentKind::Polar {
                        radial,
                        angular: AngularDensity { kappa, m },
                    },
                    w,
                ));
            }
        }
    }
    SpectralMeasure::disk(comps).expect("valid by construction")
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
