//! Fixed composite rule for the whole moment sequence `Re int z^k nu(dz)`,
//! `k = 0..=K`, in `O(K * active nodes)`.

use num_complex::Complex64;

use super::family::{AngularDensity, IntervalFamily, RadialDensity};
use super::quad::kronrod21;
use super::{atom_point, ComponentKind, Domain, SpectralMeasure};
use crate::error::Result;

const CELL: f64 = 0.5;
const PLAIN: usize = 16;

/// Precomputed nodes and weights for moment sequences.
#[derive(Debug, Clone)]
pub struct MomentRule {
    /// `(t, weight)` for real points.
    real: Vec<(f64, f64)>,
    /// Off-axis atoms `(z, mass)`.
    complex: Vec<(Complex64, f64)>,
    /// Arcs and polar densities: radial rule (`(r, w)`, a single `(1, 1)` for
    /// arcs), angular law, mass.
    rotational: Vec<(Vec<(f64, f64)>, AngularDensity, f64)>,
}

/// Graded composite rule for `int g(x) w(x) dx` on `[lo, hi]`, returned as
/// `(x, weight)` pairs; `dens(x, from_lo, from_hi)`.
fn graded_rule<D>(lo: f64, hi: f64, grade_lo: bool, grade_hi: bool, dens: D) -> Vec<(f64, f64)>
where
    D: Fn(f64, f64, f64) -> f64,
{
    let (gx, gw) = kronrod21();
    let w = hi - lo;
    let h = 0.5 * w;
    let mut out = Vec::new();
    let plain = |a: f64, b: f64, out: &mut Vec<(f64, f64)>| {
        for i in 0..PLAIN {
            let c0 = a + (b - a) * i as f64 / PLAIN as f64;
            let c1 = a + (b - a) * (i + 1) as f64 / PLAIN as f64;
            let half = 0.5 * (c1 - c0);
            for k in 0..21 {
                let x = c0 + half * (gx[k] + 1.0);
                let d = dens(x, x - lo, hi - x);
                if d != 0.0 {
                    out.push((x, gw[k] * half * d));
                }
            }
        }
    };
    for &(toward_hi, graded) in &[(false, grade_lo), (true, grade_hi)] {
        if !graded {
            if toward_hi {
                plain(lo + h, hi, &mut out);
            } else {
                plain(lo, lo + h, &mut out);
            }
            continue;
        }
        let s_cap = h.ln() + 690.0;
        let mut s0 = 0.0;
        let mut acc = 0.0;
        let mut small = 0;
        loop {
            let mut cell = 0.0;
            for k in 0..21 {
                let s = s0 + 0.5 * CELL * (gx[k] + 1.0);
                let d = h * (-s).exp();
                let (x, dens_v) = if toward_hi {
                    (hi - d, dens(hi - d, w - d, d))
                } else {
                    (lo + d, dens(lo + d, d, w - d))
                };
                let wt = gw[k] * 0.5 * CELL * d * dens_v;
                if wt != 0.0 {
                    out.push((x, wt));
                }
                cell += wt.abs();
            }
            acc += cell;
            s0 += CELL;
            if cell <= 1e-17 * acc || (acc == 0.0 && s0 > 60.0) {
                small += 1;
            } else {
                small = 0;
            }
            if small >= 6 || s0 >= s_cap {
                break;
            }
        }
    }
    out
}

fn family_rule(fam: &IntervalFamily) -> Vec<(f64, f64)> {
    let (lo, hi) = fam.support();
    let g_lo = 1.0 - hi;
    let g_hi = 1.0 - lo;
    let f = *fam;
    let nodes = graded_rule(
        g_lo,
        g_hi,
        g_lo < 0.5,
        g_hi > 1.5 || fam.singular_lo(),
        move |g, from_lo, from_hi| {
            let gap = if from_lo <= from_hi {
                g_lo + from_lo
            } else {
                g_hi - from_hi
            };
            let t = if from_hi < from_lo {
                (1.0 - g_hi) + from_hi
            } else {
                1.0 - gap
            };
            let _ = g;
            f.density(t, gap)
        },
    );
    // rule is in g; report t = 1 - g
    nodes.into_iter().map(|(g, w)| (1.0 - g, w)).collect()
}

fn radial_rule(r: &RadialDensity) -> Vec<(f64, f64)> {
    let r = *r;
    graded_rule(0.0, r.rho, false, r.grade_outer(), move |x, _, from_hi| {
        if from_hi < 0.5 * r.rho {
            r.density_at_offset(from_hi)
        } else {
            r.density(x)
        }
    })
}

impl MomentRule {
    pub fn new(measure: &SpectralMeasure) -> Result<Self> {
        measure.require_domain(Domain::Disk)?;
        let mut real = Vec::new();
        let mut complex = Vec::new();
        let mut rotational = Vec::new();
        for c in measure.components() {
            if c.mass == 0.0 {
                continue;
            }
            match c.kind {
                ComponentKind::Atom { z } => {
                    let p = atom_point(Domain::Disk, z);
                    if p.z.im == 0.0 {
                        real.push((p.z.re, c.mass));
                    } else {
                        complex.push((p.z, c.mass));
                    }
                }
                ComponentKind::Interval(fam) => {
                    real.extend(family_rule(&fam).into_iter().map(|(t, w)| (t, w * c.mass)));
                }
                ComponentKind::Arc(a) => rotational.push((vec![(1.0, 1.0)], a, c.mass)),
                ComponentKind::Polar { radial, angular } => {
                    rotational.push((radial_rule(&radial), angular, c.mass))
                }
                _ => unreachable!("disk measure holds only disk components"),
            }
        }
        Ok(MomentRule {
            real,
            complex,
            rotational,
        })
    }

    /// `Re int z^k nu(dz)` for `k = 0..=k_max`.
    pub fn moments(&self, k_max: usize) -> Vec<f64> {
        let mut out = vec![0.0; k_max + 1];
        // real nodes: iterate powers, dropping nodes once they underflow
        let mut live: Vec<(f64, f64, f64)> = self.real.iter().map(|&(t, w)| (t, w, 1.0)).collect();
        for (k, slot) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            let mut c = 0.0;
            for e in live.iter_mut() {
                let y = e.1 * e.2 - c;
                let t = s + y;
                c = (t - s) - y;
                s = t;
                e.2 *= e.0;
            }
            *slot = s;
            if k % 32 == 31 {
                live.retain(|e| e.2.abs() > 1e-200);
            }
        }
        for &(z, m) in &self.complex {
            let mut p = Complex64::new(1.0, 0.0);
            for slot in out.iter_mut() {
                *slot += m * p.re;
                p *= z;
            }
        }
        for (rule, ang, m) in &self.rotational {
            for (k, slot) in out.iter_mut().enumerate() {
                let a = ang.fourier(k as u64);
                if a == 0.0 {
                    continue;
                }
                let radial: f64 = rule.iter().map(|&(r, w)| w * r.powi(k as i32)).sum();
                *slot += m * a * radial;
            }
        }
        out
    }
}
