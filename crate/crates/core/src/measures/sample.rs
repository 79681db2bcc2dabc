use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use super::family::{AngularDensity, IntervalFamily, RadialDensity};
use super::quad::kronrod21;
use super::{atom_point, ComponentKind, SpectralMeasure, SpectralPoint};
use crate::error::{Error, Result};

const GRADE_STEP: f64 = 0.05;
const PLAIN_CELLS: usize = 512;
const GUIDE: usize = 4096;

/// A node of a [`LineTable`]: coordinate plus exact offsets from both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableNode {
    pub x: f64,
    pub from_lo: f64,
    pub from_hi: f64,
}

impl TableNode {
    fn lerp(&self, other: &TableNode, u: f64) -> TableNode {
        TableNode {
            x: self.x + u * (other.x - self.x),
            from_lo: self.from_lo + u * (other.from_lo - self.from_lo),
            from_hi: self.from_hi + u * (other.from_hi - self.from_hi),
        }
    }
}

/// Inverse-CDF table for a nonnegative weight on `[lo, hi]`, with cells
/// graded geometrically toward the flagged ends.
#[derive(Debug, Clone)]
pub struct LineTable {
    nodes: Vec<TableNode>,
    cdf: Vec<f64>,
    guide: Vec<u32>,
    total: f64,
}

impl LineTable {
    pub fn build<W>(lo: f64, hi: f64, grade_lo: bool, grade_hi: bool, weight: W) -> Result<Self>
    where
        W: Fn(&TableNode) -> f64,
    {
        if !(hi > lo) {
            return Err(Error::InvalidMeasure(format!(
                "empty sampling span [{lo}, {hi}]"
            )));
        }
        let w = hi - lo;
        let h = 0.5 * w;
        let (gx, gw) = kronrod21();
        let cell_mass = |a: &TableNode, b: &TableNode| -> f64 {
            let mut s = 0.0;
            for k in 0..21 {
                let u = 0.5 * (gx[k] + 1.0);
                s += gw[k] * weight(&a.lerp(b, u)).max(0.0);
            }
            0.5 * s * (b.x - a.x).abs()
        };
        let graded_offsets = |toward_lo: bool| -> Vec<f64> {
            // offsets h e^{-s}, sweeping until the remaining cells are negligible
            let s_cap = h.ln() + 690.0;
            let mut out = vec![h];
            let mut acc = 0.0;
            let mut small = 0;
            let mut s = 0.0;
            loop {
                s += GRADE_STEP;
                let d0 = *out.last().unwrap();
                let d1 = h * (-s).exp();
                let node = |d: f64| {
                    if toward_lo {
                        TableNode {
                            x: lo + d,
                            from_lo: d,
                            from_hi: w - d,
                        }
                    } else {
                        TableNode {
                            x: hi - d,
                            from_lo: w - d,
                            from_hi: d,
                        }
                    }
                };
                let m = cell_mass(&node(d1), &node(d0));
                acc += m;
                out.push(d1);
                if m <= 1e-17 * acc || acc == 0.0 && s > 60.0 {
                    small += 1;
                } else {
                    small = 0;
                }
                if small >= 40 || s >= s_cap {
                    break;
                }
            }
            out
        };
        let mut nodes: Vec<TableNode> = Vec::new();
        if grade_lo {
            let offs = graded_offsets(true);
            for &d in offs.iter().rev() {
                nodes.push(TableNode {
                    x: lo + d,
                    from_lo: d,
                    from_hi: w - d,
                });
            }
            nodes.pop(); // the midpoint is re-added below
        } else {
            for i in 0..PLAIN_CELLS {
                let d = h * (i as f64) / (PLAIN_CELLS as f64);
                nodes.push(TableNode {
                    x: lo + d,
                    from_lo: d,
                    from_hi: w - d,
                });
            }
        }
        nodes.push(TableNode {
            x: lo + h,
            from_lo: h,
            from_hi: h,
        });
        if grade_hi {
            let offs = graded_offsets(false);
            for &d in offs.iter().skip(1) {
                nodes.push(TableNode {
                    x: hi - d,
                    from_lo: w - d,
                    from_hi: d,
                });
            }
        } else {
            for i in (0..PLAIN_CELLS).rev() {
                let d = h * (i as f64) / (PLAIN_CELLS as f64);
                nodes.push(TableNode {
                    x: hi - d,
                    from_lo: w - d,
                    from_hi: d,
                });
            }
        }
        let mut cdf = Vec::with_capacity(nodes.len());
        cdf.push(0.0);
        let mut acc = 0.0;
        for pair in nodes.windows(2) {
            acc += cell_mass(&pair[0], &pair[1]);
            cdf.push(acc);
        }
        if !(acc > 0.0) || !acc.is_finite() {
            return Err(Error::InvalidMeasure("sampling weight has no mass".into()));
        }
        let mut guide = Vec::with_capacity(GUIDE + 1);
        let mut i = 0usize;
        for k in 0..=GUIDE {
            let target = acc * (k as f64) / (GUIDE as f64);
            while i + 2 < cdf.len() && cdf[i + 1] <= target {
                i += 1;
            }
            guide.push(i as u32);
        }
        Ok(LineTable {
            nodes,
            cdf,
            guide,
            total: acc,
        })
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Cumulative weight up to coordinate `x` (piecewise linear).
    pub fn cdf_at(&self, x: f64) -> f64 {
        if x <= self.nodes[0].x {
            return 0.0;
        }
        let last = self.nodes.len() - 1;
        if x >= self.nodes[last].x {
            return self.total;
        }
        let i = self.nodes.partition_point(|n| n.x <= x) - 1;
        let a = &self.nodes[i];
        let b = &self.nodes[i + 1];
        let u = if b.x > a.x {
            (x - a.x) / (b.x - a.x)
        } else {
            0.0
        };
        self.cdf[i] + u * (self.cdf[i + 1] - self.cdf[i])
    }

    /// Node at cumulative fraction `u` in `[0, 1)`.
    pub fn invert(&self, u: f64) -> TableNode {
        let target = u * self.total;
        let k = ((u * GUIDE as f64) as usize).min(GUIDE);
        let mut i = self.guide[k] as usize;
        let last = self.cdf.len() - 2;
        while i < last && self.cdf[i + 1] <= target {
            i += 1;
        }
        let c0 = self.cdf[i];
        let c1 = self.cdf[i + 1];
        let f = if c1 > c0 {
            ((target - c0) / (c1 - c0)).clamp(0.0, 1.0)
        } else {
            0.5
        };
        self.nodes[i].lerp(&self.nodes[i + 1], f)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TableNode {
        self.invert(rng.gen::<f64>())
    }
}

#[derive(Debug, Clone)]
enum AngleSampler {
    Uniform,
    Table(LineTable),
}

impl AngleSampler {
    fn new(a: &AngularDensity) -> Result<Self> {
        if a.kappa == 0.0 {
            return Ok(AngleSampler::Uniform);
        }
        let a = *a;
        Ok(AngleSampler::Table(LineTable::build(
            -PI,
            PI,
            false,
            false,
            move |n| a.density(n.x),
        )?))
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            AngleSampler::Uniform => PI * (2.0 * rng.gen::<f64>() - 1.0),
            AngleSampler::Table(t) => t.sample(rng).x,
        }
    }
}

#[derive(Debug, Clone)]
enum Part {
    Atom(SpectralPoint),
    /// Table over the gap `g = 1 - t` on `[g_lo, g_hi]`.
    Interval {
        table: LineTable,
        g_hi: f64,
    },
    Arc(AngleSampler),
    Polar {
        radial: LineTable,
        rho: f64,
        angle: AngleSampler,
    },
    ImaginarySegment(f64),
    RealSegment(f64, f64),
    Box(f64, f64, f64),
}

/// Draws points from `nu / nu(domain)`.
#[derive(Debug, Clone)]
pub struct Sampler {
    cum: Vec<f64>,
    parts: Vec<Part>,
}

/// Gap table for an interval family in the variable `g = 1 - t`.
pub(crate) fn family_gap_table(fam: &IntervalFamily) -> Result<(LineTable, f64)> {
    let (lo, hi) = fam.support();
    let g_lo = 1.0 - hi;
    let g_hi = 1.0 - lo;
    let f = *fam;
    let table = LineTable::build(
        g_lo,
        g_hi,
        g_lo < 0.5,
        g_hi > 1.5 || fam.singular_lo(),
        move |n| {
            let (t, gap) = family_coords(n, g_hi);
            f.density(t, gap)
        },
    )?;
    Ok((table, g_hi))
}

/// `(t, 1 - t)` at a gap-table node.
fn family_coords(n: &TableNode, g_hi: f64) -> (f64, f64) {
    let gap = n.x;
    let t = if n.from_hi < n.from_lo {
        (1.0 - g_hi) + n.from_hi
    } else {
        1.0 - gap
    };
    (t, gap)
}

impl Sampler {
    pub fn new(measure: &SpectralMeasure) -> Result<Self> {
        let mut cum = Vec::new();
        let mut parts = Vec::new();
        let mut acc = 0.0;
        for c in measure.components() {
            if c.mass == 0.0 {
                continue;
            }
            let part = match c.kind {
                ComponentKind::Atom { z } => Part::Atom(atom_point(measure.domain(), z)),
                ComponentKind::Interval(fam) => {
                    let (table, g_hi) = family_gap_table(&fam)?;
                    Part::Interval { table, g_hi }
                }
                ComponentKind::Arc(a) => Part::Arc(AngleSampler::new(&a)?),
                ComponentKind::Polar { radial, angular } => Part::Polar {
                    radial: radial_table(&radial)?,
                    rho: radial.rho,
                    angle: AngleSampler::new(&angular)?,
                },
                ComponentKind::ImaginarySegment { half_width } => {
                    Part::ImaginarySegment(half_width)
                }
                ComponentKind::RealSegment { lo, hi } => Part::RealSegment(lo, hi),
                ComponentKind::HalfPlaneBox {
                    re_lo,
                    re_hi,
                    im_half_width,
                } => Part::Box(re_lo, re_hi, im_half_width),
            };
            acc += c.mass;
            cum.push(acc);
            parts.push(part);
        }
        if parts.is_empty() || !(acc > 0.0) {
            return Err(Error::EmptyMeasure);
        }
        Ok(Sampler { cum, parts })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SpectralPoint {
        let idx = if self.parts.len() == 1 {
            0
        } else {
            let target = rng.gen::<f64>() * self.cum[self.cum.len() - 1];
            self.cum
                .partition_point(|&c| c <= target)
                .min(self.parts.len() - 1)
        };
        match &self.parts[idx] {
            Part::Atom(p) => *p,
            Part::Interval { table, g_hi } => {
                let n = table.sample(rng);
                let (t, gap) = family_coords(&n, *g_hi);
                let pgap = if t >= 0.0 {
                    gap
                } else if n.from_hi < n.from_lo && *g_hi == 2.0 {
                    n.from_hi
                } else {
                    1.0 + t
                };
                SpectralPoint::real(t, pgap)
            }
            Part::Arc(a) => SpectralPoint::polar(0.0, a.sample(rng)),
            Part::Polar { radial, rho, angle } => {
                let n = radial.sample(rng);
                let gap = if n.from_hi < n.from_lo {
                    (1.0 - rho) + n.from_hi
                } else {
                    1.0 - n.x
                };
                SpectralPoint::polar(gap, angle.sample(rng))
            }
            Part::ImaginarySegment(h) => SpectralPoint {
                z: Complex64::new(0.0, h * (2.0 * rng.gen::<f64>() - 1.0)),
                gap: 0.0,
            },
            Part::RealSegment(lo, hi) => {
                let a = lo + (hi - lo) * rng.gen::<f64>();
                SpectralPoint::half_plane(Complex64::new(a, 0.0))
            }
            Part::Box(re_lo, re_hi, h) => {
                let a = re_lo + (re_hi - re_lo) * rng.gen::<f64>();
                let b = h * (2.0 * rng.gen::<f64>() - 1.0);
                SpectralPoint::half_plane(Complex64::new(a, b))
            }
        }
    }
}

fn radial_table(r: &RadialDensity) -> Result<LineTable> {
    let r = *r;
    LineTable::build(0.0, r.rho, false, r.grade_outer(), move |n| {
        if n.from_hi < n.from_lo {
            r.density_at_offset(n.from_hi)
        } else {
            r.density(n.x)
        }
    })
}

/// One draw from `nu / nu(domain)`.
pub fn sample_point<R: Rng + ?Sized>(
    measure: &SpectralMeasure,
    rng: &mut R,
) -> Result<SpectralPoint> {
    if !(measure.total_mass() > 0.0) {
        return Err(Error::EmptyMeasure);
    }
    Ok(measure.sampler()?.sample(rng))
}
