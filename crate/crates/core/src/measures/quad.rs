//! Adaptive Gauss-Kronrod quadrature on lines, with exponentially graded
//! panels toward endpoints where the integrand may blow up.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

// 21-point Kronrod extension of the 10-point Gauss rule (abscissae > 0 first).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_138_826,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Public view of the 21-point rule on [-1, 1]: (nodes, weights).
pub fn kronrod21() -> ([f64; 21], [f64; 21]) {
    let mut x = [0.0; 21];
    let mut w = [0.0; 21];
    for j in 0..10 {
        x[j] = -XGK[j];
        w[j] = WGK[j];
        x[20 - j] = XGK[j];
        w[20 - j] = WGK[j];
    }
    x[10] = 0.0;
    w[10] = WGK[10];
    (x, w)
}

/// Tolerances and limits for adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Bisections allowed per adaptive call.
    pub max_subdivisions: usize,
    /// Number of e-folds of the endpoint offset that graded panels always
    /// cover before the tail test may stop them.
    pub grading_depth: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            max_subdivisions: 2000,
            grading_depth: 46.0,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol >= 0.0) {
            return Err(Error::OutOfRange("quadrature tolerance must be > 0".into()));
        }
        if self.max_subdivisions < 1 {
            return Err(Error::OutOfRange("max_subdivisions must be >= 1".into()));
        }
        if !(self.grading_depth > 0.0) {
            return Err(Error::OutOfRange("grading_depth must be > 0".into()));
        }
        Ok(())
    }
}

/// Values that can be integrated: scalars, complex numbers, vectors.
pub trait QuadValue: Clone {
    fn zero_like(&self) -> Self;
    /// `self += w * x`
    fn axpy(&mut self, w: f64, x: &Self);
    fn norm(&self) -> f64;
    fn has_nan(&self) -> bool;
}

impl QuadValue for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn axpy(&mut self, w: f64, x: &Self) {
        *self += w * x;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn has_nan(&self) -> bool {
        self.is_nan()
    }
}

impl QuadValue for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn axpy(&mut self, w: f64, x: &Self) {
        self.re += w * x.re;
        self.im += w * x.im;
    }
    fn norm(&self) -> f64 {
        self.re.abs().max(self.im.abs())
    }
    fn has_nan(&self) -> bool {
        self.re.is_nan() || self.im.is_nan()
    }
}

impl QuadValue for Vec<f64> {
    fn zero_like(&self) -> Self {
        vec![0.0; self.len()]
    }
    fn axpy(&mut self, w: f64, x: &Self) {
        for (a, b) in self.iter_mut().zip(x) {
            *a += w * b;
        }
    }
    fn norm(&self) -> f64 {
        self.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    fn has_nan(&self) -> bool {
        self.iter().any(|v| v.is_nan())
    }
}

/// A quadrature node on a line segment `[lo, hi]`. The two offsets are exact
/// on the graded side, so callers can recover quantities such as `1 - t`
/// without cancellation.
#[derive(Debug, Clone, Copy)]
pub struct Node {
    pub x: f64,
    pub from_lo: f64,
    pub from_hi: f64,
}

struct Segment<V> {
    a: f64,
    b: f64,
    est: V,
    err: f64,
}

impl<V> PartialEq for Segment<V> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<V> Eq for Segment<V> {}
impl<V> PartialOrd for Segment<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Segment<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

fn nan_error(u: f64) -> Error {
    Error::InvalidIntegrand(format!("{u:e}"))
}

fn gk21<V, F>(g: &mut F, a: f64, b: f64) -> Result<(V, f64)>
where
    V: QuadValue,
    F: FnMut(f64) -> Result<V>,
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = g(c)?;
    if fc.has_nan() {
        return Err(nan_error(c));
    }
    let mut vals: Vec<(f64, V)> = Vec::with_capacity(21);
    let mut resk = fc.zero_like();
    let mut resg = fc.zero_like();
    resk.axpy(WGK[10], &fc);
    let mut resabs = WGK[10] * fc.norm();
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = g(c - dx)?;
        let f2 = g(c + dx)?;
        if f1.has_nan() {
            return Err(nan_error(c - dx));
        }
        if f2.has_nan() {
            return Err(nan_error(c + dx));
        }
        resk.axpy(WGK[j], &f1);
        resk.axpy(WGK[j], &f2);
        if j % 2 == 1 {
            resg.axpy(WG[j / 2], &f1);
            resg.axpy(WG[j / 2], &f2);
        }
        resabs += WGK[j] * (f1.norm() + f2.norm());
        vals.push((WGK[j], f1));
        vals.push((WGK[j], f2));
    }
    vals.push((WGK[10], fc));
    let mut mean = resk.zero_like();
    mean.axpy(0.5, &resk);
    let mut resasc = 0.0;
    for (w, v) in &vals {
        let mut d = v.clone();
        d.axpy(-1.0, &mean);
        resasc += w * d.norm();
    }
    let mut diff = resk.clone();
    diff.axpy(-1.0, &resg);
    let habs = h.abs();
    let mut err = diff.norm() * habs;
    resasc *= habs;
    resabs *= habs;
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    let mut est = resk.zero_like();
    est.axpy(h, &resk);
    Ok((est, err))
}

/// Outcome of one adaptive call: estimate, error, and whether the target was met.
struct Adaptive<V> {
    est: V,
    err: f64,
    converged: bool,
}

fn adaptive<V, F>(
    g: &mut F,
    a: f64,
    b: f64,
    abs_target: f64,
    rel_tol: f64,
    max_sub: usize,
) -> Result<Adaptive<V>>
where
    V: QuadValue,
    F: FnMut(f64) -> Result<V>,
{
    let (est, err) = gk21(g, a, b)?;
    let mut total = est.clone();
    let mut total_err = err;
    if total_err <= abs_target.max(rel_tol * total.norm()) {
        return Ok(Adaptive {
            est: total,
            err: total_err,
            converged: true,
        });
    }
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, est, err });
    let mut splits = 0;
    while splits < max_sub {
        let Some(seg) = heap.pop() else { break };
        let m = 0.5 * (seg.a + seg.b);
        if !(m > seg.a && m < seg.b) {
            // cannot bisect further; keep it and stop
            heap.push(seg);
            break;
        }
        let (e1, r1) = gk21(g, seg.a, m)?;
        let (e2, r2) = gk21(g, m, seg.b)?;
        total.axpy(-1.0, &seg.est);
        total.axpy(1.0, &e1);
        total.axpy(1.0, &e2);
        total_err += r1 + r2 - seg.err;
        heap.push(Segment {
            a: seg.a,
            b: m,
            est: e1,
            err: r1,
        });
        heap.push(Segment {
            a: m,
            b: seg.b,
            est: e2,
            err: r2,
        });
        splits += 1;
        if splits % 64 == 0 {
            // refresh sums to avoid drift
            total = total.zero_like();
            total_err = 0.0;
            for s in heap.iter() {
                total.axpy(1.0, &s.est);
                total_err += s.err;
            }
        }
        if total_err <= abs_target.max(rel_tol * total.norm()) {
            break;
        }
    }
    let mut est = total.zero_like();
    let mut err = 0.0;
    for s in heap.iter() {
        est.axpy(1.0, &s.est);
        err += s.err;
    }
    let converged = err <= abs_target.max(rel_tol * est.norm()) * 10.0;
    Ok(Adaptive {
        est,
        err,
        converged,
    })
}

fn check_guard<V: QuadValue>(total: &V, guard: Option<f64>) -> Result<()> {
    if let Some(gd) = guard {
        if total.norm() > gd {
            return Err(Error::Divergent(format!(
                "estimate {:e} exceeds overflow guard {:e}",
                total.norm(),
                gd
            )));
        }
    }
    Ok(())
}

/// Integrate over `[lo, hi]` with optional exponential grading at each end.
///
/// Graded halves are swept in panels of unit width in `s = -ln(offset / h)`;
/// the sweep stops once panel contributions are negligible past
/// `spec.grading_depth`, and reports `Divergent` when block sums stop
/// decaying or the running total crosses `guard`.
pub fn integrate_line<V, F>(
    mut f: F,
    lo: f64,
    hi: f64,
    grade_lo: bool,
    grade_hi: bool,
    spec: &QuadratureSpec,
    guard: Option<f64>,
) -> Result<V>
where
    V: QuadValue,
    F: FnMut(Node) -> Result<V>,
{
    let w = hi - lo;
    if !(w > 0.0) {
        let probe = f(Node {
            x: lo,
            from_lo: 0.0,
            from_hi: 0.0,
        })?;
        return Ok(probe.zero_like());
    }
    if !grade_lo && !grade_hi {
        let mut g = |x: f64| {
            f(Node {
                x,
                from_lo: x - lo,
                from_hi: hi - x,
            })
        };
        let r = adaptive(
            &mut g,
            lo,
            hi,
            spec.abs_tol,
            spec.rel_tol,
            spec.max_subdivisions,
        )?;
        if !r.converged {
            return Err(Error::Divergent(format!(
                "adaptive refinement did not converge on [{lo:e}, {hi:e}] (error {:e})",
                r.err
            )));
        }
        check_guard(&r.est, guard)?;
        return Ok(r.est);
    }
    let h = 0.5 * w;
    let mid = lo + h;
    let mut total: Option<V> = None;
    // plain halves first so the graded sweeps know the scale of the answer
    for &(is_lo_half, graded) in &[(true, grade_lo), (false, grade_hi)] {
        if graded {
            continue;
        }
        let (a, b) = if is_lo_half { (lo, mid) } else { (mid, hi) };
        let mut g = |x: f64| {
            f(Node {
                x,
                from_lo: x - lo,
                from_hi: hi - x,
            })
        };
        let r = adaptive(
            &mut g,
            a,
            b,
            spec.abs_tol,
            spec.rel_tol,
            spec.max_subdivisions,
        )?;
        if !r.converged {
            return Err(Error::Divergent(format!(
                "adaptive refinement did not converge on [{a:e}, {b:e}]"
            )));
        }
        match total.as_mut() {
            Some(t) => t.axpy(1.0, &r.est),
            None => total = Some(r.est),
        }
    }
    for &(toward_hi, graded) in &[(true, grade_hi), (false, grade_lo)] {
        if !graded {
            continue;
        }
        let mut g = |s: f64| -> Result<V> {
            let d = h * (-s).exp();
            let node = if toward_hi {
                Node {
                    x: hi - d,
                    from_lo: w - d,
                    from_hi: d,
                }
            } else {
                Node {
                    x: lo + d,
                    from_lo: d,
                    from_hi: w - d,
                }
            };
            let v = f(node)?;
            let mut out = v.zero_like();
            out.axpy(d, &v);
            Ok(out)
        };
        graded_sweep(&mut g, h, spec, guard, &mut total)?;
    }
    let total = total.expect("at least one half integrated");
    check_guard(&total, guard)?;
    Ok(total)
}

fn graded_sweep<V, F>(
    g: &mut F,
    h: f64,
    spec: &QuadratureSpec,
    guard: Option<f64>,
    total: &mut Option<V>,
) -> Result<()>
where
    V: QuadValue,
    F: FnMut(f64) -> Result<V>,
{
    // offsets below ~1e-300 underflow; never sweep past that
    let s_cap = (h.ln() + 690.0).max(spec.grading_depth + 8.0);
    let mut s = 0.0;
    let mut quiet = 0;
    let mut block = 0.0;
    let mut prev_block: Option<f64> = None;
    let mut blocks_flat = 0;
    let mut panel_index = 0usize;
    loop {
        let run_norm = total.as_ref().map(|t| t.norm()).unwrap_or(0.0);
        let abs_target = spec.abs_tol.max(0.05 * spec.rel_tol * run_norm);
        let r = adaptive(
            g,
            s,
            s + 1.0,
            abs_target,
            spec.rel_tol,
            spec.max_subdivisions,
        )?;
        if !r.converged {
            return Err(Error::Divergent(format!(
                "graded panel s in [{s}, {}] did not converge (error {:e})",
                s + 1.0,
                r.err
            )));
        }
        let pn = r.est.norm();
        match total.as_mut() {
            Some(t) => t.axpy(1.0, &r.est),
            None => *total = Some(r.est),
        }
        let t = total.as_ref().unwrap();
        check_guard(t, guard)?;
        s += 1.0;
        panel_index += 1;
        let tn = t.norm();
        if s >= spec.grading_depth {
            if pn <= 1e-3 * spec.rel_tol * tn || pn <= 1e-3 * spec.abs_tol {
                quiet += 1;
                if quiet >= 2 {
                    return Ok(());
                }
            } else {
                quiet = 0;
            }
            block += pn;
            if panel_index.is_multiple_of(16) {
                if let Some(pb) = prev_block {
                    if block >= 0.9 * pb && block > 1e-6 * spec.rel_tol * tn {
                        blocks_flat += 1;
                    } else {
                        blocks_flat = 0;
                    }
                    if blocks_flat >= 3 {
                        return Err(Error::Divergent(format!(
                            "graded sweep contributions stopped decaying (block sum {block:e} at s = {s})"
                        )));
                    }
                }
                prev_block = Some(block);
                block = 0.0;
            }
        }
        if s >= s_cap {
            if pn <= 1e-6 * tn.max(spec.abs_tol) {
                return Ok(());
            }
            return Err(Error::Divergent(format!(
                "graded sweep reached offset floor with non-negligible tail ({pn:e})"
            )));
        }
    }
}

/// Integrate over consecutive pieces split at `breaks` (sorted, at least two
/// entries). Ends listed in `focus` receive graded panels.
pub fn integrate_pieces<V, F>(
    mut f: F,
    breaks: &[f64],
    focus: &[f64],
    spec: &QuadratureSpec,
    guard: Option<f64>,
) -> Result<V>
where
    V: QuadValue,
    F: FnMut(Node) -> Result<V>,
{
    let mut total: Option<V> = None;
    for win in breaks.windows(2) {
        let (a, b) = (win[0], win[1]);
        if !(b > a) {
            continue;
        }
        let ga = focus.contains(&a);
        let gb = focus.contains(&b);
        let part = integrate_line(&mut f, a, b, ga, gb, spec, guard)?;
        match total.as_mut() {
            Some(t) => t.axpy(1.0, &part),
            None => total = Some(part),
        }
    }
    match total {
        Some(t) => Ok(t),
        None => {
            let a = breaks.first().copied().unwrap_or(0.0);
            let probe = f(Node {
                x: a,
                from_lo: 0.0,
                from_hi: 0.0,
            })?;
            Ok(probe.zero_like())
        }
    }
}
