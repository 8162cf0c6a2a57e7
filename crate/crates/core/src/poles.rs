//! Siegert states: outgoing-wave solutions on `[-L, L]` satisfying
//! `psi'(+-L) = +-i k psi(+-L)`, found as zeros of the mismatch `D(k)`.
//!
//! Roots are located by Newton iteration from a grid of starting points and
//! certified by the argument principle on recursively subdivided boxes, so a
//! returned [`PoleSet`] with `winding_verified` contains every zero of `D` in
//! its region.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potentials::{Potential, Symmetry};
use crate::propagate::{self, Mesh, Scaled};
use crate::scatter::{DEFAULT_SLICES, DEFAULT_TAIL_TOL, MIN_SLICES};

/// Half-width of the band around the imaginary axis treated as "on axis".
pub const AXIS_TOL: f64 = 1e-9;
/// Required Newton residual `|D / D'|` of a polished pole.
pub const POLISH_TOL: f64 = 1e-10;
/// Poles closer than this are the same pole.
pub const MERGE_TOL: f64 = 1e-8;
/// Required accuracy of the Siegert normalization.
pub const NORM_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PoleClass {
    Bound,
    AntiBound,
    Resonance,
    AntiResonance,
}

impl PoleClass {
    pub fn label(&self) -> &'static str {
        match self {
            PoleClass::Bound => "bound",
            PoleClass::AntiBound => "antibound",
            PoleClass::Resonance => "resonance",
            PoleClass::AntiResonance => "antiresonance",
        }
    }

    pub fn on_axis(&self) -> bool {
        matches!(self, PoleClass::Bound | PoleClass::AntiBound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
    NoneApplicable,
}

impl Parity {
    pub fn label(&self) -> &'static str {
        match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
            Parity::NoneApplicable => "none",
        }
    }
}

/// Quadrant / axis classification of a Siegert momentum.
pub fn classify(k: Complex64, axis_tol: f64) -> Result<PoleClass> {
    if k.norm() < axis_tol || !k.re.is_finite() || !k.im.is_finite() {
        return Err(Error::OriginAmbiguous(k));
    }
    Ok(if k.re.abs() < axis_tol {
        if k.im > 0.0 {
            PoleClass::Bound
        } else {
            PoleClass::AntiBound
        }
    } else if k.im > 0.0 {
        // Off-axis zeros in the upper half plane cannot occur for real
        // potentials; treat them as bound so they are never mistaken for
        // resonances.
        PoleClass::Bound
    } else if k.re > 0.0 {
        PoleClass::Resonance
    } else {
        PoleClass::AntiResonance
    })
}

/// Normalized boundary values `Psi(-L)`, `Psi(L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceAmplitudes {
    pub left: Complex64,
    pub right: Complex64,
    /// Relative disagreement between the quadrature normalization and the
    /// closed-form one `N = -i psi(L) D'(k)`.
    pub norm_residual: f64,
}

/// One S-matrix pole.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pole {
    pub k: Complex64,
    pub class: PoleClass,
    pub parity: Parity,
    pub surface: Option<SurfaceAmplitudes>,
}

impl Pole {
    /// A bare pole (no surface data), classified from `k`.
    pub fn new(k: Complex64, parity: Parity) -> Result<Self> {
        let class = classify(k, AXIS_TOL)?;
        let k = if class.on_axis() { Complex64::new(0.0, k.im) } else { k };
        Ok(Self { k, class, parity, surface: None })
    }

    /// `E = k^2 / 2`.
    pub fn energy(&self) -> Complex64 {
        self.k * self.k / 2.0
    }

    /// `epsilon = Re E`.
    pub fn position(&self) -> f64 {
        self.energy().re
    }

    /// `Gamma = -2 Im E`.
    pub fn width(&self) -> f64 {
        -2.0 * self.energy().im
    }

    pub fn abs_energy(&self) -> f64 {
        self.k.norm_sqr() / 2.0
    }

    pub fn mirror(&self) -> Complex64 {
        -self.k.conj()
    }
}

/// Axis-aligned rectangle in the complex momentum plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Region {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let ok = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) && re_min < re_max && im_min < im_max;
        if !ok {
            return Err(Error::InvalidRegion(format!("[{re_min}, {re_max}] x [{im_min}, {im_max}]")));
        }
        Ok(Self { re_min, re_max, im_min, im_max })
    }

    pub fn contains(&self, k: Complex64) -> bool {
        k.re >= self.re_min && k.re <= self.re_max && k.im >= self.im_min && k.im <= self.im_max
    }

    /// Distance from `k` to the nearest edge (negative outside).
    fn edge_distance(&self, k: Complex64) -> f64 {
        (k.re - self.re_min)
            .min(self.re_max - k.re)
            .min(k.im - self.im_min)
            .min(self.im_max - k.im)
    }

    /// Distance from the closed rectangle to the origin.
    pub fn distance_to_origin(&self) -> f64 {
        let dx = if self.re_min > 0.0 { self.re_min } else if self.re_max < 0.0 { -self.re_max } else { 0.0 };
        let dy = if self.im_min > 0.0 { self.im_min } else if self.im_max < 0.0 { -self.im_max } else { 0.0 };
        dx.hypot(dy)
    }

    fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.re_min, self.im_min),
            Complex64::new(self.re_max, self.im_min),
            Complex64::new(self.re_max, self.im_max),
            Complex64::new(self.re_min, self.im_max),
        ]
    }

    fn split(&self) -> [Region; 4] {
        // Off-centre cut so children edges avoid the symmetry axes.
        let fx = 0.5 + 0.0137;
        let fy = 0.5 - 0.0089;
        let xm = self.re_min + fx * (self.re_max - self.re_min);
        let ym = self.im_min + fy * (self.im_max - self.im_min);
        [
            Region { re_min: self.re_min, re_max: xm, im_min: self.im_min, im_max: ym },
            Region { re_min: xm, re_max: self.re_max, im_min: self.im_min, im_max: ym },
            Region { re_min: self.re_min, re_max: xm, im_min: ym, im_max: self.im_max },
            Region { re_min: xm, re_max: self.re_max, im_min: ym, im_max: self.im_max },
        ]
    }

    fn size(&self) -> f64 {
        (self.re_max - self.re_min).max(self.im_max - self.im_min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Siegert half-width; `None` uses `effective_half_width(tail_tol)`.
    pub half_width: Option<f64>,
    pub tail_tol: f64,
    /// Slices of the propagation grid used for polishing and normalization.
    pub n_slices: usize,
    /// Slices used while scanning for roots and counting windings.
    pub search_slices: usize,
    /// Newton starts per side of the coarse grid.
    pub grid: usize,
    /// Subdivision depth before a count mismatch is reported.
    pub max_depth: usize,
    /// Required clearance between the region and `k = 0`.
    pub origin_margin: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            half_width: None,
            tail_tol: DEFAULT_TAIL_TOL,
            n_slices: DEFAULT_SLICES,
            search_slices: 1024,
            grid: 40,
            max_depth: 10,
            origin_margin: 1e-3,
        }
    }
}

/// The Siegert problem for one potential and box: `D(k)`, its derivative,
/// Newton polishing and winding numbers.
#[derive(Debug, Clone)]
pub struct SiegertProblem {
    potential: Potential,
    half_width: f64,
    mesh: Mesh,
}

impl SiegertProblem {
    pub fn new(p: &Potential, half_width: f64, n_slices: usize) -> Result<Self> {
        if n_slices < MIN_SLICES {
            return Err(Error::TooFewSlices(n_slices));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidParameter(format!("half-width must be positive, got {half_width}")));
        }
        Ok(Self {
            potential: p.clone(),
            half_width,
            mesh: Mesh::new(p, half_width, n_slices, true),
        })
    }

    fn with_mesh(p: &Potential, half_width: f64, n_slices: usize, collapse: bool) -> Self {
        Self { potential: p.clone(), half_width, mesh: Mesh::new(p, half_width, n_slices, collapse) }
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn mismatch(&self, k: Complex64) -> Scaled {
        propagate::siegert_mismatch(&self.mesh, k)
    }

    fn fd_step(k: Complex64) -> f64 {
        1e-6 * (1.0 + k.norm())
    }

    /// `D(k)` and `D'(k)` on a common scale (central difference for `D'`).
    pub fn mismatch_with_derivative(&self, k: Complex64) -> (Complex64, Complex64) {
        let h = Self::fd_step(k);
        let d0 = self.mismatch(k);
        let dp = self.mismatch(k + h);
        let dm = self.mismatch(k - h);
        let r = d0.log_scale;
        let deriv = (dp.relative_to(r) - dm.relative_to(r)) / (2.0 * h);
        (d0.mantissa, deriv)
    }

    /// `D'(k)` from the Cauchy integral over a circle of radius `0.15 / L`.
    /// `D` is entire of exponential type `~2L`, so 16 nodes give a
    /// truncation error near `0.3^16 / 16!`, and rounding is divided by the
    /// radius instead of a finite-difference step.
    pub fn mismatch_derivative_precise(&self, k: Complex64) -> Complex64 {
        const NODES: usize = 16;
        let r = 0.15 / self.half_width;
        let reference = self.mismatch(k).log_scale;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..NODES {
            let w = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / NODES as f64);
            acc += self.mismatch(k + r * w).relative_to(reference) / w;
        }
        acc / (NODES as f64 * r)
    }

    /// Newton step `D / D'`.
    pub fn newton_step(&self, k: Complex64) -> Complex64 {
        let (d, dd) = self.mismatch_with_derivative(k);
        d / dd
    }

    /// Newton iteration; returns the root and the number of iterations used.
    pub fn newton(&self, start: Complex64, max_iter: usize) -> Result<(Complex64, usize)> {
        let mut k = start;
        for it in 1..=max_iter {
            let step = self.newton_step(k);
            if !step.re.is_finite() || !step.im.is_finite() {
                return Err(Error::NewtonDiverged(k));
            }
            k -= step;
            if step.norm() <= POLISH_TOL * 1e-2 * (1.0 + k.norm()) {
                return Ok((k, it));
            }
        }
        if self.newton_step(k).norm() <= POLISH_TOL {
            Ok((k, max_iter))
        } else {
            Err(Error::NewtonDiverged(k))
        }
    }

    /// Real Newton on the imaginary axis `k = i kappa`, where `D` is real.
    pub fn newton_on_axis(&self, kappa: f64, max_iter: usize) -> Result<f64> {
        let mut kappa = kappa;
        for _ in 0..max_iter {
            let step = self.newton_step(Complex64::new(0.0, kappa));
            // D is real on the axis; the step along i*kappa is (D / D') / i.
            let dk = step.im;
            kappa -= dk;
            if !kappa.is_finite() {
                return Err(Error::NewtonDiverged(Complex64::new(0.0, kappa)));
            }
            if dk.abs() <= POLISH_TOL * 1e-2 * (1.0 + kappa.abs()) {
                return Ok(kappa);
            }
        }
        Err(Error::NewtonDiverged(Complex64::new(0.0, kappa)))
    }

    /// `D(i kappa)` as a real number (up to a positive scale).
    pub fn axis_value(&self, kappa: f64) -> f64 {
        let d = self.mismatch(Complex64::new(0.0, kappa));
        d.mantissa.re * d.log_scale.exp()
    }

    /// Winding number of `D` around the rectangle, by continuous tracking of
    /// `arg D` along the boundary. Returns the count and the distance of the
    /// accumulated phase from the nearest multiple of `2 pi` (in turns).
    pub fn winding(&self, region: &Region) -> Result<(i64, f64)> {
        const MAX_DPHI: f64 = 0.4;
        let corners = region.corners();
        let mut total = 0.0;
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            let a = corners[i];
            let b = corners[(i + 1) % 4];
            let len = (b - a).norm();
            let dir = (b - a) / len;
            let mut s = 0.0;
            let mut phase = self.mismatch(a).mantissa.arg();
            let min_h = len * 1e-12;
            while s < len {
                // Step bounded by the local logarithmic derivative so that
                // the phase cannot wrap unseen between samples.
                let z0 = a + dir * s;
                let (d, dd) = self.mismatch_with_derivative(z0);
                let rate = (dd / d).norm();
                let mut h = if rate.is_finite() && rate > 0.0 { MAX_DPHI / rate } else { min_h };
                h = h.clamp(min_h, len / 8.0).min(len - s);
                loop {
                    let z1 = a + dir * (s + h);
                    let zh = a + dir * (s + 0.5 * h);
                    let p1 = self.mismatch(z1).mantissa.arg();
                    let ph = self.mismatch(zh).mantissa.arg();
                    let d_full = wrap(p1 - phase);
                    let d_half = wrap(ph - phase) + wrap(p1 - ph);
                    let mismatch = (d_full - d_half).abs();
                    if (d_full.abs() > MAX_DPHI || mismatch > 1e-3) && h > min_h {
                        h *= 0.5;
                        continue;
                    }
                    worst = worst.max(mismatch / (2.0 * PI));
                    total += d_half;
                    phase = p1;
                    s += h;
                    break;
                }
            }
        }
        let turns = total / (2.0 * PI);
        let count = turns.round();
        let err = (turns - count).abs() + worst;
        Ok((count as i64, err))
    }
}

fn wrap(mut a: f64) -> f64 {
    while a > PI {
        a -= 2.0 * PI;
    }
    while a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Normalize Siegert samples so `2ik int psi^2 dx - [psi^2(L) + psi^2(-L)] = 1`
/// (no complex conjugation). `xs` must span `[-L, L]`; the integral uses
/// composite Simpson on the given nodes. Returns the scaled samples and the
/// recomputed condition minus one.
pub fn normalize_siegert(xs: &[f64], psi: &[Complex64], k: Complex64, half_width: f64) -> Result<(Vec<Complex64>, Complex64)> {
    if xs.len() != psi.len() || xs.len() < 3 {
        return Err(Error::InvalidParameter("need matching sample arrays with at least 3 points".into()));
    }
    let span_ok = (xs[0] + half_width).abs() < 1e-9 * half_width && (xs[xs.len() - 1] - half_width).abs() < 1e-9 * half_width;
    if !span_ok {
        return Err(Error::InvalidParameter("samples must span [-L, L]".into()));
    }
    let condition = |f: &[Complex64]| {
        let sq: Vec<Complex64> = f.iter().map(|z| z * z).collect();
        let integral = propagate::simpson(xs, &sq);
        2.0 * Complex64::i() * k * integral - (sq[0] + sq[sq.len() - 1])
    };
    let n = condition(psi);
    let scale = psi.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max) * (1.0 + k.norm() * half_width);
    if !(n.norm() > 1e-10 * scale) {
        return Err(Error::DegenerateNormalization(n.norm()));
    }
    let c = 1.0 / n.sqrt();
    let out: Vec<Complex64> = psi.iter().map(|z| z * c).collect();
    let residual = condition(&out) - 1.0;
    Ok((out, residual))
}

/// A certified collection of poles.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleSet {
    pub poles: Vec<Pole>,
    pub half_width: f64,
    pub regions: Vec<Region>,
    pub winding_verified: bool,
    pub potential: Potential,
}

impl PoleSet {
    pub fn len(&self) -> usize {
        self.poles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poles.is_empty()
    }

    pub fn of_class(&self, class: PoleClass) -> impl Iterator<Item = &Pole> {
        self.poles.iter().filter(move |p| p.class == class)
    }

    /// Resonances sorted by `Re k`.
    pub fn resonances(&self) -> Vec<Pole> {
        let mut r: Vec<Pole> = self.of_class(PoleClass::Resonance).copied().collect();
        r.sort_by(|a, b| a.k.re.total_cmp(&b.k.re));
        r
    }

    /// Subset with `|k| <= k_max`.
    pub fn truncated(&self, k_max: f64) -> PoleSet {
        PoleSet { poles: self.poles.iter().filter(|p| p.k.norm() <= k_max).copied().collect(), ..self.clone() }
    }

    /// Largest distance between a non-axis pole's mirror `-k*` and the set.
    pub fn mirror_defect(&self) -> f64 {
        self.poles
            .iter()
            .filter(|p| !p.class.on_axis())
            .map(|p| {
                let m = p.mirror();
                self.poles.iter().map(|q| (q.k - m).norm()).fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
}

/// Count of zeros of `D` inside `region` via the argument principle.
pub fn verify_count(p: &Potential, region: &Region, opts: &SearchOptions) -> Result<i64> {
    let l = resolve_half_width(p, opts)?;
    let problem = SiegertProblem::new(p, l, opts.search_slices.max(MIN_SLICES))?;
    let (n, err) = problem.winding(region)?;
    if err >= 0.1 {
        return Err(Error::WindingInaccurate(err));
    }
    Ok(n)
}

fn resolve_half_width(p: &Potential, opts: &SearchOptions) -> Result<f64> {
    match opts.half_width {
        Some(l) => Ok(l),
        None => p.effective_half_width(opts.tail_tol),
    }
}

fn dedup(roots: &mut Vec<Complex64>) {
    let mut out: Vec<Complex64> = Vec::with_capacity(roots.len());
    for &r in roots.iter() {
        if !out.iter().any(|o| (o - r).norm() < MERGE_TOL * (1.0 + r.norm())) {
            out.push(r);
        }
    }
    *roots = out;
}

fn snap_axis(problem: &SiegertProblem, k: Complex64) -> Complex64 {
    if k.re.abs() < 1e3 * AXIS_TOL * (1.0 + k.norm()) {
        if let Ok(kappa) = problem.newton_on_axis(k.im, 50) {
            return Complex64::new(0.0, kappa);
        }
    }
    k
}

fn newton_from_grid(problem: &SiegertProblem, region: &Region, n: usize) -> Vec<Complex64> {
    let n = n.max(1);
    let starts: Vec<Complex64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx % n, idx / n);
            Complex64::new(
                region.re_min + (region.re_max - region.re_min) * (i as f64 + 0.5) / n as f64,
                region.im_min + (region.im_max - region.im_min) * (j as f64 + 0.5) / n as f64,
            )
        })
        .collect();
    // Starts whose iterates wander far outside the box are abandoned early;
    // any root they would reach belongs to another search.
    let (w, h) = (region.re_max - region.re_min, region.im_max - region.im_min);
    let far = Region { re_min: region.re_min - w, re_max: region.re_max + w, im_min: region.im_min - h, im_max: region.im_max + h };
    let mut roots: Vec<Complex64> = starts
        .par_iter()
        .filter_map(|&s| {
            let mut k = s;
            for _ in 0..40 {
                let step = problem.newton_step(k);
                if !(step.re.is_finite() && step.im.is_finite()) {
                    return None;
                }
                k -= step;
                if !far.contains(k) {
                    return None;
                }
                if step.norm() <= POLISH_TOL * 1e-2 * (1.0 + k.norm()) {
                    return Some((k, 0));
                }
            }
            problem.newton(k, 5).ok()
        })
        .map(|(k, _)| snap_axis(problem, k))
        .filter(|k| region.contains(*k))
        .collect();
    dedup(&mut roots);
    roots
}

/// Move edges away from known roots so none sits on the contour.
fn nudge(region: Region, roots: &[Complex64]) -> Region {
    let mut r = region;
    let clearance = 1e-6f64.max(1e-4 * region.size());
    for _ in 0..8 {
        let close: Vec<&Complex64> = roots.iter().filter(|k| {
            let near_x = (k.re - r.re_min).abs().min((k.re - r.re_max).abs()) < clearance
                && k.im >= r.im_min - clearance && k.im <= r.im_max + clearance;
            let near_y = (k.im - r.im_min).abs().min((k.im - r.im_max).abs()) < clearance
                && k.re >= r.re_min - clearance && k.re <= r.re_max + clearance;
            near_x || near_y
        }).collect();
        if close.is_empty() {
            break;
        }
        for k in close {
            if (k.re - r.re_min).abs() < clearance { r.re_min -= 3.0 * clearance; }
            if (k.re - r.re_max).abs() < clearance { r.re_max += 3.0 * clearance; }
            if (k.im - r.im_min).abs() < clearance { r.im_min -= 3.0 * clearance; }
            if (k.im - r.im_max).abs() < clearance { r.im_max += 3.0 * clearance; }
        }
    }
    r
}

fn certify(problem: &SiegertProblem, region: Region, known: &[Complex64], depth: usize, max_depth: usize) -> Result<Vec<Complex64>> {
    let region = nudge(region, known);
    let (count, err) = problem.winding(&region)?;
    if err >= 0.1 {
        return Err(Error::WindingInaccurate(err));
    }
    if count < 0 {
        return Err(Error::WindingInaccurate(count as f64));
    }
    let mut inside: Vec<Complex64> = known.iter().copied().filter(|k| region.contains(*k)).collect();
    if inside.len() == count as usize {
        return Ok(inside);
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    // Extra local starts before subdividing.
    inside.extend(newton_from_grid(problem, &region, 4));
    dedup(&mut inside);
    if inside.len() == count as usize {
        return Ok(inside);
    }
    if depth >= max_depth {
        return Err(Error::CountMismatch {
            expected: count,
            found: inside.len(),
            re_min: region.re_min,
            re_max: region.re_max,
            im_min: region.im_min,
            im_max: region.im_max,
        });
    }
    // Children cover the nudged box; each root lands in exactly one child
    // after its own nudge, duplicates are merged below.
    let children = region.split();
    let parts: Vec<Result<Vec<Complex64>>> = children
        .par_iter()
        .map(|c| certify(problem, *c, &inside, depth + 1, max_depth))
        .collect();
    let mut out = Vec::new();
    for p in parts {
        out.extend(p?);
    }
    dedup(&mut out);
    if out.len() != count as usize {
        return Err(Error::CountMismatch {
            expected: count,
            found: out.len(),
            re_min: region.re_min,
            re_max: region.re_max,
            im_min: region.im_min,
            im_max: region.im_max,
        });
    }
    Ok(out)
}

/// A polished, normalized Siegert state sampled on its mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegertState {
    pub k: Complex64,
    pub xs: Vec<f64>,
    pub psi: Vec<Complex64>,
    pub surface: SurfaceAmplitudes,
}

/// Re-polish `k` on a fine, non-collapsed grid, sample the solution and
/// normalize it. The sample grid is refined until the quadrature agrees with
/// the closed form `N = -i psi(L) D'(k)` to `NORM_TOL / 10`.
pub fn siegert_state(p: &Potential, half_width: f64, k: Complex64, n_slices: usize) -> Result<SiegertState> {
    let mut n = n_slices.max(MIN_SLICES);
    let mut k = k;
    loop {
        let fine = SiegertProblem::with_mesh(p, half_width, n, false);
        if let Ok((root, _)) = fine.newton(k, 20) {
            k = if k.re == 0.0 { snap_axis(&fine, root) } else { root };
        }
        let (xs, vals, log_scale) = propagate::left_outgoing_solution(&fine.mesh, k);
        let psi: Vec<Complex64> = vals.iter().map(|v| v[0]).collect();
        let (normed, _) = normalize_siegert(&xs, &psi, k, half_width)?;
        // Closed form on the same grid, in the scale of `psi`.
        let dd = fine.mismatch_derivative_precise(k);
        let d_scale = fine.mismatch(k).log_scale;
        let n_closed = -Complex64::i() * psi[psi.len() - 1] * dd * (d_scale - log_scale).exp();
        let sq: Vec<Complex64> = psi.iter().map(|z| z * z).collect();
        let n_quad = 2.0 * Complex64::i() * k * propagate::simpson(&xs, &sq) - (sq[0] + sq[sq.len() - 1]);
        let residual = ((n_quad - n_closed) / n_closed).norm();
        if residual < 0.1 * NORM_TOL || 2 * n > 1 << 18 {
            let surface = SurfaceAmplitudes { left: normed[0], right: normed[normed.len() - 1], norm_residual: residual };
            return Ok(SiegertState { k, xs, psi: normed, surface });
        }
        n *= 2;
    }
}

fn parity_of(p: &Potential, surface: &SurfaceAmplitudes) -> Parity {
    match p.parity() {
        Symmetry::Asymmetric => Parity::NoneApplicable,
        Symmetry::Symmetric => {
            if (surface.right / surface.left).re > 0.0 {
                Parity::Even
            } else {
                Parity::Odd
            }
        }
    }
}

/// Build a fully described pole (normalized surface amplitudes, parity).
pub fn describe_pole(p: &Potential, half_width: f64, k: Complex64, n_slices: usize) -> Result<Pole> {
    let norm = siegert_state(p, half_width, k, n_slices)?;
    let class = classify(norm.k, AXIS_TOL)?;
    let k = if class.on_axis() { Complex64::new(0.0, norm.k.im) } else { norm.k };
    Ok(Pole { k, class, parity: parity_of(p, &norm.surface), surface: Some(norm.surface) })
}

/// All poles of `p` inside `region`.
pub fn find_poles(p: &Potential, region: &Region, opts: &SearchOptions) -> Result<PoleSet> {
    find_poles_in(p, &[*region], opts)
}

/// All poles with `|k| <= k_max`, searched on four rectangles that cover the
/// square `|Re k|, |Im k| <= k_max` except a small box around the origin.
pub fn find_poles_in_disk(p: &Potential, k_max: f64, opts: &SearchOptions) -> Result<PoleSet> {
    let m = opts.origin_margin;
    let kk = k_max * (1.0 + 1e-3);
    let regions = [
        Region::new(-kk, kk, m, kk)?,
        Region::new(-kk, kk, -kk, -m)?,
        Region::new(m, kk, -m, m)?,
        Region::new(-kk, -m, -m, m)?,
    ];
    let set = find_poles_in(p, &regions, opts)?;
    Ok(set.truncated(k_max))
}

fn find_poles_in(p: &Potential, regions: &[Region], opts: &SearchOptions) -> Result<PoleSet> {
    for r in regions {
        if r.distance_to_origin() < opts.origin_margin {
            return Err(Error::RegionTouchesOrigin { margin: opts.origin_margin });
        }
    }
    let l = resolve_half_width(p, opts)?;
    let search = SiegertProblem::new(p, l, opts.search_slices.max(MIN_SLICES))?;
    let mut roots = Vec::new();
    for r in regions {
        let guesses = newton_from_grid(&search, r, opts.grid);
        roots.extend(certify(&search, *r, &guesses, 0, opts.max_depth)?);
    }
    dedup(&mut roots);
    let mut poles = roots
        .par_iter()
        .map(|&k| describe_pole(p, l, k, opts.n_slices))
        .collect::<Result<Vec<Pole>>>()?;
    poles.sort_by(|a, b| a.k.re.total_cmp(&b.k.re).then(a.k.im.total_cmp(&b.k.im)));
    // Roots that drifted out of their region during the fine polish are dropped.
    poles.retain(|pole| regions.iter().any(|r| r.edge_distance(pole.k) >= -1e-6));
    Ok(PoleSet { poles, half_width: l, regions: regions.to_vec(), winding_verified: true, potential: p.clone() })
}
