//! Continuation of poles along a one-parameter family of potentials.
//!
//! A resonance is followed by predictor-corrector Newton. When it meets its
//! mirror on the negative imaginary axis the pair is replaced by the two
//! anti-bound roots, which are then followed by real Newton on `D(i kappa)`.
//! Events are bracketed afterwards by bisection on the parameter.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poles::{classify, PoleClass, SiegertProblem, AXIS_TOL};
use crate::potentials::Potential;
use crate::scatter::{DEFAULT_SLICES, DEFAULT_TAIL_TOL};

/// A potential template with one free parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct Family {
    pub template: Potential,
    pub parameter: String,
}

impl Family {
    pub fn new(template: Potential, parameter: &str) -> Result<Self> {
        template.parameter(parameter)?;
        Ok(Self { template, parameter: parameter.to_string() })
    }

    pub fn at(&self, value: f64) -> Result<Potential> {
        self.template.with_parameter(&self.parameter, value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub n_slices: usize,
    pub tail_tol: f64,
    /// Newton iterations allowed before the step is halved.
    pub max_iter: usize,
    /// Smallest parameter step before the pole is declared lost.
    pub min_step: f64,
    /// Largest accepted change of a tracked `k` between samples.
    pub max_jump: f64,
    /// Width below which event brackets stop being refined.
    pub refine_tol: f64,
    /// Mirror spot-check period, in samples.
    pub mirror_every: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            n_slices: DEFAULT_SLICES,
            tail_tol: DEFAULT_TAIL_TOL,
            max_iter: 5,
            min_step: 1e-9,
            max_jump: 0.05,
            refine_tol: 1e-6,
            mirror_every: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedPole {
    /// Index of the seed this pole descends from.
    pub branch: usize,
    pub k: Complex64,
    pub class: PoleClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub parameter: f64,
    pub poles: Vec<TrackedPole>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    BisectorCrossing,
    Coalescence,
    BoundStateBirth,
    ClassChange,
}

impl EventKind {
    pub fn label(&self) -> &'static str {
        match self {
            EventKind::BisectorCrossing => "bisector_crossing",
            EventKind::Coalescence => "coalescence",
            EventKind::BoundStateBirth => "bound_state_birth",
            EventKind::ClassChange => "class_change",
        }
    }
}

/// An event known to lie in `[lower, upper]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub kind: EventKind,
    pub branch: usize,
    pub lower: f64,
    pub upper: f64,
}

impl Event {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub family: Family,
    pub half_width: f64,
    pub options: TraceOptions,
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    /// `(parameter, |D/D'|)` at the mirror `-k*` of each tracked resonance.
    pub mirror_checks: Vec<(f64, f64)>,
    /// Why the trace stopped early, if it did.
    pub lost: Option<Error>,
}

impl Trajectory {
    /// The tracked poles of one branch, sample by sample.
    pub fn branch(&self, branch: usize) -> impl Iterator<Item = (f64, Vec<TrackedPole>)> + '_ {
        self.samples.iter().map(move |s| {
            (s.parameter, s.poles.iter().filter(|p| p.branch == branch).copied().collect())
        })
    }

    pub fn events_of(&self, kind: EventKind) -> Vec<Event> {
        self.events.iter().filter(|e| e.kind == kind).copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Branch {
    Resonance(Complex64),
    Axis(Vec<f64>),
}

fn problem(family: &Family, value: f64, half_width: f64, opts: &TraceOptions) -> Result<SiegertProblem> {
    SiegertProblem::new(&family.at(value)?, half_width, opts.n_slices)
}

fn axis_class(kappa: f64) -> PoleClass {
    if kappa > 0.0 {
        PoleClass::Bound
    } else {
        PoleClass::AntiBound
    }
}

fn bisect_root(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= 1e-15 * (1.0 + m.abs()) {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fa < 0.0) == (fm < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// The two axis roots nearest `center` within `half_window`, if `D(i kappa)`
/// changes sign twice there. A dip that does not reach zero is located by
/// golden-section search so that nearly merged roots are still resolved.
fn axis_pair(prob: &SiegertProblem, center: f64, half_window: f64) -> Option<(f64, f64)> {
    const N: usize = 400;
    let lo = center - half_window;
    let hi = (center + half_window).min(-1e-12);
    if hi <= lo {
        return None;
    }
    let f = |x: f64| prob.axis_value(x);
    let xs: Vec<f64> = (0..=N).map(|i| lo + (hi - lo) * i as f64 / N as f64).collect();
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut roots: Vec<f64> = (0..N)
        .filter(|&i| (fs[i] < 0.0) != (fs[i + 1] < 0.0))
        .map(|i| bisect_root(f, xs[i], xs[i + 1]))
        .collect();
    if roots.len() < 2 {
        // Both roots may sit inside one cell: look for a sign-flipping dip.
        let s = fs[0].signum();
        let i = (1..N).min_by(|&a, &b| (s * fs[a]).total_cmp(&(s * fs[b])))?;
        let (mut a, mut b) = (xs[i - 1], xs[i + 1]);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..80 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if s * f(c) < s * f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        let m = 0.5 * (a + b);
        if s * f(m) >= 0.0 {
            return None;
        }
        roots = vec![bisect_root(f, xs[i - 1], m), bisect_root(f, m, xs[i + 1])];
    }
    roots.sort_by(|a, b| (a - center).abs().total_cmp(&(b - center).abs()));
    let (a, b) = (roots[0], roots[1]);
    Some((a.min(b), a.max(b)))
}

/// Window for the post-coalescence axis search around a resonance `k`.
fn axis_window(k: Complex64) -> f64 {
    0.5 * k.im.abs().max(1e-3)
}

fn sample_of(parameter: f64, branches: &[Branch]) -> Result<Sample> {
    let mut poles = Vec::new();
    for (i, b) in branches.iter().enumerate() {
        match b {
            Branch::Resonance(k) => poles.push(TrackedPole { branch: i, k: *k, class: classify(*k, AXIS_TOL)? }),
            Branch::Axis(ks) => poles.extend(ks.iter().map(|&kappa| TrackedPole {
                branch: i,
                k: Complex64::new(0.0, kappa),
                class: axis_class(kappa),
            })),
        }
    }
    Ok(Sample { parameter, poles })
}

/// Advance one branch from `(p, branch)` to the problem at `q`. `None` asks
/// the caller to shrink the step.
fn advance(prob: &SiegertProblem, branch: &Branch, velocity: &Branch, h: f64, opts: &TraceOptions, allow_coalescence: bool) -> Option<Branch> {
    match (branch, velocity) {
        (Branch::Resonance(k), v) => {
            let dk = match v {
                Branch::Resonance(v) => *v * h,
                _ => Complex64::new(0.0, 0.0),
            };
            let guess = *k + dk;
            if let Ok((k2, _)) = prob.newton(guess, opts.max_iter) {
                let on_axis = k2.re.abs() < AXIS_TOL || k2.re.signum() != k.re.signum();
                if !on_axis && (k2 - k).norm() <= opts.max_jump {
                    return Some(Branch::Resonance(k2));
                }
            }
            // Only accept a coalescence once the resonance is past the
            // bisector, so that crossing and merge never share one step.
            if allow_coalescence && -k.im > k.re.abs() {
                if let Some((a, b)) = axis_pair(prob, k.im, axis_window(*k)) {
                    if (a - k.im).abs().max((b - k.im).abs()) <= opts.max_jump {
                        return Some(Branch::Axis(vec![a, b]));
                    }
                }
            }
            None
        }
        (Branch::Axis(ks), v) => {
            let mut out = Vec::with_capacity(ks.len());
            for (j, &kappa) in ks.iter().enumerate() {
                let dv = match v {
                    Branch::Axis(vs) if vs.len() == ks.len() => vs[j] * h,
                    _ => 0.0,
                };
                let k2 = prob.newton_on_axis(kappa + dv, opts.max_iter).ok()?;
                if (k2 - kappa).abs() > opts.max_jump {
                    return None;
                }
                out.push(k2);
            }
            // Two followed roots must stay distinct.
            for a in 0..out.len() {
                for b in a + 1..out.len() {
                    if (out[a] - out[b]).abs() < 1e-9 {
                        return None;
                    }
                }
            }
            Some(Branch::Axis(out))
        }
    }
}

fn velocity(prev: &Branch, next: &Branch, h: f64) -> Branch {
    match (prev, next) {
        (Branch::Resonance(a), Branch::Resonance(b)) => Branch::Resonance((b - a) / h),
        (Branch::Axis(a), Branch::Axis(b)) if a.len() == b.len() => {
            Branch::Axis(a.iter().zip(b).map(|(x, y)| (y - x) / h).collect())
        }
        (_, Branch::Resonance(_)) => Branch::Resonance(Complex64::new(0.0, 0.0)),
        (_, Branch::Axis(b)) => Branch::Axis(vec![0.0; b.len()]),
    }
}

/// Follow the poles `seeds` (valid at `range.0`) up to `range.1`.
pub fn trace(family: &Family, range: (f64, f64), step: f64, seeds: &[Complex64], opts: &TraceOptions) -> Result<Trajectory> {
    let (start, end) = range;
    if !(start.is_finite() && end.is_finite() && start <= end) {
        return Err(Error::InvalidParameter(format!("invalid parameter range [{start}, {end}]")));
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidParameter(format!("step must be positive, got {step}")));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidParameter("no seeds to trace".into()));
    }
    let half_width = family
        .at(start)?
        .effective_half_width(opts.tail_tol)?
        .max(family.at(end)?.effective_half_width(opts.tail_tol)?);

    let prob = problem(family, start, half_width, opts)?;
    let mut branches = Vec::with_capacity(seeds.len());
    for &s in seeds {
        let (k, _) = prob.newton(s, 50)?;
        if (k - s).norm() > opts.max_jump {
            return Err(Error::LostPole { param: start, reason: format!("seed {s} is not a pole (nearest root {k})") });
        }
        branches.push(if k.re.abs() < AXIS_TOL {
            Branch::Axis(vec![prob.newton_on_axis(k.im, 50)?])
        } else {
            Branch::Resonance(k)
        });
    }
    let mut velocities: Vec<Branch> = branches.iter().map(|b| velocity(b, b, 1.0)).collect();

    let mut traj = Trajectory {
        family: family.clone(),
        half_width,
        options: *opts,
        samples: vec![sample_of(start, &branches)?],
        events: Vec::new(),
        mirror_checks: Vec::new(),
        lost: None,
    };
    let mut p = start;
    let mut h = step;
    while p < end {
        let q = (p + h).min(end);
        let hq = q - p;
        let prob = problem(family, q, half_width, opts)?;
        // Coalescence is only accepted on small steps so that the merge
        // parameter is already localized before bisection.
        let allow = hq <= 16.0 * opts.min_step.max(1e-6);
        let next: Option<Vec<Branch>> = branches
            .iter()
            .zip(&velocities)
            .map(|(b, v)| advance(&prob, b, v, hq, opts, allow))
            .collect();
        match next {
            Some(next) => {
                velocities = branches.iter().zip(&next).map(|(a, b)| velocity(a, b, hq)).collect();
                branches = next;
                p = q;
                traj.samples.push(sample_of(p, &branches)?);
                if traj.samples.len() % opts.mirror_every.max(1) == 0 {
                    for b in &branches {
                        if let Branch::Resonance(k) = b {
                            traj.mirror_checks.push((p, prob.newton_step(-k.conj()).norm()));
                        }
                    }
                }
                h = (2.0 * h).min(step);
            }
            None => {
                h /= 2.0;
                if h < opts.min_step {
                    traj.lost = Some(Error::LostPole { param: p, reason: format!("no convergence with step {h:e}") });
                    break;
                }
            }
        }
    }
    traj.events = detect_events(&traj);
    Ok(traj)
}

/// Bisect `[lo, hi]` on a predicate that is false at `lo` and true at `hi`.
/// Returns the final bracket and the widths after each round.
pub(crate) fn refine(mut lo: f64, mut hi: f64, tol: f64, mut pred: impl FnMut(f64) -> Option<bool>) -> (f64, f64, Vec<f64>) {
    let mut widths = vec![hi - lo];
    while hi - lo > tol {
        let m = 0.5 * (lo + hi);
        match pred(m) {
            Some(true) => hi = m,
            Some(false) => lo = m,
            None => break,
        }
        widths.push(hi - lo);
    }
    (lo, hi, widths)
}

fn lerp(a: Complex64, b: Complex64, t: f64) -> Complex64 {
    a + (b - a) * t
}

/// Events between consecutive samples, each bracketed by bisection on the
/// parameter down to `options.refine_tol` where the predicate is computable.
pub fn detect_events(t: &Trajectory) -> Vec<Event> {
    let opts = &t.options;
    let mut events = Vec::new();
    let at = |q: f64| problem(&t.family, q, t.half_width, opts).ok();
    let n_branches = t.samples.first().map_or(0, |s| s.poles.iter().map(|p| p.branch + 1).max().unwrap_or(0));
    for w in t.samples.windows(2) {
        let (s0, s1) = (&w[0], &w[1]);
        let (p0, p1) = (s0.parameter, s1.parameter);
        for b in 0..n_branches {
            let before: Vec<&TrackedPole> = s0.poles.iter().filter(|p| p.branch == b).collect();
            let after: Vec<&TrackedPole> = s1.poles.iter().filter(|p| p.branch == b).collect();
            let mut push = |kind, (lo, hi): (f64, f64)| events.push(Event { kind, branch: b, lower: lo, upper: hi });
            let res0 = before.len() == 1 && !before[0].class.on_axis();
            let res1 = after.len() == 1 && !after[0].class.on_axis();
            if res0 && res1 {
                let (k0, k1) = (before[0].k, after[0].k);
                let side = |k: Complex64| -k.im - k.re.abs() > 0.0;
                if side(k0) != side(k1) {
                    let up = side(k1);
                    let (lo, hi, _) = refine(p0, p1, opts.refine_tol, |q| {
                        let prob = at(q)?;
                        let (k, _) = prob.newton(lerp(k0, k1, (q - p0) / (p1 - p0)), 50).ok()?;
                        Some(side(k) == up)
                    });
                    push(EventKind::BisectorCrossing, (lo, hi));
                }
                if before[0].class != after[0].class {
                    push(EventKind::ClassChange, (p0, p1));
                }
            } else if res0 && !res1 {
                let k0 = before[0].k;
                let (lo, hi, _) = refine(p0, p1, opts.refine_tol, |q| {
                    Some(axis_pair(&at(q)?, k0.im, axis_window(k0)).is_some())
                });
                push(EventKind::Coalescence, (lo, hi));
                push(EventKind::ClassChange, (lo, hi));
            } else if !res0 && !res1 && before.len() == after.len() {
                for (a, c) in before.iter().zip(&after) {
                    let (x0, x1) = (a.k.im, c.k.im);
                    if x0 <= 0.0 && x1 > 0.0 {
                        let (lo, hi, _) = refine(p0, p1, opts.refine_tol, |q| {
                            let kappa = at(q)?.newton_on_axis(x0 + (x1 - x0) * (q - p0) / (p1 - p0), 50).ok()?;
                            Some(kappa > 0.0)
                        });
                        push(EventKind::BoundStateBirth, (lo, hi));
                        push(EventKind::ClassChange, (lo, hi));
                    } else if a.class != c.class {
                        push(EventKind::ClassChange, (p0, p1));
                    }
                }
            } else if before.len() != after.len() || before.iter().zip(&after).any(|(a, c)| a.class != c.class) {
                push(EventKind::ClassChange, (p0, p1));
            }
        }
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn refine_halves_each_round() {
        let (lo, hi, widths) = refine(0.0, 1.0, 1e-6, |x| Some(x > 0.3141));
        assert!(lo <= 0.3141 && 0.3141 <= hi && hi - lo <= 1e-6);
        for w in widths.windows(2) {
            assert!(w[1] <= 0.5 * w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn bisect_root_finds_sign_change() {
        let r = bisect_root(|x| x * x - 2.0, 0.0, 2.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn family_validation() {
        let p = Potential::threshold_barrier(0.8);
        assert!(Family::new(p.clone(), "gamma").is_ok());
        assert!(Family::new(p, "depth").is_err());
    }

    #[test]
    fn trace_rejects_bad_input() {
        let f = Family::new(Potential::threshold_barrier(0.8), "gamma").unwrap();
        let k = Complex64::new(0.41, -0.13);
        let o = TraceOptions::default();
        assert!(trace(&f, (0.9, 0.8), 1e-3, &[k], &o).is_err());
        assert!(trace(&f, (0.8, 0.9), 0.0, &[k], &o).is_err());
        assert!(trace(&f, (0.8, 0.9), 1e-3, &[], &o).is_err());
    }

    #[test]
    fn constant_parameter_sweep_has_no_events() {
        let f = Family::new(Potential::threshold_barrier(0.8), "gamma").unwrap();
        let t = trace(&f, (0.8, 0.8), 1e-3, &[Complex64::new(0.4138, -0.1276)], &TraceOptions::default()).unwrap();
        assert_eq!(t.samples.len(), 1);
        assert!(t.events.is_empty());
    }

    #[test]
    fn short_sweep_keeps_pole_identity() {
        let f = Family::new(Potential::threshold_barrier(0.8), "gamma").unwrap();
        let opts = TraceOptions::default();
        let t = trace(&f, (0.8, 0.81), 2e-3, &[Complex64::new(0.4138, -0.1276)], &opts).unwrap();
        assert!(t.lost.is_none());
        assert!(t.events.is_empty());
        let ks: Vec<Complex64> = t.samples.iter().map(|s| s.poles[0].k).collect();
        assert!((ks[0] - Complex64::new(0.413842615313, -0.127552949362)).norm() < 1e-9);
        for w in ks.windows(2) {
            assert!((w[1] - w[0]).norm() < opts.max_jump);
        }
        // Deepening the well pulls the resonance toward the axis.
        assert!(ks.last().unwrap().re < ks[0].re);
    }
}
