//! Transfer-matrix propagation of `psi'' = (2 V(x) - k^2) psi` across `[-L, L]`.
//!
//! The box is cut at the potential's breakpoints; each piece is split into
//! equal steps. A step is the fourth-order Magnus exponential with two
//! Gauss-Legendre nodes, which reduces to the exact constant-potential
//! transfer matrix whenever `V` is constant over the step. Every entry is an
//! entire function of `k^2`, so the propagated quantities are analytic in `k`
//! and no square-root branch has to be chosen.

use num_complex::Complex64;

use crate::potentials::Potential;

const GAUSS_OFFSET: f64 = 0.288_675_134_594_812_9; // sqrt(3) / 6
const SQRT3_OVER_12: f64 = 0.144_337_567_297_406_43;
const RESCALE_AT: f64 = 1e150;

/// A step of the propagation grid.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Step {
    pub x0: f64,
    pub h: f64,
    /// `2 V` at the two Gauss nodes.
    pub v1: f64,
    pub v2: f64,
}

/// Propagation grid on `[-L, L]`.
#[derive(Debug, Clone)]
pub(crate) struct Mesh {
    pub half_width: f64,
    pub steps: Vec<Step>,
}

impl Mesh {
    /// Grid with about `n_slices` steps; segments where `V` is constant get a
    /// single exact step when `collapse_constant` is set.
    pub fn new(p: &Potential, half_width: f64, n_slices: usize, collapse_constant: bool) -> Self {
        let l = half_width;
        let mut cuts: Vec<f64> = vec![-l];
        cuts.extend(p.breakpoints().into_iter().filter(|&b| b > -l && b < l));
        cuts.push(l);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15 * l.max(1.0));

        let total = 2.0 * l;
        let mut steps = Vec::with_capacity(n_slices + cuts.len());
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let count = if collapse_constant && p.is_constant_on(a, b) {
                1
            } else {
                // Even count so every segment supports Simpson quadrature.
                let c = ((n_slices as f64 * (b - a) / total).ceil() as usize).max(2);
                c + c % 2
            };
            let h = (b - a) / count as f64;
            for i in 0..count {
                let x0 = a + h * i as f64;
                let g1 = x0 + h * (0.5 - GAUSS_OFFSET);
                let g2 = x0 + h * (0.5 + GAUSS_OFFSET);
                steps.push(Step { x0, h, v1: 2.0 * p.value(g1), v2: 2.0 * p.value(g2) });
            }
        }
        Self { half_width: l, steps }
    }
}

/// Real 2x2 / complex 2x2 transfer matrix acting on `(psi, psi')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Transfer {
    pub m: [[Complex64; 2]; 2],
}

impl Transfer {
    pub fn identity() -> Self {
        let (o, z) = (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        Self { m: [[o, z], [z, o]] }
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// `self * rhs`.
    pub fn mul(&self, rhs: &Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        Self {
            m: [
                [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
                [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
            ],
        }
    }

    fn max_abs(&self) -> f64 {
        self.m.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn scale(&mut self, s: f64) {
        self.m.iter_mut().flatten().for_each(|z| *z *= s);
    }
}

/// `cosh(s)` and `sinh(s)/s` as functions of `s^2`.
fn cosh_sinhc(s2: Complex64) -> (Complex64, Complex64) {
    if s2.norm() < 1e-6 {
        let c = 1.0 + s2 / 2.0 + s2 * s2 / 24.0;
        let sc = 1.0 + s2 / 6.0 + s2 * s2 / 120.0;
        return (c, sc);
    }
    let s = s2.sqrt();
    (s.cosh(), s.sinh() / s)
}

/// Transfer matrix of a single step at energy parameter `k^2`.
pub(crate) fn step_matrix(step: &Step, k2: Complex64) -> Transfer {
    let h = step.h;
    let w1 = step.v1 - k2;
    let w2 = step.v2 - k2;
    let c = SQRT3_OVER_12 * h * h * (w1 - w2);
    let lower = h * (w1 + w2) / 2.0;
    // Omega = [[c, h], [lower, -c]], Omega^2 = s^2 I.
    let s2 = c * c + h * lower;
    let (ch, sh) = cosh_sinhc(s2);
    Transfer {
        m: [[ch + sh * c, sh * h], [sh * lower, ch - sh * c]],
    }
}

/// Product of all step matrices, `M = M_n ... M_1`, with its overflow scale
/// kept as a separate logarithm: the true matrix is `m * exp(log_scale)`.
pub(crate) fn total_transfer(mesh: &Mesh, k: Complex64) -> (Transfer, f64) {
    let k2 = k * k;
    let mut total = Transfer::identity();
    let mut log_scale = 0.0;
    for step in &mesh.steps {
        total = step_matrix(step, k2).mul(&total);
        let big = total.max_abs();
        if big > RESCALE_AT {
            total.scale(1.0 / big);
            log_scale += big.ln();
        }
    }
    (total, log_scale)
}

/// A complex number stored as `mantissa * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: Complex64,
    pub log_scale: f64,
}

impl Scaled {
    pub fn value(&self) -> Complex64 {
        if self.log_scale == 0.0 {
            self.mantissa
        } else {
            self.mantissa * self.log_scale.exp()
        }
    }

    /// Value expressed relative to `exp(reference)`.
    pub fn relative_to(&self, reference: f64) -> Complex64 {
        self.mantissa * (self.log_scale - reference).exp()
    }

    pub fn log_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale
    }
}

/// `D(k) = psi'(L) - i k psi(L)` for the solution with `psi(-L) = 1`,
/// `psi'(-L) = -i k`. Its zeros are the Siegert momenta.
pub(crate) fn siegert_mismatch(mesh: &Mesh, k: Complex64) -> Scaled {
    let k2 = k * k;
    let ik = Complex64::i() * k;
    let mut v = [Complex64::new(1.0, 0.0), -ik];
    let mut log_scale = 0.0;
    for step in &mesh.steps {
        v = step_matrix(step, k2).apply(v);
        let big = v[0].norm().max(v[1].norm());
        if big > RESCALE_AT {
            v[0] /= big;
            v[1] /= big;
            log_scale += big.ln();
        }
    }
    Scaled { mantissa: v[1] - ik * v[0], log_scale }
}

/// Node positions and `(psi, psi')` of the left-outgoing solution.
/// Values are returned on a common scale: the true solution is
/// `values * exp(log_scale)`.
pub(crate) fn left_outgoing_solution(mesh: &Mesh, k: Complex64) -> (Vec<f64>, Vec<[Complex64; 2]>, f64) {
    let k2 = k * k;
    let ik = Complex64::i() * k;
    let mut xs = Vec::with_capacity(mesh.steps.len() + 1);
    let mut vals = Vec::with_capacity(mesh.steps.len() + 1);
    let mut logs = Vec::with_capacity(mesh.steps.len() + 1);
    let mut v = [Complex64::new(1.0, 0.0), -ik];
    let mut log_scale = 0.0;
    xs.push(-mesh.half_width);
    vals.push(v);
    logs.push(0.0);
    for step in &mesh.steps {
        v = step_matrix(step, k2).apply(v);
        let big = v[0].norm().max(v[1].norm());
        if big > RESCALE_AT {
            v[0] /= big;
            v[1] /= big;
            log_scale += big.ln();
        }
        xs.push(step.x0 + step.h);
        vals.push(v);
        logs.push(log_scale);
    }
    let last = log_scale;
    for (val, l) in vals.iter_mut().zip(&logs) {
        if *l != last {
            let f = (*l - last).exp();
            val[0] *= f;
            val[1] *= f;
        }
    }
    (xs, vals, last)
}

/// Composite Simpson rule over the mesh nodes of `f`, applied per segment of
/// equal steps (falls back to the trapezoid rule for odd leftovers).
pub(crate) fn simpson(xs: &[f64], f: &[Complex64]) -> Complex64 {
    let mut total = Complex64::new(0.0, 0.0);
    let n = xs.len();
    let mut i = 0;
    while i + 1 < n {
        let h = xs[i + 1] - xs[i];
        let same_next = i + 2 < n && ((xs[i + 2] - xs[i + 1]) - h).abs() <= 1e-9 * h.abs();
        if same_next {
            total += (f[i] + 4.0 * f[i + 1] + f[i + 2]) * (h / 3.0);
            i += 2;
        } else {
            total += (f[i] + f[i + 1]) * (h / 2.0);
            i += 1;
        }
    }
    total
}
