//! Scattering potentials on the real line (atomic units, `hbar = m = 1`).
//!
//! Three shapes are supported: a finite square well centred at the origin,
//! the smooth double barrier `(beta x^2 - gamma) exp(-alpha x^4)`, and a
//! tabulated potential with linear interpolation that vanishes outside its grid.

use std::f64::consts::PI;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Absolute tolerance used to decide whether `V(-x) == V(x)`.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Symmetric,
    Asymmetric,
}

/// Square well of depth `depth < 0` occupying `|x| <= width / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareWell {
    depth: f64,
    width: f64,
}

impl SquareWell {
    pub fn new(depth: f64, width: f64) -> Result<Self> {
        if !(depth < 0.0 && depth.is_finite()) {
            return Err(Error::InvalidPotential(format!("square well depth must be negative, got {depth}")));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidPotential(format!("square well width must be positive, got {width}")));
        }
        Ok(Self { depth, width })
    }

    pub fn depth(&self) -> f64 {
        self.depth
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Energies `E = n^2 pi^2 / (2 width^2) + depth` at which the well is
    /// reflectionless, for every `n` giving `E > 0`, up to `e_max`.
    pub fn transmission_unities(&self, e_max: f64) -> Vec<(u32, f64)> {
        (1..)
            .map(|n: u32| (n, self.depth + (PI * n as f64 / self.width).powi(2) / 2.0))
            .skip_while(|&(_, e)| e <= 0.0)
            .take_while(|&(_, e)| e <= e_max)
            .collect()
    }
}

/// `V(x) = (beta x^2 - gamma) exp(-alpha x^4)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleBarrier {
    beta: f64,
    gamma: f64,
    alpha: f64,
}

impl DoubleBarrier {
    pub fn new(beta: f64, gamma: f64, alpha: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidPotential(format!("double barrier beta must be positive, got {beta}")));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidPotential(format!("double barrier alpha must be positive, got {alpha}")));
        }
        if !gamma.is_finite() {
            return Err(Error::InvalidPotential(format!("double barrier gamma must be finite, got {gamma}")));
        }
        Ok(Self { beta, gamma, alpha })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Linear interpolant through `(x_i, v_i)`, zero outside `[x_0, x_n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    xs: Vec<f64>,
    vs: Vec<f64>,
}

impl Tabulated {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidPotential(format!(
                "tabulated potential needs at least 3 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|(x, v)| !x.is_finite() || !v.is_finite()) {
            return Err(Error::InvalidPotential("tabulated potential has non-finite samples".into()));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidPotential("tabulated x must be strictly increasing".into()));
        }
        let (xs, vs) = points.into_iter().unzip();
        Ok(Self { xs, vs })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn vs(&self) -> &[f64] {
        &self.vs
    }

    fn interpolate(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x < self.xs[0] || x > self.xs[n - 1] {
            return 0.0;
        }
        let i = match self.xs.partition_point(|&xi| xi <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        };
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let s = (x - x0) / (x1 - x0);
        self.vs[i] * (1.0 - s) + self.vs[i + 1] * s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    SquareWell(SquareWell),
    DoubleBarrier(DoubleBarrier),
    Tabulated(Tabulated),
}

impl Potential {
    pub fn square_well(depth: f64, width: f64) -> Result<Self> {
        SquareWell::new(depth, width).map(Self::SquareWell)
    }

    pub fn double_barrier(beta: f64, gamma: f64, alpha: f64) -> Result<Self> {
        DoubleBarrier::new(beta, gamma, alpha).map(Self::DoubleBarrier)
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        Tabulated::new(points).map(Self::Tabulated)
    }

    /// The square well with `V0 = -13`, `Lw = pi / sqrt(2)`.
    pub fn overlapping_well() -> Self {
        Self::SquareWell(SquareWell { depth: -13.0, width: PI / 2f64.sqrt() })
    }

    /// Double barrier with `beta = 5/2`, `alpha = 1/2` and the given well offset `gamma`.
    pub fn threshold_barrier(gamma: f64) -> Self {
        Self::DoubleBarrier(DoubleBarrier { beta: 2.5, gamma, alpha: 0.5 })
    }

    /// Named presets: `well`, `barrier`, `barrier-a`, `barrier-b`, `barrier-c`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "well" | "fig1" => Ok(Self::overlapping_well()),
            "barrier" | "fig2" => Ok(Self::threshold_barrier(0.8)),
            "barrier-a" => Ok(Self::threshold_barrier(0.875)),
            "barrier-b" => Ok(Self::threshold_barrier(0.885)),
            "barrier-c" => Ok(Self::threshold_barrier(0.89)),
            other => Err(Error::Config(format!("unknown potential preset `{other}`"))),
        }
    }

    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(Error::NonFinitePosition(x));
        }
        Ok(self.value(x))
    }

    /// `evaluate` without the finiteness check, for inner loops.
    pub(crate) fn value(&self, x: f64) -> f64 {
        match self {
            Self::SquareWell(w) => {
                if x.abs() <= w.width / 2.0 {
                    w.depth
                } else {
                    0.0
                }
            }
            Self::DoubleBarrier(b) => {
                let x2 = x * x;
                (b.beta * x2 - b.gamma) * (-b.alpha * x2 * x2).exp()
            }
            Self::Tabulated(t) => t.interpolate(x),
        }
    }

    /// Smallest `L` with `|V(x)| < tail_tol` for all `|x| >= L`.
    ///
    /// The square well returns its edge `Lw / 2` and a tabulated potential its
    /// grid extent, both independent of `tail_tol`.
    pub fn effective_half_width(&self, tail_tol: f64) -> Result<f64> {
        if !(tail_tol > 0.0 && tail_tol.is_finite()) {
            return Err(Error::InvalidTolerance(tail_tol));
        }
        match self {
            Self::SquareWell(w) => Ok(w.width / 2.0),
            Self::Tabulated(t) => {
                let n = t.xs.len();
                for i in [0, n - 1] {
                    if t.vs[i].abs() >= tail_tol {
                        return Err(Error::TailTooLarge { x: t.xs[i], value: t.vs[i].abs(), tol: tail_tol });
                    }
                }
                Ok(t.xs[0].abs().max(t.xs[n - 1].abs()))
            }
            Self::DoubleBarrier(_) => Ok(self.outermost_crossing(tail_tol)),
        }
    }

    // Scan inward from a point where the tail is negligible, then bisect the
    // last crossing of |V| = tol. Only used for even, decaying potentials.
    fn outermost_crossing(&self, tol: f64) -> f64 {
        let small = |x: f64| self.value(x).abs() < tol;
        let mut hi = 1.0;
        while !(small(hi) && small(2.0 * hi)) {
            hi *= 2.0;
        }
        hi *= 2.0;
        let steps = 4000;
        let dx = hi / steps as f64;
        let mut lo = None;
        for i in (0..steps).rev() {
            let x = i as f64 * dx;
            if !small(x) {
                lo = Some(x);
                break;
            }
        }
        let Some(mut lo) = lo else { return 0.0 };
        let mut hi = lo + dx;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if small(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
        hi
    }

    pub fn parity(&self) -> Symmetry {
        match self {
            Self::SquareWell(_) | Self::DoubleBarrier(_) => Symmetry::Symmetric,
            Self::Tabulated(t) => {
                let extent = t.xs[0].abs().max(t.xs[t.xs.len() - 1].abs());
                let dense = 4096;
                let grid = (0..=dense).map(|i| extent * i as f64 / dense as f64);
                let nodes = t.xs.iter().map(|x| x.abs());
                let symmetric = grid
                    .chain(nodes)
                    .all(|x| (self.value(x) - self.value(-x)).abs() <= SYMMETRY_TOL);
                if symmetric {
                    Symmetry::Symmetric
                } else {
                    Symmetry::Asymmetric
                }
            }
        }
    }

    /// Interior points where `V` is discontinuous or kinked.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        match self {
            Self::SquareWell(w) => vec![-w.width / 2.0, w.width / 2.0],
            Self::DoubleBarrier(_) => Vec::new(),
            Self::Tabulated(t) => t.xs.clone(),
        }
    }

    /// True when `V` is constant on `(a, b)`; such segments propagate exactly in one step.
    pub(crate) fn is_constant_on(&self, a: f64, b: f64) -> bool {
        match self {
            Self::SquareWell(w) => {
                let e = w.width / 2.0;
                b <= -e || a >= e || (a >= -e && b <= e)
            }
            Self::DoubleBarrier(_) => false,
            Self::Tabulated(t) => {
                let n = t.xs.len();
                if b <= t.xs[0] || a >= t.xs[n - 1] {
                    return true;
                }
                let mid = 0.5 * (a + b);
                let i = t.xs.partition_point(|&xi| xi <= mid);
                (1..n).contains(&i)
                    && t.xs[i - 1] <= a
                    && b <= t.xs[i]
                    && t.vs[i - 1] == t.vs[i]
            }
        }
    }

    /// Copy with one named parameter replaced; used for one-parameter families.
    pub fn with_parameter(&self, name: &str, value: f64) -> Result<Self> {
        match (self, name) {
            (Self::SquareWell(w), "depth") => Self::square_well(value, w.width),
            (Self::SquareWell(w), "width") => Self::square_well(w.depth, value),
            (Self::DoubleBarrier(b), "beta") => Self::double_barrier(value, b.gamma, b.alpha),
            (Self::DoubleBarrier(b), "gamma") => Self::double_barrier(b.beta, value, b.alpha),
            (Self::DoubleBarrier(b), "alpha") => Self::double_barrier(b.beta, b.gamma, value),
            _ => Err(Error::InvalidParameter(format!("potential has no parameter `{name}`"))),
        }
    }

    pub fn parameter(&self, name: &str) -> Result<f64> {
        match (self, name) {
            (Self::SquareWell(w), "depth") => Ok(w.depth),
            (Self::SquareWell(w), "width") => Ok(w.width),
            (Self::DoubleBarrier(b), "beta") => Ok(b.beta),
            (Self::DoubleBarrier(b), "gamma") => Ok(b.gamma),
            (Self::DoubleBarrier(b), "alpha") => Ok(b.alpha),
            _ => Err(Error::InvalidParameter(format!("potential has no parameter `{name}`"))),
        }
    }

    /// One-line descriptor, e.g. `double_barrier(beta=2.5, gamma=0.8, alpha=0.5)`.
    pub fn describe(&self) -> String {
        match self {
            Self::SquareWell(w) => format!("square_well(depth={}, width={})", w.depth, w.width),
            Self::DoubleBarrier(b) => {
                format!("double_barrier(beta={}, gamma={}, alpha={})", b.beta, b.gamma, b.alpha)
            }
            Self::Tabulated(t) => format!("tabulated({} points)", t.xs.len()),
        }
    }

    /// Parse a key-value description:
    ///
    /// ```text
    /// kind = "double_barrier"
    /// beta = 2.5
    /// gamma = 0.8
    /// alpha = 0.5
    /// ```
    ///
    /// `kind = "square_well"` takes `depth`/`width`; `kind = "tabulated"`
    /// takes arrays `x` and `v`; `preset = "<name>"` selects a preset.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let spec: PotentialSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.build()
    }

    /// Parse an inline spec such as `double_barrier:beta=2.5,gamma=0.8,alpha=0.5`,
    /// `square_well:depth=-13,width=2.2` or a bare preset name.
    pub fn from_inline(text: &str) -> Result<Self> {
        let Some((kind, rest)) = text.split_once(':') else {
            return Self::preset(text.trim());
        };
        let mut spec = PotentialSpec { kind: Some(kind.trim().to_string()), ..Default::default() };
        for pair in rest.split(',').filter(|s| !s.trim().is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got `{pair}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("`{value}` is not a number")))?;
            match key.trim() {
                "depth" => spec.depth = Some(value),
                "width" => spec.width = Some(value),
                "beta" => spec.beta = Some(value),
                "gamma" => spec.gamma = Some(value),
                "alpha" => spec.alpha = Some(value),
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }
        spec.build()
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct PotentialSpec {
    preset: Option<String>,
    kind: Option<String>,
    depth: Option<f64>,
    width: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    alpha: Option<f64>,
    x: Option<Vec<f64>>,
    v: Option<Vec<f64>>,
}

impl PotentialSpec {
    pub(crate) fn build(self) -> Result<Potential> {
        fn need(v: Option<f64>, key: &str) -> Result<f64> {
            v.ok_or_else(|| Error::Config(format!("missing `{key}`")))
        }
        if let Some(name) = self.preset {
            return Potential::preset(&name);
        }
        match self.kind.as_deref() {
            Some("square_well") => Potential::square_well(need(self.depth, "depth")?, need(self.width, "width")?),
            Some("double_barrier") => Potential::double_barrier(
                need(self.beta, "beta")?,
                need(self.gamma, "gamma")?,
                need(self.alpha, "alpha")?,
            ),
            Some("tabulated") => {
                let (Some(x), Some(v)) = (self.x, self.v) else {
                    return Err(Error::Config("tabulated potential needs `x` and `v` arrays".into()));
                };
                if x.len() != v.len() {
                    return Err(Error::Config("`x` and `v` differ in length".into()));
                }
                Potential::tabulated(x.into_iter().zip(v).collect())
            }
            Some(other) => Err(Error::Config(format!("unknown potential kind `{other}`"))),
            None => Err(Error::Config("missing `kind` or `preset`".into())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fig2() -> Potential {
        Potential::double_barrier(2.5, 0.8, 0.5).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(fig2().evaluate(0.0).unwrap(), -0.8);
        assert_eq!(Potential::overlapping_well().evaluate(0.0).unwrap(), -13.0);
        assert!(fig2().evaluate(10.0).unwrap().abs() < 1e-12);
        assert!(matches!(fig2().evaluate(f64::NAN), Err(Error::NonFinitePosition(_))));
        assert!(matches!(fig2().evaluate(f64::INFINITY), Err(Error::NonFinitePosition(_))));
    }

    #[test]
    fn square_well_edges() {
        let w = Potential::square_well(-2.0, 2.0).unwrap();
        assert_eq!(w.evaluate(1.0).unwrap(), -2.0);
        assert_eq!(w.evaluate(1.0 + 1e-12).unwrap(), 0.0);
        assert_eq!(w.evaluate(-1.0).unwrap(), -2.0);
    }

    #[test]
    fn constructors_validate() {
        assert!(Potential::square_well(1.0, 1.0).is_err());
        assert!(Potential::square_well(-1.0, 0.0).is_err());
        assert!(Potential::double_barrier(2.5, 0.8, 0.0).is_err());
        assert!(Potential::double_barrier(-1.0, 0.8, 0.5).is_err());
        assert!(Potential::tabulated(vec![(0.0, 0.0), (1.0, 0.0)]).is_err());
        assert!(Potential::tabulated(vec![(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)]).is_err());
    }

    #[test]
    fn tabulated_interpolates_linearly() {
        let t = Potential::tabulated(vec![(-1.0, 0.0), (0.0, -1.0), (1.0, 0.5)]).unwrap();
        assert_eq!(t.evaluate(-0.5).unwrap(), -0.5);
        assert_eq!(t.evaluate(0.5).unwrap(), -0.25);
        assert_eq!(t.evaluate(1.0).unwrap(), 0.5);
        assert_eq!(t.evaluate(1.5).unwrap(), 0.0);
        assert_eq!(t.evaluate(-3.0).unwrap(), 0.0);
    }

    #[test]
    fn half_width_square_well_is_edge() {
        let l = Potential::overlapping_well().effective_half_width(1e-3).unwrap();
        assert!((l - PI / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        let l2 = Potential::overlapping_well().effective_half_width(1e-20).unwrap();
        assert_eq!(l, l2);
    }

    // Independent route: bisection on log|V| for x beyond the barrier maximum.
    fn barrier_crossing_oracle(beta: f64, gamma: f64, alpha: f64, tol: f64) -> f64 {
        let f = |x: f64| (beta * x * x - gamma).ln() - alpha * x.powi(4) - tol.ln();
        let (mut lo, mut hi) = (1.5, 20.0);
        assert!(f(lo) > 0.0 && f(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn half_width_double_barrier_matches_bisection() {
        for tol in [1e-6, 1e-9, 1e-12, 1e-15] {
            let l = fig2().effective_half_width(tol).unwrap();
            let oracle = barrier_crossing_oracle(2.5, 0.8, 0.5, tol);
            assert!((l - oracle).abs() < 1e-10, "tol {tol}: {l} vs {oracle}");
        }
    }

    #[test]
    fn half_width_tabulated() {
        let pts: Vec<_> = (0..=20).map(|i| {
            let x = -5.0 + 0.5 * i as f64;
            (x, if x.abs() < 4.9 { -(1.0 - (x / 5.0).powi(2)) } else { 0.0 })
        }).collect();
        let t = Potential::tabulated(pts).unwrap();
        assert_eq!(t.effective_half_width(1e-12).unwrap(), 5.0);
        let bad = Potential::tabulated(vec![(-1.0, 0.1), (0.0, -1.0), (1.0, 0.0)]).unwrap();
        assert!(matches!(bad.effective_half_width(1e-3), Err(Error::TailTooLarge { .. })));
        assert!(matches!(bad.effective_half_width(0.0), Err(Error::InvalidTolerance(_))));
    }

    #[test]
    fn parity_examples() {
        assert_eq!(Potential::overlapping_well().parity(), Symmetry::Symmetric);
        assert_eq!(fig2().parity(), Symmetry::Symmetric);
        let t = Potential::tabulated(vec![(-1.0, 0.0), (0.0, -1.0), (1.0, 0.5)]).unwrap();
        assert_eq!(t.parity(), Symmetry::Asymmetric);
        let s = Potential::tabulated(vec![(-1.0, 0.0), (0.0, -1.0), (1.0, 0.0)]).unwrap();
        assert_eq!(s.parity(), Symmetry::Symmetric);
    }

    #[test]
    fn unities_of_the_overlapping_well() {
        let u = match Potential::overlapping_well() {
            Potential::SquareWell(w) => w.transmission_unities(30.0),
            _ => unreachable!(),
        };
        let energies: Vec<f64> = u.iter().map(|p| p.1).collect();
        assert_eq!(u.iter().map(|p| p.0).collect::<Vec<_>>(), vec![4, 5, 6]);
        for (e, want) in energies.iter().zip([3.0, 12.0, 23.0]) {
            assert!((e - want).abs() < 1e-12);
        }
    }

    #[test]
    fn config_and_inline_parsing() {
        let p = Potential::from_config_str("kind = \"double_barrier\"\nbeta = 2.5\ngamma = 0.8\nalpha = 0.5\n").unwrap();
        assert_eq!(p, fig2());
        let q = Potential::from_inline("double_barrier:beta=2.5,gamma=0.8,alpha=0.5").unwrap();
        assert_eq!(q, fig2());
        assert_eq!(Potential::from_inline("well").unwrap(), Potential::overlapping_well());
        assert_eq!(Potential::from_config_str("preset = \"barrier\"").unwrap(), fig2());
        let t = Potential::from_config_str("kind = \"tabulated\"\nx = [-1, 0, 1]\nv = [0, -1, 0]").unwrap();
        assert_eq!(t.evaluate(0.0).unwrap(), -1.0);
        assert!(Potential::from_config_str("kind = \"spline\"").is_err());
        assert!(Potential::from_inline("square_well:depth=-1").is_err());
        assert!(Potential::from_config_str("kind = \"square_well\"\ndepth = -1\nwidth = 1\nfoo = 2").is_err());
    }

    #[test]
    fn family_parameters() {
        let p = fig2().with_parameter("gamma", 0.885).unwrap();
        assert_eq!(p.parameter("gamma").unwrap(), 0.885);
        assert!(fig2().with_parameter("depth", 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn symmetric_potentials_are_even(x in -8.0f64..8.0, gamma in 0.0f64..2.0, depth in -20.0f64..-0.1) {
            let b = Potential::double_barrier(2.5, gamma, 0.5).unwrap();
            prop_assert_eq!(b.evaluate(x).unwrap(), b.evaluate(-x).unwrap());
            let w = Potential::square_well(depth, 2.0).unwrap();
            prop_assert_eq!(w.evaluate(x).unwrap(), w.evaluate(-x).unwrap());
        }
    }

    proptest! {
        #[test]
        fn half_width_monotone_in_tolerance(e1 in -15.0f64..-1.0, e2 in -15.0f64..-1.0, gamma in 0.0f64..2.0) {
            let b = Potential::double_barrier(2.5, gamma, 0.5).unwrap();
            let (t1, t2) = (10f64.powf(e1.min(e2)), 10f64.powf(e1.max(e2)));
            prop_assert!(b.effective_half_width(t1).unwrap() >= b.effective_half_width(t2).unwrap());
        }
    }
}
