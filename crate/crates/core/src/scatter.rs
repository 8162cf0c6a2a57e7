//! Numerically exact one-dimensional scattering amplitudes.
//!
//! With incidence from the left, `psi = e^{ikx} + r e^{-ikx}` for `x < -L` and
//! `psi = t e^{ikx}` for `x > L`. The transmission amplitude is tied to the
//! Siegert mismatch by `t = -2ik e^{-2ikL} / D(k)`, so the poles of `t` are
//! exactly the zeros of [`matching_determinant`].

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::potentials::Potential;
use crate::propagate::{self, Mesh, Scaled};

pub const DEFAULT_SLICES: usize = 4096;
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
pub const MIN_SLICES: usize = 100;
/// Largest slice count tried by the Richardson doubling loop.
pub const MAX_SLICES: usize = 1 << 20;
/// Convergence criterion on `T` between successive slice doublings.
pub const RICHARDSON_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterAmplitudes {
    pub energy: f64,
    pub k: f64,
    pub t: Complex64,
    pub r: Complex64,
}

impl ScatterAmplitudes {
    pub fn transmission(&self) -> f64 {
        self.t.norm_sqr()
    }

    pub fn reflection(&self) -> f64 {
        self.r.norm_sqr()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    SumFormula,
    ProductFormula,
    ProfileBW,
    ProfileSingleRes,
    ProfileTwoAB,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::SumFormula => "sum",
            Method::ProductFormula => "product",
            Method::ProfileBW => "breit_wigner",
            Method::ProfileSingleRes => "single_resonance",
            Method::ProfileTwoAB => "two_antibound",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub energy: f64,
    pub probability: f64,
    pub amplitude: Option<Complex64>,
}

/// Transmission probability on an energy grid, tagged by how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionCurve {
    method: Method,
    points: Vec<CurvePoint>,
}

impl TransmissionCurve {
    pub fn new(method: Method, points: Vec<CurvePoint>) -> Result<Self> {
        if points.windows(2).any(|w| w[1].energy <= w[0].energy) {
            return Err(Error::InvalidParameter("curve energies must be strictly increasing".into()));
        }
        let bounded = matches!(method, Method::Exact | Method::SumFormula | Method::ProductFormula);
        if bounded {
            if let Some(p) = points.iter().find(|p| !(p.probability >= 0.0 && p.probability <= 1.0 + 1e-9)) {
                return Err(Error::InvalidParameter(format!(
                    "transmission {} at E = {} is outside [0, 1]",
                    p.probability, p.energy
                )));
            }
        }
        Ok(Self { method, points })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.energy)
    }

    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.probability)
    }
}

fn check_box(p: &Potential, half_width: f64, n_slices: usize) -> Result<()> {
    if n_slices < MIN_SLICES {
        return Err(Error::TooFewSlices(n_slices));
    }
    let required = p.effective_half_width(DEFAULT_TAIL_TOL)?;
    if !(half_width >= required * (1.0 - 1e-12)) {
        return Err(Error::BoxTooSmall { given: half_width, required });
    }
    Ok(())
}

fn amplitudes_on_mesh(mesh: &Mesh, energy: f64) -> ScatterAmplitudes {
    let k = (2.0 * energy).sqrt();
    let kc = Complex64::new(k, 0.0);
    let ik = Complex64::i() * k;
    let l = mesh.half_width;
    let (m, log_scale) = propagate::total_transfer(mesh, kc);
    // (p, q) = M^{-1} (1, ik); the scale of M cancels in t and r only up to
    // exp(-log_scale), applied once below.
    let p = m.m[1][1] - ik * m.m[0][1];
    let q = -m.m[1][0] + ik * m.m[0][0];
    let denom = p + q / ik;
    let t = 2.0 * (-2.0 * ik * l).exp() / denom * (-log_scale).exp();
    let r = t * (p - q / ik) / 2.0 * log_scale.exp();
    ScatterAmplitudes { energy, k, t, r }
}

/// Transmission and reflection at one resolution, without the convergence loop.
pub fn amplitudes_at(p: &Potential, energy: f64, half_width: f64, n_slices: usize) -> Result<ScatterAmplitudes> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::NonPositiveEnergy(energy));
    }
    check_box(p, half_width, n_slices)?;
    Ok(amplitudes_on_mesh(&Mesh::new(p, half_width, n_slices, true), energy))
}

/// Transmission with slice doubling until `|T_2n - T_n| < 1e-8`.
pub fn transmission_exact(p: &Potential, energy: f64, half_width: f64, n_slices: usize) -> Result<ScatterAmplitudes> {
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::NonPositiveEnergy(energy));
    }
    check_box(p, half_width, n_slices)?;
    let mut n = n_slices;
    let mut coarse = amplitudes_on_mesh(&Mesh::new(p, half_width, n, true), energy);
    loop {
        let fine = amplitudes_on_mesh(&Mesh::new(p, half_width, 2 * n, true), energy);
        let residual = (fine.transmission() - coarse.transmission()).abs();
        if residual < RICHARDSON_TOL {
            return Ok(fine);
        }
        n *= 2;
        if n >= MAX_SLICES {
            return Err(Error::NotConverged { residual, slices: n });
        }
        coarse = fine;
    }
}

/// Reflection amplitudes for incidence from the left and from the right.
pub fn reflection_both_sides(p: &Potential, energy: f64, half_width: f64, n_slices: usize) -> Result<(Complex64, Complex64)> {
    let left = amplitudes_at(p, energy, half_width, n_slices)?;
    let mesh = Mesh::new(p, half_width, n_slices, true);
    let k = Complex64::new(left.k, 0.0);
    let ik = Complex64::i() * k;
    let (m, log_scale) = propagate::total_transfer(&mesh, k);
    let v = m.apply([Complex64::new(1.0, 0.0), -ik]);
    let r_right = left.t * (v[0] + v[1] / ik) / 2.0 * log_scale.exp();
    Ok((left.r, r_right))
}

/// Exact transmission over an energy grid, evaluated in parallel.
pub fn sweep_exact(p: &Potential, energies: &[f64], half_width: f64, n_slices: usize) -> Result<TransmissionCurve> {
    let points = energies
        .par_iter()
        .map(|&e| {
            transmission_exact(p, e, half_width, n_slices).map(|a| CurvePoint {
                energy: e,
                probability: a.transmission(),
                amplitude: Some(a.t),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TransmissionCurve::new(Method::Exact, points)
}

/// Closed-form square-well transmission
/// `T = [1 + V0^2 sin^2(q Lw) / (4 E (E - V0))]^{-1}`, `q = sqrt(2 (E - V0))`.
pub fn transmission_analytic_square_well(depth: f64, width: f64, energy: f64) -> f64 {
    let q = (2.0 * (energy - depth)).sqrt();
    let s = (q * width).sin();
    1.0 / (1.0 + depth * depth * s * s / (4.0 * energy * (energy - depth)))
}

/// Siegert mismatch `D(k)`; zero exactly at outgoing-wave solutions.
pub fn matching_determinant(p: &Potential, k: Complex64, half_width: f64, n_slices: usize) -> Result<Scaled> {
    if k == Complex64::new(0.0, 0.0) {
        return Err(Error::ZeroMomentum);
    }
    check_box(p, half_width, n_slices)?;
    Ok(propagate::siegert_mismatch(&Mesh::new(p, half_width, n_slices, true), k))
}

/// Evenly spaced energies `[e_min, e_max]`.
pub fn energy_grid(e_min: f64, e_max: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![e_min];
    }
    (0..n).map(|i| e_min + (e_max - e_min) * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn well() -> (Potential, f64) {
        (Potential::overlapping_well(), PI / (2.0 * 2f64.sqrt()))
    }

    #[test]
    fn analytic_unities_and_midpoint() {
        let lw = PI / 2f64.sqrt();
        for e in [3.0, 12.0, 23.0] {
            assert!((transmission_analytic_square_well(-13.0, lw, e) - 1.0).abs() < 1e-12);
        }
        let t7 = transmission_analytic_square_well(-13.0, lw, 7.0);
        assert!((t7 - 0.770).abs() < 5e-4, "{t7}");
    }

    #[test]
    fn exact_matches_analytic_on_the_well() {
        let (p, l) = well();
        let lw = 2.0 * l;
        for e in energy_grid(0.1, 30.0, 300) {
            let t = transmission_exact(&p, e, l, DEFAULT_SLICES).unwrap().transmission();
            assert!((t - transmission_analytic_square_well(-13.0, lw, e)).abs() < 1e-6, "E = {e}");
        }
    }

    #[test]
    fn well_inside_larger_box() {
        let (p, l) = well();
        let a = transmission_exact(&p, 7.0, 2.0 * l, DEFAULT_SLICES).unwrap();
        let b = transmission_exact(&p, 7.0, l, DEFAULT_SLICES).unwrap();
        assert!((a.transmission() - b.transmission()).abs() < 1e-12);
        // t is referenced to the origin, so it does not depend on the box.
        assert!((a.t - b.t).norm() < 1e-10);
    }

    #[test]
    fn threshold_suppression() {
        let p = Potential::threshold_barrier(0.5);
        let l = p.effective_half_width(DEFAULT_TAIL_TOL).unwrap();
        let t = transmission_exact(&p, 1e-8, l, DEFAULT_SLICES).unwrap().transmission();
        assert!(t < 1e-4, "{t}");
    }

    #[test]
    fn flux_conservation_and_symmetric_reflection() {
        let p = Potential::threshold_barrier(0.8);
        let l = p.effective_half_width(DEFAULT_TAIL_TOL).unwrap();
        for e in energy_grid(0.01, 3.0, 40) {
            let a = transmission_exact(&p, e, l, DEFAULT_SLICES).unwrap();
            assert!((a.transmission() + a.reflection() - 1.0).abs() < 1e-10);
            let (rl, rr) = reflection_both_sides(&p, e, l, DEFAULT_SLICES).unwrap();
            assert!((rl - rr).norm() < 1e-10);
        }
        let asym = Potential::tabulated(vec![(-1.0, 0.0), (-0.5, 2.0), (0.0, -1.0), (1.0, 0.0)]).unwrap();
        let (rl, rr) = reflection_both_sides(&asym, 0.7, 1.0, 400).unwrap();
        assert!((rl - rr).norm() > 1e-3);
        assert!((rl.norm() - rr.norm()).abs() < 1e-10);
    }

    #[test]
    fn errors() {
        let (p, l) = well();
        assert!(matches!(transmission_exact(&p, 0.0, l, DEFAULT_SLICES), Err(Error::NonPositiveEnergy(_))));
        assert!(matches!(transmission_exact(&p, -1.0, l, DEFAULT_SLICES), Err(Error::NonPositiveEnergy(_))));
        assert!(matches!(transmission_exact(&p, 1.0, l, 10), Err(Error::TooFewSlices(10))));
        assert!(matches!(transmission_exact(&p, 1.0, 0.5 * l, 1000), Err(Error::BoxTooSmall { .. })));
        assert!(matches!(
            matching_determinant(&p, Complex64::new(0.0, 0.0), l, 1000),
            Err(Error::ZeroMomentum)
        ));
    }

    #[test]
    fn determinant_reality_symmetry() {
        let p = Potential::threshold_barrier(0.8);
        let l = p.effective_half_width(DEFAULT_TAIL_TOL).unwrap();
        for (re, im) in [(0.3, -0.2), (1.7, 0.4), (-2.2, -1.1), (0.05, 2.0)] {
            let k = Complex64::new(re, im);
            let d = matching_determinant(&p, k, l, 1024).unwrap().value();
            let dm = matching_determinant(&p, -k.conj(), l, 1024).unwrap().value();
            assert!((dm - d.conj()).norm() < 1e-10 * d.norm().max(1.0));
        }
    }

    #[test]
    fn curve_invariants() {
        let pt = |e: f64, t: f64| CurvePoint { energy: e, probability: t, amplitude: None };
        assert!(TransmissionCurve::new(Method::Exact, vec![pt(1.0, 0.5), pt(1.0, 0.5)]).is_err());
        assert!(TransmissionCurve::new(Method::Exact, vec![pt(1.0, 1.1)]).is_err());
        assert!(TransmissionCurve::new(Method::ProfileBW, vec![pt(1.0, 1.1)]).is_ok());
    }
}
