//! Local resonance profiles built from pole data alone.
//!
//! For a resonance at `k_res = k_r - i k_i` only the pole momentum enters:
//! no fitted widths, no energy-dependent parameters.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poles::{Pole, PoleClass};

/// A resonance pole `k_res = k_r - i k_i`, `k_r >= 0`, `k_i > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceDescriptor {
    k_r: f64,
    k_i: f64,
}

impl ResonanceDescriptor {
    pub fn new(k_r: f64, k_i: f64) -> Result<Self> {
        if !(k_r.is_finite() && k_i.is_finite()) {
            return Err(Error::InvalidDescriptor(format!("non-finite momentum {k_r} - {k_i}i")));
        }
        if k_r < 0.0 {
            return Err(Error::InvalidDescriptor(format!("k_r = {k_r} must be non-negative")));
        }
        if k_i <= 0.0 {
            return Err(Error::InvalidDescriptor(format!("k_i = {k_i} must be positive")));
        }
        Ok(Self { k_r, k_i })
    }

    /// From a lower-half-plane momentum; the anti-resonance mirror maps to
    /// the same descriptor.
    pub fn from_momentum(k: Complex64) -> Result<Self> {
        Self::new(k.re.abs(), -k.im)
    }

    pub fn from_pole(pole: &Pole) -> Result<Self> {
        match pole.class {
            PoleClass::Resonance | PoleClass::AntiResonance => Self::from_momentum(pole.k),
            _ => Err(Error::ProfileUndefined),
        }
    }

    pub fn k_r(&self) -> f64 {
        self.k_r
    }

    pub fn k_i(&self) -> f64 {
        self.k_i
    }

    pub fn momentum(&self) -> Complex64 {
        Complex64::new(self.k_r, -self.k_i)
    }

    /// `epsilon = (k_r^2 - k_i^2) / 2`; negative past the 45 degree bisector.
    pub fn epsilon(&self) -> f64 {
        (self.k_r * self.k_r - self.k_i * self.k_i) / 2.0
    }

    /// `Gamma = 2 k_r k_i`.
    pub fn gamma(&self) -> f64 {
        2.0 * self.k_r * self.k_i
    }

    /// `|E_res| = (k_r^2 + k_i^2) / 2`.
    pub fn abs_energy(&self) -> f64 {
        (self.k_r * self.k_r + self.k_i * self.k_i) / 2.0
    }
}

fn check_energy(energy: f64) -> Result<f64> {
    if energy.is_finite() && energy >= 0.0 {
        Ok(energy)
    } else {
        Err(Error::NonPositiveEnergy(energy))
    }
}

/// Lorentzian `(Gamma/2)^2 / [(E - epsilon)^2 + (Gamma/2)^2]`, peak value 1.
pub fn breit_wigner(epsilon: f64, gamma: f64, energy: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("width must be positive, got {gamma}")));
    }
    let h = (gamma / 2.0).powi(2);
    Ok(h / ((energy - epsilon).powi(2) + h))
}

/// Single resonance-virtual pair profile
/// `y / [(E - |E_res|)^2 + y]` with `y = (k / k_r)^2 (Gamma / 2)^2 = (k k_i)^2`.
pub fn single_resonance_profile(d: &ResonanceDescriptor, energy: f64) -> Result<f64> {
    if d.k_r == 0.0 {
        return Err(Error::ProfileUndefined);
    }
    let energy = check_energy(energy)?;
    let y = 2.0 * energy * d.k_i * d.k_i;
    if y == 0.0 {
        return Ok(0.0);
    }
    Ok(y / ((energy - d.abs_energy()).powi(2) + y))
}

/// Full width at half maximum of [`single_resonance_profile`]:
/// `Gamma sqrt(1 + 2 (k_i / k_r)^2)`.
pub fn fwhm_single(d: &ResonanceDescriptor) -> Result<f64> {
    if d.k_r == 0.0 {
        return Err(Error::ProfileUndefined);
    }
    Ok(d.gamma() * (1.0 + 2.0 * (d.k_i / d.k_r).powi(2)).sqrt())
}

/// The peak of the single-pole profile sits at `|E_res|`.
pub fn peak_position(d: &ResonanceDescriptor) -> f64 {
    d.abs_energy()
}

fn check_axis_momenta(k1: f64, k2: f64) -> Result<()> {
    for k in [k1, k2] {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter(format!("anti-bound momentum magnitude must be positive, got {k}")));
        }
    }
    Ok(())
}

/// Two same-parity anti-bound poles at `-i k1`, `-i k2`:
/// `E (k1 + k2)^2 / [2 (E - k1 k2 / 2)^2 + E (k1 + k2)^2]`.
pub fn two_antibound_profile(k1: f64, k2: f64, energy: f64) -> Result<f64> {
    check_axis_momenta(k1, k2)?;
    let energy = check_energy(energy)?;
    let s2 = (k1 + k2).powi(2);
    let num = energy * s2;
    if num == 0.0 {
        return Ok(0.0);
    }
    Ok(num / (2.0 * (energy - k1 * k2 / 2.0).powi(2) + num))
}

/// Full width at half maximum of [`two_antibound_profile`],
/// `(k1 + k2) sqrt(k1 k2 + (k1 + k2)^2 / 4)`.
pub fn fwhm_two_antibound(k1: f64, k2: f64) -> Result<f64> {
    check_axis_momenta(k1, k2)?;
    let s = k1 + k2;
    Ok(s * (k1 * k2 + s * s / 4.0).sqrt())
}

/// Location, height and half-maximum width of the tallest peak in sampled
/// data. Half-maximum crossings are linearly interpolated; a side without a
/// crossing is clipped at the end of the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakShape {
    pub position: f64,
    pub height: f64,
    pub lower: f64,
    pub upper: f64,
}

impl PeakShape {
    pub fn fwhm(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn measure_peak(energies: &[f64], values: &[f64]) -> Option<PeakShape> {
    if energies.len() != values.len() || energies.len() < 3 {
        return None;
    }
    let (imax, &height) = values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    let half = height / 2.0;
    let cross = |i: usize, j: usize| {
        energies[i] + (half - values[i]) / (values[j] - values[i]) * (energies[j] - energies[i])
    };
    let lower = (0..imax)
        .rev()
        .find(|&i| values[i] < half)
        .map_or(energies[0], |i| cross(i, i + 1));
    let upper = (imax + 1..values.len())
        .find(|&i| values[i] < half)
        .map_or(energies[energies.len() - 1], |i| cross(i - 1, i));
    Some(PeakShape { position: energies[imax], height, lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expansion::PhaseAccumulator;
    use crate::poles::Parity;
    use proptest::prelude::*;

    fn dense(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    /// Half-maximum width of `f` by bisection on both sides of `peak`.
    fn bisect_width(f: impl Fn(f64) -> f64, peak: f64, lo: f64, hi: f64) -> f64 {
        let solve = |mut a: f64, mut b: f64| {
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if (f(a) - 0.5) * (f(m) - 0.5) <= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            0.5 * (a + b)
        };
        solve(peak, hi) - solve(lo, peak)
    }

    #[test]
    fn descriptor_validation() {
        assert!(ResonanceDescriptor::new(1.0, 0.0).is_err());
        assert!(ResonanceDescriptor::new(-1.0, 0.5).is_err());
        assert!(ResonanceDescriptor::new(f64::NAN, 0.5).is_err());
        let d = ResonanceDescriptor::from_momentum(Complex64::new(-2.0, -0.5)).unwrap();
        assert_eq!((d.k_r(), d.k_i()), (2.0, 0.5));
        let axis = Pole::new(Complex64::new(0.0, -0.3), Parity::Even).unwrap();
        assert_eq!(ResonanceDescriptor::from_pole(&axis), Err(Error::ProfileUndefined));
    }

    #[test]
    fn derived_quantities() {
        let d = ResonanceDescriptor::new(0.6, 0.8).unwrap();
        assert!((d.epsilon() + 0.14).abs() < 1e-15);
        assert!((d.gamma() - 0.96).abs() < 1e-15);
        assert!((d.abs_energy() - 0.5).abs() < 1e-15);
        assert!(d.abs_energy() >= d.epsilon().abs());
    }

    #[test]
    fn breit_wigner_examples() {
        assert_eq!(breit_wigner(2.0, 0.4, 2.0).unwrap(), 1.0);
        assert!((breit_wigner(2.0, 0.4, 2.2).unwrap() - 0.5).abs() < 1e-15);
        assert!((breit_wigner(2.0, 0.4, 1.8).unwrap() - 0.5).abs() < 1e-15);
        assert!((breit_wigner(2.0, 0.4, 1.3).unwrap() - breit_wigner(2.0, 0.4, 2.7).unwrap()).abs() < 1e-15);
        assert!(breit_wigner(2.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn single_profile_examples() {
        let d = ResonanceDescriptor::new(1.5, 0.4).unwrap();
        assert!((single_resonance_profile(&d, d.abs_energy()).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(single_resonance_profile(&d, 0.0).unwrap(), 0.0);
        assert!(single_resonance_profile(&d, 1e-12).unwrap() < 1e-10);
        assert!(single_resonance_profile(&d, -1.0).is_err());
        let flat = ResonanceDescriptor::new(0.0, 0.4).unwrap();
        assert_eq!(single_resonance_profile(&flat, 1.0), Err(Error::ProfileUndefined));
        assert_eq!(fwhm_single(&flat), Err(Error::ProfileUndefined));
    }

    #[test]
    fn single_profile_rises_steeply_on_the_left() {
        let d = ResonanceDescriptor::new(0.5, 0.3).unwrap();
        let e0 = d.abs_energy();
        for dd in [1e-3, 1e-2, 0.05, 0.1] {
            let right = single_resonance_profile(&d, e0 + dd).unwrap();
            let left = single_resonance_profile(&d, e0 - dd).unwrap();
            assert!(right > left, "d = {dd}");
        }
    }

    #[test]
    fn fwhm_examples() {
        let d = ResonanceDescriptor::new(1.0, 1.0).unwrap();
        assert!((fwhm_single(&d).unwrap() - d.gamma() * 3f64.sqrt()).abs() < 1e-15);
        let narrow = ResonanceDescriptor::new(5.0, 1e-3).unwrap();
        assert!((fwhm_single(&narrow).unwrap() / narrow.gamma() - 1.0).abs() < 1e-7);
    }

    #[test]
    fn peak_position_examples() {
        // E_res = 3 - 0.5 i.
        let k = (Complex64::new(6.0, -1.0)).sqrt();
        let d = ResonanceDescriptor::from_momentum(k).unwrap();
        assert!((peak_position(&d) - 9.25f64.sqrt()).abs() < 1e-12);
        assert!((peak_position(&d) - 3.0414).abs() < 1e-4);
        let sharp = ResonanceDescriptor::new(2.0, 1e-6).unwrap();
        assert!((peak_position(&sharp) - sharp.epsilon()).abs() < 1e-11);
        let negative = ResonanceDescriptor::new(0.04, 0.13).unwrap();
        assert!(negative.epsilon() < 0.0 && peak_position(&negative) > 0.0);
    }

    /// Sup difference to the Lorentzian over `|E - epsilon| <= 2 Gamma`.
    fn distance_to_breit_wigner(ratio: f64) -> f64 {
        let d = ResonanceDescriptor::new(1.0, ratio).unwrap();
        let (eps, g) = (d.epsilon(), d.gamma());
        dense(eps - 2.0 * g, eps + 2.0 * g, 4001)
            .into_iter()
            .map(|e| (single_resonance_profile(&d, e).unwrap() - breit_wigner(eps, g, e).unwrap()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn breit_wigner_limit() {
        // The distance is linear in k_i / k_r and crosses 1% just above 0.01
        // (1.005e-2 there).
        let ratios = [0.02, 0.01, 0.005, 0.001];
        let at = ratios.map(distance_to_breit_wigner);
        assert!((at[1] - 1.005e-2).abs() < 1e-4, "{at:?}");
        assert!(at[2] < 1e-2, "{at:?}");
        for (r, d) in ratios.iter().zip(at) {
            assert!((d / r - 1.0).abs() < 2e-2, "{at:?}");
        }
    }

    #[test]
    fn two_antibound_examples() {
        let (k1, k2) = (0.3, 0.05);
        assert!((two_antibound_profile(k1, k2, k1 * k2 / 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(two_antibound_profile(k1, k2, 0.0).unwrap(), 0.0);
        assert!(two_antibound_profile(k1, k2, 1e-14).unwrap() < 1e-10);
        assert!(two_antibound_profile(0.0, k2, 1.0).is_err());
        assert!(fwhm_two_antibound(-1.0, k2).is_err());
    }

    #[test]
    fn two_antibound_width_matches_quadratic_roots() {
        for (k1, k2) in [(0.4f64, 0.4f64), (0.2, 0.03), (1.0, 2.5)] {
            // Half maximum: E^2 - (k1 k2 + (k1 + k2)^2 / 2) E + (k1 k2)^2 / 4 = 0.
            let b = k1 * k2 + (k1 + k2) * (k1 + k2) / 2.0;
            let c = (k1 * k2) * (k1 * k2) / 4.0;
            let disc = (b * b - 4.0 * c).sqrt();
            let roots = ((b - disc) / 2.0, (b + disc) / 2.0);
            let width = fwhm_two_antibound(k1, k2).unwrap();
            assert!((width - (roots.1 - roots.0)).abs() < 1e-12 * width);

            let es = dense(0.0, 3.0 * roots.1, 200_001);
            let ts: Vec<f64> = es.iter().map(|&e| two_antibound_profile(k1, k2, e).unwrap()).collect();
            let peak = measure_peak(&es, &ts).unwrap();
            assert!((peak.fwhm() - width).abs() < 1e-4 * width, "{} vs {width}", peak.fwhm());
        }
    }

    #[test]
    fn measure_peak_on_lorentzian() {
        let es = dense(-5.0, 5.0, 10_001);
        let ts: Vec<f64> = es.iter().map(|&e| breit_wigner(0.3, 0.8, e).unwrap()).collect();
        let peak = measure_peak(&es, &ts).unwrap();
        assert!((peak.position - 0.3).abs() < 1e-9);
        assert!((peak.fwhm() - 0.8).abs() < 1e-5);
        assert!(measure_peak(&es[..2], &ts[..2]).is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn single_profile_max_at_abs_energy(kr in 0.05f64..3.0, ki in 0.05f64..3.0) {
            let d = ResonanceDescriptor::new(kr, ki).unwrap();
            let e0 = d.abs_energy();
            let w = fwhm_single(&d).unwrap();
            let es = dense(1e-9, e0 + 10.0 * w, 20_001);
            for &e in &es {
                prop_assert!(single_resonance_profile(&d, e).unwrap() <= 1.0);
            }
            prop_assert!((single_resonance_profile(&d, e0).unwrap() - 1.0).abs() < 1e-14);
            let ts: Vec<f64> = es.iter().map(|&e| single_resonance_profile(&d, e).unwrap()).collect();
            let peak = measure_peak(&es, &ts).unwrap();
            prop_assert!((peak.position - e0).abs() <= es[1] - es[0]);
        }

        #[test]
        fn single_profile_width_matches_closed_form(kr in 0.05f64..3.0, ki in 0.05f64..3.0) {
            prop_assume!(ki / kr <= 3.0);
            let d = ResonanceDescriptor::new(kr, ki).unwrap();
            let e0 = d.abs_energy();
            let w = fwhm_single(&d).unwrap();
            let measured = bisect_width(|e| single_resonance_profile(&d, e).unwrap(), e0, 0.0, e0 + 20.0 * w);
            prop_assert!((measured / w - 1.0).abs() < 5e-3, "measured {measured} closed {w}");
        }

        #[test]
        fn two_antibound_equals_axis_product(k1 in 0.01f64..3.0, k2 in 0.01f64..3.0, e in 1e-4f64..10.0) {
            let poles = [
                Pole::new(Complex64::new(0.0, -k1), Parity::Even).unwrap(),
                Pole::new(Complex64::new(0.0, -k2), Parity::Even).unwrap(),
            ];
            let t = PhaseAccumulator::accumulate(&poles, e).unwrap().transmission();
            prop_assert!((t - two_antibound_profile(k1, k2, e).unwrap()).abs() < 1e-12);
        }
    }
}
