//! The three figure reproductions and the pole-expansion comparison, shared
//! by the command-line tool and the acceptance tests.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::expansion::{transmission_product, transmission_sum};
use crate::poles::{find_poles, find_poles_in_disk, Parity, Pole, PoleClass, PoleSet, Region, SearchOptions};
use crate::potentials::{Potential, Symmetry};
use crate::profiles::{
    breit_wigner, fwhm_single, fwhm_two_antibound, measure_peak, single_resonance_profile,
    two_antibound_profile, ResonanceDescriptor,
};
use crate::scatter::{energy_grid, transmission_analytic_square_well, transmission_exact};

/// Double-barrier depths of the peak-migration study.
pub const FIG3_GAMMAS: [f64; 3] = [0.875, 0.885, 0.89];
/// Depth of the near-threshold study.
pub const FIG2_GAMMA: f64 = 0.8;

/// Exact transmission at each energy, in parallel.
pub fn exact_curve(p: &Potential, energies: &[f64], half_width: f64, n_slices: usize) -> Result<Vec<f64>> {
    energies
        .par_iter()
        .map(|&e| transmission_exact(p, e, half_width, n_slices).map(|a| a.transmission()))
        .collect()
}

pub fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// A transmission unity paired with the resonance that produces it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnityRow {
    pub n: u32,
    pub lambda: f64,
    pub pole: Pole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1 {
    pub potential: Potential,
    pub half_width: f64,
    pub energies: Vec<f64>,
    pub t_exact: Vec<f64>,
    pub t_analytic: Vec<f64>,
    /// The first resonances (ordered by `|E_n|`) against the unities in order.
    pub table: Vec<UnityRow>,
}

/// Transmission above the overlapping square well and its unity/pole table.
pub fn fig1(e_min: f64, e_max: f64, points: usize, opts: &SearchOptions) -> Result<Fig1> {
    let potential = Potential::overlapping_well();
    let Potential::SquareWell(well) = potential else { unreachable!() };
    let half_width = potential.effective_half_width(opts.tail_tol)?;
    let energies = energy_grid(e_min, e_max, points);
    let t_exact = exact_curve(&potential, &energies, half_width, opts.n_slices)?;
    let t_analytic = energies
        .iter()
        .map(|&e| transmission_analytic_square_well(well.depth(), well.width(), e))
        .collect();

    let unities = well.transmission_unities(e_max);
    let k_top = (2.0 * e_max).sqrt() + 2.0;
    let region = Region::new(1e-2, k_top, -k_top, -1e-2)?;
    let mut resonances = find_poles(&potential, &region, opts)?.resonances();
    resonances.sort_by(|a, b| a.abs_energy().total_cmp(&b.abs_energy()));
    let table = unities
        .iter()
        .zip(resonances)
        .map(|(&(n, lambda), pole)| UnityRow { n, lambda, pole })
        .collect();
    Ok(Fig1 { potential, half_width, energies, t_exact, t_analytic, table })
}

/// The local profile a pole set calls for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalProfile {
    /// Single resonance-virtual pair.
    Single(ResonanceDescriptor),
    /// Two same-parity anti-bound poles `-i k1`, `-i k2`.
    TwoAntiBound(f64, f64),
}

impl LocalProfile {
    /// The lowest resonance if there is one, otherwise the two anti-bound
    /// poles nearest the origin that share a parity.
    pub fn choose(poles: &[Pole]) -> Result<Self> {
        let lowest = poles
            .iter()
            .filter(|p| p.class == PoleClass::Resonance)
            .min_by(|a, b| a.abs_energy().total_cmp(&b.abs_energy()));
        if let Some(p) = lowest {
            return Ok(LocalProfile::Single(ResonanceDescriptor::from_pole(p)?));
        }
        let mut ab: Vec<&Pole> = poles.iter().filter(|p| p.class == PoleClass::AntiBound).collect();
        ab.sort_by(|a, b| a.k.norm().total_cmp(&b.k.norm()));
        for parity in [Parity::Even, Parity::Odd, Parity::NoneApplicable] {
            let same: Vec<&&Pole> = ab.iter().filter(|p| p.parity == parity).take(2).collect();
            if same.len() == 2 {
                return Ok(LocalProfile::TwoAntiBound(-same[0].k.im, -same[1].k.im));
            }
        }
        Err(Error::InvalidParameter("no resonance or anti-bound pair to build a profile from".into()))
    }

    pub fn evaluate(&self, energy: f64) -> Result<f64> {
        match *self {
            LocalProfile::Single(d) => single_resonance_profile(&d, energy),
            LocalProfile::TwoAntiBound(k1, k2) => two_antibound_profile(k1, k2, energy),
        }
    }

    pub fn peak(&self) -> f64 {
        match *self {
            LocalProfile::Single(d) => d.abs_energy(),
            LocalProfile::TwoAntiBound(k1, k2) => k1 * k2 / 2.0,
        }
    }

    pub fn fwhm(&self) -> Result<f64> {
        match *self {
            LocalProfile::Single(d) => fwhm_single(&d),
            LocalProfile::TwoAntiBound(k1, k2) => fwhm_two_antibound(k1, k2),
        }
    }

    /// The matching Breit-Wigner curve, when the profile is a resonance.
    pub fn breit_wigner(&self, energy: f64) -> Option<f64> {
        match *self {
            LocalProfile::Single(d) => breit_wigner(d.epsilon(), d.gamma(), energy).ok(),
            LocalProfile::TwoAntiBound(..) => None,
        }
    }
}

/// Half-maximum crossings of the exact peak, refined by bisection on `T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactPeak {
    pub position: f64,
    pub height: f64,
    pub lower: f64,
    pub upper: f64,
}

impl ExactPeak {
    pub fn fwhm(&self) -> f64 {
        self.upper - self.lower
    }
}

/// One first-peak study: poles near the axis, the chosen local profile, and
/// exact, profile and Breit-Wigner curves over the peak window.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakStudy {
    pub potential: Potential,
    pub half_width: f64,
    pub poles: PoleSet,
    pub profile: LocalProfile,
    pub peak: ExactPeak,
    /// `[peak - FWHM, peak + FWHM]`, clipped at threshold.
    pub window: (f64, f64),
    pub energies: Vec<f64>,
    pub t_exact: Vec<f64>,
    pub t_profile: Vec<f64>,
    pub t_breit_wigner: Option<Vec<f64>>,
}

impl PeakStudy {
    pub fn profile_error(&self) -> f64 {
        sup_distance(&self.t_exact, &self.t_profile)
    }

    pub fn breit_wigner_error(&self) -> Option<f64> {
        self.t_breit_wigner.as_ref().map(|bw| sup_distance(&self.t_exact, bw))
    }
}

/// Search box for the poles that shape the first peak.
pub fn near_axis_region() -> Region {
    Region::new(-1.0, 1.0, -1.0, -1e-3).expect("static region")
}

fn exact_peak(p: &Potential, half_width: f64, n_slices: usize, e_scan: f64) -> Result<ExactPeak> {
    let es = energy_grid(e_scan * 1e-6, e_scan, 2001);
    let ts = exact_curve(p, &es, half_width, n_slices)?;
    let coarse = measure_peak(&es, &ts).ok_or_else(|| Error::InvalidParameter("no peak in scan".into()))?;
    let t = |e: f64| transmission_exact(p, e, half_width, n_slices).map(|a| a.transmission());
    // Golden-section refinement of the maximum inside one grid cell.
    let de = es[1] - es[0];
    let (mut a, mut b) = ((coarse.position - de).max(es[0]), coarse.position + de);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if t(c)? > t(d)? {
            b = d;
        } else {
            a = c;
        }
    }
    let position = 0.5 * (a + b);
    let height = t(position)?;
    let half = height / 2.0;
    let crossing = |mut lo: f64, mut hi: f64, rising: bool| -> Result<f64> {
        for _ in 0..60 {
            let m = 0.5 * (lo + hi);
            if (t(m)? > half) == rising {
                hi = m;
            } else {
                lo = m;
            }
        }
        Ok(0.5 * (lo + hi))
    };
    let lower = crossing((coarse.lower - de).max(es[0]), position, true)?;
    let upper = crossing(position, coarse.upper + de, false)?;
    Ok(ExactPeak { position, height, lower, upper })
}

/// First-peak study of `p` with poles from `region`.
pub fn peak_study(p: &Potential, region: &Region, points: usize, opts: &SearchOptions) -> Result<PeakStudy> {
    let half_width = p.effective_half_width(opts.tail_tol)?;
    let poles = find_poles(p, region, opts)?;
    let profile = LocalProfile::choose(&poles.poles)?;
    let e_scan = profile.peak() + 8.0 * profile.fwhm()?;
    let peak = exact_peak(p, half_width, opts.n_slices, e_scan)?;
    let w = peak.fwhm();
    let window = ((peak.position - w).max(e_scan * 1e-6), peak.position + w);
    let energies = energy_grid(window.0, window.1, points);
    let t_exact = exact_curve(p, &energies, half_width, opts.n_slices)?;
    let t_profile = energies.iter().map(|&e| profile.evaluate(e)).collect::<Result<Vec<_>>>()?;
    let t_breit_wigner = energies.iter().map(|&e| profile.breit_wigner(e)).collect::<Option<Vec<_>>>();
    Ok(PeakStudy { potential: p.clone(), half_width, poles, profile, peak, window, energies, t_exact, t_profile, t_breit_wigner })
}

pub fn fig2(points: usize, opts: &SearchOptions) -> Result<PeakStudy> {
    peak_study(&Potential::threshold_barrier(FIG2_GAMMA), &near_axis_region(), points, opts)
}

pub fn fig3(points: usize, opts: &SearchOptions) -> Result<Vec<PeakStudy>> {
    FIG3_GAMMAS
        .iter()
        .map(|&g| peak_study(&Potential::threshold_barrier(g), &near_axis_region(), points, opts))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionRow {
    pub energy: f64,
    pub t_exact: f64,
    /// `None` for asymmetric potentials.
    pub t_product: Option<f64>,
    pub t_sum: f64,
    /// Sum of the product and sum truncation estimates.
    pub truncation_error: f64,
}

/// Exact transmission against both pole expansions over `energies`, using
/// every pole with `|k| <= k_max`.
pub fn reconstruct(p: &Potential, k_max: f64, energies: &[f64], opts: &SearchOptions) -> Result<(PoleSet, Vec<ReconstructionRow>)> {
    let poles = find_poles_in_disk(p, k_max, opts)?;
    let rows = reconstruct_with(&poles, energies, opts.n_slices)?;
    Ok((poles, rows))
}

/// As [`reconstruct`] on an existing pole set.
pub fn reconstruct_with(poles: &PoleSet, energies: &[f64], n_slices: usize) -> Result<Vec<ReconstructionRow>> {
    let symmetric = poles.potential.parity() == Symmetry::Symmetric;
    energies
        .par_iter()
        .map(|&e| {
            let exact = transmission_exact(&poles.potential, e, poles.half_width, n_slices)?.transmission();
            let sum = transmission_sum(poles, e)?;
            let product = if symmetric { Some(transmission_product(poles, e)?) } else { None };
            Ok(ReconstructionRow {
                energy: e,
                t_exact: exact,
                t_product: product.map(|r| r.probability),
                t_sum: sum.probability,
                truncation_error: sum.truncation_error + product.map_or(0.0, |r| r.truncation_error),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn pole(re: f64, im: f64, parity: Parity) -> Pole {
        Pole::new(Complex64::new(re, im), parity).unwrap()
    }

    #[test]
    fn profile_choice_prefers_lowest_resonance() {
        let poles = [pole(2.0, -0.5, Parity::Odd), pole(0.4, -0.1, Parity::Even), pole(0.0, -0.3, Parity::Even)];
        match LocalProfile::choose(&poles).unwrap() {
            LocalProfile::Single(d) => assert_eq!((d.k_r(), d.k_i()), (0.4, 0.1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn profile_choice_falls_back_to_antibound_pair() {
        let poles = [pole(0.0, -0.9, Parity::Odd), pole(0.0, -0.2, Parity::Even), pole(0.0, -0.04, Parity::Even)];
        assert_eq!(LocalProfile::choose(&poles).unwrap(), LocalProfile::TwoAntiBound(0.04, 0.2));
        assert!(LocalProfile::choose(&poles[..1]).is_err());
    }

    #[test]
    fn sup_distance_examples() {
        assert!((sup_distance(&[0.0, 1.0, 0.5], &[0.1, 0.7, 0.5]) - 0.3).abs() < 1e-15);
        assert_eq!(sup_distance(&[], &[]), 0.0);
    }
}
