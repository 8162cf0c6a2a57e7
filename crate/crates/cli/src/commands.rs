use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use siegert_core::expansion::{default_k_max, transmission_product, transmission_sum};
use siegert_core::experiments::{self, LocalProfile, PeakStudy};
use siegert_core::poles::{find_poles, find_poles_in_disk, verify_count, Pole, PoleSet, Region, SearchOptions};
use siegert_core::profiles::{breit_wigner, fwhm_single, fwhm_two_antibound, ResonanceDescriptor};
use siegert_core::scatter::{energy_grid, transmission_exact};
use siegert_core::tracker::{trace as trace_poles, Family, TraceOptions};
use siegert_core::{Error, Potential};

use crate::table::{num, Table};
use crate::{TransmissionMethod, Window};

impl Window {
    fn grid(&self, e_min: f64, e_max: f64, points: usize) -> Result<Vec<f64>> {
        let (lo, hi, n) = (self.e_min.unwrap_or(e_min), self.e_max.unwrap_or(e_max), self.points.unwrap_or(points));
        if !(lo > 0.0) {
            bail!("E_min must be positive, got {lo}");
        }
        if !(hi > lo) {
            bail!("E_max must exceed E_min, got [{lo}, {hi}]");
        }
        if n < 2 {
            bail!("need at least 2 points, got {n}");
        }
        Ok(energy_grid(lo, hi, n))
    }
}

fn class_parity(p: &Pole) -> [String; 2] {
    [p.class.label().into(), p.parity.label().into()]
}

pub fn transmission(p: &Potential, window: &Window, method: TransmissionMethod, k_max: Option<f64>, opts: &SearchOptions) -> Result<Table> {
    let es = window.grid(0.1, 30.0, 300)?;
    let half_width = p.effective_half_width(opts.tail_tol)?;
    let mut t = Table::new("transmission", &["E", "T", "Re_t", "Im_t", "method"]);
    let rows: Vec<(f64, Complex64)> = match method {
        TransmissionMethod::Exact => es
            .par_iter()
            .map(|&e| transmission_exact(p, e, half_width, opts.n_slices).map(|a| (a.transmission(), a.t)))
            .collect::<siegert_core::Result<_>>()?,
        TransmissionMethod::Product | TransmissionMethod::Sum => {
            let k = k_max.unwrap_or_else(|| default_k_max(es[es.len() - 1]));
            let poles = find_poles_in_disk(p, k, opts)?;
            es.par_iter()
                .map(|&e| {
                    let r = if method == TransmissionMethod::Product {
                        transmission_product(&poles, e)?
                    } else {
                        transmission_sum(&poles, e)?
                    };
                    Ok((r.probability, r.amplitude))
                })
                .collect::<siegert_core::Result<_>>()?
        }
    };
    let label = match method {
        TransmissionMethod::Exact => "exact",
        TransmissionMethod::Product => "product",
        TransmissionMethod::Sum => "sum",
    };
    for (e, (prob, amp)) in es.iter().zip(rows) {
        t.push(vec![num(*e), num(prob), num(amp.re), num(amp.im), label.into()]);
    }
    Ok(t)
}

pub enum Search {
    Region(f64, f64, f64, f64),
    Disk(f64),
}

const POLE_COLUMNS: [&str; 15] = [
    "Re_k", "Im_k", "Re_E", "Im_E", "abs_E", "Gamma", "class", "parity",
    "Re_psi_L", "Im_psi_L", "Re_psi_mL", "Im_psi_mL", "norm_residual", "Re_E_minus_abs_E", "mirror",
];

fn pole_fields(p: &Pole) -> Vec<String> {
    let s = p.surface.unwrap_or(siegert_core::poles::SurfaceAmplitudes {
        left: Complex64::new(f64::NAN, f64::NAN),
        right: Complex64::new(f64::NAN, f64::NAN),
        norm_residual: f64::NAN,
    });
    let e = p.energy();
    let [class, parity] = class_parity(p);
    vec![
        num(p.k.re), num(p.k.im), num(e.re), num(e.im), num(p.abs_energy()), num(p.width()), class, parity,
        num(s.right.re), num(s.right.im), num(s.left.re), num(s.left.im), num(s.norm_residual),
        num(e.re - p.abs_energy()), format!("{};{}", num(p.mirror().re), num(p.mirror().im)),
    ]
}

pub fn poles(p: &Potential, search: Search, csv: bool, opts: &SearchOptions, out: Option<&Path>) -> Result<()> {
    let set: PoleSet = match search {
        Search::Region(a, b, c, d) => find_poles(p, &Region::new(a, b, c, d)?, opts)?,
        Search::Disk(k) => find_poles_in_disk(p, k, opts)?,
    };
    let certificates = set
        .regions
        .iter()
        .map(|r| verify_count(p, r, opts).map(|n| (r, n)))
        .collect::<siegert_core::Result<Vec<_>>>()?;

    let mut text = Vec::new();
    if csv {
        let mut t = Table::new("poles", &POLE_COLUMNS);
        for pole in &set.poles {
            t.push(pole_fields(pole));
        }
        t.comments.push(format!("potential {}", p.describe()));
        t.comments.push(format!("half_width {}", num(set.half_width)));
        for (r, n) in &certificates {
            t.comments.push(format!(
                "region re=[{}, {}] im=[{}, {}] winding={n}",
                num(r.re_min), num(r.re_max), num(r.im_min), num(r.im_max)
            ));
        }
        text = t.render()?;
    } else {
        writeln!(text, "potential: {}", p.describe())?;
        writeln!(text, "half_width: {}", num(set.half_width))?;
        writeln!(text, "winding_verified: {}", set.winding_verified)?;
        for (r, n) in &certificates {
            writeln!(
                text,
                "region: re=[{}, {}] im=[{}, {}] winding={n}",
                num(r.re_min), num(r.re_max), num(r.im_min), num(r.im_max)
            )?;
        }
        writeln!(text, "poles: {}", set.len())?;
        for (i, pole) in set.poles.iter().enumerate() {
            writeln!(text)?;
            writeln!(text, "[pole {}]", i + 1)?;
            for (name, value) in POLE_COLUMNS.iter().zip(pole_fields(pole)) {
                writeln!(text, "{name} = {value}")?;
            }
        }
    }
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => std::io::stdout().write_all(&text).context("writing to stdout"),
    }
}

pub fn reconstruct(p: &Potential, window: &Window, k_max: Option<f64>, opts: &SearchOptions) -> Result<Table> {
    let es = window.grid(0.5, 30.0, 200)?;
    let k = k_max.unwrap_or_else(|| default_k_max(es[es.len() - 1]));
    let (poles, rows) = experiments::reconstruct(p, k, &es, opts)?;
    let mut t = Table::new("reconstruct", &["E", "T_exact", "T_product", "T_sum", "est_truncation_error"]);
    for r in rows {
        t.push(vec![
            num(r.energy),
            num(r.t_exact),
            r.t_product.map_or_else(String::new, num),
            num(r.t_sum),
            num(r.truncation_error),
        ]);
    }
    t.comments.push(format!("k_max {} poles {}", num(k), poles.len()));
    Ok(t)
}

pub enum ProfileInput {
    Pole(Complex64),
    AntiBound(f64, f64),
}

pub fn profile(input: ProfileInput, window: &Window, bw: bool, exact: Option<&Potential>, opts: &SearchOptions) -> Result<Table> {
    let profile = match input {
        ProfileInput::Pole(k) if k.re == 0.0 => return Err(Error::ProfileUndefined.into()),
        ProfileInput::Pole(k) => {
            if k.im >= 0.0 {
                bail!("resonance pole must lie in the lower half plane, got {k}");
            }
            LocalProfile::Single(ResonanceDescriptor::from_momentum(k)?)
        }
        ProfileInput::AntiBound(k1, k2) => {
            fwhm_two_antibound(k1, k2)?;
            LocalProfile::TwoAntiBound(k1, k2)
        }
    };
    let (peak, width) = (profile.peak(), profile.fwhm()?);
    let es = window.grid((peak - 3.0 * width).max(peak * 1e-3), peak + 6.0 * width, 400)?;
    let mut header = vec!["E", "T_profile"];
    let bw_params = match profile {
        LocalProfile::Single(d) if bw => Some((d.epsilon(), d.gamma())),
        LocalProfile::TwoAntiBound(..) if bw => bail!("--bw needs a resonance pole"),
        _ => None,
    };
    if bw_params.is_some() {
        header.push("T_BW");
    }
    let exact_curve = match exact {
        Some(p) => {
            header.push("T_exact");
            Some(experiments::exact_curve(p, &es, p.effective_half_width(opts.tail_tol)?, opts.n_slices)?)
        }
        None => None,
    };
    let mut t = Table::new("profile", &header);
    for (i, &e) in es.iter().enumerate() {
        let mut row = vec![num(e), num(profile.evaluate(e)?)];
        if let Some((eps, g)) = bw_params {
            row.push(num(breit_wigner(eps, g, e)?));
        }
        if let Some(c) = &exact_curve {
            row.push(num(c[i]));
        }
        t.push(row);
    }
    t.comments.push(format!("peak {} fwhm {}", num(peak), num(width)));
    Ok(t)
}

pub fn trace(p: &Potential, parameter: &str, range: (f64, f64), step: f64, seeds: &[Complex64], opts: &SearchOptions) -> Result<Table> {
    let family = Family::new(p.clone(), parameter)?;
    let seeds = if seeds.is_empty() {
        let start = family.at(range.0)?;
        let set = find_poles(&start, &experiments::near_axis_region(), opts)?;
        match LocalProfile::choose(&set.poles)? {
            LocalProfile::Single(d) => vec![d.momentum()],
            LocalProfile::TwoAntiBound(k1, k2) => vec![Complex64::new(0.0, -k1), Complex64::new(0.0, -k2)],
        }
    } else {
        seeds.to_vec()
    };
    let topts = TraceOptions { n_slices: opts.n_slices, tail_tol: opts.tail_tol, ..Default::default() };
    let traj = trace_poles(&family, range, step, &seeds, &topts)?;
    let mut t = Table::new("trace", &[parameter, "branch", "Re_k", "Im_k", "Re_E", "Im_E", "abs_E", "Gamma", "class"]);
    for s in &traj.samples {
        for pole in &s.poles {
            let e = pole.k * pole.k / 2.0;
            t.push(vec![
                num(s.parameter),
                pole.branch.to_string(),
                num(pole.k.re),
                num(pole.k.im),
                num(e.re),
                num(e.im),
                num(e.norm()),
                num(-2.0 * e.im),
                pole.class.label().into(),
            ]);
        }
    }
    for e in &traj.events {
        t.comments.push(format!("event {} branch {} [{}, {}]", e.kind.label(), e.branch, num(e.lower), num(e.upper)));
    }
    if let Some(lost) = &traj.lost {
        t.comments.push(format!("stopped: {lost}"));
    }
    Ok(t)
}

pub fn fig1(window: &Window, opts: &SearchOptions) -> Result<Vec<Table>> {
    let es = window.grid(0.05, 30.0, 600)?;
    let f = experiments::fig1(es[0], es[es.len() - 1], es.len(), opts)?;
    let mut curve = Table::new("fig1_transmission", &["E", "T_exact", "T_analytic"]);
    for ((e, t), a) in f.energies.iter().zip(&f.t_exact).zip(&f.t_analytic) {
        curve.push(vec![num(*e), num(*t), num(*a)]);
    }
    let mut table = Table::new(
        "fig1_poles",
        &["n", "lambda_n", "Re_k", "Im_k", "Re_E", "Im_E", "abs_E", "Gamma", "T_at_abs_E", "T_at_Re_E"],
    );
    for row in &f.table {
        let t_at = |e: f64| -> Result<String> {
            if e > 0.0 {
                Ok(num(transmission_exact(&f.potential, e, f.half_width, opts.n_slices)?.transmission()))
            } else {
                Ok("nan".into())
            }
        };
        let e = row.pole.energy();
        table.push(vec![
            row.n.to_string(),
            num(row.lambda),
            num(row.pole.k.re),
            num(row.pole.k.im),
            num(e.re),
            num(e.im),
            num(row.pole.abs_energy()),
            num(row.pole.width()),
            t_at(row.pole.abs_energy())?,
            t_at(e.re)?,
        ]);
    }
    Ok(vec![curve, table])
}

fn summary_row(gamma: f64, s: &PeakStudy) -> Result<Vec<String>> {
    let (kind, a, b, gamma_width) = match s.profile {
        LocalProfile::Single(d) => ("single", d.k_r(), d.k_i(), d.gamma()),
        LocalProfile::TwoAntiBound(k1, k2) => ("two_antibound", k1, k2, f64::NAN),
    };
    Ok(vec![
        num(gamma),
        kind.into(),
        num(a),
        num(b),
        num(s.profile.peak()),
        num(gamma_width),
        num(s.profile.fwhm()?),
        num(s.peak.position),
        num(s.peak.fwhm()),
        num(s.window.0),
        num(s.window.1),
        num(s.profile_error()),
        s.breit_wigner_error().map_or_else(|| "nan".into(), num),
    ])
}

const SUMMARY_COLUMNS: [&str; 13] = [
    "gamma", "profile", "k_r_or_k1", "k_i_or_k2", "profile_peak", "Gamma", "fwhm_closed_form",
    "exact_peak", "fwhm_exact", "window_lo", "window_hi", "sup_err_profile", "sup_err_bw",
];

pub fn fig2(points: usize, opts: &SearchOptions) -> Result<Vec<Table>> {
    let s = experiments::fig2(points, opts)?;
    let mut curve = Table::new("fig2_transmission", &["E", "T_exact", "T_BW", "T_profile"]);
    let bw = s.t_breit_wigner.clone().context("first pole is not a resonance")?;
    for i in 0..s.energies.len() {
        curve.push(vec![num(s.energies[i]), num(s.t_exact[i]), num(bw[i]), num(s.t_profile[i])]);
    }
    let mut summary = Table::new("fig2_summary", &SUMMARY_COLUMNS);
    summary.push(summary_row(experiments::FIG2_GAMMA, &s)?);
    if let LocalProfile::Single(d) = s.profile {
        summary.comments.push(format!("epsilon {} abs_E {} fwhm_single {}", num(d.epsilon()), num(d.abs_energy()), num(fwhm_single(&d)?)));
    }
    Ok(vec![curve, summary])
}

pub fn fig3(points: usize, opts: &SearchOptions) -> Result<Vec<Table>> {
    let studies = experiments::fig3(points, opts)?;
    let mut curves = Table::new("fig3_transmission", &["gamma", "E", "T_exact", "T_profile"]);
    let mut inset = Table::new("fig3_poles", &["gamma", "Re_k", "Im_k", "class", "parity"]);
    let mut summary = Table::new("fig3_summary", &SUMMARY_COLUMNS);
    for (&g, s) in experiments::FIG3_GAMMAS.iter().zip(&studies) {
        for i in 0..s.energies.len() {
            curves.push(vec![num(g), num(s.energies[i]), num(s.t_exact[i]), num(s.t_profile[i])]);
        }
        for p in &s.poles.poles {
            let [class, parity] = class_parity(p);
            inset.push(vec![num(g), num(p.k.re), num(p.k.im), class, parity]);
        }
        summary.push(summary_row(g, s)?);
    }
    Ok(vec![curves, inset, summary])
}
