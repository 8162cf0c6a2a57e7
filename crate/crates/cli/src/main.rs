//! `siegert`: S-matrix poles, pole-based transmission and the figure data.

mod commands;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use siegert_core::poles::SearchOptions;
use siegert_core::scatter::{DEFAULT_SLICES, DEFAULT_TAIL_TOL};
use siegert_core::Potential;

#[derive(Debug, Parser)]
#[command(name = "siegert", version, about = "S-matrix poles of 1D potentials and pole-based transmission profiles")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Potential: a preset (`well`, `barrier`, `barrier-a|b|c`) or inline
    /// `double_barrier:beta=2.5,gamma=0.8,alpha=0.5` / `square_well:depth=-13,width=2.22`.
    #[arg(long, global = true, conflicts_with = "config")]
    potential: Option<String>,
    /// TOML file describing the potential (`kind`, parameters, or `preset`).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (directory for the `fig*` commands); stdout if absent.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Propagation slices.
    #[arg(long, global = true, default_value_t = DEFAULT_SLICES)]
    n_slices: usize,
    /// Tail tolerance defining the Siegert half-width.
    #[arg(long, global = true, default_value_t = DEFAULT_TAIL_TOL)]
    tail_tol: f64,
    /// Newton starts per side of the pole-search grid.
    #[arg(long, global = true, default_value_t = 40)]
    grid: usize,
}

#[derive(Debug, Args)]
struct Window {
    #[arg(long)]
    e_min: Option<f64>,
    #[arg(long)]
    e_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum TransmissionMethod {
    Exact,
    Product,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum PoleFormat {
    Text,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transmission over an energy grid: E, T, Re(t), Im(t), method.
    Transmission {
        #[command(flatten)]
        window: Window,
        #[arg(long, value_enum, default_value_t = TransmissionMethod::Exact)]
        method: TransmissionMethod,
        /// Pole truncation radius for the expansions [default: 4 sqrt(2 E_max)].
        #[arg(long)]
        k_max: Option<f64>,
    },
    /// Poles in a rectangle (`--re-min` ... `--im-max`) or the disk `|k| <= --k-max`.
    Poles {
        #[arg(long, allow_hyphen_values = true)]
        re_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        re_max: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        im_min: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        im_max: Option<f64>,
        #[arg(long, conflicts_with_all = ["re_min", "re_max", "im_min", "im_max"])]
        k_max: Option<f64>,
        #[arg(long, value_enum, default_value_t = PoleFormat::Text)]
        format: PoleFormat,
    },
    /// Exact transmission against the product and sum pole expansions.
    Reconstruct {
        #[command(flatten)]
        window: Window,
        #[arg(long)]
        k_max: Option<f64>,
    },
    /// A local profile from one resonance pole or two anti-bound poles.
    Profile {
        /// Resonance momentum `re,im`.
        #[arg(long, allow_hyphen_values = true, required_unless_present = "antibound", conflicts_with = "antibound")]
        pole: Option<String>,
        /// Anti-bound magnitudes `k1,k2` (poles at `-i k1`, `-i k2`).
        #[arg(long)]
        antibound: Option<String>,
        #[command(flatten)]
        window: Window,
        /// Add the Breit-Wigner curve.
        #[arg(long)]
        bw: bool,
        /// Add the exact transmission of the selected potential.
        #[arg(long)]
        exact: bool,
    },
    /// Follow poles while one potential parameter varies.
    Trace {
        #[arg(long, default_value = "gamma")]
        parameter: String,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.875)]
        from: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.89)]
        to: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Starting pole `re,im`; repeatable. Default: the lowest pole near the axis.
        #[arg(long, allow_hyphen_values = true)]
        seed: Vec<String>,
    },
    /// Square-well transmission with its unity/pole table.
    Fig1 {
        #[command(flatten)]
        window: Window,
    },
    /// Near-threshold double-barrier peak: exact, Breit-Wigner and single-pole curves.
    Fig2 {
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
    /// First peak at three well depths with the pole inset data.
    Fig3 {
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
}

fn parse_pair(text: &str) -> Result<(f64, f64)> {
    let (a, b) = text.split_once(',').with_context(|| format!("expected `a,b`, got `{text}`"))?;
    let a: f64 = a.trim().parse().with_context(|| format!("`{a}` is not a number"))?;
    let b: f64 = b.trim().parse().with_context(|| format!("`{b}` is not a number"))?;
    Ok((a, b))
}

fn parse_complex(text: &str) -> Result<Complex64> {
    let (re, im) = parse_pair(text)?;
    Ok(Complex64::new(re, im))
}

impl Common {
    /// The selected potential, or `default` when none is given.
    fn potential(&self, default: &str) -> Result<Potential> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            return Potential::from_config_str(&text).with_context(|| format!("in {}", path.display()));
        }
        let spec = self.potential.as_deref().unwrap_or(default);
        Potential::from_inline(spec).with_context(|| format!("potential `{spec}`"))
    }

    fn search(&self) -> Result<SearchOptions> {
        if self.grid == 0 {
            bail!("--grid must be positive");
        }
        Ok(SearchOptions { tail_tol: self.tail_tol, n_slices: self.n_slices, grid: self.grid, ..Default::default() })
    }
}

fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    let out = c.output.as_deref();
    match cli.command {
        Command::Transmission { window, method, k_max } => {
            let t = commands::transmission(&c.potential("well")?, &window, method, k_max, &c.search()?)?;
            table::emit_one(&t, out)
        }
        Command::Poles { re_min, re_max, im_min, im_max, k_max, format } => {
            let bounds = [re_min, re_max, im_min, im_max];
            let region = match (bounds, k_max) {
                ([Some(a), Some(b), Some(c), Some(d)], None) => commands::Search::Region(a, b, c, d),
                ([None, None, None, None], Some(k)) => commands::Search::Disk(k),
                ([None, None, None, None], None) => commands::Search::Disk(10.0),
                _ => bail!("give all of --re-min/--re-max/--im-min/--im-max, or --k-max"),
            };
            commands::poles(&c.potential("well")?, region, format == PoleFormat::Csv, &c.search()?, out)
        }
        Command::Reconstruct { window, k_max } => {
            let t = commands::reconstruct(&c.potential("well")?, &window, k_max, &c.search()?)?;
            table::emit_one(&t, out)
        }
        Command::Profile { pole, antibound, window, bw, exact } => {
            let profile = match (pole, antibound) {
                (Some(p), _) => commands::ProfileInput::Pole(parse_complex(&p)?),
                (None, Some(a)) => {
                    let (k1, k2) = parse_pair(&a)?;
                    commands::ProfileInput::AntiBound(k1, k2)
                }
                (None, None) => bail!("give --pole or --antibound"),
            };
            let potential = if exact { Some(c.potential("barrier")?) } else { None };
            let t = commands::profile(profile, &window, bw, potential.as_ref(), &c.search()?)?;
            table::emit_one(&t, out)
        }
        Command::Trace { parameter, from, to, step, seed } => {
            let seeds = seed.iter().map(|s| parse_complex(s)).collect::<Result<Vec<_>>>()?;
            let t = commands::trace(&c.potential("barrier-a")?, &parameter, (from, to), step, &seeds, &c.search()?)?;
            table::emit_one(&t, out)
        }
        Command::Fig1 { window } => table::emit_many(&commands::fig1(&window, &c.search()?)?, out),
        Command::Fig2 { points } => table::emit_many(&commands::fig2(points, &c.search()?)?, out),
        Command::Fig3 { points } => table::emit_many(&commands::fig3(points, &c.search()?)?, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
