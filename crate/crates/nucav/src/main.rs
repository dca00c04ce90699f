use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nucav_core::analysis::{
    converge, fano_sweep, find_rocking_minima, green_nuclear_map, is_monotone, map_csv, spectrum_csv,
    with_thread_cap, ComparisonReport, Grid, Metric,
};
use nucav_core::fano::FanoFit;
use nucav_core::fewmode::{
    build_couplings, effective_scheme_fm, extract_cavity, fewmode_energy_angle_map, fewmode_nuclear_map,
    fewmode_rocking_curve, fewmode_spectrum, sheet_couplings, with_centered_resonant_layer, FewModeBasis,
    NuclearModel,
};
use nucav_core::green::{green_dump_csv, GreenContext};
use nucav_core::level_scheme::{build_level_scheme, green_spectrum};
use nucav_core::multilayer::{energy_angle_map, nuclear_map, nuclear_spectrum, rocking_curve};
use nucav_core::{load_stack, EnsemblePartition, LayerStack, NucavError, Route};

#[derive(Parser)]
#[command(name = "nucav", version, about = "Grazing-incidence x-ray cavity spectra with Mössbauer nuclei")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Stack configuration (TOML).
    #[arg(long, global = true)]
    config: Option<String>,

    #[arg(long, global = true, value_enum, default_value_t = RouteArg::Oracle)]
    route: RouteArg,

    /// Few-mode set: N (modes 1..N), a..b, or a comma list.
    #[arg(long, global = true, default_value = "20")]
    modes: String,

    /// Sub-ensembles per resonant layer (overrides the config partition).
    #[arg(long, global = true)]
    subensembles: Option<u32>,

    /// Few-mode route: recentre the resonant layer with this thickness (nm, nucleus count fixed)
    /// and use the continuum limit.
    #[arg(long, global = true)]
    thick_layer: Option<f64>,

    /// Photon energy in eV (defaults to the resonance energy of the first resonant layer).
    #[arg(long, global = true, allow_hyphen_values = true)]
    energy: Option<f64>,

    /// Incidence angle in mrad.
    #[arg(long, global = true, allow_hyphen_values = true)]
    angle: Option<f64>,

    /// Use the N-th rocking-curve minimum (1-based) as the incidence angle.
    #[arg(long, global = true)]
    minimum: Option<usize>,

    /// Angle grid start:stop:count in mrad.
    #[arg(long, global = true, allow_hyphen_values = true)]
    angles: Option<String>,

    /// Energy grid start:stop:count in eV.
    #[arg(long, global = true, allow_hyphen_values = true)]
    energies: Option<String>,

    /// Detuning grid start:stop:count in units of γ.
    #[arg(long, global = true, allow_hyphen_values = true)]
    detunings: Option<String>,

    /// Exit nonzero when the comparison fails the tolerance.
    #[arg(long, global = true)]
    check: bool,

    #[arg(long, global = true)]
    tol: Option<f64>,

    #[arg(long, global = true, value_enum, default_value_t = MetricArg::Abs)]
    metric: MetricArg,

    /// Output path (stdout when absent).
    #[arg(long, global = true)]
    out: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Off-resonant reflectance versus angle.
    Rocking,
    /// Off-resonant energy × angle map, or a nuclear angle × detuning map with --kind nuclear.
    Map2d {
        #[arg(long, value_enum, default_value_t = MapKind::EnergyAngle)]
        kind: MapKind,
    },
    /// Nuclear spectrum at one angle.
    Spectrum,
    /// Effective level scheme (JSON).
    Scheme,
    /// Route versus layer formalism over angles × detunings.
    Compare,
    /// Deviation from the layer formalism while refining modes or sub-ensembles.
    Converge {
        /// Comma-separated refinement values (mode counts or sub-ensemble counts).
        #[arg(long)]
        steps: String,
        /// Allowed growth between consecutive steps.
        #[arg(long, default_value_t = 0.1)]
        slack: f64,
    },
    /// Fano fits of the layer-formalism spectrum beside the level-scheme diagonal.
    Fano,
    /// G(z, z′) on a depth grid.
    GreenDump {
        /// Depth grid start:stop:count in nm.
        #[arg(long, allow_hyphen_values = true)]
        z: String,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum RouteArg {
    Oracle,
    Fewmode,
    Green,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MapKind {
    EnergyAngle,
    Nuclear,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Abs,
    Rel,
}

enum Outcome {
    Done(String),
    Checked { text: String, pass: bool },
}

fn parse_modes(text: &str) -> Result<Vec<u32>, NucavError> {
    let bad = || NucavError::InvalidArgument(format!("bad mode set '{text}'"));
    let t = text.trim();
    if let Some((a, b)) = t.split_once("..") {
        let a: u32 = a.trim().parse().map_err(|_| bad())?;
        let b: u32 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        return Ok((a..=b).collect());
    }
    if t.contains(',') {
        return t.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect();
    }
    let n: u32 = t.parse().map_err(|_| bad())?;
    Ok((1..=n).collect())
}

fn parse_list(text: &str) -> Result<Vec<u32>, NucavError> {
    text.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| NucavError::InvalidArgument(format!("bad list entry '{x}'")))
        })
        .collect()
}

fn grid_or(text: &Option<String>, default: Grid) -> Result<Vec<f64>, NucavError> {
    Ok(match text {
        Some(t) => Grid::parse(t)?.points(),
        None => default.points(),
    })
}

struct Setup {
    stack: LayerStack,
    partition: EnsemblePartition,
    energy: f64,
    modes: Vec<u32>,
    model: NuclearModel,
}

fn setup(cli: &Cli) -> Result<Setup, NucavError> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| NucavError::InvalidArgument("--config is required".into()))?;
    let (mut stack, mut partition) = load_stack(path)?;
    let mut model = NuclearModel::Sheets;
    if let Some(t) = cli.thick_layer {
        stack = with_centered_resonant_layer(&stack, t)?;
        partition = EnsemblePartition::uniform(&stack, 1)?;
        model = NuclearModel::Continuum;
    }
    if let Some(k) = cli.subensembles {
        partition = EnsemblePartition::uniform(&stack, k)?;
    }
    let energy = cli
        .energy
        .or_else(|| partition.ensembles.first().map(|e| e.species.resonance_energy))
        .unwrap_or(14412.5);
    Ok(Setup {
        stack,
        partition,
        energy,
        modes: parse_modes(&cli.modes)?,
        model,
    })
}

/// Incidence angle in rad from --angle or --minimum.
fn angle(cli: &Cli, s: &Setup) -> Result<f64, NucavError> {
    if let Some(a) = cli.angle {
        return Ok(a * 1e-3);
    }
    let k = cli
        .minimum
        .ok_or_else(|| NucavError::InvalidArgument("give --angle or --minimum".into()))?;
    let grid: Vec<f64> = Grid::default_angle_mrad().points().iter().map(|a| a * 1e-3).collect();
    let mins = find_rocking_minima(&rocking_curve(&s.stack, s.energy, &grid));
    mins.get(k.wrapping_sub(1))
        .map(|m| m * 1e-3)
        .ok_or_else(|| NucavError::InvalidArgument(format!("rocking curve has {} minima, asked for {k}", mins.len())))
}

fn angle_grid(cli: &Cli) -> Result<Vec<f64>, NucavError> {
    Ok(grid_or(&cli.angles, Grid::default_angle_mrad())?.iter().map(|a| a * 1e-3).collect())
}

fn run(cli: &Cli) -> Result<Outcome, NucavError> {
    let s = setup(cli)?;
    match &cli.command {
        Command::Rocking => {
            let angles = angle_grid(cli)?;
            let spec = match cli.route {
                RouteArg::Oracle => rocking_curve(&s.stack, s.energy, &angles),
                RouteArg::Fewmode => fewmode_rocking_curve(&s.stack, &s.modes, s.energy, &angles)?,
                RouteArg::Green => {
                    return Err(NucavError::InvalidArgument("rocking curves use the oracle or fewmode route".into()))
                }
            };
            Ok(Outcome::Done(spectrum_csv(&spec)))
        }
        Command::Map2d { kind } => {
            let angles = angle_grid(cli)?;
            let map = match (kind, cli.route) {
                (MapKind::EnergyAngle, RouteArg::Oracle) => {
                    energy_angle_map(&s.stack, &grid_or(&cli.energies, Grid::new(13400.0, 15400.0, 201)?)?, &angles)
                }
                (MapKind::EnergyAngle, RouteArg::Fewmode) => fewmode_energy_angle_map(
                    &s.stack,
                    &s.modes,
                    &grid_or(&cli.energies, Grid::new(13400.0, 15400.0, 201)?)?,
                    &angles,
                )?,
                (MapKind::EnergyAngle, RouteArg::Green) => {
                    return Err(NucavError::InvalidArgument("energy-angle maps use the oracle or fewmode route".into()))
                }
                (MapKind::Nuclear, route) => {
                    let det = grid_or(&cli.detunings, Grid::default_detuning())?;
                    match route {
                        RouteArg::Oracle => nuclear_map(&s.stack, s.energy, &angles, &det),
                        RouteArg::Fewmode => {
                            fewmode_nuclear_map(&s.stack, &s.partition, &s.modes, s.model, s.energy, &angles, &det)?
                        }
                        RouteArg::Green => green_nuclear_map(&s.stack, &s.partition, s.energy, &angles, &det)?,
                    }
                }
            };
            Ok(Outcome::Done(map_csv(&map)))
        }
        Command::Spectrum => {
            let th = angle(cli, &s)?;
            let det = grid_or(&cli.detunings, Grid::default_detuning())?;
            let spec = match cli.route {
                RouteArg::Oracle => nuclear_spectrum(&s.stack, s.energy, th, &det),
                RouteArg::Fewmode => fewmode_spectrum(&s.stack, &s.partition, &s.modes, s.model, s.energy, th, &det)?,
                RouteArg::Green => green_spectrum(&s.stack, &s.partition, s.energy, th, &det)?,
            };
            Ok(Outcome::Done(spectrum_csv(&spec)))
        }
        Command::Scheme => {
            let th = angle(cli, &s)?;
            match cli.route {
                RouteArg::Fewmode => {
                    let cav = extract_cavity(&s.stack)?;
                    let basis = FewModeBasis::new(s.modes.clone(), cav.length)?;
                    let c = build_couplings(&basis, cav.n, s.energy, th)?;
                    let fm = effective_scheme_fm(&c, &sheet_couplings(&c, &s.partition)?);
                    let n = fm.g_eff.nrows();
                    let doc = serde_json::json!({
                        "angle_mrad": th * 1e3,
                        "energy_keV": s.energy * 1e-3,
                        "ensembles": s.partition.ensembles.iter().map(|e| serde_json::json!({"z_nm": e.z, "t_nm": e.t, "layer": e.layer})).collect::<Vec<_>>(),
                        "level_coupling_re": (0..n * n).map(|k| fm.g_eff[(k / n, k % n)].re).collect::<Vec<_>>(),
                        "level_coupling_im": (0..n * n).map(|k| fm.g_eff[(k / n, k % n)].im).collect::<Vec<_>>(),
                        "drive_re": fm.omega.iter().map(|c| c.re).collect::<Vec<_>>(),
                        "drive_im": fm.omega.iter().map(|c| c.im).collect::<Vec<_>>(),
                        "f_r_re": fm.f_r.re,
                        "f_r_im": fm.f_r.im,
                    });
                    Ok(Outcome::Done(serde_json::to_string_pretty(&doc).expect("json") + "\n"))
                }
                _ => Ok(Outcome::Done(
                    build_level_scheme(&s.stack, &s.partition, s.energy, th)?.to_json() + "\n",
                )),
            }
        }
        Command::Compare => {
            let angles = angle_grid(cli)?;
            let det = grid_or(&cli.detunings, Grid::default_detuning())?;
            let reference = nuclear_map(&s.stack, s.energy, &angles, &det);
            let (candidate, route) = match cli.route {
                RouteArg::Fewmode => (
                    fewmode_nuclear_map(&s.stack, &s.partition, &s.modes, s.model, s.energy, &angles, &det)?,
                    Route::FewMode,
                ),
                RouteArg::Green => (green_nuclear_map(&s.stack, &s.partition, s.energy, &angles, &det)?, Route::Green),
                RouteArg::Oracle => (reference.clone(), Route::Oracle),
            };
            let metric = match cli.metric {
                MetricArg::Abs => Metric::Absolute,
                MetricArg::Rel => Metric::Relative,
            };
            let rep = ComparisonReport::from_amplitudes(
                &candidate.r,
                &reference.r,
                (route, Route::Oracle),
                cli.tol.map(|t| (t, metric)),
            );
            let text = rep.to_json() + "\n";
            Ok(match rep.pass {
                Some(pass) if cli.check => Outcome::Checked { text, pass },
                _ => Outcome::Done(text),
            })
        }
        Command::Converge { steps, slack } => {
            let th = angle(cli, &s)?;
            let det = grid_or(&cli.detunings, Grid::default_detuning())?;
            let reference = nuclear_spectrum(&s.stack, s.energy, th, &det).r;
            let values = parse_list(steps)?;
            let (route, result) = match cli.route {
                RouteArg::Fewmode => (
                    Route::FewMode,
                    converge(&reference, &values, Route::FewMode, |n| {
                        let modes: Vec<u32> = (1..=n).collect();
                        Ok(fewmode_spectrum(&s.stack, &s.partition, &modes, s.model, s.energy, th, &det)?.r)
                    })?,
                ),
                RouteArg::Green => (
                    Route::Green,
                    converge(&reference, &values, Route::Green, |k| {
                        let p = EnsemblePartition::uniform(&s.stack, k)?;
                        Ok(green_spectrum(&s.stack, &p, s.energy, th, &det)?.r)
                    })?,
                ),
                RouteArg::Oracle => {
                    return Err(NucavError::InvalidArgument("converge needs --route fewmode or green".into()))
                }
            };
            let use_rel = cli.metric == MetricArg::Rel;
            let monotone = is_monotone(&result, *slack, use_rel);
            let within = cli.tol.map(|t| {
                let last = result.last().expect("at least one step");
                if use_rel {
                    last.max_rel_dev < t
                } else {
                    last.max_abs_dev < t
                }
            });
            let pass = monotone && within.unwrap_or(true);
            let doc = serde_json::json!({
                "route": route.name(),
                "angle_mrad": th * 1e3,
                "steps": result,
                "monotone": monotone,
                "final_within_tolerance": within,
                "pass": pass,
            });
            let text = serde_json::to_string_pretty(&doc).expect("json") + "\n";
            Ok(if cli.check { Outcome::Checked { text, pass } } else { Outcome::Done(text) })
        }
        Command::Fano => {
            let angles = angle_grid(cli)?;
            let det = grid_or(&cli.detunings, Grid::default_detuning())?;
            let rows = fano_sweep(&s.stack, &s.partition, s.energy, &angles, &det)?;
            let mut out = format!("{},scheme_delta11_gamma,scheme_gamma11_gamma\n", FanoFit::csv_header());
            for row in &rows {
                let c = row.scheme.coupling[(0, 0)];
                if let Ok(f) = &row.fit {
                    out.push_str(&format!(
                        "{},{:.16e},{:.16e}\n",
                        f.csv_row(row.theta * 1e3),
                        c.re,
                        2.0 * c.im
                    ));
                }
            }
            Ok(Outcome::Done(out))
        }
        Command::GreenDump { z } => {
            let th = angle(cli, &s)?;
            let ctx = GreenContext::new(&s.stack.without_resonances(), s.energy, th);
            Ok(Outcome::Done(green_dump_csv(&ctx, &Grid::parse(z)?.points())?))
        }
    }
}

fn emit(cli: &Cli, text: &str) -> std::io::Result<()> {
    match &cli.out {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn error_json(e: &NucavError) -> String {
    let kind = match e {
        NucavError::Config(_) => "config",
        NucavError::Parse(_) => "parse",
        NucavError::Io(_) => "io",
        NucavError::OutsideWindow { .. } => "outside_window",
        NucavError::NoResonantLayers => "no_resonant_layers",
        NucavError::SingularMode { .. } => "singular_mode",
        NucavError::FewModeGeometry(_) => "fewmode_geometry",
        NucavError::FitFailed { .. } => "fit_failed",
        NucavError::NoMinima => "no_minima",
        NucavError::InvalidGrid(_) => "invalid_grid",
        NucavError::InvalidArgument(_) => "invalid_argument",
    };
    serde_json::json!({"error": kind, "message": e.to_string()}).to_string()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match with_thread_cap(|| run(&cli)) {
        Ok(Outcome::Done(text)) => match emit(&cli, &text) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("{}", error_json(&NucavError::Io(e)));
                ExitCode::from(2)
            }
        },
        Ok(Outcome::Checked { text, pass }) => {
            if let Err(e) = emit(&cli, &text) {
                eprintln!("{}", error_json(&NucavError::Io(e)));
                return ExitCode::from(2);
            }
            if pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("{}", serde_json::json!({"error": "threshold", "report": serde_json::from_str::<serde_json::Value>(&text).unwrap_or_default()}));
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(2)
        }
    }
}
