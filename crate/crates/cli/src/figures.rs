//! Datasets behind the reference figures, with their parameters baked in.

use muxdt_core::solve::{fit_poly2, Family, Mode};

use crate::error::CliError;
use crate::sweep::{
    curve_table, rate_row, solve_rates, Curve, EngineKind, Grid, RunSettings, Scale, Solved,
    System, RATE_COLUMNS,
};
use crate::table::{Report, Table};

pub const FIGURES: [&str; 6] = ["fig3a", "fig3b", "fig5a", "fig5b", "fig6a", "fig6b"];

const DEADTIME: f64 = 50e-9;
const CW_POOL_MAX: usize = 12;
const PULSED_POOL_MAX: usize = 5;
const NU_A: f64 = 82e6;
const NU_B: f64 = 410e6;
const REDUCTION: usize = 4;

pub fn figure(name: &str, target: f64, settings: &RunSettings) -> Result<Report, CliError> {
    match name {
        "fig3a" => fig3a(settings),
        "fig3b" => fig3b(target, settings),
        "fig5a" => fig5(NU_A, settings),
        "fig5b" => fig5(NU_B, settings),
        "fig6a" => fig6(NU_A, target, settings),
        "fig6b" => fig6(NU_B, target, settings),
        other => Err(CliError::usage(format!(
            "unknown figure '{other}'; valid names: {}",
            FIGURES.join(", ")
        ))),
    }
}

/// DTF vs photon rate for 1..=12 detectors plus a 5 ns single detector.
fn fig3a(settings: &RunSettings) -> Result<Report, CliError> {
    let xs = Grid::new(Scale::Log, 1e5, 1e10, 101)?.values();
    let mut curves: Vec<Curve> = (1..=CW_POOL_MAX)
        .map(|n| Curve {
            system: System::homogeneous(Mode::Cw, Family::Multiplexed, DEADTIME, n),
            xs: xs.clone(),
        })
        .collect();
    curves.push(Curve {
        system: System::homogeneous(Mode::Cw, Family::Single, DEADTIME / 10.0, 1),
        xs,
    });
    Ok(Report::single("fig3a", curve_table(&curves, settings)?))
}

type FamilyRates = (Family, Vec<Solved>);

/// Rates at the target DTF for `families` x `1..=n_max`, with speedups
/// relative to N = 1 of the same family.
fn rate_table(
    mode: Mode,
    families: &[Family],
    n_max: usize,
    target: f64,
    settings: &RunSettings,
    unreachable_inf: bool,
) -> Result<(Table, Vec<FamilyRates>), CliError> {
    let kind: EngineKind = settings.single_engine()?;
    let systems: Vec<System> = families
        .iter()
        .flat_map(|&f| (1..=n_max).map(move |n| System::homogeneous(mode, f, DEADTIME, n)))
        .collect();
    let solved = solve_rates(&systems, target, None, kind, settings, unreachable_inf)?;
    let mut table = Table::new(&RATE_COLUMNS);
    let mut by_family = Vec::new();
    for (chunk_systems, chunk) in systems.chunks(n_max).zip(solved.chunks(n_max)) {
        let base = chunk[0].rate;
        for (system, s) in chunk_systems.iter().zip(chunk) {
            table.push(rate_row(system, target, *s, base));
        }
        by_family.push((chunk_systems[0].family, chunk.to_vec()));
    }
    Ok((table, by_family))
}

/// R(DTF = target) vs N for multiplexed and tree pools, plus quadratic fits.
fn fig3b(target: f64, settings: &RunSettings) -> Result<Report, CliError> {
    let (rates, by_family) = rate_table(
        Mode::Cw,
        &[Family::Multiplexed, Family::Tree],
        CW_POOL_MAX,
        target,
        settings,
        false,
    )?;
    let mut fits = Table::new(&["family", "c0", "c1", "c2", "r_squared", "degenerate"]);
    for (family, solved) in by_family {
        let points: Vec<(f64, f64)> = solved
            .iter()
            .enumerate()
            .map(|(i, s)| ((i + 1) as f64, s.rate))
            .collect();
        let fit = fit_poly2(&points)?;
        fits.push(vec![
            family.name().into(),
            fit.coefficients[0].into(),
            fit.coefficients[1].into(),
            fit.coefficients[2].into(),
            fit.r_squared.into(),
            if fit.degenerate { "true" } else { "false" }.into(),
        ]);
    }
    Ok(Report {
        datasets: vec![("rates".to_owned(), rates), ("fit".to_owned(), fits)],
    })
}

/// DTF vs per-pulse probability for 1..=5 detectors plus a single detector
/// with a quarter of the deadtime.
fn fig5(nu: f64, settings: &RunSettings) -> Result<Report, CliError> {
    let mode = Mode::Pulsed { rep_rate: nu };
    let xs = Grid::new(Scale::Log, 1e-3, 1.0, 61)?.values();
    let mut curves: Vec<Curve> = (1..=PULSED_POOL_MAX)
        .map(|n| Curve {
            system: System::homogeneous(mode, Family::Multiplexed, DEADTIME, n),
            xs: xs.clone(),
        })
        .collect();
    curves.push(Curve {
        system: System::homogeneous(mode, Family::Reduced, DEADTIME, REDUCTION),
        xs,
    });
    Ok(Report::single("fig5", curve_table(&curves, settings)?))
}

/// R(DTF = target) for multiplexed, reduced-deadtime and tree configurations
/// at N = 1..=5; targets a configuration never reaches report `inf`.
fn fig6(nu: f64, target: f64, settings: &RunSettings) -> Result<Report, CliError> {
    let (rates, _) = rate_table(
        Mode::Pulsed { rep_rate: nu },
        &[Family::Multiplexed, Family::Reduced, Family::Tree],
        PULSED_POOL_MAX,
        target,
        settings,
        true,
    )?;
    Ok(Report::single("fig6", rates))
}
