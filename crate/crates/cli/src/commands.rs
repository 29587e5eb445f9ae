//! One function per experiment subcommand. Each computes everything in memory.

use ssf_core::birman_solomyak::{bs_lhs, bs_rhs, CouplingIntegrator, CouplingProblem, SpectralWindow};
use ssf_core::counting::{laplace_transform_spectral, ssf_finite_volume};
use ssf_core::csv::CsvTable;
use ssf_core::csv_row;
use ssf_core::limits::{
    cesaro_experiment, kirsch_scan, scaled_perturbation_experiment, vague_convergence_experiment, CesaroOptions,
    KirschOptions, LengthSequence, SequenceRule, VagueOptions,
};
use ssf_core::operator::{assemble, BoxGrid};
use ssf_core::pathint::{laplace_finite_volume_mc, laplace_infinite_volume_mc, EnsembleParams, McEstimate};
use ssf_core::quadrature::CouplingQuadrature;

use crate::config::{Config, Estimator};
use crate::error::CliError;
use crate::output::{Artifact, RunOutputs};

fn integrator(cfg: &Config) -> Result<CouplingIntegrator, CliError> {
    Ok(CouplingIntegrator::adaptive(CouplingQuadrature::gauss_legendre(
        cfg.experiment.quadrature_nodes,
    )?))
}

/// Lengths from `experiment.lengths`, else from the sequence rule, else `default`.
fn lengths(
    cfg: &Config,
    default: impl FnOnce() -> ssf_core::Result<LengthSequence>,
) -> Result<LengthSequence, CliError> {
    let x = &cfg.experiment;
    if let Some(l) = &x.lengths {
        return Ok(LengthSequence::explicit(l.clone())?);
    }
    let seq = match x.sequence_rule {
        Some(SequenceRule::Arithmetic) => {
            LengthSequence::arithmetic(x.sequence_start, x.sequence_step, x.sequence_count)?
        }
        Some(SequenceRule::Geometric) => {
            LengthSequence::geometric(x.sequence_start, x.sequence_step, x.sequence_count)?
        }
        Some(SequenceRule::Golden) => LengthSequence::golden(x.sequence_start, x.sequence_count)?,
        Some(other) => {
            return Err(CliError::Config(format!(
                "sequence rule {other:?} needs explicit experiment.lengths"
            )))
        }
        None => return Ok(default()?),
    };
    Ok(seq.snapped(cfg.domain.spacing)?)
}

pub fn ssf_scan(cfg: &Config) -> Result<RunOutputs, CliError> {
    let grid = BoxGrid::new(cfg.domain.dim, cfg.domain.side_length, cfg.domain.spacing)?;
    let curve = ssf_finite_volume(
        &grid,
        &cfg.background(),
        &cfg.perturbation(),
        &cfg.experiment.energy_grid(),
    )?;
    Ok(RunOutputs {
        artifacts: vec![Artifact::new("ssf", curve.to_csv()).plotted("E", "xi_L")],
        grid_spacings: vec![grid.spacing()],
        ..RunOutputs::default()
    })
}

pub fn laplace_mc(cfg: &Config) -> Result<RunOutputs, CliError> {
    let (bg, pert) = (cfg.background(), cfg.perturbation());
    let params = EnsembleParams {
        n_paths: cfg.mc.n_paths,
        n_steps: cfg.mc.n_steps,
        master_seed: cfg.mc.master_seed,
        reach: cfg.mc.reach,
    };
    let mut mc = McEstimate::csv_header();
    let mut notes = Vec::new();
    let mut spacings = Vec::new();
    let mut spectral = None;
    if cfg.experiment.estimator == Estimator::FiniteVolume && cfg.domain.dim <= 2 {
        let grid = BoxGrid::new(cfg.domain.dim, cfg.domain.side_length, cfg.domain.spacing)?;
        let h0 = assemble(&grid, &bg, &pert, 0.0)?.matrix;
        let h1 = assemble(&grid, &bg, &pert, 1.0)?.matrix;
        let mut table = CsvTable::new(&["t", "spectral", "L", "h"]);
        for &t in &cfg.experiment.horizons {
            table.push(csv_row![
                t,
                laplace_transform_spectral(&h0, &h1, t)?,
                grid.side_length(),
                grid.spacing()
            ]);
        }
        spacings.push(grid.spacing());
        spectral = Some(table);
    }
    for &t in &cfg.experiment.horizons {
        let est = match cfg.experiment.estimator {
            Estimator::FiniteVolume => laplace_finite_volume_mc(cfg.domain.side_length, t, &bg, &pert, &params)?,
            Estimator::InfiniteVolume => laplace_infinite_volume_mc(t, &bg, &pert, &params)?,
        };
        notes.push(format!("t = {t}: starting-point truncation bound {:e}", est.tail_bound));
        mc.push(est.csv_row());
    }
    notes.push("Dirichlet indicator checks path nodes only (survival slightly overestimated near walls)".into());
    let mut artifacts = vec![Artifact::new("laplace_mc", mc).plotted("t", "estimate")];
    if let Some(table) = spectral {
        artifacts.push(Artifact::new("laplace_spectral", table).plotted("t", "spectral"));
    }
    Ok(RunOutputs {
        artifacts,
        notes,
        grid_spacings: spacings,
        failures: 0,
    })
}

pub fn bs_check(cfg: &Config) -> Result<RunOutputs, CliError> {
    let grid = BoxGrid::new(cfg.domain.dim, cfg.domain.side_length, cfg.domain.spacing)?;
    let (bg, pert) = (cfg.background(), cfg.perturbation());
    let window = SpectralWindow::new(cfg.experiment.windows.iter().map(|w| (w[0], w[1])).collect())?;
    let problem = CouplingProblem::from_grid(&grid, &bg, &pert)?;
    let rhs = bs_rhs(&problem, &window, &integrator(cfg)?)?;
    let setup = cfg.setup();
    let lhs = bs_lhs(&setup.step_function(cfg.domain.side_length)?, &rhs.window)?;
    let diff = (lhs - rhs.value).abs();
    let mut notes = vec![format!("coupling integral split into {} pieces", rhs.pieces)];
    if rhs.window != window {
        notes.push("window endpoints were perturbed to avoid eigenvalue collisions".into());
    }
    if diff >= cfg.tolerances.bs_abs {
        log::warn!("|lhs - rhs| = {diff:e} exceeds tolerance {:e}", cfg.tolerances.bs_abs);
        notes.push(format!("abs_diff {diff:e} exceeds bs_abs {:e}", cfg.tolerances.bs_abs));
    }
    Ok(RunOutputs {
        artifacts: vec![Artifact::new("bs_check", rhs.to_csv(lhs))],
        notes,
        grid_spacings: vec![grid.spacing()],
        failures: 0,
    })
}

pub fn vague(cfg: &Config) -> Result<RunOutputs, CliError> {
    let setup = cfg.setup();
    let seq = lengths(cfg, || LengthSequence::explicit(vec![6.0, 8.0, 12.0, 16.0, 24.0]))?;
    let reference_length = cfg.experiment.reference_length.unwrap_or(2.0 * seq.largest());
    let mut opts = VagueOptions::new(reference_length, integrator(cfg)?);
    opts.final_relative_tol = cfg.tolerances.vague_final_rel;
    let rep = vague_convergence_experiment(&cfg.experiment.weight_function(), &seq, &setup, &opts)?;
    let mut notes = vec![
        format!(
            "reference box L = {reference_length}, proxy error {:e} against L = {}",
            rep.proxy_error, opts.secondary_length
        ),
        format!("relative gaps {:?}", rep.relative_gaps()),
    ];
    notes.extend(
        rep.verdicts
            .iter()
            .map(|v| format!("{}: {}", v.name, if v.passed { "pass" } else { "fail" })),
    );
    Ok(RunOutputs {
        artifacts: vec![Artifact::new("vague", rep.to_csv()).plotted("L", "gap")],
        notes,
        grid_spacings: vec![setup.spacing],
        failures: 0,
    })
}

pub fn cesaro(cfg: &Config) -> Result<RunOutputs, CliError> {
    let setup = cfg.setup();
    let seq = lengths(cfg, || LengthSequence::golden(8.0, 20)?.snapped(setup.spacing))?;
    let opts = CesaroOptions {
        delta: cfg.experiment.delta,
        tol: cfg.tolerances.cesaro_tol,
        reference_length: cfg.experiment.reference_length.unwrap_or(96.0),
        integrator: integrator(cfg)?,
    };
    let rep = cesaro_experiment(&cfg.experiment.energy_grid(), &seq, &setup, &opts)?;
    let mut finals = CsvTable::new(&["E", "cesaro_avg", "reference"]);
    for ((e, a), r) in rep.energies.iter().zip(rep.final_averages()).zip(&rep.reference) {
        finals.push(csv_row![*e, *a, *r]);
    }
    Ok(RunOutputs {
        artifacts: vec![
            Artifact::new("cesaro", rep.to_csv()),
            Artifact::new("cesaro_final", finals).plotted("E", "cesaro_avg"),
        ],
        notes: vec![
            format!("lengths {:?}", rep.lengths),
            format!(
                "reference box L = {}, window delta = {}",
                opts.reference_length, opts.delta
            ),
            format!("bounded fraction {} at tol {}", rep.bounded_fraction, rep.tol),
        ],
        grid_spacings: vec![setup.spacing],
        failures: 0,
    })
}

pub fn kirsch(cfg: &Config) -> Result<RunOutputs, CliError> {
    if cfg.domain.dim != 2 {
        return Err(CliError::Config("kirsch runs need domain.dim = 2".into()));
    }
    if cfg.background().kind != ssf_core::potentials::PotentialKind::Zero {
        return Err(CliError::Config("kirsch runs need a zero background".into()));
    }
    let x = &cfg.experiment;
    let opts = KirschOptions {
        l_min: x.l_min,
        l_max: x.l_max,
        l_step: x.l_step,
        spacing: cfg.domain.spacing,
        eps_tune: x.eps_tune,
        tune_fractions: x.tune_fractions.clone(),
        min_multiplicity: x.min_multiplicity,
        ..KirschOptions::default()
    };
    let scan = kirsch_scan(x.energy, &cfg.perturbation(), &opts)?;
    let best = scan.tuned_argmax();
    Ok(RunOutputs {
        artifacts: vec![Artifact::new("kirsch", scan.to_csv()).plotted("L", "xi_L")],
        notes: vec![
            format!(
                "uniform median {}, uniform max {}",
                scan.uniform_median(),
                scan.uniform_max()
            ),
            format!(
                "tuned max {} at L = {:?}",
                best.map_or(0, |r| r.xi),
                best.map(|r| r.side_length)
            ),
        ],
        grid_spacings: vec![cfg.domain.spacing],
        failures: 0,
    })
}

pub fn scaled(cfg: &Config) -> Result<RunOutputs, CliError> {
    let setup = cfg.setup();
    let seq = lengths(cfg, || LengthSequence::explicit(vec![4.0, 6.0, 8.0, 12.0, 16.0]))?;
    let rep = scaled_perturbation_experiment(&cfg.experiment.energy_grid(), &seq, &setup, cfg.experiment.exponent_k)?;
    let mut support = CsvTable::new(&["L", "nonzero_energies"]);
    for (l, s) in rep.lengths.iter().zip(rep.support_sizes()) {
        support.push(csv_row![*l, s]);
    }
    Ok(RunOutputs {
        artifacts: vec![
            Artifact::new("scaled", rep.to_csv()),
            Artifact::new("scaled_support", support).plotted("L", "nonzero_energies"),
        ],
        notes: vec![
            format!("support nonincreasing: {}", rep.support_nonincreasing()),
            format!("collapse length: {:?}", rep.collapse_length()),
        ],
        grid_spacings: vec![setup.spacing],
        failures: 0,
    })
}
