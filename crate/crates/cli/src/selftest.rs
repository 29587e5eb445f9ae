//! Closed-form identities and randomized finite-matrix property suites.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssf_core::birman_solomyak::{
    bs_lhs, bs_rhs, bs_weighted, CouplingIntegrator, CouplingProblem, SpectralWindow, TestFunction,
};
use ssf_core::counting::{
    count_below, invariance_principle_check, l1_bound_check, laplace_from_spectra, ssf_finite_volume, StepFunction,
};
use ssf_core::csv::CsvTable;
use ssf_core::csv_row;
use ssf_core::linalg::dense;
use ssf_core::operator::{analytic_free_levels, assemble, lattice_multiplicity, BoxGrid};
use ssf_core::pathint::{bridge_density, laplace_infinite_volume_mc, sample_bridge, EnsembleParams};
use ssf_core::potentials::{Potential, PotentialSpec, SupportBox};
use ssf_core::quadrature::CouplingQuadrature;
use ssf_core::Result;

use crate::output::{Artifact, RunOutputs};

struct Suite {
    table: CsvTable,
    failures: usize,
}

impl Suite {
    fn record(&mut self, name: &str, outcome: Result<(bool, String)>) {
        let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        if !passed {
            log::error!("selftest {name} failed: {detail}");
            self.failures += 1;
        }
        self.table.push(csv_row![name, passed, detail.as_str()]);
    }
}

fn close(a: f64, b: f64, tol: f64) -> (bool, String) {
    ((a - b).abs() <= tol, format!("{a} vs {b}"))
}

fn toy_pair() -> (DMatrix<f64>, DMatrix<f64>) {
    (diag(&[0.0, 1.0]), DMatrix::identity(2, 2))
}

fn diag(v: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v))
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    (&a + a.transpose()) * 0.5
}

fn random_psd_diagonal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if rng.random_bool(0.5) {
                rng.random_range(0.0..2.0)
            } else {
                0.0
            }
        })
        .collect()
}

pub fn run(master_seed: u64) -> RunOutputs {
    let mut s = Suite {
        table: CsvTable::new(&["check", "passed", "detail"]),
        failures: 0,
    };
    let q = CouplingQuadrature::gauss_legendre(64).expect("64 nodes");
    let integ = CouplingIntegrator::adaptive(q);

    s.record(
        "zero_potential_vanishes",
        Ok(close(PotentialSpec::zero(2).value(&[0.3, -1.2]), 0.0, 0.0)),
    );
    s.record("square_bump_indicator", {
        let v = PotentialSpec::square_bump(3.0, 0.5, vec![0.0]);
        Ok((
            v.value(&[0.2]) == 3.0 && v.value(&[0.6]) == 0.0,
            format!("{} {}", v.value(&[0.2]), v.value(&[0.6])),
        ))
    });
    s.record(
        "smooth_bump_center",
        Ok(close(
            PotentialSpec::smooth_bump(1.0, 1.0, vec![0.0]).value(&[0.0]),
            1.0,
            1e-15,
        )),
    );
    s.record("support_geometry", {
        let sq = PotentialSpec::square_bump(1.0, 0.5, vec![0.0]).support();
        let ok = PotentialSpec::zero(1).support() == SupportBox::Empty
            && sq
                == SupportBox::Bounded {
                    lo: vec![-0.5],
                    hi: vec![0.5],
                }
            && PotentialSpec::cosine(1.0, 1.0, vec![0.0]).support() == SupportBox::Unbounded;
        Ok((ok, format!("{sq:?}")))
    });
    s.record(
        "stencil_arithmetic",
        (|| {
            let pi = std::f64::consts::PI;
            let grid = BoxGrid::new(1, pi, pi / 4.0)?;
            let z = PotentialSpec::zero(1);
            let m = assemble(&grid, &z, &z, 0.0)?.matrix;
            let (d, e) = m.tridiagonal().expect("1D stencil is tridiagonal");
            let ok = d.len() == 3
                && d.iter().all(|x| (x - 16.0 / (pi * pi)).abs() < 1e-12)
                && e.iter().all(|x| (x + 8.0 / (pi * pi)).abs() < 1e-12);
            Ok((ok, format!("diag {d:?} off {e:?}")))
        })(),
    );
    s.record(
        "additive_perturbation",
        (|| {
            let grid = BoxGrid::new(1, 4.0, 0.25)?;
            let z = PotentialSpec::zero(1);
            let v = PotentialSpec::square_bump(5.0, 0.5, vec![0.0]);
            let d0 = assemble(&grid, &z, &v, 0.0)?.matrix.diagonal();
            let d1 = assemble(&grid, &z, &v, 1.0)?.matrix.diagonal();
            let ok = (0..grid.len()).all(|i| {
                let inside = v.value(&grid.node(i)) > 0.0;
                let diff = d1[i] - d0[i];
                if inside {
                    (diff - 5.0).abs() < 1e-12
                } else {
                    diff == 0.0
                }
            });
            Ok((ok, String::new()))
        })(),
    );
    s.record("analytic_levels", {
        let pi = std::f64::consts::PI;
        let l1 = analytic_free_levels(1, pi, 3.0);
        let l2 = analytic_free_levels(2, pi, 3.0);
        let ok = l1.len() == 2
            && (l1[0].0 - 0.5).abs() < 1e-12
            && (l1[1].0 - 2.0).abs() < 1e-12
            && l2.len() == 2
            && l2[0].1 == 1
            && l2[1].1 == 2
            && (l2[1].0 - 2.5).abs() < 1e-12;
        Ok((ok, format!("{l1:?} {l2:?}")))
    });
    s.record(
        "free_box_counts",
        (|| {
            let pi = std::f64::consts::PI;
            let z1 = PotentialSpec::zero(1);
            let z2 = PotentialSpec::zero(2);
            let c1 = count_below(&assemble(&BoxGrid::new(1, pi, pi / 256.0)?, &z1, &z1, 0.0)?.matrix, 1.0)?;
            let c2 = count_below(&assemble(&BoxGrid::new(2, pi, pi / 64.0)?, &z2, &z2, 0.0)?.matrix, 3.0)?;
            Ok((c1 == 1 && c2 == 3, format!("{c1} {c2}")))
        })(),
    );
    s.record(
        "ssf_zero_perturbation",
        (|| {
            let grid = BoxGrid::new(1, 8.0, 1.0 / 16.0)?;
            let z = PotentialSpec::zero(1);
            let energies: Vec<f64> = (0..40).map(|i| 0.1 * i as f64).collect();
            let c = ssf_finite_volume(&grid, &z, &z, &energies)?;
            Ok((c.values.iter().all(|&v| v == 0), String::new()))
        })(),
    );
    s.record(
        "ssf_tiny_amplitude",
        (|| {
            let grid = BoxGrid::new(1, 8.0, 1.0 / 16.0)?;
            let z = PotentialSpec::zero(1);
            let v = PotentialSpec::square_bump(1e-8, 0.5, vec![0.0]);
            let energies = [0.3, 1.1, 2.7];
            let c = ssf_finite_volume(&grid, &z, &v, &energies)?;
            Ok((c.values.iter().all(|&v| v == 0), format!("{:?}", c.values)))
        })(),
    );
    let (a0, a1) = toy_pair();
    s.record(
        "laplace_toy_pair",
        (|| {
            let x = laplace_from_spectra(&[0.0, 1.0], &[1.0, 1.0], 1.0)?;
            let same = laplace_from_spectra(&[0.0, 1.0], &[0.0, 1.0], 1.0)?;
            Ok((
                ((x - (1.0 - (-1.0f64).exp())).abs() < 1e-12) && same == 0.0,
                format!("{x} {same}"),
            ))
        })(),
    );
    s.record(
        "invariance_toy_pair",
        (|| {
            let r = invariance_principle_check(&a0, &a1, 1.0, &[0.5, -1.0])?;
            Ok((r.max_discrepancy == 0, format!("{r:?}")))
        })(),
    );
    s.record(
        "l1_bound_toy_pair",
        (|| {
            let (lhs, rhs) = l1_bound_check(&a0, &a1, 1.0)?;
            let (z0, z1) = l1_bound_check(&a0, &a0, 1.0)?;
            let e = 1.0 - (-1.0f64).exp();
            Ok((
                (lhs - e).abs() < 1e-12 && (rhs - e).abs() < 1e-12 && z0 == 0.0 && z1.abs() < 1e-15,
                format!("{lhs} {rhs}"),
            ))
        })(),
    );
    s.record(
        "bridge_pinning",
        (|| {
            let b = sample_bridge(master_seed, 3, 2, 1.5, 64, &[0.1, -0.2], &[0.7, 0.4])?;
            let ok =
                b.node(0) == [0.1, -0.2] && (b.node(64)[0] - 0.7).abs() < 1e-14 && (b.node(64)[1] - 0.4).abs() < 1e-14;
            Ok((ok, format!("{:?} {:?}", b.node(0), b.node(64))))
        })(),
    );
    s.record(
        "bridge_midpoint_variance",
        (|| {
            let n = 100_000;
            let mids = ssf_core::par::map_range(n, |k| {
                sample_bridge(master_seed, k as u64, 1, 1.0, 2, &[0.0], &[0.0]).map(|b| b.node(1)[0])
            });
            let mids: Vec<f64> = mids.into_iter().collect::<Result<_>>()?;
            let var = ssf_core::par::pairwise_sum(&mids.iter().map(|x| x * x).collect::<Vec<_>>()) / n as f64;
            let m4 = ssf_core::par::pairwise_sum(&mids.iter().map(|x| x.powi(4)).collect::<Vec<_>>()) / n as f64;
            let se = ((m4 - var * var) / n as f64).sqrt();
            Ok(((var - 0.25).abs() <= 3.0 * se, format!("{var} +- {se}")))
        })(),
    );
    s.record(
        "bridge_density_midpoint",
        (|| {
            let rho = bridge_density(&[0.0], 1.0, 0.5, &[0.0])?;
            Ok(close(rho, (2.0 / std::f64::consts::PI).sqrt(), 1e-12))
        })(),
    );
    s.record(
        "bridge_density_symmetry",
        (|| {
            let a = bridge_density(&[0.3], 2.0, 1.5, &[-0.4])?;
            let b = bridge_density(&[-0.4], 2.0, 0.5, &[0.3])?;
            Ok(close(a, b, 1e-13))
        })(),
    );
    s.record("mc_zero_perturbation", {
        let bg = PotentialSpec::zero(1);
        let sq = PotentialSpec::square_bump(0.0, 0.5, vec![0.0]);
        let e = laplace_infinite_volume_mc(1.0, &bg, &sq, &EnsembleParams::new(200, 16, master_seed));
        match e {
            Ok(e) => Ok((
                e.mean == 0.0 && e.std_error == 0.0,
                format!("{} {}", e.mean, e.std_error),
            )),
            Err(ssf_core::Error::EmptySamplingBox) => Ok((true, "empty support".into())),
            Err(other) => Err(other),
        }
    });
    let toy = CouplingProblem::from_dense(&diag(&[0.0, 1.0]), vec![1.0, 0.0]);
    s.record(
        "bs_toy_window",
        (|| {
            let p = toy.clone()?;
            let w = SpectralWindow::interval(0.2, 0.7)?;
            let r = bs_rhs(&p, &w, &integ)?;
            let step = StepFunction::from_spectra(&[0.0, 1.0], &[1.0, 1.0]);
            let l = bs_lhs(&step, &w)?;
            Ok((
                (r.value - 0.5).abs() < 1e-10 && (l - 0.5).abs() < 1e-12,
                format!("rhs {} lhs {l}", r.value),
            ))
        })(),
    );
    s.record(
        "bs_toy_exponential",
        (|| {
            let p = toy.clone()?;
            let v = bs_weighted(&p, &TestFunction::Exponential { rate: 1.0 }, &integ)?;
            Ok(close(v, 1.0 - (-1.0f64).exp(), 1e-10))
        })(),
    );
    s.record(
        "bs_zero_perturbation",
        (|| {
            let h0 = diag(&[0.0, 0.5, 1.0]);
            let p = CouplingProblem::from_dense(&h0, vec![0.0; 3])?;
            let r = bs_rhs(&p, &SpectralWindow::interval(-1.0, 3.0)?, &integ)?;
            let w = bs_weighted(&p, &TestFunction::Hat { lo: 0.0, hi: 2.0 }, &integ)?;
            Ok((r.value == 0.0 && w == 0.0, format!("{} {w}", r.value)))
        })(),
    );
    s.record(
        "lattice_multiplicity_50",
        Ok({
            let m = lattice_multiplicity(2, 50);
            (m == 3, m.to_string())
        }),
    );
    s.record(
        "lattice_multiplicity_25",
        Ok({
            let brute = (1..=5u64)
                .flat_map(|a| (1..=5u64).map(move |b| (a, b)))
                .filter(|(a, b)| a * a + b * b == 25)
                .count();
            let m = lattice_multiplicity(2, 25);
            (m == brute, format!("{m} vs {brute}"))
        }),
    );

    // randomized finite-matrix suites
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    s.record(
        "random_counting_oracle",
        (|| {
            let mut mismatches = 0;
            for _ in 0..20 {
                let n = rng.random_range(5..40);
                let a = random_symmetric(&mut rng, n);
                let m = ssf_core::operator::SparseSymmetric::from_dense(&a)?;
                let spec = dense::eigenvalues(&a)?;
                for _ in 0..10 {
                    let e = rng.random_range(-2.0..2.0);
                    if count_below(&m, e)? != dense::count_leq(&spec, e) {
                        mismatches += 1;
                    }
                }
            }
            Ok((mismatches == 0, format!("{mismatches} mismatches")))
        })(),
    );
    s.record(
        "random_invariance",
        (|| {
            let mut worst = 0;
            for _ in 0..10 {
                let a0 = random_symmetric(&mut rng, 8);
                let a1 = random_symmetric(&mut rng, 8);
                let energies: Vec<f64> = (0..10).map(|_| rng.random_range(-2.0..2.0)).collect();
                worst = worst.max(invariance_principle_check(&a0, &a1, 0.7, &energies)?.max_discrepancy);
            }
            Ok((worst == 0, format!("max discrepancy {worst}")))
        })(),
    );
    s.record(
        "random_l1_bound",
        (|| {
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..10 {
                let a0 = random_symmetric(&mut rng, 8);
                let a1 = random_symmetric(&mut rng, 8);
                let (l, r) = l1_bound_check(&a0, &a1, 1.3)?;
                worst = worst.max(l - r);
            }
            Ok((worst <= 1e-10, format!("max lhs - rhs {worst:e}")))
        })(),
    );
    s.record(
        "random_birman_solomyak",
        (|| {
            let mut worst = 0.0f64;
            for _ in 0..10 {
                let h0 = random_symmetric(&mut rng, 12);
                let v = random_psd_diagonal(&mut rng, 12);
                let h1 = &h0 + diag(&v);
                let lo = rng.random_range(-1.5..0.5);
                let w = SpectralWindow::interval(lo, lo + rng.random_range(0.2..1.5))?;
                let p = CouplingProblem::from_dense(&h0, v)?;
                let r = bs_rhs(&p, &w, &integ)?;
                let step = StepFunction::from_spectra(&dense::eigenvalues(&h0)?, &dense::eigenvalues(&h1)?);
                worst = worst.max((bs_lhs(&step, &r.window)? - r.value).abs());
            }
            Ok((worst < 1e-6, format!("max |lhs - rhs| {worst:e}")))
        })(),
    );

    let failures = s.failures;
    let checks = s.table.rows.len();
    RunOutputs {
        artifacts: vec![Artifact::new("selftest", s.table)],
        notes: vec![format!("{} of {checks} checks passed", checks - failures)],
        grid_spacings: Vec::new(),
        failures,
    }
}
