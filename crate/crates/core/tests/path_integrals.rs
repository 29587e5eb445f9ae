use ssf_core::counting::laplace_transform_spectral;
use ssf_core::operator::{assemble, BoxGrid};
use ssf_core::pathint::{
    bridge_density, laplace_finite_volume_mc, laplace_infinite_volume_coupling_mc, laplace_infinite_volume_mc,
    sample_bridge, EnsembleParams,
};
use ssf_core::potentials::PotentialSpec;
use ssf_core::quadrature::CouplingQuadrature;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

fn bump() -> PotentialSpec {
    PotentialSpec::square_bump(10.0, 0.5, vec![0.0])
}

#[test]
fn bridge_quarter_point_matches_normal_marginal() {
    // b(s) for a bridge 0 -> 0 over [0, t] is N(0, s(t - s)/t)
    let (t, n) = (2.0, 40_000);
    let samples: Vec<f64> = (0..n)
        .map(|k| sample_bridge(4, k, 1, t, 4, &[0.0], &[0.0]).unwrap().node(1)[0])
        .collect();
    let normal = Normal::new(0.0, (0.5f64 * 1.5 / t).sqrt()).unwrap();
    let edges: Vec<f64> = (1..20).map(|i| normal.inverse_cdf(i as f64 / 20.0)).collect();
    let mut counts = [0usize; 20];
    for x in samples {
        counts[edges.partition_point(|&e| e < x)] += 1;
    }
    let expected = n as f64 / 20.0;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new(19.0).unwrap().cdf(chi2);
    assert!(p > 1e-3, "chi2 {chi2}, p {p}");
}

#[test]
fn density_agrees_with_gaussian_form() {
    let normal = Normal::new(0.0, (0.5f64 * 1.5 / 2.0).sqrt()).unwrap();
    for y in [-1.0, -0.2, 0.0, 0.7] {
        let rho = bridge_density(&[0.0], 2.0, 0.5, &[y]).unwrap();
        assert!((rho - statrs::distribution::Continuous::pdf(&normal, y)).abs() < 1e-12);
    }
}

#[test]
fn finite_volume_estimates_grow_with_the_box() {
    let z = PotentialSpec::zero(1);
    let p = EnsembleParams::new(20_000, 128, 8);
    let est: Vec<_> = [2.0, 4.0, 8.0]
        .iter()
        .map(|&l| laplace_finite_volume_mc(l, 1.0, &z, &bump(), &p).unwrap())
        .collect();
    for w in est.windows(2) {
        assert!(
            w[0].mean <= w[1].mean + 3.0 * (w[0].std_error + w[1].std_error),
            "{} {}",
            w[0].mean,
            w[1].mean
        );
    }
}

#[test]
fn infinite_volume_estimators_agree_with_large_box_spectra() {
    let z = PotentialSpec::zero(1);
    let p = EnsembleParams::new(20_000, 128, 21);
    let inf = laplace_infinite_volume_mc(1.0, &z, &bump(), &p).unwrap();
    let coupled =
        laplace_infinite_volume_coupling_mc(1.0, &z, &bump(), &p, &CouplingQuadrature::gauss_legendre(8).unwrap())
            .unwrap();
    let grid = BoxGrid::new(1, 16.0, 1.0 / 64.0).unwrap();
    let spectral = laplace_transform_spectral(
        &assemble(&grid, &z, &bump(), 0.0).unwrap().matrix,
        &assemble(&grid, &z, &bump(), 1.0).unwrap().matrix,
        1.0,
    )
    .unwrap();
    for est in [&inf, &coupled] {
        let band = (4.0 * est.std_error).max(0.05 * spectral);
        assert!((est.mean - spectral).abs() < band, "{} vs {spectral}", est.mean);
    }
    assert!(inf.tail_bound < 1e-3 && coupled.tail_bound < 1e-3);
}
