//! End-to-end checks through the public API: sampling, persistence, and
//! agreement between the analytic routes.

use sinelab_core::ensembles::sample_stream;
use sinelab_core::fredholm::{discretize, fredholm_det_at, limiting_counting_law, operator_spectrum};
use sinelab_core::gapode::{calibrate_scaling, solve_jmms};
use sinelab_core::spectra::{batch_sample, read_batch, write_batch};
use sinelab_core::stats::{counting_histogram, gap_frequency};
use sinelab_core::{BulkEnergy, EnsembleSpec, Error};

#[test]
fn batch_survives_a_round_trip_bit_for_bit() {
    let spec = EnsembleSpec::from_descriptor("bernoulli", 30, 11).unwrap();
    let batch = batch_sample(&spec, 8).unwrap();
    let mut bytes = Vec::new();
    write_batch(&batch, &mut bytes).unwrap();
    let back = read_batch(bytes.as_slice()).unwrap();
    assert_eq!(back.spec.descriptor(), "bernoulli");
    assert_eq!(back.seed(), 11);
    for (a, b) in batch.spectra.iter().zip(&back.spectra) {
        let same = a.eigenvalues.iter().zip(&b.eigenvalues).all(|(x, y)| x.to_bits() == y.to_bits());
        assert!(same);
    }
}

#[test]
fn truncated_batch_is_a_format_error() {
    let spec = EnsembleSpec::from_descriptor("gue", 10, 1).unwrap();
    let mut bytes = Vec::new();
    write_batch(&batch_sample(&spec, 2).unwrap(), &mut bytes).unwrap();
    bytes.truncate(bytes.len() - 5);
    assert!(matches!(read_batch(bytes.as_slice()), Err(Error::Format { .. }) | Err(Error::Io(_))));
}

#[test]
fn sample_streams_are_independent_of_batch_size() {
    use rand::Rng;
    let a: f64 = sample_stream(5, 3).gen();
    let b: f64 = sample_stream(5, 3).gen();
    let c: f64 = sample_stream(5, 4).gen();
    assert_eq!(a, b);
    assert_ne!(a, c);

    let spec = EnsembleSpec::from_descriptor("gue", 20, 5).unwrap();
    let small = batch_sample(&spec, 3).unwrap();
    let large = batch_sample(&spec, 9).unwrap();
    assert_eq!(small.spectra[..], large.spectra[..3]);
}

#[test]
fn ode_and_fredholm_give_the_same_gap_probability() {
    let mut sol = solve_jmms(2.0, 1e-3, 4000).unwrap();
    let cal = calibrate_scaling(&mut sol, |len| fredholm_det_at(len, 80)).unwrap();
    assert!(cal.best_residual() < 1e-6, "{}", cal.best_residual());
    let s = cal.scale;
    for k in [0.25, 0.75, 1.25, 1.75] {
        let ode = sol.gap_at(k).unwrap();
        let det = fredholm_det_at(s * k, 80).unwrap();
        assert!((ode - det).abs() < 1e-6, "K = {k}: {ode} vs {det}");
    }
}

#[test]
fn gue_counts_are_close_to_the_limiting_law() {
    let spec = EnsembleSpec::from_descriptor("gue", 100, 2024).unwrap();
    let batch = batch_sample(&spec, 800).unwrap();
    let u = BulkEnergy::new(0.0).unwrap();
    let hist = counting_histogram(&batch, u, 1.0).unwrap();
    let law = limiting_counting_law(&operator_spectrum(&discretize(1.0, 60).unwrap()).unwrap());
    assert!(hist.tv_to_law(&law) < 0.06, "{}", hist.tv_to_law(&law));

    let gap = gap_frequency(&batch, u, 1.0).unwrap();
    assert!((gap.value - law.prob(0)).abs() < 4.0 * gap.stderr + 1e-3);
}
