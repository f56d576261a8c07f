//! Sorted spectra of Wigner samples and reproducible batches of them.

pub mod eigen;
mod io;

use rayon::prelude::*;

use crate::ensembles::{sample_stream, sample_wigner, EnsembleSpec, WignerSample};
use crate::error::{Error, Result};

pub use io::{read_batch, write_batch, write_pooled_csv, BATCH_FORMAT_VERSION, BATCH_MAGIC};

/// Eigenvalues of one sample, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
}

impl Spectrum {
    /// Wraps already-sorted eigenvalues; sorts if needed.
    pub fn new(mut eigenvalues: Vec<f64>) -> Self {
        if !eigenvalues.windows(2).all(|w| w[0] <= w[1]) {
            eigenvalues.sort_by(f64::total_cmp);
        }
        Self { eigenvalues }
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Number of eigenvalues in the half-open interval `[lo, hi)`.
    pub fn count_in(&self, lo: f64, hi: f64) -> usize {
        let a = self.eigenvalues.partition_point(|&x| x < lo);
        let b = self.eigenvalues.partition_point(|&x| x < hi);
        b.saturating_sub(a)
    }

    /// Number of eigenvalues in the closed interval `[lo, hi]`.
    pub fn count_in_closed(&self, lo: f64, hi: f64) -> usize {
        let a = self.eigenvalues.partition_point(|&x| x < lo);
        let b = self.eigenvalues.partition_point(|&x| x <= hi);
        b.saturating_sub(a)
    }
}

/// All eigenvalues of a Hermitian sample, ascending.
pub fn eigenvalues(w: &WignerSample) -> Result<Spectrum> {
    let mut dense = w.to_dense();
    let ev = eigen::hermitian_eigenvalues(&mut dense, w.n)?;
    Ok(Spectrum { eigenvalues: ev })
}

/// `M` spectra drawn from one ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumBatch {
    pub spec: EnsembleSpec,
    pub spectra: Vec<Spectrum>,
}

impl SpectrumBatch {
    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn len(&self) -> usize {
        self.spectra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectra.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.spec.seed
    }

    /// Every eigenvalue of every sample, sorted.
    pub fn pooled(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self
            .spectra
            .iter()
            .flat_map(|s| s.eigenvalues.iter().copied())
            .collect();
        all.sort_by(f64::total_cmp);
        all
    }

    /// Same batch with every eigenvalue shifted by `delta`.
    pub fn shifted(&self, delta: f64) -> Self {
        Self {
            spec: self.spec.clone(),
            spectra: self
                .spectra
                .iter()
                .map(|s| Spectrum {
                    eigenvalues: s.eigenvalues.iter().map(|x| x + delta).collect(),
                })
                .collect(),
        }
    }
}

/// Draws and diagonalizes `m` samples; sample `i` uses stream `i` of
/// `spec.seed`, so the batch does not depend on the thread schedule.
pub fn batch_sample(spec: &EnsembleSpec, m: usize) -> Result<SpectrumBatch> {
    if m == 0 {
        return Err(Error::InvalidArgument("batch needs at least one sample".into()));
    }
    let spectra = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_stream(spec.seed, i as u64);
            let w = sample_wigner(spec, &mut rng);
            eigenvalues(&w).map_err(|e| Error::Sample {
                sample: i,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectrumBatch {
        spec: spec.clone(),
        spectra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::AtomDistribution;

    #[test]
    fn conservation_identities_on_random_samples() {
        let spec = EnsembleSpec::new(50, AtomDistribution::Gaussian, 21).unwrap();
        for i in 0..10u64 {
            let w = sample_wigner(&spec, &mut sample_stream(21, i));
            let s = eigenvalues(&w).unwrap();
            let tr: f64 = s.eigenvalues.iter().sum();
            let fro: f64 = s.eigenvalues.iter().map(|x| x * x).sum();
            assert!((tr - w.trace()).abs() < 1e-9 * 50.0);
            assert!((fro - w.frobenius_norm_sq()).abs() < 1e-9 * 50.0);
            assert!(s.eigenvalues.windows(2).all(|p| p[0] <= p[1]));
        }
    }

    #[test]
    fn scalar_batch() {
        let spec = EnsembleSpec::new(1, AtomDistribution::Gaussian, 4).unwrap();
        let b = batch_sample(&spec, 1).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.spectra[0].n(), 1);
    }

    #[test]
    fn batches_are_deterministic() {
        let spec = EnsembleSpec::new(20, AtomDistribution::Rademacher, 77).unwrap();
        let a = batch_sample(&spec, 8).unwrap();
        let b = batch_sample(&spec, 8).unwrap();
        assert_eq!(a, b);
        // sample i does not depend on the batch size
        let c = batch_sample(&spec, 3).unwrap();
        assert_eq!(&a.spectra[..3], &c.spectra[..]);
    }

    #[test]
    fn empty_batch_rejected() {
        let spec = EnsembleSpec::new(3, AtomDistribution::Gaussian, 1).unwrap();
        assert!(batch_sample(&spec, 0).is_err());
    }

    #[test]
    fn gue_spectrum_is_centered() {
        let spec = EnsembleSpec::new(200, AtomDistribution::Gaussian, 2024).unwrap();
        let b = batch_sample(&spec, 100).unwrap();
        // per-sample means are independent; use their spread for the SE
        let means: Vec<f64> = b
            .spectra
            .iter()
            .map(|s| s.eigenvalues.iter().sum::<f64>() / 200.0)
            .collect();
        let mu = means.iter().sum::<f64>() / 100.0;
        let sd = (means.iter().map(|m| (m - mu).powi(2)).sum::<f64>() / 99.0).sqrt();
        assert!(mu.abs() < 3.0 * sd / 10.0, "mean {mu}, sd {sd}");
    }

    #[test]
    fn gue_spectra_stay_near_support() {
        let spec = EnsembleSpec::new(400, AtomDistribution::Gaussian, 5).unwrap();
        let b = batch_sample(&spec, 10).unwrap();
        let inside = b
            .spectra
            .iter()
            .filter(|s| s.eigenvalues[0] >= -2.5 && s.eigenvalues[399] <= 2.5)
            .count();
        assert!(inside as f64 >= 0.99 * 10.0);
    }

    #[test]
    fn interval_counts() {
        let s = Spectrum::new(vec![-1.0, 0.0, 0.5, 0.5, 2.0]);
        assert_eq!(s.count_in(0.0, 0.5), 1);
        assert_eq!(s.count_in(0.0, 0.6), 3);
        assert_eq!(s.count_in_closed(-1.0, 0.5), 4);
    }
}
