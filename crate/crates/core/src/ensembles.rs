//! Atom distributions and Wigner Hermitian matrix sampling.
//!
//! Every atom distribution has mean zero and unit variance, and carries its
//! moments in closed form up to order eight. Complex off-diagonal entries are
//! built from two independent real draws, so moment matching between
//! ensembles reduces to equality of real moments.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Highest moment order kept in closed form.
pub const MAX_MOMENT_ORDER: usize = 8;

const NORMALIZATION_TOL: f64 = 1e-12;

/// `E g^j` for a standard normal `g`, `j = 0..=8`.
const GAUSSIAN_MOMENTS: [f64; 9] = [1.0, 0.0, 1.0, 0.0, 3.0, 0.0, 15.0, 0.0, 105.0];

/// Law of a single real entry component.
#[derive(Debug, Clone, PartialEq)]
pub enum AtomDistribution {
    /// Standard normal; the complex Wigner ensemble built from it is GUE.
    Gaussian,
    /// Symmetric `±1`.
    Rademacher,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    Uniform,
    /// Discrete law on three atoms. `matched` records the `(m3, m4)` target
    /// when the law was produced by [`three_point_match`].
    ThreePoint {
        atoms: [f64; 3],
        weights: [f64; 3],
        matched: Option<(f64, f64)>,
    },
    /// `e^{-t/2} X + (1 - e^{-t})^{1/2} g` with `X ~ base` and `g` standard
    /// normal, i.e. the base law run for time `t` under Ornstein-Uhlenbeck.
    GaussDivisible {
        base: Box<AtomDistribution>,
        ou_time: f64,
    },
}

impl AtomDistribution {
    /// Validated three-atom law: weights nonnegative summing to one, mean
    /// zero and variance one, all to `1e-12`.
    pub fn three_point(atoms: [f64; 3], weights: [f64; 3]) -> Result<Self> {
        if weights.iter().any(|&w| !(w >= 0.0)) || atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidAtom(format!(
                "three-point weights must be nonnegative and atoms finite: {atoms:?} {weights:?}"
            )));
        }
        let total: f64 = weights.iter().sum();
        let mean: f64 = atoms.iter().zip(&weights).map(|(a, w)| a * w).sum();
        let var: f64 = atoms.iter().zip(&weights).map(|(a, w)| a * a * w).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidAtom(format!("weights sum to {total}, not 1")));
        }
        if mean.abs() > NORMALIZATION_TOL || (var - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidAtom(format!(
                "three-point law has mean {mean} and variance {var}; need 0 and 1"
            )));
        }
        Ok(AtomDistribution::ThreePoint {
            atoms,
            weights,
            matched: None,
        })
    }

    /// Exact `E X^j` for `j <= 8`. `j = 0` returns 1.
    pub fn moment(&self, j: usize) -> Result<f64> {
        if j > MAX_MOMENT_ORDER {
            return Err(Error::UnsupportedMomentOrder(j));
        }
        Ok(match self {
            AtomDistribution::Gaussian => GAUSSIAN_MOMENTS[j],
            AtomDistribution::Rademacher => {
                if j.is_multiple_of(2) {
                    1.0
                } else {
                    0.0
                }
            }
            AtomDistribution::Uniform => {
                if j.is_multiple_of(2) {
                    3f64.powi(j as i32 / 2) / (j as f64 + 1.0)
                } else {
                    0.0
                }
            }
            AtomDistribution::ThreePoint { atoms, weights, .. } => atoms
                .iter()
                .zip(weights)
                .map(|(a, w)| w * a.powi(j as i32))
                .sum(),
            AtomDistribution::GaussDivisible { base, ou_time } => {
                let (a, b) = ou_coefficients(*ou_time);
                let mut total = 0.0;
                for i in 0..=j {
                    let g = GAUSSIAN_MOMENTS[j - i];
                    if g == 0.0 {
                        continue;
                    }
                    total += binomial(j, i) * a.powi(i as i32) * b.powi((j - i) as i32)
                        * base.moment(i)?
                        * g;
                }
                total
            }
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            AtomDistribution::Gaussian => rng.sample(StandardNormal),
            AtomDistribution::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            AtomDistribution::Uniform => {
                let s = 3f64.sqrt();
                rng.gen_range(-s..s)
            }
            AtomDistribution::ThreePoint { atoms, weights, .. } => {
                let u: f64 = rng.gen();
                if u < weights[0] {
                    atoms[0]
                } else if u < weights[0] + weights[1] {
                    atoms[1]
                } else {
                    atoms[2]
                }
            }
            AtomDistribution::GaussDivisible { base, ou_time } => {
                let (a, b) = ou_coefficients(*ou_time);
                let x = base.sample(rng);
                let g: f64 = rng.sample(StandardNormal);
                a * x + b * g
            }
        }
    }
}

/// `(e^{-t/2}, (1 - e^{-t})^{1/2})`.
fn ou_coefficients(t: f64) -> (f64, f64) {
    ((-0.5 * t).exp(), (-(-t).exp_m1()).sqrt())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl fmt::Display for AtomDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtomDistribution::Gaussian => write!(f, "gue"),
            AtomDistribution::Rademacher => write!(f, "bernoulli"),
            AtomDistribution::Uniform => write!(f, "uniform"),
            AtomDistribution::ThreePoint {
                matched: Some((m3, m4)),
                ..
            } => write!(f, "threepoint:m3={m3},m4={m4}"),
            AtomDistribution::ThreePoint { atoms, weights, .. } => write!(
                f,
                "threepoint:x={};{};{},p={};{};{}",
                atoms[0], atoms[1], atoms[2], weights[0], weights[1], weights[2]
            ),
            AtomDistribution::GaussDivisible { base, ou_time } => {
                write!(f, "gaussdiv:base={base},t={ou_time}")
            }
        }
    }
}

impl FromStr for AtomDistribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownDescriptor(s.to_string());
        let s = s.trim();
        match s {
            "gue" | "gaussian" => return Ok(AtomDistribution::Gaussian),
            "bernoulli" | "rademacher" => return Ok(AtomDistribution::Rademacher),
            "uniform" => return Ok(AtomDistribution::Uniform),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("gaussdiv:") {
            let rest = rest.strip_prefix("base=").ok_or_else(unknown)?;
            let cut = rest.rfind(",t=").ok_or_else(unknown)?;
            let base: AtomDistribution = rest[..cut].parse()?;
            let t: f64 = rest[cut + 3..].parse().map_err(|_| unknown())?;
            return gauss_divisible(&base, t);
        }
        if let Some(rest) = s.strip_prefix("threepoint:") {
            let mut fields = std::collections::HashMap::new();
            for part in rest.split(',') {
                let (k, v) = part.split_once('=').ok_or_else(unknown)?;
                fields.insert(k.trim(), v.trim());
            }
            let num = |v: &str| v.parse::<f64>().map_err(|_| unknown());
            let triple = |v: &str| -> Result<[f64; 3]> {
                let parts: Vec<f64> = v.split(';').map(num).collect::<Result<_>>()?;
                parts.try_into().map_err(|_| unknown())
            };
            return match (fields.get("m3"), fields.get("m4"), fields.get("x"), fields.get("p")) {
                (Some(m3), Some(m4), None, None) if fields.len() == 2 => {
                    three_point_match(num(m3)?, num(m4)?)
                }
                (None, None, Some(x), Some(p)) if fields.len() == 2 => {
                    AtomDistribution::three_point(triple(x)?, triple(p)?)
                }
                _ => Err(unknown()),
            };
        }
        Err(unknown())
    }
}

/// Ornstein-Uhlenbeck evolution of `base` for time `t > 0`.
///
/// Moments one and two are those of the base law; moment three is
/// `e^{-3t/2} m3` and moment four moves by at most `(1 - e^{-2t})(m4 + 3)`.
pub fn gauss_divisible(base: &AtomDistribution, t: f64) -> Result<AtomDistribution> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidAtom(format!(
            "Ornstein-Uhlenbeck time must be positive, got {t}"
        )));
    }
    Ok(AtomDistribution::GaussDivisible {
        base: Box::new(base.clone()),
        ou_time: t,
    })
}

/// A bounded law with mean 0, variance 1 and the prescribed third and
/// fourth moments.
///
/// With `v = m4 - m3^2`, the law `w_a δ_a + (1 - 1/v) δ_0 + w_b δ_b` where
/// `a < 0 < b` are the roots of `x^2 - m3 x - v` and
/// `w_a = 1/(|a|(b - a))`, `w_b = 1/(b(b - a))` hits all four moments.
/// It needs `v >= 1`; at `v = 1` the middle weight vanishes and the law is
/// two-point.
pub fn three_point_match(m3: f64, m4: f64) -> Result<AtomDistribution> {
    let v = m4 - m3 * m3;
    if !m3.is_finite() || !m4.is_finite() || v < 1.0 - NORMALIZATION_TOL {
        return Err(Error::InfeasibleMoments { m3, m4 });
    }
    let v = v.max(1.0);
    if m3 == 0.0 && v == 1.0 {
        return Ok(AtomDistribution::Rademacher);
    }
    let disc = (m3 * m3 + 4.0 * v).sqrt();
    // stable root pair: one root by formula, the other from a*b = -v
    let (a, b) = if m3 >= 0.0 {
        let b = 0.5 * (m3 + disc);
        (-v / b, b)
    } else {
        let a = 0.5 * (m3 - disc);
        (a, -v / a)
    };
    let span = b - a;
    let wa = 1.0 / (-a * span);
    let wb = 1.0 / (b * span);
    let w0 = (1.0 - 1.0 / v).max(0.0);
    Ok(AtomDistribution::ThreePoint {
        atoms: [a, 0.0, b],
        weights: [wa, w0, wb],
        matched: Some((m3, m4)),
    })
}

const ROUNDING_ULPS: f64 = 8.0;

/// Per-order tolerances `δ_1..δ_4` for approximate moment matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentMatchTolerance(pub [f64; 4]);

impl MomentMatchTolerance {
    /// Default exponent offset `c` in `δ_3 = δ_4 = n^{-1/2 - c}`.
    pub const DEFAULT_C: f64 = 0.25;

    pub fn exact() -> Self {
        MomentMatchTolerance([0.0; 4])
    }

    /// `(0, 0, n^{-1/2-c}, n^{-1/2-c})`.
    pub fn delta4(n: usize, c: f64) -> Self {
        let d = (n as f64).powf(-0.5 - c);
        MomentMatchTolerance([0.0, 0.0, d, d])
    }

    /// `delta4` with `c = 1/4`.
    pub fn canonical(n: usize) -> Self {
        Self::delta4(n, Self::DEFAULT_C)
    }
}

/// True iff `|E d1^j - E d2^j| <= δ_j` for `1 <= j <= k`, up to a few ulps
/// of rounding in the moments themselves.
///
/// # Panics
///
/// If `k > 4`.
pub fn match_to_order(
    d1: &AtomDistribution,
    d2: &AtomDistribution,
    tol: &MomentMatchTolerance,
    k: usize,
) -> bool {
    assert!(k <= 4, "moment matching is defined up to order 4");
    (1..=k).all(|j| {
        let a = d1.moment(j).expect("order <= 4");
        let b = d2.moment(j).expect("order <= 4");
        let slack = ROUNDING_ULPS * f64::EPSILON * a.abs().max(b.abs()).max(1.0);
        (a - b).abs() <= tol.0[j - 1] + slack
    })
}

/// Size, entry laws and seed of a Wigner ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec {
    pub n: usize,
    pub offdiag_atom: AtomDistribution,
    pub diag_atom: AtomDistribution,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(n: usize, atom: AtomDistribution, seed: u64) -> Result<Self> {
        Self::with_diagonal(n, atom.clone(), atom, seed)
    }

    pub fn with_diagonal(
        n: usize,
        offdiag_atom: AtomDistribution,
        diag_atom: AtomDistribution,
        seed: u64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("matrix size n must be >= 1".into()));
        }
        Ok(Self {
            n,
            offdiag_atom,
            diag_atom,
            seed,
        })
    }

    /// Parses `"<atom>"` or `"<atom>|diag=<atom>"`.
    pub fn from_descriptor(descriptor: &str, n: usize, seed: u64) -> Result<Self> {
        match descriptor.split_once("|diag=") {
            Some((off, diag)) => Self::with_diagonal(n, off.parse()?, diag.parse()?, seed),
            None => Self::new(n, descriptor.parse()?, seed),
        }
    }

    /// Canonical descriptor string, inverse of [`EnsembleSpec::from_descriptor`].
    pub fn descriptor(&self) -> String {
        if self.offdiag_atom == self.diag_atom {
            self.offdiag_atom.to_string()
        } else {
            format!("{}|diag={}", self.offdiag_atom, self.diag_atom)
        }
    }
}

/// Independent random stream for sample `index` under `seed`.
///
/// ChaCha's 64-bit stream id makes sample `m` of a batch a pure function of
/// `(seed, m)`, whatever order the samples are drawn in.
pub fn sample_stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Hermitian matrix stored as its lower triangle, row-major:
/// `entry(i, j)` for `j <= i` lives at `i (i + 1) / 2 + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct WignerSample {
    pub n: usize,
    pub lower: Vec<Complex64>,
}

impl WignerSample {
    pub fn from_lower(n: usize, lower: Vec<Complex64>) -> Result<Self> {
        if lower.len() != n * (n + 1) / 2 {
            return Err(Error::InvalidArgument(format!(
                "lower triangle of a {n}x{n} matrix needs {} entries, got {}",
                n * (n + 1) / 2,
                lower.len()
            )));
        }
        let mut lower = lower;
        for i in 0..n {
            lower[i * (i + 1) / 2 + i].im = 0.0;
        }
        Ok(Self { n, lower })
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        if j <= i {
            self.lower[i * (i + 1) / 2 + j]
        } else {
            self.lower[j * (j + 1) / 2 + i].conj()
        }
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let n = self.n;
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..=i {
                let z = self.lower[i * (i + 1) / 2 + j];
                out[i * n + j] = z;
                out[j * n + i] = z.conj();
            }
        }
        out
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.entry(i, i).re).sum()
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.n {
            for j in 0..=i {
                let z = self.entry(i, j);
                total += if i == j { z.norm_sqr() } else { 2.0 * z.norm_sqr() };
            }
        }
        total
    }
}

/// Draws one Wigner matrix: off-diagonal `(ξ + iτ)/sqrt(2n)`, diagonal
/// `ξ̃/sqrt(n)`, all draws independent.
pub fn sample_wigner<R: Rng + ?Sized>(spec: &EnsembleSpec, rng: &mut R) -> WignerSample {
    let n = spec.n;
    let scale = 1.0 / (n as f64).sqrt();
    let off_scale = scale / 2f64.sqrt();
    let mut lower = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for _ in 0..i {
            let re = spec.offdiag_atom.sample(rng);
            let im = spec.offdiag_atom.sample(rng);
            // stored below the diagonal: the conjugate of the upper entry
            lower.push(Complex64::new(re * off_scale, -im * off_scale));
        }
        lower.push(Complex64::new(spec.diag_atom.sample(rng) * scale, 0.0));
    }
    WignerSample { n, lower }
}
