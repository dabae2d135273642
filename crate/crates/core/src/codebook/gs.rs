//! Relaxed Gerchberg–Saxton codeword design under the constant-modulus
//! constraint.
//!
//! Plain GS pulls the realized pattern towards the exact intended amplitudes.
//! The relaxed variant only re-targets grid points whose realized amplitude
//! fails to classify them: covered points below `P(1-Δ)` are lifted to
//! `P(1-Δ)`, uncovered points above `PΔ` are pushed down to `PΔ`, and every
//! other point keeps whatever the current codeword produces.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{pseudo_inverse, PINV_RCOND};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GsConfig {
    /// Dividing factor `Δ ∈ [0, 0.5]`.
    pub delta: f64,
    pub k_iter: usize,
    /// Intended in-coverage amplitude `P`; `None` spreads unit energy evenly
    /// over the covered points, `P = 1/√|mask|`.
    #[serde(default)]
    pub target_amplitude: Option<f64>,
    pub seed: u64,
}

impl Default for GsConfig {
    fn default() -> Self {
        Self {
            delta: 0.3,
            k_iter: 100,
            target_amplitude: None,
            seed: 0,
        }
    }
}

impl GsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.delta) {
            return Err(Error::InvalidArgument(format!(
                "delta must lie in [0, 0.5], got {}",
                self.delta
            )));
        }
        if self.k_iter == 0 {
            return Err(Error::InvalidArgument("k_iter must be at least 1".into()));
        }
        if let Some(p) = self.target_amplitude {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "target amplitude must be positive, got {p}"
                )));
            }
        }
        Ok(())
    }

    pub fn amplitude_for(&self, covered: usize) -> f64 {
        self.target_amplitude
            .unwrap_or_else(|| 1.0 / (covered as f64).sqrt())
    }
}

/// Sampling matrix `A` (elements × grid points) together with the
/// pseudoinverse of its forward map `s = Aᴴ v`.
#[derive(Debug, Clone)]
pub struct SamplingMatrix {
    pub a: DMatrix<C64>,
    /// `(Aᴴ)⁺`, elements × points.
    pub back: DMatrix<C64>,
    pub rank: usize,
}

impl SamplingMatrix {
    pub fn new(a: DMatrix<C64>) -> Result<Self> {
        let (back, rank) = pseudo_inverse(&a.adjoint(), PINV_RCOND)?;
        Ok(Self { a, back, rank })
    }

    pub fn from_columns(columns: &[DVector<C64>]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidArgument("sampling matrix needs at least one column".into()));
        }
        Self::new(DMatrix::from_columns(columns))
    }

    pub fn n_elements(&self) -> usize {
        self.a.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.a.ncols()
    }

    /// Realized pattern `Aᴴ v`.
    pub fn pattern(&self, v: &DVector<C64>) -> DVector<C64> {
        self.a.adjoint() * v
    }
}

#[derive(Debug, Clone)]
pub struct GsRun {
    pub codeword: DVector<C64>,
    /// `‖s_(k) - s_(k-1)‖₂` for `k = 1..K_iter`.
    pub trace: Vec<f64>,
    /// `s_(0), s_(1), …, s_(K_iter)`; only kept when requested.
    pub patterns: Vec<DVector<C64>>,
}

/// Constant-modulus projection `(1/√N) e^{j∠x}`.
pub fn phase_only(x: &DVector<C64>) -> DVector<C64> {
    let scale = 1.0 / (x.len() as f64).sqrt();
    x.map(|z| C64::from_polar(scale, z.arg()))
}

/// Constant-modulus beam with a perfectly flat pattern over one RIS axis
/// grid, `f_k = (2k + 1 - N)/N` on centered indices.
///
/// On that grid the pattern is a DFT of `v_i e^{jπ i (1-N)/N}`, so `v` undoes
/// the modulation of a Zadoff-Chu chirp (`i²` for even `N`, `i(i+1)` for odd).
pub fn flat_codeword(n: usize) -> DVector<C64> {
    let scale = 1.0 / (n as f64).sqrt();
    let nf = n as f64;
    DVector::from_iterator(
        n,
        (0..n).map(|i| {
            let q = if n.is_multiple_of(2) { i * i } else { i * (i + 1) };
            let chirp = std::f64::consts::PI * (q % (2 * n)) as f64 / nf;
            let demod = std::f64::consts::PI * i as f64 * (nf - 1.0) / nf;
            C64::from_polar(scale, chirp + demod)
        }),
    )
}

/// Runs the relaxed GS iteration for one coverage mask.
///
/// `allow_full` admits a mask that covers every point (used for the flat
/// factor of a Kronecker design); an empty mask is always rejected.
pub fn relaxed_gs<R: Rng + ?Sized>(
    sampling: &SamplingMatrix,
    mask: &[bool],
    cfg: &GsConfig,
    rng: &mut R,
    allow_full: bool,
    keep_patterns: bool,
) -> Result<GsRun> {
    cfg.validate()?;
    if mask.len() != sampling.n_points() {
        return Err(Error::DimensionMismatch {
            what: "coverage mask",
            expected: sampling.n_points(),
            actual: mask.len(),
        });
    }
    let covered = mask.iter().filter(|&&m| m).count();
    if covered == 0 {
        return Err(Error::DegenerateMask("mask covers no grid point"));
    }
    if covered == mask.len() && !allow_full {
        return Err(Error::DegenerateMask("mask covers every grid point"));
    }

    let p = cfg.amplitude_for(covered);
    let high = p * (1.0 - cfg.delta);
    let low = p * cfg.delta;

    // intended shape with random phases
    let s0 = DVector::from_iterator(
        mask.len(),
        mask.iter().map(|&m| {
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            if m {
                C64::from_polar(p, phase)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
    );
    let mut v = phase_only(&(&sampling.back * &s0));
    let mut previous = s0;
    let mut trace = Vec::with_capacity(cfg.k_iter);
    let mut patterns = Vec::new();
    if keep_patterns {
        patterns.push(previous.clone());
    }

    for _ in 0..cfg.k_iter {
        let s = sampling.pattern(&v);
        trace.push((&s - &previous).norm());
        let relaxed = DVector::from_iterator(
            s.len(),
            s.iter().zip(mask).map(|(&z, &inside)| {
                let amp = z.norm();
                let satisfied = if inside { amp >= high } else { amp <= low };
                if satisfied {
                    z
                } else {
                    C64::from_polar(if inside { high } else { low }, z.arg())
                }
            }),
        );
        v = phase_only(&(&sampling.back * &relaxed));
        if keep_patterns {
            patterns.push(s.clone());
        }
        previous = s;
    }

    Ok(GsRun {
        codeword: v,
        trace,
        patterns,
    })
}

/// `(min over covered |aᴴv|, max over uncovered |aᴴv|)`; an empty class
/// yields `+∞` / `0`.
pub fn pattern_margin(pattern: &DVector<C64>, mask: &[bool]) -> (f64, f64) {
    let mut min_in = f64::INFINITY;
    let mut max_out = 0.0f64;
    for (z, &inside) in pattern.iter().zip(mask) {
        let amp = z.norm();
        if inside {
            min_in = min_in.min(amp);
        } else {
            max_out = max_out.max(amp);
        }
    }
    (min_in, max_out)
}
