//! Single-path (LoS) BS → RIS → UE channel realizations and noisy received
//! power measurements.
//!
//! Channels use the conjugate steering convention
//! `h_r = √N_r · a(u_r, w_r)ᴴ` and `G = √(N_t N_r) · conj(a_G) · b(φ_t)ᴴ`, so a
//! RIS codeword `v` and BS codeword `w` see the UE through `aᴴ v` and `bᴴ w`,
//! the same quantities codeword design shapes. Path gains are fixed at 1; the
//! training SNR `P_t α² / σ²` carries them instead.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::array_model::{upa_response, ula_response, AngleGrid, ArrayGeometry};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    /// Ground truth drawn uniformly over grid indices; channels sit exactly on
    /// grid points.
    #[default]
    OnGrid,
    /// Angles drawn from `U(-π, π)`; ground truth is the best grid tuple of a
    /// noiseless exhaustive sweep.
    Continuous,
}

/// Direction in which the RIS sees the BS (left factor of `G`).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RisDeparture {
    /// `u = w = 0`; the cascaded RIS direction equals the UE direction.
    #[default]
    Broadside,
    Fixed { u: f64, w: f64 },
    /// Drawn once per realization from `U(-π, π)` angles.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ChannelModel {
    #[serde(default)]
    pub mode: SamplingMode,
    #[serde(default)]
    pub departure: RisDeparture,
}

impl ChannelModel {
    /// Whether the stored grid indices are the exact best tuple by construction.
    pub fn exact_ground_truth(&self) -> bool {
        self.mode == SamplingMode::OnGrid && self.departure == RisDeparture::Broadside
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// RIS → UE channel, stored as a column but applied as a row vector.
    pub h_r: DVector<C64>,
    /// BS → RIS channel, `N_r × N_t`.
    pub g_mat: DMatrix<C64>,
    /// Ground-truth RIS grid index (0-based).
    pub ue_ris_index: usize,
    /// Ground-truth BS grid index (0-based).
    pub bs_index: usize,
    /// UE spatial frequency pair `(u, w)` at the RIS.
    pub ue_freq: (f64, f64),
    /// `sin φ` of the BS departure angle.
    pub bs_sine: f64,
    /// `(u, w)` of the BS as seen from the RIS.
    pub departure_freq: (f64, f64),
}

impl ChannelRealization {
    /// Builds the channel for explicit spatial frequencies; the ground-truth
    /// indices are stored as given.
    #[allow(clippy::too_many_arguments)]
    pub fn from_frequencies(
        geometry: &ArrayGeometry,
        ue_freq: (f64, f64),
        bs_sine: f64,
        departure_freq: (f64, f64),
        ue_ris_index: usize,
        bs_index: usize,
    ) -> Self {
        let (n1, n2, nt) = (geometry.n_ris_rows, geometry.n_ris_cols, geometry.n_bs);
        let nr = n1 * n2;
        let d = geometry.spacing_over_wavelength;
        let a_ue = upa_response(n1, n2, ue_freq.0, ue_freq.1, d);
        let a_dep = upa_response(n1, n2, departure_freq.0, departure_freq.1, d);
        let b = ula_response(nt, bs_sine, d);
        let h_r = a_ue.map(|x| x.conj() * (nr as f64).sqrt());
        let g_mat = a_dep.map(|x| x.conj()) * b.adjoint() * C64::from((nt as f64 * nr as f64).sqrt());
        Self {
            h_r,
            g_mat,
            ue_ris_index,
            bs_index,
            ue_freq,
            bs_sine,
            departure_freq,
        }
    }

    pub fn n_ris(&self) -> usize {
        self.h_r.len()
    }

    pub fn n_bs(&self) -> usize {
        self.g_mat.ncols()
    }

    /// Scales every entry of both hops (path gain / distance effects).
    pub fn with_path_gains(mut self, alpha_r: f64, alpha_g: f64) -> Self {
        self.h_r *= C64::from(alpha_r);
        self.g_mat *= C64::from(alpha_g);
        self
    }

    /// `G w`, the RIS-side field of a BS codeword; reusable across RIS codewords.
    pub fn bs_field(&self, w: &DVector<C64>) -> Result<DVector<C64>> {
        check_len("BS codeword", self.n_bs(), w.len())?;
        Ok(&self.g_mat * w)
    }

    /// `h_r diag(v) x` for a precomputed `x = G w`.
    pub fn gain_with_field(&self, v: &DVector<C64>, field: &DVector<C64>) -> Result<C64> {
        check_len("RIS codeword", self.n_ris(), v.len())?;
        check_len("BS field", self.n_ris(), field.len())?;
        Ok(self
            .h_r
            .iter()
            .zip(v.iter())
            .zip(field.iter())
            .map(|((h, v), x)| h * v * x)
            .sum())
    }
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}

fn check_consistent(geometry: &ArrayGeometry, grid: &AngleGrid) -> Result<()> {
    check_len("BS grid", geometry.n_bs, grid.n_bs())?;
    check_len("RIS grid rows", geometry.n_ris_rows, grid.n_ris_rows)?;
    check_len("RIS grid cols", geometry.n_ris_cols, grid.n_ris_cols)?;
    check_len("RIS grid", geometry.n_ris(), grid.n_ris())
}

fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(-PI..PI)
}

/// Draws one realization.
pub fn sample_channel<R: Rng + ?Sized>(
    geometry: &ArrayGeometry,
    grid: &AngleGrid,
    rng: &mut R,
    model: &ChannelModel,
) -> Result<ChannelRealization> {
    geometry.validate()?;
    check_consistent(geometry, grid)?;
    let departure_freq = match model.departure {
        RisDeparture::Broadside => (0.0, 0.0),
        RisDeparture::Fixed { u, w } => (u, w),
        RisDeparture::Random => {
            let (phi, theta) = (uniform_angle(rng), uniform_angle(rng));
            (phi.sin() * theta.sin(), theta.cos())
        }
    };
    let mut ch = match model.mode {
        SamplingMode::OnGrid => {
            let bs_index = rng.random_range(0..grid.n_bs());
            let ue_ris_index = rng.random_range(0..grid.n_ris());
            ChannelRealization::from_frequencies(
                geometry,
                (grid.ris_u[ue_ris_index], grid.ris_w[ue_ris_index]),
                grid.bs_sines[bs_index],
                departure_freq,
                ue_ris_index,
                bs_index,
            )
        }
        SamplingMode::Continuous => {
            let phi_t = uniform_angle(rng);
            let (phi_r, theta_r) = (uniform_angle(rng), uniform_angle(rng));
            ChannelRealization::from_frequencies(
                geometry,
                (phi_r.sin() * theta_r.sin(), theta_r.cos()),
                phi_t.sin(),
                departure_freq,
                0,
                0,
            )
        }
    };
    if !model.exact_ground_truth() {
        let (bs, ris) = best_grid_tuple(&ch, geometry, grid)?;
        ch.bs_index = bs;
        ch.ue_ris_index = ris;
    }
    Ok(ch)
}

/// Rebuilds the channel at its stored grid tuple (on-grid realizations only).
pub fn rebuild_on_grid(
    geometry: &ArrayGeometry,
    grid: &AngleGrid,
    bs_index: usize,
    ue_ris_index: usize,
) -> ChannelRealization {
    ChannelRealization::from_frequencies(
        geometry,
        (grid.ris_u[ue_ris_index], grid.ris_w[ue_ris_index]),
        grid.bs_sines[bs_index],
        (0.0, 0.0),
        ue_ris_index,
        bs_index,
    )
}

/// Grid tuple `(bs, ris)` maximizing the noiseless gain of narrow steering
/// beams. Ties go to the lowest row-major tuple index.
pub fn best_grid_tuple(
    ch: &ChannelRealization,
    geometry: &ArrayGeometry,
    grid: &AngleGrid,
) -> Result<(usize, usize)> {
    check_consistent(geometry, grid)?;
    let d = geometry.spacing_over_wavelength;
    let ris_beams: Vec<DVector<C64>> = (0..grid.n_ris()).map(|j| grid.ris_steering(j, d)).collect();
    let mut best = (0, 0);
    let mut best_gain = f64::NEG_INFINITY;
    for i in 0..grid.n_bs() {
        let field = ch.bs_field(&grid.bs_steering(i, d))?;
        for (j, v) in ris_beams.iter().enumerate() {
            let g = ch.gain_with_field(v, &field)?.norm_sqr();
            if g > best_gain {
                best_gain = g;
                best = (i, j);
            }
        }
    }
    Ok(best)
}

/// Removes path-gain and distance scaling, restoring the array-gain norms
/// `‖h_r‖ = √N_r` and `‖G‖_F = √(N_t N_r)`.
pub fn normalize_channel(ch: &ChannelRealization) -> Result<ChannelRealization> {
    let h_norm = ch.h_r.norm();
    let g_norm = ch.g_mat.norm();
    if h_norm == 0.0 || g_norm == 0.0 || !h_norm.is_finite() || !g_norm.is_finite() {
        return Err(Error::ZeroNormChannel);
    }
    let nr = ch.n_ris() as f64;
    let nt = ch.n_bs() as f64;
    let mut out = ch.clone();
    out.h_r *= C64::from(nr.sqrt() / h_norm);
    out.g_mat *= C64::from((nt * nr).sqrt() / g_norm);
    Ok(out)
}

/// Noiseless received amplitude `h_r diag(v) G w`.
pub fn effective_gain(ch: &ChannelRealization, v: &DVector<C64>, w: &DVector<C64>) -> Result<C64> {
    let field = ch.bs_field(w)?;
    ch.gain_with_field(v, &field)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrSpec {
    /// `P_t α² / σ²`.
    pub snr_linear: f64,
    /// Skip the noise draw entirely.
    #[serde(default)]
    pub noiseless: bool,
}

impl SnrSpec {
    pub fn linear(snr_linear: f64) -> Result<Self> {
        if !(snr_linear.is_finite() && snr_linear > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "SNR must be positive and finite, got {snr_linear}"
            )));
        }
        Ok(Self {
            snr_linear,
            noiseless: false,
        })
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::linear(10f64.powf(db / 10.0))
    }

    pub fn noiseless(snr_linear: f64) -> Result<Self> {
        Ok(Self {
            noiseless: true,
            ..Self::linear(snr_linear)?
        })
    }

    pub fn db(&self) -> f64 {
        10.0 * self.snr_linear.log10()
    }
}

/// Unit-variance circularly-symmetric complex Gaussian sample.
pub fn complex_noise<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// One received power measurement `|√snr · gain + n|²`.
pub fn measure_power<R: Rng + ?Sized>(gain: C64, snr: &SnrSpec, rng: &mut R) -> f64 {
    let signal = gain * snr.snr_linear.sqrt();
    if snr.noiseless {
        signal.norm_sqr()
    } else {
        (signal + complex_noise(rng)).norm_sqr()
    }
}
