//! Array responses for the BS uniform linear array and the RIS uniform planar
//! array, together with the candidate angle grids both sides train over.
//!
//! Everything downstream works in spatial frequency: `sin φ` for the BS and
//! the pair `(u, w) = (sin φ · sin θ, cos θ)` for the RIS. A RIS grid point
//! may have no physical azimuth (`|u / sin θ| > 1`) while its response is
//! still perfectly well defined, so physical angles are only reported.

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, C64};

/// Half-wavelength element spacing.
pub const HALF_WAVELENGTH: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrayGeometry {
    /// BS antennas (linear array).
    pub n_bs: usize,
    /// RIS elements along the azimuth-frequency (`u`) axis.
    pub n_ris_rows: usize,
    /// RIS elements along the elevation-frequency (`w`) axis.
    pub n_ris_cols: usize,
    /// Element spacing in wavelengths, `d / λ`.
    #[serde(default = "default_spacing")]
    pub spacing_over_wavelength: f64,
}

fn default_spacing() -> f64 {
    HALF_WAVELENGTH
}

impl ArrayGeometry {
    pub fn new(n_bs: usize, n_ris_rows: usize, n_ris_cols: usize) -> Result<Self> {
        let geometry = Self {
            n_bs,
            n_ris_rows,
            n_ris_cols,
            spacing_over_wavelength: HALF_WAVELENGTH,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn with_spacing(mut self, spacing_over_wavelength: f64) -> Result<Self> {
        self.spacing_over_wavelength = spacing_over_wavelength;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_bs == 0 || self.n_ris_rows == 0 || self.n_ris_cols == 0 {
            return Err(Error::InvalidArgument(format!(
                "array sizes must be positive (n_bs = {}, ris = {}x{})",
                self.n_bs, self.n_ris_rows, self.n_ris_cols
            )));
        }
        if !(self.spacing_over_wavelength.is_finite() && self.spacing_over_wavelength > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "spacing must be positive, got {}",
                self.spacing_over_wavelength
            )));
        }
        Ok(())
    }

    /// Total number of RIS elements.
    pub fn n_ris(&self) -> usize {
        self.n_ris_rows * self.n_ris_cols
    }
}

/// ULA response at spatial frequency `sin_phi`, element `m` (0-based) carrying
/// phase `-2π (d/λ) m sin φ`.
pub fn ula_response(n: usize, sin_phi: f64, spacing: f64) -> DVector<C64> {
    let scale = 1.0 / (n as f64).sqrt();
    DVector::from_iterator(
        n,
        (0..n).map(|m| C64::from_polar(scale, -2.0 * PI * spacing * m as f64 * sin_phi)),
    )
}

pub fn ula_steering(n: usize, phi: f64, spacing: f64) -> DVector<C64> {
    ula_response(n, phi.sin(), spacing)
}

/// Centered antenna indices `(1-N)/2, (3-N)/2, …, (N-1)/2`.
pub fn centered_indices(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| i as f64 - (n as f64 - 1.0) / 2.0)
}

/// One UPA axis factor: centered indices, unit norm.
pub fn centered_response(n: usize, freq: f64, spacing: f64) -> DVector<C64> {
    let scale = 1.0 / (n as f64).sqrt();
    DVector::from_iterator(
        n,
        centered_indices(n).map(|delta| C64::from_polar(scale, -2.0 * PI * spacing * freq * delta)),
    )
}

/// Kronecker product of two column vectors.
pub fn kron(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    DVector::from_iterator(
        a.len() * b.len(),
        a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)),
    )
}

/// UPA response at spatial frequencies `(u, w)`.
pub fn upa_response(n1: usize, n2: usize, u: f64, w: f64, spacing: f64) -> DVector<C64> {
    kron(
        &centered_response(n1, u, spacing),
        &centered_response(n2, w, spacing),
    )
}

pub fn upa_steering(n1: usize, n2: usize, phi: f64, theta: f64, spacing: f64) -> DVector<C64> {
    upa_response(n1, n2, phi.sin() * theta.sin(), theta.cos(), spacing)
}

/// `sin` values of the BS candidate angles: `-(N+1)/N + 2n/N`, `n = 1..N`.
pub fn bs_grid_sines(n_bs: usize) -> Vec<f64> {
    let n = n_bs as f64;
    (1..=n_bs).map(|k| -(n + 1.0) / n + 2.0 * k as f64 / n).collect()
}

pub fn bs_angle_grid(n_bs: usize) -> Vec<f64> {
    bs_grid_sines(n_bs).into_iter().map(f64::asin).collect()
}

/// Candidate angles and spatial frequencies of both arrays.
///
/// RIS grid index `j` (0-based) splits as `j = a · N_r2 + c`: `a` selects the
/// `u` value, `c` the `w` value. The `w` axis is the `mod(n, N_r2)` rule with
/// `n = j + 1`, so `c = N_r2 - 1` lands on the smallest `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleGrid {
    pub bs_angles: Vec<f64>,
    pub bs_sines: Vec<f64>,
    pub ris_u: Vec<f64>,
    pub ris_w: Vec<f64>,
    pub ris_azimuth: Vec<Option<f64>>,
    pub ris_elevation: Vec<f64>,
    pub n_ris_rows: usize,
    pub n_ris_cols: usize,
}

impl AngleGrid {
    pub fn new(geometry: &ArrayGeometry) -> Result<Self> {
        geometry.validate()?;
        if geometry.n_bs < 2 {
            return Err(Error::InvalidArgument(format!(
                "BS grid needs at least 2 antennas, got {}",
                geometry.n_bs
            )));
        }
        let mut grid = ris_angle_grid(geometry.n_ris_rows, geometry.n_ris_cols)?;
        grid.bs_sines = bs_grid_sines(geometry.n_bs);
        grid.bs_angles = bs_angle_grid(geometry.n_bs);
        Ok(grid)
    }

    pub fn n_bs(&self) -> usize {
        self.bs_sines.len()
    }

    pub fn n_ris(&self) -> usize {
        self.ris_u.len()
    }

    /// `u` value for each azimuth-axis index `a`.
    pub fn u_axis(&self) -> Vec<f64> {
        let n1 = self.n_ris_rows as f64;
        (0..self.n_ris_rows)
            .map(|a| (1.0 - n1) / n1 + 2.0 * a as f64 / n1)
            .collect()
    }

    /// `w` value for each elevation-axis index `c` (bit order, not sorted).
    pub fn w_axis(&self) -> Vec<f64> {
        let n2 = self.n_ris_cols;
        let n2f = n2 as f64;
        (0..n2)
            .map(|c| (1.0 - n2f) / n2f + 2.0 * ((c + 1) % n2) as f64 / n2f)
            .collect()
    }

    /// Split a RIS grid index into its `(u-axis, w-axis)` indices.
    pub fn ris_split(&self, j: usize) -> (usize, usize) {
        (j / self.n_ris_cols, j % self.n_ris_cols)
    }

    pub fn ris_join(&self, a: usize, c: usize) -> usize {
        a * self.n_ris_cols + c
    }

    pub fn bs_steering(&self, i: usize, spacing: f64) -> DVector<C64> {
        ula_response(self.n_bs(), self.bs_sines[i], spacing)
    }

    pub fn ris_steering(&self, j: usize, spacing: f64) -> DVector<C64> {
        upa_response(
            self.n_ris_rows,
            self.n_ris_cols,
            self.ris_u[j],
            self.ris_w[j],
            spacing,
        )
    }
}

/// RIS part of the candidate grid; the BS fields of the result are empty.
pub fn ris_angle_grid(n1: usize, n2: usize) -> Result<AngleGrid> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidArgument(format!(
            "RIS grid needs at least 2x2 elements, got {n1}x{n2}"
        )));
    }
    let n1f = n1 as f64;
    let n2f = n2 as f64;
    let total = n1 * n2;
    let mut ris_u = Vec::with_capacity(total);
    let mut ris_w = Vec::with_capacity(total);
    let mut ris_azimuth = Vec::with_capacity(total);
    let mut ris_elevation = Vec::with_capacity(total);
    for n in 1..=total {
        let u = -(n1f + 1.0) / n1f + 2.0 * n.div_ceil(n2) as f64 / n1f;
        let w = (1.0 - n2f) / n2f + 2.0 * (n % n2) as f64 / n2f;
        let theta = w.acos();
        let arg = u / theta.sin();
        ris_u.push(u);
        ris_w.push(w);
        ris_elevation.push(theta);
        ris_azimuth.push((arg.abs() <= 1.0).then(|| arg.asin()));
    }
    Ok(AngleGrid {
        bs_angles: Vec::new(),
        bs_sines: Vec::new(),
        ris_u,
        ris_w,
        ris_azimuth,
        ris_elevation,
        n_ris_rows: n1,
        n_ris_cols: n2,
    })
}
