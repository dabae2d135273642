//! Binary-search codebooks for hierarchical training.
//!
//! Every node is a dyadic index interval `[lo, hi)`. BS nodes are
//! multi-mainlobe codewords. RIS beams are Kronecker products of one factor
//! per axis: a GS design covering the active axis interval (the flat chirp
//! while the axis is untouched), or the exact axis
//! steering vector once that axis is resolved to a single index.

use std::collections::BTreeMap;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::gs::GsConfig;
use super::{axis_design, design_bs_codeword, AxisSampling};
use crate::array_model::{centered_response, kron, AngleGrid, ArrayGeometry};
use crate::seed::stream;
use crate::{Error, Result, C64};

/// Which RIS axis the hierarchical search resolves first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HierOrder {
    #[default]
    UFirst,
    WFirst,
}

pub type Interval = (usize, usize);

/// Dyadic intervals of `[0, n)` with at least two points, root first.
pub fn dyadic_intervals(n: usize) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut size = n;
    while size >= 2 {
        out.extend((0..n / size).map(|i| (i * size, (i + 1) * size)));
        size /= 2;
    }
    out
}

pub fn log2_exact(n: usize, what: &str) -> Result<usize> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "hierarchical training needs a power-of-two {what}, got {n}"
        )));
    }
    Ok(n.trailing_zeros() as usize)
}

#[derive(Debug, Clone)]
pub struct HierarchicalCodebook {
    pub n_bs: usize,
    pub n_ris_rows: usize,
    pub n_ris_cols: usize,
    bs_nodes: BTreeMap<Interval, DVector<C64>>,
    u_nodes: BTreeMap<Interval, DVector<C64>>,
    w_nodes: BTreeMap<Interval, DVector<C64>>,
    u_steering: Vec<DVector<C64>>,
    w_steering: Vec<DVector<C64>>,
}

impl HierarchicalCodebook {
    pub fn build(grid: &AngleGrid, geometry: &ArrayGeometry, cfg: &GsConfig) -> Result<Self> {
        cfg.validate()?;
        let (nt, n1, n2) = (grid.n_bs(), grid.n_ris_rows, grid.n_ris_cols);
        log2_exact(nt, "BS array")?;
        log2_exact(n1, "RIS row count")?;
        log2_exact(n2, "RIS column count")?;
        let d = geometry.spacing_over_wavelength;

        let mut bs_nodes = BTreeMap::new();
        let singletons = (0..nt).map(|i| (i, i + 1));
        for (lo, hi) in dyadic_intervals(nt).into_iter().chain(singletons) {
            let cover: Vec<usize> = (lo..hi).collect();
            bs_nodes.insert((lo, hi), design_bs_codeword(&cover, grid, geometry)?);
        }

        let axes = AxisSampling::new(grid, geometry)?;
        let design_axis = |sampling, n: usize, tag: &str| -> Result<BTreeMap<Interval, DVector<C64>>> {
            let mut nodes = BTreeMap::new();
            for (lo, hi) in dyadic_intervals(n) {
                let mask: Vec<bool> = (0..n).map(|i| (lo..hi).contains(&i)).collect();
                let mut rng = stream(cfg.seed, tag, &[lo as u64, hi as u64]);
                let run = axis_design(sampling, &mask, cfg, &mut rng)?;
                nodes.insert((lo, hi), run.codeword);
            }
            Ok(nodes)
        };
        let u_nodes = design_axis(&axes.u, n1, "hier-u")?;
        let w_nodes = design_axis(&axes.w, n2, "hier-w")?;

        let u_steering = grid.u_axis().into_iter().map(|u| centered_response(n1, u, d)).collect();
        let w_steering = grid.w_axis().into_iter().map(|w| centered_response(n2, w, d)).collect();
        Ok(Self {
            n_bs: nt,
            n_ris_rows: n1,
            n_ris_cols: n2,
            bs_nodes,
            u_nodes,
            w_nodes,
            u_steering,
            w_steering,
        })
    }

    fn node<'a>(
        nodes: &'a BTreeMap<Interval, DVector<C64>>,
        steering: &'a [DVector<C64>],
        range: Interval,
    ) -> Result<&'a DVector<C64>> {
        if range.1 == range.0 + 1 && range.0 < steering.len() {
            return Ok(&steering[range.0]);
        }
        nodes
            .get(&range)
            .ok_or_else(|| Error::InvalidArgument(format!("{range:?} is not a dyadic interval")))
    }

    /// BS codeword covering `[lo, hi)`.
    pub fn bs_beam(&self, range: Interval) -> Result<DVector<C64>> {
        self.bs_nodes
            .get(&range)
            .cloned()
            .ok_or_else(|| Error::InvalidArgument(format!("{range:?} is not a dyadic BS interval")))
    }

    /// RIS codeword covering the `u` interval times the `w` interval.
    pub fn ris_beam(&self, u_range: Interval, w_range: Interval) -> Result<DVector<C64>> {
        let fu = Self::node(&self.u_nodes, &self.u_steering, u_range)?;
        let fw = Self::node(&self.w_nodes, &self.w_steering, w_range)?;
        Ok(kron(fu, fw))
    }
}
