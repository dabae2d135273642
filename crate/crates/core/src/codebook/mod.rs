//! Ideal beam patterns derived from block codes and the complex codewords
//! that realize them.
//!
//! Column `j` of a [`BeamPatternMatrix`] is the codeword of grid index `j`;
//! row `i` is the coverage mask of training layer `i`. Each layer is realized
//! by two codewords: `codeword_one` covers the mask, `codeword_zero` its
//! complement. BS codewords are phase-scheduled sums of steering vectors.
//! RIS codewords come from the relaxed GS designer, either directly on the
//! planar grid or, for dimension-reduced codes, as a Kronecker product of two
//! per-axis designs.

pub mod gs;
pub mod hierarchical;

use std::f64::consts::PI;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array_model::{centered_response, kron, AngleGrid, ArrayGeometry};
use crate::block_code::{BitMatrix, BitString, BlockCode};
use crate::seed::stream;
use crate::{Error, Result, C64};

pub use gs::{flat_codeword, pattern_margin, phase_only, relaxed_gs, GsConfig, GsRun, SamplingMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Bs,
    Ris,
}

impl Side {
    fn tag(self) -> &'static str {
        match self {
            Side::Bs => "bs",
            Side::Ris => "ris",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// Covers the mask-1 points.
    One,
    /// Covers the mask-0 points.
    Zero,
}

impl Polarity {
    fn index(self) -> u64 {
        match self {
            Polarity::One => 0,
            Polarity::Zero => 1,
        }
    }
}

/// How RIS codewords are synthesized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RisSynthesis {
    /// Kronecker product of per-axis designs; requires factorizable masks.
    #[default]
    Kronecker,
    /// One GS run on the full planar grid.
    Planar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BeamPatternMatrix {
    pub rows: BitMatrix,
    pub side: Side,
}

impl BeamPatternMatrix {
    pub fn n_layers(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n_points(&self) -> usize {
        self.rows.ncols()
    }

    pub fn mask(&self, layer: usize) -> Vec<bool> {
        self.rows.row(layer).iter().map(|&b| b == 1).collect()
    }

    pub fn column(&self, j: usize) -> BitString {
        BitString::new(self.rows.column(j)).expect("matrix holds bits")
    }
}

/// `V(:, j) = encode(dec2bin(j, k))` for `j = 0..n_points`.
pub fn beam_pattern_matrix(code: &BlockCode, n_points: usize, side: Side) -> Result<BeamPatternMatrix> {
    if n_points == 0 || code.k >= usize::BITS as usize || n_points > 1usize << code.k {
        return Err(Error::InvalidArgument(format!(
            "{n_points} grid points cannot be indexed by {} information bits",
            code.k
        )));
    }
    let mut rows = BitMatrix::zeros(code.n, n_points);
    for j in 0..n_points {
        let x = code.encode(&BitString::from_index(j, code.k))?;
        for (i, &b) in x.bits().iter().enumerate() {
            rows.set(i, j, b);
        }
    }
    Ok(BeamPatternMatrix { rows, side })
}

/// Multi-mainlobe BS codeword `w ∝ Σ_i e^{jψ_i} b(φ_i)`,
/// `ψ_i = iπ(-1 + 1/N_t)` with `i` the 1-based position in `cover`.
pub fn design_bs_codeword(
    cover: &[usize],
    grid: &AngleGrid,
    geometry: &ArrayGeometry,
) -> Result<DVector<C64>> {
    if cover.is_empty() {
        return Err(Error::DegenerateMask("BS codeword must cover at least one angle"));
    }
    let nt = grid.n_bs();
    let d = geometry.spacing_over_wavelength;
    let step = PI * (-1.0 + 1.0 / nt as f64);
    let mut w = DVector::<C64>::zeros(nt);
    for (pos, &idx) in cover.iter().enumerate() {
        if idx >= nt {
            return Err(Error::InvalidArgument(format!("BS grid index {idx} out of range")));
        }
        let psi = (pos + 1) as f64 * step;
        w += grid.bs_steering(idx, d) * C64::from_polar(1.0, psi);
    }
    let norm = w.norm();
    Ok(w / C64::from(norm))
}

fn indices_of(mask: &[bool], value: bool) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter(|(_, &m)| m == value)
        .map(|(i, _)| i)
        .collect()
}

/// Per-axis sampling matrices of the RIS (`u` axis and `w` axis, in bit order).
#[derive(Debug, Clone)]
pub struct AxisSampling {
    pub u: SamplingMatrix,
    pub w: SamplingMatrix,
}

impl AxisSampling {
    pub fn new(grid: &AngleGrid, geometry: &ArrayGeometry) -> Result<Self> {
        let d = geometry.spacing_over_wavelength;
        let u_cols: Vec<_> = grid
            .u_axis()
            .into_iter()
            .map(|u| centered_response(grid.n_ris_rows, u, d))
            .collect();
        let w_cols: Vec<_> = grid
            .w_axis()
            .into_iter()
            .map(|w| centered_response(grid.n_ris_cols, w, d))
            .collect();
        Ok(Self {
            u: SamplingMatrix::from_columns(&u_cols)?,
            w: SamplingMatrix::from_columns(&w_cols)?,
        })
    }
}

/// Planar sampling matrix with column `j` the steering vector of RIS grid point `j`.
pub fn planar_sampling(grid: &AngleGrid, geometry: &ArrayGeometry) -> Result<SamplingMatrix> {
    let d = geometry.spacing_over_wavelength;
    let cols: Vec<_> = (0..grid.n_ris()).map(|j| grid.ris_steering(j, d)).collect();
    SamplingMatrix::from_columns(&cols)
}

/// Splits a planar mask into `(u-axis mask, w-axis mask)` when it is their
/// outer product.
pub fn factor_mask(mask: &[bool], grid: &AngleGrid) -> Option<(Vec<bool>, Vec<bool>)> {
    let (n1, n2) = (grid.n_ris_rows, grid.n_ris_cols);
    if mask.len() != n1 * n2 {
        return None;
    }
    let mu: Vec<bool> = (0..n1).map(|a| (0..n2).any(|c| mask[grid.ris_join(a, c)])).collect();
    let mw: Vec<bool> = (0..n2).map(|c| (0..n1).any(|a| mask[grid.ris_join(a, c)])).collect();
    let factorizes = (0..n1 * n2).all(|j| {
        let (a, c) = grid.ris_split(j);
        mask[j] == (mu[a] && mw[c])
    });
    factorizes.then_some((mu, mw))
}

/// One axis factor: the flat chirp when the mask covers the whole axis,
/// relaxed GS otherwise. The chirp run carries a constant pattern history so
/// the planar trace stays comparable.
pub fn axis_design<R: rand::Rng + ?Sized>(
    sampling: &SamplingMatrix,
    mask: &[bool],
    cfg: &GsConfig,
    rng: &mut R,
) -> Result<GsRun> {
    if !mask.is_empty() && mask.len() == sampling.n_points() && mask.iter().all(|&m| m) {
        cfg.validate()?;
        let v = flat_codeword(sampling.n_elements());
        let s = sampling.pattern(&v);
        return Ok(GsRun {
            codeword: v,
            trace: vec![0.0; cfg.k_iter],
            patterns: vec![s; cfg.k_iter + 1],
        });
    }
    relaxed_gs(sampling, mask, cfg, rng, false, true)
}

/// Kronecker codeword design: one GS run per axis, iterated in lockstep so the
/// planar trace `‖s_u(k)⊗s_w(k) - s_u(k-1)⊗s_w(k-1)‖` is available.
pub fn design_kronecker_codeword(
    axes: &AxisSampling,
    mask_u: &[bool],
    mask_w: &[bool],
    cfg: &GsConfig,
    seed_tag: &str,
    seed_indices: &[u64],
) -> Result<GsRun> {
    let mut idx_u = seed_indices.to_vec();
    idx_u.push(0);
    let mut idx_w = seed_indices.to_vec();
    idx_w.push(1);
    let run_u = axis_design(&axes.u, mask_u, cfg, &mut stream(cfg.seed, seed_tag, &idx_u))?;
    let run_w = axis_design(&axes.w, mask_w, cfg, &mut stream(cfg.seed, seed_tag, &idx_w))?;
    let planar: Vec<DVector<C64>> = run_u
        .patterns
        .iter()
        .zip(&run_w.patterns)
        .map(|(su, sw)| kron(su, sw))
        .collect();
    let trace = planar.windows(2).map(|p| (&p[1] - &p[0]).norm()).collect();
    Ok(GsRun {
        codeword: kron(&run_u.codeword, &run_w.codeword),
        trace,
        patterns: Vec::new(),
    })
}

/// Planar relaxed GS design for one RIS mask; the random stream is derived
/// from `cfg.seed`. Returns the codeword and its convergence trace.
pub fn design_ris_codeword_gs(
    mask: &[bool],
    grid: &AngleGrid,
    geometry: &ArrayGeometry,
    cfg: &GsConfig,
) -> Result<(DVector<C64>, Vec<f64>)> {
    let sampling = planar_sampling(grid, geometry)?;
    let run = relaxed_gs(&sampling, mask, cfg, &mut stream(cfg.seed, "ris-planar", &[]), false, false)?;
    Ok((run.codeword, run.trace))
}

/// `(min over mask=1 of |aᴴv|, max over mask=0 of |aᴴv|)` on the given side's grid.
pub fn classification_margin(
    v: &DVector<C64>,
    mask: &[bool],
    grid: &AngleGrid,
    geometry: &ArrayGeometry,
    side: Side,
) -> Result<(f64, f64)> {
    let d = geometry.spacing_over_wavelength;
    let (n_points, n_elements) = match side {
        Side::Bs => (grid.n_bs(), grid.n_bs()),
        Side::Ris => (grid.n_ris(), grid.n_ris()),
    };
    if mask.len() != n_points {
        return Err(Error::DimensionMismatch {
            what: "coverage mask",
            expected: n_points,
            actual: mask.len(),
        });
    }
    if v.len() != n_elements {
        return Err(Error::DimensionMismatch {
            what: "codeword",
            expected: n_elements,
            actual: v.len(),
        });
    }
    let pattern = DVector::from_iterator(
        n_points,
        (0..n_points).map(|j| {
            let a = match side {
                Side::Bs => grid.bs_steering(j, d),
                Side::Ris => grid.ris_steering(j, d),
            };
            a.dotc(v)
        }),
    );
    Ok(pattern_margin(&pattern, mask))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodewordReport {
    pub layer: usize,
    pub polarity: Polarity,
    /// GS convergence trace; empty for BS codewords.
    pub trace: Vec<f64>,
    pub min_in: f64,
    pub max_out: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodebookLayer {
    pub mask: Vec<bool>,
    pub codeword_one: DVector<C64>,
    pub codeword_zero: DVector<C64>,
}

impl CodebookLayer {
    pub fn codeword(&self, polarity: Polarity) -> &DVector<C64> {
        match polarity {
            Polarity::One => &self.codeword_one,
            Polarity::Zero => &self.codeword_zero,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignedCodebook {
    pub side: Side,
    pub layers: Vec<CodebookLayer>,
    pub design_report: Vec<CodewordReport>,
}

fn design_bs_book(
    pattern: &BeamPatternMatrix,
    grid: &AngleGrid,
    geometry: &ArrayGeometry,
) -> Result<DesignedCodebook> {
    let mut layers = Vec::with_capacity(pattern.n_layers());
    let mut report = Vec::with_capacity(2 * pattern.n_layers());
    for layer in 0..pattern.n_layers() {
        let mask = pattern.mask(layer);
        let one = design_bs_codeword(&indices_of(&mask, true), grid, geometry)?;
        let zero = design_bs_codeword(&indices_of(&mask, false), grid, geometry)?;
        for (polarity, w) in [(Polarity::One, &one), (Polarity::Zero, &zero)] {
            let polarity_mask: Vec<bool> = mask.iter().map(|&m| m == (polarity == Polarity::One)).collect();
            let (min_in, max_out) = classification_margin(w, &polarity_mask, grid, geometry, Side::Bs)?;
            report.push(CodewordReport {
                layer,
                polarity,
                trace: Vec::new(),
                min_in,
                max_out,
            });
        }
        layers.push(CodebookLayer {
            mask,
            codeword_one: one,
            codeword_zero: zero,
        });
    }
    Ok(DesignedCodebook {
        side: Side::Bs,
        layers,
        design_report: report,
    })
}

fn design_ris_book(
    pattern: &BeamPatternMatrix,
    grid: &AngleGrid,
    geometry: &ArrayGeometry,
    cfg: &GsConfig,
    synthesis: RisSynthesis,
) -> Result<DesignedCodebook> {
    cfg.validate()?;
    let axes = AxisSampling::new(grid, geometry)?;
    let planar = match synthesis {
        RisSynthesis::Planar => Some(planar_sampling(grid, geometry)?),
        RisSynthesis::Kronecker => None,
    };
    let jobs: Vec<(usize, Polarity)> = (0..pattern.n_layers())
        .flat_map(|l| [(l, Polarity::One), (l, Polarity::Zero)])
        .collect();
    let designs: Vec<(DVector<C64>, CodewordReport)> = jobs
        .par_iter()
        .map(|&(layer, polarity)| {
            let mask: Vec<bool> = pattern
                .mask(layer)
                .into_iter()
                .map(|m| m == (polarity == Polarity::One))
                .collect();
            let indices = [layer as u64, polarity.index()];
            let run = match &planar {
                Some(sampling) => relaxed_gs(
                    sampling,
                    &mask,
                    cfg,
                    &mut stream(cfg.seed, Side::Ris.tag(), &indices),
                    false,
                    false,
                )?,
                None => {
                    let (mu, mw) = factor_mask(&mask, grid).ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "RIS layer {layer} mask does not factor across the two axes; \
                             use a dimension-reduced code or planar synthesis"
                        ))
                    })?;
                    design_kronecker_codeword(&axes, &mu, &mw, cfg, Side::Ris.tag(), &indices)?
                }
            };
            let (min_in, max_out) = classification_margin(&run.codeword, &mask, grid, geometry, Side::Ris)?;
            Ok((
                run.codeword,
                CodewordReport {
                    layer,
                    polarity,
                    trace: run.trace,
                    min_in,
                    max_out,
                },
            ))
        })
        .collect::<Result<_>>()?;

    let mut layers = Vec::with_capacity(pattern.n_layers());
    let mut report = Vec::with_capacity(designs.len());
    let mut it = designs.into_iter();
    for layer in 0..pattern.n_layers() {
        let (one, r1) = it.next().expect("two designs per layer");
        let (zero, r0) = it.next().expect("two designs per layer");
        report.push(r1);
        report.push(r0);
        layers.push(CodebookLayer {
            mask: pattern.mask(layer),
            codeword_one: one,
            codeword_zero: zero,
        });
    }
    Ok(DesignedCodebook {
        side: Side::Ris,
        layers,
        design_report: report,
    })
}

/// Designs the BS and RIS coded-training codebooks.
///
/// With [`RisSynthesis::Kronecker`] the RIS code must be dimension-reduced
/// (carry a split), which makes every layer mask factor across the axes.
pub fn build_codebooks(
    code_t: &BlockCode,
    code_r: &BlockCode,
    grid: &AngleGrid,
    geometry: &ArrayGeometry,
    cfg: &GsConfig,
    synthesis: RisSynthesis,
) -> Result<(DesignedCodebook, DesignedCodebook)> {
    if synthesis == RisSynthesis::Kronecker && code_r.split.is_none() {
        return Err(Error::InvalidArgument(
            "Kronecker RIS synthesis needs a dimension-reduced RIS code".into(),
        ));
    }
    if let Some(split) = code_r.split {
        if 1usize << split.k1 < grid.n_ris_rows || 1usize << split.k2 < grid.n_ris_cols {
            return Err(Error::InvalidArgument(format!(
                "RIS code split {}+{} bits does not cover a {}x{} grid",
                split.k1, split.k2, grid.n_ris_rows, grid.n_ris_cols
            )));
        }
    }
    let bs_pattern = beam_pattern_matrix(code_t, grid.n_bs(), Side::Bs)?;
    let ris_pattern = beam_pattern_matrix(code_r, grid.n_ris(), Side::Ris)?;
    let bs = design_bs_book(&bs_pattern, grid, geometry)?;
    let ris = design_ris_book(&ris_pattern, grid, geometry, cfg, synthesis)?;
    Ok((bs, ris))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::block_code::{build_plain_code, build_reduced_code};

    fn setup(nt: usize, n1: usize, n2: usize) -> (ArrayGeometry, AngleGrid) {
        let geometry = ArrayGeometry::new(nt, n1, n2).unwrap();
        let grid = AngleGrid::new(&geometry).unwrap();
        (geometry, grid)
    }

    #[test]
    fn pattern_matrix_small_plain_code() {
        let code = build_plain_code(2).unwrap();
        let v = beam_pattern_matrix(&code, 4, Side::Bs).unwrap();
        assert_eq!(v.rows.row(0), &[0, 0, 1, 1]);
        assert_eq!(v.rows.row(1), &[0, 1, 0, 1]);
        for j in 0..4 {
            assert_eq!(v.column(j), code.encode(&BitString::from_index(j, 2)).unwrap());
        }
    }

    #[test]
    fn pattern_matrix_rejects_too_many_points() {
        let code = build_plain_code(2).unwrap();
        assert!(beam_pattern_matrix(&code, 5, Side::Bs).is_err());
    }

    #[test]
    fn reduced_basis_rows_are_binary_counters() {
        let (_, grid) = setup(8, 8, 8);
        let code = build_reduced_code(3, 3).unwrap();
        let v = beam_pattern_matrix(&code, 64, Side::Ris).unwrap();
        for j in 0..64 {
            let (a, c) = grid.ris_split(j);
            for bit in 0..3 {
                assert_eq!(v.rows.get(bit, j) as usize, (a >> (2 - bit)) & 1);
                assert_eq!(v.rows.get(3 + bit, j) as usize, (c >> (2 - bit)) & 1);
            }
        }
    }

    #[test]
    fn reduced_rows_factor() {
        let (_, grid) = setup(8, 8, 8);
        let code = build_reduced_code(3, 3).unwrap();
        let v = beam_pattern_matrix(&code, 64, Side::Ris).unwrap();
        for layer in 0..code.n {
            let mask = v.mask(layer);
            assert!(factor_mask(&mask, &grid).is_some(), "layer {layer}");
            let complement: Vec<bool> = mask.iter().map(|m| !m).collect();
            assert!(factor_mask(&complement, &grid).is_some());
        }
    }

    #[test]
    fn plain_ris_code_has_interwoven_rows() {
        let (_, grid) = setup(8, 8, 8);
        let code = build_plain_code(6).unwrap();
        let v = beam_pattern_matrix(&code, 64, Side::Ris).unwrap();
        let interwoven = (0..code.n).filter(|&l| factor_mask(&v.mask(l), &grid).is_none()).count();
        assert!(interwoven > 0);
    }

    #[test]
    fn single_angle_bs_codeword_is_rotated_steering() {
        let (geometry, grid) = setup(16, 8, 8);
        let w = design_bs_codeword(&[5], &grid, &geometry).unwrap();
        let b = grid.bs_steering(5, 0.5);
        assert!((b.dotc(&w).norm() - 1.0).abs() < 1e-12);
        assert!(design_bs_codeword(&[], &grid, &geometry).is_err());
    }

    #[test]
    fn half_space_bs_codeword_separates() {
        let (geometry, grid) = setup(16, 8, 8);
        let cover: Vec<usize> = (0..8).collect();
        let w = design_bs_codeword(&cover, &grid, &geometry).unwrap();
        let mask: Vec<bool> = (0..16).map(|i| i < 8).collect();
        let (min_in, max_out) = classification_margin(&w, &mask, &grid, &geometry, Side::Bs).unwrap();
        assert!(min_in > max_out);
        assert!((w.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_cover_keeps_grid_gain_profile() {
        let (geometry, grid) = setup(16, 8, 8);
        let cover = vec![1usize, 4, 6, 9, 13];
        let rev: Vec<usize> = cover.iter().rev().copied().collect();
        let w1 = design_bs_codeword(&cover, &grid, &geometry).unwrap();
        let w2 = design_bs_codeword(&rev, &grid, &geometry).unwrap();
        assert!((&w1 - &w2).norm() > 1e-6);
        for i in 0..16 {
            let b = grid.bs_steering(i, 0.5);
            assert!((b.dotc(&w1).norm() - b.dotc(&w2).norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn kronecker_codebook_modulus_and_partition() {
        let (geometry, grid) = setup(8, 8, 8);
        let code_t = build_plain_code(3).unwrap();
        let code_r = build_reduced_code(3, 3).unwrap();
        let cfg = GsConfig { seed: 5, ..Default::default() };
        let (bs, ris) = build_codebooks(&code_t, &code_r, &grid, &geometry, &cfg, RisSynthesis::Kronecker).unwrap();
        assert_eq!(bs.layers.len(), 6);
        assert_eq!(ris.layers.len(), 12);
        let modulus = 1.0 / 8.0;
        for layer in &ris.layers {
            for z in layer.codeword_one.iter().chain(layer.codeword_zero.iter()) {
                assert!((z.norm() - modulus).abs() < 1e-12);
            }
        }
        for layer in &bs.layers {
            assert!((layer.codeword_one.norm() - 1.0).abs() < 1e-12);
        }
        for r in &ris.design_report {
            assert_eq!(r.trace.len(), cfg.k_iter);
            assert!(r.min_in > r.max_out, "{r:?}");
        }
    }

    #[test]
    fn kronecker_needs_split() {
        let (geometry, grid) = setup(8, 8, 8);
        let code_t = build_plain_code(3).unwrap();
        let code_r = build_plain_code(6).unwrap();
        assert!(build_codebooks(&code_t, &code_r, &grid, &geometry, &GsConfig::default(), RisSynthesis::Kronecker).is_err());
    }

    #[test]
    fn codebook_design_is_deterministic() {
        let (geometry, grid) = setup(8, 8, 8);
        let code_t = build_plain_code(3).unwrap();
        let code_r = build_reduced_code(3, 3).unwrap();
        let cfg = GsConfig { seed: 9, k_iter: 20, ..Default::default() };
        let a = build_codebooks(&code_t, &code_r, &grid, &geometry, &cfg, RisSynthesis::Kronecker).unwrap();
        let b = build_codebooks(&code_t, &code_r, &grid, &geometry, &cfg, RisSynthesis::Kronecker).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn margin_invariant_under_global_phase() {
        let (geometry, grid) = setup(8, 8, 8);
        let mask: Vec<bool> = (0..64).map(|j| j % 3 == 0).collect();
        let v = grid.ris_steering(9, 0.5) + grid.ris_steering(30, 0.5);
        let rotated = &v * C64::from_polar(1.0, 1.234);
        let a = classification_margin(&v, &mask, &grid, &geometry, Side::Ris).unwrap();
        let b = classification_margin(&rotated, &mask, &grid, &geometry, Side::Ris).unwrap();
        assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
    }

    #[test]
    fn steering_singleton_margin() {
        let (geometry, grid) = setup(8, 8, 8);
        let v = grid.ris_steering(20, 0.5);
        let mask: Vec<bool> = (0..64).map(|j| j == 20).collect();
        let (min_in, max_out) = classification_margin(&v, &mask, &grid, &geometry, Side::Ris).unwrap();
        assert!((min_in - 1.0).abs() < 1e-12);
        assert!(max_out < 1e-9);
    }
}
