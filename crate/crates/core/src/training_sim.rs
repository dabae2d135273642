//! Exhaustive, hierarchical and coded beam training over one channel
//! realization.
//!
//! Every protocol transmits beam tuples `(w, v)` one slot at a time, measures
//! the received power and takes hard decisions. Coded and hierarchical
//! training send four tuples per layer, `(w1,v1), (w1,v2), (w2,v1), (w2,v2)`,
//! and keep the argmax (ties go to the lowest tuple).

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::array_model::{AngleGrid, ArrayGeometry};
use crate::block_code::{
    build_plain_code, build_reduced_code, info_bits, BitString, BlockCode, DecodeMode, DecodeStatus,
};
use crate::channel::{measure_power, ChannelRealization, SnrSpec};
use crate::codebook::hierarchical::{log2_exact, HierOrder, HierarchicalCodebook, Interval};
use crate::codebook::{BeamPatternMatrix, DesignedCodebook};
use crate::{Error, Result, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Exhaustive,
    Hierarchical,
    Coded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    /// Only used by coded training.
    #[serde(default)]
    pub decode_mode: DecodeMode,
    /// `None` means unlimited.
    #[serde(default)]
    pub pilot_budget: Option<usize>,
    /// Only used by hierarchical training.
    #[serde(default)]
    pub hier_order: HierOrder,
}

impl ProtocolSpec {
    pub fn exhaustive() -> Self {
        Self {
            kind: ProtocolKind::Exhaustive,
            decode_mode: DecodeMode::None,
            pilot_budget: None,
            hier_order: HierOrder::UFirst,
        }
    }

    pub fn hierarchical() -> Self {
        Self {
            kind: ProtocolKind::Hierarchical,
            ..Self::exhaustive()
        }
    }

    pub fn coded(decode_mode: DecodeMode) -> Self {
        Self {
            kind: ProtocolKind::Coded,
            decode_mode,
            ..Self::exhaustive()
        }
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.pilot_budget = Some(budget);
        self
    }

    /// Short name used in result files.
    pub fn label(&self) -> String {
        match self.kind {
            ProtocolKind::Exhaustive => "exhaustive".into(),
            ProtocolKind::Hierarchical => match self.hier_order {
                HierOrder::UFirst => "hierarchical".into(),
                HierOrder::WFirst => "hierarchical_w_first".into(),
            },
            ProtocolKind::Coded => format!("coded_{}", self.decode_mode.label()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingOutcome {
    pub est_bs_index: usize,
    pub est_ris_index: usize,
    /// Hard decisions per side (coded: received code bits; hierarchical:
    /// half decisions; exhaustive: empty).
    pub raw_bits_bs: BitString,
    pub raw_bits_ris: BitString,
    pub corrected_bs: bool,
    pub corrected_ris: bool,
    pub pilots_used: usize,
    /// The budget ran out before the protocol finished.
    pub truncated: bool,
}

impl TrainingOutcome {
    pub fn hits(&self, ch: &ChannelRealization) -> bool {
        self.est_bs_index == ch.bs_index && self.est_ris_index == ch.ue_ris_index
    }
}

/// One side's beam for a time slot.
#[derive(Debug, Clone, PartialEq)]
pub enum Beam {
    Weights(DVector<C64>),
    /// Synthetic ideal beam: amplitude `1/√|mask|` on covered grid points,
    /// zero elsewhere.
    Mask(Vec<bool>),
}

fn ideal_factor(mask: &[bool], truth: usize) -> Result<f64> {
    let covered = mask.iter().filter(|&&m| m).count();
    if covered == 0 {
        return Err(Error::DegenerateMask("synthetic beam covers no grid point"));
    }
    let t = mask.get(truth).copied().ok_or(Error::DimensionMismatch {
        what: "synthetic beam mask",
        expected: truth + 1,
        actual: mask.len(),
    })?;
    Ok(if t { 1.0 / (covered as f64).sqrt() } else { 0.0 })
}

/// RIS-side field of a BS beam, cached per slot pair.
enum Field {
    Weights(DVector<C64>),
    Ideal(f64),
}

fn bs_field(ch: &ChannelRealization, w: &Beam) -> Result<Field> {
    match w {
        Beam::Weights(w) => Ok(Field::Weights(ch.bs_field(w)?)),
        Beam::Mask(m) => Ok(Field::Ideal(ideal_factor(m, ch.bs_index)?)),
    }
}

fn gain_from_field(ch: &ChannelRealization, field: &Field, v: &Beam) -> Result<C64> {
    match (field, v) {
        (Field::Weights(x), Beam::Weights(v)) => ch.gain_with_field(v, x),
        (Field::Ideal(f), Beam::Mask(m)) => {
            let scale = ((ch.n_bs() * ch.n_ris()) as f64).sqrt();
            Ok(C64::from(scale * f * ideal_factor(m, ch.ue_ris_index)?))
        }
        _ => Err(Error::InvalidArgument(
            "BS and RIS beams must both be designed or both synthetic".into(),
        )),
    }
}

/// Noiseless received amplitude of one beam tuple.
pub fn tuple_gain(ch: &ChannelRealization, w: &Beam, v: &Beam) -> Result<C64> {
    gain_from_field(ch, &bs_field(ch, w)?, v)
}

/// Sends the four tuples of one layer and returns the argmax position
/// (`2·bs_slot + ris_slot`).
fn measure_layer<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    ws: [&Beam; 2],
    vs: [&Beam; 2],
    snr: &SnrSpec,
    rng: &mut R,
) -> Result<usize> {
    let mut best = 0;
    let mut best_power = f64::NEG_INFINITY;
    for (a, w) in ws.into_iter().enumerate() {
        let field = bs_field(ch, w)?;
        for (b, v) in vs.into_iter().enumerate() {
            let power = measure_power(gain_from_field(ch, &field, v)?, snr, rng);
            if power > best_power {
                best_power = power;
                best = 2 * a + b;
            }
        }
    }
    Ok(best)
}

fn check_budget(budget: Option<usize>, min: usize) -> Result<usize> {
    match budget {
        Some(b) if b < min => Err(Error::BudgetTooSmall { budget: b, min }),
        Some(b) => Ok(b),
        None => Ok(usize::MAX),
    }
}

/// Coded-training beams: per layer, slot 0 covers the mask-1 points and
/// slot 1 the mask-0 points.
#[derive(Debug, Clone)]
pub struct CodedBeams {
    pub bs: Vec<[Beam; 2]>,
    pub ris: Vec<[Beam; 2]>,
}

impl CodedBeams {
    pub fn designed(bs: &DesignedCodebook, ris: &DesignedCodebook) -> Self {
        let convert = |book: &DesignedCodebook| {
            book.layers
                .iter()
                .map(|l| [Beam::Weights(l.codeword_one.clone()), Beam::Weights(l.codeword_zero.clone())])
                .collect()
        };
        Self {
            bs: convert(bs),
            ris: convert(ris),
        }
    }

    pub fn ideal(bs: &BeamPatternMatrix, ris: &BeamPatternMatrix) -> Self {
        let convert = |v: &BeamPatternMatrix| {
            (0..v.n_layers())
                .map(|i| {
                    let mask = v.mask(i);
                    let complement = mask.iter().map(|m| !m).collect();
                    [Beam::Mask(mask), Beam::Mask(complement)]
                })
                .collect()
        };
        Self {
            bs: convert(bs),
            ris: convert(ris),
        }
    }
}

/// Decodes received code bits into grid indices. Missing bits must already
/// be padded. A BS code without a split decodes `DecoupledTwoBit` as `OneBit`.
pub fn decode_coded(
    code_t: &BlockCode,
    code_r: &BlockCode,
    raw_bs: &BitString,
    raw_ris: &BitString,
    mode: DecodeMode,
    n_bs: usize,
    n_ris: usize,
) -> Result<(usize, usize, bool, bool)> {
    let side_mode = |code: &BlockCode| match mode {
        DecodeMode::DecoupledTwoBit if code.split.is_none() => DecodeMode::OneBit,
        m => m,
    };
    let bs = code_t.decode(raw_bs, side_mode(code_t))?;
    let ris = code_r.decode(raw_ris, side_mode(code_r))?;
    Ok((
        bs.info.to_index().min(n_bs - 1),
        ris.info.to_index().min(n_ris - 1),
        bs.status == DecodeStatus::Corrected,
        ris.status == DecodeStatus::Corrected,
    ))
}

/// Coded training. Layer `l` sends BS layer `l mod n_t` and RIS layer
/// `l mod n_r`; only the first pass over each code feeds the decoder.
#[allow(clippy::too_many_arguments)]
pub fn run_coded<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    beams: &CodedBeams,
    code_t: &BlockCode,
    code_r: &BlockCode,
    mode: DecodeMode,
    snr: &SnrSpec,
    budget: Option<usize>,
    rng: &mut R,
) -> Result<TrainingOutcome> {
    if beams.bs.len() != code_t.n || beams.ris.len() != code_r.n {
        return Err(Error::DimensionMismatch {
            what: "codebook layers",
            expected: code_t.n.max(code_r.n),
            actual: beams.bs.len().max(beams.ris.len()),
        });
    }
    let budget = check_budget(budget, 4)?;
    let n_layers = code_t.n.max(code_r.n);
    let layers_done = n_layers.min(budget / 4);
    let mut raw_bs = BitString::zeros(code_t.n);
    let mut raw_ris = BitString::zeros(code_r.n);
    for l in 0..layers_done {
        let (lt, lr) = (l % code_t.n, l % code_r.n);
        let [w1, w2] = &beams.bs[lt];
        let [v1, v2] = &beams.ris[lr];
        let idx = measure_layer(ch, [w1, w2], [v1, v2], snr, rng)?;
        // slot 0 holds the mask-1 beam, so winning it reads bit 1
        if l < code_t.n && idx / 2 == 0 {
            raw_bs.flip(lt);
        }
        if l < code_r.n && idx % 2 == 0 {
            raw_ris.flip(lr);
        }
    }
    let (est_bs, est_ris, corrected_bs, corrected_ris) =
        decode_coded(code_t, code_r, &raw_bs, &raw_ris, mode, ch.n_bs(), ch.n_ris())?;
    Ok(TrainingOutcome {
        est_bs_index: est_bs,
        est_ris_index: est_ris,
        raw_bits_bs: raw_bs,
        raw_bits_ris: raw_ris,
        corrected_bs,
        corrected_ris,
        pilots_used: 4 * layers_done,
        truncated: layers_done < n_layers,
    })
}

/// Beam source for hierarchical training.
#[derive(Debug, Clone, Copy)]
pub enum HierBeams<'a> {
    Designed(&'a HierarchicalCodebook),
    Ideal,
}

impl HierBeams<'_> {
    fn bs(&self, range: Interval, n_bs: usize) -> Result<Beam> {
        match self {
            HierBeams::Designed(book) => Ok(Beam::Weights(book.bs_beam(range)?)),
            HierBeams::Ideal => Ok(Beam::Mask((0..n_bs).map(|i| (range.0..range.1).contains(&i)).collect())),
        }
    }

    fn ris(&self, u: Interval, w: Interval, n1: usize, n2: usize) -> Result<Beam> {
        match self {
            HierBeams::Designed(book) => Ok(Beam::Weights(book.ris_beam(u, w)?)),
            HierBeams::Ideal => Ok(Beam::Mask(
                (0..n1 * n2)
                    .map(|j| (u.0..u.1).contains(&(j / n2)) && (w.0..w.1).contains(&(j % n2)))
                    .collect(),
            )),
        }
    }
}

fn halves(r: Interval) -> [Interval; 2] {
    let mid = (r.0 + r.1) / 2;
    [(r.0, mid), (mid, r.1)]
}

/// Hierarchical (binary search) training.
#[allow(clippy::too_many_arguments)]
pub fn run_hierarchical<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    geometry: &ArrayGeometry,
    beams: HierBeams<'_>,
    order: HierOrder,
    snr: &SnrSpec,
    budget: Option<usize>,
    rng: &mut R,
) -> Result<TrainingOutcome> {
    run_hierarchical_tampered(ch, geometry, beams, order, snr, budget, rng, |_, d| d)
}

/// Hierarchical training with a hook that may rewrite each layer's decision
/// `(layer, argmax) -> argmax`; used to inject decision errors.
#[allow(clippy::too_many_arguments)]
pub fn run_hierarchical_tampered<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    geometry: &ArrayGeometry,
    beams: HierBeams<'_>,
    order: HierOrder,
    snr: &SnrSpec,
    budget: Option<usize>,
    rng: &mut R,
    mut tamper: impl FnMut(usize, usize) -> usize,
) -> Result<TrainingOutcome> {
    let (nt, n1, n2) = (geometry.n_bs, geometry.n_ris_rows, geometry.n_ris_cols);
    let bs_bits = log2_exact(nt, "BS array")?;
    let (u_bits, w_bits) = (log2_exact(n1, "RIS row count")?, log2_exact(n2, "RIS column count")?);
    let budget = check_budget(budget, 4)?;
    let n_layers = bs_bits.max(u_bits + w_bits);
    let layers_done = n_layers.min(budget / 4);

    let mut bs_range = (0, nt);
    let mut u_range = (0, n1);
    let mut w_range = (0, n2);
    let mut bits_bs = Vec::new();
    let mut bits_ris = Vec::new();
    for l in 0..layers_done {
        let bs_pair = if bs_range.1 - bs_range.0 > 1 {
            halves(bs_range)
        } else {
            [bs_range; 2]
        };
        let split_u = match order {
            HierOrder::UFirst => u_range.1 - u_range.0 > 1,
            HierOrder::WFirst => w_range.1 - w_range.0 == 1 && u_range.1 - u_range.0 > 1,
        };
        let split_w = !split_u && w_range.1 - w_range.0 > 1;
        let ris_pair = if split_u {
            halves(u_range).map(|u| (u, w_range))
        } else if split_w {
            halves(w_range).map(|w| (u_range, w))
        } else {
            [(u_range, w_range); 2]
        };
        let ws = [beams.bs(bs_pair[0], nt)?, beams.bs(bs_pair[1], nt)?];
        let vs = [
            beams.ris(ris_pair[0].0, ris_pair[0].1, n1, n2)?,
            beams.ris(ris_pair[1].0, ris_pair[1].1, n1, n2)?,
        ];
        let idx = tamper(l, measure_layer(ch, [&ws[0], &ws[1]], [&vs[0], &vs[1]], snr, rng)?);
        let (a, b) = (idx / 2, idx % 2);
        if bs_pair[0] != bs_pair[1] {
            bits_bs.push(a as u8);
            bs_range = bs_pair[a];
        }
        if ris_pair[0] != ris_pair[1] {
            bits_ris.push(b as u8);
            (u_range, w_range) = ris_pair[b];
        }
    }
    Ok(TrainingOutcome {
        est_bs_index: bs_range.0,
        est_ris_index: u_range.0 * n2 + w_range.0,
        raw_bits_bs: BitString::new(bits_bs)?,
        raw_bits_ris: BitString::new(bits_ris)?,
        corrected_bs: false,
        corrected_ris: false,
        pilots_used: 4 * layers_done,
        truncated: layers_done < n_layers,
    })
}

/// Narrow single-point beams for every grid point.
#[derive(Debug, Clone)]
pub struct NarrowBeams {
    pub bs: Vec<Beam>,
    pub ris: Vec<Beam>,
}

impl NarrowBeams {
    /// Grid steering vectors.
    pub fn designed(grid: &AngleGrid, geometry: &ArrayGeometry) -> Self {
        let d = geometry.spacing_over_wavelength;
        Self {
            bs: (0..grid.n_bs()).map(|i| Beam::Weights(grid.bs_steering(i, d))).collect(),
            ris: (0..grid.n_ris()).map(|j| Beam::Weights(grid.ris_steering(j, d))).collect(),
        }
    }

    /// Singleton masks.
    pub fn ideal(grid: &AngleGrid) -> Self {
        let single = |n: usize, i: usize| Beam::Mask((0..n).map(|k| k == i).collect());
        Self {
            bs: (0..grid.n_bs()).map(|i| single(grid.n_bs(), i)).collect(),
            ris: (0..grid.n_ris()).map(|j| single(grid.n_ris(), j)).collect(),
        }
    }
}

/// Exhaustive search over all tuples in row-major order (BS outer).
pub fn run_exhaustive<R: Rng + ?Sized>(
    ch: &ChannelRealization,
    beams: &NarrowBeams,
    snr: &SnrSpec,
    budget: Option<usize>,
    rng: &mut R,
) -> Result<TrainingOutcome> {
    let budget = check_budget(budget, 1)?;
    let total = beams.bs.len() * beams.ris.len();
    let used = total.min(budget);
    let mut best = 0;
    let mut best_power = f64::NEG_INFINITY;
    let mut t = 0;
    'outer: for w in &beams.bs {
        let field = bs_field(ch, w)?;
        for v in &beams.ris {
            if t == used {
                break 'outer;
            }
            let power = measure_power(gain_from_field(ch, &field, v)?, snr, rng);
            if power > best_power {
                best_power = power;
                best = t;
            }
            t += 1;
        }
    }
    Ok(TrainingOutcome {
        est_bs_index: best / beams.ris.len(),
        est_ris_index: best % beams.ris.len(),
        raw_bits_bs: BitString::zeros(0),
        raw_bits_ris: BitString::zeros(0),
        corrected_bs: false,
        corrected_ris: false,
        pilots_used: used,
        truncated: used < total,
    })
}

/// Default codes for a geometry: plain BS code, dimension-reduced RIS code.
pub fn default_codes(geometry: &ArrayGeometry) -> Result<(BlockCode, BlockCode)> {
    geometry.validate()?;
    let code_t = build_plain_code(info_bits(geometry.n_bs))?;
    let code_r = build_reduced_code(info_bits(geometry.n_ris_rows), info_bits(geometry.n_ris_cols))?;
    Ok((code_t, code_r))
}

/// Pilot overhead of a full run. `codes` defaults to [`default_codes`].
pub fn training_overhead(
    kind: ProtocolKind,
    geometry: &ArrayGeometry,
    codes: Option<(&BlockCode, &BlockCode)>,
) -> Result<usize> {
    geometry.validate()?;
    let (nt, nr) = (geometry.n_bs, geometry.n_ris());
    Ok(match kind {
        ProtocolKind::Exhaustive => nt * nr,
        ProtocolKind::Hierarchical => 4 * info_bits(nt).max(info_bits(nr)),
        ProtocolKind::Coded => match codes {
            Some((t, r)) => 4 * t.n.max(r.n),
            None => {
                let (t, r) = default_codes(geometry)?;
                4 * t.n.max(r.n)
            }
        },
    })
}

/// `log₂(1 + snr·|h_r diag(v) G w|²)`.
pub fn achievable_rate(
    ch: &ChannelRealization,
    v: &DVector<C64>,
    w: &DVector<C64>,
    snr_eval: &SnrSpec,
) -> Result<f64> {
    let g = crate::channel::effective_gain(ch, v, w)?;
    Ok((1.0 + snr_eval.snr_linear * g.norm_sqr()).log2())
}
