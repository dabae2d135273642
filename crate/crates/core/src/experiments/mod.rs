//! Monte-Carlo sweeps over SNR or pilot budget.
//!
//! Channels are drawn once per trial index and shared by every protocol and
//! sweep point, so protocol comparisons are paired. Measurement noise has its
//! own stream per (protocol, sweep point, trial).

mod export;

pub use export::{
    codebook_document, export_codebooks, export_results, export_trials, import_results_csv, import_results_json, CodebookDocument,
    OutputFormat,
};

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::array_model::{AngleGrid, ArrayGeometry};
use crate::block_code::BlockCode;
use crate::channel::{sample_channel, ChannelModel, ChannelRealization, SnrSpec};
use crate::codebook::hierarchical::HierarchicalCodebook;
use crate::codebook::{beam_pattern_matrix, build_codebooks, GsConfig, RisSynthesis, Side};
use crate::seed::{derive_seed, stream};
use crate::training_sim::{
    achievable_rate, default_codes, run_coded, run_exhaustive, run_hierarchical, training_overhead, CodedBeams,
    HierBeams, NarrowBeams, ProtocolKind, ProtocolSpec, TrainingOutcome,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVariable {
    SnrDb,
    Pilots,
}

impl SweepVariable {
    pub fn label(&self) -> &'static str {
        match self {
            SweepVariable::SnrDb => "snr_db",
            SweepVariable::Pilots => "pilots",
        }
    }
}

/// Beams used during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamMode {
    /// Designed codewords (multi-mainlobe BS, GS RIS, grid steering vectors).
    #[default]
    Designed,
    /// Binary gains straight from the coverage masks.
    SyntheticIdeal,
}

fn default_fixed_snr_db() -> f64 {
    10.0
}
fn default_trials() -> usize {
    2000
}
fn default_eval_snr() -> f64 {
    10.0
}
fn default_carrier() -> f64 {
    28.0
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub geometry: ArrayGeometry,
    pub sweep: SweepVariable,
    #[serde(default)]
    pub snr_grid_db: Vec<f64>,
    #[serde(default)]
    pub pilot_grid: Vec<usize>,
    /// Training SNR of a pilot sweep.
    #[serde(default = "default_fixed_snr_db")]
    pub fixed_snr_db: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub protocols: Vec<ProtocolSpec>,
    #[serde(default)]
    pub gs: GsConfig,
    #[serde(default)]
    pub ris_synthesis: RisSynthesis,
    #[serde(default)]
    pub channel: ChannelModel,
    #[serde(default)]
    pub master_seed: u64,
    /// SNR used by the achievable-rate metric.
    #[serde(default = "default_eval_snr")]
    pub eval_snr_linear: f64,
    #[serde(default)]
    pub noiseless: bool,
    #[serde(default)]
    pub beams: BeamMode,
    /// Adds a noiseless-exhaustive `ceiling` row per sweep point.
    #[serde(default = "default_true")]
    pub include_ceiling: bool,
    /// Recorded for provenance; enters only through `d = λ/2`.
    #[serde(default = "default_carrier")]
    pub carrier_ghz: f64,
}

impl ExperimentConfig {
    fn base(geometry: ArrayGeometry, sweep: SweepVariable) -> Self {
        Self {
            geometry,
            sweep,
            snr_grid_db: Vec::new(),
            pilot_grid: Vec::new(),
            fixed_snr_db: default_fixed_snr_db(),
            trials: default_trials(),
            protocols: Vec::new(),
            gs: GsConfig::default(),
            ris_synthesis: RisSynthesis::Kronecker,
            channel: ChannelModel::default(),
            master_seed: 2024,
            eval_snr_linear: default_eval_snr(),
            noiseless: false,
            beams: BeamMode::Designed,
            include_ceiling: true,
            carrier_ghz: default_carrier(),
        }
    }

    fn snr_preset(geometry: ArrayGeometry) -> Self {
        use crate::block_code::DecodeMode;
        Self {
            snr_grid_db: (-10..=30).step_by(5).map(f64::from).collect(),
            protocols: vec![
                ProtocolSpec::exhaustive(),
                ProtocolSpec::hierarchical(),
                ProtocolSpec::coded(DecodeMode::None),
                ProtocolSpec::coded(DecodeMode::OneBit),
                ProtocolSpec::coded(DecodeMode::DecoupledTwoBit),
            ],
            ..Self::base(geometry, SweepVariable::SnrDb)
        }
    }

    fn pilot_preset(geometry: ArrayGeometry, pilots: Vec<usize>) -> Self {
        use crate::block_code::DecodeMode;
        Self {
            pilot_grid: pilots,
            protocols: vec![
                ProtocolSpec::exhaustive(),
                ProtocolSpec::hierarchical(),
                ProtocolSpec::coded(DecodeMode::OneBit),
                ProtocolSpec::coded(DecodeMode::DecoupledTwoBit),
            ],
            ..Self::base(geometry, SweepVariable::Pilots)
        }
    }

    /// `N_t = 16`, RIS 8×8 SNR sweep.
    pub fn desk_snr() -> Self {
        Self::snr_preset(ArrayGeometry::new(16, 8, 8).expect("valid preset"))
    }

    /// `N_t = 16`, RIS 8×8 pilot sweep at 10 dB.
    pub fn desk_pilots() -> Self {
        Self::pilot_preset(
            ArrayGeometry::new(16, 8, 8).expect("valid preset"),
            vec![4, 8, 16, 24, 32, 40, 48, 64, 100, 200, 500, 1024],
        )
    }

    /// `N_t = 64`, RIS 16×16 SNR sweep.
    pub fn full_snr() -> Self {
        Self::snr_preset(ArrayGeometry::new(64, 16, 16).expect("valid preset"))
    }

    /// `N_t = 64`, RIS 16×16 pilot sweep at 10 dB.
    pub fn full_pilots() -> Self {
        Self::pilot_preset(
            ArrayGeometry::new(64, 16, 16).expect("valid preset"),
            vec![8, 16, 24, 32, 40, 48, 56, 64, 100, 500, 1000, 5000, 16384],
        )
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn sweep_points(&self) -> Vec<f64> {
        match self.sweep {
            SweepVariable::SnrDb => self.snr_grid_db.clone(),
            SweepVariable::Pilots => self.pilot_grid.iter().map(|&p| p as f64).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.gs.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.protocols.is_empty() {
            return Err(Error::Config("no protocols configured".into()));
        }
        match self.sweep {
            SweepVariable::SnrDb if self.snr_grid_db.is_empty() => {
                return Err(Error::Config("snr_grid_db is empty".into()))
            }
            SweepVariable::Pilots if self.pilot_grid.is_empty() => {
                return Err(Error::Config("pilot_grid is empty".into()))
            }
            _ => {}
        }
        if self.snr_grid_db.iter().chain([&self.fixed_snr_db]).any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR values must be finite".into()));
        }
        SnrSpec::linear(self.eval_snr_linear)?;
        let (code_t, code_r) = default_codes(&self.geometry).map_err(|e| Error::Config(e.to_string()))?;
        for p in &self.protocols {
            let min = if p.kind == ProtocolKind::Exhaustive { 1 } else { 4 };
            let budgets: Vec<usize> = match self.sweep {
                SweepVariable::Pilots => self.pilot_grid.clone(),
                SweepVariable::SnrDb => p.pilot_budget.into_iter().collect(),
            };
            if let Some(&b) = budgets.iter().find(|&&b| b < min) {
                return Err(Error::Config(format!("{}: pilot budget {b} is below {min}", p.label())));
            }
            if p.kind == ProtocolKind::Hierarchical {
                for n in [self.geometry.n_bs, self.geometry.n_ris_rows, self.geometry.n_ris_cols] {
                    if !n.is_power_of_two() {
                        return Err(Error::Config("hierarchical training needs power-of-two arrays".into()));
                    }
                }
            }
            if p.kind == ProtocolKind::Coded
                && (1usize << code_t.k < self.geometry.n_bs || 1usize << code_r.k < self.geometry.n_ris())
            {
                return Err(Error::Config("codes do not cover the grid".into()));
            }
        }
        Ok(())
    }
}

/// One aggregated (protocol, sweep point) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub protocol: String,
    pub sweep_variable: String,
    pub sweep_value: f64,
    pub trials: usize,
    pub pilots: usize,
    pub success_rate: f64,
    /// Half-width of the normal-approximation 95% interval.
    pub success_ci95: f64,
    pub mean_rate: f64,
    pub rate_ci95: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResultSet {
    pub rows: Vec<ResultRow>,
}

impl ResultSet {
    pub fn get(&self, protocol: &str, sweep_value: f64) -> Option<&ResultRow> {
        self.rows
            .iter()
            .find(|r| r.protocol == protocol && r.sweep_value == sweep_value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub protocol: String,
    pub sweep_value: f64,
    pub trial: usize,
    pub true_bs: usize,
    pub true_ris: usize,
    pub est_bs: usize,
    pub est_ris: usize,
    pub success: bool,
    pub rate: f64,
    pub pilots: usize,
}

/// Rounds to 10 significant digits, the precision of exported files.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.9e}").parse().expect("formatted float parses")
}

/// Fraction of exact tuple matches.
pub fn success_rate(estimates: &[(usize, usize)], truths: &[(usize, usize)]) -> Result<f64> {
    if estimates.len() != truths.len() {
        return Err(Error::DimensionMismatch {
            what: "ground-truth list",
            expected: estimates.len(),
            actual: truths.len(),
        });
    }
    if estimates.is_empty() {
        return Err(Error::InvalidArgument("success rate of an empty trial set".into()));
    }
    let hits = estimates.iter().zip(truths).filter(|(e, t)| e == t).count();
    Ok(hits as f64 / estimates.len() as f64)
}

fn aggregate(
    protocol: String,
    sweep: SweepVariable,
    value: f64,
    pilots: usize,
    records: &[TrialRecord],
) -> ResultRow {
    let n = records.len() as f64;
    let hits = records.iter().filter(|r| r.success).count() as f64;
    let p = hits / n;
    let mean = records.iter().map(|r| r.rate).sum::<f64>() / n;
    let var = if records.len() > 1 {
        records.iter().map(|r| (r.rate - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    ResultRow {
        protocol,
        sweep_variable: sweep.label().into(),
        sweep_value: round_sig(value),
        trials: records.len(),
        pilots,
        success_rate: round_sig(p),
        success_ci95: round_sig(1.96 * (p * (1.0 - p) / n).sqrt()),
        mean_rate: round_sig(mean),
        rate_ci95: round_sig(1.96 * (var / n).sqrt()),
    }
}

/// Everything designed once per configuration.
pub struct TrainingSetup {
    pub geometry: ArrayGeometry,
    pub grid: AngleGrid,
    pub code_t: BlockCode,
    pub code_r: BlockCode,
    pub coded: CodedBeams,
    pub hierarchical: Option<HierarchicalCodebook>,
    pub narrow_training: NarrowBeams,
    pub narrow_eval: NarrowBeams,
    pub beams: BeamMode,
}

impl TrainingSetup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let geometry = cfg.geometry;
        let grid = AngleGrid::new(&geometry)?;
        let (code_t, code_r) = default_codes(&geometry)?;
        let needs = |k: ProtocolKind| cfg.protocols.iter().any(|p| p.kind == k);
        let coded = match cfg.beams {
            BeamMode::Designed if needs(ProtocolKind::Coded) => {
                let (bs, ris) = build_codebooks(&code_t, &code_r, &grid, &geometry, &cfg.gs, cfg.ris_synthesis)?;
                CodedBeams::designed(&bs, &ris)
            }
            BeamMode::Designed => CodedBeams { bs: Vec::new(), ris: Vec::new() },
            BeamMode::SyntheticIdeal => CodedBeams::ideal(
                &beam_pattern_matrix(&code_t, grid.n_bs(), Side::Bs)?,
                &beam_pattern_matrix(&code_r, grid.n_ris(), Side::Ris)?,
            ),
        };
        let hierarchical = if cfg.beams == BeamMode::Designed && needs(ProtocolKind::Hierarchical) {
            Some(HierarchicalCodebook::build(&grid, &geometry, &cfg.gs)?)
        } else {
            None
        };
        let narrow_eval = NarrowBeams::designed(&grid, &geometry);
        let narrow_training = match cfg.beams {
            BeamMode::Designed => narrow_eval.clone(),
            BeamMode::SyntheticIdeal => NarrowBeams::ideal(&grid),
        };
        Ok(Self {
            geometry,
            grid,
            code_t,
            code_r,
            coded,
            hierarchical,
            narrow_training,
            narrow_eval,
            beams: cfg.beams,
        })
    }

    pub fn run<R: rand::Rng + ?Sized>(
        &self,
        spec: &ProtocolSpec,
        ch: &ChannelRealization,
        snr: &SnrSpec,
        budget: Option<usize>,
        rng: &mut R,
    ) -> Result<TrainingOutcome> {
        match spec.kind {
            ProtocolKind::Exhaustive => run_exhaustive(ch, &self.narrow_training, snr, budget, rng),
            ProtocolKind::Hierarchical => {
                let beams = match &self.hierarchical {
                    Some(book) => HierBeams::Designed(book),
                    None => HierBeams::Ideal,
                };
                run_hierarchical(ch, &self.geometry, beams, spec.hier_order, snr, budget, rng)
            }
            ProtocolKind::Coded => run_coded(
                ch,
                &self.coded,
                &self.code_t,
                &self.code_r,
                spec.decode_mode,
                snr,
                budget,
                rng,
            ),
        }
    }

    /// Rate of the narrow grid beams at `(bs, ris)`.
    pub fn rate_at(&self, ch: &ChannelRealization, bs: usize, ris: usize, snr_eval: &SnrSpec) -> Result<f64> {
        use crate::training_sim::Beam;
        match (&self.narrow_eval.bs[bs], &self.narrow_eval.ris[ris]) {
            (Beam::Weights(w), Beam::Weights(v)) => achievable_rate(ch, v, w, snr_eval),
            _ => unreachable!("evaluation beams are always weights"),
        }
    }
}

/// Draws the shared channel of trial `t`.
pub fn trial_channel(cfg: &ExperimentConfig, grid: &AngleGrid, t: usize) -> Result<ChannelRealization> {
    let mut rng = stream(cfg.master_seed, "channel", &[t as u64]);
    sample_channel(&cfg.geometry, grid, &mut rng, &cfg.channel)
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ResultSet> {
    Ok(run_sweep_logged(cfg)?.0)
}

/// Runs the sweep and also returns every trial record.
pub fn run_sweep_logged(cfg: &ExperimentConfig) -> Result<(ResultSet, Vec<TrialRecord>)> {
    cfg.validate()?;
    let setup = TrainingSetup::new(cfg)?;
    let snr_eval = SnrSpec::linear(cfg.eval_snr_linear)?;
    let channels: Vec<ChannelRealization> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| trial_channel(cfg, &setup.grid, t))
        .collect::<Result<_>>()?;
    let ceiling_rates: Vec<f64> = channels
        .par_iter()
        .map(|ch| setup.rate_at(ch, ch.bs_index, ch.ue_ris_index, &snr_eval))
        .collect::<Result<_>>()?;
    let full_exhaustive = training_overhead(ProtocolKind::Exhaustive, &cfg.geometry, None)?;

    let mut rows = Vec::new();
    let mut log = Vec::new();
    for value in cfg.sweep_points() {
        let (snr_db, budget_override) = match cfg.sweep {
            SweepVariable::SnrDb => (value, None),
            SweepVariable::Pilots => (cfg.fixed_snr_db, Some(value as usize)),
        };
        let snr = if cfg.noiseless {
            SnrSpec::noiseless(10f64.powf(snr_db / 10.0))?
        } else {
            SnrSpec::from_db(snr_db)?
        };
        for spec in &cfg.protocols {
            let label = spec.label();
            let budget = budget_override.or(spec.pilot_budget);
            let records: Vec<TrialRecord> = channels
                .par_iter()
                .enumerate()
                .map(|(t, ch)| {
                    let seed = derive_seed(cfg.master_seed, &label, &[value.to_bits(), t as u64]);
                    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
                    let out = setup.run(spec, ch, &snr, budget, &mut rng)?;
                    Ok(TrialRecord {
                        protocol: label.clone(),
                        sweep_value: value,
                        trial: t,
                        true_bs: ch.bs_index,
                        true_ris: ch.ue_ris_index,
                        est_bs: out.est_bs_index,
                        est_ris: out.est_ris_index,
                        success: out.hits(ch),
                        rate: setup.rate_at(ch, out.est_bs_index, out.est_ris_index, &snr_eval)?,
                        pilots: out.pilots_used,
                    })
                })
                .collect::<Result<_>>()?;
            let pilots = records.iter().map(|r| r.pilots).max().unwrap_or(0);
            rows.push(aggregate(label, cfg.sweep, value, pilots, &records));
            log.extend(records);
        }
        if cfg.include_ceiling {
            let records: Vec<TrialRecord> = channels
                .iter()
                .zip(&ceiling_rates)
                .enumerate()
                .map(|(t, (ch, &rate))| TrialRecord {
                    protocol: "ceiling".into(),
                    sweep_value: value,
                    trial: t,
                    true_bs: ch.bs_index,
                    true_ris: ch.ue_ris_index,
                    est_bs: ch.bs_index,
                    est_ris: ch.ue_ris_index,
                    success: true,
                    rate,
                    pilots: full_exhaustive,
                })
                .collect();
            rows.push(aggregate("ceiling".into(), cfg.sweep, value, full_exhaustive, &records));
            log.extend(records);
        }
    }
    Ok((ResultSet { rows }, log))
}
