//! Python bindings. Structured results (codebooks, sweep results) cross the
//! boundary as JSON and come out as plain dicts and lists.

use pyo3::exceptions::{PyTypeError, PyValueError};
use pyo3::prelude::*;

use cbt_core::array_model::{upa_response, ula_response, AngleGrid};
use cbt_core::block_code::{self, BitString, DecodeMode, DecodeStatus};
use cbt_core::codebook::{build_codebooks, GsConfig, RisSynthesis};
use cbt_core::experiments::{codebook_document, run_sweep, ExperimentConfig};
use cbt_core::training_sim::{self, ProtocolKind};

fn err(e: cbt_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_python<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn bits(v: Vec<u8>) -> PyResult<BitString> {
    BitString::new(v).map_err(err)
}

fn to_list(b: &BitString) -> Vec<u32> {
    b.bits().iter().map(|&x| u32::from(x)).collect()
}

fn decode_mode(name: &str) -> PyResult<DecodeMode> {
    match name {
        "none" => Ok(DecodeMode::None),
        "one_bit" => Ok(DecodeMode::OneBit),
        "decoupled_two_bit" => Ok(DecodeMode::DecoupledTwoBit),
        other => Err(PyValueError::new_err(format!(
            "unknown decode mode '{other}' (none, one_bit, decoupled_two_bit)"
        ))),
    }
}

#[pyclass(name = "ArrayGeometry", frozen, from_py_object)]
#[derive(Clone)]
struct PyGeometry(cbt_core::array_model::ArrayGeometry);

#[pymethods]
impl PyGeometry {
    #[new]
    #[pyo3(signature = (n_bs, n_ris_rows, n_ris_cols, spacing_over_wavelength = 0.5))]
    fn new(n_bs: usize, n_ris_rows: usize, n_ris_cols: usize, spacing_over_wavelength: f64) -> PyResult<Self> {
        let g = cbt_core::array_model::ArrayGeometry::new(n_bs, n_ris_rows, n_ris_cols)
            .and_then(|g| g.with_spacing(spacing_over_wavelength))
            .map_err(err)?;
        Ok(Self(g))
    }

    #[getter]
    fn n_bs(&self) -> usize {
        self.0.n_bs
    }

    #[getter]
    fn n_ris_rows(&self) -> usize {
        self.0.n_ris_rows
    }

    #[getter]
    fn n_ris_cols(&self) -> usize {
        self.0.n_ris_cols
    }

    #[getter]
    fn n_ris(&self) -> usize {
        self.0.n_ris()
    }

    /// Grid spatial frequencies: `(bs_sines, ris_u, ris_w)`.
    fn grid(&self) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>)> {
        let g = AngleGrid::new(&self.0).map_err(err)?;
        Ok((g.bs_sines, g.ris_u, g.ris_w))
    }

    fn __repr__(&self) -> String {
        format!(
            "ArrayGeometry(n_bs={}, n_ris_rows={}, n_ris_cols={})",
            self.0.n_bs, self.0.n_ris_rows, self.0.n_ris_cols
        )
    }
}

#[pyclass(name = "BlockCode", frozen)]
struct PyBlockCode(block_code::BlockCode);

#[pymethods]
impl PyBlockCode {
    /// Shortened Hamming code with `k` information bits.
    #[staticmethod]
    fn plain(k: usize) -> PyResult<Self> {
        block_code::build_plain_code(k).map(Self).map_err(err)
    }

    /// Dimension-reduced RIS code with a block-diagonal `Q`.
    #[staticmethod]
    fn reduced(k1: usize, k2: usize) -> PyResult<Self> {
        block_code::build_reduced_code(k1, k2).map(Self).map_err(err)
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k
    }

    #[getter]
    fn n(&self) -> usize {
        self.0.n
    }

    #[getter]
    fn q(&self) -> Vec<Vec<u32>> {
        (0..self.0.q.nrows())
            .map(|i| self.0.q.row(i).iter().map(|&x| u32::from(x)).collect())
            .collect()
    }

    fn min_distance(&self) -> PyResult<usize> {
        block_code::min_distance(&self.0).map_err(err)
    }

    fn encode(&self, info: Vec<u8>) -> PyResult<Vec<u32>> {
        Ok(to_list(&self.0.encode(&bits(info)?).map_err(err)?))
    }

    fn syndrome(&self, word: Vec<u8>) -> PyResult<Vec<u32>> {
        Ok(to_list(&self.0.syndrome(&bits(word)?).map_err(err)?))
    }

    /// Returns `(info_bits, status, corrected_positions)`.
    #[pyo3(signature = (word, mode = "one_bit"))]
    fn decode(&self, word: Vec<u8>, mode: &str) -> PyResult<(Vec<u32>, &'static str, Vec<usize>)> {
        let report = self.0.decode(&bits(word)?, decode_mode(mode)?).map_err(err)?;
        let status = match report.status {
            DecodeStatus::Clean => "clean",
            DecodeStatus::Corrected => "corrected",
            DecodeStatus::Uncorrectable => "uncorrectable",
        };
        Ok((to_list(&report.info), status, report.corrected_positions))
    }
}

/// BS and RIS codes used by coded training for this geometry.
#[pyfunction]
fn default_codes(geometry: &PyGeometry) -> PyResult<(PyBlockCode, PyBlockCode)> {
    let (t, r) = training_sim::default_codes(&geometry.0).map_err(err)?;
    Ok((PyBlockCode(t), PyBlockCode(r)))
}

#[pyfunction]
#[pyo3(signature = (n, sin_phi, spacing = 0.5))]
fn ula_steering(n: usize, sin_phi: f64, spacing: f64) -> Vec<num_complex::Complex64> {
    ula_response(n, sin_phi, spacing).iter().copied().collect()
}

#[pyfunction]
#[pyo3(signature = (n1, n2, u, w, spacing = 0.5))]
fn upa_steering(n1: usize, n2: usize, u: f64, w: f64, spacing: f64) -> Vec<num_complex::Complex64> {
    upa_response(n1, n2, u, w, spacing).iter().copied().collect()
}

/// Pilot overhead of a full run: `"exhaustive"`, `"hierarchical"` or `"coded"`.
#[pyfunction]
fn training_overhead(kind: &str, geometry: &PyGeometry) -> PyResult<usize> {
    let kind = match kind {
        "exhaustive" => ProtocolKind::Exhaustive,
        "hierarchical" => ProtocolKind::Hierarchical,
        "coded" => ProtocolKind::Coded,
        other => return Err(PyValueError::new_err(format!("unknown protocol '{other}'"))),
    };
    training_sim::training_overhead(kind, &geometry.0, None).map_err(err)
}

/// Designs both codebooks and returns them as a dict.
#[pyfunction]
#[pyo3(signature = (geometry, seed = 0, delta = 0.3, k_iter = 100, synthesis = "kronecker"))]
fn design_codebooks<'py>(
    py: Python<'py>,
    geometry: &PyGeometry,
    seed: u64,
    delta: f64,
    k_iter: usize,
    synthesis: &str,
) -> PyResult<Bound<'py, PyAny>> {
    let synthesis = match synthesis {
        "kronecker" => RisSynthesis::Kronecker,
        "planar" => RisSynthesis::Planar,
        other => return Err(PyValueError::new_err(format!("unknown synthesis '{other}'"))),
    };
    let g = geometry.0;
    let cfg = GsConfig {
        delta,
        k_iter,
        target_amplitude: None,
        seed,
    };
    let doc = py
        .detach(|| -> cbt_core::Result<_> {
            let grid = AngleGrid::new(&g)?;
            let (t, r) = training_sim::default_codes(&g)?;
            let (bs, ris) = build_codebooks(&t, &r, &grid, &g, &cfg, synthesis)?;
            Ok(codebook_document(&g, &cfg, synthesis, &bs, &ris))
        })
        .map_err(err)?;
    to_python(py, &doc)
}

/// Named preset (`desk_snr`, `desk_pilots`, `full_snr`, `full_pilots`) as a dict.
#[pyfunction]
fn preset_config<'py>(py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyAny>> {
    let cfg = match name {
        "desk_snr" => ExperimentConfig::desk_snr(),
        "desk_pilots" => ExperimentConfig::desk_pilots(),
        "full_snr" => ExperimentConfig::full_snr(),
        "full_pilots" => ExperimentConfig::full_pilots(),
        other => return Err(PyValueError::new_err(format!("unknown preset '{other}'"))),
    };
    to_python(py, &cfg)
}

/// Runs a sweep. `config` is a dict or a JSON string; returns the result rows.
#[pyfunction]
fn sweep<'py>(py: Python<'py>, config: &Bound<'py, PyAny>) -> PyResult<Bound<'py, PyAny>> {
    let text: String = if let Ok(s) = config.extract::<String>() {
        s
    } else if config.is_instance_of::<pyo3::types::PyDict>() {
        py.import("json")?.call_method1("dumps", (config,))?.extract()?
    } else {
        return Err(PyTypeError::new_err("config must be a dict or a JSON string"));
    };
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| PyValueError::new_err(format!("invalid configuration: {e}")))?;
    let rs = py.detach(|| run_sweep(&cfg)).map_err(err)?;
    to_python(py, &rs.rows)
}

#[pymodule]
fn cbt(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGeometry>()?;
    m.add_class::<PyBlockCode>()?;
    m.add_function(wrap_pyfunction!(default_codes, m)?)?;
    m.add_function(wrap_pyfunction!(ula_steering, m)?)?;
    m.add_function(wrap_pyfunction!(upa_steering, m)?)?;
    m.add_function(wrap_pyfunction!(training_overhead, m)?)?;
    m.add_function(wrap_pyfunction!(design_codebooks, m)?)?;
    m.add_function(wrap_pyfunction!(preset_config, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
