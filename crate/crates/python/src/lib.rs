//! Python bindings. Depth maps cross the boundary as flat row-major lists.

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use vnlkit_core::curriculum::{self, CurriculumConfig, DataPart};
use vnlkit_core::eval::{self, AlignMode, OrdinalLabel, OrdinalPair};
use vnlkit_core::io::pfm;
use vnlkit_core::losses;
use vnlkit_core::sphere::{self, NoiseModel, SphereExpConfig};
use vnlkit_core::surface_normal::{self, NormalField};
use vnlkit_core::{self as core, SamplingConstraints};

create_exception!(vnlkit, VnlkitError, PyException);

fn err(e: core::Error) -> PyErr {
    VnlkitError::new_err(format!("{}: {e}", e.kind()))
}

type Vec3 = (f64, f64, f64);

fn tuple(p: &core::Point3) -> Vec3 {
    (p.x, p.y, p.z)
}

#[pyclass(name = "Camera", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct Camera(core::CameraIntrinsics);

#[pymethods]
impl Camera {
    #[new]
    fn new(fx: f64, fy: f64, u0: f64, v0: f64) -> PyResult<Self> {
        core::CameraIntrinsics::new(fx, fy, u0, v0).map(Self).map_err(err)
    }

    #[getter]
    fn fx(&self) -> f64 {
        self.0.fx
    }

    #[getter]
    fn fy(&self) -> f64 {
        self.0.fy
    }

    #[getter]
    fn u0(&self) -> f64 {
        self.0.u0
    }

    #[getter]
    fn v0(&self) -> f64 {
        self.0.v0
    }

    fn __repr__(&self) -> String {
        format!("Camera(fx={}, fy={}, u0={}, v0={})", self.0.fx, self.0.fy, self.0.u0, self.0.v0)
    }
}

/// Depth map; non-finite and non-positive values are invalid.
#[pyclass(name = "Depth", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Depth(core::DepthMap);

#[pymethods]
impl Depth {
    #[new]
    fn new(width: usize, height: usize, data: Vec<f64>) -> PyResult<Self> {
        core::DepthMap::new(width, height, data).map(Self).map_err(err)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn data(&self) -> Vec<f64> {
        self.0.data().to_vec()
    }

    #[getter]
    fn mask(&self) -> Vec<bool> {
        self.0.mask().to_vec()
    }

    #[getter]
    fn valid_count(&self) -> usize {
        self.0.valid_count()
    }

    fn scaled(&self, s: f64) -> PyResult<Self> {
        self.0.scaled(s).map(Self).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("Depth({}x{}, {} valid)", self.0.width(), self.0.height(), self.0.valid_count())
    }
}

/// 3D points of the valid pixels, in row-major pixel order.
#[pyfunction]
fn back_project(depth: &Depth, cam: &Camera) -> PyResult<Vec<Vec3>> {
    let cloud = core::back_project(&depth.0, &cam.0).map_err(err)?;
    Ok(cloud.points.iter().map(tuple).collect())
}

/// Returns `(value, n_kept, grad)` with `grad` the derivative for every pixel.
#[pyfunction]
#[pyo3(signature = (pred, gt, cam, n_samples=100_000, seed=0, alpha=170.0, beta=10.0, theta=0.1, hem=losses::DEFAULT_HEM_FRACTION))]
#[allow(clippy::too_many_arguments)]
fn vn_loss(
    pred: &Depth,
    gt: &Depth,
    cam: &Camera,
    n_samples: usize,
    seed: u64,
    alpha: f64,
    beta: f64,
    theta: f64,
    hem: f64,
) -> PyResult<(f64, usize, Vec<f64>)> {
    let c = SamplingConstraints { alpha, beta, theta, n_samples, seed, ..Default::default() };
    let (loss, grad) = losses::vn_loss(&pred.0, &gt.0, &cam.0, &c, hem).map_err(err)?;
    Ok((loss.value, loss.n_terms, grad.grad))
}

/// Returns `(value, scale, shift, grad)`.
#[pyfunction]
fn ssi_loss(pred: &Depth, gt: &Depth) -> PyResult<(f64, f64, f64, Vec<f64>)> {
    let (loss, affine, grad) = losses::ssi_loss(&pred.0, &gt.0).map_err(err)?;
    Ok((loss.value, affine.scale, affine.shift, grad.grad))
}

fn align_mode(mode: &str) -> PyResult<AlignMode> {
    match mode {
        "affine" => Ok(AlignMode::Affine),
        "scale" => Ok(AlignMode::Scale),
        "none" => Ok(AlignMode::None),
        other => Err(VnlkitError::new_err(format!("unknown alignment {other:?}"))),
    }
}

/// Returns `(scale, shift, aligned, n_nonpositive)`.
#[pyfunction]
#[pyo3(signature = (pred, gt, mode="affine"))]
fn align(pred: &Depth, gt: &Depth, mode: &str) -> PyResult<(f64, f64, Depth, usize)> {
    let al = eval::align(&pred.0, &gt.0, align_mode(mode)?).map_err(err)?;
    Ok((al.params.scale, al.params.shift, Depth(al.aligned), al.n_nonpositive))
}

#[pyfunction]
fn depth_metrics<'py>(py: Python<'py>, pred: &Depth, gt: &Depth) -> PyResult<Bound<'py, PyDict>> {
    let m = eval::depth_metrics(&pred.0, &gt.0).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("abs_rel", m.abs_rel)?;
    d.set_item("log10", m.log10)?;
    d.set_item("rms", m.rms)?;
    d.set_item("rms_log", m.rms_log)?;
    d.set_item("delta1", m.delta1)?;
    d.set_item("delta2", m.delta2)?;
    d.set_item("delta3", m.delta3)?;
    d.set_item("n_pixels", m.n_pixels)?;
    Ok(d)
}

/// Returns `(normals, valid)`; invalid pixels carry a zero vector.
#[pyfunction]
fn surface_normals(depth: &Depth, cam: &Camera, window: usize) -> PyResult<(Vec<Vec3>, Vec<bool>)> {
    let f = surface_normal::surface_normals(&depth.0, &cam.0, window).map_err(err)?;
    Ok((f.normals.iter().map(tuple).collect(), f.valid))
}

/// Scores normals recovered from `depth` against per-pixel reference normals.
#[pyfunction]
fn eval_normals<'py>(
    py: Python<'py>,
    depth: &Depth,
    cam: &Camera,
    gt_normals: Vec<Vec3>,
    window: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let pred = surface_normal::surface_normals(&depth.0, &cam.0, window).map_err(err)?;
    let vectors = gt_normals.into_iter().map(|(x, y, z)| core::Point3::new(x, y, z)).collect();
    let gt = NormalField::from_vectors(depth.0.width(), depth.0.height(), vectors).map_err(err)?;
    let m = surface_normal::normal_metrics(&pred, &gt).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("mean_deg", m.mean_deg)?;
    d.set_item("median_deg", m.median_deg)?;
    d.set_item("pct_11_2", m.pct_11_2)?;
    d.set_item("pct_22_5", m.pct_22_5)?;
    d.set_item("pct_30", m.pct_30)?;
    d.set_item("n_pixels", m.n_pixels)?;
    Ok(d)
}

#[pyfunction]
fn window_study(depth: &Depth, cam: &Camera, windows: Vec<usize>) -> PyResult<Vec<Vec<f64>>> {
    let t = surface_normal::window_study(&depth.0, &cam.0, &windows).map_err(err)?;
    Ok(t.mean_deg)
}

/// Pairs are `(idx_a, idx_b, weight, label)` with label `"<"`, `">"` or `"="`.
#[pyfunction]
#[pyo3(signature = (depth, pairs, tau=eval::DEFAULT_WHDR_TAU))]
fn whdr(depth: &Depth, pairs: Vec<(usize, usize, f64, String)>, tau: f64) -> PyResult<f64> {
    let pairs = pairs
        .into_iter()
        .map(|(a, b, w, l)| {
            let label = OrdinalLabel::from_symbol(&l).ok_or_else(|| VnlkitError::new_err(format!("bad label {l:?}")))?;
            Ok(OrdinalPair { idx_a: a, idx_b: b, weight: w, label })
        })
        .collect::<PyResult<Vec<_>>>()?;
    eval::whdr(&depth.0, &pairs, tau).map_err(err)
}

#[pyfunction]
fn pacing(k: usize, p: f64, n: usize) -> usize {
    curriculum::pacing(k, p, n)
}

/// Each part is a list of difficulty scores. Returns one dict per iteration
/// with sample indices into the original part lists.
#[pyfunction]
#[pyo3(signature = (parts, p, step_length, batch_per_part, total_iterations, seed=0))]
fn build_schedule<'py>(
    py: Python<'py>,
    parts: Vec<Vec<f64>>,
    p: Vec<f64>,
    step_length: usize,
    batch_per_part: usize,
    total_iterations: usize,
    seed: u64,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let parts = parts
        .into_iter()
        .enumerate()
        .map(|(j, s)| DataPart::new(format!("part{j}"), s))
        .collect::<core::Result<Vec<_>>>()
        .map_err(err)?;
    let cfg = CurriculumConfig { p, step_length, batch_per_part, total_iterations, seed };
    let sched = curriculum::build_schedule(&parts, &cfg).map_err(err)?;
    sched
        .iterations
        .into_iter()
        .map(|it| {
            let d = PyDict::new(py);
            d.set_item("iter", it.iter)?;
            d.set_item("step", it.step)?;
            d.set_item("subset_sizes", it.subset_sizes)?;
            d.set_item("batch", it.batch)?;
            Ok(d)
        })
        .collect()
}

/// Returns `(sigma, vn_mean_deg, sn_mean_deg)` rows sorted by sigma.
#[pyfunction]
#[pyo3(signature = (sigmas, seed=0, n_points=50_000, n_vn_groups=100_000, n_sn_points=100_000, knn=9, theta=0.5, radius=1.0, radial=false))]
#[allow(clippy::too_many_arguments)]
fn sphere_experiment(
    sigmas: Vec<f64>,
    seed: u64,
    n_points: usize,
    n_vn_groups: usize,
    n_sn_points: usize,
    knn: usize,
    theta: f64,
    radius: f64,
    radial: bool,
) -> PyResult<Vec<(f64, f64, f64)>> {
    let defaults = SphereExpConfig::default();
    let cfg = SphereExpConfig {
        n_points,
        n_vn_groups,
        n_sn_points,
        sigmas,
        knn,
        vn_constraints: SamplingConstraints { theta, n_samples: n_vn_groups, ..defaults.vn_constraints },
        seed,
        radius,
        noise: if radial { NoiseModel::Radial } else { NoiseModel::Isotropic },
    };
    let rows = sphere::sphere_experiment(&cfg).map_err(err)?;
    Ok(rows.iter().map(|r| (r.sigma, r.vn_mean_deg, r.sn_mean_deg)).collect())
}

#[pyfunction]
fn read_depth_pfm(path: &str) -> PyResult<Depth> {
    pfm::read_depth_pfm(path).map(Depth).map_err(err)
}

#[pyfunction]
fn write_depth_pfm(path: &str, depth: &Depth) -> PyResult<()> {
    pfm::write_depth_pfm(path, &depth.0).map_err(err)
}

#[pymodule]
fn vnlkit(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("VnlkitError", m.py().get_type::<VnlkitError>())?;
    m.add_class::<Camera>()?;
    m.add_class::<Depth>()?;
    m.add_function(wrap_pyfunction!(back_project, m)?)?;
    m.add_function(wrap_pyfunction!(vn_loss, m)?)?;
    m.add_function(wrap_pyfunction!(ssi_loss, m)?)?;
    m.add_function(wrap_pyfunction!(align, m)?)?;
    m.add_function(wrap_pyfunction!(depth_metrics, m)?)?;
    m.add_function(wrap_pyfunction!(surface_normals, m)?)?;
    m.add_function(wrap_pyfunction!(eval_normals, m)?)?;
    m.add_function(wrap_pyfunction!(window_study, m)?)?;
    m.add_function(wrap_pyfunction!(whdr, m)?)?;
    m.add_function(wrap_pyfunction!(pacing, m)?)?;
    m.add_function(wrap_pyfunction!(build_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(sphere_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(read_depth_pfm, m)?)?;
    m.add_function(wrap_pyfunction!(write_depth_pfm, m)?)?;
    Ok(())
}
