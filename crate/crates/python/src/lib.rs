//! Python bindings. Fields cross the boundary as 2-D `float64` numpy arrays
//! of shape `(height, width)`; masks as `bool` arrays of the same shape.

use numpy::ndarray::Array2;
use numpy::{IntoPyArray, PyArray2, PyReadonlyArray2, PyReadonlyArrayDyn, PyUntypedArrayMethods};
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use convexseg::admm::run_segmentation;
use convexseg::synth::{generate, SynthShape, SynthSpec};
use convexseg::{convexity, dct, io, sdf, AdmmConfig, BinaryMask, ForceConfig, Image, LabelSet, Model, ScalarField};

fn to_py(e: convexseg::Error) -> PyErr {
    match e {
        convexseg::Error::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn field_in(a: PyReadonlyArray2<'_, f64>) -> PyResult<ScalarField> {
    let (h, w) = (a.shape()[0], a.shape()[1]);
    let data: Vec<f64> = a.as_array().iter().copied().collect();
    ScalarField::from_vec(w, h, data).map_err(to_py)
}

fn field_out<'py>(py: Python<'py>, f: &ScalarField) -> Bound<'py, PyArray2<f64>> {
    let (w, h) = f.dims();
    Array2::from_shape_vec((h, w), f.as_slice().to_vec()).unwrap().into_pyarray(py)
}

fn mask_in(a: PyReadonlyArray2<'_, bool>) -> BinaryMask {
    let a = a.as_array();
    let (h, w) = a.dim();
    BinaryMask::from_fn(w, h, |m, n| a[[n, m]])
}

fn mask_out<'py>(py: Python<'py>, mask: &BinaryMask) -> Bound<'py, PyArray2<bool>> {
    let (w, h) = mask.dims();
    Array2::from_shape_fn((h, w), |(n, m)| mask.is_object(m, n)).into_pyarray(py)
}

/// Accepts `(h, w)` gray or `(h, w, 3)` color arrays in `[0, 1]`.
fn image_in(a: PyReadonlyArrayDyn<'_, f64>) -> PyResult<Image> {
    let shape = a.shape().to_vec();
    let data: Vec<f64> = a.as_array().iter().copied().collect();
    match shape[..] {
        [h, w] => Image::new(w, h, 1, data).map_err(to_py),
        [h, w, c] => Image::new(w, h, c, data).map_err(to_py),
        _ => Err(PyValueError::new_err(format!("image must be 2-D or 3-D, got shape {shape:?}"))),
    }
}

fn image_out<'py>(py: Python<'py>, img: &Image) -> PyResult<Bound<'py, PyAny>> {
    let (w, h) = img.dims();
    let data = img.data().to_vec();
    if img.channels() == 1 {
        Ok(Array2::from_shape_vec((h, w), data).unwrap().into_pyarray(py).into_any())
    } else {
        let a = numpy::ndarray::Array3::from_shape_vec((h, w, img.channels()), data).unwrap();
        Ok(a.into_pyarray(py).into_any())
    }
}

/// Orthonormal 2-D DCT-II.
#[pyfunction]
fn dct2<'py>(py: Python<'py>, f: PyReadonlyArray2<'_, f64>) -> PyResult<Bound<'py, PyArray2<f64>>> {
    Ok(field_out(py, &dct::dct2_forward(&field_in(f)?).into_inner()))
}

/// Inverse of `dct2`.
#[pyfunction]
fn idct2<'py>(py: Python<'py>, c: PyReadonlyArray2<'_, f64>) -> PyResult<Bound<'py, PyArray2<f64>>> {
    Ok(field_out(py, &dct::dct2_inverse(&dct::SpectralField(field_in(c)?))))
}

/// Solves `(sqrt(rho1) L - sqrt(rho0)) u = rhs` with Neumann boundaries.
#[pyfunction]
fn helmholtz_solve<'py>(
    py: Python<'py>,
    rhs: PyReadonlyArray2<'_, f64>,
    rho1: f64,
    rho0: f64,
) -> PyResult<Bound<'py, PyArray2<f64>>> {
    check_rho(rho1, rho0)?;
    Ok(field_out(py, &dct::helmholtz_solve(&field_in(rhs)?, rho1, rho0)))
}

/// Solves `(rho1 L^2 - 2 sqrt(rho0 rho1) L + rho0) u = rhs`.
#[pyfunction]
fn biharmonic_solve<'py>(
    py: Python<'py>,
    rhs: PyReadonlyArray2<'_, f64>,
    rho1: f64,
    rho0: f64,
) -> PyResult<Bound<'py, PyArray2<f64>>> {
    check_rho(rho1, rho0)?;
    Ok(field_out(py, &dct::biharmonic_solve(&field_in(rhs)?, rho1, rho0)))
}

fn check_rho(rho1: f64, rho0: f64) -> PyResult<()> {
    if rho1 > 0.0 && rho0 > 0.0 && rho1.is_finite() && rho0.is_finite() {
        Ok(())
    } else {
        Err(PyValueError::new_err("rho0 and rho1 must be positive"))
    }
}

/// Signed distance of a boolean mask, negative on the object.
#[pyfunction]
fn sdf_from_mask<'py>(py: Python<'py>, mask: PyReadonlyArray2<'_, bool>) -> PyResult<Bound<'py, PyArray2<f64>>> {
    Ok(field_out(py, &sdf::sdf_from_mask(&mask_in(mask)).map_err(to_py)?))
}

#[pyfunction]
fn mask_from_sdf<'py>(py: Python<'py>, phi: PyReadonlyArray2<'_, f64>) -> PyResult<Bound<'py, PyArray2<bool>>> {
    Ok(mask_out(py, &sdf::mask_from_sdf(&field_in(phi)?)))
}

/// Convexity report of a level set function as a dict.
#[pyfunction]
#[pyo3(signature = (phi, levels = vec![0.0]))]
fn convexity_report<'py>(py: Python<'py>, phi: PyReadonlyArray2<'_, f64>, levels: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = convexity::sublevel_convexity_oracle(&field_in(phi)?, &levels);
    let d = PyDict::new(py);
    d.set_item("max_violation", r.max_violation)?;
    d.set_item("mask_convex", r.mask_convex)?;
    d.set_item("worst_pixel", r.worst_pixel)?;
    d.set_item("sublevel_results", r.sublevel_results)?;
    Ok(d)
}

/// Whether the mask equals its convex hull up to `tol` pixels.
#[pyfunction]
#[pyo3(signature = (mask, tol = convexity::DEFAULT_TOLERANCE_PX))]
fn is_mask_convex(mask: PyReadonlyArray2<'_, bool>, tol: f64) -> PyResult<bool> {
    convexity::is_mask_convex(&mask_in(mask), tol).map_err(to_py)
}

/// Synthetic scene as a dict with `image`, `truth`, `init` (circle
/// `(cx, cy, r)` or rectangle `(x0, y0, x1, y1)`), `landmarks`, `object`
/// and `background`. Pixel coordinates are `(m, n)` = `(column, row)`.
#[pyfunction]
#[pyo3(signature = (shape, width = 128, height = None, sigma = 0.05, seed = 0))]
fn synth<'py>(
    py: Python<'py>,
    shape: &str,
    width: usize,
    height: Option<usize>,
    sigma: f64,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let shape: SynthShape = shape.parse().map_err(to_py)?;
    let scene = generate(&SynthSpec::new(shape, width, height.unwrap_or(width), sigma, seed)).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("image", image_out(py, &scene.image)?)?;
    d.set_item("truth", mask_out(py, &scene.truth))?;
    match scene.init {
        sdf::Shape::Circle { cx, cy, r } => d.set_item("init", (cx, cy, r))?,
        sdf::Shape::Rect { x0, y0, x1, y1 } => d.set_item("init", (x0, y0, x1, y1))?,
    }
    d.set_item("landmarks", scene.labels.landmarks)?;
    d.set_item("object", scene.labels.object)?;
    d.set_item("background", scene.labels.background)?;
    Ok(d)
}

/// Outcome of `segment`.
#[pyclass(frozen)]
struct Segmentation {
    inner: convexseg::SegResult,
}

#[pymethods]
impl Segmentation {
    #[getter]
    fn phi<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        field_out(py, &self.inner.phi)
    }

    #[getter]
    fn mask<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<bool>> {
        mask_out(py, &self.inner.mask)
    }

    /// Object probability used by the data term.
    #[getter]
    fn probability<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        field_out(py, &self.inner.probability)
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations()
    }

    /// One dict per iteration.
    #[getter]
    fn history<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .history
            .iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("iter", r.iter)?;
                d.set_item("energy", r.energy)?;
                d.set_item("res_zeta", r.res_zeta)?;
                d.set_item("res_xi", r.res_xi)?;
                d.set_item("convexity_violation", r.convexity_violation)?;
                d.set_item("dice", r.dice)?;
                Ok(d)
            })
            .collect()
    }

    fn diagnostics_csv(&self) -> String {
        self.inner.diagnostics_csv()
    }

    fn __repr__(&self) -> String {
        let (w, h) = self.inner.phi.dims();
        format!("Segmentation({w}x{h}, {} iterations)", self.inner.iterations())
    }
}

/// Runs the ADMM segmentation. `init` is a boolean mask; without it a
/// centered circle is used. Remaining keyword arguments set `rho0`, `rho1`,
/// `iters`, `inner_steps`, `early_stop` and the data term parameters
/// (`w0`, `w1`, `alpha`, `beta`, `eps`, `theta`, `a1`, `a2`, `eps_p`, `lambda`).
#[pyfunction]
#[pyo3(signature = (image, model = "GMMC", init = None, landmarks = None, object = None, background = None, truth = None, **params))]
#[allow(clippy::too_many_arguments)]
fn segment(
    py: Python<'_>,
    image: PyReadonlyArrayDyn<'_, f64>,
    model: &str,
    init: Option<PyReadonlyArray2<'_, bool>>,
    landmarks: Option<Vec<(usize, usize)>>,
    object: Option<Vec<(usize, usize)>>,
    background: Option<Vec<(usize, usize)>>,
    truth: Option<PyReadonlyArray2<'_, bool>>,
    params: Option<&Bound<'_, PyDict>>,
) -> PyResult<Segmentation> {
    let img = image_in(image)?;
    let (w, h) = img.dims();
    let model: Model = model.parse().map_err(to_py)?;
    let mut cfg = AdmmConfig::new(model);
    let mut force = ForceConfig::default();
    if let Some(params) = params {
        for (k, v) in params.iter() {
            let key: String = k.extract()?;
            match key.as_str() {
                "rho0" => cfg.rho0 = v.extract()?,
                "rho1" => cfg.rho1 = v.extract()?,
                "iters" => cfg.num_iters = v.extract()?,
                "inner_steps" => cfg.inner_steps = v.extract()?,
                "early_stop" => cfg.early_stop = v.extract()?,
                "w0" => force.w0 = v.extract()?,
                "w1" => force.w1 = v.extract()?,
                "alpha" => force.alpha = v.extract()?,
                "beta" => force.beta = v.extract()?,
                "eps" => force.eps = v.extract()?,
                "theta" => force.theta = v.extract()?,
                "a1" => force.a1 = v.extract()?,
                "a2" => force.a2 = v.extract()?,
                "eps_p" => force.eps_p = v.extract()?,
                "lambda" => force.lambda = v.extract()?,
                _ => return Err(PyValueError::new_err(format!("unknown parameter `{key}`"))),
            }
        }
    }
    cfg.validate().map_err(to_py)?;
    force.validate().map_err(to_py)?;

    let init = match init {
        Some(a) => mask_in(a),
        None => sdf::Shape::Circle {
            cx: (w as f64 - 1.0) / 2.0,
            cy: (h as f64 - 1.0) / 2.0,
            r: 0.4 * w.min(h) as f64,
        }
        .rasterize(w, h),
    };
    let labels = LabelSet {
        landmarks: landmarks.unwrap_or_default(),
        object: object.unwrap_or_default(),
        background: background.unwrap_or_default(),
    };
    let truth = truth.map(mask_in);
    let inner = py
        .detach(|| run_segmentation(&img, &init, &labels, &cfg, &force, truth.as_ref()))
        .map_err(to_py)?;
    Ok(Segmentation { inner })
}

#[pyfunction]
fn read_image<'py>(py: Python<'py>, path: &str) -> PyResult<Bound<'py, PyAny>> {
    image_out(py, &io::read_image(path).map_err(to_py)?)
}

#[pyfunction]
fn read_phi<'py>(py: Python<'py>, path: &str) -> PyResult<Bound<'py, PyArray2<f64>>> {
    Ok(field_out(py, &io::read_phi(path).map_err(to_py)?))
}

#[pyfunction]
fn write_phi(path: &str, phi: PyReadonlyArray2<'_, f64>) -> PyResult<()> {
    io::write_phi(path, &field_in(phi)?).map_err(to_py)
}

#[pyfunction]
fn read_mask<'py>(py: Python<'py>, path: &str) -> PyResult<Bound<'py, PyArray2<bool>>> {
    Ok(mask_out(py, &io::read_mask(path).map_err(to_py)?))
}

#[pyfunction]
fn write_mask(path: &str, mask: PyReadonlyArray2<'_, bool>) -> PyResult<()> {
    io::write_mask(path, &mask_in(mask)).map_err(to_py)
}

#[pymodule]
fn convexseg_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Segmentation>()?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(dct2, m)?)?;
    m.add_function(wrap_pyfunction!(idct2, m)?)?;
    m.add_function(wrap_pyfunction!(helmholtz_solve, m)?)?;
    m.add_function(wrap_pyfunction!(biharmonic_solve, m)?)?;
    m.add_function(wrap_pyfunction!(sdf_from_mask, m)?)?;
    m.add_function(wrap_pyfunction!(mask_from_sdf, m)?)?;
    m.add_function(wrap_pyfunction!(convexity_report, m)?)?;
    m.add_function(wrap_pyfunction!(is_mask_convex, m)?)?;
    m.add_function(wrap_pyfunction!(read_image, m)?)?;
    m.add_function(wrap_pyfunction!(read_phi, m)?)?;
    m.add_function(wrap_pyfunction!(write_phi, m)?)?;
    m.add_function(wrap_pyfunction!(read_mask, m)?)?;
    m.add_function(wrap_pyfunction!(write_mask, m)?)?;
    Ok(())
}
