//! Python bindings. Reports come back as plain dicts (decoded from the same JSON
//! the command-line tool prints).

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::Serialize;

use twoiso::model::{self, CanonicalInvariant, SplitStrategy};
use twoiso::operator::{self, SpectralData};
use twoiso::tree::{self, BranchingDegrees, TreeSkeleton};
use twoiso::{classifier, dual, xi};

fn err(e: twoiso::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(json_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// A rooted tree skeleton; leaves continue as infinite rays.
#[pyclass(frozen, skip_from_py_object, name = "Tree", module = "twoiso")]
#[derive(Clone)]
pub struct PyTree(pub TreeSkeleton);

#[pymethods]
impl PyTree {
    #[new]
    fn new(root: String, edges: Vec<(String, String)>, skeleton_depth: usize) -> PyResult<Self> {
        TreeSkeleton::new(root, &edges, skeleton_depth).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        TreeSkeleton::from_json(text).map(Self).map_err(err)
    }

    #[staticmethod]
    fn eta_kappa(eta: usize, kappa: usize) -> PyResult<Self> {
        tree::make_eta_kappa(eta, kappa).map(Self).map_err(err)
    }

    /// The two non-isomorphic trees with branching degrees (1, 2).
    #[staticmethod]
    fn example_pair() -> (Self, Self) {
        let (a, b) = tree::example_pair_1_2();
        (Self(a), Self(b))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }

    #[getter]
    fn root(&self) -> String {
        self.0.root().to_string()
    }

    #[getter]
    fn skeleton_depth(&self) -> usize {
        self.0.skeleton_depth()
    }

    fn generation(&self, n: usize) -> Vec<String> {
        self.0.generation(n)
    }

    /// [j_1, j_2, ...] with trailing zeros removed.
    fn branching_degrees(&self) -> Vec<usize> {
        self.0.all_branching_degrees().dense().to_vec()
    }

    fn canonical_form(&self) -> String {
        self.0.canonical_form()
    }

    fn is_isomorphic(&self, other: &PyTree) -> bool {
        tree::graph_isomorphic(&self.0, &other.0)
    }

    fn __repr__(&self) -> String {
        format!("Tree({})", self.0.canonical_form())
    }
}

/// One of the supported operators: tree shift, scalar shift, diagonal operator shift or Brownian shift.
#[pyclass(frozen, skip_from_py_object, name = "ShiftSpec", module = "twoiso")]
#[derive(Clone)]
pub struct PyShiftSpec(pub operator::ShiftSpec);

#[pymethods]
impl PyShiftSpec {
    #[staticmethod]
    fn scalar_xi(x: f64) -> PyResult<Self> {
        operator::ShiftSpec::scalar_xi(x).map(Self).map_err(err)
    }

    #[staticmethod]
    fn brownian(sigma: f64) -> PyResult<Self> {
        operator::ShiftSpec::brownian(sigma).map(Self).map_err(err)
    }

    /// Diagonal operator valued shift from atoms [(lambda, multiplicity), ...].
    #[staticmethod]
    fn diagonal(atoms: Vec<(f64, usize)>) -> PyResult<Self> {
        let s = SpectralData::new(atoms).map_err(err)?;
        model::spectral_to_opshift(&s).map(Self).map_err(err)
    }

    /// 2-isometric weights on `tree` with ‖S e_root‖ = x; random splits when `seed` is given.
    #[staticmethod]
    #[pyo3(signature = (tree, x, seed = None))]
    fn uwrem(tree: &PyTree, x: f64, seed: Option<u64>) -> PyResult<Self> {
        let strategy = seed.map_or(SplitStrategy::Equal, |seed| SplitStrategy::Random { seed });
        model::build_weights_uwrem(&tree.0, x, strategy).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec: operator::ShiftSpec = serde_json::from_str(text).map_err(json_err)?;
        spec.validate().map_err(err)?;
        Ok(Self(spec))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }

    /// Dense matrix of the depth-`depth` truncation as rows of complex numbers, with basis labels.
    fn truncate(&self, depth: usize) -> PyResult<(Vec<String>, Vec<Vec<Complex64>>)> {
        let t = operator::truncate(&self.0, depth).map_err(err)?;
        let rows = (0..t.dim()).map(|r| (0..t.dim()).map(|k| t.matrix[(r, k)]).collect()).collect();
        Ok((t.labels.iter().map(|b| b.label.clone()).collect(), rows))
    }

    #[pyo3(signature = (depth = 10, tol = operator::DEFAULT_TOL))]
    fn property_report<'py>(&self, py: Python<'py>, depth: usize, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &operator::property_report(&self.0, depth, tol).map_err(err)?)
    }

    fn power_gram_spectrum(&self, i: usize, depth: usize) -> PyResult<Vec<f64>> {
        operator::power_gram_spectrum(&self.0, i, depth).map_err(err)
    }

    fn decompose(&self) -> PyResult<PyInvariant> {
        model::decompose(&self.0).map(PyInvariant).map_err(err)
    }

    fn multicyclicity_order(&self) -> PyResult<usize> {
        classifier::multicyclicity_order(&self.0).map_err(err)
    }

    #[pyo3(signature = (depth = 10))]
    fn dual_report<'py>(&self, py: Python<'py>, depth: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &dual::classify_c_classes(&self.0, depth).map_err(err)?)
    }

    fn cn_bound<'py>(&self, py: Python<'py>, n: usize, depth: usize) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &dual::cn_bound(&self.0, n, depth).map_err(err)?)
    }

    fn cn_limit(&self) -> PyResult<f64> {
        dual::cn_limit(&self.0).map_err(err)
    }

    fn __repr__(&self) -> String {
        match self.to_json() {
            Ok(s) if s.len() <= 200 => format!("ShiftSpec({s})"),
            _ => "ShiftSpec(...)".into(),
        }
    }
}

/// The complete unitary invariant (x, j).
#[pyclass(frozen, skip_from_py_object, name = "Invariant", module = "twoiso")]
#[derive(Clone)]
pub struct PyInvariant(pub CanonicalInvariant);

#[pymethods]
impl PyInvariant {
    #[new]
    fn new(x: f64, j: Vec<usize>) -> PyResult<Self> {
        CanonicalInvariant::new(x, BranchingDegrees::from_dense(j)).map(Self).map_err(err)
    }

    #[getter]
    fn x(&self) -> f64 {
        self.0.x
    }

    #[getter]
    fn j(&self) -> Vec<usize> {
        self.0.j.dense().to_vec()
    }

    #[getter]
    fn is_isometric(&self) -> bool {
        self.0.is_isometric
    }

    fn atoms(&self) -> Vec<f64> {
        self.0.atoms()
    }

    fn predicted_gram_spectrum(&self, i: usize) -> Vec<f64> {
        self.0.predicted_gram_spectrum(i)
    }

    fn synthesize(&self) -> PyResult<(PyTree, PyShiftSpec)> {
        let (t, s) = model::synthesize_from_invariant(self.0.x, &self.0.j).map_err(err)?;
        Ok((PyTree(t), PyShiftSpec(s)))
    }

    /// Equivalence verdict as a dict with keys `equivalent`, `reason` and possibly `witness`.
    #[pyo3(signature = (other, tol = operator::DEFAULT_TOL))]
    fn equivalent<'py>(&self, py: Python<'py>, other: &PyInvariant, tol: f64) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &classifier::equiv_tree_shifts(&self.0, &other.0, tol))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(json_err)
    }

    fn __repr__(&self) -> String {
        format!("Invariant(x={}, j={:?})", self.0.x, self.0.j.dense())
    }
}

#[pyfunction]
fn xi_eval(n: usize, x: f64) -> PyResult<f64> {
    xi::xi_eval(n, x).map_err(err)
}

#[pyfunction]
fn xi_cumulative(n: usize, x: f64) -> PyResult<f64> {
    xi::xi_cumulative(n, x).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (a, b, tol = operator::DEFAULT_TOL))]
fn equiv_diagonal<'py>(py: Python<'py>, a: Vec<(f64, usize)>, b: Vec<(f64, usize)>, tol: f64) -> PyResult<Bound<'py, PyAny>> {
    let (a, b) = (SpectralData::new(a).map_err(err)?, SpectralData::new(b).map_err(err)?);
    to_py(py, &classifier::equiv_diagonal_opshifts(&a, &b, tol))
}

#[pymodule]
#[pyo3(name = "twoiso")]
pub fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTree>()?;
    m.add_class::<PyShiftSpec>()?;
    m.add_class::<PyInvariant>()?;
    m.add_function(wrap_pyfunction!(xi_eval, m)?)?;
    m.add_function(wrap_pyfunction!(xi_cumulative, m)?)?;
    m.add_function(wrap_pyfunction!(equiv_diagonal, m)?)?;
    Ok(())
}
