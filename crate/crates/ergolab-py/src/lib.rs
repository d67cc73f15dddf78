//! Python bindings for the averaging laboratory: trees, points,
//! observables, chains, systems, forward rotation averages, tilings, and
//! the TOML-driven experiment runner.
//!
//! The module mirrors the Rust API closely; composite results come back as
//! plain dictionaries so they drop straight into pandas or json.

// The pyo3 attribute macros expand to error conversions clippy flags as
// self-to-self.
#![allow(clippy::useless_conversion)]

use std::cell::RefCell;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use ergolab_core::averaging::{
    cesaro_backward, forward_ball_report, forward_group_average, tree_weight, weighted_average,
    BranchPolicy,
};
use ergolab_core::harness::{self, ExperimentConfig};
use ergolab_core::markov::{MarkovChain, StochasticMatrix};
use ergolab_core::systems::{
    catalog_ids, system_by_id, CircleRotationAction, Observable, Point, System,
};
use ergolab_core::tiling::{greedy_tile, tiling_parameter_sweep, TileAssignment, TilingResult};
use ergolab_core::words::{complete_tree, random_tree, Alphabet, RightRootedTree, Symbol, Word};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// A right-rooted tree of words: suffix-closed, containing the root.
#[pyclass(frozen)]
struct Tree {
    inner: RightRootedTree,
}

#[pymethods]
impl Tree {
    /// The complete tree of all words of length at most `depth` over a
    /// plain alphabet.
    #[staticmethod]
    fn complete(alphabet_size: usize, depth: usize) -> PyResult<Self> {
        let tree =
            complete_tree(&Alphabet::plain(alphabet_size), depth, false, None).map_err(value_err)?;
        Ok(Tree { inner: tree })
    }

    /// The ball of reduced words of length at most `depth` in a free group.
    #[staticmethod]
    fn free_group_ball(rank: usize, depth: usize) -> PyResult<Self> {
        let tree =
            complete_tree(&Alphabet::free_group(rank), depth, true, None).map_err(value_err)?;
        Ok(Tree { inner: tree })
    }

    /// A seeded random tree over a plain alphabet.
    #[staticmethod]
    fn random(alphabet_size: usize, max_height: usize, words: usize, seed: u64) -> PyResult<Self> {
        let tree = random_tree(
            &Alphabet::plain(alphabet_size),
            max_height,
            words,
            seed,
            false,
            None,
        )
        .map_err(value_err)?;
        Ok(Tree { inner: tree })
    }

    /// A seeded random tree of reduced free-group words.
    #[staticmethod]
    fn random_free_group(
        rank: usize,
        max_height: usize,
        words: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let tree = random_tree(
            &Alphabet::free_group(rank),
            max_height,
            words,
            seed,
            true,
            None,
        )
        .map_err(value_err)?;
        Ok(Tree { inner: tree })
    }

    /// Builds a tree from explicit words (outermost symbol first); the
    /// empty list is the root and must be present.
    #[staticmethod]
    fn from_words(words: Vec<Vec<Symbol>>) -> PyResult<Self> {
        let words = words.into_iter().map(Word::new).collect();
        let tree = RightRootedTree::from_words(words).map_err(value_err)?;
        Ok(Tree { inner: tree })
    }

    /// Number of words, including the root.
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Length of the longest word.
    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    /// Compact `t<words>h<height>` label.
    #[getter]
    fn label(&self) -> String {
        self.inner.label()
    }

    /// All words as symbol lists, sorted by level.
    fn words(&self) -> Vec<Vec<Symbol>> {
        self.inner
            .words()
            .iter()
            .map(|w| w.symbols().to_vec())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Tree({}, {} words)", self.inner.label(), self.inner.len())
    }
}

/// A point of a system: a symbolic prefix, a real number, or a
/// base-and-fiber pair.
#[pyclass(frozen, name = "Point")]
struct PyPoint {
    inner: Point,
}

#[pymethods]
impl PyPoint {
    /// A shift-space point from its known coordinate prefix.
    #[staticmethod]
    fn symbolic(prefix: Vec<Symbol>) -> Self {
        PyPoint {
            inner: Point::symbolic(Word::new(prefix)),
        }
    }

    /// An interval point in `(0, 1]` with a non-terminating
    /// continued-fraction expansion.
    #[staticmethod]
    fn real(value: f64) -> PyResult<Self> {
        Ok(PyPoint {
            inner: Point::real_checked(value).map_err(value_err)?,
        })
    }

    /// A skew-product point: circle coordinate plus fiber prefix.
    #[staticmethod]
    fn product(base: f64, fiber: Vec<Symbol>) -> Self {
        PyPoint {
            inner: Point::product(base, Word::new(fiber)),
        }
    }

    /// Known prefix depth (a large sentinel for real points).
    #[getter]
    fn depth(&self) -> usize {
        self.inner.depth()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// A real-valued observable evaluated at points.
#[pyclass(frozen, name = "Observable")]
struct PyObservable {
    inner: Observable,
}

#[pymethods]
impl PyObservable {
    /// Indicator of the first coordinate equalling `symbol`, over a
    /// `k`-symbol alphabet.
    #[staticmethod]
    fn indicator(k: usize, symbol: Symbol) -> Self {
        PyObservable {
            inner: Observable::indicator_first_symbol(k, symbol),
        }
    }

    /// One value per first coordinate.
    #[staticmethod]
    fn by_first_symbol(values: Vec<f64>) -> Self {
        PyObservable {
            inner: Observable::by_first_symbol(values, "by_first_symbol"),
        }
    }

    /// The constant function.
    #[staticmethod]
    fn constant(value: f64) -> Self {
        PyObservable {
            inner: Observable::constant(value),
        }
    }

    /// The identity on a real interval.
    #[staticmethod]
    fn identity() -> Self {
        PyObservable {
            inner: Observable::real_identity(),
        }
    }

    /// `cos 2πθ` on the base circle of a skew product.
    #[staticmethod]
    fn base_cosine() -> Self {
        PyObservable {
            inner: Observable::base_cosine(),
        }
    }

    /// Display name.
    #[getter]
    fn name(&self) -> String {
        self.inner.name()
    }

    fn __repr__(&self) -> String {
        format!("Observable({})", self.inner.name())
    }
}

/// A Markov chain: transition matrix plus initial distribution.
#[pyclass(frozen, name = "Chain")]
struct PyChain {
    inner: MarkovChain,
}

#[pymethods]
impl PyChain {
    /// Resolves a chain by name (`two_state`, `finfty_chain`,
    /// `uniform:<k>`, `free_group:<r>`, ...).
    #[staticmethod]
    fn by_name(name: &str) -> PyResult<Self> {
        Ok(PyChain {
            inner: harness::chain_by_name(name).map_err(value_err)?,
        })
    }

    /// Builds a chain from a finite transition matrix, solving for its
    /// stationary distribution.
    #[staticmethod]
    fn from_matrix(rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let matrix = StochasticMatrix::finite(rows).map_err(value_err)?;
        Ok(PyChain {
            inner: MarkovChain::stationary(matrix).map_err(value_err)?,
        })
    }

    /// Number of states, or `None` for countable chains.
    #[getter]
    fn states(&self) -> Option<usize> {
        self.inner.state_count()
    }

    /// Initial-distribution mass of state `i`.
    fn initial_probability(&self, i: Symbol) -> f64 {
        self.inner.initial_probability(i)
    }

    /// One-step transition probability.
    fn transition(&self, i: Symbol, j: Symbol) -> f64 {
        self.inner.transition(i, j)
    }

    /// Samples a path of the given length, deterministic in `seed`.
    fn sample_path(&self, length: usize, seed: u64) -> Vec<Symbol> {
        self.inner.sample_path(length, seed).symbols().to_vec()
    }

    /// Monte Carlo return-time statistics for a state: mean, standard
    /// error, survival probabilities for cutoffs 1..=10, and the fraction
    /// of excursions censored at `horizon`.
    #[pyo3(signature = (state, samples, seed, horizon = 10_000))]
    fn expected_return_time<'py>(
        &self,
        py: Python<'py>,
        state: Symbol,
        samples: usize,
        seed: u64,
        horizon: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let stats = self
            .inner
            .expected_return_time(state, horizon, samples, seed)
            .map_err(runtime_err)?;
        let dict = PyDict::new_bound(py);
        dict.set_item("state", stats.state)?;
        dict.set_item("samples", stats.samples)?;
        dict.set_item("mean_return", stats.mean_return)?;
        dict.set_item("mean_std_error", stats.mean_std_error)?;
        dict.set_item(
            "survival",
            (1..=10)
                .map(|k| stats.survival_at(k).unwrap_or(0.0))
                .collect::<Vec<f64>>(),
        )?;
        dict.set_item("censored_fraction", stats.censored_fraction())?;
        Ok(dict)
    }

    fn __repr__(&self) -> String {
        match self.inner.state_count() {
            Some(n) => format!("Chain({n} states)"),
            None => "Chain(countable)".to_string(),
        }
    }
}

fn tiling_dict<'py>(py: Python<'py>, result: &TilingResult) -> PyResult<Bound<'py, PyDict>> {
    let dict = PyDict::new_bound(py);
    dict.set_item("n", result.n)?;
    dict.set_item("tiles", result.tiles.len())?;
    dict.set_item("covered_weight", result.covered_weight)?;
    dict.set_item("total_weight", result.total_weight)?;
    dict.set_item("coverage", result.coverage)?;
    dict.set_item("untiled_band", result.untiled_band)?;
    dict.set_item("untiled_overflow", result.untiled_overflow)?;
    Ok(dict)
}

fn assignment_from_heights(heights: &Bound<'_, PyAny>) -> PyResult<TileAssignment> {
    if let Ok(height) = heights.extract::<usize>() {
        return Ok(TileAssignment::constant_triangle(height));
    }
    let per_symbol: Vec<usize> = heights.extract().map_err(|_| {
        value_err("tile heights must be an int or a list of ints, one per symbol")
    })?;
    Ok(TileAssignment::triangles_by_symbol(per_symbol))
}

/// A dynamical system from the catalog, with averaging and tiling
/// operations.
#[pyclass(frozen, name = "System")]
struct PySystem {
    inner: Box<dyn System>,
}

#[pymethods]
impl PySystem {
    /// Resolves a catalog id such as `bernoulli:2` or `gauss:M=50`.
    #[staticmethod]
    fn by_id(id: &str) -> PyResult<Self> {
        Ok(PySystem {
            inner: system_by_id(id).map_err(value_err)?,
        })
    }

    /// The system's catalog id.
    #[getter]
    fn id(&self) -> String {
        self.inner.id()
    }

    /// Number of symbols in the coding alphabet.
    #[getter]
    fn alphabet_size(&self) -> usize {
        self.inner.alphabet().size()
    }

    /// Samples a point with the given known depth, deterministic in `seed`.
    fn sample_point(&self, seed: u64, depth: usize) -> PyPoint {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        PyPoint {
            inner: self.inner.sample_point(&mut rng, depth),
        }
    }

    /// Evaluates an observable at a point.
    fn evaluate(&self, f: &PyObservable, x: &PyPoint) -> PyResult<f64> {
        self.inner.evaluate(&f.inner, &x.inner).map_err(value_err)
    }

    /// The analytic limit of averages of `f` at `x`, when known.
    fn invariant_target(&self, f: &PyObservable, x: &PyPoint) -> Option<f64> {
        self.inner.invariant_target(&f.inner, &x.inner)
    }

    /// The ρ-weight of a tree rooted at `x`.
    fn tree_weight(&self, tree: &Tree, x: &PyPoint) -> PyResult<f64> {
        tree_weight(self.inner.as_ref(), &tree.inner, &x.inner).map_err(runtime_err)
    }

    /// The ρ-weighted average of `f` over a tree rooted at `x`; returns
    /// total weight, weighted sum, average, and truncation tail.
    fn weighted_average<'py>(
        &self,
        py: Python<'py>,
        f: &PyObservable,
        tree: &Tree,
        x: &PyPoint,
    ) -> PyResult<Bound<'py, PyDict>> {
        let eval =
            weighted_average(self.inner.as_ref(), &f.inner, &tree.inner, &x.inner)
                .map_err(runtime_err)?;
        let dict = PyDict::new_bound(py);
        dict.set_item("tree", eval.tree_label.clone())?;
        dict.set_item("total_weight", eval.total_weight)?;
        dict.set_item("weighted_sum", eval.weighted_sum)?;
        dict.set_item("average", eval.average())?;
        dict.set_item("truncation_tail", eval.truncation_tail)?;
        Ok(dict)
    }

    /// Backward averages over the complete trees of depth `0..=n_max`; one
    /// dictionary per depth. `theta` switches on threshold truncation.
    #[pyo3(signature = (f, n_max, x, theta = None))]
    fn cesaro_backward<'py>(
        &self,
        py: Python<'py>,
        f: &PyObservable,
        n_max: usize,
        x: &PyPoint,
        theta: Option<f64>,
    ) -> PyResult<Bound<'py, PyList>> {
        let policy = match theta {
            Some(theta) => BranchPolicy::Threshold { theta },
            None => BranchPolicy::Full,
        };
        let report = cesaro_backward(self.inner.as_ref(), &f.inner, n_max, &x.inner, &policy)
            .map_err(runtime_err)?;
        let rows = PyList::empty_bound(py);
        for row in &report.rows {
            let dict = PyDict::new_bound(py);
            dict.set_item("n", row.index.to_string())?;
            dict.set_item("total_weight", row.total_weight)?;
            dict.set_item("average", row.average)?;
            dict.set_item("target", row.target)?;
            dict.set_item("abs_error", row.abs_error())?;
            dict.set_item("truncation_tail", row.truncation_tail)?;
            rows.append(dict)?;
        }
        Ok(rows)
    }

    /// Greedily tiles the depth-`n` complete tree at `x` with triangles;
    /// `heights` is one height (constant rule) or one height per symbol.
    fn greedy_tile<'py>(
        &self,
        py: Python<'py>,
        heights: &Bound<'py, PyAny>,
        n: usize,
        x: &PyPoint,
    ) -> PyResult<Bound<'py, PyDict>> {
        let assignment = assignment_from_heights(heights)?;
        let result =
            greedy_tile(self.inner.as_ref(), &assignment, n, &x.inner).map_err(runtime_err)?;
        tiling_dict(py, &result)
    }

    fn __repr__(&self) -> String {
        format!("System({})", self.inner.id())
    }
}

/// Lists the catalog's system ids.
#[pyfunction]
fn catalog() -> Vec<String> {
    catalog_ids().into_iter().map(String::from).collect()
}

/// Lists the chain names `Chain.by_name` understands.
#[pyfunction]
fn chain_names() -> Vec<String> {
    harness::chain_names().into_iter().map(String::from).collect()
}

/// Forward averages of a base observable over word balls of the standard
/// rotation action of a rank-`rank` free group: one dictionary per radius
/// `0..=n_max`. `f` defaults to the cosine wave.
#[pyfunction]
#[pyo3(signature = (rank, n_max, base, f = None))]
fn forward_rotation_report<'py>(
    py: Python<'py>,
    rank: usize,
    n_max: usize,
    base: f64,
    f: Option<Bound<'py, PyAny>>,
) -> PyResult<Bound<'py, PyList>> {
    let action = CircleRotationAction::standard(rank);
    let chain = MarkovChain::uniform_free_group(rank);
    let failure: RefCell<Option<PyErr>> = RefCell::new(None);
    let levels = {
        let failure_ref = &failure;
        let wave: Box<dyn Fn(f64) -> f64 + '_> = match &f {
            None => Box::new(|t: f64| (std::f64::consts::TAU * t).cos()),
            Some(callable) => {
                let callable = callable.clone();
                Box::new(move |t: f64| {
                    match callable.call1((t,)).and_then(|v| v.extract::<f64>()) {
                        Ok(v) => v,
                        Err(e) => {
                            failure_ref.borrow_mut().get_or_insert(e);
                            0.0
                        }
                    }
                })
            }
        };
        forward_ball_report(&action, &chain, n_max, base, wave.as_ref()).map_err(runtime_err)?
    };
    if let Some(err) = failure.into_inner() {
        return Err(err);
    }
    let rows = PyList::empty_bound(py);
    for (n, eval) in levels.iter().enumerate() {
        let dict = PyDict::new_bound(py);
        dict.set_item("n", n)?;
        dict.set_item("mass", eval.mass)?;
        dict.set_item("weighted_sum", eval.weighted_sum)?;
        dict.set_item("average", eval.average())?;
        rows.append(dict)?;
    }
    Ok(rows)
}

/// Forward average of a tree of group words at one base point (cosine
/// wave); returns the tree's forward measure and the average.
#[pyfunction]
fn forward_tree_average<'py>(
    py: Python<'py>,
    rank: usize,
    tree: &Tree,
    base: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let action = CircleRotationAction::standard(rank);
    let chain = MarkovChain::uniform_free_group(rank);
    let wave = |t: f64| (std::f64::consts::TAU * t).cos();
    let eval = forward_group_average(&action, &chain, &tree.inner, base, &wave)
        .map_err(runtime_err)?;
    let dict = PyDict::new_bound(py);
    dict.set_item("mass", eval.mass)?;
    dict.set_item("weighted_sum", eval.weighted_sum)?;
    dict.set_item("average", eval.average())?;
    Ok(dict)
}

/// Runs the ε-driven tiling parameter sweep on a shift system id; returns
/// the chosen band height and depth, the success fraction, and per-point
/// coverages.
#[pyfunction]
fn tiling_sweep<'py>(
    py: Python<'py>,
    system_id: &str,
    heights: &Bound<'py, PyAny>,
    epsilon: f64,
    points: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let system = harness::shift_system_by_id(system_id).map_err(value_err)?;
    let assignment = assignment_from_heights(heights)?;
    let sweep = tiling_parameter_sweep(&system, &assignment, epsilon, points, seed)
        .map_err(runtime_err)?;
    let dict = PyDict::new_bound(py);
    dict.set_item("epsilon", sweep.epsilon)?;
    dict.set_item("band_height", sweep.band_height)?;
    dict.set_item("n", sweep.n)?;
    dict.set_item("success_fraction", sweep.success_fraction)?;
    dict.set_item(
        "coverages",
        sweep
            .rows
            .iter()
            .map(|(_, r)| r.coverage)
            .collect::<Vec<f64>>(),
    )?;
    Ok(dict)
}

/// Runs an experiment described by a TOML document (the same format the
/// CLI's `run` subcommand reads) and returns the manifest as a dictionary.
#[pyfunction]
#[pyo3(signature = (text, out = None))]
fn run_toml<'py>(py: Python<'py>, text: &str, out: Option<String>) -> PyResult<Bound<'py, PyAny>> {
    let mut config = ExperimentConfig::from_toml(text).map_err(value_err)?;
    if let Some(out) = out {
        config.out = Some(out.into());
    }
    let manifest = harness::run(&config).map_err(runtime_err)?;
    let json = serde_json::to_string(&manifest).map_err(runtime_err)?;
    let loads = py.import_bound("json")?.getattr("loads")?;
    loads.call1((json,))
}

/// Backward/forward averaging laboratory: weighted averages on word trees,
/// forward rotation averages, greedy tilings, and chain analysis.
#[pymodule]
fn ergolab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Tree>()?;
    m.add_class::<PyPoint>()?;
    m.add_class::<PyObservable>()?;
    m.add_class::<PyChain>()?;
    m.add_class::<PySystem>()?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(chain_names, m)?)?;
    m.add_function(wrap_pyfunction!(forward_rotation_report, m)?)?;
    m.add_function(wrap_pyfunction!(forward_tree_average, m)?)?;
    m.add_function(wrap_pyfunction!(tiling_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_toml, m)?)?;
    Ok(())
}
