//! Python bindings: zippered-rectangle triples with their induction steps,
//! diagram windows with the path-space and K₀ reports, and the CLI.

use num_bigint::BigInt;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bsurf::core_diagram::{validate_window, DiagramWindow};
use bsurf::error::BsurfError;
use bsurf::iet_zip::{keane_check, PermutationPair, TripleData};
use bsurf::induction::{completeness_check, density_identity_check, rauzy_graph, rh_step, rv_step};
use bsurf::ktheory::{k0_classify, theta_sequence, InductiveSystem, ThetaData};
use bsurf::path_space::{descriptor_label, sigma_scan, standing_hypotheses_check};
use bsurf::rat::fmt_q;
use bsurf::states_charts::{validate_state, State};
use bsurf::{fixtures, surface_diagram};

fn err(e: BsurfError) -> PyErr {
    match e {
        BsurfError::KeaneHypothesis(_) | BsurfError::RhHypothesis(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn strs(v: &[bsurf::rat::Q]) -> Vec<String> {
    v.iter().map(fmt_q).collect()
}

/// Zippered-rectangle data `(π, λ, τ)` with exact rationals.
#[pyclass(name = "Triple", module = "bsurf_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyTriple {
    inner: TripleData,
}

#[pymethods]
impl PyTriple {
    /// `Triple("A B C D / D C B A", "1/2,1/4,1/8,1/8", "1,-1/2,1/4,-1")`.
    #[new]
    #[pyo3(signature = (pi, lam, tau, allow_small = false))]
    fn new(pi: &str, lam: &str, tau: &str, allow_small: bool) -> PyResult<Self> {
        Ok(PyTriple {
            inner: TripleData::parse(pi, lam, tau, allow_small).map_err(err)?,
        })
    }

    /// Seeded certified sample on the class of `pi`.
    #[staticmethod]
    fn sample(pi: &str, seed: u64) -> PyResult<Self> {
        let mut v = fixtures::sample_triples(pi, 1, seed).map_err(err)?;
        Ok(PyTriple { inner: v.remove(0) })
    }

    #[getter]
    fn perm(&self) -> String {
        self.inner.perm.to_string()
    }

    #[getter]
    fn lam(&self) -> Vec<String> {
        strs(&self.inner.lambda)
    }

    #[getter]
    fn tau(&self) -> Vec<String> {
        strs(&self.inner.tau)
    }

    #[getter]
    fn heights(&self) -> Vec<String> {
        strs(&self.inner.h)
    }

    fn area(&self) -> String {
        fmt_q(&self.inner.area())
    }

    /// One Rauzy–Veech step; returns `(type, winner, loser, next)`.
    fn rv_step(&self) -> PyResult<(usize, String, String, PyTriple)> {
        let s = rv_step(&self.inner).map_err(err)?;
        Ok((s.ty, s.winner_symbol().into(), s.loser_symbol().into(), PyTriple { inner: s.after }))
    }

    /// One RH step; returns `(type, winner, loser, next)`.
    fn rh_step(&self) -> PyResult<(usize, String, String, PyTriple)> {
        let s = rh_step(&self.inner).map_err(err)?;
        Ok((s.ty, s.winner_symbol().into(), s.loser_symbol().into(), PyTriple { inner: s.after }))
    }

    /// `(keane, rh_complete)` certificates at `depth`.
    fn certificates(&self, depth: usize) -> (bool, bool) {
        let r = completeness_check(&self.inner, depth);
        (r.keane, r.rh_complete)
    }

    fn __eq__(&self, other: &PyTriple) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "Triple({:?}, {:?}, {:?})",
            self.inner.perm.to_string(),
            strs(&self.inner.lambda).join(","),
            strs(&self.inner.tau).join(",")
        )
    }
}

/// A window of an ordered diagram, optionally with a state.
#[pyclass(name = "Diagram", module = "bsurf_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyDiagram {
    window: DiagramWindow,
    state: Option<State>,
}

#[pymethods]
impl PyDiagram {
    /// The 2-adic one-vertex diagram on `[m, n]` with its state.
    #[staticmethod]
    fn chamanara(m: i64, n: i64) -> PyResult<Self> {
        Ok(PyDiagram {
            window: fixtures::chamanara_window(m, n).map_err(err)?,
            state: Some(fixtures::chamanara_state(m, n).map_err(err)?),
        })
    }

    /// The base-10 one-vertex diagram on `[m, n]` with its state.
    #[staticmethod]
    fn decimal(m: i64, n: i64) -> PyResult<Self> {
        Ok(PyDiagram {
            window: fixtures::decimal_window(m, n).map_err(err)?,
            state: Some(fixtures::decimal_state(m, n).map_err(err)?),
        })
    }

    /// Diagram of a triple on `[m, n]` (state `(λ, h)` attached).
    #[staticmethod]
    fn from_triple(t: &PyTriple, m: i64, n: i64) -> PyResult<Self> {
        let sd = surface_diagram::build(&t.inner, m, n).map_err(err)?;
        Ok(PyDiagram {
            window: sd.window,
            state: Some(sd.state),
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyDiagram {
            window: DiagramWindow::from_json_str(text).map_err(err)?,
            state: None,
        })
    }

    fn to_json(&self) -> String {
        self.window.to_json_string()
    }

    #[getter]
    fn bounds(&self) -> (i64, i64) {
        self.window.bounds()
    }

    /// Structural validity (and state validity when a state is attached).
    fn is_valid(&self) -> PyResult<bool> {
        let ok = validate_window(&self.window).valid;
        Ok(match &self.state {
            Some(st) => ok && validate_state(&self.window, st).map_err(err)?.valid,
            None => ok,
        })
    }

    /// Labels of the singular paths found at `depth`.
    fn sigma(&self, depth: i64) -> PyResult<Vec<String>> {
        let r = sigma_scan(&self.window, depth).map_err(err)?;
        Ok(r.singular.iter().map(|x| descriptor_label(&self.window, x)).collect())
    }

    /// Standing-hypothesis certificates as `{name: status}`.
    fn hypotheses<'py>(&self, py: Python<'py>, depth: i64) -> PyResult<Bound<'py, PyDict>> {
        let r = standing_hypotheses_check(&self.window, depth);
        let d = PyDict::new(py);
        for i in r.items {
            d.set_item(i.name, format!("{:?}", i.status))?;
        }
        Ok(d)
    }

    /// Classification of the limit of the edge matrices on `[m, n]`.
    fn k0_classify(&self, m: i64, n: i64) -> PyResult<String> {
        let sys = InductiveSystem::from_window(&self.window, m, n).map_err(err)?;
        Ok(k0_classify(&sys).map_err(err)?.classification.to_string())
    }
}

/// Depth-bounded Keane certificate.
#[pyfunction]
#[pyo3(signature = (pi, lam, depth, allow_small = false))]
fn keane(pi: &str, lam: &str, depth: usize, allow_small: bool) -> PyResult<bool> {
    let perm = PermutationPair::parse(pi, allow_small).map_err(err)?;
    let l = bsurf::rat::parse_q_list(lam).map_err(err)?;
    Ok(keane_check(&perm, &l, depth).map_err(err)?.certified)
}

/// `(holds, samples)` of the invariant-density identity.
#[pyfunction]
fn density_check(pi: &str, samples: usize, seed: u64) -> PyResult<(usize, usize)> {
    let perm = PermutationPair::parse(pi, false).map_err(err)?;
    let r = density_identity_check(&perm, samples, 0, seed).map_err(err)?;
    Ok((r.holds, r.samples))
}

/// `(nodes, edges)` of the Rauzy class.
#[pyfunction]
fn rauzy_graph_size(pi: &str) -> PyResult<(usize, usize)> {
    let perm = PermutationPair::parse(pi, true).map_err(err)?;
    let g = rauzy_graph(&perm).map_err(err)?;
    Ok((g.nodes.len(), g.edges.len()))
}

/// Kernel basis of θ and the `i_*` flag for a pairing `"i:j,…"`.
#[pyfunction]
fn theta(i: usize, j: usize, star: &str) -> PyResult<(Vec<Vec<String>>, bool)> {
    let td = ThetaData::new(i, j, ThetaData::parse_star(star).map_err(err)?).map_err(err)?;
    let r = theta_sequence(&td).map_err(err)?;
    let ker = r
        .kernel_basis
        .iter()
        .map(|v| v.iter().map(BigInt::to_string).collect())
        .collect();
    Ok((ker, r.i_star_iso))
}

/// Runs the command line; returns `(exit_code, stdout, stderr)`.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String, String) {
    let argv = std::iter::once("bsurf".to_string()).chain(args);
    let o = bsurf::cli::run(argv);
    (o.code, o.stdout, o.stderr)
}

#[pymodule]
fn bsurf_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTriple>()?;
    m.add_class::<PyDiagram>()?;
    m.add_function(wrap_pyfunction!(keane, m)?)?;
    m.add_function(wrap_pyfunction!(density_check, m)?)?;
    m.add_function(wrap_pyfunction!(rauzy_graph_size, m)?)?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add("HYPER_PI", fixtures::HYPER_PI)?;
    m.add("SECOND_PI", fixtures::SECOND_PI)?;
    Ok(())
}
