//! Python bindings over the core library: separation arithmetic, the exact
//! landing-order solver, metrics and the scenario generator.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use als_core::boosting;
use als_core::domain::WeightClass;
use als_core::ingest;
use als_core::normal;
use als_core::scheduler;
use als_core::separation;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_class(name: &str) -> PyResult<WeightClass> {
    WeightClass::ALL
        .into_iter()
        .find(|c| c.name().eq_ignore_ascii_case(name))
        .ok_or_else(|| value_err(format!("unknown weight class {name:?}")))
}

/// FAA weight class of an ICAO type designator.
#[pyfunction]
fn weight_class(ac_type: &str) -> String {
    als_core::domain::weight_class_of(ac_type).name().to_string()
}

/// Reference minimum separation (seconds) for a lead/trail class pair.
#[pyfunction]
fn reference_separation(lead: &str, trail: &str) -> PyResult<f64> {
    let matrix = separation::ReferenceMatrix::faa_arrival_manager();
    Ok(matrix.lookup(parse_class(lead)?, parse_class(trail)?))
}

/// Reliability-adjusted separation: reference + z(1 - pc) * sigma.
#[pyfunction]
fn required_separation(reference: f64, sigma: f64, pc: f64) -> PyResult<f64> {
    separation::required_separation(
        reference,
        sigma,
        pc,
        separation::QuantileConvention::Reliability,
    )
    .map_err(value_err)
}

/// Standard normal quantile function.
#[pyfunction]
fn inv_cdf(p: f64) -> f64 {
    normal::inv_cdf(p)
}

/// Great-circle distance in nautical miles.
#[pyfunction]
fn haversine_nm(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    ingest::haversine_nm((lat1, lon1), (lat2, lon2))
}

/// Conditional-predictor stage ("I", "II" or "III") for a looping count.
#[pyfunction]
fn stage_of_loop_count(ev_loop_600: f64) -> String {
    ingest::stage_of_loop_count(ev_loop_600).to_string()
}

#[pyfunction]
fn mae(y: Vec<f64>, y_hat: Vec<f64>) -> PyResult<f64> {
    boosting::mae(&y, &y_hat).map_err(value_err)
}

#[pyfunction]
fn rmse(y: Vec<f64>, y_hat: Vec<f64>) -> PyResult<f64> {
    boosting::rmse(&y, &y_hat).map_err(value_err)
}

#[pyfunction]
fn rmsle(y: Vec<f64>, y_hat: Vec<f64>) -> PyResult<f64> {
    boosting::rmsle(&y, &y_hat).map_err(value_err)
}

fn solution_dict<'py>(
    py: Python<'py>,
    s: &als_core::domain::ScheduleSolution,
) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("feasible", s.feasible)?;
    out.set_item("order", s.order.clone())?;
    out.set_item("landing_times", s.landing_times.clone())?;
    out.set_item("makespan", s.makespan)?;
    out.set_item("nodes", s.stats.nodes)?;
    out.set_item("proven", s.stats.proven)?;
    Ok(out)
}

/// Solve one landing instance exactly.
///
/// `sep[i][j]` is the required gap (seconds) when j lands right after i;
/// `earliest`/`latest` are the landing windows.
#[pyfunction]
fn solve(
    py: Python<'_>,
    sep: Vec<Vec<f64>>,
    earliest: Vec<f64>,
    latest: Vec<f64>,
) -> PyResult<Py<PyDict>> {
    let n = earliest.len();
    if sep.len() != n || sep.iter().any(|row| row.len() != n) || latest.len() != n {
        return Err(value_err("sep must be n x n and windows length n"));
    }
    let matrix = separation::SeparationMatrix {
        n,
        sep,
        sigma: vec![vec![0.0; n]; n],
        earliest,
        latest,
        conflict_probability: 0.05,
    };
    let cfg = scheduler::SolverConfig { n_max: n.max(2), ..scheduler::SolverConfig::default() };
    let model = scheduler::build_model(matrix, &cfg).map_err(value_err)?;
    let solution = scheduler::solve_exact(&model, &cfg);
    Ok(solution_dict(py, &solution)?.into())
}

/// Generate a deterministic synthetic scenario; returns one dict per flight.
#[pyfunction]
fn generate_scenario(
    py: Python<'_>,
    seed: u64,
    n_flights: usize,
    congestion: &str,
) -> PyResult<Py<PyList>> {
    let level = ingest::Congestion::parse(congestion)
        .ok_or_else(|| value_err(format!("unknown congestion level {congestion:?}")))?;
    if n_flights == 0 {
        return Err(value_err("n_flights must be at least 1"));
    }
    let scenario = ingest::generate_scenario(seed, n_flights, level);
    let list = PyList::empty(py);
    for (flight, truth) in scenario.flights.iter().zip(&scenario.truth) {
        let d = PyDict::new(py);
        d.set_item("id", flight.id.clone())?;
        d.set_item("callsign", flight.callsign.clone())?;
        d.set_item("ac_type", flight.ac_type.clone())?;
        d.set_item("weight_class", flight.weight_class.name())?;
        d.set_item("entry_time", flight.entry_time)?;
        d.set_item("stage", ingest::assign_stage(&flight.features).to_string())?;
        d.set_item("duration", flight.observed_duration)?;
        d.set_item("mean_duration", truth.mean_duration)?;
        d.set_item("sigma", truth.sigma)?;
        list.append(d)?;
    }
    Ok(list.into())
}

#[pymodule]
fn als_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(weight_class, m)?)?;
    m.add_function(wrap_pyfunction!(reference_separation, m)?)?;
    m.add_function(wrap_pyfunction!(required_separation, m)?)?;
    m.add_function(wrap_pyfunction!(inv_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(haversine_nm, m)?)?;
    m.add_function(wrap_pyfunction!(stage_of_loop_count, m)?)?;
    m.add_function(wrap_pyfunction!(mae, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(rmsle, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(generate_scenario, m)?)?;
    Ok(())
}
