//! Python bindings for `sparse_dist_lab`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use sparse_dist_lab::bounds::{self, PlanScheme};
use sparse_dist_lab::comm::{self, CommMessage, HashScheme};
use sparse_dist_lab::dist;
use sparse_dist_lab::hadamard::{self, HadamardDim};
use sparse_dist_lab::harness::{self, Cell, Param, Scheme};
use sparse_dist_lab::hr::{self, DecodeMode, HrMessage};
use sparse_dist_lab::projection;
use sparse_dist_lab::rappor::{self, RapporCounts};
use sparse_dist_lab::RandomStream;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Distribution", module = "sparse_dist_lab_py", from_py_object)]
#[derive(Clone)]
struct PyDistribution {
    inner: dist::Distribution,
}

#[pymethods]
impl PyDistribution {
    #[new]
    fn new(probs: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: dist::Distribution::new(probs).map_err(err)? })
    }

    #[staticmethod]
    fn uniform(k: usize) -> PyResult<Self> {
        Ok(Self { inner: dist::Distribution::uniform(k).map_err(err)? })
    }

    #[staticmethod]
    fn point_mass(k: usize, x: usize) -> PyResult<Self> {
        Ok(Self { inner: dist::Distribution::point_mass(k, x).map_err(err)? })
    }

    /// Uniform over a random `s`-subset of `[k]`.
    #[staticmethod]
    fn uniform_sparse(k: usize, s: usize, seed: u64) -> PyResult<Self> {
        let mut stream = RandomStream::new(seed, 0);
        Ok(Self { inner: dist::make_uniform_sparse(k, s, &mut stream).map_err(err)? })
    }

    #[getter]
    fn probs(&self) -> Vec<f64> {
        self.inner.probs().to_vec()
    }

    fn support(&self) -> Vec<usize> {
        self.inner.support()
    }

    fn sample(&self, n: usize, seed: u64) -> Vec<usize> {
        dist::sample_iid(&self.inner, n, &mut RandomStream::new(seed, 0))
    }

    fn tv_distance(&self, other: &PyDistribution) -> PyResult<f64> {
        dist::tv_distance(&self.inner, &other.inner).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __getitem__(&self, x: usize) -> PyResult<f64> {
        self.inner.probs().get(x).copied().ok_or_else(|| pyo3::exceptions::PyIndexError::new_err(x))
    }

    fn __repr__(&self) -> String {
        format!("Distribution(k={}, support={})", self.inner.len(), self.inner.support_size())
    }
}

#[pyfunction]
fn tv_distance(p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
    dist::tv_distance_slices(&p, &q).map_err(err)
}

#[pyfunction]
fn project_simplex(v: Vec<f64>) -> PyResult<Vec<f64>> {
    Ok(projection::project_simplex(&v).map_err(err)?.into_probs())
}

#[pyfunction]
fn project_sparse_simplex(v: Vec<f64>, s: usize) -> PyResult<Vec<f64>> {
    Ok(projection::project_sparse_simplex(&v, s).map_err(err)?.into_probs())
}

#[pyfunction]
fn fwht(v: Vec<f64>) -> PyResult<Vec<f64>> {
    hadamard::fwht(&v).map_err(err)
}

#[pyfunction]
fn hadamard_entry(size: usize, x: usize, y: usize) -> PyResult<i8> {
    let dim = HadamardDim::new(size).map_err(err)?;
    hadamard::entry(dim, x, y).map_err(err)
}

/// One bit per user; user `i` holds `samples[i]`.
#[pyfunction]
fn hr_encode(samples: Vec<usize>, epsilon: f64, k: usize, seed: u64) -> PyResult<Vec<bool>> {
    if let Some(&x) = samples.iter().find(|&&x| x >= k) {
        return Err(err(format!("sample {x} outside [0, {k})")));
    }
    let dim = HadamardDim::for_domain(k);
    let msgs = hr::hr_encode_all(&samples, epsilon, dim, &RandomStream::new(seed, 0));
    Ok(msgs.into_iter().map(|m| m.bit).collect())
}

/// Projected estimate from the bits of users `0..len(bits)`; `s=None`
/// projects onto the full simplex.
#[pyfunction]
#[pyo3(signature = (bits, epsilon, k, s=None))]
fn hr_decode(bits: Vec<bool>, epsilon: f64, k: usize, s: Option<usize>) -> PyResult<Vec<f64>> {
    let dim = HadamardDim::for_domain(k);
    let msgs: Vec<HrMessage> = bits.iter().enumerate().map(|(i, &bit)| HrMessage { user_index: i, bit }).collect();
    let fracs = hr::hr_aggregate(&msgs, msgs.len(), dim).map_err(err)?;
    let mode = s.map_or(DecodeMode::Dense, DecodeMode::Sparse);
    Ok(hr::hr_decode(&fracs, epsilon, k, mode).map_err(err)?.into_probs())
}

/// Encodes each half of `samples` and returns the projected two-stage estimate.
#[pyfunction]
fn rappor_estimate(samples: Vec<usize>, epsilon: f64, k: usize, s: usize, seed: u64) -> PyResult<Vec<f64>> {
    if let Some(&x) = samples.iter().find(|&&x| x >= k) {
        return Err(err(format!("sample {x} outside [0, {k})")));
    }
    let stream = RandomStream::new(seed, 0);
    let half = samples.len() / 2;
    let mut halves = [RapporCounts::new(k), RapporCounts::new(k)];
    for (i, &x) in samples.iter().enumerate() {
        halves[(i >= half) as usize].add_encoded(x, epsilon, &mut stream.substream(i as u64));
    }
    let est = rappor::rappor_estimate_counts(&halves[0], &halves[1], s, epsilon).map_err(err)?;
    Ok(est.projected.into_probs())
}

/// `ℓ`-bit hash values of users `offset..offset+len(samples)`.
#[pyfunction]
#[pyo3(signature = (samples, ell, k, s, public_seed, offset=0))]
fn comm_encode(samples: Vec<usize>, ell: u32, k: usize, s: usize, public_seed: u64, offset: usize) -> PyResult<Vec<u32>> {
    let scheme = HashScheme::new(public_seed, ell, k, s).map_err(err)?;
    if let Some(&x) = samples.iter().find(|&&x| x >= k) {
        return Err(err(format!("sample {x} outside [0, {k})")));
    }
    Ok(comm::comm_encode_all(&samples, offset, &scheme).into_iter().map(|m| m.value).collect())
}

/// Two-stage estimate from the first-half and second-half messages; the
/// second half belongs to users `len(first)..`.
#[pyfunction]
fn comm_decode(first: Vec<u32>, second: Vec<u32>, ell: u32, k: usize, s: usize, public_seed: u64) -> PyResult<Vec<f64>> {
    let scheme = HashScheme::new(public_seed, ell, k, s).map_err(err)?;
    let wrap = |vals: &[u32], offset: usize| -> Vec<CommMessage> {
        vals.iter().enumerate().map(|(i, &value)| CommMessage { user_index: offset + i, value }).collect()
    };
    let (a, b) = (wrap(&first, 0), wrap(&second, first.len()));
    Ok(comm::comm_decode(&a, &b, &scheme, k, s).map_err(err)?.into_probs())
}

#[pyfunction]
fn pack_values(values: Vec<u32>, ell: u32) -> Vec<u8> {
    comm::pack_values(&values, ell)
}

#[pyfunction]
fn unpack_values(data: Vec<u8>, ell: u32, count: usize) -> PyResult<Vec<u32>> {
    comm::unpack_values(&data, ell, count).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (k, s, alpha, epsilon=None, ell=None))]
fn planned_sample_size(k: usize, s: usize, alpha: f64, epsilon: Option<f64>, ell: Option<u32>) -> PyResult<u64> {
    let scheme = match (epsilon, ell) {
        (Some(epsilon), None) => PlanScheme::Ldp { epsilon },
        (None, Some(ell)) => PlanScheme::Comm { ell },
        _ => return Err(err("give exactly one of epsilon and ell")),
    };
    bounds::planned_sample_size(scheme, k, s, alpha).map_err(err)
}

/// The `plan` report as printed by the command line tool.
#[pyfunction]
#[pyo3(signature = (scheme, k, s, alpha, epsilon=None, ell=None))]
fn plan(scheme: &str, k: usize, s: usize, alpha: f64, epsilon: Option<f64>, ell: Option<u32>) -> PyResult<String> {
    Ok(harness::plan(scheme, k, s, alpha, epsilon, ell).map_err(err)?.to_string())
}

/// `(gap, target, satisfied)` for the packing family.
#[pyfunction]
fn packing_gap(k: usize, s: usize) -> PyResult<(f64, f64, bool)> {
    let r = bounds::packing_gap(k, s).map_err(err)?;
    Ok((r.value, r.bound, r.satisfied))
}

/// Verification suite as a JSON array of bound reports.
#[pyfunction]
fn verify_bounds() -> PyResult<String> {
    serde_json::to_string(&harness::verification_suite()).map_err(err)
}

/// `(tv_error, bits_per_user, seed)` of one seeded trial.
#[pyfunction]
#[pyo3(signature = (scheme, k, s, n, param, master_seed, trial=0))]
fn run_trial(scheme: &str, k: usize, s: usize, n: usize, param: f64, master_seed: u64, trial: usize) -> PyResult<(f64, u32, u64)> {
    let scheme: Scheme = scheme.parse().map_err(err)?;
    let param = if scheme.is_ldp() {
        Param::Epsilon(param)
    } else {
        if param.fract() != 0.0 || param < 1.0 {
            return Err(err(format!("ell must be a positive integer, got {param}")));
        }
        Param::Ell(param as u32)
    };
    let r = harness::run_trial(master_seed, &Cell { scheme, k, s, n, param }, trial).map_err(err)?;
    Ok((r.tv_error, r.bits_per_user, r.seed))
}

#[pymodule]
fn sparse_dist_lab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDistribution>()?;
    m.add_function(wrap_pyfunction!(tv_distance, m)?)?;
    m.add_function(wrap_pyfunction!(project_simplex, m)?)?;
    m.add_function(wrap_pyfunction!(project_sparse_simplex, m)?)?;
    m.add_function(wrap_pyfunction!(fwht, m)?)?;
    m.add_function(wrap_pyfunction!(hadamard_entry, m)?)?;
    m.add_function(wrap_pyfunction!(hr_encode, m)?)?;
    m.add_function(wrap_pyfunction!(hr_decode, m)?)?;
    m.add_function(wrap_pyfunction!(rappor_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(comm_encode, m)?)?;
    m.add_function(wrap_pyfunction!(comm_decode, m)?)?;
    m.add_function(wrap_pyfunction!(pack_values, m)?)?;
    m.add_function(wrap_pyfunction!(unpack_values, m)?)?;
    m.add_function(wrap_pyfunction!(planned_sample_size, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(packing_gap, m)?)?;
    m.add_function(wrap_pyfunction!(verify_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    Ok(())
}
