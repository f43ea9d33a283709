use pyo3::prelude::*;

#[pymodule]
fn hecke_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
