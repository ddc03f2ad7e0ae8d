//! Central finite-difference gradient checks.

use super::{Graph, ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// `|a - n| / max(1, |a|, |n|)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / 1f64.max(analytic.abs()).max(numeric.abs())
}

/// Compares the reverse-mode gradient of the scalar built by `f` against
/// central differences with step `h` in every input coordinate, returning the
/// largest [`relative_error`].
pub fn fd_check<F>(mut f: F, inputs: &[Matrix], h: f64) -> Result<f64>
where
    F: FnMut(&mut Graph, &[Tensor]) -> Result<Tensor>,
{
    if !(h > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {h}")));
    }
    let mut g = Graph::new();
    let ts: Vec<Tensor> = inputs.iter().map(|m| g.input(m.clone())).collect();
    let y = f(&mut g, &ts)?;
    g.backward(y)?;
    let analytic: Vec<Matrix> = ts
        .iter()
        .zip(inputs)
        .map(|(&t, m)| g.grad(t).cloned().unwrap_or_else(|| Matrix::zeros(m.rows(), m.cols())))
        .collect();

    let mut eval = |vals: &[Matrix]| -> Result<f64> {
        let mut g = Graph::new();
        let ts: Vec<Tensor> = vals.iter().map(|m| g.input(m.clone())).collect();
        let y = f(&mut g, &ts)?;
        Ok(g.value(y).item())
    };

    let mut work: Vec<Matrix> = inputs.to_vec();
    let mut worst: f64 = 0.0;
    for i in 0..inputs.len() {
        for j in 0..inputs[i].len() {
            let orig = inputs[i].data()[j];
            work[i].data_mut()[j] = orig + h;
            let fp = eval(&work)?;
            work[i].data_mut()[j] = orig - h;
            let fm = eval(&work)?;
            work[i].data_mut()[j] = orig;
            let numeric = (fp - fm) / (2.0 * h);
            worst = worst.max(relative_error(analytic[i].data()[j], numeric));
        }
    }
    Ok(worst)
}

/// Like [`fd_check`], perturbing every value of every parameter in `store`.
/// The store's values are restored and its gradients zeroed on return.
pub fn fd_check_params<F>(store: &mut ParamStore, mut f: F, h: f64) -> Result<f64>
where
    F: FnMut(&mut Graph, &ParamStore) -> Result<Tensor>,
{
    if !(h > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {h}")));
    }
    store.zero_grad();
    let mut g = Graph::new();
    let y = f(&mut g, store)?;
    g.backward(y)?;
    g.accumulate_grads(store);
    let analytic: Vec<Matrix> = store.iter().map(|p| p.grad.clone()).collect();
    store.zero_grad();

    let ids: Vec<_> = store.ids().collect();
    let mut worst: f64 = 0.0;
    for (pi, &id) in ids.iter().enumerate() {
        for j in 0..store.get(id).value.len() {
            let orig = store.get(id).value.data()[j];
            store.get_mut(id).value.data_mut()[j] = orig + h;
            let fp = {
                let mut g = Graph::new();
                let y = f(&mut g, store)?;
                g.value(y).item()
            };
            store.get_mut(id).value.data_mut()[j] = orig - h;
            let fm = {
                let mut g = Graph::new();
                let y = f(&mut g, store)?;
                g.value(y).item()
            };
            store.get_mut(id).value.data_mut()[j] = orig;
            let numeric = (fp - fm) / (2.0 * h);
            worst = worst.max(relative_error(analytic[pi].data()[j], numeric));
        }
    }
    Ok(worst)
}
