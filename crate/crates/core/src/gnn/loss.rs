use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};

/// Row-wise, max-shifted.
pub fn log_softmax(logits: ArrayView2<f64>) -> Array2<f64> {
    let mut out = logits.to_owned();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

fn check(logp: ArrayView2<f64>, labels: &[Option<usize>], mask: &[bool]) -> Result<usize> {
    if labels.len() != logp.nrows() || mask.len() != logp.nrows() {
        return Err(Error::shape("loss rows", logp.nrows(), labels.len().min(mask.len())));
    }
    let mut m = 0;
    for (i, &on) in mask.iter().enumerate() {
        if on {
            match labels[i] {
                Some(c) if c < logp.ncols() => m += 1,
                Some(c) => return Err(Error::Data(format!("label {c} out of range at row {i}"))),
                None => return Err(Error::Config(format!("mask selects unlabeled row {i}"))),
            }
        }
    }
    if m == 0 {
        return Err(Error::Config("loss mask is empty".into()));
    }
    Ok(m)
}

/// Mean negative log-likelihood over masked rows.
pub fn masked_nll(logp: ArrayView2<f64>, labels: &[Option<usize>], mask: &[bool]) -> Result<f64> {
    let m = check(logp, labels, mask)?;
    let mut total = 0.0;
    for (i, &on) in mask.iter().enumerate() {
        if on {
            total -= logp[[i, labels[i].expect("checked")]];
        }
    }
    Ok(total / m as f64)
}

/// Gradient of [`masked_nll`] with respect to the logits that produced
/// `logp`: `(softmax - onehot) / m` on masked rows, zero elsewhere.
pub fn masked_nll_grad(logp: ArrayView2<f64>, labels: &[Option<usize>], mask: &[bool]) -> Result<Array2<f64>> {
    let m = check(logp, labels, mask)? as f64;
    let mut g = Array2::zeros(logp.raw_dim());
    for (i, &on) in mask.iter().enumerate() {
        if on {
            let c = labels[i].expect("checked");
            for j in 0..logp.ncols() {
                let p = logp[[i, j]].exp();
                g[[i, j]] = (p - if j == c { 1.0 } else { 0.0 }) / m;
            }
        }
    }
    Ok(g)
}

/// Fraction of masked rows whose argmax equals the label.
pub fn masked_accuracy(logp: ArrayView2<f64>, labels: &[Option<usize>], mask: &[bool]) -> Result<f64> {
    let m = check(logp, labels, mask)?;
    let hits = mask
        .iter()
        .enumerate()
        .filter(|(i, &on)| on && argmax(logp.row(*i).as_slice().expect("row")) == labels[*i].expect("checked"))
        .count();
    Ok(hits as f64 / m as f64)
}

/// First index of the maximum.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}
