use crate::error::{Error, Result};

/// Applies first differencing `d` times; output is `d` points shorter.
pub fn difference(series: &[f64], d: usize) -> Result<Vec<f64>> {
    if series.len() < d {
        return Err(Error::SeriesTooShort {
            needed: d,
            got: series.len(),
        });
    }
    let mut out = series.to_vec();
    for _ in 0..d {
        out = out.windows(2).map(|w| w[1] - w[0]).collect();
    }
    Ok(out)
}

/// Re-integrates `d`-times-differenced values that continue `last_values`
/// (the most recent raw observations, oldest first).
pub fn undifference(forecast_diffs: &[f64], last_values: &[f64], d: usize) -> Result<Vec<f64>> {
    if last_values.len() < d {
        return Err(Error::InsufficientAnchor {
            needed: d,
            got: last_values.len(),
        });
    }
    if d == 0 {
        return Ok(forecast_diffs.to_vec());
    }
    let tail = &last_values[last_values.len() - d..];
    // anchors[k] = last value of the k-th difference of the tail
    let mut anchors = Vec::with_capacity(d);
    let mut level = tail.to_vec();
    for _ in 0..d {
        anchors.push(*level.last().expect("tail has d >= 1 values"));
        level = level.windows(2).map(|w| w[1] - w[0]).collect();
    }
    let mut out = forecast_diffs.to_vec();
    for &anchor in anchors.iter().rev() {
        let mut acc = anchor;
        for v in &mut out {
            acc += *v;
            *v = acc;
        }
    }
    Ok(out)
}
