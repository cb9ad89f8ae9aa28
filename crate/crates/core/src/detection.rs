//! Preamble detection, pilot channel estimation and SIC subtraction.

use num_complex::Complex64;

use crate::channel::{energy, ComplexSignal};
use crate::error::{Error, Result};
use crate::sequences::{inner, Dictionary};

/// Columns whose component orthogonal to the selected span is below this
/// fraction of their norm are treated as linearly dependent and skipped.
pub const PIVOT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmpStop {
    pub max_iters: usize,
    /// Stop once residual energy ≤ `residual_threshold · energy(y)`.
    pub residual_threshold: f64,
}

impl OmpStop {
    /// Default rule for a hypothesised number of active users over a window
    /// of `len` samples with noise power `noise_power`.
    pub fn for_hypothesis(active: f64, len: usize, noise_power: f64, total_energy: f64) -> Self {
        let max_iters = (2.0 * active).ceil().max(1.0) as usize;
        let expected_noise = len as f64 * noise_power;
        let residual_threshold = if total_energy > 0.0 { 1.1 * expected_noise / total_energy } else { 0.0 };
        Self { max_iters, residual_threshold }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Selected column indices in selection order.
    pub indices: Vec<usize>,
    /// Least-squares amplitude per selected index.
    pub coefficients: Vec<Complex64>,
    pub residual_energy: f64,
    /// Residual energy after each iteration.
    pub residual_trace: Vec<f64>,
}

/// Orthogonal matching pursuit with incremental modified Gram-Schmidt.
pub fn omp_detect(y: &[Complex64], dict: &Dictionary, stop: OmpStop) -> Result<DetectionResult> {
    let m = dict.column_len();
    if y.len() != m {
        return Err(Error::Dimension { expected: m, got: y.len() });
    }
    let total = energy(y);
    let limit = stop.residual_threshold * total;
    let mut residual = y.to_vec();
    let mut res_energy = total;
    let mut basis: Vec<Vec<Complex64>> = Vec::new();
    // r_cols[i] holds column i of the triangular factor, entries 0..=i
    let mut r_cols: Vec<Vec<Complex64>> = Vec::new();
    let mut proj: Vec<Complex64> = Vec::new();
    let mut indices = Vec::new();
    let mut blocked = vec![false; dict.len()];
    let mut corr = vec![Complex64::default(); dict.len()];
    let mut trace = Vec::new();

    while indices.len() < stop.max_iters && res_energy > limit {
        dict.correlate_into(&residual, &mut corr);
        let Some(j) = (0..dict.len())
            .filter(|&j| !blocked[j])
            .max_by(|&a, &b| corr[a].norm_sqr().total_cmp(&corr[b].norm_sqr()).then(b.cmp(&a)))
        else {
            break;
        };
        blocked[j] = true;
        let col = dict.column(j);
        let norm = energy(col).sqrt();
        let mut v = col.to_vec();
        let mut rcol = Vec::with_capacity(basis.len() + 1);
        for q in &basis {
            let c = inner(q, &v);
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
            rcol.push(c);
        }
        let vn = energy(&v).sqrt();
        if vn <= PIVOT_TOLERANCE * norm {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= vn);
        rcol.push(Complex64::new(vn, 0.0));
        let c = inner(&v, &residual);
        for (ri, qi) in residual.iter_mut().zip(&v) {
            *ri -= c * qi;
        }
        proj.push(inner(&v, y));
        basis.push(v);
        r_cols.push(rcol);
        indices.push(j);
        res_energy = energy(&residual);
        trace.push(res_energy);
    }

    // back substitution R c = Qᴴ y
    let s = indices.len();
    let mut coefficients = vec![Complex64::default(); s];
    for i in (0..s).rev() {
        let mut acc = proj[i];
        for (k, coef) in coefficients.iter().enumerate().skip(i + 1) {
            acc -= r_cols[k][i] * coef;
        }
        coefficients[i] = acc / r_cols[i][i];
    }

    Ok(DetectionResult { indices, coefficients, residual_energy: res_energy, residual_trace: trace })
}

/// True iff the mean sample energy exceeds `threshold_factor · noise_power`.
pub fn energy_detect(segment: &[Complex64], threshold_factor: f64, noise_power: f64) -> Result<bool> {
    if segment.is_empty() {
        return Err(Error::Dimension { expected: 1, got: 0 });
    }
    Ok(energy(segment) / segment.len() as f64 > threshold_factor * noise_power)
}

/// Least-squares gain ĥ = ⟨p, y⟩ / ‖p‖².
pub fn ls_channel_estimate(segment: &[Complex64], pilot: &[Complex64]) -> Result<Complex64> {
    if segment.len() != pilot.len() {
        return Err(Error::Dimension { expected: pilot.len(), got: segment.len() });
    }
    let e = energy(pilot);
    if e == 0.0 {
        return Err(Error::Numeric("zero-energy pilot".into()));
    }
    Ok(inner(pilot, segment) / e)
}

/// Subtracts `contribution` from `y` on the window starting at `offset`.
pub fn subtract(y: &[Complex64], contribution: &[Complex64], offset: usize) -> Result<ComplexSignal> {
    let mut out = ComplexSignal::from(y.to_vec());
    subtract_in_place(&mut out, contribution, offset)?;
    Ok(out)
}

pub fn subtract_in_place(y: &mut [Complex64], contribution: &[Complex64], offset: usize) -> Result<()> {
    let end = offset
        .checked_add(contribution.len())
        .filter(|&e| e <= y.len())
        .ok_or(Error::Dimension { expected: y.len(), got: offset.saturating_add(contribution.len()) })?;
    for (a, b) in y[offset..end].iter_mut().zip(contribution) {
        *a -= b;
    }
    Ok(())
}
