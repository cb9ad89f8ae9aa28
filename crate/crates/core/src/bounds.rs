//! Closed-form reference quantities.
//!
//! Aloha collision probability, AWGN capacity and dispersion, the
//! finite-blocklength normal approximation and its inversion, and loading
//! of externally computed achievability curves. All rates are in bits per
//! complex channel use.

use std::f64::consts::{LN_2, PI};
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};

/// log₂²(e).
pub const LOG2E_SQUARED: f64 = std::f64::consts::LOG2_E * std::f64::consts::LOG2_E;

/// Parameters of one finite-blocklength query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundQuery {
    /// Blocklength in complex channel uses.
    pub n: f64,
    /// Payload log₂M in bits.
    pub k: f64,
    pub epsilon: f64,
    /// P/σ², linear.
    pub snr: f64,
}

impl BoundQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.n >= 1.0) {
            return Err(config_err(format!("blocklength must be >= 1, got {}", self.n)));
        }
        if !(self.k >= 1.0) {
            return Err(config_err(format!("payload must be >= 1 bit, got {}", self.k)));
        }
        check_epsilon(self.epsilon)?;
        if !(self.snr > 0.0 && self.snr.is_finite()) {
            return Err(config_err(format!("snr must be positive, got {}", self.snr)));
        }
        Ok(())
    }
}

fn check_epsilon(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(config_err(format!("error probability must lie in (0, 1), got {eps}")))
    }
}

/// Probability that at least one of the other `active - 1` users picks the
/// same of `slots` slots.
pub fn aloha_collision_probability(active: u64, slots: u64) -> f64 {
    if active <= 1 {
        return 0.0;
    }
    if slots <= 1 {
        return 1.0;
    }
    let others = (active - 1) as f64;
    -(others * (-1.0 / slots as f64).ln_1p()).exp_m1()
}

/// Union-bound companion (K_a − 1)/L of [`aloha_collision_probability`].
pub fn aloha_collision_upper_bound(active: u64, slots: u64) -> f64 {
    active.saturating_sub(1) as f64 / slots.max(1) as f64
}

/// C = log₂(1 + snr).
pub fn awgn_capacity(snr: f64) -> f64 {
    snr.ln_1p() / LN_2
}

/// V = snr(snr + 2)/(snr + 1)² · log₂²e.
pub fn awgn_dispersion(snr: f64) -> f64 {
    snr * (snr + 2.0) / ((snr + 1.0) * (snr + 1.0)) * LOG2E_SQUARED
}

/// nC − √(nV)·Q⁻¹(ε), the normal approximation with the O(log n) term dropped.
pub fn normal_approx_log_m(q: &BoundQuery) -> Result<f64> {
    q.validate()?;
    Ok(normal_approx_unchecked(q.n, q.snr, q_inv(q.epsilon)?))
}

fn normal_approx_unchecked(n: f64, snr: f64, q_inv_eps: f64) -> f64 {
    n * awgn_capacity(snr) - (n * awgn_dispersion(snr)).sqrt() * q_inv_eps
}

/// Smallest SNR (linear) at which the normal approximation reaches `k` bits.
///
/// The approximation dips below zero for tiny SNR when ε < 1/2 and is
/// increasing afterwards, so the crossing with any k ≥ 1 is unique. The root
/// is bracketed by doubling and refined by bisection in log-SNR.
pub fn min_snr_single_user(n: f64, k: f64, epsilon: f64) -> Result<f64> {
    BoundQuery { n, k, epsilon, snr: 1.0 }.validate()?;
    let qi = q_inv(epsilon)?;
    let f = |snr: f64| normal_approx_unchecked(n, snr, qi) - k;

    let mut lo = 1e-12;
    if f(lo) >= 0.0 {
        return Err(Error::Numeric(format!("normal approximation already exceeds {k} bits at snr {lo}")));
    }
    let mut hi = 1.0;
    let mut expansions = 0;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        expansions += 1;
        if expansions > 2000 || !hi.is_finite() {
            return Err(Error::Numeric(format!("could not bracket min snr for n={n}, k={k}, eps={epsilon}")));
        }
    }
    let (mut a, mut b) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if f(mid.exp()) < 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        if b - a < 1e-14 {
            break;
        }
    }
    Ok(b.exp())
}

/// Upper standard-normal quantile: the x with Q(x) = ε.
///
/// Acklam's rational approximation followed by two Halley steps on Q.
pub fn q_inv(epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    if epsilon > 0.5 {
        return Ok(-q_inv_upper(1.0 - epsilon));
    }
    Ok(q_inv_upper(epsilon))
}

fn q_inv_upper(eps: f64) -> f64 {
    if eps == 0.5 {
        return 0.0;
    }
    let mut x = -acklam_lower_quantile(eps);
    for _ in 0..2 {
        let err = q_function(x) - eps;
        let pdf = (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
        let u = err / pdf;
        x += u / (1.0 - 0.5 * x * u);
    }
    x
}

fn acklam_lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Q(x) = ½ erfc(x/√2).
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Complementary error function from Cody's rational fits.
///
/// statrs 0.18 is only good to about 1e-10 relative here, too coarse for
/// the frozen bound values.
pub fn erfc(x: f64) -> f64 {
    const A: [f64; 5] = [
        3.16112374387056560e00,
        1.13864154151050156e02,
        3.77485237685302021e02,
        3.20937758913846947e03,
        1.85777706184603153e-1,
    ];
    const B: [f64; 4] = [
        2.36012909523441209e01,
        2.44024637934444173e02,
        1.28261652607737228e03,
        2.84423683343917062e03,
    ];
    const C: [f64; 9] = [
        5.64188496988670089e-1,
        8.88314979438837594e00,
        6.61191906371416295e01,
        2.98635138197400131e02,
        8.81952221241769090e02,
        1.71204761263407058e03,
        2.05107837782607147e03,
        1.23033935479799725e03,
        2.15311535474403846e-8,
    ];
    const D: [f64; 8] = [
        1.57449261107098347e01,
        1.17693950891312499e02,
        5.37181101862009858e02,
        1.62138957456669019e03,
        3.29079923573345963e03,
        4.36261909014324716e03,
        3.43936767414372164e03,
        1.23033935480374942e03,
    ];
    const P: [f64; 6] = [
        3.05326634961232344e-1,
        3.60344899949804439e-1,
        1.25781726111229246e-1,
        1.60837851487422766e-2,
        6.58749161529837803e-4,
        1.63153871373020978e-2,
    ];
    const Q: [f64; 5] = [
        2.56852019228982242e00,
        1.87295284992346725e00,
        5.27905102951428412e-1,
        6.05183413124413191e-2,
        2.33520497626869185e-3,
    ];
    const FRAC_1_SQRT_PI: f64 = 5.6418958354775628695e-1;

    let y = x.abs();
    if y <= 0.46875 {
        let ysq = if y > 1.11e-16 { y * y } else { 0.0 };
        let mut num = A[4] * ysq;
        let mut den = ysq;
        for i in 0..3 {
            num = (num + A[i]) * ysq;
            den = (den + B[i]) * ysq;
        }
        return 1.0 - x * (num + A[3]) / (den + B[3]);
    }

    let tail = if y <= 4.0 {
        let mut num = C[8] * y;
        let mut den = y;
        for i in 0..7 {
            num = (num + C[i]) * y;
            den = (den + D[i]) * y;
        }
        (num + C[7]) / (den + D[7]) * exp_neg_square(y)
    } else if y < 26.7 {
        let ysq = 1.0 / (y * y);
        let mut num = P[5] * ysq;
        let mut den = ysq;
        for i in 0..4 {
            num = (num + P[i]) * ysq;
            den = (den + Q[i]) * ysq;
        }
        let r = ysq * (num + P[4]) / (den + Q[4]);
        (FRAC_1_SQRT_PI - r) / y * exp_neg_square(y)
    } else {
        0.0
    };
    if x < 0.0 {
        2.0 - tail
    } else {
        tail
    }
}

/// exp(−y²) with y² split into a 1/16-grid part and a remainder, which
/// keeps the rounding error of y² out of the exponent.
fn exp_neg_square(y: f64) -> f64 {
    let ysq = (y * 16.0).trunc() / 16.0;
    let del = (y - ysq) * (y + ysq);
    (-ysq * ysq).exp() * (-del).exp()
}

/// Externally computed curve of minimum SNR versus active users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCurve {
    pub label: String,
    pub points: Vec<(u64, f64)>,
}

impl ReferenceCurve {
    pub fn snr_db_at(&self, active: u64) -> Option<f64> {
        self.points.iter().find(|(k, _)| *k == active).map(|(_, s)| *s)
    }
}

/// Reads a `ka,snr_db` CSV file. The label is the file stem.
pub fn load_reference_curve(path: impl AsRef<Path>) -> Result<ReferenceCurve> {
    let path = path.as_ref();
    let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let file = std::fs::File::open(path)?;
    parse_reference_curve(file, label)
}

pub fn parse_reference_curve<R: Read>(reader: R, label: impl Into<String>) -> Result<ReferenceCurve> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(Error::Parse { line: 1, message: "empty file, expected header `ka,snr_db`".into() }),
        Some(r) => r.map_err(|e| csv_parse_error(&e, 1))?,
    };
    if header.len() != 2 || &header[0] != "ka" || &header[1] != "snr_db" {
        return Err(Error::Parse { line: 1, message: format!("expected header `ka,snr_db`, got {:?}", header) });
    }

    let mut points: Vec<(u64, f64)> = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_parse_error(&e, line))?;
        if rec.len() != 2 {
            return Err(Error::Parse { line, message: format!("expected 2 fields, got {}", rec.len()) });
        }
        let ka: u64 = rec[0]
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("invalid ka `{}`", &rec[0]) })?;
        let snr: f64 = rec[1]
            .parse()
            .map_err(|_| Error::Parse { line, message: format!("invalid snr_db `{}`", &rec[1]) })?;
        if !snr.is_finite() {
            return Err(Error::Parse { line, message: "snr_db must be finite".into() });
        }
        if let Some(&(prev, _)) = points.last() {
            if ka <= prev {
                return Err(Error::Parse {
                    line,
                    message: format!("ka must be strictly increasing ({ka} after {prev})"),
                });
            }
        }
        points.push((ka, snr));
    }
    if points.is_empty() {
        return Err(Error::Parse { line: 2, message: "no data rows".into() });
    }
    Ok(ReferenceCurve { label: label.into(), points })
}

fn csv_parse_error(e: &csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(fallback_line);
    Error::Parse { line, message: e.to_string() }
}
