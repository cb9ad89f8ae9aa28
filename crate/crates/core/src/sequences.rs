//! Preamble and pilot dictionaries.
//!
//! Two families are supported: Zadoff-Chu sequences of prime length (roots
//! and cyclic shifts, optionally repeated) and i.i.d. complex Gaussian
//! columns normalized to an exact energy. Column `j` of a Zadoff-Chu
//! dictionary is cyclic shift `j % shifts` of root `j / shifts + 1`, i.e.
//! shifts of one root are enumerated before moving to the next root.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_normal, ComplexSignal};
use crate::error::{config_err, Result};

/// Reference per-sample power of data transmissions.
pub const P_REF: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DictionaryKind {
    ZadoffChu,
    GaussianNormalized,
}

/// Immutable column dictionary, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    kind: DictionaryKind,
    column_len: usize,
    columns: usize,
    per_column_energy: f64,
    data: Vec<Complex64>,
}

impl Dictionary {
    /// Builds a dictionary from explicit columns, all of the same length.
    pub fn from_columns(kind: DictionaryKind, columns: Vec<ComplexSignal>) -> Result<Self> {
        let column_len = columns.first().map(|c| c.len()).unwrap_or(0);
        if column_len == 0 {
            return Err(config_err("dictionary needs at least one non-empty column"));
        }
        if columns.iter().any(|c| c.len() != column_len) {
            return Err(config_err("dictionary columns must share one length"));
        }
        let per_column_energy = columns[0].energy();
        let n = columns.len();
        let data = columns.into_iter().flat_map(|c| c.into_inner()).collect();
        Ok(Self { kind, column_len, columns: n, per_column_energy, data })
    }

    pub fn kind(&self) -> DictionaryKind {
        self.kind
    }

    /// Number of columns.
    pub fn len(&self) -> usize {
        self.columns
    }

    pub fn is_empty(&self) -> bool {
        self.columns == 0
    }

    pub fn column_len(&self) -> usize {
        self.column_len
    }

    pub fn per_column_energy(&self) -> f64 {
        self.per_column_energy
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        &self.data[j * self.column_len..(j + 1) * self.column_len]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.column_len)
    }

    /// Writes ⟨a_j, r⟩ = Σ conj(a_j[i]) r[i] for every column into `out`.
    pub fn correlate_into(&self, r: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(r.len(), self.column_len);
        for (col, o) in self.columns().zip(out.iter_mut()) {
            *o = inner(col, r);
        }
    }
}

/// ⟨a, b⟩ = Σ conj(a_i) b_i.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re, im)
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// x[m] = exp(−jπ·root·m(m+1)/length) for prime `length`.
pub fn zadoff_chu(root: usize, length: usize) -> Result<ComplexSignal> {
    if !is_prime(length) {
        return Err(config_err(format!("Zadoff-Chu length must be prime, got {length}")));
    }
    if root == 0 || root >= length || gcd(root, length) != 1 {
        return Err(config_err(format!("root {root} must lie in 1..{length} and be coprime with it")));
    }
    // phase index reduced modulo 2·length keeps the argument small and exact
    let two_n = 2 * length as u128;
    Ok((0..length)
        .map(|m| {
            let m = m as u128;
            let idx = (root as u128 * m % two_n) * (m + 1) % two_n;
            Complex64::from_polar(1.0, -PI * idx as f64 / length as f64)
        })
        .collect())
}

/// Parameters of a preamble family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreambleSpec {
    pub size: usize,
    pub base_length: usize,
    pub repetitions: usize,
    /// Per-sample preamble power relative to [`P_REF`].
    pub power_scale: f64,
    pub kind: DictionaryKind,
    /// Cyclic-shift spacing N_cs for Zadoff-Chu families; 0 uses root sequences only.
    pub zc_cyclic_shift: usize,
}

impl PreambleSpec {
    /// Total column length, base length times repetitions.
    pub fn column_len(&self) -> usize {
        self.base_length * self.repetitions
    }

    pub fn column_energy(&self) -> f64 {
        self.column_len() as f64 * self.power_scale * P_REF
    }

    fn shifts_per_root(&self) -> usize {
        if self.zc_cyclic_shift == 0 {
            1
        } else {
            (self.base_length / self.zc_cyclic_shift).max(1)
        }
    }

    /// Largest Zadoff-Chu family available for this length and shift spacing.
    pub fn max_zc_size(&self) -> usize {
        self.base_length.saturating_sub(1) * self.shifts_per_root()
    }

    pub fn validate(&self) -> Result<()> {
        if self.size == 0 || self.base_length == 0 || self.repetitions == 0 {
            return Err(config_err("preamble size, length and repetitions must be positive"));
        }
        if !(self.power_scale > 0.0 && self.power_scale.is_finite()) {
            return Err(config_err(format!("preamble power scale must be positive, got {}", self.power_scale)));
        }
        if self.kind == DictionaryKind::ZadoffChu {
            if !is_prime(self.base_length) {
                return Err(config_err(format!(
                    "Zadoff-Chu preamble length must be prime, got {}",
                    self.base_length
                )));
            }
            if self.size > self.max_zc_size() {
                return Err(config_err(format!(
                    "{} preambles exceed the {} available Zadoff-Chu sequences of length {}; \
                     use the gaussian_normalized kind for larger families",
                    self.size,
                    self.max_zc_size(),
                    self.base_length
                )));
            }
        }
        Ok(())
    }
}

/// Builds the preamble dictionary. `rng` is only consumed by Gaussian families.
pub fn build_preamble_dictionary<R: Rng + ?Sized>(spec: &PreambleSpec, rng: &mut R) -> Result<Dictionary> {
    spec.validate()?;
    let target = spec.column_energy();
    match spec.kind {
        DictionaryKind::ZadoffChu => {
            let shifts = spec.shifts_per_root();
            let amp = Complex64::new((spec.power_scale * P_REF).sqrt(), 0.0);
            let mut columns = Vec::with_capacity(spec.size);
            let mut base = ComplexSignal::default();
            for j in 0..spec.size {
                let (root, shift) = (j / shifts + 1, (j % shifts) * spec.zc_cyclic_shift);
                if j % shifts == 0 {
                    base = zadoff_chu(root, spec.base_length)?;
                }
                let n = spec.base_length;
                let col: ComplexSignal = (0..spec.column_len()).map(|m| base[(m % n + shift) % n] * amp).collect();
                columns.push(col);
            }
            let mut dict = Dictionary::from_columns(DictionaryKind::ZadoffChu, columns)?;
            dict.per_column_energy = target;
            Ok(dict)
        }
        DictionaryKind::GaussianNormalized => gaussian_dictionary(spec.size, spec.column_len(), target, rng),
    }
}

/// Gaussian pilot sequences with energy `length · P_REF`.
pub fn build_pilot_dictionary<R: Rng + ?Sized>(size: usize, length: usize, rng: &mut R) -> Result<Dictionary> {
    if size == 0 || length == 0 {
        return Err(config_err("pilot dictionary needs positive size and length"));
    }
    gaussian_dictionary(size, length, length as f64 * P_REF, rng)
}

fn gaussian_dictionary<R: Rng + ?Sized>(size: usize, len: usize, energy: f64, rng: &mut R) -> Result<Dictionary> {
    let mut data = Vec::with_capacity(size * len);
    for _ in 0..size {
        let start = data.len();
        data.extend((0..len).map(|_| complex_normal(rng, 1.0)));
        let col = &mut data[start..];
        let e: f64 = col.iter().map(|x| x.norm_sqr()).sum();
        let s = (energy / e).sqrt();
        col.iter_mut().for_each(|x| *x *= s);
    }
    Ok(Dictionary {
        kind: DictionaryKind::GaussianNormalized,
        column_len: len,
        columns: size,
        per_column_energy: energy,
        data,
    })
}
