//! Independence of a coordinate window from its image under a power of the
//! shift on `2^Z`, certified on a finite truncation.
//!
//! A point of the truncation over positions `[-depth, depth]` is a bit
//! string; position `i` is stored at bit `i + depth`. The shift acts by
//! `(g x)_i = x_{i+1}`, so the window `[-k, k]` of `g^q x` reads positions
//! `[q - k, q + k]` of `x`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest truncation depth accepted; the check visits `2^(2 depth + 1)`
/// points.
pub const MAX_DEPTH: usize = 15;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShiftCertificate {
    pub k: usize,
    pub depth: usize,
    /// The shift power whose window is independent of the original.
    pub power: usize,
    /// Atoms of the window algebra: `2^(2k+1)`.
    pub window_atoms: u64,
    /// Atoms of the algebra generated by the window and its shift by each
    /// power `1..=power`, in order. Independence means `window_atoms^2`.
    pub product_atoms: Vec<u64>,
}

impl ShiftCertificate {
    pub fn verify(&self) -> std::result::Result<(), String> {
        let w = 1u64 << (2 * self.k + 1);
        if self.window_atoms != w || self.power != 2 * self.k + 1 || self.product_atoms.len() != self.power {
            return Err("certificate header is inconsistent".into());
        }
        if self.product_atoms.last() != Some(&(w * w)) {
            return Err("window and its shift are not independent".into());
        }
        if let Some(q) = self.product_atoms[..self.power - 1].iter().position(|&c| c == w * w) {
            return Err(format!("shift power {} is already independent", q + 1));
        }
        Ok(())
    }
}

/// Counts the atoms of the algebra generated by the window `[-k, k]` and its
/// shift by `q` for each `q` in `1..=2k+1`, by visiting every point of the
/// truncation and recording which pair of window atoms it lies in.
pub fn shift_independence(k: usize, depth: usize) -> Result<ShiftCertificate> {
    let power = 2 * k + 1;
    if depth < 2 * power {
        return Err(Error::precondition(format!("depth {depth} is below {} needed for the shifted window", 2 * power)));
    }
    if depth > MAX_DEPTH {
        return Err(Error::precondition(format!("depth {depth} exceeds the supported maximum {MAX_DEPTH}")));
    }
    let width = power;
    let mask = (1u64 << width) - 1;
    let w = 1usize << width;
    let lo = depth - k;
    let mut seen: Vec<Vec<bool>> = vec![vec![false; w * w]; power];
    for x in 0u64..(1u64 << (2 * depth + 1)) {
        let a = ((x >> lo) & mask) as usize;
        for (q, s) in seen.iter_mut().enumerate() {
            let b = ((x >> (lo + q + 1)) & mask) as usize;
            s[a * w + b] = true;
        }
    }
    let product_atoms = seen.iter().map(|s| s.iter().filter(|&&b| b).count() as u64).collect();
    let cert = ShiftCertificate { k, depth, power, window_atoms: w as u64, product_atoms };
    cert.verify().map_err(Error::defect)?;
    Ok(cert)
}
