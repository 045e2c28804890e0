//! Closed-form degrees-of-freedom calculators: the high-SNR pre-log of the
//! interference-suppressing scheme, its symmetric-network simplification,
//! the TDMA-OFDM baseline, and the circulant-structured multi-antenna
//! variant. All results are exact rationals so cross-checks between the
//! formulas can assert equality, not closeness.
//!
//! The no-CSIT sum DoF computed here also lower-bounds what a broadcast
//! configuration can achieve when the K transmitters cooperate as one
//! distributed-antenna array: cooperation cannot reduce it.

use num_rational::Rational64;

use crate::error::{Error, Result};
use crate::phy::data_block_len;

/// Inputs for the sum-DoF formulas: per-user desired tap counts and the
/// largest interfering tap count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DofQuery {
    desired_taps: Vec<usize>,
    interference_taps: usize,
}

impl DofQuery {
    pub fn new(desired_taps: Vec<usize>, interference_taps: usize) -> Result<Self> {
        if desired_taps.is_empty() {
            return Err(Error::InvalidArgument("need at least one user".into()));
        }
        if interference_taps == 0 || desired_taps.iter().any(|&l| l == 0) {
            return Err(Error::InvalidArgument("tap counts must be at least 1".into()));
        }
        Ok(Self {
            desired_taps,
            interference_taps,
        })
    }

    /// Symmetric network: `users` links of `desired` taps each.
    pub fn symmetric(users: usize, desired: usize, interference: usize) -> Result<Self> {
        if users == 0 {
            return Err(Error::InvalidArgument("need at least one user".into()));
        }
        Self::new(vec![desired; users], interference)
    }

    pub fn users(&self) -> usize {
        self.desired_taps.len()
    }

    pub fn desired_taps(&self) -> &[usize] {
        &self.desired_taps
    }

    pub fn interference_taps(&self) -> usize {
        self.interference_taps
    }
}

/// Achievable sum DoF without any transmitter channel knowledge:
///
/// `max( Σ_k (L_kk - L_I)^+ / (N + L_I - 1), 1 )`
///
/// with `N = max(L_I, 2(L_D - L_I))`. The floor of 1 is what round-robin
/// OFDM provides when the scheme has nothing to offer.
pub fn sum_dof_no_csit(q: &DofQuery) -> Rational64 {
    let l_i = q.interference_taps as i64;
    let l_d = *q.desired_taps.iter().max().expect("non-empty") as i64;
    let n = data_block_len(l_d as usize, l_i as usize) as i64;
    let denom = n + l_i - 1;
    let total: Rational64 = q
        .desired_taps
        .iter()
        .map(|&l| Rational64::new((l as i64 - l_i).max(0), denom))
        .sum();
    total.max(Rational64::from_integer(1))
}

/// Symmetric-network form of [`sum_dof_no_csit`], valid for `L_D > L_I`:
///
/// * `K / (2 + (L_I - 1)/(L_D - L_I))` when `2·L_D >= 3·L_I`
/// * `K·(L_D - L_I) / (2·L_I - 1)` otherwise
///
/// Wherever the value exceeds 1 it coincides with the general formula on
/// the same inputs (no `max` floor is applied here).
pub fn sum_dof_symmetric(users: usize, l_d: usize, l_i: usize) -> Result<Rational64> {
    if users == 0 {
        return Err(Error::InvalidArgument("need at least one user".into()));
    }
    if l_i == 0 {
        return Err(Error::InvalidArgument("tap counts must be at least 1".into()));
    }
    if l_d <= l_i {
        return Err(Error::InvalidArgument(format!(
            "symmetric form needs l_d > l_i, got l_d = {l_d}, l_i = {l_i}; that regime falls back to TDMA"
        )));
    }
    let k = users as i64;
    let (l_d, l_i) = (l_d as i64, l_i as i64);
    let value = if 2 * l_d >= 3 * l_i {
        // K/(2 + (L_I-1)/(L_D-L_I)) = K(L_D-L_I)/(2(L_D-L_I)+L_I-1)
        Rational64::new(k * (l_d - l_i), 2 * (l_d - l_i) + l_i - 1)
    } else {
        Rational64::new(k * (l_d - l_i), 2 * l_i - 1)
    };
    Ok(value)
}

/// Sum DoF of round-robin OFDM with `m` data symbols per frame and a prefix
/// covering the longer of the two tap lengths: `m / (m + max(L_I, L_D) - 1)`.
pub fn tdma_ofdm_dof(m: usize, l_d: usize, l_i: usize) -> Result<Rational64> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one symbol per frame".into()));
    }
    if l_d == 0 || l_i == 0 {
        return Err(Error::InvalidArgument("tap counts must be at least 1".into()));
    }
    let m = m as i64;
    Ok(Rational64::new(m, m + l_d.max(l_i) as i64 - 1))
}

/// Sum DoF of the flat-fading multi-antenna network whose cross links are
/// circulant and whose desired links are generic: `K·antennas/2`.
pub fn mimo_circulant_dof(users: usize, antennas: usize) -> Result<Rational64> {
    if users == 0 || antennas == 0 {
        return Err(Error::InvalidArgument(
            "user and antenna counts must be at least 1".into(),
        ));
    }
    Ok(Rational64::new((users * antennas) as i64, 2))
}

/// Least-squares slope of sum rate versus `log2(P)` from `(P_dB, rate)`
/// samples; the empirical counterpart of the DoF formulas.
pub fn dof_slope_estimate(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("need at least two sweep points".into()));
    }
    // x = log2(P) = P_dB * log2(10)/10
    let scale = std::f64::consts::LOG2_10 / 10.0;
    let xs: Vec<f64> = points.iter().map(|&(db, _)| db * scale).collect();
    let n = points.len() as f64;
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = points.iter().map(|&(_, y)| y).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, &(_, y)) in xs.iter().zip(points) {
        num += (x - x_mean) * (y - y_mean);
        den += (x - x_mean) * (x - x_mean);
    }
    if den == 0.0 {
        return Err(Error::InvalidArgument("sweep points must span distinct powers".into()));
    }
    Ok(num / den)
}
