//! The K-user frequency-selective channel: per-link impulse responses with
//! seeded Rayleigh sampling, the effective per-subblock matrices produced by
//! the cyclic-prefix chain, and the distance-based effective-noise model used
//! when residual interference taps are treated as noise.
//!
//! All effective matrices are built operationally, by pushing unit basis
//! vectors through (prepend cyclic prefix) → (convolve) → (discard prefix).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{circulant_from_first_column, convolve, ensure_finite, CMat};

/// One transmitter→receiver link: complex taps `h[1..=L]`, one per symbol
/// period.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    taps: Vec<Complex64>,
}

impl ImpulseResponse {
    pub fn new(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::InvalidArgument(
                "impulse response needs at least one tap".into(),
            ));
        }
        ensure_finite(taps.iter().copied(), "impulse response")?;
        Ok(Self { taps })
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    /// Number of taps `L`.
    pub fn tap_count(&self) -> usize {
        self.taps.len()
    }
}

/// Per-link tap counts for a K-user network; entry `(rx, tx)` is the length
/// of the link from transmitter `tx` to receiver `rx` (0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TapLengths {
    users: usize,
    grid: Vec<usize>,
}

impl TapLengths {
    /// All desired links get `desired` taps, all cross links `interference`.
    pub fn symmetric(users: usize, desired: usize, interference: usize) -> Result<Self> {
        if users == 0 {
            return Err(Error::InvalidArgument("need at least one user".into()));
        }
        if desired == 0 || interference == 0 {
            return Err(Error::InvalidArgument("tap counts must be at least 1".into()));
        }
        let grid = (0..users * users)
            .map(|idx| {
                if idx / users == idx % users {
                    desired
                } else {
                    interference
                }
            })
            .collect();
        Ok(Self { users, grid })
    }

    /// Full per-link grid in row-major `(rx, tx)` order.
    pub fn from_grid(users: usize, grid: Vec<usize>) -> Result<Self> {
        if users == 0 {
            return Err(Error::InvalidArgument("need at least one user".into()));
        }
        if grid.len() != users * users {
            return Err(Error::InvalidArgument(format!(
                "tap grid must hold {} entries, got {}",
                users * users,
                grid.len()
            )));
        }
        if grid.iter().any(|&l| l == 0) {
            return Err(Error::InvalidArgument("tap counts must be at least 1".into()));
        }
        Ok(Self { users, grid })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn get(&self, rx: usize, tx: usize) -> usize {
        self.grid[rx * self.users + tx]
    }

    /// Longest desired link, `max_k L_{k,k}`.
    pub fn max_desired(&self) -> usize {
        (0..self.users).map(|k| self.get(k, k)).max().unwrap_or(1)
    }

    /// Longest interfering link, `max_{k≠i} L_{k,i}`; `1` for a single-user
    /// network, where no interfering link exists.
    pub fn max_interference(&self) -> usize {
        let mut best = 0;
        for rx in 0..self.users {
            for tx in 0..self.users {
                if rx != tx {
                    best = best.max(self.get(rx, tx));
                }
            }
        }
        best.max(1)
    }
}

/// A complete K×K grid of impulse responses, immutable after sampling.
/// Entry `(k, i)` is the link from transmitter `i` to receiver `k`.
///
/// The derived quantities `L_D = max_k L_{k,k}` and
/// `L_I = max_k max_{i≠k} L_{k,i}` are computed from the grid on demand, so
/// they can never drift from the stored links.
#[derive(Debug, Clone)]
pub struct NetworkChannel {
    users: usize,
    links: Vec<ImpulseResponse>,
}

impl NetworkChannel {
    pub fn from_links(users: usize, links: Vec<ImpulseResponse>) -> Result<Self> {
        if users == 0 {
            return Err(Error::InvalidArgument("need at least one user".into()));
        }
        if links.len() != users * users {
            return Err(Error::InvalidArgument(format!(
                "link grid must hold {} impulse responses, got {}",
                users * users,
                links.len()
            )));
        }
        Ok(Self { users, links })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    /// Link from transmitter `tx` to receiver `rx` (0-based).
    pub fn link(&self, rx: usize, tx: usize) -> &ImpulseResponse {
        &self.links[rx * self.users + tx]
    }

    /// Desired link of user `k`.
    pub fn desired(&self, k: usize) -> &ImpulseResponse {
        self.link(k, k)
    }

    /// Tap count of user `k`'s desired link, `L_{k,k}`.
    pub fn desired_taps(&self, k: usize) -> usize {
        self.desired(k).tap_count()
    }

    /// `L_D = max_k L_{k,k}`.
    pub fn max_desired_taps(&self) -> usize {
        (0..self.users).map(|k| self.desired_taps(k)).max().unwrap_or(1)
    }

    /// `L_I = max_k max_{i≠k} L_{k,i}`; `1` for a single-user network.
    pub fn max_interference_taps(&self) -> usize {
        let mut best = 0;
        for rx in 0..self.users {
            for tx in 0..self.users {
                if rx != tx {
                    best = best.max(self.link(rx, tx).tap_count());
                }
            }
        }
        best.max(1)
    }

    /// Frobenius distance between two channels with identical tap grids.
    pub fn distance(&self, other: &NetworkChannel) -> f64 {
        self.links
            .iter()
            .zip(&other.links)
            .flat_map(|(a, b)| a.taps.iter().zip(&b.taps).map(|(x, y)| (x - y).norm_sqr()))
            .sum::<f64>()
            .sqrt()
    }
}

/// Draws every tap independently as circularly-symmetric complex Gaussian
/// with variance `exp(-beta * (l - 1))` for tap index `l = 1..=L`. The same
/// seed reproduces the same channel bit-for-bit.
pub fn sample_network(taps: &TapLengths, beta: f64, seed: u64) -> Result<NetworkChannel> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "tap decay rate must be finite and non-negative, got {beta}"
        )));
    }
    let users = taps.users();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut links = Vec::with_capacity(users * users);
    for rx in 0..users {
        for tx in 0..users {
            let l = taps.get(rx, tx);
            let mut tap_values = Vec::with_capacity(l);
            for ell in 0..l {
                let std = (0.5 * (-beta * ell as f64).exp()).sqrt();
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                tap_values.push(Complex64::new(re * std, im * std));
            }
            links.push(ImpulseResponse::new(tap_values)?);
        }
    }
    NetworkChannel::from_links(users, links)
}

/// The `n×n` circulant matrix seen through a cyclic prefix long enough for
/// the whole impulse response: first column is `h` zero-padded to `n`.
pub fn effective_circulant_interference(h: &ImpulseResponse, n: usize) -> Result<CMat> {
    if h.tap_count() > n {
        return Err(Error::InvalidArgument(format!(
            "{} taps do not fit a block of {n} samples; the cyclic prefix cannot circularize this link",
            h.tap_count()
        )));
    }
    let mut col = h.taps().to_vec();
    col.resize(n, Complex64::ZERO);
    circulant_from_first_column(&col)
}

fn cp_extend(payload: &[Complex64], cp_len: usize) -> Vec<Complex64> {
    let n = payload.len();
    let mut out = Vec::with_capacity(n + cp_len);
    out.extend_from_slice(&payload[n - cp_len..]);
    out.extend_from_slice(payload);
    out
}

/// The `n×n` matrix mapping one subblock's payload to its own post-prefix
/// received samples: (discard first `cp_len` samples) ∘ (convolve with `h`)
/// ∘ (prepend the payload's last `cp_len` samples), with contributions from
/// neighbouring subblocks excluded. Built by pushing the `n` unit basis
/// vectors through those three steps.
pub fn chain_matrix(h: &ImpulseResponse, n: usize, cp_len: usize) -> Result<CMat> {
    if n == 0 {
        return Err(Error::InvalidArgument("block length must be at least 1".into()));
    }
    if cp_len > n {
        return Err(Error::InvalidArgument(format!(
            "cyclic prefix of {cp_len} samples cannot be copied from a block of {n}"
        )));
    }
    let mut out = CMat::zeros(n, n);
    let mut basis = vec![Complex64::ZERO; n];
    for j in 0..n {
        basis[j] = Complex64::new(1.0, 0.0);
        let conv = convolve(&cp_extend(&basis, cp_len), h.taps());
        for r in 0..n {
            out[(r, j)] = conv[cp_len + r];
        }
        basis[j] = Complex64::ZERO;
    }
    Ok(out)
}

/// Splits a desired-link chain matrix into the circulant part built from the
/// first `min(L, n)` taps and the residual; their sum reconstructs the input
/// exactly. The residual is what survives projection onto subcarriers the
/// circulant part cannot reach.
pub fn decompose_desired(
    hbar: &CMat,
    h: &ImpulseResponse,
    n: usize,
) -> Result<(CMat, CMat)> {
    if hbar.nrows() != n || hbar.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "expected a {n}x{n} chain matrix, got {}x{}",
            hbar.nrows(),
            hbar.ncols()
        )));
    }
    let mut col = h.taps().to_vec();
    col.resize(n, Complex64::ZERO);
    col.truncate(n);
    let circulant_part = circulant_from_first_column(&col)?;
    let residual_part = hbar - &circulant_part;
    Ok((circulant_part, residual_part))
}

/// The `n×n` matrix mapping the previous subblock's payload to the leakage
/// it deposits in the current subblock's post-prefix samples. `gap` extra
/// silent samples between the subblocks (beyond the prefix) shift the
/// leakage window further out; `gap = 0` is the plain back-to-back layout.
pub(crate) fn leakage_matrix(
    h: &ImpulseResponse,
    n: usize,
    cp_len: usize,
    gap: usize,
) -> Result<CMat> {
    if n == 0 {
        return Err(Error::InvalidArgument("block length must be at least 1".into()));
    }
    if cp_len > n {
        return Err(Error::InvalidArgument(format!(
            "cyclic prefix of {cp_len} samples cannot be copied from a block of {n}"
        )));
    }
    let nbar = n + cp_len;
    let mut out = CMat::zeros(n, n);
    let mut basis = vec![Complex64::ZERO; n];
    for j in 0..n {
        basis[j] = Complex64::new(1.0, 0.0);
        let conv = convolve(&cp_extend(&basis, cp_len), h.taps());
        for r in 0..n {
            let idx = nbar + gap + cp_len + r;
            if idx < conv.len() {
                out[(r, j)] = conv[idx];
            }
        }
        basis[j] = Complex64::ZERO;
    }
    Ok(out)
}

/// Leakage from one subblock into the next when subblocks are laid out
/// back-to-back (prefix, payload, prefix, payload, ...).
pub fn inter_subblock_matrix(h: &ImpulseResponse, n: usize, cp_len: usize) -> Result<CMat> {
    leakage_matrix(h, n, cp_len, 0)
}

/// Distance-dependent large-scale fading parameters: `distances` holds
/// `d_{k,i}` in row-major `(rx, tx)` order, `alpha` is the path-loss
/// exponent and `beta` the tap-decay rate.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleConfig {
    users: usize,
    distances: Vec<f64>,
    alpha: f64,
    beta: f64,
}

impl LargeScaleConfig {
    pub fn new(users: usize, distances: Vec<f64>, alpha: f64, beta: f64) -> Result<Self> {
        if users == 0 {
            return Err(Error::InvalidArgument("need at least one user".into()));
        }
        if distances.len() != users * users {
            return Err(Error::InvalidArgument(format!(
                "distance grid must hold {} entries, got {}",
                users * users,
                distances.len()
            )));
        }
        if distances.iter().any(|&d| !d.is_finite() || d <= 0.0) {
            return Err(Error::InvalidArgument("distances must be positive".into()));
        }
        if !alpha.is_finite() || alpha < 0.0 || !beta.is_finite() || beta < 0.0 {
            return Err(Error::InvalidArgument(
                "path-loss exponent and tap decay must be non-negative".into(),
            ));
        }
        Ok(Self {
            users,
            distances,
            alpha,
            beta,
        })
    }

    pub fn users(&self) -> usize {
        self.users
    }

    pub fn distance(&self, rx: usize, tx: usize) -> f64 {
        self.distances[rx * self.users + tx]
    }

    /// Effective noise power per receiver when interference taps with index
    /// `>= l_d` are treated as noise instead of being circularized:
    ///
    /// `sum_{i≠k} (d_kk/d_ki)^alpha * sum_{l=l_d..=l_i} exp(-beta(l-1)) * p
    ///  + d_kk^alpha * sigma2`
    ///
    /// The distance ratio enters with the attenuating sign, so far-away
    /// interferers contribute less.
    pub fn effective_noise_variance(
        &self,
        l_d: usize,
        l_i: usize,
        p: f64,
        sigma2: f64,
    ) -> Result<Vec<f64>> {
        if l_d == 0 {
            return Err(Error::InvalidArgument("desired tap count must be at least 1".into()));
        }
        if l_d > l_i {
            return Err(Error::InvalidArgument(format!(
                "no residual taps to absorb: l_d = {l_d} exceeds l_i = {l_i}"
            )));
        }
        if !p.is_finite() || p < 0.0 || !sigma2.is_finite() || sigma2 < 0.0 {
            return Err(Error::InvalidArgument(
                "power and noise variance must be non-negative".into(),
            ));
        }
        let residual_energy: f64 = (l_d..=l_i).map(|l| (-self.beta * (l - 1) as f64).exp()).sum();
        Ok((0..self.users)
            .map(|k| {
                let d_kk = self.distance(k, k);
                let interference: f64 = (0..self.users)
                    .filter(|&i| i != k)
                    .map(|i| (d_kk / self.distance(k, i)).powf(self.alpha))
                    .sum();
                interference * residual_energy * p + d_kk.powf(self.alpha) * sigma2
            })
            .collect())
    }
}
