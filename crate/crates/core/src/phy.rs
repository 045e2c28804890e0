//! Transmit and receive chains for the interference-suppressing multi-carrier
//! scheme: frame construction, IDFT-column precoding, the projection that
//! removes aligned inter-user interference, successive cancellation across
//! subblocks, the closed-form rate expressions with and without transmitter
//! channel knowledge, and the small fold-combiner receiver.
//!
//! The scheme picks the cyclic prefix long enough to circularize every
//! interfering link but too short for the desired link. All interference then
//! lives in the subspace spanned by the low-index IDFT columns shared by all
//! transmitters, while the desired signal spills into the remaining columns,
//! where it is recovered interference-free.
//!
//! Subcarriers are indexed 1-based at every public boundary, matching the
//! IDFT column convention in [`crate::numerics::IdftMatrix`].

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{chain_matrix, leakage_matrix, ImpulseResponse, NetworkChannel};
use crate::error::{Error, Result};
use crate::numerics::{convolve, idft_matrix, qr_decompose, svd, CMat, CVec};

/// Relative `σ_min/σ_max` threshold below which an effective channel matrix
/// is declared numerically singular.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// Data-block length `N = max(L_I, 2(L_D - L_I))`.
pub fn data_block_len(l_d: usize, l_i: usize) -> usize {
    l_i.max(2 * l_d.saturating_sub(l_i))
}

/// How each user's data subcarriers are chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubcarrierPolicy {
    /// User `k` sends on the first `L_{k,k} - L_I` subcarriers and decodes on
    /// the fixed window starting right after the largest possible data set.
    FirstCarriers,
    /// Explicit 1-based data subcarrier sets, one per user. Each user then
    /// decodes on the lowest subcarriers that no user transmits on.
    Custom(Vec<Vec<usize>>),
}

/// Frame layout shared by all users: block lengths, prefix and guard sizes,
/// and per-user data/decode subcarrier sets (1-based IDFT column indices).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameConfig {
    users: usize,
    desired_taps: Vec<usize>,
    l_d: usize,
    l_i: usize,
    n: usize,
    cp_len: usize,
    guard_len: usize,
    subblocks: usize,
    subblock_guard: usize,
    data_carriers: Vec<Vec<usize>>,
    decode_carriers: Vec<Vec<usize>>,
}

impl FrameConfig {
    pub fn users(&self) -> usize {
        self.users
    }

    /// Data-block length `N`.
    pub fn block_len(&self) -> usize {
        self.n
    }

    /// Cyclic-prefix length, `L_I - 1`.
    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    /// Subblock length `N̄ = N + L_I - 1` (prefix plus payload, excluding any
    /// inter-subblock guard).
    pub fn subblock_len(&self) -> usize {
        self.n + self.cp_len
    }

    /// Silent samples appended to every subblock; zero unless the
    /// guard-interval variant is enabled.
    pub fn subblock_guard(&self) -> usize {
        self.subblock_guard
    }

    /// Stride between consecutive subblock starts.
    pub fn subblock_span(&self) -> usize {
        self.subblock_len() + self.subblock_guard
    }

    /// Trailing zero samples ending the frame, `L_D - 1`.
    pub fn guard_len(&self) -> usize {
        self.guard_len
    }

    /// Number of subblocks `B` per frame.
    pub fn subblocks(&self) -> usize {
        self.subblocks
    }

    /// Total frame length `M = B·(subblock span) + L_D - 1`.
    pub fn frame_len(&self) -> usize {
        self.subblocks * self.subblock_span() + self.guard_len
    }

    pub fn max_desired_taps(&self) -> usize {
        self.l_d
    }

    pub fn max_interference_taps(&self) -> usize {
        self.l_i
    }

    /// Tap count of user `k`'s desired link.
    pub fn desired_taps(&self, k: usize) -> usize {
        self.desired_taps[k]
    }

    /// Number of data streams of user `k`, `(L_{k,k} - L_I)^+`.
    pub fn streams(&self, k: usize) -> usize {
        self.data_carriers[k].len()
    }

    /// 1-based data subcarriers of user `k` (empty for unserved users).
    pub fn data_carriers(&self, k: usize) -> &[usize] {
        &self.data_carriers[k]
    }

    /// 1-based decode subcarriers of user `k`; orthogonal to every user's
    /// data set.
    pub fn decode_carriers(&self, k: usize) -> &[usize] {
        &self.decode_carriers[k]
    }

    /// Users with at least one data stream.
    pub fn served_users(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.users).filter(|&k| self.streams(k) > 0)
    }

    /// Switches to the guard-interval layout: `L_D - L_I` silent samples
    /// after every subblock, which absorb the desired link's excess delay
    /// spread so no cancellation between subblocks is needed.
    pub fn with_inter_subblock_guard(mut self) -> Self {
        self.subblock_guard = self.l_d - self.l_i;
        self
    }
}

/// Builds the frame layout for `channel` with `subblocks` subblocks per
/// frame. Users whose desired link is no longer than every interfering link
/// get an empty carrier set and zero rate; if that holds for all users the
/// scheme degenerates and an error asks the caller to fall back to TDMA.
pub fn make_frame_config(
    channel: &NetworkChannel,
    subblocks: usize,
    policy: SubcarrierPolicy,
) -> Result<FrameConfig> {
    if subblocks == 0 {
        return Err(Error::InvalidArgument("need at least one subblock".into()));
    }
    let users = channel.users();
    let l_d = channel.max_desired_taps();
    let l_i = channel.max_interference_taps();
    let desired_taps: Vec<usize> = (0..users).map(|k| channel.desired_taps(k)).collect();
    let streams: Vec<usize> = desired_taps.iter().map(|&l| l.saturating_sub(l_i)).collect();
    if streams.iter().all(|&s| s == 0) {
        return Err(Error::SchemeInapplicable(format!(
            "no desired link exceeds the interference spread of {l_i} taps; use the TDMA-OFDM baseline"
        )));
    }
    let n = data_block_len(l_d, l_i);

    let data_carriers: Vec<Vec<usize>> = match &policy {
        SubcarrierPolicy::FirstCarriers => streams.iter().map(|&s| (1..=s).collect()).collect(),
        SubcarrierPolicy::Custom(sets) => {
            if sets.len() != users {
                return Err(Error::Configuration(format!(
                    "expected {} subcarrier sets, got {}",
                    users,
                    sets.len()
                )));
            }
            let mut out = Vec::with_capacity(users);
            for (k, set) in sets.iter().enumerate() {
                let mut set = set.clone();
                set.sort_unstable();
                set.dedup();
                if set.len() != streams[k] {
                    return Err(Error::Configuration(format!(
                        "user {k} needs exactly {} distinct data subcarriers, got {}",
                        streams[k],
                        set.len()
                    )));
                }
                if set.iter().any(|&c| c == 0 || c > n) {
                    return Err(Error::Configuration(format!(
                        "user {k} subcarriers must lie in 1..={n}"
                    )));
                }
                out.push(set);
            }
            out
        }
    };

    let decode_carriers: Vec<Vec<usize>> = match &policy {
        SubcarrierPolicy::FirstCarriers => {
            // fixed window right above the largest possible data set
            streams
                .iter()
                .map(|&s| {
                    let lo = l_d - l_i + 1;
                    (lo..lo + s).collect()
                })
                .collect()
        }
        SubcarrierPolicy::Custom(_) => {
            let mut used = vec![false; n + 1];
            for set in &data_carriers {
                for &c in set {
                    used[c] = true;
                }
            }
            let free: Vec<usize> = (1..=n).filter(|&c| !used[c]).collect();
            let mut out = Vec::with_capacity(users);
            for (k, &s) in streams.iter().enumerate() {
                if free.len() < s {
                    return Err(Error::Configuration(format!(
                        "user {k} needs {s} interference-free decode subcarriers but only {} remain",
                        free.len()
                    )));
                }
                out.push(free[..s].to_vec());
            }
            out
        }
    };

    for (k, set) in decode_carriers.iter().enumerate() {
        if set.iter().any(|&c| c == 0 || c > n) {
            return Err(Error::Configuration(format!(
                "decode subcarriers of user {k} fall outside 1..={n}"
            )));
        }
    }

    Ok(FrameConfig {
        users,
        desired_taps,
        l_d,
        l_i,
        n,
        cp_len: l_i - 1,
        guard_len: l_d - 1,
        subblocks,
        subblock_guard: 0,
        data_carriers,
        decode_carriers,
    })
}

/// Data symbols for one frame: `symbols[user][subblock]` is the stream
/// vector sent by that user in that subblock (empty for unserved users).
#[derive(Debug, Clone)]
pub struct SymbolGrid {
    symbols: Vec<Vec<CVec>>,
}

impl SymbolGrid {
    /// Wraps explicit symbols, validating the shape against `cfg`.
    pub fn from_symbols(cfg: &FrameConfig, symbols: Vec<Vec<CVec>>) -> Result<Self> {
        if symbols.len() != cfg.users() {
            return Err(Error::InvalidArgument(format!(
                "expected symbols for {} users, got {}",
                cfg.users(),
                symbols.len()
            )));
        }
        for (k, per_user) in symbols.iter().enumerate() {
            if per_user.len() != cfg.subblocks() {
                return Err(Error::InvalidArgument(format!(
                    "user {k}: expected {} subblocks, got {}",
                    cfg.subblocks(),
                    per_user.len()
                )));
            }
            for s in per_user {
                if s.len() != cfg.streams(k) {
                    return Err(Error::InvalidArgument(format!(
                        "user {k}: expected {} symbols per subblock, got {}",
                        cfg.streams(k),
                        s.len()
                    )));
                }
            }
        }
        Ok(Self { symbols })
    }

    /// Draws IID complex Gaussian symbols with per-symbol power
    /// `N·P/(L_{k,k} - L_I)`, so each precoded subblock carries energy `N·P`.
    pub fn random(cfg: &FrameConfig, p: f64, seed: u64) -> Result<Self> {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidArgument("symbol power must be non-negative".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut symbols = Vec::with_capacity(cfg.users());
        for k in 0..cfg.users() {
            let streams = cfg.streams(k);
            let power = symbol_power(cfg, p, k);
            let std = (0.5 * power).sqrt();
            let mut per_user = Vec::with_capacity(cfg.subblocks());
            for _ in 0..cfg.subblocks() {
                per_user.push(CVec::from_fn(streams, |_, _| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re * std, im * std)
                }));
            }
            symbols.push(per_user);
        }
        Ok(Self { symbols })
    }

    pub fn user(&self, k: usize) -> &[CVec] {
        &self.symbols[k]
    }

    pub fn users(&self) -> usize {
        self.symbols.len()
    }
}

/// Per-symbol transmit power `N·P/(L_{k,k} - L_I)` of user `k`; zero for
/// unserved users.
pub fn symbol_power(cfg: &FrameConfig, p: f64, k: usize) -> f64 {
    let streams = cfg.streams(k);
    if streams == 0 {
        0.0
    } else {
        cfg.block_len() as f64 * p / streams as f64
    }
}

/// Spreads one subblock's symbols over the 1-based `carriers` of the
/// `n`-point IDFT basis: `x = Σ f_c · s_c`.
pub fn precode_subblock(symbols: &[Complex64], carriers: &[usize], n: usize) -> Result<CVec> {
    if symbols.len() != carriers.len() {
        return Err(Error::InvalidArgument(format!(
            "{} symbols for {} subcarriers",
            symbols.len(),
            carriers.len()
        )));
    }
    let f = idft_matrix(n)?;
    let mut out = CVec::zeros(n);
    for (&s, &c) in symbols.iter().zip(carriers) {
        let col = f.column(c)?;
        out += col * s;
    }
    Ok(out)
}

/// Concatenates `B` precoded payloads into one frame: each payload is
/// prefixed with its own last `cp_len` samples, followed by the subblock
/// guard (if any), and the frame ends with `guard_len` zeros.
pub fn assemble_block(payloads: &[CVec], cfg: &FrameConfig) -> Result<Vec<Complex64>> {
    if payloads.len() != cfg.subblocks() {
        return Err(Error::InvalidArgument(format!(
            "expected {} payloads, got {}",
            cfg.subblocks(),
            payloads.len()
        )));
    }
    let n = cfg.block_len();
    let mut out = Vec::with_capacity(cfg.frame_len());
    for payload in payloads {
        if payload.len() != n {
            return Err(Error::InvalidArgument(format!(
                "payload length {} does not match block length {n}",
                payload.len()
            )));
        }
        out.extend(payload.as_slice()[n - cfg.cp_len()..].iter().copied());
        out.extend(payload.iter().copied());
        out.extend(std::iter::repeat(Complex64::ZERO).take(cfg.subblock_guard()));
    }
    out.extend(std::iter::repeat(Complex64::ZERO).take(cfg.guard_len()));
    debug_assert_eq!(out.len(), cfg.frame_len());
    Ok(out)
}

/// Precode and assemble every user's frame from a symbol grid.
pub fn transmit_grid(grid: &SymbolGrid, cfg: &FrameConfig) -> Result<Vec<Vec<Complex64>>> {
    if grid.users() != cfg.users() {
        return Err(Error::InvalidArgument("symbol grid does not match config".into()));
    }
    let mut frames = Vec::with_capacity(cfg.users());
    for k in 0..cfg.users() {
        let payloads: Vec<CVec> = grid
            .user(k)
            .iter()
            .map(|s| precode_subblock(s.as_slice(), cfg.data_carriers(k), cfg.block_len()))
            .collect::<Result<_>>()?;
        frames.push(assemble_block(&payloads, cfg)?);
    }
    Ok(frames)
}

/// Passes all user frames through the channel: receiver `k` observes the sum
/// of every transmitter's frame convolved with its link to `k`, truncated to
/// the frame length, plus IID complex Gaussian noise of variance `sigma2`
/// (none when `sigma2 == 0`).
pub fn transmit(
    frames: &[Vec<Complex64>],
    channel: &NetworkChannel,
    sigma2: f64,
    seed: u64,
) -> Result<Vec<Vec<Complex64>>> {
    if frames.len() != channel.users() {
        return Err(Error::InvalidArgument(format!(
            "{} frames for {} users",
            frames.len(),
            channel.users()
        )));
    }
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(Error::InvalidArgument("noise variance must be non-negative".into()));
    }
    let m = frames.first().map(|f| f.len()).unwrap_or(0);
    if frames.iter().any(|f| f.len() != m) {
        return Err(Error::InvalidArgument("all frames must share one length".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise_std = (0.5 * sigma2).sqrt();
    let mut received = Vec::with_capacity(channel.users());
    for rx in 0..channel.users() {
        let mut y = vec![Complex64::ZERO; m];
        for (tx, frame) in frames.iter().enumerate() {
            let conv = convolve(frame, channel.link(rx, tx).taps());
            for (acc, v) in y.iter_mut().zip(conv.iter()) {
                *acc += v;
            }
        }
        if sigma2 > 0.0 {
            for s in y.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *s += Complex64::new(re * noise_std, im * noise_std);
            }
        }
        received.push(y);
    }
    Ok(received)
}

/// The received samples of subblock `b` at one receiver (prefix included).
pub fn subblock_samples<'a>(y: &'a [Complex64], cfg: &FrameConfig, b: usize) -> Result<&'a [Complex64]> {
    if b >= cfg.subblocks() {
        return Err(Error::InvalidArgument(format!(
            "subblock {b} outside 0..{}",
            cfg.subblocks()
        )));
    }
    let start = b * cfg.subblock_span();
    let end = start + cfg.subblock_len();
    if y.len() < end {
        return Err(Error::InvalidArgument(format!(
            "received vector of {} samples is too short for subblock {b}",
            y.len()
        )));
    }
    Ok(&y[start..end])
}

/// Removes the aligned inter-user interference from one received subblock:
/// discards the cyclic prefix, then projects onto user `k`'s decode
/// subcarriers, which are orthogonal to every data subcarrier. With only
/// interference on the air the output is zero up to numerical precision.
pub fn project_iui(y_subblock: &[Complex64], cfg: &FrameConfig, k: usize) -> Result<CVec> {
    if k >= cfg.users() {
        return Err(Error::InvalidArgument(format!("user {k} outside 0..{}", cfg.users())));
    }
    if y_subblock.len() != cfg.subblock_len() {
        return Err(Error::InvalidArgument(format!(
            "subblock must hold {} samples, got {}",
            cfg.subblock_len(),
            y_subblock.len()
        )));
    }
    let f = idft_matrix(cfg.block_len())?;
    let rows = f.columns(cfg.decode_carriers(k))?;
    let kept = CVec::from_column_slice(&y_subblock[cfg.cp_len()..]);
    Ok(rows.adjoint() * kept)
}

/// Effective data matrix of user `k`: decode-side projection of the
/// desired link's chain matrix onto the data subcarriers. Square of size
/// `streams(k)`; full rank with probability one over continuous channel
/// draws.
pub fn effective_matrix(channel: &NetworkChannel, cfg: &FrameConfig, k: usize) -> Result<CMat> {
    projected_matrix(channel, cfg, k, false)
}

/// Decode-side view of the leakage from the previous subblock, projected the
/// same way as [`effective_matrix`].
pub fn inter_subblock_effective(
    channel: &NetworkChannel,
    cfg: &FrameConfig,
    k: usize,
) -> Result<CMat> {
    projected_matrix(channel, cfg, k, true)
}

fn projected_matrix(
    channel: &NetworkChannel,
    cfg: &FrameConfig,
    k: usize,
    leakage: bool,
) -> Result<CMat> {
    if k >= cfg.users() {
        return Err(Error::InvalidArgument(format!("user {k} outside 0..{}", cfg.users())));
    }
    let s = cfg.streams(k);
    if s == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let n = cfg.block_len();
    let h = channel.desired(k);
    let inner = if leakage {
        leakage_matrix(h, n, cfg.cp_len(), cfg.subblock_guard())?
    } else {
        chain_matrix(h, n, cfg.cp_len())?
    };
    let f = idft_matrix(n)?;
    let f_data = f.columns(cfg.data_carriers(k))?;
    let f_decode = f.columns(cfg.decode_carriers(k))?;
    Ok(f_decode.adjoint() * inner * f_data)
}

/// Decoded frame: symbol estimates mirroring the [`SymbolGrid`] shape plus
/// the per-stream gains (QR diagonal magnitudes) of each user's effective
/// matrix.
#[derive(Debug, Clone)]
pub struct DecodedFrame {
    pub estimates: Vec<Vec<CVec>>,
    pub stream_gains: Vec<Vec<f64>>,
}

/// Zero-forcing successive cancellation over the whole frame. Subblock 1 of
/// each served user is solved through the QR factors of the effective
/// matrix; every later subblock first subtracts the projected leakage of the
/// previously decoded subblock. Noiseless input is recovered exactly; noisy
/// input runs the same recursion on the perturbed data.
pub fn sic_decode(
    received: &[Vec<Complex64>],
    channel: &NetworkChannel,
    cfg: &FrameConfig,
) -> Result<DecodedFrame> {
    if received.len() != cfg.users() {
        return Err(Error::InvalidArgument(format!(
            "{} received vectors for {} users",
            received.len(),
            cfg.users()
        )));
    }
    let mut estimates = vec![Vec::new(); cfg.users()];
    let mut stream_gains = vec![Vec::new(); cfg.users()];
    for k in 0..cfg.users() {
        let s = cfg.streams(k);
        if s == 0 {
            estimates[k] = vec![CVec::zeros(0); cfg.subblocks()];
            continue;
        }
        let eff = effective_matrix(channel, cfg, k)?;
        let sv = svd(&eff)?.singular_values;
        if sv[0] <= 0.0 || sv[s - 1] <= RANK_TOLERANCE * sv[0] {
            return Err(Error::DecodeFailure { user: k });
        }
        let qr = qr_decompose(&eff)?;
        let leak = inter_subblock_effective(channel, cfg, k)?;
        let mut per_user = Vec::with_capacity(cfg.subblocks());
        for b in 0..cfg.subblocks() {
            let sub = subblock_samples(&received[k], cfg, b)?;
            let mut t = project_iui(sub, cfg, k)?;
            if b > 0 {
                let prev: &CVec = &per_user[b - 1];
                t -= &leak * prev;
            }
            let z = qr.q.adjoint() * t;
            per_user.push(back_substitute(&qr.r, &z));
        }
        stream_gains[k] = qr.diagonal_magnitudes();
        estimates[k] = per_user;
    }
    Ok(DecodedFrame {
        estimates,
        stream_gains,
    })
}

fn back_substitute(r: &CMat, z: &CVec) -> CVec {
    let n = z.len();
    let mut x = CVec::zeros(n);
    for i in (0..n).rev() {
        let mut acc = z[i];
        for j in (i + 1)..n {
            acc -= r[(i, j)] * x[j];
        }
        x[i] = acc / r[(i, i)];
    }
    x
}

/// Per-stream SNR entering the rate formulas: of the transmit power `P`, a
/// fraction `N/(subblock span)` survives the prefix (and guard) overhead,
/// and each of the `streams` symbols carries `N·P/streams`.
fn stream_snr(cfg: &FrameConfig, p: f64, sigma2: f64, streams: usize) -> f64 {
    let n = cfg.block_len() as f64;
    let span = cfg.subblock_span() as f64;
    (n / span) * (n * p / streams as f64) / sigma2
}

/// Per-user spectral efficiency (bits per channel use) of the layered
/// zero-forcing receiver when transmitters have no channel knowledge, in the
/// many-subblock limit where the trailing guard amortizes away:
///
/// `R_k = Σ_n log2(1 + |r_nn|² · SNR) / (subblock span)`
///
/// with `r_nn` the QR diagonal of the effective matrix. Unserved users get
/// zero. Multiply by [`finite_block_scaling`] for a finite frame.
pub fn rate_no_csit(
    channel: &NetworkChannel,
    cfg: &FrameConfig,
    p: f64,
    sigma2: f64,
) -> Result<Vec<f64>> {
    check_rate_inputs(p, sigma2)?;
    let mut rates = Vec::with_capacity(cfg.users());
    for k in 0..cfg.users() {
        let s = cfg.streams(k);
        if s == 0 {
            rates.push(0.0);
            continue;
        }
        let eff = effective_matrix(channel, cfg, k)?;
        let qr = qr_decompose(&eff)?;
        let snr = stream_snr(cfg, p, sigma2, s);
        let span = cfg.subblock_span() as f64;
        let sum: f64 = qr
            .diagonal_magnitudes()
            .iter()
            .map(|&g| (1.0 + g * g * snr).log2())
            .sum();
        rates.push(sum / span);
    }
    Ok(rates)
}

/// Rate factor for a finite frame of `B` subblocks: the trailing guard of
/// `L_D - 1` samples is pure overhead, so every asymptotic rate shrinks by
/// `B·span / (B·span + L_D - 1)`.
pub fn finite_block_scaling(cfg: &FrameConfig) -> f64 {
    let used = (cfg.subblocks() * cfg.subblock_span()) as f64;
    used / (used + cfg.guard_len() as f64)
}

/// Per-user spectral efficiency when each transmitter knows its own
/// effective matrix: the singular-value subchannels are loaded by
/// water-filling under the same total power and overhead accounting as
/// [`rate_no_csit`].
pub fn rate_with_csit(
    channel: &NetworkChannel,
    cfg: &FrameConfig,
    p: f64,
    sigma2: f64,
) -> Result<Vec<f64>> {
    check_rate_inputs(p, sigma2)?;
    let mut rates = Vec::with_capacity(cfg.users());
    for k in 0..cfg.users() {
        let s = cfg.streams(k);
        if s == 0 {
            rates.push(0.0);
            continue;
        }
        let eff = effective_matrix(channel, cfg, k)?;
        let sv = svd(&eff)?.singular_values;
        let gains: Vec<f64> = sv.iter().map(|&x| x * x).collect();
        if gains.iter().all(|&g| g == 0.0) {
            rates.push(0.0);
            continue;
        }
        let n = cfg.block_len() as f64;
        let span = cfg.subblock_span() as f64;
        let budget = (n / span) * n * p;
        let wf = waterfill(&gains, budget, sigma2)?;
        let sum: f64 = gains
            .iter()
            .zip(&wf.allocations)
            .map(|(&g, &q)| (1.0 + g * q / sigma2).log2())
            .sum();
        rates.push(sum / span);
    }
    Ok(rates)
}

fn check_rate_inputs(p: f64, sigma2: f64) -> Result<()> {
    if !p.is_finite() || p < 0.0 {
        return Err(Error::InvalidArgument("transmit power must be non-negative".into()));
    }
    if !sigma2.is_finite() || sigma2 <= 0.0 {
        return Err(Error::InvalidArgument("noise variance must be positive".into()));
    }
    Ok(())
}

/// Water-filling power allocation over parallel subchannels with gains
/// `g_n`: `p_n = (1/δ - σ²/g_n)^+` with the water level `1/δ` chosen so the
/// allocations sum to `p_total`.
#[derive(Debug, Clone)]
pub struct Waterfill {
    /// Per-subchannel allocation, in the caller's order.
    pub allocations: Vec<f64>,
    /// The common water level `1/δ`.
    pub water_level: f64,
}

pub fn waterfill(gains: &[f64], p_total: f64, sigma2: f64) -> Result<Waterfill> {
    if gains.is_empty() {
        return Err(Error::InvalidArgument("need at least one subchannel".into()));
    }
    if gains.iter().any(|&g| !g.is_finite() || g < 0.0) {
        return Err(Error::InvalidArgument("subchannel gains must be non-negative".into()));
    }
    if gains.iter().all(|&g| g == 0.0) {
        return Err(Error::InvalidArgument("all subchannel gains are zero".into()));
    }
    if !p_total.is_finite() || p_total <= 0.0 {
        return Err(Error::InvalidArgument("power budget must be positive".into()));
    }
    if !sigma2.is_finite() || sigma2 < 0.0 {
        return Err(Error::InvalidArgument("noise variance must be non-negative".into()));
    }

    let mut order: Vec<usize> = (0..gains.len()).filter(|&i| gains[i] > 0.0).collect();
    order.sort_by(|&i, &j| gains[j].partial_cmp(&gains[i]).unwrap());

    // Largest active set whose weakest member still gets positive power.
    let mut level = 0.0;
    let mut active = 0;
    for m in (1..=order.len()).rev() {
        let inv_sum: f64 = order[..m].iter().map(|&i| sigma2 / gains[i]).sum();
        let mu = (p_total + inv_sum) / m as f64;
        if mu * gains[order[m - 1]] > sigma2 {
            level = mu;
            active = m;
            break;
        }
    }

    let mut allocations = vec![0.0; gains.len()];
    for &i in &order[..active] {
        allocations[i] = level - sigma2 / gains[i];
    }
    Ok(Waterfill {
        allocations,
        water_level: level,
    })
}

/// Folds a received vector back onto one block period: the first
/// `n + fold_taps - 1` samples are summed modulo `n`, which turns the linear
/// convolution of a `fold_taps`-tap channel into its circular counterpart.
/// Later samples are discarded.
pub fn fold_combiner(y: &[Complex64], n: usize, fold_taps: usize) -> Result<Vec<Complex64>> {
    if n == 0 || fold_taps == 0 {
        return Err(Error::InvalidArgument(
            "block length and tap count must be at least 1".into(),
        ));
    }
    let needed = n + fold_taps - 1;
    if y.len() < needed {
        return Err(Error::InvalidArgument(format!(
            "need at least {needed} samples to fold, got {}",
            y.len()
        )));
    }
    let mut out = vec![Complex64::ZERO; n];
    for (idx, &v) in y[..needed].iter().enumerate() {
        out[idx % n] += v;
    }
    Ok(out)
}

/// Post-combining statistics of the two-slot repetition receiver: one symbol
/// rides the all-ones IDFT column over `n = 2` slots, the receiver folds the
/// interference span back onto one period and decodes with the second IDFT
/// column.
#[derive(Debug, Clone)]
pub struct FoldReceiverStats {
    /// Effective complex gain of the data symbol after combining.
    pub gain: Complex64,
    /// Variance of the combined noise sample.
    pub noise_variance: f64,
    /// `log2(1 + P·|gain|² / noise_variance)`.
    pub rate: f64,
}

/// Evaluates the fold-combiner receiver for a desired link `h` when the
/// interfering links have `fold_taps` taps, with symbol power `p` and noise
/// variance `sigma2`.
pub fn fold_receiver_stats(
    h: &ImpulseResponse,
    fold_taps: usize,
    p: f64,
    sigma2: f64,
) -> Result<FoldReceiverStats> {
    check_rate_inputs(p, sigma2)?;
    if fold_taps == 0 {
        return Err(Error::InvalidArgument("tap count must be at least 1".into()));
    }
    let n = 2usize;
    if h.tap_count() < fold_taps {
        return Err(Error::InvalidArgument(format!(
            "desired link has {} taps, fewer than the {fold_taps} being folded",
            h.tap_count()
        )));
    }
    let conv = crate::numerics::toeplitz_conv_matrix(h.taps(), n)?;
    let window = n + fold_taps - 1;
    // fold each column of the tall convolution matrix
    let mut folded = CMat::zeros(n, n);
    for j in 0..n {
        let col: Vec<Complex64> = conv.column(j).iter().copied().collect();
        let f = fold_combiner(&col[..window.min(col.len())], n, fold_taps)?;
        for r in 0..n {
            folded[(r, j)] = f[r];
        }
    }
    let f = idft_matrix(n)?;
    let carrier = f.column(1)?;
    let decode = f.column(2)?;
    let gain = (decode.adjoint() * &folded * carrier)[(0, 0)];
    // each output slot accumulates one noise sample per wrapped copy
    let mut noise_variance = 0.0;
    for m in 0..n {
        let copies = (window - m).div_ceil(n) as f64;
        noise_variance += copies * decode[m].norm_sqr() * sigma2;
    }
    let rate = (1.0 + p * gain.norm_sqr() / noise_variance).log2();
    Ok(FoldReceiverStats {
        gain,
        noise_variance,
        rate,
    })
}
