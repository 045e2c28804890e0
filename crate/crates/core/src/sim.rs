//! Seeded Monte-Carlo sweeps over SNR, user count and scheme, with CSV
//! emission and a self-check suite. Every trial draws its own channel from a
//! seed derived deterministically from (master seed, grid-point index, trial
//! index), and aggregation uses pairwise summation in fixed index order, so
//! results are byte-reproducible regardless of how trials are scheduled.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{sample_network, LargeScaleConfig, NetworkChannel, TapLengths};
use crate::error::{Error, Result};
use crate::phy::{
    self, make_frame_config, rate_no_csit, rate_with_csit, SubcarrierPolicy, SymbolGrid,
};

/// Transmission scheme evaluated by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scheme {
    /// Interference-suppressing multi-carrier scheme, no transmitter CSI;
    /// layered zero-forcing rates.
    IfOfdm,
    /// Same front end with per-link transmitter CSI: singular-value
    /// subchannels loaded by water-filling.
    IfOfdmCsit,
    /// Round-robin OFDM baseline; each user gets every K-th frame.
    TdmaOfdm,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::IfOfdm => "if-ofdm",
            Scheme::IfOfdmCsit => "if-ofdm-csit",
            Scheme::TdmaOfdm => "tdma-ofdm",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "if-ofdm" => Ok(Scheme::IfOfdm),
            "if-ofdm-csit" => Ok(Scheme::IfOfdmCsit),
            "tdma-ofdm" => Ok(Scheme::TdmaOfdm),
            other => Err(Error::InvalidArgument(format!(
                "unknown scheme '{other}' (expected if-ofdm, if-ofdm-csit or tdma-ofdm)"
            ))),
        }
    }
}

/// Inclusive SNR grid in dB.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrGrid {
    pub start_db: f64,
    pub stop_db: f64,
    pub step_db: f64,
}

impl SnrGrid {
    pub fn new(start_db: f64, stop_db: f64, step_db: f64) -> Result<Self> {
        if !start_db.is_finite() || !stop_db.is_finite() || !step_db.is_finite() {
            return Err(Error::InvalidArgument("SNR grid must be finite".into()));
        }
        if step_db <= 0.0 {
            return Err(Error::InvalidArgument("SNR step must be positive".into()));
        }
        if stop_db < start_db {
            return Err(Error::InvalidArgument("SNR stop must not precede start".into()));
        }
        Ok(Self {
            start_db,
            stop_db,
            step_db,
        })
    }

    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop_db - self.start_db) / self.step_db + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start_db + i as f64 * self.step_db).collect()
    }
}

/// Tap-length profile applied at every user count in the sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TapProfile {
    /// Every desired link has `l_d` taps, every interfering link `l_i`.
    Symmetric { l_d: usize, l_i: usize },
    /// Explicit per-link grid; the sweep's user list must match its size.
    Grid(TapLengths),
}

/// One Monte-Carlo sweep: schemes × user counts × SNR points.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub schemes: Vec<Scheme>,
    pub k_list: Vec<usize>,
    pub taps: TapProfile,
    /// Tap-decay rate of the channel sampler (0 = flat profile).
    pub beta: f64,
    pub snr: SnrGrid,
    /// Independent channel draws per grid point.
    pub trials: usize,
    /// Subblocks per frame; rates use the many-subblock limit, so this only
    /// matters for frame-level operations.
    pub subblocks: usize,
    pub seed: u64,
    /// OFDM symbols per frame of the round-robin baseline.
    pub tdma_symbols: usize,
    /// Insert per-subblock guard intervals instead of cancelling leakage
    /// between subblocks.
    pub guard_variant: bool,
    /// Distance-based large-scale parameters. Carried for effective-noise
    /// analysis via [`LargeScaleConfig::effective_noise_variance`]; the three
    /// built-in schemes use the flat noise power and ignore this field.
    pub large_scale: Option<LargeScaleConfig>,
    /// Where the CSV should go; consumed by callers, not by `run_sweep`.
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(
        schemes: Vec<Scheme>,
        k_list: Vec<usize>,
        taps: TapProfile,
        snr: SnrGrid,
        trials: usize,
        seed: u64,
    ) -> Self {
        Self {
            schemes,
            k_list,
            taps,
            beta: 0.0,
            snr,
            trials,
            subblocks: 64,
            seed,
            tdma_symbols: 64,
            guard_variant: false,
            large_scale: None,
            output: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::InvalidArgument("need at least one scheme".into()));
        }
        if self.k_list.is_empty() || self.k_list.contains(&0) {
            return Err(Error::InvalidArgument("user counts must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("need at least one trial".into()));
        }
        if self.subblocks == 0 || self.tdma_symbols == 0 {
            return Err(Error::InvalidArgument(
                "subblock and symbol counts must be positive".into(),
            ));
        }
        if let TapProfile::Grid(grid) = &self.taps {
            for &k in &self.k_list {
                if k != grid.users() {
                    return Err(Error::Configuration(format!(
                        "tap grid covers {} users but the sweep asks for {k}",
                        grid.users()
                    )));
                }
            }
        }
        Ok(())
    }

    fn tap_lengths(&self, users: usize) -> Result<TapLengths> {
        match &self.taps {
            TapProfile::Symmetric { l_d, l_i } => TapLengths::symmetric(users, *l_d, *l_i),
            TapProfile::Grid(grid) => Ok(grid.clone()),
        }
    }
}

/// Outcome of one grid point.
#[derive(Debug, Clone, PartialEq)]
pub enum RowOutcome {
    Stats { mean: f64, stderr: f64 },
    /// The scheme cannot run under this tap profile; the row records why
    /// instead of silently substituting a different scheme.
    Inapplicable(String),
}

/// One row of a sweep: ergodic sum-spectral efficiency at a grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub users: usize,
    pub scheme: Scheme,
    pub trials: usize,
    pub outcome: RowOutcome,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// The mean of the row matching (scheme, users, snr), if present and
    /// applicable.
    pub fn mean(&self, scheme: Scheme, users: usize, snr_db: f64) -> Option<f64> {
        self.rows.iter().find_map(|r| {
            if r.scheme == scheme && r.users == users && (r.snr_db - snr_db).abs() < 1e-9 {
                match r.outcome {
                    RowOutcome::Stats { mean, .. } => Some(mean),
                    RowOutcome::Inapplicable(_) => None,
                }
            } else {
                None
            }
        })
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed from the master seed and the (point, trial) coordinates;
/// a splittable counter scheme, so parallel execution cannot reorder
/// randomness.
pub fn derive_seed(master: u64, point: u64, trial: u64) -> u64 {
    let mut s = splitmix64(master);
    s = splitmix64(s ^ point.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    splitmix64(s ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// Pairwise (cascade) summation in index order; the reduction tree depends
/// only on the length, so sums are reproducible.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = pairwise_sum(values) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&sq) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Subcarrier gains of an `m`-point circularized channel: the eigenvalues of
/// the circulant whose first column is the (zero-padded) impulse response.
fn subcarrier_gains(taps: &[Complex64], m: usize) -> Vec<Complex64> {
    use std::f64::consts::TAU;
    (0..m)
        .map(|j| {
            taps.iter()
                .enumerate()
                .map(|(t, &h)| h * Complex64::from_polar(1.0, TAU * ((j * t) % m) as f64 / m as f64))
                .sum()
        })
        .collect()
}

/// Ergodic sum-spectral efficiency of the round-robin OFDM baseline: each
/// user is active in one of every `K` frames and spreads power `P` per slot
/// over `m` subcarriers of its own circularized desired link, behind a
/// prefix covering `max(L_D, L_I) - 1` samples.
pub fn tdma_ofdm_sum_rate(channel: &NetworkChannel, m: usize, snr: f64) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("need at least one subcarrier".into()));
    }
    if !snr.is_finite() || snr < 0.0 {
        return Err(Error::InvalidArgument("SNR must be non-negative".into()));
    }
    let cp = channel.max_desired_taps().max(channel.max_interference_taps()) - 1;
    let users = channel.users();
    let mut total = 0.0;
    for k in 0..users {
        let gains = subcarrier_gains(channel.desired(k).taps(), m);
        let active: f64 = gains
            .iter()
            .map(|lam| (1.0 + snr * lam.norm_sqr()).log2())
            .sum::<f64>()
            / (m + cp) as f64;
        total += active;
    }
    Ok(total / users as f64)
}

fn trial_sum_rate(
    scheme: Scheme,
    taps: &TapLengths,
    cfg: &ExperimentConfig,
    p: f64,
    sigma2: f64,
    seed: u64,
) -> Result<f64> {
    let channel = sample_network(taps, cfg.beta, seed)?;
    match scheme {
        Scheme::TdmaOfdm => tdma_ofdm_sum_rate(&channel, cfg.tdma_symbols, p / sigma2),
        Scheme::IfOfdm | Scheme::IfOfdmCsit => {
            let mut frame = make_frame_config(&channel, cfg.subblocks, SubcarrierPolicy::FirstCarriers)?;
            if cfg.guard_variant {
                frame = frame.with_inter_subblock_guard();
            }
            let rates = match scheme {
                Scheme::IfOfdmCsit => rate_with_csit(&channel, &frame, p, sigma2)?,
                _ => rate_no_csit(&channel, &frame, p, sigma2)?,
            };
            Ok(rates.iter().sum())
        }
    }
}

/// Runs the full sweep. Rows come back sorted by (scheme, users, snr_db) and
/// the result is a pure function of the config, independent of thread
/// scheduling.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let sigma2 = 1.0;
    let mut rows = Vec::new();
    let mut point_index = 0u64;
    for &scheme in &cfg.schemes {
        for &users in &cfg.k_list {
            let taps = cfg.tap_lengths(users)?;
            let applicable = scheme == Scheme::TdmaOfdm || taps.max_desired() > taps.max_interference();
            for snr_db in cfg.snr.points() {
                let point = point_index;
                point_index += 1;
                if !applicable {
                    rows.push(SweepRow {
                        snr_db,
                        users,
                        scheme,
                        trials: cfg.trials,
                        outcome: RowOutcome::Inapplicable(format!(
                            "scheme-inapplicable: no desired link exceeds {} interference taps",
                            taps.max_interference()
                        )),
                    });
                    continue;
                }
                let p = sigma2 * 10f64.powf(snr_db / 10.0);
                let values: Result<Vec<f64>> = (0..cfg.trials)
                    .into_par_iter()
                    .map(|t| {
                        let seed = derive_seed(cfg.seed, point, t as u64);
                        trial_sum_rate(scheme, &taps, cfg, p, sigma2, seed)
                    })
                    .collect();
                let (mean, stderr) = mean_and_stderr(&values?);
                rows.push(SweepRow {
                    snr_db,
                    users,
                    scheme,
                    trials: cfg.trials,
                    outcome: RowOutcome::Stats { mean, stderr },
                });
            }
        }
    }
    rows.sort_by(|a, b| {
        a.scheme
            .name()
            .cmp(b.scheme.name())
            .then(a.users.cmp(&b.users))
            .then(a.snr_db.partial_cmp(&b.snr_db).expect("finite snr"))
    });
    Ok(SweepResult { rows })
}

/// Nine-significant-digit scientific notation; byte-stable across runs.
fn fmt_sig9(x: f64) -> String {
    format!("{x:.8e}")
}

/// Writes the CSV schema
/// `snr_db,k,scheme,trials,mean_sum_se,stderr` with one row per grid point,
/// LF line endings, and floats at nine significant digits. Inapplicable
/// rows carry an `error:` token in the mean column and an empty stderr.
pub fn write_csv<W: Write>(result: &SweepResult, mut out: W) -> std::io::Result<()> {
    out.write_all(b"snr_db,k,scheme,trials,mean_sum_se,stderr\n")?;
    for row in &result.rows {
        let (mean_field, stderr_field) = match &row.outcome {
            RowOutcome::Stats { mean, stderr } => (fmt_sig9(*mean), fmt_sig9(*stderr)),
            RowOutcome::Inapplicable(_) => ("error:scheme-inapplicable".to_string(), String::new()),
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_sig9(row.snr_db),
            row.users,
            row.scheme,
            row.trials,
            mean_field,
            stderr_field
        )?;
    }
    Ok(())
}

/// Writes the sweep as CSV to `path` (UTF-8, LF).
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = std::io::BufWriter::new(file);
    write_csv(result, &mut w).and_then(|()| w.flush()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// One named self-check and its outcome.
#[derive(Debug, Clone)]
pub struct ValidationCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Runs the invariant suite: circulant reconstruction, interference
/// nulling, noiseless round-trip decoding, and water-filling optimality.
pub fn run_validation(seed: u64) -> ValidationReport {
    let mut checks = Vec::new();

    checks.push(check_circulant_reconstruction(seed));
    checks.push(check_iui_nulling(seed));
    checks.push(check_round_trip(seed));
    checks.push(check_waterfill(seed));

    ValidationReport { checks }
}

fn check_circulant_reconstruction(seed: u64) -> ValidationCheck {
    use crate::numerics::{circulant_eigenvalues, circulant_from_first_column, idft_matrix, CMat, CVec};
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, 1, 0));
    let mut worst: f64 = 0.0;
    for trial in 0..200 {
        let n = 2 + (trial % 31);
        let col: Vec<Complex64> = (0..n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let c = circulant_from_first_column(&col).expect("valid column");
        let lam = circulant_eigenvalues(&col).expect("valid column");
        let f = idft_matrix(n).expect("valid size");
        let rebuilt = f.matrix() * CMat::from_diagonal(&CVec::from_vec(lam)) * f.matrix().adjoint();
        let scale: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max((rebuilt - &c).norm() / scale);
    }
    ValidationCheck {
        name: "circulant-reconstruction",
        passed: worst <= 1e-10,
        detail: format!("max relative error {worst:.3e} over 200 draws"),
    }
}

fn check_iui_nulling(seed: u64) -> ValidationCheck {
    use crate::numerics::CVec;

    let mut worst: f64 = 0.0;
    let mut runs = 0;
    for (l_d, l_i) in [(3usize, 1usize), (10, 6)] {
        for trial in 0..25 {
            let taps = TapLengths::symmetric(4, l_d, l_i).expect("valid taps");
            let channel = sample_network(&taps, 0.0, derive_seed(seed, 2, trial)).expect("sample");
            let cfg = make_frame_config(&channel, 2, SubcarrierPolicy::FirstCarriers).expect("config");
            let grid = SymbolGrid::random(&cfg, 1.0, derive_seed(seed, 3, trial)).expect("grid");
            for k in 0..cfg.users() {
                // silence user k and look at its own receiver: everything
                // arriving there is interference and must project to zero
                let mut all: Vec<Vec<CVec>> =
                    (0..cfg.users()).map(|u| grid.user(u).to_vec()).collect();
                all[k] = (0..cfg.subblocks()).map(|_| CVec::zeros(cfg.streams(k))).collect();
                let silenced = SymbolGrid::from_symbols(&cfg, all).expect("grid shape");
                let frames = phy::transmit_grid(&silenced, &cfg).expect("frames");
                let rx = phy::transmit(&frames, &channel, 0.0, 0).expect("transmit");
                for b in 0..cfg.subblocks() {
                    let sub = phy::subblock_samples(&rx[k], &cfg, b).expect("subblock");
                    let out = phy::project_iui(sub, &cfg, k).expect("projection");
                    let input: f64 = sub.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                    if input > 0.0 {
                        worst = worst.max(out.norm() / input);
                    }
                    runs += 1;
                }
            }
        }
    }
    ValidationCheck {
        name: "iui-nulling",
        passed: worst <= 1e-10,
        detail: format!("max residual ratio {worst:.3e} over {runs} projections"),
    }
}

fn check_round_trip(seed: u64) -> ValidationCheck {
    let mut worst: f64 = 0.0;
    for (users, l_d, l_i) in [(2usize, 3usize, 1usize), (4, 10, 6)] {
        for trial in 0..10 {
            let taps = TapLengths::symmetric(users, l_d, l_i).expect("valid taps");
            let channel = sample_network(&taps, 0.0, derive_seed(seed, 4, trial)).expect("sample");
            let cfg = make_frame_config(&channel, 2, SubcarrierPolicy::FirstCarriers).expect("config");
            let grid = SymbolGrid::random(&cfg, 1.0, derive_seed(seed, 5, trial)).expect("grid");
            let frames = phy::transmit_grid(&grid, &cfg).expect("frames");
            let rx = phy::transmit(&frames, &channel, 0.0, 0).expect("transmit");
            let decoded = phy::sic_decode(&rx, &channel, &cfg).expect("decode");
            for k in 0..users {
                for b in 0..cfg.subblocks() {
                    let err = (&decoded.estimates[k][b] - &grid.user(k)[b]).norm();
                    let scale = grid.user(k)[b].norm().max(1e-30);
                    worst = worst.max(err / scale);
                }
            }
        }
    }
    ValidationCheck {
        name: "noiseless-round-trip",
        passed: worst <= 1e-8,
        detail: format!("max relative symbol error {worst:.3e}"),
    }
}

fn check_waterfill(seed: u64) -> ValidationCheck {
    use rand::{Rng, SeedableRng};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(derive_seed(seed, 6, 0));
    let mut worst_budget: f64 = 0.0;
    let mut kkt_ok = true;
    for _ in 0..200 {
        let m = 1 + rng.random_range(0..8);
        let gains: Vec<f64> = (0..m).map(|_| rng.random::<f64>() * 4.0).collect();
        if gains.iter().all(|&g| g <= 0.0) {
            continue;
        }
        let budget = 0.1 + rng.random::<f64>() * 8.0;
        let wf = phy::waterfill(&gains, budget, 1.0).expect("waterfill");
        let total: f64 = wf.allocations.iter().sum();
        worst_budget = worst_budget.max(((total - budget) / budget).abs());
        for (&g, &a) in gains.iter().zip(&wf.allocations) {
            if a > 0.0 {
                kkt_ok &= ((wf.water_level - 1.0 / g) - a).abs() <= 1e-9 * wf.water_level.max(1.0);
            } else if g > 0.0 {
                kkt_ok &= wf.water_level <= 1.0 / g + 1e-9;
            }
        }
    }
    ValidationCheck {
        name: "waterfill-kkt",
        passed: worst_budget <= 1e-9 && kkt_ok,
        detail: format!("max budget error {worst_budget:.3e}; KKT {}", if kkt_ok { "held" } else { "violated" }),
    }
}
