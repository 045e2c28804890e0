//! Acceptance suite: one test per acceptance criterion, each printing a
//! single pass/fail line with the measured quantities. Run with
//! `cargo test -p ifofdm-core --test acceptance -- --nocapture` to see every
//! line.

use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use ifofdm_core::channel::{sample_network, ImpulseResponse, TapLengths};
use ifofdm_core::dof::{
    dof_slope_estimate, sum_dof_no_csit, sum_dof_symmetric, tdma_ofdm_dof, DofQuery,
};
use ifofdm_core::numerics::{
    circulant_eigenvalues, circulant_from_first_column, idft_matrix, svd, CMat, CVec,
};
use ifofdm_core::phy::{
    effective_matrix, fold_receiver_stats, make_frame_config, project_iui, rate_no_csit,
    rate_with_csit, sic_decode, subblock_samples, transmit, transmit_grid, waterfill,
    SubcarrierPolicy, SymbolGrid,
};
use ifofdm_core::sim::{
    derive_seed, run_sweep, write_csv, ExperimentConfig, RowOutcome, Scheme, SnrGrid, TapProfile,
};

const MASTER_SEED: u64 = 0x1F0F_D400;

// Criteria carry their own runtime budgets, so they must not compete for
// cores; a shared lock serializes them under any --test-threads setting.
fn serialize() -> MutexGuard<'static, ()> {
    static LOCK: OnceLock<Mutex<()>> = OnceLock::new();
    LOCK.get_or_init(|| Mutex::new(()))
        .lock()
        .unwrap_or_else(|poisoned| poisoned.into_inner())
}

fn report(num: u32, name: &str, passed: bool, detail: &str) {
    let status = if passed { "PASS" } else { "FAIL" };
    println!("criterion {num:02} {name}: {status} ({detail})");
    assert!(passed, "criterion {num:02} {name}: {detail}");
}

fn random_column(rng: &mut ChaCha8Rng, n: usize) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect()
}

#[test]
fn c01_circulant_diagonalization() {
    let _serial = serialize();
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, 1, 0));
    let mut worst: f64 = 0.0;
    for trial in 0..1000 {
        let n = 2 + (trial % 63);
        let col = random_column(&mut rng, n);
        let c = circulant_from_first_column(&col).unwrap();
        let lam = circulant_eigenvalues(&col).unwrap();
        let f = idft_matrix(n).unwrap();
        let rebuilt = f.matrix() * CMat::from_diagonal(&CVec::from_vec(lam)) * f.matrix().adjoint();
        let scale: f64 = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max((rebuilt - &c).norm() / scale);
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        1,
        "circulant-diagonalization",
        worst <= 1e-10 && elapsed < 10.0,
        &format!("max relative reconstruction error {worst:.3e} over 1000 draws, n in 2..=64, {elapsed:.2} s"),
    );
}

#[test]
fn c02_iui_nulling() {
    let _serial = serialize();
    let mut worst: f64 = 0.0;
    let mut projections = 0usize;
    for (ci, &(l_d, l_i)) in [(2usize, 1usize), (3, 2), (10, 6)].iter().enumerate() {
        for (ki, &k) in [2usize, 4, 8].iter().enumerate() {
            for trial in 0..200u64 {
                let point = (ci * 3 + ki) as u64;
                let taps = TapLengths::symmetric(k, l_d, l_i).unwrap();
                let channel =
                    sample_network(&taps, 0.0, derive_seed(MASTER_SEED, 2 + point, trial)).unwrap();
                let cfg = make_frame_config(&channel, 2, SubcarrierPolicy::FirstCarriers).unwrap();
                // user 0 stays silent; everything its receiver hears is
                // inter-user interference and must vanish under projection
                let grid = SymbolGrid::random(&cfg, 1.0, derive_seed(MASTER_SEED, 50 + point, trial))
                    .unwrap();
                let mut symbols: Vec<Vec<CVec>> =
                    (0..k).map(|u| grid.user(u).to_vec()).collect();
                symbols[0] = (0..cfg.subblocks()).map(|_| CVec::zeros(cfg.streams(0))).collect();
                let silenced = SymbolGrid::from_symbols(&cfg, symbols).unwrap();
                let frames = transmit_grid(&silenced, &cfg).unwrap();
                let rx = transmit(&frames, &channel, 0.0, 0).unwrap();
                for b in 0..cfg.subblocks() {
                    let sub = subblock_samples(&rx[0], &cfg, b).unwrap();
                    let out = project_iui(sub, &cfg, 0).unwrap();
                    let input: f64 = sub.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                    if input > 0.0 {
                        worst = worst.max(out.norm() / input);
                    }
                    projections += 1;
                }
            }
        }
    }
    report(
        2,
        "iui-nulling",
        worst <= 1e-10,
        &format!(
            "max projected/input norm ratio {worst:.3e} over {projections} projections \
             (K in {{2,4,8}}, taps in {{(2,1),(3,2),(10,6)}}, 200 draws each)"
        ),
    );
}

#[test]
fn c03_noiseless_decode() {
    let _serial = serialize();
    let mut worst: f64 = 0.0;
    let mut sims = 0usize;
    for &(l_d, l_i) in &[(10usize, 4usize), (10, 6)] {
        for &k in &[2usize, 4] {
            for &b in &[1usize, 2, 10] {
                let seed = derive_seed(MASTER_SEED, 100 + (l_i + k + b) as u64, b as u64);
                let taps = TapLengths::symmetric(k, l_d, l_i).unwrap();
                let channel = sample_network(&taps, 0.0, seed).unwrap();
                let cfg = make_frame_config(&channel, b, SubcarrierPolicy::FirstCarriers).unwrap();
                let grid = SymbolGrid::random(&cfg, 1.0, seed ^ 0xFFFF).unwrap();
                let frames = transmit_grid(&grid, &cfg).unwrap();
                let rx = transmit(&frames, &channel, 0.0, 0).unwrap();
                let decoded = sic_decode(&rx, &channel, &cfg).unwrap();
                for user in 0..k {
                    for sb in 0..b {
                        let err = (&decoded.estimates[user][sb] - &grid.user(user)[sb]).norm();
                        let scale = grid.user(user)[sb].norm().max(1e-30);
                        worst = worst.max(err / scale);
                    }
                }
                sims += 1;
            }
        }
    }
    report(
        3,
        "noiseless-decode",
        worst <= 1e-8,
        &format!(
            "max relative symbol error {worst:.3e} over {sims} frames \
             (B in {{1,2,10}}, K in {{2,4}}, both block-length regimes (10,4) and (10,6))"
        ),
    );
}

#[test]
fn c04_effective_rank_every_draw() {
    let _serial = serialize();
    let mut lines = Vec::new();
    let mut all_ok = true;
    for (ci, &(l_d, l_i)) in [(2usize, 1usize), (3, 2), (10, 4), (10, 6)].iter().enumerate() {
        let ratios: Vec<f64> = (0..1000u64)
            .into_par_iter()
            .map(|trial| {
                let taps = TapLengths::symmetric(2, l_d, l_i).unwrap();
                let channel =
                    sample_network(&taps, 0.0, derive_seed(MASTER_SEED, 200 + ci as u64, trial))
                        .unwrap();
                let cfg = make_frame_config(&channel, 1, SubcarrierPolicy::FirstCarriers).unwrap();
                let eff = effective_matrix(&channel, &cfg, 0).unwrap();
                let sv = svd(&eff).unwrap().singular_values;
                sv[sv.len() - 1] / sv[0]
            })
            .collect();
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let violations = ratios.iter().filter(|&&r| r <= 1e-6).count();
        all_ok &= violations == 0;
        lines.push(format!("({l_d},{l_i}): min ratio {min:.3e}, {violations}/1000 draws <= 1e-6"));
    }
    report(
        4,
        "effective-rank-every-draw",
        all_ok,
        &format!(
            "{}; the determinant of the effective matrix scales as the last desired tap to \
             the stream count, so its conditioning has a polynomial tail near zero and a \
             uniform 1e-6 floor over 1000 draws is unattainable for the (10,4) and (10,6) \
             stream geometries",
            lines.join("; ")
        ),
    );
}

#[test]
fn c05_fold_receiver_closed_form() {
    let _serial = serialize();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, 5, 0));
    let mut worst_rate: f64 = 0.0;
    let mut worst_gain: f64 = 0.0;
    let mut worst_noise: f64 = 0.0;
    for _ in 0..1000 {
        let h = ImpulseResponse::new(random_column(&mut rng, 3)).unwrap();
        let p = 0.1 + rng.random::<f64>() * 100.0;
        let sigma2 = 0.1 + rng.random::<f64>() * 4.0;
        let stats = fold_receiver_stats(&h, 2, p, sigma2).unwrap();
        let h3 = h.taps()[2].norm();
        worst_gain = worst_gain.max((stats.gain.norm() - h3 / 2.0).abs() / (h3 / 2.0));
        worst_noise = worst_noise.max((stats.noise_variance - 1.5 * sigma2).abs() / (1.5 * sigma2));
        let closed_form = (1.0 + p * h3 * h3 / (6.0 * sigma2)).log2();
        worst_rate = worst_rate.max((stats.rate - closed_form).abs() / closed_form.max(1e-12));
    }
    report(
        5,
        "fold-receiver-closed-form",
        worst_rate <= 1e-9 && worst_gain <= 1e-12 && worst_noise <= 1e-12,
        &format!(
            "over 1000 draws: rate vs log2(1+P|h3|^2/(6s2)) rel err {worst_rate:.3e}, \
             gain vs |h3|/2 rel err {worst_gain:.3e}, noise vs 1.5s2 rel err {worst_noise:.3e}"
        ),
    );
}

#[test]
fn c06_dof_slope() {
    let _serial = serialize();
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut all_ok = true;
    for &(l_d, l_i, users, target_num, target_den) in
        &[(2usize, 1usize, 4usize, 2i64, 1i64), (3, 1, 4, 2, 1), (3, 2, 4, 4, 3)]
    {
        let cfg = ExperimentConfig::new(
            vec![Scheme::IfOfdm],
            vec![users],
            TapProfile::Symmetric { l_d, l_i },
            SnrGrid::new(40.0, 60.0, 5.0).unwrap(),
            2000,
            derive_seed(MASTER_SEED, 6, (l_d * 16 + l_i) as u64),
        );
        let result = run_sweep(&cfg).unwrap();
        let points: Vec<(f64, f64)> = result
            .rows
            .iter()
            .filter_map(|row| match row.outcome {
                RowOutcome::Stats { mean, .. } => Some((row.snr_db, mean)),
                RowOutcome::Inapplicable(_) => None,
            })
            .collect();
        let slope = dof_slope_estimate(&points).unwrap();
        let target = target_num as f64 / target_den as f64;
        let ok = (slope - target).abs() <= 0.05 * target;
        all_ok &= ok;
        lines.push(format!("({l_d},{l_i},K={users}): slope {slope:.4} vs {target:.4}"));

        // cross-check the target against the closed form
        let formula = sum_dof_no_csit(&DofQuery::symmetric(users, l_d, l_i).unwrap());
        assert_eq!(*formula.numer(), target_num);
        assert_eq!(*formula.denom(), target_den);
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        6,
        "dof-slope",
        all_ok,
        &format!(
            "{}; 2000 trials/point over 40..60 dB, tolerance 5%, {elapsed:.1} s",
            lines.join("; ")
        ),
    );
}

#[test]
fn c07_baseline_ordering_and_user_scaling() {
    let _serial = serialize();
    let cfg = ExperimentConfig::new(
        vec![Scheme::IfOfdm, Scheme::TdmaOfdm],
        vec![2, 4],
        TapProfile::Symmetric { l_d: 2, l_i: 1 },
        SnrGrid::new(0.0, 30.0, 5.0).unwrap(),
        3000,
        derive_seed(MASTER_SEED, 7, 0),
    );
    let result = run_sweep(&cfg).unwrap();
    let stats = |scheme: Scheme, users: usize, snr: f64| -> (f64, f64) {
        result
            .rows
            .iter()
            .find_map(|r| {
                if r.scheme == scheme && r.users == users && (r.snr_db - snr).abs() < 1e-9 {
                    match r.outcome {
                        RowOutcome::Stats { mean, stderr } => Some((mean, stderr)),
                        RowOutcome::Inapplicable(_) => None,
                    }
                } else {
                    None
                }
            })
            .expect("row present")
    };

    let ratio = stats(Scheme::IfOfdm, 4, 30.0).0 / stats(Scheme::IfOfdm, 2, 30.0).0;
    let ratio_ok = (1.8..=2.2).contains(&ratio);

    let mut violations = Vec::new();
    for &users in &[2usize, 4] {
        for snr in cfg.snr.points() {
            let (m_if, se_if) = stats(Scheme::IfOfdm, users, snr);
            let (m_td, se_td) = stats(Scheme::TdmaOfdm, users, snr);
            if m_if + 3.0 * (se_if + se_td) < m_td {
                violations.push(format!("K={users} {snr:.0}dB: {m_if:.3} < {m_td:.3}"));
            }
        }
    }
    let ordering_ok = violations.is_empty();
    report(
        7,
        "baseline-ordering-and-user-scaling",
        ratio_ok && ordering_ok,
        &format!(
            "sum-SE(K=4)/sum-SE(K=2) at 30 dB = {ratio:.3} (need 1.8..2.2); ordering \
             if-ofdm >= tdma-ofdm with 3-stderr slack violated at {} of 14 points [{}]; \
             with both schemes under the same per-slot power P, the single-stream scheme \
             at K=2 has the same pre-log as the baseline but a 4x gain penalty and half \
             the streams, so the baseline stays above it at every finite SNR",
            violations.len(),
            violations.join(", ")
        ),
    );
}

#[test]
fn c08_csit_gain() {
    let _serial = serialize();
    let mut lines = Vec::new();
    let mut all_ok = true;
    let mut per_realization_ok = true;
    for (li_idx, &l_i) in [2usize, 4, 6].iter().enumerate() {
        let snrs: Vec<f64> = if l_i == 6 {
            vec![0.0]
        } else {
            SnrGrid::new(0.0, 30.0, 5.0).unwrap().points()
        };
        for snr in snrs {
            let p = 10f64.powf(snr / 10.0);
            let gains: Vec<f64> = (0..10_000u64)
                .into_par_iter()
                .map(|trial| {
                    let taps = TapLengths::symmetric(7, 10, l_i).unwrap();
                    let channel = sample_network(
                        &taps,
                        0.0,
                        derive_seed(MASTER_SEED, 300 + li_idx as u64, trial),
                    )
                    .unwrap();
                    let cfg =
                        make_frame_config(&channel, 1, SubcarrierPolicy::FirstCarriers).unwrap();
                    let no_csit: f64 =
                        rate_no_csit(&channel, &cfg, p, 1.0).unwrap().iter().sum();
                    let csit: f64 =
                        rate_with_csit(&channel, &cfg, p, 1.0).unwrap().iter().sum();
                    csit - no_csit
                })
                .collect();
            let min_gain = gains.iter().cloned().fold(f64::INFINITY, f64::min);
            per_realization_ok &= min_gain >= -1e-9;
            let mean_gain = gains.iter().sum::<f64>() / gains.len() as f64;
            let ok = mean_gain > 0.0 && min_gain >= -1e-9;
            all_ok &= ok;
            lines.push(format!("L_I={l_i} {snr:.0}dB: mean gain {mean_gain:.4}"));
        }
    }
    report(
        8,
        "csit-gain",
        all_ok && per_realization_ok,
        &format!(
            "K=7, L_D=10, 10^4 draws/point, per-realization csit >= no-csit {}; {}",
            if per_realization_ok { "held" } else { "violated" },
            lines.join("; ")
        ),
    );
}

#[test]
fn c09_formula_cross_checks() {
    let _serial = serialize();
    let mut mismatches = 0usize;
    let mut checked = 0usize;
    for users in 1..=16 {
        for l_d in 2..=12 {
            for l_i in 1..l_d {
                let sym = sum_dof_symmetric(users, l_d, l_i).unwrap();
                let gen = sum_dof_no_csit(&DofQuery::symmetric(users, l_d, l_i).unwrap());
                if sym > num_rational_one() {
                    checked += 1;
                    if sym != gen {
                        mismatches += 1;
                    }
                }
            }
        }
    }
    let tdma = tdma_ofdm_dof(64, 2, 1).unwrap();
    let tdma_ok = *tdma.numer() == 64 && *tdma.denom() == 65;
    report(
        9,
        "formula-cross-checks",
        mismatches == 0 && tdma_ok,
        &format!(
            "{checked} symmetric grid points above 1, {mismatches} mismatches; \
             tdma_ofdm_dof(64,2,1) = {tdma} (expected 64/65)"
        ),
    );
}

fn num_rational_one() -> num_rational::Rational64 {
    num_rational::Rational64::from_integer(1)
}

#[test]
fn c10_waterfill_kkt() {
    let _serial = serialize();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(MASTER_SEED, 10, 0));
    let mut worst_budget: f64 = 0.0;
    let mut kkt_violations = 0usize;
    for _ in 0..10_000 {
        let m = 1 + rng.random_range(0..12);
        let mut gains: Vec<f64> = (0..m)
            .map(|_| {
                if rng.random::<f64>() < 0.1 {
                    0.0
                } else {
                    (-2.0 * (rng.random::<f64>()).ln()).max(1e-6)
                }
            })
            .collect();
        if gains.iter().all(|&g| g == 0.0) {
            gains[0] = 1.0;
        }
        let sigma2 = 0.25 + rng.random::<f64>() * 2.0;
        let budget = 0.05 + rng.random::<f64>() * 20.0;
        let wf = waterfill(&gains, budget, sigma2).unwrap();
        let total: f64 = wf.allocations.iter().sum();
        worst_budget = worst_budget.max(((total - budget) / budget).abs());
        for (&g, &a) in gains.iter().zip(&wf.allocations) {
            if a > 0.0 {
                // active: allocation sits exactly at the common water level
                if ((wf.water_level - sigma2 / g) - a).abs() > 1e-9 * wf.water_level.max(1.0) {
                    kkt_violations += 1;
                }
            } else if g > 0.0 && wf.water_level > sigma2 / g + 1e-9 * wf.water_level.max(1.0) {
                // inactive: water level must not exceed the inverse gain
                kkt_violations += 1;
            }
        }
    }
    report(
        10,
        "waterfill-kkt",
        worst_budget <= 1e-9 && kkt_violations == 0,
        &format!(
            "10^4 random gain vectors: max relative budget error {worst_budget:.3e}, \
             {kkt_violations} KKT violations"
        ),
    );
}

#[test]
fn c11_sweep_determinism() {
    let _serial = serialize();
    let cfg = ExperimentConfig::new(
        vec![Scheme::IfOfdm, Scheme::IfOfdmCsit, Scheme::TdmaOfdm],
        vec![2, 4],
        TapProfile::Symmetric { l_d: 3, l_i: 1 },
        SnrGrid::new(0.0, 10.0, 5.0).unwrap(),
        50,
        derive_seed(MASTER_SEED, 11, 0),
    );
    let mut buffers = Vec::new();
    for _ in 0..2 {
        let result = run_sweep(&cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&result, &mut buf).unwrap();
        buffers.push(buf);
    }
    let identical = buffers[0] == buffers[1];

    let dir = tempfile::tempdir().unwrap();
    let path_a = dir.path().join("a.csv");
    let path_b = dir.path().join("b.csv");
    ifofdm_core::sim::emit_csv(&run_sweep(&cfg).unwrap(), &path_a).unwrap();
    ifofdm_core::sim::emit_csv(&run_sweep(&cfg).unwrap(), &path_b).unwrap();
    let files_identical = std::fs::read(&path_a).unwrap() == std::fs::read(&path_b).unwrap();

    report(
        11,
        "sweep-determinism",
        identical && files_identical,
        &format!(
            "in-memory CSV byte-identical: {identical}; on-disk CSV byte-identical: {files_identical} \
             ({} bytes)",
            buffers[0].len()
        ),
    );
}
