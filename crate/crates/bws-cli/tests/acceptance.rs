//! Acceptance suite: one test per release criterion, each printing a
//! PASS line on success (run with `--nocapture` to see them). Numeric
//! criteria exercise the library directly; the determinism criterion
//! drives the compiled `bws` binary.

use bws_core::dataset::{FeatureMatrix, LabelVector, ScoreVector, ScoredDataset};
use bws_core::io;
use bws_core::proxy::{
    fit_one_vs_rest, proxy_accuracy, solve_ridge, solve_ridge_dual, solve_ridge_primal,
};
use bws_core::select::{
    ablation_sweep, best_window_select, noise_robust_eval_indices, AblationFamily, EvalMode,
    ProxyKind, WindowMode,
};
use bws_core::theory::{sufficient_lhs_mean, toy_sweep, verify_deficient_bound};
use bws_core::windows::{contiguous_window, window_grid, WindowSpec};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;
use std::process::Command;

fn pass(criterion: &str) {
    println!("ACCEPTANCE {criterion}: PASS");
}

/// Criterion 1: the primal and dual ridge forms agree to 1e-10 relative
/// l2 error over 50 random instances per shape.
#[test]
fn criterion_01_primal_dual_equality() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for &(d1, m) in &[(3usize, 2usize), (3, 64), (33, 20), (33, 64)] {
        for _ in 0..50 {
            let x = DMatrix::from_fn(d1, m, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
            let y = DVector::from_fn(m, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
            let wp = solve_ridge_primal(&x, &y, 1.0).unwrap();
            let wd = solve_ridge_dual(&x, &y, 1.0).unwrap();
            let rel = (&wp - &wd).norm() / wp.norm().max(1e-300);
            assert!(rel <= 1e-10, "shape ({d1}, {m}): relative error {rel}");
        }
    }
    pass("criterion 1 (primal-dual equality)");
}

/// Independent dense solver: Gaussian elimination with partial pivoting
/// on the normal equations (lambda I + X Xᵀ) w = X y. Kept free of any
/// factorization code from the crate under test.
fn normal_equation_eliminator(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Vec<f64> {
    let d = x.nrows();
    let m = x.ncols();
    let mut a = vec![vec![0.0f64; d + 1]; d];
    for r in 0..d {
        for c in 0..d {
            let mut s = 0.0;
            for k in 0..m {
                s += x[(r, k)] * x[(c, k)];
            }
            a[r][c] = s + if r == c { lambda } else { 0.0 };
        }
        let mut rhs = 0.0;
        for k in 0..m {
            rhs += x[(r, k)] * y[k];
        }
        a[r][d] = rhs;
    }
    for col in 0..d {
        let pivot = (col..d).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
        a.swap(col, pivot);
        for row in 0..d {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=d {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    (0..d).map(|r| a[r][d] / a[r][r]).collect()
}

/// Criterion 2: the ridge solver matches an independently written dense
/// normal-equation eliminator to 1e-9 on 10 random small instances.
#[test]
fn criterion_02_ridge_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..10 {
        let d = rng.gen_range(2usize..=8);
        let m = rng.gen_range(2usize..=12);
        let x = DMatrix::from_fn(d, m, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        let y = DVector::from_fn(m, |_, _| rng.gen::<f64>() * 2.0 - 1.0);
        let w = solve_ridge(&x, &y, 1.0).unwrap();
        let oracle = normal_equation_eliminator(&x, &y, 1.0);
        let diff: f64 = (0..d).map(|i| (w[i] - oracle[i]).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = oracle.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(diff / scale <= 1e-9, "relative error {}", diff / scale);
    }
    pass("criterion 2 (ridge oracle equivalence)");
}

/// Criterion 3: regime transition at desk scale. d=256, n=25600, 5 seeds:
/// small windows (m=16, 64) favor the easiest start, large windows
/// (m=2048, 4096) favor the window ending at the hardest rank.
#[test]
fn criterion_03_regime_transition() {
    let (n, d) = (25_600usize, 256usize);
    let seeds: Vec<u64> = (0..5).collect();
    for &m in &[16usize, 64] {
        // grid {0, n-m}: hardest-start and easiest-start windows
        let rows = toy_sweep(n, d, m, n - m, &seeds).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(
            rows[1].mean_cosine > rows[0].mean_cosine,
            "m={m}: easiest-start {} should beat hardest-start {}",
            rows[1].mean_cosine,
            rows[0].mean_cosine
        );
    }
    for &m in &[2048usize, 4096] {
        let rows = toy_sweep(n, d, m, n - m, &seeds).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(
            rows[0].mean_cosine > rows[1].mean_cosine,
            "m={m}: hardest-end {} should beat easiest-end {}",
            rows[0].mean_cosine,
            rows[1].mean_cosine
        );
    }
    pass("criterion 3 (regime transition)");
}

/// Criterion 4: the sample-deficient bound. d=2048, n_label=100, m=5:
/// ||(XᵀX)⁻¹ - I||₂ <= 0.4435 in at least 95 of 100 trials.
#[test]
fn criterion_04_deficient_bound() {
    let report = verify_deficient_bound(2048, 100, 5, 100, 404).unwrap();
    assert!((report.bound - 0.4435).abs() < 1e-4, "bound {}", report.bound);
    assert!(
        report.pass_fraction * 100.0 >= 95.0,
        "pass fraction {}",
        report.pass_fraction
    );
    pass("criterion 4 (Theorem-2-style deficient bound)");
}

/// Criterion 5: the sufficient-regime deviation shrinks like d² ln d / m:
/// doubling m shrinks the measured deviation by a factor in [1.3, 2.7].
#[test]
fn criterion_05_sufficient_trend() {
    let d = 16;
    let trials = 8;
    let mut prev: Option<f64> = None;
    for &m in &[4096usize, 8192, 16384] {
        let a = vec![1.0; m];
        let lhs = sufficient_lhs_mean(d, m, &a, trials, 505).unwrap();
        if let Some(p) = prev {
            assert!(lhs < p, "deviation should decrease: {p} -> {lhs}");
            let factor = p / lhs;
            assert!(
                (1.3..=2.7).contains(&factor),
                "shrink factor {factor} outside [1.3, 2.7]"
            );
        }
        prev = Some(lhs);
    }
    pass("criterion 5 (Theorem-3-style sufficient trend)");
}

/// Planted dataset: rank i has score n-i; class signal is injected only
/// for ranks inside `band`.
fn planted(n: usize, d: usize, c: u32, band: std::ops::Range<usize>, seed: u64) -> ScoredDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<u32> = (0..n).map(|i| (i as u32) % c).collect();
    let scores: Vec<f64> = (0..n).map(|i| (n - i) as f64).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() - 0.5).collect();
            if band.contains(&i) {
                row[labels[i] as usize % d] += 3.0;
            }
            row
        })
        .collect();
    ScoredDataset::new(
        FeatureMatrix::from_rows(&rows).unwrap(),
        LabelVector::new(labels, c).unwrap(),
        ScoreVector::new(scores).unwrap(),
    )
    .unwrap()
}

/// Criterion 6: on a planted dataset (n=500, d=16, C=4, signal in ranks
/// [150, 350)), the sweep winner equals a brute-force re-evaluation and
/// overlaps the signal band.
#[test]
fn criterion_06_bws_selection_oracle() {
    let band = 150..350;
    let ds = planted(500, 16, 4, band.clone(), 606);
    let (m, step) = (200usize, 25usize);
    let (report, subset) = best_window_select(
        &ds, m, step, 1.0, ProxyKind::Krr, EvalMode::Full, WindowMode::Global, None,
    )
    .unwrap();
    // brute force: independent loop re-evaluating every candidate
    let eval: Vec<usize> = (0..500).collect();
    let mut best = (0usize, f64::NEG_INFINITY);
    for &k in &window_grid(500, m, step, false).unwrap() {
        let w = contiguous_window(&ds, k, m).unwrap();
        let sol = fit_one_vs_rest(&ds, &w, 1.0).unwrap();
        let acc = proxy_accuracy(&sol, &ds, &eval).unwrap();
        if acc > best.1 {
            best = (k, acc);
        }
    }
    let WindowSpec::Contiguous { start, .. } = report.winner_candidate().spec.clone() else {
        panic!()
    };
    assert_eq!(start, best.0, "winner {start} vs brute-force {}", best.0);
    // the winner window overlaps the planted band (ranks == original
    // indices in this construction)
    assert!(
        subset.indices().iter().any(|i| band.contains(i)),
        "winner [{start}, {}) misses the signal band",
        start + m
    );
    pass("criterion 6 (selection matches brute-force oracle)");
}

/// Noisy dataset: signal everywhere, labels of the hardest 20% shuffled.
fn noisy_dataset(n: usize, d: usize, c: u32, seed: u64) -> (ScoredDataset, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clean: Vec<u32> = (0..n).map(|i| (i as u32) % c).collect();
    let corrupt_count = n / 5;
    let mut labels = clean.clone();
    let corrupted: Vec<usize> = (0..corrupt_count).collect();
    for &i in &corrupted {
        let mut l = rng.gen_range(0..c);
        while l == clean[i] {
            l = rng.gen_range(0..c);
        }
        labels[i] = l;
    }
    let scores: Vec<f64> = (0..n).map(|i| (n - i) as f64).collect();
    // class overlap keeps evaluation accuracy off the ceiling, so windows
    // fit on corrupted labels score measurably worse
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = (0..d).map(|_| (rng.gen::<f64>() - 0.5) * 3.0).collect();
            row[clean[i] as usize % d] += 1.0;
            row
        })
        .collect();
    let ds = ScoredDataset::new(
        FeatureMatrix::from_rows(&rows).unwrap(),
        LabelVector::new(labels, c).unwrap(),
        ScoreVector::new(scores).unwrap(),
    )
    .unwrap();
    (ds, corrupted)
}

/// Criterion 7: the low50 evaluation set contains no corrupted samples,
/// and low50 selection never picks a more corrupted window than full
/// evaluation, across 5 seeds.
#[test]
fn criterion_07_noise_robust_mode() {
    for seed in 0..5u64 {
        let (ds, corrupted) = noisy_dataset(400, 8, 4, 700 + seed);
        let corrupted_set: std::collections::HashSet<usize> = corrupted.into_iter().collect();
        let low = noise_robust_eval_indices(&ds, 0.5).unwrap();
        assert!(
            low.iter().all(|i| !corrupted_set.contains(i)),
            "seed {seed}: corrupted sample in the low50 evaluation set"
        );
        let frac = |subset: &bws_core::SubsetIndices| {
            subset.indices().iter().filter(|i| corrupted_set.contains(i)).count() as f64
                / subset.m() as f64
        };
        let (_, s_low) = best_window_select(
            &ds, 120, 40, 1.0, ProxyKind::Krr, EvalMode::Low50, WindowMode::Global, None,
        )
        .unwrap();
        let (_, s_full) = best_window_select(
            &ds, 120, 40, 1.0, ProxyKind::Krr, EvalMode::Full, WindowMode::Global, None,
        )
        .unwrap();
        assert!(
            frac(&s_low) <= frac(&s_full) + 1e-12,
            "seed {seed}: low50 fraction {} > full fraction {}",
            frac(&s_low),
            frac(&s_full)
        );
    }
    pass("criterion 7 (noise-robust low50 mode)");
}

/// Criterion 8: the two-half family contains every contiguous window, so
/// its best score dominates; the wider family's grid size matches the
/// combinatorial count.
#[test]
fn criterion_08_ablation_consistency() {
    let ds = planted(500, 16, 4, 150..350, 606);
    let (m, step) = (200usize, 25usize);
    let (contig, _) = best_window_select(
        &ds, m, step, 1.0, ProxyKind::Krr, EvalMode::Full, WindowMode::Global, None,
    )
    .unwrap();
    let two_half =
        ablation_sweep(&ds, AblationFamily::TwoHalf, m, step, 1.0, EvalMode::Full).unwrap();
    let best_contig = contig.winner_candidate().score;
    let best_two = two_half.winner_candidate().score;
    assert!(
        best_two >= best_contig - 1e-12,
        "two-half best {best_two} below contiguous best {best_contig}"
    );
    // when the winning halves are adjacent the scores coincide exactly
    if let WindowSpec::TwoHalf { start1, start2, .. } = two_half.winner_candidate().spec.clone() {
        if start2 == start1 + m / 2 {
            assert!((best_two - best_contig).abs() <= 1e-12);
        }
    }
    // wider family: grid size equals the combinatorial count of valid starts
    let factor = 2.0;
    let wider = ablation_sweep(
        &ds,
        AblationFamily::Wider { factor, seed: 9 },
        m,
        step,
        1.0,
        EvalMode::Full,
    )
    .unwrap();
    let span = (factor * m as f64).ceil() as usize;
    let expected = (0..=(500 - span)).step_by(step).count();
    assert_eq!(wider.candidates.len(), expected);
    pass("criterion 8 (ablation families consistent)");
}

fn bws_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bws"))
}

fn write_planted_files(dir: &Path, seed: u64) -> (std::path::PathBuf, std::path::PathBuf, std::path::PathBuf) {
    let ds = planted(300, 8, 3, 100..220, seed);
    let f = dir.join("f.bwsf");
    let l = dir.join("l.bwsl");
    let s = dir.join("s.bwss");
    let d = ds.features().d_plus_1() - 1;
    let data: Vec<f64> = (0..ds.n())
        .flat_map(|i| ds.features().row(i)[..d].to_vec())
        .collect();
    io::write_features(&f, ds.n(), d, &data).unwrap();
    io::write_labels(&l, ds.labels()).unwrap();
    io::write_scores(&s, ds.scores()).unwrap();
    (f, l, s)
}

/// Criterion 9: identical flags produce byte-identical subset, JSON, and
/// CSV outputs at --threads 1 and --threads 8, for select and toy runs.
#[test]
fn criterion_09_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let (f, l, s) = write_planted_files(dir.path(), 909);
    let run_select = |tag: &str, threads: &str| {
        let out = dir.path().join(format!("subset_{tag}.txt"));
        let rep = dir.path().join(format!("report_{tag}.json"));
        let status = bws_bin()
            .args([
                "select",
                "--features", f.to_str().unwrap(),
                "--labels", l.to_str().unwrap(),
                "--scores", s.to_str().unwrap(),
                "--ratio", "0.3",
                "--step", "0.1",
                "--lambda", "1",
                "--out", out.to_str().unwrap(),
                "--report", rep.to_str().unwrap(),
                "--threads", threads,
            ])
            .status()
            .unwrap();
        assert!(status.success());
        (std::fs::read(out).unwrap(), std::fs::read(rep).unwrap())
    };
    let a = run_select("a", "1");
    let b = run_select("b", "8");
    let c = run_select("c", "1");
    assert_eq!(a, b, "select outputs differ across thread counts");
    assert_eq!(a, c, "select outputs differ across repeated runs");

    let run_toy = |tag: &str, threads: &str| {
        let out = dir.path().join(format!("toy_{tag}.csv"));
        let status = bws_bin()
            .args([
                "toy", "--d", "16", "--n", "512", "--m", "32", "--step", "0.25",
                "--seeds", "3", "--out", out.to_str().unwrap(), "--threads", threads,
            ])
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    let ta = run_toy("a", "1");
    let tb = run_toy("b", "8");
    assert_eq!(ta, tb, "toy outputs differ across thread counts");
    pass("criterion 9 (byte-identical determinism)");
}

/// Criterion 10: 100 randomized I/O round trips per format family.
#[test]
fn criterion_10_io_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for case in 0..100 {
        let n = rng.gen_range(1usize..40);
        let d = rng.gen_range(1usize..10);
        let data: Vec<f64> = (0..n * d).map(|_| (rng.gen::<f32>() * 10.0 - 5.0) as f64).collect();
        let f = dir.path().join(format!("f{case}.bwsf"));
        io::write_features(&f, n, d, &data).unwrap();
        // binary: write -> read -> write is bit-exact
        let (n2, d2, data2) = io::read_features(&f).unwrap();
        assert_eq!((n, d), (n2, d2));
        let f2 = dir.path().join(format!("f{case}b.bwsf"));
        io::write_features(&f2, n2, d2, &data2).unwrap();
        assert_eq!(std::fs::read(&f).unwrap(), std::fs::read(&f2).unwrap());

        // CSV vs binary: value-exact after double normalization
        let fc = dir.path().join(format!("f{case}.csv"));
        let mut text = String::new();
        for row in data2.chunks_exact(d) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        std::fs::write(&fc, text).unwrap();
        match io::csv_import(&fc, io::CsvKind::Features).unwrap() {
            io::CsvData::Features { n: nc, d: dc, data: dc_data } => {
                assert_eq!((nc, dc), (n, d));
                assert_eq!(dc_data, data2);
            }
            _ => panic!(),
        }

        // scores round-trip (f64 payload)
        let scores = ScoreVector::new((0..n).map(|_| rng.gen::<f64>() * 100.0).collect()).unwrap();
        let sp = dir.path().join(format!("s{case}.bwss"));
        io::write_scores(&sp, &scores).unwrap();
        assert_eq!(io::read_scores(&sp).unwrap().scores(), scores.scores());

        // labels round-trip
        let c = rng.gen_range(2u32..6);
        let labels =
            LabelVector::new((0..n).map(|_| rng.gen_range(0..c)).collect(), c).unwrap();
        let lp = dir.path().join(format!("l{case}.bwsl"));
        io::write_labels(&lp, &labels).unwrap();
        let back = io::read_labels(&lp).unwrap();
        assert_eq!(back.labels(), labels.labels());
        assert_eq!(back.num_classes(), c);

        // subset text round-trip
        use rand::seq::SliceRandom;
        let mut all: Vec<usize> = (0..n.max(2)).collect();
        all.shuffle(&mut rng);
        let m = rng.gen_range(1..=all.len());
        let subset = bws_core::SubsetIndices::new(all[..m].to_vec(), n.max(2)).unwrap();
        let tp = dir.path().join(format!("t{case}.txt"));
        io::save_subset(&subset, &tp).unwrap();
        let loaded = io::load_subset(&tp, n.max(2)).unwrap();
        let mut expected: Vec<usize> = subset.indices().to_vec();
        expected.sort_unstable();
        assert_eq!(loaded.indices(), &expected[..]);
    }
    pass("criterion 10 (I/O round trips)");
}
