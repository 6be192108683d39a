//! The best-window sweep: enumerate candidate windows over the difficulty
//! ordering, score each with the chosen proxy, pick the winner, and keep
//! the full sweep table.

use crate::dataset::{ScoredDataset, SubsetIndices};
use crate::proxy::{
    fit_one_vs_rest, gradient_difference, gradient_similarity, proxy_accuracy, GradientBundle,
};
use crate::windows::{
    contiguous_window, per_class_window, two_half_windows, wider_window_sample, window_grid,
    WindowSpec,
};
use crate::{Error, Result};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProxyKind {
    /// Kernel ridge regression accuracy (maximize).
    Krr,
    /// l2 distance between mean gradients (minimize).
    GradDiff,
    /// Cosine similarity between mean gradients (maximize).
    GradSim,
}

impl ProxyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ProxyKind::Krr => "krr",
            ProxyKind::GradDiff => "grad_diff",
            ProxyKind::GradSim => "grad_sim",
        }
    }

    /// True when a larger score is better.
    pub fn maximizes(&self) -> bool {
        !matches!(self, ProxyKind::GradDiff)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Score candidates on the full training set (the default).
    Full,
    /// Score candidates on the easiest half only; robust to label noise
    /// concentrated in the hardest samples.
    Low50,
}

impl EvalMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            EvalMode::Full => "full",
            EvalMode::Low50 => "low50",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowMode {
    /// Windows indexed globally over the sorted dataset.
    Global,
    /// Class-proportional windows with largest-remainder quotas.
    PerClass,
}

/// One evaluated candidate.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub spec: WindowSpec,
    pub score: f64,
}

/// The full sweep table plus the winning candidate.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub candidates: Vec<Candidate>,
    pub winner: usize,
    pub eval_mode: EvalMode,
    pub proxy_kind: ProxyKind,
    pub lambda: f64,
    pub step: usize,
    pub m: usize,
}

impl SweepReport {
    pub fn winner_candidate(&self) -> &Candidate {
        &self.candidates[self.winner]
    }

    /// Self-check: the winner's score dominates every candidate.
    pub fn winner_dominates(&self) -> bool {
        let w = self.candidates[self.winner].score;
        self.candidates.iter().all(|c| {
            if self.proxy_kind.maximizes() {
                w >= c.score
            } else {
                w <= c.score
            }
        })
    }
}

/// The indices of the ceil(fraction*n) easiest samples, the proxy
/// evaluation set for label-noise-robust selection.
pub fn noise_robust_eval_indices(ds: &ScoredDataset, fraction: f64) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::validation(format!(
            "eval fraction {fraction} out of (0, 1]"
        )));
    }
    let n = ds.n();
    let count = (fraction * n as f64).ceil() as usize;
    Ok(ds.order()[n - count..].to_vec())
}

fn eval_indices_for(ds: &ScoredDataset, mode: EvalMode) -> Result<Vec<usize>> {
    match mode {
        EvalMode::Full => Ok((0..ds.n()).collect()),
        EvalMode::Low50 => noise_robust_eval_indices(ds, 0.5),
    }
}

fn score_subset(
    ds: &ScoredDataset,
    subset: &SubsetIndices,
    proxy_kind: ProxyKind,
    lambda: f64,
    eval: &[usize],
    gradients: Option<&GradientBundle>,
) -> Result<f64> {
    match proxy_kind {
        ProxyKind::Krr => {
            let sol = fit_one_vs_rest(ds, subset, lambda)?;
            proxy_accuracy(&sol, ds, eval)
        }
        ProxyKind::GradDiff => {
            let g = gradients
                .ok_or_else(|| Error::validation("grad_diff proxy requires a gradient bundle"))?;
            gradient_difference(g, eval, subset.indices())
        }
        ProxyKind::GradSim => {
            let g = gradients
                .ok_or_else(|| Error::validation("grad_sim proxy requires a gradient bundle"))?;
            gradient_similarity(g, eval, subset.indices())
        }
    }
}

/// Argmax (argmin for grad_diff) over candidates; ties break toward the
/// smallest start index, the harder window.
fn pick_winner(candidates: &[Candidate], proxy_kind: ProxyKind) -> usize {
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        let better = if proxy_kind.maximizes() {
            c.score > candidates[best].score
        } else {
            c.score < candidates[best].score
        };
        if better {
            best = i;
        }
    }
    best
}

fn run_sweep(
    ds: &ScoredDataset,
    specs: Vec<WindowSpec>,
    proxy_kind: ProxyKind,
    eval_mode: EvalMode,
    lambda: f64,
    step: usize,
    m: usize,
    gradients: Option<&GradientBundle>,
) -> Result<SweepReport> {
    if specs.is_empty() {
        return Err(Error::validation("empty candidate grid"));
    }
    let eval = eval_indices_for(ds, eval_mode)?;
    // parallel evaluation, collected back into grid order
    let scores: Vec<Result<f64>> = specs
        .par_iter()
        .map(|spec| {
            let subset = realize(ds, spec)?;
            score_subset(ds, &subset, proxy_kind, lambda, &eval, gradients)
        })
        .collect();
    let mut candidates = Vec::with_capacity(specs.len());
    for (spec, score) in specs.into_iter().zip(scores) {
        candidates.push(Candidate { spec, score: score? });
    }
    let winner = pick_winner(&candidates, proxy_kind);
    Ok(SweepReport {
        candidates,
        winner,
        eval_mode,
        proxy_kind,
        lambda,
        step,
        m,
    })
}

/// Materializes a WindowSpec into concrete indices.
pub fn realize(ds: &ScoredDataset, spec: &WindowSpec) -> Result<SubsetIndices> {
    match *spec {
        WindowSpec::Contiguous { start, m } => contiguous_window(ds, start, m),
        WindowSpec::TwoHalf { start1, start2, m } => two_half_windows(ds, start1, start2, m),
        WindowSpec::WiderRandom { start, m, factor, seed } => {
            wider_window_sample(ds, start, m, factor, seed)
        }
        WindowSpec::PerClass { s, w, .. } => per_class_window(ds, s, w),
    }
}

/// Sweeps the contiguous (or class-proportional) window grid and returns
/// the winning subset with the full sweep table.
#[allow(clippy::too_many_arguments)]
pub fn best_window_select(
    ds: &ScoredDataset,
    m: usize,
    step: usize,
    lambda: f64,
    proxy_kind: ProxyKind,
    eval_mode: EvalMode,
    window_mode: WindowMode,
    gradients: Option<&GradientBundle>,
) -> Result<(SweepReport, SubsetIndices)> {
    let n = ds.n();
    let grid = window_grid(n, m, step, false)?;
    let specs: Vec<WindowSpec> = match window_mode {
        WindowMode::Global => grid
            .into_iter()
            .map(|k| WindowSpec::Contiguous { start: k, m })
            .collect(),
        WindowMode::PerClass => grid
            .into_iter()
            .map(|k| WindowSpec::PerClass {
                s: k as f64 / n as f64,
                w: m as f64 / n as f64,
                m,
            })
            .collect(),
    };
    let report = run_sweep(ds, specs, proxy_kind, eval_mode, lambda, step, m, gradients)?;
    let subset = realize(ds, &report.winner_candidate().spec)?;
    Ok((report, subset))
}

/// Which ablation window family to sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AblationFamily {
    TwoHalf,
    Wider { factor: f64, seed: u64 },
}

/// Sweeps the full grid of an ablation window family with the krr proxy.
/// Two-half: all valid (x1, x2) pairs at the step; wider: all valid starts.
pub fn ablation_sweep(
    ds: &ScoredDataset,
    family: AblationFamily,
    m: usize,
    step: usize,
    lambda: f64,
    eval_mode: EvalMode,
) -> Result<SweepReport> {
    let n = ds.n();
    if step == 0 {
        return Err(Error::validation("step t must be >= 1"));
    }
    if m < 1 || m > n {
        return Err(Error::validation(format!("m={m} out of range [1, {n}]")));
    }
    let specs: Vec<WindowSpec> = match family {
        AblationFamily::TwoHalf => {
            let h1 = m / 2;
            let h2 = m - h1;
            let mut out = Vec::new();
            let mut x1 = 0;
            while x1 + h1 <= n {
                let mut x2 = x1 + h1;
                while x2 + h2 <= n {
                    out.push(WindowSpec::TwoHalf { start1: x1, start2: x2, m });
                    x2 += step;
                }
                x1 += step;
            }
            out
        }
        AblationFamily::Wider { factor, seed } => {
            let span = (factor * m as f64).ceil() as usize;
            let mut out = Vec::new();
            let mut s = 0;
            while s + span <= n {
                out.push(WindowSpec::WiderRandom { start: s, m, factor, seed });
                s += step;
            }
            out
        }
    };
    run_sweep(ds, specs, ProxyKind::Krr, eval_mode, lambda, step, m, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{FeatureMatrix, LabelVector, ScoreVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dataset where class signal lives only in a rank band; elsewhere the
    /// features are pure noise.
    pub(crate) fn planted_dataset(
        n: usize,
        d: usize,
        c: u32,
        band: std::ops::Range<usize>,
        signal: f64,
        seed: u64,
    ) -> ScoredDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels: Vec<u32> = (0..n).map(|i| (i as u32) % c).collect();
        // score = n - i, so rank of sample i is exactly i
        let scores: Vec<f64> = (0..n).map(|i| (n - i) as f64).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut row: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() - 0.5).collect();
                if band.contains(&i) {
                    row[labels[i] as usize % d] += signal;
                }
                row
            })
            .collect();
        let features = FeatureMatrix::from_rows(&rows).unwrap();
        ScoredDataset::new(
            features,
            LabelVector::new(labels, c).unwrap(),
            ScoreVector::new(scores).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn degenerate_full_window() {
        let ds = planted_dataset(30, 4, 2, 0..30, 2.0, 1);
        let (report, subset) =
            best_window_select(&ds, 30, 5, 1.0, ProxyKind::Krr, EvalMode::Full, WindowMode::Global, None)
                .unwrap();
        assert_eq!(report.candidates.len(), 1);
        assert_eq!(subset.m(), 30);
        assert!(report.winner_dominates());
    }

    #[test]
    fn winner_matches_bruteforce_oracle() {
        let ds = planted_dataset(120, 8, 3, 40..90, 3.0, 7);
        let m = 48;
        let step = 8;
        let (report, _) =
            best_window_select(&ds, m, step, 1.0, ProxyKind::Krr, EvalMode::Full, WindowMode::Global, None)
                .unwrap();
        // oracle: independent loop re-evaluating every candidate
        let eval: Vec<usize> = (0..120).collect();
        let grid = window_grid(120, m, step, false).unwrap();
        let mut best_k = 0;
        let mut best_score = f64::NEG_INFINITY;
        for &k in &grid {
            let subset = contiguous_window(&ds, k, m).unwrap();
            let sol = fit_one_vs_rest(&ds, &subset, 1.0).unwrap();
            let acc = proxy_accuracy(&sol, &ds, &eval).unwrap();
            if acc > best_score {
                best_score = acc;
                best_k = k;
            }
        }
        match report.winner_candidate().spec {
            WindowSpec::Contiguous { start, .. } => assert_eq!(start, best_k),
            _ => panic!(),
        }
        assert!((report.winner_candidate().score - best_score).abs() < 1e-15);
    }

    #[test]
    fn low50_eval_indices() {
        let ds = planted_dataset(4, 2, 2, 0..4, 1.0, 3);
        let idx = noise_robust_eval_indices(&ds, 0.5).unwrap();
        // ranks 2 and 3 are original indices 2, 3 (ladder scores)
        assert_eq!(idx, vec![2, 3]);
        let all = noise_robust_eval_indices(&ds, 1.0).unwrap();
        assert_eq!(all.len(), 4);
        assert!(noise_robust_eval_indices(&ds, 0.0).is_err());
        assert!(noise_robust_eval_indices(&ds, 1.5).is_err());
    }

    #[test]
    fn grad_proxy_requires_bundle() {
        let ds = planted_dataset(20, 4, 2, 0..20, 1.0, 9);
        let err = best_window_select(
            &ds, 10, 5, 1.0, ProxyKind::GradDiff, EvalMode::Full, WindowMode::Global, None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("gradient bundle"), "{err}");
    }

    #[test]
    fn grad_diff_winner_is_minimizer() {
        let ds = planted_dataset(20, 4, 2, 0..20, 1.0, 13);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rows: Vec<Vec<f64>> =
            (0..20).map(|_| (0..3).map(|_| rng.gen::<f64>()).collect()).collect();
        let g = GradientBundle::new(rows).unwrap();
        let (report, _) = best_window_select(
            &ds, 10, 2, 1.0, ProxyKind::GradDiff, EvalMode::Full, WindowMode::Global, Some(&g),
        )
        .unwrap();
        assert!(report.winner_dominates());
        let w = report.winner_candidate().score;
        assert!(report.candidates.iter().all(|c| c.score >= w));
    }

    #[test]
    fn two_half_adjacent_matches_contiguous_score() {
        let ds = planted_dataset(40, 6, 2, 10..30, 2.0, 21);
        let m = 8;
        let report =
            ablation_sweep(&ds, AblationFamily::TwoHalf, m, 4, 1.0, EvalMode::Full).unwrap();
        let (contig, _) =
            best_window_select(&ds, m, 4, 1.0, ProxyKind::Krr, EvalMode::Full, WindowMode::Global, None)
                .unwrap();
        // for each contiguous candidate, the adjacent two-half candidate has
        // the same score
        for c in &contig.candidates {
            let WindowSpec::Contiguous { start, .. } = c.spec else { panic!() };
            let twin = report.candidates.iter().find(|t| {
                matches!(t.spec, WindowSpec::TwoHalf { start1, start2, .. }
                    if start1 == start && start2 == start + m / 2)
            });
            if let Some(t) = twin {
                assert!((t.score - c.score).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn two_half_grid_size_matches_hand_count() {
        let ds = planted_dataset(40, 4, 2, 0..40, 1.0, 5);
        let m = 8;
        let step = 4;
        let report =
            ablation_sweep(&ds, AblationFamily::TwoHalf, m, step, 1.0, EvalMode::Full).unwrap();
        // oracle: combinatorial enumeration
        let mut count = 0;
        let h1 = m / 2;
        let h2 = m - h1;
        let mut x1 = 0;
        while x1 + h1 <= 40 {
            let mut x2 = x1 + h1;
            while x2 + h2 <= 40 {
                count += 1;
                x2 += step;
            }
            x1 += step;
        }
        assert_eq!(report.candidates.len(), count);
    }

    #[test]
    fn wider_factor_one_matches_contiguous_sweep() {
        let ds = planted_dataset(40, 6, 2, 10..30, 2.0, 33);
        let m = 8;
        let wider = ablation_sweep(
            &ds,
            AblationFamily::Wider { factor: 1.0, seed: 3 },
            m,
            4,
            1.0,
            EvalMode::Full,
        )
        .unwrap();
        let (contig, _) =
            best_window_select(&ds, m, 4, 1.0, ProxyKind::Krr, EvalMode::Full, WindowMode::Global, None)
                .unwrap();
        assert_eq!(wider.candidates.len(), contig.candidates.len());
        for (a, b) in wider.candidates.iter().zip(&contig.candidates) {
            assert!((a.score - b.score).abs() < 1e-15);
        }
    }

    #[test]
    fn determinism_across_thread_counts() {
        let ds = planted_dataset(60, 6, 3, 15..45, 2.0, 55);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| {
                best_window_select(
                    &ds, 20, 5, 1.0, ProxyKind::Krr, EvalMode::Full, WindowMode::Global, None,
                )
                .unwrap()
            })
        };
        let (r1, s1) = run(1);
        let (r8, s8) = run(8);
        assert_eq!(s1.indices(), s8.indices());
        assert_eq!(r1.candidates.len(), r8.candidates.len());
        for (a, b) in r1.candidates.iter().zip(&r8.candidates) {
            assert_eq!(a.score.to_bits(), b.score.to_bits());
        }
    }

    #[test]
    fn per_class_mode_runs() {
        let ds = planted_dataset(60, 6, 3, 0..60, 2.0, 77);
        let (report, subset) = best_window_select(
            &ds, 21, 6, 1.0, ProxyKind::Krr, EvalMode::Full, WindowMode::PerClass, None,
        )
        .unwrap();
        assert_eq!(subset.m(), 21);
        assert!(report.winner_dominates());
    }
}
