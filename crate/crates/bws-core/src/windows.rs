//! Candidate subset generators: the contiguous window grid over the
//! difficulty ordering, the two ablation families (two half-width windows,
//! wider randomly thinned windows), and the class-proportional variant.

use crate::dataset::{ScoredDataset, SubsetIndices};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Description of one candidate subset.
#[derive(Debug, Clone, PartialEq)]
pub enum WindowSpec {
    /// Samples ranked `[start, start+m)` in the difficulty ordering.
    Contiguous { start: usize, m: usize },
    /// Union of two half-width rank slices.
    TwoHalf { start1: usize, start2: usize, m: usize },
    /// m samples drawn without replacement from the rank slice
    /// `[start, start + ceil(factor*m))`.
    WiderRandom { start: usize, m: usize, factor: f64, seed: u64 },
    /// Per-class contiguous blocks at fractional start `s` with
    /// largest-remainder quotas summing to m.
    PerClass { s: f64, w: f64, m: usize },
}

impl WindowSpec {
    /// Grid-ordering key (primary start index) for report ordering.
    pub fn start_key(&self) -> (usize, usize) {
        match self {
            WindowSpec::Contiguous { start, .. } => (*start, 0),
            WindowSpec::TwoHalf { start1, start2, .. } => (*start1, *start2),
            WindowSpec::WiderRandom { start, .. } => (*start, 0),
            WindowSpec::PerClass { s, .. } => ((s * 1e9) as usize, 0),
        }
    }

    pub fn m(&self) -> usize {
        match self {
            WindowSpec::Contiguous { m, .. }
            | WindowSpec::TwoHalf { m, .. }
            | WindowSpec::WiderRandom { m, .. }
            | WindowSpec::PerClass { m, .. } => *m,
        }
    }
}

/// Round half up, the convention for all fraction-to-index mappings.
pub fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor().max(0.0) as usize
}

/// Start indices `{0, t, 2t, ..., floor((n-m)/t)*t}`; with `include_tail`,
/// n-m is appended when not already on the grid.
pub fn window_grid(n: usize, m: usize, t: usize, include_tail: bool) -> Result<Vec<usize>> {
    if m < 1 || m > n {
        return Err(Error::validation(format!(
            "window size m={m} out of range [1, {n}]"
        )));
    }
    if t == 0 {
        return Err(Error::validation("step t must be >= 1"));
    }
    let last = (n - m) / t * t;
    let mut grid: Vec<usize> = (0..=last / t).map(|k| k * t).collect();
    if include_tail && last != n - m {
        grid.push(n - m);
    }
    Ok(grid)
}

/// The samples ranked k-th hardest through (k+m-1)-th hardest.
pub fn contiguous_window(ds: &ScoredDataset, k: usize, m: usize) -> Result<SubsetIndices> {
    let n = ds.n();
    if m < 1 || m > n || k > n - m {
        return Err(Error::validation(format!(
            "contiguous window start {k}, size {m} out of range for n={n}"
        )));
    }
    SubsetIndices::new(ds.order()[k..k + m].to_vec(), n)
}

/// Largest-remainder apportionment of `total` proportional to `weights`.
fn largest_remainder_quotas(weights: &[usize], total: usize) -> Vec<usize> {
    let sum: usize = weights.iter().sum();
    let shares: Vec<f64> = weights
        .iter()
        .map(|&w| total as f64 * w as f64 / sum as f64)
        .collect();
    let mut quotas: Vec<usize> = shares.iter().map(|&s| s.floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    // remainders descending, ties by class index ascending
    order.sort_by(|&a, &b| {
        let ra = shares[a] - shares[a].floor();
        let rb = shares[b] - shares[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &c in order.iter().take(total - assigned) {
        quotas[c] += 1;
    }
    quotas
}

/// Class-proportional window: within each class, samples are sorted
/// descending by score and the block starting at round(s*n_c) of the
/// class quota size is taken. Blocks running past the class end are
/// clamped toward the easier end.
pub fn per_class_window(ds: &ScoredDataset, s: f64, w: f64) -> Result<SubsetIndices> {
    if !(0.0..=1.0).contains(&s) || !(w > 0.0 && w <= 1.0) || s + w > 1.0 + 1e-12 {
        return Err(Error::validation(format!(
            "per-class window fractions s={s}, w={w} invalid"
        )));
    }
    let n = ds.n();
    let c_count = ds.labels().num_classes() as usize;
    // per-class ranks, in global difficulty order so each list is sorted
    // descending by score already
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); c_count];
    for &i in ds.order() {
        by_class[ds.labels().labels()[i] as usize].push(i);
    }
    for (c, members) in by_class.iter().enumerate() {
        if members.is_empty() {
            return Err(Error::validation(format!("class {c} has no samples")));
        }
    }
    let m = round_half_up(w * n as f64).max(1);
    let sizes: Vec<usize> = by_class.iter().map(|v| v.len()).collect();
    let quotas = largest_remainder_quotas(&sizes, m);
    let mut indices = Vec::with_capacity(m);
    for (c, members) in by_class.iter().enumerate() {
        let n_c = members.len();
        let m_c = quotas[c];
        if m_c > n_c {
            return Err(Error::validation(format!(
                "quota {m_c} exceeds class {c} size {n_c}"
            )));
        }
        let mut start = round_half_up(s * n_c as f64);
        if start + m_c > n_c {
            start = n_c - m_c; // clamp toward the easier end
        }
        indices.extend_from_slice(&members[start..start + m_c]);
    }
    SubsetIndices::new(indices, n)
}

/// Union of the rank slices `[x1, x1+floor(m/2))` and
/// `[x2, x2 + m - floor(m/2))`.
pub fn two_half_windows(
    ds: &ScoredDataset,
    x1: usize,
    x2: usize,
    m: usize,
) -> Result<SubsetIndices> {
    let n = ds.n();
    let h1 = m / 2;
    let h2 = m - h1;
    if m < 2 {
        return Err(Error::validation("two-half window needs m >= 2"));
    }
    if x2 < x1 + h1 {
        return Err(Error::validation(format!(
            "two-half windows overlap: x1={x1}, x2={x2}, half={h1}"
        )));
    }
    if x1 + h1 > n || x2 + h2 > n {
        return Err(Error::validation(format!(
            "two-half window out of range: x1={x1}, x2={x2}, m={m}, n={n}"
        )));
    }
    let mut indices = Vec::with_capacity(m);
    indices.extend_from_slice(&ds.order()[x1..x1 + h1]);
    indices.extend_from_slice(&ds.order()[x2..x2 + h2]);
    SubsetIndices::new(indices, n)
}

/// ChaCha stream keyed by (seed, key) so parallel sweeps are
/// schedule-independent.
pub fn keyed_rng(seed: u64, key: u64) -> ChaCha8Rng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..16].copy_from_slice(&key.to_le_bytes());
    bytes[16..24].copy_from_slice(&0x9e37_79b9_7f4a_7c15u64.to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}

/// m indices sampled uniformly without replacement from the rank slice of
/// length ceil(factor*m) starting at s. Deterministic in (seed, s).
pub fn wider_window_sample(
    ds: &ScoredDataset,
    s: usize,
    m: usize,
    factor: f64,
    seed: u64,
) -> Result<SubsetIndices> {
    let n = ds.n();
    if factor < 1.0 {
        return Err(Error::validation(format!("wider factor {factor} must be >= 1")));
    }
    let span = (factor * m as f64).ceil() as usize;
    if m < 1 || s + span > n {
        return Err(Error::validation(format!(
            "wider window [{}, {}) out of range for n={n}",
            s,
            s + span
        )));
    }
    let mut rng = keyed_rng(seed, s as u64);
    let picks = rand::seq::index::sample(&mut rng, span, m);
    let mut offsets: Vec<usize> = picks.into_iter().collect();
    offsets.sort_unstable();
    let indices: Vec<usize> = offsets.into_iter().map(|o| ds.order()[s + o]).collect();
    SubsetIndices::new(indices, n)
}
