//! Localization scores: radius-limited pairing of estimated and ground-truth
//! molecules, Jaccard / recall / precision, per-axis RMSE, and the sweep used
//! to pick the regularization parameter.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::measures::{DiscreteMeasure, Point};
use crate::sfw::{run_sfw, BlassoProblem, SfwConfig};

/// Radius (microns) for the Jaccard family of metrics.
pub const JACCARD_RADIUS: f64 = 0.02;
/// Radius (microns) for the RMSE metrics.
pub const RMSE_RADIUS: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// `(estimate index, ground-truth index, distance)`, sorted by estimate index.
    pub pairs: Vec<(usize, usize, f64)>,
    pub false_positives: Vec<usize>,
    pub false_negatives: Vec<usize>,
    pub radius: f64,
}

impl MatchResult {
    pub fn true_positives(&self) -> usize {
        self.pairs.len()
    }

    pub fn total_distance(&self) -> f64 {
        self.pairs.iter().map(|p| p.2).sum()
    }
}

/// Maximum-cardinality matching between `est` and `gt` restricted to pairs at
/// distance `<= r`, with minimum total distance among maximum matchings.
pub fn match_points(est: &[Point], gt: &[Point], r: f64) -> Result<MatchResult> {
    if !(r > 0.0) {
        return Err(Error::Parameter("matching radius must be positive".into()));
    }
    let n = est.len().max(gt.len());
    let mut pairs = Vec::new();
    if n > 0 {
        // Each admissible pair earns a bonus larger than any sum of distances,
        // so the minimum-cost assignment first maximizes the number of pairs.
        let bonus = r * (n as f64 + 1.0) + 1.0;
        let mut cost = vec![0.0; n * n];
        let mut allowed = vec![false; n * n];
        for (i, e) in est.iter().enumerate() {
            for (j, g) in gt.iter().enumerate() {
                let d = e.distance(g);
                if d <= r {
                    cost[i * n + j] = d - bonus;
                    allowed[i * n + j] = true;
                }
            }
        }
        let assign = hungarian(&cost, n);
        for (i, &j) in assign.iter().enumerate() {
            if i < est.len() && j < gt.len() && allowed[i * n + j] {
                pairs.push((i, j, est[i].distance(&gt[j])));
            }
        }
    }
    let mut est_used = vec![false; est.len()];
    let mut gt_used = vec![false; gt.len()];
    for &(i, j, _) in &pairs {
        est_used[i] = true;
        gt_used[j] = true;
    }
    Ok(MatchResult {
        false_positives: (0..est.len()).filter(|&i| !est_used[i]).collect(),
        false_negatives: (0..gt.len()).filter(|&j| !gt_used[j]).collect(),
        pairs,
        radius: r,
    })
}

/// Minimum-cost perfect assignment on a square row-major `n x n` matrix
/// (shortest augmenting paths with potentials). Returns the column of each row.
fn hungarian(cost: &[f64], n: usize) -> Vec<usize> {
    // 1-based arrays, index 0 is the virtual column.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        out[owner[j] - 1] = j - 1;
    }
    out
}

/// Scores of one frame. Ratios with a zero denominator are 1 when both
/// point sets are empty and 0 otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameScore {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub jaccard: f64,
    pub recall: f64,
    pub precision: f64,
    /// Per-axis RMSE over the pairs; `None` without pairs.
    pub rmse: Option<Vec<f64>>,
    /// Per-axis sums of squared errors over the pairs.
    pub squared_errors: Vec<f64>,
}

fn ratio(num: usize, den: usize, both_empty: bool) -> f64 {
    if den == 0 {
        if both_empty { 1.0 } else { 0.0 }
    } else {
        num as f64 / den as f64
    }
}

pub fn score_frame(m: &MatchResult, est: &[Point], gt: &[Point]) -> Result<FrameScore> {
    let tp = m.pairs.len();
    if m.false_positives.len() + tp != est.len() || m.false_negatives.len() + tp != gt.len() {
        return Err(Error::Parameter("match result does not fit the point counts".into()));
    }
    let dim = est.first().or(gt.first()).map_or(0, |p| p.dim());
    let mut squared_errors = vec![0.0; dim];
    for &(i, j, _) in &m.pairs {
        for (a, acc) in squared_errors.iter_mut().enumerate() {
            *acc += (est[i][a] - gt[j][a]).powi(2);
        }
    }
    Ok(counts_score(tp, m.false_positives.len(), m.false_negatives.len(), squared_errors))
}

fn counts_score(tp: usize, fp: usize, fn_: usize, squared_errors: Vec<f64>) -> FrameScore {
    let both_empty = tp + fp + fn_ == 0;
    let rmse = (tp > 0).then(|| squared_errors.iter().map(|s| (s / tp as f64).sqrt()).collect());
    FrameScore {
        tp,
        fp,
        fn_,
        jaccard: ratio(tp, tp + fp + fn_, both_empty),
        recall: ratio(tp, tp + fn_, both_empty),
        precision: ratio(tp, tp + fp, both_empty),
        rmse,
        squared_errors,
    }
}

/// Match at `r` and score in one call.
pub fn evaluate_frame(est: &[Point], gt: &[Point], r: f64) -> Result<FrameScore> {
    let m = match_points(est, gt, r)?;
    score_frame(&m, est, gt)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub jaccard: f64,
    pub recall: f64,
    pub precision: f64,
    pub rmse: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub frames: usize,
    /// Metrics averaged over frames (RMSE over frames that have pairs).
    pub per_frame_mean: MetricSummary,
    /// Metrics computed from counts and squared errors summed over frames.
    pub pooled: MetricSummary,
}

pub fn aggregate(scores: &[FrameScore]) -> Aggregate {
    let n = scores.len().max(1) as f64;
    let mean = |f: fn(&FrameScore) -> f64| scores.iter().map(f).sum::<f64>() / n;
    let with_pairs: Vec<&Vec<f64>> = scores.iter().filter_map(|s| s.rmse.as_ref()).collect();
    let mean_rmse = with_pairs.first().map(|first| {
        (0..first.len())
            .map(|a| with_pairs.iter().map(|r| r[a]).sum::<f64>() / with_pairs.len() as f64)
            .collect()
    });
    let dim = scores.iter().map(|s| s.squared_errors.len()).max().unwrap_or(0);
    let mut sq = vec![0.0; dim];
    for s in scores {
        for (acc, v) in sq.iter_mut().zip(&s.squared_errors) {
            *acc += v;
        }
    }
    let pooled = counts_score(
        scores.iter().map(|s| s.tp).sum(),
        scores.iter().map(|s| s.fp).sum(),
        scores.iter().map(|s| s.fn_).sum(),
        sq,
    );
    Aggregate {
        frames: scores.len(),
        per_frame_mean: MetricSummary {
            jaccard: mean(|s| s.jaccard),
            recall: mean(|s| s.recall),
            precision: mean(|s| s.precision),
            rmse: mean_rmse,
        },
        pooled: MetricSummary {
            jaccard: pooled.jaccard,
            recall: pooled.recall,
            precision: pooled.precision,
            rmse: pooled.rmse,
        },
    }
}

/// `points` logarithmically spaced values spanning `decades` decades,
/// centered (geometrically) on `center`.
pub fn log_grid(center: f64, decades: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![center];
    }
    (0..points)
        .map(|i| center * 10f64.powf(decades * (i as f64 / (points - 1) as f64 - 0.5)))
        .collect()
}

/// `|Phi^* y|_inf` sampled on the kernel's default grid.
pub fn adjoint_sup<K: Kernel + ?Sized>(kernel: &K, y: &[f64]) -> Result<f64> {
    if y.len() != kernel.obs_dim() {
        return Err(Error::Dimension { expected: kernel.obs_dim(), found: y.len() });
    }
    Ok(kernel.adjoint_on_grid(y, &kernel.default_grid()).iter().fold(0.0f64, |a, v| a.max(v.abs())))
}

/// Default candidates: 8 points over 3 decades around `0.1 |Phi^* y|_inf`.
pub fn default_lambda_grid<K: Kernel + ?Sized>(kernel: &K, y: &[f64]) -> Result<Vec<f64>> {
    let s = adjoint_sup(kernel, y)?;
    if !(s > 0.0) {
        return Err(Error::ZeroObservation);
    }
    Ok(log_grid(0.1 * s, 3.0, 8))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSelection {
    pub lambda: f64,
    pub candidates: Vec<f64>,
    /// Mean Jaccard of each candidate.
    pub scores: Vec<f64>,
}

/// Picks the candidate with the largest score; ties go to the smaller value.
pub fn select_lambda_by<F>(candidates: &[f64], mut score: F) -> Result<LambdaSelection>
where
    F: FnMut(f64) -> Result<f64>,
{
    if candidates.is_empty() {
        return Err(Error::Parameter("lambda grid is empty".into()));
    }
    let scores = candidates.iter().map(|&l| score(l)).collect::<Result<Vec<f64>>>()?;
    let mut best = 0;
    for i in 1..candidates.len() {
        if scores[i] > scores[best] || (scores[i] == scores[best] && candidates[i] < candidates[best]) {
            best = i;
        }
    }
    Ok(LambdaSelection { lambda: candidates[best], candidates: candidates.to_vec(), scores })
}

/// One training frame: observation and ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingFrame {
    pub y: Vec<f64>,
    pub truth: DiscreteMeasure,
}

/// Mean Jaccard at radius `r` of SFW reconstructions over `frames`.
pub fn mean_jaccard<K: Kernel + ?Sized>(
    kernel: &K,
    frames: &[TrainingFrame],
    lambda: f64,
    positive: bool,
    cfg: &SfwConfig,
    r: f64,
) -> Result<f64> {
    if frames.is_empty() {
        return Err(Error::Parameter("no training frames".into()));
    }
    let mut total = 0.0;
    for f in frames {
        let problem = BlassoProblem::new(kernel, f.y.clone(), lambda, positive)?;
        let (m, _) = run_sfw(&problem, cfg)?;
        total += evaluate_frame(&m.positions(), &f.truth.positions(), r)?.jaccard;
    }
    Ok(total / frames.len() as f64)
}

/// Sweep of `candidates` on the training frames, maximizing mean Jaccard.
pub fn select_lambda<K: Kernel + ?Sized>(
    kernel: &K,
    candidates: &[f64],
    frames: &[TrainingFrame],
    positive: bool,
    cfg: &SfwConfig,
    r: f64,
) -> Result<LambdaSelection> {
    if frames.is_empty() {
        return Err(Error::Parameter("no training frames".into()));
    }
    select_lambda_by(candidates, |l| mean_jaccard(kernel, frames, l, positive, cfg, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{apply_forward, Gaussian1D};
    use proptest::prelude::*;

    fn p3(x: f64, y: f64, z: f64) -> Point {
        Point::d3(x, y, z)
    }

    /// Best (cardinality, -distance) over all partial injective matchings.
    fn brute_force(est: &[Point], gt: &[Point], r: f64) -> (usize, f64) {
        fn rec(i: usize, est: &[Point], gt: &[Point], r: f64, used: &mut Vec<bool>, card: usize, dist: f64, best: &mut (usize, f64)) {
            if i == est.len() {
                if card > best.0 || (card == best.0 && dist < best.1) {
                    *best = (card, dist);
                }
                return;
            }
            rec(i + 1, est, gt, r, used, card, dist, best);
            for j in 0..gt.len() {
                let d = est[i].distance(&gt[j]);
                if !used[j] && d <= r {
                    used[j] = true;
                    rec(i + 1, est, gt, r, used, card + 1, dist + d, best);
                    used[j] = false;
                }
            }
        }
        let mut best = (0, 0.0);
        rec(0, est, gt, r, &mut vec![false; gt.len()], 0, 0.0, &mut best);
        best
    }

    #[test]
    fn matching_examples() {
        let gt = vec![p3(1.0, 1.0, 0.1), p3(2.0, 2.0, 0.2), p3(3.0, 1.0, 0.5)];
        let m = match_points(&gt, &gt, 0.02).unwrap();
        assert_eq!(m.pairs.len(), 3);
        assert!(m.pairs.iter().all(|p| p.0 == p.1 && p.2 == 0.0));
        assert!(m.false_positives.is_empty() && m.false_negatives.is_empty());

        let m = match_points(&[p3(1.04, 1.0, 0.1)], &[p3(1.0, 1.0, 0.1)], 0.02).unwrap();
        assert_eq!((m.pairs.len(), m.false_positives.len(), m.false_negatives.len()), (0, 1, 1));

        let m = match_points(&[p3(0.99, 1.0, 0.1), p3(1.01, 1.0, 0.1)], &[p3(1.0, 1.0, 0.1)], 0.02).unwrap();
        assert_eq!(m.pairs.len(), 1);
        assert_eq!(m.false_positives.len(), 1);

        assert!(match_points(&[], &[], 0.0).is_err());
        assert_eq!(match_points(&[], &[], 0.02).unwrap().pairs.len(), 0);
    }

    #[test]
    fn matching_prefers_cardinality_over_distance() {
        // greedy nearest pairing would take (e0, g0) and lose a pair
        let est = vec![Point::d1(0.0), Point::d1(-0.9)];
        let gt = vec![Point::d1(0.1), Point::d1(0.95)];
        let m = match_points(&est, &gt, 1.0).unwrap();
        assert_eq!(m.pairs.len(), 2);
        assert_eq!(m.pairs[0].1, 1);
    }

    #[test]
    fn score_examples() {
        let gt = vec![p3(1.0, 1.0, 0.1), p3(2.0, 2.0, 0.2), p3(3.0, 1.0, 0.5), p3(5.0, 5.0, 0.5)];
        let est = vec![p3(1.0, 1.0, 0.1), p3(2.0, 2.0, 0.2), p3(3.0, 1.0, 0.5), p3(4.0, 4.0, 0.1)];
        let s = evaluate_frame(&est, &gt, 0.02).unwrap();
        assert_eq!((s.tp, s.fp, s.fn_), (3, 1, 1));
        assert!((s.jaccard - 0.6).abs() < 1e-15);
        assert!((s.recall - 0.75).abs() < 1e-15);
        assert!((s.precision - 0.75).abs() < 1e-15);

        let gt = vec![p3(1.0, 1.0, 0.1), p3(2.0, 2.0, 0.2)];
        let est = vec![p3(1.003, 1.0, 0.1), p3(2.004, 2.0, 0.2)];
        let s = evaluate_frame(&est, &gt, 0.1).unwrap();
        let r = s.rmse.unwrap();
        assert!((r[0] - ((9e-6 + 16e-6) / 2.0f64).sqrt()).abs() < 1e-12);
        assert!(r[1] < 1e-12 && r[2] < 1e-12);

        let s = evaluate_frame(&gt, &gt, 0.02).unwrap();
        assert_eq!((s.jaccard, s.recall, s.precision), (1.0, 1.0, 1.0));
        assert_eq!(s.rmse.unwrap(), vec![0.0; 3]);

        let s = evaluate_frame(&[], &[], 0.02).unwrap();
        assert_eq!((s.jaccard, s.recall, s.precision), (1.0, 1.0, 1.0));
        let s = evaluate_frame(&[], &gt, 0.02).unwrap();
        assert_eq!((s.jaccard, s.recall, s.precision), (0.0, 0.0, 0.0));
        assert!(s.rmse.is_none());
    }

    #[test]
    fn aggregate_pools_counts() {
        let a = counts_score(3, 1, 0, vec![0.0; 3]);
        let b = counts_score(1, 0, 3, vec![0.0; 3]);
        let agg = aggregate(&[a.clone(), b.clone()]);
        assert!((agg.pooled.jaccard - 4.0 / 8.0).abs() < 1e-15);
        assert!((agg.per_frame_mean.jaccard - (0.75 + 0.25) / 2.0).abs() < 1e-15);
        assert_eq!(agg.frames, 2);
    }

    #[test]
    fn lambda_grid_and_selection() {
        let g = log_grid(1.0, 3.0, 8);
        assert_eq!(g.len(), 8);
        assert!((g[0] - 10f64.powf(-1.5)).abs() < 1e-12 && (g[7] - 10f64.powf(1.5)).abs() < 1e-12);
        assert!((g[0] * g[7] - 1.0).abs() < 1e-12);

        let sel = select_lambda_by(&[0.3], |_| Ok(0.0)).unwrap();
        assert_eq!(sel.lambda, 0.3);
        let sel = select_lambda_by(&[0.5, 0.1, 0.2], |l| Ok(if l < 0.4 { 0.8 } else { 0.1 })).unwrap();
        assert_eq!(sel.lambda, 0.1);
        assert!(select_lambda_by(&[], |_| Ok(0.0)).is_err());
    }

    #[test]
    fn selection_on_noiseless_family() {
        let k = Gaussian1D::new(0.05, 100).unwrap();
        let frames: Vec<TrainingFrame> = [(0.3, 0.7), (0.2, 0.55), (0.4, 0.8)]
            .iter()
            .map(|&(a, b)| {
                let truth = DiscreteMeasure::from_parts(&[1.0, 1.2], &[Point::d1(a), Point::d1(b)]);
                TrainingFrame { y: apply_forward(&k, &truth).unwrap(), truth }
            })
            .collect();
        let grid = default_lambda_grid(&k, &frames[0].y).unwrap();
        let mut candidates = grid.clone();
        candidates.push(1e6);
        let cfg = SfwConfig::default();
        let sel = select_lambda(&k, &candidates, &frames, true, &cfg, 0.02).unwrap();
        let huge = *sel.scores.last().unwrap();
        assert_eq!(huge, 0.0);
        let best = sel.scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(mean_jaccard(&k, &frames, sel.lambda, true, &cfg, 0.02).unwrap(), best);
        assert!(best > 0.9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn matching_equals_brute_force(
            est in prop::collection::vec((0.0f64..0.1, 0.0f64..0.1, 0.0f64..0.05), 0..=6),
            gt in prop::collection::vec((0.0f64..0.1, 0.0f64..0.1, 0.0f64..0.05), 0..=6),
        ) {
            let est: Vec<Point> = est.into_iter().map(|(a, b, c)| p3(a, b, c)).collect();
            let gt: Vec<Point> = gt.into_iter().map(|(a, b, c)| p3(a, b, c)).collect();
            let r = 0.04;
            let m = match_points(&est, &gt, r).unwrap();
            let (card, dist) = brute_force(&est, &gt, r);
            prop_assert_eq!(m.pairs.len(), card);
            prop_assert!((m.total_distance() - dist).abs() < 1e-9);
            prop_assert!(m.pairs.iter().all(|p| p.2 <= r));
            let s = score_frame(&m, &est, &gt).unwrap();
            prop_assert!(s.jaccard <= s.recall + 1e-15 && s.jaccard <= s.precision + 1e-15);
            // permutation invariance of the optimal value
            let mut rev = est.clone();
            rev.reverse();
            let m2 = match_points(&rev, &gt, r).unwrap();
            prop_assert_eq!(m2.pairs.len(), m.pairs.len());
            prop_assert!((m2.total_distance() - m.total_distance()).abs() < 1e-9);
        }
    }
}
