//! Line-level motion masks: a deterministic detector, the probability-map
//! column rule, and the partition of lines into constant-pose segments.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{param_err, size_err, Result};
use crate::grid::{Complex, ComplexGrid, KLineMask, LineAxis, RealImage};
use crate::motion::MotionTrace;
use crate::scalar::Real;

pub const MIN_SCORE_LINES: usize = 8;
pub const DEFAULT_Z: f64 = 2.5;
pub const DEFAULT_COLUMN_FRAC: f64 = 0.30;

// keeps the coherence ratio bounded for nearly incoherent pairs
const COHERENCE_OFFSET: f64 = 1e-3;

/// Artifact evidence per acquisition line, higher is more suspect.
#[derive(Clone, Debug, PartialEq)]
pub struct LineScore {
    pub axis: LineAxis,
    pub scores: Vec<f64>,
}

impl LineScore {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

fn lines_of<T: Real>(f: &ComplexGrid<T>, axis: LineAxis) -> Vec<Vec<Complex<f64>>> {
    let (h, w) = f.shape();
    let n = axis.line_count(h, w);
    let len = axis.line_length(h, w);
    (0..n)
        .map(|l| {
            (0..len)
                .map(|p| {
                    let z = f.data()[axis.index(w, l, p)];
                    Complex::new(z.re.as_f64(), z.im.as_f64())
                })
                .collect()
        })
        .collect()
}

/// Line paired with `l` by conjugate symmetry about the centred zero frequency.
#[inline]
fn mirror(l: usize, n: usize) -> Option<usize> {
    let m = 2 * (n / 2);
    (l <= m && m - l < n).then(|| m - l)
}

pub(crate) fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Median absolute deviation about the median (unscaled).
pub(crate) fn mad(values: &[f64], med: f64) -> f64 {
    let dev: Vec<f64> = values.iter().map(|v| libm::fabs(v - med)).collect();
    median(&dev)
}

/// Per-line artifact evidence.
///
/// A real object under a single pose has a conjugate-symmetric spectrum, so
/// every line can be checked against its mirror line. Two terms are summed:
/// the log-energy deviation from a 5-line median, differenced against the
/// same deviation of the mirror line; and the drop in coherence between the
/// line and its predecessor relative to the mirrored pair. Pose changes
/// between adjacent lines show up as the second term on the later line.
/// Motion-free data scores zero everywhere.
pub fn score_lines<T: Real>(f: &ComplexGrid<T>, axis: LineAxis) -> Result<LineScore> {
    let (h, w) = f.shape();
    let n = axis.line_count(h, w);
    if n < MIN_SCORE_LINES {
        return Err(size_err!("need at least {MIN_SCORE_LINES} lines, got {n}"));
    }
    if !f.all_finite() {
        return Err(param_err!("k-space contains non-finite values"));
    }
    let lines = lines_of(f, axis);
    let energy: Vec<f64> = lines.iter().map(|l| l.iter().map(|z| z.norm_sqr()).sum()).collect();
    // lines near the roundoff level of the strongest line carry no evidence
    let eps = T::epsilon().as_f64();
    let floor = energy.iter().cloned().fold(0.0, f64::max) * (1e4 * eps * eps).max(1e-10) + f64::MIN_POSITIVE;
    let score_floor = (1e3 * eps).max(1e-6);
    let log_e: Vec<f64> = energy.iter().map(|&e| libm::log(e + floor)).collect();

    // lines with a mirror partner form a contiguous range
    let lo_line = (0..n).find(|&l| mirror(l, n).is_some()).unwrap_or(0);
    let deviation = |l: usize| {
        let lo = l.saturating_sub(2).max(lo_line);
        let hi = (l + 2).min(n - 1);
        log_e[l] - median(&log_e[lo..=hi])
    };

    // coherence[l] is between lines l-1 and l
    let mut coherence = vec![1.0; n];
    for l in 1..n {
        let (a, b) = (&lines[l - 1], &lines[l]);
        let cross: Complex<f64> = a.iter().zip(b).map(|(x, y)| x * y.conj()).sum();
        let denom = libm::sqrt((energy[l - 1] + floor) * (energy[l] + floor));
        coherence[l] = (cross.norm() / denom).min(1.0) + COHERENCE_OFFSET;
    }

    let mut scores = vec![0.0; n];
    for l in 0..n {
        let Some(m) = mirror(l, n) else { continue };
        let energy_term = libm::fabs(deviation(l) - deviation(m));
        let phase_term = match (l.checked_sub(1).and_then(|p| mirror(p, n)), l > lo_line) {
            (Some(mp), true) => libm::log(coherence[mp] / coherence[l]).max(0.0),
            _ => 0.0,
        };
        let s = energy_term + phase_term;
        scores[l] = if s > score_floor { s } else { 0.0 };
    }
    Ok(LineScore { axis, scores })
}

/// Flag lines whose score exceeds `median + z * MAD`.
pub fn threshold_mask(scores: &LineScore, z: f64) -> KLineMask {
    let med = median(&scores.scores);
    let spread = mad(&scores.scores, med);
    let cut = med + z * spread;
    KLineMask::from_fn(scores.axis, scores.len(), |l| scores.scores[l] > cut)
}

/// Flag a line when more than `frac` of its entries have probability above 0.5.
pub fn column_rule<T: Real>(prob_map: &RealImage<T>, frac: f64, axis: LineAxis) -> Result<KLineMask> {
    if !(frac > 0.0 && frac < 1.0) {
        return Err(param_err!("column fraction must lie in (0, 1), got {frac}"));
    }
    let (h, w) = prob_map.shape();
    if prob_map.data().iter().any(|p| !(p.as_f64() >= 0.0 && p.as_f64() <= 1.0)) {
        return Err(param_err!("probabilities must lie in [0, 1]"));
    }
    let len = axis.line_length(h, w);
    Ok(KLineMask::from_fn(axis, axis.line_count(h, w), |l| {
        let hits = (0..len).filter(|&p| prob_map.data()[axis.index(w, l, p)].as_f64() > 0.5).count();
        hits as f64 > frac * len as f64
    }))
}

pub fn complement(mask: &KLineMask) -> KLineMask {
    mask.complement()
}

/// Assignment of every acquisition line to a constant-pose segment.
///
/// Segment 0 is the reference pose; the remaining labels are numbered in
/// order of first appearance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinePartition {
    labels: Vec<usize>,
    count: usize,
}

impl LinePartition {
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(size_err!("partition needs at least one line"));
        }
        let count = labels.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; count];
        for &l in &labels {
            seen[l] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(param_err!("partition labels must be contiguous from 0"));
        }
        Ok(Self { labels, count })
    }

    /// Unflagged lines share segment 0; each maximal run of flagged lines is its own segment.
    pub fn from_mask_runs(mask: &KLineMask) -> Self {
        let mut labels = vec![0; mask.len()];
        let mut next = 0;
        for l in 0..mask.len() {
            if mask.is_flagged(l) {
                if l == 0 || !mask.is_flagged(l - 1) {
                    next += 1;
                }
                labels[l] = next;
            }
        }
        Self::relabel(labels)
    }

    /// Contiguous segments starting at each boundary line.
    pub fn from_boundaries(n_lines: usize, boundaries: &[usize]) -> Result<Self> {
        if n_lines == 0 {
            return Err(size_err!("partition needs at least one line"));
        }
        let mut labels = vec![0; n_lines];
        let mut seg = 0;
        for (l, label) in labels.iter_mut().enumerate() {
            if l > 0 && boundaries.contains(&l) {
                seg += 1;
            }
            *label = seg;
        }
        if boundaries.iter().any(|&b| b >= n_lines) {
            return Err(param_err!("boundary outside 0..{n_lines}"));
        }
        Ok(Self::relabel(labels))
    }

    /// One segment per trace segment; identity-pose segments all map to 0.
    pub fn from_trace(trace: &MotionTrace) -> Self {
        let mut labels = vec![0; trace.n_lines()];
        let mut next = 0;
        for s in trace.segments() {
            let label = if s.pose.is_identity() {
                0
            } else {
                next += 1;
                next
            };
            labels[s.start..s.end].fill(label);
        }
        Self::relabel(labels)
    }

    fn relabel(labels: Vec<usize>) -> Self {
        let mut map: Vec<Option<usize>> = vec![None; labels.len() + 1];
        map[0] = Some(0);
        let mut next = 1;
        let labels: Vec<usize> = labels
            .into_iter()
            .map(|l| {
                *map[l].get_or_insert_with(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        let count = labels.iter().max().map_or(0, |m| m + 1);
        Self { labels, count }
    }

    pub fn n_lines(&self) -> usize {
        self.labels.len()
    }

    /// Number of distinct segments, including the reference.
    pub fn segment_count(&self) -> usize {
        self.count
    }

    pub fn label(&self, line: usize) -> usize {
        self.labels[line]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// First line of every segment after the first, in line order.
    pub fn boundaries(&self) -> Vec<usize> {
        (1..self.labels.len()).filter(|&l| self.labels[l] != self.labels[l - 1]).collect()
    }
}

#[derive(Clone, Debug)]
pub struct Detection {
    pub scores: LineScore,
    /// Lines where a pose change was detected.
    pub boundaries: Vec<usize>,
    pub mask: KLineMask,
    pub partition: LinePartition,
}

/// Run the detector end to end.
///
/// Lines before the first detected boundary are the reference segment; every
/// later line is flagged, and each boundary starts a new segment.
pub fn detect_mask<T: Real>(f: &ComplexGrid<T>, axis: LineAxis, z: f64) -> Result<Detection> {
    if !(z > 0.0) {
        return Err(param_err!("z must be positive, got {z}"));
    }
    let scores = score_lines(f, axis)?;
    let hits = threshold_mask(&scores, z);
    let boundaries: Vec<usize> = (1..hits.len()).filter(|&l| hits.is_flagged(l)).collect();
    let first = boundaries.first().copied().unwrap_or(hits.len());
    let mask = KLineMask::from_fn(axis, hits.len(), |l| l >= first);
    let partition = LinePartition::from_boundaries(hits.len(), &boundaries)?;
    Ok(Detection { scores, boundaries, mask, partition })
}
