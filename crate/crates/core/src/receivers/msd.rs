//! Block decoding by count sorting.
//!
//! For metrics that depend on a hypothesis only through `(N_on, R_on)`, the
//! best sequence with `N` ones puts them on the `N` largest counts, so the
//! search over `2^L` sequences reduces to `L + 1` candidates.

use crate::error::Result;

use super::stats::WindowStats;
use super::{Decision, Receiver};

/// Candidate sets searched by [`msd_block_decode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MsdScan {
    /// Ones on the `N` largest counts. Exact for metrics nondecreasing in
    /// `R_on`.
    #[default]
    Largest,
    /// Also tries ones on the `N` smallest counts. Exact for metrics convex in
    /// `R_on`, whose maximum over sets of size `N` sits at an extreme sum.
    BothEnds,
}

/// Decodes one block. `metric(n_on, g_on)` is evaluated for `N = 0..=L` with
/// `g_on` the sum of the `N` largest (and, for [`MsdScan::BothEnds`],
/// smallest) counts. Ties go to the smaller `N` and then to the largest
/// counts; equal counts are ranked by position.
pub fn msd_block_decode<F>(counts: &[u32], scan: MsdScan, mut metric: F) -> Result<Vec<u8>>
where
    F: FnMut(u64, u64) -> Result<f64>,
{
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    let mut best = (metric(0, 0)?, 0usize, false);
    let (mut top, mut bottom) = (0u64, 0u64);
    for n in 1..=counts.len() {
        top += counts[order[n - 1]] as u64;
        let m = metric(n as u64, top)?;
        if m > best.0 || (m == best.0 && n < best.1) {
            best = (m, n, false);
        }
        if scan == MsdScan::BothEnds {
            bottom += counts[order[counts.len() - n]] as u64;
            let m = metric(n as u64, bottom)?;
            if m > best.0 {
                best = (m, n, true);
            }
        }
    }
    let (_, n, from_bottom) = best;
    let chosen = if from_bottom { &order[counts.len() - n..] } else { &order[..n] };
    let mut bits = vec![0u8; counts.len()];
    for &i in chosen {
        bits[i] = 1;
    }
    Ok(bits)
}

type BlockMetric = Box<dyn FnMut(&WindowStats, u64) -> Result<f64> + Send>;

/// Receiver that buffers `L` counts and decodes each block independently.
pub struct MsdReceiver {
    window: usize,
    scan: MsdScan,
    buf: Vec<u32>,
    metric: BlockMetric,
}

impl MsdReceiver {
    /// `metric(stats, L)` receives the on-statistics of a candidate and the
    /// block length.
    pub fn new(window: usize, scan: MsdScan, metric: BlockMetric) -> Self {
        assert!(window >= 1);
        MsdReceiver {
            window,
            scan,
            buf: Vec::with_capacity(window),
            metric,
        }
    }

    fn decode(&mut self, out: &mut Vec<Decision>) {
        let len = self.buf.len() as u64;
        let metric = &mut self.metric;
        let bits = msd_block_decode(&self.buf, self.scan, |n, g| metric(&WindowStats::new(n, g, len - n, 0), len))
            .unwrap_or_else(|_| vec![0; self.buf.len()]);
        out.extend(bits.into_iter().map(Decision::firm));
        self.buf.clear();
    }
}

impl Receiver for MsdReceiver {
    fn push(&mut self, count: u32, out: &mut Vec<Decision>) {
        self.buf.push(count);
        if self.buf.len() == self.window {
            self.decode(out);
        }
    }

    fn flush(&mut self, out: &mut Vec<Decision>) {
        if !self.buf.is_empty() {
            self.decode(out);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::receivers::metrics::gmlsd_log_metric;

    #[test]
    fn reverse_mapping() {
        // metric peaking at N = 2
        let bits = msd_block_decode(&[7, 1, 9], MsdScan::Largest, |n, _| Ok(-((n as f64 - 2.0).powi(2)))).unwrap();
        assert_eq!(bits, vec![1, 0, 1]);
        let zeros = msd_block_decode(&[7, 1, 9], MsdScan::Largest, |n, _| Ok(-(n as f64))).unwrap();
        assert_eq!(zeros, vec![0, 0, 0]);
        let ones = msd_block_decode(&[7, 1, 9], MsdScan::Largest, |n, _| Ok(n as f64)).unwrap();
        assert_eq!(ones, vec![1, 1, 1]);
    }

    #[test]
    fn equal_counts_ranked_by_position() {
        let bits = msd_block_decode(&[4, 4, 4], MsdScan::Largest, |n, _| Ok(if n == 1 { 1.0 } else { 0.0 })).unwrap();
        assert_eq!(bits, vec![1, 0, 0]);
    }

    #[test]
    fn matches_exhaustive_search() {
        let counts = [3u32, 40, 12, 0, 55, 9, 31, 2];
        let nb = 6.0;
        let bits = msd_block_decode(&counts, MsdScan::BothEnds, |n, g| Ok(gmlsd_log_metric(&WindowStats::new(n, g, 0, 0), nb))).unwrap();
        let value = |b: &[u8]| gmlsd_log_metric(&WindowStats::from_sequence(b, &counts), nb);
        let got = value(&bits);
        for mask in 0u32..(1 << counts.len()) {
            let cand: Vec<u8> = (0..counts.len()).map(|i| ((mask >> i) & 1) as u8).collect();
            assert!(value(&cand) <= got + 1e-9);
        }
    }

    #[test]
    fn both_ends_finds_low_count_labeling() {
        // one low count far below the assumed background beats any high set
        let counts = [0u32, 6, 7, 6];
        let f = |n: u64, g: u64| Ok(gmlsd_log_metric(&WindowStats::new(n, g, 0, 0), 6.0));
        assert_eq!(msd_block_decode(&counts, MsdScan::BothEnds, f).unwrap(), vec![1, 0, 0, 0]);
        assert_eq!(msd_block_decode(&counts, MsdScan::Largest, f).unwrap(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn receiver_emits_blocks_and_tail() {
        let metric: BlockMetric = Box::new(|s, _| Ok(gmlsd_log_metric(s, 5.0)));
        let mut rx = MsdReceiver::new(4, MsdScan::BothEnds, metric);
        let mut out = Vec::new();
        for c in [2, 60, 4, 50, 3] {
            rx.push(c, &mut out);
        }
        assert_eq!(out.len(), 4);
        rx.flush(&mut out);
        assert_eq!(out.len(), 5);
        let bits: Vec<u8> = out.iter().map(|d| d.bit).collect();
        assert_eq!(&bits[..4], &[0, 1, 0, 1]);
    }
}
