//! Deterministic, mergeable weighted quantile summary.
//!
//! Below [`EXACT_LIMIT`] distinct values the summary is exact. Beyond that it
//! is compacted into [`SUMMARY_SIZE`] equal-weight representatives, each taken
//! at the midpoint rank of its bucket. Compaction is deferred until the
//! pending buffer is as heavy as the summary (capped at [`PENDING_CAP`]), so
//! the compaction error stays near `1 / SUMMARY_SIZE` of the total weight.

use std::cmp::Ordering;

pub const EXACT_LIMIT: usize = 10_000;
pub const SUMMARY_SIZE: usize = 4096;
pub const PENDING_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuantileSketch {
    /// Sorted by value, unique values, positive weights.
    items: Vec<(f64, f64)>,
    pending: Vec<f64>,
    total: f64,
    compacted: bool,
}

impl QuantileSketch {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a sketch from serialized `(value, weight)` items.
    pub fn from_items(mut items: Vec<(f64, f64)>, compacted: bool) -> Self {
        items.sort_by(|a, b| a.0.total_cmp(&b.0));
        let items = coalesce(items);
        let total = items.iter().map(|(_, w)| w).sum();
        QuantileSketch { items, pending: Vec::new(), total, compacted }
    }

    pub fn insert(&mut self, value: f64) {
        self.pending.push(value);
        self.total += 1.0;
        let threshold = EXACT_LIMIT.max((self.total - self.pending.len() as f64) as usize).min(PENDING_CAP);
        if self.pending.len() >= threshold {
            self.flush();
        }
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    /// Whether the summary has lost exactness.
    pub fn is_compacted(&self) -> bool {
        self.compacted
    }

    /// Sorted `(value, weight)` items; pending values are folded in first.
    pub fn items(&mut self) -> &[(f64, f64)] {
        self.flush();
        &self.items
    }

    /// Folds pending values into the sorted summary, compacting if too large.
    pub fn flush(&mut self) {
        if !self.pending.is_empty() {
            let mut pending = std::mem::take(&mut self.pending);
            pending.sort_by(f64::total_cmp);
            let incoming: Vec<(f64, f64)> = pending.into_iter().map(|v| (v, 1.0)).collect();
            self.items = merge_sorted(std::mem::take(&mut self.items), incoming);
        }
        if self.items.len() > EXACT_LIMIT {
            self.items = compact(&self.items, self.total, SUMMARY_SIZE);
            self.compacted = true;
        }
    }

    /// Folds another sketch in with unit scaling (shard combination).
    pub fn absorb(&mut self, mut other: QuantileSketch) {
        other.flush();
        self.flush();
        self.items = merge_sorted(std::mem::take(&mut self.items), other.items);
        self.total += other.total;
        self.compacted |= other.compacted;
        self.flush();
    }

    /// Weighted union: component `i` contributes total weight `weights[i]`.
    pub fn merge_weighted(parts: &[(&QuantileSketch, f64)]) -> QuantileSketch {
        let mut out = QuantileSketch::new();
        for (sketch, weight) in parts {
            if *weight <= 0.0 || sketch.total <= 0.0 {
                continue;
            }
            let mut s = (*sketch).clone();
            s.flush();
            let scale = weight / s.total;
            let scaled = s.items.iter().map(|(v, w)| (*v, w * scale)).collect();
            out.items = merge_sorted(std::mem::take(&mut out.items), scaled);
            out.total += weight;
            out.compacted |= s.compacted;
        }
        out.flush();
        out
    }

    /// Smallest value whose cumulative weight reaches `p` of the total.
    pub fn quantile(&mut self, p: f64) -> Option<f64> {
        self.flush();
        let target = p.clamp(0.0, 1.0) * self.total * (1.0 - 1e-12);
        let mut cum = 0.0;
        for (v, w) in &self.items {
            cum += w;
            if cum >= target {
                return Some(*v);
            }
        }
        self.items.last().map(|(v, _)| *v)
    }
}

fn merge_sorted(a: Vec<(f64, f64)>, b: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i].0.total_cmp(&b[j].0) != Ordering::Greater {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    coalesce(out)
}

fn coalesce(sorted: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(sorted.len());
    for (v, w) in sorted {
        match out.last_mut() {
            Some(last) if last.0.to_bits() == v.to_bits() => last.1 += w,
            _ => out.push((v, w)),
        }
    }
    out
}

fn compact(items: &[(f64, f64)], total: f64, size: usize) -> Vec<(f64, f64)> {
    let bucket = total / size as f64;
    let mut out = Vec::with_capacity(size);
    let mut cum = 0.0;
    let mut idx = 0;
    for j in 0..size {
        let mid = (j as f64 + 0.5) * bucket;
        while idx + 1 < items.len() && cum + items[idx].1 < mid {
            cum += items[idx].1;
            idx += 1;
        }
        out.push((items[idx].0, bucket));
    }
    coalesce(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn oracle(sorted: &[f64], p: f64) -> f64 {
        let rank = (p * sorted.len() as f64 - 1e-9).ceil().max(1.0) as usize;
        sorted[rank - 1]
    }

    #[test]
    fn exact_below_limit() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let values: Vec<f64> = (0..5000).map(|_| rng.random::<f64>()).collect();
        let mut s = QuantileSketch::new();
        values.iter().for_each(|v| s.insert(*v));
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        for p in [0.0, 0.01, 0.25, 0.5, 0.99, 1.0] {
            assert_eq!(s.quantile(p).unwrap(), oracle(&sorted, p), "p={p}");
        }
        assert!(!s.is_compacted());
    }

    fn rank_fraction(sorted: &[f64], v: f64) -> f64 {
        sorted.partition_point(|x| *x <= v) as f64 / sorted.len() as f64
    }

    #[test]
    fn rank_error_bounded_after_compaction() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let values: Vec<f64> = (0..400_000).map(|_| rng.random::<f64>().powi(3)).collect();
        let mut s = QuantileSketch::new();
        values.iter().for_each(|v| s.insert(*v));
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        assert!(s.is_compacted());
        for p in [0.01, 0.5, 0.99] {
            let q = s.quantile(p).unwrap();
            assert!((rank_fraction(&sorted, q) - p).abs() < 1e-3, "p={p}");
        }
    }

    #[test]
    fn weighted_merge_of_disjoint_ranges() {
        let mut a = QuantileSketch::new();
        let mut b = QuantileSketch::new();
        for i in 0..1000 {
            a.insert(i as f64);
            b.insert(1000.0 + i as f64);
        }
        let mut m = QuantileSketch::merge_weighted(&[(&a, 0.9), (&b, 0.1)]);
        assert!((m.total_weight() - 1.0).abs() < 1e-12);
        // 95% of mass lies below the median of b.
        assert_eq!(m.quantile(0.95).unwrap(), 1499.0);
        assert_eq!(m.quantile(0.01).unwrap(), 11.0);
    }

    #[test]
    fn absorb_equals_single_stream_when_exact() {
        let mut whole = QuantileSketch::new();
        let mut left = QuantileSketch::new();
        let mut right = QuantileSketch::new();
        for i in 0..3000 {
            let v = ((i * 7919) % 3001) as f64;
            whole.insert(v);
            if i % 3 == 0 {
                left.insert(v)
            } else {
                right.insert(v)
            }
        }
        left.absorb(right);
        assert_eq!(left.items(), whole.items());
    }

    #[test]
    fn constant_values_coalesce() {
        let mut s = QuantileSketch::new();
        (0..50_000).for_each(|_| s.insert(0.0));
        assert_eq!(s.items(), &[(0.0, 50_000.0)]);
        assert!(!s.is_compacted());
    }
}
