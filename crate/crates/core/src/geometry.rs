//! Exact fixed-radius neighbor counting, split by class.
//!
//! The index is a kd-tree whose nodes carry per-class point counts, so a
//! subtree lying entirely inside the query ball is counted without visiting
//! its points. Results are bit-for-bit the ones [`brute_force_counts`] gives:
//! both paths compare `sq_dist(center, x) <= radius * radius` with the same
//! summation order, and the box bounds used for pruning are monotone in
//! floating point (a box bound never crosses a point distance).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::data::{ClassPartition, Points};

const LEAF_SIZE: usize = 16;
const NO_CHILD: u32 = u32::MAX;

/// Squared Euclidean distance, summed in coordinate order.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let t = x - y;
        s += t * t;
    }
    s
}

#[derive(Debug, Clone)]
struct Node {
    start: u32,
    end: u32,
    left: u32,
    right: u32,
}

/// Read-only spatial index over every point of a partition.
#[derive(Debug, Clone)]
pub struct SpatialIndex {
    dim: usize,
    n_classes: usize,
    /// Points in tree order, row-major.
    coords: Vec<f64>,
    classes: Vec<u32>,
    /// Position of each point within its own class in the partition.
    member: Vec<u32>,
    nodes: Vec<Node>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    /// `node * n_classes + class`.
    node_counts: Vec<u32>,
    class_totals: Vec<usize>,
}

impl SpatialIndex {
    pub fn build(part: &ClassPartition) -> Self {
        let dim = part.dim();
        let n_classes = part.n_classes();
        let mut coords = Vec::with_capacity(part.total() * dim);
        let mut classes = Vec::with_capacity(part.total());
        let mut member = Vec::with_capacity(part.total());
        for (c, pts) in part.classes().iter().enumerate() {
            coords.extend_from_slice(pts.as_slice());
            classes.extend(std::iter::repeat_n(c as u32, pts.len()));
            member.extend(0..pts.len() as u32);
        }
        let mut order: Vec<u32> = (0..classes.len() as u32).collect();
        let mut idx = Self {
            dim,
            n_classes,
            coords: Vec::new(),
            classes: Vec::new(),
            member: Vec::new(),
            nodes: Vec::new(),
            lo: Vec::new(),
            hi: Vec::new(),
            node_counts: Vec::new(),
            class_totals: part.counts(),
        };
        idx.build_node(&coords, &mut order, 0);
        idx.coords = order
            .iter()
            .flat_map(|&i| coords[i as usize * dim..(i as usize + 1) * dim].iter().copied())
            .collect();
        idx.classes = order.iter().map(|&i| classes[i as usize]).collect();
        idx.member = order.iter().map(|&i| member[i as usize]).collect();
        idx.fill_counts();
        idx
    }

    fn build_node(&mut self, coords: &[f64], order: &mut [u32], offset: usize) -> u32 {
        let d = self.dim;
        let id = self.nodes.len();
        self.nodes.push(Node {
            start: offset as u32,
            end: (offset + order.len()) as u32,
            left: NO_CHILD,
            right: NO_CHILD,
        });
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for &i in order.iter() {
            let p = &coords[i as usize * d..(i as usize + 1) * d];
            for j in 0..d {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
        let split_dim = (0..d)
            .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
            .unwrap_or(0);
        let spread = hi[split_dim] - lo[split_dim];
        self.lo.extend_from_slice(&lo);
        self.hi.extend_from_slice(&hi);

        if order.len() > LEAF_SIZE && spread > 0.0 {
            let mid = order.len() / 2;
            order.select_nth_unstable_by(mid, |&a, &b| {
                coords[a as usize * d + split_dim].total_cmp(&coords[b as usize * d + split_dim])
            });
            let (left, right) = order.split_at_mut(mid);
            let l = self.build_node(coords, left, offset);
            let r = self.build_node(coords, right, offset + mid);
            self.nodes[id].left = l;
            self.nodes[id].right = r;
        }
        id as u32
    }

    fn fill_counts(&mut self) {
        let k = self.n_classes;
        self.node_counts = vec![0; self.nodes.len() * k];
        for (id, node) in self.nodes.iter().enumerate() {
            for &c in &self.classes[node.start as usize..node.end as usize] {
                self.node_counts[id * k + c as usize] += 1;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn class_totals(&self) -> &[usize] {
        &self.class_totals
    }

    #[inline]
    fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    #[inline]
    fn box_min_sq(&self, node: usize, c: &[f64]) -> f64 {
        let lo = &self.lo[node * self.dim..(node + 1) * self.dim];
        let hi = &self.hi[node * self.dim..(node + 1) * self.dim];
        let mut s = 0.0;
        for j in 0..self.dim {
            let t = if c[j] < lo[j] {
                lo[j] - c[j]
            } else if c[j] > hi[j] {
                c[j] - hi[j]
            } else {
                0.0
            };
            s += t * t;
        }
        s
    }

    #[inline]
    fn box_max_sq(&self, node: usize, c: &[f64]) -> f64 {
        let lo = &self.lo[node * self.dim..(node + 1) * self.dim];
        let hi = &self.hi[node * self.dim..(node + 1) * self.dim];
        let mut s = 0.0;
        for j in 0..self.dim {
            let t = (c[j] - lo[j]).abs().max((hi[j] - c[j]).abs());
            s += t * t;
        }
        s
    }

    /// Per-class counts of indexed points within `radius` of `center`,
    /// boundary included.
    pub fn count_within(&self, center: &[f64], radius: f64) -> Vec<usize> {
        let mut out = vec![0; self.n_classes];
        self.count_within_into(center, radius, &mut out);
        out
    }

    /// [`count_within`](Self::count_within) writing into a caller buffer of
    /// length `n_classes`. The buffer is overwritten.
    pub fn count_within_into(&self, center: &[f64], radius: f64, out: &mut [usize]) {
        debug_assert_eq!(center.len(), self.dim);
        debug_assert_eq!(out.len(), self.n_classes);
        out.iter_mut().for_each(|x| *x = 0);
        if self.nodes.is_empty() || radius < 0.0 {
            return;
        }
        let r2 = radius * radius;
        let k = self.n_classes;
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let id = id as usize;
            if self.box_min_sq(id, center) > r2 {
                continue;
            }
            if self.box_max_sq(id, center) <= r2 {
                for (o, &n) in out.iter_mut().zip(&self.node_counts[id * k..(id + 1) * k]) {
                    *o += n as usize;
                }
                continue;
            }
            let node = &self.nodes[id];
            if node.left == NO_CHILD {
                for i in node.start as usize..node.end as usize {
                    if sq_dist(center, self.point(i)) <= r2 {
                        out[self.classes[i] as usize] += 1;
                    }
                }
            } else {
                stack.push(node.right);
                stack.push(node.left);
            }
        }
    }

    /// Counts at several radii in one traversal. `radii` must be ascending;
    /// `out` has length `radii.len() * n_classes` and receives the counts
    /// for radius `l` at `out[l * n_classes..]`. Each entry equals
    /// [`count_within`](Self::count_within) at that radius.
    pub fn count_within_radii(&self, center: &[f64], radii: &[f64], out: &mut [usize]) {
        let k = self.n_classes;
        debug_assert_eq!(out.len(), radii.len() * k);
        debug_assert!(radii.windows(2).all(|w| w[0] <= w[1]));
        out.iter_mut().for_each(|x| *x = 0);
        if self.nodes.is_empty() || radii.is_empty() {
            return;
        }
        let r2: Vec<f64> = radii
            .iter()
            .map(|&r| if r < 0.0 { f64::NEG_INFINITY } else { r * r })
            .collect();
        let m = r2.len();
        // Radii in lo..hi are undecided for the node; radii at or above hi
        // were already counted in full by an ancestor.
        let mut stack = vec![(0u32, 0usize, m)];
        while let Some((id, mut lo, mut hi)) = stack.pop() {
            let id = id as usize;
            let bmin = self.box_min_sq(id, center);
            while lo < hi && bmin > r2[lo] {
                lo += 1;
            }
            if lo == hi {
                continue;
            }
            let bmax = self.box_max_sq(id, center);
            let counts = &self.node_counts[id * k..(id + 1) * k];
            let top = hi;
            while hi > lo && bmax <= r2[hi - 1] {
                hi -= 1;
            }
            for l in hi..top {
                for c in 0..k {
                    out[l * k + c] += counts[c] as usize;
                }
            }
            if lo == hi {
                continue;
            }
            let node = &self.nodes[id];
            if node.left == NO_CHILD {
                for i in node.start as usize..node.end as usize {
                    let s = sq_dist(center, self.point(i));
                    let c = self.classes[i] as usize;
                    for l in lo..hi {
                        if s <= r2[l] {
                            out[l * k + c] += 1;
                        }
                    }
                }
            } else {
                stack.push((node.right, lo, hi));
                stack.push((node.left, lo, hi));
            }
        }
    }

    /// Distance from `center` to its `k`-th nearest point of class `class`
    /// (`k >= 1`). An indexed point at `center` counts as its own first
    /// neighbor. Returns `None` when the class has fewer than `k` points.
    pub fn kth_neighbor_distance(&self, center: &[f64], k: usize, class: usize) -> Option<f64> {
        if k == 0 || k > self.class_totals[class] {
            return None;
        }
        let nk = self.n_classes;
        // max-heap of the k best squared distances seen so far
        let mut best: BinaryHeap<OrdF64> = BinaryHeap::with_capacity(k + 1);
        let mut stack = vec![(0u32, self.box_min_sq(0, center))];
        while let Some((id, bound)) = stack.pop() {
            let id = id as usize;
            if best.len() == k && bound > best.peek().unwrap().0 {
                continue;
            }
            if self.node_counts[id * nk + class] == 0 {
                continue;
            }
            let node = &self.nodes[id];
            if node.left == NO_CHILD {
                for i in node.start as usize..node.end as usize {
                    if self.classes[i] as usize != class {
                        continue;
                    }
                    let s = sq_dist(center, self.point(i));
                    if best.len() < k {
                        best.push(OrdF64(s));
                    } else if s < best.peek().unwrap().0 {
                        best.pop();
                        best.push(OrdF64(s));
                    }
                }
            } else {
                let (l, r) = (node.left, node.right);
                let (bl, br) = (
                    self.box_min_sq(l as usize, center),
                    self.box_min_sq(r as usize, center),
                );
                // nearer child popped first
                if bl <= br {
                    stack.push((r, br));
                    stack.push((l, bl));
                } else {
                    stack.push((l, bl));
                    stack.push((r, br));
                }
            }
        }
        best.peek().map(|s| s.0.sqrt())
    }

    /// Position within its own class (partition order) of the point stored
    /// at tree slot `i`. Exposed for diagnostics.
    pub fn member_of(&self, i: usize) -> (usize, usize) {
        (self.classes[i] as usize, self.member[i] as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

pub fn build_index(part: &ClassPartition) -> SpatialIndex {
    SpatialIndex::build(part)
}

/// Direct O(N·d) scan with the same contract as
/// [`SpatialIndex::count_within`].
pub fn brute_force_counts(
    points: &Points,
    labels: &[usize],
    n_classes: usize,
    center: &[f64],
    radius: f64,
) -> Vec<usize> {
    let mut out = vec![0; n_classes];
    if radius < 0.0 {
        return out;
    }
    let r2 = radius * radius;
    for (p, &l) in points.rows().zip(labels) {
        if sq_dist(center, p) <= r2 {
            out[l] += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{partition_by_class, LabeledDataset};
    use proptest::prelude::*;

    fn part_1d(values: &[f64], labels: &[usize], k: usize) -> (LabeledDataset, ClassPartition) {
        let rows: Vec<[f64; 1]> = values.iter().map(|&v| [v]).collect();
        let ds = LabeledDataset::new(Points::from_rows(&rows).unwrap(), labels.to_vec(), k).unwrap();
        let part = partition_by_class(&ds);
        (ds, part)
    }

    #[test]
    fn inclusive_boundary() {
        let (_, part) = part_1d(&[0.0, 1.0, 2.0], &[0, 0, 0], 1);
        let idx = build_index(&part);
        assert_eq!(idx.len(), 3);
        assert_eq!(idx.count_within(&[1.0], 1.0), vec![3]);
    }

    #[test]
    fn self_inclusion_at_zero_radius() {
        let (_, part) = part_1d(&[0.0, 1.0, 2.0], &[0, 1, 0], 2);
        let idx = build_index(&part);
        assert_eq!(idx.count_within(&[1.0], 0.0), vec![0, 1]);
    }

    #[test]
    fn duplicates_counted_twice() {
        let (_, part) = part_1d(&[0.5, 0.5, 3.0], &[0, 0, 1], 2);
        let idx = build_index(&part);
        assert_eq!(idx.count_within(&[0.5], 0.0), vec![2, 0]);
    }

    #[test]
    fn huge_radius_and_far_center() {
        let (_, part) = part_1d(&[0.0, 1.0, 2.0, 7.0], &[0, 1, 0, 1], 2);
        let idx = build_index(&part);
        assert_eq!(idx.count_within(&[1.0], 1e9), vec![2, 2]);
        assert_eq!(idx.count_within(&[1e6], 1.0), vec![0, 0]);
    }

    #[test]
    fn high_dimension_supported() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| (0..100).map(|j| ((i * 31 + j * 7) % 13) as f64).collect())
            .collect();
        let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let ds = LabeledDataset::new(Points::from_rows(&rows).unwrap(), labels.clone(), 2).unwrap();
        let idx = build_index(&partition_by_class(&ds));
        for r in [0.0, 10.0, 40.0, 80.0] {
            assert_eq!(
                idx.count_within(&rows[3], r),
                brute_force_counts(ds.points(), &labels, 2, &rows[3], r)
            );
        }
    }

    #[test]
    fn kth_neighbor() {
        let (_, part) = part_1d(&[0.0, 1.0, 3.0, 0.2, 10.0], &[0, 0, 0, 1, 1], 2);
        let idx = build_index(&part);
        assert_eq!(idx.kth_neighbor_distance(&[0.0], 1, 0), Some(0.0));
        assert_eq!(idx.kth_neighbor_distance(&[0.0], 2, 0), Some(1.0));
        assert_eq!(idx.kth_neighbor_distance(&[0.0], 3, 0), Some(3.0));
        assert_eq!(idx.kth_neighbor_distance(&[0.0], 4, 0), None);
        assert_eq!(idx.kth_neighbor_distance(&[0.0], 2, 1), Some(10.0));
    }

    fn dataset(
        n: usize,
        d: usize,
        k: usize,
    ) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>, Vec<f64>, f64)> {
        (
            prop::collection::vec(prop::collection::vec(-3.0..3.0f64, d), n),
            prop::collection::vec(0..k, n),
            prop::collection::vec(-3.5..3.5f64, d),
            0.0..4.0f64,
        )
    }

    proptest! {
        #[test]
        fn matches_brute_force(
            (rows, mut labels, center, radius) in (1usize..120, 1usize..6, 1usize..4)
                .prop_flat_map(|(n, d, k)| dataset(n, d, k))
        ) {
            // make every class present
            let k = (labels.iter().max().unwrap() + 1).min(rows.len());
            for l in labels.iter_mut() { *l %= k; }
            for (i, l) in labels.iter_mut().enumerate().take(k) { *l = i; }
            let ds = LabeledDataset::new(Points::from_rows(&rows).unwrap(), labels.clone(), k).unwrap();
            let idx = build_index(&partition_by_class(&ds));
            let expect = brute_force_counts(ds.points(), &labels, k, &center, radius);
            prop_assert_eq!(idx.count_within(&center, radius), expect);
            // querying at an indexed point includes itself
            let own = idx.count_within(&rows[0], radius * 0.5);
            prop_assert!(own[labels[0]] >= 1);
        }

        #[test]
        fn multi_radius_matches_single(
            (rows, labels, center, _r) in dataset(150, 4, 3),
            mut radii in prop::collection::vec(0.0..5.0f64, 1..8)
        ) {
            let mut labels = labels;
            labels[0] = 0; labels[1] = 1; labels[2] = 2;
            radii.sort_by(f64::total_cmp);
            let ds = LabeledDataset::new(Points::from_rows(&rows).unwrap(), labels, 3).unwrap();
            let idx = build_index(&partition_by_class(&ds));
            let mut out = vec![0; radii.len() * 3];
            idx.count_within_radii(&center, &radii, &mut out);
            for (l, &r) in radii.iter().enumerate() {
                prop_assert_eq!(&out[l * 3..(l + 1) * 3], &idx.count_within(&center, r)[..]);
            }
            idx.count_within_radii(&rows[5], &radii, &mut out);
            for (l, &r) in radii.iter().enumerate() {
                prop_assert_eq!(&out[l * 3..(l + 1) * 3], &idx.count_within(&rows[5], r)[..]);
            }
        }

        #[test]
        fn monotone_in_radius(
            (rows, _labels, center, r1) in dataset(60, 3, 1), extra in 0.0..2.0f64
        ) {
            let ds = LabeledDataset::new(Points::from_rows(&rows).unwrap(), vec![0; 60], 1).unwrap();
            let idx = build_index(&partition_by_class(&ds));
            let a = idx.count_within(&center, r1);
            let b = idx.count_within(&center, r1 + extra);
            prop_assert!(a[0] <= b[0]);
        }
    }
}
