use rand::seq::index::sample;
use rand::Rng;

use super::N_FEATURES;

/// Tree node in flat pre-order layout. The left child of a split always
/// follows it directly; `right` is the index of the right child.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Split { feature: u8, threshold: f64, right: u32 },
    Leaf { value: f64, count: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    /// Samples with `x[feature] <= threshold` go left.
    pub fn predict(&self, x: &[f64; N_FEATURES]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value, .. } => return value,
                Node::Split { feature, threshold, right } => {
                    i = if x[feature as usize] <= threshold { i + 1 } else { right as usize };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> (usize, usize) {
            match nodes[i] {
                Node::Leaf { .. } => (0, i + 1),
                Node::Split { right, .. } => {
                    let (dl, _) = walk(nodes, i + 1);
                    let (dr, end) = walk(nodes, right as usize);
                    (1 + dl.max(dr), end)
                }
            }
        }
        walk(&self.nodes, 0).0
    }

    pub fn leaves(&self) -> impl Iterator<Item = (f64, u32)> + '_ {
        self.nodes.iter().filter_map(|n| match *n {
            Node::Leaf { value, count } => Some((value, count)),
            Node::Split { .. } => None,
        })
    }
}

pub(crate) struct TreeParams<'a> {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub mtry: usize,
    pub features: &'a [usize],
}

/// Grows one CART tree on the rows listed in `rows` (repeats allowed).
/// Variance reduction per feature is added to `gains`.
pub(crate) fn grow<R: Rng>(
    x: &[[f64; N_FEATURES]],
    y: &[f64],
    rows: Vec<usize>,
    params: &TreeParams,
    rng: &mut R,
    gains: &mut [f64; N_FEATURES],
) -> Tree {
    let mut nodes = Vec::new();
    let mut builder = Builder { x, y, params, rng, gains, nodes: &mut nodes, pairs: Vec::new() };
    builder.node(rows, 0);
    Tree { nodes }
}

struct Builder<'a, 'b, R> {
    x: &'a [[f64; N_FEATURES]],
    y: &'a [f64],
    params: &'a TreeParams<'b>,
    rng: &'a mut R,
    gains: &'a mut [f64; N_FEATURES],
    nodes: &'a mut Vec<Node>,
    pairs: Vec<(f64, f64)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl<R: Rng> Builder<'_, '_, R> {
    fn node(&mut self, rows: Vec<usize>, depth: usize) {
        let n = rows.len();
        let sum: f64 = rows.iter().map(|&r| self.y[r]).sum();
        let leaf = Node::Leaf { value: sum / n as f64, count: n as u32 };
        if depth >= self.params.max_depth || n < 2 * self.params.min_samples_leaf {
            self.nodes.push(leaf);
            return;
        }
        let Some(best) = self.best_split(&rows, sum) else {
            self.nodes.push(leaf);
            return;
        };
        self.gains[best.feature] += best.gain;
        let (left, right): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| self.x[r][best.feature] <= best.threshold);

        let at = self.nodes.len();
        self.nodes.push(Node::Split { feature: best.feature as u8, threshold: best.threshold, right: 0 });
        self.node(left, depth + 1);
        let right_at = self.nodes.len() as u32;
        if let Node::Split { right: r, .. } = &mut self.nodes[at] {
            *r = right_at;
        }
        self.node(right, depth + 1);
    }

    fn best_split(&mut self, rows: &[usize], sum: f64) -> Option<BestSplit> {
        let n = rows.len();
        let min_leaf = self.params.min_samples_leaf;
        let feats = self.params.features;
        let mut tried: Vec<usize> = sample(self.rng, feats.len(), self.params.mtry.min(feats.len()))
            .into_iter()
            .map(|i| feats[i])
            .collect();
        tried.sort_unstable();

        let parent = sum * sum / n as f64;
        // gains below this are rounding noise of the sums, not structure
        let min_gain = 1e-12 * parent.abs();
        let mut best: Option<BestSplit> = None;
        for f in tried {
            self.pairs.clear();
            self.pairs.extend(rows.iter().map(|&r| (self.x[r][f], self.y[r])));
            self.pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_sum = 0.0;
            for i in 0..n - 1 {
                left_sum += self.pairs[i].1;
                let (a, b) = (self.pairs[i].0, self.pairs[i + 1].0);
                let n_left = i + 1;
                if a == b || n_left < min_leaf || n - n_left < min_leaf {
                    continue;
                }
                let right_sum = sum - left_sum;
                let gain = left_sum * left_sum / n_left as f64
                    + right_sum * right_sum / (n - n_left) as f64
                    - parent;
                if gain > best.as_ref().map_or(min_gain, |s| s.gain) {
                    best = Some(BestSplit { feature: f, threshold: midpoint(a, b), gain });
                }
            }
        }
        best
    }
}

/// Midpoint of `a < b` that still satisfies `a <= m < b` in floating point.
fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    if m < b {
        m
    } else {
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grow_all(x: &[[f64; 4]], y: &[f64], max_depth: usize, min_leaf: usize) -> (Tree, [f64; 4]) {
        let features = [0, 1, 2, 3];
        let params = TreeParams { max_depth, min_samples_leaf: min_leaf, mtry: 4, features: &features };
        let mut gains = [0.0; 4];
        let tree = grow(x, y, (0..y.len()).collect(), &params, &mut ChaCha8Rng::seed_from_u64(1), &mut gains);
        (tree, gains)
    }

    #[test]
    fn single_split_is_found() {
        let x: Vec<[f64; 4]> = (0..8).map(|i| [i as f64, 0.0, 0.0, 0.0]).collect();
        let y = [1.0, 1.0, 1.0, 1.0, 5.0, 5.0, 5.0, 5.0];
        let (tree, gains) = grow_all(&x, &y, 5, 1);
        assert_eq!(tree.nodes[0], Node::Split { feature: 0, threshold: 3.5, right: 2 });
        assert_eq!(tree.depth(), 1);
        assert_eq!(tree.predict(&[3.5, 0.0, 0.0, 0.0]), 1.0);
        assert_eq!(tree.predict(&[3.6, 0.0, 0.0, 0.0]), 5.0);
        // parent SSE 32, children 0
        assert!((gains[0] - 32.0).abs() < 1e-9);
    }

    #[test]
    fn ties_prefer_lowest_feature() {
        let x: Vec<[f64; 4]> = (0..6).map(|i| [i as f64; 4]).collect();
        let y = [1.0, 1.0, 1.0, 2.0, 2.0, 2.0];
        let (tree, _) = grow_all(&x, &y, 5, 1);
        assert!(matches!(tree.nodes[0], Node::Split { feature: 0, .. }));
    }

    #[test]
    fn depth_and_leaf_size_limits() {
        let x: Vec<[f64; 4]> = (0..64).map(|i| [i as f64, (i * 7 % 13) as f64, 0.0, 0.0]).collect();
        let y: Vec<f64> = (0..64).map(|i| ((i * 37) % 64) as f64).collect();
        for (depth, leaf) in [(1, 1), (3, 5), (15, 2)] {
            let (tree, _) = grow_all(&x, &y, depth, leaf);
            assert!(tree.depth() <= depth);
            assert!(tree.leaves().all(|(_, c)| c as usize >= leaf));
            assert_eq!(tree.leaves().map(|(_, c)| c as usize).sum::<usize>(), 64);
        }
    }

    #[test]
    fn midpoint_of_adjacent_floats() {
        let a = 1.0f64;
        let b = f64::from_bits(a.to_bits() + 1);
        let m = midpoint(a, b);
        assert!(a <= m && m < b);
        assert_eq!(midpoint(2.0, 4.0), 3.0);
    }
}
