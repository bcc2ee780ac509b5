//! Greedy CART for binary labels.

use serde::{Deserialize, Serialize};

use crate::{Dataset, Error, Result, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    #[default]
    Gini,
    Entropy,
}

impl Criterion {
    pub fn impurity(self, counts: [usize; 2]) -> f64 {
        let n = (counts[0] + counts[1]) as f64;
        if n == 0.0 {
            return 0.0;
        }
        let p = [counts[0] as f64 / n, counts[1] as f64 / n];
        match self {
            Criterion::Gini => 1.0 - p[0] * p[0] - p[1] * p[1],
            Criterion::Entropy => -p
                .iter()
                .filter(|&&q| q > 0.0)
                .map(|&q| q * q.log2())
                .sum::<f64>(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub criterion: Criterion,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            criterion: Criterion::Gini,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split<F> {
    pub feature: usize,
    pub threshold: F,
    pub left: usize,
    pub right: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node<F> {
    pub impurity: F,
    pub samples: usize,
    /// Benign and attack counts reaching this node.
    pub class_counts: [usize; 2],
    /// `None` for leaves.
    pub split: Option<Split<F>>,
}

impl<F> Node<F> {
    pub fn is_leaf(&self) -> bool {
        self.split.is_none()
    }

    /// Majority label, ties going to benign.
    pub fn label(&self) -> u8 {
        u8::from(self.class_counts[1] > self.class_counts[0])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree<F> {
    /// Pre-order; index 0 is the root.
    pub nodes: Vec<Node<F>>,
    pub params: TreeParams,
    pub seed: u64,
    pub n_features: usize,
}

/// Side of a split literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">")]
    Gt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Literal<F> {
    pub feature: usize,
    pub cmp: Cmp,
    pub threshold: F,
}

/// Root-to-leaf path as a conjunction of threshold tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule<F> {
    pub literals: Vec<Literal<F>>,
    pub label: u8,
    pub support: usize,
    pub class_counts: [usize; 2],
}

impl<F: Scalar> Rule<F> {
    pub fn fires(&self, x: &[F]) -> bool {
        self.literals.iter().all(|l| match l.cmp {
            Cmp::Le => x[l.feature] <= l.threshold,
            Cmp::Gt => x[l.feature] > l.threshold,
        })
    }

    pub fn render(&self, names: &[String]) -> String {
        let body = if self.literals.is_empty() {
            "true".to_string()
        } else {
            self.literals
                .iter()
                .map(|l| {
                    let op = if l.cmp == Cmp::Le { "<=" } else { ">" };
                    format!("{} {op} {}", names[l.feature], l.threshold)
                })
                .collect::<Vec<_>>()
                .join(" AND ")
        };
        format!("IF {body} THEN {} (support {})", self.label, self.support)
    }
}

struct Builder<'a, F> {
    data: &'a Dataset<F>,
    params: &'a TreeParams,
    nodes: Vec<Node<F>>,
}

struct Candidate<F> {
    feature: usize,
    threshold: F,
    decrease: f64,
}

// Decreases closer than this are treated as ties so that the scan order
// (feature index, then threshold) decides.
const TIE_EPS: f64 = 1e-12;

impl<F: Scalar> Builder<'_, F> {
    fn counts(&self, idx: &[usize]) -> [usize; 2] {
        let y = self.data.labels();
        let pos = idx.iter().filter(|&&i| y[i] == 1).count();
        [idx.len() - pos, pos]
    }

    fn best_split(&self, idx: &[usize], counts: [usize; 2], impurity: f64) -> Option<Candidate<F>> {
        let y = self.data.labels();
        let n = idx.len() as f64;
        let mut best: Option<Candidate<F>> = None;
        let mut pairs: Vec<(F, u8)> = Vec::with_capacity(idx.len());
        for feature in 0..self.data.n_features() {
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (self.data.row(i)[feature], y[i])));
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite cells"));
            let mut left = [0usize; 2];
            for k in 0..pairs.len() - 1 {
                left[pairs[k].1 as usize] += 1;
                let (lo, hi) = (pairs[k].0, pairs[k + 1].0);
                if lo == hi {
                    continue;
                }
                let right = [counts[0] - left[0], counts[1] - left[1]];
                let nl = (k + 1) as f64;
                let weighted = (nl * self.params.criterion.impurity(left)
                    + (n - nl) * self.params.criterion.impurity(right))
                    / n;
                let decrease = impurity - weighted;
                if best
                    .as_ref()
                    .is_none_or(|b| decrease > b.decrease + TIE_EPS)
                {
                    let mut threshold = (lo + hi) / (F::one() + F::one());
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(Candidate {
                        feature,
                        threshold,
                        decrease,
                    });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let counts = self.counts(&idx);
        let impurity = self.params.criterion.impurity(counts);
        let id = self.nodes.len();
        self.nodes.push(Node {
            impurity: F::of(impurity),
            samples: idx.len(),
            class_counts: counts,
            split: None,
        });
        let stop = counts[0] == 0
            || counts[1] == 0
            || self.params.max_depth.is_some_and(|d| depth >= d)
            || idx.len() < self.params.min_samples_split.max(2);
        if stop {
            return id;
        }
        let Some(best) = self.best_split(&idx, counts, impurity) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.data.row(i)[best.feature] <= best.threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id].split = Some(Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        });
        id
    }
}

/// Fits a CART tree. Split candidates are midpoints between consecutive
/// distinct values; ties go to the lowest feature index, then the lowest
/// threshold. `seed` is recorded but the procedure itself is deterministic.
pub fn train_dt<F: Scalar>(
    train: &Dataset<F>,
    params: &TreeParams,
    seed: u64,
) -> Result<DecisionTree<F>> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut b = Builder {
        data: train,
        params,
        nodes: Vec::new(),
    };
    b.grow((0..train.n_rows()).collect(), 0);
    Ok(DecisionTree {
        nodes: b.nodes,
        params: params.clone(),
        seed,
        n_features: train.n_features(),
    })
}

impl<F: Scalar> DecisionTree<F> {
    pub fn leaf_for(&self, x: &[F]) -> &Node<F> {
        let mut node = &self.nodes[0];
        while let Some(s) = &node.split {
            node = &self.nodes[if x[s.feature] <= s.threshold {
                s.left
            } else {
                s.right
            }];
        }
        node
    }

    pub fn predict_row(&self, x: &[F]) -> u8 {
        self.leaf_for(x).label()
    }

    /// Attack frequency in the leaf reached by `x`.
    pub fn proba_row(&self, x: &[F]) -> F {
        let leaf = self.leaf_for(x);
        F::of_usize(leaf.class_counts[1]) / F::of_usize(leaf.samples)
    }

    pub fn depth(&self) -> usize {
        fn walk<F>(t: &DecisionTree<F>, id: usize) -> usize {
            match &t.nodes[id].split {
                None => 0,
                Some(s) => 1 + walk(t, s.left).max(walk(t, s.right)),
            }
        }
        walk(self, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    /// Weighted impurity decrease per feature, normalised to sum to one.
    /// A single-leaf tree yields all zeros.
    pub fn feature_importances(&self) -> Vec<f64> {
        let total = self.nodes[0].samples as f64;
        let mut imp = vec![0.0; self.n_features];
        for node in &self.nodes {
            if let Some(s) = &node.split {
                let (l, r) = (&self.nodes[s.left], &self.nodes[s.right]);
                let n = node.samples as f64;
                let decrease = node.impurity.as_f64()
                    - (l.samples as f64 / n) * l.impurity.as_f64()
                    - (r.samples as f64 / n) * r.impurity.as_f64();
                imp[s.feature] += (n / total) * decrease;
            }
        }
        let sum: f64 = imp.iter().sum();
        if sum > 0.0 {
            imp.iter_mut().for_each(|v| *v /= sum);
        }
        imp
    }

    /// One rule per leaf, in left-to-right order.
    pub fn extract_rules(&self) -> Vec<Rule<F>> {
        let mut rules = Vec::with_capacity(self.n_leaves());
        let mut stack = vec![(0usize, Vec::new())];
        while let Some((id, literals)) = stack.pop() {
            let node = &self.nodes[id];
            match &node.split {
                None => rules.push(Rule {
                    literals,
                    label: node.label(),
                    support: node.samples,
                    class_counts: node.class_counts,
                }),
                Some(s) => {
                    let mut right = literals.clone();
                    right.push(Literal {
                        feature: s.feature,
                        cmp: Cmp::Gt,
                        threshold: s.threshold,
                    });
                    let mut left = literals;
                    left.push(Literal {
                        feature: s.feature,
                        cmp: Cmp::Le,
                        threshold: s.threshold,
                    });
                    stack.push((s.right, right));
                    stack.push((s.left, left));
                }
            }
        }
        rules
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ds(rows: &[Vec<f64>], y: &[u8]) -> Dataset<f64> {
        let names = (0..rows[0].len()).map(|j| format!("f{j}")).collect();
        Dataset::from_rows(names, rows, y.to_vec()).unwrap()
    }

    fn or_data() -> Dataset<f64> {
        ds(
            &[vec![0., 0.], vec![0., 1.], vec![1., 0.], vec![1., 1.]],
            &[0, 1, 1, 1],
        )
    }

    #[test]
    fn separable_gives_depth_one() {
        let d = ds(
            &[vec![0., 5.], vec![1., 3.], vec![0., 1.], vec![1., 2.]],
            &[0, 1, 0, 1],
        );
        let t = train_dt(&d, &TreeParams::default(), 0).unwrap();
        assert_eq!(t.depth(), 1);
        assert_eq!(t.nodes[0].split.as_ref().unwrap().feature, 0);
        assert_eq!(t.nodes[0].split.as_ref().unwrap().threshold, 0.5);
        for (row, &label) in d.rows().zip(d.labels()) {
            assert_eq!(t.predict_row(row), label);
        }
        assert_eq!(t.feature_importances(), vec![1.0, 0.0]);
        assert_eq!(t.extract_rules().len(), 2);
    }

    #[test]
    fn or_dataset_hand_computed() {
        // root gini 0.375; either split leaves weighted 0.25 -> decrease 0.125,
        // tie broken towards f0. Left child (gini 0.5, weight 1/2) splits f1
        // into pure leaves: weighted decrease 0.25.
        let t = train_dt(&or_data(), &TreeParams::default(), 0).unwrap();
        let root = t.nodes[0].split.as_ref().unwrap();
        assert_eq!(root.feature, 0);
        let child = t.nodes[root.left].split.as_ref().unwrap();
        assert_eq!(child.feature, 1);
        assert!(t.nodes[root.right].is_leaf());
        let fi = t.feature_importances();
        assert!((fi[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((fi[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn entropy_criterion() {
        assert_eq!(Criterion::Entropy.impurity([2, 2]), 1.0);
        assert_eq!(Criterion::Entropy.impurity([4, 0]), 0.0);
        let params = TreeParams {
            criterion: Criterion::Entropy,
            ..TreeParams::default()
        };
        let d = or_data();
        let t = train_dt(&d, &params, 0).unwrap();
        for (row, &label) in d.rows().zip(d.labels()) {
            assert_eq!(t.predict_row(row), label);
        }
    }

    #[test]
    fn single_class_is_one_leaf() {
        let d = ds(&[vec![0.], vec![1.]], &[1, 1]);
        let t = train_dt(&d, &TreeParams::default(), 0).unwrap();
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.feature_importances(), vec![0.0]);
        assert_eq!(t.extract_rules()[0].literals.len(), 0);
    }

    #[test]
    fn stopping_rules() {
        let d = or_data();
        let t = train_dt(
            &d,
            &TreeParams {
                max_depth: Some(1),
                ..TreeParams::default()
            },
            0,
        )
        .unwrap();
        assert_eq!(t.depth(), 1);
        let t = train_dt(
            &d,
            &TreeParams {
                min_samples_split: 5,
                ..TreeParams::default()
            },
            0,
        )
        .unwrap();
        assert_eq!(t.nodes.len(), 1);
        // identical rows with conflicting labels cannot be split
        let d = ds(&[vec![1.], vec![1.]], &[0, 1]);
        assert_eq!(
            train_dt(&d, &TreeParams::default(), 0).unwrap().nodes.len(),
            1
        );
    }

    #[test]
    fn zero_rows_is_an_error() {
        let d = Dataset::<f64>::new(vec!["a".into()], vec![], vec![]).unwrap();
        assert!(train_dt(&d, &TreeParams::default(), 0).is_err());
    }

    fn xor_like(seed: u64, n: usize) -> Dataset<f64> {
        use rand::Rng;
        let mut rng = crate::rng::rng_from(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let y = rows
            .iter()
            .map(|r| u8::from(r[0] * r[1] > 0.0))
            .collect::<Vec<_>>();
        ds(&rows, &y)
    }

    #[test]
    fn structural_invariants() {
        let d = xor_like(1, 300);
        let t = train_dt(
            &d,
            &TreeParams {
                max_depth: Some(5),
                ..TreeParams::default()
            },
            0,
        )
        .unwrap();
        for node in &t.nodes {
            assert_eq!(node.class_counts[0] + node.class_counts[1], node.samples);
            if let Some(s) = &node.split {
                assert_eq!(
                    t.nodes[s.left].samples + t.nodes[s.right].samples,
                    node.samples
                );
            }
        }
        let rules = t.extract_rules();
        assert!(rules.len() <= 1 << 5);
        assert!(rules.iter().all(|r| r.literals.len() <= 5));
        assert_eq!(rules.iter().map(|r| r.support).sum::<usize>(), d.n_rows());
        for row in d.rows() {
            let firing: Vec<_> = rules.iter().filter(|r| r.fires(row)).collect();
            assert_eq!(firing.len(), 1);
            assert_eq!(firing[0].label, t.predict_row(row));
        }
        assert_eq!(
            t,
            train_dt(
                &d,
                &TreeParams {
                    max_depth: Some(5),
                    ..TreeParams::default()
                },
                0
            )
            .unwrap()
        );
    }

    #[test]
    fn memorises_training_set() {
        let d = xor_like(2, 200);
        let t = train_dt(&d, &TreeParams::default(), 0).unwrap();
        for (row, &label) in d.rows().zip(d.labels()) {
            assert_eq!(t.predict_row(row), label);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn importances_sum_to_one(seed in any::<u64>()) {
            let t = train_dt(&xor_like(seed, 120), &TreeParams::default(), 0).unwrap();
            let fi = t.feature_importances();
            prop_assert!(fi.iter().all(|&v| v >= 0.0));
            if t.nodes.len() > 1 {
                prop_assert!((fi.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            }
        }

        #[test]
        fn monotone_transform_invariance(seed in any::<u64>(), feature in 0usize..3) {
            let d = xor_like(seed, 150);
            let warped = d.map_values(|j, v| if j == feature { v.powi(3) + v.exp() } else { v });
            let a = train_dt(&d, &TreeParams::default(), 0).unwrap();
            let b = train_dt(&warped, &TreeParams::default(), 0).unwrap();
            prop_assert_eq!(a.nodes.len(), b.nodes.len());
            for (r1, r2) in d.rows().zip(warped.rows()) {
                prop_assert_eq!(a.predict_row(r1), b.predict_row(r2));
            }
        }

        #[test]
        fn rules_match_predict_on_fuzzed_inputs(seed in any::<u64>()) {
            use rand::Rng;
            let t = train_dt(&xor_like(seed, 100), &TreeParams::default(), 0).unwrap();
            let rules = t.extract_rules();
            let mut rng = crate::rng::rng_from(seed ^ 0xabc);
            for _ in 0..1000 {
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.5..1.5)).collect();
                let firing: Vec<_> = rules.iter().filter(|r| r.fires(&x)).collect();
                prop_assert_eq!(firing.len(), 1);
                prop_assert_eq!(firing[0].label, t.predict_row(&x));
            }
        }
    }
}
