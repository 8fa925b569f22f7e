//! Additive classifiers `H(x) = sgn(sum_t w_t h_t(x) - b)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary decision tree; a split sends `x` left iff `x[feature] <= threshold`.
#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        label: f64,
    },
}

impl TreeNode {
    pub fn leaf(label: f64) -> Self {
        TreeNode::Leaf { label }
    }

    pub fn split(feature: usize, threshold: f64, left: TreeNode, right: TreeNode) -> Self {
        TreeNode::Split {
            feature,
            threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { label } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }
}

/// Axis-aligned box `prod_d (lower_d, upper_d]`, with infinite ends for
/// unconstrained sides.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafRegion {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub label: f64,
}

impl LeafRegion {
    #[inline]
    pub fn contains_coord(&self, d: usize, v: f64) -> bool {
        self.lower[d] < v && v <= self.upper[d]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(d, &v)| self.contains_coord(d, v))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    root: TreeNode,
    regions: Vec<LeafRegion>,
}

impl DecisionTree {
    /// Validates feature indices and leaf labels and precomputes leaf boxes.
    pub fn new(root: TreeNode, n_features: usize) -> Result<Self> {
        fn check(node: &TreeNode, d: usize) -> Result<()> {
            match node {
                TreeNode::Leaf { label } => {
                    if *label != 1.0 && *label != -1.0 {
                        return Err(Error::InvalidModel(format!("leaf label {label} is not +1 or -1")));
                    }
                    Ok(())
                }
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    if *feature >= d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            got: feature + 1,
                        });
                    }
                    if !threshold.is_finite() {
                        return Err(Error::InvalidModel("non-finite split threshold".into()));
                    }
                    check(left, d)?;
                    check(right, d)
                }
            }
        }
        check(&root, n_features)?;
        let regions = extract_leaf_regions(&root, n_features);
        Ok(Self { root, regions })
    }

    pub fn root(&self) -> &TreeNode {
        &self.root
    }

    pub fn regions(&self) -> &[LeafRegion] {
        &self.regions
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.root.evaluate(x)
    }
}

/// One box per leaf, in left-to-right leaf order, obtained by intersecting
/// the half-lines along each root-to-leaf path.
pub fn extract_leaf_regions(root: &TreeNode, n_features: usize) -> Vec<LeafRegion> {
    fn walk(node: &TreeNode, lower: &mut Vec<f64>, upper: &mut Vec<f64>, out: &mut Vec<LeafRegion>) {
        match node {
            TreeNode::Leaf { label } => out.push(LeafRegion {
                lower: lower.clone(),
                upper: upper.clone(),
                label: *label,
            }),
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                let (lo, hi) = (lower[*feature], upper[*feature]);
                upper[*feature] = hi.min(*threshold);
                walk(left, lower, upper, out);
                upper[*feature] = hi;
                lower[*feature] = lo.max(*threshold);
                walk(right, lower, upper, out);
                lower[*feature] = lo;
            }
        }
    }
    let mut out = Vec::new();
    walk(
        root,
        &mut vec![f64::NEG_INFINITY; n_features],
        &mut vec![f64::INFINITY; n_features],
        &mut out,
    );
    out
}

/// Hidden layer of ReLU units `h_t(x) = max(0, w_t . x + b_t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluLayer {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
}

impl ReluLayer {
    pub fn pre_activation(&self, t: usize, x: &[f64]) -> f64 {
        self.weights[t].iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.biases[t]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    Linear,
    TreeEnsemble(Vec<DecisionTree>),
    Relu(ReluLayer),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdditiveClassifier {
    variant: Variant,
    weights: Vec<f64>,
    intercept: f64,
    n_features: usize,
}

fn check_finite(values: &[f64], what: &str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidModel(format!("{what} contains a non-finite value")));
    }
    Ok(())
}

impl AdditiveClassifier {
    pub fn linear(weights: Vec<f64>, intercept: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidModel("linear model needs at least one weight".into()));
        }
        check_finite(&weights, "weights")?;
        check_finite(&[intercept], "intercept")?;
        Ok(Self {
            n_features: weights.len(),
            variant: Variant::Linear,
            weights,
            intercept,
        })
    }

    pub fn tree_ensemble(trees: Vec<DecisionTree>, weights: Vec<f64>, intercept: f64, n_features: usize) -> Result<Self> {
        if trees.is_empty() {
            return Err(Error::InvalidModel("tree ensemble needs at least one tree".into()));
        }
        if trees.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                expected: trees.len(),
                got: weights.len(),
            });
        }
        check_finite(&weights, "weights")?;
        check_finite(&[intercept], "intercept")?;
        for t in &trees {
            if t.regions.iter().any(|r| r.lower.len() != n_features) {
                return Err(Error::DimensionMismatch {
                    expected: n_features,
                    got: t.regions[0].lower.len(),
                });
            }
        }
        Ok(Self {
            variant: Variant::TreeEnsemble(trees),
            weights,
            intercept,
            n_features,
        })
    }

    pub fn relu_network(layer: ReluLayer, weights: Vec<f64>, intercept: f64) -> Result<Self> {
        let t = layer.weights.len();
        if t == 0 {
            return Err(Error::InvalidModel("hidden layer needs at least one neuron".into()));
        }
        if layer.biases.len() != t {
            return Err(Error::DimensionMismatch {
                expected: t,
                got: layer.biases.len(),
            });
        }
        if weights.len() != t {
            return Err(Error::DimensionMismatch {
                expected: t,
                got: weights.len(),
            });
        }
        let d = layer.weights[0].len();
        if d == 0 {
            return Err(Error::InvalidModel("neurons need at least one input".into()));
        }
        for w in &layer.weights {
            if w.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: w.len(),
                });
            }
            check_finite(w, "neuron weights")?;
        }
        check_finite(&layer.biases, "neuron biases")?;
        check_finite(&weights, "output weights")?;
        check_finite(&[intercept], "intercept")?;
        Ok(Self {
            variant: Variant::Relu(layer),
            weights,
            intercept,
            n_features: d,
        })
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn num_learners(&self) -> usize {
        self.weights.len()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn base_learner_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(match &self.variant {
            Variant::Linear => x.to_vec(),
            Variant::TreeEnsemble(trees) => trees.iter().map(|t| t.evaluate(x)).collect(),
            Variant::Relu(layer) => (0..layer.weights.len())
                .map(|t| layer.pre_activation(t, x).max(0.0))
                .collect(),
        })
    }

    /// `sum_t w_t h_t(x) - b`.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        let h = self.base_learner_values(x)?;
        Ok(self.weights.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() - self.intercept)
    }

    /// `+1` when the decision value is non-negative, otherwise `-1`.
    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        Ok(if self.decision_value(x)? >= 0.0 { 1 } else { -1 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeDoc {
    Leaf {
        leaf: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeDoc>,
        right: Box<TreeDoc>,
    },
}

impl TreeDoc {
    fn to_node(&self) -> TreeNode {
        match self {
            TreeDoc::Leaf { leaf } => TreeNode::leaf(*leaf),
            TreeDoc::Split {
                feature,
                threshold,
                left,
                right,
            } => TreeNode::split(*feature, *threshold, left.to_node(), right.to_node()),
        }
    }

    fn from_node(node: &TreeNode) -> Self {
        match node {
            TreeNode::Leaf { label } => TreeDoc::Leaf { leaf: *label },
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => TreeDoc::Split {
                feature: *feature,
                threshold: *threshold,
                left: Box::new(Self::from_node(left)),
                right: Box::new(Self::from_node(right)),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelType {
    Linear,
    Forest,
    Mlp,
}

/// JSON model document. Feature indices are 0-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDoc {
    pub version: u32,
    #[serde(rename = "type")]
    pub kind: ModelType,
    pub weights: Vec<f64>,
    pub intercept: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trees: Option<Vec<TreeDoc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<ReluLayer>>,
}

pub const MODEL_VERSION: u32 = 1;

impl ModelDoc {
    pub fn into_classifier(self, n_features: usize) -> Result<AdditiveClassifier> {
        if self.version != MODEL_VERSION {
            return Err(Error::Schema(format!("unsupported model version {}", self.version)));
        }
        match self.kind {
            ModelType::Linear => {
                if self.trees.is_some() || self.layers.is_some() {
                    return Err(Error::Schema("linear model takes no trees or layers".into()));
                }
                if self.weights.len() != n_features {
                    return Err(Error::DimensionMismatch {
                        expected: n_features,
                        got: self.weights.len(),
                    });
                }
                AdditiveClassifier::linear(self.weights, self.intercept)
            }
            ModelType::Forest => {
                let docs = self.trees.ok_or_else(|| Error::Schema("forest model needs trees".into()))?;
                let trees = docs
                    .iter()
                    .map(|d| DecisionTree::new(d.to_node(), n_features))
                    .collect::<Result<Vec<_>>>()?;
                AdditiveClassifier::tree_ensemble(trees, self.weights, self.intercept, n_features)
            }
            ModelType::Mlp => {
                let mut layers = self.layers.ok_or_else(|| Error::Schema("mlp model needs layers".into()))?;
                if layers.len() != 1 {
                    return Err(Error::Schema(format!(
                        "only one hidden layer is supported, got {}",
                        layers.len()
                    )));
                }
                let layer = layers.remove(0);
                if layer.weights.iter().any(|w| w.len() != n_features) {
                    let bad = layer.weights.iter().find(|w| w.len() != n_features).unwrap();
                    return Err(Error::DimensionMismatch {
                        expected: n_features,
                        got: bad.len(),
                    });
                }
                AdditiveClassifier::relu_network(layer, self.weights, self.intercept)
            }
        }
    }

    pub fn from_classifier(c: &AdditiveClassifier) -> Self {
        let (kind, trees, layers) = match c.variant() {
            Variant::Linear => (ModelType::Linear, None, None),
            Variant::TreeEnsemble(ts) => (
                ModelType::Forest,
                Some(ts.iter().map(|t| TreeDoc::from_node(t.root())).collect()),
                None,
            ),
            Variant::Relu(layer) => (ModelType::Mlp, None, Some(vec![layer.clone()])),
        };
        Self {
            version: MODEL_VERSION,
            kind,
            weights: c.weights().to_vec(),
            intercept: c.intercept(),
            trees,
            layers,
        }
    }
}

/// Parses and validates a JSON model document for `n_features` inputs.
pub fn load_model(json: &str, n_features: usize) -> Result<AdditiveClassifier> {
    let doc: ModelDoc = serde_json::from_str(json).map_err(|e| Error::Schema(e.to_string()))?;
    doc.into_classifier(n_features)
}

pub fn model_to_json(c: &AdditiveClassifier) -> String {
    serde_json::to_string_pretty(&ModelDoc::from_classifier(c)).expect("model documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stump() -> AdditiveClassifier {
        let tree = DecisionTree::new(TreeNode::split(0, 0.5, TreeNode::leaf(-1.0), TreeNode::leaf(1.0)), 1).unwrap();
        AdditiveClassifier::tree_ensemble(vec![tree], vec![1.0], 0.0, 1).unwrap()
    }

    #[test]
    fn linear_predictions() {
        let lm = AdditiveClassifier::linear(vec![1.0, 0.0], 0.0).unwrap();
        assert_eq!(lm.predict(&[1.0, 0.0]).unwrap(), 1);
        let lm = AdditiveClassifier::linear(vec![1.0, 0.0], 2.0).unwrap();
        assert_eq!(lm.predict(&[1.0, 0.0]).unwrap(), -1);
        assert_eq!(lm.base_learner_values(&[3.0, 4.0]).unwrap(), vec![3.0, 4.0]);
        assert!(lm.predict(&[1.0]).is_err());
    }

    #[test]
    fn boundary_counts_as_positive() {
        let lm = AdditiveClassifier::linear(vec![1.0], 1.0).unwrap();
        assert_eq!(lm.predict(&[1.0]).unwrap(), 1);
    }

    #[test]
    fn stump_predictions() {
        let te = stump();
        assert_eq!(te.predict(&[0.2]).unwrap(), -1);
        assert_eq!(te.base_learner_values(&[0.7]).unwrap(), vec![1.0]);
        assert_eq!(te.predict(&[0.5]).unwrap(), -1);
    }

    #[test]
    fn relu_values() {
        let layer = ReluLayer {
            weights: vec![vec![2.0, -1.0], vec![2.0, -1.0]],
            biases: vec![-1.0, -3.0],
        };
        let mlp = AdditiveClassifier::relu_network(layer, vec![1.0, 1.0], 0.0).unwrap();
        assert_eq!(mlp.base_learner_values(&[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
    }

    #[test]
    fn leaf_regions() {
        let single = extract_leaf_regions(&TreeNode::leaf(1.0), 2);
        assert_eq!(single.len(), 1);
        assert!(single[0].contains(&[-1e300, 1e300]));

        let one = extract_leaf_regions(&TreeNode::split(0, 0.5, TreeNode::leaf(-1.0), TreeNode::leaf(1.0)), 1);
        assert_eq!((one[0].lower[0], one[0].upper[0]), (f64::NEG_INFINITY, 0.5));
        assert_eq!((one[1].lower[0], one[1].upper[0]), (0.5, f64::INFINITY));

        let nested = TreeNode::split(
            0,
            0.5,
            TreeNode::split(0, 0.2, TreeNode::leaf(-1.0), TreeNode::leaf(1.0)),
            TreeNode::leaf(1.0),
        );
        let r = extract_leaf_regions(&nested, 1);
        assert_eq!(r.len(), 3);
        for v in [0.0, 0.2, 0.3, 0.5, 0.51, 1.0] {
            assert_eq!(r.iter().filter(|b| b.contains(&[v])).count(), 1, "{v}");
        }
    }

    #[test]
    fn load_documents() {
        let lm = load_model(r#"{"version":1,"type":"linear","weights":[1,2],"intercept":0.5}"#, 2).unwrap();
        assert_eq!(lm.num_learners(), 2);

        let bad_tree = r#"{"version":1,"type":"forest","weights":[1],"intercept":0,
            "trees":[{"feature":2,"threshold":0.5,"left":{"leaf":-1},"right":{"leaf":1}}]}"#;
        assert!(matches!(load_model(bad_tree, 2), Err(Error::DimensionMismatch { .. })));

        let half_split = r#"{"version":1,"type":"forest","weights":[1],"intercept":0,
            "trees":[{"feature":0,"threshold":0.5,"left":{"leaf":-1}}]}"#;
        assert!(load_model(half_split, 2).is_err());

        let bad_mlp = r#"{"version":1,"type":"mlp","weights":[1],"intercept":0,
            "layers":[{"weights":[[1,2,3]],"biases":[0]}]}"#;
        assert!(matches!(load_model(bad_mlp, 2), Err(Error::DimensionMismatch { .. })));

        assert!(load_model(r#"{"type":"linear","weights":[1],"intercept":0}"#, 1).is_err());
    }

    #[test]
    fn json_round_trip() {
        let te = stump();
        let again = load_model(&model_to_json(&te), 1).unwrap();
        assert_eq!(te, again);
    }
}
