//! Merge trees as attributed measure networks `(V, p, W)`.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::mergetree::{LcaIndex, MergeTree, NodeKind};
use crate::{Error, Result, Scalar};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeStrategy {
    /// Sum of `|f|` differences along the tree path.
    #[default]
    Sp,
    /// Height of the lowest common ancestor.
    Lca,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStrategy {
    #[default]
    Uniform,
    /// Mass proportional to the height gap to the parent; the root gets `R`.
    Parent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttributeStrategy {
    /// Critical point coordinates divided by the domain diagonal.
    #[default]
    Coordinates,
    None,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub edge: EdgeStrategy,
    pub node: NodeStrategy,
    pub attribute: AttributeStrategy,
}

macro_rules! parse_enum {
    ($ty:ty, $($s:literal => $v:expr),+) => {
        impl std::str::FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.to_ascii_lowercase().as_str() {
                    $($s => Ok($v),)+
                    other => Err(Error::InvalidParameter(format!("unknown {} {other:?}", stringify!($ty)))),
                }
            }
        }
    };
}

parse_enum!(EdgeStrategy, "sp" => EdgeStrategy::Sp, "lca" => EdgeStrategy::Lca);
parse_enum!(NodeStrategy, "uniform" => NodeStrategy::Uniform, "parent" => NodeStrategy::Parent);
parse_enum!(AttributeStrategy, "coords" => AttributeStrategy::Coordinates,
    "coordinates" => AttributeStrategy::Coordinates, "none" => AttributeStrategy::None);

/// Back-reference from a network row to its merge tree node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct NodeMeta<T> {
    pub node_id: usize,
    pub vertex: usize,
    pub f: T,
    pub kind: NodeKind,
    /// Unnormalized domain coordinates.
    pub coords: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureNetwork<T> {
    p: Array1<T>,
    w: Array2<T>,
    attrs: Option<Array2<T>>,
    meta: Vec<NodeMeta<T>>,
}

fn normalization_tol<T: Scalar>() -> T {
    // f64: 1e-12; f32 has no such headroom
    T::lit(1e-12).max(T::epsilon() * T::lit(64.0))
}

impl<T: Scalar> MeasureNetwork<T> {
    /// Checks that `p` is a fully supported probability vector and `w` is
    /// square and symmetric.
    pub fn new(
        p: Array1<T>,
        w: Array2<T>,
        attrs: Option<Array2<T>>,
        meta: Vec<NodeMeta<T>>,
    ) -> Result<Self> {
        let n = p.len();
        if n == 0 {
            return Err(Error::InvalidNetwork("empty network".into()));
        }
        if w.dim() != (n, n) {
            return Err(Error::Shape(format!("W is {:?}, expected ({n}, {n})", w.dim())));
        }
        if let Some(a) = &attrs {
            if a.nrows() != n {
                return Err(Error::Shape(format!("attrs has {} rows, expected {n}", a.nrows())));
            }
        }
        if !meta.is_empty() && meta.len() != n {
            return Err(Error::Shape(format!("meta has {} entries, expected {n}", meta.len())));
        }
        if p.iter().any(|&x| !(x > T::zero())) {
            return Err(Error::InvalidNetwork("p must be strictly positive".into()));
        }
        let total = p.sum();
        if (total - T::one()).abs() > normalization_tol::<T>() {
            return Err(Error::InvalidNetwork(format!("p sums to {total}, expected 1")));
        }
        for i in 0..n {
            for j in 0..i {
                if w[[i, j]] != w[[j, i]] {
                    return Err(Error::InvalidNetwork(format!("W is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(Self { p, w, attrs, meta })
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn p(&self) -> &Array1<T> {
        &self.p
    }

    pub fn w(&self) -> &Array2<T> {
        &self.w
    }

    pub fn attrs(&self) -> Option<&Array2<T>> {
        self.attrs.as_ref()
    }

    pub fn meta(&self) -> &[NodeMeta<T>] {
        &self.meta
    }

    /// Same network without node attributes.
    pub fn without_attrs(&self) -> Self {
        Self {
            attrs: None,
            ..self.clone()
        }
    }

    /// Same network with `p` replaced (and revalidated).
    pub fn with_p(&self, p: Array1<T>) -> Result<Self> {
        Self::new(p, self.w.clone(), self.attrs.clone(), self.meta.clone())
    }
}

/// Encodes a merge tree as a measure network.
pub fn encode<T: Scalar>(tree: &MergeTree<T>, cfg: &StrategyConfig) -> Result<MeasureNetwork<T>> {
    let n = tree.len();
    let idx = LcaIndex::new(tree);
    let f: Vec<T> = tree.nodes().iter().map(|x| x.f).collect();
    let mut w = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let c = idx.lca(i, j);
            let v = match cfg.edge {
                EdgeStrategy::Sp => (f[i] - f[c]).abs() + (f[j] - f[c]).abs(),
                EdgeStrategy::Lca => f[c],
            };
            w[[i, j]] = v;
            w[[j, i]] = v;
        }
    }

    let p = match cfg.node {
        NodeStrategy::Uniform => Array1::from_elem(n, T::one() / T::from_usize(n).unwrap()),
        NodeStrategy::Parent => {
            let range = tree.range();
            let raw: Vec<T> = (0..n)
                .map(|i| match tree.parent(i) {
                    Some(par) => (f[par] - f[i]).abs(),
                    None => range,
                })
                .collect();
            if let Some(i) = raw.iter().position(|&x| !(x > T::zero())) {
                return Err(Error::DegenerateMeasure(format!(
                    "parent strategy gives node {i} zero mass"
                )));
            }
            let total = raw.iter().fold(T::zero(), |a, &b| a + b);
            Array1::from_iter(raw.into_iter().map(|x| x / total))
        }
    };

    let attrs = match cfg.attribute {
        AttributeStrategy::None => None,
        AttributeStrategy::Coordinates => {
            let d = tree.nodes().first().map_or(0, |x| x.coords.len());
            let scale = tree.diagonal();
            let mut a = Array2::zeros((n, d));
            for (i, node) in tree.nodes().iter().enumerate() {
                for (k, &c) in node.coords.iter().enumerate() {
                    a[[i, k]] = c / scale;
                }
            }
            Some(a)
        }
    };

    let meta = tree
        .nodes()
        .iter()
        .map(|x| NodeMeta {
            node_id: x.id,
            vertex: x.vertex,
            f: x.f,
            kind: x.kind,
            coords: x.coords.clone(),
        })
        .collect();
    MeasureNetwork::new(p, w, attrs, meta)
}

/// `(max p)^2 <= min p`, i.e. `p(u) p(v) <= p(w)` for all triples.
pub fn is_balanced<T: Scalar>(p: &[T]) -> bool {
    if p.is_empty() {
        return true;
    }
    let (lo, hi) = p
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi * hi <= lo
}

/// `(sum_v |f1(v) - f2(v)|^q p(v))^(1/q)`.
pub fn weighted_norm<T: Scalar>(f1: &[T], f2: &[T], p: &[T], q: T) -> Result<T> {
    if f1.len() != f2.len() || f1.len() != p.len() {
        return Err(Error::Shape(format!(
            "lengths differ: {} / {} / {}",
            f1.len(),
            f2.len(),
            p.len()
        )));
    }
    if !(q >= T::one()) {
        return Err(Error::InvalidParameter(format!("q must be >= 1, got {q}")));
    }
    let s = f1
        .iter()
        .zip(f2)
        .zip(p)
        .map(|((&a, &b), &w)| (a - b).abs().powf(q) * w)
        .fold(T::zero(), |a, b| a + b);
    Ok(s.powf(q.recip()))
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct NetworkDoc<T> {
    p: Vec<T>,
    #[serde(rename = "W")]
    w: Vec<Vec<T>>,
    #[serde(default)]
    attrs: Option<Vec<Vec<T>>>,
    #[serde(default)]
    meta: Vec<NodeMeta<T>>,
}

pub(crate) fn rows_to_array<T: Scalar>(rows: &[Vec<T>], ncols: Option<usize>) -> Result<Array2<T>> {
    let n = rows.len();
    let m = ncols.unwrap_or_else(|| rows.first().map_or(0, Vec::len));
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Shape("ragged matrix rows".into()));
    }
    let flat: Vec<T> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((n, m), flat).map_err(|e| Error::Shape(e.to_string()))
}

pub(crate) fn array_to_rows<T: Scalar>(a: &Array2<T>) -> Vec<Vec<T>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

impl<T: Scalar> MeasureNetwork<T> {
    pub fn to_json(&self) -> Result<String> {
        let doc = NetworkDoc {
            p: self.p.to_vec(),
            w: array_to_rows(&self.w),
            attrs: self.attrs.as_ref().map(array_to_rows),
            meta: self.meta.clone(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetworkDoc<T> = serde_json::from_str(text)?;
        let w = rows_to_array(&doc.w, Some(doc.p.len()))?;
        let attrs = doc.attrs.as_deref().map(|a| rows_to_array(a, None)).transpose()?;
        Self::new(Array1::from(doc.p), w, attrs, doc.meta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mergetree::{Direction, TreeNode};
    use approx::assert_relative_eq;

    fn three_node() -> MergeTree<f64> {
        let nodes = [(1.0, Some(2)), (2.0, Some(2)), (5.0, None)]
            .iter()
            .enumerate()
            .map(|(i, &(f, _))| TreeNode {
                id: i,
                vertex: i,
                f,
                coords: vec![i as f64, 1.0],
                kind: NodeKind::Leaf,
            })
            .collect();
        MergeTree::from_parts(nodes, vec![Some(2), Some(2), None], Direction::Join).unwrap()
    }

    #[test]
    fn sp_path_sum() {
        let net = encode(&three_node(), &StrategyConfig::default()).unwrap();
        assert_eq!(net.w()[[0, 1]], 7.0);
        assert_eq!(net.w()[[0, 2]], 4.0);
        assert_eq!(net.w()[[1, 1]], 0.0);
    }

    #[test]
    fn lca_matrix() {
        let cfg = StrategyConfig {
            edge: EdgeStrategy::Lca,
            ..Default::default()
        };
        let net = encode(&three_node(), &cfg).unwrap();
        assert_eq!(net.w()[[0, 1]], 5.0);
        assert_eq!((net.w()[[0, 0]], net.w()[[1, 1]], net.w()[[2, 2]]), (1.0, 2.0, 5.0));
    }

    #[test]
    fn parent_measure_with_root_mass_r() {
        let cfg = StrategyConfig {
            node: NodeStrategy::Parent,
            ..Default::default()
        };
        let net = encode(&three_node(), &cfg).unwrap();
        let expect = [4.0 / 11.0, 3.0 / 11.0, 4.0 / 11.0];
        for (a, b) in net.p().iter().zip(expect) {
            assert_relative_eq!(*a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn parent_measure_degenerate() {
        let nodes = (0..3)
            .map(|i| TreeNode {
                id: i,
                vertex: i,
                f: 1.0,
                coords: vec![],
                kind: NodeKind::Leaf,
            })
            .collect();
        let t = MergeTree::from_parts(nodes, vec![Some(2), Some(2), None], Direction::Join).unwrap();
        let cfg = StrategyConfig {
            node: NodeStrategy::Parent,
            ..Default::default()
        };
        assert!(matches!(encode(&t, &cfg), Err(Error::DegenerateMeasure(_))));
    }

    #[test]
    fn coordinates_are_scaled_by_diagonal() {
        let mut t = three_node();
        t.set_diagonal(2.0);
        let net = encode(&t, &StrategyConfig::default()).unwrap();
        let a = net.attrs().unwrap();
        assert_eq!(a.row(2).to_vec(), vec![1.0, 0.5]);
        let none = encode(
            &t,
            &StrategyConfig {
                attribute: AttributeStrategy::None,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(none.attrs().is_none());
    }

    #[test]
    fn balance_examples() {
        for n in 1..20 {
            assert!(is_balanced(&vec![1.0 / n as f64; n]));
        }
        assert!(!is_balanced(&[0.9, 0.1]));
        let n = 10.0f64;
        let p0 = -n + (n * n + 2.0).sqrt();
        let p1 = 2.0 * p0 * p0;
        let mut p = vec![p0; 20];
        p.insert(10, p1);
        assert!(is_balanced(&p));
        assert!(p1 * p1 <= p0);
    }

    #[test]
    fn norm_examples() {
        let p = [0.25; 4];
        assert_eq!(weighted_norm(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0, 4.0], &p, 2.0).unwrap(), 0.0);
        assert_relative_eq!(weighted_norm(&[2.0; 4], &[1.0; 4], &[0.1, 0.2, 0.3, 0.4], 2.0).unwrap(), 1.0);
        assert_relative_eq!(
            weighted_norm(&[3.0, 0.0], &[0.0, 0.0], &[0.5, 0.5], 2.0).unwrap(),
            3.0 / 2f64.sqrt(),
            epsilon = 1e-15
        );
        assert!(weighted_norm(&[1.0], &[1.0, 2.0], &[1.0], 2.0).is_err());
        assert!(weighted_norm(&[1.0], &[1.0], &[1.0], 0.5).is_err());
    }

    #[test]
    fn network_invariants_checked() {
        let w = Array2::from_shape_vec((2, 2), vec![0.0, 1.0, 2.0, 0.0]).unwrap();
        assert!(MeasureNetwork::new(Array1::from(vec![0.5, 0.5]), w, None, vec![]).is_err());
        let w = Array2::zeros((2, 2));
        assert!(MeasureNetwork::new(Array1::from(vec![0.6, 0.5]), w.clone(), None, vec![]).is_err());
        assert!(MeasureNetwork::new(Array1::from(vec![1.0, 0.0]), w, None, vec![]).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let net = encode(&three_node(), &StrategyConfig::default()).unwrap();
        let back = MeasureNetwork::<f64>::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back, net);
        let text = net.to_json().unwrap();
        assert!(text.contains("\"W\""));
    }
}
