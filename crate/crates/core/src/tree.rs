//! Rooted leafless directed trees described by a finite skeleton.
//!
//! A skeleton is a finite rooted tree together with a depth `D`. Every
//! skeleton leaf (necessarily at depth ≥ `D`) continues as an infinite path of
//! degree-one vertices; the continuation vertex `m` steps below leaf `v` is
//! labelled `"v~m"`. Skeleton labels may therefore not contain `~`.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const RAY_SEP: char = '~';

/// On-disk tree description: `{"root": .., "edges": [[parent, child], ..], "skeleton_depth": D}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeFile {
    pub root: String,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    pub skeleton_depth: usize,
}

/// A validated skeleton. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TreeFile", into = "TreeFile")]
pub struct TreeSkeleton {
    root: String,
    children: BTreeMap<String, Vec<String>>,
    parent: BTreeMap<String, String>,
    depth: BTreeMap<String, usize>,
    skeleton_depth: usize,
}

/// Generation branching degrees 𝔧ₖ = Σ_{u ∈ Chi^{k−1}(root)} (deg u − 1), k ≥ 1.
///
/// Stored densely from k = 1 with trailing zeros trimmed, so equality is
/// equality of the whole (finitely supported) sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct BranchingDegrees {
    j: Vec<usize>,
}

impl BranchingDegrees {
    /// Builds from a dense list `[j₁, j₂, …]`.
    pub fn from_dense(mut j: Vec<usize>) -> Self {
        while j.last() == Some(&0) {
            j.pop();
        }
        Self { j }
    }

    /// Builds from sparse `(k, jₖ)` pairs, `k ≥ 1`. Repeated `k` are summed.
    pub fn from_sparse(pairs: &[(usize, usize)]) -> Result<Self> {
        let mut dense = Vec::new();
        for &(k, jk) in pairs {
            if k == 0 {
                return Err(Error::Domain("branching degrees are indexed from k = 1".into()));
            }
            if dense.len() < k {
                dense.resize(k, 0);
            }
            dense[k - 1] += jk;
        }
        Ok(Self::from_dense(dense))
    }

    /// jₖ (zero outside the support and for k = 0).
    pub fn get(&self, k: usize) -> usize {
        if k == 0 {
            return 0;
        }
        self.j.get(k - 1).copied().unwrap_or(0)
    }

    /// Dense `[j₁, …, j_K]` where `K` is the last nonzero index.
    pub fn dense(&self) -> &[usize] {
        &self.j
    }

    /// Nonzero `(k, jₖ)` pairs in increasing `k`.
    pub fn sparse(&self) -> Vec<(usize, usize)> {
        self.j
            .iter()
            .enumerate()
            .filter(|(_, &v)| v > 0)
            .map(|(i, &v)| (i + 1, v))
            .collect()
    }

    pub fn total(&self) -> usize {
        self.j.iter().sum()
    }

    /// Largest k with jₖ ≠ 0, or 0 for the zero sequence.
    pub fn support_end(&self) -> usize {
        self.j.len()
    }
}

impl TreeSkeleton {
    /// Validates and builds a skeleton from its parts.
    pub fn new(root: impl Into<String>, edges: &[(String, String)], skeleton_depth: usize) -> Result<Self> {
        let root = root.into();
        check_label(&root)?;
        let mut children: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut parent: BTreeMap<String, String> = BTreeMap::new();
        children.entry(root.clone()).or_default();
        for (p, c) in edges {
            check_label(p)?;
            check_label(c)?;
            if c == &root {
                return Err(Error::InvalidTree(format!(
                    "root {root:?} has a parent {p:?}; rootless trees are not supported"
                )));
            }
            if p == c {
                return Err(Error::InvalidTree(format!("self-loop at {p:?}")));
            }
            if let Some(prev) = parent.insert(c.clone(), p.clone()) {
                return Err(Error::InvalidTree(format!(
                    "vertex {c:?} has more than one parent ({prev:?}, {p:?})"
                )));
            }
            children.entry(p.clone()).or_default().push(c.clone());
            children.entry(c.clone()).or_default();
        }
        for list in children.values_mut() {
            list.sort();
        }

        // Breadth-first from the root: assigns depths and detects unreachable vertices
        // (which, given unique parents, is also how cycles show up).
        let mut depth = BTreeMap::new();
        let mut queue = VecDeque::from([(root.clone(), 0usize)]);
        while let Some((v, d)) = queue.pop_front() {
            depth.insert(v.clone(), d);
            for c in &children[&v] {
                queue.push_back((c.clone(), d + 1));
            }
        }
        if depth.len() != children.len() {
            let missing: Vec<_> = children.keys().filter(|v| !depth.contains_key(*v)).take(5).collect();
            return Err(Error::InvalidTree(format!(
                "vertices unreachable from the root (cycle or disconnected component): {missing:?}"
            )));
        }

        for (v, list) in &children {
            let d = depth[v];
            if list.is_empty() && d < skeleton_depth {
                return Err(Error::InvalidTree(format!(
                    "vertex {v:?} at depth {d} is a leaf above skeleton depth {skeleton_depth}; the tree would not be leafless"
                )));
            }
            if list.len() > 1 && d >= skeleton_depth {
                return Err(Error::InvalidTree(format!(
                    "vertex {v:?} at depth {d} branches at or below skeleton depth {skeleton_depth}"
                )));
            }
        }

        Ok(Self { root, children, parent, depth, skeleton_depth })
    }

    pub fn from_file(file: &TreeFile) -> Result<Self> {
        Self::new(file.root.clone(), &file.edges, file.skeleton_depth)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: TreeFile = serde_json::from_str(s)?;
        Self::from_file(&file)
    }

    pub fn to_file(&self) -> TreeFile {
        let edges = self
            .children
            .iter()
            .flat_map(|(p, cs)| cs.iter().map(move |c| (p.clone(), c.clone())))
            .collect();
        TreeFile { root: self.root.clone(), edges, skeleton_depth: self.skeleton_depth }
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn skeleton_depth(&self) -> usize {
        self.skeleton_depth
    }

    /// Number of skeleton vertices.
    pub fn skeleton_len(&self) -> usize {
        self.children.len()
    }

    pub fn skeleton_vertices(&self) -> impl Iterator<Item = &str> {
        self.children.keys().map(String::as_str)
    }

    /// Whether `v` is a vertex of the ray-continued tree.
    pub fn contains(&self, v: &str) -> bool {
        self.locate(v).is_some()
    }

    /// Resolves a label to (skeleton leaf or vertex, steps below it).
    fn locate<'a>(&'a self, v: &'a str) -> Option<(&'a str, usize)> {
        if self.children.contains_key(v) {
            return Some((v, 0));
        }
        let (base, steps) = v.rsplit_once(RAY_SEP)?;
        let steps: usize = steps.parse().ok()?;
        let base_children = self.children.get(base)?;
        (steps >= 1 && base_children.is_empty() && steps.to_string() == v[base.len() + 1..])
            .then_some((base, steps))
    }

    /// Depth (generation index) of a vertex.
    pub fn depth_of(&self, v: &str) -> Option<usize> {
        let (base, steps) = self.locate(v)?;
        Some(self.depth[base] + steps)
    }

    /// Children of `v` in the ray-continued tree, lexicographically ordered.
    pub fn children_of(&self, v: &str) -> Vec<String> {
        match self.locate(v) {
            None => Vec::new(),
            Some((base, 0)) => {
                let list = &self.children[base];
                if list.is_empty() {
                    vec![format!("{base}{RAY_SEP}1")]
                } else {
                    list.clone()
                }
            }
            Some((base, steps)) => vec![format!("{base}{RAY_SEP}{}", steps + 1)],
        }
    }

    /// deg(v) = |Chi(v)|; always ≥ 1 after ray continuation.
    pub fn degree(&self, v: &str) -> usize {
        match self.locate(v) {
            Some((base, 0)) => self.children[base].len().max(1),
            Some(_) => 1,
            None => 0,
        }
    }

    /// par(v), `None` for the root or unknown labels.
    pub fn parent_of(&self, v: &str) -> Option<String> {
        match self.locate(v)? {
            (base, 0) => self.parent.get(base).cloned(),
            (base, 1) => Some(base.to_string()),
            (base, steps) => Some(format!("{base}{RAY_SEP}{}", steps - 1)),
        }
    }

    /// Chiⁿ(root), lexicographically ordered.
    pub fn generation(&self, n: usize) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for (v, list) in &self.children {
            let d = self.depth[v];
            if d == n {
                out.push(v.clone());
            } else if list.is_empty() && d < n {
                out.push(format!("{v}{RAY_SEP}{}", n - d));
            }
        }
        out.sort();
        out
    }

    /// All vertices of generations `0..count`, ordered by generation then label.
    pub fn layout(&self, count: usize) -> Vec<(String, usize)> {
        (0..count)
            .flat_map(|g| self.generation(g).into_iter().map(move |v| (v, g)))
            .collect()
    }

    /// jₖ for 1 ≤ k ≤ `up_to`, computed on the ray-continued tree.
    pub fn branching_degrees(&self, up_to: usize) -> BranchingDegrees {
        let dense = (1..=up_to)
            .map(|k| self.generation(k - 1).iter().map(|u| self.degree(u) - 1).sum())
            .collect();
        BranchingDegrees::from_dense(dense)
    }

    /// The full branching sequence (all jₖ vanish beyond the skeleton depth).
    pub fn all_branching_degrees(&self) -> BranchingDegrees {
        self.branching_degrees(self.skeleton_depth + 1)
    }

    /// Canonical encoding of the ray-continued tree up to root-preserving isomorphism.
    ///
    /// Leaves and single-child chains ending in a ray both encode as `R`.
    pub fn canonical_form(&self) -> String {
        self.encode(&self.root)
    }

    fn encode(&self, v: &str) -> String {
        let list = &self.children[v];
        if list.is_empty() {
            return "R".to_string();
        }
        let mut codes: Vec<String> = list.iter().map(|c| self.encode(c)).collect();
        if codes.len() == 1 && codes[0] == "R" {
            return "R".to_string();
        }
        codes.sort();
        format!("({})", codes.concat())
    }

    /// Relabels every skeleton vertex through `f`, keeping the shape.
    pub fn relabel(&self, f: impl Fn(&str) -> String) -> Result<Self> {
        let edges: Vec<(String, String)> = self
            .children
            .iter()
            .flat_map(|(p, cs)| cs.iter().map(|c| (f(p), f(c))).collect::<Vec<_>>())
            .collect();
        Self::new(f(&self.root), &edges, self.skeleton_depth)
    }
}

impl TryFrom<TreeFile> for TreeSkeleton {
    type Error = Error;

    fn try_from(file: TreeFile) -> Result<Self> {
        Self::from_file(&file)
    }
}

impl From<TreeSkeleton> for TreeFile {
    fn from(tree: TreeSkeleton) -> Self {
        tree.to_file()
    }
}

fn check_label(v: &str) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidTree("empty vertex label".into()));
    }
    if v.contains(RAY_SEP) {
        return Err(Error::InvalidTree(format!(
            "label {v:?} contains the reserved ray separator {RAY_SEP:?}"
        )));
    }
    Ok(())
}

/// Whether a root-preserving isomorphism exists between the ray-continued trees.
pub fn graph_isomorphic(a: &TreeSkeleton, b: &TreeSkeleton) -> bool {
    a.canonical_form() == b.canonical_form()
}

/// The tree 𝒯_{η,κ}: a chain −κ → … → −1 → 0 above the single branching
/// vertex 0 of degree η, each child `(i,1)` starting an infinite ray.
pub fn make_eta_kappa(eta: usize, kappa: usize) -> Result<TreeSkeleton> {
    if eta < 2 {
        return Err(Error::Domain(format!("eta must be at least 2, got {eta}")));
    }
    let label = |k: usize| if k == 0 { "0".to_string() } else { format!("-{k}") };
    let mut edges = Vec::new();
    for k in (1..=kappa).rev() {
        edges.push((label(k), label(k - 1)));
    }
    for i in 1..=eta {
        edges.push(("0".to_string(), format!("({i},1)")));
    }
    TreeSkeleton::new(label(kappa), &edges, kappa + 1)
}

/// The infinite ray 0 → 1 → 2 → ….
pub fn make_ray() -> TreeSkeleton {
    TreeSkeleton::new("0", &[], 0).expect("single vertex skeleton is valid")
}

/// Builds a skeleton from `(parent, child)` string pairs.
pub fn tree_from_edges(root: &str, edges: &[(&str, &str)], skeleton_depth: usize) -> Result<TreeSkeleton> {
    let edges: Vec<(String, String)> = edges.iter().map(|(p, c)| (p.to_string(), c.to_string())).collect();
    TreeSkeleton::new(root, &edges, skeleton_depth)
}

/// The two trees with branching sequence (1, 2, 0, …): the root has two children,
/// which have degrees (3, 1) in the first tree and (2, 2) in the second.
pub fn example_pair_1_2() -> (TreeSkeleton, TreeSkeleton) {
    let t1 = tree_from_edges(
        "r",
        &[("r", "a"), ("r", "b"), ("a", "a1"), ("a", "a2"), ("a", "a3"), ("b", "b1")],
        2,
    )
    .expect("valid");
    let t2 = tree_from_edges(
        "r",
        &[("r", "a"), ("r", "b"), ("a", "a1"), ("a", "a2"), ("b", "b1"), ("b", "b2")],
        2,
    )
    .expect("valid");
    (t1, t2)
}
