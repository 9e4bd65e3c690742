//! 2-isometric weight systems on trees and their canonical orthogonal-sum model.
//!
//! A 2-isometric weighted shift on a rooted tree satisfying (hypo+) is unitarily
//! equivalent to S_[x] ⊕ ⨁ₖ (S_[ξₖ(x)])^{⊕jₖ} with x = ‖S e_root‖ and jₖ the
//! generation branching degrees. This module builds such shifts, extracts
//! `(x, j)` and goes back.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::c;
use crate::operator::{self, RayWeights, ScalarWeights, ShiftSpec, SpectralData};
use crate::tree::{BranchingDegrees, TreeSkeleton};
use crate::xi;

/// Threshold for the isometric (x = 1) versus non-isometric split.
pub const TOL_X: f64 = 1e-9;

/// How the squared weight budget ξₙ(x)² of a vertex is split among its children.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "strategy")]
pub enum SplitStrategy {
    Equal,
    Random { seed: u64 },
}

/// The complete unitary invariant (x, {jₖ}).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InvariantFile", into = "InvariantFile")]
pub struct CanonicalInvariant {
    pub x: f64,
    pub j: BranchingDegrees,
    pub is_isometric: bool,
}

/// Wire form `{"x": .., "j": [[k, j_k], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantFile {
    pub x: f64,
    pub j: Vec<(usize, usize)>,
}

impl TryFrom<InvariantFile> for CanonicalInvariant {
    type Error = Error;

    fn try_from(f: InvariantFile) -> Result<Self> {
        CanonicalInvariant::new(f.x, BranchingDegrees::from_sparse(&f.j)?)
    }
}

impl From<CanonicalInvariant> for InvariantFile {
    fn from(inv: CanonicalInvariant) -> Self {
        InvariantFile { x: inv.x, j: inv.j.sparse() }
    }
}

impl CanonicalInvariant {
    pub fn new(x: f64, j: BranchingDegrees) -> Result<Self> {
        let x = xi::xi_eval(0, x)?;
        Ok(Self { x, j, is_isometric: (x - 1.0).abs() <= TOL_X })
    }

    /// Weights-at-level-0 of the model summands: x once and ξₖ(x) with multiplicity jₖ.
    pub fn atoms(&self) -> Vec<f64> {
        let mut out = vec![self.x];
        for (k, jk) in self.j.sparse() {
            let v = xi::xi_eval(k, self.x).expect("x validated");
            out.extend(std::iter::repeat_n(v, jk));
        }
        out
    }

    /// The model as a diagonal operator valued shift.
    pub fn to_spectral(&self) -> SpectralData {
        SpectralData { atoms: self.atoms().into_iter().map(|a| (a, 1)).collect() }
    }

    /// Predicted eigenvalues (ascending) of (TⁱQ)*(TⁱQ) over ker T*: 1 + i(λ² − 1) per atom.
    pub fn predicted_gram_spectrum(&self, i: usize) -> Vec<f64> {
        let mut v: Vec<f64> = self.atoms().iter().map(|l| 1.0 + i as f64 * (l * l - 1.0)).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    /// dim ker T* of the model = 1 + Σ jₖ.
    pub fn kernel_dimension(&self) -> usize {
        1 + self.j.total()
    }
}

/// Builds positive weights with Σ_{w∈Chi(u)} λ_w² = ξₙ(x)² for every u in generation n.
pub fn build_weights_uwrem(tree: &TreeSkeleton, x: f64, strategy: SplitStrategy) -> Result<ShiftSpec> {
    xi::xi_eval(0, x)?;
    let x = x.max(1.0);
    let mut rng = match strategy {
        SplitStrategy::Random { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
        SplitStrategy::Equal => None,
    };
    let mut weights: BTreeMap<String, Complex64> = BTreeMap::new();
    for u in tree.skeleton_vertices() {
        let kids: Vec<String> = tree.children_of(u).into_iter().filter(|v| !v.contains('~')).collect();
        if kids.is_empty() {
            continue;
        }
        let n = tree.depth_of(u).expect("skeleton vertex");
        let beta = xi::xi_eval(n, x)?;
        let shares: Vec<f64> = match rng.as_mut() {
            None => vec![1.0; kids.len()],
            Some(r) => (0..kids.len()).map(|_| r.random_range(0.2..1.0)).collect(),
        };
        let total: f64 = shares.iter().sum();
        for (v, s) in kids.into_iter().zip(shares) {
            weights.insert(v, c(beta * (s / total).sqrt()));
        }
    }
    let spec = ShiftSpec::Tree { tree: tree.clone(), weights, ray: RayWeights::Xi { x } };
    spec.validate()?;
    Ok(spec)
}

/// Truncation depth used to certify the hypotheses of the decomposition.
pub fn verification_depth(spec: &ShiftSpec) -> usize {
    (spec.skeleton_depth() + 5).max(8)
}

/// Extracts (x, j) from a verified 2-isometric tree shift satisfying (hypo+).
pub fn decompose(spec: &ShiftSpec) -> Result<CanonicalInvariant> {
    decompose_with(spec, verification_depth(spec), operator::DEFAULT_TOL)
}

pub fn decompose_with(spec: &ShiftSpec, depth: usize, tol: f64) -> Result<CanonicalInvariant> {
    if !spec.is_tree_shift() {
        return Err(Error::Precondition("decomposition applies to weighted shifts on rooted trees".into()));
    }
    let report = operator::property_report(spec, depth, tol)?;
    let mut failed = Vec::new();
    if !report.is_2isometry {
        failed.push(format!("2-isometry defect {:e}", report.defect_2iso));
    }
    match &report.hypo_plus {
        Some(h) if !h.holds => failed.push(format!("(hypo+) spread {:e}", h.residual)),
        _ => {}
    }
    if !report.kernel_condition.holds {
        failed.push(format!("kernel condition residual {:e}", report.kernel_condition.residual));
    }
    if !failed.is_empty() {
        return Err(Error::Precondition(failed.join("; ")));
    }
    let t = operator::truncate(spec, 2)?;
    let x = t.matrix.column(0).norm();
    let j = match spec {
        ShiftSpec::Tree { tree, .. } => tree.all_branching_degrees(),
        _ => BranchingDegrees::default(),
    };
    CanonicalInvariant::new(x, j)
}

/// Builds a tree with one branching vertex of degree 1 + jₖ in each generation k − 1
/// (on the leftmost path) and equal-split weights with ‖S e_root‖ = x.
pub fn synthesize_from_invariant(x: f64, j: &BranchingDegrees) -> Result<(TreeSkeleton, ShiftSpec)> {
    let depth = j.support_end();
    let path = |g: usize| format!("p{g}");
    let mut edges = Vec::new();
    for g in 1..=depth {
        edges.push((path(g - 1), path(g)));
    }
    for (k, jk) in j.sparse() {
        for i in 1..=jk {
            let side = |d: usize| format!("s{k}_{i}_{d}");
            edges.push((path(k - 1), side(k)));
            for d in k + 1..=depth {
                edges.push((side(d - 1), side(d)));
            }
        }
    }
    let tree = TreeSkeleton::new(path(0), &edges, depth)?;
    let spec = build_weights_uwrem(&tree, x, SplitStrategy::Equal)?;
    Ok((tree, spec))
}

/// The operator valued shift with weights Wₙ = diag(ξₙ(λⱼ)).
pub fn spectral_to_opshift(spectral: &SpectralData) -> Result<ShiftSpec> {
    spectral.validate()?;
    Ok(ShiftSpec::DiagonalOp { spectral: spectral.clone() })
}

/// Splits a diagonal operator valued shift into scalar shifts S_[λⱼ], one per basis vector of M.
pub fn opshift_to_shift_sum(spec: &ShiftSpec) -> Result<Vec<ScalarWeights>> {
    match spec {
        ShiftSpec::DiagonalOp { spectral } => {
            Ok(spectral.expanded().into_iter().map(|x| ScalarWeights::Xi { x }).collect())
        }
        _ => Err(Error::Precondition("expected a diagonal operator valued shift".into())),
    }
}
