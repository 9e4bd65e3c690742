//! Operator descriptions, finite truncations and the numerical verification battery.
//!
//! Every operator handled here maps each basis vector of generation `g` into
//! the span of generation `g + 1` (plus, for the Brownian shift, an extra
//! scalar summand tagged with generation 0). A truncation keeps generations
//! `0..depth`; the image of a basis vector under `Tᵖ` is represented exactly
//! iff `generation + p ≤ depth − 1`. Identities are only ever evaluated on
//! such exact coordinates.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::tree::TreeSkeleton;
use crate::xi;

/// Default tolerance for every identity check.
pub const DEFAULT_TOL: f64 = 1e-9;
/// Singular values below this count as zero when computing kernels.
pub const KERNEL_THRESHOLD: f64 = 1e-10;

/// Weights of a scalar unilateral weighted shift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ScalarWeights {
    /// ξₙ(x), n ≥ 0: the 2-isometric shift S_[x].
    Xi { x: f64 },
    /// Explicit positive weights; the last one repeats forever.
    Explicit { weights: Vec<f64> },
}

/// Rule for weights on ray-continuation vertices of a tree.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RayWeights {
    /// A vertex of generation g gets weight ξ_{g−1}(x).
    Xi { x: f64 },
    Constant { value: f64 },
}

/// A finite atomic spectral measure on `[1, ∞)`: atoms λ with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralData {
    pub atoms: Vec<(f64, usize)>,
}

impl SpectralData {
    pub fn new(atoms: Vec<(f64, usize)>) -> Result<Self> {
        let s = Self { atoms };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.atoms.is_empty() {
            return Err(Error::Domain("spectral data needs at least one atom".into()));
        }
        for &(lambda, mult) in &self.atoms {
            if !lambda.is_finite() || lambda < 1.0 - xi::BOUNDARY_SLACK {
                return Err(Error::Domain(format!("atom {lambda} lies outside [1, inf)")));
            }
            if mult == 0 {
                return Err(Error::Domain(format!("atom {lambda} has zero multiplicity")));
            }
        }
        Ok(())
    }

    /// dim M.
    pub fn dimension(&self) -> usize {
        self.atoms.iter().map(|a| a.1).sum()
    }

    /// Atoms listed with repetition, in basis order.
    pub fn expanded(&self) -> Vec<f64> {
        self.atoms
            .iter()
            .flat_map(|&(l, m)| std::iter::repeat_n(l.max(1.0), m))
            .collect()
    }
}

/// Description of an operator in one of the supported families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ShiftSpec {
    Scalar { weights: ScalarWeights },
    Tree {
        tree: TreeSkeleton,
        /// Weight of every non-root skeleton vertex.
        weights: BTreeMap<String, Complex64>,
        ray: RayWeights,
    },
    /// Operator valued shift with weights Wₙ = diag(ξₙ(λⱼ)).
    DiagonalOp { spectral: SpectralData },
    /// B(h ⊕ c) = (Sh + σc e₀) ⊕ c on ℓ² ⊕ ℂ.
    Brownian { sigma: f64 },
}

impl ShiftSpec {
    pub fn scalar_xi(x: f64) -> Result<Self> {
        xi::xi_eval(0, x)?;
        Ok(ShiftSpec::Scalar { weights: ScalarWeights::Xi { x } })
    }

    pub fn brownian(sigma: f64) -> Result<Self> {
        let s = ShiftSpec::Brownian { sigma };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ShiftSpec::Scalar { weights: ScalarWeights::Xi { x } } => xi::xi_eval(0, *x).map(|_| ()),
            ShiftSpec::Scalar { weights: ScalarWeights::Explicit { weights } } => {
                if weights.is_empty() {
                    return Err(Error::InvalidWeights("empty weight list".into()));
                }
                if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w <= 0.0) {
                    return Err(Error::InvalidWeights(format!("scalar weights must be positive and finite, got {w}")));
                }
                Ok(())
            }
            ShiftSpec::Tree { tree, weights, ray } => {
                match *ray {
                    RayWeights::Xi { x } => {
                        xi::xi_eval(0, x)?;
                    }
                    RayWeights::Constant { value } => {
                        if !value.is_finite() || value <= 0.0 {
                            return Err(Error::InvalidWeights(format!("ray weight must be positive, got {value}")));
                        }
                    }
                }
                for v in tree.skeleton_vertices() {
                    if v == tree.root() {
                        continue;
                    }
                    match weights.get(v) {
                        None => return Err(Error::InvalidWeights(format!("missing weight for vertex {v:?}"))),
                        Some(w) if !w.re.is_finite() || !w.im.is_finite() => {
                            return Err(Error::InvalidWeights(format!("non-finite weight at {v:?}")))
                        }
                        _ => {}
                    }
                }
                if let Some(extra) = weights
                    .keys()
                    .find(|k| k.as_str() == tree.root() || !tree.skeleton_vertices().any(|v| v == k.as_str()))
                {
                    return Err(Error::InvalidWeights(format!(
                        "weight given for {extra:?}, which is not a non-root skeleton vertex"
                    )));
                }
                Ok(())
            }
            ShiftSpec::DiagonalOp { spectral } => spectral.validate(),
            ShiftSpec::Brownian { sigma } => {
                if !sigma.is_finite() || *sigma <= 0.0 {
                    return Err(Error::Domain(format!("Brownian sigma must be positive, got {sigma}")));
                }
                Ok(())
            }
        }
    }

    /// Depth below which the operator may branch (0 for non-tree operators).
    pub fn skeleton_depth(&self) -> usize {
        match self {
            ShiftSpec::Tree { tree, .. } => tree.skeleton_depth(),
            _ => 0,
        }
    }

    /// Whether this spec is a weighted shift on a rooted directed tree (a scalar shift is one on a ray).
    pub fn is_tree_shift(&self) -> bool {
        matches!(self, ShiftSpec::Tree { .. } | ShiftSpec::Scalar { .. })
    }

    /// ‖T‖² = sup_u Σ_{v∈Chi(u)} |λ_v|², read off the weights.
    pub fn norm_sq_from_weights(&self) -> f64 {
        match self {
            ShiftSpec::Scalar { weights: ScalarWeights::Xi { x } } => x * x,
            ShiftSpec::Scalar { weights: ScalarWeights::Explicit { weights } } => {
                weights.iter().map(|w| w * w).fold(0.0, f64::max)
            }
            ShiftSpec::Tree { tree, weights, ray } => {
                let mut best = match *ray {
                    // the first ray weight is at most ξ₀(x) = x; later ones decrease
                    RayWeights::Xi { x } => {
                        let first_ray_gen = tree
                            .skeleton_vertices()
                            .filter(|v| tree.degree(v) == 1 && tree.children_of(v)[0].contains('~'))
                            .filter_map(|v| tree.depth_of(v))
                            .min();
                        first_ray_gen.map_or(0.0, |g| xi::xi_eval(g, x).map_or(0.0, |w| w * w))
                    }
                    RayWeights::Constant { value } => value * value,
                };
                for u in tree.skeleton_vertices() {
                    let s: f64 = tree
                        .children_of(u)
                        .iter()
                        .filter_map(|v| weights.get(v))
                        .map(|w| w.norm_sqr())
                        .sum();
                    best = best.max(s);
                }
                best
            }
            ShiftSpec::DiagonalOp { spectral } => spectral.atoms.iter().map(|a| a.0 * a.0).fold(0.0, f64::max),
            ShiftSpec::Brownian { sigma } => 1.0 + sigma * sigma,
        }
    }

    fn tree_weight(tree: &TreeSkeleton, weights: &BTreeMap<String, Complex64>, ray: RayWeights, v: &str) -> Complex64 {
        if let Some(w) = weights.get(v) {
            return *w;
        }
        match ray {
            RayWeights::Xi { x } => {
                let g = tree.depth_of(v).expect("vertex of the tree");
                c(xi::xi_eval(g - 1, x).expect("validated"))
            }
            RayWeights::Constant { value } => c(value),
        }
    }

    /// Basis of generations `0..generations` and the matrix of T compressed to it.
    fn build(&self, generations: usize) -> (Vec<BasisLabel>, CMat) {
        match self {
            ShiftSpec::Scalar { weights } => {
                let labels: Vec<BasisLabel> = (0..generations).map(|n| BasisLabel::new(format!("e{n}"), n)).collect();
                let mut m = CMat::zeros(generations, generations);
                for n in 0..generations.saturating_sub(1) {
                    let w = match weights {
                        ScalarWeights::Xi { x } => xi::xi_eval(n, *x).expect("validated"),
                        ScalarWeights::Explicit { weights } => weights[n.min(weights.len() - 1)],
                    };
                    m[(n + 1, n)] = c(w);
                }
                (labels, m)
            }
            ShiftSpec::Tree { tree, weights, ray } => {
                let layout = tree.layout(generations);
                let index: BTreeMap<&str, usize> =
                    layout.iter().enumerate().map(|(i, (v, _))| (v.as_str(), i)).collect();
                let mut m = CMat::zeros(layout.len(), layout.len());
                for (col, (u, g)) in layout.iter().enumerate() {
                    if g + 1 >= generations {
                        continue;
                    }
                    for v in tree.children_of(u) {
                        m[(index[v.as_str()], col)] = Self::tree_weight(tree, weights, *ray, &v);
                    }
                }
                let labels = layout.into_iter().map(|(v, g)| BasisLabel::new(v, g)).collect();
                (labels, m)
            }
            ShiftSpec::DiagonalOp { spectral } => {
                let atoms = spectral.expanded();
                let dim = atoms.len();
                let size = dim * generations;
                let mut labels = Vec::with_capacity(size);
                for n in 0..generations {
                    for j in 0..dim {
                        labels.push(BasisLabel::new(format!("e{n}[{j}]"), n));
                    }
                }
                let mut m = CMat::zeros(size, size);
                for n in 0..generations.saturating_sub(1) {
                    for (j, &lambda) in atoms.iter().enumerate() {
                        m[((n + 1) * dim + j, n * dim + j)] = c(xi::xi_eval(n, lambda).expect("validated"));
                    }
                }
                (labels, m)
            }
            ShiftSpec::Brownian { sigma } => {
                let mut labels: Vec<BasisLabel> =
                    (0..generations).map(|n| BasisLabel::new(format!("e{n}"), n)).collect();
                labels.push(BasisLabel::new("c".to_string(), 0));
                let size = generations + 1;
                let mut m = CMat::zeros(size, size);
                for n in 0..generations.saturating_sub(1) {
                    m[(n + 1, n)] = c(1.0);
                }
                m[(0, generations)] = c(*sigma);
                m[(generations, generations)] = c(1.0);
                (labels, m)
            }
        }
    }
}

/// A basis vector of a truncation: its label and generation tag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisLabel {
    pub label: String,
    pub generation: usize,
}

impl BasisLabel {
    fn new(label: String, generation: usize) -> Self {
        Self { label, generation }
    }
}

/// Finite section of an operator on generations `0..depth`.
#[derive(Debug, Clone)]
pub struct TruncatedOperator {
    pub matrix: CMat,
    pub labels: Vec<BasisLabel>,
    pub depth: usize,
    /// `depth − 1`; basis vectors of generation `< interior_depth` have exact images.
    pub interior_depth: usize,
    /// The exact Gram matrix T*T on this basis (not the compression of the truncated product).
    pub gram: CMat,
}

impl TruncatedOperator {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    /// Indices of basis vectors whose image under Tᵖ is represented exactly.
    pub fn exact_indices(&self, power: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, b)| b.generation + power < self.depth)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|b| b.label == label)
    }

    pub fn power(&self, n: usize) -> CMat {
        let mut out = linalg::identity(self.dim());
        for _ in 0..n {
            out = &self.matrix * out;
        }
        out
    }
}

/// Builds the depth-`depth` truncation of `spec`.
pub fn truncate(spec: &ShiftSpec, depth: usize) -> Result<TruncatedOperator> {
    if depth < 2 {
        return Err(Error::DepthTooSmall { depth, reason: "a truncation needs at least two generations".into() });
    }
    spec.validate()?;
    let (labels, matrix) = spec.build(depth);
    // one extra generation makes T*T exact on every basis vector kept here
    let (ext_labels, ext) = spec.build(depth + 1);
    let keep: Vec<usize> = ext_labels
        .iter()
        .enumerate()
        .filter(|(_, b)| b.generation < depth)
        .map(|(i, _)| i)
        .collect();
    debug_assert!(keep.iter().zip(&labels).all(|(&i, b)| ext_labels[i] == *b));
    let full_gram = ext.adjoint() * &ext;
    let gram = linalg::select(&full_gram, &keep, &keep);
    Ok(TruncatedOperator { matrix, labels, depth, interior_depth: depth - 1, gram })
}

/// The Cauchy dual T′ = T(T*T)⁻¹ on the same basis.
pub fn cauchy_dual(t: &TruncatedOperator) -> Result<TruncatedOperator> {
    let (values, vectors) = linalg::hermitian_eigen(&t.gram);
    let smallest = values.first().copied().unwrap_or(0.0);
    if smallest <= KERNEL_THRESHOLD {
        return Err(Error::NearSingular(smallest));
    }
    let inverse = &vectors * linalg::diag(&values.iter().map(|v| 1.0 / v).collect::<Vec<_>>()) * vectors.adjoint();
    Ok(TruncatedOperator {
        matrix: &t.matrix * &inverse,
        labels: t.labels.clone(),
        depth: t.depth,
        interior_depth: t.interior_depth,
        // T′*T′ = (T*T)⁻¹
        gram: inverse,
    })
}

/// Result of a single boolean identity check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub holds: bool,
    pub residual: f64,
}

/// Condition (hypo+): ‖S e_u‖ depends only on par(u).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypoPlus {
    pub holds: bool,
    /// Largest spread of ‖S e_u‖ among siblings.
    pub residual: f64,
    /// α_{par(u)} = ‖S e_u‖ for every parent within the truncation.
    pub alpha: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub depth: usize,
    pub tol: f64,
    /// Max-entry norm of I − 2T*T + T*²T² on coordinates where T² is exact.
    pub defect_2iso: f64,
    pub is_2isometry: bool,
    pub is_2hyperexpansive: bool,
    /// Largest eigenvalue among I − T*T and I − 2T*T + T*²T² (non-positive when 2-hyperexpansive).
    pub hyperexpansive_margin: f64,
    pub kernel_condition: Check,
    /// dim of ker T* on exact coordinates, from SVD and from the closed form.
    pub kernel_dim_svd: usize,
    pub kernel_dim_closed_form: usize,
    /// `None` for operators that are not weighted shifts on trees.
    pub hypo_plus: Option<HypoPlus>,
    pub quasi_brownian: Check,
    pub norm_sq: f64,
}

impl PropertyReport {
    /// 2-isometry, kernel condition and (for tree shifts) (hypo+).
    pub fn all_hold(&self) -> bool {
        self.is_2isometry && self.kernel_condition.holds && self.hypo_plus.as_ref().is_none_or(|h| h.holds)
    }
}

/// Orthonormal basis of ker T* ∩ span{basis vectors of generation ≤ `max_gen`}, from the
/// closed form ⟨e_root⟩ ⊕ ⨁_u ℓ²(Chi(u)) ⊖ ⟨λᵘ⟩ and its analogues.
pub fn kernel_closed_form(spec: &ShiftSpec, t: &TruncatedOperator, max_gen: usize) -> CMat {
    let n = t.dim();
    let mut columns: Vec<Vec<Complex64>> = Vec::new();
    let unit = |i: usize| {
        let mut v = vec![c(0.0); n];
        v[i] = c(1.0);
        v
    };
    match spec {
        ShiftSpec::Scalar { .. } => columns.push(unit(0)),
        ShiftSpec::DiagonalOp { spectral } => {
            for j in 0..spectral.dimension() {
                columns.push(unit(j));
            }
        }
        ShiftSpec::Brownian { sigma } => {
            let s = (1.0 + sigma * sigma).sqrt();
            let mut v = vec![c(0.0); n];
            v[0] = c(1.0 / s);
            v[t.index_of("c").expect("scalar coordinate")] = c(-sigma / s);
            columns.push(v);
        }
        ShiftSpec::Tree { tree, .. } => {
            columns.push(unit(t.index_of(tree.root()).expect("root")));
            for (col, b) in t.labels.iter().enumerate() {
                if b.generation + 1 > max_gen || b.generation + 1 >= t.depth {
                    continue;
                }
                let rows: Vec<usize> = (0..n).filter(|&r| t.labels[r].generation == b.generation + 1).collect();
                let kids: Vec<usize> = rows.into_iter().filter(|&r| is_child(tree, &t.labels[r].label, &b.label)).collect();
                let lam: Vec<Complex64> = kids.iter().map(|&r| t.matrix[(r, col)]).collect();
                let comp = linalg::complement_basis(&lam);
                for k in 0..comp.ncols() {
                    let mut v = vec![c(0.0); n];
                    for (i, &r) in kids.iter().enumerate() {
                        v[r] = comp[(i, k)];
                    }
                    columns.push(v);
                }
            }
        }
    }
    let columns: Vec<Vec<Complex64>> = columns
        .into_iter()
        .filter(|v| v.iter().enumerate().all(|(i, z)| z.norm() == 0.0 || t.labels[i].generation <= max_gen))
        .collect();
    CMat::from_fn(n, columns.len(), |r, k| columns[k][r])
}

fn is_child(tree: &TreeSkeleton, v: &str, u: &str) -> bool {
    tree.parent_of(v).as_deref() == Some(u)
}

/// Orthonormal basis of ker T* ∩ span{exact_indices(power)} computed by SVD.
pub fn kernel_svd(t: &TruncatedOperator, power: usize) -> CMat {
    let cols = t.exact_indices(power);
    let adj = t.matrix.adjoint();
    let restricted = linalg::select_columns(&adj, &cols);
    let local = linalg::null_space(&restricted, KERNEL_THRESHOLD);
    let mut out = CMat::zeros(t.dim(), local.ncols());
    for (i, &r) in cols.iter().enumerate() {
        for k in 0..local.ncols() {
            out[(r, k)] = local[(i, k)];
        }
    }
    out
}

/// dim ker T* of the truncation, counted from the singular values of the truncated matrix.
pub fn kernel_dim_full_svd(t: &TruncatedOperator) -> usize {
    let s = linalg::singular_values(&t.matrix);
    t.dim() - s.iter().filter(|&&v| v >= KERNEL_THRESHOLD).count()
}

/// Runs the identity battery on the interior of a depth-`depth` truncation.
pub fn property_report(spec: &ShiftSpec, depth: usize, tol: f64) -> Result<PropertyReport> {
    if depth < 4 {
        return Err(Error::DepthTooSmall { depth, reason: "the verification battery needs depth at least 4".into() });
    }
    let t = truncate(spec, depth)?;
    let n = t.dim();
    let id = linalg::identity(n);

    // 2-isometry defect on coordinates where T² is exact
    let i2 = t.exact_indices(2);
    let t2 = &t.matrix * &t.matrix;
    let defect_full = &id - t.gram.clone() * c(2.0) + t2.adjoint() * &t2;
    let defect = linalg::select(&defect_full, &i2, &i2);
    let defect_2iso = linalg::max_abs(&defect);

    let first = linalg::select(&(&id - &t.gram), &i2, &i2);
    let margin = linalg::hermitian_eigenvalues(&first)
        .last()
        .copied()
        .unwrap_or(f64::NEG_INFINITY)
        .max(linalg::hermitian_eigenvalues(&defect).last().copied().unwrap_or(f64::NEG_INFINITY));

    // kernel condition: T*T maps ker T* into ker T*
    let q = kernel_svd(&t, 1);
    let full_kernel = linalg::null_space(&t.matrix.adjoint(), KERNEL_THRESHOLD);
    let projector = &full_kernel * full_kernel.adjoint();
    let moved = &t.gram * &q;
    let kc_residual = if q.ncols() == 0 { 0.0 } else { linalg::op_norm(&(&moved - &projector * &moved)) };
    let closed = kernel_closed_form(spec, &t, depth.saturating_sub(2));

    // (hypo+)
    let hypo_plus = match spec {
        ShiftSpec::Tree { tree, .. } => Some(hypo_plus_check(&t, |v| tree.parent_of(v), tol)),
        ShiftSpec::Scalar { .. } => Some(hypo_plus_check(
            &t,
            |v| {
                let k: usize = v[1..].parse().ok()?;
                (k > 0).then(|| format!("e{}", k - 1))
            },
            tol,
        )),
        _ => None,
    };

    // quasi-Brownian: Δ T = Δ^{1/2} T Δ^{1/2} with Δ = T*T − I
    let delta = &t.gram - &id;
    let half = linalg::hermitian_apply(&delta, |v| v.max(0.0).sqrt());
    let lhs = &delta * &t.matrix;
    let rhs = &half * &t.matrix * &half;
    let i1 = t.exact_indices(1);
    let qb_residual = linalg::max_abs(&linalg::select_columns(&(lhs - rhs), &i1));

    let norm_sq = linalg::hermitian_eigenvalues(&t.gram).last().copied().unwrap_or(0.0);

    Ok(PropertyReport {
        depth,
        tol,
        defect_2iso,
        is_2isometry: defect_2iso <= tol,
        is_2hyperexpansive: margin <= tol,
        hyperexpansive_margin: margin,
        kernel_condition: Check { holds: kc_residual <= tol, residual: kc_residual },
        kernel_dim_svd: q.ncols(),
        kernel_dim_closed_form: closed.ncols(),
        hypo_plus,
        quasi_brownian: Check { holds: defect_2iso <= tol && qb_residual <= tol, residual: qb_residual },
        norm_sq,
    })
}

fn hypo_plus_check(t: &TruncatedOperator, parent: impl Fn(&str) -> Option<String>, tol: f64) -> HypoPlus {
    let mut groups: BTreeMap<String, (f64, f64)> = BTreeMap::new();
    for col in t.exact_indices(1) {
        let b = &t.labels[col];
        let Some(p) = parent(&b.label) else { continue };
        let norm = t.matrix.column(col).norm();
        let entry = groups.entry(p).or_insert((norm, norm));
        entry.0 = entry.0.min(norm);
        entry.1 = entry.1.max(norm);
    }
    let residual = groups.values().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    let alpha = groups.into_iter().map(|(p, (lo, hi))| (p, 0.5 * (lo + hi))).collect();
    HypoPlus { holds: residual <= tol, residual, alpha }
}

/// ‖|A₁⋯Aₙ| − |A₁|⋯|Aₙ|‖, after checking that |Aᵢ| commutes with Aⱼ for i < j.
pub fn moduli_product_residual(list: &[CMat]) -> Result<f64> {
    let Some(first) = list.first() else {
        return Err(Error::Precondition("empty operator list".into()));
    };
    let dim = first.nrows();
    if list.iter().any(|a| a.nrows() != dim || a.ncols() != dim) {
        return Err(Error::DimensionMismatch("all operators must be square of one size".into()));
    }
    let moduli: Vec<CMat> = list.iter().map(linalg::modulus).collect();
    for i in 0..list.len() {
        for j in i + 1..list.len() {
            let comm = &moduli[i] * &list[j] - &list[j] * &moduli[i];
            let scale = 1.0f64.max(linalg::op_norm(&moduli[i]) * linalg::op_norm(&list[j]));
            if linalg::op_norm(&comm) > 1e-10 * scale {
                return Err(Error::Precondition(format!("|A_{}| does not commute with A_{}", i + 1, j + 1)));
            }
        }
    }
    let product = list.iter().skip(1).fold(first.clone(), |acc, a| acc * a);
    let moduli_product = moduli.iter().skip(1).fold(moduli[0].clone(), |acc, a| acc * a);
    Ok(linalg::op_norm(&(linalg::modulus(&product) - moduli_product)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntertwineResult {
    /// ‖A T₁ − T₂ A‖ on the columns where T₁ is exact.
    pub residual: f64,
    /// A_{i,j} = 0 (within 1e−10) whenever generation i < generation j.
    pub lower_triangular: bool,
}

pub fn intertwine_residual(a: &CMat, t1: &TruncatedOperator, t2: &TruncatedOperator) -> Result<IntertwineResult> {
    if a.ncols() != t1.dim() || a.nrows() != t2.dim() {
        return Err(Error::DimensionMismatch(format!(
            "A is {}x{}, operators have dimensions {} and {}",
            a.nrows(),
            a.ncols(),
            t1.dim(),
            t2.dim()
        )));
    }
    let diff = a * &t1.matrix - &t2.matrix * a;
    let cols = t1.exact_indices(1);
    let residual = linalg::op_norm(&linalg::select_columns(&diff, &cols));
    let mut lower = true;
    for r in 0..a.nrows() {
        for k in 0..a.ncols() {
            if t2.labels[r].generation < t1.labels[k].generation && a[(r, k)].norm() > 1e-10 {
                lower = false;
            }
        }
    }
    Ok(IntertwineResult { residual, lower_triangular: lower })
}

/// Eigenvalues (ascending) of (TⁱQ)*(TⁱQ), Q an orthonormal basis of ker T*.
pub fn power_gram_spectrum(spec: &ShiftSpec, i: usize, depth: usize) -> Result<Vec<f64>> {
    if i == 0 {
        return Err(Error::Domain("power index must be positive".into()));
    }
    let needed = i + spec.skeleton_depth() + 2;
    if depth < needed {
        return Err(Error::DepthTooSmall { depth, reason: format!("power {i} needs depth at least {needed}") });
    }
    let t = truncate(spec, depth)?;
    let q = kernel_closed_form(spec, &t, spec.skeleton_depth().max(1));
    let image = t.power(i) * q;
    Ok(linalg::hermitian_eigenvalues(&(image.adjoint() * image)))
}
