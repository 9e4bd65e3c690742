//! Asymptotics of the Cauchy dual T′ of a 2-isometry T.
//!
//! For a kernel-condition 2-isometry A_{T′} = G_T({1}); for a quasi-Brownian
//! isometry A_{T′} = ½G_T({1}) + (I + T*T)⁻¹, where G_T is the spectral measure
//! of T*T and A_S = lim S*ⁿSⁿ. The sharp lower bounds ‖T′ⁿf‖² ≥ cₙ‖f‖² have
//! closed forms in ‖T‖² in both classes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::model;
use crate::operator::{self, ShiftSpec, TruncatedOperator};

/// Relative threshold for membership of an eigenvalue of T*T in {1}.
pub const EIGEN_ONE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualClass {
    KernelCondition,
    QuasiBrownian,
}

/// Dense matrix with basis labels; row-major real and imaginary parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledMatrix {
    pub labels: Vec<String>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl LabelledMatrix {
    pub fn new(labels: Vec<String>, m: &CMat) -> Self {
        let rows = |f: fn(&Complex64) -> f64| (0..m.nrows()).map(|r| (0..m.ncols()).map(|k| f(&m[(r, k)])).collect()).collect();
        Self { labels, re: rows(|z| z.re), im: rows(|z| z.im) }
    }

    pub fn to_matrix(&self) -> CMat {
        let n = self.re.len();
        let k = self.re.first().map_or(0, Vec::len);
        CMat::from_fn(n, k, |r, q| Complex64::new(self.re[r][q], self.im[r][q]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnBound {
    pub n: usize,
    pub c_n: f64,
    /// Smallest eigenvalue of T′*ⁿT′ⁿ over truncation-exact coordinates.
    pub min_singular_sq: f64,
    /// Basis label carrying the largest entry of the minimizing vector.
    pub minimizer: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualReport {
    pub class: DualClass,
    pub depth: usize,
    pub c_dot0: bool,
    pub c_0dot: bool,
    pub c_00: bool,
    pub norm_sq: f64,
    /// ‖T′‖ on truncation-exact columns.
    pub dual_norm: f64,
    pub a_closed: LabelledMatrix,
    /// Power used for `a_iterative`.
    pub iterations: usize,
    pub a_iterative: LabelledMatrix,
    pub c_n_values: Vec<(usize, f64)>,
}

/// Decides which closed form applies, from the operator itself.
pub fn detect_class(spec: &ShiftSpec) -> Result<DualClass> {
    let report = operator::property_report(spec, model::verification_depth(spec), operator::DEFAULT_TOL)?;
    if !report.is_2isometry {
        return Err(Error::Precondition(format!("not a 2-isometry (defect {:e})", report.defect_2iso)));
    }
    if report.kernel_condition.holds {
        Ok(DualClass::KernelCondition)
    } else if report.quasi_brownian.holds {
        Ok(DualClass::QuasiBrownian)
    } else {
        Err(Error::Precondition(
            "operator is neither a kernel-condition 2-isometry nor a quasi-Brownian isometry".into(),
        ))
    }
}

fn labels(t: &TruncatedOperator, idx: &[usize]) -> Vec<String> {
    idx.iter().map(|&i| t.labels[i].label.clone()).collect()
}

fn spectral_projection_at_one(gram: &CMat) -> CMat {
    linalg::hermitian_apply(gram, |v| if (v - 1.0).abs() <= EIGEN_ONE_TOL * v.abs().max(1.0) { 1.0 } else { 0.0 })
}

/// A_{T′} on the depth-`depth` basis, from the closed forms.
pub fn asymptotic_closed_form(spec: &ShiftSpec, depth: usize) -> Result<LabelledMatrix> {
    let class = detect_class(spec)?;
    let t = operator::truncate(spec, depth)?;
    let g1 = spectral_projection_at_one(&t.gram);
    let a = match class {
        DualClass::KernelCondition => g1,
        DualClass::QuasiBrownian => {
            let shifted = &t.gram + linalg::identity(t.dim());
            g1 * c(0.5) + linalg::hermitian_apply(&shifted, |v| 1.0 / v)
        }
    };
    Ok(LabelledMatrix::new(labels(&t, &(0..t.dim()).collect::<Vec<_>>()), &a))
}

/// Columns `cols` of Mⁿ, by repeated sparse products.
fn power_columns(m: &CMat, cols: &[usize], n: usize) -> CMat {
    let sparse: Vec<Vec<(usize, Complex64)>> = (0..m.ncols())
        .map(|k| (0..m.nrows()).filter(|&r| m[(r, k)] != c(0.0)).map(|r| (r, m[(r, k)])).collect())
        .collect();
    let mut out = CMat::zeros(m.nrows(), cols.len());
    for (q, &col) in cols.iter().enumerate() {
        let mut v = vec![c(0.0); m.nrows()];
        v[col] = c(1.0);
        for _ in 0..n {
            let mut next = vec![c(0.0); m.nrows()];
            for (k, vk) in v.iter().enumerate() {
                if *vk == c(0.0) {
                    continue;
                }
                for &(r, w) in &sparse[k] {
                    next[r] += w * vk;
                }
            }
            v = next;
        }
        for (r, z) in v.into_iter().enumerate() {
            out[(r, q)] = z;
        }
    }
    out
}

/// T′*ⁿT′ⁿ on the coordinates where T′ⁿ is exact (generation + n < depth).
pub fn asymptotic_iterative(spec: &ShiftSpec, n: usize, depth: usize) -> Result<LabelledMatrix> {
    if n == 0 {
        return Err(Error::Domain("iteration count must be positive".into()));
    }
    if depth < n + 1 {
        return Err(Error::DepthTooSmall { depth, reason: format!("{n} iterations need depth at least {}", n + 1) });
    }
    let t = operator::truncate(spec, depth)?;
    let dual = operator::cauchy_dual(&t)?;
    let idx = dual.exact_indices(n);
    let p = power_columns(&dual.matrix, &idx, n);
    Ok(LabelledMatrix::new(labels(&t, &idx), &(p.adjoint() * p)))
}

/// cₙ from the closed form of the given class.
pub fn cn_formula(class: DualClass, norm_sq: f64, n: usize) -> f64 {
    match class {
        DualClass::KernelCondition => 1.0 / (1.0 + n as f64 * (norm_sq - 1.0)),
        DualClass::QuasiBrownian => (1.0 + norm_sq.powf(1.0 - 2.0 * n as f64)) / (1.0 + norm_sq),
    }
}

/// The sharp constant cₙ and the smallest squared singular value of the truncated T′ⁿ.
pub fn cn_bound(spec: &ShiftSpec, n: usize, depth: usize) -> Result<CnBound> {
    if depth < n + 1 {
        return Err(Error::DepthTooSmall { depth, reason: format!("power {n} needs depth at least {}", n + 1) });
    }
    let class = detect_class(spec)?;
    let t = operator::truncate(spec, depth)?;
    let dual = operator::cauchy_dual(&t)?;
    let idx = dual.exact_indices(n);
    let p = power_columns(&dual.matrix, &idx, n);
    let (values, vectors) = linalg::hermitian_eigen(&(p.adjoint() * p));
    let arg = (0..idx.len())
        .max_by(|&a, &b| vectors[(a, 0)].norm().total_cmp(&vectors[(b, 0)].norm()))
        .expect("nonempty");
    Ok(CnBound {
        n,
        c_n: cn_formula(class, spec.norm_sq_from_weights(), n),
        min_singular_sq: values[0],
        minimizer: t.labels[idx[arg]].label.clone(),
    })
}

/// lim cₙ: 0 for kernel-condition 2-isometries, 1/(1 + ‖T‖²) for quasi-Brownian ones.
pub fn cn_limit(spec: &ShiftSpec) -> Result<f64> {
    let norm_sq = spec.norm_sq_from_weights();
    if norm_sq <= 1.0 + operator::DEFAULT_TOL {
        return Err(Error::Precondition("isometric operator: cₙ = 1 for every n".into()));
    }
    Ok(match detect_class(spec)? {
        DualClass::KernelCondition => 0.0,
        DualClass::QuasiBrownian => 1.0 / (1.0 + norm_sq),
    })
}

/// Whether T has an atom at 1 in its model spectral measure (so that G_T({1}) ≠ 0).
fn has_unit_atom(spec: &ShiftSpec) -> Result<bool> {
    let one = |x: f64| (x - 1.0).abs() <= model::TOL_X;
    Ok(match spec {
        ShiftSpec::DiagonalOp { spectral } => spectral.atoms.iter().any(|a| one(a.0)),
        // every model atom ξₖ(x) equals 1 iff x = 1
        ShiftSpec::Tree { .. } | ShiftSpec::Scalar { .. } => one(spec.norm_sq_from_weights().sqrt()),
        ShiftSpec::Brownian { .. } => false,
    })
}

/// C·₀ / C₀· / C₀₀ membership of T′ together with both routes to A_{T′} and the cₙ table.
pub fn classify_c_classes(spec: &ShiftSpec, depth: usize) -> Result<DualReport> {
    classify_with(spec, depth, depth.saturating_sub(1).max(1), 8)
}

pub fn classify_with(spec: &ShiftSpec, depth: usize, iterations: usize, max_n: usize) -> Result<DualReport> {
    let class = detect_class(spec)?;
    // rooted tree shifts, diagonal operator valued shifts and the Brownian shift are all analytic
    let c_dot0 = true;
    let c_0dot = match class {
        DualClass::KernelCondition => c_dot0 && !has_unit_atom(spec)?,
        // (I + T*T)⁻¹ ≠ 0, so A_{T′} ≠ 0
        DualClass::QuasiBrownian => false,
    };
    let t = operator::truncate(spec, depth)?;
    let dual = operator::cauchy_dual(&t)?;
    let cols = dual.exact_indices(1);
    let dual_norm = linalg::op_norm(&linalg::select_columns(&dual.matrix, &cols));
    let norm_sq = spec.norm_sq_from_weights();
    Ok(DualReport {
        class,
        depth,
        c_dot0,
        c_0dot,
        c_00: c_dot0 && c_0dot,
        norm_sq,
        dual_norm,
        a_closed: asymptotic_closed_form(spec, depth)?,
        iterations,
        a_iterative: asymptotic_iterative(spec, iterations, depth.max(iterations + 1))?,
        c_n_values: (0..=max_n).map(|n| (n, cn_formula(class, norm_sq, n))).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::SpectralData;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn closed_form_unweighted_is_identity() {
        let a = asymptotic_closed_form(&ShiftSpec::scalar_xi(1.0).unwrap(), 6).unwrap().to_matrix();
        assert!(linalg::max_abs(&(a - linalg::identity(6))) < 1e-12);
    }

    #[test]
    fn closed_form_sqrt2_is_zero() {
        let a = asymptotic_closed_form(&ShiftSpec::scalar_xi(SQRT2).unwrap(), 8).unwrap().to_matrix();
        assert!(linalg::max_abs(&a) < 1e-12);
    }

    #[test]
    fn closed_form_brownian() {
        let a = asymptotic_closed_form(&ShiftSpec::brownian(1.0).unwrap(), 6).unwrap();
        let m = a.to_matrix();
        for i in 0..6 {
            assert!((m[(i, i)].re - 1.0).abs() < 1e-12);
        }
        assert_eq!(a.labels[6], "c");
        assert!((m[(6, 6)].re - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn iterative_examples() {
        let a = asymptotic_iterative(&ShiftSpec::scalar_xi(1.0).unwrap(), 5, 8).unwrap().to_matrix();
        assert!(linalg::max_abs(&(a - linalg::identity(3))) < 1e-12);
        let a = asymptotic_iterative(&ShiftSpec::scalar_xi(SQRT2).unwrap(), 200, 205).unwrap().to_matrix();
        assert!((a[(0, 0)].re - 1.0 / 201.0).abs() < 1e-12);
        assert!(asymptotic_iterative(&ShiftSpec::scalar_xi(SQRT2).unwrap(), 10, 10).is_err());
    }

    #[test]
    fn brownian_iterative_scalar_entry() {
        let a = asymptotic_iterative(&ShiftSpec::brownian(1.0).unwrap(), 50, 60).unwrap();
        let k = a.labels.iter().position(|l| l == "c").unwrap();
        assert!((a.re[k][k] - 1.0 / 3.0).abs() < 2e-2);
    }

    #[test]
    fn cn_examples() {
        let b = cn_bound(&ShiftSpec::scalar_xi(SQRT2).unwrap(), 2, 12).unwrap();
        assert!((b.c_n - 1.0 / 3.0).abs() < 1e-15);
        assert!((b.min_singular_sq - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(b.minimizer, "e0");
        assert_eq!(cn_bound(&ShiftSpec::scalar_xi(SQRT2).unwrap(), 0, 6).unwrap().c_n, 1.0);
        assert_eq!(cn_bound(&ShiftSpec::brownian(1.0).unwrap(), 0, 6).unwrap().c_n, 1.0);
        let b = cn_bound(&ShiftSpec::brownian(1.0).unwrap(), 1, 20).unwrap();
        assert!((b.c_n - 0.5).abs() < 1e-15);
        assert!(b.min_singular_sq >= b.c_n - 1e-8);
    }

    #[test]
    fn limits() {
        assert_eq!(cn_limit(&ShiftSpec::scalar_xi(SQRT2).unwrap()).unwrap(), 0.0);
        assert!((cn_limit(&ShiftSpec::brownian(1.0).unwrap()).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((cn_limit(&ShiftSpec::brownian(2.0).unwrap()).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(cn_limit(&ShiftSpec::scalar_xi(1.0).unwrap()).is_err());
    }

    #[test]
    fn class_table() {
        let r = classify_c_classes(&ShiftSpec::scalar_xi(1.0).unwrap(), 10).unwrap();
        assert!(r.c_dot0 && !r.c_0dot && !r.c_00);
        let r = classify_c_classes(&ShiftSpec::scalar_xi(SQRT2).unwrap(), 10).unwrap();
        assert!(r.c_00);
        let op = ShiftSpec::DiagonalOp { spectral: SpectralData::new(vec![(1.0, 1), (SQRT2, 1)]).unwrap() };
        let r = classify_c_classes(&op, 10).unwrap();
        assert!(r.c_dot0 && !r.c_0dot);
        let r = classify_c_classes(&ShiftSpec::brownian(1.0).unwrap(), 10).unwrap();
        assert_eq!(r.class, DualClass::QuasiBrownian);
        assert!(r.c_dot0 && !r.c_0dot);
        assert!((r.dual_norm - 1.0).abs() < 1e-9);
    }
}
