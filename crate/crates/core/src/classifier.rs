//! Unitary equivalence decisions and explicit intertwiners.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, CMat};
use crate::model::CanonicalInvariant;
use crate::operator::{self, ShiftSpec, SpectralData};

/// Differences in (0, GRAY_ZONE] above the tolerance are reported as indeterminate.
pub const GRAY_ZONE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    XMismatch,
    JSequenceMismatch,
    JSumMismatch,
    AtomMultisetMismatch,
    MatchCaseI,
    MatchCaseIi,
    PermutationFound,
    NoPermutation,
    IndeterminateTolerance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceVerdict {
    pub equivalent: bool,
    pub reason: Reason,
    /// For matchings: `witness[i]` is the index on the right paired with left index `i`.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness: Option<Vec<usize>>,
}

impl EquivalenceVerdict {
    fn no(reason: Reason) -> Self {
        Self { equivalent: false, reason, witness: None }
    }

    fn yes(reason: Reason, witness: Option<Vec<usize>>) -> Self {
        Self { equivalent: true, reason, witness }
    }

    pub fn is_indeterminate(&self) -> bool {
        self.reason == Reason::IndeterminateTolerance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cmp {
    Equal,
    Gray,
    Different,
}

fn compare(a: f64, b: f64, tol: f64) -> Cmp {
    let d = (a - b).abs();
    if d <= tol {
        Cmp::Equal
    } else if d <= GRAY_ZONE.max(tol) {
        Cmp::Gray
    } else {
        Cmp::Different
    }
}

/// Decides S₁ ≅ S₂ for 2-isometric tree shifts with (hypo+) from their invariants.
///
/// Non-isometric: equal x and equal jₖ for all k. Isometric: equal Σ jₖ.
pub fn equiv_tree_shifts(a: &CanonicalInvariant, b: &CanonicalInvariant, tol: f64) -> EquivalenceVerdict {
    let iso_a = compare(a.x, 1.0, tol);
    let iso_b = compare(b.x, 1.0, tol);
    if iso_a == Cmp::Gray || iso_b == Cmp::Gray {
        return EquivalenceVerdict::no(Reason::IndeterminateTolerance);
    }
    match (iso_a == Cmp::Equal, iso_b == Cmp::Equal) {
        (true, true) => {
            if a.j.total() == b.j.total() {
                EquivalenceVerdict::yes(Reason::MatchCaseIi, None)
            } else {
                EquivalenceVerdict::no(Reason::JSumMismatch)
            }
        }
        (false, false) => match compare(a.x, b.x, tol) {
            Cmp::Different => EquivalenceVerdict::no(Reason::XMismatch),
            Cmp::Gray => EquivalenceVerdict::no(Reason::IndeterminateTolerance),
            Cmp::Equal if a.j == b.j => EquivalenceVerdict::yes(Reason::MatchCaseI, None),
            Cmp::Equal => EquivalenceVerdict::no(Reason::JSequenceMismatch),
        },
        _ => EquivalenceVerdict::no(Reason::XMismatch),
    }
}

/// Decides ⨁ S_{a,i} ≅ ⨁ S_{b,i} for finite sums of injective scalar shifts by
/// matching weight moduli on the first `prefix_len` entries.
///
/// For members of the ξ family one entry determines the whole sequence.
pub fn equiv_shift_sums(
    a: &[Vec<Complex64>],
    b: &[Vec<Complex64>],
    prefix_len: usize,
    tol: f64,
) -> Result<EquivalenceVerdict> {
    if prefix_len == 0 {
        return Err(Error::Domain("prefix length must be positive".into()));
    }
    let moduli = |side: &[Vec<Complex64>]| -> Result<Vec<Vec<f64>>> {
        side.iter()
            .map(|seq| {
                if seq.len() < prefix_len {
                    return Err(Error::Domain(format!(
                        "weight sequence of length {} is shorter than the compared prefix {prefix_len}",
                        seq.len()
                    )));
                }
                let m: Vec<f64> = seq[..prefix_len].iter().map(|w| w.norm()).collect();
                if m.iter().any(|&w| w == 0.0) {
                    return Err(Error::InvalidWeights("zero weight: shift is not injective".into()));
                }
                Ok(m)
            })
            .collect()
    };
    let ma = moduli(a)?;
    let mb = moduli(b)?;
    if ma.len() != mb.len() {
        return Ok(EquivalenceVerdict::no(Reason::NoPermutation));
    }
    let close = |i: usize, k: usize| ma[i].iter().zip(&mb[k]).all(|(x, y)| (x - y).abs() <= tol);
    match perfect_matching(ma.len(), close) {
        Some(m) => Ok(EquivalenceVerdict::yes(Reason::PermutationFound, Some(m))),
        None => Ok(EquivalenceVerdict::no(Reason::NoPermutation)),
    }
}

/// Bipartite perfect matching by augmenting paths; `result[i]` is the partner of left vertex `i`.
fn perfect_matching(n: usize, edge: impl Fn(usize, usize) -> bool) -> Option<Vec<usize>> {
    fn augment(i: usize, n: usize, edge: &dyn Fn(usize, usize) -> bool, seen: &mut [bool], right: &mut [Option<usize>]) -> bool {
        for k in 0..n {
            if edge(i, k) && !seen[k] {
                seen[k] = true;
                if right[k].is_none_or(|j| augment(j, n, edge, seen, right)) {
                    right[k] = Some(i);
                    return true;
                }
            }
        }
        false
    }
    let mut right: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let mut seen = vec![false; n];
        if !augment(i, n, &edge, &mut seen, &mut right) {
            return None;
        }
    }
    let mut left = vec![0; n];
    for (k, i) in right.into_iter().enumerate() {
        left[i.expect("perfect")] = k;
    }
    Some(left)
}

/// Decides W ≅ W̃ for diagonal operator valued shifts: equal atom multisets.
///
/// The witness maps each expanded atom of `a` to an expanded atom of `b` with the same λ.
pub fn equiv_diagonal_opshifts(a: &SpectralData, b: &SpectralData, tol: f64) -> EquivalenceVerdict {
    let sorted = |s: &SpectralData| {
        let atoms = s.expanded();
        let mut idx: Vec<usize> = (0..atoms.len()).collect();
        idx.sort_by(|&p, &q| atoms[p].total_cmp(&atoms[q]));
        (atoms, idx)
    };
    let (xa, ia) = sorted(a);
    let (xb, ib) = sorted(b);
    if xa.len() != xb.len() {
        return EquivalenceVerdict::no(Reason::AtomMultisetMismatch);
    }
    let mut gray = false;
    for (&p, &q) in ia.iter().zip(&ib) {
        match compare(xa[p], xb[q], tol) {
            Cmp::Equal => {}
            Cmp::Gray => gray = true,
            Cmp::Different => return EquivalenceVerdict::no(Reason::AtomMultisetMismatch),
        }
    }
    if gray {
        return EquivalenceVerdict::no(Reason::IndeterminateTolerance);
    }
    let mut witness = vec![0; xa.len()];
    for (&p, &q) in ia.iter().zip(&ib) {
        witness[p] = q;
    }
    EquivalenceVerdict::yes(Reason::PermutationFound, Some(witness))
}

/// The block-diagonal unitary ⨁ᵢ U₀ intertwining the depth-`depth` truncations of two
/// equivalent diagonal operator valued shifts; U₀ is the atom-matching permutation.
pub fn construct_intertwiner(a: &ShiftSpec, b: &ShiftSpec, depth: usize, tol: f64) -> Result<CMat> {
    let (ShiftSpec::DiagonalOp { spectral: sa }, ShiftSpec::DiagonalOp { spectral: sb }) = (a, b) else {
        return Err(Error::Precondition("intertwiners are constructed for diagonal operator valued shifts".into()));
    };
    let verdict = equiv_diagonal_opshifts(sa, sb, tol);
    if !verdict.equivalent {
        return Err(Error::NotEquivalent(format!("{:?}", verdict.reason)));
    }
    let perm = verdict.witness.expect("witness accompanies equivalence");
    let dim = perm.len();
    let mut u = CMat::zeros(dim * depth, dim * depth);
    for level in 0..depth {
        for (i, &k) in perm.iter().enumerate() {
            u[(level * dim + k, level * dim + i)] = c(1.0);
        }
    }
    Ok(u)
}

/// Order of multicyclicity of a completely non-unitary 2-isometry, which equals dim ker T*.
pub fn multicyclicity_order(spec: &ShiftSpec) -> Result<usize> {
    let depth = (spec.skeleton_depth() + 4).max(6);
    let report = operator::property_report(spec, depth, operator::DEFAULT_TOL)?;
    if !report.is_2isometry {
        return Err(Error::Precondition(format!("not a 2-isometry (defect {:e})", report.defect_2iso)));
    }
    Ok(match spec {
        ShiftSpec::Scalar { .. } | ShiftSpec::Brownian { .. } => 1,
        ShiftSpec::DiagonalOp { spectral } => spectral.dimension(),
        ShiftSpec::Tree { tree, weights, .. } => {
            // ⟨e_root⟩ ⊕ ⨁_u ℓ²(Chi(u)) ⊖ ⟨λᵘ⟩ over branching skeleton vertices; ray weights are positive
            let mut count = 1;
            for u in tree.skeleton_vertices() {
                let kids: Vec<String> = tree.children_of(u).into_iter().filter(|v| !v.contains('~')).collect();
                if kids.is_empty() {
                    continue;
                }
                let nonzero = kids.iter().any(|v| weights[v].norm() > 0.0);
                count += kids.len() - usize::from(nonzero);
            }
            count
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{self, SplitStrategy};
    use crate::tree::{self, BranchingDegrees};
    use crate::xi;

    const SQRT2: f64 = std::f64::consts::SQRT_2;
    const TOL: f64 = 1e-9;

    fn inv(x: f64, j: &[usize]) -> CanonicalInvariant {
        CanonicalInvariant::new(x, BranchingDegrees::from_dense(j.to_vec())).unwrap()
    }

    #[test]
    fn tree_criteria() {
        assert!(!equiv_tree_shifts(&inv(SQRT2, &[1]), &inv(SQRT2, &[0, 1]), TOL).equivalent);
        assert_eq!(equiv_tree_shifts(&inv(SQRT2, &[1]), &inv(SQRT2, &[0, 1]), TOL).reason, Reason::JSequenceMismatch);
        let v = equiv_tree_shifts(&inv(1.0, &[1]), &inv(1.0, &[0, 1]), TOL);
        assert!(v.equivalent);
        assert_eq!(v.reason, Reason::MatchCaseIi);
        assert_eq!(equiv_tree_shifts(&inv(1.0, &[1]), &inv(1.0, &[2]), TOL).reason, Reason::JSumMismatch);
        assert_eq!(equiv_tree_shifts(&inv(1.0, &[1]), &inv(2.0, &[1]), TOL).reason, Reason::XMismatch);
        assert_eq!(equiv_tree_shifts(&inv(2.0, &[1]), &inv(3.0, &[1]), TOL).reason, Reason::XMismatch);
    }

    #[test]
    fn gray_zone_is_flagged() {
        let v = equiv_tree_shifts(&inv(SQRT2, &[1]), &inv(SQRT2 + 1e-8, &[1]), TOL);
        assert!(!v.equivalent);
        assert!(v.is_indeterminate());
        let v = equiv_tree_shifts(&inv(1.0 + 1e-7, &[1]), &inv(1.0, &[1]), TOL);
        assert!(v.is_indeterminate());
    }

    #[test]
    fn example_pair_is_equivalent() {
        let (t1, t2) = tree::example_pair_1_2();
        let a = model::decompose(&model::build_weights_uwrem(&t1, SQRT2, SplitStrategy::Equal).unwrap()).unwrap();
        let b = model::decompose(&model::build_weights_uwrem(&t2, SQRT2, SplitStrategy::Equal).unwrap()).unwrap();
        assert!(equiv_tree_shifts(&a, &b, TOL).equivalent);
    }

    fn xi_seq(x: f64, len: usize) -> Vec<Complex64> {
        xi::xi_sequence(x, len).unwrap().into_iter().map(c).collect()
    }

    #[test]
    fn shift_sums() {
        let s2 = xi_seq(SQRT2, 1);
        let s3 = xi_seq(3f64.sqrt(), 1);
        let v = equiv_shift_sums(&[s2.clone(), s3.clone()], &[s3.clone(), s2.clone()], 1, TOL).unwrap();
        assert!(v.equivalent);
        assert_eq!(v.witness, Some(vec![1, 0]));
        let v = equiv_shift_sums(&[s2.clone(), s2.clone()], &[s2.clone(), s3.clone()], 1, TOL).unwrap();
        assert!(!v.equivalent);

        let long = xi_seq(SQRT2, 5);
        let phased: Vec<Complex64> = long.iter().enumerate().map(|(k, w)| w * Complex64::from_polar(1.0, 0.7 * k as f64)).collect();
        assert!(equiv_shift_sums(&[long.clone()], &[phased], 5, TOL).unwrap().equivalent);

        let zero = vec![c(0.0)];
        assert!(equiv_shift_sums(&[zero], &[s2.clone()], 1, TOL).is_err());
        assert!(equiv_shift_sums(&[s2.clone()], &[s2], 3, TOL).is_err());
    }

    #[test]
    fn diagonal_opshifts() {
        let a = SpectralData::new(vec![(1.0, 2), (SQRT2, 1)]).unwrap();
        let b = SpectralData::new(vec![(SQRT2, 1), (1.0, 2)]).unwrap();
        assert!(equiv_diagonal_opshifts(&a, &b, TOL).equivalent);
        let c2 = SpectralData::new(vec![(1.0, 1), (SQRT2, 2)]).unwrap();
        assert!(!equiv_diagonal_opshifts(&c2, &a, TOL).equivalent);
        let d = SpectralData::new(vec![(SQRT2, 1)]).unwrap();
        let e = SpectralData::new(vec![(1.5f64.sqrt(), 1)]).unwrap();
        assert_eq!(equiv_diagonal_opshifts(&d, &e, TOL).reason, Reason::AtomMultisetMismatch);
    }

    #[test]
    fn intertwiner_examples() {
        let a = ShiftSpec::DiagonalOp { spectral: SpectralData::new(vec![(SQRT2, 1), (2.0, 1)]).unwrap() };
        let u = construct_intertwiner(&a, &a, 5, TOL).unwrap();
        assert!(crate::linalg::max_abs(&(u.clone() - crate::linalg::identity(10))) == 0.0);

        let b = ShiftSpec::DiagonalOp { spectral: SpectralData::new(vec![(2.0, 1), (SQRT2, 1)]).unwrap() };
        let u = construct_intertwiner(&a, &b, 6, TOL).unwrap();
        let ta = operator::truncate(&a, 6).unwrap();
        let tb = operator::truncate(&b, 6).unwrap();
        let r = operator::intertwine_residual(&u, &ta, &tb).unwrap();
        assert!(r.residual <= 1e-12);
        assert!(r.lower_triangular);

        let other = ShiftSpec::DiagonalOp { spectral: SpectralData::new(vec![(3.0, 2)]).unwrap() };
        assert!(matches!(construct_intertwiner(&a, &other, 4, TOL), Err(Error::NotEquivalent(_))));
    }

    #[test]
    fn multicyclicity_examples() {
        assert_eq!(multicyclicity_order(&ShiftSpec::scalar_xi(2.0).unwrap()).unwrap(), 1);
        let t = tree::make_eta_kappa(2, 0).unwrap();
        let spec = model::build_weights_uwrem(&t, SQRT2, SplitStrategy::Equal).unwrap();
        assert_eq!(multicyclicity_order(&spec).unwrap(), 2);
        let op = ShiftSpec::DiagonalOp { spectral: SpectralData::new(vec![(1.0, 2), (SQRT2, 1)]).unwrap() };
        assert_eq!(multicyclicity_order(&op).unwrap(), 3);
    }
}
