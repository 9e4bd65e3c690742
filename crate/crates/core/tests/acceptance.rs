//! Acceptance suite. Run with `cargo test --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

mod common;

use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twoiso::classifier;
use twoiso::dual::{self, DualClass};
use twoiso::linalg::{self, CMat};
use twoiso::model::{self, CanonicalInvariant, SplitStrategy};
use twoiso::operator::{self, ShiftSpec, SpectralData};
use twoiso::tree::{self, BranchingDegrees, TreeSkeleton};
use twoiso::xi;

const SQRT2: f64 = std::f64::consts::SQRT_2;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// The 120 specs of criterion 2: 20 skeletons × x ∈ {1, √2, 2} × {equal, random}.
fn criterion2_specs() -> Vec<(TreeSkeleton, f64, ShiftSpec)> {
    let mut out = Vec::new();
    for (s, t) in common::skeletons(2024, 20, 5, 4).into_iter().enumerate() {
        for x in [1.0, SQRT2, 2.0] {
            for strategy in [SplitStrategy::Equal, SplitStrategy::Random { seed: 100 + s as u64 }] {
                let spec = model::build_weights_uwrem(&t, x, strategy).expect("uwrem");
                out.push((t.clone(), x, spec));
            }
        }
    }
    out
}

fn c1_xi_identities() -> Outcome {
    let mut worst = 0.0f64;
    for x in [1.0, 1.1, SQRT2, 2.0, 5.0] {
        for n in 0..=20 {
            for m in 0..=20 - n {
                let lhs = ok(xi::xi_eval(m + n, x))?;
                let rhs = ok(xi::xi_eval(m, ok(xi::xi_eval(n, x))?))?;
                worst = worst.max((lhs - rhs).abs());
                ensure((lhs - rhs).abs() <= 1e-12, || format!("composition m={m} n={n} x={x}: {lhs} vs {rhs}"))?;
            }
            let (a, b) = (ok(xi::xi_eval(n, x))?, ok(xi::xi_eval(n + 1, x))?);
            if x > 1.0 {
                ensure(a > b && b > 1.0, || format!("monotonicity fails at n={n} x={x}"))?;
            }
            let rec = ok(xi::xi_next(a))?;
            ensure((rec - b).abs() <= 1e-12, || format!("recurrence n={n} x={x}"))?;
            let cum = ok(xi::xi_cumulative(n, x))?;
            let closed = 1.0 + n as f64 * (x * x - 1.0);
            ensure((cum * cum - closed).abs() <= 1e-10, || format!("telescoping square n={n} x={x}"))?;
            let next = ok(xi::xi_cumulative(n + 1, x))?;
            ensure((next - cum * a).abs() <= 1e-12, || format!("telescoping product n={n} x={x}"))?;
        }
    }
    Ok(format!("worst composition error {worst:.1e}"))
}

fn c2_two_isometry(specs: &[(TreeSkeleton, f64, ShiftSpec)]) -> Outcome {
    let mut worst = 0.0f64;
    for (k, (_, x, spec)) in specs.iter().enumerate() {
        let r = ok(operator::property_report(spec, 10, 1e-9))?;
        worst = worst.max(r.defect_2iso);
        ensure(r.defect_2iso <= 1e-9, || format!("spec {k} (x={x}): defect {:e}", r.defect_2iso))?;
        ensure(r.hypo_plus.as_ref().is_some_and(|h| h.holds), || format!("spec {k}: hypo+ fails"))?;
        ensure(r.kernel_condition.holds, || format!("spec {k}: kernel condition residual {:e}", r.kernel_condition.residual))?;
    }
    Ok(format!("{} specs, worst defect {worst:.1e}", specs.len()))
}

/// {1 + i(λ² − 1)} over λ = x and ξₖ(x) repeated jₖ times, jₖ read off the tree.
fn oracle_spectrum(t: &TreeSkeleton, x: f64, i: usize) -> Vec<f64> {
    let mut atoms = vec![x];
    for k in 1..=t.skeleton_depth() {
        let jk = common::generation_size(t, k) - common::generation_size(t, k - 1);
        let lam = xi::xi_eval(k, x).unwrap();
        atoms.extend(std::iter::repeat_n(lam, jk));
    }
    let mut v: Vec<f64> = atoms.iter().map(|l| 1.0 + i as f64 * (l * l - 1.0)).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn c3_gram_oracle(specs: &[(TreeSkeleton, f64, ShiftSpec)]) -> Outcome {
    let mut worst = 0.0f64;
    for (k, (t, x, spec)) in specs.iter().enumerate() {
        for i in 1..=6 {
            let depth = (i + t.skeleton_depth() + 2).max(10);
            let got = ok(operator::power_gram_spectrum(spec, i, depth))?;
            let want = oracle_spectrum(t, *x, i);
            ensure(got.len() == want.len(), || format!("spec {k} i={i}: {} eigenvalues, expected {}", got.len(), want.len()))?;
            for (g, w) in got.iter().zip(&want) {
                worst = worst.max((g - w).abs());
                ensure((g - w).abs() <= 1e-9, || format!("spec {k} i={i}: eigenvalue {g} vs {w}"))?;
            }
        }
    }
    Ok(format!("{} specs x 6 powers, worst eigenvalue error {worst:.1e}", specs.len()))
}

fn c4_example_2_3() -> Outcome {
    let (t1, t2) = tree::example_pair_1_2();
    let s1 = ok(model::build_weights_uwrem(&t1, SQRT2, SplitStrategy::Equal))?;
    let s2 = ok(model::build_weights_uwrem(&t2, SQRT2, SplitStrategy::Random { seed: 23 }))?;
    let (i1, i2) = (ok(model::decompose(&s1))?, ok(model::decompose(&s2))?);
    for inv in [&i1, &i2] {
        ensure(inv.j.dense() == [1, 2], || format!("j = {:?}", inv.j.dense()))?;
        ensure(inv.j.get(3) == 0 && inv.j.get(10) == 0, || "j has support past 2".into())?;
        ensure((inv.x - SQRT2).abs() <= 1e-12, || format!("x = {}", inv.x))?;
    }
    let verdict = classifier::equiv_tree_shifts(&i1, &i2, 1e-9);
    ensure(verdict.equivalent, || format!("verdict {verdict:?}"))?;
    ensure(!tree::graph_isomorphic(&t1, &t2), || "trees reported isomorphic".into())?;
    Ok("equivalent, not graph isomorphic, invariant (√2, (1,2,0,...))".into())
}

fn c5_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for case in 0..50 {
        let x = rng.random_range(1.0..=3.0);
        let support = rng.random_range(1..=4);
        let j = BranchingDegrees::from_dense((0..support).map(|_| rng.random_range(0..=5)).collect());
        let (_, spec) = ok(model::synthesize_from_invariant(x, &j))?;
        let inv = ok(model::decompose(&spec))?;
        worst = worst.max((inv.x - x).abs());
        ensure(inv.j == j, || format!("case {case}: j {:?} -> {:?}", j.dense(), inv.j.dense()))?;
        ensure((inv.x - x).abs() <= 1e-12, || format!("case {case}: x {x} -> {}", inv.x))?;
    }
    Ok(format!("50 invariants, worst x error {worst:.1e}"))
}

fn random_spectral(rng: &mut impl Rng) -> SpectralData {
    let n = rng.random_range(1..=6);
    let atoms = (0..n).map(|_| (rng.random_range(1.0..3.0), rng.random_range(1..=2))).collect();
    SpectralData::new(atoms).unwrap()
}

fn max_sorted_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

fn c6_intertwiners() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let depth = 8;
    let (mut worst_u, mut worst_r) = (0.0f64, 0.0f64);
    for case in 0..20 {
        let a = random_spectral(&mut rng);
        let mut atoms = a.atoms.clone();
        atoms.shuffle(&mut rng);
        let b = SpectralData::new(atoms).unwrap();
        let (sa, sb) = (ShiftSpec::DiagonalOp { spectral: a }, ShiftSpec::DiagonalOp { spectral: b });
        let u = ok(classifier::construct_intertwiner(&sa, &sb, depth, 1e-9))?;
        let (ta, tb) = (ok(operator::truncate(&sa, depth))?, ok(operator::truncate(&sb, depth))?);
        let r = ok(operator::intertwine_residual(&u, &ta, &tb))?;
        let defect = linalg::unitarity_defect(&u);
        worst_u = worst_u.max(defect);
        worst_r = worst_r.max(r.residual);
        ensure(defect <= 1e-12, || format!("equivalent pair {case}: unitarity defect {defect:e}"))?;
        ensure(r.residual <= 1e-10, || format!("equivalent pair {case}: residual {:e}", r.residual))?;
    }
    let mut worst_sep = f64::INFINITY;
    for case in 0..20 {
        let a = random_spectral(&mut rng);
        let mut atoms = a.atoms.clone();
        let k = rng.random_range(0..atoms.len());
        let delta = rng.random_range(0.05..0.5);
        atoms[k].0 = if atoms[k].0 - delta >= 1.0 && rng.random_bool(0.5) { atoms[k].0 - delta } else { atoms[k].0 + delta };
        let b = SpectralData::new(atoms).unwrap();
        let verdict = classifier::equiv_diagonal_opshifts(&a, &b, 1e-9);
        ensure(!verdict.equivalent, || format!("non-equivalent pair {case} reported equivalent"))?;
        let (sa, sb) = (ShiftSpec::DiagonalOp { spectral: a }, ShiftSpec::DiagonalOp { spectral: b });
        let mut sep = 0.0f64;
        for i in 1..=6 {
            let ga = ok(operator::power_gram_spectrum(&sa, i, i + 2))?;
            let gb = ok(operator::power_gram_spectrum(&sb, i, i + 2))?;
            sep = sep.max(max_sorted_gap(&ga, &gb));
        }
        worst_sep = worst_sep.min(sep);
        ensure(sep >= 1e-3, || format!("non-equivalent pair {case}: spectra separate only by {sep:e}"))?;
    }
    Ok(format!("unitarity {worst_u:.1e}, residual {worst_r:.1e}, smallest separation {worst_sep:.2e}"))
}

fn c7_cn_bounds() -> Outcome {
    let scalar = ok(ShiftSpec::scalar_xi(SQRT2))?;
    for n in 1..=8 {
        let b = ok(dual::cn_bound(&scalar, n, 40))?;
        let want = 1.0 / (1.0 + n as f64);
        ensure((b.c_n - want).abs() <= 1e-12, || format!("scalar c_{n} = {}", b.c_n))?;
        ensure((b.min_singular_sq - want).abs() <= 1e-8, || format!("scalar n={n}: min σ² {}", b.min_singular_sq))?;
        ensure(b.minimizer == "e0", || format!("scalar n={n}: minimizer {}", b.minimizer))?;
    }
    let mut worst = 0.0f64;
    for sigma in [1.0, 2.0] {
        let spec = ok(ShiftSpec::brownian(sigma))?;
        let s = 1.0 + sigma * sigma;
        for n in 1..=6 {
            let b = ok(dual::cn_bound(&spec, n, 80))?;
            let want = (1.0 + s.powf(1.0 - 2.0 * n as f64)) / (1.0 + s);
            ensure((b.c_n - want).abs() <= 1e-12, || format!("σ={sigma} c_{n} = {} vs {want}", b.c_n))?;
            ensure(b.min_singular_sq >= b.c_n - 1e-8, || format!("σ={sigma} n={n}: {} < c_n", b.min_singular_sq))?;
            worst = worst.max(b.min_singular_sq - b.c_n);
            ensure((b.min_singular_sq - b.c_n).abs() <= 1e-3, || format!("σ={sigma} n={n}: gap {}", b.min_singular_sq - b.c_n))?;
        }
        let lim = ok(dual::cn_limit(&spec))?;
        ensure((lim - 1.0 / (2.0 + sigma * sigma)).abs() <= 1e-12, || format!("σ={sigma}: limit {lim}"))?;
    }
    let lim = ok(dual::cn_limit(&scalar))?;
    ensure(lim.abs() <= 1e-12, || format!("scalar limit {lim}"))?;
    Ok(format!("Brownian worst gap to c_n {worst:.1e}"))
}

fn c8_asymptotic_limit() -> Outcome {
    let spec = ShiftSpec::DiagonalOp { spectral: SpectralData::new(vec![(1.0, 2), (SQRT2, 1)]).unwrap() };
    let depth = 10;
    let closed = ok(dual::asymptotic_closed_form(&spec, depth))?.to_matrix();
    let mut proj = CMat::zeros(3 * depth, 3 * depth);
    for level in 0..depth {
        for j in 0..2 {
            proj[(3 * level + j, 3 * level + j)] = linalg::c(1.0);
        }
    }
    let err = linalg::max_abs(&(&closed - &proj));
    ensure(err <= 1e-12, || format!("A_closed differs from the projection by {err:e}"))?;

    // at depth n + 1 the exact coordinates of T′ⁿ are the level-0 ones
    let n = 200;
    let it = ok(dual::asymptotic_iterative(&spec, n, n + 1))?;
    let full = ok(dual::asymptotic_closed_form(&spec, depth))?;
    let a = it.to_matrix();
    let mut worst = 0.0f64;
    for (r, lr) in it.labels.iter().enumerate() {
        let fr = full.labels.iter().position(|l| l == lr).unwrap();
        for (k, lk) in it.labels.iter().enumerate() {
            let fk = full.labels.iter().position(|l| l == lk).unwrap();
            worst = worst.max((a[(r, k)] - Complex64::new(full.re[fr][fk], full.im[fr][fk])).norm());
        }
    }
    ensure(worst <= 6e-3, || format!("iterate differs from A_closed by {worst}"))?;
    let e = it.labels.iter().position(|l| l == "e0[2]").unwrap();
    ensure((a[(e, e)].re - 1.0 / 201.0).abs() <= 1e-12, || format!("√2 block (0,0) = {}", a[(e, e)].re))?;

    let b = ok(dual::asymptotic_iterative(&ok(ShiftSpec::brownian(1.0))?, 50, 60))?;
    let k = b.labels.iter().position(|l| l == "c").unwrap();
    ensure((b.re[k][k] - 1.0 / 3.0).abs() <= 2e-2, || format!("Brownian scalar iterate {}", b.re[k][k]))?;
    Ok(format!("n=200 worst entry gap {worst:.2e}; Brownian n=50 scalar entry {:.4}", b.re[k][k]))
}

fn c9_class_table() -> Outcome {
    let check = |spec: ShiftSpec, dot0: bool, zero_dot: bool, what: &str| -> Result<DualClass, String> {
        let r = ok(dual::classify_c_classes(&spec, 10))?;
        ensure(r.c_dot0 == dot0 && r.c_0dot == zero_dot, || {
            format!("{what}: C·0={} C0·={} (expected {dot0}, {zero_dot})", r.c_dot0, r.c_0dot)
        })?;
        ensure(r.c_00 == (dot0 && zero_dot), || format!("{what}: C00 inconsistent"))?;
        Ok(r.class)
    };
    check(ok(ShiftSpec::scalar_xi(1.0))?, true, false, "scalar x=1")?;
    check(ok(ShiftSpec::scalar_xi(SQRT2))?, true, true, "scalar x=√2")?;
    let atoms = ShiftSpec::DiagonalOp { spectral: SpectralData::new(vec![(1.0, 1), (2.0, 2)]).unwrap() };
    let r = ok(dual::classify_c_classes(&atoms, 10))?;
    ensure(!r.c_0dot, || "atoms containing 1: C0· reported true".into())?;
    let class = check(ok(ShiftSpec::brownian(1.0))?, true, false, "Brownian σ=1")?;
    ensure(class == DualClass::QuasiBrownian, || format!("Brownian classified as {class:?}"))?;
    Ok("4 rows match".into())
}

fn random_unitary(rng: &mut impl Rng, dim: usize) -> CMat {
    let g = DMatrix::from_fn(dim, dim, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    g.qr().q()
}

fn c10_moduli_products() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let n = rng.random_range(1..=4);
        let dim = rng.random_range(1..=8);
        let u = random_unitary(&mut rng, dim);
        let family: Vec<CMat> = (0..n)
            .map(|_| {
                let d = DMatrix::from_fn(dim, dim, |r, k| {
                    if r == k {
                        Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0))
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                });
                &u * d * u.adjoint()
            })
            .collect();
        let r = ok(operator::moduli_product_residual(&family))?;
        worst = worst.max(r);
        ensure(r <= 1e-9, || format!("family {case} (n={n}, dim={dim}): residual {r:e}"))?;
    }
    Ok(format!("100 families, worst residual {worst:.1e}"))
}

fn c11_multicyclicity(specs: &[(TreeSkeleton, f64, ShiftSpec)]) -> Outcome {
    for (k, (t, _, spec)) in specs.iter().enumerate() {
        let jsum: usize = (1..=t.skeleton_depth())
            .map(|g| common::generation_size(t, g) - common::generation_size(t, g - 1))
            .sum();
        let order = ok(classifier::multicyclicity_order(spec))?;
        let tr = ok(operator::truncate(spec, 10))?;
        let svd = operator::kernel_svd(&tr, 1).ncols();
        ensure(order == 1 + jsum, || format!("spec {k}: order {order}, 1 + Σj = {}", 1 + jsum))?;
        ensure(order == svd, || format!("spec {k}: order {order}, SVD kernel dimension {svd}"))?;
    }
    Ok(format!("{} specs", specs.len()))
}

#[test]
fn acceptance_criteria() {
    let start = Instant::now();
    let specs = criterion2_specs();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("xi identity suite", Box::new(c1_xi_identities)),
        ("2-isometry defect on random uwrem trees", Box::new(|| c2_two_isometry(&specs))),
        ("decomposition Gram-spectrum oracle", Box::new(|| c3_gram_oracle(&specs))),
        ("two non-isomorphic trees with one invariant", Box::new(c4_example_2_3)),
        ("synthesize/decompose round trip", Box::new(c5_round_trip)),
        ("intertwiner oracle", Box::new(c6_intertwiners)),
        ("c_n lower bounds", Box::new(c7_cn_bounds)),
        ("asymptotic limit of the Cauchy dual", Box::new(c8_asymptotic_limit)),
        ("C-class table", Box::new(c9_class_table)),
        ("moduli of products", Box::new(c10_moduli_products)),
        ("order of multicyclicity", Box::new(|| c11_multicyclicity(&specs))),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let result = f();
        let secs = t.elapsed().as_secs_f64();
        match &result {
            Ok(detail) => println!("criterion {:2} PASS  {name} ({detail}) [{secs:.2}s]", i + 1),
            Err(why) => {
                println!("criterion {:2} FAIL  {name}: {why} [{secs:.2}s]", i + 1);
                failed.push(i + 1);
            }
        }
    }
    let total = start.elapsed().as_secs_f64();
    println!("acceptance: {} of {} criteria passed in {total:.1}s", criteria.len() - failed.len(), criteria.len());
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
    assert!(total < 60.0, "acceptance suite took {total:.1}s");
}

#[test]
fn invariant_json_shape() {
    let inv = CanonicalInvariant::new(SQRT2, BranchingDegrees::from_dense(vec![1, 2])).unwrap();
    let text = serde_json::to_string(&inv).unwrap();
    assert_eq!(text, format!("{{\"x\":{SQRT2},\"j\":[[1,1],[2,2]]}}"));
}
