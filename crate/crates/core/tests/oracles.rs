use conered_core::eval::{match_score, mrsa_score, rho, theorem1_check, DistanceMetric};
use conered_core::hottopixx::{audit_model_h, build_model_h, postprocess_method_c, solve_model_h};
use conered_core::redic::{align_columns, redic, sample_augmentation, RedicConfig};
use conered_core::reduce::dr;
use conered_core::synth::{
    assemble, derive_whv, project_simplex, random_separable, simplex_least_squares,
};
use conered_core::{l1_normalize_columns, mrsa, solve_assignment, HsiMatrix, IndexSet, ToleranceConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn permutations(r: usize) -> Vec<Vec<usize>> {
    if r == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(r - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, r - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

fn random_matrix(rng: &mut ChaCha8Rng, d: usize, n: usize) -> HsiMatrix {
    HsiMatrix::from_dmatrix(DMatrix::from_fn(d, n, |_, _| rng.gen::<f64>())).unwrap()
}

#[test]
fn assignment_matches_brute_force_for_five_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let perms = permutations(5);
    assert_eq!(perms.len(), 120);
    for _ in 0..20 {
        let cost = DMatrix::from_fn(5, 5, |_, _| rng.gen::<f64>());
        let total = |p: &[usize]| p.iter().enumerate().map(|(j, &i)| cost[(i, j)]).sum::<f64>();
        let best = perms.iter().map(|p| total(p)).fold(f64::INFINITY, f64::min);
        let sigma = solve_assignment(&cost).unwrap();
        assert!((total(&sigma) - best).abs() < 1e-12);
    }
}

#[test]
fn alignment_and_score_match_brute_force_for_four_columns() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let perms = permutations(4);
    for _ in 0..20 {
        let c = random_matrix(&mut rng, 6, 4);
        let w = random_matrix(&mut rng, 6, 4);
        let total = |p: &[usize]| -> f64 {
            p.iter().enumerate().map(|(i, &q)| mrsa(c.column(i), w.column(q)).unwrap()).sum()
        };
        let best = perms.iter().map(|p| total(p)).fold(f64::INFINITY, f64::min);
        let (_, perm) = align_columns(&c, &w).unwrap();
        assert!(total(&perm) <= best + 1e-12);

        let score = mrsa_score(&c, &w).unwrap();
        assert!((score.score - 100.0 * best / 4.0).abs() < 1e-9);
    }
}

#[test]
fn score_recovers_inverse_permutation() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let w = random_matrix(&mut rng, 5, 4);
    let pi = [2, 0, 3, 1];
    let est = w.select_columns(&pi).unwrap();
    let s = mrsa_score(&w, &est).unwrap();
    assert!(s.score < 1e-12);
    assert_eq!(s.sigma, pi.to_vec());
}

/// Plain projected gradient with a sort-based projection, run to a tight
/// fixed point.
fn projected_gradient(w: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    fn project(v: &[f64]) -> Vec<f64> {
        let mut u = v.to_vec();
        u.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut cum = 0.0;
        let mut theta = 0.0;
        for (k, x) in u.iter().enumerate() {
            cum += x;
            let t = (cum - 1.0) / (k + 1) as f64;
            if x - t > 0.0 {
                theta = t;
            }
        }
        v.iter().map(|x| (x - theta).max(0.0)).collect()
    }
    let r = w.ncols();
    let gram = w.transpose() * w;
    let wty = w.transpose() * DVector::from_column_slice(y);
    let lip = gram.norm();
    let mut x = vec![1.0 / r as f64; r];
    for _ in 0..200_000 {
        let g = &gram * DVector::from_column_slice(&x) - &wty;
        x = project(&x.iter().zip(g.iter()).map(|(a, b)| a - b / lip).collect::<Vec<_>>());
    }
    x
}

#[test]
fn derived_instance_matches_projected_gradient_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let a_real = random_matrix(&mut rng, 4, 10);
    let w_ident = a_real.select_columns(&[1, 6, 8]).unwrap();
    let inst = derive_whv(&a_real, &w_ident).unwrap();
    assert_eq!(inst.pure_indices, vec![1, 6, 8]);

    let a = l1_normalize_columns(&a_real).unwrap();
    let v = a.as_dmatrix() - inst.clean();
    assert!((v - inst.v.as_dmatrix()).abs().max() < 1e-15);

    let wd = inst.w.as_dmatrix();
    for i in 0..10 {
        let fit = simplex_least_squares(wd, a.column(i));
        assert!((fit.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        assert!(fit.iter().all(|&x| x >= -1e-10));
        let oracle = projected_gradient(wd, a.column(i));
        let res = |x: &[f64]| (wd * DVector::from_column_slice(x) - DVector::from_column_slice(a.column(i))).norm();
        assert!((res(&fit) - res(&oracle)).abs() < 1e-6, "column {i}");
    }
    // Assembling at the derived noise level gives back the normalized image.
    let back = assemble(&inst, inst.nu).unwrap();
    assert!((back.as_dmatrix() - a.as_dmatrix()).abs().max() < 1e-12);
}

#[test]
fn simplex_fit_is_feasible_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..50 {
        let w = DMatrix::from_fn(6, 4, |_, _| rng.gen::<f64>());
        let y: Vec<f64> = (0..6).map(|_| rng.gen_range(-1.0..2.0)).collect();
        let x = simplex_least_squares(&w, &y);
        assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        assert!(x.iter().all(|&v| v >= -1e-10));
        assert_eq!(project_simplex(&x).len(), 4);
    }
}

#[test]
fn pure_pixels_are_exact_unit_columns() {
    for seed in 0..10 {
        let inst = random_separable(6, 30, 4, seed).unwrap();
        for (j, &p) in inst.pure_indices.iter().enumerate() {
            for i in 0..4 {
                assert_eq!(inst.h.get(i, p), if i == j { 1.0 } else { 0.0 });
            }
        }
    }
}

#[test]
fn model_h_is_exact_on_noiseless_input() {
    for seed in 0..5 {
        let inst = random_separable(5, 25, 3, seed).unwrap();
        let a = assemble(&inst, 0.0).unwrap();
        let model = build_model_h(&a, 3).unwrap();
        let sol = solve_model_h(&model, 1e-7).unwrap();
        assert!(sol.objective <= 1e-7, "seed {seed}: {}", sol.objective);
        let audit = audit_model_h(&a, 3, &sol.x, 1e-7);
        assert!(audit.passed, "{audit:?}");
        for i in 0..25 {
            for j in 0..25 {
                assert!(sol.x[(i, j)] <= sol.x[(i, i)] + 1e-7);
            }
        }
        for &p in &inst.pure_indices {
            assert!(sol.x[(p, p)] > 1.0 - 1e-6, "seed {seed}: X({p},{p}) = {}", sol.x[(p, p)]);
        }
        // On the pure columns alone every cluster is a singleton.
        let pure = a.select_columns(&inst.pure_indices).unwrap();
        let model = build_model_h(&pure, 3).unwrap();
        let sol = solve_model_h(&model, 1e-7).unwrap();
        let picked = postprocess_method_c(&pure, &sol.x, 3, 1e-7).unwrap();
        assert_eq!(picked.as_slice(), &[0, 1, 2]);
    }
}

#[test]
fn method_c_on_noisy_input_stays_within_the_distance_bound() {
    let tol = ToleranceConfig::default();
    for seed in 0..5 {
        let inst = random_separable(6, 40, 3, 100 + seed).unwrap();
        let rho_w = rho(&inst.w).unwrap();
        let eps = rho_w / 10.0;
        let a = assemble(&inst, eps).unwrap();
        let k = dr(&a, &tol).unwrap();
        let sub = a.select_columns(k.as_slice()).unwrap();
        let model = build_model_h(&sub, 3).unwrap();
        let sol = solve_model_h(&model, tol.tol_lp).unwrap();
        let picked = postprocess_method_c(&sub, &sol.x, 3, tol.tol_lp).unwrap();
        let chosen: Vec<usize> = picked.iter().map(|p| k.as_slice()[p]).collect();

        let bound = (9.0 / rho_w + 1.0) * eps;
        let est = a.select_columns(&chosen).unwrap();
        let score = match_score(&inst.w, &est, DistanceMetric::L1).unwrap();
        // The exhaustive best match over K is what the guarantee speaks to;
        // the LP choice must do no worse than the bound.
        let report = theorem1_check(&inst, eps, &k).unwrap();
        assert!(report.satisfied);
        assert!(score.per_col.iter().all(|&d| d < bound), "seed {seed}: {:?} vs {bound}", score.per_col);
    }
}

#[test]
fn theorem_hypothesis_fails_for_large_noise() {
    let inst = random_separable(5, 30, 3, 3).unwrap();
    let eps = rho(&inst.w).unwrap();
    let a = assemble(&inst, eps).unwrap();
    let k = dr(&a, &ToleranceConfig::default()).unwrap();
    if k.len() >= 3 {
        assert!(!theorem1_check(&inst, eps, &k).unwrap().hypothesis_holds);
    }
}

fn estimate_fixture(lambda: usize, tau: usize) -> (HsiMatrix, conered_core::EndmemberEstimate) {
    let inst = random_separable(8, 120, 3, 21).unwrap();
    let a = assemble(&inst, 0.3).unwrap();
    let cfg = RedicConfig {
        lambda,
        tau,
        seed: 4,
        ..RedicConfig::new(3)
    };
    let est = redic(&a, &cfg).unwrap();
    (a, est)
}

#[test]
fn pipeline_outputs_trace_back_to_input_columns() {
    let (a, est) = estimate_fixture(6, 4);
    assert_eq!(est.per_rep.len(), 4);
    for (wj, idx) in est.per_rep.iter().zip(&est.selected_indices) {
        for (c, &i) in idx.iter().enumerate() {
            assert_eq!(wj.column(c), a.column(i));
        }
    }
    let mut mean = DMatrix::zeros(8, 3);
    for wj in &est.per_rep {
        mean += wj.as_dmatrix();
    }
    mean /= 4.0;
    assert!((mean - est.w_hat.as_dmatrix()).abs().max() < 1e-12);
}

#[test]
fn pipeline_is_seed_deterministic() {
    assert_eq!(estimate_fixture(5, 3).1, estimate_fixture(5, 3).1);
}

#[test]
fn no_augmentation_collapses_the_average() {
    let (_, est) = estimate_fixture(0, 3);
    assert!(est.per_rep.iter().all(|w| *w == est.per_rep[0]));
    let drift = est.w_hat.as_dmatrix() - est.per_rep[0].as_dmatrix();
    assert!(drift.abs().max() < 1e-15);
    let (_, single) = estimate_fixture(4, 1);
    assert_eq!(single.w_hat, single.per_rep[0]);
}

#[test]
fn augmentation_draws_are_uniform() {
    // Each of the 10 free indices should be drawn with probability 3/10.
    let k = IndexSet::new(vec![0, 5]);
    let n = 12;
    let reps = 4000u64;
    let mut counts = vec![0f64; n];
    for rep in 0..reps {
        let add = sample_augmentation(&k, n, 3, rep / 40, rep % 40).unwrap();
        assert_eq!(add.len(), 3);
        for i in add.iter() {
            assert!(!k.contains(i));
            counts[i] += 1.0;
        }
    }
    let expected = reps as f64 * 3.0 / 10.0;
    let chi2: f64 = (0..n)
        .filter(|i| !k.contains(*i))
        .map(|i| (counts[i] - expected).powi(2) / expected)
        .sum();
    // 9 degrees of freedom; the 0.999 quantile is about 27.9.
    assert!(chi2 < 27.9, "chi-square {chi2}");
}
