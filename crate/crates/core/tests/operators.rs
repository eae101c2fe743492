use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ssdkit::convexfun::default_samples;
use ssdkit::monotone::{surjectivity_solve, HammersteinSolution};
use ssdkit::{
    hammerstein_solve, sum_check, sum_surjectivity, ConvexFunction, GraphSampling, HammersteinBranch, MonotoneOp,
    Quadratic, SolverConfig, Verdict,
};

fn abs_op() -> MonotoneOp {
    MonotoneOp::subdiff(ConvexFunction::abs())
}

fn half_square_op() -> MonotoneOp {
    MonotoneOp::subdiff(ConvexFunction::Quadratic(Quadratic::identity(1)))
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    v.signum() * (v.abs() - t).max(0.0)
}

fn rand_vec(rng: &mut ChaCha8Rng, dim: usize, r: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-r..r)).collect()
}

#[test]
fn surjectivity_of_s_plus_j() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let skew = [[0.0, 1.0], [-1.0, 0.0]];
    let skew_op = MonotoneOp::affine_from_rows(&[skew[0].to_vec(), skew[1].to_vec()], &[0.0, 0.0]).unwrap();
    let sum = MonotoneOp::sum(vec![abs_op(), half_square_op()]).unwrap();
    // ∂‖·‖₁ + skew needs the splitting solver
    let l1 = ConvexFunction::componentwise(ConvexFunction::abs(), 2).unwrap();
    let mixed = MonotoneOp::sum(vec![MonotoneOp::subdiff(l1), skew_op.clone()]).unwrap();
    for _ in 0..100 {
        let y = rng.random_range(-5.0..5.0);
        // x + sign(x) ∋ y*
        let s = surjectivity_solve(&abs_op(), &[y], 1e-6).unwrap();
        assert!((s.x[0] - soft_threshold(y, 1.0)).abs() <= 1e-10);
        assert!(s.residual <= 1e-6);
        // x + x = y*
        let s = surjectivity_solve(&half_square_op(), &[y], 1e-6).unwrap();
        assert!((s.x[0] - y / 2.0).abs() <= 1e-12);
        // 2x + sign(x) ∋ y*
        let s = surjectivity_solve(&sum, &[y], 1e-6).unwrap();
        assert!((s.x[0] - soft_threshold(y, 1.0) / 2.0).abs() <= 1e-10);

        let ys = rand_vec(&mut rng, 2, 5.0);
        // (I + K)x = y* with K the rotation generator: x = (y1 − y2, y1 + y2)/2
        let s = surjectivity_solve(&skew_op, &ys, 1e-6).unwrap();
        let want = [(ys[0] - ys[1]) / 2.0, (ys[0] + ys[1]) / 2.0];
        assert!((s.x[0] - want[0]).abs() <= 1e-12 && (s.x[1] - want[1]).abs() <= 1e-12);

        let s = surjectivity_solve(&mixed, &ys, 1e-6).unwrap();
        assert!(s.residual <= 1e-6);
        // y* − x − Kx must be a subgradient of ‖·‖₁ at x
        let x = &s.x;
        for i in 0..2 {
            let kx = skew[i][0] * x[0] + skew[i][1] * x[1];
            let g = ys[i] - x[i] - kx;
            if x[i].abs() > 1e-9 {
                assert!((g - x[i].signum()).abs() <= 1e-6, "{x:?} {ys:?}");
            } else {
                assert!(g.abs() <= 1.0 + 1e-6);
            }
        }
    }
}

#[test]
fn sum_of_abs_and_half_square() {
    let cfg = SolverConfig::default();
    let sampling = GraphSampling::default();
    let probes = default_samples(&abs_op().space(), 3.0, 50, 13);
    let r = sum_check(&abs_op(), &half_square_op(), &probes, &cfg, &sampling).unwrap();
    assert!(r.qualification);
    assert_eq!(r.maximality.verdict, Verdict::ConsistentWithMaximal, "{r:?}");

    // x + sign(x) ∋ y*: x = soft-threshold(y*), e.g. x = 2 for y* = 3
    let s = sum_surjectivity(&abs_op(), &half_square_op(), &[3.0], &cfg, &sampling).unwrap();
    assert!((s.x[0] - 2.0).abs() <= 1e-6, "{s:?}");
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..50 {
        let y = rng.random_range(-4.0..4.0);
        let s = sum_surjectivity(&abs_op(), &half_square_op(), &[y], &cfg, &sampling).unwrap();
        assert!(s.residual <= 1e-6, "y* = {y}: {s:?}");
        assert!((s.x[0] - soft_threshold(y, 1.0)).abs() <= 1e-6, "y* = {y}: {s:?}");
        assert!((s.s_star[0] + s.t_star[0] - y).abs() <= 1e-6);
        assert!(s.x_mismatch <= 1e-6);
    }
}

#[test]
fn domain_qualification_fails_for_one_sided_domains() {
    // D(S) − D(T) = {0, −1, −2} does not positively span R
    let s = MonotoneOp::graph(vec![(vec![0.0], vec![0.0]), (vec![1.0], vec![1.0])]).unwrap();
    let t = MonotoneOp::graph(vec![(vec![1.0], vec![0.0]), (vec![2.0], vec![0.0])]).unwrap();
    let probes = default_samples(&s.space(), 1.0, 3, 0);
    let r = sum_check(&s, &t, &probes, &SolverConfig::default(), &GraphSampling::default()).unwrap();
    assert!(!r.qualification);
    assert_ne!(r.maximality.verdict, Verdict::ConsistentWithMaximal);
}

fn check_hammerstein(sol: &HammersteinSolution, x: &[f64], scale: f64) {
    assert!(sol.defects.max() <= 1e-6, "{sol:?}");
    for (y, xi) in sol.y.iter().zip(x) {
        assert!((y - xi / scale).abs() <= 1e-8, "{sol:?}");
    }
}

#[test]
fn hammerstein_fixtures_and_branch_agreement() {
    let cfg = SolverConfig::default();
    let sampling = GraphSampling::default();
    // (S, T, d) with I + TS = d·I, so y = x/d
    let two = MonotoneOp::affine_from_rows(&[vec![2.0]], &[0.0]).unwrap();
    let cases = vec![
        (MonotoneOp::identity(1), MonotoneOp::identity(1), 2.0),
        (two, MonotoneOp::identity(1), 3.0),
        (MonotoneOp::identity(2), MonotoneOp::identity(2), 2.0),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for (s, t, d) in cases {
        for _ in 0..50 {
            let x = rand_vec(&mut rng, s.dim(), 4.0);
            let p = hammerstein_solve(&s, &t, &x, &cfg, &sampling, HammersteinBranch::Primary).unwrap();
            let q = hammerstein_solve(&s, &t, &x, &cfg, &sampling, HammersteinBranch::Dual).unwrap();
            check_hammerstein(&p, &x, d);
            check_hammerstein(&q, &x, d);
            for (a, b) in p.y.iter().chain(&p.y_star).chain(&p.z).zip(q.y.iter().chain(&q.y_star).chain(&q.z)) {
                assert!((a - b).abs() <= 1e-6);
            }
        }
    }
}

#[test]
fn hammerstein_with_a_kink() {
    // S = ∂|·|, T = I: x = y + y* with y* ∈ ∂|y|, so y = soft-threshold(x)
    let cfg = SolverConfig::default();
    let sampling = GraphSampling::default();
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for _ in 0..20 {
        let x = rng.random_range(-4.0..4.0);
        let sol = hammerstein_solve(&abs_op(), &MonotoneOp::identity(1), &[x], &cfg, &sampling, HammersteinBranch::Primary)
            .unwrap();
        assert!(sol.defects.max() <= 1e-6, "{sol:?}");
        assert!((sol.y[0] - soft_threshold(x, 1.0)).abs() <= 1e-6, "x = {x}: {sol:?}");
    }
}

#[test]
fn graphs_must_be_monotone() {
    assert!(MonotoneOp::graph(vec![(vec![0.0], vec![1.0]), (vec![1.0], vec![0.0])]).is_err());
    assert!(MonotoneOp::graph(vec![(vec![0.0], vec![0.0]), (vec![1.0], vec![1.0])]).is_ok());
    assert!(MonotoneOp::affine_from_rows(&[vec![-1.0]], &[0.0]).is_err());
}
