use consensus_accel::filter::{
    design_minimax_filter, minimax_eps_monomial_basis, minimax_lp, newton_baseline_filter, oracle_minimax_filter,
    per_iteration_rate, predicted_spectral_radius, ChebyshevBasis, DesignProblem, FilterPolynomial, QBasis,
};
use consensus_accel::graph::{generate_erdos_renyi, is_connected, ErdosRenyiParams, LatticeSbmParams};
use consensus_accel::lp::solve_lp;
use consensus_accel::spectral::{MatrixKind, Spectrum, SupportRegion};
use consensus_accel::weights::{consensus_projector, Scheme};
use consensus_accel::GraphModel;
use nalgebra::DMatrix;
use proptest::prelude::*;
use serde::Deserialize;

#[derive(Deserialize)]
struct Fixture {
    cases: Vec<Case>,
}

#[derive(Deserialize)]
struct Case {
    name: String,
    degree: usize,
    points: Vec<f64>,
    objective: f64,
    tableau: Option<Tableau>,
}

#[derive(Deserialize)]
struct Tableau {
    c: Vec<f64>,
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
}

fn fixture() -> Fixture {
    serde_json::from_str(include_str!("fixtures/minimax_lp.json")).unwrap()
}

fn design(points: Vec<f64>, degree: usize) -> FilterPolynomial {
    let region = SupportRegion::from_points(points, 1e-3, 0.0).unwrap();
    design_minimax_filter(&DesignProblem { region, degree }).unwrap()
}

fn spectrum(values: &[f64]) -> Spectrum {
    Spectrum::new(values.to_vec(), MatrixKind::Weight).unwrap()
}

/// `p(M)` by Horner on the monomial coefficients.
fn matrix_polynomial(p: &FilterPolynomial, m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let coeffs = p.p_monomial().unwrap();
    let mut acc = DMatrix::<f64>::identity(n, n) * coeffs[coeffs.len() - 1];
    for &a in coeffs.iter().rev().skip(1) {
        acc = m * acc + DMatrix::<f64>::identity(n, n) * a;
    }
    acc
}

fn radius(m: &DMatrix<f64>) -> f64 {
    m.complex_eigenvalues().iter().fold(0.0, |r, z| r.max(z.norm()))
}

#[test]
fn matches_reference_solver_on_fixtures() {
    for case in fixture().cases {
        let p = design(case.points.clone(), case.degree);
        let got = p.achieved_eps();
        assert!((got - case.objective).abs() <= 1e-8, "{}: {got} vs {}", case.name, case.objective);
    }
}

#[test]
fn builder_reproduces_fixture_tableau() {
    let fx = fixture();
    let case = fx.cases.iter().find(|c| c.tableau.is_some()).unwrap();
    let t = case.tableau.as_ref().unwrap();
    let lo = case.points.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = case.points.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let basis = ChebyshevBasis::for_interval(lo, hi).unwrap();
    let lp = minimax_lp(&case.points, case.degree, QBasis::Chebyshev(basis));
    assert_eq!(lp.objective, t.c);
    assert_eq!(lp.rhs, t.rhs);
    for (a, b) in lp.rows.iter().zip(&t.rows) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= 1e-12, "{x} vs {y}");
        }
    }
    let sol = solve_lp(&lp).unwrap();
    assert!((sol.objective - case.objective).abs() <= 1e-8);
    assert!(sol.duality_gap <= 1e-9 && sol.complementarity <= 1e-9);
}

#[test]
fn two_symmetric_points() {
    // with p(1) = 1 a line through ±c has equal deviation ε = c
    for c in [0.1, 0.3, 0.7] {
        let p = design(vec![-c, c], 1);
        assert!((p.achieved_eps() - c).abs() < 1e-12, "c = {c}");
        assert!((p.evaluate(c).abs() - c).abs() < 1e-12);
    }
}

#[test]
fn single_point_interpolates() {
    let p = design(vec![0.0], 1);
    assert!(p.achieved_eps().abs() < 1e-14);
    for x in [-0.5, 0.0, 0.5, 1.0] {
        assert!((p.evaluate(x) - x).abs() < 1e-14);
    }
}

#[test]
fn newton_examples() {
    let p = newton_baseline_filter(&spectrum(&[1.0, 0.5]), 1).unwrap();
    for x in [-1.0, 0.0, 0.5, 1.0] {
        assert!((p.evaluate(x) - (2.0 * x - 1.0)).abs() < 1e-12);
    }
    let s = spectrum(&[1.0, 0.6, -0.6]);
    let p = newton_baseline_filter(&s, 2).unwrap();
    for x in [-1.0, -0.6, 0.0, 0.3, 1.0] {
        assert!((p.evaluate(x) - (x * x - 0.36) / 0.64).abs() < 1e-12);
    }
    assert!(predicted_spectral_radius(&p, &s).unwrap() < 1e-12);
    assert!(newton_baseline_filter(&s, 3).is_err());
}

#[test]
fn newton_on_lattice_sbm_mean_matrix_is_finite_time() {
    let params = LatticeSbmParams::new(vec![2, 3], 10, 0.15, vec![0.09, 0.06]).unwrap();
    let mean = GraphModel::LatticeSbm(params).mean_adjacency();
    let n = mean.nrows();
    let deg: Vec<f64> = (0..n).map(|i| mean.row(i).sum()).collect();
    // W = D⁻¹Ā (α = 1) is similar to S = D^{-1/2} Ā D^{-1/2}, and J_d to the
    // orthogonal projector onto √d; the dense check runs in that frame
    let sym = DMatrix::from_fn(n, n, |i, j| mean[(i, j)] / (deg[i] * deg[j]).sqrt());
    let s = Spectrum::new(sym.symmetric_eigenvalues().iter().copied().collect(), MatrixKind::Weight).unwrap();

    let mut distinct: Vec<f64> = Vec::new();
    for &x in s.values() {
        if (x - 1.0).abs() > 1e-8 && distinct.iter().all(|d| (d - x).abs() > 1e-6) {
            distinct.push(x);
        }
    }
    let k = distinct.len();
    assert!(k <= 7, "{k} distinct eigenvalues");
    let total: f64 = deg.iter().sum();
    let j = DMatrix::from_fn(n, n, |i, k| (deg[i] * deg[k]).sqrt() / total);
    for d in 1..=k {
        let p = newton_baseline_filter(&s, d).unwrap();
        let rho = predicted_spectral_radius(&p, &s).unwrap();
        let dense = (matrix_polynomial(&p, &sym) - &j).symmetric_eigenvalues().amax();
        assert!((rho - dense).abs() < 1e-8, "d = {d}: {rho} vs {dense}");
        if d == k {
            assert!(rho < 1e-9, "d = {d}: ρ = {rho}");
        } else {
            assert!(rho > 1e-6);
        }
    }
    assert!(newton_baseline_filter(&s, k + 1).is_err());
}

#[test]
fn oracle_examples() {
    let p = oracle_minimax_filter(&spectrum(&[1.0, 0.0]), 0.05, 1).unwrap();
    assert!(p.achieved_eps().abs() < 1e-14);
    assert!((p.evaluate(0.7) - 0.7).abs() < 1e-14);

    // d + 1 clustered eigenvalues versus a smoothed superset around them
    let cluster = [0.3, 0.31, 0.33];
    let mut values = cluster.to_vec();
    values.push(1.0);
    let oracle = oracle_minimax_filter(&spectrum(&values), 0.05, 2).unwrap();
    let direct = design(cluster.to_vec(), 2);
    assert!((oracle.achieved_eps() - direct.achieved_eps()).abs() < 1e-12);
    let smooth: Vec<f64> = (0..400).map(|i| 0.28 + 0.07 * i as f64 / 399.0).chain(cluster).collect();
    assert!(oracle.achieved_eps() <= design(smooth, 2).achieved_eps() + 1e-12);

    assert!(oracle_minimax_filter(&spectrum(&[1.0, 0.99]), 0.05, 1).is_err());
}

#[test]
fn predicted_radius_matches_dense_eigensolve() {
    let params = ErdosRenyiParams::new(200, 0.1).unwrap();
    let g = (0..).map(|s| generate_erdos_renyi(&params, s)).find(is_connected).unwrap();
    for (scheme, alpha) in [(Scheme::Laplacian, 1.0 / 20.0), (Scheme::RowNormalizedLaplacian, 1.0)] {
        let wm = scheme.build(&g, alpha).unwrap();
        let s = wm.spectrum().unwrap();
        let j = consensus_projector(wm.ell()).unwrap().to_dense();
        let w = wm.to_dense();
        for d in [1, 3, 5] {
            for p in [oracle_minimax_filter(&s, 0.05, d).unwrap(), newton_baseline_filter(&s, d).unwrap()] {
                let rho = predicted_spectral_radius(&p, &s).unwrap();
                let dense = radius(&(matrix_polynomial(&p, &w) - &j));
                assert!((rho - dense).abs() < 1e-8, "{scheme:?} d = {d}: {rho} vs {dense}");
            }
        }
    }
}

#[test]
fn radius_examples() {
    let s = spectrum(&[1.0, 0.5, -0.2]);
    assert_eq!(predicted_spectral_radius(&FilterPolynomial::plain(), &s).unwrap(), 0.5);
    assert!(predicted_spectral_radius(&FilterPolynomial::plain(), &spectrum(&[1.0, 1.0, 0.2])).is_err());
    assert!(predicted_spectral_radius(&FilterPolynomial::plain(), &spectrum(&[0.9, 0.2])).is_err());
}

#[test]
fn rate_arithmetic() {
    assert!((per_iteration_rate((-1.0f64).exp(), 1) + 1.0).abs() < 1e-15);
    assert!((per_iteration_rate((-2.0f64).exp(), 2) + 1.0).abs() < 1e-15);
    assert!((per_iteration_rate(0.1, 4) + 0.5756462732485114).abs() < 1e-15);
    assert_eq!(per_iteration_rate(0.0, 3), f64::NEG_INFINITY);
}

fn sorted_points() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.9f64..0.9, 2..60).prop_map(|mut v| {
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn monomial_and_chebyshev_bases_agree(lo in -0.9f64..0.0, width in 0.3f64..1.2, d in 1usize..=6) {
        let hi = (lo + width).min(0.95);
        let points: Vec<f64> = (0..120).map(|i| lo + (hi - lo) * i as f64 / 119.0).collect();
        let cheb = design(points.clone(), d).achieved_eps();
        let mono = minimax_eps_monomial_basis(&points, d).unwrap();
        prop_assert!((cheb - mono).abs() <= 1e-6, "{cheb} vs {mono}");
    }

    #[test]
    fn adding_points_never_lowers_eps(base in sorted_points(), extra in prop::collection::vec(-0.9f64..0.9, 1..30), d in 1usize..=5) {
        let small = design(base.clone(), d).achieved_eps();
        let mut superset = base;
        superset.extend(extra);
        let large = design(superset, d).achieved_eps();
        prop_assert!(large >= small - 1e-9, "{large} < {small}");
    }

    #[test]
    fn design_guarantee_transfers(points in sorted_points(), pick in prop::collection::vec(any::<prop::sample::Index>(), 1..20), d in 1usize..=6) {
        let p = design(points.clone(), d);
        let mut values: Vec<f64> = pick.iter().map(|i| points[i.index(points.len())]).collect();
        values.push(1.0);
        let rho = predicted_spectral_radius(&p, &spectrum(&values)).unwrap();
        prop_assert!(rho <= p.achieved_eps() + 1e-9);
    }

    #[test]
    fn representations_agree(points in sorted_points(), d in 1usize..=10, probes in prop::collection::vec(0.0f64..1.0, 100)) {
        let p = design(points, d);
        let m = p.p_monomial().unwrap();
        let one: f64 = m.iter().sum();
        prop_assert!((one - 1.0).abs() <= 1e-10, "p(1) = {one}");
        let b = p.basis();
        let (lo, hi) = (b.center() - b.half_width(), b.center() + b.half_width());
        for t in probes {
            let x = lo + (hi - lo) * t;
            let q = b.clenshaw(p.q_coeffs(), x);
            let via_q = 1.0 + (1.0 - x) * q;
            let mono = p.evaluate_monomial(x).unwrap();
            prop_assert!((via_q - mono).abs() <= 1e-9, "x = {x}: {via_q} vs {mono}");
        }
    }
}
