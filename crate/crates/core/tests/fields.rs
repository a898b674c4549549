use std::f64::consts::PI;

use aotomo::fields::io::{read_field, write_field, StoredField};
use aotomo::fields::linalg::BandCholesky;
use aotomo::fields::stencil::natural_stiffness_apply;
use aotomo::fields::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid(n: usize) -> Grid {
    Grid::new(n).unwrap()
}

fn interior_max(grid: Grid, f: impl Fn(usize, usize) -> f64) -> f64 {
    let n = grid.n();
    let mut m: f64 = 0.0;
    for j in 1..n - 1 {
        for i in 1..n - 1 {
            m = m.max(f(i, j).abs());
        }
    }
    m
}

#[test]
fn grid_rejects_coarse() {
    assert!(Grid::new(9).is_err());
    let g = grid(17);
    assert_eq!(g.len(), 289);
    assert!((g.h() - 1.0 / 16.0).abs() < 1e-15);
    assert_eq!(g.ij(g.idx(3, 5)), (3, 5));
}

#[test]
fn gradient_of_constant_and_linear() {
    let g = grid(33);
    let c = gradient(&ScalarField::constant(g, 3.0));
    assert_eq!(c.max_norm(), 0.0);
    let lin = gradient(&ScalarField::from_fn(g, |x, _| x));
    assert!(interior_max(g, |i, j| lin.x()[g.idx(i, j)] - 1.0) <= 1e-12);
    assert!(interior_max(g, |i, j| lin.y()[g.idx(i, j)]) <= 1e-12);
}

#[test]
fn gradient_exact_for_quadratics() {
    let g = grid(33);
    let d = gradient(&ScalarField::from_fn(g, |x, _| x * x));
    assert!(interior_max(g, |i, j| d.x()[g.idx(i, j)] - 2.0 * g.coord(i, j)[0]) <= 1e-12);
}

#[test]
fn divergence_of_linear_fields() {
    let g = grid(33);
    let one = divergence(&VectorField::from_fn(g, |_, _| [1.0, 1.0]));
    assert!(one.max_abs() <= 1e-12);
    let two = divergence(&VectorField::from_fn(g, |x, y| [x, y]));
    assert!(interior_max(g, |i, j| two.values()[g.idx(i, j)] - 2.0) <= 1e-12);
}

#[test]
fn div_grad_matches_laplacian() {
    let g = grid(65);
    let f = ScalarField::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
    let a = divergence(&gradient(&f));
    let b = laplacian5(&f);
    let n = g.n();
    let (mut num, mut den) = (0.0, 0.0);
    for j in 2..n - 2 {
        for i in 2..n - 2 {
            let k = g.idx(i, j);
            num += (a.values()[k] - b.values()[k]).powi(2);
            den += b.values()[k].powi(2);
        }
    }
    let rel = (num / den).sqrt();
    assert!(rel <= 2.0 * g.h().powi(2) * PI.powi(4), "{rel}");
}

#[test]
fn integration_exact_for_linears() {
    let g = grid(17);
    assert!((integrate(&ScalarField::constant(g, 1.0), None) - 1.0).abs() < 1e-12);
    assert_eq!(integrate(&ScalarField::zeros(g), None), 0.0);
    assert!((integrate(&ScalarField::from_fn(g, |x, y| x + y), None) - 1.0).abs() < 1e-12);
}

#[test]
fn norms() {
    let g = grid(65);
    let z = ScalarField::zeros(g);
    assert_eq!(norm_l2(&z), 0.0);
    assert_eq!(norm_l4(&z), 0.0);
    assert_eq!(h1_seminorm(&z), 0.0);
    let one = ScalarField::constant(g, 1.0);
    assert!((norm_l2(&one) - 1.0).abs() < 1e-12);
    assert!((norm_l4(&one) - 1.0).abs() < 1e-12);
    assert_eq!(h1_seminorm(&one), 0.0);
    let s = ScalarField::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin());
    assert!((norm_l2(&s) - 0.5).abs() / 0.5 <= 0.01);
}

#[test]
fn gradient_divergence_are_adjoint() {
    let g = grid(33);
    let bump = |x: f64, y: f64| (x * (1.0 - x) * y * (1.0 - y)).powi(2);
    let f = ScalarField::from_fn(g, |x, y| bump(x, y) * (3.0 * x + y).sin());
    let v = VectorField::from_fn(g, |x, y| [bump(x, y) * (2.0 * y).cos(), bump(x, y) * x]);
    let lhs = inner_vector(&gradient(&f), &v);
    let rhs = -inner(&f, &divergence(&v));
    assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()), "{lhs} {rhs}");
}

fn manufactured_dirichlet_error(n: usize) -> f64 {
    let g = grid(n);
    let rhs = ScalarField::from_fn(g, |x, y| 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin());
    let u = poisson_dirichlet(&rhs).unwrap();
    u.sub(&ScalarField::from_fn(g, |x, y| (PI * x).sin() * (PI * y).sin())).max_abs()
}

fn manufactured_neumann_error(n: usize) -> f64 {
    let g = grid(n);
    let mut rhs = ScalarField::from_fn(g, |x, _| (PI * x).cos());
    subtract_mean(&mut rhs);
    let mut f = poisson_neumann(&rhs).unwrap();
    subtract_mean(&mut f);
    let mut exact = ScalarField::from_fn(g, |x, _| -(PI * x).cos() / (PI * PI));
    subtract_mean(&mut exact);
    f.sub(&exact).max_abs()
}

#[test]
fn poisson_zero_rhs() {
    let g = grid(17);
    assert_eq!(poisson_dirichlet(&ScalarField::zeros(g)).unwrap().max_abs(), 0.0);
    assert_eq!(poisson_neumann(&ScalarField::zeros(g)).unwrap().max_abs(), 0.0);
}

#[test]
fn poisson_dirichlet_second_order() {
    let e: Vec<f64> = [33, 65, 129].iter().map(|&n| manufactured_dirichlet_error(n)).collect();
    for w in e.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.9, "{e:?}");
    }
    // error constant: e = C h^2, frozen from the n = 33 run
    let c = e[0] * 32.0 * 32.0;
    assert!(c < 1.0, "{c}");
}

#[test]
fn poisson_neumann_second_order() {
    let e: Vec<f64> = [33, 65, 129].iter().map(|&n| manufactured_neumann_error(n)).collect();
    for w in e.windows(2) {
        assert!((w[0] / w[1]).log2() >= 1.9, "{e:?}");
    }
}

#[test]
fn poisson_dirichlet_symmetry() {
    let g = grid(33);
    let r1 = ScalarField::from_fn(g, |x, y| (x * y).exp() + x * x + y * y);
    let u = poisson_dirichlet(&r1).unwrap();
    let n = g.n();
    let m = interior_max(g, |i, j| u.values()[g.idx(i, j)] - u.values()[g.idx(j, i)]);
    assert!(m <= 1e-10);
    let r2 = ScalarField::from_fn(g, |x, y| (5.0 * x).sin() * y);
    let u2 = poisson_dirichlet(&r2).unwrap();
    let a = inner(&u, &r2);
    let b = inner(&u2, &r1);
    assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0), "{a} {b} {n}");
}

#[test]
fn neumann_gauge_is_initial_state_independent() {
    let g = grid(33);
    let mut rhs = ScalarField::from_fn(g, |x, y| x * y.sin());
    subtract_mean(&mut rhs);
    let mut a = poisson_neumann(&rhs).unwrap();
    let mut b = poisson_neumann_from(&rhs, &ScalarField::from_fn(g, |x, y| 3.0 + x - y)).unwrap();
    subtract_mean(&mut a);
    subtract_mean(&mut b);
    assert!(a.sub(&b).max_abs() <= 1e-10);
}

#[test]
fn band_cholesky_matches_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (n, bw) = (40, 5);
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for d in 1..=bw.min(i) {
            let v: f64 = rng.gen_range(-1.0..1.0);
            a[(i, i - d)] = v;
            a[(i - d, i)] = v;
        }
        a[(i, i)] = 2.0 * bw as f64 + 1.0;
    }
    let chol = BandCholesky::factor(n, bw, |i, d| a[(i, i - d)]).unwrap();
    let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut x = b.clone();
    chol.solve_in_place(&mut x);
    let exact = a.lu().solve(&DVector::from_vec(b)).unwrap();
    for (p, q) in x.iter().zip(exact.iter()) {
        assert!((p - q).abs() < 1e-12);
    }
}

#[test]
fn band_cholesky_rejects_indefinite() {
    assert!(BandCholesky::factor(3, 1, |_, d| if d == 0 { 1.0 } else { 2.0 }).is_err());
}

#[test]
fn field_file_roundtrip() {
    let g = grid(17);
    let fields = [
        StoredField::Scalar(ScalarField::from_fn(g, |x, y| x - 2.0 * y)),
        StoredField::Vector(VectorField::from_fn(g, |x, y| [x, y * y])),
        StoredField::Trace(BoundaryTrace::from_fn(g, |x, y| x + y)),
    ];
    for f in fields {
        let mut buf = Vec::new();
        write_field(&mut buf, &f).unwrap();
        assert_eq!(&buf[..4], b"AORF");
        assert_eq!(read_field(buf.as_slice()).unwrap(), f);
    }
    assert!(read_field(&b"NOPE0000"[..]).is_err());
}

#[test]
fn field_length_checked() {
    assert!(ScalarField::new(grid(17), vec![0.0; 10]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn stiffness_is_symmetric_psd(seed in any::<u64>()) {
        let g = grid(17);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut kx = vec![0.0; g.len()];
        let mut ky = vec![0.0; g.len()];
        natural_stiffness_apply(g, &x, &mut kx);
        natural_stiffness_apply(g, &y, &mut ky);
        let a: f64 = kx.iter().zip(&y).map(|(p, q)| p * q).sum();
        let b: f64 = ky.iter().zip(&x).map(|(p, q)| p * q).sum();
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        let e: f64 = kx.iter().zip(&x).map(|(p, q)| p * q).sum();
        prop_assert!(e >= -1e-12);
    }

    #[test]
    fn dirichlet_solve_is_linear(c in -3.0f64..3.0, k in 1.0f64..6.0) {
        let g = grid(17);
        let r1 = ScalarField::from_fn(g, |x, y| (k * x).sin() + y);
        let r2 = ScalarField::from_fn(g, |x, y| x * y);
        let lhs = poisson_dirichlet(&r1.add(&r2.scale(c))).unwrap();
        let rhs = poisson_dirichlet(&r1).unwrap().add(&poisson_dirichlet(&r2).unwrap().scale(c));
        prop_assert!(lhs.sub(&rhs).max_abs() <= 1e-9 * (1.0 + rhs.max_abs()));
    }
}
