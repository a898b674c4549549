use aotomo::diffusion::solve_t;
use aotomo::fields::{BoundaryTrace, Grid, ScalarField};
use aotomo::helmholtz::*;
use aotomo::phantom::{presets, Inclusion, Phantom, Shape};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const L: f64 = 0.1;

fn phi_for(p: &Phantom, g: Grid) -> ScalarField {
    solve_t(&p.sample(g), &BoundaryTrace::constant(g, 1.0), L).unwrap().phi
}

fn flat_disk(center: [f64; 2], radius: f64) -> Phantom {
    let disk = Inclusion {
        shape: Shape::Disk { center, radius },
        base: 1.6,
        amplitude: 0.0,
    };
    Phantom::new(1.0, 0.5, 2.0, 0.15, vec![disk]).unwrap()
}

#[test]
fn empty_phantom_has_zero_potential() {
    let g = Grid::new(65).unwrap();
    let p = presets::empty();
    let psi = ground_truth_psi(&p, &phi_for(&p, g)).unwrap();
    assert!(psi.psi.max_abs() <= 1e-10);
    assert_eq!(psi.provenance, Provenance::GroundTruth);
}

#[test]
fn remainder_is_divergence_free() {
    let g = Grid::new(65).unwrap();
    let p = presets::single_disk();
    let f = WeakVectorFunctional::new(&p, &phi_for(&p, g));
    let psi = decompose(&f).unwrap().psi.psi;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let c = [rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7)];
        let rho = rng.gen_range(0.1..0.25);
        let (kx, ky) = (rng.gen_range(0.0..6.0), rng.gen_range(0.0..6.0));
        let v = ScalarField::from_fn(g, |x, y| {
            let s = ((x - c[0]).powi(2) + (y - c[1]).powi(2)) / (rho * rho);
            if s < 1.0 {
                (1.0 - s).powi(4) * (kx * x).cos() * (ky * y).sin()
            } else {
                0.0
            }
        });
        let lhs = f.eval(&aotomo::fields::gradient(&v));
        let res = orthogonality_residual(&f, &psi, &v);
        assert!(res.abs() <= 1e-6 * lhs.abs().max(1e-3), "{res} {lhs}");
    }
}

#[test]
fn potential_jumps_at_the_rim() {
    let g = Grid::new(129).unwrap();
    let (c, rho) = ([0.47, 0.52], 0.2);
    let p = flat_disk(c, rho);
    let psi = ground_truth_psi(&p, &phi_for(&p, g)).unwrap().psi;
    let h = g.h();
    let mut gap = f64::INFINITY;
    for k in 0..64 {
        let t = k as f64 / 64.0 * std::f64::consts::TAU;
        let at = |r: f64| psi.interpolate(c[0] + r * t.cos(), c[1] + r * t.sin());
        gap = gap.min((at(rho - 2.0 * h) - at(rho + 2.0 * h)).abs());
    }
    // largest neighbour difference away from the rim
    let mut osc: f64 = 0.0;
    let n = g.n();
    for j in 1..n - 1 {
        for i in 1..n - 2 {
            let a = g.point(g.idx(i, j));
            let b = g.point(g.idx(i + 1, j));
            let far = |q: [f64; 2]| ((q[0] - c[0]).hypot(q[1] - c[1]) - rho).abs() > 3.0 * h;
            if far(a) && far(b) {
                osc = osc.max((psi.at(i + 1, j) - psi.at(i, j)).abs());
            }
        }
    }
    assert!(gap >= 10.0 * osc, "{gap} {osc}");
}

#[test]
fn ground_truth_matches_decompose() {
    let g = Grid::new(33).unwrap();
    let p = presets::two_disks();
    let phi = phi_for(&p, g);
    let a = ground_truth_psi(&p, &phi).unwrap().psi;
    let b = decompose(&WeakVectorFunctional::new(&p, &phi)).unwrap().psi.psi;
    assert_eq!(a.values(), b.values());
}

#[test]
fn potential_scales_with_phi_squared() {
    let g = Grid::new(65).unwrap();
    let p = presets::ellipse();
    let phi = phi_for(&p, g);
    let base = ground_truth_psi(&p, &phi).unwrap().psi;
    let c = 1.7;
    let scaled = ground_truth_psi(&p, &phi.map(|v| c * v)).unwrap().psi;
    let diff = scaled.sub(&base.map(|v| c * c * v)).max_abs();
    assert!(diff <= 1e-10 * base.max_abs().max(1.0), "{diff}");
}

#[test]
fn centered_disk_gives_symmetric_potential() {
    let g = Grid::new(65).unwrap();
    let p = flat_disk([0.5, 0.5], 0.2);
    let psi = ground_truth_psi(&p, &phi_for(&p, g)).unwrap().psi;
    let n = g.n();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            worst = worst.max((psi.at(i, j) - psi.at(j, n - 1 - i)).abs());
            worst = worst.max((psi.at(i, j) - psi.at(n - 1 - i, j)).abs());
        }
    }
    assert!(worst <= 1e-6 * psi.max_abs(), "{worst}");
}

#[test]
fn decomposition_is_reproducible() {
    let g = Grid::new(65).unwrap();
    let p = presets::two_disks();
    let f = WeakVectorFunctional::new(&p, &phi_for(&p, g));
    let a = decompose(&f).unwrap().psi.psi;
    let b = decompose(&f).unwrap().psi.psi;
    assert!(a.sub(&b).max_abs() <= 1e-10);
    let mean = aotomo::fields::integrate(&a, None);
    assert!(mean.abs() <= 1e-12);
}

#[test]
fn free_space_potential_agrees_inside() {
    // the two potentials differ by a harmonic field fixed by the boundary
    // condition; the jump across the rim is the same
    let g = Grid::new(129).unwrap();
    let (c, rho) = ([0.5, 0.5], 0.2);
    let p = flat_disk(c, rho);
    let f = WeakVectorFunctional::new(&p, &phi_for(&p, g));
    let psi = decompose(&f).unwrap().psi.psi;
    let free = FreeSpacePotential::new(&f);
    let h = g.h();
    let (ri, ro) = (rho - 3.0 * h, rho + 3.0 * h);
    let jump_box = psi.interpolate(c[0] + ri, c[1]) - psi.interpolate(c[0] + ro, c[1]);
    let jump_free = free.value(c[0] + ri, c[1]) - free.value(c[0] + ro, c[1]);
    assert!((jump_box - jump_free).abs() <= 0.05 * jump_box.abs(), "{jump_box} {jump_free}");
}
