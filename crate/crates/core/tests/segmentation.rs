use std::f64::consts::{PI, TAU};

use aotomo::diffusion::solve_t;
use aotomo::fields::{BoundaryTrace, Grid, ScalarField};
use aotomo::helmholtz::ground_truth_psi;
use aotomo::phantom::{Inclusion, Phantom, Shape};
use aotomo::segmentation::*;
use proptest::prelude::*;

fn flat(disks: &[([f64; 2], f64, f64)]) -> Phantom {
    let inc = disks
        .iter()
        .map(|&(center, radius, base)| Inclusion {
            shape: Shape::Disk { center, radius },
            base,
            amplitude: 0.0,
        })
        .collect();
    Phantom::new(1.0, 0.5, 2.0, 0.15, inc).unwrap()
}

fn circle(c: [f64; 2], rho: f64) -> Vec<[f64; 2]> {
    (0..720)
        .map(|k| {
            let t = k as f64 / 720.0 * TAU;
            [c[0] + rho * t.cos(), c[1] + rho * t.sin()]
        })
        .collect()
}

/// Contrast of the phantom standing in for a potential with the same jumps.
fn synthetic_psi(p: &Phantom, g: Grid) -> ScalarField {
    p.sample(g).map(|v| v - p.a0)
}

#[test]
fn constant_potential_has_no_edges() {
    let g = Grid::new(33).unwrap();
    for c in [0.0, 2.5] {
        let map = detect_edges(&ScalarField::constant(g, c), ThresholdMode::Otsu).unwrap();
        assert_eq!(map.count(), 0);
        assert!(extract_inclusions(&map).is_empty());
    }
    let mut bad = ScalarField::zeros(g);
    bad.values_mut()[5] = f64::NAN;
    assert!(detect_edges(&bad, ThresholdMode::Otsu).is_err());
}

#[test]
fn step_edge_lies_on_the_line() {
    let g = Grid::new(65).unwrap();
    let x0 = 0.5 + 0.3 * g.h();
    let psi = ScalarField::from_fn(g, |x, _| if x > x0 { 1.0 } else { 0.0 });
    let map = detect_edges(&psi, ThresholdMode::Otsu).unwrap();
    let n = g.n();
    for j in 0..n {
        let row: Vec<usize> = (0..n).filter(|&i| map.edges[g.idx(i, j)]).collect();
        assert!(!row.is_empty(), "row {j}");
        for i in row {
            let x = g.point(g.idx(i, j))[0];
            assert!((x - x0).abs() <= 1.5 * g.h(), "{i} {j}");
        }
    }
}

#[test]
fn absolute_threshold_is_used_verbatim() {
    let g = Grid::new(33).unwrap();
    let psi = ScalarField::from_fn(g, |x, _| x);
    let s = edge_strength(&psi).max_abs();
    assert_eq!(detect_edges(&psi, ThresholdMode::Absolute(2.0 * s)).unwrap().count(), 0);
    assert_eq!(detect_edges(&psi, ThresholdMode::Absolute(0.0)).unwrap().count(), g.len());
}

#[test]
fn single_disk_from_the_potential() {
    let g = Grid::new(129).unwrap();
    let (c, rho) = ([0.47, 0.53], 0.2);
    let p = flat(&[(c, rho, 1.6)]);
    let phi = solve_t(&p.sample(g), &BoundaryTrace::constant(g, 1.0), 0.1).unwrap().phi;
    let psi = ground_truth_psi(&p, &phi).unwrap().psi;
    let map = detect_edges(&psi, ThresholdMode::Otsu).unwrap();
    let edge_pts: Vec<[f64; 2]> = (0..g.len()).filter(|&k| map.edges[k]).map(|k| g.point(k)).collect();
    let truth = circle(c, rho);
    let h = g.h();
    assert!(hausdorff(&edge_pts, &truth) <= 2.0 * h);
    let masks = extract_inclusions(&map);
    assert_eq!(masks.len(), 1);
    assert!(hausdorff(&boundary_points(&masks[0]), &truth) <= 2.0 * h);
    let area = masks[0].measure();
    assert!((area - PI * rho * rho).abs() <= 0.1 * PI * rho * rho, "{area}");
}

#[test]
fn two_disks_give_two_masks() {
    let g = Grid::new(129).unwrap();
    let disks = [([0.33, 0.36], 0.12, 1.5), ([0.65, 0.63], 0.13, 0.7)];
    let p = flat(&disks);
    let map = detect_edges(&synthetic_psi(&p, g), ThresholdMode::Otsu).unwrap();
    let masks = extract_inclusions(&map);
    assert_eq!(masks.len(), 2);
    for (c, _, _) in disks {
        let best = masks
            .iter()
            .map(|m| {
                let q = m.centroid();
                (q[0] - c[0]).hypot(q[1] - c[1])
            })
            .fold(f64::INFINITY, f64::min);
        assert!(best <= 2.0 * g.h(), "{best}");
    }
    for k in 0..g.len() {
        assert!(!(masks[0].nodes[k] && masks[1].nodes[k]));
    }
}

#[test]
fn specks_are_discarded() {
    let g = Grid::new(65).unwrap();
    let p = flat(&[([0.5, 0.5], 0.02, 1.6)]);
    let map = detect_edges(&synthetic_psi(&p, g), ThresholdMode::Otsu).unwrap();
    assert!(extract_inclusions(&map).is_empty());
}

#[test]
fn clipping_keeps_masks_inside_d() {
    let g = Grid::new(65).unwrap();
    let p = flat(&[([0.5, 0.5], 0.1, 1.6)]);
    // a square that pokes out of D on the left
    let big: Vec<bool> = (0..g.len())
        .map(|k| {
            let [x, y] = g.point(k);
            (0.05..0.4).contains(&x) && (0.3..0.7).contains(&y)
        })
        .collect();
    let small: Vec<bool> = (0..g.len())
        .map(|k| {
            let [x, y] = g.point(k);
            (0.35..0.6).contains(&x) && (0.4..0.6).contains(&y)
        })
        .collect();
    let masks = vec![
        InclusionMask { grid: g, label: 0, nodes: big },
        InclusionMask { grid: g, label: 1, nodes: small },
    ];
    let (clipped, events) = clip_to_d(masks, &p);
    assert_eq!(clipped.len(), 2);
    assert!(events.iter().any(|e| e.label == 0 && e.removed_nodes > 0));
    assert!(events.iter().any(|e| e.label == 1));
    let d = p.d_mask(g);
    for k in 0..g.len() {
        assert!(!(clipped[0].nodes[k] && clipped[1].nodes[k]));
        for m in &clipped {
            assert!(!m.nodes[k] || d[k]);
        }
    }
    let (none, ev) = clip_to_d(vec![], &p);
    assert!(none.is_empty() && ev.is_empty());
}

#[test]
fn mask_pgm_roundtrip() {
    let g = Grid::new(33).unwrap();
    let nodes: Vec<bool> = (0..g.len()).map(|k| g.ij(k).0 > 3 && g.ij(k).1 < 20).collect();
    let m = InclusionMask { grid: g, label: 4, nodes };
    let mut buf = Vec::new();
    write_mask_pgm(&mut buf, &m).unwrap();
    assert!(buf.starts_with(b"P5\n33 33\n255\n"));
    let back = read_mask_pgm(buf.as_slice(), 4).unwrap();
    assert_eq!(back, m);
    assert!(read_pgm(&b"P2\n2 2\n255\n"[..]).is_err());
    assert!(read_pgm(&b"P5\n33 33\n255\n\x00"[..]).is_err());
}

#[test]
fn pgm_maps_extremes() {
    let g = Grid::new(17).unwrap();
    let f = ScalarField::from_fn(g, |x, y| 3.0 * x - y);
    let mut buf = Vec::new();
    write_pgm(&mut buf, &f).unwrap();
    let img = read_pgm(buf.as_slice()).unwrap();
    let n = g.n();
    assert_eq!(img.at(n - 1, 0), 255.0);
    assert_eq!(img.at(0, n - 1), 0.0);
}

#[test]
fn hausdorff_of_offset_sets() {
    let a = [[0.0, 0.0], [1.0, 0.0]];
    let b = [[0.0, 0.5], [1.0, 0.0], [2.0, 0.0]];
    assert!((hausdorff(&a, &b) - 1.0).abs() < 1e-15);
    assert_eq!(hausdorff(&a, &a), 0.0);
    assert_eq!(hausdorff(&a, &[]), f64::INFINITY);
}

#[test]
fn otsu_splits_two_clusters() {
    let mut v: Vec<f64> = (0..100).map(|k| 0.01 * (k % 7) as f64).collect();
    v.extend((0..30).map(|k| 5.0 + 0.01 * (k % 5) as f64));
    let t = otsu_threshold(&v).unwrap();
    assert!(t > 0.06 && t < 5.0, "{t}");
    assert!(otsu_threshold(&[1.0; 4]).is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn masks_are_disjoint_and_in_d(
        x0 in 0.3..0.4f64, y0 in 0.3..0.45f64, r0 in 0.05..0.09f64,
        x1 in 0.6..0.7f64, y1 in 0.55..0.7f64, r1 in 0.05..0.09f64,
    ) {
        let g = Grid::new(65).unwrap();
        let p = flat(&[([x0, y0], r0, 1.5), ([x1, y1], r1, 0.7)]);
        let map = detect_edges(&synthetic_psi(&p, g), ThresholdMode::Otsu).unwrap();
        let (masks, _) = clip_to_d(extract_inclusions(&map), &p);
        let d = p.d_mask(g);
        let mut owner = vec![false; g.len()];
        for m in &masks {
            for k in 0..g.len() {
                if m.nodes[k] {
                    prop_assert!(d[k] && !owner[k]);
                    owner[k] = true;
                }
            }
        }
    }
}
