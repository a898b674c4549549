use aotomo::fields::{Grid, ScalarField, VectorField};
use aotomo::phantom::{presets, Inclusion, Phantom, Shape};
use proptest::prelude::*;

fn disk(center: [f64; 2], radius: f64, base: f64, amplitude: f64) -> Inclusion {
    Inclusion {
        shape: Shape::Disk { center, radius },
        base,
        amplitude,
    }
}

fn phantom(inclusions: Vec<Inclusion>) -> aotomo::Result<Phantom> {
    Phantom::new(1.0, 0.5, 3.0, 0.15, inclusions)
}

#[test]
fn background_outside_inclusions() {
    let p = presets::single_disk();
    assert_eq!(p.value(0.05, 0.05), p.a0);
    assert_eq!(p.value(0.9, 0.2), p.a0);
}

#[test]
fn flat_profile_gives_base() {
    let p = phantom(vec![disk([0.5, 0.5], 0.2, 1.7, 0.0)]).unwrap();
    assert_eq!(p.value(0.5, 0.5), 1.7);
}

#[test]
fn bump_profile_values() {
    let p = phantom(vec![disk([0.5, 0.5], 0.2, 2.0, 0.5)]).unwrap();
    assert!((p.value(0.5, 0.5) - 2.5).abs() < 1e-15);
    let near_rim = p.value(0.5 + 0.2 * (1.0 - 1e-6), 0.5);
    assert!((near_rim - 2.0).abs() < 1e-12);
    assert_eq!(p.value(0.5 + 0.2 * (1.0 + 1e-6), 0.5), 1.0);
}

#[test]
fn zero_displacement_is_sampling() {
    let g = Grid::new(33).unwrap();
    let p = presets::two_disks();
    assert_eq!(p.sample_displaced(g, &VectorField::zeros(g)), p.sample(g));
}

#[test]
fn empty_phantom_is_constant_under_displacement() {
    let g = Grid::new(33).unwrap();
    let p = presets::empty();
    let d = VectorField::from_fn(g, |x, y| [0.1 * (7.0 * y).sin(), 0.05 * x]);
    assert_eq!(p.sample_displaced(g, &d), ScalarField::constant(g, p.a0));
}

#[test]
fn constant_displacement_is_translation() {
    let g = Grid::new(65).unwrap();
    let p = presets::single_disk();
    let delta = [0.01, 0.0];
    let d = VectorField::from_fn(g, |_, _| delta);
    let moved = p.translated([-delta[0], -delta[1]]);
    let diff = p.sample_displaced(g, &d).sub(&moved.sample(g)).max_abs();
    assert!(diff <= 1e-12, "{diff}");
}

#[test]
fn h_condition_cases() {
    let p = phantom(vec![disk([0.5, 0.5], 0.2, 2.0, 0.0)]).unwrap();
    // shell far from the rim
    assert!(p.check_h_condition([-0.5, 0.5], 0.3, 0.02, 5f64.to_radians()));
    // concentric shell of the disk's own radius: tangent everywhere
    assert!(!p.check_h_condition([0.5, 0.5], 0.2, 0.02, 5f64.to_radians()));
    // distant source, wavefront cutting the disk across its middle
    assert!(p.check_h_condition([-0.5, 0.5], 1.0, 0.02, 5f64.to_radians()));
}

#[test]
fn validation_rejects_bad_phantoms() {
    assert!(phantom(vec![disk([0.4, 0.5], 0.1, 2.0, 0.0), disk([0.55, 0.5], 0.1, 2.0, 0.0)]).is_err());
    // touches the boundary of D = [0.15, 0.85]²
    assert!(phantom(vec![disk([0.3, 0.5], 0.15, 2.0, 0.0)]).is_err());
    assert!(phantom(vec![disk([0.5, 0.5], 0.1, 2.9, 0.5)]).is_err());
    assert!(Phantom::new(0.4, 0.5, 2.0, 0.15, vec![]).is_err());
    assert!(Phantom::new(1.0, 0.5, 2.0, 0.6, vec![]).is_err());
    assert!(phantom(vec![disk([0.3, 0.3], 0.1, 2.0, 0.2), disk([0.6, 0.6], 0.1, 0.7, 0.1)]).is_ok());
}

#[test]
fn json_roundtrip() {
    for name in ["empty", "disk", "two-disks", "ellipse"] {
        let p = presets::by_name(name).unwrap();
        let back = Phantom::from_json_str(&p.to_json_string().unwrap()).unwrap();
        assert_eq!(back, p);
    }
    assert!(presets::by_name("square").is_none());
    let bad = r#"{"a0":1,"lower":0.5,"upper":2,"D_margin":0.15,
        "inclusions":[{"shape":"square","params":[0.5,0.5,0.1],"base":1.5,"amplitude":0}]}"#;
    assert!(Phantom::from_json_str(bad).is_err());
}

#[test]
fn masks_are_disjoint_and_inside_d() {
    let g = Grid::new(65).unwrap();
    let p = presets::two_disks();
    let masks = p.inclusion_masks(g);
    let d = p.d_mask(g);
    for k in 0..g.len() {
        let owners = masks.iter().filter(|m| m[k]).count();
        assert!(owners <= 1);
        if owners == 1 {
            assert!(d[k]);
        }
    }
}

#[test]
fn ellipse_area() {
    let p = presets::ellipse();
    let Shape::Ellipse { a, b, .. } = p.inclusions[0].shape else {
        panic!("not an ellipse")
    };
    let area = p.inclusions[0].shape.area();
    assert!((area - std::f64::consts::PI * a * b).abs() < 1e-6);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn samples_respect_bounds(
        cx in 0.35f64..0.65, cy in 0.35f64..0.65, r in 0.05f64..0.18,
        base in 0.5f64..2.5, amp in -0.5f64..0.5,
    ) {
        let lower = 0.5;
        let upper = 3.0;
        let inc = disk([cx, cy], r, base, amp);
        let (lo, hi) = inc.value_range();
        prop_assume!(lo >= lower && hi <= upper);
        let p = Phantom::new(1.0, lower, upper, 0.15, vec![inc]).unwrap();
        let g = Grid::new(33).unwrap();
        for f in [p.sample(g), p.sample_cell_average(g, 3)] {
            prop_assert!(f.min() >= lower && f.max() <= upper);
        }
    }

    #[test]
    fn overlapping_disks_rejected(d in 0.0f64..0.19) {
        let a = disk([0.4, 0.5], 0.1, 2.0, 0.0);
        let b = disk([0.4 + d, 0.5], 0.1, 2.0, 0.0);
        prop_assert!(phantom(vec![a, b]).is_err());
    }
}
