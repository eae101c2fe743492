use proptest::prelude::*;
use ssdkit::space::{cyclic_form_r3, symmetry_defect};
use ssdkit::{SsdPoint, SsdSpace};

const TOL: f64 = 1e-12;

fn spaces() -> Vec<SsdSpace> {
    vec![SsdSpace::hilbert(3), SsdSpace::antihilbert(2), SsdSpace::triple(), SsdSpace::product(1), SsdSpace::product(2)]
}

/// Independent transcription of each pairing.
fn oracle_pair(space: &SsdSpace, b: &[f64], c: &[f64]) -> f64 {
    match space {
        SsdSpace::Hilbert { .. } => b.iter().zip(c).map(|(x, y)| x * y).sum(),
        SsdSpace::Antihilbert { .. } => -b.iter().zip(c).map(|(x, y)| x * y).sum::<f64>(),
        SsdSpace::Triple => b[0] * c[1] + b[1] * c[0] + b[2] * c[2],
        SsdSpace::Product { n } => (0..*n).map(|i| b[i] * c[n + i] + c[i] * b[n + i]).sum(),
    }
}

fn vec_of(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, dim)
}

fn scale(b: &[f64]) -> f64 {
    1.0 + b.iter().map(|v| v * v).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn pairing_laws(idx in 0usize..5, seed in prop::collection::vec(-10.0f64..10.0, 12), t in -3.0f64..3.0) {
        let space = spaces()[idx];
        let d = space.dim();
        let (b, rest) = seed.split_at(d);
        let (c, rest) = rest.split_at(d);
        let e = &rest[..d];
        let pair = |x: &[f64], y: &[f64]| space.pair(x, y).unwrap();
        let q = |x: &[f64]| space.qform(x).unwrap();
        let s = scale(b) * scale(c) * scale(e);

        prop_assert!((pair(b, c) - oracle_pair(&space, b, c)).abs() <= TOL * s);
        prop_assert!((pair(b, c) - pair(c, b)).abs() <= TOL * s);
        let lin: Vec<f64> = b.iter().zip(e).map(|(x, y)| t * x + y).collect();
        prop_assert!((pair(&lin, c) - (t * pair(b, c) + pair(e, c))).abs() <= TOL * s * 10.0);
        // parallelogram law q(x) + q(y) = ½q(x + y) + ½q(x − y)
        let sum: Vec<f64> = b.iter().zip(c).map(|(x, y)| x + y).collect();
        let diff: Vec<f64> = b.iter().zip(c).map(|(x, y)| x - y).collect();
        prop_assert!((q(b) + q(c) - 0.5 * q(&sum) - 0.5 * q(&diff)).abs() <= TOL * s);
        let nb = space.norm(b).unwrap();
        prop_assert!(q(b).abs() <= 0.5 * nb * nb + TOL * s);
        // ⟨b, ι(c)⟩ = ⌊b, c⌋
        let ic = space.iota(c).unwrap();
        let dual: f64 = b.iter().zip(ic.as_slice()).map(|(x, y)| x * y).sum();
        prop_assert!((dual - pair(b, c)).abs() <= TOL * s);
        // ι is an isometric involution
        prop_assert!((space.norm(&ic).unwrap() - space.norm(c).unwrap()).abs() <= TOL * s);
        prop_assert_eq!(space.iota(&ic).unwrap().into_vec(), c.to_vec());
    }

    #[test]
    fn reflections_reverse_q(n in 1usize..4, b in vec_of(6)) {
        let space = SsdSpace::product(n);
        let b = &b[..2 * n];
        let q = space.qform(b).unwrap();
        let r1 = space.reflect1(b).unwrap();
        let r2 = space.reflect2(b).unwrap();
        prop_assert!((space.qform(&r1).unwrap() + q).abs() <= TOL * scale(b));
        prop_assert!((space.qform(&r2).unwrap() + q).abs() <= TOL * scale(b));
        prop_assert_eq!(space.reflect1(&r1).unwrap().into_vec(), b.to_vec());
        prop_assert_eq!(r1.clone(), -&space.reflect2(b).unwrap());
    }
}

#[test]
fn cyclic_form_is_not_symmetric() {
    let pairs = vec![(vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0])];
    assert_eq!(symmetry_defect(cyclic_form_r3, &pairs), 1.0);
    let triple = SsdSpace::triple();
    assert_eq!(symmetry_defect(|b, c| triple.pair(b, c).unwrap(), &pairs), 0.0);
}

#[test]
fn example_values() {
    let p1 = SsdSpace::product(1);
    assert_eq!(p1.qform(&[2.0, 3.0]).unwrap(), 6.0);
    assert_eq!(SsdSpace::triple().qform(&[1.0, -1.0, 2.0]).unwrap(), 1.0);
    assert_eq!(p1.reflect1(&[2.0, 3.0]).unwrap(), SsdPoint::from([-2.0, 3.0]));
    assert!(SsdSpace::triple().reflect1(&[0.0; 3]).is_err());
    assert!(p1.pair(&[1.0], &[1.0, 2.0]).is_err());
}
