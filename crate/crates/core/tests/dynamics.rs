use std::sync::Arc;

use contact_lab::dynamics::{concat_product, conformal_check, flow, group_law_check, is_strict, IsotopySpec};
use contact_lab::expr::compile_hamiltonian;
use contact_lab::generators::{random_hamiltonian, GeneratorOptions};
use contact_lab::hamiltonian::DynHamiltonian;
use contact_lab::manifold::{ContactModel, ModelKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use smallvec::smallvec;

fn random_pair(m: &ContactModel<f64>, seed: u64) -> (DynHamiltonian<f64>, DynHamiltonian<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Arc::new(random_hamiltonian(m, false, &GeneratorOptions::default(), &mut rng));
    let h = Arc::new(random_hamiltonian(m, false, &GeneratorOptions::default(), &mut rng));
    (g, h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn sharp_product_flows_compose_on_the_circle(seed in 0u64..1000, theta in 0.0f64..6.28) {
        let m = ContactModel::<f64>::new(ModelKind::S1Circle);
        let (g, h) = random_pair(&m, seed);
        let rows = group_law_check(&m, &g, &h, &m.point(&[theta]), &[0.25, 0.5, 1.0], 1e-9, 1e-12).unwrap();
        for r in rows {
            prop_assert!(r.distance <= 1e-5 && r.kappa_error <= 1e-5, "{r:?}");
        }
    }

    #[test]
    fn concatenation_runs_one_flow_after_the_other(seed in 0u64..1000) {
        let m = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
        let (g, h) = random_pair(&m, seed);
        let x = m.sample(1, seed).remove(0);
        let joint = flow(&IsotopySpec::new(&m, concat_product(&g, &h), 1e-11), &x, 1.0).unwrap();
        let gx = flow(&IsotopySpec::new(&m, g, 1e-12), &x, 1.0).unwrap();
        let hgx = flow(&IsotopySpec::new(&m, h, 1e-12), gx.endpoint(), 1.0).unwrap();
        prop_assert!(m.distance(joint.endpoint().as_slice(), hgx.endpoint().as_slice()) <= 1e-7);
        prop_assert!((joint.final_kappa() - gx.final_kappa() * hgx.final_kappa()).abs() <= 1e-7);
    }
}

#[test]
fn expression_fields_flow_like_their_closed_forms() {
    let m = ContactModel::<f64>::new(ModelKind::T3UnitCotangent);
    let strict = compile_hamiltonian::<f64>("0.5 + 0.3 * cos(2 * theta)", ModelKind::T3UnitCotangent).unwrap();
    assert!(is_strict(&m, strict.as_ref(), 200, 4).strict);
    let general = compile_hamiltonian::<f64>("sin(q1) * cos(theta)", ModelKind::T3UnitCotangent).unwrap();
    let r = is_strict(&m, general.as_ref(), 200, 4);
    assert!(!r.strict && r.max_violation > 0.1);

    let vs = vec![smallvec![1.0, 0.0, 0.0], smallvec![0.0, 1.0, 0.0], smallvec![0.0, 0.0, 1.0]];
    let x = m.point(&[0.2, 5.0, 1.1]);
    let c = conformal_check(&IsotopySpec::new(&m, strict, 1e-12), &x, 1.0, &vs, 1e-5).unwrap();
    assert!((c.kappa - 1.0).abs() <= 1e-12 && c.max_relative_error <= 1e-6, "{c:?}");
    let c = conformal_check(&IsotopySpec::new(&m, general, 1e-12), &x, 0.5, &vs, 1e-5).unwrap();
    assert!(c.max_relative_error <= 1e-6, "{c:?}");
}

#[test]
fn reeb_field_is_the_flow_of_the_constant_one() {
    // oracle: with α(X_h) = −h the flow of 1 is z ↦ z − t
    let m = ContactModel::<f64>::new(ModelKind::R3Standard);
    let one = compile_hamiltonian::<f64>("1", ModelKind::R3Standard).unwrap();
    let x = m.point(&[0.3, -0.2, 0.1]);
    let r = flow(&IsotopySpec::new(&m, one, 1e-12), &x, 0.75).unwrap();
    let e = r.endpoint().as_slice();
    assert!((e[0] - 0.3).abs() <= 1e-12 && (e[1] + 0.2).abs() <= 1e-12 && (e[2] + 0.65).abs() <= 1e-10, "{e:?}");
    assert!((r.final_kappa() - 1.0).abs() <= 1e-12);
}
