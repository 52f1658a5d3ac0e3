use macicmac::detmodel::{build_allocation, simulate};
use macicmac::dmeval::{gap_shift_report, DmInstance};
use macicmac::fme::{
    build_initial_system, cross_mask_violations, projection_verdict, seven_family_differs, verify_projection,
    LinearSystem, ProjectionVerdict,
};
use macicmac::gaussian::{gap_report, inner_table, outer_table, GapOptions, GaussianChannel};
use macicmac::rational::rat;
use macicmac::{build_generic_region, Cell, SetFunctionTable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

#[test]
fn bare_table_projects_to_a_smaller_region() {
    let t = SetFunctionTable::from_json(&fixture("projection_counterexample.json")).unwrap();
    assert!(t.chain_rule_violations().is_empty());
    assert!(!cross_mask_violations(&t).unwrap().is_empty());
    match projection_verdict(&t).unwrap() {
        ProjectionVerdict::ProjectionSmaller(q) => assert_eq!(q.rhs, rat(5, 1)),
        other => panic!("unexpected verdict {other:?}"),
    }
}

#[test]
fn nine_families_can_be_tighter_than_seven() {
    let t = SetFunctionTable::from_json(&fixture("nine_family_tighter.json")).unwrap();
    assert!(cross_mask_violations(&t).unwrap().is_empty());
    assert!(verify_projection(&t).unwrap());
    assert!(seven_family_differs(&t).unwrap());
}

#[test]
fn split_rate_system_survives_json() {
    let t = SetFunctionTable::from_json(&fixture("nine_family_tighter.json")).unwrap();
    let sys = build_initial_system(&t).unwrap();
    assert_eq!(LinearSystem::from_json(&sys.to_json()).unwrap(), sys);
}

#[test]
fn channel_file_gap() {
    let ch = GaussianChannel::from_json(&fixture("channel_2x1.json")).unwrap();
    assert_eq!((ch.k(Cell::A), ch.k(Cell::B)), (2, 1));
    assert!((ch.snr(Cell::A, 0) - 1000.0).abs() < 1e-9);
    let r = gap_report(&ch, &GapOptions::default()).unwrap();
    assert!(r.masks_upper_ok(1e-9));
    assert!(r.outer_contains_inner);
    assert!(r.worst_row_excess <= 0.0);
    let again = GaussianChannel::from_json(&ch.to_json()).unwrap();
    assert_eq!(inner_table(&again).unwrap(), inner_table(&ch).unwrap());
    assert_eq!(outer_table(&again).unwrap(), outer_table(&ch).unwrap());
}

#[test]
fn regions_have_the_generic_shape() {
    let ch = GaussianChannel::from_json(&fixture("channel_2x1.json")).unwrap();
    let p = build_generic_region(&inner_table(&ch).unwrap()).unwrap();
    assert_eq!(p.dim, 3);
    assert!(!p.is_empty().unwrap());
    assert!(!p.vertices().unwrap().is_empty());
}

#[test]
fn dm_instance_round_trip_keeps_report() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let inst = DmInstance::random(&mut rng, 2);
    let back = DmInstance::from_json(&inst.to_json()).unwrap();
    assert_eq!(back, inst);
    let (r1, r2) = (
        gap_shift_report(&inst.distribution, &inst.channel).unwrap(),
        gap_shift_report(&back.distribution, &back.channel).unwrap(),
    );
    assert_eq!(r1.shift_on_ra, r2.shift_on_ra);
    assert_eq!(r1.vertices, r2.vertices);
}

#[test]
fn allocation_dump_and_simulation() {
    let alloc = build_allocation(3, &rat(1, 1), 8).unwrap();
    let dump: serde_json::Value = serde_json::from_str(&alloc.to_json()).unwrap();
    assert_eq!(dump["K"], 3);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert_eq!(simulate(&alloc, &mut rng, 200).unwrap().bit_errors, 0);
}
