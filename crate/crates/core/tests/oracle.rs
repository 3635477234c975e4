use hjbex::control::ControlledModel;
use hjbex::exec::Exec;
use hjbex::gridcore::HistorySegment;
use hjbex::hjbverify::{brute_force_value, settled_start, DelayDp, DpOptions};
use hjbex::models::time_to_build::build_ttb_spec;
use hjbex::models::vintage_dde::build_vintage_spec;
use hjbex::models::DelayState;

#[test]
fn vintage_bracket_contains_value() {
    let spec = build_vintage_spec(1.0, 2.0, 0.5, 0.45).unwrap();
    let hist = HistorySegment::constant(2.0, 8, 1.0).unwrap();
    let x0 = settled_start(&spec, &DelayState { head: 2.0, controls: hist }, 0.25).unwrap();
    let v = spec.value(&x0).unwrap();
    let r = brute_force_value(&DelayDp::new(&spec, 0.25), &x0, &DpOptions::default(), Exec::default()).unwrap();
    println!("vintage v = {v} {r:?}");
    assert!(r.contains(v, 0.03));
}

#[test]
fn ttb_bracket_contains_value() {
    let spec = build_ttb_spec(0.35, 0.05, 1.0, 2.0, 0.1).unwrap();
    let hist = HistorySegment::constant(1.0, 8, 0.2).unwrap();
    let x0 = settled_start(&spec, &DelayState { head: 1.0, controls: hist }, 0.125).unwrap();
    let v = spec.value(&x0).unwrap();
    let r = brute_force_value(&DelayDp::with_pipeline(&spec, 0.125, spec.a_tilde), &x0, &DpOptions::default(), Exec::default()).unwrap();
    println!("ttb v = {v} {r:?}");
    assert!(r.contains(v, 0.03));
}
