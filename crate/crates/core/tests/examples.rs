//! Every example runs to completion.

#[path = "../examples/contract_curve.rs"]
mod contract_curve;
#[path = "../examples/demand_systems.rs"]
mod demand_systems;
#[path = "../examples/flat_geometry.rs"]
mod flat_geometry;
#[path = "../examples/ladder.rs"]
mod ladder;
#[path = "../examples/monte_carlo.rs"]
mod monte_carlo;
#[path = "../examples/scenario_files.rs"]
mod scenario_files;
#[path = "../examples/three_goods.rs"]
mod three_goods;
#[path = "../examples/trade_sets.rs"]
mod trade_sets;
#[path = "../examples/verify_suites.rs"]
mod verify_suites;

#[test]
fn demand_systems_runs() {
    demand_systems::run().unwrap();
}

#[test]
fn flat_geometry_runs() {
    flat_geometry::run().unwrap();
}

#[test]
fn trade_sets_runs() {
    trade_sets::run().unwrap();
}

#[test]
fn contract_curve_runs() {
    contract_curve::run().unwrap();
}

#[test]
fn ladder_runs() {
    ladder::run(1000).unwrap();
}

#[test]
fn monte_carlo_runs() {
    monte_carlo::run(300).unwrap();
}

#[test]
fn three_goods_runs() {
    three_goods::run(2).unwrap();
}

#[test]
fn scenario_files_runs() {
    scenario_files::run(20).unwrap();
}

#[test]
fn verify_suites_pass() {
    assert!(verify_suites::run().unwrap());
}
