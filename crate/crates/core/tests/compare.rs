use cnfet_cache::experiment::{cmd_compare, ExperimentConfig};

fn small(pairs: &[&str]) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    for p in [
        "workload.pages=16",
        "workload.length=20000",
        "variation.seed=7",
    ]
    .iter()
    .chain(pairs)
    {
        c.set_pair(p).unwrap();
    }
    c
}

fn column(table: &str, name: &str) -> Vec<f64> {
    let mut lines = table.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let i = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| l.split(',').nth(i).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn comparing_a_config_to_itself_gives_unit_ratios() {
    let c = small(&["policy=vasa+ds"]);
    let (_, table) = cmd_compare(&[c.clone(), c]).unwrap();
    for col in [
        "norm_hit_latency",
        "norm_amat",
        "norm_energy",
        "norm_dynamic_energy",
    ] {
        assert_eq!(column(&table, col), vec![1.0, 1.0], "{col}");
    }
}

#[test]
fn partial_disable_beats_worst_case_on_hot_data() {
    let base = small(&["name=baseline", "policy=baseline"]);
    let pd = small(&["name=pd", "policy=baseline+pd"]);
    let (_, table) = cmd_compare(&[base, pd]).unwrap();
    let ratios = column(&table, "norm_hit_latency");
    assert!(ratios[1] < 1.0, "{table}");
}

#[test]
fn mismatched_workloads_are_rejected() {
    let a = small(&[]);
    let b = small(&["workload.seed=99"]);
    assert!(cmd_compare(&[a.clone(), b]).is_err());
    assert!(cmd_compare(&[a]).is_err());
}

#[test]
fn six_policy_sweep_completes() {
    let (csv, table) = cnfet_cache::experiment::cmd_recipe("six-policy").unwrap();
    assert_eq!(csv.lines().count(), 7);
    assert_eq!(table.lines().count(), 7);
}
