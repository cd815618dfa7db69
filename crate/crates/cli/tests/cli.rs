use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_truthcascade"));
    c.env_remove("TRUTHCASCADE_SEED").env_remove("TRUTHCASCADE_EMAIL_UNIV");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

const ER: &[&str] = &["run", "--graph", "er", "--graph-param", "n=200", "--graph-param", "p=0.03", "--trials", "120"];

#[test]
fn csv_header_and_row() {
    let out = stdout(&run(&[ER, &["--seed", "5"]].concat()));
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "graph,params,n,ordering,ordering_params,model,q,trials,seed,mean_rate,std_err,median,min,max,herding_freq"
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row.len(), 15);
    assert_eq!(row[2], "200");
    assert_eq!(row[8], "5");
    let rate: f64 = row[9].parse().unwrap();
    assert!((0.0..=1.0).contains(&rate));
}

#[test]
fn output_is_byte_identical() {
    let args = [ER, &["--seed", "11", "--ordering", "two-neighbors"]].concat();
    let a = run(&args);
    let b = run(&args);
    let c = run(&[&args[..], &["--workers", "3"]].concat());
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a), stdout(&c));
}

#[test]
fn seed_from_env_and_flag_precedence() {
    let from_env = bin().args(ER).env("TRUTHCASCADE_SEED", "9").output().unwrap();
    let from_flag = run(&[ER, &["--seed", "9"]].concat());
    assert_eq!(stdout(&from_env), stdout(&from_flag));
    let both = bin().args([ER, &["--seed", "9"]].concat()).env("TRUTHCASCADE_SEED", "1").output().unwrap();
    assert_eq!(stdout(&both), stdout(&from_flag));
    let other = run(&[ER, &["--seed", "1"]].concat());
    assert_ne!(stdout(&other), stdout(&from_flag));
}

#[test]
fn json_output() {
    let out = stdout(&run(&[ER, &["--format", "json", "--compare"]].concat()));
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let cell = &v.as_array().unwrap()[0];
    assert_eq!(cell["n"], 200);
    assert!(cell["report"]["per_node_rate"].as_array().unwrap().len() == 200);
}

#[test]
fn invalid_config_names_field() {
    for (extra, field) in [
        (&["--q", "0.4"][..], "q"),
        (&["--trials", "0"][..], "trials"),
        (&["--workers", "0"][..], "workers"),
    ] {
        let o = run(&[&ER[..7], extra].concat());
        assert_eq!(o.status.code(), Some(2));
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(&format!("`{field}`")), "{err}");
        assert!(o.stdout.is_empty());
    }
    let o = run(&["run", "--graph", "grid", "--graph-param", "size=3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("graph-param size"));
    let o = run(&["run", "--graph", "complete", "--graph-param", "n=30", "--model", "bayesian"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model"));
}

#[test]
fn edge_list_input() {
    let dir = std::env::temp_dir().join(format!("truthcascade-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("square.txt");
    std::fs::write(&path, "# square\na b\nb c\nc d\nd a\n").unwrap();
    let out = stdout(&run(&[
        "run", "--graph", "edge-list", "--edge-list", path.to_str().unwrap(), "--model", "bayesian", "--trials", "50",
    ]));
    let row: Vec<&str> = out.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "edge-list");
    assert_eq!(row[2], "4");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn analyze_subcommands() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&["analyze", "giant", "--n", "1000", "--p", "0.01"]))).unwrap();
    let eta = v["eta"].as_f64().unwrap();
    assert!((eta - (10.0 * (eta - 1.0)).exp()).abs() < 1e-10);
    let v: serde_json::Value =
        serde_json::from_str(&stdout(&run(&["analyze", "butterfly", "--depth", "4"]))).unwrap();
    assert_eq!(v["rates"].as_array().unwrap().len(), 4);
    let v: serde_json::Value = serde_json::from_str(&stdout(&run(&[
        "analyze", "graph", "--graph", "grid", "--graph-param", "side=5",
    ])))
    .unwrap();
    assert_eq!(v["edges"], 40);
    let o = run(&["analyze", "giant", "--n", "100", "--p", "0.005"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn table_writes_csv_to_file() {
    let path = std::env::temp_dir().join(format!("truthcascade-t4-{}.csv", std::process::id()));
    let o = run(&["table", "t4", "--trials", "20", "--out", path.to_str().unwrap()]);
    stdout(&o);
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("graph,params,n,"));
    assert!(text.lines().count() > 2);
    std::fs::remove_file(path).ok();
}
