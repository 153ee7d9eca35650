use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coded-caching"))
        .args(args)
        .env_remove("CODED_CACHING_PRIME")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    assert_eq!(
        r.headers().unwrap().iter().collect::<Vec<_>>(),
        [
            "K",
            "N",
            "L",
            "M_num",
            "M_den",
            "achieved_num",
            "achieved_den",
            "converse_num",
            "converse_den",
            "uncoded_num",
            "uncoded_den",
            "decode_ok",
            "seed"
        ]
    );
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_owned).collect())
        .collect()
}

#[test]
fn verify_default_lead_instance() {
    let o = run(&["verify", "--N", "4", "--L", "3", "--trials", "100"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 100);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r[5..12], ["1", "1", "1", "1", "5", "4", "true"]);
        assert_eq!(r[12], i.to_string());
    }
}

#[test]
fn verify_rejects_too_many_servers() {
    let o = run(&["verify", "--N", "4", "--L", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("L=4"));
    assert!(o.stdout.is_empty());
}

#[test]
fn verify_rejects_unsupported_divisibility() {
    let o = run(&["verify", "--N", "9", "--L", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_nine_files_two_servers() {
    let o = run(&["verify", "--N", "9", "--L", "2", "--trials", "50"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 50);
    assert!(rows
        .iter()
        .all(|r| r[5] == "4" && r[6] == "1" && r[11] == "true"));
}

#[test]
fn verify_json_and_complex_mode() {
    let o = run(&[
        "verify", "--N", "5", "--L", "3", "--mode", "complex", "--trials", "3", "--format", "json",
    ]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let arr = v.as_array().unwrap();
    assert_eq!(arr.len(), 3);
    for r in arr {
        assert_eq!(r["achieved_T"], "4/3");
        assert_eq!(r["uncoded_T"], "8/5");
        assert_eq!(r["field"], "complex");
        assert_eq!(r["decode_ok"], true);
    }
}

#[test]
fn verify_output_is_byte_identical_across_runs() {
    let args = [
        "verify", "--N", "7", "--L", "3", "--seed", "42", "--trials", "8",
    ];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(
        a.stdout,
        run(&["verify", "--N", "7", "--L", "3", "--seed", "43", "--trials", "8"]).stdout
    );
}

#[test]
fn verify_writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let o = run(&[
        "verify",
        "--N",
        "3",
        "--trials",
        "2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(csv_rows(&std::fs::read_to_string(path).unwrap()).len(), 2);
}

#[test]
fn prime_from_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_coded-caching"))
        .args(["verify", "--N", "3", "--trials", "1", "--format", "json"])
        .env("CODED_CACHING_PRIME", "257")
        .output()
        .unwrap();
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["prime"], 257);
    assert_eq!(run(&["verify", "--prime", "15"]).status.code(), Some(2));
}

#[test]
fn table_four_files_three_servers() {
    let o = run(&["table", "--N", "4", "--L", "3", "--demand", "1,2,3,4"]);
    assert!(o.status.success());
    let expect = "\
| Row | Signal | User 1      | User 2      | User 3      | User 4      | Time Slot |
|-----|--------|-------------|-------------|-------------|-------------|-----------|
| 1   | X_1    | B_1+C_1+D_1 | B_1         | C_1         | D_1         | 1/4       |
| 2   | X_2    | A_2         | A_2+C_2+D_2 | C_2         | D_2         | 1/4       |
| 3   | X_3    | A_3         | B_3         | A_3+B_3+D_3 | D_3         | 1/4       |
| 4   | X_4    | A_4         | B_4         | C_4         | A_4+B_4+C_4 | 1/4       |
";
    assert_eq!(stdout(&o), expect);
}

#[test]
fn table_smallest_instance() {
    let o = run(&["table", "--N", "2", "--L", "1", "--demand", "1,2"]);
    let expect = "\
| Row | Signal | User 1 | User 2 | Time Slot |
|-----|--------|--------|--------|-----------|
| 1   | X_1    | B_1    | B_1    | 1/2       |
| 2   | X_2    | A_2    | A_2    | 1/2       |
";
    assert_eq!(stdout(&o), expect);
}

#[test]
fn table_five_files_three_servers_golden() {
    let o = run(&["table", "--N", "5", "--L", "3", "--demand", "1,2,3,4,5"]);
    let text = stdout(&o);
    assert_eq!(text, include_str!("golden/table_n5_l3.md"));
    let body: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(body.len(), 20);
    assert!(body.iter().all(|l| l.trim_end().ends_with("| 1/15      |")));
}

#[test]
fn table_rejects_unsupported_regime() {
    assert_eq!(
        run(&["table", "--N", "9", "--L", "3"]).status.code(),
        Some(2)
    );
}

#[test]
fn sweep_contains_worked_example_rows() {
    let o = run(&["sweep", "--N-min", "4", "--N-max", "5"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    let pick =
        |n: &str, l: &str| rows.iter().find(|r| r[1] == n && r[2] == l).unwrap()[5..11].join(",");
    assert_eq!(pick("4", "3"), "1,1,1,1,5,4");
    assert_eq!(pick("4", "2"), "3,2,3,2,15,8");
    assert_eq!(pick("5", "4"), "1,1,1,1,6,5");
    assert_eq!(pick("5", "3"), "4,3,4,3,8,5");
}

#[test]
fn sweep_empty_range_is_header_only() {
    let o = run(&["sweep", "--N-min", "6", "--N-max", "5"]);
    assert!(o.status.success());
    assert!(csv_rows(&stdout(&o)).is_empty());
}

#[test]
fn sweep_marks_unsupported_rows() {
    let o = run(&["sweep", "--N-min", "9", "--N-max", "9"]);
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 8);
    for r in &rows {
        match r[2].as_str() {
            "3" | "5" | "6" => {
                assert_eq!(r[11], "unsupported-regime");
                assert!(r[5].is_empty());
            }
            _ => {
                assert_eq!(r[11], "true");
                assert_eq!(r[5..7], r[7..9]);
            }
        }
    }
}

#[test]
fn full_sweep_meets_converse() {
    let o = run(&["sweep", "--N-min", "2", "--N-max", "9"]);
    assert!(o.status.success());
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), (2..=9).map(|n| n - 1).sum::<usize>());
    for r in rows.iter().filter(|r| r[11] != "unsupported-regime") {
        assert_eq!(r[5..7], r[7..9], "N={} L={}", r[1], r[2]);
    }
}

#[test]
fn bounds_prints_three_times() {
    let o = run(&["bounds", "--N", "5", "--L", "3"]);
    assert_eq!(
        stdout(&o),
        "K=5 N=5 L=3 M=1/5\nconverse_T=4/3\nachievable_T=4/3\nuncoded_T=8/5\n"
    );
    let o = run(&["bounds", "--N", "9", "--L", "3"]);
    assert!(stdout(&o).contains("achievable_T=unsupported-regime"));
}
