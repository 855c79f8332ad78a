use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn exemplar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_exemplar")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn info_prints_limits() {
    let o = exemplar(&["info"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("max_threads_per_block = 1024"));
    assert!(text.contains("shared_memory_bytes   = 49152"));
    assert!(text.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(exemplar(&["bench", "--vary", "q"]).status.code(), Some(1));
    assert_eq!(exemplar(&["nonsense"]).status.code(), Some(1));
    assert_eq!(exemplar(&["eval", "--input", "/definitely/missing.csv", "--sets", "x"]).status.code(), Some(1));
    assert_eq!(exemplar(&["--help"]).status.code(), Some(0));
}

#[test]
fn eval_prints_one_value_per_set() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "data.csv", "x\n1\n3\n");
    let sets = write(dir.path(), "sets.csv", "set,x\n0,3\n1,1\n1,3\n2,1\n");
    for backend in ["reference", "parallel", "tiled"] {
        let o = exemplar(&["eval", "--input", &data, "--sets", &sets, "--backend", backend]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stdout(&o), "4.5\n5\n3\n");
    }
}

#[test]
fn eval_memory_budget_chunks_or_fails_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "data.csv", "1\n3\n");
    let sets = write(dir.path(), "sets.csv", "0,3\n1,1\n1,3\n2,1\n");
    // Per-set bytes at fp32: (2*1 + 2)*4 + 16 = 32.
    let o = exemplar(&["eval", "--input", &data, "--sets", &sets, "--memory-budget", "40"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "4.5\n5\n3\n");
    let o = exemplar(&["eval", "--input", &data, "--sets", &sets, "--memory-budget", "31"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn cluster_writes_exemplars_and_labels() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "data.csv", "0,0\n0,1\n10,10\n10,11\n");
    let out = dir.path().join("ex.csv");
    let labels = dir.path().join("labels.txt");
    let o = exemplar(&[
        "cluster",
        "--input",
        &data,
        "--k",
        "2",
        "--out",
        out.to_str().unwrap(),
        "--labels",
        labels.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ex = fs::read_to_string(&out).unwrap();
    let mut lines = ex.lines();
    assert_eq!(lines.next(), Some("index,x0,x1"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2);
    let labels: Vec<usize> = fs::read_to_string(&labels).unwrap().lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(labels.len(), 4);
    assert_eq!(labels[0], labels[1]);
    assert_eq!(labels[2], labels[3]);
    assert_ne!(labels[0], labels[2]);
}

#[test]
fn cluster_rejects_k_above_n() {
    let dir = tempfile::tempdir().unwrap();
    let data = write(dir.path(), "data.csv", "1\n2\n");
    assert_eq!(exemplar(&["cluster", "--input", &data, "--k", "3"]).status.code(), Some(1));
}

#[test]
fn bench_writes_schema_and_one_row_per_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let o = exemplar(&[
        "bench", "--vary", "l", "--values", "4,8", "--n", "50", "--k", "3", "--d", "4", "--backend",
        "reference,tiled", "--precision", "fp16,fp64", "--reps", "1", "--seed", "5", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("vary,n,l,k,d,precision,backend,workers,seed,repetitions,runtime_seconds"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 2 * 2 * 2);
    assert!(rows[0].starts_with("l,50,4,3,4,fp16,reference,1,5,1,"));
}

#[test]
fn bench_out_of_memory_is_a_failed_record() {
    let o = exemplar(&[
        "bench", "--vary", "n", "--values", "20", "--l", "3", "--k", "2", "--d", "2", "--backend", "tiled",
        "--reps", "1", "--memory-budget", "10",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    assert!(row.ends_with(','), "{row}");
}
