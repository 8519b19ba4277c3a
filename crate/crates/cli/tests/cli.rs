use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn neuralif(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_neuralif"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_identity(dir: &Path, n: usize) -> (std::path::PathBuf, std::path::PathBuf) {
    let m = dir.join("id.mtx");
    let mut text = format!("%%MatrixMarket matrix coordinate real symmetric\n{n} {n} {n}\n");
    for i in 1..=n {
        text.push_str(&format!("{i} {i} 1.0\n"));
    }
    fs::write(&m, text).unwrap();
    let r = dir.join("ones.rhs");
    fs::write(&r, "1.0\n".repeat(n)).unwrap();
    (m, r)
}

#[test]
fn solve_identity_takes_one_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let (m, r) = write_identity(dir.path(), 5);
    let o = neuralif(&["solve", "--matrix", p(&m), "--rhs", p(&r), "--precond", "none"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("iterations     1\n"), "{}", stdout(&o));
}

#[test]
fn unknown_preconditioner_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let (m, _) = write_identity(dir.path(), 2);
    let o = neuralif(&["solve", "--matrix", p(&m), "--precond", "ilu"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown preconditioner"));
    assert!(stderr(&o).contains("Usage") || stderr(&o).contains("--help"));
}

#[test]
fn ic0_breakdown_exits_numerical() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("kershaw.mtx");
    fs::write(
        &m,
        "%%MatrixMarket matrix coordinate real symmetric\n4 4 8\n\
         1 1 3\n2 1 -2\n2 2 3\n3 2 -2\n3 3 3\n4 1 2\n4 3 -2\n4 4 3\n",
    )
    .unwrap();
    let o = neuralif(&["solve", "--matrix", p(&m), "--precond", "ic0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("column 3"), "{}", stderr(&o));
}

#[test]
fn help_and_missing_files() {
    assert_eq!(neuralif(&["--help"]).status.code(), Some(0));
    assert_eq!(neuralif(&[]).status.code(), Some(1));
    let o = neuralif(&["solve", "--matrix", "/nonexistent/a.mtx"]);
    assert_eq!(o.status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let (m, _) = write_identity(dir.path(), 2);
    let o = neuralif(&["solve", "--matrix", p(&m), "--precond", "neuralif"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn non_convergence_exits_numerical() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("diag.mtx");
    fs::write(&m, "%%MatrixMarket matrix coordinate real symmetric\n3 3 3\n1 1 1\n2 2 2\n3 3 3\n").unwrap();
    let o = neuralif(&["solve", "--matrix", p(&m), "--max-iters", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

fn strip_timings(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            // drop p_time, cg_time, total_time
            [&f[..2], &f[5..]].concat().join(",")
        })
        .collect()
}

#[test]
fn pipeline_and_jobs_invariance() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let data = root.join("data");
    let o = neuralif(&["gen", "random", "--n", "60", "--count", "5", "--seed", "3", "--out", p(&data)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let again = root.join("again");
    neuralif(&["gen", "random", "--n", "60", "--count", "5", "--seed", "3", "--out", p(&again)]);
    for f in ["0.mtx", "4.rhs", "manifest.json"] {
        assert_eq!(
            fs::read(data.join("random").join(f)).unwrap(),
            fs::read(again.join("random").join(f)).unwrap()
        );
    }

    let model = root.join("model.json");
    let o = neuralif(&[
        "train", "--data", p(&data), "--epochs", "2", "--lr", "0.01", "--seed", "1", "--out", p(&model),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(model.is_file());

    let mut outputs = Vec::new();
    for jobs in ["1", "3"] {
        let out = root.join(format!("bench{jobs}"));
        let o = neuralif(&[
            "bench", "--data", p(&data), "--model", p(&model), "--out", p(&out), "--jobs", jobs,
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(out.join("summary.json").is_file());
        outputs.push(strip_timings(&fs::read_to_string(out.join("bench.csv")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0].len(), 1 + 5 * 4);
    assert_eq!(
        outputs[0][0],
        "instance,precond,iterations,converged,sparsity,kappa,breakdown"
    );

    let out = root.join("analyze");
    let o = neuralif(&[
        "analyze",
        "--matrix",
        p(&data.join("random/0.mtx")),
        "--precond",
        "none,jacobi,neuralif",
        "--model",
        p(&model),
        "--eig",
        "dense",
        "--out",
        p(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let spectrum = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert_eq!(spectrum.lines().filter(|l| l.contains(",kappa,")).count(), 3);
    assert_eq!(spectrum.lines().filter(|l| l.contains(",eigenvalue,")).count(), 180);

    let trace = root.join("trace.csv");
    let o = neuralif(&[
        "solve",
        "--matrix",
        p(&data.join("random/1.mtx")),
        "--rhs",
        p(&data.join("random/1.rhs")),
        "--precond",
        "jacobi",
        "--trace",
        p(&trace),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&trace).unwrap();
    assert!(text.starts_with("k,residual_norm,error_a_norm,bound\n"));
}

#[test]
fn poisson_generation() {
    let dir = tempfile::tempdir().unwrap();
    let o = neuralif(&[
        "gen",
        "poisson",
        "--min-vertices",
        "80",
        "--max-vertices",
        "120",
        "--count",
        "3",
        "--out",
        p(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let manifest = fs::read_to_string(dir.path().join("poisson/manifest.json")).unwrap();
    for family in ["\"convex\"", "\"convex_with_hole\"", "\"polytope\""] {
        assert!(manifest.contains(family));
    }
}
