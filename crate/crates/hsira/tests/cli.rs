use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hsira(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsira"))
        .args(args)
        .env_remove("HSIRA_MATRIX_DIR")
        .output()
        .expect("binary runs")
}

fn summary_rows(out: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(out.join("summary.tsv"))
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split('\t').map(String::from).collect())
        .collect()
}

fn history_inner_sum(path: &Path) -> usize {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    let col = header.iter().position(|h| *h == "inner_iters").unwrap();
    lines.map(|l| l.split('\t').nth(col).unwrap().parse::<usize>().unwrap()).sum()
}

#[test]
fn planted_file_single_cell_converges() {
    let dir = tempfile::tempdir().unwrap();
    let mtx = dir.path().join("planted.mtx");
    let gen = hsira(&["planted", "--n", "100", "--seed", "5", "--out", mtx.to_str().unwrap()]);
    assert!(gen.status.success());
    let stdout = String::from_utf8(gen.stdout).unwrap();
    let sigma = stdout.lines().find_map(|l| l.strip_prefix("sigma = ")).unwrap().to_string();

    let out = dir.path().join("run");
    let run = hsira(&[
        "run",
        "--matrix",
        mtx.to_str().unwrap(),
        "--sigma",
        &sigma,
        "--methods",
        "rhsira",
        "--eps-tilde",
        "1e-3",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let rows = summary_rows(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "RHSIRA");
    assert_eq!(rows[0][1], "1e-3");
    assert_eq!(rows[0][6], "true");
    let i_inner: usize = rows[0][4].parse().unwrap();
    assert_eq!(i_inner, history_inner_sum(&out.join("history/RHSIRA_1e-3.tsv")));
    assert!(out.join("plot/RHSIRA_1e-3.cycle1.dat").exists());
    assert!(out.join("plot/RHSIRA_1e-3.restarts.dat").exists());

    let gp = hsira(&["gnuplot", "--out", out.to_str().unwrap()]);
    assert!(gp.status.success());
    assert!(String::from_utf8(gp.stdout).unwrap().contains("plot/RHSIRA_1e-3.restarts.dat"));
}

#[test]
fn sweep_is_reproducible_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let r = hsira(&[
            "run",
            "--matrix",
            "planted-complex:60",
            "--seed",
            "2",
            "--eps-tilde",
            "1e-3",
            "--exact",
            "--m-max",
            "10",
            "--threads",
            threads,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
        out
    };
    let a = run("a", "1");
    let b = run("b", "3");
    let rows = summary_rows(&a);
    assert_eq!(rows.len(), 12);
    for row in &rows {
        let hist = a.join("history").join(format!("{}_{}.tsv", row[0], row[1]));
        assert_eq!(row[4].parse::<usize>().unwrap(), history_inner_sum(&hist), "{row:?}");
        let other = b.join("history").join(format!("{}_{}.tsv", row[0], row[1]));
        assert_eq!(fs::read(&hist).unwrap(), fs::read(&other).unwrap());
    }
    assert_eq!(fs::read(a.join("summary.tsv")).unwrap(), fs::read(b.join("summary.tsv")).unwrap());
}

#[test]
fn missing_matrix_exits_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let r = hsira(&[
        "run",
        "--matrix",
        "/no/such/matrix.mtx",
        "--sigma",
        "-24",
        "--exact",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("/no/such/matrix.mtx"));
}

#[test]
fn bad_sigma_and_config_exit_nonzero() {
    let r = hsira(&["run", "--matrix", "planted:20", "--sigma", "1+", "--exact"]);
    assert_eq!(r.status.code(), Some(2));
    let r = hsira(&["run", "--matrix", "planted:20"]);
    assert_eq!(r.status.code(), Some(2), "no accuracy selected");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    let out = dir.path().join("out");
    fs::write(
        &cfg,
        format!(
            "matrix = \"planted:40\"\nseed = 4\nmethods = [\"hsira\", \"hjd\"]\neps_tilde = [1e-4]\nout = \"{}\"\n",
            out.display()
        ),
    )
    .unwrap();
    let r = hsira(&["run", "--config", cfg.to_str().unwrap(), "--method", "rhjd"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let rows = summary_rows(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "RHJD");
    assert_eq!(rows[0][1], "1e-4");
}
