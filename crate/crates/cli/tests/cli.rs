use std::fs;
use std::process::{Command, Output};

fn hcurl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hcurl")).args(args).output().unwrap()
}

#[test]
fn table_output_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = hcurl(&[
            "run-table",
            "--eps",
            "0.1",
            "--kappa",
            "10",
            "--levels",
            "3",
            "--full-precision",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        fs::read(out).unwrap()
    };
    let (a, b) = (run("a.csv"), run("b.csv"));
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("elements,e,eta,eta_tilde\n32,"));
    assert_eq!(text.lines().count(), 5);
}

#[test]
fn dumps_meshes_and_indicators() {
    let dir = tempfile::tempdir().unwrap();
    let ind = dir.path().join("ind");
    let mesh = dir.path().join("mesh");
    let out = hcurl(&[
        "run-table",
        "--problem",
        "interface",
        "--eps1",
        "100",
        "--levels",
        "2",
        "--dump-indicators",
        ind.to_str().unwrap(),
        "--dump-mesh",
        mesh.to_str().unwrap(),
        "--format",
        "markdown",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().starts_with('|'));
    let robust = fs::read_to_string(ind.join("level1_robust.csv")).unwrap();
    assert!(robust.starts_with("element_id,r1,r2,j1,j2,total\n"));
    assert_eq!(robust.lines().count(), 129);
    assert!(ind.join("level0_classical.csv").exists());
    assert!(fs::read_to_string(mesh.join("level1.mesh")).unwrap().lines().next().unwrap().ends_with(" 128"));
}

#[test]
fn sweep_and_adaptive_produce_csv() {
    let out = hcurl(&["run-sweep", "--ratios", "1,100", "--kappas", "1", "--levels", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("ratio,kappa,levels,eff_eta,eff_eta_tilde\n"));
    assert_eq!(text.lines().count(), 3);

    let out = hcurl(&["run-adaptive", "--problem", "interface", "--eps1", "1e3", "--max-dofs", "200"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("iter,elements,dofs,eta,error,marked\n0,32,40,"));
}

#[test]
fn invalid_input_exits_nonzero_with_diagnostic() {
    for args in [
        &["run-table", "--eps", "-1"][..],
        &["run-table", "--levels", "0"],
        &["run-adaptive", "--theta", "1.5", "--max-dofs", "100"],
        &["run-sweep", "--ratios", "1", "--kappas", "0"],
        &["run-table", "--eps"],
    ] {
        let out = hcurl(args);
        assert!(!out.status.success(), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}
