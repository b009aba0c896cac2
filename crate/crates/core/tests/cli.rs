use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn projop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_projop")).args(args).output().unwrap()
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

fn run(cfg: &Path) -> Output {
    projop(&["run", cfg.to_str().unwrap()])
}

#[test]
fn separable_study_matches_golden_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let body = fs::read_to_string(golden("separable_study.cfg")).unwrap();
    let cfg = write_config(tmp.path(), "study.cfg", &body);
    let out = run(&cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(tmp.path().join("separable_out/study.csv")).unwrap();
    assert_eq!(csv, fs::read_to_string(golden("separable_study.csv")).unwrap());
    // The golden rows themselves must agree with the closed-form solution.
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,method,iterations,residual,error,converged"));
    for row in lines {
        let cols: Vec<&str> = row.split(',').collect();
        assert!(cols[3].parse::<f64>().unwrap() < 1e-12);
        assert!(cols[4].parse::<f64>().unwrap() < 1e-10);
        assert_eq!(cols[5], "true");
    }
    let meta = fs::read_to_string(tmp.path().join("separable_out/run.meta")).unwrap();
    assert!(meta.contains("reference = analytic"));
    assert!(meta.contains("uniform_bound[8] = "));
}

#[test]
fn duplicate_key_error_matches_golden_record() {
    let out = run(&golden("duplicate_key.cfg"));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(String::from_utf8_lossy(&out.stderr), fs::read_to_string(golden("duplicate_key.expected")).unwrap());
}

#[test]
fn ls_net_centers_pass_the_check_command() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "net.cfg", "kind = ls-net\nmembers = x0; x0^2; const:0.5\nepsilon = 0.3\n");
    assert!(run(&cfg).status.success());
    let centers = tmp.path().join("out/centers.txt");
    let csv = fs::read_to_string(tmp.path().join("out/ls_net.csv")).unwrap();
    assert!(csv.starts_with("member,distance,within_epsilon\n"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",true")));
    let check = projop(&["check-net", centers.to_str().unwrap(), "0.3"]);
    assert_eq!(check.status.code(), Some(0));
    let report = String::from_utf8_lossy(&check.stdout);
    assert!(report.contains("centers 3") && report.contains("separated true"), "{report}");
    // A larger ε than the net was built for breaks separation.
    let loose = projop(&["check-net", centers.to_str().unwrap(), "5"]);
    assert_eq!(loose.status.code(), Some(3));
    assert_eq!(projop(&["check-net", centers.to_str().unwrap(), "-1"]).status.code(), Some(2));
}

#[test]
fn describe_basis_reads_an_export() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "p.cfg", "kind = project-converge\nfunction = exp:x0\ndegree = 4\n");
    assert!(run(&cfg).status.success());
    let csv = fs::read_to_string(tmp.path().join("out/projection.csv")).unwrap();
    assert!(csv.starts_with("n,error,uniform_bound\n0,"));
    let out = projop(&["describe-basis", tmp.path().join("out/basis.txt").to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("kind legendre") && text.contains("size 5"), "{text}");
    let garbage = write_config(tmp.path(), "garbage.txt", "not a basis\n");
    assert_eq!(projop(&["describe-basis", garbage.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn exit_codes_and_failure_markers() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write_config(tmp.path(), "bad.cfg", "kind = ls-net\nmembers = x0\nepsilon = -1\n");
    let out = run(&bad);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3: key `epsilon`"));

    let big = write_config(
        tmp.path(),
        "big.cfg",
        "kind = project-converge\ndimension = 3\ndegree = 2\nquadrature_points = 200\nfunction = x0\noutput = big\n",
    );
    let out = run(&big);
    assert_eq!(out.status.code(), Some(4));
    assert!(tmp.path().join("big/.failed").exists());

    // T = identity makes the residual constant: the Newton Jacobian vanishes.
    let singular = write_config(
        tmp.path(),
        "singular.cfg",
        "kind = solve\noperator = identity\nforcing = x0\nmethod = newton\noutput = singular\n",
    );
    let out = run(&singular);
    assert_eq!(out.status.code(), Some(3));
    let record: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(record["error"], "singular");
    let dir = tmp.path().join("singular");
    let names: Vec<String> = fs::read_dir(&dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    assert_eq!(names, vec![".failed".to_string()]);
    assert_eq!(projop(&["run", tmp.path().join("missing.cfg").to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn success_clears_a_stale_failure_marker() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir_all(tmp.path().join("out")).unwrap();
    fs::write(tmp.path().join("out/.failed"), "old").unwrap();
    let cfg = write_config(tmp.path(), "ok.cfg", "kind = solve\noperator = zero\nforcing = cos:x0\ndegree = 3\n");
    assert!(run(&cfg).status.success());
    assert!(!tmp.path().join("out/.failed").exists());
    let csv = fs::read_to_string(tmp.path().join("out/solve.csv")).unwrap();
    assert!(csv.starts_with("n,method,iterations,residual,error,converged\n3,picard,1,"));
}

#[test]
fn train_operator_writes_a_reloadable_model() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "train.cfg",
        "kind = train-operator\noperator = identity\ndegree = 4\nsamples = 20\ntest_samples = 5\nepochs = 50\nseed = 5\n",
    );
    assert!(run(&cfg).status.success());
    let out = tmp.path().join("out");
    let model = fs::read_to_string(out.join("model.txt")).unwrap();
    let archive = projop::neural_op::ModelArchive::parse(&model).unwrap();
    let load = |r: &str| std::sync::Arc::new(projop::ortho_poly::import_basis(&fs::read_to_string(out.join(r)).unwrap()).unwrap());
    let op = archive.load(load(&archive.input_basis_ref), load(&archive.output_basis_ref)).unwrap();
    assert_eq!(projop::neural_op::write_model(&op, "basis_in.txt", "basis_out.txt"), model);
    let meta = fs::read_to_string(out.join("run.meta")).unwrap();
    assert!(meta.contains("heldout_relative_l2_error = "));
}
