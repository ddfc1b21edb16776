use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hdmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hdmix")).args(args).output().unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut a: Vec<&str> = args.to_vec();
    a.extend(["--outdir", dir.to_str().unwrap()]);
    hdmix(&a)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

const LIMITS: &[&str] = &["limits", "--p-grid", "50,200", "--replicates", "3", "--seed", "7"];

#[test]
fn limits_writes_expected_columns_and_metadata() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in(d.path(), LIMITS);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(d.path().join("limits.csv")).unwrap();
    let comments: Vec<&str> = text.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(comments[0].starts_with("# hdmix "));
    assert!(comments.iter().any(|l| l.starts_with("# config: p_grid=50,200 ")));
    assert!(comments.iter().any(|l| *l == "# seed: 7"));
    assert!(comments.iter().any(|l| l.starts_with("# generator: ")));
    let header = text.lines().find(|l| !l.starts_with('#')).unwrap();
    assert!(header.starts_with(
        "p,replicate,term_gamma,term_kappa,term_det_kappa,term_det_gram,total,gamma_limit,kappa_limit,det_kappa_limit,total_limit"
    ));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 6);
    assert!(d.path().join("limits.svg").exists());
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert_eq!(stderr.lines().filter(|l| l.starts_with("p=")).count(), 2);
}

#[test]
fn same_seed_same_bytes() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    assert_eq!(code(&run_in(a.path(), LIMITS)), 0);
    assert_eq!(code(&run_in(b.path(), LIMITS)), 0);
    assert_eq!(files(a.path()), files(b.path()));
    let c = tempfile::tempdir().unwrap();
    let mut other = LIMITS.to_vec();
    other[6] = "8";
    run_in(c.path(), &other);
    assert_ne!(
        fs::read(a.path().join("limits.csv")).unwrap(),
        fs::read(c.path().join("limits.csv")).unwrap()
    );
}

#[test]
fn replot_reproduces_svgs() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(d.path(), LIMITS)), 0);
    assert_eq!(code(&run_in(d.path(), &["projector", "--p-grid", "20,40", "--replicates", "5"])), 0);
    let before = files(d.path());
    fs::remove_file(d.path().join("limits.svg")).unwrap();
    fs::write(d.path().join("projector.svg"), "stale").unwrap();
    assert_eq!(code(&run_in(d.path(), &["replot"])), 0);
    assert_eq!(files(d.path()), before);
    let empty = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(empty.path(), &["replot"])), 4);
}

#[test]
fn config_errors_exit_2() {
    let d = tempfile::tempdir().unwrap();
    for args in [
        vec!["limits", "--p-grid", ""],
        vec!["limits", "--p-grid", "100,100"],
        vec!["limits", "--p-grid", "1000,100"],
        vec!["limits", "--c2", "1"],
        vec!["limits", "--replicates", "0"],
        vec!["sweep", "--sweeps", "10", "--burnin", "10"],
        vec!["cluster", "--prior", "bogus"],
        vec!["cluster", "--alpha", "0"],
        vec!["frobnicate"],
    ] {
        let o = run_in(d.path(), &args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn io_and_numeric_errors() {
    let d = tempfile::tempdir().unwrap();
    let missing = d.path().join("nope.csv");
    assert_eq!(code(&run_in(d.path(), &["cluster", "--input", missing.to_str().unwrap()])), 4);
    let bad = d.path().join("bad.csv");
    fs::write(&bad, "1,2\n3,x\n").unwrap();
    let o = run_in(d.path(), &["cluster", "--input", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("row 2"));
    let constant = d.path().join("const.csv");
    fs::write(&constant, "1,1,1\n0,1,2\n").unwrap();
    let o = run_in(d.path(), &["cluster", "--input", constant.to_str().unwrap(), "--standardize"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn cluster_on_generated_data_reports_ari() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in(d.path(), &["cluster", "--n", "20", "--p", "5", "--separation", "6", "--sweeps", "40", "--burnin", "10"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8_lossy(&o.stdout);
    let ari: f64 = out.trim().split("ari=").nth(1).unwrap().parse().unwrap();
    assert!((-1.0..=1.0).contains(&ari));
    for f in ["co_clustering.csv", "k_trace.csv", "k_trace.svg", "summary.csv", "point_estimate.csv"] {
        assert!(d.path().join(f).exists(), "{f}");
    }
}

#[test]
fn cluster_on_input_with_truth_and_custom_prior() {
    let d = tempfile::tempdir().unwrap();
    let data = d.path().join("data.csv");
    fs::write(&data, "x,y\n-5,-5\n-5.2,-4.9\n5,5\n5.1,4.8\n-4.9,-5.1\n").unwrap();
    let truth = d.path().join("truth.csv");
    fs::write(&truth, "label\n1\n1\n2\n2\n1\n").unwrap();
    let prior = d.path().join("prior.txt");
    fs::write(&prior, "# weak prior\nmu0 = 0\nkappa0 = 0.01\nnu0 = 3\nlambda0_scale = 0.1\n").unwrap();
    let custom = format!("custom:{}", prior.display());
    let o = run_in(
        d.path(),
        &[
            "cluster", "--input", data.to_str().unwrap(), "--truth", truth.to_str().unwrap(),
            "--prior", &custom, "--sweeps", "200", "--burnin", "50",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), "k_mode=2 ari=1.0000");
    let co = fs::read_to_string(d.path().join("co_clustering.csv")).unwrap();
    assert!(co.lines().any(|l| l.starts_with("obs1,obs2,obs3")));

    fs::write(&prior, "kappa0 = 1\nnu0 = 0.5\nlambda0_scale = 1\n").unwrap();
    assert_eq!(code(&run_in(d.path(), &["cluster", "--input", data.to_str().unwrap(), "--prior", &custom])), 2);
    fs::write(&prior, "kappa0 = 1\n").unwrap();
    assert_eq!(code(&run_in(d.path(), &["cluster", "--input", data.to_str().unwrap(), "--prior", &custom])), 2);
    fs::write(&truth, "1\n2\n").unwrap();
    let o = run_in(d.path(), &["cluster", "--input", data.to_str().unwrap(), "--truth", truth.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
}

#[test]
fn projector_medians_decrease() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_in(d.path(), &["projector", "--p-grid", "50,200,1000", "--replicates", "20"])), 0);
    let t = hdmix::csvio::read_csv(d.path().join("projector.csv")).unwrap();
    let c = t.column("median_residual").unwrap();
    let m: Vec<f64> = t.data.row_iter().map(|r| r[c]).collect();
    assert!(m.windows(2).all(|w| w[1] < w[0]), "{m:?}");
}

#[test]
fn sweep_writes_both_priors() {
    let d = tempfile::tempdir().unwrap();
    let o = run_in(d.path(), &["sweep", "--p-grid", "20,40", "--n", "8", "--replicates", "2", "--sweeps", "20", "--burnin", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let t = hdmix::csvio::read_csv(d.path().join("sweep.csv")).unwrap();
    assert_eq!(t.data.rows(), 2 * 2 * 2);
    let prior = t.column("prior").unwrap();
    assert_eq!(t.data.row_iter().filter(|r| r[prior] == 1.0).count(), 4);
    assert!(d.path().join("sweep.svg").exists());
}
