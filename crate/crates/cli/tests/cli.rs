use std::process::{Command, Output};

fn sbe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbe"))
        .args(args)
        .env_remove("SBE_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .to_string()
}

#[test]
fn gen_is_deterministic_and_validates_side() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = sbe(&["gen", "--s", "256", "--count", "3", "--seed", "7", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
    }
    let names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(names.len(), 3);
    for n in names {
        let text = std::fs::read_to_string(a.join(&n)).unwrap();
        assert_eq!(text, std::fs::read_to_string(b.join(&n)).unwrap());
        let inst: sbe_core::Instance = text.parse().unwrap();
        assert!(sbe_core::validate_instance(&inst).is_empty());
    }
    let o = sbe(&["gen", "--s", "8", "--seed", "1", "--out", dir.path().to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("16"));
}

#[test]
fn search_reports_and_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("corner.txt");
    std::fs::write(&path, "s=32 delta=2 psi=0,0\nmu=1,1\n").unwrap();
    let o = sbe(&["search", "--algo", "exhaustive", "--instance", path.to_str().unwrap(), "--seed", "1"]);
    assert!(o.status.success());
    assert_eq!(field(&stdout(&o), "total_visits"), "1");

    let inst = dir.path().join("inst");
    sbe(&["gen", "--s", "128", "--seed", "3", "--out", inst.to_str().unwrap()]);
    let file = inst.join("instance_000.txt");
    let trace = dir.path().join("trace.csv");
    let run = || {
        sbe(&[
            "search", "--algo", "fts", "-t", "40", "-d", "17", "-c", "3", "--instance",
            file.to_str().unwrap(), "--seed", "9", "--trace", trace.to_str().unwrap(),
        ])
    };
    let (first, second) = (run(), run());
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    let csv = std::fs::read_to_string(&trace).unwrap();
    assert!(csv.starts_with("step,x,y,outcome\n"));
    assert_eq!(csv.lines().count() as u64 - 1, field(&stdout(&first), "total_visits").parse::<u64>().unwrap());
}

#[test]
fn tabu_steps_within_grid() {
    let o = sbe(&["search", "--algo", "tabu", "--params", "t=300,d=5", "--random", "64", "--seed", "4"]);
    assert!(o.status.success());
    let steps: u64 = field(&stdout(&o), "steps").parse().unwrap();
    assert!(steps <= 64 * 64);
}

#[test]
fn bad_input_exits_nonzero() {
    for args in [
        vec!["search", "--algo", "simplex", "--random", "64"],
        vec!["search", "--algo", "fts", "--params", "t=4,d=x,c=1", "--random", "64"],
        vec!["search", "--algo", "vns2", "-t", "4", "--random", "64"],
        vec!["tune", "--algo", "fts", "--s", "10"],
    ] {
        let o = sbe(&args);
        assert!(!o.status.success(), "{args:?}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error:"));
    }
}

#[test]
fn bench_table_shape_and_reproducibility() {
    let dir = tempfile::tempdir().unwrap();
    let manifests = dir.path().join("m");
    let args = [
        "bench", "--algos", "fts,exhaustive", "--s", "64", "--n", "500", "--restarts", "3", "--seed", "5",
        "--budget", "100", "--fitness-runs", "8", "--manifests", manifests.to_str().unwrap(),
    ];
    let (a, b) = (sbe(&args), sbe(&args));
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let csv = stdout(&a);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "restart,fts,exhaustive,winner");
    assert_eq!(lines.len(), 1 + 3 + 2);
    assert!(lines[4].starts_with("mean,") && lines[5].starts_with("lowest,"));
    let m = sbe_core::bench::read_manifest(&manifests.join("restart2_fts.json")).unwrap();
    assert_eq!(m.runs, 500);
    assert_eq!(m.s, 64);
}

#[test]
fn tune_prints_params_and_writes_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("log.csv");
    let series = dir.path().join("series.csv");
    let o = sbe(&[
        "tune", "--algo", "vns3", "--s", "64", "--seed", "2", "--fitness-runs", "8", "--log",
        log.to_str().unwrap(), "--check", "50", "--series", series.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    for key in ["t", "d", "g", "converged", "check_mean"] {
        field(&text, key);
    }
    assert!(std::fs::read_to_string(&log).unwrap().starts_with("generation,best_fitness,population_size,converged\n"));
    let (steps, _) = sbe_core::bench::read_series(std::io::BufReader::new(std::fs::File::open(&series).unwrap())).unwrap();
    assert_eq!(steps.len(), 50);
}

#[test]
fn match_on_files_and_synthetic_images() {
    use sbe_core::template::{generate_synthetic, save_pgm, SyntheticConfig};
    let dir = tempfile::tempdir().unwrap();
    let config = SyntheticConfig::with_size(200).unwrap();
    let syn = generate_synthetic(&config, &mut sbe_core::seed::stream_rng(1, 0));
    let image = dir.path().join("scan.pgm");
    save_pgm(&syn.image, &image).unwrap();
    let manifest = dir.path().join("set.txt");
    syn.templates.save_manifest(&manifest).unwrap();
    let o = sbe(&[
        "match", "--image", image.to_str().unwrap(), "--templates", manifest.to_str().unwrap(), "--use",
        "fts:t=500,d=11,c=3", "--use", "exhaustive", "--runs", "2", "--repetitions", "3", "--seed", "1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "repetition,fts_visits,fts_faster_pct,exhaustive_visits,exhaustive_faster_pct");
    assert_eq!(rows.len(), 1 + 3 + 1);
    assert!(rows[4].ends_with(",0.00"));

    let o = sbe(&["match", "--synthetic", "2", "--size", "200", "--use", "vns3:t=50,d=9,g=2", "--seed", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("# data: synthetic benchmark images"));

    assert!(!sbe(&["match", "--use", "fts"]).status.success());
    assert!(!sbe(&["match", "--synthetic", "1", "--size", "64", "--use", "exhaustive"]).status.success());
    let missing = dir.path().join("missing.pgm");
    assert!(!sbe(&["match", "--image", missing.to_str().unwrap(), "--templates", manifest.to_str().unwrap()]).status.success());
}
