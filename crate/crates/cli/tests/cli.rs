use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn fixture(rel: &str) -> String {
    root().join("fixtures").join(rel).display().to_string()
}

fn optspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_optspec")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Config pointing at the fixture few-shots and the stub runtime.
fn config(dir: &Path) -> String {
    let p = dir.join("optspec.toml");
    std::fs::write(
        &p,
        format!(
            "few_shots = {:?}\nscratch = {:?}\n\n[runtime]\ncommand = [\"sh\", {:?}]\ntimeout_secs = 5\n",
            fixture("fewshot"),
            dir.join("scratch").display().to_string(),
            fixture("runtime/directive-stub.sh")
        ),
    )
    .unwrap();
    p.display().to_string()
}

fn scripted() -> String {
    format!("scripted:{}", fixture("scripts/bench.toml"))
}

#[test]
fn solve_exit_codes() {
    let o = optspec(&[
        "solve",
        &fixture("production/production.mod"),
        &fixture("production/production.dat"),
        "--objective",
        "weighted:Revenue=1,Hold_Cost=-1",
    ]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("objective: 140\n"), "{}", stdout(&o));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("config digest: "));

    assert_eq!(code(&optspec(&["solve", "/nonexistent/model.mod"])), 64);
    let o = optspec(&["solve", &fixture("solve/infeasible.mod")]);
    assert_eq!(code(&o), 3);
    assert!(stdout(&o).contains("ERROR infeasible\nrow Floor\n"));
    assert_eq!(code(&optspec(&["solve", &fixture("solve/broken.mod")])), 2);
    // Two objectives under the default single policy.
    assert_eq!(code(&optspec(&["solve", &fixture("production/production.mod"), &fixture("production/production.dat")])), 2);
    assert_eq!(code(&optspec(&["solve", "--objective", "best", &fixture("solve/broken.mod")])), 64);
    assert_eq!(code(&optspec(&["--bogus"])), 64);
}

#[test]
fn run_records_and_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path());
    let rec = tmp.path().join("rec").display().to_string();
    let ok = optspec(&["--config", &cfg, "--llm-backend", &scripted(), "run", &fixture("bundles/fleet"), "Ampl4", "--records", &rec]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(stdout(&ok).starts_with("fleet Ampl4 run0: solved objective 180 after 1 refinement(s)\n"));
    assert!(tmp.path().join("rec/records/fleet--Ampl4--run0.json").is_file());
    let ce = optspec(&["--config", &cfg, "--llm-backend", &scripted(), "run", &fixture("bundles/fleet"), "Ampl1", "--records", &rec]);
    assert_eq!(code(&ce), 2);
    let re = optspec(&["--config", &cfg, "--llm-backend", &scripted(), "run", &fixture("bundles/fleet"), "Python1", "--records", &rec]);
    assert_eq!(code(&re), 3);
    assert_eq!(code(&optspec(&["--config", &cfg, "run", &fixture("bundles/fleet"), "Ampl9"])), 64);
}

#[test]
fn missing_token_fails_before_any_prompt() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("remote.toml");
    std::fs::write(
        &cfg,
        format!(
            "few_shots = {:?}\ndefault_backend = \"live\"\n\n[backends.live.backend]\nkind = \"remote\"\nendpoint = \"http://127.0.0.1:9/v1/chat/completions\"\nmodel = \"m\"\ntoken_env = \"OPTSPEC_CLI_TEST_TOKEN_UNSET\"\n",
            fixture("fewshot")
        ),
    )
    .unwrap();
    let rec = tmp.path().join("rec");
    let o = optspec(&[
        "--config",
        cfg.to_str().unwrap(),
        "run",
        &fixture("bundles/fleet"),
        "Ampl4",
        "--records",
        rec.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("OPTSPEC_CLI_TEST_TOKEN_UNSET"));
    assert!(!rec.exists());
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "few_shot = \"x\"\n").unwrap();
    assert_eq!(code(&optspec(&["--config", cfg.to_str().unwrap(), "solve", &fixture("solve/broken.mod")])), 64);
}

#[test]
fn config_digest_tracks_settings() {
    let digest = |args: &[&str]| {
        let o = optspec(args);
        String::from_utf8_lossy(&o.stderr).lines().next().unwrap().to_string()
    };
    let m = fixture("solve/infeasible.mod");
    assert_eq!(digest(&["solve", &m]), digest(&["solve", &m]));
    assert_ne!(digest(&["solve", &m]), digest(&["--jobs", "2", "solve", &m]));
}

#[test]
fn bind_and_generate() {
    let o = optspec(&["bind", &fixture("bundles/production"), "--format", "json"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("\"budget\": 10"));
    let o = optspec(&["bind", &fixture("bundles/production")]);
    assert!(stdout(&o).starts_with("set PRODUCTS := A B;\nset RESOURCES := R1 R2 R3;\n"));
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path());
    let o = optspec(&["--config", &cfg, "--llm-backend", &scripted(), "generate", &fixture("bundles/production"), "Ampl3"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("maximize Revenue:"));
    let o = optspec(&["--config", &cfg, "--llm-backend", &scripted(), "structure", &fixture("bundles/fleet")]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).starts_with("OBJECTIVES:\n"));
}

#[test]
fn bench_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path());
    let mut reports = Vec::new();
    for i in 0..2 {
        let store = tmp.path().join(format!("store{i}"));
        let s = store.to_str().unwrap();
        let o = optspec(&["--config", &cfg, "--llm-backend", &scripted(), "bench", &fixture("bundles"), "--runs", "1", "--records", s]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).starts_with("16 records (16 run now"));
        assert_eq!(code(&optspec(&["report", s])), 0);
        reports.push((
            std::fs::read_to_string(store.join("report/report.md")).unwrap(),
            std::fs::read_to_string(store.join("report/cells.csv")).unwrap(),
        ));
    }
    assert_eq!(reports[0], reports[1]);
    let csv = &reports[0].1;
    // Fleet fails one-off in both targets (syntax error vs. crash); production
    // solves everywhere, the external programs report 150 against 140.
    assert!(csv.contains("\ndelta,Ampl1-Python1,scripted:bench.toml,,false,false,false,0,0,0,1,-1,-0.07142857142857142,-0.07142857142857142,,1,0\n"));
    assert!(csv.contains("\ndelta,Ampl4-Python4,scripted:bench.toml,,true,true,false,0,0,0,0,0,-0.03571428571428571,-0.03571428571428571,"));

    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(code(&optspec(&["report", empty.to_str().unwrap()])), 65);
    assert_eq!(std::fs::read_dir(&empty).unwrap().count(), 0);
}

#[test]
fn relative_runtime_paths_follow_the_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let stub = tmp.path().join("bin");
    std::fs::create_dir(&stub).unwrap();
    std::fs::copy(fixture("runtime/directive-stub.sh"), stub.join("stub.sh")).unwrap();
    let cfg = tmp.path().join("optspec.toml");
    std::fs::write(
        &cfg,
        format!("few_shots = {:?}\n\n[runtime]\ncommand = [\"sh\", \"bin/stub.sh\"]\n", fixture("fewshot")),
    )
    .unwrap();
    let rec = tmp.path().join("rec");
    let o = optspec(&[
        "--config",
        cfg.to_str().unwrap(),
        "--llm-backend",
        &scripted(),
        "run",
        &fixture("bundles/production"),
        "Python4",
        "--records",
        rec.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("scratch/production/Python4").is_dir());
}

#[test]
fn help_matches_golden_files() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let bless = std::env::var_os("OPTSPEC_BLESS").is_some();
    for cmd in ["", "structure", "bind", "generate", "solve", "run", "bench", "report"] {
        let args: Vec<&str> = if cmd.is_empty() { vec!["--help"] } else { vec![cmd, "--help"] };
        let o = optspec(&args);
        assert_eq!(code(&o), 0);
        let text = stdout(&o);
        let name = if cmd.is_empty() { "optspec" } else { cmd };
        let path = dir.join(format!("{name}.txt"));
        if bless {
            std::fs::write(&path, &text).unwrap();
            continue;
        }
        let golden = std::fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
        assert_eq!(text, golden, "help for '{name}' changed; rerun with OPTSPEC_BLESS=1 to accept");
        for flag in ["--config", "--llm-backend", "--jobs", "--seed", "--timeout"] {
            assert!(text.contains(flag), "{name} help lacks {flag}");
        }
    }
}
