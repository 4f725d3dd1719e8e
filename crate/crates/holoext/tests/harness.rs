use std::path::{Path, PathBuf};
use std::process::Command;

use holoext::report::{read, Format};
use holoext::{emit, run, run_suite, HarnessError, Kind, ReportRow, Suite, Tally};
use holoext_core::extension::Verdict;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn parse(text: &str) -> holoext::Result<Suite> {
    Suite::parse(text, &configs())
}

const REPRODUCE: &str = r#"
[[experiment]]
kind = "reproduce"
domain = "domains/ball1.toml"
alpha = 1.0
samples = 5_000
points = 2
resolution = 0.1
seed = 9
psi = [{ terms = [{ exponent = [1], re = 1.0 }] }]
"#;

fn config_error(text: &str) -> String {
    match parse(text) {
        Err(HarnessError::Config(msg)) => msg,
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn configs_resolve_files_and_defaults() {
    let suite = parse(REPRODUCE).unwrap();
    let cfg = &suite.experiment[0];
    assert_eq!(cfg.name, "reproduce-0");
    assert_eq!((cfg.outer, cfg.pairs, cfg.radius), (250, 10_000, 0.9));
    assert_eq!(cfg.domain().unwrap().dim(), 1);

    let inline = REPRODUCE.replace(
        r#"domain = "domains/ball1.toml""#,
        "domain = { dimension = 1, kind = \"unit-ball\" }",
    );
    assert_eq!(
        parse(&inline).unwrap().experiment[0]
            .domain()
            .unwrap()
            .dim(),
        1
    );

    for path in ["acceptance.toml", "smoke.toml"] {
        Suite::load(&configs().join(path)).unwrap();
    }
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(config_error(&REPRODUCE.replace("5_000", "999")).contains("below 1000"));
    assert!(config_error(&REPRODUCE.replace("alpha = 1.0\n", "")).contains("alpha"));
    assert!(config_error(&REPRODUCE.replace("seed = 9", "seed = 9\nbogus = 1")).contains("bogus"));
    assert!(
        config_error(&REPRODUCE.replace(r#"domain = "domains/ball1.toml""#, "")).contains("domain")
    );
    assert!(config_error("").contains("experiment"));

    let grid = r#"
[[experiment]]
kind = "sharp-constant"
domain = "domains/ball2.toml"
variety = "varieties/reduced-c2.toml"
samples = 5_000
grid = [{ r = -1.0, p = 2.0 }]
psi = [{ terms = [{ exponent = [0, 0], re = 1.0 }] }]
"#;
    assert!(config_error(grid).contains("-1"));
    assert!(
        config_error(&grid.replace("r = -1.0, p = 2.0", "r = 0.0, p = 0.5")).contains("p = 0.5")
    );

    let missing = REPRODUCE.replace("ball1.toml", "no-such-domain.toml");
    assert!(matches!(
        parse(&missing),
        Err(HarnessError::Domain(_)) | Err(HarnessError::Io { .. })
    ));

    let suite = parse(REPRODUCE).unwrap();
    assert!(matches!(
        suite.with_overrides(None, Some(10)),
        Err(HarnessError::Config(_))
    ));
}

fn sample_row(verdict: Verdict, ratio: Option<f64>) -> ReportRow {
    ReportRow {
        kind: Kind::ThmBSweep,
        experiment: "demo".into(),
        params: "r=0;p=1".into(),
        value: 0.125,
        stderr: 1e-3,
        ratio,
        verdict,
    }
}

#[test]
fn reports_round_trip_through_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![
        sample_row(Verdict::Pass, Some(1.5)),
        sample_row(Verdict::Degenerate, None),
    ];
    for format in [Format::Csv, Format::Json] {
        let path = dir.path().join(format!("rows.{}", format.extension()));
        emit(&rows, format, &path).unwrap();
        assert_eq!(read(format, &path).unwrap(), rows);
    }

    let single = dir.path().join("single.csv");
    emit(&rows[..1], Format::Csv, &single).unwrap();
    let text = std::fs::read_to_string(&single).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines,
        [
            "kind,experiment,params,value,stderr,ratio,verdict",
            "thmB-sweep,demo,r=0;p=1,0.125,0.001,1.5,PASS"
        ]
    );

    assert!(matches!(
        emit(&[], Format::Json, &single),
        Err(HarnessError::EmptyReport)
    ));
}

#[test]
fn runs_are_bit_stable() {
    let suite = parse(REPRODUCE).unwrap();
    let a = run_suite(&suite, None).unwrap();
    let b = run_suite(&suite, None).unwrap();
    assert_eq!(a.len(), 2);
    assert_eq!(a, b);
    assert!(a.iter().all(|r| r.params.contains("seed=9;samples=5000")));

    let reseeded = parse(REPRODUCE)
        .unwrap()
        .with_overrides(Some(10), None)
        .unwrap();
    let c = run_suite(&reseeded, None).unwrap();
    assert_ne!(a[0].value, c[0].value);
}

#[test]
fn ideal_members_are_degenerate_in_the_inequality_sweep() {
    // τ² vanishes on X = {τ² = 0}, as does the zero function.
    let text = r#"
[[experiment]]
kind = "trauma-sweep"
domain = "domains/ball2.toml"
variety = "varieties/monomial-m1.toml"
samples = 1_000
outer = 20
grid = [{ r = 0.0, p = 2.0 }]
psi = [
    { terms = [{ exponent = [0, 2], re = 1.0 }] },
    { terms = [{ exponent = [0, 0], re = 0.0 }] },
]
"#;
    let rows = run(&parse(text).unwrap().experiment[0]).unwrap();
    assert!(!rows.is_empty());
    assert!(
        rows.iter().all(|r| r.verdict == Verdict::Degenerate),
        "{rows:?}"
    );
}

#[test]
fn sharp_constant_smoke_matches_exact_value() {
    let suite = Suite::load(&configs().join("smoke.toml")).unwrap();
    let rows = run_suite(&suite, Some(Kind::SharpConstant)).unwrap();
    assert_eq!(rows.len(), 1);
    assert!((rows[0].value - std::f64::consts::PI).abs() < 5.0 * rows[0].stderr);
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_holoext"))
        .args(args)
        .output()
        .unwrap()
}

fn path_arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn cli_writes_reports_and_reports_status() {
    let dir = tempfile::tempdir().unwrap();
    let config = configs().join("smoke.toml");
    let out = cli(&[
        "verify-all",
        "--config",
        path_arg(&config),
        "--out",
        path_arg(dir.path()),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = read(Format::Csv, &dir.path().join("verify-all.csv")).unwrap();
    assert_eq!(
        rows,
        read(Format::Json, &dir.path().join("verify-all.json")).unwrap()
    );
    let t = Tally::of(&rows);
    assert_eq!(t.fail, 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains(&format!("{} rows", rows.len())));

    let only = cli(&[
        "norm-equivalence",
        "--config",
        path_arg(&config),
        "--out",
        path_arg(dir.path()),
        "--seed",
        "5",
    ]);
    assert!(only.status.success());
    let rows = read(Format::Csv, &dir.path().join("norm-equivalence.csv")).unwrap();
    assert!(rows
        .iter()
        .all(|r| r.kind == Kind::NormEquivalence && r.params.contains("seed=5")));

    let missing = cli(&[
        "uppsk",
        "--config",
        path_arg(&config),
        "--out",
        path_arg(dir.path()),
    ]);
    assert!(!missing.status.success());
    let bad = cli(&[
        "verify-all",
        "--config",
        "/nonexistent.toml",
        "--out",
        path_arg(dir.path()),
    ]);
    assert!(!bad.status.success());
}
