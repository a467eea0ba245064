use std::path::Path;
use std::process::{Command, Output};

const SMALL_DIST: &str = "
[validate_dist]
mc_blocks = 4000
points = [[1.0, 1.0]]
tolerance = 0.05
";

const SMALL_SWEEP: &str = "
[sweep]
inr_db = [10.0]
warmup_blocks = 500
duration_blocks = 300
";

const SMALL_BENCH: &str = "
[detect_bench]
snr_db = [19.5]
inr_db = [10.0]
trials = 20
warmup_blocks = 500
";

fn radcell(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_radcell"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--jobs")
        .arg("1")
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn validate_dist_writes_tables_and_passes() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("o");
    let o = radcell(d.path(), SMALL_DIST, &["validate-dist", "--out", out.to_str().unwrap(), "--seed", "9"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = read(&out, "dist_table.csv");
    let mut lines = table.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("# radcell ") && header.contains(" seed=9 ") && header.contains("config_hash="));
    assert_eq!(lines.next().unwrap(), "modulation,k_rb,p_r,sigma_n2,d,cdf_analytic,cdf_mc,abs_gap");
    assert!((30..=32).contains(&lines.count()));
    assert!(read(&out, "checks.csv").contains("sup_gap,16qam k_rb=12 p_r=1 sigma_n2=1,PASS"));
}

#[test]
fn zero_tolerance_fails_the_checks() {
    let d = tempfile::tempdir().unwrap();
    let cfg = SMALL_DIST.replace("tolerance = 0.05", "tolerance = 0.0");
    let o = radcell(d.path(), &cfg, &["validate-dist", "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(read(d.path(), "checks.csv").contains(",FAIL,"));
}

#[test]
fn usage_and_config_errors_exit_one() {
    let d = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_radcell");
    let missing = Command::new(bin).args(["sweep", "--config", "/nonexistent/run.toml"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot read"));

    let bad_mod = radcell(d.path(), "[validate_dist]\nmodulations = [\"8psk\"]\n", &["validate-dist"]);
    assert_eq!(bad_mod.status.code(), Some(1));

    let unknown_key = radcell(d.path(), "[sweep]\nsnr = 3.0\n", &["sweep"]);
    assert_eq!(unknown_key.status.code(), Some(1));

    let no_command = Command::new(bin).output().unwrap();
    assert_ne!(no_command.status.code(), Some(0));
}

#[test]
fn sweep_emits_one_row_per_scheme() {
    let d = tempfile::tempdir().unwrap();
    let o = radcell(d.path(), SMALL_SWEEP, &["sweep", "--out", d.path().to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stderr));
    let results = read(d.path(), "sweep_results.csv");
    let rows: Vec<&str> = results.lines().skip(2).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().any(|r| r.starts_with("10,dual,hybrid,")));
    let reports = read(d.path(), "sweep_reports.csv");
    let dual = reports.lines().find(|l| l.contains(",dual+hybrid,")).unwrap();
    let cells: Vec<&str> = dual.split(',').collect();
    assert_eq!(cells[5].len(), 10, "indicator covers one report window");
}

#[test]
fn radar_off_bench_reports_no_pri() {
    let d = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL_BENCH}radar_enabled = false\n");
    let o = radcell(d.path(), &cfg, &["detect-bench", "--out", d.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = read(d.path(), "detect_summary.csv");
    assert!(summary.lines().nth(2).unwrap().starts_with("19.5,off,64qam,20,absent,"));
    assert!(read(d.path(), "checks.csv").contains("pri_absent,snr=19.5 inr=off,PASS"));
}

#[test]
fn reruns_are_byte_identical() {
    for (cmd, cfg, files) in [
        ("validate-dist", SMALL_DIST, &["dist_table.csv", "dist_summary.csv", "checks.csv"][..]),
        ("sweep", SMALL_SWEEP, &["sweep_results.csv", "sweep_reports.csv", "checks.csv"][..]),
        ("detect-bench", SMALL_BENCH, &["detect_summary.csv", "detect_log.csv", "checks.csv"][..]),
    ] {
        let d = tempfile::tempdir().unwrap();
        let (a, b) = (d.path().join("a"), d.path().join("b"));
        radcell(d.path(), cfg, &[cmd, "--out", a.to_str().unwrap(), "--seed", "4"]);
        radcell(d.path(), cfg, &[cmd, "--out", b.to_str().unwrap(), "--seed", "4"]);
        for f in files {
            assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{cmd} {f}");
        }
    }
}
