//! Exit codes and output files of the `gr1rs` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gr1rs::bench::CSV_HEADER;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn run(args: &[&std::ffi::OsStr]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gr1rs"))
        .args(args)
        .env_remove("GR1RS_STATE_CAP")
        .output()
        .unwrap()
}

fn os<S: AsRef<std::ffi::OsStr> + ?Sized>(s: &S) -> &std::ffi::OsStr {
    s.as_ref()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn synth_realizable_exits_zero_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let v = dir.path().join("a.v");
    let d = dir.path().join("a.dot");
    let o = run(&[
        os("synth"),
        fixture("arbiter2.spec").as_os_str(),
        os("-o"),
        v.as_os_str(),
        os("--dot"),
        d.as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("realizable: yes"));
    assert!(fs::read_to_string(&v)
        .unwrap()
        .starts_with("module arbiter2 ("));
    assert!(fs::read_to_string(&d).unwrap().starts_with("digraph"));
}

#[test]
fn synth_unrealizable_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("u.spec");
    fs::write(
        &spec,
        "inputs: r\noutputs: g\nsys_safety_inv: g -> X(!r)\nsys_fair: g\n",
    )
    .unwrap();
    for mode in ["--robust", "--plain"] {
        let o = run(&[os("synth"), spec.as_os_str(), os(mode)]);
        assert_eq!(o.status.code(), Some(2), "{mode}");
        assert!(stdout(&o).contains("realizable: no"));
    }
}

#[test]
fn parse_errors_exit_one_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.spec");
    fs::write(&spec, "inputs: r\noutputs: g\nsys_safety_inv: g & (r |\n").unwrap();
    let o = run(&[os("synth"), spec.as_os_str()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bad.spec:3:"), "{}", stderr(&o));
}

#[test]
fn state_cap_is_honored() {
    let o = Command::new(env!("CARGO_BIN_EXE_gr1rs"))
        .args([os("synth"), fixture("handshake.spec").as_os_str()])
        .env("GR1RS_STATE_CAP", "3")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("state cap"));
}

#[test]
fn bench_writes_csv_and_rejects_one_client() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let o = run(&[
        os("bench"),
        os("--arbiter"),
        os("2..3"),
        os("--csv"),
        csv.as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines[0], "N,mode,states,verilog_lines,solve_ms,total_ms");
    let keys: Vec<String> = lines[1..]
        .iter()
        .map(|l| l.split(',').take(4).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(
        keys,
        [
            "2,plain,5,36",
            "2,robust,12,68",
            "3,plain,6,62",
            "3,robust,15,134"
        ]
    );

    let o = run(&[os("bench"), os("--arbiter"), os("1")]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_and_verify_round_trip_through_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let g = dir.path().join("g.json");
    let s = dir.path().join("s.txt");
    let r = dir.path().join("r.json");
    let o = run(&[
        os("synth"),
        fixture("arbiter2.spec").as_os_str(),
        os("--dump"),
        m.as_os_str(),
        os("--game-dump"),
        g.as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    fs::write(&s, "legal x10\nin r1=1 r2=1\nlegal\n").unwrap();
    let o = run(&[
        os("simulate"),
        os("--machine"),
        m.as_os_str(),
        os("--game"),
        g.as_os_str(),
        os("--script"),
        s.as_os_str(),
        os("--steps"),
        os("40"),
        os("--json"),
        r.as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("env errors: 1"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(&r).unwrap()).unwrap();
    assert_eq!(report["env_errors"], 1);

    let o = run(&[
        os("verify"),
        os("--machine"),
        m.as_os_str(),
        os("--game"),
        g.as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let trap = fixture("arbiter2_trap.machine.json");
    let o = run(&[
        os("verify"),
        os("--machine"),
        trap.as_os_str(),
        os("--game"),
        g.as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).contains("violation of pair 2"));
}

#[test]
fn gen_prints_a_parseable_spec() {
    let o = run(&[os("gen"), os("--arbiter"), os("3")]);
    assert_eq!(o.status.code(), Some(0));
    assert!(gr1rs::spec_format::parse_spec(&stdout(&o)).is_ok());
}
