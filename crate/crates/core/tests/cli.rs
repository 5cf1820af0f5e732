use std::fs;
use std::process::Command;

fn slipflow() -> Command {
    Command::new(env!("CARGO_BIN_EXE_slipflow"))
}

#[test]
fn stokes_run_writes_outputs_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    let text = "# small run\nnu = 1e-3   # viscosity\nmodes = 2\noutput_times = 0.1, 0.5\n";
    fs::write(&conf, text).unwrap();
    let out = dir.path().join("out");
    let status = slipflow()
        .args(["stokes-run", "--config"])
        .arg(&conf)
        .arg("--out")
        .arg(&out)
        .args(["--beta", "0.5"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = fs::read_to_string(out.join("stokes-run.csv")).unwrap();
    assert!(csv.starts_with("experiment,nu,beta,t,quantity,value,tolerance,verdict\n"));
    assert!(out.join("stokes-run__l1_nu0.001.dat").exists());
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["config_text"], text);
    assert_eq!(m["schema_version"], 1);
    assert_eq!(m["all_passed"], true);
    assert!(m["overrides"].as_array().unwrap().iter().any(|o| o == "beta = 0.5"));
}

#[test]
fn bad_config_and_unwritable_output_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("bad.conf");
    fs::write(&conf, "no_such_key = 1\n").unwrap();
    let status = slipflow().args(["kernel-check", "--config"]).arg(&conf).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let status = slipflow()
        .args(["stokes-run", "--out"])
        .arg(blocker.join("sub"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    let status = slipflow().args(["stokes-run", "--nu=-1"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}
