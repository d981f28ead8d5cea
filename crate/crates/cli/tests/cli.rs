use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const YEAR: usize = 8760;

/// Two regions, two technologies, two years. DE has a weak spell around the
/// turn of the year.
fn write_inputs(dir: &Path) {
    let mut csv = String::from("region,technology,hour_index,value\n");
    for (region, tech) in [("DE", "onshore"), ("DE", "pv"), ("FR", "onshore"), ("FR", "pv")] {
        let phase = region.len() as f64 + tech.len() as f64;
        for h in 0..2 * YEAR {
            let day = (h % 24) as f64 / 24.0 * std::f64::consts::TAU;
            let slow = ((h as f64 / 97.0 + phase).sin() + 1.0) / 4.0;
            let mut v = if tech == "pv" {
                (-day.cos()).max(0.0) * 0.6
            } else {
                0.2 + slow
            };
            if region == "DE" && (YEAR - 200..YEAR + 200).contains(&h) {
                v *= 0.1;
            }
            writeln!(csv, "{region},{tech},{h},{v:.6}").unwrap();
        }
    }
    fs::write(dir.join("availability.csv"), csv).unwrap();
    fs::write(
        dir.join("capacities.csv"),
        "region,technology,capacity_mw\nDE,onshore,60\nDE,pv,50\nFR,onshore,20\nFR,pv,15\n",
    )
    .unwrap();
}

fn write_config(dir: &Path, extra: &str) -> PathBuf {
    let path = dir.join("run.toml");
    let text = format!(
        r#"[input]
availability = "availability.csv"
capacities = "capacities.csv"

[grid]
taus = [0.5, 0.75]
max_duration = 1500

[mass]
included = [0.5, 0.75]

[output]
dir = "out"
{extra}"#
    );
    fs::write(&path, text).unwrap();
    path
}

fn drought(config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drought"))
        .args(args)
        .arg("--config")
        .arg(config)
        .output()
        .expect("binary runs")
}

fn setup() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    write_inputs(dir.path());
    let config = write_config(dir.path(), "");
    (dir, config)
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut all = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let name = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                all.push((name, fs::read(&p).unwrap()));
            }
        }
    }
    all.sort();
    all
}

#[test]
fn one_region_two_levels_gives_two_catalogs_and_a_manifest() {
    let (dir, config) = setup();
    let out = drought(&config, &["detect", "--regions", "DE", "--taus", "0.5,0.75"]);
    assert_ok(&out);
    let root = dir.path().join("out");
    let mut catalogs: Vec<String> = fs::read_dir(root.join("catalogs"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("DE_onshore"))
        .collect();
    catalogs.sort();
    assert_eq!(catalogs, ["DE_onshore_tau0.5.csv", "DE_onshore_tau0.75.csv"]);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["taus"], serde_json::json!([0.5, 0.75]));
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    let listed: Vec<&str> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["path"].as_str().unwrap())
        .collect();
    assert!(listed.contains(&"catalogs/DE_onshore_tau0.75.csv"));
    for (name, _) in files(&root) {
        assert!(name == "manifest.json" || listed.contains(&name.as_str()), "{name} not listed");
    }
}

#[test]
fn invalid_tau_is_a_validation_error_naming_the_field() {
    let (dir, config) = setup();
    let out = drought(&config, &["detect", "--taus", "0.5,1.2"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--taus[1]"), "{stderr}");
    assert!(!dir.path().join("out").join("manifest.json").exists());

    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[grid]\ntaus = [0.25, 1.2]\n[input]\navailability = \"availability.csv\"\ncapacities = \"capacities.csv\"\n").unwrap();
    let out = drought(&bad, &["validate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.taus[1]"));
}

#[test]
fn missing_input_file_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "");
    let out = drought(&config, &["validate"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("input.availability"));
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let (dir, config) = setup();
    assert_ok(&drought(&config, &["all", "--jobs", "1"]));
    let first = files(&dir.path().join("out"));
    assert_ok(&drought(&config, &["all", "--jobs", "4"]));
    let second = files(&dir.path().join("out"));
    assert_eq!(first.len(), second.len());
    for (a, b) in first.iter().zip(&second) {
        assert_eq!(a, b, "{} differs", a.0);
    }
}

#[test]
fn derived_steps_need_catalogs() {
    let (_dir, config) = setup();
    for step in ["stats", "effects", "mass", "storage"] {
        let out = drought(&config, &[step]);
        assert_eq!(out.status.code(), Some(2), "{step}");
        assert!(String::from_utf8_lossy(&out.stderr).contains("drought detect"), "{step}");
    }
}

#[test]
fn stats_mass_and_storage_from_catalogs() {
    let (dir, config) = setup();
    assert_ok(&drought(&config, &["detect"]));
    for step in ["stats", "effects", "mass", "storage"] {
        assert_ok(&drought(&config, &[step]));
    }
    let root = dir.path().join("out");
    for name in ["frequency.csv", "return_periods.csv", "maxdur.csv", "effects.csv"] {
        assert!(root.join(name).is_file(), "{name}");
    }
    let freq = fs::read_to_string(root.join("frequency.csv")).unwrap();
    assert!(freq.starts_with("key,tau,duration_h,freq_per_year\n"));

    // Two years form one pair.
    let report = fs::read_to_string(root.join("mass_report.csv")).unwrap();
    assert!(report.lines().skip(1).all(|l| l.contains(",1982/1983,")));
    let mass = fs::read_to_string(root.join("mass.csv")).unwrap();
    assert!(mass.lines().any(|l| l.starts_with("DE,1982/1983")));

    let storage = fs::read_to_string(root.join("storage.csv")).unwrap();
    assert!(storage.starts_with("region,scenario,required_capacity,discharge_start,discharge_end\n"));
    for row in ["DE,island", "FR,island", "CP,copperplate"] {
        assert!(storage.contains(row), "{row}");
    }
    let coincidence = fs::read_to_string(root.join("coincidence.csv")).unwrap();
    assert!(coincidence.lines().any(|l| l.starts_with("DE,island")));

    let effects = fs::read_to_string(root.join("effects.csv")).unwrap();
    assert!(effects.contains("Average,portfolio,pv"));
    assert!(effects.contains("DE,balancing,portfolio"));
}

#[test]
fn changed_grid_requires_a_new_detect() {
    let (dir, config) = setup();
    assert_ok(&drought(&config, &["detect"]));
    let out = drought(&config, &["stats", "--taus", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rerun `drought detect`"));
    assert!(dir.path().join("out/catalogs").is_dir());
}
