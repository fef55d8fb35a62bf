use std::path::{Path, PathBuf};
use std::process::Command as Process;

use gibbs_lab::output::COLUMNS;
use gibbs_lab::{Command, ExperimentSpec, RunContext};

fn bin() -> Process {
    Process::new(env!("CARGO_BIN_EXE_gibbs-lab"))
}

fn specs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("specs")
}

fn write_spec(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// CSV text without the `wall_ms` column.
fn without_wall(csv: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(csv.as_bytes());
    let headers = r.headers().unwrap().clone();
    let wall = headers.iter().position(|h| h == "wall_ms").unwrap();
    let mut rows = vec![headers.iter().filter(|h| *h != "wall_ms").map(String::from).collect()];
    for rec in r.records() {
        let rec = rec.unwrap();
        rows.push(rec.iter().enumerate().filter(|(i, _)| *i != wall).map(|(_, v)| v.to_string()).collect());
    }
    rows
}

const CONCENTRATION: &str = r#"
command = "concentration"
id = "conc"
seed = 5
sizes = [6, 8]
betas = [0.3]
samples = 40

[model]
family = "ising"
d = 3
"#;

#[test]
fn example_specs_parse() {
    let mut seen = 0;
    for entry in std::fs::read_dir(specs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let spec = ExperimentSpec::load(&path).unwrap_or_else(|e| panic!("{}: {e:#}", path.display()));
        let stem = path.file_stem().unwrap().to_str().unwrap();
        assert!(stem.starts_with(spec.command.name()), "{stem} holds a {} spec", spec.command.name());
        seen += 1;
    }
    assert!(seen >= 8);
}

#[test]
fn unknown_keys_are_rejected() {
    let typo = CONCENTRATION.replace("samples = 40", "sample = 40");
    assert!(ExperimentSpec::from_toml(&typo).is_err());
    let nested = CONCENTRATION.replace("d = 3", "d = 3\ndegree = 3");
    assert!(ExperimentSpec::from_toml(&nested).is_err());
    let family = CONCENTRATION.replace("\"ising\"", "\"glass\"");
    assert!(ExperimentSpec::from_toml(&family).is_err());
    let measure = "command = \"decompose\"\nid = \"d\"\neps = 0.3\n[measure]\npreset = \"mixture\"\nn = 8\np = 0.5\n";
    assert!(ExperimentSpec::from_toml(measure).is_err());
    assert!(ExperimentSpec::from_toml(&measure.replace("p = 0.5\n", "")).is_ok());
}

#[test]
fn spec_checks() {
    let bad_id = CONCENTRATION.replace("id = \"conc\"", "id = \"../x\"");
    assert!(ExperimentSpec::from_toml(&bad_id).is_err());
    let bad_beta = CONCENTRATION.replace("[0.3]", "[-0.3]");
    assert!(ExperimentSpec::from_toml(&bad_beta).is_err());

    let spec = ExperimentSpec::from_toml(&CONCENTRATION.replace("seed = 5\n", "")).unwrap();
    assert!(RunContext::resolve(&spec, None, 1 << 20).is_err());
    assert_eq!(RunContext::resolve(&spec, Some(9), 1 << 20).unwrap().seed, 9);

    let spec = ExperimentSpec::from_toml(CONCENTRATION).unwrap();
    assert_eq!(RunContext::resolve(&spec, Some(9), 1 << 20).unwrap().seed, 9);
    assert_eq!(RunContext::resolve(&spec, None, 4096).unwrap().budget, 4096);
    let greedy = ExperimentSpec::from_toml(&format!("budget = 8192\n{CONCENTRATION}")).unwrap();
    assert!(RunContext::resolve(&greedy, None, 4096).is_err());
    assert_eq!(RunContext::resolve(&greedy, None, 8192).unwrap().budget, 8192);
}

#[test]
fn reruns_are_identical_apart_from_wall_time() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "conc.toml", CONCENTRATION);
    let mut outputs = Vec::new();
    for (k, jobs) in ["1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("run{k}"));
        let status = bin()
            .args(["concentration", "--spec"])
            .arg(&spec)
            .arg("--out")
            .arg(&out)
            .args(["--jobs", jobs])
            .status()
            .unwrap();
        assert!(status.success());
        let csv = std::fs::read_to_string(out.join("conc.csv")).unwrap();
        let json = std::fs::read_to_string(out.join("conc.json")).unwrap();
        outputs.push((csv, json));
    }
    assert_eq!(without_wall(&outputs[0].0), without_wall(&outputs[1].0));
    assert_eq!(outputs[0].1, outputs[1].1);

    let header = outputs[0].0.lines().next().unwrap();
    assert_eq!(header, COLUMNS.join(","));
    let report: serde_json::Value = serde_json::from_str(&outputs[0].1).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["command"], "concentration");
    assert_eq!(report["seed"], 5);

    // --seed overrides the experiment spec and changes the draws
    let out = dir.path().join("other");
    let status = bin().args(["concentration", "--spec"]).arg(&spec).arg("--out").arg(&out).args(["--seed", "6"]).status().unwrap();
    assert!(status.success());
    let other = std::fs::read_to_string(out.join("conc.csv")).unwrap();
    assert_ne!(without_wall(&other), without_wall(&outputs[0].0));
}

#[test]
fn rows_carry_provenance() {
    let spec = ExperimentSpec::from_toml(CONCENTRATION).unwrap();
    let ctx = RunContext::resolve(&spec, None, 1 << 20).unwrap();
    let out = gibbs_lab::execute(&spec, &ctx).unwrap();
    for r in &out.rows {
        assert_eq!(r.schema_version, 1);
        assert_eq!(r.experiment, "conc");
        assert_eq!(r.code_version, env!("CARGO_PKG_VERSION"));
        assert!(r.seed != 0);
    }
    let measured: Vec<_> = out.rows.iter().filter(|r| r.quantity == "mean_log_z").collect();
    assert_eq!(measured.len(), 2);
    assert!(measured.iter().all(|r| r.samples == Some(40) && r.band.is_some()));
    assert_ne!(measured[0].seed, measured[1].seed);
}

#[test]
fn row_seeds_do_not_depend_on_the_grid() {
    let small = ExperimentSpec::from_toml(CONCENTRATION).unwrap();
    let big = ExperimentSpec::from_toml(&CONCENTRATION.replace("[6, 8]", "[4, 6, 8]")).unwrap();
    let ctx = RunContext::resolve(&small, None, 1 << 20).unwrap();
    let a = gibbs_lab::execute(&small, &ctx).unwrap().rows;
    let b = gibbs_lab::execute(&big, &ctx).unwrap().rows;
    let pick = |rows: &[gibbs_lab::output::ResultRow]| {
        rows.iter().find(|r| r.n == Some(8) && r.quantity == "variance").map(|r| (r.value, r.seed)).unwrap()
    };
    assert_eq!(pick(&a), pick(&b));
}

#[test]
fn budget_violations_abort_the_row_only() {
    let spec = ExperimentSpec::from_toml(&format!("budget = 512\n{}", CONCENTRATION.replace("[6, 8]", "[8, 10]"))).unwrap();
    let ctx = RunContext::resolve(&spec, None, 1 << 20).unwrap();
    let rows = gibbs_lab::execute(&spec, &ctx).unwrap().rows;
    let at = |n: usize| rows.iter().filter(|r| r.n == Some(n)).collect::<Vec<_>>();
    assert!(at(8).iter().any(|r| r.quantity == "variance" && r.value.is_finite()));
    let aborted = at(10);
    assert_eq!(aborted.len(), 1);
    assert_eq!(aborted[0].quantity, "aborted");
    assert!(aborted[0].value.is_nan());
}

#[test]
fn cli_errors() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "conc.toml", CONCENTRATION);
    // subcommand and spec disagree
    let out = bin().args(["verify-bethe", "--spec"]).arg(&spec).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("concentration"));
    // cap below the experiment spec budget
    let greedy = write_spec(dir.path(), "greedy.toml", &format!("budget = 8192\n{CONCENTRATION}"));
    let out = bin().args(["concentration", "--spec"]).arg(&greedy).args(["--budget-cap", "4096"]).output().unwrap();
    assert!(!out.status.success());
    let missing = bin().args(["concentration", "--spec", "/nonexistent.toml"]).output().unwrap();
    assert!(!missing.status.success());
    assert!(!bin().args(["concentration"]).output().unwrap().status.success());
}

#[test]
fn output_stem_and_empty_csv() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{CONCENTRATION}\n[output]\nstem = \"custom\"\n");
    let spec = ExperimentSpec::from_toml(&text).unwrap();
    assert_eq!(spec.command, Command::Concentration);
    let ctx = RunContext::resolve(&spec, None, 1 << 20).unwrap();
    gibbs_lab::run_to_dir(&spec, &ctx, dir.path()).unwrap();
    assert!(dir.path().join("custom.csv").exists() && dir.path().join("custom.json").exists());

    let empty = dir.path().join("empty.csv");
    gibbs_lab::output::write_csv(&empty, &[]).unwrap();
    assert_eq!(std::fs::read_to_string(&empty).unwrap().trim(), COLUMNS.join(","));
}

#[test]
fn schema_doc_lists_every_column() {
    let doc = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("SCHEMA.md")).unwrap();
    for c in COLUMNS {
        assert!(doc.contains(&format!("`{c}`")), "{c} undocumented");
    }
}
