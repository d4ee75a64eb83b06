use std::path::Path;
use std::process::Command;

fn run(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wage-impute")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn synth(dir: &Path, n: &str) -> String {
    let data = dir.join("pop").display().to_string();
    assert_eq!(run(&["synth", "--out", &data, "--seed", "2", "--n-establishments", n]).0, 0);
    data
}

#[test]
fn missing_data_directory_is_a_config_error() {
    let (code, err) = run(&["fit", "--data", "/nonexistent/dir", "--out", "/tmp/x.json"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn bad_flag_value_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "100");
    let out = tmp.path().join("m.json").display().to_string();
    assert_eq!(run(&["fit", "--data", &data, "--out", &out, "--model-spec", "BOTH-AND-MORE"]).0, 2);
    assert_eq!(run(&["fit", "--data", &data, "--out", &out, "--winsor-pcts", "0.9", "0.1"]).0, 2);
}

#[test]
fn invalid_dataset_is_rejected_on_load() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "60");
    let path = Path::new(&data).join("establishments.csv");
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = header.iter().position(|h| *h == "empl").unwrap();
    let mut cells: Vec<String> = lines[1].split(',').map(String::from).collect();
    cells[col] = "0".into();
    lines[1] = cells.join(",");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    let (code, err) = run(&["estimate", "--data", &data, "--soc", "11-3021", "--out", "/tmp/never.csv"]);
    assert_eq!(code, 2);
    assert!(err.contains("empl"), "{err}");
}

#[test]
fn imputing_without_a_model_for_the_occupation() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "300");
    let model = tmp.path().join("m.json");
    std::fs::write(&model, "{\"models\":{}}").unwrap();
    // synthesized data is complete, so blank one panel's counts to make it absent
    let est = Path::new(&data).join("establishments.csv");
    let text = std::fs::read_to_string(&est).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let rcol = header.iter().position(|h| *h == "responded").unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cells: Vec<String> = lines[1].split(',').map(String::from).collect();
    let id = cells[0].clone();
    cells[rcol] = "0".into();
    lines[1] = cells.join(",");
    std::fs::write(&est, lines.join("\n") + "\n").unwrap();
    let pan = Path::new(&data).join("panels.csv");
    let text = std::fs::read_to_string(&pan).unwrap();
    let out: Vec<String> = text
        .lines()
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            if cells[0] == id {
                // keep id, soc, total; blank the twelve count cells
                let mut c: Vec<String> = cells.iter().map(|s| s.to_string()).collect();
                for x in c.iter_mut().skip(3).take(12) {
                    x.clear();
                }
                if c.len() > 15 {
                    c[15] = "observed".into();
                }
                c.join(",")
            } else {
                l.to_string()
            }
        })
        .collect();
    std::fs::write(&pan, out.join("\n") + "\n").unwrap();
    let dest = tmp.path().join("imp").display().to_string();
    let (code, err) = run(&["impute", "--data", &data, "--model", &model.display().to_string(), "--out", &dest]);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn empty_domain_exit_code() {
    let tmp = tempfile::tempdir().unwrap();
    let data = synth(tmp.path(), "100");
    let out = tmp.path().join("e.csv").display().to_string();
    let (code, _) = run(&["estimate", "--data", &data, "--soc", "11-3021", "--naics", "11", "--out", &out]);
    assert_eq!(code, 5);
    assert_eq!(run(&["estimate", "--data", &data, "--soc", "11-3021", "--out", &out]).0, 0);
}

#[test]
fn help_lists_every_command() {
    let out = Command::new(env!("CARGO_BIN_EXE_wage-impute")).arg("--help").output().unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["synth", "fit", "impute", "estimate", "simulate", "curve"] {
        assert!(text.contains(cmd));
    }
}
