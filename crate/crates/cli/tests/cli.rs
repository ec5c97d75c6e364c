use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const MODEL: &str = r#"{
  "coef_names": ["(Intercept)", "x", "z", "x:z"],
  "coefs": [0.3, 0.2, -0.1, 0.4],
  "covar": [[0.01, 0, 0, 0], [0, 0.04, 0.005, -0.004], [0, 0.005, 0.03, 0.002], [0, -0.004, 0.002, 0.02]],
  "var_ranges": {"x": [-3, 3], "z": [-2, 2]}
}"#;

fn jnk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jnk"))
        .args(args)
        .output()
        .unwrap()
}

fn draws_csv(shift: f64) -> String {
    let mut csv = String::from("x,Z,x:Z\n");
    for s in 0..300 {
        let t = s as f64;
        csv += &format!(
            "{},{},{}\n",
            shift + 0.3 * (0.37 * t).sin(),
            0.2 * (0.11 * t).cos(),
            0.4 + 0.1 * (0.53 * t).sin()
        );
    }
    csv
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.json"), MODEL).unwrap();
    let input = path(dir.path(), "m.json");
    let (a, b) = (path(dir.path(), "a"), path(dir.path(), "b"));
    for out in [&a, &b] {
        let o = jnk(&[
            "freq2", "--input", &input, "--theta1", "x", "--theta2", "z", "--out", out,
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["x_table.csv", "x_plot.svg", "z_table.csv", "z_plot.svg"] {
        assert_eq!(
            fs::read(Path::new(&a).join(f)).unwrap(),
            fs::read(Path::new(&b).join(f)).unwrap(),
            "{f}"
        );
    }
    // running again into the same directory overwrites in place
    let before = fs::read(Path::new(&a).join("x_plot.svg")).unwrap();
    jnk(&[
        "freq2", "--input", &input, "--theta1", "x", "--theta2", "z", "--out", &a,
    ]);
    assert_eq!(fs::read(Path::new(&a).join("x_plot.svg")).unwrap(), before);
}

#[test]
fn summary_lines_per_view() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.json"), MODEL).unwrap();
    let o = jnk(&[
        "freq2",
        "--input",
        &path(dir.path(), "m.json"),
        "--theta1",
        "x",
        "--theta2",
        "z",
        "--out",
        &path(dir.path(), "out"),
    ]);
    let stdout = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    assert_eq!(lines.len(), 2, "{stdout}");
    assert!(lines[0].starts_with("x: JN boundaries in z:"), "{stdout}");
    assert!(lines[1].starts_with("z: JN boundaries in x:"), "{stdout}");
}

#[test]
fn overrides_and_style_flags_reach_the_output() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.json"), MODEL).unwrap();
    let out = path(dir.path(), "out");
    let o = jnk(&[
        "freq2",
        "--input",
        &path(dir.path(), "m.json"),
        "--theta1",
        "x",
        "--theta2",
        "z",
        "--theta2-vals",
        "-1,0,1",
        "--sig-color",
        "#112233",
        "--out",
        &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(Path::new(&out).join("x_table.csv")).unwrap();
    let mods: Vec<&str> = table
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(mods, ["-1", "0", "1"]);
    let svg = fs::read_to_string(Path::new(&out).join("z_plot.svg")).unwrap();
    assert!(svg.contains("#112233"));
}

#[test]
fn grouped_bayes_reads_a_directory() {
    let dir = tempfile::tempdir().unwrap();
    let groups = dir.path().join("groups");
    fs::create_dir(&groups).unwrap();
    fs::write(groups.join("Site B.csv"), draws_csv(0.5)).unwrap();
    fs::write(groups.join("site_a.csv"), draws_csv(-0.5)).unwrap();
    fs::write(groups.join("notes.txt"), "ignored").unwrap();
    let out = path(dir.path(), "out");
    let o = jnk(&[
        "bayes2",
        "--input",
        &groups.to_string_lossy(),
        "--theta1",
        "x",
        "--theta2",
        "Z",
        "--theta1-vals",
        "-1:1:5",
        "--theta2-vals",
        "-1,1",
        "--grouped",
        "--out",
        &out,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for sub in ["site_b", "site_a"] {
        for f in ["x_table.csv", "x_plot.svg", "z_table.csv", "z_plot.svg"] {
            assert!(Path::new(&out).join(sub).join(f).is_file(), "{sub}/{f}");
        }
    }
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(
        stdout.lines().next().unwrap().starts_with("[Site B] x:"),
        "{stdout}"
    );
    let table = fs::read_to_string(Path::new(&out).join("site_a/z_table.csv")).unwrap();
    assert_eq!(
        table.lines().next(),
        Some("mod_val_1,post_mean,post_sd,bayes_p,nonsignificant")
    );
    assert_eq!(table.lines().count(), 6);
}

#[test]
fn computation_errors_exit_1_without_output() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("m.json"), MODEL).unwrap();
    let out = path(dir.path(), "out");
    let cases: [&[&str]; 3] = [
        &[
            "freq2",
            "--input",
            &path(dir.path(), "m.json"),
            "--theta1",
            "x",
            "--theta2",
            "q",
        ],
        &[
            "freq2",
            "--input",
            &path(dir.path(), "missing.json"),
            "--theta1",
            "x",
            "--theta2",
            "z",
        ],
        &[
            "bayes2",
            "--input",
            &path(dir.path(), "m.json"),
            "--theta1",
            "x",
            "--theta2",
            "z",
            "--theta1-vals",
            "0,1",
            "--theta2-vals",
            "0,1",
        ],
    ];
    for args in cases {
        let mut full = args.to_vec();
        full.extend(["--out", &out]);
        let o = jnk(&full);
        assert_eq!(
            o.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
        assert!(!Path::new(&out).exists(), "{args:?} left output behind");
    }
}

#[test]
fn help_exits_cleanly() {
    let o = jnk(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    for cmd in ["freq2", "freq3", "bayes2", "bayes3"] {
        assert!(text.contains(cmd), "{text}");
    }
    let o = jnk(&["bayes3", "--help"]);
    let text = String::from_utf8(o.stdout).unwrap();
    for flag in [
        "--theta3-vals",
        "--thresholds",
        "--burn-in",
        "--crosshatch-non-sig",
        "--grid-density",
    ] {
        assert!(text.contains(flag), "missing {flag}");
    }
}
