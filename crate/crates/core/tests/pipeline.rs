use std::fs;

use jnk_core::render::PlotData;
use jnk_core::{
    load_model_specs, load_posterior_csv, render_svg, run_bayes, run_bayes_grouped, run_freq,
    run_freq_grouped, BayesResult, Error, FreqOptions, ModelSpec, Thresholds,
};

const TWO_WAY: &str = r#"{
  "coef_names": ["(Intercept)", "x", "z", "x:z"],
  "coefs": [0.3, 0.2, -0.1, 0.4],
  "covar": [[0.01, 0, 0, 0], [0, 0.04, 0.005, -0.004], [0, 0.005, 0.03, 0.002], [0, -0.004, 0.002, 0.02]],
  "var_ranges": {"x": [-3, 3], "z": [-2, 2]}
}"#;

fn parse(svg: &[u8]) -> roxmltree::Document<'_> {
    roxmltree::Document::parse(std::str::from_utf8(svg).unwrap()).expect("well-formed SVG")
}

fn three_way_draws(n: usize) -> String {
    let mut csv = String::from("x,z,w,x:z,x:w,z:w,x:z:w\n");
    for s in 0..n {
        let t = s as f64;
        let row = [
            0.5 + 0.3 * (0.37 * t).sin(),
            0.2 * (0.11 * t).cos(),
            -0.1 + 0.2 * (0.53 * t).sin(),
            0.3 + 0.1 * (0.29 * t).cos(),
            0.1 * (0.71 * t).sin(),
            0.05 * (0.13 * t).cos(),
            0.2 + 0.1 * (0.43 * t).sin(),
        ];
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        csv += &cells.join(",");
        csv.push('\n');
    }
    csv
}

#[test]
fn two_way_json_to_svg() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    fs::write(&path, TWO_WAY).unwrap();
    let specs = load_model_specs(&path).unwrap();
    assert_eq!(specs.len(), 1);

    let opts = FreqOptions::default();
    let result = run_freq(&specs[0], &["x", "z"], &opts).unwrap();
    assert_eq!(result.tables.len(), 2);
    for (table, plot) in result.tables.iter().zip(&result.plot_specs) {
        assert_eq!(table.rows.len(), 50);
        let mut csv = Vec::new();
        table.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(
            text.lines().next(),
            Some("mod_val_1,theta,se,p,significant")
        );
        assert_eq!(text.lines().count(), 51);

        let svg = render_svg(plot, 640, 480).unwrap();
        let doc = parse(&svg);
        let root = doc.root_element();
        assert_eq!(root.tag_name().name(), "svg");
        assert_eq!(root.attribute("width"), Some("640"));
        assert!(matches!(plot.data, PlotData::Ribbon(_)));
    }
    // both boundaries of x's slope lie in [-2, 2] for this spec, so the
    // ribbon carries significant and non-significant stretches
    let roots = result.boundaries[1].as_ref().unwrap();
    assert_eq!(roots.iter().filter(|b| b.inside_range).count(), 2);
}

#[test]
fn grouped_specs_keep_their_labels() {
    let base = ModelSpec::from_json_str(TWO_WAY).unwrap();
    let json: Vec<String> = ["north", "south"]
        .iter()
        .map(|g| {
            let mut s = base.clone();
            s.group_label = Some(g.to_string());
            s.to_json()
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("groups.json");
    fs::write(&path, format!("[{}]", json.join(","))).unwrap();

    let specs = load_model_specs(&path).unwrap();
    let results = run_freq_grouped(&specs, &["x", "z"], &FreqOptions::default()).unwrap();
    let labels: Vec<_> = results
        .iter()
        .map(|r| r.group_label.as_deref().unwrap())
        .collect();
    assert_eq!(labels, ["north", "south"]);
    assert!(results[1].plot_specs[0].title.ends_with("[south]"));

    let err = run_freq_grouped(&specs, &["x", "nope"], &FreqOptions::default()).unwrap_err();
    assert!(
        matches!(err, Error::Group { ref label, .. } if label == "north"),
        "{err}"
    );
}

#[test]
fn three_way_heatmap_carries_crosshatch_pattern() {
    let mut spec = ModelSpec::from_json_str(TWO_WAY).unwrap();
    spec.coef_names = ["(Intercept)", "x", "z", "w", "x:z", "x:w", "z:w", "x:z:w"]
        .map(String::from)
        .to_vec();
    spec.coefs = vec![0.1, 0.5, 0.2, -0.2, 0.3, 0.1, 0.0, 0.4];
    spec.covar = (0..8)
        .map(|i| (0..8).map(|j| if i == j { 0.04 } else { 0.002 }).collect())
        .collect();
    spec.var_ranges.insert("w".into(), (-1.0, 1.0));
    let spec = spec.validate().unwrap();

    let opts = FreqOptions {
        range_size: 6,
        ..FreqOptions::default()
    };
    let result = run_freq(&spec, &["x", "z", "w"], &opts).unwrap();
    for (table, plot) in result.tables.iter().zip(&result.plot_specs) {
        let svg = render_svg(plot, 800, 600).unwrap();
        let doc = parse(&svg);
        let pattern = doc
            .descendants()
            .find(|n| n.attribute("id") == Some("hatch"))
            .expect("hatch pattern");
        // one path with a 45° and a 135° stroke
        let d = pattern
            .first_element_child()
            .unwrap()
            .attribute("d")
            .unwrap();
        assert_eq!(d.matches('M').count(), 2, "{d}");
        let hatched = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("hatched"))
            .count();
        assert_eq!(hatched, table.rows.len() - table.significant_count());
        let labels = doc
            .descendants()
            .filter(|n| n.attribute("class") == Some("cell-label"))
            .count();
        assert_eq!(labels, 36);
    }
}

#[test]
fn posterior_csv_through_bayes_runs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("draws.csv");
    fs::write(&path, three_way_draws(400)).unwrap();

    // 400 rows, 100 burned, every 3rd kept: 100 draws
    let pdm = load_posterior_csv(&path, 100, 3).unwrap();
    let vals = vec![-1.0, 0.0, 1.0];
    let result = run_bayes(
        &pdm,
        &["x", "z", "w"],
        &[vals.clone(), vals.clone(), vals.clone()],
        Thresholds::default(),
    )
    .unwrap();
    let BayesResult::ThreeWay(grids) = &result else {
        panic!("expected three-way")
    };
    assert_eq!(grids.len(), 3);
    for g in grids {
        assert_eq!(g.cells.len(), 9);
        let mut csv = Vec::new();
        g.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(
            text.lines().next(),
            Some("mod_val_1,mod_val_2,post_mean,post_sd,bayes_p,nonsignificant")
        );
        for c in &g.cells {
            assert_eq!(
                (c.bayes_p * 100.0).fract(),
                0.0,
                "100 draws give whole percentages"
            );
        }
    }
    let specs = result.plot_specs(&Default::default()).unwrap();
    assert_eq!(specs.len(), 6);
    for s in &specs {
        parse(&render_svg(s, 800, 600).unwrap());
    }

    let two = run_bayes(
        &pdm,
        &["x", "z"],
        &[vals.clone(), vals.clone()],
        Thresholds::default(),
    )
    .unwrap();
    let fans = two.plot_specs(&Default::default()).unwrap();
    assert!(fans
        .iter()
        .all(|s| matches!(s.data, PlotData::DensityFan(_))));

    let groups = vec![("a".to_string(), pdm.clone()), ("b".to_string(), pdm)];
    let runs = run_bayes_grouped(
        &groups,
        &["x", "z"],
        &[vals.clone(), vals],
        Thresholds::default(),
    )
    .unwrap();
    assert_eq!(runs.len(), 2);
    assert_eq!(runs[0].result, runs[1].result);
}

#[test]
fn malformed_inputs_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "x,z\n1,2\n3,oops\n").unwrap();
    assert!(load_posterior_csv(&bad, 0, 1).is_err());

    let missing = dir.path().join("missing.json");
    assert!(matches!(load_model_specs(&missing), Err(Error::Io { .. })));

    let asym = TWO_WAY.replace("[0, 0.04, 0.005, -0.004]", "[0, 0.04, 0.5, -0.004]");
    let err = ModelSpec::from_json_str(&asym).unwrap_err();
    assert!(err.to_string().contains("asymmetric"), "{err}");
}
