use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use jnk_core::format::g17;
use jnk_core::{
    load_model_spec, load_model_specs, load_posterior_csv, render_svg, run_bayes, run_freq,
    run_freq_grouped, BayesResult, Error, FreqOptions, FreqResult, PosteriorDrawMatrix, Result,
};
use log::info;

use crate::args::RunConfig;

/// A file to write, relative to the output directory.
#[derive(Debug)]
pub struct OutputFile {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

/// Everything one invocation produces, held in memory until all views succeed.
#[derive(Debug, Default)]
pub struct RunOutput {
    pub files: Vec<OutputFile>,
    pub summary: Vec<String>,
}

/// Lowercases and maps anything outside `[a-z0-9_]` to `_`.
pub fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| c.to_ascii_lowercase())
        .map(|c| {
            if c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() {
        "_".to_string()
    } else {
        s
    }
}

/// Sanitized, collision-free file stems in view order.
fn file_stems<'a>(names: impl IntoIterator<Item = &'a str>) -> Vec<String> {
    let mut seen = HashSet::new();
    names
        .into_iter()
        .enumerate()
        .map(|(i, name)| {
            let base = sanitize(name);
            let stem = if seen.contains(&base) {
                format!("{base}_{}", i + 1)
            } else {
                base
            };
            seen.insert(stem.clone());
            stem
        })
        .collect()
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    write(&mut buf).expect("writing to memory cannot fail");
    buf
}

fn freq_outputs(
    cfg: &RunConfig,
    result: &FreqResult,
    dir: &Path,
    out: &mut RunOutput,
) -> Result<()> {
    let prefix = result
        .group_label
        .as_ref()
        .map(|l| format!("[{l}] "))
        .unwrap_or_default();
    let stems = file_stems(result.tables.iter().map(|t| t.focal.as_str()));
    for (i, table) in result.tables.iter().enumerate() {
        let stem = &stems[i];
        out.files.push(OutputFile {
            path: dir.join(format!("{stem}_table.csv")),
            bytes: csv_bytes(|b| table.write_csv(b)),
        });
        out.files.push(OutputFile {
            path: dir.join(format!("{stem}_plot.svg")),
            bytes: render_svg(&result.plot_specs[i], cfg.width, cfg.height)?,
        });

        let line = match &result.boundaries[i] {
            Some(roots) => {
                let shown: Vec<String> = roots
                    .iter()
                    .map(|b| {
                        let tag = if b.inside_range {
                            ""
                        } else {
                            " (outside range)"
                        };
                        format!("{}{tag}", g17(b.value))
                    })
                    .collect();
                let roots = if shown.is_empty() {
                    "none".to_string()
                } else {
                    shown.join(", ")
                };
                format!(
                    "{prefix}{}: JN boundaries in {}: {roots}; {}/{} grid points significant",
                    table.focal,
                    table.moderator_names[0],
                    table.significant_count(),
                    table.rows.len()
                )
            }
            None => format!(
                "{prefix}{}: {}/{} cells significant ({:.1}%)",
                table.focal,
                table.significant_count(),
                table.rows.len(),
                100.0 * table.significant_count() as f64 / table.rows.len() as f64
            ),
        };
        out.summary.push(line);
    }
    Ok(())
}

fn bayes_outputs(
    cfg: &RunConfig,
    label: Option<&str>,
    result: &BayesResult,
    dir: &Path,
    out: &mut RunOutput,
) -> Result<()> {
    let prefix = label.map(|l| format!("[{l}] ")).unwrap_or_default();
    let specs = result.plot_specs(&cfg.style)?;
    let stems = file_stems(result.focal_names());
    let svg = |i: usize| render_svg(&specs[i], cfg.width, cfg.height);
    match result {
        BayesResult::TwoWay(views) => {
            for (i, cp) in views.iter().enumerate() {
                let stem = &stems[i];
                out.files.push(OutputFile {
                    path: dir.join(format!("{stem}_table.csv")),
                    bytes: csv_bytes(|b| cp.write_csv(b, &cfg.thresholds)),
                });
                out.files.push(OutputFile {
                    path: dir.join(format!("{stem}_plot.svg")),
                    bytes: svg(i)?,
                });
                let outside = cp
                    .points
                    .iter()
                    .filter(|p| !cfg.thresholds.is_nonsignificant(p.summary.bayes_p))
                    .count();
                out.summary.push(format!(
                    "{prefix}{}: {outside}/{} values of {} with bayes_p outside [{}, {}]",
                    cp.focal,
                    cp.points.len(),
                    cp.moderator,
                    cfg.thresholds.low(),
                    cfg.thresholds.high()
                ));
            }
        }
        BayesResult::ThreeWay(grids) => {
            for (i, grid) in grids.iter().enumerate() {
                let stem = &stems[i];
                out.files.push(OutputFile {
                    path: dir.join(format!("{stem}_table.csv")),
                    bytes: csv_bytes(|b| grid.write_csv(b)),
                });
                out.files.push(OutputFile {
                    path: dir.join(format!("{stem}_plot.svg")),
                    bytes: svg(2 * i)?,
                });
                out.files.push(OutputFile {
                    path: dir.join(format!("{stem}_bayesp_plot.svg")),
                    bytes: svg(2 * i + 1)?,
                });
                let outside = grid.cells.iter().filter(|c| !c.nonsignificant).count();
                out.summary.push(format!(
                    "{prefix}{}: {outside}/{} cells with bayes_p outside [{}, {}]",
                    grid.focal,
                    grid.cells.len(),
                    cfg.thresholds.low(),
                    cfg.thresholds.high()
                ));
            }
        }
    }
    Ok(())
}

/// Posterior draw files of a grouped Bayesian run: every `*.csv` in `dir`,
/// labelled by file stem, in name order.
fn load_draw_groups(cfg: &RunConfig) -> Result<Vec<(String, PosteriorDrawMatrix)>> {
    let dir = &cfg.input;
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|entry| entry.map(|e| e.path()).map_err(|e| Error::io(dir, e)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::NoGroups);
    }
    paths
        .iter()
        .map(|p| {
            let label = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            load_posterior_csv(p, cfg.burn_in, cfg.thin)
                .map(|pdm| (label.clone(), pdm))
                .map_err(|e| e.in_group(&label))
        })
        .collect()
}

/// Runs the analysis and renders every output in memory. Nothing touches
/// the output directory here.
pub fn compute(cfg: &RunConfig) -> Result<RunOutput> {
    let thetas: Vec<&str> = cfg.thetas.iter().map(String::as_str).collect();
    let mut out = RunOutput::default();

    if cfg.mode.is_bayes() {
        let values: Vec<Vec<f64>> = cfg
            .values
            .iter()
            .map(|v| v.clone().expect("Bayesian modes carry explicit values"))
            .collect();
        let groups = if cfg.grouped {
            load_draw_groups(cfg)?
        } else {
            vec![(
                String::new(),
                load_posterior_csv(&cfg.input, cfg.burn_in, cfg.thin)?,
            )]
        };
        let group_dirs = file_stems(groups.iter().map(|(l, _)| l.as_str()));
        for ((label, pdm), sub) in groups.iter().zip(&group_dirs) {
            let wrap = |e: Error| if cfg.grouped { e.in_group(label) } else { e };
            let result = run_bayes(pdm, &thetas, &values, cfg.thresholds).map_err(wrap)?;
            let (label, dir) = if cfg.grouped {
                (Some(label.as_str()), PathBuf::from(sub))
            } else {
                (None, PathBuf::new())
            };
            bayes_outputs(cfg, label, &result, &dir, &mut out).map_err(wrap)?;
        }
    } else {
        let overrides: BTreeMap<String, Vec<f64>> = cfg
            .thetas
            .iter()
            .zip(&cfg.values)
            .filter_map(|(t, v)| v.clone().map(|v| (t.clone(), v)))
            .collect();
        let opts = FreqOptions {
            config: cfg.significance,
            range_size: cfg.range_size,
            overrides,
            style: cfg.style.clone(),
        };
        if cfg.grouped {
            let results = run_freq_grouped(&load_model_specs(&cfg.input)?, &thetas, &opts)?;
            let labels: Vec<&str> = results
                .iter()
                .map(|r| r.group_label.as_deref().unwrap_or_default())
                .collect();
            for (result, sub) in results.iter().zip(file_stems(labels)) {
                freq_outputs(cfg, result, Path::new(&sub), &mut out)?;
            }
        } else {
            let result = run_freq(&load_model_spec(&cfg.input)?, &thetas, &opts)?;
            freq_outputs(cfg, &result, Path::new(""), &mut out)?;
        }
    }
    Ok(out)
}

/// Writes all files under `root`. A file that fails midway is removed.
pub fn write_outputs(root: &Path, output: &RunOutput) -> Result<()> {
    for file in &output.files {
        let path = root.join(&file.path);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        if let Err(e) = fs::write(&path, &file.bytes) {
            let _ = fs::remove_file(&path);
            return Err(Error::io(&path, e));
        }
        info!("wrote {}", path.display());
    }
    Ok(())
}

pub fn execute(cfg: &RunConfig) -> Result<Vec<String>> {
    let output = compute(cfg)?;
    write_outputs(&cfg.out, &output)?;
    Ok(output.summary)
}
