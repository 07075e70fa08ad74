//! CSV and JSON-lines output. Everything is rendered in memory first and
//! then moved into place, so a failed run leaves no partial files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::run::RunOutput;

pub struct Rendered {
    pub files: Vec<(&'static str, String)>,
    pub failed_reports: usize,
}

fn header(config: &RunConfig, runs: &[RunOutput]) -> CliResult<String> {
    let mut h = String::new();
    let _ = writeln!(h, "# wgfb {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(h, "# config: {}", serde_json::to_string(config)?);
    for r in runs {
        let _ = writeln!(h, "# run {}: {}", r.echo.run, serde_json::to_string(&r.echo)?);
    }
    Ok(h)
}

pub fn render(config: &RunConfig, runs: &[RunOutput]) -> CliResult<Rendered> {
    let head = header(config, runs)?;
    let mut spectrum = head.clone();
    spectrum.push_str("run,engine,nu_over_gamma,S_tilde\n");
    let mut g2 = head;
    g2.push_str("run,engine,gamma_t,g2\n");
    let mut report = String::new();
    let mut failed_reports = 0;
    for r in runs {
        let gamma = r.echo.params.gamma;
        let scale = if gamma > 0.0 { gamma } else { 1.0 };
        for (tag, s) in &r.spectra {
            for (nu, v) in s.grid.iter().zip(&s.inelastic) {
                let _ = writeln!(spectrum, "{},{},{},{}", r.echo.run, tag.as_str(), nu / scale, v);
            }
        }
        for (tag, c) in &r.g2 {
            for (t, v) in c.grid.iter().zip(&c.values) {
                let _ = writeln!(g2, "{},{},{},{}", r.echo.run, tag.as_str(), t * scale, v);
            }
        }
        for rep in &r.reports {
            failed_reports += usize::from(!rep.passed);
            report.push_str(&serde_json::to_string(rep)?);
            report.push('\n');
        }
    }
    Ok(Rendered { files: vec![("spectrum.csv", spectrum), ("g2.csv", g2), ("report.jsonl", report)], failed_reports })
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Writes every file under a temporary name, then renames them all.
pub fn write_all(dir: &Path, rendered: &Rendered) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    let result = (|| {
        for (name, body) in &rendered.files {
            let tmp = dir.join(format!(".{name}.partial"));
            fs::write(&tmp, body).map_err(io(&tmp))?;
            staged.push((tmp, dir.join(name)));
        }
        for (tmp, dest) in &staged {
            fs::rename(tmp, dest).map_err(io(dest))?;
        }
        Ok(())
    })();
    if result.is_err() {
        for (tmp, _) in &staged {
            let _ = fs::remove_file(tmp);
        }
    }
    result
}
