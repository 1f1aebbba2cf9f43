//! Performance tables built from run reports.

use std::path::PathBuf;

use ipocp::Method;

use crate::error::CliError;
use crate::report::Report;

const HEADER: [&str; 5] = ["Method", "decay ratio α", "number of iterations", "final length of time array", "exec. time"];

fn method_label(m: Method) -> &'static str {
    match m {
        Method::Primal => "Primal",
        Method::PrimalDual => "Primal-dual",
    }
}

fn format_alpha(a: f64) -> String {
    if a != 0.0 && a.abs() < 1e-3 {
        format!("{a:e}")
    } else {
        format!("{a}")
    }
}

pub fn load(path: &PathBuf) -> Result<Report, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.clone(), source })?;
    serde_json::from_str(&text).map_err(|e| CliError::Malformed { path: path.clone(), message: e.to_string() })
}

/// One table per problem, in order of first appearance, primal rows first.
pub fn render(reports: &[Report]) -> String {
    let mut problems: Vec<&str> = Vec::new();
    for r in reports {
        if !problems.contains(&r.run.problem.as_str()) {
            problems.push(&r.run.problem);
        }
    }
    let mut out = String::new();
    for (i, problem) in problems.iter().enumerate() {
        let mut rows: Vec<&Report> = reports.iter().filter(|r| r.run.problem == *problem).collect();
        rows.sort_by_key(|r| r.run.method == Method::PrimalDual);
        let cells: Vec<[String; 5]> = rows
            .iter()
            .map(|r| {
                [
                    method_label(r.run.method).to_string(),
                    format_alpha(r.run.alpha),
                    r.run.eps_iterations.to_string(),
                    r.run.final_mesh_len.to_string(),
                    format!("{:.2} s", r.run.wall_time),
                ]
            })
            .collect();
        let mut widths = HEADER.map(|h| h.chars().count());
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |row: &[String]| {
            let parts: Vec<String> = row
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(j, (c, w))| {
                    let pad = " ".repeat(w - c.chars().count());
                    if j == 0 { format!("{pad}{c}") } else { format!("{c}{pad}") }
                })
                .collect();
            parts.join(" | ").trim_end().to_string()
        };
        if i > 0 {
            out.push('\n');
        }
        out.push_str(problem);
        out.push('\n');
        out.push_str(&line(&HEADER.map(String::from)));
        out.push('\n');
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&rule.join("-+-"));
        out.push('\n');
        for row in &cells {
            out.push_str(&line(row));
            out.push('\n');
        }
    }
    out
}

pub fn cmd_table(paths: &[PathBuf]) -> Result<String, CliError> {
    if paths.is_empty() {
        return Err(CliError::Usage("table needs at least one report file".into()));
    }
    let reports = paths.iter().map(load).collect::<Result<Vec<_>, _>>()?;
    Ok(render(&reports))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_formatting() {
        assert_eq!(format_alpha(0.35), "0.35");
        assert_eq!(format_alpha(1e-7), "1e-7");
        assert_eq!(format_alpha(0.5), "0.5");
    }
}
