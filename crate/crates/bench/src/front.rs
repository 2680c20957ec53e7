//! Nondominated filtering of terminal points and front files.

use std::collections::BTreeMap;
use std::path::Path;

use mogd_core::ObjectiveValues;

use crate::csv_io::{create_dir, write_rows};
use crate::error::Result;
use crate::records::RunRecord;

/// `a` dominates `b`: no worse in every objective and different somewhere.
fn dominates(a: &ObjectiveValues, b: &ObjectiveValues) -> bool {
    a.iter().zip(b.iter()).all(|(x, y)| x <= y) && a != b
}

/// Indices of the points that no other point dominates. Equal points are all kept.
pub fn nondominated_filter(points: &[ObjectiveValues]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|p| dominates(p, &points[i])))
        .collect()
}

/// Writes `<dir>/<problem>_<method>.csv` with the nondominated terminal points of
/// each group, columns `f1..fm,x1..xn`. Returns the files written.
pub fn write_fronts(records: &[RunRecord], dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    create_dir(dir)?;
    let mut groups: BTreeMap<(&str, &str), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((&r.problem, &r.method)).or_default().push(r);
    }
    let mut written = Vec::new();
    for ((problem, method), runs) in groups {
        let values: Vec<ObjectiveValues> = runs.iter().map(|r| r.final_values.clone()).collect();
        let keep = nondominated_filter(&values);
        let m = runs[0].final_values.len();
        let n = runs[0].final_point.len();
        let header: Vec<String> = (1..=m).map(|i| format!("f{i}")).chain((1..=n).map(|j| format!("x{j}"))).collect();
        let rows = keep.iter().map(|&i| {
            let r = runs[i];
            r.final_values.iter().chain(r.final_point.iter()).copied().collect::<Vec<f64>>()
        });
        let path = dir.join(format!("{problem}_{method}.csv"));
        write_rows(&path, &header, rows)?;
        written.push(path);
    }
    Ok(written)
}
