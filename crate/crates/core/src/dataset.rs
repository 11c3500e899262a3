//! Design tables and experiment data on disk.
//!
//! Header: `run_id,rep,<categorical>,<z columns...>,x1,...,xm[,y1,y2]`.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::assembly::{DesignRun, FullDesign};
use crate::error::{Error, Result};
use crate::io::{create, csv_reader, fmt_f64, open, parse_f64};
use crate::simplex::SimplexPoint;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Response {
    Y1,
    Y2,
}

impl Response {
    pub const ALL: [Response; 2] = [Response::Y1, Response::Y2];
}

impl fmt::Display for Response {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Response::Y1 => "y1",
            Response::Y2 => "y2",
        })
    }
}

impl FromStr for Response {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "y1" => Ok(Response::Y1),
            "y2" => Ok(Response::Y2),
            _ => Err(Error::param(format!("unknown response {s:?}; expected y1 or y2"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub run: DesignRun,
    pub y1: f64,
    pub y2: f64,
}

impl Observation {
    pub fn get(&self, r: Response) -> f64 {
        match r {
            Response::Y1 => self.y1,
            Response::Y2 => self.y2,
        }
    }
}

/// Design runs with both accuracy responses.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentDataset {
    pub cat_name: String,
    pub z_names: Vec<String>,
    /// Categorical levels, reference level first.
    pub levels: Vec<String>,
    pub observations: Vec<Observation>,
}

impl ExperimentDataset {
    pub fn new(design: &FullDesign, levels: Vec<String>, responses: &[(f64, f64)]) -> Result<Self> {
        if responses.len() != design.runs.len() {
            return Err(Error::param(format!(
                "{} runs but {} response pairs",
                design.runs.len(),
                responses.len()
            )));
        }
        let observations = design
            .runs
            .iter()
            .zip(responses)
            .map(|(run, (y1, y2))| Observation {
                run: run.clone(),
                y1: *y1,
                y2: *y2,
            })
            .collect();
        let ds = ExperimentDataset {
            cat_name: design.cat_name.clone(),
            z_names: design.z_names.clone(),
            levels,
            observations,
        };
        ds.validate()?;
        Ok(ds)
    }

    fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        for o in &self.observations {
            if !ids.insert(o.run.run_id) {
                return Err(Error::param(format!("duplicate run_id {}", o.run.run_id)));
            }
            for y in [o.y1, o.y2] {
                if !(0.0..=1.0).contains(&y) {
                    return Err(Error::param(format!("run {}: response {y} outside [0, 1]", o.run.run_id)));
                }
            }
            if !self.levels.contains(&o.run.z_cat) {
                return Err(Error::param(format!("run {}: unknown level {:?}", o.run.run_id, o.run.z_cat)));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn runs(&self) -> Vec<DesignRun> {
        self.observations.iter().map(|o| o.run.clone()).collect()
    }

    pub fn response(&self, r: Response) -> Vec<f64> {
        self.observations.iter().map(|o| o.get(r)).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        ExperimentDataset {
            cat_name: self.cat_name.clone(),
            z_names: self.z_names.clone(),
            levels: self.levels.clone(),
            observations: indices.iter().map(|&i| self.observations[i].clone()).collect(),
        }
    }

    pub fn design(&self) -> FullDesign {
        FullDesign {
            cat_name: self.cat_name.clone(),
            z_names: self.z_names.clone(),
            runs: self.runs(),
            replicate_count: self.observations.iter().map(|o| o.run.replicate).max().unwrap_or(0),
        }
    }
}

/// Levels in order of first appearance.
pub fn levels_in_order(runs: &[DesignRun]) -> Vec<String> {
    let mut levels: Vec<String> = Vec::new();
    for r in runs {
        if !levels.contains(&r.z_cat) {
            levels.push(r.z_cat.clone());
        }
    }
    levels
}

fn header(design_cat: &str, z_names: &[String], m: usize, with_y: bool) -> String {
    let mut cols = vec!["run_id".to_string(), "rep".to_string(), design_cat.to_string()];
    cols.extend(z_names.iter().cloned());
    cols.extend((1..=m).map(|l| format!("x{l}")));
    if with_y {
        cols.push("y1".into());
        cols.push("y2".into());
    }
    cols.join(",")
}

fn run_fields(run: &DesignRun) -> Vec<String> {
    let mut f = vec![run.run_id.to_string(), run.replicate.to_string(), run.z_cat.clone()];
    f.extend(run.z_cont.iter().chain(run.x.coords()).map(|v| fmt_f64(*v)));
    f
}

pub fn write_design<W: Write>(mut w: W, design: &FullDesign) -> Result<()> {
    writeln!(w, "{}", header(&design.cat_name, &design.z_names, design.x_dim(), false))?;
    for run in &design.runs {
        writeln!(w, "{}", run_fields(run).join(","))?;
    }
    Ok(())
}

pub fn write_dataset<W: Write>(mut w: W, ds: &ExperimentDataset) -> Result<()> {
    let m = ds.observations.first().map_or(0, |o| o.run.x.dim());
    writeln!(w, "{}", header(&ds.cat_name, &ds.z_names, m, true))?;
    for o in &ds.observations {
        let mut f = run_fields(&o.run);
        f.push(fmt_f64(o.y1));
        f.push(fmt_f64(o.y2));
        writeln!(w, "{}", f.join(","))?;
    }
    Ok(())
}

pub fn save_design(path: &Path, design: &FullDesign) -> Result<()> {
    let mut w = create(path)?;
    write_design(&mut w, design)?;
    w.flush()?;
    Ok(())
}

pub fn save_dataset(path: &Path, ds: &ExperimentDataset) -> Result<()> {
    let mut w = create(path)?;
    write_dataset(&mut w, ds)?;
    w.flush()?;
    Ok(())
}

struct Table {
    design: FullDesign,
    responses: Option<Vec<(f64, f64)>>,
}

fn read_table(path: &Path) -> Result<Table> {
    let mut rdr = csv_reader(open(path)?);
    let headers: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if headers.len() < 4 || headers[0] != "run_id" || headers[1] != "rep" {
        return Err(Error::format(path, "header must start with run_id,rep,<categorical>"));
    }
    let x_start = headers
        .iter()
        .position(|h| h == "x1")
        .ok_or_else(|| Error::format(path, "no x1 column"))?;
    if x_start < 3 {
        return Err(Error::format(path, "x1 must follow the categorical column"));
    }
    let mut m = 0;
    while x_start + m < headers.len() && headers[x_start + m] == format!("x{}", m + 1) {
        m += 1;
    }
    let tail = &headers[x_start + m..];
    let with_y = match tail {
        [] => false,
        [a, b] if a == "y1" && b == "y2" => true,
        _ => return Err(Error::format(path, format!("unexpected trailing columns {tail:?}"))),
    };
    let cat_name = headers[2].clone();
    let z_names: Vec<String> = headers[3..x_start].to_vec();

    let mut runs = Vec::new();
    let mut responses = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let bad = |what: &str| Error::format(path, format!("line {line}: bad {what}"));
        let run_id: u64 = rec[0].parse().map_err(|_| bad("run_id"))?;
        let replicate: usize = rec[1].parse().map_err(|_| bad("rep"))?;
        if replicate == 0 {
            return Err(bad("rep (replicates count from 1)"));
        }
        let z_cont = (3..x_start).map(|c| parse_f64(&rec[c], path, line)).collect::<Result<Vec<_>>>()?;
        let x = (x_start..x_start + m)
            .map(|c| parse_f64(&rec[c], path, line))
            .collect::<Result<Vec<_>>>()?;
        let x = SimplexPoint::new(x).map_err(|e| Error::format(path, format!("line {line}: {e}")))?;
        if with_y {
            let y1 = parse_f64(&rec[x_start + m], path, line)?;
            let y2 = parse_f64(&rec[x_start + m + 1], path, line)?;
            responses.push((y1, y2));
        }
        runs.push(DesignRun {
            run_id,
            replicate,
            z_cat: rec[2].to_string(),
            z_cont,
            x,
        });
    }
    let replicate_count = runs.iter().map(|r| r.replicate).max().unwrap_or(0);
    Ok(Table {
        design: FullDesign {
            cat_name,
            z_names,
            runs,
            replicate_count,
        },
        responses: with_y.then_some(responses),
    })
}

/// Reads a design table; response columns, if present, are ignored.
pub fn load_design(path: &Path) -> Result<FullDesign> {
    Ok(read_table(path)?.design)
}

pub fn load_dataset(path: &Path) -> Result<ExperimentDataset> {
    let table = read_table(path)?;
    let responses = table
        .responses
        .ok_or_else(|| Error::format(path, "missing y1,y2 columns"))?;
    let levels = levels_in_order(&table.design.runs);
    ExperimentDataset::new(&table.design, levels, &responses).map_err(|e| Error::format(path, e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{cross_array, CategoricalFactor, ContinuousDesign};

    fn small_design() -> FullDesign {
        let x = vec![
            SimplexPoint::new(vec![0.5, 0.5]).unwrap(),
            SimplexPoint::new(vec![0.1, 0.9]).unwrap(),
        ];
        let z = ContinuousDesign {
            names: vec!["z1".into(), "z2".into()],
            rows: vec![vec![0.01, 2.0], vec![300.0, 1.5]],
        };
        cross_array(&x, &z, &CategoricalFactor::new("z4", &["MNIST", "FashionMNIST"]), 2, 1000).unwrap()
    }

    #[test]
    fn design_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let d = small_design();
        save_design(&path, &d).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("run_id,rep,z4,z1,z2,x1,x2\n"));
        assert_eq!(load_design(&path).unwrap(), d);
    }

    #[test]
    fn dataset_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let d = small_design();
        let y: Vec<(f64, f64)> = (0..d.runs.len()).map(|i| (i as f64 / 20.0, 1.0 - i as f64 / 30.0)).collect();
        let ds = ExperimentDataset::new(&d, levels_in_order(&d.runs), &y).unwrap();
        save_dataset(&path, &ds).unwrap();
        assert_eq!(load_dataset(&path).unwrap(), ds);
        // A dataset file also reads as a plain design.
        assert_eq!(load_design(&path).unwrap(), d);
    }

    #[test]
    fn responses_must_be_accuracies() {
        let d = small_design();
        let mut y = vec![(0.5, 0.5); d.runs.len()];
        y[3].1 = 1.5;
        assert!(ExperimentDataset::new(&d, levels_in_order(&d.runs), &y).is_err());
    }

    #[test]
    fn malformed_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        std::fs::write(&path, "run_id,rep,z4,z1,x1,x2\n1,1,a,0.5,0.5,0.4\n").unwrap();
        assert!(matches!(load_design(&path), Err(Error::Format { .. })));
        std::fs::write(&path, "run_id,rep,z4,z1,x1,x2,y9\n").unwrap();
        assert!(matches!(load_design(&path), Err(Error::Format { .. })));
        assert_eq!("y3".parse::<Response>().unwrap_err().exit_code(), 2);
    }
}
