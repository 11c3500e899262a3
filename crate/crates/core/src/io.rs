//! CSV files for point sets and optimizer traces.
//!
//! Floats are written with 17 significant digits so every value reads back
//! bit-for-bit.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::maxpro::{TraceAction, TraceEntry};
use crate::simplex::SimplexPoint;

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn parse_f64(field: &str, path: &Path, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::format(path, format!("line {line}: {field:?} is not a number")))
}

pub(crate) fn csv_reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(r)
}

pub(crate) fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::format(path, e.to_string()))
}

/// Buffered writer; failures name the path.
pub fn create(path: &Path) -> Result<std::io::BufWriter<std::fs::File>> {
    let f = std::fs::File::create(path).map_err(|e| Error::format(path, e.to_string()))?;
    Ok(std::io::BufWriter::new(f))
}

/// Header `x1,...,xM`, one row per point.
pub fn write_points<W: Write>(mut w: W, points: &[SimplexPoint]) -> Result<()> {
    let m = points.first().map_or(0, |p| p.dim());
    let header: Vec<String> = (1..=m).map(|l| format!("x{l}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for p in points {
        let row: Vec<String> = p.coords().iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn save_points(path: &Path, points: &[SimplexPoint]) -> Result<()> {
    let mut w = create(path)?;
    write_points(&mut w, points)?;
    w.flush()?;
    Ok(())
}

pub fn load_points(path: &Path) -> Result<Vec<SimplexPoint>> {
    let mut rdr = csv_reader(open(path)?);
    let headers = rdr.headers()?.clone();
    for (l, h) in headers.iter().enumerate() {
        if h != format!("x{}", l + 1) {
            return Err(Error::format(path, format!("expected header x1..xM, found {h:?} in column {}", l + 1)));
        }
    }
    if headers.is_empty() {
        return Err(Error::format(path, "empty header"));
    }
    let mut points = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let coords = rec.iter().map(|f| parse_f64(f, path, line)).collect::<Result<Vec<_>>>()?;
        let p = SimplexPoint::new(coords).map_err(|e| Error::format(path, format!("line {line}: {e}")))?;
        points.push(p);
    }
    Ok(points)
}

/// Header `step,action,criterion`.
pub fn write_trace<W: Write>(mut w: W, trace: &[TraceEntry]) -> Result<()> {
    writeln!(w, "step,action,criterion")?;
    for t in trace {
        writeln!(w, "{},{},{}", t.step, t.action.as_str(), fmt_f64(t.criterion))?;
    }
    Ok(())
}

pub fn save_trace(path: &Path, trace: &[TraceEntry]) -> Result<()> {
    let mut w = create(path)?;
    write_trace(&mut w, trace)?;
    w.flush()?;
    Ok(())
}

pub fn load_trace(path: &Path) -> Result<Vec<TraceEntry>> {
    let mut rdr = csv_reader(open(path)?);
    if rdr.headers()?.iter().collect::<Vec<_>>() != ["step", "action", "criterion"] {
        return Err(Error::format(path, "expected header step,action,criterion"));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let step = rec[0]
            .parse()
            .map_err(|_| Error::format(path, format!("line {line}: bad step {:?}", &rec[0])))?;
        let action = TraceAction::parse(&rec[1])
            .ok_or_else(|| Error::format(path, format!("line {line}: unknown action {:?}", &rec[1])))?;
        let criterion = parse_f64(&rec[2], path, line)?;
        out.push(TraceEntry { step, action, criterion });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 5e-324, f64::MAX, -0.0, f64::INFINITY] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
        }
    }

    #[test]
    fn points_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let pts = vec![
            SimplexPoint::new(vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]).unwrap(),
            SimplexPoint::new(vec![0.7, 0.2, 0.1]).unwrap(),
        ];
        save_points(&path, &pts).unwrap();
        assert_eq!(load_points(&path).unwrap(), pts);
    }

    #[test]
    fn bad_points_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        std::fs::write(&path, "x1,x2\n0.5,0.6\n").unwrap();
        let err = load_points(&path).unwrap_err();
        assert_eq!(err.exit_code(), 4);
        std::fs::write(&path, "a,b\n0.5,0.5\n").unwrap();
        assert!(matches!(load_points(&path), Err(Error::Format { .. })));
    }
}
