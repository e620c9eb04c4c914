use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use super::experiment::Report;
use crate::error::{Error, Result};

/// Column names of the per-experiment CSV.
pub fn csv_header(r: &Report) -> Vec<String> {
    let m = r.states.first().map_or(0, |s| s.len());
    let n = r.n();
    let k = r.scenario.k();
    let mut h = vec!["t".to_string()];
    h.extend((1..=m).map(|i| format!("q_{i}")));
    h.extend((1..=m).map(|i| format!("p_{i}")));
    h.extend((1..=n).map(|i| format!("xtilde_{i}")));
    h.extend((1..=n).map(|i| format!("xmax_{i}")));
    h.push("E".into());
    h.push("F".into());
    h.extend((k + 1..=n).map(|i| format!("E_{i}")));
    h.extend((k + 1..=n).map(|i| format!("F_{i}")));
    for j in k + 1..=n {
        h.extend((0..r.lambdas.len()).map(|l| format!("I_j{j}_lam{l}")));
    }
    if k >= 1 {
        h.push(format!("Itilde_{k}"));
    }
    h.push("dist_h1".into());
    h
}

fn csv_row(r: &Report, i: usize) -> Vec<f64> {
    let s = &r.states[i];
    let f = &r.functionals[i];
    let mut row = vec![r.times[i]];
    row.extend_from_slice(s.positions());
    row.extend_from_slice(s.amplitudes());
    row.extend_from_slice(&r.modulation.xtilde[i]);
    row.extend_from_slice(&r.modulation.xmax[i]);
    row.push(f.e);
    row.push(f.f);
    row.extend_from_slice(&f.e_i);
    row.extend_from_slice(&f.f_i);
    for lam in &f.i_table {
        row.extend_from_slice(lam);
    }
    row.extend(f.itilde);
    row.push(r.dist_h1[i]);
    row
}

pub fn write_csv(r: &Report, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(csv_header(r))?;
    for i in 0..r.times.len() {
        w.write_record(csv_row(r, i).iter().map(|v| format!("{v:e}")))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json(r: &Report, path: &Path) -> Result<()> {
    let w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(w, r)?;
    Ok(())
}

/// Reads a report written by [`write_json`] and checks that its series are aligned.
pub fn read_json(path: &Path) -> Result<Report> {
    let r: Report = serde_json::from_reader(BufReader::new(File::open(path)?))?;
    let m = r.times.len();
    let lens = [
        r.states.len(),
        r.e_closed.len(),
        r.functionals.len(),
        r.modulation.len(),
        r.dist_h1.len(),
    ];
    if m < 2 || lens.iter().any(|l| *l != m) {
        return Err(Error::Report(format!(
            "series lengths {lens:?} do not match {m} times"
        )));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::run_experiment;
    use crate::peakon::Scenario;

    #[test]
    fn csv_and_json_round_trip() {
        let mut s = Scenario::new(vec![-1.0, 1.0, 2.0], 20.0, 1e-2, 1.0);
        s.samples = 4;
        let r = run_experiment(&s).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("r.csv");
        let json_path = dir.path().join("r.json");
        write_csv(&r, &csv_path).unwrap();
        write_json(&r, &json_path).unwrap();

        let mut rd = csv::Reader::from_path(&csv_path).unwrap();
        let header: Vec<String> = rd.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(header, csv_header(&r));
        assert!(header.contains(&"I_j3_lam0".to_string()));
        assert!(header.contains(&"Itilde_1".to_string()));
        let rows: Vec<_> = rd.records().map(|x| x.unwrap()).collect();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|row| row.len() == header.len()));

        let back = read_json(&json_path).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn truncated_report_is_rejected() {
        let mut s = Scenario::new(vec![1.0], 20.0, 0.0, 1.0);
        s.samples = 3;
        let mut r = run_experiment(&s).unwrap();
        r.dist_h1.pop();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.json");
        write_json(&r, &p).unwrap();
        assert!(matches!(read_json(&p), Err(Error::Report(_))));
    }
}
