//! Bundled datasets. The CSV files are compiled in; setting `ELLIP_FIXTURES`
//! to a directory makes files there take precedence.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};

use crate::error::{EllipError, Result};
use crate::kissing::MetaStudy;
use crate::table::{self, DataTable};

pub const FIXTURE_DIR_ENV: &str = "ELLIP_FIXTURES";

const GALTON: &str = include_str!("../fixtures/galton.csv");
const IRIS: &str = include_str!("../fixtures/iris.csv");
const LONGLEY: &str = include_str!("../fixtures/longley.csv");
const BERKEY: &str = include_str!("../fixtures/berkey.csv");

#[derive(Debug, Clone, PartialEq)]
pub struct FixtureInfo {
    pub name: &'static str,
    pub provenance: &'static str,
    pub n: usize,
    pub groups: Option<usize>,
    /// Simulated by a seeded generator rather than transcribed.
    pub generated: bool,
}

pub fn list_fixtures() -> Vec<FixtureInfo> {
    vec![
        FixtureInfo { name: "galton", provenance: "Galton parent/child heights, transcription of Stigler's Table 8.2 (928 pairs)", n: 928, groups: None, generated: false },
        FixtureInfo { name: "iris", provenance: "Anderson/Fisher iris measurements, 50 flowers of each of 3 species", n: 150, groups: Some(3), generated: false },
        FixtureInfo { name: "longley", provenance: "Longley economic series 1947-1962 (n = 16); Employed is the response", n: 16, groups: None, generated: false },
        FixtureInfo { name: "berkey", provenance: "Berkey et al. periodontal trials: PD and AL effects with within-study covariances (5 studies)", n: 5, groups: None, generated: false },
        FixtureInfo { name: "hsb-sample", provenance: "generated: 20 schools, 14-67 students each, drawn from a two-level model with HSB-like parameters (not NCES data)", n: 20, groups: Some(20), generated: true },
        FixtureInfo { name: "synthetic-coffee", provenance: "generated: seeded coffee/stress/heart-damage simulation, not observed data", n: 20, groups: None, generated: true },
    ]
}

fn embedded(name: &str) -> Option<&'static str> {
    match name {
        "galton" => Some(GALTON),
        "iris" => Some(IRIS),
        "longley" => Some(LONGLEY),
        "berkey" => Some(BERKEY),
        _ => None,
    }
}

/// CSV text of a bundled fixture, accepting `iris` or `iris.csv`.
pub fn fixture_text(name: &str) -> Result<String> {
    let stem = name.strip_suffix(".csv").unwrap_or(name);
    if let Ok(dir) = std::env::var(FIXTURE_DIR_ENV) {
        let path = PathBuf::from(dir).join(format!("{stem}.csv"));
        if path.is_file() {
            return std::fs::read_to_string(&path).map_err(|e| EllipError::Io(format!("{}: {e}", path.display())));
        }
    }
    embedded(stem).map(str::to_string).ok_or_else(|| EllipError::invalid(format!("no fixture named `{name}`")))
}

pub fn load_fixture(name: &str) -> Result<DataTable> {
    table::parse_csv(&fixture_text(name)?)
}

/// Reads a path if it exists, otherwise a fixture with that file name.
pub fn load_table(path_or_name: &str) -> Result<DataTable> {
    let p = std::path::Path::new(path_or_name);
    if p.is_file() {
        return table::load_csv(p);
    }
    let base = p.file_name().and_then(|s| s.to_str()).unwrap_or(path_or_name);
    load_fixture(base).map_err(|_| EllipError::Io(format!("{path_or_name}: no such file or bundled fixture")))
}

/// Studies from a table with columns for two effects and the three distinct
/// entries of each within-study covariance.
pub fn meta_studies(t: &DataTable, effects: [&str; 2], cov: [&str; 3]) -> Result<Vec<MetaStudy>> {
    let y1 = t.numeric(effects[0])?;
    let y2 = t.numeric(effects[1])?;
    let v11 = t.numeric(cov[0])?;
    let v12 = t.numeric(cov[1])?;
    let v22 = t.numeric(cov[2])?;
    (0..t.n_rows())
        .map(|i| {
            let s = DMatrix::from_row_slice(2, 2, &[v11[i], v12[i], v12[i], v22[i]]);
            MetaStudy::new(DVector::from_vec(vec![y1[i], y2[i]]), s, None)
        })
        .collect()
}

pub fn berkey_studies() -> Result<Vec<MetaStudy>> {
    meta_studies(&load_fixture("berkey")?, ["PD", "AL"], ["var_PD", "cov_PD_AL", "var_AL"])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_parse_with_expected_shapes() {
        let iris = load_fixture("iris").unwrap();
        assert_eq!(iris.n_rows(), 150);
        assert_eq!(iris.numeric_names().len(), 4);
        assert_eq!(iris.columns().iter().filter(|c| !c.is_numeric()).count(), 1);
        assert_eq!(load_fixture("galton.csv").unwrap().n_rows(), 928);
        assert_eq!(load_fixture("longley").unwrap().n_rows(), 16);
        let b = load_fixture("berkey").unwrap();
        assert_eq!((b.n_rows(), b.numeric_names().len()), (5, 5));
    }

    #[test]
    fn listing_matches_data() {
        let list = list_fixtures();
        let longley = list.iter().find(|f| f.name == "longley").unwrap();
        assert_eq!(longley.n, 16);
        assert_eq!(list.iter().find(|f| f.name == "iris").unwrap().groups, Some(3));
        let coffee = list.iter().find(|f| f.name == "synthetic-coffee").unwrap();
        assert!(coffee.generated && coffee.provenance.contains("not observed data"));
        for f in list.iter().filter(|f| !f.generated) {
            assert_eq!(load_fixture(f.name).unwrap().n_rows(), f.n, "{}", f.name);
        }
    }

    #[test]
    fn unknown_fixture() {
        assert!(load_fixture("nope").is_err());
    }
}
