//! Comma-separated feature tables: one row per speaker, columns in
//! [`Feature::ALL`] order, empty cell for an undefined value.

use std::path::Path;

use ciupath_core::{Feature, FeatureVector};

use crate::error::{write, Result};

pub fn features_csv<S: AsRef<str>>(rows: &[(S, FeatureVector)]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let header = std::iter::once("speaker_id").chain(Feature::ALL.iter().map(|f| f.name()));
    w.write_record(header).expect("in-memory write");
    for (id, fv) in rows {
        let cells = fv.values().map(|v| v.map(|x| x.to_string()).unwrap_or_default());
        w.write_record(std::iter::once(id.as_ref().to_string()).chain(cells)).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

pub fn write_features<S: AsRef<str>>(path: &Path, rows: &[(S, FeatureVector)]) -> Result<()> {
    write(path, features_csv(rows))
}
