//! Evaluation report bundle: `detection.csv`, `ser.csv`, `pearson.csv`,
//! `ancova_<arm>.csv` and `summary.txt`. Every file is a pure function of
//! the report and the run settings.

use std::fmt::Write as _;
use std::path::Path;

use ciupath_core::stats::{Arm, EvalReport, Summary};
use ciupath_core::{CiuId, NUM_CIUS};

use crate::error::{write, Result};

/// Settings echoed into `summary.txt`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunInfo {
    /// Name of the tagger filling the neural arm (`neural` or `oracle`).
    pub tagger: String,
    pub train_seed: u64,
    pub sentences: usize,
    pub train_config: String,
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

fn summary_cells(s: &Summary) -> [String; 3] {
    [cell(s.mean), cell(s.median), cell(s.std)]
}

fn detection_csv(report: &EvalReport) -> String {
    let header = [
        "arm",
        "ciu",
        "precision_mean",
        "precision_median",
        "precision_std",
        "recall_mean",
        "recall_median",
        "recall_std",
        "tp",
        "fp",
        "fn",
    ];
    let mut rows = Vec::new();
    for arm in [Arm::Neural, Arm::Dictionary] {
        let agg = report.detection(arm).expect("tagging arms carry detection");
        for code in 0..NUM_CIUS {
            let ciu = CiuId::from_code(code).expect("code in range");
            let c = agg.pooled.counts(ciu);
            let mut row = vec![arm.name().to_string(), ciu.name().to_string()];
            row.extend(summary_cells(&agg.precision[code]));
            row.extend(summary_cells(&agg.recall[code]));
            row.extend([c.tp, c.fp, c.fn_].map(|n| n.to_string()));
            rows.push(row);
        }
        let m = agg.pooled.micro();
        let mut row = vec![arm.name().to_string(), "micro".to_string(), cell(m.precision()), String::new(), String::new()];
        row.extend([cell(m.recall()), String::new(), String::new()]);
        row.extend([m.tp, m.fp, m.fn_].map(|n| n.to_string()));
        rows.push(row);
    }
    to_csv(&header, rows)
}

fn ser_csv(report: &EvalReport) -> String {
    let header = [
        "speaker_id",
        "fold",
        "group",
        "gold_len",
        "neural_ins",
        "neural_del",
        "neural_sub",
        "neural_ser",
        "dictionary_ins",
        "dictionary_del",
        "dictionary_sub",
        "dictionary_ser",
    ];
    let rows = report.speakers.iter().map(|s| {
        let mut row = vec![s.speaker_id.clone(), s.fold.to_string(), s.group.name().to_string(), s.sequence(Arm::Gold).len().to_string()];
        for a in [&s.neural_alignment, &s.dictionary_alignment] {
            row.extend([a.insertions, a.deletions, a.substitutions].map(|n| n.to_string()));
            row.push(cell(a.error_rate().ok()));
        }
        row
    });
    to_csv(&header, rows)
}

fn pearson_csv(report: &EvalReport) -> String {
    let rows = report.pearson.iter().map(|row| {
        let mut out = vec![row.arm.name().to_string(), row.feature.name().to_string()];
        match &row.result {
            Ok(c) => out.extend([c.r.to_string(), c.p.to_string(), c.n.to_string(), c.dropped.to_string(), String::new()]),
            Err(e) => out.extend([String::new(), String::new(), String::new(), String::new(), e.to_string()]),
        }
        out
    });
    to_csv(&["arm", "feature", "r", "p", "n", "dropped", "error"], rows)
}

fn ancova_csv(report: &EvalReport, arm: Arm) -> String {
    let rows = report.ancova.iter().filter(|row| row.arm == arm).map(|row| {
        let mut out = vec![row.feature.name().to_string()];
        match &row.result {
            Ok(a) => out.extend([
                a.f_value.to_string(),
                a.p_value.to_string(),
                a.n.to_string(),
                a.dropped.to_string(),
                a.covariates.join(";"),
                String::new(),
            ]),
            Err(e) => out.extend([String::new(), String::new(), String::new(), String::new(), String::new(), e.to_string()]),
        }
        out
    });
    to_csv(&["feature", "f", "p", "n", "dropped", "covariates", "error"], rows)
}

fn summary_txt(report: &EvalReport, info: &RunInfo) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "folds={}", report.config.folds);
    let _ = writeln!(s, "fold_seed={}", report.config.seed);
    let _ = writeln!(s, "tagger={}", info.tagger);
    let _ = writeln!(s, "train_seed={}", info.train_seed);
    let _ = writeln!(s, "speakers={}", report.speakers.len());
    let _ = writeln!(s, "sentences={}", info.sentences);
    for arm in [Arm::Neural, Arm::Dictionary] {
        let m = report.detection(arm).expect("tagging arms carry detection").pooled.micro();
        let _ = writeln!(s, "{}.micro_precision={}", arm.name(), cell(m.precision()));
        let _ = writeln!(s, "{}.micro_recall={}", arm.name(), cell(m.recall()));
        let _ = writeln!(s, "{}.mean_ser={}", arm.name(), cell(report.mean_ser(arm)));
        let _ = writeln!(s, "{}.mean_pearson_r={}", arm.name(), cell(report.mean_pearson(arm)));
    }
    for f in &report.folds {
        let _ = writeln!(s, "fold.{}.eval_speakers={}", f.split.fold, f.split.eval.join(" "));
    }
    s.push_str("\n[train]\n");
    s.push_str(&info.train_config);
    s
}

/// File names and contents of the bundle, in a fixed order.
pub fn render_report(report: &EvalReport, info: &RunInfo) -> Vec<(String, String)> {
    let mut files = vec![
        ("detection.csv".to_string(), detection_csv(report)),
        ("ser.csv".to_string(), ser_csv(report)),
        ("pearson.csv".to_string(), pearson_csv(report)),
    ];
    for arm in Arm::ALL {
        files.push((format!("ancova_{}.csv", arm.name()), ancova_csv(report, arm)));
    }
    files.push(("summary.txt".to_string(), summary_txt(report, info)));
    files
}

pub fn write_report(dir: &Path, report: &EvalReport, info: &RunInfo) -> Result<()> {
    for (name, contents) in render_report(report, info) {
        write(&dir.join(name), contents)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ciupath_core::stats::{run_full_eval, EvalConfig, GoldTagger};
    use ciupath_core::synth::{generate_corpus, TemplateSpec};
    use ciupath_core::CoordinateMap;

    #[test]
    fn bundle_layout() {
        let spec = TemplateSpec::default();
        let corpus = generate_corpus(&spec, 10, 4).unwrap();
        let dict = spec.impoverished_dictionary().unwrap();
        let map = CoordinateMap::cookie_theft();
        let cfg = EvalConfig { folds: 5, seed: 3 };
        let report = run_full_eval(&corpus.sentences, &corpus.speakers, &mut GoldTagger, &dict, &map, &cfg).unwrap();
        let info = RunInfo { tagger: "oracle".into(), train_seed: 0, sentences: 40, train_config: String::new() };
        let files = render_report(&report, &info);
        let names: Vec<&str> = files.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(
            names,
            ["detection.csv", "ser.csv", "pearson.csv", "ancova_gold.csv", "ancova_neural.csv", "ancova_dictionary.csv", "summary.txt"]
        );
        assert_eq!(files[0].1.lines().count(), 1 + 2 * (NUM_CIUS + 1));
        assert_eq!(files[1].1.lines().count(), 11);
        assert!(files[6].1.contains("neural.mean_ser=0\n"));
        assert_eq!(render_report(&report, &info), files);
    }
}
