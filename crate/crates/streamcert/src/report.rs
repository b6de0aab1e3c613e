//! Machine-readable run reports.

use serde::Serialize;

use crate::config::RunConfig;
use crate::run::{RunResult, SchemeOutcome, SweepRow, TrialSummary, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Tsv,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Report {
    pub scheme: String,
    /// `accepted` or `rejected`.
    pub outcome: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    pub hcost_bits: u64,
    pub vcost_words: u64,
    pub vcost_bits: u64,
    pub seed: u64,
    pub prover: String,
}

impl Report {
    pub fn new(cfg: &RunConfig, run: &RunResult) -> Self {
        let (outcome, value, reason) = match &run.outcome {
            SchemeOutcome::Accepted(v) => ("accepted", Some(v.clone()), None),
            SchemeOutcome::Rejected(r) => ("rejected", None, Some(r.to_string())),
        };
        Self {
            scheme: cfg.scheme.name().into(),
            outcome,
            value,
            reason,
            hcost_bits: run.cost.hcost_bits,
            vcost_words: run.cost.vcost_words,
            vcost_bits: run.cost.vcost_bits,
            seed: cfg.seed,
            prover: cfg.prover.name().into(),
        }
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => serde_json::to_string(self).expect("plain data serializes"),
            ReportFormat::Tsv => {
                let value = self.value.as_ref().map(Value::to_string).unwrap_or_default();
                format!(
                    "scheme\toutcome\tvalue\thcost_bits\tvcost_words\tvcost_bits\tseed\tprover\n{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                    self.scheme, self.outcome, value, self.hcost_bits, self.vcost_words, self.vcost_bits, self.seed, self.prover
                )
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrialReport {
    pub scheme: String,
    pub prover: String,
    pub seed: u64,
    #[serde(flatten)]
    pub summary: TrialSummary,
}

impl TrialReport {
    pub fn new(cfg: &RunConfig, summary: TrialSummary) -> Self {
        Self { scheme: cfg.scheme.name().into(), prover: cfg.prover.name().into(), seed: cfg.seed, summary }
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Json => serde_json::to_string(self).expect("plain data serializes"),
            ReportFormat::Tsv => format!(
                "scheme\tprover\tseed\ttrials\taccepted\twrong\n{}\t{}\t{}\t{}\t{}\t{}",
                self.scheme, self.prover, self.seed, self.summary.trials, self.summary.accepted, self.summary.wrong
            ),
        }
    }
}

pub fn render_sweep(rows: &[SweepRow], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string(rows).expect("plain data serializes"),
        ReportFormat::Tsv => {
            let mut out = String::from("m\tc_v\taccepted\thcost_bits\tvcost_words\tvcost_bits");
            for r in rows {
                out.push_str(&format!(
                    "\n{}\t{}\t{}\t{}\t{}\t{}",
                    r.m, r.c_v, r.accepted as u8, r.hcost_bits, r.vcost_words, r.vcost_bits
                ));
            }
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SchemeParams;
    use crate::run::CostReport;
    use streamcert_core::Reject;

    #[test]
    fn json_has_the_documented_keys() {
        let cfg = RunConfig::new(SchemeParams::PointQuery { query: 5 }).with_seed(9);
        let cost = CostReport { hcost_bits: 100, vcost_words: 4, vcost_bits: 256, ..Default::default() };
        let ok = RunResult { outcome: SchemeOutcome::Accepted(Value::Int(7)), cost };
        let j: serde_json::Value = serde_json::from_str(&Report::new(&cfg, &ok).render(ReportFormat::Json)).unwrap();
        assert_eq!(j["scheme"], "pointquery");
        assert_eq!(j["outcome"], "accepted");
        assert_eq!(j["value"], 7);
        assert_eq!((j["hcost_bits"].as_u64(), j["vcost_words"].as_u64(), j["seed"].as_u64()), (Some(100), Some(4), Some(9)));
        let bad = RunResult { outcome: SchemeOutcome::Rejected(Reject::SumCheck), cost };
        let j: serde_json::Value = serde_json::from_str(&Report::new(&cfg, &bad).render(ReportFormat::Json)).unwrap();
        assert_eq!(j["outcome"], "rejected");
        assert!(j.get("value").is_none());
        let tsv = Report::new(&cfg, &ok).render(ReportFormat::Tsv);
        assert_eq!(tsv.lines().nth(1).unwrap().split('\t').nth(2), Some("7"));
    }
}
