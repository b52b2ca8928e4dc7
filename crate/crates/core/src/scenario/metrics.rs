use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::evidence::NetworkId;
use crate::simnet::RoundReport;

/// Best-network share a round needs to count as converged.
pub const CONVERGED_SHARE: f64 = 0.9;

/// Run summary. Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub rounds: u64,
    /// Networks some installed attack works for.
    pub attacker_networks: Vec<NetworkId>,
    /// Share of all sessions that picked an attacker network.
    pub attacker_selection_fraction: f64,
    /// Share of all sessions that picked a network of highest true quality.
    pub best_selection_fraction: f64,
    /// Per network, mean over rounds of the mean |trust - true quality|.
    pub reputation_error: BTreeMap<NetworkId, f64>,
    /// First round from which every round has at least 90% best-network
    /// selection; `null` if that never holds through the last round.
    pub convergence_round: Option<u64>,
    pub spoof_rejections: u64,
    /// Hosted evidence surviving denial over hosted evidence, summed over
    /// rounds; `null` when nothing was hosted.
    pub evidence_availability: Option<f64>,
    pub mean_misprediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSeries {
    pub rounds: Vec<RoundReport>,
    pub summary: Summary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    JsonLines,
    SummaryJson,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json_lines" => Ok(Format::JsonLines),
            "summary_json" => Ok(Format::SummaryJson),
            other => Err(format!(
                "unknown format `{other}` (expected json_lines or summary_json)"
            )),
        }
    }
}

fn share(report: &RoundReport, hit: impl Fn(&NetworkId) -> bool) -> f64 {
    if report.sessions.is_empty() {
        return 0.0;
    }
    let hits = report
        .sessions
        .iter()
        .filter(|s| s.network.as_ref().is_some_and(&hit))
        .count();
    hits as f64 / report.sessions.len() as f64
}

/// Share of this round's sessions that picked one of `networks`.
pub fn selection_share(report: &RoundReport, networks: &BTreeSet<NetworkId>) -> f64 {
    share(report, |n| networks.contains(n))
}

/// Networks of highest true quality in this round.
pub fn best_networks(report: &RoundReport) -> BTreeSet<NetworkId> {
    let top = report
        .networks
        .iter()
        .map(|n| n.true_quality)
        .fold(f64::NEG_INFINITY, f64::max);
    report
        .networks
        .iter()
        .filter(|n| n.true_quality == top)
        .map(|n| n.id.clone())
        .collect()
}

pub fn best_share(report: &RoundReport) -> f64 {
    selection_share(report, &best_networks(report))
}

fn mean(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

impl Summary {
    pub fn compute(seed: u64, reports: &[RoundReport], attacker_networks: &BTreeSet<NetworkId>) -> Self {
        let n = reports.len();
        let mut attacker = 0.0;
        let mut best = 0.0;
        let mut sessions = 0usize;
        for r in reports {
            let k = r.sessions.len() as f64;
            attacker += selection_share(r, attacker_networks) * k;
            best += best_share(r) * k;
            sessions += r.sessions.len();
        }

        let mut error: BTreeMap<NetworkId, (f64, usize)> = BTreeMap::new();
        for r in reports {
            for net in &r.networks {
                let e = error.entry(net.id.clone()).or_default();
                if let Some(v) = net.mean_abs_error {
                    e.0 += v;
                    e.1 += 1;
                }
            }
        }

        let mut convergence_round = None;
        for r in reports.iter().rev() {
            if best_share(r) >= CONVERGED_SHARE {
                convergence_round = Some(r.round);
            } else {
                break;
            }
        }

        let hosted: u64 = reports.iter().map(|r| r.support.hosted_before_denial).sum();
        let destroyed: u64 = reports.iter().map(|r| r.support.destroyed).sum();

        Self {
            seed,
            rounds: n as u64,
            attacker_networks: attacker_networks.iter().cloned().collect(),
            attacker_selection_fraction: mean(attacker, sessions),
            best_selection_fraction: mean(best, sessions),
            reputation_error: error
                .into_iter()
                .map(|(k, (s, c))| (k, mean(s, c)))
                .collect(),
            convergence_round,
            spoof_rejections: reports.iter().map(|r| r.messages.rejected_spoofs).sum(),
            evidence_availability: (hosted > 0)
                .then(|| (hosted - destroyed.min(hosted)) as f64 / hosted as f64),
            mean_misprediction: mean(reports.iter().map(|r| r.mean_misprediction).sum(), n),
        }
    }
}

#[derive(Serialize)]
struct SummaryLine<'a> {
    summary: &'a Summary,
}

/// Writes the series: one JSON object per round then `{"summary": ...}` for
/// `json_lines`, the summary line alone for `summary_json`.
pub fn write_metrics<W: Write>(series: &MetricsSeries, mut out: W, format: Format) -> io::Result<()> {
    if format == Format::JsonLines {
        for r in &series.rounds {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
    }
    serde_json::to_writer(
        &mut out,
        &SummaryLine {
            summary: &series.summary,
        },
    )?;
    out.write_all(b"\n")?;
    out.flush()
}

pub fn emit_metrics(series: &MetricsSeries, path: impl AsRef<Path>, format: Format) -> io::Result<()> {
    let file = File::create(path)?;
    write_metrics(series, BufWriter::new(file), format)
}

/// The serialized bytes `emit_metrics` would write.
pub fn render_metrics(series: &MetricsSeries, format: Format) -> Vec<u8> {
    let mut buf = Vec::new();
    write_metrics(series, &mut buf, format).expect("writing to memory");
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::{AppContext, PseudonymId};
    use crate::simnet::{NetworkReport, SessionReport};

    fn round(i: u64, picks: &[&str]) -> RoundReport {
        let mut r = RoundReport::empty(i);
        r.networks = [("good", 0.9), ("bad", 0.1)]
            .iter()
            .map(|&(id, q)| NetworkReport {
                id: id.into(),
                beacon: id.into(),
                true_quality: q,
                mean_trust: Some(0.5),
                mean_abs_error: Some(if id == "good" { 0.4 } else { 0.2 }),
                selected: 0,
            })
            .collect();
        r.sessions = picks
            .iter()
            .enumerate()
            .map(|(k, n)| SessionReport {
                peer: PseudonymId(format!("h{k:04}")),
                context: AppContext::Browsing,
                network: Some((*n).into()),
                trust: None,
                margin: None,
                granted: 2,
                qoe: None,
                attributed: None,
                low_confidence: false,
            })
            .collect();
        r
    }

    #[test]
    fn formats_parse() {
        assert_eq!("json_lines".parse::<Format>(), Ok(Format::JsonLines));
        assert_eq!("summary_json".parse::<Format>(), Ok(Format::SummaryJson));
        assert!("yaml".parse::<Format>().is_err());
    }

    #[test]
    fn convergence_is_the_start_of_the_final_good_stretch() {
        let ten = |good: usize| -> Vec<&str> {
            (0..10).map(|i| if i < good { "good" } else { "bad" }).collect()
        };
        let rounds = vec![
            round(0, &ten(10)),
            round(1, &ten(5)),
            round(2, &ten(9)),
            round(3, &ten(10)),
        ];
        let attackers: BTreeSet<NetworkId> = ["bad".into()].into();
        let s = Summary::compute(3, &rounds, &attackers);
        assert_eq!(s.convergence_round, Some(2));
        assert_eq!(s.best_selection_fraction, 34.0 / 40.0);
        assert_eq!(s.attacker_selection_fraction, 6.0 / 40.0);
        assert_eq!(s.reputation_error[&NetworkId::from("good")], 0.4);
        assert_eq!(s.evidence_availability, None);

        let s = Summary::compute(3, &rounds[..2], &attackers);
        assert_eq!(s.convergence_round, None);
    }

    #[test]
    fn availability_counts_surviving_evidence() {
        let mut a = round(0, &[]);
        a.support.hosted_before_denial = 10;
        a.support.destroyed = 4;
        let mut b = round(1, &[]);
        b.support.hosted_before_denial = 10;
        let s = Summary::compute(0, &[a, b], &BTreeSet::new());
        assert_eq!(s.evidence_availability, Some(16.0 / 20.0));
    }
}
