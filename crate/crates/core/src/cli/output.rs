use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::estimate::{Estimate, PcResult, Quantity, ScalingRow, ScalingTable, WnEstimate};
use crate::experiments::ClusterSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

/// One output line of a scaling table. Floats use the shortest
/// representation that parses back to the same value.
#[derive(Serialize)]
struct TableLine {
    n: i64,
    estimate: f64,
    stderr: f64,
    k: u64,
    #[serde(rename = "N")]
    trials: u64,
    seed: u64,
}

const TABLE_HEADER: &[&str] = &["n", "estimate", "stderr", "k", "N", "seed"];

fn csv_bytes<T: Serialize>(header: &[&str], rows: &[T]) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory write")
}

pub(crate) fn jsonl<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r).expect("serialisable row");
        out.push(b'\n');
    }
    out
}

/// Render a scaling table as `n,estimate,stderr,k,N,seed`. An empty table
/// gives the header alone (CSV) or nothing (JSONL).
pub fn write_table(t: &ScalingTable, format: Format) -> Vec<u8> {
    let lines: Vec<TableLine> = t
        .rows
        .iter()
        .map(|r| TableLine {
            n: r.n,
            estimate: r.estimate,
            stderr: r.stderr,
            k: r.k,
            trials: r.trials,
            seed: t.seed,
        })
        .collect();
    match format {
        Format::Csv => csv_bytes(TABLE_HEADER, &lines),
        Format::Jsonl => jsonl(&lines),
    }
}

pub(crate) fn crossing_table(n: i64, e: &Estimate, seed: u64) -> ScalingTable {
    ScalingTable {
        quantity: Quantity::Probability,
        seed,
        rows: vec![ScalingRow {
            n,
            estimate: e.p_hat,
            stderr: e.stderr(),
            k: e.k,
            trials: e.trials,
            flagged: false,
        }],
    }
}

#[derive(Serialize)]
struct WnLine {
    n: i64,
    p: f64,
    w_hat: i64,
    m_lo: i64,
    m_hi: i64,
    h: f64,
    v: f64,
    samples: u64,
    unresolved: bool,
    degenerate: bool,
}

pub(crate) fn wn_bytes(ws: &[WnEstimate], format: Format) -> Vec<u8> {
    match format {
        Format::Jsonl => jsonl(ws),
        Format::Csv => {
            let lines: Vec<WnLine> = ws
                .iter()
                .map(|w| {
                    let pr = w.at_hi();
                    WnLine {
                        n: w.n,
                        p: w.p,
                        w_hat: w.w_hat,
                        m_lo: w.bracket.0,
                        m_hi: w.bracket.1,
                        h: pr.h.p_hat,
                        v: pr.v.p_hat,
                        samples: w.samples_used,
                        unresolved: w.unresolved,
                        degenerate: w.degenerate,
                    }
                })
                .collect();
            csv_bytes(
                &["n", "p", "w_hat", "m_lo", "m_hi", "H", "V", "samples", "unresolved", "degenerate"],
                &lines,
            )
        }
    }
}

#[derive(Serialize)]
struct PcLine {
    n: i64,
    m: i64,
    p_lo: f64,
    p_hi: f64,
    width: f64,
    eta: f64,
    inconsistent: bool,
    p_hat: f64,
    seed: u64,
    #[serde(rename = "N")]
    trials: u64,
}

pub(crate) fn pc_bytes(r: &PcResult, format: Format) -> Vec<u8> {
    match format {
        Format::Jsonl => {
            let mut out = jsonl(&r.brackets);
            out.extend(jsonl(&[serde_json::json!({
                "p_hat": r.p_hat,
                "seed": r.seed,
                "N": r.trials,
            })]));
            out
        }
        Format::Csv => {
            let lines: Vec<PcLine> = r
                .brackets
                .iter()
                .map(|b| PcLine {
                    n: b.n,
                    m: b.m,
                    p_lo: b.p_lo,
                    p_hi: b.p_hi,
                    width: b.width(),
                    eta: b.eta,
                    inconsistent: b.inconsistent,
                    p_hat: r.p_hat,
                    seed: r.seed,
                    trials: r.trials,
                })
                .collect();
            csv_bytes(
                &["n", "m", "p_lo", "p_hi", "width", "eta", "inconsistent", "p_hat", "seed", "N"],
                &lines,
            )
        }
    }
}

/// Sites as `x,y`, renewal heights one per line, and `k,R_k`.
pub(crate) fn cluster_files(s: &ClusterSample) -> (Vec<u8>, Vec<u8>, Vec<u8>) {
    let sites = csv_bytes(&["x", "y"], &s.sites);
    let renewals = s.renewals.iter().map(|k| format!("{k}\n")).collect::<String>().into_bytes();
    let rn = csv_bytes(&["k", "R_k"], &s.rn_sequence);
    (sites, renewals, rn)
}
