//! CSV writers.
//!
//! * records: `seed,dim,config,grad,err,iters,converged`
//! * summary: `problem,dim` then `<cfg>_err,<cfg>_iters,<cfg>_failed` per configuration
//!   (`alg_norm`, `alg_sum`, `cb`, `softplus_norm`)
//! * sweeps: `param,dim,config,median_err,median_iters,failed,samples`
//! * traces: `iter,u1,u2,objective`
//! * predictions: `family,kind,ratio,alpha,sigma,grad,predicted,oracle`
//!
//! Floats are written in their shortest round-trip form, so equal inputs give
//! byte-identical files.

use std::io::Write;

use serde::Serialize;

use super::{ExperimentRecord, HarnessError, SummaryRow, SweepPoint, TracePoint};
use crate::error_prediction::PredictionRow;

fn write_rows<W: Write, R: Serialize>(w: W, rows: &[R], header: &[&str]) -> Result<(), HarnessError> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_records<W: Write>(w: W, records: &[ExperimentRecord]) -> Result<(), HarnessError> {
    write_rows(w, records, &["seed", "dim", "config", "grad", "err", "iters", "converged"])
}

pub fn write_sweep<W: Write>(w: W, points: &[SweepPoint]) -> Result<(), HarnessError> {
    write_rows(w, points, &["param", "dim", "config", "median_err", "median_iters", "failed", "samples"])
}

pub fn write_trace<W: Write>(w: W, path: &[TracePoint]) -> Result<(), HarnessError> {
    write_rows(w, path, &["iter", "u1", "u2", "objective"])
}

pub fn write_predictions<W: Write>(w: W, rows: &[PredictionRow]) -> Result<(), HarnessError> {
    write_rows(w, rows, &["family", "kind", "ratio", "alpha", "sigma", "grad", "predicted", "oracle"])
}

pub fn write_summary<W: Write>(w: W, rows: &[SummaryRow]) -> Result<(), HarnessError> {
    let mut out = csv::Writer::from_writer(w);
    let Some(first) = rows.first() else {
        out.write_record(["problem", "dim"])?;
        out.flush()?;
        return Ok(());
    };
    let mut header = vec!["problem".to_string(), "dim".to_string()];
    for c in &first.cells {
        let p = c.config.column();
        header.extend([format!("{p}_err"), format!("{p}_iters"), format!("{p}_failed")]);
    }
    out.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.problem.name().to_string(), row.dim.to_string()];
        for c in &row.cells {
            rec.extend([c.median_err.to_string(), c.median_iters.to_string(), c.failed.to_string()]);
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}
