//! CSV side files.

use std::io::Write;

use crate::error::{GaborError, Result};
use crate::partial_sums::ConvergenceCurve;
use crate::zak::{PeriodicSignal, ZakField};
use crate::zibulski::WField;

fn csv_err(e: csv::Error) -> GaborError {
    GaborError::Config(format!("csv: {e}"))
}

/// Rows `j,k,re,im`.
pub fn write_zak<W: Write>(z: &ZakField, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["j", "k", "re", "im"]).map_err(csv_err)?;
    for j in 0..z.grid.mx {
        for k in 0..z.grid.ku {
            let v = z.at(j, k);
            w.serialize((j, k, v.re, v.im)).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| csv_err(e.into()))
}

/// Rows `j,k,row,col,re,im`.
pub fn write_weight<W: Write>(field: &WField, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["j", "k", "row", "col", "re", "im"]).map_err(csv_err)?;
    for j in 0..field.mx {
        for k in 0..field.nu {
            let node = j * field.nu + k;
            for r in 0..field.n {
                for c in 0..field.n {
                    let v = field.entry(node, r, c);
                    w.serialize((j, k, r, c, v.re, v.im)).map_err(csv_err)?;
                }
            }
        }
    }
    w.flush().map_err(|e| csv_err(e.into()))
}

/// Rows `x,re,im`.
pub fn write_signal<W: Write>(s: &PeriodicSignal, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "re", "im"]).map_err(csv_err)?;
    let start = s.first_period * s.mx as i64;
    for (i, v) in s.samples.iter().enumerate() {
        w.serialize(((start + i as i64) as f64 / s.mx as f64, v.re, v.im)).map_err(csv_err)?;
    }
    w.flush().map_err(|e| csv_err(e.into()))
}

/// Rows `J,value[,time_domain]`.
pub fn write_curve<W: Write>(c: &ConvergenceCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match &c.time_domain_error {
        Some(t) => {
            w.write_record(["J", "value", "time_domain"]).map_err(csv_err)?;
            for ((j, v), t) in c.j.iter().zip(&c.weighted_error).zip(t) {
                w.serialize((j, v, t)).map_err(csv_err)?;
            }
        }
        None => {
            w.write_record(["J", "value"]).map_err(csv_err)?;
            for (j, v) in c.j.iter().zip(&c.weighted_error) {
                w.serialize((j, v)).map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(|e| csv_err(e.into()))
}
