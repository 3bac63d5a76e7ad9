//! CSV writing shared by the runners.

use std::path::Path;

use serde::Serialize;

use crate::error::{HarnessError, Result};

/// Writes `rows` with a header derived from the row type. An empty slice
/// still produces the header line.
pub fn write_rows<T: Serialize + HeaderOnly>(path: &Path, rows: &[T]) -> Result<()> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => HarnessError::io(path, e),
        other => HarnessError::Numerical(format!("{}: {other:?}", path.display())),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    if rows.is_empty() {
        w.write_record(T::header()).map_err(io)?;
    }
    for r in rows {
        w.serialize(r).map_err(io)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Column names of a row type, used when there are no rows to infer them
/// from.
pub trait HeaderOnly {
    fn header() -> &'static [&'static str];
}

macro_rules! header {
    ($t:ty, [$($c:literal),* $(,)?]) => {
        impl HeaderOnly for $t {
            fn header() -> &'static [&'static str] {
                &[$($c),*]
            }
        }
    };
}

header!(crate::scenario::ResultRow, [
    "method", "n", "p", "r_train", "beta_s_error", "beta_v_error",
    "average_error", "stability_error", "seed",
]);
header!(crate::scenario::RateRow, ["method", "replication", "seed", "r_test", "rmse"]);
header!(crate::scenario::CellFailure, ["method", "replication", "seed", "message"]);
header!(crate::scenario::MethodSummary, [
    "method", "replications",
    "beta_s_error_mean", "beta_s_error_var",
    "beta_v_error_mean", "beta_v_error_var",
    "average_error_mean", "average_error_var",
    "stability_error_mean", "stability_error_var",
]);
