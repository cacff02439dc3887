//! Long-format plot data: one `series,x,y,y_err` row per point.

use crate::report::Bundle;
use crate::LabError;

pub const PLOT_HEADER: [&str; 4] = ["series", "x", "y", "y_err"];

/// Emit the named series of `bundle`, or all of them when `names` is empty.
pub fn emit_plotdata(bundle: &Bundle, names: &[&str]) -> Result<String, LabError> {
    let selected: Vec<_> = if names.is_empty() {
        bundle.series.iter().collect()
    } else {
        names
            .iter()
            .map(|n| {
                bundle.series.iter().find(|s| s.name == *n).ok_or_else(|| LabError::MissingSeries(n.to_string()))
            })
            .collect::<Result<_, _>>()?
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PLOT_HEADER)?;
    for s in selected {
        for p in &s.points {
            w.write_record([s.name.clone(), format!("{:?}", p.x), format!("{:?}", p.y), format!("{:?}", p.y_err)])?;
        }
    }
    let bytes = w.into_inner().expect("in-memory writer");
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
