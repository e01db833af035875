use std::io::{Read, Write};

use crate::error::{LabError, Result};
use crate::geometry::metric::{from_upper_triangle, upper_triangle};
use crate::geometry::{MetricState, ModelGeometry};
use crate::scalar::Real;

use super::trajectory::{DerivedRecord, FlowContext, Trajectory};

const DERIVED_COLUMNS: [&str; 9] = [
    "vol",
    "rm_norm",
    "scalar_R",
    "rm_n2_norm",
    "J",
    "theta",
    "chi",
    "ric_min",
    "ric_max",
];

/// Relative agreement required between stored and recomputed invariants.
pub const CONSISTENCY_TOL: f64 = 1e-10;

fn metric_column(n: usize, i: usize, j: usize) -> String {
    if n < 10 {
        format!("g_{}{}", i + 1, j + 1)
    } else {
        format!("g_{}_{}", i + 1, j + 1)
    }
}

/// Column names for an `n`-dimensional model.
pub fn csv_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for i in 0..n {
        for j in i..n {
            h.push(metric_column(n, i, j));
        }
    }
    h.extend(DERIVED_COLUMNS.iter().map(|s| s.to_string()));
    h
}

fn derived_values<T: Real>(d: &DerivedRecord<T>) -> [T; 9] {
    [
        d.vol, d.rm_norm, d.scalar, d.rm_n2, d.j, d.theta, d.chi, d.ric_min, d.ric_max,
    ]
}

/// Writes the trajectory; floats use the shortest round-trip representation.
pub fn write_csv<T: Real, W: Write>(traj: &Trajectory<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header(traj.dim()))?;
    for (state, rec) in traj.states.iter().zip(&traj.derived) {
        let mut row = vec![state.time.to_string()];
        row.extend(upper_triangle(&state.as_matrix(&traj.model)).iter().map(T::to_string));
        row.extend(derived_values(rec).iter().map(T::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn schema(column: &str, reason: impl Into<String>) -> LabError {
    LabError::Schema {
        column: column.to_string(),
        reason: reason.into(),
    }
}

fn state_from_matrix<T: Real>(
    model: &ModelGeometry<T>,
    upper: &[T],
    time: T,
    row: usize,
) -> Result<MetricState<T>> {
    let n = model.dim();
    let g = from_upper_triangle(n, upper);
    match model.factors() {
        None => MetricState::from_matrix(g, time).map_err(|e| {
            schema(&metric_column(n, 0, 0), format!("row {row}: {e}"))
        }),
        Some(_) => {
            let mut scales = Vec::new();
            for block in model.factor_blocks() {
                let s = g[(block.start, block.start)];
                for i in block.clone() {
                    if g[(i, i)] != s {
                        return Err(schema(
                            &metric_column(n, i, i),
                            format!("row {row}: product factor block is not a multiple of the identity"),
                        ));
                    }
                }
                scales.push(s);
            }
            for i in 0..n {
                for j in (i + 1)..n {
                    if g[(i, j)] != T::zero() {
                        return Err(schema(
                            &metric_column(n, i, j),
                            format!("row {row}: product metric must be block diagonal"),
                        ));
                    }
                }
            }
            MetricState::from_scales(scales, time)
                .map_err(|e| schema(&metric_column(n, 0, 0), format!("row {row}: {e}")))
        }
    }
}

/// Reads a trajectory for `model`, validating the header, the time column,
/// and every derived column against recomputation from the metric.
pub fn read_csv<T: Real, R: Read>(
    model: &ModelGeometry<T>,
    input: R,
    context: FlowContext<T>,
) -> Result<Trajectory<T>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let expected = csv_header(model.dim());
    let header = r.headers()?.clone();
    for (i, want) in expected.iter().enumerate() {
        match header.get(i) {
            Some(got) if got.trim() == want => {}
            Some(got) => return Err(schema(want, format!("expected `{want}`, found `{got}`"))),
            None => return Err(schema(want, "missing column")),
        }
    }
    if header.len() > expected.len() {
        let extra = header.get(expected.len()).unwrap_or_default();
        return Err(schema(extra, "unexpected column"));
    }

    let mut states: Vec<MetricState<T>> = Vec::new();
    let mut stored: Vec<Vec<T>> = Vec::new();
    let metric_cols = expected.len() - 1 - DERIVED_COLUMNS.len();
    for (row_idx, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = row_idx + 1;
        let mut values = Vec::with_capacity(expected.len());
        for (col, field) in expected.iter().zip(rec.iter()) {
            let v: T = field
                .trim()
                .parse()
                .map_err(|_| schema(col, format!("row {row}: `{field}` is not a number")))?;
            if !v.is_finite() {
                return Err(schema(col, format!("row {row}: non-finite value")));
            }
            values.push(v);
        }
        if values.len() != expected.len() {
            return Err(schema(&expected[values.len()], format!("row {row}: missing field")));
        }
        let t = values[0];
        match states.last() {
            None if t != T::zero() => return Err(schema("t", "first time must be 0")),
            Some(prev) if !(t > prev.time) => {
                return Err(schema("t", format!("row {row}: times not strictly increasing")))
            }
            _ => {}
        }
        states.push(state_from_matrix(model, &values[1..1 + metric_cols], t, row)?);
        stored.push(values[1 + metric_cols..].to_vec());
    }
    if states.is_empty() {
        return Err(schema("t", "no rows"));
    }
    let traj = Trajectory::from_states(model.clone(), states, context)?;
    for (row, (rec, saved)) in traj.derived.iter().zip(&stored).enumerate() {
        for ((name, a), b) in DERIVED_COLUMNS.iter().zip(derived_values(rec)).zip(saved) {
            let scale = a.abs().max(b.abs());
            if (a - *b).abs() > T::lit(CONSISTENCY_TOL) * scale && (a - *b).abs() > T::lit(1e-14) {
                return Err(schema(
                    name,
                    format!("row {}: stored {b} disagrees with recomputed {a}", row + 1),
                ));
            }
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate, FlowConfig};
    use crate::geometry::ModelGeometry;

    #[test]
    fn header_layout() {
        let h = csv_header(3);
        assert_eq!(
            h,
            [
                "t", "g_11", "g_12", "g_13", "g_22", "g_23", "g_33", "vol", "rm_norm", "scalar_R",
                "rm_n2_norm", "J", "theta", "chi", "ric_min", "ric_max"
            ]
        );
    }

    #[test]
    fn round_trip_heisenberg_and_product() {
        let ctx = FlowContext { cs0: 1.3, c_n: 2.0 };
        for model in [
            ModelGeometry::heisenberg(),
            ModelGeometry::sphere_times_circle(3, 0.5).unwrap(),
        ] {
            let g0 = MetricState::reference(&model);
            let tr = integrate(&model, &g0, &FlowConfig::until(0.1).with_stride(0.02), &ctx).unwrap();
            let mut buf = Vec::new();
            write_csv(&tr, &mut buf).unwrap();
            let back = read_csv(&model, buf.as_slice(), ctx).unwrap();
            assert_eq!(back.states, tr.states);
            assert_eq!(back.derived, tr.derived);
        }
    }

    #[test]
    fn rejects_corruption() {
        let model = ModelGeometry::heisenberg();
        let ctx = FlowContext::default();
        let tr = integrate(
            &model,
            &MetricState::reference(&model),
            &FlowConfig::until(0.1).with_stride(0.05),
            &ctx,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&tr, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();

        let swapped = [lines[0], lines[2], lines[1], lines[3]].join("\n");
        match read_csv(&model, swapped.as_bytes(), ctx) {
            Err(LabError::Schema { column, .. }) => assert_eq!(column, "t"),
            other => panic!("{other:?}"),
        }

        let renamed = text.replacen("rm_norm", "rm", 1);
        match read_csv(&model, renamed.as_bytes(), ctx) {
            Err(LabError::Schema { column, .. }) => assert_eq!(column, "rm_norm"),
            other => panic!("{other:?}"),
        }

        let mut fields: Vec<String> = lines[1].split(',').map(String::from).collect();
        fields[7] = "2.5".into();
        let bad = [lines[0].to_string(), fields.join(",")].join("\n");
        match read_csv(&model, bad.as_bytes(), ctx) {
            Err(LabError::Schema { column, .. }) => assert_eq!(column, "vol"),
            other => panic!("{other:?}"),
        }
    }
}
