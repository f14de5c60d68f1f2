//! Trajectory CSV output.
//!
//! Wide format, one row per recorded sample:
//! `t,x1,x2,x1_meas,x2_meas,yd,yd_dot,e1,e2,s,u,norm_thf,norm_th1,norm_th2`.
//! Numbers use `{:.16e}` so files are byte-identical across identical runs
//! and parse back exactly. The long format writes `t,variable,value` rows with
//! the same variable names.

use std::io::Write;

use crate::error::{Error, Result};
use crate::sim::{Sample, Trajectory};

pub const COLUMNS: [&str; 14] = [
    "t", "x1", "x2", "x1_meas", "x2_meas", "yd", "yd_dot", "e1", "e2", "s", "u", "norm_thf",
    "norm_th1", "norm_th2",
];

fn row(s: &Sample) -> Result<[f64; 14]> {
    if s.x.len() != 2 || s.x_meas.len() != 2 || s.e.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: s.x.len(),
        });
    }
    Ok([
        s.t,
        s.x[0],
        s.x[1],
        s.x_meas[0],
        s.x_meas[1],
        s.yd,
        s.yd_dot,
        s.e[0],
        s.e[1],
        s.s,
        s.u,
        s.theta_norms[0],
        s.theta_norms[1],
        s.theta_norms[2],
    ])
}

pub fn write_wide<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    writeln!(w, "{}", COLUMNS.join(","))?;
    for s in &traj.samples {
        let vals = row(s)?;
        let line: Vec<String> = vals.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_long<W: Write>(mut w: W, traj: &Trajectory) -> Result<()> {
    writeln!(w, "t,variable,value")?;
    for s in &traj.samples {
        let vals = row(s)?;
        for (name, v) in COLUMNS.iter().zip(vals).skip(1) {
            writeln!(w, "{:.16e},{name},{v:.16e}", s.t)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn to_string(traj: &Trajectory) -> Result<String> {
    let mut buf = Vec::new();
    write_wide(&mut buf, traj)?;
    Ok(String::from_utf8(buf).expect("ascii output"))
}

/// Reads a wide-format file back into rows of the fourteen columns.
pub fn parse_wide(text: &str) -> Result<Vec<[f64; 14]>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty csv".into()))?;
    if header != COLUMNS.join(",") {
        return Err(Error::Config(format!("unexpected csv header `{header}`")));
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let mut out = [0.0; 14];
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != out.len() {
                return Err(Error::Config(format!(
                    "csv line {}: expected {} fields, got {}",
                    i + 2,
                    out.len(),
                    fields.len()
                )));
            }
            for (slot, f) in out.iter_mut().zip(fields) {
                *slot = f
                    .parse()
                    .map_err(|e| Error::Config(format!("csv line {}: {e}", i + 2)))?;
            }
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64) -> Sample {
        Sample {
            t,
            x: vec![1.0, -0.5],
            x_meas: vec![1.25, -0.5],
            yd: 0.0,
            yd_dot: 1.0,
            e: vec![1.0, -1.5],
            s: 8.5,
            u: -3.0,
            theta_norms: [0.0, 0.125, 2.0],
        }
    }

    fn traj() -> Trajectory {
        Trajectory {
            h: 0.5,
            decimate: 1,
            samples: vec![sample(0.0), sample(0.5)],
        }
    }

    #[test]
    fn golden_wide() {
        let text = to_string(&traj()).unwrap();
        let expected = "\
t,x1,x2,x1_meas,x2_meas,yd,yd_dot,e1,e2,s,u,norm_thf,norm_th1,norm_th2
0.0000000000000000e0,1.0000000000000000e0,-5.0000000000000000e-1,1.2500000000000000e0,-5.0000000000000000e-1,0.0000000000000000e0,1.0000000000000000e0,1.0000000000000000e0,-1.5000000000000000e0,8.5000000000000000e0,-3.0000000000000000e0,0.0000000000000000e0,1.2500000000000000e-1,2.0000000000000000e0
5.0000000000000000e-1,1.0000000000000000e0,-5.0000000000000000e-1,1.2500000000000000e0,-5.0000000000000000e-1,0.0000000000000000e0,1.0000000000000000e0,1.0000000000000000e0,-1.5000000000000000e0,8.5000000000000000e0,-3.0000000000000000e0,0.0000000000000000e0,1.2500000000000000e-1,2.0000000000000000e0
";
        assert_eq!(text, expected);
    }

    #[test]
    fn parse_back_exact() {
        let mut t = traj();
        t.samples[1].u = std::f64::consts::PI;
        t.samples[1].s = -1e-300;
        let rows = parse_wide(&to_string(&t).unwrap()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[1][10], std::f64::consts::PI);
        assert_eq!(rows[1][9], -1e-300);
        assert_eq!(rows[0], row(&t.samples[0]).unwrap());
    }

    #[test]
    fn long_format_rows() {
        let mut buf = Vec::new();
        write_long(&mut buf, &traj()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 2 * 13);
        assert!(text
            .lines()
            .nth(1)
            .unwrap()
            .ends_with(",x1,1.0000000000000000e0"));
    }

    #[test]
    fn third_order_rejected() {
        let mut t = traj();
        t.samples[0].x.push(0.0);
        assert!(to_string(&t).is_err());
    }

    #[test]
    fn bad_header_rejected() {
        assert!(parse_wide("a,b\n").is_err());
    }
}
