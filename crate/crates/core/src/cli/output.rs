use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::verify::{BlowupReport, EnergyScalingReport, Prop21Sweep};

/// Pretty JSON with every float written as `{:.16e}` (17 significant digits).
struct SigFormatter<'a>(PrettyFormatter<'a>);

impl Formatter for SigFormatter<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes `value`; non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SigFormatter(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("JSON is UTF-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub const SWEEP_HEADER: &str = "epsilon,M_center,C_upper,C_lower,energy_E0,flags";

/// One row per `ε`; an empty `C_lower` means not applicable.
pub fn sweep_csv(report: &BlowupReport) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for r in &report.records {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            num(r.epsilon),
            num(r.m_center),
            num(r.c_upper),
            r.c_lower.map(num).unwrap_or_default(),
            num(r.energy_e0),
            r.flags_string()
        ));
    }
    s
}

/// A parsed `sweep.csv` row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub m_center: f64,
    pub c_upper: f64,
    pub c_lower: Option<f64>,
    pub energy_e0: f64,
    pub flags: Vec<String>,
}

pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(SWEEP_HEADER) {
        return Err(Error::domain("sweep.csv header mismatch"));
    }
    let bad = |l: &str| Error::domain(format!("malformed sweep.csv row `{l}`"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 6 {
                return Err(bad(l));
            }
            let p = |s: &str| s.parse::<f64>().map_err(|_| bad(l));
            Ok(SweepRow {
                epsilon: p(f[0])?,
                m_center: p(f[1])?,
                c_upper: p(f[2])?,
                c_lower: if f[3].is_empty() { None } else { Some(p(f[3])?) },
                energy_e0: p(f[4])?,
                flags: if f[5].is_empty() {
                    Vec::new()
                } else {
                    f[5].split(';').map(String::from).collect()
                },
            })
        })
        .collect()
}

/// File name of the profile table for `ε`.
pub fn profile_file_name(eps: f64) -> String {
    format!("profile_{eps:e}.csv")
}

/// Writes `sweep.csv`, one `profile_<eps>.csv` per record and the two-column
/// `rate_M_center.dat`.
pub fn emit_tables(report: &BlowupReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("sweep.csv"), sweep_csv(report))?;
    for r in &report.records {
        let mut s = String::from("x_prime,x_n,grad_norm,envelope\n");
        for p in &r.profile {
            s.push_str(&format!("{},{},{},{}\n", num(p.x[0]), num(p.x[1]), num(p.grad_norm), num(p.envelope)));
        }
        fs::write(dir.join(profile_file_name(r.epsilon)), s)?;
    }
    let mut s = String::from("# epsilon M_center\n");
    for r in &report.records {
        s.push_str(&format!("{} {}\n", num(r.epsilon), num(r.m_center)));
    }
    fs::write(dir.join("rate_M_center.dat"), s)?;
    Ok(())
}

/// `energy_center.dat` (`ε`, `E`) and `energy_outer.dat` (`z'`, `E`).
pub fn emit_energy_tables(report: &EnergyScalingReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut s = String::from("# epsilon energy\n");
    for e in &report.center {
        s.push_str(&format!("{} {}\n", num(e.epsilon), num(e.energy)));
    }
    fs::write(dir.join("energy_center.dat"), s)?;
    let mut s = format!("# z_prime energy (epsilon = {})\n", num(report.outer_epsilon));
    for e in &report.outer {
        s.push_str(&format!("{} {}\n", num(e.z_prime), num(e.energy)));
    }
    fs::write(dir.join("energy_outer.dat"), s)?;
    Ok(())
}

pub fn emit_prop21_table(sweep: &Prop21Sweep, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut s = String::from("epsilon,z_prime,s_fraction,s,delta,seminorm,rhs,ratio,delta_min,comparable\n");
    for r in &sweep.reports {
        for p in &r.samples {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                num(r.epsilon),
                num(p.z_prime),
                num(p.s_fraction),
                num(p.s),
                num(p.delta),
                num(p.seminorm),
                num(p.rhs),
                num(p.ratio),
                num(p.delta_min),
                p.comparable
            ));
        }
    }
    fs::write(dir.join("prop21.csv"), s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{finish_report, EpsilonRecord, Probe, SweepPlan};

    fn record(eps: f64, c_lower: Option<f64>, flags: &[&str]) -> EpsilonRecord {
        EpsilonRecord {
            epsilon: eps,
            m_center: 1.0 / eps + 0.1,
            centerline_sup: 1.0 / eps,
            centerline_min: 0.9 / eps,
            centerline: vec![],
            profile: vec![Probe {
                x: [0.0, 0.0],
                grad_norm: 1.0 / 3.0,
                envelope: 2.0,
            }],
            jump_center: 1.0,
            norm_terms: 2.5,
            u_l2: 0.1,
            c_upper: std::f64::consts::PI,
            c_lower,
            energy_e0: eps.powf(2.0 / 3.0),
            m_center_refined: None,
            refinement_change: None,
            reliable: true,
            vertices: 10,
            triangles: 8,
            residual: 0.0,
            flags: flags.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let mut report = BlowupReport::empty(&SweepPlan::default());
        report.records = vec![
            record(0.1, Some(0.1 + 0.2), &[]),
            record(0.03, None, &["unreliable", "no_jump"]),
            record(1e-3, Some(1.0 / 7.0), &["degenerate"]),
        ];
        finish_report(&mut report);
        let rows = parse_sweep_csv(&sweep_csv(&report)).unwrap();
        assert_eq!(rows.len(), 3);
        for (row, r) in rows.iter().zip(&report.records) {
            assert_eq!(row.epsilon, r.epsilon);
            assert_eq!(row.m_center, r.m_center);
            assert_eq!(row.c_upper, r.c_upper);
            assert_eq!(row.c_lower, r.c_lower);
            assert_eq!(row.energy_e0, r.energy_e0);
            assert_eq!(row.flags, r.flags);
        }
    }

    #[test]
    fn empty_report_gives_header_only() {
        let report = BlowupReport::empty(&SweepPlan::default());
        let csv = sweep_csv(&report);
        assert_eq!(csv, format!("{SWEEP_HEADER}\n"));
        assert!(parse_sweep_csv(&csv).unwrap().is_empty());
    }

    #[test]
    fn json_uses_seventeen_digits_and_null() {
        #[derive(Serialize)]
        struct T {
            a: f64,
            b: f64,
            c: Vec<f64>,
        }
        let s = to_json(&T {
            a: 0.1,
            b: f64::NAN,
            c: vec![1.0, f64::INFINITY],
        })
        .unwrap();
        assert!(s.contains("\"a\": 1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"b\": null"));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["a"].as_f64(), Some(0.1));
        assert_eq!(v["c"][0].as_f64(), Some(1.0));
        assert!(v["c"][1].is_null());
    }

    #[test]
    fn tables_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut report = BlowupReport::empty(&SweepPlan::default());
        report.records = vec![record(0.1, Some(1.0), &[]), record(0.01, Some(1.0), &[])];
        emit_tables(&report, dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
        assert_eq!(csv.lines().count(), 3);
        assert!(dir.path().join("profile_1e-1.csv").exists());
        assert!(dir.path().join("profile_1e-2.csv").exists());
        let dat = fs::read_to_string(dir.path().join("rate_M_center.dat")).unwrap();
        assert_eq!(dat.lines().count(), 3);
    }
}
