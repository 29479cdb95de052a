//! CSV ingestion for the supported data layouts.
//!
//! Every layout accepts an optional `role` column with values `train` or
//! `test`; rows without it are training rows. Test rows may leave the angle
//! cell empty. Angles are converted to radians in `(−π, π]` here and nowhere
//! else.

use std::f64::consts::PI;
use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use crate::circular::{normalize_angle, Angle};
use crate::error::{Error, Result};
use crate::kernels::InputLocation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    /// `lon, lat, direction_deg`.
    Wind,
    /// `ankle_deg, knee_deg, hip_deg, gradient_pct, cycle_pct`; the surface
    /// gradient is the last input coordinate.
    Gait,
    /// `x1, …, xk, angle_rad`.
    Generic,
}

impl FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wind" => Ok(Schema::Wind),
            "gait" => Ok(Schema::Gait),
            "generic" => Ok(Schema::Generic),
            other => Err(Error::Config(format!(
                "unknown schema '{other}' (expected wind, gait or generic)"
            ))),
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Schema::Wind => "wind",
            Schema::Gait => "gait",
            Schema::Generic => "generic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleUnit {
    Degrees,
    Radians,
    PercentOfCycle,
}

impl AngleUnit {
    /// Accepted raw range, inclusive.
    fn range(self) -> (f64, f64) {
        match self {
            AngleUnit::Degrees => (-360.0, 360.0),
            AngleUnit::Radians => (-2.0 * PI, 2.0 * PI),
            AngleUnit::PercentOfCycle => (0.0, 100.0),
        }
    }

    pub fn to_radians(self, raw: f64) -> f64 {
        match self {
            AngleUnit::Degrees => Angle::from_degrees(raw).radians(),
            AngleUnit::Radians => normalize_angle(raw),
            AngleUnit::PercentOfCycle => Angle::from_cycle_percent(raw).radians(),
        }
    }
}

impl Schema {
    pub fn unit(self) -> AngleUnit {
        match self {
            Schema::Wind => AngleUnit::Degrees,
            Schema::Gait => AngleUnit::PercentOfCycle,
            Schema::Generic => AngleUnit::Radians,
        }
    }

    /// Input columns and angle column for a given header.
    fn columns(self, header: &csv::StringRecord) -> Result<(Vec<usize>, usize)> {
        let find = |name: &str| {
            header.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Data {
                row: 1,
                message: format!("missing column '{name}' for {self} schema"),
            })
        };
        match self {
            Schema::Wind => Ok((vec![find("lon")?, find("lat")?], find("direction_deg")?)),
            Schema::Gait => Ok((
                vec![find("ankle_deg")?, find("knee_deg")?, find("hip_deg")?, find("gradient_pct")?],
                find("cycle_pct")?,
            )),
            Schema::Generic => {
                let mut inputs = Vec::new();
                for k in 1.. {
                    match header.iter().position(|h| h.trim() == format!("x{k}")) {
                        Some(i) => inputs.push(i),
                        None => break,
                    }
                }
                if inputs.is_empty() {
                    return Err(Error::Data {
                        row: 1,
                        message: "missing column 'x1' for generic schema".into(),
                    });
                }
                Ok((inputs, find("angle_rad")?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub location: InputLocation,
    /// Radians in `(−π, π]`; absent only for test rows without ground truth.
    pub angle: Option<f64>,
    /// Line number in the source file, header being line 1.
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: Schema,
    pub unit: AngleUnit,
    pub train: Vec<Row>,
    pub test: Vec<Row>,
}

impl Dataset {
    pub fn train_locations(&self) -> Vec<InputLocation> {
        self.train.iter().map(|r| r.location.clone()).collect()
    }

    pub fn test_locations(&self) -> Vec<InputLocation> {
        self.test.iter().map(|r| r.location.clone()).collect()
    }

    /// Observed angles; every training row carries one.
    pub fn theta(&self) -> Vec<f64> {
        self.train.iter().map(|r| r.angle.expect("training rows have angles")).collect()
    }

    /// Held-out angles, if every test row has one.
    pub fn test_truth(&self) -> Option<Vec<f64>> {
        self.test.iter().map(|r| r.angle).collect()
    }
}

fn parse_number(cell: &str, column: &str, line: usize) -> Result<f64> {
    cell.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Data {
            row: line,
            message: format!("cannot parse '{cell}' in column '{column}' as a finite number"),
        })
}

pub fn ingest(path: &Path, schema: Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    parse(file, schema)
}

pub fn parse<R: Read>(reader: R, schema: Schema) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    let (inputs, angle_col) = schema.columns(&header)?;
    let role_col = header.iter().position(|h| h == "role");
    let unit = schema.unit();
    let (lo, hi) = unit.range();

    let mut train = Vec::new();
    let mut test = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let cell = |c: usize| record.get(c).unwrap_or("");
        let role = match role_col.map(cell) {
            None | Some("train") | Some("") => Role::Train,
            Some("test") => Role::Test,
            Some(other) => {
                return Err(Error::Data {
                    row: line,
                    message: format!("role must be 'train' or 'test', got '{other}'"),
                })
            }
        };
        let coords = inputs
            .iter()
            .map(|&c| parse_number(cell(c), &header[c], line))
            .collect::<Result<Vec<_>>>()?;
        let location = InputLocation::new(coords).map_err(|e| Error::Data {
            row: line,
            message: e.to_string(),
        })?;
        let raw = cell(angle_col);
        let angle = if raw.is_empty() {
            if role == Role::Train {
                return Err(Error::Data {
                    row: line,
                    message: format!("training row has no value in '{}'", &header[angle_col]),
                });
            }
            None
        } else {
            let v = parse_number(raw, &header[angle_col], line)?;
            if v < lo || v > hi {
                return Err(Error::Data {
                    row: line,
                    message: format!("angle {v} outside declared range [{lo}, {hi}] for {schema} schema"),
                });
            }
            Some(unit.to_radians(v))
        };
        let row = Row { location, angle, line };
        match role {
            Role::Train => train.push(row),
            Role::Test => test.push(row),
        }
    }
    if train.is_empty() && test.is_empty() {
        return Err(Error::Data {
            row: 1,
            message: "no data rows".into(),
        });
    }
    Ok(Dataset { schema, unit, train, test })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generic_angle_is_normalized() {
        let ds = parse("x1,x2,angle_rad\n0.0,0.0,3.1415927\n".as_bytes(), Schema::Generic).unwrap();
        let a = ds.train[0].angle.unwrap();
        assert!(a > -PI && a <= PI);
        assert!((a.abs() - PI).abs() < 1e-6);
        assert_eq!(ds.train[0].location.dim(), 2);
    }

    #[test]
    fn gait_cycle_end_maps_to_zero() {
        let csv = "ankle_deg,knee_deg,hip_deg,gradient_pct,cycle_pct\n1,2,3,-10,100\n4,5,6,10,25\n";
        let ds = parse(csv.as_bytes(), Schema::Gait).unwrap();
        assert!(ds.train[0].angle.unwrap().abs() < 1e-12);
        assert!((ds.train[1].angle.unwrap() - PI / 2.0).abs() < 1e-12);
        assert_eq!(ds.train[0].location.coords(), &[1.0, 2.0, 3.0, -10.0]);
    }

    #[test]
    fn wind_degrees_convert() {
        let ds = parse("lon,lat,direction_deg\n8.1,50.2,270\n".as_bytes(), Schema::Wind).unwrap();
        assert!((ds.train[0].angle.unwrap() + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn roles_and_missing_truth() {
        let csv = "x1,angle_rad,role\n0,0.1,train\n1,,test\n2,0.3,test\n";
        let ds = parse(csv.as_bytes(), Schema::Generic).unwrap();
        assert_eq!((ds.train.len(), ds.test.len()), (1, 2));
        assert_eq!(ds.test[0].angle, None);
        assert!(ds.test_truth().is_none());
    }

    #[test]
    fn errors_carry_row_numbers() {
        let missing = parse("x1,angle\n0,0\n".as_bytes(), Schema::Generic).unwrap_err();
        assert!(matches!(missing, Error::Data { row: 1, .. }), "{missing}");
        let bad = parse("x1,angle_rad\n0,0\n1,abc\n".as_bytes(), Schema::Generic).unwrap_err();
        assert!(matches!(bad, Error::Data { row: 3, .. }), "{bad}");
        let range = parse("lon,lat,direction_deg\n0,0,400\n".as_bytes(), Schema::Wind).unwrap_err();
        assert!(matches!(range, Error::Data { row: 2, .. }), "{range}");
        let empty_train = parse("x1,angle_rad\n0,\n".as_bytes(), Schema::Generic).unwrap_err();
        assert!(matches!(empty_train, Error::Data { row: 2, .. }));
    }
}
