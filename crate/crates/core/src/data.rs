//! Two-sample datasets: CSV ingestion and the bundled example data.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::estimation::Sample;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleDataset {
    pub name: String,
    pub labels: [String; 2],
    pub sample1: Vec<f64>,
    pub sample2: Vec<f64>,
    /// Bundled name or file path(s).
    pub source: String,
}

/// Which sample(s) a row edit applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    Both,
    Sample1,
    Sample2,
}

const ADVERSE_EVENTS: &str = "treatment,control
91,109
49,58
19,20
12,13
12,10
3,10
13,6
10,4
6,5
3,7
3,5
7,1
6,2
5,4
4,4
4,5
3,2
2,2
0,1
";

const PLATELET: &str = "treatment,control
120,12
124,20
215,112
90,32
67,60
126,40
95,18
190,
180,
135,
399,
65,
";

const LIFETIMES: &str = "process1,process2
0.044,0.060
0.134,0.174
0.142,0.237
0.158,0.272
0.216,0.335
0.625,0.391
0.649,0.670
0.658,0.902
1.062,1.543
1.140,1.615
1.159,2.013
1.238,2.309
";

pub const BUNDLED: [&str; 3] = ["adverse-events", "platelet", "lifetimes"];

fn bundled_text(name: &str) -> Option<&'static str> {
    match name {
        "adverse-events" => Some(ADVERSE_EVENTS),
        "platelet" => Some(PLATELET),
        "lifetimes" => Some(LIFETIMES),
        _ => None,
    }
}

/// SHA-256 of the bundled CSV text, hex encoded.
pub fn bundled_checksum(name: &str) -> Option<String> {
    bundled_text(name).map(|t| hex(&Sha256::digest(t.as_bytes())))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn bundled(name: &str) -> Result<TwoSampleDataset> {
    let text = bundled_text(name).ok_or_else(|| {
        Error::InvalidInput(format!("unknown dataset {name:?}; bundled: {}", BUNDLED.join(", ")))
    })?;
    parse_csv(text, name, name)
}

fn parse_cell(s: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| Error::Parse {
        line,
        column,
        msg: format!("not a number: {s:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            column,
            msg: format!("non-finite value {s:?}"),
        });
    }
    Ok(v)
}

/// Parses a CSV of one or two columns. The first row is taken as labels
/// when none of its cells is numeric. A column may end early (blank
/// trailing cells) but may not contain gaps.
pub fn parse_columns(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut labels = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let mut ended: Vec<bool> = Vec::new();
    let mut first = true;
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            column: 0,
            msg: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        if first {
            first = false;
            if rec.iter().all(|c| c.parse::<f64>().is_err()) {
                labels = rec.iter().map(str::to_string).collect();
                continue;
            }
        }
        if rec.len() > 2 {
            return Err(Error::Parse {
                line,
                column: 3,
                msg: "expected at most two columns".into(),
            });
        }
        if cols.len() < rec.len() {
            cols.resize(rec.len(), Vec::new());
            ended.resize(rec.len(), false);
        }
        for (j, cell) in rec.iter().enumerate() {
            if cell.is_empty() {
                ended[j] = true;
                continue;
            }
            if ended[j] {
                return Err(Error::Parse {
                    line,
                    column: j + 1,
                    msg: "value after a blank cell".into(),
                });
            }
            cols[j].push(parse_cell(cell, line, j + 1)?);
        }
        for j in rec.len()..cols.len() {
            ended[j] = true;
        }
    }
    Ok((labels, cols))
}

/// Two-column CSV text into a dataset.
pub fn parse_csv(text: &str, name: &str, source: &str) -> Result<TwoSampleDataset> {
    let (labels, cols) = parse_columns(text)?;
    if cols.len() != 2 {
        return Err(Error::InvalidInput(format!(
            "{source}: expected two columns, found {}",
            cols.len()
        )));
    }
    let label = |i: usize| labels.get(i).cloned().unwrap_or_else(|| format!("sample{}", i + 1));
    let mut cols = cols.into_iter();
    let ds = TwoSampleDataset {
        name: name.to_string(),
        labels: [label(0), label(1)],
        sample1: cols.next().unwrap_or_default(),
        sample2: cols.next().unwrap_or_default(),
        source: source.to_string(),
    };
    ds.check()?;
    Ok(ds)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// A bundled name, a two-column CSV file, or two one-column files.
pub fn load(spec: &str, second: Option<&str>) -> Result<TwoSampleDataset> {
    if let Some(second) = second {
        let one = |p: &str| -> Result<(String, Vec<f64>)> {
            let (labels, cols) = parse_columns(&read(Path::new(p))?)?;
            if cols.len() != 1 {
                return Err(Error::InvalidInput(format!("{p}: expected one column")));
            }
            let label = labels.into_iter().next().unwrap_or_else(|| p.to_string());
            Ok((label, cols.into_iter().next().unwrap_or_default()))
        };
        let (l1, s1) = one(spec)?;
        let (l2, s2) = one(second)?;
        let ds = TwoSampleDataset {
            name: format!("{spec}+{second}"),
            labels: [l1, l2],
            sample1: s1,
            sample2: s2,
            source: format!("{spec}, {second}"),
        };
        ds.check()?;
        return Ok(ds);
    }
    if bundled_text(spec).is_some() {
        return bundled(spec);
    }
    parse_csv(&read(Path::new(spec))?, spec, spec)
}

impl TwoSampleDataset {
    fn check(&self) -> Result<()> {
        for (s, l) in [(&self.sample1, &self.labels[0]), (&self.sample2, &self.labels[1])] {
            if s.is_empty() {
                return Err(Error::InvalidInput(format!("{}: sample {l} is empty", self.source)));
            }
        }
        Ok(())
    }

    /// Removes 1-based rows from the chosen sample(s).
    pub fn drop_rows(&mut self, rows: &[usize], target: Target) -> Result<()> {
        let apply = |s: &mut Vec<f64>| -> Result<()> {
            if let Some(r) = rows.iter().find(|r| **r == 0 || **r > s.len()) {
                return Err(Error::InvalidInput(format!("row {r} out of range 1..={}", s.len())));
            }
            let keep: Vec<f64> = s
                .iter()
                .enumerate()
                .filter(|(i, _)| !rows.contains(&(i + 1)))
                .map(|(_, v)| *v)
                .collect();
            *s = keep;
            Ok(())
        };
        if target != Target::Sample2 {
            apply(&mut self.sample1)?;
        }
        if target != Target::Sample1 {
            apply(&mut self.sample2)?;
        }
        self.check()
    }

    pub fn append(&mut self, values: &[f64], target: Target) {
        if target != Target::Sample2 {
            self.sample1.extend_from_slice(values);
        }
        if target != Target::Sample1 {
            self.sample2.extend_from_slice(values);
        }
    }

    pub fn samples(&self) -> Result<(Sample, Sample)> {
        Ok((Sample::new(self.sample1.clone())?, Sample::new(self.sample2.clone())?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_shapes() {
        let d = bundled("adverse-events").unwrap();
        assert_eq!((d.sample1.len(), d.sample2.len()), (19, 19));
        assert_eq!(d.sample1[0], 91.0);
        let d = bundled("platelet").unwrap();
        assert_eq!((d.sample1.len(), d.sample2.len()), (12, 7));
        assert_eq!(d.sample2[0], 12.0);
        let d = bundled("lifetimes").unwrap();
        assert_eq!((d.sample1.len(), d.sample2.len()), (12, 12));
        assert_eq!(d.sample1[0], 0.044);
        assert_eq!(d.labels, ["process1".to_string(), "process2".to_string()]);
    }

    #[test]
    fn bundled_sums() {
        let d = bundled("adverse-events").unwrap();
        assert_eq!(d.sample1.iter().sum::<f64>(), 252.0);
        assert_eq!(d.sample2.iter().sum::<f64>(), 268.0);
    }

    #[test]
    fn parse_errors_carry_position() {
        let e = parse_csv("a,b\n1,2\n3,x\n", "t", "t").unwrap_err();
        assert_eq!(e, Error::Parse { line: 3, column: 2, msg: "not a number: \"x\"".into() });
        let e = parse_csv("1,2\nNaN,3\n", "t", "t").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, column: 1, .. }));
        let e = parse_csv("1,2\n,3\n4,5\n", "t", "t").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, column: 1, .. }));
        assert!(parse_csv("1\n2\n", "t", "t").is_err());
        assert!(parse_csv("a,b\n1,\n", "t", "t").is_err());
    }

    #[test]
    fn unequal_lengths_and_no_header() {
        let d = parse_csv("1,2\n3,\n5\n", "t", "t").unwrap();
        assert_eq!(d.sample1, vec![1.0, 3.0, 5.0]);
        assert_eq!(d.sample2, vec![2.0]);
        assert_eq!(d.labels[0], "sample1");
    }

    #[test]
    fn row_edits() {
        let mut d = bundled("adverse-events").unwrap();
        d.drop_rows(&[1, 2], Target::Both).unwrap();
        assert_eq!((d.sample1.len(), d.sample2.len()), (17, 17));
        assert_eq!(d.sample1[0], 19.0);
        let mut d = bundled("lifetimes").unwrap();
        d.append(&[20.0], Target::Sample2);
        assert_eq!(d.sample2.len(), 13);
        assert_eq!(d.sample1.len(), 12);
        assert!(d.drop_rows(&[13], Target::Sample1).is_err());
    }

    #[test]
    fn bundled_checksums_are_pinned() {
        let pinned = [
            ("adverse-events", "ee33fab44725ae64a4bc96f0656049869b5096a4a2fd2655f191ff2248e339ca"),
            ("platelet", "2a4b5b3e941703e1eb40459c9abfbd4c4fca30ad4ee1c3a5648a5cc76d226381"),
            ("lifetimes", "a4dfe6893469740f5119c3faa35967099821f2236f72db0a65e5be7882b10502"),
        ];
        for (name, sum) in pinned {
            assert_eq!(bundled_checksum(name).unwrap(), sum);
        }
    }
}
