//! ASCII XYZ: one `x y z [label]` line per point.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! write → read reproduces coordinates bitwise.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

pub fn write_xyz(path: &Path, cloud: &PointCloud) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let err = |e| Error::io(path.display().to_string(), e);
    for (i, p) in cloud.points.iter().enumerate() {
        match &cloud.labels {
            Some(ls) => writeln!(w, "{} {} {} {}", p[0], p[1], p[2], ls[i]).map_err(err)?,
            None => writeln!(w, "{} {} {}", p[0], p[1], p[2]).map_err(err)?,
        }
    }
    w.flush().map_err(err)
}

pub fn read_xyz(path: &Path) -> Result<PointCloud> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(name.clone(), e))?;
    let reader = BufReader::new(file);
    let mut points = Vec::new();
    let mut labels: Vec<u32> = Vec::new();
    let mut has_labels = None;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(name.clone(), e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        let labeled = match fields.len() {
            3 => false,
            4 => true,
            n => {
                return Err(Error::parse(
                    &name,
                    lineno + 1,
                    format!("expected 3 or 4 fields, got {}", n),
                ))
            }
        };
        match has_labels {
            None => has_labels = Some(labeled),
            Some(h) if h != labeled => {
                return Err(Error::parse(&name, lineno + 1, "mixed labeled and unlabeled lines"))
            }
            _ => {}
        }
        let mut coord = [0.0f64; 3];
        for d in 0..3 {
            coord[d] = fields[d].parse().map_err(|_| {
                Error::parse(&name, lineno + 1, format!("bad coordinate '{}'", fields[d]))
            })?;
        }
        points.push(coord);
        if labeled {
            labels.push(fields[3].parse().map_err(|_| {
                Error::parse(&name, lineno + 1, format!("bad label '{}'", fields[3]))
            })?);
        }
    }
    if points.is_empty() {
        return Err(Error::parse(&name, 0, "no points"));
    }
    let cloud = PointCloud::new(points)?;
    if has_labels == Some(true) {
        cloud.with_labels(labels)
    } else {
        Ok(cloud)
    }
}
