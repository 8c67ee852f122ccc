//! ASCII PLY with double-precision vertex coordinates, optional uchar
//! label, optional uchar red/green/blue.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// What a PLY file carries: points plus optional per-vertex extras.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PlyPayload {
    pub points: Vec<[f64; 3]>,
    pub labels: Option<Vec<u8>>,
    pub colors: Option<Vec<[u8; 3]>>,
}

impl PlyPayload {
    pub fn new(points: Vec<[f64; 3]>) -> Self {
        PlyPayload {
            points,
            labels: None,
            colors: None,
        }
    }

    pub fn with_labels(mut self, labels: Vec<u8>) -> Self {
        self.labels = Some(labels);
        self
    }

    pub fn with_colors(mut self, colors: Vec<[u8; 3]>) -> Self {
        self.colors = Some(colors);
        self
    }
}

pub fn write_ply(path: &Path, payload: &PlyPayload) -> Result<()> {
    let n = payload.points.len();
    if let Some(ls) = &payload.labels {
        if ls.len() != n {
            return Err(Error::invalid("write_ply", "label count != vertex count"));
        }
    }
    if let Some(cs) = &payload.colors {
        if cs.len() != n {
            return Err(Error::invalid("write_ply", "color count != vertex count"));
        }
    }
    let err = |e| Error::io(path.display().to_string(), e);
    let file = File::create(path).map_err(err)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "ply").map_err(err)?;
    writeln!(w, "format ascii 1.0").map_err(err)?;
    writeln!(w, "element vertex {}", n).map_err(err)?;
    writeln!(w, "property double x").map_err(err)?;
    writeln!(w, "property double y").map_err(err)?;
    writeln!(w, "property double z").map_err(err)?;
    if payload.labels.is_some() {
        writeln!(w, "property uchar label").map_err(err)?;
    }
    if payload.colors.is_some() {
        writeln!(w, "property uchar red").map_err(err)?;
        writeln!(w, "property uchar green").map_err(err)?;
        writeln!(w, "property uchar blue").map_err(err)?;
    }
    writeln!(w, "end_header").map_err(err)?;
    for (i, p) in payload.points.iter().enumerate() {
        write!(w, "{} {} {}", p[0], p[1], p[2]).map_err(err)?;
        if let Some(ls) = &payload.labels {
            write!(w, " {}", ls[i]).map_err(err)?;
        }
        if let Some(cs) = &payload.colors {
            write!(w, " {} {} {}", cs[i][0], cs[i][1], cs[i][2]).map_err(err)?;
        }
        writeln!(w).map_err(err)?;
    }
    w.flush().map_err(err)
}

/// Reads the subset of ASCII PLY written by [`write_ply`]: double x/y/z,
/// then optional uchar label, optional uchar red/green/blue.
pub fn read_ply(path: &Path) -> Result<PlyPayload> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(name.clone(), e))?;
    let mut lines = BufReader::new(file).lines().enumerate();
    let mut read_line = || -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l.trim().to_string())),
            Some((i, Err(_))) => Err(Error::parse(&name, i + 1, "unreadable line")),
            None => Err(Error::parse(&name, 0, "unexpected end of file")),
        }
    };

    let (l, magic) = read_line()?;
    if magic != "ply" {
        return Err(Error::parse(&name, l, "not a PLY file"));
    }
    let (l, format) = read_line()?;
    if format != "format ascii 1.0" {
        return Err(Error::parse(&name, l, format!("unsupported format '{}'", format)));
    }
    let mut vertex_count: Option<usize> = None;
    let mut properties: Vec<String> = Vec::new();
    loop {
        let (l, line) = read_line()?;
        if line == "end_header" {
            break;
        }
        if line.starts_with("comment") {
            continue;
        }
        if let Some(rest) = line.strip_prefix("element vertex ") {
            vertex_count = Some(rest.parse().map_err(|_| {
                Error::parse(&name, l, format!("bad vertex count '{}'", rest))
            })?);
        } else if line.starts_with("element ") {
            return Err(Error::parse(&name, l, "only vertex elements supported"));
        } else if let Some(rest) = line.strip_prefix("property ") {
            properties.push(rest.to_string());
        } else {
            return Err(Error::parse(&name, l, format!("unexpected header line '{}'", line)));
        }
    }
    let n = vertex_count.ok_or_else(|| Error::parse(&name, 0, "missing element vertex"))?;
    let expected_coords = ["double x", "double y", "double z"];
    if properties.len() < 3 || properties[..3] != expected_coords {
        return Err(Error::parse(&name, 0, "vertex properties must start with double x/y/z"));
    }
    let rest = &properties[3..];
    let (has_label, has_color) = match rest {
        [] => (false, false),
        [l] if l == "uchar label" => (true, false),
        [r, g, b] if r == "uchar red" && g == "uchar green" && b == "uchar blue" => (false, true),
        [l, r, g, b]
            if l == "uchar label"
                && r == "uchar red"
                && g == "uchar green"
                && b == "uchar blue" =>
        {
            (true, true)
        }
        _ => return Err(Error::parse(&name, 0, format!("unsupported property set {:?}", rest))),
    };

    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::new();
    let mut colors = Vec::new();
    for _ in 0..n {
        let (l, line) = read_line()?;
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        let expected = 3 + has_label as usize + 3 * has_color as usize;
        if fields.len() != expected {
            return Err(Error::parse(
                &name,
                l,
                format!("expected {} fields, got {}", expected, fields.len()),
            ));
        }
        let mut coord = [0.0f64; 3];
        for d in 0..3 {
            coord[d] = fields[d]
                .parse()
                .map_err(|_| Error::parse(&name, l, format!("bad coordinate '{}'", fields[d])))?;
        }
        points.push(coord);
        let mut cursor = 3;
        if has_label {
            labels.push(fields[cursor].parse().map_err(|_| {
                Error::parse(&name, l, format!("bad label '{}'", fields[cursor]))
            })?);
            cursor += 1;
        }
        if has_color {
            let mut rgb = [0u8; 3];
            for c in 0..3 {
                rgb[c] = fields[cursor + c].parse().map_err(|_| {
                    Error::parse(&name, l, format!("bad color '{}'", fields[cursor + c]))
                })?;
            }
            colors.push(rgb);
        }
    }
    Ok(PlyPayload {
        points,
        labels: has_label.then_some(labels),
        colors: has_color.then_some(colors),
    })
}
