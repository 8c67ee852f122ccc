//! Dataset directories: per-shape XYZ files plus landmark and dataset
//! manifests in CSV.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::xyz::{read_xyz, write_xyz};
use crate::error::{Error, Result};
use crate::geometry::{Landmark, PointCloud};

pub const MANIFEST_FILE: &str = "manifest.csv";
pub const LANDMARKS_FILE: &str = "landmarks.csv";

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetEntry {
    pub id: String,
    pub cloud: PointCloud,
}

/// Write shapes as `shape_NNNN.xyz` plus `manifest.csv`
/// (shape_id,file,points,family) and `landmarks.csv`
/// (shape_id,landmark_name,x,y,z).
pub fn write_dataset(dir: &Path, family: &str, shapes: &[PointCloud]) -> Result<()> {
    if shapes.is_empty() {
        return Err(Error::invalid("write_dataset", "no shapes"));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let landmarks_path = dir.join(LANDMARKS_FILE);
    let io_err = |p: &Path| {
        let name = p.display().to_string();
        move |e| Error::io(name.clone(), e)
    };

    let mut manifest = BufWriter::new(File::create(&manifest_path).map_err(io_err(&manifest_path))?);
    writeln!(manifest, "shape_id,file,points,family").map_err(io_err(&manifest_path))?;
    let mut landmarks =
        BufWriter::new(File::create(&landmarks_path).map_err(io_err(&landmarks_path))?);
    writeln!(landmarks, "shape_id,landmark_name,x,y,z").map_err(io_err(&landmarks_path))?;

    for (i, cloud) in shapes.iter().enumerate() {
        let id = format!("shape_{:04}", i);
        let file = format!("{}.xyz", id);
        write_xyz(&dir.join(&file), cloud)?;
        writeln!(manifest, "{},{},{},{}", id, file, cloud.len(), family)
            .map_err(io_err(&manifest_path))?;
        if let Some(lms) = &cloud.landmarks {
            for lm in lms {
                if lm.name.contains(',') || lm.name.contains('\n') {
                    return Err(Error::invalid(
                        "write_dataset",
                        format!("landmark name '{}' contains a delimiter", lm.name),
                    ));
                }
                writeln!(
                    landmarks,
                    "{},{},{},{},{}",
                    id, lm.name, lm.position[0], lm.position[1], lm.position[2]
                )
                .map_err(io_err(&landmarks_path))?;
            }
        }
    }
    manifest.flush().map_err(io_err(&manifest_path))?;
    landmarks.flush().map_err(io_err(&landmarks_path))
}

/// Load a dataset directory written by [`write_dataset`]: every manifest
/// row's cloud, with its landmarks attached when present.
pub fn read_dataset(dir: &Path) -> Result<Vec<DatasetEntry>> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let name = manifest_path.display().to_string();
    let file = File::open(&manifest_path).map_err(|e| Error::io(name.clone(), e))?;
    let mut rows = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(name.clone(), e))?;
        if lineno == 0 {
            if line.trim() != "shape_id,file,points,family" {
                return Err(Error::parse(&name, 1, "bad manifest header"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::parse(&name, lineno + 1, "expected 4 columns"));
        }
        rows.push((fields[0].to_string(), fields[1].to_string()));
    }
    if rows.is_empty() {
        return Err(Error::parse(&name, 0, "empty manifest"));
    }

    let mut landmark_map: BTreeMap<String, Vec<Landmark>> = BTreeMap::new();
    let landmarks_path = dir.join(LANDMARKS_FILE);
    if landmarks_path.exists() {
        let lname = landmarks_path.display().to_string();
        let file = File::open(&landmarks_path).map_err(|e| Error::io(lname.clone(), e))?;
        for (lineno, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(lname.clone(), e))?;
            if lineno == 0 {
                if line.trim() != "shape_id,landmark_name,x,y,z" {
                    return Err(Error::parse(&lname, 1, "bad landmarks header"));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 5 {
                return Err(Error::parse(&lname, lineno + 1, "expected 5 columns"));
            }
            let mut position = [0.0f64; 3];
            for d in 0..3 {
                position[d] = fields[2 + d].parse().map_err(|_| {
                    Error::parse(&lname, lineno + 1, format!("bad coordinate '{}'", fields[2 + d]))
                })?;
            }
            landmark_map.entry(fields[0].to_string()).or_default().push(Landmark {
                name: fields[1].to_string(),
                position,
            });
        }
    }

    let mut entries = Vec::with_capacity(rows.len());
    for (id, file) in rows {
        let mut cloud = read_xyz(&dir.join(&file))?;
        if let Some(lms) = landmark_map.remove(&id) {
            cloud = cloud.with_landmarks(lms);
        }
        entries.push(DatasetEntry { id, cloud });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{generate_family, ShapeFamily};
    use crate::rng::seeded;

    #[test]
    fn roundtrip_preserves_points_labels_landmarks() {
        let dir = tempfile::tempdir().unwrap();
        let shapes = generate_family(ShapeFamily::Tables, 3, 64, &mut seeded(5)).unwrap();
        write_dataset(dir.path(), "tables", &shapes).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back.len(), 3);
        for (i, entry) in back.iter().enumerate() {
            assert_eq!(entry.id, format!("shape_{:04}", i));
            assert_eq!(entry.cloud.points, shapes[i].points);
            assert_eq!(entry.cloud.labels, shapes[i].labels);
            assert_eq!(entry.cloud.landmarks, shapes[i].landmarks);
        }
    }

    #[test]
    fn rewrite_is_byte_identical() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        let shapes = generate_family(ShapeFamily::Boxes, 2, 32, &mut seeded(8)).unwrap();
        write_dataset(dir1.path(), "boxes", &shapes).unwrap();
        write_dataset(dir2.path(), "boxes", &shapes).unwrap();
        for file in ["manifest.csv", "landmarks.csv", "shape_0000.xyz", "shape_0001.xyz"] {
            let a = std::fs::read(dir1.path().join(file)).unwrap();
            let b = std::fs::read(dir2.path().join(file)).unwrap();
            assert_eq!(a, b, "{} differs", file);
        }
    }

    #[test]
    fn missing_manifest_is_an_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_dataset(dir.path()), Err(Error::Io { .. })));
    }

    #[test]
    fn clouds_without_landmarks_load_without_them() {
        let dir = tempfile::tempdir().unwrap();
        let cloud = PointCloud::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        write_dataset(dir.path(), "plain", &[cloud.clone()]).unwrap();
        let back = read_dataset(dir.path()).unwrap();
        assert_eq!(back[0].cloud, cloud);
    }
}
