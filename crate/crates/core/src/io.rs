//! Dataset ingestion and artifact files: detection JSON lines, JSON documents and
//! image directories.

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::board::BoardSpec;
use crate::camera::Pixel;
use crate::detector::{Detection, Provenance};
use crate::error::{Error, Result};
use crate::raster::GrayImage;
use crate::solver::CalibrationResult;

/// One line of a detections file. `tag` is the tag id printed on the board.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub frame: usize,
    pub tag: u32,
    pub corner: usize,
    pub u: f64,
    pub v: f64,
    pub provenance: Provenance,
    pub refined: bool,
}

impl DetectionRecord {
    pub fn new(d: &Detection, board: &BoardSpec) -> Self {
        DetectionRecord {
            frame: d.frame,
            tag: board.tag_id(d.point.tag_row, d.point.tag_col),
            corner: d.point.corner,
            u: d.pixel.x,
            v: d.pixel.y,
            provenance: d.provenance,
            refined: d.refined,
        }
    }

    pub fn to_detection(&self, board: &BoardSpec) -> Result<Detection> {
        Ok(Detection {
            frame: self.frame,
            point: board.index_of(self.tag, self.corner)?,
            pixel: Pixel::new(self.u, self.v),
            provenance: self.provenance,
            refined: self.refined,
        })
    }
}

pub fn write_detections(mut out: impl Write, board: &BoardSpec, detections: &[Detection]) -> Result<()> {
    for d in detections {
        let line = serde_json::to_string(&DetectionRecord::new(d, board)).map_err(std::io::Error::other)?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Parses detection JSON lines. Blank lines are skipped; any other malformed line,
/// or a record naming a tag or corner not on `board`, fails with its 1-based number.
pub fn read_detections(input: impl BufRead, board: &BoardSpec) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |msg: String| Error::Schema { line: n + 1, msg };
        let rec: DetectionRecord = serde_json::from_str(&line).map_err(|e| schema(e.to_string()))?;
        if !(rec.u.is_finite() && rec.v.is_finite()) {
            return Err(schema("non-finite pixel coordinate".into()));
        }
        out.push(rec.to_detection(board).map_err(|e| schema(e.to_string()))?);
    }
    Ok(out)
}

pub fn save_detections(path: &Path, board: &BoardSpec, detections: &[Detection]) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_detections(&mut file, board, detections)?;
    file.flush()?;
    Ok(())
}

pub fn load_detections(path: &Path, board: &BoardSpec) -> Result<Vec<Detection>> {
    read_detections(std::io::BufReader::new(std::fs::File::open(path)?), board)
}

/// `result.json`: the calibration together with the board it was computed for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub target: BoardSpec,
    #[serde(flatten)]
    pub result: CalibrationResult,
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads a JSON document; a malformed document is a schema error at the failing line.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Schema { line: e.line(), msg: e.to_string() })
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "png"))
}

/// PGM and PNG files directly inside `dir`, in lexicographic order of file name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() && is_image(&path) {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

/// Loads every frame of an image directory. All frames must share one size.
pub fn load_image_dir(dir: &Path) -> Result<Vec<GrayImage>> {
    let paths = list_images(dir)?;
    if paths.is_empty() {
        return Err(Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("no PGM or PNG images in {}", dir.display()))));
    }
    let images = paths.iter().map(|p| GrayImage::load(p)).collect::<Result<Vec<_>>>()?;
    let (w, h) = (images[0].width(), images[0].height());
    if let Some(k) = images.iter().position(|im| (im.width(), im.height()) != (w, h)) {
        return Err(Error::config(format!("{} is {}x{}, expected {w}x{h}", paths[k].display(), images[k].width(), images[k].height())));
    }
    Ok(images)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn board() -> BoardSpec {
        BoardSpec::new(2, 3, 0.05, 0.3).unwrap()
    }

    #[test]
    fn detections_round_trip() {
        let b = board();
        let dets: Vec<Detection> = b
            .board_points()
            .iter()
            .enumerate()
            .map(|(k, bp)| Detection {
                frame: k % 3,
                point: bp.index,
                pixel: Pixel::new(0.1 + k as f64 / 7.0, 100.0 - k as f64 / 3.0),
                provenance: if k % 2 == 0 { Provenance::Direct } else { Provenance::Reprojected },
                refined: k % 3 == 0,
            })
            .collect();
        let mut buf = Vec::new();
        write_detections(&mut buf, &b, &dets).unwrap();
        let back = read_detections(buf.as_slice(), &b).unwrap();
        assert_eq!(back, dets);
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let b = board();
        let good = r#"{"frame":0,"tag":1,"corner":2,"u":1.5,"v":2.5,"provenance":"direct","refined":false}"#;
        let text = format!("{good}\n\n{good}\n{{\"frame\":0}}\n");
        match read_detections(text.as_bytes(), &b) {
            Err(Error::Schema { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
        let unknown_tag = good.replace("\"tag\":1", "\"tag\":99");
        assert!(matches!(read_detections(unknown_tag.as_bytes(), &b), Err(Error::Schema { line: 1, .. })));
        let bad_prov = good.replace("direct", "guessed");
        assert!(matches!(read_detections(bad_prov.as_bytes(), &b), Err(Error::Schema { line: 1, .. })));
    }

    #[test]
    fn image_directory_is_sorted_and_filtered() {
        let dir = tempfile::tempdir().unwrap();
        for name in ["b.pgm", "a.png", "c.PGM"] {
            GrayImage::filled(4, 3, 0.5).save(&dir.path().join(name.to_lowercase())).unwrap();
            if name != name.to_lowercase() {
                std::fs::rename(dir.path().join(name.to_lowercase()), dir.path().join(name)).unwrap();
            }
        }
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let names: Vec<String> = list_images(dir.path()).unwrap().iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
        assert_eq!(names, ["a.png", "b.pgm", "c.PGM"]);
        let imgs = load_image_dir(dir.path()).unwrap();
        assert_eq!(imgs.len(), 3);
        assert!((imgs[0].get(1, 1) - 128.0 / 255.0).abs() < 1e-6);
    }

    #[test]
    fn empty_directory_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(load_image_dir(dir.path()).unwrap_err().exit_code(), 2);
    }
}
