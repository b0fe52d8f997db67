//! AprilGrid board geometry and tag payloads.
//!
//! Tags are laid out row-major from the board's lower-left outer corner, which is the
//! target-frame origin; `x` grows along a row, `y` across rows, and the board lies in
//! `z = 0`. Each tag contributes four corners numbered counter-clockwise from its
//! lower-left corner. Small dark squares sit at every gap intersection so that each tag
//! corner is also the corner of a neighboring square, as on the usual printed grids.

mod codes;

use std::collections::HashMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use codes::TAG36H11;

/// Payload grid dimension of the embedded tag family.
pub const FAMILY_BITS: usize = 6;
/// Width of the black tag border in payload cells.
pub const BORDER_BITS: usize = 2;

/// Position of one feature on the board: tag row/column and corner `0..4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PointIndex {
    pub tag_row: usize,
    pub tag_col: usize,
    pub corner: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoardPoint {
    pub index: PointIndex,
    /// Target-frame coordinates in meters, `z == 0`.
    pub position: Vector3<f64>,
}

/// Decoded payload of one tag. `bits[row][col]` is `true` for a light cell; row 0 is
/// the top of the tag.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TagPayload {
    pub id: u32,
    pub bits: Vec<Vec<bool>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetType {
    Aprilgrid,
}

/// YAML/JSON form of the board block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetBlock {
    #[serde(rename = "type")]
    pub target_type: TargetType,
    pub rows: usize,
    pub cols: usize,
    pub tag_size_m: f64,
    pub tag_spacing: f64,
    #[serde(default = "default_family_bits")]
    pub family_bits: usize,
    #[serde(default = "default_border_bits")]
    pub border_bits: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ids: Option<Vec<u32>>,
}

fn default_family_bits() -> usize {
    FAMILY_BITS
}

fn default_border_bits() -> usize {
    BORDER_BITS
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TargetBlock", into = "TargetBlock")]
pub struct BoardSpec {
    pub rows: usize,
    pub cols: usize,
    /// Tag edge length in meters.
    pub tag_size: f64,
    /// Gap between neighboring tags as a fraction of `tag_size`.
    pub tag_spacing: f64,
    pub family_bits: usize,
    /// Black border width in cells; a tag spans `family_bits + 2 * border_bits` cells.
    pub border_bits: usize,
    /// Tag ids in row-major order.
    pub tag_ids: Vec<u32>,
    id_lookup: HashMap<u32, usize>,
}

impl BoardSpec {
    /// Board with ids `0..rows*cols`.
    pub fn new(rows: usize, cols: usize, tag_size: f64, tag_spacing: f64) -> Result<Self> {
        let ids = (0..(rows * cols) as u32).collect();
        Self::with_ids(rows, cols, tag_size, tag_spacing, FAMILY_BITS, ids)
    }

    pub fn with_ids(
        rows: usize,
        cols: usize,
        tag_size: f64,
        tag_spacing: f64,
        family_bits: usize,
        tag_ids: Vec<u32>,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::config("target: rows and cols must be positive"));
        }
        if rows * cols != tag_ids.len() {
            return Err(Error::config(format!(
                "target: {} ids given for a {rows}x{cols} grid",
                tag_ids.len()
            )));
        }
        if !(tag_size > 0.0 && tag_size.is_finite()) {
            return Err(Error::config("target: tag_size_m must be positive"));
        }
        if !(0.0..1.0).contains(&tag_spacing) {
            return Err(Error::config("target: tag_spacing must lie in [0, 1)"));
        }
        if family_bits != FAMILY_BITS {
            return Err(Error::config(format!(
                "target: family_bits {family_bits} unsupported, only the 36-bit family is built in"
            )));
        }
        let mut id_lookup = HashMap::with_capacity(tag_ids.len());
        for (slot, &id) in tag_ids.iter().enumerate() {
            if id as usize >= TAG36H11.len() {
                return Err(Error::config(format!("target: tag id {id} exceeds the family size")));
            }
            if id_lookup.insert(id, slot).is_some() {
                return Err(Error::config(format!("target: duplicate tag id {id}")));
            }
        }
        Ok(Self { rows, cols, tag_size, tag_spacing, family_bits, border_bits: BORDER_BITS, tag_ids, id_lookup })
    }

    pub fn with_border_bits(mut self, border_bits: usize) -> Result<Self> {
        if !(1..=2).contains(&border_bits) {
            return Err(Error::config(format!("target: border_bits {border_bits} must be 1 or 2")));
        }
        self.border_bits = border_bits;
        Ok(self)
    }

    /// Cells along one tag side, border included.
    pub fn tag_cells(&self) -> usize {
        self.family_bits + 2 * self.border_bits
    }

    pub fn num_tags(&self) -> usize {
        self.rows * self.cols
    }

    pub fn num_points(&self) -> usize {
        4 * self.num_tags()
    }

    /// Distance between the lower-left corners of neighboring tags.
    pub fn pitch(&self) -> f64 {
        self.tag_size * (1.0 + self.tag_spacing)
    }

    /// Physical extent `(W, H)` spanned by the tag corners.
    pub fn extent(&self) -> (f64, f64) {
        let p = self.pitch();
        ((self.cols - 1) as f64 * p + self.tag_size, (self.rows - 1) as f64 * p + self.tag_size)
    }

    /// Row-major slot of a tag id.
    pub fn slot_of(&self, id: u32) -> Result<usize> {
        self.id_lookup.get(&id).copied().ok_or(Error::UnknownTag(id))
    }

    pub fn tag_id(&self, tag_row: usize, tag_col: usize) -> u32 {
        self.tag_ids[tag_row * self.cols + tag_col]
    }

    /// Flat index `(slot * 4 + corner)` used throughout the pipeline.
    pub fn flat_index(&self, index: PointIndex) -> usize {
        (index.tag_row * self.cols + index.tag_col) * 4 + index.corner
    }

    pub fn point_index(&self, flat: usize) -> PointIndex {
        let slot = flat / 4;
        PointIndex { tag_row: slot / self.cols, tag_col: slot % self.cols, corner: flat % 4 }
    }

    pub fn index_of(&self, id: u32, corner: usize) -> Result<PointIndex> {
        if corner > 3 {
            return Err(Error::config(format!("corner {corner} outside 0..4")));
        }
        let slot = self.slot_of(id)?;
        Ok(PointIndex { tag_row: slot / self.cols, tag_col: slot % self.cols, corner })
    }

    pub fn position(&self, index: PointIndex) -> Vector3<f64> {
        let p = self.pitch();
        let s = self.tag_size;
        let (ox, oy) = (index.tag_col as f64 * p, index.tag_row as f64 * p);
        let (dx, dy) = match index.corner {
            0 => (0.0, 0.0),
            1 => (s, 0.0),
            2 => (s, s),
            _ => (0.0, s),
        };
        Vector3::new(ox + dx, oy + dy, 0.0)
    }

    /// All board points in flat-index order.
    pub fn board_points(&self) -> Vec<BoardPoint> {
        (0..self.num_points())
            .map(|flat| {
                let index = self.point_index(flat);
                BoardPoint { index, position: self.position(index) }
            })
            .collect()
    }

    pub fn payload_for(&self, id: u32) -> Result<TagPayload> {
        self.slot_of(id)?;
        let code = TAG36H11[id as usize];
        let n = self.family_bits;
        let bits = (0..n).map(|r| (0..n).map(|c| (code >> (r * n + c)) & 1 == 1).collect()).collect();
        Ok(TagPayload { id, bits })
    }

    /// Albedo test for a target-frame location: `true` on dark print.
    pub fn is_dark(&self, x: f64, y: f64) -> bool {
        let p = self.pitch();
        let s = self.tag_size;
        let g = s * self.tag_spacing;
        // Gap-intersection squares occupy [j p - g, j p) x [i p - g, i p).
        if g > 0.0 {
            let j = ((x + g) / p).floor();
            let i = ((y + g) / p).floor();
            if x + g - j * p < g
                && y + g - i * p < g
                && (0.0..=self.cols as f64).contains(&j)
                && (0.0..=self.rows as f64).contains(&i)
            {
                return true;
            }
        }
        let col = (x / p).floor();
        let row = (y / p).floor();
        if col < 0.0 || row < 0.0 || col >= self.cols as f64 || row >= self.rows as f64 {
            return false;
        }
        let (lx, ly) = (x - col * p, y - row * p);
        if lx >= s || ly >= s {
            return false;
        }
        let n = self.tag_cells();
        let m = self.border_bits;
        let cell = s / n as f64;
        let ci = ((s - ly) / cell).floor().clamp(0.0, (n - 1) as f64) as usize; // from the top
        let cj = (lx / cell).floor().clamp(0.0, (n - 1) as f64) as usize;
        if ci < m || cj < m || ci >= n - m || cj >= n - m {
            return true;
        }
        let id = self.tag_id(row as usize, col as usize);
        let code = TAG36H11[id as usize];
        (code >> ((ci - m) * self.family_bits + (cj - m))) & 1 == 0
    }
}

impl TryFrom<TargetBlock> for BoardSpec {
    type Error = Error;

    fn try_from(b: TargetBlock) -> Result<Self> {
        let ids = b.ids.unwrap_or_else(|| (0..(b.rows * b.cols) as u32).collect());
        BoardSpec::with_ids(b.rows, b.cols, b.tag_size_m, b.tag_spacing, b.family_bits, ids)?.with_border_bits(b.border_bits)
    }
}

impl From<BoardSpec> for TargetBlock {
    fn from(b: BoardSpec) -> Self {
        let default_ids: Vec<u32> = (0..(b.rows * b.cols) as u32).collect();
        TargetBlock {
            target_type: TargetType::Aprilgrid,
            rows: b.rows,
            cols: b.cols,
            tag_size_m: b.tag_size,
            tag_spacing: b.tag_spacing,
            family_bits: b.family_bits,
            border_bits: b.border_bits,
            ids: (b.tag_ids != default_ids).then_some(b.tag_ids),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_tag_corners() {
        let b = BoardSpec::new(1, 1, 1.0, 0.3).unwrap();
        let pts: Vec<_> = b.board_points().iter().map(|p| p.position).collect();
        assert_eq!(
            pts,
            vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(1.0, 1.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0)
            ]
        );
    }

    #[test]
    fn six_by_six_has_144_points() {
        assert_eq!(BoardSpec::new(6, 6, 0.088, 0.3).unwrap().board_points().len(), 144);
    }

    #[test]
    fn second_row_offset_is_one_pitch() {
        let b = BoardSpec::new(2, 1, 0.088, 0.3).unwrap();
        let p = b.position(PointIndex { tag_row: 1, tag_col: 0, corner: 0 });
        assert!((p.y - 0.1144).abs() < 1e-12);
    }

    #[test]
    fn payloads() {
        let b = BoardSpec::new(6, 6, 0.088, 0.3).unwrap();
        assert_eq!(b.payload_for(5).unwrap(), b.payload_for(5).unwrap());
        let p0 = b.payload_for(0).unwrap();
        let first = TAG36H11[0];
        for r in 0..6 {
            for c in 0..6 {
                assert_eq!(p0.bits[r][c], (first >> (r * 6 + c)) & 1 == 1);
            }
        }
        assert!(matches!(b.payload_for(99), Err(Error::UnknownTag(99))));
    }

    #[test]
    fn invalid_specs() {
        assert!(BoardSpec::with_ids(1, 2, 0.1, 0.3, 6, vec![3, 3]).is_err());
        assert!(BoardSpec::new(2, 2, 0.1, 1.0).is_err());
        assert!(BoardSpec::new(2, 2, -0.1, 0.3).is_err());
        assert!(BoardSpec::with_ids(2, 2, 0.1, 0.3, 6, vec![0, 1, 2]).is_err());
    }

    #[test]
    fn albedo_layout() {
        let b = BoardSpec::new(2, 2, 0.8, 0.25).unwrap().with_border_bits(1).unwrap();
        let cell = 0.1;
        // Border cell of tag (0, 0).
        assert!(b.is_dark(0.05, 0.05));
        // Gap between tags is light except at intersection squares.
        assert!(!b.is_dark(0.9, 0.4));
        assert!(b.is_dark(0.9, 0.9));
        assert!(b.is_dark(-0.1, -0.1));
        assert!(b.is_dark(1.9, 1.9));
        assert!(!b.is_dark(2.1, 2.1));
        assert!(!b.is_dark(-0.1, 0.4));
        // Data cells follow the code: top-left data cell of tag id 0 is bit 0.
        let light = TAG36H11[0] & 1 == 1;
        assert_eq!(b.is_dark(1.5 * cell, 0.8 - 1.5 * cell), !light);
        // Two-cell border: the second ring is still dark, the payload starts inside it.
        let b2 = BoardSpec::new(2, 2, 1.0, 0.25).unwrap();
        assert_eq!(b2.tag_cells(), 10);
        assert!(b2.is_dark(0.15, 0.5) && b2.is_dark(0.5, 0.85));
        assert_eq!(b2.is_dark(0.25, 0.75), !light);
    }

    #[test]
    fn yaml_block() {
        let b: BoardSpec =
            serde_yaml::from_str("{type: aprilgrid, rows: 2, cols: 3, tag_size_m: 0.088, tag_spacing: 0.3}").unwrap();
        assert_eq!(b.tag_ids, vec![0, 1, 2, 3, 4, 5]);
        assert_eq!(b.family_bits, 6);
        assert_eq!(b.border_bits, 2);
        let s = serde_yaml::to_string(&b).unwrap();
        assert_eq!(serde_yaml::from_str::<BoardSpec>(&s).unwrap(), b);
    }
}
