//! Single-channel PNG I/O for label maps and binary instance masks.
//!
//! Class ids are stored verbatim. 8-bit files use 255 as the ignore
//! sentinel, 16-bit files use 65535; both map to the label map's ignore id
//! on read. Multi-channel and palette PNGs are rejected with a diagnosis.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{ClassId, Grid, Instance, InstanceSet, LabelMap};
use crate::io::{read_bytes, write_atomic};

fn format_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::PngFormat {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

fn encode_gray(
    path: &Path,
    height: usize,
    width: usize,
    depth: png::BitDepth,
    data: &[u8],
) -> Result<()> {
    let mut out = Vec::new();
    {
        let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
        encoder.set_color(png::ColorType::Grayscale);
        encoder.set_depth(depth);
        // Label maps compress trivially; keep the near-real-time budget for
        // full-resolution writes.
        encoder.set_compression(png::Compression::Fast);
        let mut writer = encoder
            .write_header()
            .map_err(|e| format_error(path, e.to_string()))?;
        writer
            .write_image_data(data)
            .map_err(|e| format_error(path, e.to_string()))?;
    }
    write_atomic(path, &out)
}

struct GrayImage {
    height: usize,
    width: usize,
    depth: png::BitDepth,
    data: Vec<u8>,
}

fn decode_gray(path: &Path) -> Result<GrayImage> {
    let bytes = read_bytes(path)?;
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder
        .read_info()
        .map_err(|e| format_error(path, e.to_string()))?;
    let mut buf = vec![0u8; reader.output_buffer_size().unwrap_or(0)];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| format_error(path, e.to_string()))?;
    match info.color_type {
        png::ColorType::Grayscale => {}
        png::ColorType::Indexed => {
            return Err(format_error(
                path,
                "palette PNG, expected single-channel grayscale",
            ));
        }
        other => {
            return Err(format_error(
                path,
                format!("{other:?} PNG, expected single-channel grayscale"),
            ));
        }
    }
    if !matches!(info.bit_depth, png::BitDepth::Eight | png::BitDepth::Sixteen) {
        return Err(format_error(
            path,
            format!("bit depth {:?}, expected 8 or 16", info.bit_depth),
        ));
    }
    buf.truncate(info.buffer_size());
    Ok(GrayImage {
        height: info.height as usize,
        width: info.width as usize,
        depth: info.bit_depth,
        data: buf,
    })
}

/// Writes a label map as grayscale PNG: 8-bit when the class range fits
/// (ignore stored as 255), 16-bit otherwise (ignore stored as 65535).
pub fn write_label_png(labels: &LabelMap, path: &Path) -> Result<()> {
    let (h, w) = (labels.height(), labels.width());
    if labels.num_classes() <= 255 {
        let data: Vec<u8> = labels
            .grid()
            .data()
            .iter()
            .map(|&v| if v == labels.ignore_id() { 255 } else { v as u8 })
            .collect();
        encode_gray(path, h, w, png::BitDepth::Eight, &data)
    } else {
        let mut data = Vec::with_capacity(h * w * 2);
        for &v in labels.grid().data() {
            let stored = if v == labels.ignore_id() { u16::MAX } else { v };
            data.extend_from_slice(&stored.to_be_bytes());
        }
        encode_gray(path, h, w, png::BitDepth::Sixteen, &data)
    }
}

/// Reads a label map from a grayscale PNG. The file's sentinel value (255
/// for 8-bit, 65535 for 16-bit) becomes `ignore_id`; everything else must be
/// a valid class id below `num_classes`.
pub fn read_label_png(path: &Path, num_classes: u16, ignore_id: ClassId) -> Result<LabelMap> {
    let img = decode_gray(path)?;
    let values: Vec<ClassId> = match img.depth {
        png::BitDepth::Eight => img
            .data
            .iter()
            .map(|&v| if v == 255 { ignore_id } else { v as ClassId })
            .collect(),
        _ => img
            .data
            .chunks_exact(2)
            .map(|b| {
                let v = u16::from_be_bytes([b[0], b[1]]);
                if v == u16::MAX {
                    ignore_id
                } else {
                    v
                }
            })
            .collect(),
    };
    let grid = Grid::from_raw(img.height, img.width, values)?;
    LabelMap::new(grid, num_classes, ignore_id)
}

/// Writes a binary mask as an 8-bit grayscale PNG with values 0 and 255.
pub fn write_mask_png(mask: &Grid<bool>, path: &Path) -> Result<()> {
    let data: Vec<u8> = mask.data().iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode_gray(path, mask.height(), mask.width(), png::BitDepth::Eight, &data)
}

/// Reads a binary mask from an 8-bit grayscale PNG; any nonzero pixel is
/// true.
pub fn read_mask_png(path: &Path) -> Result<Grid<bool>> {
    let img = decode_gray(path)?;
    if img.depth != png::BitDepth::Eight {
        return Err(format_error(path, "instance masks must be 8-bit"));
    }
    Grid::from_raw(
        img.height,
        img.width,
        img.data.iter().map(|&v| v != 0).collect(),
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceIndexEntry {
    category: ClassId,
    mask: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceIndex {
    schema: u32,
    height: usize,
    width: usize,
    instances: Vec<InstanceIndexEntry>,
}

/// Writes an instance set as a JSON index plus one mask PNG per instance,
/// named `{index-stem}_inst{n}.png` next to the index file.
pub fn write_instance_set(set: &InstanceSet, index_path: &Path) -> Result<()> {
    let stem = index_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "instances".to_string());
    let dir = index_path.parent().unwrap_or_else(|| Path::new("."));
    let mut entries = Vec::with_capacity(set.len());
    for (n, inst) in set.instances().iter().enumerate() {
        let name = format!("{stem}_inst{n}.png");
        write_mask_png(&inst.mask, &dir.join(&name))?;
        entries.push(InstanceIndexEntry {
            category: inst.category,
            mask: PathBuf::from(name),
        });
    }
    let index = InstanceIndex {
        schema: 1,
        height: set.height(),
        width: set.width(),
        instances: entries,
    };
    let json = serde_json::to_vec_pretty(&index).map_err(|e| Error::Json {
        path: index_path.to_path_buf(),
        source: e,
    })?;
    write_atomic(index_path, &json)
}

/// Loads an instance set from its JSON index; mask paths resolve relative to
/// the index file.
pub fn read_instance_set(index_path: &Path) -> Result<InstanceSet> {
    let bytes = read_bytes(index_path)?;
    let index: InstanceIndex = serde_json::from_slice(&bytes).map_err(|e| Error::Json {
        path: index_path.to_path_buf(),
        source: e,
    })?;
    let dir = index_path.parent().unwrap_or_else(|| Path::new("."));
    let instances = index
        .instances
        .iter()
        .map(|entry| {
            let mask = read_mask_png(&dir.join(&entry.mask))?;
            Ok(Instance {
                category: entry.category,
                mask,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    InstanceSet::new(index.height, index.width, instances)
}
