//! NPY v1.0 reader/writer with a byte-exact header grammar.
//!
//! Supported payloads: little-endian f32 (rank 2), u8 (rank 2), and i16 with
//! a trailing axis of 2 for offset fields stored as `(ox, oy)`. C order
//! only; Fortran-order files and other dtypes are rejected with a
//! diagnosable error.

use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Grid, Offset};
use crate::io::{read_bytes, write_atomic};

const MAGIC: &[u8; 6] = b"\x93NUMPY";

fn format_error(path: &Path, reason: impl Into<String>) -> Error {
    Error::NpyFormat {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Serializes the v1.0 header: magic, version, little-endian header length,
/// then the dict padded with spaces (newline-terminated) to a 64-byte
/// multiple of total file offset.
fn build_header(descr: &str, shape: &[usize]) -> Vec<u8> {
    let shape_str = match shape {
        [a] => format!("({a},)"),
        dims => {
            let inner: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
            format!("({})", inner.join(", "))
        }
    };
    let dict = format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': {shape_str}, }}");
    let unpadded = MAGIC.len() + 4 + dict.len() + 1;
    let padding = (64 - unpadded % 64) % 64;
    let header_len = (dict.len() + padding + 1) as u16;

    let mut out = Vec::with_capacity(unpadded + padding);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[1, 0]);
    out.extend_from_slice(&header_len.to_le_bytes());
    out.extend_from_slice(dict.as_bytes());
    out.extend(std::iter::repeat_n(b' ', padding));
    out.push(b'\n');
    out
}

struct ParsedHeader {
    descr: String,
    fortran_order: bool,
    shape: Vec<usize>,
    data_start: usize,
}

fn parse_header(path: &Path, bytes: &[u8]) -> Result<ParsedHeader> {
    if bytes.len() < 10 || &bytes[..6] != MAGIC {
        return Err(format_error(path, "not an NPY file (bad magic)"));
    }
    let (major, minor) = (bytes[6], bytes[7]);
    if (major, minor) != (1, 0) {
        return Err(format_error(
            path,
            format!("unsupported NPY version {major}.{minor}, expected 1.0"),
        ));
    }
    let header_len = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let data_start = 10 + header_len;
    if bytes.len() < data_start {
        return Err(format_error(path, "truncated header"));
    }
    let dict = std::str::from_utf8(&bytes[10..data_start])
        .map_err(|_| format_error(path, "header is not valid UTF-8"))?;

    let descr = extract_quoted(dict, "descr")
        .ok_or_else(|| format_error(path, "header missing 'descr'"))?;
    let fortran_order = match extract_after(dict, "fortran_order") {
        Some(rest) if rest.starts_with("True") => true,
        Some(rest) if rest.starts_with("False") => false,
        _ => return Err(format_error(path, "header missing 'fortran_order'")),
    };
    let shape_src = extract_after(dict, "shape")
        .and_then(|rest| {
            let open = rest.find('(')?;
            let close = rest[open..].find(')')? + open;
            Some(&rest[open + 1..close])
        })
        .ok_or_else(|| format_error(path, "header missing 'shape'"))?;
    let shape = shape_src
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .map_err(|_| format_error(path, format!("bad shape element {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ParsedHeader {
        descr,
        fortran_order,
        shape,
        data_start,
    })
}

fn extract_after<'a>(dict: &'a str, key: &str) -> Option<&'a str> {
    let quoted = format!("'{key}'");
    let at = dict.find(&quoted)?;
    let rest = &dict[at + quoted.len()..];
    let colon = rest.find(':')?;
    Some(rest[colon + 1..].trim_start())
}

fn extract_quoted(dict: &str, key: &str) -> Option<String> {
    let rest = extract_after(dict, key)?;
    let rest = rest.strip_prefix('\'')?;
    let end = rest.find('\'')?;
    Some(rest[..end].to_string())
}

fn read_validated(
    path: &Path,
    expected_descr: &str,
    expected_rank: usize,
    item_size: usize,
) -> Result<(Vec<usize>, Vec<u8>)> {
    let bytes = read_bytes(path)?;
    let header = parse_header(path, &bytes)?;
    if header.fortran_order {
        return Err(format_error(path, "Fortran-order arrays are not supported"));
    }
    if header.descr != expected_descr {
        return Err(format_error(
            path,
            format!(
                "dtype {:?} not supported here, expected {expected_descr:?}",
                header.descr
            ),
        ));
    }
    if header.shape.len() != expected_rank {
        return Err(format_error(
            path,
            format!(
                "rank {} array, expected rank {expected_rank}",
                header.shape.len()
            ),
        ));
    }
    let elements: usize = header.shape.iter().product();
    let expected_bytes = elements * item_size;
    let data = &bytes[header.data_start..];
    if data.len() != expected_bytes {
        return Err(format_error(
            path,
            format!(
                "payload is {} bytes, expected {expected_bytes} for shape {:?}",
                data.len(),
                header.shape
            ),
        ));
    }
    Ok((header.shape, data.to_vec()))
}

fn grid_shape(path: &Path, shape: &[usize]) -> Result<(usize, usize)> {
    let (h, w) = (shape[0], shape[1]);
    if h == 0 || w == 0 {
        return Err(format_error(path, format!("degenerate shape {shape:?}")));
    }
    Ok((h, w))
}

/// Writes a rank-2 f32 grid as `<f4`.
pub fn write_npy_f32(path: &Path, grid: &Grid<f32>) -> Result<()> {
    let mut out = build_header("<f4", &[grid.height(), grid.width()]);
    for v in grid.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    write_atomic(path, &out)
}

pub fn read_npy_f32(path: &Path) -> Result<Grid<f32>> {
    let (shape, data) = read_validated(path, "<f4", 2, 4)?;
    let (h, w) = grid_shape(path, &shape)?;
    let values = data
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Grid::from_raw(h, w, values)
}

/// Writes a rank-2 u8 grid as `|u1`.
pub fn write_npy_u8(path: &Path, grid: &Grid<u8>) -> Result<()> {
    let mut out = build_header("|u1", &[grid.height(), grid.width()]);
    out.extend_from_slice(grid.data());
    write_atomic(path, &out)
}

pub fn read_npy_u8(path: &Path) -> Result<Grid<u8>> {
    let (shape, data) = read_validated(path, "|u1", 2, 1)?;
    let (h, w) = grid_shape(path, &shape)?;
    Grid::from_raw(h, w, data)
}

/// Boolean masks travel as u8 zeros and ones.
pub fn write_npy_bool(path: &Path, grid: &Grid<bool>) -> Result<()> {
    let bytes = Grid::from_raw(
        grid.height(),
        grid.width(),
        grid.data().iter().map(|&b| b as u8).collect(),
    )?;
    write_npy_u8(path, &bytes)
}

pub fn read_npy_bool(path: &Path) -> Result<Grid<bool>> {
    let raw = read_npy_u8(path)?;
    Grid::from_raw(
        raw.height(),
        raw.width(),
        raw.data().iter().map(|&v| v != 0).collect(),
    )
}

/// Writes an offset field as `<i2` with shape `(h, w, 2)`, storing
/// `(ox, oy)` per pixel.
pub fn write_npy_offsets(path: &Path, grid: &Grid<Offset>) -> Result<()> {
    let mut out = build_header("<i2", &[grid.height(), grid.width(), 2]);
    for o in grid.data() {
        out.extend_from_slice(&o.x.to_le_bytes());
        out.extend_from_slice(&o.y.to_le_bytes());
    }
    write_atomic(path, &out)
}

pub fn read_npy_offsets(path: &Path) -> Result<Grid<Offset>> {
    let (shape, data) = read_validated(path, "<i2", 3, 2)?;
    if shape[2] != 2 {
        return Err(format_error(
            path,
            format!("trailing axis is {}, expected 2 for (ox, oy)", shape[2]),
        ));
    }
    let (h, w) = grid_shape(path, &shape)?;
    let offsets = data
        .chunks_exact(4)
        .map(|b| {
            Offset::new(
                i16::from_le_bytes([b[0], b[1]]),
                i16::from_le_bytes([b[2], b[3]]),
            )
        })
        .collect();
    Grid::from_raw(h, w, offsets)
}
