//! On-disk formats: 16-bit PNG for images, and the little-endian binary
//! containers for variance maps ("VMAP"), offset grids ("OGRD") and flow
//! fields ("FLOW"). Offset grids are also exchanged as CSV.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bayer::{BayerFrame, BayerPattern};
use crate::error::{Error, Result};
use crate::grid::{Grid, Shift};
use crate::refine::FlowField;
use crate::rgb::RgbImage;
use crate::scalar::Scalar;

const U16_MAX: f64 = 65535.0;

fn to_u16<T: Scalar>(v: T) -> u16 {
    (v.to_f64().clamp(0.0, 1.0) * U16_MAX).round() as u16
}

fn from_u16<T: Scalar>(v: u16) -> T {
    T::from_f64(v as f64 / U16_MAX)
}

/// Save a CFA frame as 16-bit grayscale PNG. Samples are clipped to `[0, 1]`
/// and quantized; in-memory pipelines stay unclipped, export does not.
pub fn save_bayer_png<T: Scalar>(frame: &BayerFrame<T>, path: &Path) -> Result<()> {
    let mut img = image::ImageBuffer::<image::Luma<u16>, Vec<u16>>::new(
        frame.width() as u32,
        frame.height() as u32,
    );
    for (r, row) in img.rows_mut().enumerate() {
        for (c, px) in row.enumerate() {
            px.0[0] = to_u16(frame.get(r, c));
        }
    }
    img.save(path)?;
    Ok(())
}

pub fn load_bayer_png<T: Scalar>(path: &Path, pattern: BayerPattern) -> Result<BayerFrame<T>> {
    let img = image::open(path)?.into_luma16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let plane = Grid::from_fn(h, w, |r, c| from_u16(img.get_pixel(c as u32, r as u32).0[0]));
    BayerFrame::new(plane, pattern)
}

/// Save a linear RGB image as 16-bit PNG (clipped and quantized).
pub fn save_rgb_png<T: Scalar>(rgb: &RgbImage<T>, path: &Path) -> Result<()> {
    let mut img = image::ImageBuffer::<image::Rgb<u16>, Vec<u16>>::new(
        rgb.width() as u32,
        rgb.height() as u32,
    );
    for (r, row) in img.rows_mut().enumerate() {
        for (c, px) in row.enumerate() {
            let p = rgb.pixel(r, c);
            px.0 = [to_u16(p[0]), to_u16(p[1]), to_u16(p[2])];
        }
    }
    img.save(path)?;
    Ok(())
}

pub fn load_rgb_png<T: Scalar>(path: &Path) -> Result<RgbImage<T>> {
    let img = image::open(path)?.into_rgb16();
    let (w, h) = (img.width() as usize, img.height() as usize);
    RgbImage::from_fn(h, w, |r, c| {
        let p = img.get_pixel(c as u32, r as u32).0;
        [from_u16(p[0]), from_u16(p[1]), from_u16(p[2])]
    })
}

/// Write a variance map: magic `VMAP`, width and height as little-endian
/// u32, then row-major f32 samples.
pub fn save_vmap<T: Scalar>(map: &Grid<T>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(b"VMAP")?;
    w.write_all(&(map.width() as u32).to_le_bytes())?;
    w.write_all(&(map.height() as u32).to_le_bytes())?;
    for &v in map.data() {
        w.write_all(&(v.to_f64() as f32).to_le_bytes())?;
    }
    Ok(())
}

pub fn load_vmap<T: Scalar>(path: &Path) -> Result<Grid<T>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != b"VMAP" {
        return Err(Error::format("bad VMAP magic"));
    }
    let w = read_u32(&mut r)? as usize;
    let h = read_u32(&mut r)? as usize;
    let mut data = Vec::with_capacity(w * h);
    let mut buf = [0u8; 4];
    for _ in 0..w * h {
        r.read_exact(&mut buf)?;
        data.push(T::from_f64(f32::from_le_bytes(buf) as f64));
    }
    Grid::from_vec(h, w, data)
}

/// Write an offset grid: magic `OGRD`, patch rows, patch cols and patch side
/// as little-endian u32, then `(dy, dx)` pairs as little-endian i32.
pub fn save_ogrd(grid: &crate::dpbm::OffsetGrid, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(b"OGRD")?;
    w.write_all(&(grid.patch_rows() as u32).to_le_bytes())?;
    w.write_all(&(grid.patch_cols() as u32).to_le_bytes())?;
    w.write_all(&(grid.patch_size() as u32).to_le_bytes())?;
    for s in grid.shifts() {
        w.write_all(&s.dy.to_le_bytes())?;
        w.write_all(&s.dx.to_le_bytes())?;
    }
    Ok(())
}

pub fn load_ogrd(path: &Path) -> Result<crate::dpbm::OffsetGrid> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != b"OGRD" {
        return Err(Error::format("bad OGRD magic"));
    }
    let rows = read_u32(&mut r)? as usize;
    let cols = read_u32(&mut r)? as usize;
    let patch = read_u32(&mut r)? as usize;
    let mut shifts = Vec::with_capacity(rows * cols);
    let mut buf = [0u8; 4];
    for _ in 0..rows * cols {
        r.read_exact(&mut buf)?;
        let dy = i32::from_le_bytes(buf);
        r.read_exact(&mut buf)?;
        let dx = i32::from_le_bytes(buf);
        shifts.push(Shift::new(dy, dx));
    }
    crate::dpbm::OffsetGrid::from_shifts(rows, cols, patch, shifts)
}

/// Write an offset grid as CSV with a `patch_row,patch_col,dy,dx` header.
pub fn save_offsets_csv(grid: &crate::dpbm::OffsetGrid, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "patch_row,patch_col,dy,dx")?;
    for pr in 0..grid.patch_rows() {
        for pc in 0..grid.patch_cols() {
            let s = grid.get(pr, pc);
            writeln!(w, "{pr},{pc},{},{}", s.dy, s.dx)?;
        }
    }
    Ok(())
}

/// Write a flow field: magic `FLOW`, width and height as little-endian u32,
/// then per pixel `dy, dx, confidence` as little-endian f32.
pub fn save_flow<T: Scalar>(flow: &FlowField<T>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(b"FLOW")?;
    w.write_all(&(flow.width() as u32).to_le_bytes())?;
    w.write_all(&(flow.height() as u32).to_le_bytes())?;
    for r in 0..flow.height() {
        for c in 0..flow.width() {
            w.write_all(&(flow.dy().get(r, c).to_f64() as f32).to_le_bytes())?;
            w.write_all(&(flow.dx().get(r, c).to_f64() as f32).to_le_bytes())?;
            w.write_all(&(flow.confidence().get(r, c).to_f64() as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn load_flow<T: Scalar>(path: &Path) -> Result<FlowField<T>> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != b"FLOW" {
        return Err(Error::format("bad FLOW magic"));
    }
    let w = read_u32(&mut r)? as usize;
    let h = read_u32(&mut r)? as usize;
    let mut dy = Vec::with_capacity(w * h);
    let mut dx = Vec::with_capacity(w * h);
    let mut conf = Vec::with_capacity(w * h);
    let mut buf = [0u8; 4];
    for _ in 0..w * h {
        r.read_exact(&mut buf)?;
        dy.push(T::from_f64(f32::from_le_bytes(buf) as f64));
        r.read_exact(&mut buf)?;
        dx.push(T::from_f64(f32::from_le_bytes(buf) as f64));
        r.read_exact(&mut buf)?;
        conf.push(T::from_f64(f32::from_le_bytes(buf) as f64));
    }
    FlowField::new(
        Grid::from_vec(h, w, dy)?,
        Grid::from_vec(h, w, dx)?,
        Grid::from_vec(h, w, conf)?,
    )
}

/// Color-code a flow field for inspection: displacements map to the red and
/// green channels around mid-gray, confidence to blue.
pub fn save_flow_png<T: Scalar>(flow: &FlowField<T>, max_mag: f64, path: &Path) -> Result<()> {
    let mag = max_mag.max(1e-9);
    let mut img = image::ImageBuffer::<image::Rgb<u8>, Vec<u8>>::new(
        flow.width() as u32,
        flow.height() as u32,
    );
    for (r, row) in img.rows_mut().enumerate() {
        for (c, px) in row.enumerate() {
            let dy = flow.dy().get(r, c).to_f64() / mag;
            let dx = flow.dx().get(r, c).to_f64() / mag;
            let conf = flow.confidence().get(r, c).to_f64();
            px.0 = [
                ((dx * 0.5 + 0.5).clamp(0.0, 1.0) * 255.0).round() as u8,
                ((dy * 0.5 + 0.5).clamp(0.0, 1.0) * 255.0).round() as u8,
                (conf.clamp(0.0, 1.0) * 255.0).round() as u8,
            ];
        }
    }
    img.save(path)?;
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
