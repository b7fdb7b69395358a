//! ASCII PLY export of point clouds.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

pub fn write_ply(writer: impl Write, cloud: &PointCloud, colors: Option<&[[u8; 3]]>) -> Result<()> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if let Some(c) = colors {
        if c.len() != cloud.len() {
            return Err(Error::DimensionMismatch(format!("{} colors for {} points", c.len(), cloud.len())));
        }
    }
    let mut w = BufWriter::new(writer);
    writeln!(w, "ply")?;
    writeln!(w, "format ascii 1.0")?;
    writeln!(w, "element vertex {}", cloud.len())?;
    for axis in ["x", "y", "z"] {
        writeln!(w, "property double {axis}")?;
    }
    if colors.is_some() {
        for ch in ["red", "green", "blue"] {
            writeln!(w, "property uchar {ch}")?;
        }
    }
    writeln!(w, "end_header")?;
    for (i, p) in cloud.points.iter().enumerate() {
        match colors {
            Some(c) => writeln!(w, "{} {} {} {} {} {}", p.x, p.y, p.z, c[i][0], c[i][1], c[i][2])?,
            None => writeln!(w, "{} {} {}", p.x, p.y, p.z)?,
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_ply_file(path: impl AsRef<Path>, cloud: &PointCloud, colors: Option<&[[u8; 3]]>) -> Result<()> {
    write_ply(File::create(path)?, cloud, colors)
}
