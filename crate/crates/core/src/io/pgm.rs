use std::io::{self, Write};

use crate::model::Plane;

/// Binary PGM (P5), maxval 255.
pub fn write_pgm<W: Write>(mut out: W, plane: &Plane) -> io::Result<()> {
  write!(out, "P5\n{} {}\n255\n", plane.width(), plane.height())?;
  out.write_all(plane.data())
}
