//! Legacy ASCII VTK unstructured grids: model nodes as points, model edges
//! as lines, solid and fluid temperatures as point data.

use std::io::{self, Write};

use crate::phassembly::StateSpaceModel;
use crate::simulate::Frame;

const VTK_LINE: u8 = 3;

/// Edges as pairs of point indices, inner nodes first, then Dirichlet nodes.
fn lines(model: &StateSpaceModel) -> Vec<[usize; 2]> {
    let n = model.n_inner();
    let mut out = Vec::new();
    for e in 0..model.d1_ii.nrows() {
        let mut ends: Vec<(usize, i32)> = model.d1_ii.row(e).collect();
        ends.extend(model.d1_ib.row(e).map(|(k, v)| (n + k, v)));
        if let [(a, va), (b, _)] = ends[..] {
            out.push(if va < 0 { [a, b] } else { [b, a] });
        }
    }
    out
}

pub fn write_frame<W: Write>(mut out: W, model: &StateSpaceModel, frame: &Frame) -> io::Result<()> {
    let layout = &model.layout;
    let points: Vec<[f64; 3]> = layout
        .inner_nodes
        .iter()
        .chain(&layout.border_nodes)
        .map(|n| n.position)
        .collect();
    let lines = lines(model);
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "temperatures t={:.16e}", frame.t)?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", points.len())?;
    for p in &points {
        writeln!(out, "{:.16e} {:.16e} {:.16e}", p[0], p[1], p[2])?;
    }
    writeln!(out, "CELLS {} {}", lines.len(), 3 * lines.len())?;
    for [a, b] in &lines {
        writeln!(out, "2 {a} {b}")?;
    }
    writeln!(out, "CELL_TYPES {}", lines.len())?;
    for _ in &lines {
        writeln!(out, "{VTK_LINE}")?;
    }
    writeln!(out, "POINT_DATA {}", points.len())?;
    for (name, values) in [("T_solid", &frame.solid), ("T_fluid", &frame.fluid)] {
        writeln!(out, "SCALARS {name} double 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for v in values.iter() {
            writeln!(out, "{v:.16e}")?;
        }
    }
    Ok(())
}
