//! Text serialization of [`GridFlowField`].
//!
//! ```text
//! gridflow v1 <cols> <rows> <cell_size>
//! <index> <valid> px_prev py_prev px_curr py_curr X_prev Y_prev Z_prev X_curr Y_curr Z_curr
//! ```
//!
//! Floats carry 9 significant digits, i.e. single precision. Values are
//! parsed as `f32` and widened, so save/load is bit-exact for fields that
//! hold single precision values (any loaded field does).

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Vector2, Vector3};
use thiserror::Error;

use super::GridFlowField;

#[derive(Debug, Error)]
pub enum FlowFileError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> FlowFileError {
    FlowFileError::Parse { line, msg: msg.into() }
}

pub fn format_flow(field: &GridFlowField) -> String {
    let mut out = String::with_capacity(field.len() * 160);
    writeln!(out, "gridflow v1 {} {} {}", field.cols, field.rows, field.cell_size).unwrap();
    for i in 0..field.len() {
        let (a, b) = (field.pixels_prev[i], field.pixels_curr[i]);
        let (p, q) = (field.points_prev[i], field.points_curr[i]);
        write!(out, "{} {}", i, field.valid[i] as u8).unwrap();
        for v in [a.x, a.y, b.x, b.y, p.x, p.y, p.z, q.x, q.y, q.z] {
            write!(out, " {v:.8e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_flow(text: &str) -> Result<GridFlowField, FlowFileError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 || h[0] != "gridflow" || h[1] != "v1" {
        return Err(parse_err(hl + 1, "expected header 'gridflow v1 cols rows cell_size'"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|e| parse_err(hl + 1, format!("{e}")));
    let (cols, rows, cell) = (num(h[2])?, num(h[3])?, num(h[4])?);
    if cell == 0 {
        return Err(parse_err(hl + 1, "cell size must be positive"));
    }
    let mut field = GridFlowField::empty(cols, rows, cell);
    let n = field.len();
    let mut count = 0;
    let mut last_line = hl + 1;
    for (ln, line) in lines {
        let line_no = ln + 1;
        last_line = line_no;
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 12 {
            return Err(parse_err(line_no, format!("expected 12 fields, found {}", f.len())));
        }
        let index: usize = f[0].parse().map_err(|e| parse_err(line_no, format!("index: {e}")))?;
        if index != count {
            return Err(parse_err(line_no, format!("expected index {count}, found {index}")));
        }
        if index >= n {
            return Err(parse_err(line_no, format!("more than {n} cells")));
        }
        let valid = match f[1] {
            "0" => false,
            "1" => true,
            other => return Err(parse_err(line_no, format!("bad validity flag '{other}'"))),
        };
        let mut v = [0f64; 10];
        for (k, s) in f[2..].iter().enumerate() {
            v[k] = s.parse::<f32>().map_err(|e| parse_err(line_no, format!("{e}")))? as f64;
        }
        field.valid[index] = valid;
        field.pixels_prev[index] = Vector2::new(v[0], v[1]);
        field.pixels_curr[index] = Vector2::new(v[2], v[3]);
        field.points_prev[index] = Vector3::new(v[4], v[5], v[6]);
        field.points_curr[index] = Vector3::new(v[7], v[8], v[9]);
        count += 1;
    }
    if count != n {
        return Err(parse_err(last_line, format!("header declares {n} cells, found {count}")));
    }
    Ok(field)
}

pub fn load_flow(path: impl AsRef<Path>) -> Result<GridFlowField, FlowFileError> {
    parse_flow(&std::fs::read_to_string(path)?)
}

pub fn save_flow(field: &GridFlowField, path: impl AsRef<Path>) -> Result<(), FlowFileError> {
    std::fs::write(path, format_flow(field))?;
    Ok(())
}
