//! Model text format:
//!
//! ```text
//! risfocus-mlp 1
//! dims 2 64 64 64 64
//! w <row 1 of W_1>
//! ...
//! b <b_1>
//! w <row 1 of W_2>
//! ...
//! ```
//!
//! Weight rows of each layer are followed by that layer's bias line. Values use
//! 17 significant digits, so a save/load cycle is bit-exact.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::network::{Layer, Mlp};
use crate::error::{Error, Result};
use crate::numerics::format_f64;

const MAGIC: &str = "risfocus-mlp 1";

pub fn write_model(mlp: &Mlp, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{MAGIC}")?;
    let dims = mlp.dims().map(|d| d.to_string()).join(" ");
    writeln!(out, "dims {dims}")?;
    let join = |vals: &[f64]| {
        vals.iter()
            .map(|v| format_f64(*v))
            .collect::<Vec<_>>()
            .join(" ")
    };
    for layer in mlp.layers() {
        for row in layer.weights.chunks(layer.inputs) {
            writeln!(out, "w {}", join(row))?;
        }
        writeln!(out, "b {}", join(&layer.bias))?;
    }
    Ok(())
}

pub fn save_model(mlp: &Mlp, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_model(mlp, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Mlp> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(BufReader::new(file), path)
}

pub fn read_model(input: impl BufRead, origin: &Path) -> Result<Mlp> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(l))) => Ok((n, l)),
            Some((_, Err(e))) => Err(Error::io(origin, e)),
            None => Err(err(0, format!("unexpected end of file, expected {what}"))),
        }
    };

    let (n, magic) = next("header")?;
    if magic.trim() != MAGIC {
        return Err(err(n, format!("expected {MAGIC:?}")));
    }
    let (n, dims_line) = next("dims line")?;
    let dims: Vec<usize> = match dims_line
        .split_whitespace()
        .collect::<Vec<_>>()
        .split_first()
    {
        Some((&"dims", rest)) => rest
            .iter()
            .map(|s| s.parse().map_err(|_| err(n, format!("bad width {s:?}"))))
            .collect::<Result<_>>()?,
        _ => return Err(err(n, "expected a dims line".into())),
    };
    if dims.len() != 5 {
        return Err(err(
            n,
            format!("expected 5 layer widths, got {}", dims.len()),
        ));
    }

    let mut parse_row = |tag: &str, len: usize| -> Result<Vec<f64>> {
        let (n, line) = next(tag)?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(tag) {
            return Err(err(n, format!("expected a {tag:?} line")));
        }
        let vals = parts
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| err(n, format!("bad number {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != len {
            return Err(err(
                n,
                format!("expected {len} values, found {}", vals.len()),
            ));
        }
        Ok(vals)
    };

    let mut layers = Vec::with_capacity(4);
    for w in dims.windows(2) {
        let (inputs, outputs) = (w[0], w[1]);
        let mut weights = Vec::with_capacity(inputs * outputs);
        for _ in 0..outputs {
            weights.extend(parse_row("w", inputs)?);
        }
        let bias = parse_row("b", outputs)?;
        layers.push(Layer {
            inputs,
            outputs,
            weights,
            bias,
        });
    }
    Mlp::from_layers(layers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SimRng;
    use std::io::Cursor;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = SimRng::new(5);
        let mlp = Mlp::init([2, 7, 5, 3, 8], &mut rng).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        save_model(&mlp, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back, mlp);
    }

    #[test]
    fn truncated_model_rejected() {
        let mlp = Mlp::zeros([2, 3, 3, 3, 2]).unwrap();
        let mut buf = Vec::new();
        write_model(&mlp, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(read_model(Cursor::new(cut), Path::new("m")).is_err());
        assert!(read_model(Cursor::new("nope"), Path::new("m")).is_err());
        let bad = text.replacen("dims 2 3 3 3 2", "dims 2 3 3 2", 1);
        assert!(read_model(Cursor::new(bad), Path::new("m")).is_err());
    }
}
