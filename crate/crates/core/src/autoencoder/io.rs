//! Versioned text format for trained autoencoders.
//!
//! Values are written with Rust's shortest round-trip float formatting,
//! so serialize -> deserialize -> serialize is byte-identical.

use super::{DeepAutoencoder, Layer, ModalitySpan, NetKind, TieSpec};
use crate::error::{CoreError, Result};
use crate::numeric::Matrix;
use std::fmt::Write as _;

const MAGIC: &str = "affect-model v1";

pub fn serialize_model(net: &DeepAutoencoder) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "kind {}", net.kind.as_str());
    write_layout(&mut s, "input_layout", &net.input_layout);
    write_layout(&mut s, "output_layout", &net.output_layout);
    write_layers(&mut s, "encoder", &net.encoder);
    write_layers(&mut s, "decoder", &net.decoder);
    let _ = writeln!(s, "ties {}", net.tie_map.len());
    for t in &net.tie_map {
        let _ = writeln!(
            s,
            "tie {} {} {} {} {} {} {} {} {} {}",
            t.enc_layer,
            t.dec_layer,
            t.enc_rows.0,
            t.enc_rows.1,
            t.enc_cols.0,
            t.enc_cols.1,
            t.dec_rows.0,
            t.dec_rows.1,
            t.dec_cols.0,
            t.dec_cols.1
        );
    }
    s.push_str("end\n");
    s
}

fn write_layout(s: &mut String, name: &str, layout: &[ModalitySpan]) {
    let _ = writeln!(s, "{name} {}", layout.len());
    for span in layout {
        let _ = writeln!(s, "span {} {} {}", span.name, span.lo, span.hi);
    }
}

pub fn floats_line(vals: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{v:?}");
    }
    out
}

fn write_layers(s: &mut String, name: &str, layers: &[Layer]) {
    let _ = writeln!(s, "{name} {}", layers.len());
    for l in layers {
        let _ = writeln!(
            s,
            "layer {} {} {}",
            l.w.rows(),
            l.w.cols(),
            if l.mask.is_some() { "mask" } else { "none" }
        );
        let _ = writeln!(s, "w {}", floats_line(l.w.data()));
        let _ = writeln!(s, "b {}", floats_line(&l.b));
        if let Some(m) = &l.mask {
            let _ = writeln!(s, "mask {}", floats_line(m.data()));
        }
    }
}

struct Cursor<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> Cursor<'a> {
    fn next(&mut self) -> Result<&'a str> {
        self.line_no += 1;
        self.lines.next().ok_or_else(|| {
            CoreError::Parse(format!("model file truncated at line {}", self.line_no))
        })
    }

    fn expect_tagged(&mut self, tag: &str) -> Result<Vec<&'a str>> {
        let line = self.next()?;
        let mut parts = line.split(' ');
        let got = parts.next().unwrap_or("");
        if got != tag {
            return Err(CoreError::Parse(format!(
                "line {}: expected '{tag}', got '{got}'",
                self.line_no
            )));
        }
        Ok(parts.collect())
    }
}

pub fn parse_floats(parts: &[&str]) -> Result<Vec<f64>> {
    parts
        .iter()
        .map(|p| {
            p.parse::<f64>()
                .map_err(|_| CoreError::Parse(format!("bad float '{p}'")))
        })
        .collect()
}

fn parse_usize(s: &str) -> Result<usize> {
    s.parse()
        .map_err(|_| CoreError::Parse(format!("bad integer '{s}'")))
}

pub fn deserialize_model(text: &str) -> Result<DeepAutoencoder> {
    let mut cur = Cursor {
        lines: text.lines(),
        line_no: 0,
    };
    let magic = cur.next()?;
    if magic != MAGIC {
        return Err(CoreError::Parse(format!(
            "unsupported model header '{magic}'"
        )));
    }
    let kind = match cur.expect_tagged("kind")?.as_slice() {
        ["DAE"] => NetKind::Dae,
        ["BDAE"] => NetKind::Bdae,
        other => {
            return Err(CoreError::Parse(format!("unknown kind {other:?}")));
        }
    };
    let input_layout = read_layout(&mut cur, "input_layout")?;
    let output_layout = read_layout(&mut cur, "output_layout")?;
    let encoder = read_layers(&mut cur, "encoder")?;
    let decoder = read_layers(&mut cur, "decoder")?;
    let n_ties = parse_usize(cur.expect_tagged("ties")?[0])?;
    let mut tie_map = Vec::with_capacity(n_ties);
    for _ in 0..n_ties {
        let f = cur.expect_tagged("tie")?;
        if f.len() != 10 {
            return Err(CoreError::Parse("tie record needs 10 fields".into()));
        }
        let v: Vec<usize> = f.iter().map(|x| parse_usize(x)).collect::<Result<_>>()?;
        tie_map.push(TieSpec {
            enc_layer: v[0],
            dec_layer: v[1],
            enc_rows: (v[2], v[3]),
            enc_cols: (v[4], v[5]),
            dec_rows: (v[6], v[7]),
            dec_cols: (v[8], v[9]),
        });
    }
    cur.expect_tagged("end")?;

    let net = DeepAutoencoder {
        kind,
        encoder,
        decoder,
        tie_map,
        input_layout,
        output_layout,
    };
    if net.encoder.is_empty() || net.decoder.is_empty() {
        return Err(CoreError::Parse("model has no layers".into()));
    }
    if net.max_tie_violation() != 0.0 {
        return Err(CoreError::Parse(
            "model file violates its own tie map".into(),
        ));
    }
    Ok(net)
}

fn read_layout(cur: &mut Cursor, name: &str) -> Result<Vec<ModalitySpan>> {
    let n = parse_usize(cur.expect_tagged(name)?[0])?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let f = cur.expect_tagged("span")?;
        if f.len() != 3 {
            return Err(CoreError::Parse("span record needs 3 fields".into()));
        }
        out.push(ModalitySpan {
            name: f[0].to_string(),
            lo: parse_usize(f[1])?,
            hi: parse_usize(f[2])?,
        });
    }
    Ok(out)
}

fn read_layers(cur: &mut Cursor, name: &str) -> Result<Vec<Layer>> {
    let n = parse_usize(cur.expect_tagged(name)?[0])?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let head = cur.expect_tagged("layer")?;
        if head.len() != 3 {
            return Err(CoreError::Parse("layer header needs 3 fields".into()));
        }
        let rows = parse_usize(head[0])?;
        let cols = parse_usize(head[1])?;
        let has_mask = head[2] == "mask";
        let w = Matrix::from_vec(rows, cols, parse_floats(&cur.expect_tagged("w")?)?)?;
        let b = parse_floats(&cur.expect_tagged("b")?)?;
        if b.len() != cols {
            return Err(CoreError::Parse(format!(
                "bias length {} vs {} columns",
                b.len(),
                cols
            )));
        }
        let mask = if has_mask {
            Some(Matrix::from_vec(
                rows,
                cols,
                parse_floats(&cur.expect_tagged("mask")?)?,
            )?)
        } else {
            None
        };
        out.push(Layer { w, b, mask });
    }
    Ok(out)
}
