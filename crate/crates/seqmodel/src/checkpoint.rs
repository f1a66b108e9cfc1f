//! Text checkpoint format. Values are stored as the hex bit pattern of each
//! f64 so a save/load cycle is exact; everything else is plain CSV-ish lines
//! that are easy to eyeball.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write as _};
use std::path::Path;

use thiserror::Error;

use crate::lstm::{Layer, LossKind, LstmParams};

const MAGIC: &str = "seqmodel-ckpt,v1";

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {msg}")]
    Malformed { path: String, line: usize, msg: String },
}

fn bits_row(out: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{:016x}", v.to_bits()).unwrap();
    }
    out.push('\n');
}

pub fn write_checkpoint(path: &Path, label: &str, p: &LstmParams) -> std::io::Result<()> {
    let mut s = String::new();
    s.push_str(MAGIC);
    s.push('\n');
    writeln!(s, "label,{label}").unwrap();
    writeln!(s, "loss,{}", match p.loss { LossKind::Nll => "nll", LossKind::Mae => "mae" }).unwrap();
    writeln!(s, "dims,{},{},{},{}", p.input_dim, p.hidden, p.layers.len(), p.output_dim).unwrap();
    writeln!(s, "dropout,{:016x}", p.dropout.to_bits()).unwrap();
    let h = p.hidden;
    for (l, layer) in p.layers.iter().enumerate() {
        writeln!(s, "tensor,w{l},{},{}", 4 * h, layer.in_dim).unwrap();
        for r in 0..4 * h {
            bits_row(&mut s, &layer.w[r * layer.in_dim..(r + 1) * layer.in_dim]);
        }
        writeln!(s, "tensor,u{l},{},{}", 4 * h, h).unwrap();
        for r in 0..4 * h {
            bits_row(&mut s, &layer.u[r * h..(r + 1) * h]);
        }
        writeln!(s, "tensor,b{l},{},1", 4 * h).unwrap();
        for r in 0..4 * h {
            bits_row(&mut s, &layer.b[r..r + 1]);
        }
    }
    writeln!(s, "tensor,head_w,{},{}", p.output_dim, h).unwrap();
    for r in 0..p.output_dim {
        bits_row(&mut s, &p.head_w[r * h..(r + 1) * h]);
    }
    writeln!(s, "tensor,head_b,{},1", p.output_dim).unwrap();
    for r in 0..p.output_dim {
        bits_row(&mut s, &p.head_b[r..r + 1]);
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(s.as_bytes())?;
    f.flush()
}

struct Lines<R> {
    inner: R,
    path: String,
    n: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<Option<String>, CheckpointError> {
        let mut buf = String::new();
        let read = self.inner.read_line(&mut buf)?;
        if read == 0 {
            return Ok(None);
        }
        self.n += 1;
        while buf.ends_with('\n') || buf.ends_with('\r') {
            buf.pop();
        }
        Ok(Some(buf))
    }

    fn expect(&mut self, what: &str) -> Result<String, CheckpointError> {
        self.next()?.ok_or_else(|| self.err(format!("unexpected end of file, wanted {what}")))
    }

    fn err(&self, msg: String) -> CheckpointError {
        CheckpointError::Malformed { path: self.path.clone(), line: self.n, msg }
    }
}

fn parse_bits(s: &str) -> Option<f64> {
    u64::from_str_radix(s, 16).ok().map(f64::from_bits)
}

fn read_tensor<R: BufRead>(
    lines: &mut Lines<R>,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<Vec<f64>, CheckpointError> {
    let header = lines.expect("tensor header")?;
    let want = format!("tensor,{name},{rows},{cols}");
    if header != want {
        return Err(lines.err(format!("expected `{want}`, got `{header}`")));
    }
    let mut out = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let row = lines.expect("tensor row")?;
        let mut k = 0;
        for tok in row.split(' ') {
            let v = parse_bits(tok).ok_or_else(|| lines.err(format!("bad f64 bits `{tok}`")))?;
            out.push(v);
            k += 1;
        }
        if k != cols {
            return Err(lines.err(format!("expected {cols} values, got {k}")));
        }
    }
    Ok(out)
}

pub fn read_checkpoint(path: &Path) -> Result<(String, LstmParams), CheckpointError> {
    let f = std::fs::File::open(path)?;
    let mut lines = Lines { inner: BufReader::new(f), path: path.display().to_string(), n: 0 };

    let magic = lines.expect("magic")?;
    if magic != MAGIC {
        return Err(lines.err(format!("not a checkpoint (magic `{magic}`)")));
    }
    let label_line = lines.expect("label")?;
    let label = label_line
        .strip_prefix("label,")
        .ok_or_else(|| lines.err("missing label line".into()))?
        .to_string();
    let loss_line = lines.expect("loss")?;
    let loss = match loss_line.as_str() {
        "loss,nll" => LossKind::Nll,
        "loss,mae" => LossKind::Mae,
        other => return Err(lines.err(format!("bad loss line `{other}`"))),
    };
    let dims_line = lines.expect("dims")?;
    let dims: Vec<usize> = dims_line
        .strip_prefix("dims,")
        .map(|rest| rest.split(',').filter_map(|t| t.parse().ok()).collect())
        .unwrap_or_default();
    let [input_dim, hidden, n_layers, output_dim] = dims[..] else {
        return Err(lines.err(format!("bad dims line `{dims_line}`")));
    };
    if hidden == 0 || n_layers == 0 || input_dim == 0 || output_dim == 0 {
        return Err(lines.err("zero dimension".into()));
    }
    let drop_line = lines.expect("dropout")?;
    let dropout = drop_line
        .strip_prefix("dropout,")
        .and_then(parse_bits)
        .ok_or_else(|| lines.err(format!("bad dropout line `{drop_line}`")))?;

    let mut layers = Vec::with_capacity(n_layers);
    for l in 0..n_layers {
        let in_dim = if l == 0 { input_dim } else { hidden };
        let w = read_tensor(&mut lines, &format!("w{l}"), 4 * hidden, in_dim)?;
        let u = read_tensor(&mut lines, &format!("u{l}"), 4 * hidden, hidden)?;
        let b = read_tensor(&mut lines, &format!("b{l}"), 4 * hidden, 1)?;
        layers.push(Layer { w, u, b, in_dim });
    }
    let head_w = read_tensor(&mut lines, "head_w", output_dim, hidden)?;
    let head_b = read_tensor(&mut lines, "head_b", output_dim, 1)?;
    if lines.next()?.is_some_and(|l| !l.is_empty()) {
        return Err(lines.err("trailing content after final tensor".into()));
    }

    Ok((label, LstmParams { input_dim, hidden, output_dim, loss, dropout, layers, head_w, head_b }))
}
