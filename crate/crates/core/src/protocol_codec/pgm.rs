//! Portable graymap I/O, values normalised to [0, 1].

use ndarray::Array2;

use crate::{Error, Result};

/// Parses a P2 (ASCII) or P5 (binary, 8- or 16-bit) graymap.
pub fn read_pgm(bytes: &[u8]) -> Result<Array2<f64>> {
    let mut pos = 0;
    let mut header = Vec::with_capacity(4);
    while header.len() < 4 {
        // skip whitespace and comments
        while pos < bytes.len() {
            match bytes[pos] {
                b'#' => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() && bytes[pos] != b'#' {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        header.push(std::str::from_utf8(&bytes[start..pos]).map_err(|e| Error::Format(e.to_string()))?);
    }
    let magic = header[0];
    let num = |s: &str, what: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Format(format!("bad PGM {what} '{s}'")))
    };
    let (width, height, maxval) = (num(header[1], "width")?, num(header[2], "height")?, num(header[3], "maxval")?);
    if width == 0 || height == 0 || maxval == 0 || maxval > 65535 {
        return Err(Error::Format("PGM dimensions or maxval out of range".into()));
    }
    let n = width * height;
    let samples: Vec<usize> = match magic {
        "P2" => std::str::from_utf8(&bytes[pos..])
            .map_err(|e| Error::Format(e.to_string()))?
            .split_ascii_whitespace()
            .take(n)
            .map(|s| num(s, "sample"))
            .collect::<Result<_>>()?,
        "P5" => {
            // exactly one whitespace byte separates maxval from the raster
            let data = bytes.get(pos + 1..).unwrap_or(&[]);
            if maxval < 256 {
                data.iter().take(n).map(|&b| b as usize).collect()
            } else {
                data.chunks_exact(2)
                    .take(n)
                    .map(|c| (c[0] as usize) << 8 | c[1] as usize)
                    .collect()
            }
        }
        other => return Err(Error::Format(format!("unsupported PGM magic '{other}'"))),
    };
    if samples.len() != n {
        return Err(Error::Format(format!("expected {n} PGM samples, found {}", samples.len())));
    }
    if samples.iter().any(|&s| s > maxval) {
        return Err(Error::Format("PGM sample exceeds maxval".into()));
    }
    let values = samples.into_iter().map(|s| s as f64 / maxval as f64).collect();
    Array2::from_shape_vec((height, width), values).map_err(|e| Error::Format(e.to_string()))
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// ASCII graymap with maxval 255.
pub fn write_pgm_p2(image: &Array2<f64>) -> String {
    let (h, w) = image.dim();
    let mut out = format!("P2\n{w} {h}\n255\n");
    for row in image.rows() {
        let line: Vec<String> = row.iter().map(|&v| quantize(v).to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Binary graymap with maxval 255.
pub fn write_pgm_p5(image: &Array2<f64>) -> Vec<u8> {
    let (h, w) = image.dim();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(image.iter().map(|&v| quantize(v)));
    out
}
