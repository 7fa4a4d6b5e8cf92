//! Coordinate-list tensor text format: one nonzero per line as
//! `h0 h1 h2 value` with 1-indexed coordinates, `#` comment lines, and an
//! optional `# dims: I0 I1 I2` header. Without the header, dimensions are
//! inferred from the maximum coordinate per mode.

use super::{SparseTensor, WorkloadError};

fn fail<T>(line: usize, reason: impl Into<String>) -> Result<T, WorkloadError> {
    Err(WorkloadError::TensorParse {
        line,
        reason: reason.into(),
    })
}

pub fn parse_tns(text: &str) -> Result<SparseTensor, WorkloadError> {
    let mut declared: Option<[u64; 3]> = None;
    let mut entries: Vec<(usize, [u64; 3], f64)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim_start();
            if let Some(sizes) = rest.strip_prefix("dims:") {
                if declared.is_some() {
                    return fail(line_no, "duplicate dims header");
                }
                let parts: Vec<&str> = sizes.split_whitespace().collect();
                if parts.len() != 3 {
                    return fail(
                        line_no,
                        format!("dims header needs 3 sizes, got {}", parts.len()),
                    );
                }
                let mut dims = [0u64; 3];
                for (m, p) in parts.iter().enumerate() {
                    match p.parse::<u64>() {
                        Ok(d) if d >= 1 => dims[m] = d,
                        _ => return fail(line_no, format!("invalid dimension '{p}'")),
                    }
                }
                declared = Some(dims);
            }
            continue;
        }

        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return fail(
                line_no,
                format!("expected 'h0 h1 h2 value', got {} fields", fields.len()),
            );
        }
        let mut coord = [0u64; 3];
        for m in 0..3 {
            let c: u64 = match fields[m].parse() {
                Ok(c) => c,
                Err(_) => return fail(line_no, format!("invalid coordinate '{}'", fields[m])),
            };
            if c == 0 {
                return fail(line_no, "coordinates are 1-indexed");
            }
            coord[m] = c - 1;
        }
        let value: f64 = match fields[3].parse() {
            Ok(v) => v,
            Err(_) => return fail(line_no, format!("invalid value '{}'", fields[3])),
        };
        if !value.is_finite() {
            return fail(line_no, format!("non-finite value '{}'", fields[3]));
        }
        entries.push((line_no, coord, value));
    }

    let dims = match declared {
        Some(d) => {
            for &(line, coord, _) in &entries {
                for m in 0..3 {
                    if coord[m] >= d[m] {
                        return fail(
                            line,
                            format!(
                                "coordinate {} exceeds declared dimension {}",
                                coord[m] + 1,
                                d[m]
                            ),
                        );
                    }
                }
            }
            d
        }
        None => {
            if entries.is_empty() {
                return Err(WorkloadError::Invalid(
                    "tensor text has no entries and no dims header".into(),
                ));
            }
            let mut d = [0u64; 3];
            for &(_, coord, _) in &entries {
                for m in 0..3 {
                    d[m] = d[m].max(coord[m] + 1);
                }
            }
            d
        }
    };

    SparseTensor::new(dims, entries.into_iter().map(|(_, c, v)| (c, v)).collect())
}
