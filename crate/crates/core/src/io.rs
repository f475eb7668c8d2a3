//! Text formats: sample files and model checkpoints.
//!
//! Sample file: one example per line as `0`/`1` characters; lines starting
//! with `#` are metadata, written as `# key=value`.
//!
//! Checkpoint:
//!
//! ```text
//! # bmlab checkpoint
//! n=<visible units>
//! m=<hidden units>
//! kind=<naive|cd1>
//! seed=<u64>
//! epoch=<completed epochs>
//! visible_bias
//! a_1 ... a_n
//! hidden_bias
//! b_1 ... b_m
//! weights
//! w_11 ... w_1m        (n rows)
//! ```
//!
//! Values are written with Rust's shortest round-trip formatting, so a
//! checkpoint reloads bit-identically.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rbm::RbmParams;
use crate::scalar::Real;
use crate::state::StateBatch;
use crate::training::NegativePhaseKind;

/// Metadata keys understood for annealer sample files.
pub const SAMPLE_METADATA_KEYS: [&str; 6] = [
    "device",
    "temperature",
    "spin_reversal_transforms",
    "anneal_time_us",
    "delay_us",
    "readout_us",
];

#[derive(Clone, Debug, PartialEq)]
pub struct SampleFile {
    /// `key=value` metadata in file order.
    pub metadata: Vec<(String, String)>,
    pub batch: StateBatch,
}

impl SampleFile {
    pub fn new(batch: StateBatch) -> Self {
        Self {
            metadata: Vec::new(),
            batch,
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Errors unless every row has `width` bits.
    pub fn expect_width(self, width: usize) -> Result<Self> {
        if self.batch.width() != width {
            return Err(Error::DimensionMismatch {
                expected: width,
                actual: self.batch.width(),
            });
        }
        Ok(self)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}={v}")?;
        }
        let mut line = String::with_capacity(self.batch.width() + 1);
        for row in self.batch.rows() {
            line.clear();
            line.extend(row.iter().map(|&b| if b == 1 { '1' } else { '0' }));
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut metadata = Vec::new();
        let mut data = Vec::new();
        let mut width = None;
        for (k, line) in r.lines().enumerate() {
            let line = line?;
            let lineno = k + 1;
            let text = line.trim_end_matches(['\r', '\n']);
            if let Some(meta) = text.strip_prefix('#') {
                if let Some((key, value)) = meta.split_once('=') {
                    metadata.push((key.trim().to_string(), value.trim().to_string()));
                }
                continue;
            }
            if text.trim().is_empty() {
                continue;
            }
            let bits: Vec<u8> = text
                .chars()
                .map(|c| match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    other => Err(Error::Parse {
                        line: lineno,
                        message: format!("unexpected character '{other}'"),
                    }),
                })
                .collect::<Result<_>>()?;
            match width {
                None => width = Some(bits.len()),
                Some(w) if w != bits.len() => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("expected {w} bits, found {}", bits.len()),
                    })
                }
                _ => {}
            }
            data.extend(bits);
        }
        let width = width.ok_or(Error::Empty("sample file"))?;
        Ok(Self {
            metadata,
            batch: StateBatch::new(width, data)?,
        })
    }
}

/// Reads a sample file.
pub fn import_samples(path: &Path) -> Result<SampleFile> {
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    SampleFile::read_from(BufReader::new(file))
}

/// Reads a sample file and checks its width.
pub fn import_samples_with_width(path: &Path, width: usize) -> Result<SampleFile> {
    import_samples(path)?.expect_width(width)
}

pub fn export_samples(path: &Path, samples: &SampleFile) -> Result<()> {
    samples.save(path)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<F> {
    pub params: RbmParams<F>,
    pub kind: NegativePhaseKind,
    pub seed: u64,
    pub epoch: usize,
}

fn write_row<W: Write, F: Real>(w: &mut W, values: &[F]) -> Result<()> {
    let mut first = true;
    for v in values {
        if !first {
            w.write_all(b" ")?;
        }
        write!(w, "{v}")?;
        first = false;
    }
    w.write_all(b"\n")?;
    Ok(())
}

impl<F: Real> Checkpoint<F> {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let (n, m) = (self.params.n_visible(), self.params.n_hidden());
        writeln!(w, "# bmlab checkpoint")?;
        writeln!(w, "n={n}")?;
        writeln!(w, "m={m}")?;
        writeln!(w, "kind={}", self.kind)?;
        writeln!(w, "seed={}", self.seed)?;
        writeln!(w, "epoch={}", self.epoch)?;
        writeln!(w, "visible_bias")?;
        write_row(&mut w, self.params.visible_bias())?;
        writeln!(w, "hidden_bias")?;
        write_row(&mut w, self.params.hidden_bias())?;
        writeln!(w, "weights")?;
        for row in self.params.weights().chunks_exact(m) {
            write_row(&mut w, row)?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let lines: Vec<(usize, String)> = r
            .lines()
            .enumerate()
            .map(|(k, l)| l.map(|l| (k + 1, l.trim().to_string())))
            .collect::<std::io::Result<_>>()?;
        let mut it = lines.into_iter().filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let mut next = |what: &str| {
            it.next().ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("unexpected end of checkpoint, expected {what}"),
            })
        };
        let mut header = |key: &str| -> Result<(usize, String)> {
            let (lineno, line) = next(key)?;
            match line.split_once('=') {
                Some((k, v)) if k.trim() == key => Ok((lineno, v.trim().to_string())),
                _ => Err(Error::Parse {
                    line: lineno,
                    message: format!("expected '{key}=...'"),
                }),
            }
        };
        let parse_usize = |(lineno, v): (usize, String)| {
            v.parse::<usize>().map_err(|_| Error::Parse {
                line: lineno,
                message: format!("bad integer '{v}'"),
            })
        };
        let n = parse_usize(header("n")?)?;
        let m = parse_usize(header("m")?)?;
        let (kline, kind) = header("kind")?;
        let kind: NegativePhaseKind = kind.parse().map_err(|e: Error| Error::Parse {
            line: kline,
            message: e.to_string(),
        })?;
        let (sline, seed) = header("seed")?;
        let seed: u64 = seed.parse().map_err(|_| Error::Parse {
            line: sline,
            message: format!("bad seed '{seed}'"),
        })?;
        let epoch = parse_usize(header("epoch")?)?;

        let mut section = |name: &str, rows: usize, cols: usize| -> Result<Vec<F>> {
            let (lineno, label) = next(name)?;
            if label != name {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected section '{name}'"),
                });
            }
            let mut out = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (lineno, line) = next(name)?;
                let values: Vec<F> = line
                    .split_whitespace()
                    .map(|tok| {
                        tok.parse::<F>().map_err(|_| Error::Parse {
                            line: lineno,
                            message: format!("bad number '{tok}'"),
                        })
                    })
                    .collect::<Result<_>>()?;
                if values.len() != cols {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("expected {cols} values, found {}", values.len()),
                    });
                }
                out.extend(values);
            }
            Ok(out)
        };
        let a = section("visible_bias", 1, n)?;
        let b = section("hidden_bias", 1, m)?;
        let w = section("weights", n, m)?;
        Ok(Self {
            params: RbmParams::new(a, b, w)?,
            kind,
            seed,
            epoch,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::read_from(BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeedSequence;

    #[test]
    fn sample_file_parses_known_bits() {
        let text = "# device=emulator\n# temperature=8\n0101\n1100\n";
        let f = SampleFile::read_from(text.as_bytes()).unwrap();
        assert_eq!(f.batch, StateBatch::from_rows(&[[0u8, 1, 0, 1], [1, 1, 0, 0]]).unwrap());
        assert_eq!(f.meta("device"), Some("emulator"));
        assert_eq!(f.meta("temperature"), Some("8"));
    }

    #[test]
    fn sample_file_round_trip() {
        let batch = crate::samplers::uniform_init(17, 144, SeedSequence::new(3)).unwrap();
        let f = SampleFile::new(batch)
            .with_meta("device", "annealer")
            .with_meta("anneal_time_us", 20);
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        assert_eq!(SampleFile::read_from(buf.as_slice()).unwrap(), f);
    }

    #[test]
    fn sample_file_rejects_malformed_input() {
        assert!(matches!(
            SampleFile::read_from("010\n01\n".as_bytes()),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(SampleFile::read_from("01x\n".as_bytes()).is_err());
        assert!(SampleFile::read_from("# only=meta\n".as_bytes()).is_err());
        let short = format!("{}\n", "0".repeat(143));
        let f = SampleFile::read_from(short.as_bytes()).unwrap();
        assert!(f.expect_width(144).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let params = RbmParams::<f64>::random_full(5, 3, 0.7, SeedSequence::new(2)).unwrap();
        let ck = Checkpoint {
            params,
            kind: NegativePhaseKind::Cd,
            seed: 99,
            epoch: 2000,
        };
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# bmlab checkpoint\nn=5\nm=3\nkind=cd1\nseed=99\nepoch=2000\nvisible_bias\n"));
        assert_eq!(Checkpoint::<f64>::read_from(buf.as_slice()).unwrap(), ck);

        let f32_ck = Checkpoint {
            params: ck.params.cast::<f32>(),
            ..Checkpoint { params: RbmParams::<f32>::zeros(1, 1).unwrap(), kind: ck.kind, seed: 1, epoch: 0 }
        };
        let mut buf = Vec::new();
        f32_ck.write_to(&mut buf).unwrap();
        assert_eq!(Checkpoint::<f32>::read_from(buf.as_slice()).unwrap(), f32_ck);
    }

    #[test]
    fn checkpoint_rejects_truncation() {
        let ck = Checkpoint {
            params: RbmParams::<f64>::zeros(2, 2).unwrap(),
            kind: NegativePhaseKind::Naive,
            seed: 1,
            epoch: 3,
        };
        let mut buf = Vec::new();
        ck.write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut = &text[..text.len() - 8];
        assert!(Checkpoint::<f64>::read_from(cut.as_bytes()).is_err());
        assert!(Checkpoint::<f64>::read_from(text.replace("m=2", "m=3").as_bytes()).is_err());
    }
}
