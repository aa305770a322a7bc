//! Plain-text vector files in the common word2vec layout: a
//! `<vocab_size> <dim>` header, then one `word v1 … vdim` line per word.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{Vocabulary, WordVectorTable};
use crate::{Error, Result};

pub fn save_vectors(table: &WordVectorTable, vocab: &Vocabulary, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_vectors(table, vocab, &mut out).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn write_vectors<W: Write>(table: &WordVectorTable, vocab: &Vocabulary, out: &mut W) -> Result<()> {
    if table.len() != vocab.len() {
        return Err(Error::Data(format!(
            "table has {} rows but vocabulary has {} words",
            table.len(),
            vocab.len()
        )));
    }
    let io = |e| Error::io("<vectors>", e);
    writeln!(out, "{} {}", vocab.len(), table.dim()).map_err(io)?;
    let mut line = String::new();
    for (i, word) in vocab.words().iter().enumerate() {
        if word.is_empty() || word.chars().any(char::is_whitespace) {
            return Err(Error::Data(format!("word {i} cannot be written: '{word}'")));
        }
        line.clear();
        line.push_str(word);
        for v in table.row(i) {
            use std::fmt::Write as _;
            // shortest representation that parses back to the same f32
            write!(line, " {v}").expect("writing to a String");
        }
        line.push('\n');
        out.write_all(line.as_bytes()).map_err(io)?;
    }
    Ok(())
}

pub fn load_vectors(path: &Path) -> Result<(Vocabulary, WordVectorTable)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_vectors(BufReader::new(file), path)
}

/// Reads a vector file. The returned vocabulary carries words only, no counts.
pub fn read_vectors<R: BufRead>(reader: R, origin: &Path) -> Result<(Vocabulary, WordVectorTable)> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(origin, e))?,
        None => return Err(Error::parse(origin, 1, "missing header")),
    };
    let parts: Vec<&str> = header.split_whitespace().collect();
    let (size, dim) = match parts.as_slice() {
        [size, dim] => match (size.parse::<usize>(), dim.parse::<usize>()) {
            (Ok(s), Ok(d)) if d > 0 => (s, d),
            _ => return Err(Error::parse(origin, 1, format!("malformed header '{header}'"))),
        },
        _ => return Err(Error::parse(origin, 1, format!("malformed header '{header}'"))),
    };

    let mut words = Vec::with_capacity(size);
    let mut values = Vec::with_capacity(size * dim);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if words.len() == size {
            return Err(Error::parse(origin, lineno, format!("more rows than the declared {size}")));
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("non-empty line");
        let before = values.len();
        for field in fields {
            let v: f32 = field
                .parse()
                .map_err(|_| Error::parse(origin, lineno, format!("invalid number '{field}'")))?;
            if !v.is_finite() {
                return Err(Error::parse(origin, lineno, "non-finite component"));
            }
            values.push(v);
        }
        let arity = values.len() - before;
        if arity != dim {
            return Err(Error::parse(
                origin,
                lineno,
                format!("row has {arity} components, header declares {dim}"),
            ));
        }
        words.push(word.to_string());
    }
    if words.len() != size {
        return Err(Error::parse(
            origin,
            size + 1,
            format!("header declares {size} rows, found {}", words.len()),
        ));
    }
    let vocab = Vocabulary::from_words(words)?;
    let table = WordVectorTable::new(dim, values)?;
    Ok((vocab, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use rand::Rng;

    fn sample(dim: usize, words: usize, seed: u64) -> (Vocabulary, WordVectorTable) {
        let mut rng = rng_from_seed(seed);
        let vocab = Vocabulary::from_words((0..words).map(|i| format!("w{i}")).collect()).unwrap();
        let values = (0..words * dim).map(|_| rng.random::<f32>() * 2.0 - 1.0).collect();
        (vocab, WordVectorTable::new(dim, values).unwrap())
    }

    #[test]
    fn header_and_line_count() {
        let (vocab, table) = sample(3, 2, 1);
        let mut buf = Vec::new();
        write_vectors(&table, &vocab, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "2 3");
        assert!(lines[1].starts_with("w0 "));
    }

    #[test]
    fn round_trip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        let (vocab, table) = sample(7, 20, 2);
        save_vectors(&table, &vocab, &path).unwrap();
        let (vocab2, table2) = load_vectors(&path).unwrap();
        assert_eq!(vocab2.words(), vocab.words());
        let max_diff = (0..table.len())
            .flat_map(|i| table.row(i).iter().zip(table2.row(i)).map(|(a, b)| (a - b).abs()))
            .fold(0.0f32, f32::max);
        assert!(max_diff < 1e-6);
    }

    #[test]
    fn arity_mismatch_names_line() {
        let text = "2 3\na 1 2 3\nb 1 2\n";
        let err = read_vectors(text.as_bytes(), Path::new("v.txt")).unwrap_err();
        assert!(err.to_string().contains("v.txt:3:"), "{err}");
    }

    #[test]
    fn malformed_headers_and_counts() {
        for text in ["", "x y\n", "2\n", "1 0\n"] {
            let err = read_vectors(text.as_bytes(), Path::new("v")).unwrap_err();
            assert!(err.to_string().contains("v:1:"), "{text:?}: {err}");
        }
        assert!(read_vectors("2 1\na 1\n".as_bytes(), Path::new("v")).is_err());
        assert!(read_vectors("1 1\na 1\nb 2\n".as_bytes(), Path::new("v")).is_err());
        assert!(read_vectors("1 1\na nan\n".as_bytes(), Path::new("v")).is_err());
    }
}
