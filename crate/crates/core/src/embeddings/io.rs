use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{EmbeddingError, Embeddings, Vocabulary};

/// Plain-text vectors: a `|V| dim` header, then `token v1 … vdim` per row in
/// vocabulary order. Values use the shortest exact decimal form.
pub fn write_vectors(path: &Path, emb: &Embeddings) -> Result<(), EmbeddingError> {
    let io_err = |source| EmbeddingError::Io { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
    writeln!(w, "{} {}", emb.vocab().len(), emb.dim()).map_err(io_err)?;
    for (i, token) in emb.vocab().tokens().iter().enumerate() {
        let mut line = token.clone();
        for x in emb.row(i) {
            line.push(' ');
            line.push_str(&x.to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_vectors(path: &Path) -> Result<Embeddings, EmbeddingError> {
    let file = File::open(path).map_err(|source| EmbeddingError::Io { path: path.to_path_buf(), source })?;
    let parse = |line: usize, message: String| EmbeddingError::Parse { path: path.to_path_buf(), line, message };
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| parse(1, "empty file".into()))?
        .map_err(|source| EmbeddingError::Io { path: path.to_path_buf(), source })?;
    let dims: Vec<usize> = header.split_whitespace().map(str::parse).collect::<Result<_, _>>().map_err(|e| parse(1, format!("{e}")))?;
    let [n, dim] = dims[..] else {
        return Err(parse(1, format!("header {header:?} is not \"|V| d\"")));
    };
    let mut tokens = Vec::with_capacity(n);
    let mut data = Vec::with_capacity(n * dim);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|source| EmbeddingError::Io { path: path.to_path_buf(), source })?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let token = fields.next().unwrap_or_default().to_string();
        let before = data.len();
        for f in fields {
            data.push(f.parse::<f64>().map_err(|e| parse(i + 2, format!("{f:?}: {e}")))?);
        }
        if data.len() - before != dim {
            return Err(parse(i + 2, format!("expected {dim} values, got {}", data.len() - before)));
        }
        tokens.push(token);
    }
    if tokens.len() != n {
        return Err(parse(1, format!("header promises {n} rows, found {}", tokens.len())));
    }
    Embeddings::new(Vocabulary::from_tokens(tokens)?, dim, data)
}
