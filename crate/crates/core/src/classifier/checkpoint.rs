use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassifierError, CnnConfig, CnnModel, Layout};
use crate::embeddings::{Embeddings, UNK};

const FORMAT: &str = "crisisnews-cnn/1";

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    config: CnnConfig,
    vocab_hash: String,
    vocab_size: usize,
    unk_vector: Vec<f64>,
    params: Vec<f64>,
}

/// JSON with the configuration, the vocabulary hash, the `<unk>` row and
/// the flat parameters. The embedding matrix itself is not stored.
pub fn save_checkpoint(path: &Path, model: &CnnModel) -> Result<(), ClassifierError> {
    let io_err = |source| ClassifierError::Io { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io_err)?;
    }
    let ck = Checkpoint {
        format: FORMAT.to_string(),
        config: model.config.clone(),
        vocab_hash: model.vocab.hash(),
        vocab_size: model.vocab.len(),
        unk_vector: model.unk_vector().to_vec(),
        params: model.params.clone(),
    };
    let mut text = serde_json::to_string(&ck)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err)
}

/// Restore a model against the embeddings it was trained with. Fails when
/// their vocabulary hash differs from the stored one.
pub fn load_checkpoint(path: &Path, embeddings: &Embeddings) -> Result<CnnModel, ClassifierError> {
    let text = fs::read_to_string(path).map_err(|source| ClassifierError::Io { path: path.to_path_buf(), source })?;
    let ck: Checkpoint = serde_json::from_str(&text)?;
    if ck.format != FORMAT {
        return Err(ClassifierError::Format(format!("unknown format {:?}", ck.format)));
    }
    let expected = embeddings.vocab().hash();
    if ck.vocab_hash != expected || ck.vocab_size != embeddings.vocab().len() {
        return Err(ClassifierError::VocabularyMismatch { expected, found: ck.vocab_hash });
    }
    let mut model = CnnModel::build(ck.config, embeddings)?;
    let d = model.config.embedding_dim;
    if ck.params.len() != Layout::new(&model.config).total || ck.unk_vector.len() != d {
        return Err(ClassifierError::Format("parameter count does not match the configuration".into()));
    }
    if ck.params.iter().chain(&ck.unk_vector).any(|x| !x.is_finite()) {
        return Err(ClassifierError::Format("non-finite parameter".into()));
    }
    model.params = ck.params;
    model.embeddings[UNK * d..(UNK + 1) * d].copy_from_slice(&ck.unk_vector);
    Ok(model)
}
