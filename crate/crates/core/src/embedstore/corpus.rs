use std::collections::HashMap;
use std::fs;
use std::path::Path;

use super::{EmbeddingMatrix, StoreError};

/// Caption-to-image association. Each image owns the cluster of captions
/// that describe it; caption indices follow line order of the source file
/// and image indices follow first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct CaptionCorpus {
    caption_ids: Vec<String>,
    image_ids: Vec<String>,
    caption_to_image: Vec<usize>,
    image_to_captions: Vec<Vec<usize>>,
    texts: Vec<Option<String>>,
    caption_lookup: HashMap<String, usize>,
}

impl CaptionCorpus {
    /// Builds a corpus from explicit assignments.
    ///
    /// `caption_to_image[c]` is the image index of caption `c`; `texts`
    /// may be empty (no raw text) or hold one entry per caption.
    pub fn new(
        caption_ids: Vec<String>,
        image_ids: Vec<String>,
        caption_to_image: Vec<usize>,
        texts: Vec<Option<String>>,
    ) -> Result<Self, StoreError> {
        if caption_ids.len() != caption_to_image.len() {
            return Err(StoreError::InvalidParam(format!(
                "{} caption ids but {} image assignments",
                caption_ids.len(),
                caption_to_image.len()
            )));
        }
        let texts = if texts.is_empty() {
            vec![None; caption_ids.len()]
        } else if texts.len() == caption_ids.len() {
            texts
        } else {
            return Err(StoreError::InvalidParam(format!(
                "{} captions but {} texts",
                caption_ids.len(),
                texts.len()
            )));
        };
        let mut caption_lookup = HashMap::with_capacity(caption_ids.len());
        for (i, id) in caption_ids.iter().enumerate() {
            if caption_lookup.insert(id.clone(), i).is_some() {
                return Err(StoreError::DuplicateCaptionId {
                    line: i + 1,
                    id: id.clone(),
                });
            }
        }
        let mut image_to_captions = vec![Vec::new(); image_ids.len()];
        for (c, &img) in caption_to_image.iter().enumerate() {
            let cluster = image_to_captions
                .get_mut(img)
                .ok_or_else(|| StoreError::DanglingImageRef {
                    line: c + 1,
                    caption: caption_ids[c].clone(),
                })?;
            cluster.push(c);
        }
        if let Some(k) = image_to_captions.iter().position(Vec::is_empty) {
            return Err(StoreError::EmptyCluster {
                image: image_ids[k].clone(),
            });
        }
        Ok(Self {
            caption_ids,
            image_ids,
            caption_to_image,
            image_to_captions,
            texts,
            caption_lookup,
        })
    }

    /// Parses the TSV corpus format: `caption_id \t image_id [\t text]`.
    pub fn parse(src: &str) -> Result<Self, StoreError> {
        let mut caption_ids = Vec::new();
        let mut image_ids: Vec<String> = Vec::new();
        let mut image_lookup: HashMap<String, usize> = HashMap::new();
        let mut caption_to_image = Vec::new();
        let mut texts = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, line) in src.lines().enumerate() {
            let line_no = i + 1;
            if line.is_empty() {
                continue;
            }
            let mut fields = line.splitn(3, '\t');
            let caption = fields.next().unwrap_or_default();
            if caption.is_empty() {
                return Err(StoreError::Parse {
                    line: line_no,
                    reason: "empty caption id".into(),
                });
            }
            let image = fields.next().unwrap_or_default();
            if image.is_empty() {
                return Err(StoreError::DanglingImageRef {
                    line: line_no,
                    caption: caption.to_string(),
                });
            }
            if seen.insert(caption.to_string(), line_no).is_some() {
                return Err(StoreError::DuplicateCaptionId {
                    line: line_no,
                    id: caption.to_string(),
                });
            }
            let img = *image_lookup.entry(image.to_string()).or_insert_with(|| {
                image_ids.push(image.to_string());
                image_ids.len() - 1
            });
            caption_ids.push(caption.to_string());
            caption_to_image.push(img);
            texts.push(fields.next().map(str::to_string));
        }
        Self::new(caption_ids, image_ids, caption_to_image, texts)
    }

    /// Serializes to the TSV corpus format, one caption per line.
    pub fn to_tsv(&self) -> Result<String, StoreError> {
        let mut out = String::new();
        for c in 0..self.num_captions() {
            let id = &self.caption_ids[c];
            let img = &self.image_ids[self.caption_to_image[c]];
            for field in [id, img] {
                if field.contains(['\t', '\n', '\r']) {
                    return Err(StoreError::InvalidParam(format!(
                        "identifier {field:?} contains a tab or line break"
                    )));
                }
            }
            out.push_str(id);
            out.push('\t');
            out.push_str(img);
            if let Some(text) = &self.texts[c] {
                if text.contains(['\n', '\r']) {
                    return Err(StoreError::InvalidParam(format!(
                        "text of caption {id:?} contains a line break"
                    )));
                }
                out.push('\t');
                out.push_str(text);
            }
            out.push('\n');
        }
        Ok(out)
    }

    pub fn num_captions(&self) -> usize {
        self.caption_ids.len()
    }

    pub fn num_images(&self) -> usize {
        self.image_ids.len()
    }

    pub fn caption_id(&self, c: usize) -> &str {
        &self.caption_ids[c]
    }

    pub fn image_id(&self, k: usize) -> &str {
        &self.image_ids[k]
    }

    pub fn caption_ids(&self) -> &[String] {
        &self.caption_ids
    }

    pub fn image_ids(&self) -> &[String] {
        &self.image_ids
    }

    pub fn image_of(&self, c: usize) -> usize {
        self.caption_to_image[c]
    }

    pub fn caption_to_image(&self) -> &[usize] {
        &self.caption_to_image
    }

    pub fn captions_of(&self, k: usize) -> &[usize] {
        &self.image_to_captions[k]
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.image_to_captions
    }

    pub fn text(&self, c: usize) -> Option<&str> {
        self.texts[c].as_deref()
    }

    pub fn caption_index(&self, id: &str) -> Option<usize> {
        self.caption_lookup.get(id).copied()
    }

    /// Whether some image owns at least two captions.
    pub fn has_multi_caption_cluster(&self) -> bool {
        self.image_to_captions.iter().any(|c| c.len() >= 2)
    }

    /// Checks that sentence rows line up with captions and image rows with images.
    pub fn check_rows(&self, sentences: &EmbeddingMatrix, images: Option<&EmbeddingMatrix>) -> Result<(), StoreError> {
        if sentences.rows() != self.num_captions() {
            return Err(StoreError::ShapeMismatch(format!(
                "corpus has {} captions but sentence matrix has {} rows",
                self.num_captions(),
                sentences.rows()
            )));
        }
        if let Some(images) = images {
            if images.rows() != self.num_images() {
                return Err(StoreError::ShapeMismatch(format!(
                    "corpus has {} images but image matrix has {} rows",
                    self.num_images(),
                    images.rows()
                )));
            }
        }
        Ok(())
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<CaptionCorpus, StoreError> {
    let path = path.as_ref();
    let src = fs::read_to_string(path).map_err(|e| StoreError::io(path, e))?;
    CaptionCorpus::parse(&src)
}

pub fn save_corpus(corpus: &CaptionCorpus, path: impl AsRef<Path>) -> Result<(), StoreError> {
    let path = path.as_ref();
    fs::write(path, corpus.to_tsv()?).map_err(|e| StoreError::io(path, e))
}
