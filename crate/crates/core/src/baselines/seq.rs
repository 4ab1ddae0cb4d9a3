use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};

use super::linear::{fit_linear, LinearMap};
use super::pca::{fit_pca, PcaModel};
use super::BaselineError;
use crate::binio::{FrameError, FrameReader, FrameWriter};
use crate::embedstore::{CaptionCorpus, EmbeddingMatrix};

const MAGIC: &[u8; 4] = b"GSEQ";
const VERSION: u8 = 1;

/// A fitted SEQ pipeline: regression into image space followed by PCA of
/// `[s ; s W + b]` back to the sentence dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SeqModel {
    pub linear: LinearMap,
    pub pca: PcaModel,
}

impl SeqModel {
    pub fn embed(&self, sentences: &EmbeddingMatrix) -> Result<EmbeddingMatrix, BaselineError> {
        seq_embed(sentences, &self.linear, &self.pca)
    }
}

fn concat_imagined(sentences: ArrayView2<'_, f64>, lin: &LinearMap) -> Array2<f64> {
    let imagined = lin.predict(sentences);
    concatenate(Axis(1), &[sentences, imagined.view()]).expect("row counts agree")
}

/// Projects each `[s ; s W + b]` onto the PCA basis.
pub fn seq_embed(
    sentences: &EmbeddingMatrix,
    lin: &LinearMap,
    pca: &PcaModel,
) -> Result<EmbeddingMatrix, BaselineError> {
    let d_t = sentences.dim();
    if lin.d_in() != d_t || lin.b.len() != lin.d_out() {
        return Err(BaselineError::ShapeMismatch(format!(
            "linear map is {}x{}, sentences have dimension {d_t}",
            lin.d_in(),
            lin.d_out()
        )));
    }
    if pca.dim() != d_t + lin.d_out() || pca.num_components() != d_t {
        return Err(BaselineError::ShapeMismatch(format!(
            "PCA has {} components over {} dimensions, expected {d_t} over {}",
            pca.num_components(),
            pca.dim(),
            d_t + lin.d_out()
        )));
    }
    let joint = concat_imagined(sentences.view(), lin);
    let projected = pca.transform(joint.view())?;
    EmbeddingMatrix::new(projected, sentences.precision()).map_err(|e| BaselineError::InvalidParam(e.to_string()))
}

/// Fits the regression on caption/image pairs and the PCA on the caption
/// concatenations.
pub fn fit_seq(
    sentences: &EmbeddingMatrix,
    images: &EmbeddingMatrix,
    corpus: &CaptionCorpus,
    ridge_lambda: f64,
) -> Result<SeqModel, BaselineError> {
    let linear = fit_linear(sentences.view(), images.view(), corpus, ridge_lambda)?;
    let joint = concat_imagined(sentences.view(), &linear);
    let pca = fit_pca(joint.view(), sentences.dim())?;
    Ok(SeqModel { linear, pca })
}

pub fn write_seq_model(model: &SeqModel) -> Vec<u8> {
    let d_t = model.linear.d_in();
    let d_i = model.linear.d_out();
    let mut w = FrameWriter::new(MAGIC);
    w.u8(VERSION);
    w.u32(d_t as u32);
    w.u32(d_i as u32);
    w.u32(model.pca.num_components() as u32);
    w.begin_payload();
    w.f64s(model.linear.w.iter().copied());
    w.f64s(model.linear.b.iter().copied());
    w.f64s(model.pca.mean.iter().copied());
    w.f64s(model.pca.components.iter().copied());
    w.f64s(model.pca.explained_variance.iter().copied());
    w.finish()
}

pub fn read_seq_model(bytes: &[u8]) -> Result<SeqModel, FrameError> {
    let mut r = FrameReader::new(bytes, MAGIC)?;
    let version_at = r.offset();
    let version = r.u8()?;
    if version != VERSION {
        return Err(FrameError::Invalid {
            offset: version_at,
            reason: format!("unsupported version {version}"),
        });
    }
    let d_t = r.u32()? as usize;
    let d_i = r.u32()? as usize;
    let m = r.u32()? as usize;
    let width = d_t + d_i;
    let payload_start = r.offset();
    let w = Array2::from_shape_vec((d_t, d_i), r.f64s(d_t * d_i)?).expect("length checked");
    let b = Array1::from(r.f64s(d_i)?);
    let mean = Array1::from(r.f64s(width)?);
    let components = Array2::from_shape_vec((m, width), r.f64s(m * width)?).expect("length checked");
    let explained_variance = r.f64s(m)?;
    r.verify_crc(payload_start)?;
    if r.remaining() != 0 {
        return Err(FrameError::Invalid {
            offset: r.offset(),
            reason: "trailing bytes".into(),
        });
    }
    Ok(SeqModel {
        linear: LinearMap { w, b },
        pca: PcaModel {
            mean,
            components,
            explained_variance,
        },
    })
}
