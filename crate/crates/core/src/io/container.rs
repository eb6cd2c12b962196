//! Tensor container (`DCE1`) carrying feature maps and text banks.
//!
//! Layout, all integers little-endian:
//!
//! | field    | size            |                                   |
//! |----------|-----------------|-----------------------------------|
//! | magic    | 4               | `b"DCE1"`                         |
//! | version  | 1               | `1`                               |
//! | rank     | 1               | 3 = feature map, 2 = text bank    |
//! | dims     | 4 * rank        | u32 each                          |
//! | payload  | 4 * prod(dims)  | f32, row-major                    |
//! | meta_len | 4               | u32                               |
//! | metadata | meta_len        | UTF-8 JSON object, may be empty   |

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_file, write_file, Reader};
use crate::error::{Error, Result};
use crate::model::{FeatureMap, TextBank};

pub const CONTAINER_MAGIC: [u8; 4] = *b"DCE1";
pub const CONTAINER_VERSION: u8 = 1;

/// Raw decoded container. Encoding a decoded container reproduces the input bytes.
#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub dims: Vec<u32>,
    pub payload: Vec<f32>,
    pub metadata: Vec<u8>,
}

/// Metadata keys understood by the reader. Serialized in field order; absent
/// fields are omitted.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContainerMeta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<String>,
}

impl Container {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(
            10 + 4 * self.dims.len() + 4 * self.payload.len() + self.metadata.len(),
        );
        out.extend_from_slice(&CONTAINER_MAGIC);
        out.push(CONTAINER_VERSION);
        out.push(self.dims.len() as u8);
        for d in &self.dims {
            out.extend_from_slice(&d.to_le_bytes());
        }
        for v in &self.payload {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.metadata.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.metadata);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let magic = r.array::<4>()?;
        if magic != CONTAINER_MAGIC {
            return Err(Error::BadMagic {
                expected: CONTAINER_MAGIC,
                found: magic,
            });
        }
        let version = r.u8()?;
        if version != CONTAINER_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let rank = r.u8()?;
        let dims = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let count = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
            .ok_or(Error::TruncatedPayload {
                needed: usize::MAX,
                available: r.remaining(),
            })?;
        let payload = r.f32_vec(count)?;
        let meta_len = r.u32()? as usize;
        let metadata = r.bytes(meta_len)?.to_vec();
        r.finish()?;
        Ok(Self {
            dims,
            payload,
            metadata,
        })
    }

    pub fn meta(&self) -> Result<ContainerMeta> {
        if self.metadata.is_empty() {
            return Ok(ContainerMeta::default());
        }
        Ok(serde_json::from_slice(&self.metadata)?)
    }
}

fn encode_meta(meta: &ContainerMeta) -> Vec<u8> {
    if *meta == ContainerMeta::default() {
        Vec::new()
    } else {
        serde_json::to_vec(meta).expect("metadata serializes")
    }
}

/// Typed content of a container.
#[derive(Debug, Clone, PartialEq)]
pub enum Loaded {
    Features(FeatureMap),
    Text(TextBank),
}

impl From<&FeatureMap> for Container {
    fn from(fm: &FeatureMap) -> Self {
        let meta = ContainerMeta {
            model_id: fm.model_id().map(str::to_owned),
            source_id: Some(fm.source_id().to_owned()).filter(|s| !s.is_empty()),
            ..Default::default()
        };
        Container {
            dims: vec![fm.height_f() as u32, fm.width_f() as u32, fm.channels() as u32],
            payload: fm.data().to_vec(),
            metadata: encode_meta(&meta),
        }
    }
}

impl From<&TextBank> for Container {
    fn from(tb: &TextBank) -> Self {
        let meta = ContainerMeta {
            tokens: Some(tb.tokens().to_vec()),
            template: Some(tb.template().to_owned()),
            model_id: tb.model_id().map(str::to_owned),
            source_id: None,
        };
        Container {
            dims: vec![tb.len() as u32, tb.channels() as u32],
            payload: tb.embeddings().to_vec(),
            metadata: encode_meta(&meta),
        }
    }
}

impl TryFrom<Container> for Loaded {
    type Error = Error;

    fn try_from(c: Container) -> Result<Self> {
        let meta = c.meta()?;
        match c.dims[..] {
            [h, w, ch] => {
                let fm = FeatureMap::new(
                    h as usize,
                    w as usize,
                    ch as usize,
                    c.payload,
                    meta.source_id.unwrap_or_default(),
                )?;
                Ok(Loaded::Features(fm.with_model_id(meta.model_id)))
            }
            [k, ch] => {
                let tokens = meta.tokens.ok_or_else(|| {
                    Error::MetadataMismatch("rank-2 container has no token list".into())
                })?;
                if tokens.len() != k as usize {
                    return Err(Error::MetadataMismatch(format!(
                        "{} token strings for {k} embedding rows",
                        tokens.len()
                    )));
                }
                let template = meta.template.ok_or_else(|| {
                    Error::MetadataMismatch("rank-2 container has no prompt template".into())
                })?;
                let tb = TextBank::new(tokens, template, c.payload, ch as usize)?;
                Ok(Loaded::Text(tb.with_model_id(meta.model_id)))
            }
            _ => Err(Error::UnsupportedRank(c.dims.len() as u8)),
        }
    }
}

pub fn decode_container(bytes: &[u8]) -> Result<Loaded> {
    Container::decode(bytes)?.try_into()
}

/// Reads a container as a feature map (rank 3) or text bank (rank 2).
pub fn read_container(path: impl AsRef<Path>) -> Result<Loaded> {
    decode_container(&read_file(path.as_ref())?)
}

pub fn read_feature_map(path: impl AsRef<Path>) -> Result<FeatureMap> {
    match read_container(path.as_ref())? {
        Loaded::Features(fm) => Ok(fm),
        Loaded::Text(_) => Err(Error::MetadataMismatch(format!(
            "{} holds a text bank, expected a feature map",
            path.as_ref().display()
        ))),
    }
}

pub fn read_text_bank(path: impl AsRef<Path>) -> Result<TextBank> {
    match read_container(path.as_ref())? {
        Loaded::Text(tb) => Ok(tb),
        Loaded::Features(_) => Err(Error::MetadataMismatch(format!(
            "{} holds a feature map, expected a text bank",
            path.as_ref().display()
        ))),
    }
}

pub fn write_feature_map(path: impl AsRef<Path>, fm: &FeatureMap) -> Result<()> {
    write_file(path.as_ref(), &Container::from(fm).encode())
}

pub fn write_text_bank(path: impl AsRef<Path>, tb: &TextBank) -> Result<()> {
    write_file(path.as_ref(), &Container::from(tb).encode())
}
