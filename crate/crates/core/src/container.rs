//! Versioned binary container shared by network weights, baseline models and
//! pipeline artifacts.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//! 0       8     magic "BSNGBIN\0"
//! 8       4     format version (u32)
//! 12      1     payload tag (see PayloadTag)
//! 13      8     body length in bytes (u64)
//! 21      n     body
//! 21+n    32    SHA-256 of the body
//! ```
//!
//! A network body is `layer count (u64)` followed by, per layer,
//! `fan_in (u64) fan_out (u64) activation (u8)`, `fan_in·fan_out` weights in
//! row-major order and `fan_out` biases, each an f64.

use sha2::{Digest, Sha256};

use crate::error::{ArtifactError, Result};
use crate::neural::{Activation, Dense, Network};
use crate::numerics::Matrix;

pub const MAGIC: [u8; 8] = *b"BSNGBIN\0";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 21;
const DIGEST_LEN: usize = 32;

/// First byte after the version; says what the body holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum PayloadTag {
    Network = 1,
    Pipeline = 2,
    Poisson = 10,
    NaiveBayes = 11,
    GaussianProcess = 12,
    Knn = 13,
    LinearSvm = 14,
    RbfSvm = 15,
    DecisionTree = 16,
    RandomForest = 17,
    ExtraTrees = 18,
    AdaBoost = 19,
    Mlp = 20,
}

impl PayloadTag {
    pub fn from_byte(b: u8) -> Option<Self> {
        use PayloadTag::*;
        [
            Network, Pipeline, Poisson, NaiveBayes, GaussianProcess, Knn, LinearSvm, RbfSvm,
            DecisionTree, RandomForest, ExtraTrees, AdaBoost, Mlp,
        ]
        .into_iter()
        .find(|t| *t as u8 == b)
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn seal(tag: PayloadTag, body: &[u8]) -> Vec<u8> {
    seal_with_version(tag, body, FORMAT_VERSION)
}

pub(crate) fn seal_with_version(tag: PayloadTag, body: &[u8], version: u32) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + body.len() + DIGEST_LEN);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&version.to_le_bytes());
    out.push(tag as u8);
    out.extend_from_slice(&(body.len() as u64).to_le_bytes());
    out.extend_from_slice(body);
    out.extend_from_slice(&Sha256::digest(body));
    out
}

/// Checks magic, version, length and digest; returns the tag and body.
pub fn open(bytes: &[u8]) -> Result<(PayloadTag, &[u8]), ArtifactError> {
    let magic_seen = bytes.len().min(MAGIC.len());
    if bytes[..magic_seen] != MAGIC[..magic_seen] {
        return Err(ArtifactError::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(ArtifactError::Truncated);
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(ArtifactError::Version { found: version, supported: FORMAT_VERSION });
    }
    let tag = PayloadTag::from_byte(bytes[12])
        .ok_or_else(|| ArtifactError::Corrupt(format!("unknown payload tag {}", bytes[12])))?;
    let len = u64::from_le_bytes(bytes[13..21].try_into().unwrap());
    let len = usize::try_from(len).map_err(|_| ArtifactError::Truncated)?;
    let end = HEADER_LEN.checked_add(len).ok_or(ArtifactError::Truncated)?;
    if bytes.len() < end + DIGEST_LEN {
        return Err(ArtifactError::Truncated);
    }
    if bytes.len() > end + DIGEST_LEN {
        return Err(ArtifactError::Corrupt(format!("{} trailing bytes", bytes.len() - end - DIGEST_LEN)));
    }
    let body = &bytes[HEADER_LEN..end];
    let stored = &bytes[end..];
    let computed = Sha256::digest(body);
    if stored != computed.as_slice() {
        let hex = |b: &[u8]| b.iter().map(|x| format!("{x:02x}")).collect::<String>();
        return Err(ArtifactError::Fingerprint { stored: hex(stored), computed: hex(&computed) });
    }
    Ok((tag, body))
}

/// Opens a container and insists on a particular payload.
pub fn open_expecting(bytes: &[u8], want: PayloadTag) -> Result<&[u8], ArtifactError> {
    let (tag, body) = open(bytes)?;
    if tag != want {
        return Err(ArtifactError::Corrupt(format!("expected a {want:?} payload, found {tag:?}")));
    }
    Ok(body)
}

#[derive(Debug, Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, v: &[f64]) {
        for x in v {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
    }

    /// Length-prefixed byte string.
    pub fn bytes(&mut self, v: &[u8]) {
        self.u64(v.len() as u64);
        self.buf.extend_from_slice(v);
    }

    pub fn network(&mut self, net: &Network) {
        self.u64(net.layers.len() as u64);
        for layer in &net.layers {
            self.u64(layer.fan_in() as u64);
            self.u64(layer.fan_out() as u64);
            self.u8(layer.activation.tag());
            self.f64s(layer.weights.as_slice());
            self.f64s(&layer.bias);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], ArtifactError> {
        if self.buf.len() < n {
            return Err(ArtifactError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub fn u8(&mut self) -> Result<u8, ArtifactError> {
        Ok(self.take(1)?[0])
    }

    pub fn u64(&mut self) -> Result<u64, ArtifactError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn count(&mut self) -> Result<usize, ArtifactError> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| ArtifactError::Corrupt(format!("count {v} too large")))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>, ArtifactError> {
        let bytes = n.checked_mul(8).ok_or(ArtifactError::Truncated)?;
        let raw = self.take(bytes)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], ArtifactError> {
        let n = self.count()?;
        self.take(n)
    }

    pub fn network(&mut self, input_width: Option<usize>) -> Result<Network, ArtifactError> {
        let depth = self.count()?;
        let mut layers = Vec::with_capacity(depth.min(64));
        let mut first_in = None;
        for l in 0..depth {
            let fan_in = self.count()?;
            let fan_out = self.count()?;
            let act = self.u8()?;
            let activation = Activation::from_tag(act)
                .ok_or_else(|| ArtifactError::Corrupt(format!("layer {l}: unknown activation tag {act}")))?;
            let weights = self.f64s(fan_in.checked_mul(fan_out).ok_or(ArtifactError::Truncated)?)?;
            let bias = self.f64s(fan_out)?;
            let weights = Matrix::new(fan_in, fan_out, weights)
                .map_err(|e| ArtifactError::Corrupt(format!("layer {l}: {e}")))?;
            first_in.get_or_insert(fan_in);
            layers.push(Dense { weights, bias, activation });
        }
        let width = input_width.or(first_in).ok_or_else(|| ArtifactError::Corrupt("network without layers".into()))?;
        Network::from_layers(width, layers).map_err(|e| ArtifactError::Corrupt(e.to_string()))
    }

    pub fn finish(self) -> Result<(), ArtifactError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(ArtifactError::Corrupt(format!("{} unread bytes in body", self.buf.len())))
        }
    }
}

/// A single network in its own container.
pub fn network_to_bytes(net: &Network) -> Vec<u8> {
    let mut w = Writer::new();
    w.u64(net.input_width as u64);
    w.network(net);
    seal(PayloadTag::Network, &w.finish())
}

pub fn network_from_bytes(bytes: &[u8]) -> Result<Network> {
    let mut r = Reader::new(open_expecting(bytes, PayloadTag::Network)?);
    let input = r.count()?;
    let net = r.network(Some(input))?;
    r.finish()?;
    Ok(net)
}

/// Pretty JSON rendering of a network, for diffing weight files.
pub fn network_to_text(net: &Network) -> String {
    serde_json::to_string_pretty(net).expect("network serializes")
}
