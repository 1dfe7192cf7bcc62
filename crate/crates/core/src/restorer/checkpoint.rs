//! `CKP1` checkpoint files.
//!
//! Layout (little-endian): magic `CKP1`, u32 version, u32 channels, u32 depth,
//! u64 parameter count, that many f32 values, u32 metadata length, metadata
//! as UTF-8 `key=value` lines.

use std::collections::BTreeMap;
use std::path::Path;

use super::{ConvArch, ConvRestorer, LossNorm};
use crate::error::{Error, Result};
use crate::io::{write_file, Reader};
use crate::mask::MaskFamily;
use crate::schedule::{ScheduleKind, ScheduleSpec};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"CKP1";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Everything needed to rebuild the restorer and the family it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainMetadata {
    pub grad_steps: usize,
    pub final_loss: f64,
    pub schedule: ScheduleSpec,
    pub width: usize,
    pub family_center_fraction: f64,
    pub family_seed: u64,
    pub train_seed: u64,
    pub loss_norm: LossNorm,
    /// Keys this version does not interpret, kept for round trips.
    pub extra: BTreeMap<String, String>,
}

impl TrainMetadata {
    pub fn family(&self) -> Result<MaskFamily> {
        MaskFamily::build(self.schedule, self.width, self.family_center_fraction, self.family_seed)
    }

    fn to_text(&self) -> String {
        let mut map = self.extra.clone();
        map.insert("grad_steps".into(), self.grad_steps.to_string());
        // Debug formatting round-trips f64 exactly
        map.insert("final_loss".into(), format!("{:?}", self.final_loss));
        map.insert("schedule".into(), self.schedule.kind().to_string());
        map.insert("steps".into(), self.schedule.steps().to_string());
        map.insert("sr_min".into(), format!("{:?}", self.schedule.sr_min()));
        map.insert("width".into(), self.width.to_string());
        map.insert("family_center_fraction".into(), format!("{:?}", self.family_center_fraction));
        map.insert("family_seed".into(), self.family_seed.to_string());
        map.insert("train_seed".into(), self.train_seed.to_string());
        map.insert("loss_norm".into(), self.loss_norm.to_string());
        map.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    fn from_text(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::format("CKP1", format!("metadata line without '=': {line}")))?;
            map.insert(k.to_string(), v.to_string());
        }
        fn take<T: std::str::FromStr>(map: &mut BTreeMap<String, String>, key: &str) -> Result<T> {
            let raw = map
                .remove(key)
                .ok_or_else(|| Error::format("CKP1", format!("metadata missing '{key}'")))?;
            raw.parse()
                .map_err(|_| Error::format("CKP1", format!("metadata '{key}' has invalid value '{raw}'")))
        }
        let grad_steps = take(&mut map, "grad_steps")?;
        let final_loss = take(&mut map, "final_loss")?;
        let kind: String = take(&mut map, "schedule")?;
        let kind: ScheduleKind = kind.parse()?;
        let steps = take(&mut map, "steps")?;
        let sr_min = take(&mut map, "sr_min")?;
        let norm: String = take(&mut map, "loss_norm")?;
        Ok(Self {
            grad_steps,
            final_loss,
            schedule: ScheduleSpec::new(kind, steps, sr_min)?,
            width: take(&mut map, "width")?,
            family_center_fraction: take(&mut map, "family_center_fraction")?,
            family_seed: take(&mut map, "family_seed")?,
            train_seed: take(&mut map, "train_seed")?,
            loss_norm: norm.parse()?,
            extra: map,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub version: u32,
    pub arch: ConvArch,
    pub params: Vec<f32>,
    pub metadata: TrainMetadata,
}

impl ModelCheckpoint {
    pub fn new(restorer: &ConvRestorer, metadata: TrainMetadata) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            arch: restorer.arch(),
            params: restorer.params().to_vec(),
            metadata,
        }
    }

    pub fn restorer(&self) -> Result<ConvRestorer> {
        ConvRestorer::from_params(
            self.arch,
            self.params.clone(),
            self.metadata.schedule.steps(),
            self.metadata.width,
        )
    }

    pub fn encode(&self) -> Vec<u8> {
        let meta = self.metadata.to_text();
        let mut out = Vec::with_capacity(28 + 4 * self.params.len() + meta.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&self.version.to_le_bytes());
        out.extend_from_slice(&(self.arch.channels as u32).to_le_bytes());
        out.extend_from_slice(&(self.arch.depth as u32).to_le_bytes());
        out.extend_from_slice(&(self.params.len() as u64).to_le_bytes());
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(meta.as_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "CKP1");
        r.magic(CHECKPOINT_MAGIC)?;
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::format("CKP1", format!("unsupported version {version}")));
        }
        let arch = ConvArch::new(r.u32()? as usize, r.u32()? as usize)?;
        let count = r.u64()? as usize;
        if count != arch.param_count() {
            return Err(Error::format(
                "CKP1",
                format!("payload has {count} parameters, architecture needs {}", arch.param_count()),
            ));
        }
        let params = (0..count).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
        let meta_len = r.u32()? as usize;
        let meta = std::str::from_utf8(r.take(meta_len)?)
            .map_err(|_| Error::format("CKP1", "metadata is not UTF-8"))?;
        r.finish()?;
        Ok(Self {
            version,
            arch,
            params,
            metadata: TrainMetadata::from_text(meta)?,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_file(path.as_ref(), &self.encode())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes)
    }
}
