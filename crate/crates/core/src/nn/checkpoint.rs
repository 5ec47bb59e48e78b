//! Binary checkpoint format.
//!
//! All integers are little-endian `u32`, strings are a `u32` byte length
//! followed by UTF-8 bytes.
//!
//! ```text
//! magic        8 bytes  "DEEPHATE"
//! version      u32      1
//! embed_dim    u32
//! hidden       u32
//! layers       u32
//! task_count   u32
//! per task:    name: string, class_count: u32, class_count × label: string
//! parameters   f64 little-endian, in ModelParams::blocks order:
//!              per layer, forward then backward direction, each as
//!              w_input (4H × in), w_hidden (4H × H), bias (4H);
//!              then per task head, weight (K × H), bias (K)
//! ```
//!
//! Layer 0 reads `embed_dim` inputs, deeper layers read `2H`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::head::Head;
use super::lstm::BiLstmLayer;
use super::model::ModelParams;

pub const MAGIC: &[u8; 8] = b"DEEPHATE";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    Version(u32),
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("checkpoint has {0} trailing bytes")]
    TrailingBytes(usize),
    #[error("invalid UTF-8 in checkpoint string")]
    Utf8,
    #[error("task table has {tasks} tasks but the model has {heads} heads")]
    TaskTable { tasks: usize, heads: usize },
}

/// Task name and ordered label names, one per model head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInfo {
    pub name: String,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub tasks: Vec<TaskInfo>,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn new(tasks: Vec<TaskInfo>, params: ModelParams) -> Result<Self, CheckpointError> {
        if tasks.len() != params.heads.len() {
            return Err(CheckpointError::TaskTable {
                tasks: tasks.len(),
                heads: params.heads.len(),
            });
        }
        Ok(Self { tasks, params })
    }

    pub fn task_index(&self, name: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.name == name)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 8 * self.params.num_parameters());
        out.extend_from_slice(MAGIC);
        let put = |out: &mut Vec<u8>, x: usize| out.extend_from_slice(&(x as u32).to_le_bytes());
        let put_str = |out: &mut Vec<u8>, s: &str| {
            out.extend_from_slice(&(s.len() as u32).to_le_bytes());
            out.extend_from_slice(s.as_bytes());
        };
        put(&mut out, FORMAT_VERSION as usize);
        put(&mut out, self.params.embed_dim);
        put(&mut out, self.params.hidden);
        put(&mut out, self.params.trunk.len());
        put(&mut out, self.tasks.len());
        for task in &self.tasks {
            put_str(&mut out, &task.name);
            put(&mut out, task.labels.len());
            for l in &task.labels {
                put_str(&mut out, l);
            }
        }
        for block in self.params.blocks() {
            for x in block {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        let mut r = Cursor { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(CheckpointError::Version(version));
        }
        let embed_dim = r.u32()? as usize;
        let hidden = r.u32()? as usize;
        let layers = r.u32()? as usize;
        let task_count = r.u32()? as usize;
        let mut tasks = Vec::with_capacity(task_count.min(1024));
        for _ in 0..task_count {
            let name = r.string()?;
            let k = r.u32()? as usize;
            let labels = (0..k).map(|_| r.string()).collect::<Result<_, _>>()?;
            tasks.push(TaskInfo { name, labels });
        }
        let mut params = ModelParams {
            embed_dim,
            hidden,
            trunk: (0..layers)
                .map(|l| BiLstmLayer::zeros(if l == 0 { embed_dim } else { 2 * hidden }, hidden))
                .collect(),
            heads: tasks.iter().map(|t| Head::zeros(hidden, t.labels.len())).collect(),
        };
        let needed: usize = params.num_parameters() * 8;
        if r.remaining() < needed {
            return Err(CheckpointError::Truncated);
        }
        for block in params.blocks_mut() {
            for x in block.iter_mut() {
                let b: [u8; 8] = r.take(8)?.try_into().expect("8 bytes");
                *x = f64::from_le_bytes(b);
            }
        }
        if r.remaining() > 0 {
            return Err(CheckpointError::TrailingBytes(r.remaining()));
        }
        Ok(Self { tasks, params })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), CheckpointError> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self, CheckpointError> {
        let mut buf = Vec::new();
        r.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        if self.remaining() < n {
            return Err(CheckpointError::Truncated);
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self) -> Result<String, CheckpointError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| CheckpointError::Utf8)
    }
}
