//! Integer label maps and the minimum pairwise Sørensen–Dice score.
//!
//! Binary container (little-endian):
//!
//! ```text
//! b"LMAP" | version: u32 = 1 | dims: 3 x u32 | labels: dims product x u32
//! ```
//!
//! Text container: `#` comments, a `dims X Y Z` line, then `X*Y*Z`
//! whitespace-separated labels. Both store labels row-major, last dimension
//! fastest.

use std::collections::BTreeSet;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"LMAP";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    dims: [usize; 3],
    labels: Vec<u32>,
}

impl LabelMap {
    pub fn new(dims: [usize; 3], labels: Vec<u32>) -> Result<Self> {
        let expected = dims.iter().product::<usize>();
        if labels.len() != expected {
            return Err(Error::Shape(format!("{} labels for dims {}x{}x{}", labels.len(), dims[0], dims[1], dims[2])));
        }
        Ok(LabelMap { dims, labels })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_set(&self) -> BTreeSet<u32> {
        self.labels.iter().copied().collect()
    }

    pub fn count(&self, label: u32) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + 4 * self.labels.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for d in self.dims {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for l in &self.labels {
            out.extend_from_slice(&l.to_le_bytes());
        }
        out
    }

    pub fn from_binary(bytes: &[u8], path: &Path) -> Result<Self> {
        let word = |i: usize| -> Result<u32> {
            bytes
                .get(i..i + 4)
                .map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .ok_or_else(|| Error::parse(path, 1, format!("truncated label map at byte {i}")))
        };
        if bytes.get(..4) != Some(MAGIC.as_slice()) {
            return Err(Error::parse(path, 1, "missing LMAP magic"));
        }
        let version = word(4)?;
        if version != VERSION {
            return Err(Error::parse(path, 1, format!("unsupported LMAP version {version}")));
        }
        let dims = [word(8)? as usize, word(12)? as usize, word(16)? as usize];
        let count = dims.iter().product::<usize>();
        if bytes.len() != 20 + 4 * count {
            return Err(Error::parse(
                path,
                1,
                format!("expected {} label bytes, found {}", 4 * count, bytes.len().saturating_sub(20)),
            ));
        }
        let labels = (0..count).map(|i| word(20 + 4 * i)).collect::<Result<Vec<_>>>()?;
        LabelMap::new(dims, labels)
    }

    pub fn to_text(&self) -> String {
        let [x, y, z] = self.dims;
        let mut out = format!("dims {x} {y} {z}\n");
        for row in self.labels.chunks(z.max(1)) {
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self> {
        let mut dims = None;
        let mut labels = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if dims.is_none() {
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 4 || parts[0] != "dims" {
                    return Err(Error::parse(path, line_no, "expected `dims X Y Z`"));
                }
                let mut d = [0usize; 3];
                for (slot, part) in d.iter_mut().zip(&parts[1..]) {
                    *slot = part.parse().map_err(|_| Error::parse(path, line_no, format!("bad dimension `{part}`")))?;
                }
                dims = Some(d);
                continue;
            }
            for tok in line.split_whitespace() {
                let label =
                    tok.parse::<u32>().map_err(|_| Error::parse(path, line_no, format!("bad label `{tok}`")))?;
                labels.push(label);
            }
        }
        let dims = dims.ok_or_else(|| Error::parse(path, 1, "missing `dims` header"))?;
        let expected = dims.iter().product::<usize>();
        if labels.len() != expected {
            return Err(Error::parse(
                path,
                text.lines().count().max(1),
                format!("expected {expected} labels, found {}", labels.len()),
            ));
        }
        LabelMap::new(dims, labels)
    }

    /// Reads either container, detected by the magic bytes.
    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(MAGIC) {
            LabelMap::from_binary(&bytes, path)
        } else {
            let text =
                String::from_utf8(bytes).map_err(|_| Error::parse(path, 1, "neither LMAP binary nor UTF-8 text"))?;
            LabelMap::from_text(&text, path)
        }
    }
}

/// `2 |A ∩ B| / (|A| + |B|)` for one label; `None` when both sets are empty.
pub fn dice_score(a: &LabelMap, b: &LabelMap, label: u32) -> Result<Option<f64>> {
    if a.dims != b.dims {
        return Err(Error::Shape(format!("label map dims {:?} vs {:?}", a.dims, b.dims)));
    }
    let (mut inter, mut size_a, mut size_b) = (0usize, 0usize, 0usize);
    for (&la, &lb) in a.labels.iter().zip(&b.labels) {
        let (in_a, in_b) = (la == label, lb == label);
        size_a += in_a as usize;
        size_b += in_b as usize;
        inter += (in_a && in_b) as usize;
    }
    if size_a + size_b == 0 {
        return Ok(None);
    }
    Ok(Some(2.0 * inter as f64 / (size_a + size_b) as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiceSummary {
    pub label: u32,
    pub min: f64,
    /// Pair `(i, j)`, `i < j`, attaining the minimum.
    pub argmin: (usize, usize),
    pub pairs: usize,
    /// Pairs where the label is absent from both maps (scored 1).
    pub empty_pairs: usize,
    /// The label occurs in none of the maps.
    pub label_absent: bool,
}

/// Minimum Dice score over all unordered pairs of maps for one label.
pub fn min_pairwise_dice(maps: &[LabelMap], label: u32) -> Result<DiceSummary> {
    if maps.len() < 2 {
        return Err(Error::Empty("at least two label maps are required"));
    }
    let mut summary = DiceSummary { label, min: 1.0, argmin: (0, 1), pairs: 0, empty_pairs: 0, label_absent: true };
    for i in 0..maps.len() {
        for j in i + 1..maps.len() {
            summary.pairs += 1;
            let score = match dice_score(&maps[i], &maps[j], label)? {
                Some(score) => {
                    summary.label_absent = false;
                    score
                }
                None => {
                    summary.empty_pairs += 1;
                    1.0
                }
            };
            if score < summary.min {
                summary.min = score;
                summary.argmin = (i, j);
            }
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiLabelDice {
    pub per_label: Vec<DiceSummary>,
    pub global_min: f64,
}

/// Per-label minima over every label present in any map, plus the global
/// minimum across labels.
pub fn min_pairwise_dice_all(maps: &[LabelMap]) -> Result<MultiLabelDice> {
    let labels: BTreeSet<u32> = maps.iter().flat_map(|m| m.label_set()).collect();
    let per_label = labels.into_iter().map(|l| min_pairwise_dice(maps, l)).collect::<Result<Vec<_>>>()?;
    let global_min = per_label.iter().map(|d| d.min).fold(1.0, f64::min);
    Ok(MultiLabelDice { per_label, global_min })
}
