//! Offline fingerprint database: noisy position estimates at every reference
//! point paired with that point's optimal RIS configuration.
//!
//! Each reference point `k` gets one channel realization, drawn from the stream
//! `seed → "fingerprint/channel" → rp#k`; its continuous optimum is the label of
//! all `J` records of that point. Position estimates come from the independent
//! stream `seed → "fingerprint/position" → rp#k`.
//!
//! # File format
//!
//! ```text
//! {"format":"risfocus-fingerprints","version":1,"scene_hash":"…","k":240,"j":5,"n":32,"m":32,"sigma_pos":0.05,"seed":7,"blockage":true}
//! 1,1,<x>,<y>,<phi_1>,…,<phi_N>
//! 1,2,…
//! ```
//!
//! Records are sorted by `k` then `j` (both 1-based). Reals are written with 17
//! significant digits so that loading restores every bit.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{draw_channels, effective_gain, ChannelSet, PhaseConfig};
use crate::error::{Error, Result};
use crate::focus::{aligned_magnitude, optimal_phases_continuous};
use crate::numerics::{format_f64, wrap_phase, SimRng};
use crate::scene::{Position, Scene};

pub const FORMAT_NAME: &str = "risfocus-fingerprints";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct FingerprintRecord {
    /// 1-based reference point index.
    pub rp_index: usize,
    /// 1-based estimate index.
    pub estimate_index: usize,
    pub x: f64,
    pub y: f64,
    pub label: PhaseConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatabaseMeta {
    pub format: String,
    pub version: u32,
    pub scene_hash: String,
    pub k: usize,
    pub j: usize,
    pub n: usize,
    pub m: usize,
    pub sigma_pos: f64,
    pub seed: u64,
    pub blockage: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Database {
    pub meta: DatabaseMeta,
    pub records: Vec<FingerprintRecord>,
}

impl Database {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Checks record count, `(k, j)` completeness and label lengths.
    pub fn validate(&self) -> Result<()> {
        let m = &self.meta;
        if self.records.len() != m.k * m.j {
            return Err(Error::config(format!(
                "database holds {} records, metadata promises K·J = {}",
                self.records.len(),
                m.k * m.j
            )));
        }
        let mut seen = HashSet::with_capacity(self.records.len());
        for r in &self.records {
            if !(1..=m.k).contains(&r.rp_index) || !(1..=m.j).contains(&r.estimate_index) {
                return Err(Error::config(format!(
                    "record ({}, {}) out of range",
                    r.rp_index, r.estimate_index
                )));
            }
            if !seen.insert((r.rp_index, r.estimate_index)) {
                return Err(Error::config(format!(
                    "duplicate record ({}, {})",
                    r.rp_index, r.estimate_index
                )));
            }
            if r.label.len() != m.n {
                return Err(Error::dim(m.n, r.label.len(), "record label length"));
            }
        }
        Ok(())
    }
}

/// True position plus isotropic Gaussian noise per axis, clamped to the floor.
pub fn estimate_position(
    scene: &Scene,
    true_pos: &Position,
    sigma_pos: f64,
    rng: &mut SimRng,
) -> Result<Position> {
    if !(sigma_pos >= 0.0) || !sigma_pos.is_finite() {
        return Err(Error::domain(format!(
            "position noise must be finite and >= 0, got {sigma_pos}"
        )));
    }
    let dx = sigma_pos * rng.standard_normal();
    let dy = sigma_pos * rng.standard_normal();
    let mut p = scene.clamp_to_floor(true_pos.x + dx, true_pos.y + dy);
    p.z = true_pos.z;
    Ok(p)
}

/// The channel realization of reference point `k` (1-based).
pub fn reference_channel(scene: &Scene, seed: u64, k: usize, blockage: bool) -> Result<ChannelSet> {
    let rp = scene
        .reference_points()
        .get(k.wrapping_sub(1))
        .ok_or(Error::IndexOutOfRange {
            index: k,
            len: scene.reference_points().len(),
        })?;
    let mut rng = SimRng::new(seed)
        .child("fingerprint/channel")
        .indexed("rp", k as u64);
    draw_channels(scene, rp, &mut rng, blockage)
}

pub fn build_database(
    scene: &Scene,
    j: usize,
    sigma_pos: f64,
    seed: u64,
    blockage: bool,
) -> Result<Database> {
    if j == 0 {
        return Err(Error::domain(
            "need at least one estimate per reference point",
        ));
    }
    if !(sigma_pos >= 0.0) {
        return Err(Error::domain("position noise must be >= 0"));
    }
    let positions_root = SimRng::new(seed).child("fingerprint/position");
    let per_rp: Vec<Vec<FingerprintRecord>> = scene
        .reference_points()
        .par_iter()
        .enumerate()
        .map(|(i, rp)| {
            let k = i + 1;
            let label = optimal_phases_continuous(&reference_channel(scene, seed, k, blockage)?);
            let mut rng = positions_root.indexed("rp", k as u64);
            (1..=j)
                .map(|estimate_index| {
                    let p = estimate_position(scene, rp, sigma_pos, &mut rng)?;
                    Ok(FingerprintRecord {
                        rp_index: k,
                        estimate_index,
                        x: p.x,
                        y: p.y,
                        label: label.clone(),
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    Ok(Database {
        meta: DatabaseMeta {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            scene_hash: scene.hash(),
            k: scene.reference_points().len(),
            j,
            n: scene.ris_elements(),
            m: scene.ap_antennas(),
            sigma_pos,
            seed,
            blockage,
        },
        records: per_rp.into_iter().flatten().collect(),
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerifyReport {
    pub checked: usize,
    pub mismatches: usize,
    /// Largest relative deviation from the alignment identity.
    pub max_alignment_error: f64,
    /// Largest wrapped difference between a stored and a recomputed phase.
    pub max_phase_error: f64,
}

/// Re-derive every record's channel from `(seed, k)` and check its label against
/// the continuous optimum.
pub fn verify_database(db: &Database, scene: &Scene, tolerance: f64) -> Result<VerifyReport> {
    if db.meta.scene_hash != scene.hash() {
        return Err(Error::config(
            "database was built for a different scene (scene hash mismatch)",
        ));
    }
    db.validate()?;
    let sqrt_m = (scene.ap_antennas() as f64).sqrt();
    let reports: Vec<VerifyReport> = db
        .records
        .par_iter()
        .map(|r| {
            let ch = reference_channel(scene, db.meta.seed, r.rp_index, db.meta.blockage)?;
            let target = aligned_magnitude(&ch);
            let got = effective_gain(&ch, &r.label)?.norm() * sqrt_m;
            let alignment = if target > 0.0 {
                (got - target).abs() / target
            } else {
                got
            };
            let oracle = optimal_phases_continuous(&ch);
            let phase = oracle
                .phases()
                .iter()
                .zip(r.label.phases())
                .map(|(a, b)| wrap_phase(a - b).abs())
                .fold(0.0, f64::max);
            Ok(VerifyReport {
                checked: 1,
                mismatches: usize::from(alignment > tolerance || phase > tolerance),
                max_alignment_error: alignment,
                max_phase_error: phase,
            })
        })
        .collect::<Result<_>>()?;
    Ok(reports
        .into_iter()
        .fold(VerifyReport::default(), |acc, r| VerifyReport {
            checked: acc.checked + r.checked,
            mismatches: acc.mismatches + r.mismatches,
            max_alignment_error: acc.max_alignment_error.max(r.max_alignment_error),
            max_phase_error: acc.max_phase_error.max(r.max_phase_error),
        }))
}

pub fn write_database(db: &Database, out: &mut impl Write) -> std::io::Result<()> {
    let header = serde_json::to_string(&db.meta).expect("metadata serializes");
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for r in &db.records {
        line.clear();
        line.push_str(&format!(
            "{},{},{},{}",
            r.rp_index,
            r.estimate_index,
            format_f64(r.x),
            format_f64(r.y)
        ));
        for phi in r.label.phases() {
            line.push(',');
            line.push_str(&format_f64(*phi));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn save_database(db: &Database, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_database(db, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_database(path: impl AsRef<Path>) -> Result<Database> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_database(BufReader::new(file), path)
}

/// Parse a database; `origin` only labels error messages.
pub fn read_database(input: impl BufRead, origin: &Path) -> Result<Database> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(l) => l.map_err(|e| Error::io(origin, e))?,
        None => return Err(err(1, "missing metadata header".into())),
    };
    let meta: DatabaseMeta =
        serde_json::from_str(&header).map_err(|e| err(1, format!("bad metadata header: {e}")))?;
    if meta.format != FORMAT_NAME || meta.version != FORMAT_VERSION {
        return Err(err(
            1,
            format!("unsupported format {} v{}", meta.format, meta.version),
        ));
    }

    let expected = meta.k * meta.j;
    let mut records = Vec::with_capacity(expected);
    let mut seen = HashSet::with_capacity(expected);
    let mut last_line = 1;
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        last_line = line_no;
        let line = line.map_err(|e| Error::io(origin, e))?;
        if line.trim().is_empty() {
            return Err(err(line_no, "blank line inside record section".into()));
        }
        if records.len() == expected {
            return Err(err(
                line_no,
                format!("more records than the K·J = {expected} declared in the header"),
            ));
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 + meta.n {
            return Err(err(
                line_no,
                format!("expected {} fields, found {}", 4 + meta.n, fields.len()),
            ));
        }
        let index = |s: &str, name: &str, max: usize| -> Result<usize> {
            let v: usize = s
                .trim()
                .parse()
                .map_err(|_| err(line_no, format!("{name} is not an integer: {s:?}")))?;
            if !(1..=max).contains(&v) {
                return Err(err(line_no, format!("{name} = {v} outside 1..={max}")));
            }
            Ok(v)
        };
        let real = |s: &str| -> Result<f64> {
            let v: f64 = s
                .trim()
                .parse()
                .map_err(|_| err(line_no, format!("not a number: {s:?}")))?;
            if !v.is_finite() {
                return Err(err(line_no, format!("non-finite value {s:?}")));
            }
            Ok(v)
        };
        let k = index(fields[0], "k", meta.k)?;
        let j = index(fields[1], "j", meta.j)?;
        if !seen.insert((k, j)) {
            return Err(err(line_no, format!("duplicate record ({k}, {j})")));
        }
        let phases = fields[4..]
            .iter()
            .map(|s| real(s))
            .collect::<Result<Vec<_>>>()?;
        let label = PhaseConfig::new(phases).map_err(|e| err(line_no, e.to_string()))?;
        records.push(FingerprintRecord {
            rp_index: k,
            estimate_index: j,
            x: real(fields[2])?,
            y: real(fields[3])?,
            label,
        });
    }
    if records.len() != expected {
        return Err(err(
            last_line + 1,
            format!(
                "file ends after {} records, header declares K·J = {expected}",
                records.len()
            ),
        ));
    }
    records.sort_by_key(|r| (r.rp_index, r.estimate_index));
    Ok(Database { meta, records })
}
