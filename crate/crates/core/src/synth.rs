//! Seeded synthetic multimodal datasets driven by a known latent stress
//! process.
//!
//! The latent `z_t` is an AR(1) deviation around a level that switches
//! between relaxed (`-level`) and stressed (`+level`) episodes. Every
//! modality observes `z_t` through its own random affine map plus Gaussian
//! noise, with a per-modality reliability that sets how much of the signal
//! survives. Label is `z_t > 0`; the NASA-TLX score is a fixed map of `z_t`.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{
    ManifestEntry, Modality, ModalityFrame, ModalitySchema, SchemaManifest, PHYSIO_DIM,
};
use crate::error::{Error, Result};
use crate::nn::{sigmoid, Matrix};
use crate::seed;

pub const KEY_COLUMN: &str = "t";
pub const LABEL_COLUMN: &str = "stress";
pub const TLX_COLUMN: &str = "nasa_tlx";

/// How the latent maps onto the 0-100 workload score.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TlxMap {
    /// `100 · sigmoid(z)`.
    Sigmoid,
    /// `clamp(intercept + slope · z, 0, 100)`.
    Linear { intercept: f64, slope: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub rows: usize,
    pub posture_dim: usize,
    pub facial_dim: usize,
    pub keystroke_dim: usize,
    pub noise_sigma: f64,
    /// Fraction of rows each modality independently fails to report.
    pub missing_fraction: BTreeMap<Modality, f64>,
    pub signal_strength: f64,
    pub seed: u64,
    /// Latent level of stressed episodes (relaxed episodes sit at minus this).
    pub episode_level: f64,
    pub episode_min: usize,
    pub episode_max: usize,
    pub tlx_map: TlxMap,
}

impl SynthConfig {
    /// 3000 raw rows whose per-modality attrition leaves roughly 956 rows
    /// reported by all three encoded modalities.
    pub fn paper_shape(seed: u64) -> Self {
        // keep probability q per modality with q^3 = 956 / 3000
        let missing = 1.0 - (956.0f64 / 3000.0).cbrt();
        Self {
            rows: 3000,
            posture_dim: 24,
            facial_dim: 20,
            keystroke_dim: 8,
            noise_sigma: 1.0,
            missing_fraction: Modality::ALL
                .into_iter()
                .map(|m| {
                    (
                        m,
                        if m == Modality::Physiology {
                            0.0
                        } else {
                            missing
                        },
                    )
                })
                .collect(),
            signal_strength: 1.0,
            seed,
            episode_level: 1.5,
            episode_min: 40,
            episode_max: 160,
            tlx_map: TlxMap::Sigmoid,
        }
    }

    /// Complete, time-contiguous series with cleaner sensors, for timeline work.
    pub fn drift(seed: u64) -> Self {
        Self {
            rows: 1000,
            noise_sigma: 0.6,
            episode_level: 2.0,
            missing_fraction: Modality::ALL.into_iter().map(|m| (m, 0.0)).collect(),
            ..Self::paper_shape(seed)
        }
    }

    pub fn preset(name: &str, seed: u64) -> Result<Self> {
        match name {
            "paper-shape" => Ok(Self::paper_shape(seed)),
            "drift" => Ok(Self::drift(seed)),
            other => Err(Error::InvalidConfig(format!(
                "unknown synth preset `{other}` (expected paper-shape|drift)"
            ))),
        }
    }

    pub fn dim(&self, modality: Modality) -> usize {
        match modality {
            Modality::Posture => self.posture_dim,
            Modality::Facial => self.facial_dim,
            Modality::Keystroke => self.keystroke_dim,
            Modality::Physiology => PHYSIO_DIM,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 {
            return Err(Error::InvalidConfig("synth rows must be positive".into()));
        }
        if Modality::ENCODED.iter().any(|&m| self.dim(m) == 0) {
            return Err(Error::InvalidConfig(
                "every modality needs at least one feature".into(),
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::InvalidConfig(
                "noise_sigma must be finite and >= 0".into(),
            ));
        }
        if !self.signal_strength.is_finite() {
            return Err(Error::InvalidConfig(
                "signal_strength must be finite".into(),
            ));
        }
        if let Some((m, f)) = self
            .missing_fraction
            .iter()
            .find(|(_, f)| !(0.0..1.0).contains(*f))
        {
            return Err(Error::InvalidConfig(format!(
                "{m}: missing fraction {f} outside [0, 1)"
            )));
        }
        if self.episode_min == 0 || self.episode_min > self.episode_max {
            return Err(Error::InvalidConfig("episode length range is empty".into()));
        }
        Ok(())
    }
}

/// Norm of each modality's loading vector: the share of latent signal per
/// unit of noise. Posture is the most informative encoded modality.
fn reliability(modality: Modality) -> f64 {
    match modality {
        Modality::Posture => 0.98,
        Modality::Facial => 0.83,
        Modality::Keystroke => 0.71,
        Modality::Physiology => 0.58,
    }
}

const AR_COEFF: f64 = 0.8;
const AR_INNOVATION: f64 = 0.45;
const IRRELEVANT_SHARE: f64 = 0.25;

fn column_names(modality: Modality, dim: usize) -> Vec<String> {
    let named: &[&str] = match modality {
        Modality::Keystroke => &[
            "mouse_activity",
            "left_clicked",
            "right_clicked",
            "double_clicked",
            "wheel",
            "char_ratio",
            "error_ratio",
            "key_ratio",
        ],
        Modality::Physiology => &["hrv", "scl_mean", "scl_slope"],
        Modality::Posture => &[
            "avg_depth",
            "left_shoulder_angle_avg",
            "right_shoulder_angle_avg",
            "lean_angle_avg",
        ],
        Modality::Facial => &[
            "quality",
            "neutral",
            "happy",
            "sad",
            "angry",
            "surprised",
            "scared",
        ],
    };
    (0..dim)
        .map(|j| match named.get(j) {
            Some(n) => (*n).to_string(),
            None => format!("{}_{j:02}", modality.as_str()),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentPoint {
    pub t: usize,
    pub z: f64,
    /// True inside a planted stressed episode.
    pub episode_high: bool,
}

/// A maximal run of consecutive time steps in one planted episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub start: usize,
    /// Inclusive.
    pub end: usize,
    pub high: bool,
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub config: SynthConfig,
    pub frames: Vec<ModalityFrame>,
    pub latent: Vec<LatentPoint>,
}

impl SynthData {
    pub fn episodes(&self) -> Vec<Episode> {
        let mut out: Vec<Episode> = Vec::new();
        for p in &self.latent {
            match out.last_mut() {
                Some(e) if e.high == p.episode_high && e.end + 1 == p.t => e.end = p.t,
                _ => out.push(Episode {
                    start: p.t,
                    end: p.t,
                    high: p.episode_high,
                }),
            }
        }
        out
    }

    pub fn frame(&self, modality: Modality) -> Option<&ModalityFrame> {
        self.frames.iter().find(|f| f.modality() == modality)
    }

    /// Writes one CSV per modality, `latent.csv` and `manifest.json` into `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<SchemaManifest> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = Vec::new();
        for frame in &self.frames {
            let file = format!("{}.csv", frame.modality());
            let path = dir.join(&file);
            let out = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            frame
                .write_csv(BufWriter::new(out))
                .map_err(|e| Error::csv(&path, e))?;
            entries.push(ManifestEntry {
                path: file.into(),
                schema: frame.schema.clone(),
            });
        }
        let latent_path = dir.join("latent.csv");
        let out = fs::File::create(&latent_path).map_err(|e| Error::io(&latent_path, e))?;
        let mut w = csv::Writer::from_writer(BufWriter::new(out));
        w.write_record(["t", "z", "episode_high"])
            .and_then(|_| {
                for p in &self.latent {
                    w.write_record([
                        p.t.to_string(),
                        p.z.to_string(),
                        u8::from(p.episode_high).to_string(),
                    ])?;
                }
                w.flush().map_err(csv::Error::from)
            })
            .map_err(|e| Error::csv(&latent_path, e))?;
        let manifest = SchemaManifest::new(entries);
        manifest.save(dir.join("manifest.json"))?;
        Ok(manifest)
    }
}

/// Reads back a `latent.csv` written by [`SynthData::write_to_dir`].
pub fn read_latent(path: &Path) -> Result<Vec<LatentPoint>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::csv(path, e))?;
        let bad = || Error::corrupt(path, "malformed latent row");
        out.push(LatentPoint {
            t: rec.get(0).and_then(|v| v.parse().ok()).ok_or_else(bad)?,
            z: rec.get(1).and_then(|v| v.parse().ok()).ok_or_else(bad)?,
            episode_high: rec.get(2).ok_or_else(bad)? == "1",
        });
    }
    Ok(out)
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn latent_series(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<LatentPoint> {
    let stationary_sd = AR_INNOVATION / (1.0 - AR_COEFF * AR_COEFF).sqrt();
    let mut deviation = stationary_sd * normal(rng);
    let mut high = rng.random_bool(0.5);
    let mut remaining = rng.random_range(cfg.episode_min..=cfg.episode_max);
    let mut out = Vec::with_capacity(cfg.rows);
    for t in 0..cfg.rows {
        if remaining == 0 {
            high = !high;
            remaining = rng.random_range(cfg.episode_min..=cfg.episode_max);
        }
        remaining -= 1;
        deviation = AR_COEFF * deviation + AR_INNOVATION * normal(rng);
        let level = if high {
            cfg.episode_level
        } else {
            -cfg.episode_level
        };
        out.push(LatentPoint {
            t,
            z: level + deviation,
            episode_high: high,
        });
    }
    out
}

/// Random loadings with Euclidean norm `reliability`, a quarter of them zero.
fn loadings(dim: usize, norm: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut w: Vec<f64> = (0..dim)
        .map(|_| {
            if dim > 1 && rng.random_bool(IRRELEVANT_SHARE) {
                0.0
            } else {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                sign * rng.random_range(0.3..1.0)
            }
        })
        .collect();
    if w.iter().all(|&v| v == 0.0) {
        w[0] = 1.0;
    }
    let current = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    w.iter_mut().for_each(|v| *v *= norm / current);
    w
}

pub fn generate(cfg: &SynthConfig) -> Result<SynthData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, "synth/latent"));
    let latent = latent_series(cfg, &mut rng);

    let mut frames = Vec::with_capacity(Modality::ALL.len());
    for m in Modality::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(cfg.seed, m.as_str()));
        let dim = cfg.dim(m);
        let w = loadings(dim, reliability(m), &mut rng);
        // raw-unit offsets and scales so the normalizer has real work to do
        let offsets: Vec<f64> = (0..dim).map(|_| rng.random_range(-50.0..2000.0)).collect();
        let scales: Vec<f64> = (0..dim)
            .map(|_| 10f64.powf(rng.random_range(-2.0..2.0)))
            .collect();
        let missing = cfg.missing_fraction.get(&m).copied().unwrap_or(0.0);

        let mut keys = Vec::new();
        let mut data = Vec::new();
        let mut labels = Vec::new();
        let mut tlx = Vec::new();
        for p in &latent {
            // draw noise before the drop decision so attrition does not shift the stream
            let noise: Vec<f64> = (0..dim).map(|_| normal(&mut rng)).collect();
            if missing > 0.0 && rng.random_bool(missing) {
                continue;
            }
            keys.push(p.t.to_string());
            for j in 0..dim {
                let u = cfg.signal_strength * w[j] * p.z + cfg.noise_sigma * noise[j];
                data.push(offsets[j] + scales[j] * u);
            }
            labels.push(u8::from(p.z > 0.0));
            tlx.push(match cfg.tlx_map {
                TlxMap::Sigmoid => 100.0 * sigmoid(p.z),
                TlxMap::Linear { intercept, slope } => (intercept + slope * p.z).clamp(0.0, 100.0),
            });
        }
        let mut schema = ModalitySchema::new(m, KEY_COLUMN, column_names(m, dim));
        let (labels, tlx) = if m == Modality::Physiology {
            schema = schema.with_label(LABEL_COLUMN).with_tlx(TLX_COLUMN);
            (Some(labels), Some(tlx))
        } else {
            (None, None)
        };
        let features = Matrix::from_vec(keys.len(), dim, data)?;
        frames.push(ModalityFrame::new(schema, keys, features, labels, tlx)?);
    }
    Ok(SynthData {
        config: cfg.clone(),
        frames,
        latent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{align, LabelSources};

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            rows: 300,
            ..SynthConfig::drift(seed)
        }
    }

    #[test]
    fn labels_follow_latent_sign_and_tlx_in_range() {
        let data = generate(&small(3)).unwrap();
        let physio = data.frame(Modality::Physiology).unwrap();
        for (i, key) in physio.keys.iter().enumerate() {
            let t: usize = key.parse().unwrap();
            let z = data.latent[t].z;
            assert_eq!(physio.labels.as_ref().unwrap()[i], u8::from(z > 0.0));
            let s = physio.tlx.as_ref().unwrap()[i];
            assert!((0.0..=100.0).contains(&s));
        }
    }

    #[test]
    fn no_missing_means_no_attrition() {
        let data = generate(&small(5)).unwrap();
        let (ds, report) = align(&data.frames, LabelSources::infer(&data.frames).unwrap()).unwrap();
        assert_eq!(ds.len(), 300);
        assert!(report.excluded.values().all(|&e| e == 0));
    }

    #[test]
    fn noiseless_single_modality_is_linearly_separable() {
        let cfg = SynthConfig {
            noise_sigma: 0.0,
            signal_strength: 5.0,
            ..small(8)
        };
        let data = generate(&cfg).unwrap();
        let z: Vec<f64> = data.latent.iter().map(|p| p.z).collect();
        for m in Modality::ENCODED {
            let f = data.frame(m).unwrap();
            // least-squares fit of z on the first relevant column, then classify by sign
            let col = (0..f.features.cols())
                .find(|&c| {
                    let v = f.features.get(0, c);
                    (0..f.len()).any(|r| (f.features.get(r, c) - v).abs() > 1e-9)
                })
                .unwrap();
            let x: Vec<f64> = (0..f.len()).map(|r| f.features.get(r, col)).collect();
            let n = x.len() as f64;
            let (mx, mz) = (x.iter().sum::<f64>() / n, z.iter().sum::<f64>() / n);
            let sxz: f64 = x.iter().zip(&z).map(|(a, b)| (a - mx) * (b - mz)).sum();
            let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
            let slope = sxz / sxx;
            let correct = x
                .iter()
                .zip(&z)
                .filter(|(a, b)| ((mz + slope * (*a - mx)) > 0.0) == (**b > 0.0))
                .count();
            assert_eq!(correct, f.len(), "{m}");
        }
    }

    #[test]
    fn episodes_tile_the_series() {
        let data = generate(&small(1)).unwrap();
        let eps = data.episodes();
        assert_eq!(eps.first().unwrap().start, 0);
        assert_eq!(eps.last().unwrap().end, 299);
        assert!(eps
            .windows(2)
            .all(|w| w[0].end + 1 == w[1].start && w[0].high != w[1].high));
    }

    #[test]
    fn invalid_configs() {
        let mut c = small(0);
        c.keystroke_dim = 0;
        assert!(generate(&c).is_err());
        let mut c = small(0);
        c.missing_fraction.insert(Modality::Facial, 1.0);
        assert!(generate(&c).is_err());
        assert!(SynthConfig::preset("nope", 0).is_err());
    }
}
