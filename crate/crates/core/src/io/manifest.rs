//! Prediction / ground-truth manifests.
//!
//! ```json
//! {"videos": [{"video_id": "v0", "height": 4, "width": 4, "frame_count": 2,
//!              "frames": ["v0/000.png", "v0/001.png"],
//!              "trajectories": [{"instance_id": 1, "score": 0.9,
//!                                "frames": [{"size": [4, 4], "counts": [5, 2, 9]}, null]}]}]}
//! ```
//!
//! `frame_count` is written on save and optional on load, where it falls back
//! to the number of frame paths or trajectory frame slots.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::rle::{rle_decode, rle_encode, RleMask};
use super::write_atomic;
use crate::error::{Error, Result};
use crate::video::{Trajectory, VideoRecord};

const SCORE_DECIMALS: f64 = 1e6;

#[derive(Debug, Serialize, Deserialize)]
struct ManifestFile {
    videos: Vec<VideoEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct VideoEntry {
    video_id: String,
    height: usize,
    width: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    frame_count: Option<usize>,
    #[serde(default)]
    frames: Vec<String>,
    #[serde(default)]
    trajectories: Vec<TrajectoryEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TrajectoryEntry {
    instance_id: u64,
    score: f64,
    frames: Vec<Option<RleEntry>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RleEntry {
    size: [usize; 2],
    counts: Vec<u64>,
}

fn round_score(s: f64) -> f64 {
    (s * SCORE_DECIMALS).round() / SCORE_DECIMALS
}

fn entry_to_record(v: VideoEntry) -> Result<VideoRecord> {
    let frame_count = v
        .frame_count
        .or_else(|| (!v.frames.is_empty()).then_some(v.frames.len()))
        .or_else(|| v.trajectories.first().map(|t| t.frames.len()))
        .unwrap_or(0);
    let mut trajectories = Vec::with_capacity(v.trajectories.len());
    for t in v.trajectories {
        let frames = t
            .frames
            .into_iter()
            .map(|f| {
                f.map(|rle| {
                    if rle.size != [v.height, v.width] {
                        return Err(Error::DimensionMismatch(format!(
                            "video {}: instance {} has mask size {:?}, video is {}x{}",
                            v.video_id, t.instance_id, rle.size, v.height, v.width
                        )));
                    }
                    rle_decode(&RleMask {
                        height: rle.size[0],
                        width: rle.size[1],
                        counts: rle.counts,
                    })
                })
                .transpose()
            })
            .collect::<Result<Vec<_>>>()?;
        trajectories.push(Trajectory {
            instance_id: t.instance_id,
            frames,
            score: t.score,
        });
    }
    let record = VideoRecord {
        video_id: v.video_id,
        frame_count,
        height: v.height,
        width: v.width,
        frame_paths: v.frames,
        trajectories,
    };
    record.validate()?;
    Ok(record)
}

fn record_to_entry(r: &VideoRecord) -> VideoEntry {
    VideoEntry {
        video_id: r.video_id.clone(),
        height: r.height,
        width: r.width,
        frame_count: Some(r.frame_count),
        frames: r.frame_paths.clone(),
        trajectories: r
            .trajectories
            .iter()
            .map(|t| TrajectoryEntry {
                instance_id: t.instance_id,
                score: round_score(t.score),
                frames: t
                    .frames
                    .iter()
                    .map(|f| {
                        f.as_ref().map(|m| {
                            let rle = rle_encode(m);
                            RleEntry {
                                size: [rle.height, rle.width],
                                counts: rle.counts,
                            }
                        })
                    })
                    .collect(),
            })
            .collect(),
    }
}

pub fn parse_manifest(text: &str, origin: &Path) -> Result<Vec<VideoRecord>> {
    let file: ManifestFile = serde_json::from_str(text).map_err(|source| Error::Json {
        path: origin.to_path_buf(),
        source,
    })?;
    file.videos.into_iter().map(entry_to_record).collect()
}

pub fn manifest_to_string(records: &[VideoRecord]) -> String {
    let file = ManifestFile {
        videos: records.iter().map(record_to_entry).collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("manifest serializes");
    s.push('\n');
    s
}

pub fn load_video_manifest(path: &Path) -> Result<Vec<VideoRecord>> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_manifest(&text, path)
}

/// Writes `records` atomically. Scores are rounded to 6 decimals.
pub fn save_predictions(records: &[VideoRecord], path: &Path) -> Result<()> {
    for r in records {
        r.validate()?;
    }
    write_atomic(path, manifest_to_string(records).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mask::BinaryMask;

    fn square(h: usize, w: usize, r0: usize, c0: usize, s: usize) -> BinaryMask {
        BinaryMask::from_fn(h, w, |r, c| (r0..r0 + s).contains(&r) && (c0..c0 + s).contains(&c))
    }

    #[test]
    fn empty_video_list() {
        let recs = parse_manifest(r#"{"videos": []}"#, Path::new("x")).unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn one_trajectory_two_frames() {
        let text = r#"{"videos":[{"video_id":"a","height":2,"width":2,"frames":["f0.png","f1.png"],
            "trajectories":[{"instance_id":3,"score":0.5,"frames":[{"size":[2,2],"counts":[2,1,1]},null]}]}]}"#;
        let recs = parse_manifest(text, Path::new("x")).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].frame_count, 2);
        let t = &recs[0].trajectories[0];
        assert!(t.frames[0].as_ref().unwrap().get(0, 1));
        assert!(t.frames[1].is_none());
    }

    #[test]
    fn rejects_size_mismatch() {
        let text = r#"{"videos":[{"video_id":"a","height":2,"width":2,
            "trajectories":[{"instance_id":1,"score":0.5,"frames":[{"size":[3,2],"counts":[6]}]}]}]}"#;
        assert!(matches!(
            parse_manifest(text, Path::new("x")),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn rejects_ragged_trajectories() {
        let text = r#"{"videos":[{"video_id":"a","height":1,"width":1,"frame_count":2,
            "trajectories":[{"instance_id":1,"score":0.5,"frames":[null]}]}]}"#;
        assert!(matches!(
            parse_manifest(text, Path::new("x")),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn round_trip_three_trajectories() {
        let (h, w) = (6, 7);
        let record = VideoRecord {
            video_id: "clip".into(),
            frame_count: 2,
            height: h,
            width: w,
            frame_paths: vec!["clip/0.png".into(), "clip/1.png".into()],
            trajectories: vec![
                Trajectory {
                    instance_id: 1,
                    frames: vec![Some(square(h, w, 0, 0, 2)), Some(square(h, w, 1, 1, 2))],
                    score: 0.123_456_7,
                },
                Trajectory {
                    instance_id: 2,
                    frames: vec![None, Some(square(h, w, 3, 3, 3))],
                    score: 1.0,
                },
                Trajectory {
                    instance_id: 7,
                    frames: vec![Some(square(h, w, 4, 0, 2)), None],
                    score: 0.0,
                },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_predictions(std::slice::from_ref(&record), &path).unwrap();
        let back = load_video_manifest(&path).unwrap();
        assert_eq!(back.len(), 1);
        let b = &back[0];
        assert_eq!(b.video_id, record.video_id);
        assert_eq!(b.frame_paths, record.frame_paths);
        for (x, y) in b.trajectories.iter().zip(&record.trajectories) {
            assert_eq!(x.instance_id, y.instance_id);
            assert_eq!(x.frames, y.frames);
            assert!((x.score - y.score).abs() <= 1e-6);
        }
        // a second save of the loaded records is byte-identical
        let again = dir.path().join("m2.json");
        save_predictions(&back, &again).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&again).unwrap()
        );
    }
}
