//! Self-contained run on planted scenes: features and images are generated,
//! then discovery, synthesis and both evaluation protocols run on them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vidcut::io::{manifest_to_string, save_feature_map, save_rgb, write_atomic, FeatureMap};
use vidcut::maskcut::upsample_mask;
use vidcut::planted::{planted_scene, PlantedConfig};
use vidcut::{BinaryMask, Trajectory, VideoRecord};

use super::{eval, maskcut, synth};
use crate::error::{CliError, CliResult};
use crate::{CrfArgs, DemoArgs, EvalArgs, MaskcutArgs, Motion, Protocol, SynthArgs};

const GT_MANIFEST: &str = "planted_gt.json";

fn crf_defaults() -> CrfArgs {
    CrfArgs {
        no_crf: false,
        crf_iterations: 10,
        crf_unary_prob: 0.9,
        crf_gauss_sigma: 3.0,
        crf_gauss_weight: 3.0,
        crf_bilateral_sigma_xy: 60.0,
        crf_bilateral_sigma_rgb: 10.0,
        crf_bilateral_weight: 5.0,
        crf_radius: 11,
    }
}

pub fn run(a: &DemoArgs) -> CliResult<()> {
    if a.images == 0 || a.patch == 0 {
        return Err(CliError::Config("images and patch must be ≥ 1".into()));
    }
    if a.grid < 8 {
        return Err(CliError::Config("grid must be ≥ 8 to place three separated objects".into()));
    }
    let features = a.out.join("features");
    let images = a.out.join("images");
    for d in [&features, &images] {
        std::fs::create_dir_all(d).map_err(|e| CliError::io(d, e))?;
    }

    let cfg = PlantedConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let side = a.grid * a.patch;
    let mut gts = Vec::with_capacity(a.images);
    for i in 0..a.images {
        let stem = format!("planted_{i:03}");
        let scene = planted_scene(a.grid, a.grid, &cfg, &mut rng);
        let fm = FeatureMap::new(
            a.grid,
            a.grid,
            cfg.dim,
            scene.features.data().to_vec(),
            a.patch,
            side,
            side,
        )?;
        save_feature_map(&fm, &features.join(format!("{stem}.npy")))?;
        let image_path = images.join(format!("{stem}.png"));
        save_rgb(&scene.render(a.patch), &image_path)?;

        let trajectories = scene
            .boxes
            .iter()
            .enumerate()
            .map(|(k, &(r0, c0, r1, c1))| {
                let patches = BinaryMask::from_fn(a.grid, a.grid, |r, c| (r0..=r1).contains(&r) && (c0..=c1).contains(&c));
                Ok(Trajectory {
                    instance_id: k as u64 + 1,
                    frames: vec![Some(upsample_mask(&patches, a.patch, side, side)?)],
                    score: 1.0,
                })
            })
            .collect::<vidcut::Result<Vec<_>>>()?;
        gts.push(VideoRecord {
            video_id: stem,
            frame_count: 1,
            height: side,
            width: side,
            frame_paths: vec![image_path.to_string_lossy().into_owned()],
            trajectories,
        });
    }
    let gt_path = a.out.join(GT_MANIFEST);
    write_atomic(&gt_path, manifest_to_string(&gts).as_bytes())?;
    println!("wrote {} planted scenes to {}", a.images, a.out.display());

    let masks_dir = a.out.join("maskcut");
    println!("== maskcut");
    maskcut::run(&MaskcutArgs {
        features,
        images: images.clone(),
        out: masks_dir.clone(),
        t: 3,
        tau: 0.15,
        no_seed_component: false,
        crf: crf_defaults(),
    })?;

    println!("== synth");
    synth::run(&SynthArgs {
        images,
        masks: masks_dir.join(maskcut::MANIFEST),
        out: a.out.join("synth"),
        frames: a.frames,
        seed: a.seed,
        min_visible: 0.2,
        motion: Motion::Interpolate,
        scale_min: 0.8,
        scale_max: 1.0,
        rotation_max: 30.0,
        max_shift: 0.25,
        brightness_min: 0.8,
        brightness_max: 1.2,
        contrast_min: 0.8,
        contrast_max: 1.2,
    })?;

    for (protocol, name) in [(Protocol::Ytvis, "ytvis"), (Protocol::Davis, "davis")] {
        println!("== eval ({name}): discovered masks against planted objects");
        eval::run(&EvalArgs {
            pred: masks_dir.join(maskcut::MANIFEST),
            gt: gt_path.clone(),
            protocol,
            out: a.out.join(format!("report_{name}.json")),
            thresholds: None,
        })?;
    }
    Ok(())
}
