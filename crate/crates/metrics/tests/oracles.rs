//! Metric implementations against independent set-based and loop oracles,
//! plus the partition-invariance contract.

use std::collections::{BTreeMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tspkit_data::{generate_synthetic, ClassRegistry, LabelMap, SynthConfig, IGNORE_LABEL};
use tspkit_metrics::{average_instance_sizes, ConfusionMatrix, WeightedTallies};

const K: usize = 4;

fn random_pair(rng: &mut ChaCha8Rng) -> (LabelMap, LabelMap) {
    let w = rng.random_range(1..=8);
    let h = rng.random_range(1..=8);
    let gt: Vec<u8> = (0..w * h)
        .map(|_| {
            if rng.random_range(0..8) == 0 {
                IGNORE_LABEL
            } else {
                rng.random_range(0..K as u8)
            }
        })
        .collect();
    let pred: Vec<u8> = (0..w * h).map(|_| rng.random_range(0..K as u8)).collect();
    (
        LabelMap::new(w, h, gt).unwrap(),
        LabelMap::new(w, h, pred).unwrap(),
    )
}

/// Oracle 1: per-pixel counting into a K×K table with nested loops.
fn count_oracle(gt: &LabelMap, pred: &LabelMap) -> Vec<u64> {
    let mut counts = vec![0u64; K * K];
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            let g = gt.get(x, y);
            if g == IGNORE_LABEL {
                continue;
            }
            counts[g as usize * K + pred.get(x, y) as usize] += 1;
        }
    }
    counts
}

/// Oracle 2: IoU from literal pixel-coordinate sets.
fn set_iou_oracle(gt: &LabelMap, pred: &LabelMap) -> Vec<Option<f64>> {
    let mut out = Vec::new();
    for c in 0..K as u8 {
        let mut gt_set = HashSet::new();
        let mut pred_set = HashSet::new();
        for y in 0..gt.height() {
            for x in 0..gt.width() {
                if gt.get(x, y) == IGNORE_LABEL {
                    continue;
                }
                if gt.get(x, y) == c {
                    gt_set.insert((x, y));
                }
                if pred.get(x, y) == c {
                    pred_set.insert((x, y));
                }
            }
        }
        let union = gt_set.union(&pred_set).count();
        if union == 0 {
            out.push(None);
        } else {
            out.push(Some(
                gt_set.intersection(&pred_set).count() as f64 / union as f64,
            ));
        }
    }
    out
}

#[test]
fn accumulate_matches_pixel_loop_oracle_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..300 {
        let (gt, pred) = random_pair(&mut rng);
        let mut cm = ConfusionMatrix::new(K);
        cm.accumulate(&gt, &pred).unwrap();
        let want = count_oracle(&gt, &pred);
        for g in 0..K as u8 {
            for p in 0..K as u8 {
                assert_eq!(cm.count(g, p), want[g as usize * K + p as usize]);
            }
        }
    }
}

#[test]
fn miou_matches_set_based_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(555);
    for _ in 0..300 {
        let (gt, pred) = random_pair(&mut rng);
        let mut cm = ConfusionMatrix::new(K);
        cm.accumulate(&gt, &pred).unwrap();
        let want = set_iou_oracle(&gt, &pred);
        match cm.miou() {
            Ok(result) => {
                let mut sum = 0.0;
                let mut present = 0;
                for (got, want) in result.per_class.iter().zip(&want) {
                    match (got, want) {
                        (Some(g), Some(w)) => {
                            assert!((g - w).abs() < 1e-12, "{g} vs {w}");
                            sum += w;
                            present += 1;
                        }
                        (None, None) => {}
                        other => panic!("presence mismatch: {other:?}"),
                    }
                }
                assert!((result.mean - sum / present as f64).abs() < 1e-12);
            }
            Err(_) => assert!(want.iter().all(Option::is_none)),
        }
    }
}

#[test]
fn split_evaluation_merges_to_whole_set_evaluation() {
    let reg = ClassRegistry::toy4();
    let set = generate_synthetic(
        &SynthConfig {
            seed: 5,
            count: 10,
            width: 32,
            height: 32,
            density: 3.0,
        },
        &reg,
    )
    .unwrap();
    // predictions: gt with a deterministic corruption
    let preds: Vec<LabelMap> = set
        .images
        .iter()
        .map(|img| {
            let px: Vec<u8> = img
                .label
                .pixels()
                .iter()
                .enumerate()
                .map(|(i, &p)| if i % 7 == 0 { (p + 1) % K as u8 } else { p })
                .collect();
            LabelMap::new(img.width(), img.height(), px).unwrap()
        })
        .collect();

    let avg: BTreeMap<u8, f64> =
        average_instance_sizes(set.images.iter().map(|i| &i.instances));

    // whole-set evaluation
    let mut cm_all = ConfusionMatrix::new(K);
    let mut wt_all = WeightedTallies::new(K);
    for (img, pred) in set.images.iter().zip(&preds) {
        cm_all.accumulate(&img.label, pred).unwrap();
        wt_all
            .accumulate(&img.image_id, &img.label, &img.instances, pred, &reg)
            .unwrap();
    }

    // 3/7 partition, evaluated separately and merged
    let mut cm_a = ConfusionMatrix::new(K);
    let mut cm_b = ConfusionMatrix::new(K);
    let mut wt_a = WeightedTallies::new(K);
    let mut wt_b = WeightedTallies::new(K);
    for (i, (img, pred)) in set.images.iter().zip(&preds).enumerate() {
        let (cm, wt) = if i < 3 {
            (&mut cm_a, &mut wt_a)
        } else {
            (&mut cm_b, &mut wt_b)
        };
        cm.accumulate(&img.label, pred).unwrap();
        wt.accumulate(&img.image_id, &img.label, &img.instances, pred, &reg)
            .unwrap();
    }
    cm_a.merge(&cm_b).unwrap();
    wt_a.merge(&wt_b).unwrap();

    assert_eq!(cm_a, cm_all);
    let merged_miou = cm_a.miou().unwrap();
    let whole_miou = cm_all.miou().unwrap();
    assert_eq!(merged_miou.mean.to_bits(), whole_miou.mean.to_bits());

    let merged = wt_a.finalize(&avg).unwrap();
    let whole = wt_all.finalize(&avg).unwrap();
    assert_eq!(merged, whole);
    let (a, b) = (merged.mean.unwrap(), whole.mean.unwrap());
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn tallies_merge_is_commutative_after_finalize() {
    let reg = ClassRegistry::toy4();
    let set = generate_synthetic(
        &SynthConfig {
            seed: 6,
            count: 4,
            width: 24,
            height: 24,
            density: 2.0,
        },
        &reg,
    )
    .unwrap();
    let avg: BTreeMap<u8, f64> =
        average_instance_sizes(set.images.iter().map(|i| &i.instances));
    let tally_of = |idx: &[usize]| {
        let mut wt = WeightedTallies::new(K);
        for &i in idx {
            let img = &set.images[i];
            wt.accumulate(&img.image_id, &img.label, &img.instances, &img.label, &reg)
                .unwrap();
        }
        wt
    };
    let a = tally_of(&[0, 1]);
    let b = tally_of(&[2, 3]);
    let mut ab = a.clone();
    ab.merge(&b).unwrap();
    let mut ba = b.clone();
    ba.merge(&a).unwrap();
    assert_eq!(ab.finalize(&avg).unwrap(), ba.finalize(&avg).unwrap());
}

#[test]
fn equal_size_degeneracy_holds_on_randomized_scenes() {
    // Instances all share one area per scene; iIoU must equal IoU bit-exactly
    // for every instance class.
    let reg = ClassRegistry::toy4();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    for _ in 0..50 {
        let side = rng.random_range(2..=4);
        let cells = 4usize;
        let w = cells * (side + 1);
        let mut gt = LabelMap::filled(w, side + 2, 0).unwrap();
        let mut inst = tspkit_data::InstanceMap::filled(w, side + 2, 0).unwrap();
        let mut pred_px: Vec<u8> = gt.pixels().to_vec();
        let mut index = [0u32; K];
        for cell in 0..cells {
            let class = if rng.random_bool(0.5) { 2u8 } else { 3u8 };
            index[class as usize] += 1;
            let id = class as u32 * 1000 + index[class as usize];
            let x0 = cell * (side + 1);
            let correct = rng.random_bool(0.6);
            for dy in 0..side {
                for dx in 0..side {
                    gt.set(x0 + dx, dy, class);
                    inst.set(x0 + dx, dy, id);
                    pred_px[dy * w + x0 + dx] = if correct { class } else { 0 };
                }
            }
        }
        let pred = LabelMap::new(w, side + 2, pred_px).unwrap();
        let mut cm = ConfusionMatrix::new(K);
        cm.accumulate(&gt, &pred).unwrap();
        let miou = cm.miou().unwrap();
        let avg = average_instance_sizes([&inst]);
        let mut wt = WeightedTallies::new(K);
        wt.accumulate("img", &gt, &inst, &pred, &reg).unwrap();
        let iiou = wt.finalize(&avg).unwrap();
        for (&c, slot) in &iiou.per_class {
            let iou = miou.per_class[c as usize].expect("class present");
            assert_eq!(
                slot.iiou.to_bits(),
                iou.to_bits(),
                "class {c}: iIoU {} vs IoU {iou}",
                slot.iiou
            );
        }
    }
}
