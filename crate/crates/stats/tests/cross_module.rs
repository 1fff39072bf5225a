//! Stats against the generator's ledger and brute-force recounts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tspkit_data::{generate_synthetic, ClassRegistry, SynthConfig};
use tspkit_stats::{count_participants, dataset_report, CrowdRateSeries, ReportAccumulator};

#[test]
fn counts_match_the_generator_ledger_exactly() {
    let reg = ClassRegistry::default_tsp();
    let cfg = SynthConfig {
        seed: 21,
        count: 12,
        width: 64,
        height: 64,
        density: 7.0,
    };
    let set = generate_synthetic(&cfg, &reg).unwrap();
    let mut ledger_total = 0usize;
    for (img, placements) in set.images.iter().zip(&set.ledger) {
        let counts = count_participants(&img.instances, &reg);
        assert_eq!(counts.total as usize, placements.len());
        ledger_total += placements.len();
        let ledger_humans = placements
            .iter()
            .filter(|p| reg.is_human(p.class_id))
            .count();
        assert_eq!(counts.humans as usize, ledger_humans);
        assert_eq!(
            counts.vehicles as usize,
            placements.len() - ledger_humans
        );
    }
    let report = dataset_report(&set.images, &reg).unwrap();
    assert_eq!(report.total_participants as usize, ledger_total);
    assert_eq!(
        report.instance_size_histogram.total() as usize,
        ledger_total,
        "histogram bins must sum to the participant count"
    );
}

#[test]
fn requested_participants_are_counted_exactly() {
    // integral density -> exactly that many placements per image
    let reg = ClassRegistry::toy4();
    let cfg = SynthConfig {
        seed: 4,
        count: 10,
        width: 96,
        height: 96,
        density: 10.0,
    };
    let set = generate_synthetic(&cfg, &reg).unwrap();
    let report = dataset_report(&set.images, &reg).unwrap();
    assert_eq!(report.total_participants, 100);
    assert_eq!(report.avg_tp, 10.0);
}

#[test]
fn report_matches_brute_force_recount() {
    let reg = ClassRegistry::default_tsp();
    let cfg = SynthConfig {
        seed: 77,
        count: 30,
        width: 48,
        height: 48,
        density: 3.5,
    };
    let set = generate_synthetic(&cfg, &reg).unwrap();
    let report = dataset_report(&set.images, &reg).unwrap();

    // recount from raw pixels, independently of the accumulator
    let mut total = 0u64;
    let mut humans = 0u64;
    let mut over50 = 0u64;
    for img in &set.images {
        let mut ids = std::collections::HashSet::new();
        for &id in img.instances.pixels() {
            if id >= 1000 && reg.is_participant((id / 1000) as u8) {
                ids.insert(id);
            }
        }
        total += ids.len() as u64;
        if ids.len() > 50 {
            over50 += 1;
        }
        humans += ids
            .iter()
            .filter(|&&id| reg.is_human((id / 1000) as u8))
            .count() as u64;
    }
    assert_eq!(report.total_participants, total);
    assert_eq!(report.humans_total, humans);
    assert_eq!(report.vehicles_total, total - humans);
    assert_eq!(report.tp_gt_50, over50);
    assert_eq!(report.avg_tp, total as f64 / set.images.len() as f64);
}

#[test]
fn sharded_reports_merge_to_the_whole_report() {
    let reg = ClassRegistry::default_tsp();
    let cfg = SynthConfig {
        seed: 13,
        count: 16,
        width: 40,
        height: 40,
        density: 4.0,
    };
    let set = generate_synthetic(&cfg, &reg).unwrap();

    let mut whole = ReportAccumulator::default();
    for img in &set.images {
        whole.add_image(&img.instances, &reg);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10 {
        let cut = rng.random_range(1..set.images.len());
        let mut a = ReportAccumulator::default();
        let mut b = ReportAccumulator::default();
        for (i, img) in set.images.iter().enumerate() {
            if i < cut {
                a.add_image(&img.instances, &reg);
            } else {
                b.add_image(&img.instances, &reg);
            }
        }
        a.merge(&b);
        assert_eq!(a, whole);
        let ra = a.finalize(&reg).unwrap();
        let rw = whole.finalize(&reg).unwrap();
        assert_eq!(ra.avg_tp.to_bits(), rw.avg_tp.to_bits());
        assert_eq!(ra, rw);
    }
}

#[test]
fn all_road_split_gives_all_zero_rates() {
    let reg = ClassRegistry::toy4();
    let road = tspkit_data::LabelMap::filled(16, 16, 1).unwrap();
    let labels: Vec<(String, tspkit_data::LabelMap)> = (0..5)
        .map(|i| (format!("img_{i}"), road.clone()))
        .collect();
    let series = CrowdRateSeries::compute(
        labels.iter().map(|(id, l)| (id.as_str(), l)),
        &reg,
    );
    assert!(series.entries.iter().all(|e| e.rate == 0.0));
    assert_eq!(series.min_rate(), 0.0);
    assert_eq!(series.max_rate(), 0.0);
}

#[test]
fn series_over_synthetic_matches_per_image_calls() {
    let reg = ClassRegistry::toy4();
    let cfg = SynthConfig {
        seed: 2,
        count: 6,
        width: 32,
        height: 32,
        density: 3.0,
    };
    let set = generate_synthetic(&cfg, &reg).unwrap();
    let series = CrowdRateSeries::compute(
        set.images.iter().map(|i| (i.image_id.as_str(), &i.label)),
        &reg,
    );
    for entry in &series.entries {
        let img = set
            .images
            .iter()
            .find(|i| i.image_id == entry.image_id)
            .unwrap();
        let single = tspkit_stats::crowd_rate(&img.label, &reg);
        assert_eq!(entry.rate.to_bits(), single.rate.to_bits());
        assert_eq!(entry.participant_area, single.participant_area);
        assert_eq!(entry.road_area, single.road_area);
    }
}
