//! Whole-dataset save/load round trips through the on-disk layout.

use tspkit_data::io::{load_split, save_dataset};
use tspkit_data::{generate_synthetic, validate_pair, ClassRegistry, Split, SynthConfig};

#[test]
fn generated_dataset_survives_save_load_bit_identically() {
    let reg = ClassRegistry::default_tsp();
    let cfg = SynthConfig {
        seed: 99,
        count: 20,
        width: 48,
        height: 40,
        density: 4.0,
    };
    let set = generate_synthetic(&cfg, &reg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_dataset(dir.path(), &set.images, &reg).unwrap();

    let reloaded_registry = ClassRegistry::load(&dir.path().join("registry.tsv")).unwrap();
    assert_eq!(reloaded_registry, reg);

    let mut reloaded = Vec::new();
    for split in Split::ALL {
        reloaded.extend(load_split(dir.path(), split, &reg).unwrap());
    }
    reloaded.sort_by(|a, b| a.image_id.cmp(&b.image_id));
    let mut original = set.images.clone();
    original.sort_by(|a, b| a.image_id.cmp(&b.image_id));

    assert_eq!(reloaded.len(), original.len());
    for (a, b) in reloaded.iter().zip(&original) {
        assert_eq!(a, b, "image {} changed across save/load", b.image_id);
        let report = validate_pair(&a.label, &a.instances, &reg).unwrap();
        assert!(report.is_clean());
    }
}

#[test]
fn load_split_returns_only_that_split() {
    let reg = ClassRegistry::toy4();
    let cfg = SynthConfig {
        seed: 3,
        count: 10,
        width: 32,
        height: 32,
        density: 2.0,
    };
    let set = generate_synthetic(&cfg, &reg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    save_dataset(dir.path(), &set.images, &reg).unwrap();
    let val = load_split(dir.path(), Split::Val, &reg).unwrap();
    assert!(val.iter().all(|i| i.split == Split::Val));
    assert_eq!(
        val.len(),
        set.images.iter().filter(|i| i.split == Split::Val).count()
    );
}
