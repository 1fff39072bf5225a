use tspkit_data::{generate_synthetic, ClassRegistry, SynthConfig};
use tspkit_drd::{train_toy, DrdConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let lr: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.3);
    let steps: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(500);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(7);
    let images = generate_synthetic(
        &SynthConfig { seed: 2024, count: 8, width: 64, height: 64, density: 6.0 },
        &ClassRegistry::toy4(),
    )
    .unwrap()
    .images;
    let config = DrdConfig {
        num_region_tokens: 5,
        num_heads: 12,
        channels: 36,
        num_classes: 4,
        ..DrdConfig::default()
    };
    let t0 = std::time::Instant::now();
    let out = train_toy(&images, &config, steps, lr, seed).unwrap();
    let dt = t0.elapsed().as_secs_f64();
    println!(
        "lr={lr} steps={steps} seed={seed}: loss {:.4} -> {:.4}, acc {:.4}, {:.1}s",
        out.losses[0],
        out.losses.last().unwrap(),
        out.pixel_accuracy,
        dt
    );
    for (i, l) in out.losses.iter().enumerate() {
        if i % 50 == 0 { println!("  step {i:4}: {l:.5}"); }
    }
}
