//! Regenerates the vector files under `tests/fixtures/`.
//!
//!     cargo run -p topictrack --example make_fixtures
//!
//! `demo.vec` gives every word of a theme a vector near the theme centre, so
//! words of one theme are near neighbours. `bench.vec` is the default
//! synthetic benchmark store.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use topictrack::bench::{synthetic_store, SyntheticStoreConfig};
use topictrack::embedding::{write_vectors, EmbeddingStore};

const DIM: usize = 24;

const THEMES: &[&[&str]] = &[
    &[
        "space",
        "rocket",
        "launch",
        "orbit",
        "mars",
        "rover",
        "astronaut",
        "satellite",
        "moon",
        "Elon",
        "Musk",
        "NASA",
        "SpaceX",
    ],
    &[
        "game",
        "console",
        "playstation",
        "xbox",
        "nintendo",
        "gamer",
        "esports",
        "controller",
        "multiplayer",
        "Sony",
        "Microsoft",
    ],
    &[
        "social",
        "facebook",
        "twitter",
        "instagram",
        "post",
        "user",
        "follower",
        "account",
        "feed",
        "Zuckerberg",
    ],
    &[
        "security",
        "data",
        "breach",
        "hacker",
        "password",
        "encryption",
        "vulnerability",
        "malware",
        "privacy",
        "leak",
    ],
    &[
        "browser",
        "chrome",
        "firefox",
        "website",
        "web",
        "extension",
        "phishing",
        "https",
        "Google",
        "Mozilla",
    ],
    &[
        "covid",
        "coronavirus",
        "pandemic",
        "vaccine",
        "virus",
        "lockdown",
        "mask",
        "quarantine",
        "WHO",
    ],
    &[
        "ai",
        "machine_learning",
        "neural",
        "algorithm",
        "deep_learning",
        "model",
        "training",
        "robot",
        "OpenAI",
    ],
    &[
        "phone",
        "smartphone",
        "iphone",
        "android",
        "camera",
        "battery",
        "screen",
        "Apple",
        "Samsung",
    ],
    &["lens", "sensor", "photo", "zoom", "megapixel", "aperture"],
];

fn demo_store() -> EmbeddingStore {
    let mut rng = ChaCha8Rng::seed_from_u64(2020);
    let mut rows = Vec::new();
    for words in THEMES {
        let centre: Vec<f64> = (0..DIM).map(|_| rng.sample(StandardNormal)).collect();
        for word in *words {
            let v: Vec<f32> = centre
                .iter()
                .map(|&c| {
                    let n: f64 = rng.sample(StandardNormal);
                    (c + 0.45 * n) as f32
                })
                .collect();
            rows.push((word.to_string(), v));
        }
    }
    EmbeddingStore::from_rows(DIM, rows).expect("fixed dimension")
}

fn main() -> std::io::Result<()> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures");
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("demo.vec"), write_vectors(&demo_store()))?;
    fs::write(
        dir.join("bench.vec"),
        write_vectors(&synthetic_store(&SyntheticStoreConfig::default())),
    )?;
    println!("wrote fixtures to {}", dir.display());
    Ok(())
}
