//! A small seeded airline-domain corpus generator in the same three-file
//! layout as the real benchmarks. Used by the examples, the integration
//! tests and anywhere the real datasets are not on disk.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DatasetSplits, RawExample};

#[derive(Clone, Copy, Debug)]
pub struct SynthConfig {
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    pub seed: u64,
    /// Probability of inserting a filler word between template tokens.
    pub filler_rate: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            train: 600,
            dev: 100,
            test: 150,
            seed: 13,
            filler_rate: 0.15,
        }
    }
}

/// (intent, sampling weight, templates)
const INTENTS: &[(&str, u32, &[&str])] = &[
    (
        "flight",
        60,
        &[
            "show me flights from {fromloc.city_name} to {toloc.city_name}",
            "i want to fly from {fromloc.city_name} to {toloc.city_name} on {depart_date.day_name}",
            "list flights to {toloc.city_name} leaving {depart_time.period_of_day}",
            "what flights go from {fromloc.city_name} to {toloc.city_name} {depart_date.day_name} {depart_time.period_of_day}",
            "find a {class_type} flight to {toloc.city_name} from {fromloc.city_name}",
            "i need a flight on {airline_name} from {fromloc.city_name} to {toloc.city_name}",
        ],
    ),
    (
        "airfare",
        12,
        &[
            "how much is a {class_type} ticket from {fromloc.city_name} to {toloc.city_name}",
            "what is the cheapest fare from {fromloc.city_name} to {toloc.city_name}",
            "show me fares to {toloc.city_name} on {airline_name}",
        ],
    ),
    (
        "ground_service",
        8,
        &[
            "what ground transportation is available in {city_name}",
            "is there a limousine service at {airport_name}",
            "how do i get downtown from {airport_name}",
        ],
    ),
    (
        "airline",
        6,
        &[
            "which airlines fly from {fromloc.city_name} to {toloc.city_name}",
            "what airline is {airline_code}",
        ],
    ),
    (
        "abbreviation",
        5,
        &["what does {fare_basis_code} mean", "what is fare code {fare_basis_code}"],
    ),
    (
        "aircraft",
        4,
        &[
            "what kind of plane flies from {fromloc.city_name} to {toloc.city_name}",
            "what aircraft does {airline_name} use",
        ],
    ),
    (
        "flight_time",
        3,
        &[
            "what time does the flight leave {fromloc.city_name} for {toloc.city_name}",
            "when does {airline_name} depart {fromloc.city_name} {depart_date.day_name}",
        ],
    ),
    (
        "distance",
        2,
        &["how far is {airport_name} from downtown {city_name}", "what is the distance from {fromloc.city_name} to {toloc.city_name}"],
    ),
];

const CITIES: &[&str] = &[
    "boston",
    "denver",
    "dallas",
    "atlanta",
    "pittsburgh",
    "baltimore",
    "oakland",
    "philadelphia",
    "san francisco",
    "new york",
    "salt lake city",
    "los angeles",
    "fort worth",
    "washington",
    "st. louis",
    "kansas city",
];

fn slot_values(slot: &str) -> &'static [&'static str] {
    match slot {
        "fromloc.city_name" | "toloc.city_name" | "city_name" => CITIES,
        "depart_date.day_name" => &["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"],
        "depart_time.period_of_day" => &["morning", "afternoon", "evening", "early morning", "late night"],
        "class_type" => &["first class", "economy", "business class", "coach"],
        "airline_name" => &["delta", "united", "american airlines", "us air", "continental", "twa"],
        "airline_code" => &["dl", "ua", "aa", "us", "co"],
        "airport_name" => &["logan airport", "dfw", "general mitchell international", "love field", "bwi airport"],
        "fare_basis_code" => &["y", "qx", "fn", "bh", "h"],
        _ => &["unknown"],
    }
}

const FILLERS: &[&str] = &["please", "uh", "the", "a", "um", "like", "today", "also"];

fn sample_example(rng: &mut ChaCha8Rng, filler_rate: f64) -> RawExample {
    let total: u32 = INTENTS.iter().map(|i| i.1).sum();
    let mut pick = rng.random_range(0..total);
    let (intent, _, templates) = INTENTS
        .iter()
        .find(|(_, w, _)| {
            if pick < *w {
                true
            } else {
                pick -= w;
                false
            }
        })
        .unwrap();
    let template = templates.choose(rng).unwrap();

    let mut tokens = Vec::new();
    let mut tags = Vec::new();
    for piece in template.split(' ') {
        if rng.random_bool(filler_rate) {
            tokens.push((*FILLERS.choose(rng).unwrap()).to_owned());
            tags.push("O".to_owned());
        }
        if let Some(slot) = piece.strip_prefix('{').and_then(|p| p.strip_suffix('}')) {
            let value = slot_values(slot).choose(rng).unwrap();
            for (j, word) in value.split(' ').enumerate() {
                tokens.push(word.to_owned());
                tags.push(format!("{}-{slot}", if j == 0 { "B" } else { "I" }));
            }
        } else {
            tokens.push(piece.to_owned());
            tags.push("O".to_owned());
        }
    }
    RawExample {
        tokens,
        slot_tags: tags,
        intent: (*intent).to_owned(),
    }
}

/// Deterministic train/dev/test splits for `config.seed`.
pub fn generate(config: &SynthConfig) -> DatasetSplits {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut take = |n: usize| (0..n).map(|_| sample_example(&mut rng, config.filler_rate)).collect();
    DatasetSplits {
        train: take(config.train),
        dev: take(config.dev),
        test: take(config.test),
    }
}
