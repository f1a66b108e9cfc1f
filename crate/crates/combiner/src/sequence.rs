//! Autoregressive sampling of per-user event streams from the three trained
//! models. Every user walks a dedicated RNG stream, so the output does not
//! depend on scheduling and generation can fan out across threads.

use cdrkit_core::rng::RngFactory;
use cdrkit_core::types::{EventType, Weekday, SECONDS_PER_DAY};
use cdrkit_seqmodel::{
    encode_corr_input, encode_event_input, encode_iet_input, softmax, step_state, LstmParams,
    LstmState, CORR_INPUT_DIM, EVENT_INPUT_DIM, IET_INPUT_DIM,
};
use cdrkit_social::{Category, PhonebookEntry};
use cdrkit_statmodel::IetSampler;
use rand::Rng;
use rayon::prelude::*;

pub struct GenModels {
    pub event: LstmParams,
    pub iet: LstmParams,
    pub corr: LstmParams,
}

/// One planned event, before call resolution. `rank` points into the owner's
/// friendship order (1 = least contacted, #c_u = most) and is absent for data
/// sessions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlannedEvent {
    pub timestamp: u64,
    pub event: EventType,
    pub rank: Option<u32>,
}

/// Which event types a phonebook lets its owner originate. Local calls and
/// SMS need someone the owner actually contacts (`both` or `out`); an entry
/// the owner only hears from does not qualify. International events need an
/// `inter` correspondent. Data sessions are always possible.
fn allowed_classes(book: &[PhonebookEntry]) -> [bool; EventType::COUNT] {
    let mut local = false;
    let mut inter = false;
    for e in book {
        match e.category {
            Category::Both | Category::Out => local = true,
            Category::Inter => inter = true,
            Category::In => {}
        }
    }
    let mut mask = [false; EventType::COUNT];
    mask[EventType::Data.index()] = true;
    mask[EventType::LocalCall.index()] = local;
    mask[EventType::LocalSms.index()] = local;
    mask[EventType::IntlCall.index()] = inter;
    mask
}

fn sample_index<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    debug_assert!(total > 0.0, "no positive weight to sample from");
    let mut x = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        x -= w;
        if x <= 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

/// Sample one stream per user over `[0, duration_s)`.
pub fn generate_sequences(
    models: &GenModels,
    books: &[Vec<PhonebookEntry>],
    start: Weekday,
    duration_s: u64,
    iet: &IetSampler,
    iet_median_samples: usize,
    factory: &RngFactory,
) -> Vec<Vec<PlannedEvent>> {
    books
        .par_iter()
        .enumerate()
        .map(|(uid, book)| {
            let mut rng = factory.stream(&format!("combine/gen/{uid}"));
            generate_user(models, book, start, duration_s, iet, iet_median_samples, &mut rng)
        })
        .collect()
}

fn generate_user<R: Rng>(
    models: &GenModels,
    book: &[PhonebookEntry],
    start: Weekday,
    duration_s: u64,
    iet: &IetSampler,
    iet_median_samples: usize,
    rng: &mut R,
) -> Vec<PlannedEvent> {
    let mut out = Vec::new();
    if duration_s == 0 {
        return out;
    }
    let mask = allowed_classes(book);
    let allowed: Vec<usize> = (0..EventType::COUNT).filter(|i| mask[*i]).collect();
    let n_corr = book.len();

    let mut evt_state = LstmState::new(&models.event);
    let mut iet_state = LstmState::new(&models.iet);
    let mut corr_state = LstmState::new(&models.corr);
    let mut x_evt = vec![0.0; EVENT_INPUT_DIM];
    let mut x_iet = vec![0.0; IET_INPUT_DIM];
    let mut x_corr = vec![0.0; CORR_INPUT_DIM];

    // Seed step: a uniformly drawn allowed class at a random moment of day
    // one primes the recurrent state. It is never emitted; every emitted
    // event comes out of the models.
    let mut prev_evt = EventType::from_index(allowed[rng.gen_range(0..allowed.len())]).unwrap();
    let mut prev_t = rng.gen_range(0..SECONDS_PER_DAY.min(duration_s));

    loop {
        encode_event_input(&mut x_evt, prev_evt, prev_t, start);
        let mut probs = softmax(&step_state(&models.event, &mut evt_state, &x_evt));
        for (i, p) in probs.iter_mut().enumerate() {
            if !mask[i] {
                *p = 0.0;
            }
        }
        let evt = EventType::from_index(sample_index(&probs, rng)).unwrap();

        encode_iet_input(&mut x_iet, prev_t, evt, start);
        let bin_probs = softmax(&step_state(&models.iet, &mut iet_state, &x_iet));
        let bin = sample_index(&bin_probs, rng);
        let gap = iet.sample_median(bin, iet_median_samples, rng);
        let t = prev_t + (gap.round() as u64).max(1);
        if t >= duration_s {
            break;
        }

        let rank = if evt == EventType::Data {
            None
        } else {
            encode_corr_input(&mut x_corr, evt, t, start, n_corr);
            let y = step_state(&models.corr, &mut corr_state, &x_corr);
            Some((y[0].round() as i64).clamp(1, n_corr as i64) as u32)
        };
        out.push(PlannedEvent { timestamp: t, event: evt, rank });
        prev_evt = evt;
        prev_t = t;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use cdrkit_core::types::SECONDS_PER_WEEK;
    use cdrkit_seqmodel::ModelKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn toy_models(seed: u64) -> GenModels {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let mk = |kind: ModelKind, rng: &mut ChaCha12Rng| {
            LstmParams::init(
                kind.input_dim(),
                8,
                1,
                kind.output_dim(),
                kind.loss(),
                0.0,
                rng,
            )
        };
        GenModels {
            event: mk(ModelKind::EventType, &mut rng),
            iet: mk(ModelKind::IetBin, &mut rng),
            corr: mk(ModelKind::Correspondent, &mut rng),
        }
    }

    fn entry(category: Category, correspondent: &str, peer: Option<u32>, rank: u32) -> PhonebookEntry {
        PhonebookEntry { category, correspondent: correspondent.to_string(), peer, rank }
    }

    fn full_book() -> Vec<PhonebookEntry> {
        vec![
            entry(Category::Both, "24405000001", Some(1), 4),
            entry(Category::Out, "24405000002", Some(2), 3),
            entry(Category::In, "24405000003", Some(3), 2),
            entry(Category::Inter, "20862000001", None, 1),
        ]
    }

    #[test]
    fn zero_horizon_yields_empty_streams() {
        let models = toy_models(1);
        let books = vec![full_book()];
        let streams = generate_sequences(
            &models,
            &books,
            Weekday::Monday,
            0,
            &IetSampler::stock(),
            1,
            &RngFactory::new(7),
        );
        assert_eq!(streams.len(), 1);
        assert!(streams[0].is_empty());
    }

    #[test]
    fn timestamps_strictly_increase_and_fit_horizon() {
        let models = toy_models(2);
        let books = vec![full_book(); 4];
        let streams = generate_sequences(
            &models,
            &books,
            Weekday::Monday,
            SECONDS_PER_WEEK,
            &IetSampler::stock(),
            1,
            &RngFactory::new(11),
        );
        let mut total = 0;
        for s in &streams {
            total += s.len();
            for w in s.windows(2) {
                assert!(w[0].timestamp < w[1].timestamp);
            }
            if let Some(last) = s.last() {
                assert!(last.timestamp < SECONDS_PER_WEEK);
            }
        }
        assert!(total > 0, "a week of four users produced nothing");
    }

    #[test]
    fn category_gaps_suppress_event_classes() {
        let models = toy_models(3);
        // No inter entry for user 0, nothing contactable for user 1 (only
        // one-way incoming), empty book for user 2.
        let books = vec![
            vec![
                entry(Category::Both, "24405000001", Some(1), 2),
                entry(Category::In, "24405000003", Some(3), 1),
            ],
            vec![entry(Category::In, "24405000001", Some(0), 1)],
            Vec::new(),
        ];
        let streams = generate_sequences(
            &models,
            &books,
            Weekday::Monday,
            4 * SECONDS_PER_WEEK,
            &IetSampler::stock(),
            1,
            &RngFactory::new(13),
        );
        assert!(streams[0].iter().all(|e| e.event != EventType::IntlCall));
        for s in &streams[1..] {
            assert!(s.iter().all(|e| e.event == EventType::Data));
        }
    }

    #[test]
    fn ranks_stay_inside_the_phonebook() {
        let models = toy_models(4);
        let books = vec![full_book(); 2];
        let streams = generate_sequences(
            &models,
            &books,
            Weekday::Monday,
            4 * SECONDS_PER_WEEK,
            &IetSampler::stock(),
            1,
            &RngFactory::new(17),
        );
        for s in &streams {
            for ev in s {
                match ev.event {
                    EventType::Data => assert!(ev.rank.is_none()),
                    _ => {
                        let r = ev.rank.expect("interaction without rank");
                        assert!((1..=4).contains(&r));
                    }
                }
            }
        }
    }

    #[test]
    fn same_seed_reproduces_streams() {
        let models = toy_models(5);
        let books = vec![full_book(); 3];
        let run = |seed| {
            generate_sequences(
                &models,
                &books,
                Weekday::Monday,
                SECONDS_PER_WEEK,
                &IetSampler::stock(),
                3,
                &RngFactory::new(seed),
            )
        };
        assert_eq!(run(23), run(23));
        assert_ne!(run(23), run(24));
    }
}
