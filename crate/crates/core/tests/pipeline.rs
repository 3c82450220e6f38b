use crossex_core::capture::{read_capture, write_capture, write_records};
use crossex_core::exec::{ProblemSpec, Scope};
use crossex_core::pipeline::Market;
use crossex_core::ppo::{Checkpoint, PolicyParams, PpoConfig, CHECKPOINT_VERSION};
use crossex_core::signals::FeatureParams;
use crossex_core::synth::{flat_market, generate};
use crossex_core::{SynthConfig, VenueId};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SECOND: i64 = 1_000_000_000;

/// Chi-square critical value, 9 degrees of freedom, upper tail 0.001.
const CHI2_9_P001: f64 = 27.877;

#[test]
fn episode_starts_are_uniform() {
    let params = FeatureParams::default();
    let spec = ProblemSpec::default();
    // Warm-up plus ten episode lengths.
    let warmup_s = params.norm_window_ms as i64 / 1000;
    let records = flat_market(100.0, (warmup_s + 10 * spec.horizon_s as i64) * SECOND);
    let market = Market::from_records(&records, params, None).unwrap();
    let env = market.env(&VenueId::new("flat"), Scope::Single, &spec, None).unwrap();
    let steps = spec.episode_steps();
    let lo = env.data().nth_start(steps, 0).unwrap();
    let n = env.data().n_starts(steps);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut counts = [0f64; 10];
    let draws = 1_000;
    for _ in 0..draws {
        let s = env.sample_start(&mut rng).unwrap();
        counts[(s - lo) * 10 / n] += 1.0;
    }
    let expected = draws as f64 / 10.0;
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    assert!(chi2 < CHI2_9_P001, "chi2 {chi2}, counts {counts:?}");
}

#[test]
fn synthetic_capture_bytes_are_deterministic() {
    let cfg = SynthConfig { seed: 9, ..Default::default() };
    let bytes = |c: &SynthConfig| {
        let mut out = Vec::new();
        write_records(&mut out, &generate(c, 20 * SECOND).unwrap().collect::<Vec<_>>()).unwrap();
        out
    };
    assert_eq!(bytes(&cfg), bytes(&cfg));
    assert_ne!(bytes(&cfg), bytes(&SynthConfig { seed: 10, ..cfg.clone() }));
}

#[test]
fn capture_file_round_trip_preserves_the_market() {
    let cfg = SynthConfig { seed: 4, ..Default::default() };
    let records: Vec<_> = generate(&cfg, 60 * SECOND).unwrap().collect();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cap.ndjson");
    write_capture(&records, &path).unwrap();
    let back = read_capture(&path).unwrap();
    assert_eq!(back, records);

    let params = FeatureParams::default();
    let direct = Market::synthetic(&cfg, 60 * SECOND, params, None).unwrap();
    let read = Market::from_records(&back, params, None).unwrap();
    assert_eq!(direct.table.len(), read.table.len());
    for (a, b) in direct.features.oimn_cross.iter().zip(&read.features.oimn_cross) {
        assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
    }
}

#[test]
fn checkpoint_round_trip_keeps_the_policy() {
    let market = Market::synthetic(&SynthConfig::default(), 90 * SECOND, FeatureParams::default(), None).unwrap();
    let spec = ProblemSpec::default();
    let env = market.env(&VenueId::new("beta"), Scope::Cross, &spec, None).unwrap();
    let ck = Checkpoint {
        version: CHECKPOINT_VERSION,
        scope: Scope::Cross,
        venue: VenueId::new("beta"),
        problem: spec.clone(),
        features: FeatureParams::default(),
        ppo: PpoConfig::default(),
        updates: 0,
        scaler: env.scaler().clone(),
        params: PolicyParams::new(env.state_dim(), env.n_actions(), 64, 3e-4, 1e-3, 1),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.json");
    ck.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!(back, ck);
    let start = env.data().nth_start(spec.episode_steps(), 3).unwrap();
    let state = env.reset(start).unwrap().state.vector(&spec);
    assert_eq!(
        ck.params.distribution(&state, 51).unwrap().probs,
        back.params.distribution(&state, 51).unwrap().probs
    );
}

#[test]
fn checkpoint_with_unknown_version_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.json");
    std::fs::write(&path, "{\"version\": 99}").unwrap();
    assert!(Checkpoint::load(&path).is_err());
}
