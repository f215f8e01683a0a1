mod common;

use hearing_augment::gammatone::{analyze, GammatoneFilterbank};
use hearing_augment::recruitment::{recruit, recruitment_gain, reference_envelope, Audiogram};
use hearing_augment::{apply_loudness_recruitment, synth, AudioBuffer, Calibration};

use common::{level_dbfs, relative_max_dev, snr_db};

fn fb() -> GammatoneFilterbank {
    GammatoneFilterbank::for_sample_rate(16000).unwrap()
}

#[test]
fn zero_loss_equals_channel_sum() {
    let fb = fb();
    let speech = synth::speech_like(16000, 2.0, -20.0, 1).unwrap().buffer;
    let dec = analyze(&speech, &fb).unwrap();
    let y = recruit(&dec, &Audiogram::normal(), &fb, Calibration::default()).unwrap();
    assert!(relative_max_dev(&dec.channel_sum(), y.samples()) <= 1e-6);
}

#[test]
fn channel_sum_reconstructs_input() {
    // measured once: about 18 dB on speech-like input and 20 dB on white noise
    let fb = fb();
    let speech = synth::speech_like(16000, 5.0, -20.0, 1).unwrap().buffer;
    let y = apply_loudness_recruitment(&speech, &Audiogram::normal(), &fb, Calibration::default())
        .unwrap();
    assert!(snr_db(speech.samples(), y.samples()) >= 15.0);
    let noise = synth::white_noise(0.1, 2.0, 16000, 1).unwrap();
    let y = apply_loudness_recruitment(&noise, &Audiogram::normal(), &fb, Calibration::default())
        .unwrap();
    assert!(snr_db(noise.samples(), y.samples()) >= 15.0);
}

#[test]
fn full_scale_sine_loses_little() {
    // overlapping neighbours see E < E_theta, so the sum dips by 1 to 2.5 dB; quiet input drops far more
    let fb = fb();
    let ag = Audiogram::new([20.0, 20.0, 25.0, 35.0, 45.0, 50.0]).unwrap();
    let cal = Calibration::default();
    assert_eq!(recruitment_gain(1.0, reference_envelope(cal), 0.75), 1.0);
    for f in [500.0, 1000.0, 3000.0] {
        let loud = synth::sine(f, 1.0, 1.0, 16000).unwrap();
        let quiet = synth::sine(f, 0.01, 1.0, 16000).unwrap();
        let drop = |s: &AudioBuffer| {
            let y = apply_loudness_recruitment(s, &ag, &fb, cal).unwrap();
            level_dbfs(&s.samples()[4000..12000]) - level_dbfs(&y.samples()[4000..12000])
        };
        let (d_loud, d_quiet) = (drop(&loud), drop(&quiet));
        assert!(d_loud.abs() <= 3.0, "{f} Hz: {d_loud} dB");
        assert!(d_quiet > d_loud + 5.0, "{f} Hz: {d_quiet} vs {d_loud}");
    }
}

#[test]
fn severe_loss_lowers_quiet_speech() {
    let fb = fb();
    let speech = synth::speech_like(16000, 3.0, -40.0, 2).unwrap().buffer;
    let cal = Calibration::default();
    let y0 = apply_loudness_recruitment(&speech, &Audiogram::normal(), &fb, cal).unwrap();
    let ag = Audiogram::new([55.0, 55.0, 55.0, 65.0, 75.0, 80.0]).unwrap();
    let ys = apply_loudness_recruitment(&speech, &ag, &fb, cal).unwrap();
    assert!(level_dbfs(ys.samples()) < level_dbfs(y0.samples()));
}

#[test]
fn calibration_shifts_reference() {
    // a louder full-scale assignment makes the same signal louder, hence less attenuated
    let fb = fb();
    let s = synth::sine(1000.0, 0.01, 1.0, 16000).unwrap();
    let ag = Audiogram::new([30.0; 6]).unwrap();
    let quiet = apply_loudness_recruitment(&s, &ag, &fb, Calibration::default()).unwrap();
    let loud = apply_loudness_recruitment(&s, &ag, &fb, Calibration::new(125.0).unwrap()).unwrap();
    assert!(
        level_dbfs(&loud.samples()[4000..12000]) > level_dbfs(&quiet.samples()[4000..12000]) + 5.0
    );
}

#[test]
fn lengths_determinism_and_rates() {
    for rate in [8000u32, 16000, 22050] {
        let fb = GammatoneFilterbank::for_sample_rate(rate).unwrap();
        let s = synth::speech_like(rate, 0.7, -30.0, 4).unwrap().buffer;
        let ag = Audiogram::new([10.0, 10.0, 10.0, 15.0, 30.0, 40.0]).unwrap();
        let a = apply_loudness_recruitment(&s, &ag, &fb, Calibration::default()).unwrap();
        let b = apply_loudness_recruitment(&s, &ag, &fb, Calibration::default()).unwrap();
        assert_eq!(a.len(), s.len());
        assert_eq!(a, b);
    }
    let fb = fb();
    let one = AudioBuffer::new(vec![0.5], 16000).unwrap();
    assert_eq!(
        apply_loudness_recruitment(&one, &Audiogram::normal(), &fb, Calibration::default())
            .unwrap()
            .len(),
        1
    );
}

#[test]
fn envelope_non_negative() {
    let fb = fb();
    let s = synth::speech_like(16000, 1.0, -20.0, 5).unwrap().buffer;
    let dec = analyze(&s, &fb).unwrap();
    assert!(dec.envelopes.iter().flatten().all(|&e| e >= 0.0));
    assert!(dec.fine_structure.iter().all(|x| x.len() == s.len()));
}

#[test]
fn audiogram_at_limit_rejected() {
    let bad = Audiogram {
        freqs: vec![250.0, 500.0, 1000.0, 2000.0, 4000.0, 6000.0],
        thresholds_db: vec![0.0, 0.0, 0.0, 0.0, 0.0, 105.0],
    };
    let s = AudioBuffer::new(vec![0.0; 10], 16000).unwrap();
    assert!(apply_loudness_recruitment(&s, &bad, &fb(), Calibration::default()).is_err());
}
