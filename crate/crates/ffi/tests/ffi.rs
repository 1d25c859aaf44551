use std::ffi::{CStr, CString};
use std::ptr;

use spkseg::synth::SynthConfig;
use spkseg_ffi::*;

fn last_error() -> String {
    let p = spkseg_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn two_speakers() -> Vec<f64> {
    spkseg::synthesize(&SynthConfig::uniform(2, 5.0, 42, 0.01))
        .unwrap()
        .audio
        .samples()
        .to_vec()
}

#[test]
fn segment_through_the_c_abi() {
    let samples = two_speakers();
    unsafe {
        let mut audio = ptr::null_mut();
        assert_eq!(
            spkseg_audio_from_samples(samples.as_ptr(), samples.len(), 8000, &mut audio),
            SpksegStatus::Ok
        );
        assert!((spkseg_audio_duration(audio) - 10.0).abs() < 1e-9);

        for method in [SpksegMethod::Pitch, SpksegMethod::BicGrow] {
            let mut opts = spkseg_options_default();
            opts.method = method;
            let mut result = ptr::null_mut();
            assert_eq!(spkseg_segment(audio, &opts, &mut result), SpksegStatus::Ok);
            let n = spkseg_result_times(result, ptr::null_mut(), 0);
            assert_eq!(n, spkseg_result_len(result));
            let mut times = vec![0.0; n];
            assert_eq!(spkseg_result_times(result, times.as_mut_ptr(), n), n);
            assert_eq!(times.len(), 1, "{method:?}: {times:?}");
            assert!((times[0] - 5.0).abs() <= 0.3);

            let (mut examined, mut rejected, mut wall) = (0usize, 0usize, 0.0f64);
            assert_eq!(
                spkseg_result_stats(result, &mut examined, &mut rejected, &mut wall),
                SpksegStatus::Ok
            );
            assert_eq!(examined - rejected, n);
            assert!(wall > 0.0);
            spkseg_result_free(result);
        }

        let mut result = ptr::null_mut();
        assert_eq!(
            spkseg_segment(audio, ptr::null(), &mut result),
            SpksegStatus::Ok
        );
        assert_eq!(spkseg_result_len(result), 1);
        spkseg_result_free(result);
        spkseg_audio_free(audio);
    }
}

#[test]
fn null_arguments_are_usage_errors() {
    unsafe {
        let mut audio = ptr::null_mut();
        assert_eq!(
            spkseg_audio_from_samples(ptr::null(), 5, 8000, &mut audio),
            SpksegStatus::Usage
        );
        assert!(last_error().contains("null"));
        assert_eq!(
            spkseg_audio_load_wav(ptr::null(), &mut audio),
            SpksegStatus::Usage
        );
        let mut result = ptr::null_mut();
        assert_eq!(
            spkseg_segment(ptr::null(), ptr::null(), &mut result),
            SpksegStatus::Usage
        );
        assert_eq!(spkseg_result_len(ptr::null()), 0);
        assert_eq!(spkseg_result_times(ptr::null(), ptr::null_mut(), 0), 0);
        assert_eq!(
            spkseg_result_stats(
                ptr::null(),
                ptr::null_mut(),
                ptr::null_mut(),
                ptr::null_mut()
            ),
            SpksegStatus::Usage
        );
        assert!(spkseg_audio_duration(ptr::null()) < 0.0);
        spkseg_audio_free(ptr::null_mut());
        spkseg_result_free(ptr::null_mut());
    }
}

#[test]
fn library_errors_map_to_status_classes() {
    unsafe {
        let mut audio = ptr::null_mut();
        let missing = CString::new("/no/such/file.wav").unwrap();
        assert_eq!(
            spkseg_audio_load_wav(missing.as_ptr(), &mut audio),
            SpksegStatus::Io
        );
        assert!(last_error().contains("/no/such/file.wav"));

        let out_of_range = [0.0, 1.5, 0.0];
        assert_eq!(
            spkseg_audio_from_samples(out_of_range.as_ptr(), 3, 8000, &mut audio),
            SpksegStatus::Format
        );

        let short = [0.0; 100];
        assert_eq!(
            spkseg_audio_from_samples(short.as_ptr(), 100, 8000, &mut audio),
            SpksegStatus::Ok
        );
        let mut result = ptr::null_mut();
        assert_eq!(
            spkseg_segment(audio, ptr::null(), &mut result),
            SpksegStatus::Precondition
        );
        assert!(result.is_null());

        let mut opts = spkseg_options_default();
        opts.n_ini = 3;
        assert_eq!(
            spkseg_segment(audio, &opts, &mut result),
            SpksegStatus::Format
        );
        assert!(last_error().contains("n_ini"));
        spkseg_audio_free(audio);
    }
}

#[test]
fn wav_round_trip_through_loader() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("two.wav");
    let out = spkseg::synthesize(&SynthConfig::uniform(2, 2.0, 1, 0.0)).unwrap();
    spkseg::write_wav(&path, &out.audio).unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut audio = ptr::null_mut();
        assert_eq!(
            spkseg_audio_load_wav(c.as_ptr(), &mut audio),
            SpksegStatus::Ok
        );
        assert!((spkseg_audio_duration(audio) - 4.0).abs() < 1e-9);
        spkseg_audio_free(audio);
    }
}

#[test]
fn scoring_functions() {
    assert_eq!(spkseg_f_measure(0.5, 0.5), 0.5);
    assert!((spkseg_f_measure(0.4207, 0.0126) - 0.7302).abs() < 5e-4);
    let r = [1.0, 3.0];
    let h = [1.0, 5.0];
    let mut rep = SpksegEvalReport {
        fd: -1.0,
        fr: -1.0,
        f: -1.0,
        n_hyp: 0,
        n_ref: 0,
        n_matched: 0,
        tolerance_s: 0.0,
    };
    unsafe {
        assert_eq!(
            spkseg_evaluate(r.as_ptr(), 2, h.as_ptr(), 2, 0.5, &mut rep),
            SpksegStatus::Ok
        );
        assert_eq!((rep.fd, rep.fr, rep.f, rep.n_matched), (0.5, 0.5, 0.5, 1));

        assert_eq!(
            spkseg_evaluate(r.as_ptr(), 2, ptr::null(), 0, 0.5, &mut rep),
            SpksegStatus::Ok
        );
        assert_eq!((rep.fd, rep.fr, rep.f), (0.0, 1.0, 0.0));

        let unordered = [3.0, 1.0];
        assert_eq!(
            spkseg_evaluate(unordered.as_ptr(), 2, h.as_ptr(), 2, 0.5, &mut rep),
            SpksegStatus::Format
        );
        assert_eq!(
            spkseg_evaluate(r.as_ptr(), 2, h.as_ptr(), 2, -1.0, &mut rep),
            SpksegStatus::Usage
        );
        assert_eq!(
            spkseg_evaluate(r.as_ptr(), 2, h.as_ptr(), 2, 0.5, ptr::null_mut()),
            SpksegStatus::Usage
        );
    }
}

#[test]
fn header_declares_the_api() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/spkseg.h")).unwrap();
    for name in [
        "spkseg_audio_load_wav",
        "spkseg_audio_from_samples",
        "spkseg_segment",
        "spkseg_result_times",
        "spkseg_result_free",
        "spkseg_evaluate",
        "spkseg_f_measure",
        "spkseg_last_error_message",
        "SPKSEG_STATUS_PRECONDITION = 4",
        "struct SpksegOptions",
    ] {
        assert!(header.contains(name), "header lacks {name}");
    }
    assert!(header.contains("#ifndef SPKSEG_H"));
}
