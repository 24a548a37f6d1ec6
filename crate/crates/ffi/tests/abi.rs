use std::ffi::{c_char, CStr, CString};
use std::ptr;

use floquet_ep_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe { fep_last_error_message(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

#[test]
fn model_spectrum_round_trip() {
    unsafe {
        let mut model = ptr::null_mut();
        let s = fep_model_new(FepFamily::DriveSquare, FepDissipator::Minus, 0.4, 2.0, 1.0, &mut model);
        assert_eq!(s, FepStatus::Ok);
        let mut spec = ptr::null_mut();
        assert_eq!(fep_spectrum_compute(model, &mut spec), FepStatus::Ok);

        let mut len = 0usize;
        let (mut re, mut im) = ([0.0; 4], [0.0; 4]);
        assert_eq!(fep_spectrum_eigenvalues(spec, re.as_mut_ptr(), im.as_mut_ptr(), 4, &mut len), FepStatus::Ok);
        assert_eq!(len, 4);
        assert_eq!((re[0], im[0]), (1.0, 0.0));

        let mut obs = FepObservables::default();
        assert_eq!(fep_spectrum_observables(spec, &mut obs), FepStatus::Ok);
        // Ω = 2J sits inside the overdamped window at γ₋ = 0.4
        assert_eq!(obs.overdamped, 1);
        assert_eq!(obs.n_real_transients, 3);

        fep_spectrum_free(spec);
        fep_model_free(model);
    }
}

#[test]
fn short_buffers_report_the_needed_length() {
    unsafe {
        let mut len = 0usize;
        let mut one = [0.0];
        let s = fep_ep_contour_square_drive(1.0, one.as_mut_ptr(), 1, &mut len);
        assert_eq!(s, FepStatus::BufferTooSmall);
        assert!(len > 1);
        let mut roots = vec![0.0; len];
        assert_eq!(fep_ep_contour_square_drive(1.0, roots.as_mut_ptr(), len, &mut len), FepStatus::Ok);
        assert!(roots.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    unsafe {
        let mut model = ptr::null_mut();
        let s = fep_model_new(FepFamily::DriveCos, FepDissipator::Z, 1.0, -1.0, 1.0, &mut model);
        assert_eq!(s, FepStatus::InvalidModel);
        assert!(model.is_null());
        assert!(last_error().contains("invalid model"), "{}", last_error());

        assert_eq!(fep_spectrum_compute(ptr::null(), &mut ptr::null_mut()), FepStatus::NullPointer);
        assert_eq!(last_error(), "model is NULL");

        let mut pd = ptr::null_mut();
        let s = fep_sweep_run(FepFamily::DriveSquare, FepDissipator::Minus, 1.0, 0.0, 1.0, 1, 0.5, 1.0, 3, &mut pd);
        assert_eq!(s, FepStatus::InvalidArgument);
    }
}

#[test]
fn errors_are_per_thread() {
    unsafe {
        fep_model_new(FepFamily::DriveCos, FepDissipator::Z, f64::NAN, 1.0, 1.0, &mut ptr::null_mut());
    }
    let other = std::thread::spawn(|| unsafe { fep_last_error_message(ptr::null_mut(), 0) }).join().unwrap();
    assert_eq!(other, 0);
    assert!(!last_error().is_empty());
}

#[test]
fn sweep_handle_exposes_metric_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut pd = ptr::null_mut();
        let s = fep_sweep_run(FepFamily::DissSquare, FepDissipator::Z, 1.0, 0.0, 0.3, 4, 0.5, 4.5, 5, &mut pd);
        assert_eq!(s, FepStatus::Ok);
        let mut ip = [0.0; 20];
        let mut len = 0;
        assert_eq!(fep_sweep_ip(pd, ip.as_mut_ptr(), ip.len(), &mut len), FepStatus::Ok);
        assert_eq!(len, 20);
        assert!(ip.iter().all(|x| (0.0..=1.0 + 1e-12).contains(x)));

        let path = CString::new(dir.path().join("s.csv").to_str().unwrap()).unwrap();
        assert_eq!(fep_sweep_write_csv(pd, path.as_ptr()), FepStatus::Ok);
        let bad = CString::new(dir.path().join("missing/s.csv").to_str().unwrap()).unwrap();
        assert_eq!(fep_sweep_write_csv(pd, bad.as_ptr()), FepStatus::Io);
        fep_sweep_free(pd);
    }
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    assert_eq!(text.lines().count(), 21);
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(fep_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
