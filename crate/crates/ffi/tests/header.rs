use std::path::PathBuf;

fn header() -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/noarb.h");
    std::fs::read_to_string(p).expect("the build script writes include/noarb.h")
}

#[test]
fn header_declares_every_exported_function() {
    let h = header();
    for f in [
        "noarb_model_from_text",
        "noarb_model_from_file",
        "noarb_model_free",
        "noarb_analyze",
        "noarb_report_free",
        "noarb_report_verdict",
        "noarb_report_has_unknown",
        "noarb_report_flag_count",
        "noarb_report_to_json",
        "noarb_report_to_text",
        "noarb_simulate",
        "noarb_string_free",
        "noarb_last_error",
        "noarb_version",
    ] {
        assert!(h.contains(&format!("{f}(")), "{f} missing from the header");
    }
}

#[test]
fn header_keeps_handles_opaque_and_codes_stable() {
    let h = header();
    assert!(h.contains("typedef struct NoarbModel NoarbModel;"));
    assert!(h.contains("typedef struct NoarbReport NoarbReport;"));
    assert!(h.contains("NOARB_STATUS_OK = 0"));
    assert!(h.contains("NOARB_STATUS_PANIC = 8"));
    assert!(h.contains("NOARB_TRUTH_UNKNOWN = 2"));
    assert!(h.contains("#ifndef NOARB_H"));
}
