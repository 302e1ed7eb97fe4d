use gluelab_web::{coset_text, distance_text, render_svg};

#[test]
fn coset_lists_three_members_on_a_glue_line() {
    let s = coset_text(2, "1,1", 1).unwrap();
    assert!(s.starts_with("3 member(s)"), "{s}");
}

#[test]
fn distance_reports_bracket() {
    let s = distance_text(2, "1/4,1/4", "3/4,1/4", 2).unwrap();
    assert!(s.contains("d_2 = 1/2"), "{s}");
    assert!(s.contains("limit distance in ["));
}

#[test]
fn render_and_errors() {
    assert!(render_svg(2, 1).unwrap().starts_with("<svg"));
    assert!(coset_text(0, "1,1", 0).is_err());
    assert!(distance_text(2, "1/2", "x", 0).is_err());
}
