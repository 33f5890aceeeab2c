use modelcard_core::card::{load_template, CardTemplate};

const NINE: [(&str, &str); 9] = [
    ("model-details", "Model Details"),
    ("intended-use", "Intended Use"),
    ("factors", "Factors"),
    ("metrics", "Metrics"),
    ("evaluation-data", "Evaluation Data"),
    ("training-data", "Training Data"),
    ("quantitative-analyses", "Quantitative Analyses"),
    ("ethical-considerations", "Ethical Considerations"),
    ("caveats-and-recommendations", "Caveats and Recommendations"),
];

#[test]
fn default_template_is_the_nine_sections() {
    let tpl = CardTemplate::default_template();
    let got: Vec<(&str, &str)> = tpl.sections.iter().map(|s| (s.id.as_str(), s.title.as_str())).collect();
    assert_eq!(got, NINE);
    assert!(tpl.sections.iter().all(|s| s.required && !s.description.is_empty()));
    assert_eq!(load_template(None).unwrap(), tpl);
    assert_eq!(load_template(Some(b"[]")).unwrap(), tpl);
}

#[test]
fn ethics_section_links_an_example() {
    let tpl = CardTemplate::default_template();
    let ethics = tpl.section("ethical-considerations").unwrap();
    assert_eq!(ethics.examples.len(), 1);
    assert!(ethics.examples[0].starts_with("https://"));
}
