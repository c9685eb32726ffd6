mod support;

#[test]
fn templates_render_and_examples_round_trip() {
    support::check_prompt_round_trips().unwrap();
}

#[test]
fn controlled_dataset_from_template_examples() {
    support::check_controlled_dataset().unwrap();
}
