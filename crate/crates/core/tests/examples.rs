// The cargo examples are the main documentation, so the quick ones run here.

macro_rules! example {
    ($m:ident, $file:literal) => {
        #[allow(dead_code)]
        mod $m {
            include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/", $file));
        }
    };
}

example!(formats, "formats.rs");
example!(make_dataset, "make_dataset.rs");
example!(gradient_check, "gradient_check.rs");
example!(length_curve, "length_curve.rs");
example!(fewshot_prompt, "fewshot_prompt.rs");
example!(attribution_map, "attribution_map.rs");
example!(figure_recipe, "figure_recipe.rs");

#[test]
fn formats_runs() {
    formats::run().unwrap();
}

#[test]
fn make_dataset_runs() {
    make_dataset::run().unwrap();
}

#[test]
fn gradient_check_runs() {
    gradient_check::run().unwrap();
}

#[test]
fn length_curve_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("curve.svg");
    length_curve::run(Some(&p)).unwrap();
    assert!(std::fs::read_to_string(p).unwrap().contains("always 0"));
}

#[test]
fn fewshot_prompt_runs() {
    fewshot_prompt::run().unwrap();
}

#[test]
fn attribution_map_runs() {
    let dir = tempfile::tempdir().unwrap();
    attribution_map::run(dir.path(), 4).unwrap();
    assert!(dir.path().join("len12-summary.csv").exists());
}

#[test]
fn figure_recipe_runs_at_smoke_scale() {
    let dir = tempfile::tempdir().unwrap();
    figure_recipe::run("fig7", scratchbench::experiment::Scale::Smoke, dir.path()).unwrap();
    assert!(dir.path().join("figures/fig7-smoke/fig7.svg").exists());
}
