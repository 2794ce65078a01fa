//! Basic vs. updated accuracy on a synthetic corpus, with and without
//! injected unknown words.
//!
//! ```text
//! cargo run -p ina-core --example penalty_comparison [-- --json]
//! ```

use ina_core::evaluation::synthetic::{generate, SyntheticSpec};
use ina_core::{
    evaluate, table2_experiment, train, EvalMode, InjectionSpec, LemmaTable, ModelConfig,
    SynonymTable,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = generate(&SyntheticSpec::default());
    let updated = train(
        &data.train,
        ModelConfig::default(),
        SynonymTable::default(),
        LemmaTable::default(),
    )?;
    let basic = updated.with_alpha(0.0)?;
    let spec = InjectionSpec::new(0.5, 7);
    let table = table2_experiment(
        &basic,
        &updated,
        &data.clean,
        &data.irrelevant,
        &spec,
        EvalMode::Lenient,
    )?;

    if std::env::args().any(|a| a == "--json") {
        println!("{}", serde_json::to_string_pretty(&table.to_json())?);
    } else {
        print!("{table}");
        let irrelevant = evaluate(&updated, &data.irrelevant, EvalMode::Lenient)?;
        let irrelevant_basic = evaluate(&basic, &data.irrelevant, EvalMode::Lenient)?;
        println!();
        println!(
            "rejection on irrelevant only: basic {:.4}, updated {:.4}",
            irrelevant_basic.rejection_rate, irrelevant.rejection_rate
        );
    }
    Ok(())
}
