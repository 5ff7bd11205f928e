// Fit a two-class permanental classifier on the chequerboard and score the
// test grid, saving the model as JSON along the way.

use permclass::classifier::{fit, Method, ModelParams, SavedModel};
use permclass::datasets::{gen_chequerboard, gen_grid_testset};
use permclass::kernel::Kernel;

fn main() -> permclass::Result<()> {
    let train = gen_chequerboard(10, 7);
    let test = gen_grid_testset(30)?;
    let params = ModelParams::new(Kernel::exponential(0.5), 1.0, Method::default())?;
    let model = fit(&train, &params)?;

    let rows = model.predict_many(&test.points)?;
    let errors = rows.iter().zip(&test.labels).filter(|(r, &y)| r.label != y).count();
    println!("grid errors: {errors}/{}", test.len());

    let row = model.predict(&[0.5, 0.5])?;
    println!("p(t = (0.5, 0.5)) = {:?}, label {}", row.probs, train.class_names[row.label]);

    let json = serde_json::to_string(&model.to_saved())?;
    let again = serde_json::from_str::<SavedModel>(&json)?.refit()?;
    assert_eq!(again.predict(&[0.5, 0.5])?, row);
    println!("saved model is {} bytes", json.len());
    Ok(())
}
