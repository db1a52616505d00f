//! Tabulate the default element response: phase and amplitude against bias.

use ris_thz::ris::ElementResponseModel;

fn main() -> ris_thz::Result<()> {
    let model = ElementResponseModel::default();
    println!("voltage_v,phase_deg,amplitude");
    for i in 0..=14 {
        let v = 2.5 * f64::from(i);
        let (amp, phase) = model.phase_of_voltage(v)?;
        println!("{v:.1},{:.2},{amp:.4}", phase.to_degrees());
    }
    println!("span {:.1} deg", model.phase_span().to_degrees());
    Ok(())
}
