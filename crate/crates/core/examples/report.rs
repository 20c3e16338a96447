// Running a command from code and reading its JSON report.
use mvoptbl::cli::{run, Command, RunConfig};
use mvoptbl::families::FamilySpec;

fn main() {
    let config = RunConfig::new(Command::VerifyPearson).with_family(FamilySpec::charlier(2, 0, 1.0));
    let report = run(&config).unwrap();
    print!("{}", report.to_text());
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    println!(
        "schema {} with {} checks",
        json["schema"],
        json["checks"].as_array().unwrap().len()
    );
}
