//! Drives the command-line front end in-process and reads its JSON report back.

use std::path::Path;

use maccretive::cli::{run, ReportFile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/data");
    for file in ["transport_alpha05.json", "transport_alpha2.json", "beam_m0.json", "transport_clamp.json"] {
        let path = data.join(file);
        let out = run(["maccretive", "verify", "--reproducible", path.to_str().unwrap()]);
        if out.exit == 2 {
            eprint!("{}", out.stderr);
            continue;
        }
        let report = ReportFile::parse(&out.stdout)?;
        let checks: Vec<String> = report.checks.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("{file:<24} exit {} {}  [{}]", out.exit, report.verdict, checks.join(", "));
    }
    Ok(())
}
