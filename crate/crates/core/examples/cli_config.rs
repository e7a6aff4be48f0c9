//! Drive the command-line front end from code with a TOML config.
use spectator::cli::main_with_args;

fn main() {
    let dir = std::env::temp_dir().join("spectator-example");
    std::fs::create_dir_all(&dir).unwrap();
    let config = dir.join("run.toml");
    std::fs::write(
        &config,
        "strategy = \"moaaar\"\nhorizon = 1.0\ngrid = 5\nkappa = 0.2\n",
    )
    .unwrap();
    let out = dir.join("coherence.csv");
    let code = main_with_args([
        "spectator".as_ref(),
        "coherence".as_ref(),
        "--config".as_ref(),
        config.as_os_str(),
        "--out".as_ref(),
        out.as_os_str(),
    ]);
    println!("exit code {code}");
    print!("{}", std::fs::read_to_string(&out).unwrap());
}
