use steinbounds_cli::{configure_threads, emit, main_with_args, output, Outcome};

fn main() {
    if let Err(msg) = configure_threads() {
        let payload = serde_json::json!({ "error": "usage", "message": msg });
        emit(&Outcome { stdout: String::new(), stderr: output::to_json(&payload), code: 3 });
        std::process::exit(3);
    }
    let o = main_with_args(std::env::args_os());
    emit(&o);
    std::process::exit(o.code);
}
