fn main() {
    let exit = tpso::cli::main_with(std::env::args_os());
    std::process::exit(exit as i32);
}
