fn main() {
    std::process::exit(rua::cli::main_from_env());
}
