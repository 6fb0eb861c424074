fn main() {
    std::process::exit(gsym::cli::run());
}
