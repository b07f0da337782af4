fn main() {
    std::process::exit(cbfv_seg::cli::run(std::env::args_os()));
}
