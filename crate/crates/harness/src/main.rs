fn main() {
    std::process::exit(sngm_harness::cli_main(std::env::args_os()));
}
