fn main() {
    std::process::exit(rqlab::run_cli());
}
