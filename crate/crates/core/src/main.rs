fn main() {
    qimg::cli::main();
}
