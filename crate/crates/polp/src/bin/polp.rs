fn main() {
    // Die quietly when stdout closes early (`polp run ... | head`) like
    // other line-oriented tools, instead of panicking on a failed write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(polp::cli::run_main());
}
