use clap::Parser;

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = drni::commands::Cli::parse();
    let stdout = std::io::stdout();
    drni::commands::run(cli, &mut stdout.lock())
}
