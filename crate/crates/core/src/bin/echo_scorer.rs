//! Echo scorer sidecar for protocol tests. Speaks the line protocol on
//! stdin/stdout, or HTTP with `--http` (the first stdout line is the base URL).

use std::io::{self, Write};

use clap::Parser;

use aks::scorer::echo::{serve_stdio, EchoConfig, EchoHttpServer};

#[derive(Debug, Parser)]
#[command(name = "aks-echo-scorer", version)]
struct Opts {
    #[arg(long)]
    http: bool,
    /// HTTP port; 0 picks a free one.
    #[arg(long, default_value_t = 0)]
    port: u16,
    #[arg(long, default_value_t = 10.0)]
    divisor: f64,
    #[arg(long, default_value_t = 0)]
    fail_every: usize,
    #[arg(long, default_value_t = 0)]
    hang_every: usize,
    #[arg(long, default_value_t = 0)]
    hang_ms: u64,
    #[arg(long)]
    fatal_at: Option<usize>,
    #[arg(long)]
    reverse: bool,
    #[arg(long)]
    drop_last: bool,
    #[arg(long)]
    nan_index: Option<usize>,
}

fn main() -> anyhow::Result<()> {
    let o = Opts::parse();
    let config = EchoConfig {
        divisor: o.divisor,
        fail_every: o.fail_every,
        hang_every: o.hang_every,
        hang_ms: o.hang_ms,
        fatal_at: o.fatal_at,
        reverse: o.reverse,
        drop_last: o.drop_last,
        nan_index: o.nan_index,
    };
    if o.http {
        let server = EchoHttpServer::start(config, &format!("127.0.0.1:{}", o.port))?;
        let mut out = io::stdout().lock();
        writeln!(out, "{}", server.url())?;
        out.flush()?;
        drop(out);
        server.join();
    } else {
        serve_stdio(config, io::stdin().lock(), io::stdout().lock())?;
    }
    Ok(())
}
