use std::net::SocketAddr;

fn parse_bind() -> SocketAddr {
    let mut args = std::env::args().skip(1);
    let mut bind = "127.0.0.1:8787".to_string();
    while let Some(arg) = args.next() {
        match arg.as_str() {
            "--bind" => {
                bind = args.next().unwrap_or_else(|| {
                    eprintln!("--bind needs an address");
                    std::process::exit(2);
                });
            }
            "--help" | "-h" => {
                println!("sparsebench-server [--bind HOST:PORT]");
                std::process::exit(0);
            }
            other => {
                eprintln!("unknown argument: {other}");
                std::process::exit(2);
            }
        }
    }
    bind.parse().unwrap_or_else(|e| {
        eprintln!("invalid bind address {bind}: {e}");
        std::process::exit(2);
    })
}

#[tokio::main]
async fn main() {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| "info".into()),
        )
        .init();
    let addr = parse_bind();
    let listener = tokio::net::TcpListener::bind(addr).await.unwrap_or_else(|e| {
        eprintln!("cannot bind {addr}: {e}");
        std::process::exit(4);
    });
    tracing::info!("listening on {}", listener.local_addr().unwrap());
    if let Err(e) = sparsebench_service::serve(listener).await {
        eprintln!("server error: {e}");
        std::process::exit(4);
    }
}
