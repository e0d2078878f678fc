//! Blocking HTTP client for the workbench service. Thin by design: request
//! and response types come from the core wire module; this crate only adds
//! transport and error mapping.

use sparsebench_core::api::{
    AnalyzeRequest, ErrorBody, ErrorKind, MonteCarloRequest, MonteCarloResponse, OracleRequest,
    OracleResponse, SolveRequest, SolveResponse,
};
use sparsebench_core::re::ReAnalysisReport;

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("transport: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("service rejected the request ({status}): {message}")]
    Api {
        status: u16,
        kind: ErrorKind,
        message: String,
    },
}

impl ClientError {
    /// The error taxonomy of the service, when one was reported.
    pub fn kind(&self) -> Option<ErrorKind> {
        match self {
            ClientError::Api { kind, .. } => Some(*kind),
            ClientError::Transport(_) => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

pub struct Client {
    base: String,
    http: reqwest::blocking::Client,
}

impl Client {
    pub fn new(base_url: impl Into<String>) -> Self {
        let mut base = base_url.into();
        while base.ends_with('/') {
            base.pop();
        }
        Client {
            base,
            http: reqwest::blocking::Client::new(),
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    fn post<Req: serde::Serialize, Resp: serde::de::DeserializeOwned>(
        &self,
        path: &str,
        request: &Req,
    ) -> Result<Resp> {
        let response = self
            .http
            .post(format!("{}{path}", self.base))
            .json(request)
            .send()?;
        let status = response.status();
        if status.is_success() {
            return Ok(response.json()?);
        }
        let message = response.text().unwrap_or_default();
        let (kind, message) = match serde_json::from_str::<ErrorBody>(&message) {
            Ok(body) => (body.kind, body.error),
            Err(_) => (ErrorKind::Internal, message),
        };
        Err(ClientError::Api {
            status: status.as_u16(),
            kind,
            message,
        })
    }

    pub fn health(&self) -> Result<()> {
        let response = self.http.get(format!("{}/health", self.base)).send()?;
        response.error_for_status()?;
        Ok(())
    }

    pub fn solve(&self, request: &SolveRequest) -> Result<SolveResponse> {
        self.post("/v1/solve", request)
    }

    pub fn analyze(&self, request: &AnalyzeRequest) -> Result<ReAnalysisReport> {
        self.post("/v1/analyze", request)
    }

    pub fn oracle(&self, request: &OracleRequest) -> Result<OracleResponse> {
        self.post("/v1/oracle", request)
    }

    pub fn montecarlo(&self, request: &MonteCarloRequest) -> Result<MonteCarloResponse> {
        self.post("/v1/montecarlo", request)
    }
}
