//! HTTP client for embeddings APIs speaking the de-facto wire shape:
//! `POST <endpoint>/embeddings` with `{"model": ..., "input": [...]}` and a
//! bearer token, answered by `{"data": [{"index": i, "embedding": [...]}]}`.
//! Any compatible server, hosted or local, works.

use serde::{Deserialize, Serialize};

use super::{EmbedError, EmbeddingProvider, EmbeddingVector};

#[derive(Serialize)]
struct EmbeddingsRequest<'a> {
    model: &'a str,
    input: &'a [&'a str],
}

#[derive(Deserialize)]
struct EmbeddingsResponse {
    data: Vec<EmbeddingItem>,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    index: usize,
    embedding: Vec<f64>,
}

pub struct RemoteProvider {
    endpoint: String,
    model: String,
    api_key_env: String,
    client: reqwest::blocking::Client,
}

impl RemoteProvider {
    pub fn new(endpoint: String, model: String, api_key_env: String) -> Self {
        RemoteProvider {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            model,
            api_key_env,
            client: reqwest::blocking::Client::new(),
        }
    }

    fn api_key(&self) -> Result<String, EmbedError> {
        std::env::var(&self.api_key_env)
            .map_err(|_| EmbedError::MissingApiKey(self.api_key_env.clone()))
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn model_id(&self) -> String {
        self.model.clone()
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let key = self.api_key()?;
        let url = format!("{}/embeddings", self.endpoint);
        let response = self
            .client
            .post(&url)
            .bearer_auth(key)
            .json(&EmbeddingsRequest {
                model: &self.model,
                input: texts,
            })
            .send()
            .map_err(|e| EmbedError::Provider {
                message: format!("transport: {e}"),
                unresolved: Vec::new(),
            })?;

        let status = response.status();
        if !status.is_success() {
            let body = response.text().unwrap_or_default();
            return Err(EmbedError::Provider {
                message: format!(
                    "http {status}: {}",
                    body.chars().take(200).collect::<String>()
                ),
                unresolved: Vec::new(),
            });
        }

        let parsed: EmbeddingsResponse = response.json().map_err(|e| {
            EmbedError::Protocol(format!("response body is not an embeddings object: {e}"))
        })?;
        if parsed.data.len() != texts.len() {
            return Err(EmbedError::Protocol(format!(
                "expected {} embeddings, got {}",
                texts.len(),
                parsed.data.len()
            )));
        }

        let mut slots: Vec<Option<Vec<f64>>> = vec![None; texts.len()];
        for item in parsed.data {
            let slot = slots.get_mut(item.index).ok_or_else(|| {
                EmbedError::Protocol(format!("index {} out of range", item.index))
            })?;
            if slot.is_some() {
                return Err(EmbedError::Protocol(format!(
                    "duplicate embedding index {}",
                    item.index
                )));
            }
            *slot = Some(item.embedding);
        }
        slots
            .into_iter()
            .map(|slot| {
                let values =
                    slot.ok_or_else(|| EmbedError::Protocol("missing embedding index".into()))?;
                EmbeddingVector::raw(values)
            })
            .collect()
    }
}
