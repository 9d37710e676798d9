use std::collections::HashMap;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobState {
    Queued,
    Running,
    Succeeded,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub kind: String,
    pub state: JobState,
    pub graph_id: Option<String>,
    pub error: Option<String>,
    pub result: Option<serde_json::Value>,
    pub created_at: DateTime<Utc>,
    pub finished_at: Option<DateTime<Utc>>,
}

#[derive(Default)]
pub struct JobRegistry {
    jobs: Mutex<HashMap<String, Job>>,
}

impl JobRegistry {
    pub fn create(&self, kind: &str) -> Job {
        let job = Job {
            id: uuid::Uuid::new_v4().to_string(),
            kind: kind.to_string(),
            state: JobState::Queued,
            graph_id: None,
            error: None,
            result: None,
            created_at: Utc::now(),
            finished_at: None,
        };
        self.jobs.lock().expect("jobs lock").insert(job.id.clone(), job.clone());
        job
    }

    pub fn get(&self, id: &str) -> Option<Job> {
        self.jobs.lock().expect("jobs lock").get(id).cloned()
    }

    pub fn update(&self, id: &str, f: impl FnOnce(&mut Job)) {
        if let Some(job) = self.jobs.lock().expect("jobs lock").get_mut(id) {
            f(job);
        }
    }

    pub fn running(&self, id: &str) {
        self.update(id, |j| j.state = JobState::Running);
    }

    pub fn finish(&self, id: &str, outcome: Result<(String, serde_json::Value), String>) {
        self.update(id, |j| {
            j.finished_at = Some(Utc::now());
            match outcome {
                Ok((graph_id, result)) => {
                    j.state = JobState::Succeeded;
                    j.graph_id = Some(graph_id);
                    j.result = Some(result);
                }
                Err(e) => {
                    j.state = JobState::Failed;
                    j.error = Some(e);
                }
            }
        });
    }
}
