//! Games whose metric comes from an external evaluator process.

use std::any::Any;
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;
use std::time::Duration;

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::{Game, Metric, MetricRange};
use crate::protocol::{EvaluatorClient, EvaluatorInfo};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

/// Kills the evaluator's whole process group and reaps the shell.
fn terminate(child: &mut Child) {
    #[cfg(unix)]
    {
        if let Ok(pid) = libc::pid_t::try_from(child.id()) {
            // SAFETY: plain syscall on the group created at spawn time
            unsafe {
                libc::kill(-pid, libc::SIGKILL);
            }
        }
    }
    let _ = child.kill();
    let _ = child.wait();
}

struct Session {
    client: EvaluatorClient,
    child: Child,
}

/// Spawns `sh -c <command>` and drives it over the evaluator protocol. One
/// process per game; requests are serialized.
pub struct ExternalGame {
    command: String,
    info: EvaluatorInfo,
    session: Mutex<Session>,
}

impl ExternalGame {
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self> {
        let mut cmd = Command::new("sh");
        cmd.arg("-c").arg(command);
        // own process group, so that terminating it also reaps anything the
        // shell started
        #[cfg(unix)]
        std::os::unix::process::CommandExt::process_group(&mut cmd, 0);
        let mut child = cmd
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::Evaluator {
                id: None,
                message: format!("failed to start {command:?}: {e}"),
            })?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut client = EvaluatorClient::new(stdout, stdin, timeout);
        let info = match client.handshake() {
            Ok(info) => info,
            Err(e) => {
                terminate(&mut child);
                return Err(e);
            }
        };
        if info.players == 0 {
            terminate(&mut child);
            return Err(Error::Evaluator {
                id: None,
                message: "evaluator declared zero players".into(),
            });
        }
        Ok(Self {
            command: command.to_string(),
            info,
            session: Mutex::new(Session { client, child }),
        })
    }

    pub fn into_game(self) -> Result<Game> {
        Game::new(self)
    }
}

impl Metric for ExternalGame {
    fn n_players(&self) -> usize {
        self.info.players
    }

    fn metric_range(&self) -> MetricRange {
        self.info.range
    }

    fn raw_metric(&self, coalition: &Coalition) -> Result<f64> {
        let mut session = self.session.lock().expect("evaluator session poisoned");
        let id = session.client.next_id();
        match session.client.evaluate(&coalition.to_bools()) {
            // an out-of-range answer is the evaluator's fault, so it is
            // reported against the request rather than as a plain contract error
            Ok(v) if !self.info.range.contains(v) => Err(Error::Evaluator {
                id: Some(id),
                message: format!(
                    "game-contract violation: metric {v} outside declared range [{}, {}]",
                    self.info.range.min, self.info.range.max
                ),
            }),
            Ok(v) => Ok(v),
            Err(Error::Evaluator { id, message }) => {
                // give a dying child a moment to be reaped so its status can be reported
                let mut status = None;
                for _ in 0..20 {
                    status = session.child.try_wait().ok().flatten();
                    if status.is_some() {
                        break;
                    }
                    std::thread::sleep(Duration::from_millis(10));
                }
                let message = match status {
                    Some(s) => format!("{message} (evaluator exited with {s})"),
                    None => message,
                };
                Err(Error::Evaluator { id, message })
            }
            Err(e) => Err(e),
        }
    }

    fn descriptor(&self) -> String {
        format!("external:{}", self.command)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

impl Drop for ExternalGame {
    fn drop(&mut self) {
        if let Ok(session) = self.session.get_mut() {
            let _ = session.client.close();
            for _ in 0..50 {
                if let Ok(Some(_)) = session.child.try_wait() {
                    return;
                }
                std::thread::sleep(Duration::from_millis(10));
            }
            terminate(&mut session.child);
        }
    }
}
