#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "replisim/metrics.hpp"
#include "replisim/scenario.hpp"
#include "replisim/service.hpp"
#include "replisim/world.hpp"

namespace replisim {

struct ScenarioResult {
  std::string name;
  // Engine counters plus derived world rows (sink.*, store.*, platform.*,
  // state.*), so expectation rules can target either.
  std::map<std::string, std::int64_t> counters;
  std::string metricsStream;
  std::string trace;
  std::vector<TraceEntry> traceEntries;
  std::string requestTrace;
  std::string writeLog;
  bool storeMatchesReplay = false;
  std::vector<std::string> expectFailures;
  bool ok = false;
};

// Runs one scenario end to end: seeds the world, schedules faults and
// overrides, starts the service, advances virtual time to cfg.durationMs,
// then evaluates the expectation rules against the final counters.
ScenarioResult runScenario(const ScenarioConfig& cfg);

// Trace notes for `event` with timestamp in [fromMs, toMs).
std::int64_t notesInWindow(const std::vector<TraceEntry>& trace,
                           const std::string& event, VirtualMs fromMs,
                           VirtualMs toMs);

// Queue cleanup ---------------------------------------------------------------

struct CleanupReport {
  int scanned = 0;
  int deleted = 0;
  int marked = 0;
  int requeued = 0;
  std::string backupPath;
};

// Operator sweep over queued rows. Rows whose source video does not exist
// are deleted; rows whose source is durably unavailable are marked with the
// matching terminal state; rows that only failed metadata transiently stay
// queued. Deleted rows are written to a JSON backup before the first
// destructive write; any backup failure aborts the pass with nothing
// touched (failBackup simulates an unwritable path).
CleanupReport runQueueCleanup(World& w, const std::string& backupPath,
                              bool failBackup = false);

// Signup ----------------------------------------------------------------------

struct SignupRequest {
  std::string channelId;
  std::string userId;
  std::optional<std::string> referrerChannelId;
  // Required in videoVerification mode: URL of an unlisted video whose
  // title declares the opt-in phrase.
  std::optional<std::string> verificationVideoUrl;
};

// Onboards a channel: eligibility thresholds (whitelist-exempt), referral
// caps, the configured authentication mode, membership creation, and
// durable rows. Re-joining an opted-out channel restores its pre-opt-out
// status and tier. Throws the specific error for each failed precondition.
ChannelRecord signupChannel(World& w, const SignupRequest& r);

// Crash sweep -----------------------------------------------------------------

struct SweepPoint {
  std::uint64_t crashAfterDispatch = 0;
  std::int64_t duplicates = 0;
  bool replayExact = false;
  std::int64_t replicated = 0;
};

struct SweepResult {
  std::uint64_t baselineDispatches = 0;
  std::int64_t baselineReplicated = 0;
  std::vector<SweepPoint> points;
  std::int64_t maxDuplicates = 0;
  bool allReplayExact = true;
  // Every crash point still converged to the baseline replication count.
  bool allConverged = true;
};

// Baseline run first, then one fresh run per dispatch index k in
// [1, baselineDispatches], crashing the service at exactly the k-th event
// boundary and restarting it after cfg.restartDelayMs.
SweepResult sweepCrashPoints(const ScenarioConfig& cfg);

// Incident replays ------------------------------------------------------------

struct IncidentCheck {
  std::string label;
  bool pass = false;
  std::string detail;
};

struct IncidentOutcome {
  std::string name;
  bool fixed = false;
  bool pass = false;
  std::vector<IncidentCheck> checks;
  ScenarioResult result;
};

std::vector<std::string> incidentNames();

// Replays a recorded production incident and asserts its signature numbers;
// `fixed` replays the same traffic with the remediation in place. Files the
// run produces (queue backups) land under workDir. Throws UnknownScenario
// for unrecognised names.
IncidentOutcome runIncident(const std::string& name, bool fixed,
                            const std::string& workDir = ".");

}  // namespace replisim
