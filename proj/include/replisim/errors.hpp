#pragma once

#include <stdexcept>
#include <string>

namespace replisim {

// Base for every failure the simulation raises deliberately. Conditions that
// are ordinary protocol responses (bot challenge, not-yet-visible, quota
// rejection) are modeled as result values, not exceptions.
struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Domain ------------------------------------------------------------------
struct IllegalTransition : SimError {
  using SimError::SimError;
};

// Scheduler / queue --------------------------------------------------------
struct TierCapExceeded : SimError {
  using SimError::SimError;
};
struct ChannelIneligible : SimError {
  using SimError::SimError;
};
struct UnknownChannel : SimError {
  using SimError::SimError;
};
struct UnknownVideo : SimError {
  using SimError::SimError;
};

// Durable store ------------------------------------------------------------
struct ThroughputExceeded : SimError {
  using SimError::SimError;
};
struct PendingLimitExceeded : SimError {
  using SimError::SimError;
};
struct BackupWriteFailure : SimError {
  using SimError::SimError;
};

// Proxy layer ---------------------------------------------------------------
struct UnknownEndpoint : SimError {
  using SimError::SimError;
};

// Sink ----------------------------------------------------------------------
struct NonceCollision : SimError {
  using SimError::SimError;
};
struct SinkUnreachable : SimError {
  using SimError::SimError;
};
struct BatchTooLarge : SimError {
  using SimError::SimError;
};

// Harness / signup -----------------------------------------------------------
struct ConfigInvalid : SimError {
  using SimError::SimError;
};
struct UnknownScenario : SimError {
  using SimError::SimError;
};
struct RequirementsNotMet : SimError {
  // threshold: which onboarding requirement failed ("subscribers",
  // "videos", "ageHours").
  RequirementsNotMet(const std::string& threshold, const std::string& what)
      : SimError(what), threshold(threshold) {}
  std::string threshold;
};
struct AlreadyConnected : SimError {
  using SimError::SimError;
};
struct SelfReferral : SimError {
  using SimError::SimError;
};
struct VerificationVideoInvalid : SimError {
  using SimError::SimError;
};
struct SignupsDisabled : SimError {
  using SimError::SimError;
};

}  // namespace replisim
