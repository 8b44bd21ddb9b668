#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "replisim/clock.hpp"
#include "replisim/time.hpp"

namespace replisim {

struct Extrinsic {
  std::string videoId;
  std::uint64_t nonce = 0;
};

struct BatchReceipt {
  bool accepted = false;
  VirtualMs finalizedAtMs = 0;
  std::uint64_t blockHeight = 0;
  // (videoId, objectId) per extrinsic, in submission order.
  std::vector<std::pair<std::string, std::string>> created;
  std::string error;
};

// Block-paced append-only object ledger. A batch of up to maxBatch
// extrinsics finalizes atomically at the next block boundary strictly after
// submission; created objects are immutable and never deduplicated, so a
// video replicated twice simply owns two objects.
class ChainSim {
 public:
  ChainSim(SimClock& clock, const EventScope& worldScope,
           VirtualMs blockIntervalMs = secondsMs(6), int maxBatch = 10);

  std::uint64_t nextNonce() const { return nextNonce_; }
  VirtualMs blockIntervalMs() const { return blockIntervalMs_; }
  int maxBatch() const { return maxBatch_; }

  // Throws SinkUnreachable / BatchTooLarge / NonceCollision. The append at
  // finalization happens on the world scope: a submitter that dies before
  // the boundary does not take the batch with it. onReceipt fires at the
  // finalization instant (callers wrap it in their own scope).
  void submitBatch(const std::vector<Extrinsic>& extrinsics,
                   std::function<void(const BatchReceipt&)> onReceipt);

  // Throws SinkUnreachable while the sink is down.
  std::vector<std::string> queryObjects(const std::string& videoId) const;
  std::optional<VirtualMs> objectFinalizedAtMs(const std::string& objectId) const;

  void setUnreachable(bool down) { unreachable_ = down; }
  bool unreachable() const { return unreachable_; }
  // The next n submitted batches are rejected at finalization (all-or-nothing).
  void injectRejectBatches(int n) { rejectBatches_ += n; }

  std::int64_t totalObjects() const { return totalObjects_; }
  std::int64_t distinctVideos() const {
    return static_cast<std::int64_t>(objects_.size());
  }
  std::int64_t duplicateObjects() const {
    return totalObjects_ - distinctVideos();
  }
  std::uint64_t heightAt(VirtualMs t) const {
    return static_cast<std::uint64_t>(t / blockIntervalMs_);
  }

  std::int64_t createMembership() { return ++memberships_; }
  std::int64_t memberships() const { return memberships_; }

  // Objects of one video, insertion order.
  const std::map<std::string, std::vector<std::string>>& objectsByVideo() const {
    return objects_;
  }

 private:
  SimClock& clock_;
  const EventScope& worldScope_;
  VirtualMs blockIntervalMs_;
  int maxBatch_;
  bool unreachable_ = false;
  int rejectBatches_ = 0;
  std::uint64_t nextNonce_ = 0;
  std::uint64_t nextObjectId_ = 1;
  std::int64_t totalObjects_ = 0;
  std::int64_t memberships_ = 0;
  std::map<std::string, std::vector<std::string>> objects_;  // videoId -> objectIds
  std::map<std::string, VirtualMs> finalizedAt_;             // objectId -> instant
};

enum class AssetKind : std::uint8_t { Media, Thumbnail };
std::string_view toString(AssetKind k);

enum class UploadResult : std::uint8_t { Accepted, NotYetVisible, NodeDown };

// Storage node with eventually-consistent visibility: an object becomes
// acceptable only visibilityDelay after chain finalization, where the delay
// is a deterministic per-(node, object) draw from [visMin, visMax].
class StorageNodeSim {
 public:
  StorageNodeSim(std::string nodeId, SimClock& clock, const ChainSim& chain,
                 std::uint64_t seed, VirtualMs visMinMs, VirtualMs visMaxMs);

  const std::string& nodeId() const { return nodeId_; }
  void setActive(bool a) { active_ = a; }
  bool active() const { return active_; }

  UploadResult uploadAsset(const std::string& objectId, AssetKind kind,
                           std::int64_t bytes);
  bool isAccepted(const std::string& objectId, AssetKind kind) const;
  void forceAccept(const std::string& objectId, AssetKind kind);
  VirtualMs visibilityDelayMs(const std::string& objectId) const;

 private:
  std::string nodeId_;
  SimClock& clock_;
  const ChainSim& chain_;
  std::uint64_t seed_;
  VirtualMs visMinMs_;
  VirtualMs visMaxMs_;
  bool active_ = true;
  std::set<std::pair<std::string, std::uint8_t>> accepted_;
  std::int64_t acceptedBytes_ = 0;
};

// Chain plus its storage fleet.
struct SinkCluster {
  SinkCluster(SimClock& clock, const EventScope& worldScope,
              VirtualMs blockIntervalMs, int maxBatch, int nodeCount,
              std::uint64_t seed, VirtualMs visMinMs, VirtualMs visMaxMs);

  ChainSim chain;
  std::vector<std::unique_ptr<StorageNodeSim>> nodes;

  // Union acceptance across nodes: (media, thumbnail).
  std::pair<bool, bool> acceptance(const std::string& objectId) const;
  std::vector<StorageNodeSim*> activeNodes() const;
};

}  // namespace replisim
