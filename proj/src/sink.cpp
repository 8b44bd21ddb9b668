#include "replisim/sink.hpp"

#include "replisim/errors.hpp"
#include "replisim/rng.hpp"

namespace replisim {

ChainSim::ChainSim(SimClock& clock, const EventScope& worldScope,
                   VirtualMs blockIntervalMs, int maxBatch)
    : clock_(clock),
      worldScope_(worldScope),
      blockIntervalMs_(blockIntervalMs),
      maxBatch_(maxBatch) {}

void ChainSim::submitBatch(const std::vector<Extrinsic>& extrinsics,
                           std::function<void(const BatchReceipt&)> onReceipt) {
  if (unreachable_) throw SinkUnreachable("chain unreachable");
  if (extrinsics.empty()) throw BatchTooLarge("empty batch");
  if (static_cast<int>(extrinsics.size()) > maxBatch_)
    throw BatchTooLarge("batch of " + std::to_string(extrinsics.size()) +
                        " exceeds " + std::to_string(maxBatch_));
  for (std::size_t i = 0; i < extrinsics.size(); ++i) {
    const std::uint64_t want = nextNonce_ + i;
    if (extrinsics[i].nonce != want)
      throw NonceCollision("extrinsic " + std::to_string(i) + " carries nonce " +
                           std::to_string(extrinsics[i].nonce) + ", expected " +
                           std::to_string(want));
  }
  // Nonces are consumed at submission so overlapping batches cannot reuse them.
  nextNonce_ += extrinsics.size();

  const bool reject = rejectBatches_ > 0;
  if (reject) --rejectBatches_;

  const VirtualMs now = clock_.now();
  const VirtualMs boundary = (now / blockIntervalMs_ + 1) * blockIntervalMs_;
  auto batch = extrinsics;
  clock_.scheduleAt(boundary, worldScope_.wrap([this, batch, reject,
                                                cb = std::move(onReceipt),
                                                boundary] {
    BatchReceipt receipt;
    receipt.finalizedAtMs = boundary;
    receipt.blockHeight = heightAt(boundary);
    if (reject) {
      receipt.accepted = false;
      receipt.error = "BatchRejected";
    } else {
      receipt.accepted = true;
      for (const auto& ex : batch) {
        std::string objectId = "obj-" + std::to_string(nextObjectId_++);
        objects_[ex.videoId].push_back(objectId);
        finalizedAt_[objectId] = boundary;
        ++totalObjects_;
        receipt.created.emplace_back(ex.videoId, objectId);
      }
    }
    if (cb) cb(receipt);
  }));
}

std::vector<std::string> ChainSim::queryObjects(const std::string& videoId) const {
  if (unreachable_) throw SinkUnreachable("chain unreachable");
  auto it = objects_.find(videoId);
  if (it == objects_.end()) return {};
  return it->second;
}

std::optional<VirtualMs> ChainSim::objectFinalizedAtMs(
    const std::string& objectId) const {
  auto it = finalizedAt_.find(objectId);
  if (it == finalizedAt_.end()) return std::nullopt;
  return it->second;
}

std::string_view toString(AssetKind k) {
  return k == AssetKind::Media ? "media" : "thumbnail";
}

StorageNodeSim::StorageNodeSim(std::string nodeId, SimClock& clock,
                               const ChainSim& chain, std::uint64_t seed,
                               VirtualMs visMinMs, VirtualMs visMaxMs)
    : nodeId_(std::move(nodeId)),
      clock_(clock),
      chain_(chain),
      seed_(seed),
      visMinMs_(visMinMs),
      visMaxMs_(visMaxMs) {}

VirtualMs StorageNodeSim::visibilityDelayMs(const std::string& objectId) const {
  // Pure function of (node, object, seed): replays and retries see the same
  // propagation delay regardless of draw order elsewhere.
  const std::uint64_t h =
      splitmix64(seed_ ^ fnv1a64(nodeId_ + "|" + objectId));
  const std::uint64_t span =
      static_cast<std::uint64_t>(visMaxMs_ - visMinMs_) + 1;
  return visMinMs_ + static_cast<VirtualMs>(h % span);
}

UploadResult StorageNodeSim::uploadAsset(const std::string& objectId,
                                         AssetKind kind, std::int64_t bytes) {
  if (!active_) return UploadResult::NodeDown;
  auto finalized = chain_.objectFinalizedAtMs(objectId);
  if (!finalized) return UploadResult::NotYetVisible;
  if (clock_.now() < *finalized + visibilityDelayMs(objectId))
    return UploadResult::NotYetVisible;
  auto key = std::make_pair(objectId, static_cast<std::uint8_t>(kind));
  if (accepted_.insert(key).second) acceptedBytes_ += bytes;
  return UploadResult::Accepted;
}

bool StorageNodeSim::isAccepted(const std::string& objectId,
                                AssetKind kind) const {
  return accepted_.count({objectId, static_cast<std::uint8_t>(kind)}) > 0;
}

void StorageNodeSim::forceAccept(const std::string& objectId, AssetKind kind) {
  accepted_.insert({objectId, static_cast<std::uint8_t>(kind)});
}

SinkCluster::SinkCluster(SimClock& clock, const EventScope& worldScope,
                         VirtualMs blockIntervalMs, int maxBatch, int nodeCount,
                         std::uint64_t seed, VirtualMs visMinMs,
                         VirtualMs visMaxMs)
    : chain(clock, worldScope, blockIntervalMs, maxBatch) {
  for (int i = 0; i < nodeCount; ++i) {
    nodes.push_back(std::make_unique<StorageNodeSim>(
        "node-" + std::to_string(i + 1), clock, chain, seed, visMinMs,
        visMaxMs));
  }
}

std::pair<bool, bool> SinkCluster::acceptance(const std::string& objectId) const {
  bool media = false;
  bool thumb = false;
  for (const auto& n : nodes) {
    media = media || n->isAccepted(objectId, AssetKind::Media);
    thumb = thumb || n->isAccepted(objectId, AssetKind::Thumbnail);
  }
  return {media, thumb};
}

std::vector<StorageNodeSim*> SinkCluster::activeNodes() const {
  std::vector<StorageNodeSim*> out;
  for (const auto& n : nodes)
    if (n->active()) out.push_back(n.get());
  return out;
}

}  // namespace replisim
