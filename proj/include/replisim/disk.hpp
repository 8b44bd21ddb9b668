#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace replisim {

struct DiskEntry {
  std::int64_t mediaBytes = 0;
  std::int64_t thumbBytes = 0;
  std::string contentHash;
};

// Scratch volume for fetched assets. Owned by the host, not the service
// process: contents survive a crash and are rescanned at startup.
class LocalDisk {
 public:
  void put(const std::string& videoId, DiskEntry entry) {
    auto it = entries_.find(videoId);
    if (it != entries_.end()) usedBytes_ -= it->second.mediaBytes + it->second.thumbBytes;
    usedBytes_ += entry.mediaBytes + entry.thumbBytes;
    entries_[videoId] = std::move(entry);
  }

  void erase(const std::string& videoId) {
    auto it = entries_.find(videoId);
    if (it == entries_.end()) return;
    usedBytes_ -= it->second.mediaBytes + it->second.thumbBytes;
    entries_.erase(it);
  }

  std::optional<DiskEntry> get(const std::string& videoId) const {
    auto it = entries_.find(videoId);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  bool has(const std::string& videoId) const { return entries_.count(videoId) > 0; }
  std::int64_t usedBytes() const { return usedBytes_; }
  std::size_t fileCount() const { return entries_.size(); }
  const std::map<std::string, DiskEntry>& entries() const { return entries_; }

 private:
  std::map<std::string, DiskEntry> entries_;
  std::int64_t usedBytes_ = 0;
};

}  // namespace replisim
