#include "replisim/jobqueue.hpp"

#include "replisim/errors.hpp"

namespace replisim {

std::string_view toString(Stage s) {
  switch (s) {
    case Stage::Download: return "download";
    case Stage::Metadata: return "metadata";
    case Stage::Creation: return "creation";
    case Stage::Upload: return "upload";
  }
  return "?";
}

std::uint64_t JobQueue::enqueueFlow(const std::string& videoId,
                                    const std::string& channelId,
                                    std::int64_t priority, Stage firstStage,
                                    Stage lastStage) {
  if (hasLiveFlow(videoId)) {
    throw SimError("flow already live for video " + videoId);
  }
  if (static_cast<int>(lastStage) < static_cast<int>(firstStage))
    throw SimError("flow stage range inverted");
  const std::uint64_t seq = nextSeq_++;
  std::optional<std::uint64_t> childId;
  std::uint64_t rootId = 0;
  for (int si = static_cast<int>(firstStage); si <= static_cast<int>(lastStage);
       ++si) {
    FlowJob j;
    j.id = nextId_++;
    j.videoId = videoId;
    j.channelId = channelId;
    j.stage = static_cast<Stage>(si);
    j.priority = priority;
    j.enqueueSeq = seq;
    j.childId = childId;
    if (childId) jobs_.at(*childId).parentId = j.id;
    if (si == static_cast<int>(firstStage)) rootId = j.id;
    ++queued_[idx(j.stage)];
    const bool ready = !childId.has_value();
    jobs_.emplace(j.id, j);
    if (ready) insertReady(jobs_.at(j.id));
    byVideo_[videoId].push_back(j.id);
    byChannel_[channelId].insert(j.id);
    childId = j.id;
  }
  return rootId;
}

bool JobQueue::hasLiveFlow(const std::string& videoId) const {
  auto it = byVideo_.find(videoId);
  if (it == byVideo_.end()) return false;
  for (std::uint64_t id : it->second) {
    const auto& j = jobs_.at(id);
    if (j.status == JobStatus::Queued || j.status == JobStatus::Active) {
      return true;
    }
  }
  return false;
}

std::size_t JobQueue::liveFlowCount(const std::string& channelId) const {
  auto it = byChannel_.find(channelId);
  if (it == byChannel_.end()) return 0;
  std::set<std::string> live;
  for (std::uint64_t id : it->second) {
    const auto& j = jobs_.at(id);
    if (j.status == JobStatus::Queued || j.status == JobStatus::Active)
      live.insert(j.videoId);
  }
  return live.size();
}

void JobQueue::insertReady(const FlowJob& j) {
  ready_[idx(j.stage)].insert({j.priority, j.enqueueSeq, j.id});
}

void JobQueue::eraseReady(const FlowJob& j) {
  ready_[idx(j.stage)].erase({j.priority, j.enqueueSeq, j.id});
}

std::optional<std::uint64_t> JobQueue::takeNextReady(Stage s) {
  auto& set = ready_[idx(s)];
  if (set.empty()) return std::nullopt;
  const auto key = *set.begin();
  set.erase(set.begin());
  FlowJob& j = jobs_.at(std::get<2>(key));
  j.status = JobStatus::Active;
  --queued_[idx(s)];
  ++active_[idx(s)];
  return j.id;
}

const FlowJob* JobQueue::job(std::uint64_t id) const {
  auto it = jobs_.find(id);
  return it == jobs_.end() ? nullptr : &it->second;
}

void JobQueue::complete(std::uint64_t id) {
  FlowJob& j = jobs_.at(id);
  if (j.status != JobStatus::Active) {
    throw SimError("complete on non-active job");
  }
  j.status = JobStatus::Completed;
  --active_[idx(j.stage)];
  ++completed_[idx(j.stage)];
  if (j.parentId) {
    FlowJob& parent = jobs_.at(*j.parentId);
    if (parent.status == JobStatus::Queued) insertReady(parent);
  }
}

void JobQueue::markFailed(FlowJob& j) {
  if (j.status == JobStatus::Queued) {
    eraseReady(j);  // no-op when the job was never ready
    --queued_[idx(j.stage)];
  } else if (j.status == JobStatus::Active) {
    --active_[idx(j.stage)];
  } else {
    return;
  }
  j.status = JobStatus::Failed;
  ++failed_[idx(j.stage)];
}

void JobQueue::fail(std::uint64_t id) {
  FlowJob* j = &jobs_.at(id);
  markFailed(*j);
  // failParentOnFailure: every ancestor dies with the child.
  while (j->parentId && j->failParentOnFailure) {
    j = &jobs_.at(*j->parentId);
    markFailed(*j);
  }
}

void JobQueue::requeue(std::uint64_t id) {
  FlowJob& j = jobs_.at(id);
  if (j.status != JobStatus::Active) {
    throw SimError("requeue on non-active job");
  }
  j.status = JobStatus::Queued;
  --active_[idx(j.stage)];
  ++queued_[idx(j.stage)];
  ++retried_[idx(j.stage)];
  insertReady(j);
}

void JobQueue::parkActive(std::uint64_t id) {
  FlowJob& j = jobs_.at(id);
  if (j.status != JobStatus::Active) {
    throw SimError("parkActive on non-active job");
  }
  j.status = JobStatus::Queued;
  j.parked = true;
  --active_[idx(j.stage)];
  ++queued_[idx(j.stage)];
  ++retried_[idx(j.stage)];
}

void JobQueue::resumeParked(std::uint64_t id) {
  FlowJob& j = jobs_.at(id);
  if (j.status != JobStatus::Queued || !j.parked) {
    throw SimError("resumeParked on non-parked job");
  }
  j.parked = false;
  j.enqueueSeq = nextSeq_++;
  insertReady(j);
}

void JobQueue::bumpAttempts(std::uint64_t id) { ++jobs_.at(id).attempts; }

int JobQueue::updateQueuedPriorities(
    const std::string& channelId,
    const std::function<std::int64_t(const std::string&)>& fn) {
  auto it = byChannel_.find(channelId);
  if (it == byChannel_.end()) return 0;
  int updated = 0;
  for (std::uint64_t id : it->second) {
    FlowJob& j = jobs_.at(id);
    if (j.status != JobStatus::Queued) continue;
    const std::int64_t p = fn(j.videoId);
    const bool wasReady =
        ready_[idx(j.stage)].count({j.priority, j.enqueueSeq, j.id}) > 0;
    if (wasReady) eraseReady(j);
    j.priority = p;
    if (wasReady) insertReady(j);
    ++updated;
  }
  return updated;
}

std::size_t JobQueue::readyCount(Stage s) const { return ready_[idx(s)].size(); }

std::size_t JobQueue::flush() {
  std::size_t live = 0;
  for (const auto& [id, j] : jobs_) {
    if (j.status == JobStatus::Queued || j.status == JobStatus::Active) ++live;
  }
  jobs_.clear();
  for (auto& r : ready_) r.clear();
  byVideo_.clear();
  byChannel_.clear();
  queued_.fill(0);
  active_.fill(0);
  return live;
}

}  // namespace replisim
