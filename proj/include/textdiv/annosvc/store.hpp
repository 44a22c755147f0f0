#pragma once

// Durable score storage: an append-only JSON-lines log plus a periodic
// snapshot. A score is acknowledged only after its log line is fsync'ed.
// On open, the snapshot is loaded and log entries newer than it are replayed;
// a torn final line (crash mid-write) is cut off.
//
// Log line:  {"seq":7,"annotator_id":"a1","pair_id":"m0-p0-1","category":3,"time":"...",
//             "overwrites":{"seq":4,"category":2}}      <- only on resubmission

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "textdiv/annotation.hpp"
#include "textdiv/error.hpp"

namespace textdiv::annosvc {

struct StoredScore {
  std::uint64_t seq = 0;
  std::string annotator_id;
  std::string pair_id;
  int category = 0;
  std::string time;
};

struct AuditEntry {
  std::uint64_t seq = 0;  // the overwriting write
  std::string annotator_id;
  std::string pair_id;
  std::uint64_t previous_seq = 0;
  int previous_category = 0;
  int category = 0;
  std::string time;
};

/// Immutable view of the store at one point in the log.
struct StoreState {
  std::uint64_t seq = 0;
  std::map<std::pair<std::string, std::string>, StoredScore> scores;  // (annotator, pair) -> latest
  std::vector<AuditEntry> audit;

  std::vector<ScoreEntry> entries() const {
    std::vector<ScoreEntry> out;
    for (const auto& [_, s] : scores) out.push_back({s.annotator_id, s.pair_id, s.category});
    return out;
  }
};

struct SubmitResult {
  std::uint64_t seq = 0;
  bool overwritten = false;
};

namespace detail {

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void fsync_path(const std::filesystem::path& p, int flags) {
  const int fd = ::open(p.c_str(), flags);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

inline nlohmann::json score_json(const StoredScore& s) {
  return {{"seq", s.seq}, {"annotator_id", s.annotator_id}, {"pair_id", s.pair_id}, {"category", s.category},
          {"time", s.time}};
}

inline nlohmann::json audit_json(const AuditEntry& a) {
  return {{"seq", a.seq},
          {"annotator_id", a.annotator_id},
          {"pair_id", a.pair_id},
          {"previous_seq", a.previous_seq},
          {"previous_category", a.previous_category},
          {"category", a.category},
          {"time", a.time}};
}

/// Applies one write to a state, recording an audit entry when it replaces an earlier score.
inline bool apply(StoreState& st, const StoredScore& s) {
  auto key = std::make_pair(s.annotator_id, s.pair_id);
  auto it = st.scores.find(key);
  bool overwritten = false;
  if (it != st.scores.end()) {
    st.audit.push_back({s.seq, s.annotator_id, s.pair_id, it->second.seq, it->second.category, s.category, s.time});
    overwritten = true;
  }
  st.scores[key] = s;
  st.seq = std::max(st.seq, s.seq);
  return overwritten;
}

}  // namespace detail

class ScoreStore {
 public:
  static constexpr const char* kLogName = "scores.log";
  static constexpr const char* kSnapshotName = "snapshot.json";

  /// snapshot_every: snapshot after this many writes (0 disables periodic snapshots).
  explicit ScoreStore(std::filesystem::path dir, std::size_t snapshot_every = 25)
      : dir_(std::move(dir)), snapshot_every_(snapshot_every) {
    std::filesystem::create_directories(dir_);
    auto st = std::make_shared<StoreState>();
    load_snapshot(*st);
    replay_log(*st);
    state_ = std::move(st);
    fd_ = ::open(log_path().c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(Errc::io, "cannot open score log " + log_path().string());
    detail::fsync_path(dir_, O_RDONLY | O_DIRECTORY);
  }

  ScoreStore(const ScoreStore&) = delete;
  ScoreStore& operator=(const ScoreStore&) = delete;
  ~ScoreStore() {
    if (fd_ >= 0) ::close(fd_);
  }

  std::filesystem::path log_path() const { return dir_ / kLogName; }
  std::filesystem::path snapshot_path() const { return dir_ / kSnapshotName; }

  /// Current state. Readers keep the returned pointer; writers never mutate it.
  std::shared_ptr<const StoreState> state() const {
    std::lock_guard lock(state_mutex_);
    return state_;
  }

  /// Persists a score and returns once it is on disk. Writes are serialized.
  SubmitResult submit(const std::string& annotator_id, const std::string& pair_id, int category) {
    std::lock_guard writer(write_mutex_);
    auto next = std::make_shared<StoreState>(*state());
    StoredScore s{next->seq + 1, annotator_id, pair_id, category, detail::utc_now()};
    auto line = detail::score_json(s);
    if (auto it = next->scores.find({annotator_id, pair_id}); it != next->scores.end())
      line["overwrites"] = {{"seq", it->second.seq}, {"category", it->second.category}};
    append_line(line.dump() + "\n");
    const bool overwritten = detail::apply(*next, s);
    {
      std::lock_guard lock(state_mutex_);
      state_ = next;
    }
    if (snapshot_every_ && ++since_snapshot_ >= snapshot_every_) write_snapshot(*next);
    return {s.seq, overwritten};
  }

  void snapshot() {
    std::lock_guard writer(write_mutex_);
    write_snapshot(*state());
  }

 private:
  void append_line(const std::string& line) {
    std::size_t off = 0;
    while (off < line.size()) {
      const auto w = ::write(fd_, line.data() + off, line.size() - off);
      if (w < 0) {
        if (errno == EINTR) continue;
        throw Error(Errc::io, "score log write failed");
      }
      off += static_cast<std::size_t>(w);
    }
    if (::fsync(fd_) != 0) throw Error(Errc::io, "score log fsync failed");
  }

  void write_snapshot(const StoreState& st) {
    nlohmann::json scores = nlohmann::json::array(), audit = nlohmann::json::array();
    for (const auto& [_, s] : st.scores) scores.push_back(detail::score_json(s));
    for (const auto& a : st.audit) audit.push_back(detail::audit_json(a));
    const auto tmp = dir_ / (std::string(kSnapshotName) + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out << nlohmann::json{{"seq", st.seq}, {"scores", scores}, {"audit", audit}}.dump() << '\n';
      if (!out) throw Error(Errc::io, "cannot write snapshot");
    }
    detail::fsync_path(tmp, O_RDONLY);
    std::filesystem::rename(tmp, snapshot_path());
    detail::fsync_path(dir_, O_RDONLY | O_DIRECTORY);
    since_snapshot_ = 0;
  }

  void load_snapshot(StoreState& st) {
    if (!std::filesystem::exists(snapshot_path())) return;
    std::ifstream in(snapshot_path(), std::ios::binary);
    try {
      const auto j = nlohmann::json::parse(in);
      for (const auto& s : j.at("scores")) {
        StoredScore v{s.at("seq").get<std::uint64_t>(), s.at("annotator_id").get<std::string>(),
                      s.at("pair_id").get<std::string>(), s.at("category").get<int>(), s.value("time", "")};
        st.scores[{v.annotator_id, v.pair_id}] = v;
      }
      for (const auto& a : j.at("audit"))
        st.audit.push_back({a.at("seq").get<std::uint64_t>(), a.at("annotator_id").get<std::string>(),
                            a.at("pair_id").get<std::string>(), a.at("previous_seq").get<std::uint64_t>(),
                            a.at("previous_category").get<int>(), a.at("category").get<int>(), a.value("time", "")});
      st.seq = j.at("seq").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      // The snapshot is only an accelerator; the log alone is authoritative.
      st = StoreState{};
    }
  }

  void replay_log(StoreState& st) {
    if (!std::filesystem::exists(log_path())) return;
    std::ifstream in(log_path(), std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::size_t pos = 0, good_end = 0, line_no = 0;
    while (pos < content.size()) {
      ++line_no;
      const auto eol = content.find('\n', pos);
      if (eol == std::string::npos) break;  // torn tail: never acknowledged
      const auto line = content.substr(pos, eol - pos);
      pos = eol + 1;
      if (line.empty()) {
        good_end = pos;
        continue;
      }
      try {
        const auto j = nlohmann::json::parse(line);
        StoredScore s{j.at("seq").get<std::uint64_t>(), j.at("annotator_id").get<std::string>(),
                      j.at("pair_id").get<std::string>(), j.at("category").get<int>(), j.value("time", "")};
        if (s.seq > st.seq) detail::apply(st, s);
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::format, "score log line " + std::to_string(line_no) + " is corrupt: " + e.what());
      }
      good_end = pos;
    }
    if (good_end < content.size()) std::filesystem::resize_file(log_path(), good_end);
  }

  std::filesystem::path dir_;
  std::size_t snapshot_every_;
  std::size_t since_snapshot_ = 0;
  int fd_ = -1;
  std::mutex write_mutex_;
  mutable std::mutex state_mutex_;
  std::shared_ptr<const StoreState> state_;
};

}  // namespace textdiv::annosvc
