#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace edgeprivsim {

/// Virtual time in seconds.
using SimTime = double;

enum class EventKind : std::uint8_t {
  RequestIssue,
  StageReady,
  StageGranted,
  StageComplete,
  TransferComplete,
  Custom,
};

std::string_view to_string(EventKind kind);

struct Event {
  SimTime time = 0.0;
  std::uint64_t sequence = 0;
  EventKind kind = EventKind::Custom;
  std::uint64_t subject = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

/// Raised when an event would be dispatched before the current clock.
class CausalityError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Discrete-event kernel. Events are dispatched in nondecreasing time order;
/// events sharing a timestamp leave in insertion order.
class EventQueue {
 public:
  using Handler = std::function<void(const Event&)>;

  /// Enqueues an event and returns it with its assigned sequence number.
  Event schedule(SimTime time, EventKind kind, std::uint64_t subject);

  /// Dispatches until no events remain. Handlers may schedule more events.
  /// Returns the clock, i.e. the time of the last dispatched event.
  SimTime run_until_empty(const Handler& handler);

  SimTime now() const { return clock_; }
  bool empty() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }

  void set_logging(bool enabled) { logging_ = enabled; }
  const std::vector<Event>& log() const { return log_; }

 private:
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      if (a.time != b.time) return a.time > b.time;
      return a.sequence > b.sequence;
    }
  };

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  SimTime clock_ = 0.0;
  std::uint64_t next_sequence_ = 0;
  bool logging_ = false;
  std::vector<Event> log_;
};

/// Named pseudo-random stream. The draw sequence is a pure function of
/// (seed, stream id); streams share no state.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::string_view stream_id);

  double uniform01();
  /// Uniform integer in [0, n). Requires n > 0.
  std::size_t uniform_index(std::size_t n);
  double normal(double mean, double stddev);

  std::mt19937_64& engine() { return engine_; }
  std::uint64_t seed() const { return seed_; }
  const std::string& id() const { return id_; }

 private:
  std::uint64_t seed_;
  std::string id_;
  std::mt19937_64 engine_;
};

}  // namespace edgeprivsim
