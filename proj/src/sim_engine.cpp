#include "edgeprivsim/sim_engine.hpp"

#include <cmath>

#include <fmt/core.h>

namespace edgeprivsim {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::RequestIssue: return "request-issue";
    case EventKind::StageReady: return "stage-ready";
    case EventKind::StageGranted: return "stage-granted";
    case EventKind::StageComplete: return "stage-complete";
    case EventKind::TransferComplete: return "transfer-complete";
    case EventKind::Custom: return "custom";
  }
  return "unknown";
}

Event EventQueue::schedule(SimTime time, EventKind kind, std::uint64_t subject) {
  if (std::isnan(time) || time < clock_) {
    throw CausalityError(fmt::format("event at t={} precedes clock t={}", time, clock_));
  }
  Event ev{time, next_sequence_++, kind, subject};
  queue_.push(ev);
  return ev;
}

SimTime EventQueue::run_until_empty(const Handler& handler) {
  while (!queue_.empty()) {
    const Event ev = queue_.top();
    queue_.pop();
    clock_ = ev.time;
    if (logging_) log_.push_back(ev);
    handler(ev);
  }
  return clock_;
}

namespace {

// FNV-1a, 64-bit.
std::uint64_t hash_label(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::mt19937_64 make_engine(std::uint64_t seed, std::string_view id) {
  const std::uint64_t h = hash_label(id);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view stream_id)
    : seed_(seed), id_(stream_id), engine_(make_engine(seed, stream_id)) {}

double RngStream::uniform01() {
  // 53 random mantissa bits, result in [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::size_t RngStream::uniform_index(std::size_t n) {
  if (n == 0) throw std::invalid_argument("uniform_index over empty range");
  std::uniform_int_distribution<std::size_t> dist(0, n - 1);
  return dist(engine_);
}

double RngStream::normal(double mean, double stddev) {
  if (stddev == 0.0) return mean;
  std::normal_distribution<double> dist(mean, stddev);
  return dist(engine_);
}

}  // namespace edgeprivsim
