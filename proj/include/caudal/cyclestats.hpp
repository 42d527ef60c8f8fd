#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "caudal/errors.hpp"
#include "caudal/kinematics.hpp"

namespace caudal {

/// One force-sensor sample.
struct ForceSample {
  double t_s = 0.0;
  double forward_N = 0.0;
  double side_N = 0.0;
};

/// Per-cycle averaged force, in both cartesian and polar form.
struct CycleAverage {
  double mean_forward_N = 0.0;
  double mean_side_N = 0.0;
  double magnitude_N = 0.0;  // sqrt(mean_forward^2 + mean_side^2)
  double angle_deg = 0.0;    // atan2(mean_side, mean_forward)
  std::uint64_t cycle_index = 0;
  std::uint64_t samples_seen = 0;
};

/// Rolling mean of the last flapping cycle of force samples.
///
/// Exactly one producer thread calls push(); any number of threads may call
/// latest() concurrently. latest() never blocks the producer: the snapshot is
/// published through a sequence-counter protocol and readers retry on a torn
/// read. The exposed average always covers the last min(samples_seen, n_cycle)
/// samples, summed oldest to newest.
class CycleAverager {
 public:
  CycleAverager(double sample_rate_hz, double flap_frequency_hz) {
    if (sample_rate_hz <= 0.0 || flap_frequency_hz <= 0.0)
      throw config_error("cycle averager rates must be positive");
    const auto n = std::llround(sample_rate_hz / flap_frequency_hz);
    n_ = n < 1 ? 1 : static_cast<std::size_t>(n);
    ring_.assign(n_, ForceSample{});
  }

  explicit CycleAverager(std::size_t n_cycle) : n_(n_cycle) {
    if (n_cycle < 1) throw config_error("cycle window must hold >= 1 sample");
    ring_.assign(n_, ForceSample{});
  }

  std::size_t window_size() const { return n_; }

  std::uint64_t samples_seen() const {
    return snap_samples_.load(std::memory_order_relaxed);
  }

  /// Producer side. Samples must arrive in nondecreasing time order.
  void push(const ForceSample& s) {
    if (s.t_s < last_t_)
      throw input_error("out-of-order force sample rejected");
    last_t_ = s.t_s;
    ring_[next_] = s;
    next_ = (next_ + 1) % n_;
    ++seen_;

    // Recompute the window sum oldest-to-newest so the result is bit-equal
    // to a straightforward mean over the trailing window.
    const std::size_t count = seen_ < n_ ? static_cast<std::size_t>(seen_) : n_;
    const std::size_t oldest = seen_ < n_ ? 0 : next_;
    double sum_f = 0.0, sum_s = 0.0;
    for (std::size_t k = 0; k < count; ++k) {
      const ForceSample& x = ring_[(oldest + k) % n_];
      sum_f += x.forward_N;
      sum_s += x.side_N;
    }
    CycleAverage avg;
    avg.mean_forward_N = sum_f / static_cast<double>(count);
    avg.mean_side_N = sum_s / static_cast<double>(count);
    avg.magnitude_N = std::sqrt(avg.mean_forward_N * avg.mean_forward_N +
                                avg.mean_side_N * avg.mean_side_N);
    avg.angle_deg = rad_to_deg(std::atan2(avg.mean_side_N, avg.mean_forward_N));
    avg.cycle_index = seen_ / n_;
    avg.samples_seen = seen_;
    publish(avg);
  }

  /// Reader side; wait-free for the producer. Throws until the first push.
  CycleAverage latest() const {
    for (;;) {
      const std::uint64_t s1 = seq_.load(std::memory_order_acquire);
      if (s1 & 1u) continue;  // writer in progress
      CycleAverage out;
      out.mean_forward_N = snap_fwd_.load(std::memory_order_relaxed);
      out.mean_side_N = snap_side_.load(std::memory_order_relaxed);
      out.magnitude_N = snap_mag_.load(std::memory_order_relaxed);
      out.angle_deg = snap_ang_.load(std::memory_order_relaxed);
      out.cycle_index = snap_cycle_.load(std::memory_order_relaxed);
      out.samples_seen = snap_samples_.load(std::memory_order_relaxed);
      std::atomic_thread_fence(std::memory_order_acquire);
      if (seq_.load(std::memory_order_relaxed) != s1) continue;
      if (out.samples_seen == 0)
        throw not_ready_error("cycle averager has no samples yet");
      return out;
    }
  }

 private:
  void publish(const CycleAverage& avg) {
    const std::uint64_t s = seq_.load(std::memory_order_relaxed);
    seq_.store(s + 1, std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_release);
    snap_fwd_.store(avg.mean_forward_N, std::memory_order_relaxed);
    snap_side_.store(avg.mean_side_N, std::memory_order_relaxed);
    snap_mag_.store(avg.magnitude_N, std::memory_order_relaxed);
    snap_ang_.store(avg.angle_deg, std::memory_order_relaxed);
    snap_cycle_.store(avg.cycle_index, std::memory_order_relaxed);
    snap_samples_.store(avg.samples_seen, std::memory_order_relaxed);
    seq_.store(s + 2, std::memory_order_release);
  }

  std::size_t n_ = 1;
  std::vector<ForceSample> ring_;
  std::size_t next_ = 0;
  std::uint64_t seen_ = 0;
  double last_t_ = -std::numeric_limits<double>::infinity();

  std::atomic<std::uint64_t> seq_{0};
  std::atomic<double> snap_fwd_{0.0};
  std::atomic<double> snap_side_{0.0};
  std::atomic<double> snap_mag_{0.0};
  std::atomic<double> snap_ang_{0.0};
  std::atomic<std::uint64_t> snap_cycle_{0};
  std::atomic<std::uint64_t> snap_samples_{0};
};

}  // namespace caudal
