#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <random>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace hcgb::rng {

// Substream derivation
// --------------------
// Every random quantity is drawn from an engine keyed by
// (run seed, sample index, channel). The key is hashed with SplitMix64 and
// the result seeds a std::mt19937_64. Because the engine depends only on the
// key, a sample produces the same numbers no matter which worker handles it,
// and results merged in sample order are identical for any worker count.
//
// Channels separate independent draws belonging to the same sample, e.g. one
// channel per Brownian coordinate so that a refined path reuses the coarse
// path's numbers.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t sample,
                                    std::uint64_t channel = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ splitmix64(sample + 0x632be59bd9b4e019ULL));
  h = splitmix64(h ^ splitmix64(channel + 0x8cb92ba72f3d8dd7ULL));
  return h;
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed, std::uint64_t sample,
                          std::uint64_t channel = 0) {
  return Engine(substream_seed(seed, sample, channel));
}

// Worker count from HCGB_WORKERS, falling back to 1.
inline int default_workers() {
  if (const char* env = std::getenv("HCGB_WORKERS")) {
    try {
      const int w = std::stoi(env);
      if (w >= 1) return w;
    } catch (...) {
    }
  }
  return 1;
}

// Evaluates f(i) for i in [0, count) on `workers` threads and returns the
// results in index order.
template <class F>
auto parallel_map(std::size_t count, int workers, F&& f)
    -> std::vector<std::invoke_result_t<F&, std::size_t>> {
  using R = std::invoke_result_t<F&, std::size_t>;
  std::vector<R> out(count);
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::size_t>(count, 1))));
  if (workers == 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = f(i);
    return out;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        const std::size_t lo = w * chunk;
        const std::size_t hi = std::min(count, lo + chunk);
        for (std::size_t i = lo; i < hi; ++i) out[i] = f(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

// Mean and standard error of a sample, accumulated in index order.
struct MeanError {
  double mean = 0.0;
  double stderr_ = 0.0;
  double variance = 0.0;
};

inline MeanError mean_and_error(const std::vector<double>& xs) {
  MeanError r;
  if (xs.empty()) return r;
  double sum = 0.0;
  for (double x : xs) sum += x;
  r.mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - r.mean) * (x - r.mean);
  if (xs.size() > 1) {
    r.variance = ss / static_cast<double>(xs.size() - 1);
    r.stderr_ = std::sqrt(r.variance / static_cast<double>(xs.size()));
  }
  return r;
}

}  // namespace hcgb::rng
